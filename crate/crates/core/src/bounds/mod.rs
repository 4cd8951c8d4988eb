//! Secret-key-rate bounds and their ordering
//! `S→ ≤ UI ≤ B1 ≤ I(S;Y↓Z) ≤ I(S;Y|Z)`.
//!
//! Maximizations report the value of a strategy actually found (a lower
//! estimate) and minimizations the value at a channel actually found (an
//! upper estimate). None of the channel searches is certified globally
//! optimal.

mod nested;
mod network;

use serde::{Deserialize, Serialize};

use crate::dense::EntropyForm;
use crate::error::{Error, Result};
use crate::prob::{Channel, JointDist, Variable};
use crate::ui::{self, MarginalPolytope, Roles, SolverOptions};

use network::{ChannelSpec, DescentOptions, Kernels, Network};

pub use nested::{b_gui, b_sui};

const S: u32 = 1;
const Y: u32 = 2;
const Z: u32 = 4;
const AUX1: u32 = 8;
const AUX2: u32 = 16;

/// Slack on the inequalities that hold by construction.
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Fixed slack added to solver gaps in the chain checks.
pub const CHAIN_SLACK: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsOptions {
    /// Random restarts per channel search, on top of the exact candidates.
    pub restarts: usize,
    pub max_steps: usize,
    pub min_step: f64,
    pub seed: u64,
    /// `|Z'|` for B1 and the nested bounds; `|S||Y||Z|` when unset.
    pub zprime_size: Option<usize>,
    /// Outer objective evaluations allowed in the nested searches.
    pub max_evals: usize,
    /// `|U|` for the reduced intrinsic information estimate.
    pub u_cap: usize,
    /// Compute the reduced intrinsic information estimate in `bounds_chain`.
    pub reduced: bool,
    pub solver: SolverOptions,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            restarts: 20,
            max_steps: 2000,
            min_step: 1e-9,
            seed: 0,
            zprime_size: None,
            max_evals: 200,
            u_cap: 2,
            reduced: true,
            solver: SolverOptions::default(),
        }
    }
}

impl BoundsOptions {
    fn descent(&self) -> DescentOptions {
        DescentOptions {
            restarts: self.restarts,
            max_steps: self.max_steps,
            min_step: self.min_step,
            seed: self.seed,
        }
    }
}

/// A bound together with the channels that achieve it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub value: f64,
    /// Channels on the flattened role variables, in the order they are applied.
    pub witnesses: Vec<Channel>,
    /// False when the search stopped on its step or evaluation budget.
    pub converged: bool,
    /// Summed solver gaps of any inner UI evaluations (0 when there are none).
    pub gap: f64,
}

/// Role-flattened inputs shared by every bound.
pub(crate) struct Setup {
    pub base: JointDist,
    pub dims: [usize; 3],
    pub names: [String; 3],
}

impl Setup {
    pub fn new(d: &JointDist, roles: &Roles) -> Result<Self> {
        let base = roles.flatten(d)?;
        let dv = base.dims();
        let names = [0, 1, 2].map(|k| base.variables()[k].name.clone());
        Ok(Setup {
            dims: [dv[0], dv[1], dv[2]],
            base,
            names,
        })
    }

    fn probs(&self) -> &[f64] {
        self.base.probs()
    }

    fn zprime(&self) -> String {
        format!("{}'", self.names[2])
    }

    pub fn zprime_size(&self, opts: &BoundsOptions) -> usize {
        opts.zprime_size.unwrap_or(self.dims.iter().product())
    }
}

fn deterministic(rows: usize, m: usize, f: impl Fn(usize) -> usize) -> Vec<f64> {
    let mut k = vec![0.0; rows * m];
    for r in 0..rows {
        k[r * m + f(r)] = 1.0;
    }
    k
}

fn channel(inputs: &[&str], output: &str, size: usize, kernel: &[f64]) -> Result<Channel> {
    Channel::new(
        inputs.iter().map(|s| s.to_string()).collect(),
        Variable::new(output, size),
        kernel.to_vec(),
    )
}

fn negated(terms: Vec<(f64, u32)>) -> Vec<(f64, u32)> {
    terms.into_iter().map(|(c, m)| (-c, m)).collect()
}

/// Lower estimate of the one-way rate `max I(U;Y|V) − I(U;Z|V)` over
/// `V − U − S − YZ` with `|U| = |S|²` and `|V| = |S|`.
pub fn one_way_rate(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let setup = Setup::new(d, roles)?;
    let ns = setup.dims[0];
    let (nu, nv) = (ns * ns, ns);
    // minimize I(U;Z|V) − I(U;Y|V)
    let mut terms = negated(EntropyForm::cmi_terms(AUX1, Y, AUX2));
    terms.extend(EntropyForm::cmi_terms(AUX1, Z, AUX2));
    let net = Network::new(
        setup.probs(),
        setup.dims,
        vec![
            ChannelSpec { inputs: vec![0], output: nu },
            ChannelSpec { inputs: vec![3], output: nv },
        ],
        &terms,
    );
    let candidates: Vec<Kernels> = vec![
        // U = S, V constant
        vec![deterministic(ns, nu, |s| s), deterministic(nu, nv, |_| 0)],
        vec![deterministic(ns, nu, |_| 0), deterministic(nu, nv, |_| 0)],
    ];
    let best = network::minimize(&net, &candidates, &opts.descent());
    Ok(BoundEstimate {
        value: -best.value,
        witnesses: vec![
            channel(&[&setup.names[0]], "U", nu, &best.kernels[0])?,
            channel(&["U"], "V", nv, &best.kernels[1])?,
        ],
        converged: best.converged,
        gap: 0.0,
    })
}

fn intrinsic_on(setup: &Setup, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let nz = setup.dims[2];
    let net = Network::new(
        setup.probs(),
        setup.dims,
        vec![ChannelSpec { inputs: vec![2], output: nz }],
        &EntropyForm::cmi_terms(S, Y, AUX1),
    );
    let candidates = vec![vec![deterministic(nz, nz, |z| z)], vec![deterministic(nz, nz, |_| 0)]];
    let best = network::minimize(&net, &candidates, &opts.descent());
    Ok(BoundEstimate {
        value: best.value,
        witnesses: vec![channel(&[&setup.names[2]], &setup.zprime(), nz, &best.kernels[0])?],
        converged: best.converged,
        gap: 0.0,
    })
}

/// Upper estimate of the intrinsic information `min_{Z'|Z} I(S;Y|Z')`, with
/// `|Z'| = |Z|`.
pub fn intrinsic_information(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundEstimate> {
    intrinsic_on(&Setup::new(d, roles)?, opts)
}

/// The kernel of a `Z → Z'` channel seen as a channel from `(S, Y, Z)` that
/// ignores `S` and `Y`, padded to `m` outputs.
fn lift_from_z(setup: &Setup, zk: &[f64], m: usize) -> Vec<f64> {
    let [ns, ny, nz] = setup.dims;
    let k = zk.len() / nz;
    let mut out = vec![0.0; ns * ny * nz * m];
    for row in 0..ns * ny * nz {
        let z = row % nz;
        out[row * m..row * m + k].copy_from_slice(&zk[z * k..(z + 1) * k]);
    }
    out
}

fn b1_on(setup: &Setup, intrinsic: &BoundEstimate, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let rows: usize = setup.dims.iter().product();
    let m = setup.zprime_size(opts);
    if m < setup.dims[2] {
        return Err(Error::InvalidParameter(format!(
            "|Z'| = {m} is smaller than |Z| = {}",
            setup.dims[2]
        )));
    }
    let mut terms = EntropyForm::cmi_terms(S, Y, AUX1);
    terms.extend(EntropyForm::cmi_terms(S | Y, AUX1, Z));
    let net = Network::new(
        setup.probs(),
        setup.dims,
        vec![ChannelSpec { inputs: vec![0, 1, 2], output: m }],
        &terms,
    );
    let candidates = vec![
        vec![lift_from_z(setup, intrinsic.witnesses[0].kernel(), m)],
        vec![deterministic(rows, m, |_| 0)],
    ];
    let best = network::minimize(&net, &candidates, &opts.descent());
    let [s, y, z] = &setup.names;
    Ok(BoundEstimate {
        value: best.value,
        witnesses: vec![channel(&[s, y, z], &setup.zprime(), m, &best.kernels[0])?],
        converged: best.converged,
        gap: 0.0,
    })
}

/// Upper estimate of the minimum intrinsic information
/// `min_{Z'|SYZ} I(S;Y|Z') + I(SY;Z'|Z)`.
pub fn minimum_intrinsic_information_b1(
    d: &JointDist,
    roles: &Roles,
    opts: &BoundsOptions,
) -> Result<BoundEstimate> {
    let setup = Setup::new(d, roles)?;
    let intrinsic = intrinsic_on(&setup, opts)?;
    b1_on(&setup, &intrinsic, opts)
}

fn reduced_on(setup: &Setup, intrinsic: &BoundEstimate, u_cap: usize, opts: &BoundsOptions) -> Result<BoundEstimate> {
    if u_cap == 1 {
        return Ok(intrinsic.clone());
    }
    let [ns, ny, nz] = setup.dims;
    let rows = ns * ny * nz;
    let m = nz * u_cap;
    let mut terms = EntropyForm::cmi_terms(S, Y, AUX2);
    terms.push((1.0, AUX1));
    let net = Network::new(
        setup.probs(),
        setup.dims,
        vec![
            ChannelSpec { inputs: vec![0, 1, 2], output: u_cap },
            ChannelSpec { inputs: vec![2, 3], output: m },
        ],
        &terms,
    );
    // Z' reads (z, u) with u fastest
    let wz = intrinsic.witnesses[0].kernel();
    let mut through_intrinsic = vec![0.0; nz * u_cap * m];
    for z in 0..nz {
        for u in 0..u_cap {
            let r = z * u_cap + u;
            through_intrinsic[r * m..r * m + nz].copy_from_slice(&wz[z * nz..(z + 1) * nz]);
        }
    }
    let constant_u = deterministic(rows, u_cap, |_| 0);
    let candidates = vec![
        vec![constant_u.clone(), through_intrinsic],
        vec![constant_u, deterministic(nz * u_cap, m, |r| r)],
    ];
    let best = network::minimize(&net, &candidates, &opts.descent());
    let [s, y, z] = &setup.names;
    Ok(BoundEstimate {
        value: best.value,
        witnesses: vec![
            channel(&[s, y, z], "U", u_cap, &best.kernels[0])?,
            channel(&[z, "U"], &setup.zprime(), m, &best.kernels[1])?,
        ],
        converged: best.converged,
        gap: 0.0,
    })
}

/// Heuristic upper estimate of the reduced intrinsic information
/// `inf_{U|SYZ} I(S;Y↓ZU) + H(U)` restricted to `|U| = u_cap` and
/// `|Z'| = |Z| u_cap`. The true infimum has no known cardinality bound.
pub fn reduced_intrinsic_heuristic(
    d: &JointDist,
    roles: &Roles,
    u_cap: usize,
    opts: &BoundsOptions,
) -> Result<BoundEstimate> {
    if u_cap == 0 {
        return Err(Error::InvalidParameter("u_cap must be at least 1".into()));
    }
    let setup = Setup::new(d, roles)?;
    let intrinsic = intrinsic_on(&setup, opts)?;
    reduced_on(&setup, &intrinsic, u_cap, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundWitnesses {
    pub one_way: Vec<Channel>,
    pub intrinsic: Channel,
    pub b1: Channel,
    pub b_gui: Channel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced: Option<Vec<Channel>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFlags {
    pub ui_converged: bool,
    pub one_way_converged: bool,
    pub intrinsic_converged: bool,
    pub b1_converged: bool,
    /// False when the nested search ran out of evaluations.
    pub b_gui_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced_converged: Option<bool>,
    /// Soft inequalities that failed, attributable to a non-convex estimate.
    pub soft_violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub one_way_lower: f64,
    pub ui: f64,
    pub ui_gap: f64,
    pub b1_upper: f64,
    pub b_gui_upper: f64,
    /// Summed inner solver gaps at the reported `b_gui` channel.
    pub b_gui_gap: f64,
    pub intrinsic_upper: f64,
    pub cmi: f64,
    /// Heuristic, bounded-`|U|` estimate of the reduced intrinsic information.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced_intrinsic: Option<f64>,
    pub witnesses: BoundWitnesses,
    pub flags: BoundFlags,
}

impl BoundsReport {
    /// Failed inequalities among `S→ ≤ UI ≤ B1 ≤ I(S;Y↓Z) ≤ I(S;Y|Z)`.
    pub fn hard_violations(&self) -> Vec<&'static str> {
        let tol = self.ui_gap + CHAIN_SLACK;
        [
            (self.one_way_lower <= self.ui + tol, "one-way rate exceeds UI"),
            (self.ui <= self.b1_upper + tol, "UI exceeds B1"),
            (
                self.b1_upper <= self.intrinsic_upper + STRUCTURAL_TOL,
                "B1 exceeds the intrinsic information",
            ),
            (
                self.intrinsic_upper <= self.cmi + STRUCTURAL_TOL,
                "intrinsic information exceeds I(S;Y|Z)",
            ),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, what)| what)
        .collect()
    }

    pub fn converged(&self) -> bool {
        let f = &self.flags;
        f.ui_converged
            && f.one_way_converged
            && f.intrinsic_converged
            && f.b1_converged
            && f.b_gui_converged
            && f.reduced_converged.unwrap_or(true)
    }
}

/// Every bound, UI and `I(S;Y|Z)`, with the chain checked. Violations of
/// `S→ ≤ UI ≤ B1` or of the structural inequalities are solver bugs and
/// fail; the others are recorded as flags.
pub fn bounds_chain(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundsReport> {
    let report = compute_bounds(d, roles, opts)?;
    let hard = report.hard_violations();
    if !hard.is_empty() {
        return Err(Error::SolverBug(format!(
            "{}: one-way {:.9}, UI {:.9} (gap {:.1e}), B1 {:.9}, intrinsic {:.9}, cmi {:.9}",
            hard.join("; "),
            report.one_way_lower,
            report.ui,
            report.ui_gap,
            report.b1_upper,
            report.intrinsic_upper,
            report.cmi
        )));
    }
    Ok(report)
}

/// Like [`bounds_chain`] but without failing on hard violations.
pub fn compute_bounds(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundsReport> {
    let setup = Setup::new(d, roles)?;
    let poly = MarginalPolytope::from_flat(setup.base.clone())?;
    let ui_res = ui::solve_polytope(&poly, &opts.solver)?;
    let one_way = one_way_rate(&setup.base, &flat_roles(&setup), opts)?;
    let intrinsic = intrinsic_on(&setup, opts)?;
    let b1 = b1_on(&setup, &intrinsic, opts)?;
    let gui = nested::b_gui_on(&setup, &b1, opts)?;
    let reduced = if opts.reduced {
        Some(reduced_on(&setup, &intrinsic, opts.u_cap, opts)?)
    } else {
        None
    };
    let cmi = ui_res.cmi;
    let ui_v = ui_res.ui;
    let tol = ui_res.gap + CHAIN_SLACK;

    let mut soft = Vec::new();
    if gui.value > b1.value + tol + gui.gap {
        soft.push(format!("b_gui {:.6} above B1 {:.6}", gui.value, b1.value));
    }
    if gui.value < ui_v - tol - gui.gap {
        soft.push(format!("b_gui {:.6} below UI {:.6}", gui.value, ui_v));
    }
    if let Some(r) = &reduced {
        if r.value > intrinsic.value + STRUCTURAL_TOL {
            soft.push(format!("reduced intrinsic {:.6} above intrinsic {:.6}", r.value, intrinsic.value));
        }
        if r.value < ui_v - tol {
            soft.push(format!("reduced intrinsic {:.6} below UI {:.6}", r.value, ui_v));
        }
    }
    for s in &soft {
        log::warn!("bounds chain: {s}");
    }

    Ok(BoundsReport {
        one_way_lower: one_way.value,
        ui: ui_v,
        ui_gap: ui_res.gap,
        b1_upper: b1.value,
        b_gui_upper: gui.value,
        b_gui_gap: gui.gap,
        intrinsic_upper: intrinsic.value,
        cmi,
        reduced_intrinsic: reduced.as_ref().map(|r| r.value),
        flags: BoundFlags {
            ui_converged: ui_res.converged,
            one_way_converged: one_way.converged,
            intrinsic_converged: intrinsic.converged,
            b1_converged: b1.converged,
            b_gui_converged: gui.converged,
            reduced_converged: reduced.as_ref().map(|r| r.converged),
            soft_violations: soft,
        },
        witnesses: BoundWitnesses {
            one_way: one_way.witnesses,
            intrinsic: intrinsic.witnesses[0].clone(),
            b1: b1.witnesses[0].clone(),
            b_gui: gui.witnesses[0].clone(),
            reduced: reduced.map(|r| r.witnesses),
        },
    })
}

fn flat_roles(setup: &Setup) -> Roles {
    let [s, y, z] = &setup.names;
    Roles::new(&[s], &[y], &[z])
}
