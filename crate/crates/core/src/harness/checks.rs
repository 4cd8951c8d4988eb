//! Individual property checks. Each returns the measured slack of an
//! inequality together with the tolerance it is held to; the tolerance is
//! the participating solvers' gaps plus a fixed slack.

use serde::{Deserialize, Serialize};

use crate::blackwell::{self, DOMINANCE_TOL, VANISHING_TOL};
use crate::bounds::{self, BoundsOptions, STRUCTURAL_TOL};
use crate::error::{Error, Result};
use crate::prob::{tensor_group, Channel, JointDist, Variable};
use crate::ui::{self, Roles, SolverOptions};

/// Contract slack of the additivity check.
pub const ADDITIVITY_SLACK: f64 = 1e-3;
/// Contract slack of the squeeze at the minimum-synergy distribution.
pub const COLLAPSE_SLACK: f64 = 1e-3;
/// L1 size of the perturbations in the continuity check.
pub const CONTINUITY_EPS: f64 = 1e-3;
/// Sanity envelope on `|ΔUI|` for those perturbations.
pub const CONTINUITY_ENVELOPE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    pub solver: SolverOptions,
    pub bounds: BoundsOptions,
    /// Fixed slack added to solver gaps.
    pub slack: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            solver: SolverOptions::default(),
            bounds: BoundsOptions::default(),
            slack: 1e-4,
        }
    }
}

/// `value ≥ −tolerance` is the checked inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(label: &str, value: f64, tolerance: f64) -> Self {
        CheckOutcome {
            label: label.to_string(),
            value,
            tolerance,
        }
    }

    pub fn holds(&self) -> bool {
        self.value >= -self.tolerance
    }
}

/// Alice, Bob and Eve plus a fourth role (`Z'` or `U`, depending on the check).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedRoles {
    pub s: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub aux: Vec<String>,
}

impl ExtendedRoles {
    pub fn new(s: &[&str], y: &[&str], z: &[&str], aux: &[&str]) -> Self {
        let own = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        ExtendedRoles {
            s: own(s),
            y: own(y),
            z: own(z),
            aux: own(aux),
        }
    }

    pub fn first_four(d: &JointDist) -> Result<Self> {
        let n = d.names();
        if n.len() < 4 {
            return Err(Error::InvalidParameter("need at least four variables".into()));
        }
        Ok(Self::new(&[n[0]], &[n[1]], &[n[2]], &[n[3]]))
    }

    fn roles(s: &[String], y: &[String], z: &[String]) -> Roles {
        Roles {
            s: s.to_vec(),
            y: y.to_vec(),
            z: z.to_vec(),
        }
    }
}

struct Ui {
    value: f64,
    gap: f64,
}

fn ui_of(d: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<Ui> {
    let r = ui::compute_ui(d, roles, &opts.solver)?;
    Ok(Ui {
        value: r.ui,
        gap: r.gap,
    })
}

/// A name not yet used in `d`, built by priming `base`.
fn fresh(d: &JointDist, base: &str) -> String {
    let mut name = format!("{base}'");
    while d.index_of(&name).is_ok() {
        name.push('\'');
    }
    name
}

/// `UI(S;Y\Z') + UI(S;Z'\Z) − UI(S;Y\Z)`.
pub fn check_triangle(d4: &JointDist, roles: &ExtendedRoles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let r = roles;
    let a = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &r.aux), opts)?;
    let b = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.aux, &r.z), opts)?;
    let c = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &r.z), opts)?;
    Ok(CheckOutcome::new(
        "triangle",
        a.value + b.value - c.value,
        a.gap + b.gap + c.gap + opts.slack,
    ))
}

/// `UI(S;Y\Z') + UI(SY;Z'\Z) − UI(S;Y\Z)`.
pub fn check_corollary(d4: &JointDist, roles: &ExtendedRoles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let r = roles;
    let sy: Vec<String> = r.s.iter().chain(&r.y).cloned().collect();
    let a = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &r.aux), opts)?;
    let b = ui_of(d4, &ExtendedRoles::roles(&sy, &r.aux, &r.z), opts)?;
    let c = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &r.z), opts)?;
    Ok(CheckOutcome::new(
        "corollary",
        a.value + b.value - c.value,
        a.gap + b.gap + c.gap + opts.slack,
    ))
}

/// Garbling Eve's variable by `ch` (which must read exactly Eve's role):
/// `UI(S;Y\Z') − UI(S;Y\Z)`, and the identity `UI(S;Y\ZZ') = UI(S;Y\Z)`.
pub fn check_eve_monotonicity(
    d: &JointDist,
    roles: &Roles,
    ch: &Channel,
    opts: &CheckOptions,
) -> Result<[CheckOutcome; 2]> {
    if ch.input_vars() != roles.z.as_slice() {
        return Err(Error::InvalidChannel("Eve's garbling must read exactly Eve's role".into()));
    }
    let ext = d.apply_channel(ch)?;
    let zp = vec![ch.output().name.clone()];
    let garbled = ui_of(&ext, &Roles { z: zp.clone(), ..roles.clone() }, opts)?;
    let both = ui_of(
        &ext,
        &Roles {
            z: roles.z.iter().chain(&zp).cloned().collect(),
            ..roles.clone()
        },
        opts,
    )?;
    let base = ui_of(d, roles, opts)?;
    Ok([
        CheckOutcome::new(
            "eve monotonicity",
            garbled.value - base.value,
            garbled.gap + base.gap + opts.slack,
        ),
        CheckOutcome::new(
            "eve identity",
            -(both.value - base.value).abs(),
            both.gap + base.gap + opts.slack,
        ),
    ])
}

/// Garbling Alice's or Bob's variable by `ch`: `UI(S;Y\Z) − UI(S';Y\Z)` (or
/// with `Y'`).
pub fn check_alice_bob_monotonicity(
    d: &JointDist,
    roles: &Roles,
    ch: &Channel,
    opts: &CheckOptions,
) -> Result<CheckOutcome> {
    let ext = d.apply_channel(ch)?;
    let out = vec![ch.output().name.clone()];
    let garbled_roles = if ch.input_vars() == roles.s.as_slice() {
        Roles { s: out, ..roles.clone() }
    } else if ch.input_vars() == roles.y.as_slice() {
        Roles { y: out, ..roles.clone() }
    } else {
        return Err(Error::InvalidChannel(
            "local operation must read exactly Alice's or Bob's role".into(),
        ));
    };
    let base = ui_of(d, roles, opts)?;
    let garbled = ui_of(&ext, &garbled_roles, opts)?;
    Ok(CheckOutcome::new(
        "local operation",
        base.value - garbled.value,
        base.gap + garbled.gap + opts.slack,
    ))
}

/// Alice announces `f(S)`: `UI(S;Y\Z) − UI((S,f(S));(Y,f(S))\(Z,f(S)))`.
/// `f` acts on the flattened alphabet of Alice's role and takes values below
/// `f_size`.
pub fn check_public_communication(
    d: &JointDist,
    roles: &Roles,
    f: &dyn Fn(usize) -> usize,
    f_size: usize,
    opts: &CheckOptions,
) -> Result<CheckOutcome> {
    let base = roles.flatten(d)?;
    let names: Vec<String> = base.names().iter().map(|s| s.to_string()).collect();
    let ns = base.dims()[0];
    if (0..ns).any(|s| f(s) >= f_size) {
        return Err(Error::InvalidParameter("announcement out of range".into()));
    }
    let mut ext = base.clone();
    let mut copies = Vec::new();
    for _ in 0..3 {
        let name = fresh(&ext, "F");
        let ch = Channel::deterministic(&[&names[0]], ns, Variable::new(&name, f_size), f);
        ext = ext.apply_channel(&ch)?;
        copies.push(name);
    }
    let with = |own: &str, k: usize| vec![own.to_string(), copies[k].clone()];
    let announced = Roles {
        s: with(&names[0], 0),
        y: with(&names[1], 1),
        z: with(&names[2], 2),
    };
    let flat = Roles::new(&[&names[0]], &[&names[1]], &[&names[2]]);
    let before = ui_of(&base, &flat, opts)?;
    let after = ui_of(&ext, &announced, opts)?;
    Ok(CheckOutcome::new(
        "public communication",
        before.value - after.value,
        before.gap + after.gap + opts.slack,
    ))
}

/// `UI(S;Y\ZU) − UI(S;Y\Z) + H(U)`.
pub fn check_locking(d4: &JointDist, roles: &ExtendedRoles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let r = roles;
    let zu: Vec<String> = r.z.iter().chain(&r.aux).cloned().collect();
    let with_u = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &zu), opts)?;
    let without = ui_of(d4, &ExtendedRoles::roles(&r.s, &r.y, &r.z), opts)?;
    let h_u = d4.entropy(&r.aux, &[] as &[String])?;
    Ok(CheckOutcome::new(
        "no locking",
        with_u.value - without.value + h_u,
        with_u.gap + without.gap + opts.slack,
    ))
}

/// `−|UI(dⁿ) − n·UI(d)|`.
pub fn check_additivity(d: &JointDist, roles: &Roles, n: usize, opts: &CheckOptions) -> Result<CheckOutcome> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let base = roles.flatten(d)?;
    let names: Vec<String> = base.names().iter().map(|s| s.to_string()).collect();
    let flat = Roles::new(&[&names[0]], &[&names[1]], &[&names[2]]);
    let single = ui_of(&base, &flat, opts)?;
    let power = base.tensor_power(n)?;
    let group = |k: usize| tensor_group(&names[k], n);
    let many = ui_of(
        &power,
        &Roles {
            s: group(0),
            y: group(1),
            z: group(2),
        },
        opts,
    )?;
    Ok(CheckOutcome::new(
        "additivity",
        -(many.value - n as f64 * single.value).abs(),
        many.gap + n as f64 * single.gap + ADDITIVITY_SLACK,
    ))
}

/// Values at the minimum-synergy distribution `Q*` of `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub ui: f64,
    pub cmi: f64,
    pub b1: f64,
    pub gap: f64,
    pub outcomes: Vec<CheckOutcome>,
}

/// At `Q*`: `UI = I(S;Y|Z)` and `UI ≤ B1 ≤ I(S;Y|Z)`.
pub fn check_collapse_at_qstar(d: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<Collapse> {
    let q = ui::min_synergy_distribution(d, roles, &opts.solver)?;
    let names: Vec<String> = q.names().iter().map(|s| s.to_string()).collect();
    let flat = Roles::new(&[&names[0]], &[&names[1]], &[&names[2]]);
    let at_q = ui::compute_ui(&q, &flat, &opts.solver)?;
    let b1 = bounds::minimum_intrinsic_information_b1(&q, &flat, &opts.bounds)?.value;
    let tol = at_q.gap + COLLAPSE_SLACK;
    Ok(Collapse {
        outcomes: vec![
            CheckOutcome::new("synergy vanishes", -(at_q.cmi - at_q.ui).abs(), tol),
            CheckOutcome::new("UI below B1", b1 - at_q.ui, tol),
            CheckOutcome::new("B1 below I(S;Y|Z)", at_q.cmi - b1, tol),
        ],
        ui: at_q.ui,
        cmi: at_q.cmi,
        b1,
        gap: at_q.gap,
    })
}

/// `−|UI(P') − UI(P)|` for a `P'` at L1 distance `CONTINUITY_EPS` from `P`
/// in the direction of `other`, held to a fixed envelope.
pub fn check_continuity(d: &JointDist, other: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let dist = d.l1_distance(other)?;
    if dist <= 0.0 {
        return Err(Error::InvalidParameter("perturbation direction is zero".into()));
    }
    let near = d.mix(other, (CONTINUITY_EPS / dist).min(1.0))?;
    let a = ui_of(d, roles, opts)?;
    let b = ui_of(&near, roles, opts)?;
    Ok(CheckOutcome::new(
        "continuity envelope",
        -(a.value - b.value).abs(),
        a.gap + b.gap + CONTINUITY_ENVELOPE,
    ))
}

/// `−|I(S;Y) + UI(S;Z\Y) − I(S;Z) − UI(S;Y\Z)|`.
pub fn check_consistency(d: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let c = ui::consistency_residual(d, roles, &opts.solver)?;
    Ok(CheckOutcome::new("consistency", -c.residual, c.gaps + opts.slack))
}

/// UI vanishes iff Eve's variable dominates Bob's; with `expect_dominance`
/// the dominance itself is also required.
pub fn check_blackwell(
    d: &JointDist,
    roles: &Roles,
    expect_dominance: bool,
    opts: &CheckOptions,
) -> Result<Vec<CheckOutcome>> {
    let c = blackwell::cross_check_ui(d, roles, &opts.solver)?;
    let mut out = vec![CheckOutcome::new(
        "vanishing iff dominance",
        if c.agree { 0.0 } else { -1.0 },
        0.0,
    )];
    if expect_dominance {
        out.push(CheckOutcome::new("UI vanishes", -c.ui, c.gap + VANISHING_TOL));
        out.push(CheckOutcome::new("dominance", -c.verdict.residual, DOMINANCE_TOL));
    }
    Ok(out)
}

/// `−|UI(S;S\Z) − H(S)|`; on a perfect secret bit `H(S) = 1`.
pub fn check_normalization(d: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<CheckOutcome> {
    let r = ui_of(d, roles, opts)?;
    let h = d.entropy(&roles.s, &[] as &[String])?;
    Ok(CheckOutcome::new("normalization", -(r.value - h).abs(), r.gap + opts.slack))
}

/// The bounds chain, one outcome per inequality.
pub fn check_chain(d: &JointDist, roles: &Roles, opts: &CheckOptions) -> Result<Vec<CheckOutcome>> {
    let r = bounds::compute_bounds(d, roles, &opts.bounds)?;
    let tol = r.ui_gap + opts.slack;
    Ok(vec![
        CheckOutcome::new("one-way below UI", r.ui - r.one_way_lower, tol),
        CheckOutcome::new("UI below B1", r.b1_upper - r.ui, tol),
        CheckOutcome::new("B1 below intrinsic", r.intrinsic_upper - r.b1_upper, STRUCTURAL_TOL),
        CheckOutcome::new("intrinsic below I(S;Y|Z)", r.cmi - r.intrinsic_upper, STRUCTURAL_TOL),
        CheckOutcome::new("B_gUI below B1", r.b1_upper - r.b_gui_upper, tol + r.b_gui_gap),
        CheckOutcome::new("UI below B_gUI", r.b_gui_upper - r.ui, tol + r.b_gui_gap),
    ])
}
