//! `B_gUI = min I(S;Y|Z') + UI(SY;Z'\Z)` and
//! `B_sUI = min UI(S;Y\Z') + UI(SY;Z'\Z)` over channels `Z'|SYZ`.
//!
//! The inner UI terms are convex programs of their own, so the outer search
//! is gradient free: each row of the channel is pulled towards one output
//! symbol, `row ← (1−δ) row + δ e_k`, keeping changes that lower the
//! objective and halving `δ` after a pass without improvement.

use super::{b1_on, channel, deterministic, intrinsic_on, lift_from_z, BoundEstimate, BoundsOptions, Setup};
use crate::error::Result;
use crate::prob::{JointDist, Variable};
use crate::ui::{self, MarginalPolytope, Roles};

const START_DELTA: f64 = 0.5;
const MIN_DELTA: f64 = 1.0 / 64.0;
/// Improvement needed to accept a perturbation.
const ACCEPT: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    General,
    Shared,
}

struct Outer<'a> {
    setup: &'a Setup,
    m: usize,
    kind: Kind,
    opts: &'a BoundsOptions,
    evals: usize,
}

impl Outer<'_> {
    /// Joint on `(S, Y, Z, Z')`.
    fn joint(&self, kernel: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(kernel.len());
        for (row, &p) in self.setup.probs().iter().enumerate() {
            out.extend(kernel[row * m..(row + 1) * m].iter().map(|&w| p * w));
        }
        out
    }

    fn ui_of(&self, names: [&str; 3], dims: [usize; 3], probs: Vec<f64>) -> Result<(f64, f64)> {
        let vars = names
            .iter()
            .zip(dims)
            .map(|(n, k)| Variable::new(*n, k))
            .collect();
        let poly = MarginalPolytope::from_flat(JointDist::new(vars, probs)?)?;
        let r = ui::solve_polytope(&poly, &self.opts.solver)?;
        Ok((r.ui, r.gap))
    }

    /// Objective value and the summed inner gaps.
    fn eval(&mut self, kernel: &[f64]) -> Result<(f64, f64)> {
        self.evals += 1;
        let [ns, ny, nz] = self.setup.dims;
        let m = self.m;
        let j = self.joint(kernel);
        // (SY, Z', Z)
        let mut eve = vec![0.0; ns * ny * m * nz];
        // (S, Y, Z')
        let mut bob = vec![0.0; ns * ny * m];
        for sy in 0..ns * ny {
            for z in 0..nz {
                for zp in 0..m {
                    let p = j[(sy * nz + z) * m + zp];
                    eve[(sy * m + zp) * nz + z] += p;
                    bob[sy * m + zp] += p;
                }
            }
        }
        let (eve_ui, eve_gap) = self.ui_of(["SY", "Z'", "Z"], [ns * ny, m, nz], eve)?;
        let (first, first_gap) = match self.kind {
            Kind::General => {
                let d = JointDist::new(
                    vec![Variable::new("S", ns), Variable::new("Y", ny), Variable::new("Z'", m)],
                    bob,
                )?;
                (d.cmi_masks(1, 2, 4), 0.0)
            }
            Kind::Shared => self.ui_of(["S", "Y", "Z'"], [ns, ny, m], bob)?,
        };
        Ok((first + eve_ui, first_gap + eve_gap))
    }
}

fn search(setup: &Setup, starts: Vec<Vec<f64>>, kind: Kind, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let m = setup.zprime_size(opts);
    let mut outer = Outer {
        setup,
        m,
        kind,
        opts,
        evals: 0,
    };
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for k in starts {
        let (v, g) = outer.eval(&k)?;
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((k, v, g));
        }
    }
    let (mut kernel, mut value, mut gap) = best.expect("at least one start");

    let live: Vec<usize> = setup
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(r, _)| r)
        .collect();
    let mut delta = START_DELTA;
    let mut exhausted = false;
    'outer: while delta >= MIN_DELTA {
        let mut improved = false;
        for &r in &live {
            for target in 0..m {
                if kernel[r * m + target] >= 1.0 - 1e-12 {
                    continue;
                }
                if outer.evals >= opts.max_evals {
                    exhausted = true;
                    break 'outer;
                }
                let mut trial = kernel.clone();
                for (o, w) in trial[r * m..(r + 1) * m].iter_mut().enumerate() {
                    *w = (1.0 - delta) * *w + if o == target { delta } else { 0.0 };
                }
                let (v, g) = outer.eval(&trial)?;
                if v < value - ACCEPT {
                    kernel = trial;
                    value = v;
                    gap = g;
                    improved = true;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    if exhausted {
        log::info!("nested bound search stopped after {} evaluations", outer.evals);
    }
    let [s, y, z] = &setup.names;
    Ok(BoundEstimate {
        value,
        witnesses: vec![channel(&[s, y, z], &setup.zprime(), m, &kernel)?],
        converged: !exhausted,
        gap,
    })
}

fn lifted_identity(setup: &Setup, m: usize) -> Vec<f64> {
    let nz = setup.dims[2];
    lift_from_z(setup, &deterministic(nz, nz, |z| z), m)
}

pub(crate) fn b_gui_on(setup: &Setup, b1: &BoundEstimate, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let m = setup.zprime_size(opts);
    let rows: usize = setup.dims.iter().product();
    let starts = vec![
        b1.witnesses[0].kernel().to_vec(),
        lifted_identity(setup, m),
        deterministic(rows, m, |_| 0),
    ];
    search(setup, starts, Kind::General, opts)
}

/// Upper estimate of `B_gUI` with `|Z'|` bounded by the options.
pub fn b_gui(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let setup = Setup::new(d, roles)?;
    let intrinsic = intrinsic_on(&setup, opts)?;
    let b1 = b1_on(&setup, &intrinsic, opts)?;
    b_gui_on(&setup, &b1, opts)
}

/// Upper estimate of `B_sUI`. Starts from `Z' = Z`, where it equals UI.
pub fn b_sui(d: &JointDist, roles: &Roles, opts: &BoundsOptions) -> Result<BoundEstimate> {
    let setup = Setup::new(d, roles)?;
    let m = setup.zprime_size(opts);
    let rows: usize = setup.dims.iter().product();
    let starts = vec![lifted_identity(&setup, m), deterministic(rows, m, |_| 0)];
    search(&setup, starts, Kind::Shared, opts)
}
