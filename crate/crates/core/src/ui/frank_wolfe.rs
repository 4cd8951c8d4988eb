//! Away-step Frank–Wolfe over the marginal polytope.
//!
//! The linear minimization oracle splits into one transportation problem per
//! `s`-slice (rows fixed by `P(s,·)`, columns by `P(s,·)` over `Z`), solved
//! exactly by the simplex. Its optimum gives the duality gap
//! `⟨∇f(Q), Q − V⟩ ≥ f(Q) − f*`. On faces where the objective is not
//! differentiable that gap can stay loose, so the certificate is the smaller
//! of it and the distance to the entropy dual bound.

use super::dual;
use super::objective::{cmi, dot, gradient};
use super::oracle;
use super::polytope::MarginalPolytope;
use crate::error::Result;
use crate::simplex::solve_transportation;

/// Bisection steps per line search before the guard extension kicks in.
const LINE_SEARCH_STEPS: usize = 20;
const LINE_SEARCH_MAX_STEPS: usize = 60;
/// Objective increase tolerated by the monotone-descent check.
const DESCENT_SLACK: f64 = 1e-12;
/// Iterations between evaluations of the dual bound.
const DUAL_EVERY: usize = 10;
/// Frank–Wolfe crawls once it nears a face of the polytope; every this many
/// unconverged iterations the iterate is refined by sweeps of exact line
/// searches along the elementary cycles.
const POLISH_EVERY: usize = 200;
/// Sweeps of the first polish; each accepted polish doubles the next one's
/// budget up to the cap.
const POLISH_SWEEPS: usize = 200;
const POLISH_MAX_SWEEPS: usize = 12_800;

#[derive(Clone, Debug)]
pub(crate) struct FwOutcome {
    pub q: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Vertex of the polytope minimizing `⟨g, ·⟩`.
pub(crate) fn linear_minimizer(poly: &MarginalPolytope, g: &[f64]) -> Result<Vec<f64>> {
    let [ns, ny, nz] = poly.dims();
    let mut v = vec![0.0; ns * ny * nz];
    for s in 0..ns {
        if poly.p_s(s) <= 0.0 {
            continue;
        }
        let block = s * ny * nz..(s + 1) * ny * nz;
        let supply = &poly.pair_sy()[s * ny..(s + 1) * ny];
        let demand = &poly.pair_sz()[s * nz..(s + 1) * nz];
        let x = solve_transportation(&g[block.clone()], supply, demand)?;
        v[block].copy_from_slice(&x);
    }
    Ok(v)
}

/// Certified gap of `q`: an upper bound on `f(q) − f*`.
pub(crate) fn duality_gap(poly: &MarginalPolytope, q: &[f64]) -> Result<f64> {
    let g = gradient(q, poly.dims());
    let v = linear_minimizer(poly, &g)?;
    let linear = (dot(&g, q) - dot(&g, &v)).max(0.0);
    Ok(linear.min(dual_gap(poly, q)))
}

fn dual_gap(poly: &MarginalPolytope, q: &[f64]) -> f64 {
    (cmi(q, poly.dims()) - dual::lower_bound(poly, q)).max(0.0)
}

fn axpy(q: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    q.iter().zip(d).map(|(a, b)| (a + t * b).max(0.0)).collect()
}

/// Minimizer of the convex restriction `t ↦ f(q + t d)` on `[0, t_max]`,
/// located by bisection on the sign of its derivative. The returned step
/// always lies where the derivative is still negative, so it never ascends.
fn line_search(q: &[f64], d: &[f64], t_max: f64, dims: [usize; 3]) -> f64 {
    let slope = |t: f64| dot(&gradient(&axpy(q, d, t), dims), d);
    if slope(t_max) <= 0.0 {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for step in 0..LINE_SEARCH_MAX_STEPS {
        if step >= LINE_SEARCH_STEPS && lo > 0.0 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

struct ActiveSet {
    atoms: Vec<(Vec<f64>, f64)>,
}

impl ActiveSet {
    fn find(&self, v: &[f64]) -> Option<usize> {
        self.atoms.iter().position(|(a, _)| {
            a.iter().zip(v).all(|(x, y)| (x - y).abs() <= 1e-13)
        })
    }
}

pub(crate) fn run(poly: &MarginalPolytope, tolerance: f64, max_iters: usize) -> Result<FwOutcome> {
    let dims = poly.dims();
    let mut q = poly.feasible_point();
    let mut value = cmi(&q, dims);
    let mut active = ActiveSet {
        atoms: vec![(q.clone(), 1.0)],
    };
    let mut trace = vec![value];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut force_fw = false;
    let mut polish_sweeps = POLISH_SWEEPS;

    while iterations < max_iters {
        let g = gradient(&q, dims);
        let v = linear_minimizer(poly, &g)?;
        let gq = dot(&g, &q);
        gap = (gq - dot(&g, &v)).max(0.0);
        if gap > tolerance && iterations % DUAL_EVERY == 0 {
            gap = gap.min(dual_gap(poly, &q));
        }
        if gap <= tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        if iterations % POLISH_EVERY == 0 {
            let refined = oracle::polish(poly, q.clone(), polish_sweeps);
            let refined_value = cmi(&refined, dims);
            if refined_value < value {
                polish_sweeps = (2 * polish_sweeps).min(POLISH_MAX_SWEEPS);
                q = refined;
                value = refined_value;
                active.atoms = vec![(q.clone(), 1.0)];
                trace.push(value);
                continue;
            }
        }

        let (away_idx, away_val) = active
            .atoms
            .iter()
            .enumerate()
            .map(|(i, (a, _))| (i, dot(&g, a)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let away_gap = away_val - gq;
        let fw_step = force_fw || gap >= away_gap || active.atoms.len() == 1;
        force_fw = false;

        let (d, t_max) = if fw_step {
            (v.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>(), 1.0)
        } else {
            let (a, w) = &active.atoms[away_idx];
            let w = *w;
            (
                q.iter().zip(a).map(|(x, y)| x - y).collect::<Vec<_>>(),
                w / (1.0 - w),
            )
        };

        let t = line_search(&q, &d, t_max, dims);
        if t <= 0.0 {
            if fw_step {
                break;
            }
            // the away direction is blocked; take a plain step next round
            force_fw = true;
            continue;
        }
        let candidate = axpy(&q, &d, t);
        let new_value = cmi(&candidate, dims);
        if new_value > value + DESCENT_SLACK {
            // round-off stall at the optimum
            break;
        }

        if fw_step {
            if t >= 1.0 {
                active.atoms = vec![(v, 1.0)];
            } else {
                for (_, w) in active.atoms.iter_mut() {
                    *w *= 1.0 - t;
                }
                match active.find(&v) {
                    Some(i) => active.atoms[i].1 += t,
                    None => active.atoms.push((v, t)),
                }
            }
        } else {
            for (_, w) in active.atoms.iter_mut() {
                *w *= 1.0 + t;
            }
            active.atoms[away_idx].1 -= t;
            if t >= t_max || active.atoms[away_idx].1 <= 1e-14 {
                active.atoms.remove(away_idx);
            }
        }

        q = candidate;
        value = new_value;
        trace.push(value);
    }

    if !converged {
        // the loop ended on the iteration cap or a stall; report the gap at
        // the final point
        gap = duality_gap(poly, &q)?;
        converged = gap <= tolerance;
    }
    Ok(FwOutcome {
        q,
        value,
        gap,
        iterations,
        converged,
        trace,
    })
}
