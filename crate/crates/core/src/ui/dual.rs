//! Dual lower bound for the unique information.
//!
//! On the polytope `H_Q(S|Z)` is fixed, so minimizing `I_Q(S;Y|Z)` is
//! maximizing `H_Q(S|YZ)`. For any multipliers `λ(s,y)`, `μ(s,z)` with
//! `Σ_s 2^{-λ(s,y)-μ(s,z)} ≤ 1` for every `(y,z)`, Gibbs' inequality gives
//! `H_Q(S|YZ) ≤ Σ λ P(s,y) + Σ μ P(s,z)` for every `Q` in the polytope, hence
//! `UI ≥ H_P(S|Z) − Σ λ P(s,y) − Σ μ P(s,z)`.
//!
//! Unlike the linearization gap this stays tight when the minimizer sits on a
//! face where a whole `(y,z)` column of `Q` vanishes and the objective is not
//! differentiable.

use super::polytope::MarginalPolytope;
use crate::dense::ZERO_FLOOR;

/// Stand-in for `+∞` on multipliers whose marginal weight is zero.
const INACTIVE: f64 = 1e4;
const FIT_ROUNDS: usize = 60;

fn log2_sum_exp2(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Certified lower bound on `min_{Q ∈ Δ_P} I_Q(S;Y|Z)` built from
/// multipliers fitted to the iterate `q`.
pub(crate) fn lower_bound(poly: &MarginalPolytope, q: &[f64]) -> f64 {
    let [ns, ny, nz] = poly.dims();
    let sy = poly.pair_sy();
    let sz = poly.pair_sz();

    let mut yz = vec![0.0; ny * nz];
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                yz[y * nz + z] += q[(s * ny + y) * nz + z];
            }
        }
    }

    // weighted two-way additive fit of -log2 q(s|y,z) ≈ λ(s,y) + μ(s,z)
    let mut lambda = vec![0.0; ns * ny];
    let mut mu = vec![0.0; ns * nz];
    let target = |s: usize, y: usize, z: usize| -> Option<(f64, f64)> {
        let v = q[(s * ny + y) * nz + z];
        let c = yz[y * nz + z];
        (v > ZERO_FLOOR && c > ZERO_FLOOR).then(|| (v, -(v / c).log2()))
    };
    for _ in 0..FIT_ROUNDS {
        for s in 0..ns {
            for y in 0..ny {
                let (mut num, mut den) = (0.0, 0.0);
                for z in 0..nz {
                    if let Some((w, t)) = target(s, y, z) {
                        num += w * (t - mu[s * nz + z]);
                        den += w;
                    }
                }
                lambda[s * ny + y] = if den > 0.0 { num / den } else { INACTIVE };
            }
            for z in 0..nz {
                let (mut num, mut den) = (0.0, 0.0);
                for y in 0..ny {
                    if let Some((w, t)) = target(s, y, z) {
                        num += w * (t - lambda[s * ny + y]);
                        den += w;
                    }
                }
                mu[s * nz + z] = if den > 0.0 { num / den } else { INACTIVE };
            }
        }
    }
    // multipliers of zero-mass marginals cost nothing; push them to "infinity"
    for (l, &p) in lambda.iter_mut().zip(sy) {
        if p <= 0.0 {
            *l = INACTIVE;
        }
    }
    for (m, &p) in mu.iter_mut().zip(sz) {
        if p <= 0.0 {
            *m = INACTIVE;
        }
    }

    // restore feasibility by shifting whole z- then y-groups; each shift can
    // only lower the bound's dual objective once every column is feasible
    let column = |lambda: &[f64], mu: &[f64], y: usize, z: usize| {
        log2_sum_exp2((0..ns).map(|s| -(lambda[s * ny + y] + mu[s * nz + z])))
    };
    for _ in 0..3 {
        for z in 0..nz {
            let shift = (0..ny)
                .map(|y| column(&lambda, &mu, y, z))
                .fold(f64::NEG_INFINITY, f64::max);
            if shift.is_finite() {
                for s in 0..ns {
                    mu[s * nz + z] += shift;
                }
            }
        }
        for y in 0..ny {
            let shift = (0..nz)
                .map(|z| column(&lambda, &mu, y, z))
                .fold(f64::NEG_INFINITY, f64::max);
            if shift.is_finite() && shift < 0.0 {
                for s in 0..ns {
                    lambda[s * ny + y] += shift;
                }
            }
        }
    }
    // guard against round-off in the shifts
    let worst = (0..ny)
        .flat_map(|y| (0..nz).map(move |z| (y, z)))
        .map(|(y, z)| column(&lambda, &mu, y, z))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > 0.0 {
        for m in mu.iter_mut() {
            *m += worst;
        }
    }

    let dual: f64 = lambda
        .iter()
        .zip(sy)
        .filter(|(_, &p)| p > 0.0)
        .map(|(l, p)| l * p)
        .chain(mu.iter().zip(sz).filter(|(_, &p)| p > 0.0).map(|(m, p)| m * p))
        .sum();

    // H_P(S|Z) = H(S,Z) - H(Z)
    let mut pz = vec![0.0; nz];
    for s in 0..ns {
        for z in 0..nz {
            pz[z] += sz[s * nz + z];
        }
    }
    let h_sz = crate::dense::entropy_bits(sz);
    let h_z = crate::dense::entropy_bits(&pz);
    h_sz - h_z - dual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{default_layout, random_dirichlet};
    use crate::ui::objective::cmi;
    use crate::ui::Roles;

    #[test]
    fn bound_never_exceeds_any_feasible_value() {
        // weak duality: any polytope point has objective >= the bound
        for seed in 0..30 {
            let d = random_dirichlet(default_layout(&[3, 2, 3]), 0.8, seed).unwrap();
            let poly = MarginalPolytope::build(&d, &Roles::new(&["S"], &["Y"], &["Z"])).unwrap();
            let q0 = poly.feasible_point();
            let lb = lower_bound(&poly, &q0);
            assert!(lb <= cmi(&q0, poly.dims()) + 1e-12);
            assert!(lb <= cmi(d.probs(), poly.dims()) + 1e-12);
        }
    }
}
