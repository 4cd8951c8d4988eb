//! Blackwell order `Z ⪰_S Y`: some channel `λ(y|z)` turns the `(S,Z)`
//! marginal into the `(S,Y)` one. Decided by a Phase-I linear program that
//! minimizes the L1 violation of `Σ_z P(s,z) λ(y|z) = P(s,y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Channel, JointDist, Variable};
use crate::simplex::LinearProgram;
use crate::ui::{MarginalPolytope, Roles, SolverOptions};

/// L1 residual below which the order is declared to hold.
pub const DOMINANCE_TOL: f64 = 1e-7;
/// UI threshold (on top of the solver gap) that counts as vanishing.
pub const VANISHING_TOL: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub dominates: bool,
    /// Channel from Eve's variable to a copy of Bob's, present when `dominates`.
    pub witness: Option<Channel>,
    /// L1 violation of the (clamped, renormalized) best channel.
    pub residual: f64,
}

/// `Σ_{s,y} |Σ_z P(s,z) λ(y|z) − P(s,y)|`.
fn violation(pair_sy: &[f64], pair_sz: &[f64], dims: [usize; 3], lambda: &[f64]) -> f64 {
    let [ns, ny, nz] = dims;
    let mut total = 0.0;
    for s in 0..ns {
        for y in 0..ny {
            let pushed: f64 = (0..nz).map(|z| pair_sz[s * nz + z] * lambda[z * ny + y]).sum();
            total += (pushed - pair_sy[s * ny + y]).abs();
        }
    }
    total
}

/// Does Eve's variable dominate Bob's with respect to `S`?
pub fn blackwell_dominates(d: &JointDist, roles: &Roles) -> Result<DominanceVerdict> {
    let poly = MarginalPolytope::build(d, roles)?;
    dominates_on(&poly)
}

pub(crate) fn dominates_on(poly: &MarginalPolytope) -> Result<DominanceVerdict> {
    let dims = poly.dims();
    let [ns, ny, nz] = dims;
    let (psy, psz) = (poly.pair_sy(), poly.pair_sz());

    // columns: λ(y|z) at z*ny + y, then e+ and e- per (s,y)
    let n_lambda = nz * ny;
    let n_slack = ns * ny;
    let n = n_lambda + 2 * n_slack;
    let mut a = Vec::with_capacity(n_slack + nz);
    let mut b = Vec::with_capacity(n_slack + nz);
    for s in 0..ns {
        for y in 0..ny {
            let mut row = vec![0.0; n];
            for z in 0..nz {
                row[z * ny + y] = psz[s * nz + z];
            }
            let k = s * ny + y;
            row[n_lambda + k] = 1.0;
            row[n_lambda + n_slack + k] = -1.0;
            a.push(row);
            b.push(psy[k]);
        }
    }
    for z in 0..nz {
        let mut row = vec![0.0; n];
        for y in 0..ny {
            row[z * ny + y] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    let mut c = vec![0.0; n];
    c[n_lambda..].iter_mut().for_each(|v| *v = 1.0);

    let sol = LinearProgram::new(a, b, c)
        .solve()?
        .map_err(|f| Error::LinearProgram(format!("dominance program {f:?}")))?;

    let mut lambda = sol.x[..n_lambda].to_vec();
    for row in lambda.chunks_mut(ny) {
        row.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|v| *v /= total);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / ny as f64);
        }
    }
    let residual = violation(psy, psz, dims, &lambda);
    let dominates = residual <= DOMINANCE_TOL;
    let vars = poly.base().variables();
    let witness = if dominates {
        Some(Channel::new(
            vec![vars[2].name.clone()],
            Variable::new(format!("{}'", vars[1].name), ny),
            lambda,
        )?)
    } else {
        None
    };
    Ok(DominanceVerdict {
        dominates,
        witness,
        residual,
    })
}

/// Outcome of checking that UI vanishes exactly when dominance holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub agree: bool,
    pub ui: f64,
    pub gap: f64,
    pub verdict: DominanceVerdict,
}

/// Agreement of `UI ≤ gap + 1e-5` with the dominance verdict. A disagreement
/// is returned rather than raised.
pub fn cross_check_ui(d: &JointDist, roles: &Roles, opts: &SolverOptions) -> Result<CrossCheck> {
    let poly = MarginalPolytope::build(d, roles)?;
    let verdict = dominates_on(&poly)?;
    let r = crate::ui::solve_polytope(&poly, opts)?;
    let vanishes = r.ui <= r.gap + VANISHING_TOL;
    if vanishes != verdict.dominates {
        log::warn!(
            "dominance verdict {} disagrees with UI {:.3e} (gap {:.1e})",
            verdict.dominates,
            r.ui,
            r.gap
        );
    }
    Ok(CrossCheck {
        agree: vanishes == verdict.dominates,
        ui: r.ui,
        gap: r.gap,
        verdict,
    })
}
