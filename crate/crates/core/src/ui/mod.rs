//! Unique information `UI(S;Y\Z) = min_{Q ∈ Δ_P} I_Q(S;Y|Z)` and the derived
//! shared (`SI`) and synergistic (`CI`) parts.

mod dual;
mod frank_wolfe;
pub mod objective;
mod oracle;
mod polytope;

use serde::{Deserialize, Serialize};

pub use polytope::{CycleMove, MarginalPolytope, Roles, MEMBERSHIP_TOL};

use crate::error::{Error, Result};
use crate::prob::JointDist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FrankWolfe,
    CycleDescent,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::FrankWolfe => write!(f, "frank-wolfe"),
            Method::CycleDescent => write!(f, "cycle-descent"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the certified gap is at most this many bits.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Keep the per-iteration objective values.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iters: 10_000,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            starts: 16,
            seed: 0,
            max_sweeps: 50_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub ui: f64,
    pub si: f64,
    pub ci: f64,
    /// `I(S;Y)` and `I(S;Y|Z)` of the input.
    pub mi: f64,
    pub cmi: f64,
    /// Minimizer over the marginal polytope, on the flattened role variables.
    pub q_star: JointDist,
    /// Duality gap at `q_star`: the optimum lies in `[ui - gap, ui]`.
    pub gap: f64,
    pub iterations: usize,
    pub method: Method,
    /// False when the iteration cap was hit before the gap met the tolerance.
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<f64>>,
}

impl DecompositionResult {
    /// Lower end of the certified bracket.
    pub fn lower_bound(&self) -> f64 {
        (self.ui - self.gap).max(0.0)
    }
}

fn validate(opts: &SolverOptions) -> Result<()> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    Ok(())
}

fn assemble(
    poly: &MarginalPolytope,
    q: Vec<f64>,
    value: f64,
    gap: f64,
    iterations: usize,
    method: Method,
    converged: bool,
    trace: Option<Vec<f64>>,
) -> DecompositionResult {
    let base = poly.base();
    let mi = base.cmi_masks(0b001, 0b010, 0);
    let cmi = base.cmi_masks(0b001, 0b010, 0b100);
    let ui = value.max(0.0);
    DecompositionResult {
        ui,
        si: mi - ui,
        ci: cmi - ui,
        mi,
        cmi,
        q_star: poly.to_dist(q),
        gap,
        iterations,
        method,
        converged,
        trace,
    }
}

/// Build the marginal polytope of `d` under `roles`.
pub fn build_polytope(d: &JointDist, roles: &Roles) -> Result<MarginalPolytope> {
    MarginalPolytope::build(d, roles)
}

/// The conditional-independence coupling `P(s) P(y|s) P(z|s)`.
pub fn feasible_point(poly: &MarginalPolytope) -> JointDist {
    poly.feasible_dist()
}

/// Frank–Wolfe solve on an already built polytope.
pub fn solve_polytope(poly: &MarginalPolytope, opts: &SolverOptions) -> Result<DecompositionResult> {
    validate(opts)?;
    let out = frank_wolfe::run(poly, opts.tolerance, opts.max_iters)?;
    if !out.converged {
        log::warn!(
            "unique information: gap {:.3e} above tolerance after {} iterations",
            out.gap,
            out.iterations
        );
    }
    Ok(assemble(
        poly,
        out.q,
        out.value,
        out.gap,
        out.iterations,
        Method::FrankWolfe,
        out.converged,
        opts.record_trace.then_some(out.trace),
    ))
}

/// `UI(S;Y\Z)` with a certified gap.
pub fn compute_ui(d: &JointDist, roles: &Roles, opts: &SolverOptions) -> Result<DecompositionResult> {
    solve_polytope(&MarginalPolytope::build(d, roles)?, opts)
}

/// Independent multi-start cycle-descent estimate. The reported gap is the
/// duality gap at the point it found.
pub fn compute_ui_oracle(d: &JointDist, roles: &Roles, opts: &OracleOptions) -> Result<DecompositionResult> {
    let poly = MarginalPolytope::build(d, roles)?;
    let run = oracle::run(&poly, opts.starts, opts.seed, opts.max_sweeps);
    let gap = frank_wolfe::duality_gap(&poly, &run.q)?;
    Ok(assemble(
        &poly,
        run.q,
        run.value,
        gap,
        run.sweeps,
        Method::CycleDescent,
        run.converged,
        None,
    ))
}

/// Residual of `I(S;Y) + UI(S;Z\Y) = I(S;Z) + UI(S;Y\Z)`, with the summed
/// gaps of the two solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub residual: f64,
    pub gaps: f64,
    pub converged: bool,
}

pub fn consistency_residual(d: &JointDist, roles: &Roles, opts: &SolverOptions) -> Result<ConsistencyCheck> {
    let forward = compute_ui(d, roles, opts)?;
    let backward = compute_ui(d, &roles.swapped(), opts)?;
    let i_sz = backward.mi;
    let residual = (forward.mi + backward.ui - i_sz - forward.ui).abs();
    Ok(ConsistencyCheck {
        residual,
        gaps: forward.gap + backward.gap,
        converged: forward.converged && backward.converged,
    })
}

/// A minimum-synergy distribution `Q*`.
pub fn min_synergy_distribution(d: &JointDist, roles: &Roles, opts: &SolverOptions) -> Result<JointDist> {
    Ok(compute_ui(d, roles, opts)?.q_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{default_layout, layout, random_dirichlet};

    fn sxyz(f: impl Fn(usize, usize, usize) -> f64) -> JointDist {
        JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| f(i[0], i[1], i[2])).unwrap()
    }

    fn roles() -> Roles {
        Roles::new(&["S"], &["Y"], &["Z"])
    }

    #[test]
    fn secret_bit_is_normalized() {
        let d = sxyz(|s, y, _| if s == y { 0.25 } else { 0.0 });
        let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
        assert!((r.ui - 1.0).abs() < 1e-4);
        assert!(r.converged);
    }

    #[test]
    fn xor_is_purely_synergistic() {
        let d = sxyz(|s, y, z| if z == s ^ y { 0.25 } else { 0.0 });
        let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
        assert!(r.ui.abs() < 1e-6);
        assert!((r.ci - 1.0).abs() < 1e-4);
        assert!(r.q_star.probs().iter().all(|&q| (q - 0.125).abs() < 1e-9));
    }

    #[test]
    fn copy_is_purely_shared() {
        let d = sxyz(|s, y, z| if s == y && y == z { 0.5 } else { 0.0 });
        let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
        assert!(r.ui.abs() < 1e-6);
        assert!((r.si - 1.0).abs() < 1e-4);
    }

    #[test]
    fn iteration_cap_is_flagged_not_fatal() {
        let d = random_dirichlet(default_layout(&[3, 3, 3]), 0.5, 9).unwrap();
        let opts = SolverOptions {
            tolerance: 1e-14,
            max_iters: 3,
            record_trace: false,
        };
        let r = compute_ui(&d, &roles(), &opts).unwrap();
        assert!(!r.converged);
        assert!(r.gap > 1e-14);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let d = sxyz(|_, _, _| 0.125);
        let opts = SolverOptions {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(compute_ui(&d, &roles(), &opts).is_err());
    }

    #[test]
    fn descent_is_monotone() {
        for seed in 0..20 {
            let d = random_dirichlet(default_layout(&[3, 2, 3]), 1.0, seed).unwrap();
            let opts = SolverOptions {
                record_trace: true,
                ..Default::default()
            };
            let r = compute_ui(&d, &roles(), &opts).unwrap();
            let trace = r.trace.unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn consistency_on_xor_and_secret_bit() {
        let xor = sxyz(|s, y, z| if z == s ^ y { 0.25 } else { 0.0 });
        let c = consistency_residual(&xor, &roles(), &SolverOptions::default()).unwrap();
        assert!(c.residual < 1e-6);
        let bit = sxyz(|s, y, _| if s == y { 0.25 } else { 0.0 });
        let c = consistency_residual(&bit, &roles(), &SolverOptions::default()).unwrap();
        assert!(c.residual < 1e-4);
    }

    #[test]
    fn min_synergy_of_secret_bit_is_input() {
        let bit = sxyz(|s, y, _| if s == y { 0.25 } else { 0.0 });
        let q = min_synergy_distribution(&bit, &roles(), &SolverOptions::default()).unwrap();
        assert!(q.l1_distance(&bit).unwrap() < 1e-12);
    }
}
