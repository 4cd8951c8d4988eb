//! Seeded property suite over random ensembles.

mod checks;

pub use checks::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundsOptions;
use crate::error::{Error, Result};
use crate::prob::{default_layout, random_dirichlet, Channel, JointDist, Variable};
use crate::ui::{Roles, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P9,
    PROP1,
    COR1,
    THM4,
    LOCK,
    COLLAPSE,
}

impl PropertyId {
    pub const ALL: [PropertyId; 13] = [
        PropertyId::P1,
        PropertyId::P2,
        PropertyId::P3,
        PropertyId::P4,
        PropertyId::P5,
        PropertyId::P6,
        PropertyId::P7,
        PropertyId::P9,
        PropertyId::PROP1,
        PropertyId::COR1,
        PropertyId::THM4,
        PropertyId::LOCK,
        PropertyId::COLLAPSE,
    ];

    /// Number of variables an instance of this property is drawn over.
    pub fn arity(self) -> usize {
        match self {
            PropertyId::PROP1 | PropertyId::COR1 | PropertyId::LOCK => 4,
            _ => 3,
        }
    }
}

/// `count` instances of one property on one shape, seeds `seed..seed+count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub property: PropertyId,
    pub shape: Vec<usize>,
    pub count: usize,
    #[serde(default = "one")]
    pub concentration: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub slack: f64,
    pub solver: SolverOptions,
    pub bounds: BoundsOptions,
    pub ensembles: Vec<Ensemble>,
}

impl SuiteConfig {
    /// No ensembles at all.
    pub fn empty() -> Self {
        SuiteConfig {
            slack: 1e-4,
            solver: SolverOptions::default(),
            bounds: BoundsOptions {
                restarts: 6,
                max_steps: 800,
                max_evals: 24,
                ..BoundsOptions::default()
            },
            ensembles: Vec::new(),
        }
    }

    /// Every property with `count` draws on each of its default shapes.
    pub fn with_count(count: usize) -> Self {
        let mut ensembles = Vec::new();
        for p in PropertyId::ALL {
            let shapes: &[&[usize]] = match p.arity() {
                4 => &[&[2, 2, 2, 2], &[3, 3, 2, 2]],
                _ => &[&[2, 2, 2], &[3, 3, 2]],
            };
            for shape in shapes {
                ensembles.push(Ensemble {
                    property: p,
                    shape: shape.to_vec(),
                    count,
                    concentration: 1.0,
                    seed: 0,
                });
            }
        }
        SuiteConfig {
            ensembles,
            ..SuiteConfig::empty()
        }
    }

    fn check_options(&self) -> CheckOptions {
        CheckOptions {
            solver: self.solver,
            bounds: self.bounds,
            slack: self.slack,
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig::with_count(100)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property_id: PropertyId,
    pub shape: Vec<usize>,
    pub instances: usize,
    pub violations: usize,
    /// Smallest measured slack; compare against the per-check tolerance.
    pub worst_slack: f64,
    pub seeds: Vec<u64>,
    pub failing_seeds: Vec<u64>,
    pub errors: Vec<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs every ensemble. Instance errors are recorded as violations; the
/// suite itself only fails on an invalid configuration.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<PropertyReport>> {
    let opts = config.check_options();
    let mut reports = Vec::new();
    for e in &config.ensembles {
        if e.shape.len() != e.property.arity() || e.shape.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs a shape of {} positive sizes",
                e.property,
                e.property.arity()
            )));
        }
        if !(e.concentration > 0.0) {
            return Err(Error::InvalidParameter("concentration must be positive".into()));
        }
        let seeds: Vec<u64> = (0..e.count as u64).map(|i| e.seed.wrapping_add(i)).collect();
        let results: Vec<(u64, Result<Vec<CheckOutcome>>)> = seeds
            .par_iter()
            .map(|&s| (s, run_instance(e, s, &opts)))
            .collect();

        let mut report = PropertyReport {
            property_id: e.property,
            shape: e.shape.clone(),
            instances: seeds.len(),
            violations: 0,
            worst_slack: f64::INFINITY,
            seeds: seeds.clone(),
            failing_seeds: Vec::new(),
            errors: Vec::new(),
        };
        for (seed, r) in results {
            let failed = match r {
                Ok(outcomes) => {
                    let mut failed = false;
                    for o in &outcomes {
                        report.worst_slack = report.worst_slack.min(o.value);
                        if !o.holds() {
                            log::error!(
                                "{:?} {:?} seed {seed}: {} = {:.3e} below -{:.1e}",
                                e.property,
                                e.shape,
                                o.label,
                                o.value,
                                o.tolerance
                            );
                            failed = true;
                        }
                    }
                    failed
                }
                Err(err) => {
                    log::error!("{:?} {:?} seed {seed}: {err}", e.property, e.shape);
                    report.errors.push(format!("seed {seed}: {err}"));
                    true
                }
            };
            if failed {
                report.violations += 1;
                report.failing_seeds.push(seed);
            }
        }
        if report.instances == 0 {
            report.worst_slack = 0.0;
        }
        reports.push(report);
    }
    reports.sort_by(|a, b| {
        (a.property_id, &a.shape, a.seeds.first()).cmp(&(b.property_id, &b.shape, b.seeds.first()))
    });
    Ok(reports)
}

fn xyz() -> Roles {
    Roles::new(&["S"], &["Y"], &["Z"])
}

fn sub_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// A random `S → Z → Y` chain.
pub fn markov_chain_instance(shape: [usize; 3], concentration: f64, seed: u64) -> Result<JointDist> {
    let [ns, ny, nz] = shape;
    let ps = random_dirichlet(vec![Variable::new("S", ns)], concentration, sub_seed(seed, 1))?;
    let zs = Channel::random(&["S"], ns, Variable::new("Z", nz), concentration, sub_seed(seed, 2))?;
    let yz = Channel::random(&["Z"], nz, Variable::new("Y", ny), concentration, sub_seed(seed, 3))?;
    let d = ps.apply_channel(&zs)?.apply_channel(&yz)?;
    d.permute(&[0, 2, 1])
}

/// Perfect secret bit `S = Y` with an independent Eve of random marginal.
pub fn secret_bit_instance(nz: usize, concentration: f64, seed: u64) -> Result<JointDist> {
    let pz = random_dirichlet(vec![Variable::new("Z", nz)], concentration, seed)?;
    JointDist::from_fn(default_layout(&[2, 2, nz]), |i| {
        if i[0] == i[1] {
            0.5 * pz.probs()[i[2]]
        } else {
            0.0
        }
    })
}

fn run_instance(e: &Ensemble, seed: u64, opts: &CheckOptions) -> Result<Vec<CheckOutcome>> {
    let c = e.concentration;
    let shape = &e.shape;
    let draw = || random_dirichlet(default_layout(shape), c, seed);
    let roles = xyz();
    match e.property {
        PropertyId::P1 => Ok(vec![check_consistency(&draw()?, &roles, opts)?]),
        PropertyId::P2 => {
            let d = markov_chain_instance([shape[0], shape[1], shape[2]], c, seed)?;
            check_blackwell(&d, &roles, true, opts)
        }
        PropertyId::P3 => {
            let d = draw()?;
            let (input, n) = if seed % 2 == 0 { ("S", shape[0]) } else { ("Y", shape[1]) };
            let ch = Channel::random(&[input], n, Variable::new(format!("{input}'"), n), c, sub_seed(seed, 1))?;
            Ok(vec![check_alice_bob_monotonicity(&d, &roles, &ch, opts)?])
        }
        PropertyId::P4 => {
            let d = draw()?;
            let ns = shape[0];
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1));
            let f_size = 2;
            let table: Vec<usize> = (0..ns).map(|_| rng.random_range(0..f_size)).collect();
            Ok(vec![check_public_communication(&d, &roles, &|s| table[s], f_size, opts)?])
        }
        PropertyId::P5 => Ok(vec![check_normalization(&secret_bit_instance(shape[2], c, seed)?, &roles, opts)?]),
        PropertyId::P6 => Ok(vec![check_additivity(&draw()?, &roles, 2, opts)?]),
        PropertyId::P7 => {
            let other = random_dirichlet(default_layout(shape), c, sub_seed(seed, 1))?;
            Ok(vec![check_continuity(&draw()?, &other, &roles, opts)?])
        }
        PropertyId::P9 => {
            let d = draw()?;
            let nz = shape[2];
            let ch = Channel::random(&["Z"], nz, Variable::new("Z'", nz), c, sub_seed(seed, 1))?;
            Ok(check_eve_monotonicity(&d, &roles, &ch, opts)?.to_vec())
        }
        PropertyId::PROP1 | PropertyId::COR1 | PropertyId::LOCK => {
            let d = draw()?;
            let r = ExtendedRoles::first_four(&d)?;
            Ok(vec![match e.property {
                PropertyId::PROP1 => check_triangle(&d, &r, opts)?,
                PropertyId::COR1 => check_corollary(&d, &r, opts)?,
                _ => check_locking(&d, &r, opts)?,
            }])
        }
        PropertyId::THM4 => check_chain(&draw()?, &roles, opts),
        PropertyId::COLLAPSE => Ok(check_collapse_at_qstar(&draw()?, &roles, opts)?.outcomes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::layout;

    fn opts() -> CheckOptions {
        CheckOptions {
            bounds: BoundsOptions {
                restarts: 4,
                max_steps: 300,
                max_evals: 20,
                ..BoundsOptions::default()
            },
            ..CheckOptions::default()
        }
    }

    fn roles() -> Roles {
        xyz()
    }

    #[test]
    fn duplicated_eve_gives_zero_triangle_slack() {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 3).unwrap();
        let d4 = d.apply_channel(&Channel::identity("Z", 2, "W")).unwrap();
        let r = ExtendedRoles::new(&["S"], &["Y"], &["Z"], &["W"]);
        let o = check_triangle(&d4, &r, &opts()).unwrap();
        assert!(o.value.abs() < 1e-4, "{o:?}");
    }

    #[test]
    fn constant_key_does_not_unlock() {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 5).unwrap();
        let d4 = d.apply_channel(&Channel::constant(&["S"], 2, Variable::new("U", 2))).unwrap();
        let r = ExtendedRoles::first_four(&d4).unwrap();
        let o = check_locking(&d4, &r, &opts()).unwrap();
        assert!(o.value.abs() < 1e-4, "{o:?}");
    }

    #[test]
    fn identity_garbling_of_eve_changes_nothing() {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 9).unwrap();
        let [m, id] = check_eve_monotonicity(&d, &roles(), &Channel::identity("Z", 2, "Z'"), &opts()).unwrap();
        assert!(m.value.abs() < 1e-4 && id.value.abs() < 1e-4, "{m:?} {id:?}");
    }

    #[test]
    fn xor_is_additive_at_zero() {
        let d = JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| {
            if i[2] == i[0] ^ i[1] {
                0.25
            } else {
                0.0
            }
        })
        .unwrap();
        let o = check_additivity(&d, &roles(), 2, &opts()).unwrap();
        assert!(o.value.abs() < 1e-4, "{o:?}");
    }

    #[test]
    fn markov_instances_are_dominated() {
        let d = markov_chain_instance([3, 2, 3], 1.0, 11).unwrap();
        assert_eq!(d.names(), vec!["S", "Y", "Z"]);
        let out = check_blackwell(&d, &roles(), true, &opts()).unwrap();
        assert!(out.iter().all(CheckOutcome::holds), "{out:?}");
    }

    #[test]
    fn empty_config_gives_empty_report() {
        assert!(run_suite(&SuiteConfig::empty()).unwrap().is_empty());
    }

    #[test]
    fn small_suite_is_clean_and_reproducible() {
        let mut config = SuiteConfig::with_count(2);
        config.ensembles.retain(|e| e.shape[0] == 2 && e.property != PropertyId::THM4);
        config.bounds = opts().bounds;
        let a = run_suite(&config).unwrap();
        assert!(a.iter().all(PropertyReport::passed), "{a:#?}");
        assert_eq!(a, run_suite(&config).unwrap());
    }
}
