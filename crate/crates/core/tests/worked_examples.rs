use unikey::bounds::BoundsOptions;
use unikey::harness::*;
use unikey::prob::{default_layout, layout, random_dirichlet, Channel, JointDist, Variable};
use unikey::ui::{compute_ui, compute_ui_oracle, OracleOptions, Roles, SolverOptions};

fn roles() -> Roles {
    Roles::new(&["S"], &["Y"], &["Z"])
}

fn opts() -> CheckOptions {
    CheckOptions {
        bounds: BoundsOptions {
            restarts: 4,
            max_steps: 400,
            max_evals: 30,
            ..BoundsOptions::default()
        },
        ..CheckOptions::default()
    }
}

fn xyz(f: impl Fn(usize, usize, usize) -> f64) -> JointDist {
    JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| f(i[0], i[1], i[2])).unwrap()
}

fn secret_bit() -> JointDist {
    xyz(|s, y, _| if s == y { 0.25 } else { 0.0 })
}

fn xor() -> JointDist {
    xyz(|s, y, z| if z == s ^ y { 0.25 } else { 0.0 })
}

fn h(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[test]
fn and_of_bob_and_eve() {
    // S = Y ∧ Z: by the Y↔Z symmetry both unique parts are equal, and
    // UI + SI = I(S;Y) = h(1/4) − 1/2, CI = I(S;Y|Z) − UI with I(S;Y|Z) = 1/2
    let d = xyz(|s, y, z| if s == (y & z) { 0.25 } else { 0.0 });
    let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
    let o = compute_ui_oracle(&d, &roles(), &OracleOptions::default()).unwrap();
    assert!((r.ui - o.ui).abs() < 1e-4, "{} vs {}", r.ui, o.ui);
    assert!(r.ui < 1e-4, "{}", r.ui);
    assert!((r.mi - (h(0.25) - 0.5)).abs() < 1e-12);
    assert!((r.si - 0.311278).abs() < 1e-4 && (r.ci - 0.5).abs() < 1e-4, "{r:?}");
    let swapped = compute_ui(&d, &roles().swapped(), &SolverOptions::default()).unwrap();
    assert!((swapped.ui - r.ui).abs() < 1e-4);
}

#[test]
fn reverse_unique_information_of_the_secret_bit_vanishes() {
    let c = unikey::ui::consistency_residual(&secret_bit(), &roles(), &SolverOptions::default()).unwrap();
    assert!(c.residual < 1e-4);
    let rev = compute_ui(&secret_bit(), &roles().swapped(), &SolverOptions::default()).unwrap();
    assert!(rev.ui < 1e-4);
}

#[test]
fn independent_witness_turns_the_triangle_into_shared_information() {
    let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 21).unwrap();
    let w = random_dirichlet(vec![Variable::new("W", 2)], 1.0, 22).unwrap();
    let d4 = JointDist::from_fn(default_layout(&[2, 2, 2, 2]), |i| d.get(&i[..3]) * w.probs()[i[3]]).unwrap();
    let r = ExtendedRoles::first_four(&d4).unwrap();
    let o = check_triangle(&d4, &r, &opts()).unwrap();
    let si = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap().si;
    assert!((o.value - si).abs() < 1e-4, "{} vs {si}", o.value);
}

#[test]
fn degraded_eve_copy_adds_no_unique_information() {
    for seed in 0..5 {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, seed).unwrap();
        let ch = Channel::random(&["Z"], 2, Variable::new("W", 2), 1.0, seed + 50).unwrap();
        let d4 = d.apply_channel(&ch).unwrap();
        let second = compute_ui(&d4, &Roles::new(&["S", "Y"], &["W"], &["Z"]), &SolverOptions::default()).unwrap();
        assert!(second.ui <= 1e-4, "{}", second.ui);
        let o = check_corollary(&d4, &ExtendedRoles::first_four(&d4).unwrap(), &opts()).unwrap();
        assert!(o.holds(), "{o:?}");
    }
}

#[test]
fn erasing_eve_leaves_shared_information_as_slack() {
    let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 31).unwrap();
    let erase = Channel::constant(&["Z"], 2, Variable::new("Z'", 2));
    let [m, id] = check_eve_monotonicity(&d, &roles(), &erase, &opts()).unwrap();
    let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
    assert!((m.value - r.si).abs() < 1e-4 && id.holds(), "{m:?} {id:?}");
}

#[test]
fn constant_local_operation_costs_all_of_ui() {
    let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 41).unwrap();
    let r = compute_ui(&d, &roles(), &SolverOptions::default()).unwrap();
    for input in ["S", "Y"] {
        let ch = Channel::constant(&[input], 2, Variable::new("L", 2));
        let o = check_alice_bob_monotonicity(&d, &roles(), &ch, &opts()).unwrap();
        assert!((o.value - r.ui).abs() < 1e-4, "{input}: {o:?}");
    }
    let same = check_alice_bob_monotonicity(&d, &roles(), &Channel::identity("S", 2, "L"), &opts()).unwrap();
    assert!(same.value.abs() < 1e-4);
}

#[test]
fn constant_announcement_changes_nothing() {
    let d = random_dirichlet(default_layout(&[3, 2, 2]), 1.0, 51).unwrap();
    let o = check_public_communication(&d, &roles(), &|_| 0, 1, &opts()).unwrap();
    assert!(o.value.abs() < 1e-4, "{o:?}");
    let parity = check_public_communication(&d, &roles(), &|s| s % 2, 2, &opts()).unwrap();
    assert!(parity.holds(), "{parity:?}");
}

#[test]
fn eve_copy_as_key_costs_its_entropy() {
    let d = random_dirichlet(default_layout(&[2, 2, 3]), 1.0, 61).unwrap();
    let d4 = d.apply_channel(&Channel::identity("Z", 3, "U")).unwrap();
    let o = check_locking(&d4, &ExtendedRoles::first_four(&d4).unwrap(), &opts()).unwrap();
    let hz = d.entropy(&["Z"], &[]).unwrap();
    assert!((o.value - hz).abs() < 1e-4, "{} vs {hz}", o.value);
}

#[test]
fn two_secret_bits_carry_two_bits() {
    let o = check_additivity(&secret_bit(), &roles(), 2, &opts()).unwrap();
    assert!(o.value.abs() < 1e-3, "{o:?}");
    let p = secret_bit().tensor_power(2).unwrap();
    let g = |n: &str| unikey::prob::tensor_group(n, 2);
    let r = compute_ui(&p, &Roles { s: g("S"), y: g("Y"), z: g("Z") }, &SolverOptions::default()).unwrap();
    assert!((r.ui - 2.0).abs() < 1e-3, "{}", r.ui);
}

#[test]
fn collapse_on_fixtures() {
    let x = check_collapse_at_qstar(&xor(), &roles(), &opts()).unwrap();
    assert!(x.ui.abs() < 1e-4 && x.cmi.abs() < 1e-4 && x.b1.abs() < 1e-4, "{x:?}");
    let s = check_collapse_at_qstar(&secret_bit(), &roles(), &opts()).unwrap();
    for v in [s.ui, s.cmi, s.b1] {
        assert!((v - 1.0).abs() < 1e-3, "{s:?}");
    }
    assert!(s.outcomes.iter().all(CheckOutcome::holds));
}

#[test]
fn secret_bit_blackwell_and_normalization() {
    let d = secret_bit();
    let out = check_blackwell(&d, &roles(), false, &opts()).unwrap();
    assert!(out.iter().all(CheckOutcome::holds));
    let n = check_normalization(&d, &roles(), &opts()).unwrap();
    assert!(n.value.abs() < 1e-4);
}

#[test]
fn negative_slack_turns_every_check_into_a_violation() {
    let mut config = SuiteConfig::empty();
    config.slack = -1.0;
    config.ensembles.push(Ensemble {
        property: PropertyId::P1,
        shape: vec![2, 2, 2],
        count: 3,
        concentration: 1.0,
        seed: 4,
    });
    let r = run_suite(&config).unwrap();
    assert_eq!(r[0].violations, 3);
    assert_eq!(r[0].failing_seeds, vec![4, 5, 6]);
}
