use unikey::blackwell::{blackwell_dominates, cross_check_ui};
use unikey::prob::{random_dirichlet, Channel, JointDist, Variable};
use unikey::ui::{Roles, SolverOptions};

/// `S`, then `Z` drawn from `S`, then `Y` and `W` garbled from `Z` in series.
fn chain(seed: u64) -> JointDist {
    let s = random_dirichlet(vec![Variable::new("S", 3)], 1.0, seed).unwrap();
    let z = Channel::random(&["S"], 3, Variable::new("Z", 3), 1.0, seed + 1).unwrap();
    let y = Channel::random(&["Z"], 3, Variable::new("Y", 2), 1.0, seed + 2).unwrap();
    let w = Channel::random(&["Y"], 2, Variable::new("W", 2), 1.0, seed + 3).unwrap();
    s.apply_channel(&z).unwrap().apply_channel(&y).unwrap().apply_channel(&w).unwrap()
}

#[test]
fn every_variable_dominates_a_copy_of_itself() {
    for seed in 0..10 {
        let d = random_dirichlet(unikey::prob::default_layout(&[2, 3, 3]), 1.0, seed).unwrap();
        let d = d.apply_channel(&Channel::identity("Z", 3, "Zc")).unwrap();
        let v = blackwell_dominates(&d, &Roles::new(&["S"], &["Zc"], &["Z"])).unwrap();
        assert!(v.dominates, "seed {seed}: residual {}", v.residual);
    }
}

#[test]
fn dominance_is_transitive_through_composition() {
    for seed in 0..10 {
        let d = chain(seed * 10);
        let zy = blackwell_dominates(&d, &Roles::new(&["S"], &["Y"], &["Z"])).unwrap();
        let yw = blackwell_dominates(&d, &Roles::new(&["S"], &["W"], &["Y"])).unwrap();
        let zw = blackwell_dominates(&d, &Roles::new(&["S"], &["W"], &["Z"])).unwrap();
        assert!(zy.dominates && yw.dominates && zw.dominates, "seed {seed}");

        // composing the two witnesses also carries (S,Z) onto (S,W)
        let a = zy.witness.unwrap();
        let b = yw.witness.unwrap();
        let renamed = Channel::new(vec!["Y'".into()], b.output().clone(), b.kernel().to_vec()).unwrap();
        let composed = a.compose(&renamed).unwrap();
        let pushed = d.marginal(&["S", "Z"]).unwrap().apply_channel(&composed).unwrap();
        let target = d.marginal(&["S", "W"]).unwrap();
        let pushed = pushed.marginal(&["S", "W'"]).unwrap().rename("W'", "W").unwrap();
        assert!(pushed.l1_distance(&target).unwrap() < 1e-6, "seed {seed}");
    }
}

#[test]
fn verdict_ignores_symbol_relabeling() {
    for seed in 0..10 {
        let d = chain(100 + seed);
        let swapped = JointDist::from_fn(d.variables().to_vec(), |i| {
            let mut j = i.to_vec();
            j[1] = 2 - j[1]; // relabel Z
            d.get(&j)
        })
        .unwrap();
        for roles in [Roles::new(&["S"], &["Y"], &["Z"]), Roles::new(&["S"], &["Z"], &["Y"])] {
            let a = blackwell_dominates(&d, &roles).unwrap();
            let b = blackwell_dominates(&swapped, &roles).unwrap();
            assert_eq!(a.dominates, b.dominates, "seed {seed}");
        }
    }
}

#[test]
fn ui_agrees_with_the_verdict_in_both_directions() {
    let opts = SolverOptions::default();
    for seed in 0..10 {
        let d = chain(200 + seed);
        for roles in [Roles::new(&["S"], &["Y"], &["Z"]), Roles::new(&["S"], &["Z"], &["Y"])] {
            let c = cross_check_ui(&d, &roles, &opts).unwrap();
            assert!(c.agree, "seed {seed}: UI {} gap {} verdict {}", c.ui, c.gap, c.verdict.dominates);
        }
    }
}
