//! Reported bound values re-evaluated from their witness channels.

use unikey::bounds::{
    intrinsic_information, minimum_intrinsic_information_b1, one_way_rate, reduced_intrinsic_heuristic,
    BoundsOptions,
};
use unikey::prob::{default_layout, random_dirichlet, JointDist};
use unikey::ui::Roles;

fn opts() -> BoundsOptions {
    BoundsOptions {
        restarts: 4,
        max_steps: 400,
        ..BoundsOptions::default()
    }
}

fn roles() -> Roles {
    Roles::new(&["S"], &["Y"], &["Z"])
}

fn draws() -> Vec<JointDist> {
    (0..4)
        .map(|s| random_dirichlet(default_layout(if s % 2 == 0 { &[2, 2, 2] } else { &[3, 2, 2] }), 1.0, s).unwrap())
        .collect()
}

#[test]
fn one_way_witness_reproduces_the_value() {
    for d in draws() {
        let e = one_way_rate(&d, &roles(), &opts()).unwrap();
        let j = d.apply_channel(&e.witnesses[0]).unwrap().apply_channel(&e.witnesses[1]).unwrap();
        let v = j.cmi(&["U"], &["Y"], &["V"]).unwrap() - j.cmi(&["U"], &["Z"], &["V"]).unwrap();
        assert!((v - e.value).abs() < 1e-9, "{v} vs {}", e.value);
        assert!(e.value >= -1e-12);
    }
}

#[test]
fn intrinsic_witness_reproduces_the_value() {
    for d in draws() {
        let e = intrinsic_information(&d, &roles(), &opts()).unwrap();
        let j = d.apply_channel(&e.witnesses[0]).unwrap();
        let v = j.cmi(&["S"], &["Y"], &["Z'"]).unwrap();
        assert!((v - e.value).abs() < 1e-9, "{v} vs {}", e.value);
    }
}

#[test]
fn b1_witness_reproduces_the_value() {
    for d in draws() {
        let e = minimum_intrinsic_information_b1(&d, &roles(), &opts()).unwrap();
        let j = d.apply_channel(&e.witnesses[0]).unwrap();
        let v = j.cmi(&["S"], &["Y"], &["Z'"]).unwrap() + j.cmi(&["S", "Y"], &["Z'"], &["Z"]).unwrap();
        assert!((v - e.value).abs() < 1e-9, "{v} vs {}", e.value);
    }
}

#[test]
fn reduced_witness_reproduces_the_value() {
    for d in draws() {
        let e = reduced_intrinsic_heuristic(&d, &roles(), 2, &opts()).unwrap();
        let j = d.apply_channel(&e.witnesses[0]).unwrap().apply_channel(&e.witnesses[1]).unwrap();
        let v = j.cmi(&["S"], &["Y"], &["Z'"]).unwrap() + j.entropy(&["U"], &[]).unwrap();
        assert!((v - e.value).abs() < 1e-9, "{v} vs {}", e.value);
    }
}

#[test]
fn estimates_are_reproducible() {
    let d = draws().remove(1);
    let a = minimum_intrinsic_information_b1(&d, &roles(), &opts()).unwrap();
    let b = minimum_intrinsic_information_b1(&d, &roles(), &opts()).unwrap();
    assert_eq!(a, b);
}
