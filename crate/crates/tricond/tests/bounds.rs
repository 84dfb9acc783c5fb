use proptest::prelude::*;
use tricond::bounds::*;
use tricond::field::CompositeSpec;
use tricond::translation;
use tricond::Error;

fn spec(k2: f64, m1: f64, m2: f64) -> CompositeSpec {
    CompositeSpec::new(1.0, k2, m1, m2).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn region_b_example() {
    let s = spec(3.0, 0.1, 0.5);
    let res = lower_bound(&s, 0.7).unwrap();
    assert_eq!(res.region, Region::B);
    let want = 10.0 * (1.7 - 2.0 * 0.35f64.sqrt()).powi(2) + 2.0 * 0.7 * 3.0;
    assert!(rel(res.b, want) < 1e-14);
    assert!((res.b - 6.871).abs() < 5e-4);
    assert!((res.t_opt - 1.368).abs() < 1e-3 && res.t_opt == res.t_cr1);
    let (bb, _) = brute_force_bound(&s, 0.7, 6.0, 400);
    assert!(rel(bb, res.b) < 1e-8);
}

#[test]
fn region_c_example() {
    let s = spec(2.0, 0.15, 0.5);
    for r in [0.35, 0.4, 0.45] {
        let res = lower_bound(&s, r).unwrap();
        assert_eq!(res.region, Region::C, "r = {r}");
        assert!(rel(res.b, 0.4 / 0.15 + 4.0 * r * r) < 1e-13);
    }
}

#[test]
fn region_e_example() {
    let s = spec(3.0, 0.2, 0.5);
    let res = lower_bound(&s, 0.05).unwrap();
    assert_eq!(res.region, Region::E);
    assert!(res.t_opt < 1.0 && !res.exact);
}

#[test]
fn region_d_reduces_to_two_phase_translation_bound() {
    let s = spec(3.0, 0.4, 0.3);
    let r = 0.8;
    let res = lower_bound(&s, r).unwrap();
    assert!(matches!(res.region, Region::D1 | Region::D2));
    let h1 = 1.0 / (0.4 / 2.0 + 0.3 / 4.0);
    assert!(rel(res.b, h1 * (1.8f64).powi(2) / 2.0 - 2.0 * r) < 1e-13);
}

#[test]
fn r_equal_m2_is_a_tie() {
    for m1 in [0.08, 0.1] {
        let res = lower_bound(&spec(3.0, m1, 0.5), 0.5).unwrap();
        assert!(res.tie, "m1 = {m1}: {res:?}");
    }
}

#[test]
fn limit_at_zero() {
    for (m1, region) in [(0.05, Region::A2), (0.3, Region::E)] {
        let s = spec(3.0, m1, 0.5);
        let res = lower_bound(&s, 0.0).unwrap();
        assert_eq!(res.region, region);
        assert!(rel(res.b, s.harmonic_mean()) < 1e-14);
        assert_eq!(res.t_opt, 3.0);
    }
}

#[test]
fn input_errors() {
    let s = spec(3.0, 0.2, 0.5);
    assert!(matches!(
        lower_bound(&s, 1.2),
        Err(Error::InvalidLoading(_))
    ));
    let no_two = CompositeSpec::new(1.0, 3.0, 0.4, 0.0).unwrap();
    assert!(matches!(
        lower_bound(&no_two, 0.5),
        Err(Error::InvalidSpec(_))
    ));
}

#[test]
fn boundary_examples() {
    let s = spec(3.0, 0.2, 0.5);
    let want = 0.5 * (1.0 / (1.1 + (1.21f64 - 0.5).sqrt())).powi(2);
    assert!(rel(psi_ab(&s).unwrap(), want) < 1e-14);
    assert!((psi_ab(&s).unwrap() - 0.1325).abs() < 1e-4);
    assert_eq!(psi_bc(&s), 0.5);
}

#[test]
fn psi_bd_satisfies_its_definition() {
    for (k2, m1) in [(3.0, 0.15), (3.0, 0.3), (2.0, 0.2)] {
        let s = spec(k2, m1, 0.5);
        let psi = psi_bd(&s).unwrap();
        assert!((t_cr1(&s, psi) - 1.0).abs() < 1e-10, "k2={k2} m1={m1}");
        let printed = psi_bd_printed(&s).unwrap();
        assert!((t_cr1(&s, printed) - 1.0).abs() > 1e-3);
    }
}

#[test]
fn a_regime_has_t_opt_k2() {
    let s = spec(3.0, 0.05, 0.5);
    for r in [0.1, 0.5, 1.0] {
        let res = lower_bound(&s, r).unwrap();
        assert!(matches!(res.region, Region::A1 | Region::A2));
        assert_eq!(res.t_opt, 3.0);
        let (_, tb) = brute_force_bound(&s, r, 6.0, 600);
        assert!((tb - 3.0).abs() < 1e-6, "brute t = {tb}");
    }
}

#[test]
fn isotropic_end_matches_oracle() {
    for m1 in [0.05, 0.1, 0.2, 0.4] {
        let s = spec(3.0, m1, 0.5);
        let (bb, _) = brute_force_bound(&s, 1.0, 6.0, 400);
        assert!(rel(bb, lower_bound(&s, 1.0).unwrap().b) < 1e-8);
    }
}

#[test]
fn oracle_grid_agreement() {
    for k2 in [3.0, 2.0] {
        for i in 1..=8 {
            let s = spec(k2, 0.5 * i as f64 / 9.0, 0.5);
            for j in 1..=8 {
                let r = j as f64 / 8.0;
                let b = lower_bound(&s, r).unwrap().b;
                let (bb, _) = brute_force_bound(&s, r, 2.0 * k2, 300);
                assert!(rel(bb, b) < 1e-7, "k2={k2} m1={} r={r}: {bb} vs {b}", s.m1);
            }
        }
    }
}

#[test]
fn regions_of_the_reference_plane() {
    // Small m1 is A, small r with larger m1 is E, large m1 and r is D.
    assert!(matches!(
        classify_region(&spec(3.0, 0.02, 0.5), 0.5).unwrap(),
        Region::A1 | Region::A2
    ));
    assert_eq!(
        classify_region(&spec(3.0, 0.35, 0.5), 0.1).unwrap(),
        Region::E
    );
    assert!(matches!(
        classify_region(&spec(3.0, 0.4, 0.5), 0.9).unwrap(),
        Region::D1 | Region::D2
    ));
}

#[test]
fn continuity_across_region_boundaries() {
    for (k2, m1) in [
        (3.0, 0.1),
        (3.0, 0.125),
        (2.0, 0.15),
        (2.0, 0.1),
        (3.0, 0.3),
    ] {
        let s = spec(k2, m1, 0.5);
        let h = 1e-4;
        let n = (1.0 / h) as usize;
        let mut prev = lower_bound(&s, h).unwrap();
        for i in 2..=n {
            let cur = lower_bound(&s, i as f64 * h).unwrap();
            if cur.region != prev.region {
                let jump = (cur.b - prev.b).abs();
                let drift = (branch_value(&s, prev.branch, cur.r) - prev.b).abs();
                assert!(
                    jump <= drift + 1e-8,
                    "k2={k2} m1={m1} r={}: {:?}->{:?}",
                    cur.r,
                    prev.region,
                    cur.region
                );
            }
            prev = cur;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bound_dominates_fixed_translation(m1 in 0.02..0.48f64, r in 0.0..=1.0f64, k2 in 1.2..5.0f64) {
        let s = spec(k2, m1, 0.5);
        let b = lower_bound(&s, r).unwrap().b;
        let fixed = translation::oracle(&s, r, 1.0).y - 2.0 * r;
        prop_assert!(b >= fixed - 1e-12 * b.abs());
    }

    #[test]
    fn t_opt_is_stationary_inside_its_interval(m1 in 0.02..0.48f64, r in 0.02..0.98f64) {
        let s = spec(3.0, m1, 0.5);
        let res = lower_bound(&s, r).unwrap();
        prop_assume!(matches!(res.branch, Branch::B | Branch::C | Branch::EInterior) && !res.tie);
        let t = res.t_opt;
        prop_assume!(t > 1e-3 && (t - 1.0).abs() > 1e-3 && t < 3.0 - 1e-3);
        let f = |t: f64| translation::closed_y(&s, r, t) - 2.0 * r * t;
        let h = 1e-6;
        let d = (f(t + h) - f(t - h)) / (2.0 * h);
        prop_assert!(d.abs() < 1e-6, "dY/dt = {d}");
    }

    #[test]
    fn lower_bound_agrees_with_oracle(m1 in 0.02..0.48f64, r in 0.0..=1.0f64, k2 in 1.2..5.0f64, m2 in 0.1..0.7f64) {
        prop_assume!(m1 + m2 < 0.99);
        let s = spec(k2, m1, m2);
        if let Ok(res) = lower_bound(&s, r) {
            let (bb, _) = brute_force_bound(&s, r, 2.0 * k2, 200);
            prop_assert!(rel(bb, res.b) < 1e-7, "{bb} vs {}", res.b);
        }
    }
}
