use proptest::prelude::*;
use tricond::field::{CompositeSpec, Loading};
use tricond::translation::*;

fn spec(k2: f64, m1: f64, m2: f64) -> CompositeSpec {
    CompositeSpec::new(1.0, k2, m1, m2).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn well_value_examples() {
    assert!(rel(well_value(2.0, 0.5, 1.0, [1.0, 0.0], [0.5, 0.0]), 1.625) < 1e-15);
    assert!(rel(well_value(1.0, 0.5, 2.0, [1.0, 0.0], [0.3, 0.0]), 1.0) < 1e-15);
    assert!(rel(well_value(1.0, 0.5, 2.0, [1.0, 0.0], [-0.9, 0.1]), 1.0) < 1e-15);
    assert_eq!(well_value(1.7, 0.3, 0.4, [0.0, 0.0], [0.0, 0.0]), 0.0);
}

#[test]
fn closed_regime_examples() {
    let s = spec(3.0, 0.2, 0.5);
    for r in [0.0, 0.3, 1.0] {
        let s01 = Loading::new(r).unwrap().s01();
        let (yd, _) = closed_energy(&s, r, 1.0, Regime::DLike).unwrap();
        let h1 = 1.0 / (0.2 / 2.0 + 0.5 / 4.0);
        assert!(rel(yd, h1 * s01 * s01) < 1e-14);
        let (ya, _) = closed_energy(&s, r, 3.0, Regime::ALike).unwrap();
        let h2 = 1.0 / (0.2 / 2.0 + 0.5 / 6.0);
        assert!(rel(ya, h2 * (1.0 + r).powi(2) / 2.0) < 1e-14);
    }
    let (ye, _) = closed_energy(&s, 1.0, 0.0, Regime::ELike).unwrap();
    let hp = 1.0 / (0.2 / 1.0 + 0.5 / 3.0);
    assert!(rel(ye, 2.0 * hp) < 1e-14);
}

#[test]
fn oracle_matches_closed_examples() {
    let s = spec(3.0, 0.2, 0.5);
    for r in [0.0, 0.2, 0.5, 0.7, 1.0] {
        let o = oracle(&s, r, 1.0).y;
        let closed = h1(&s) * (1.0 + r).powi(2) / 2.0;
        if b_saturated(&s, r, 1.0) {
            assert!(rel(o, closed) < 1e-9, "r = {r}");
        } else {
            // The phase-1 disk cuts off the unconstrained D-like minimizer.
            assert!(o > closed * (1.0 + 1e-9), "r = {r}");
        }
    }
    assert!(rel(oracle(&s, 1.0, 0.0).y, 2.0 * h_plus(&s, 0.0)) < 1e-9);
}

#[test]
fn oracle_with_phase_two_absent() {
    let s = CompositeSpec::new(1.0, 3.0, 0.4, 0.0).unwrap();
    let r = 0.3;
    let l = Loading::new(r).unwrap();
    for t in [0.0, 0.5, 0.9] {
        let want = ((1.0 + t) * l.s01().powi(2) + (1.0 - t) * l.d01().powi(2)) / 0.4;
        assert!(rel(oracle(&s, r, t).y, want) < 1e-12);
    }
}

/// Largest step of `Y` on an `n`-point grid over `[lo, hi]`.
fn max_step(s: &CompositeSpec, r: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let ys: Vec<f64> = (0..=n)
        .map(|i| oracle(s, r, lo + (hi - lo) * i as f64 / n as f64).y)
        .collect();
    ys.windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn oracle_is_continuous_away_from_k1() {
    // Refining the grid tenfold shrinks the largest step about tenfold on each side of k1.
    for (k2, m1) in [(3.0, 0.1), (3.0, 0.3), (2.0, 0.15)] {
        let s = spec(k2, m1, 0.5);
        for r in [0.1, 0.5, 0.9] {
            for (lo, hi) in [(0.0, 1.0 - 1e-12), (1.0, k2 + 10.0)] {
                let (a, b) = (max_step(&s, r, lo, hi, 400), max_step(&s, r, lo, hi, 4000));
                assert!(
                    b < a / 5.0 + 1e-12,
                    "k2={k2} m1={m1} r={r} [{lo}, {hi}]: {a} {b}"
                );
            }
        }
    }
}

#[test]
fn oracle_jumps_at_k1_unless_disk_saturated() {
    for (m1, r) in [(0.2, 0.2), (0.2, 0.9), (0.4, 0.3)] {
        let s = spec(3.0, m1, 0.5);
        let left = oracle(&s, r, 1.0 - 1e-10).y;
        let at = oracle(&s, r, 1.0).y;
        if b_saturated(&s, r, 1.0) {
            assert!(rel(left, at) < 1e-8, "m1={m1} r={r}");
        } else {
            assert!(at > left * (1.0 + 1e-6), "m1={m1} r={r}");
        }
    }
}

#[test]
fn case_b_value_ignores_d() {
    let base = well_value(1.0, 0.3, 2.0, [0.8, -0.2], [0.0, 0.0]);
    for d in [[0.1, 0.2], [-0.5, 0.3], [0.8, -0.2]] {
        assert_eq!(well_value(1.0, 0.3, 2.0, [0.8, -0.2], d), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn oracle_respects_constraints(m1 in 0.02..0.45f64, m2 in 0.05..0.5f64, r in 0.0..=1.0f64, t in 0.0..8.0f64, k2 in 1.2..5.0f64) {
        prop_assume!(m1 + m2 < 0.98);
        let s = spec(k2, m1, m2);
        let o = oracle(&s, r, t);
        prop_assert!(o.averages.constraint_residual(&s, r) < 1e-10);
        prop_assert!(o.averages.disk_violation(&s, t) < 1e-10);
        prop_assert!((cell_energy(&s, t, &o.averages) - o.y).abs() < 1e-9 * o.y.abs().max(1.0));
    }

    #[test]
    fn closed_form_matches_oracle(m1 in 0.02..0.45f64, m2 in 0.05..0.5f64, r in 0.0..=1.0f64, t in 0.0..6.0f64, k2 in 1.2..5.0f64) {
        prop_assume!(m1 + m2 < 0.98);
        let s = spec(k2, m1, m2);
        let o = oracle(&s, r, t).y;
        prop_assert!(rel(closed_y(&s, r, t), o) < 1e-9, "closed {} oracle {}", closed_y(&s, r, t), o);
    }

    /// Between k1 and k2 the oracle sits between the two branch values and equals the
    /// saturated one.
    #[test]
    fn branches_bracket_oracle(m1 in 0.02..0.45f64, m2 in 0.05..0.5f64, r in 0.01..=1.0f64, u in 0.0..1.0f64, k2 in 1.2..5.0f64) {
        prop_assume!(m1 + m2 < 0.98);
        let s = spec(k2, m1, m2);
        let t = 1.0 + u * (k2 - 1.0);
        let o = oracle(&s, r, t).y;
        let (yb, yc) = (y_b(&s, r, t), y_c(&s, r, t));
        let tol = 1e-9 * o.abs().max(1.0);
        prop_assert!(yb <= o + tol && o <= yc + tol);
        let want = if b_saturated(&s, r, t) { yb } else { yc };
        prop_assert!((o - want).abs() < tol);
    }

    /// Reduction to first components: no feasible point of the full eight-variable problem
    /// goes below the oracle.
    #[test]
    fn eight_variable_points_never_beat_oracle(
        m1 in 0.05..0.45f64, m2 in 0.05..0.5f64, r in 0.0..=1.0f64, t in 0.0..6.0f64, k2 in 1.2..5.0f64,
        s1 in prop::array::uniform2(-3.0..3.0f64), d1 in prop::array::uniform2(-3.0..3.0f64),
    ) {
        prop_assume!(m1 + m2 < 0.98);
        let s = spec(k2, m1, m2);
        let l = Loading::new(r).unwrap();
        let s2 = [(l.s01() - m1 * s1[0]) / m2, -m1 * s1[1] / m2];
        let d2 = [(l.d01() - m1 * d1[0]) / m2, -m1 * d1[1] / m2];
        let avg = PhaseAverages { s: [s1, s2], d: [d1, d2] };
        prop_assume!(avg.disk_violation(&s, t) <= 0.0);
        let o = oracle(&s, r, t).y;
        prop_assert!(cell_energy(&s, t, &avg) >= o - 1e-9 * o.abs().max(1.0));
    }
}
