//! Translated cell energy `Y(r, t)`: per-material well values, the closed forms of every
//! regime, and an independent active-set oracle for the relaxed inner problem.
//!
//! The translated integrand is `(k+t)|s|² + (k−t)|d|² = 2W + 2t·det`, so the bound
//! family reads `W0 ≥ Y(r, t) − 2rt` in the doubled convention.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CompositeSpec, Loading, SQRT2};

/// Tolerance for `k_i − t = 0`, relative to `k_i`.
pub const WELL_CASE_TOL: f64 = 1e-14;

/// Averages of the basis coefficients over phases 1 and 2; phase 3 carries zero.
/// `s[i][j]` is `S_{i+1, j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseAverages {
    pub s: [[f64; 2]; 2],
    pub d: [[f64; 2]; 2],
}

impl PhaseAverages {
    pub fn first_components(s11: f64, s21: f64, d11: f64, d21: f64) -> Self {
        Self {
            s: [[s11, 0.0], [s21, 0.0]],
            d: [[d11, 0.0], [d21, 0.0]],
        }
    }

    /// Largest violation of the four averaging identities.
    pub fn constraint_residual(&self, spec: &CompositeSpec, r: f64) -> f64 {
        let l = Loading { r };
        let (m1, m2) = (spec.m1, spec.m2);
        [
            m1 * self.s[0][0] + m2 * self.s[1][0] - l.s01(),
            m1 * self.s[0][1] + m2 * self.s[1][1],
            m1 * self.d[0][0] + m2 * self.d[1][0] - l.d01(),
            m1 * self.d[0][1] + m2 * self.d[1][1],
        ]
        .into_iter()
        .fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest `|D_i|² − |S_i|²` over phases in the nonconvex or degenerate case (0 if none).
    pub fn disk_violation(&self, spec: &CompositeSpec, t: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, k) in [spec.k1, spec.k2].into_iter().enumerate() {
            if WellCase::classify(k, t) != WellCase::Convex {
                let ds = self.d[i][0].powi(2) + self.d[i][1].powi(2);
                let ss = self.s[i][0].powi(2) + self.s[i][1].powi(2);
                worst = worst.max(ds - ss);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WellCase {
    Convex,
    Degenerate,
    Nonconvex,
}

impl WellCase {
    pub fn classify(k: f64, t: f64) -> Self {
        let gap = k - t;
        if gap.abs() <= WELL_CASE_TOL * k {
            WellCase::Degenerate
        } else if gap > 0.0 {
            WellCase::Convex
        } else {
            WellCase::Nonconvex
        }
    }
}

/// Minimal translated energy of phase `i` given its averages.
///
/// Convex case: `m(k+t)|S|² + m(k−t)|D|²`. Otherwise the pointwise minimizer saturates
/// `|d| = |s|` and the value `2km|S|²` no longer depends on `D`.
pub fn well_value(k: f64, m: f64, t: f64, s: [f64; 2], d: [f64; 2]) -> f64 {
    let ss = s[0] * s[0] + s[1] * s[1];
    match WellCase::classify(k, t) {
        WellCase::Convex => m * (k + t) * ss + m * (k - t) * (d[0] * d[0] + d[1] * d[1]),
        WellCase::Degenerate | WellCase::Nonconvex => 2.0 * k * m * ss,
    }
}

/// `Σ_i well_value` at the given averages.
pub fn cell_energy(spec: &CompositeSpec, t: f64, avg: &PhaseAverages) -> f64 {
    well_value(spec.k1, spec.m1, t, avg.s[0], avg.d[0])
        + well_value(spec.k2, spec.m2, t, avg.s[1], avg.d[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `k1 < t < k2`, phase-1 disk inactive in the mean.
    BLike,
    /// `k1 < t < k2`, phase-1 disk saturated: `D11 = S11`.
    CLike,
    /// `t = k2`.
    ALike,
    /// `t = k1`.
    DLike,
    /// `0 ≤ t < k1`, both phases convex.
    ELike,
}

impl Regime {
    fn name(self) -> &'static str {
        match self {
            Regime::BLike => "B-like",
            Regime::CLike => "C-like",
            Regime::ALike => "A-like",
            Regime::DLike => "D-like",
            Regime::ELike => "E-like",
        }
    }
}

/// `H0(t)⁻¹ = m1/(2k1) + m2/(k2+t)`.
pub fn h0(spec: &CompositeSpec, t: f64) -> f64 {
    1.0 / (spec.m1 / (2.0 * spec.k1) + spec.m2 / (spec.k2 + t))
}

/// `H1 = H0(k1)`.
pub fn h1(spec: &CompositeSpec) -> f64 {
    h0(spec, spec.k1)
}

/// `H2 = H0(k2)`.
pub fn h2(spec: &CompositeSpec) -> f64 {
    h0(spec, spec.k2)
}

/// `H±(t)⁻¹ = m1/(k1±t) + m2/(k2±t)`.
pub fn h_plus(spec: &CompositeSpec, t: f64) -> f64 {
    1.0 / (spec.m1 / (spec.k1 + t) + spec.m2 / (spec.k2 + t))
}

pub fn h_minus(spec: &CompositeSpec, t: f64) -> f64 {
    1.0 / (spec.m1 / (spec.k1 - t) + spec.m2 / (spec.k2 - t))
}

/// `Y_E(t) = ½[H+(1+r)² + H−(1−r)²]` for `0 ≤ t < k1`.
pub fn y_e(spec: &CompositeSpec, r: f64, t: f64) -> f64 {
    0.5 * (h_plus(spec, t) * (1.0 + r).powi(2) + h_minus(spec, t) * (1.0 - r).powi(2))
}

/// `Y_B(t) = H0(t)(1+r)²/2`.
pub fn y_b(spec: &CompositeSpec, r: f64, t: f64) -> f64 {
    0.5 * h0(spec, t) * (1.0 + r).powi(2)
}

/// Phase-1 mean of the C-branch, `S11 = D11 = (k2 + rt)/(√2 k̃)`.
pub fn c_branch_s11(spec: &CompositeSpec, r: f64, t: f64) -> f64 {
    (spec.k2 + r * t) / (SQRT2 * spec.k_tilde())
}

/// `Y_C(t)`: cell energy at the C-branch averages.
pub fn y_c(spec: &CompositeSpec, r: f64, t: f64) -> f64 {
    let x = c_branch_s11(spec, r, t);
    let l = Loading { r };
    let s21 = (l.s01() - spec.m1 * x) / spec.m2;
    let d21 = (l.d01() - spec.m1 * x) / spec.m2;
    2.0 * spec.k1 * spec.m1 * x * x
        + spec.m2 * (spec.k2 + t) * s21 * s21
        + spec.m2 * (spec.k2 - t) * d21 * d21
}

/// Whether the B-branch averages respect the phase-1 disk, `D01/m1 ≤ S11^B(t)`.
pub fn b_saturated(spec: &CompositeSpec, r: f64, t: f64) -> bool {
    let l = Loading { r };
    l.d01() / spec.m1 <= l.s01() * h0(spec, t) / (2.0 * spec.k1) * (1.0 + 1e-12)
}

/// Value of `t` at which the B-branch disk becomes active: `k1·m2(1−r)/(m1·r) − k2`.
pub fn b_saturation_threshold(spec: &CompositeSpec, r: f64) -> f64 {
    spec.k1 * spec.m2 * (1.0 - r) / (spec.m1 * r) - spec.k2
}

fn in_interval(t: f64, lo: f64, hi: f64, scale: f64) -> bool {
    t >= lo - 1e-12 * scale && t <= hi + 1e-12 * scale
}

/// Closed-form `Y` and optimal averages of one regime.
pub fn closed_energy(
    spec: &CompositeSpec,
    r: f64,
    t: f64,
    regime: Regime,
) -> Result<(f64, PhaseAverages)> {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let l = Loading { r };
    let (s01, d01) = (l.s01(), l.d01());
    let mismatch = || Error::RegimeMismatch {
        regime: regime.name(),
        t,
    };
    match regime {
        Regime::BLike => {
            if !in_interval(t, k1, k2, k2) {
                return Err(mismatch());
            }
            let h = h0(spec, t);
            let avg = PhaseAverages::first_components(
                s01 * h / (2.0 * k1),
                s01 * h / (k2 + t),
                d01 / m1,
                0.0,
            );
            Ok((h * s01 * s01, avg))
        }
        Regime::CLike => {
            if !in_interval(t, k1, k2, k2) {
                return Err(mismatch());
            }
            let x = c_branch_s11(spec, r, t);
            let avg =
                PhaseAverages::first_components(x, (s01 - m1 * x) / m2, x, (d01 - m1 * x) / m2);
            Ok((y_c(spec, r, t), avg))
        }
        Regime::ALike => {
            if (t - k2).abs() > 1e-12 * k2 {
                return Err(mismatch());
            }
            let h = h2(spec);
            let (s11, s21) = (s01 * h / (2.0 * k1), s01 * h / (2.0 * k2));
            let q = d01 / s01;
            Ok((
                h * s01 * s01,
                PhaseAverages::first_components(s11, s21, q * s11, q * s21),
            ))
        }
        Regime::DLike => {
            if (t - k1).abs() > 1e-12 * k1 {
                return Err(mismatch());
            }
            let h = h1(spec);
            let avg = PhaseAverages::first_components(
                s01 * h / (2.0 * k1),
                s01 * h / (k1 + k2),
                d01 / m1,
                0.0,
            );
            Ok((h * s01 * s01, avg))
        }
        Regime::ELike => {
            if !(0.0..k1).contains(&t) {
                return Err(mismatch());
            }
            let (hp, hm) = (h_plus(spec, t), h_minus(spec, t));
            let avg = PhaseAverages::first_components(
                s01 * hp / (k1 + t),
                s01 * hp / (k2 + t),
                d01 * hm / (k1 - t),
                d01 * hm / (k2 - t),
            );
            Ok((y_e(spec, r, t), avg))
        }
    }
}

/// Closed-form `Y(r, t)` on `t ≥ 0`, choosing the branch the oracle would pick.
pub fn closed_y(spec: &CompositeSpec, r: f64, t: f64) -> f64 {
    if t < spec.k1 && WellCase::classify(spec.k1, t) == WellCase::Convex {
        y_e(spec, r, t)
    } else if t <= spec.k2 {
        if b_saturated(spec, r, t) {
            y_b(spec, r, t)
        } else {
            y_c(spec, r, t)
        }
    } else {
        y_b(spec, r, spec.k2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub y: f64,
    pub averages: PhaseAverages,
}

/// Weights of `|S|²` and `|D|²` in phase `i`, plus whether its disk constraint is live.
fn weights(k: f64, m: f64, t: f64) -> (f64, f64, bool) {
    match WellCase::classify(k, t) {
        WellCase::Convex => (m * (k + t), m * (k - t), false),
        _ => (2.0 * m * k, 0.0, true),
    }
}

/// Minimizes `½zᵀHz + gᵀz` subject to `A z ≥ b` by enumerating active sets of size ≤ dim.
/// Singular KKT systems are skipped; the best primal-feasible stationary point is returned.
fn active_set_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &[[f64; 2]],
    b: &[f64],
) -> Option<(f64, [f64; 2])> {
    let n = 2;
    let m = a.len();
    let mut best: Option<(f64, [f64; 2])> = None;
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..m {
        subsets.push(vec![i]);
        for j in i + 1..m {
            subsets.push(vec![i, j]);
        }
    }
    for w in subsets {
        let k = w.len();
        let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
        let mut rhs = DVector::<f64>::zeros(n + k);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = h[(i, j)];
            }
            rhs[i] = -g[i];
        }
        for (row, &c) in w.iter().enumerate() {
            for j in 0..n {
                kkt[(n + row, j)] = a[c][j];
                kkt[(j, n + row)] = -a[c][j];
            }
            rhs[n + row] = b[c];
        }
        let scale = kkt.amax().max(1.0);
        if kkt.determinant().abs() < 1e-14 * scale.powi((n + k) as i32) {
            continue;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let z = [sol[0], sol[1]];
        if !(z[0].is_finite() && z[1].is_finite()) {
            continue;
        }
        let feasible = a
            .iter()
            .zip(b)
            .all(|(row, bi)| row[0] * z[0] + row[1] * z[1] - bi >= -1e-11 * (1.0 + bi.abs()));
        if !feasible {
            continue;
        }
        let f = 0.5
            * (h[(0, 0)] * z[0] * z[0] + 2.0 * h[(0, 1)] * z[0] * z[1] + h[(1, 1)] * z[1] * z[1])
            + g[0] * z[0]
            + g[1] * z[1];
        if best.is_none_or(|(bf, _)| f < bf) {
            best = Some((f, z));
        }
    }
    best
}

/// Independent oracle for `Y(r, t)`: minimizes the well sum over the phase averages subject to
/// the averaging identities and, for nonconvex phases, `|D_i| ≤ |S_i|`.
///
/// The second components vanish at the optimum, so the search runs over `(S11, D11)` with the
/// phase-2 means eliminated. Each disk is split into its two sign cones, which turns the
/// problem into at most four convex QPs solved by active-set enumeration.
pub fn oracle(spec: &CompositeSpec, r: f64, t: f64) -> OracleSolution {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let l = Loading { r };
    let (s01, d01) = (l.s01(), l.d01());

    if m1 == 0.0 || m2 == 0.0 {
        return single_phase_oracle(spec, r, t);
    }

    let (cs1, cd1, nc1) = weights(k1, m1, t);
    let (cs2, cd2, nc2) = weights(k2, m2, t);
    let a = m1 / m2;
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            2.0 * (cs1 + cs2 * a * a),
            0.0,
            0.0,
            2.0 * (cd1 + cd2 * a * a),
        ],
    );
    let g = DVector::from_row_slice(&[-2.0 * cs2 * a * s01 / m2, -2.0 * cd2 * a * d01 / m2]);
    let c0 = cs2 * (s01 / m2).powi(2) + cd2 * (d01 / m2).powi(2);

    let signs1: &[f64] = if nc1 { &[1.0, -1.0] } else { &[0.0] };
    let signs2: &[f64] = if nc2 { &[1.0, -1.0] } else { &[0.0] };
    let mut best: Option<(f64, [f64; 2])> = None;
    for &p in signs1 {
        for &q in signs2 {
            let mut rows: Vec<[f64; 2]> = Vec::new();
            let mut rhs: Vec<f64> = Vec::new();
            if nc1 {
                rows.extend([[p, -1.0], [p, 1.0]]);
                rhs.extend([0.0, 0.0]);
            }
            if nc2 {
                rows.extend([[-q * a, a], [-q * a, -a]]);
                rhs.extend([-(q * s01 - d01) / m2, -(q * s01 + d01) / m2]);
            }
            if let Some(cand) = active_set_qp(&h, &g, &rows, &rhs) {
                if best.is_none_or(|(bf, _)| cand.0 < bf) {
                    best = Some(cand);
                }
            }
        }
    }
    let (f, z) = best.expect("the relaxed inner problem always has a feasible stationary face");
    let averages =
        PhaseAverages::first_components(z[0], (s01 - m1 * z[0]) / m2, z[1], (d01 - m1 * z[1]) / m2);
    OracleSolution {
        y: f + c0,
        averages,
    }
}

/// One finite phase absent: the surviving phase's means are pinned by the averaging identities.
fn single_phase_oracle(spec: &CompositeSpec, r: f64, t: f64) -> OracleSolution {
    let l = Loading { r };
    let (s01, d01) = (l.s01(), l.d01());
    let (idx, k, m) = if spec.m1 > 0.0 {
        (0, spec.k1, spec.m1)
    } else if spec.m2 > 0.0 {
        (1, spec.k2, spec.m2)
    } else {
        return OracleSolution {
            y: f64::INFINITY,
            averages: PhaseAverages::default(),
        };
    };
    let mut averages = PhaseAverages::default();
    averages.s[idx][0] = s01 / m;
    averages.d[idx][0] = d01 / m;
    let y = well_value(k, m, t, averages.s[idx], averages.d[idx]);
    OracleSolution { y, averages }
}
