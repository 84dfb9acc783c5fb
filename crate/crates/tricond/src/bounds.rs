//! The piecewise bound `B(r) = max_t (Y(r,t) − 2rt)`, in the doubled convention
//! `B = k*1 + r²·k*2`, with constructive region classification.
//!
//! `Y − 2rt` is concave on `[0, k1)` (E-branch), concave on `[k1, k2]` (C-branch left of the
//! saturation threshold, B-branch right of it) and decreasing beyond `k2`. The bound is the
//! larger of the interior E maximum and the maximum over `[k1, k2]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CompositeSpec, Loading};
use crate::optim::grid_golden_max;
use crate::translation::{self, b_saturation_threshold, closed_energy, PhaseAverages, Regime};

/// Relative tolerance on `t` for boundary ties.
pub const TIE_TOL: f64 = 1e-9;
/// Grid seeds for the E-branch maximization.
pub const E_SEEDS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    A1,
    A2,
    B,
    C,
    D1,
    D2,
    E,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::A1,
        Region::A2,
        Region::B,
        Region::C,
        Region::D1,
        Region::D2,
        Region::E,
    ];

    /// Regions where an optimal laminate attains the bound.
    pub fn attainable(self) -> bool {
        !matches!(self, Region::D2 | Region::E)
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL
            .into_iter()
            .find(|r| r.to_string().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::A1 => "A1",
            Region::A2 => "A2",
            Region::B => "B",
            Region::C => "C",
            Region::D1 => "D1",
            Region::D2 => "D2",
            Region::E => "E",
        };
        f.write_str(s)
    }
}

/// Which branch of `Y − 2rt` supplies the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Interior maximum of the E-branch on `[0, k1)`.
    EInterior,
    /// C-branch clamped at `t = k1` (phase-1 disk saturated there).
    CAtK1,
    C,
    B,
    /// `t = k1` with the B-branch saturated.
    D,
    /// `t = k2`.
    A,
    /// `r = 0`, where every `t ≥ k2` is optimal.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub r: f64,
    pub b: f64,
    pub t_opt: f64,
    pub t_cr1: f64,
    pub region: Region,
    pub branch: Branch,
    pub averages: PhaseAverages,
    /// Set when the point sits on a region boundary within tolerance.
    pub tie: bool,
    pub exact: bool,
}

fn require_two_finite_phases(spec: &CompositeSpec) -> Result<()> {
    spec.validate()?;
    if spec.m1 <= 0.0 || spec.m2 <= 0.0 {
        return Err(Error::InvalidSpec(
            "the bound needs m1 > 0 and m2 > 0".into(),
        ));
    }
    Ok(())
}

/// `B_A = H2(1+r)²/2 − 2k2r`.
pub fn b_a(spec: &CompositeSpec, r: f64) -> f64 {
    0.5 * translation::h2(spec) * (1.0 + r).powi(2) - 2.0 * spec.k2 * r
}

/// `B_D = H1(1+r)²/2 − 2k1r` (translation bound).
pub fn b_d(spec: &CompositeSpec, r: f64) -> f64 {
    0.5 * translation::h1(spec) * (1.0 + r).powi(2) - 2.0 * spec.k1 * r
}

/// `B_B = k1(1+r−2√(r·m2))²/m1 + 2k2r`.
pub fn b_b(spec: &CompositeSpec, r: f64) -> f64 {
    spec.k1 * (1.0 + r - 2.0 * (r * spec.m2).sqrt()).powi(2) / spec.m1 + 2.0 * spec.k2 * r
}

/// `B_C = ((1−m2)²k1 + m1m2k2)/m1 + k2r²/m2`.
pub fn b_c(spec: &CompositeSpec, r: f64) -> f64 {
    c_point(spec).0 + spec.k2 * r * r / spec.m2
}

/// Constant G-closure point of region C.
pub fn c_point(spec: &CompositeSpec) -> (f64, f64) {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    (((1.0 - m2).powi(2) * k1 + m1 * m2 * k2) / m1, k2 / m2)
}

/// Stationary point of the B-branch.
pub fn t_cr1(spec: &CompositeSpec, r: f64) -> f64 {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let s = r.sqrt();
    (k1 * m2.sqrt() * (1.0 + r) - 2.0 * k1 * m2 * s - k2 * m1 * s) / (m1 * s)
}

/// Stationary point of the C-branch, `m2(k1 − k̃)/(r·m1)`.
pub fn t_c(spec: &CompositeSpec, r: f64) -> f64 {
    spec.m2 * (spec.k1 - spec.k_tilde()) / (r * spec.m1)
}

/// Value of the C-branch pinned at `t = k1`.
pub fn c_at_k1(spec: &CompositeSpec, r: f64) -> f64 {
    translation::y_c(spec, r, spec.k1) - 2.0 * r * spec.k1
}

/// Right end of the E search interval.
pub fn e_upper(spec: &CompositeSpec) -> f64 {
    spec.k1 * (1.0 - 1e-9)
}

/// `max_{t ∈ [0, k1)} (Y_E − 2rt)`: returns `(t, value)`.
pub fn e_branch(spec: &CompositeSpec, r: f64) -> (f64, f64) {
    let hi = e_upper(spec);
    grid_golden_max(
        &mut |t| translation::y_e(spec, r, t) - 2.0 * r * t,
        0.0,
        hi,
        E_SEEDS,
        1e-12 * spec.k1,
    )
}

fn domain(curve: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        curve,
        detail: detail.into(),
    }
}

fn sqrt_checked(curve: &'static str, x: f64) -> Result<f64> {
    if x < 0.0 {
        Err(domain(
            curve,
            format!("square-root argument {x} is negative"),
        ))
    } else {
        Ok(x.sqrt())
    }
}

/// A/B boundary: `t_cr1 = k2`.
pub fn psi_ab(spec: &CompositeSpec) -> Result<f64> {
    let (k1, m2, kt) = (spec.k1, spec.m2, spec.k_tilde());
    let root = sqrt_checked("psi_AB", kt * kt - m2 * k1 * k1)?;
    Ok(m2 * (k1 / (kt + root)).powi(2))
}

fn psi_bd_with(spec: &CompositeSpec, a: f64, curve: &'static str) -> Result<f64> {
    let (k1, m2) = (spec.k1, spec.m2);
    let root = sqrt_checked(curve, a * a - 4.0 * m2 * k1 * k1)?;
    Ok(m2 * (2.0 * k1 / (a + root)).powi(2))
}

/// B/D boundary `t_cr1 = k1`, i.e. `m2(2k1/(a + √(a² − 4m2k1²)))²` with `a = k̃ + (m1+m2)k1`.
pub fn psi_bd(spec: &CompositeSpec) -> Result<f64> {
    psi_bd_with(
        spec,
        spec.k_tilde() + (spec.m1 + spec.m2) * spec.k1,
        "psi_BD",
    )
}

/// The B/D expression with `a = k̃ + 2m2k1`, kept for comparison; it does not satisfy
/// `t_cr1 = k1` and misses the point where B, C, D and E meet.
pub fn psi_bd_printed(spec: &CompositeSpec) -> Result<f64> {
    psi_bd_with(
        spec,
        spec.k_tilde() + 2.0 * spec.m2 * spec.k1,
        "psi_BD_printed",
    )
}

/// A/C boundary: `t_C = k2`.
pub fn psi_ac(spec: &CompositeSpec) -> f64 {
    spec.m2 / spec.m1 * (spec.k1 - spec.k_tilde()) / spec.k2
}

/// C/E boundary: `t_C = k1`.
pub fn psi_ce(spec: &CompositeSpec) -> f64 {
    spec.m2 / spec.m1 * (spec.k1 - spec.k_tilde()) / spec.k1
}

/// B/C boundary `r = m2`.
pub fn psi_bc(spec: &CompositeSpec) -> f64 {
    spec.m2
}

/// A1/A2 split: at `r = ψ_A1A2` the phase-2 sub-layer of the L(123,2) core vanishes.
pub fn psi_a1a2(spec: &CompositeSpec) -> f64 {
    (spec.k1 - spec.k_tilde()) * spec.m2 / (spec.m1 * spec.k2)
}

/// A1/B boundary, where the outer phase-2 layer of L(13,2,13,2) vanishes.
pub fn psi_a1b(spec: &CompositeSpec) -> Result<f64> {
    let (k1, m2, kt) = (spec.k1, spec.m2, spec.k_tilde());
    let root = sqrt_checked("psi_A1B", kt * kt - m2 * k1 * k1)?;
    Ok(m2 * k1 * k1 / (2.0 * kt * kt - m2 * k1 * k1 + 2.0 * kt * root))
}

/// D1/D2 split: the anisotropy at which L(13,2,1) is optimal.
pub fn psi_d1d2(spec: &CompositeSpec) -> f64 {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let k12 = k1 + k2;
    m2 * k1 * k2
        / (k12 * m1 * (k12 * (1.0 - m1) - 3.0 * m2 * k1)
            + m2 * k1 * (2.0 * k1 + k2 - 2.0 * m2 * k1))
}

/// D2/E boundary from its closed form.
pub fn phi_d2e(spec: &CompositeSpec) -> Result<f64> {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let kt = spec.k_tilde();
    let a = kt + (m1 + m2) * k1;
    let b = a * a - (k1 + k2).powi(2) * m1 - 4.0 * m2 * k1 * k1;
    let root = sqrt_checked("phi_D2E", m1 * (m1 - 1.0) * b)?;
    Ok(-(m1 * b - 2.0 * m2 * k1 * kt + a * root) / (2.0 * m2 * k1 * kt))
}

/// D2/E boundary from its defining condition `d(Y_E − 2rt)/dt = 0` at `t = k1⁻`.
///
/// With `H− ≈ (k1 − t)/m1` near `k1`, the condition is the palindromic quadratic
/// `(A − c)(1 + r²) + 2(A + c − 1)r = 0`, `A = H+'(k1)/2`, `c = 1/(2m1)`; the root with
/// `|r| ≤ 1` is returned.
pub fn phi_d2e_root(spec: &CompositeSpec) -> Result<f64> {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    let hp = translation::h_plus(spec, k1);
    let dhp = hp * hp * (m1 / (2.0 * k1).powi(2) + m2 / (k1 + k2).powi(2));
    let big_a = 0.5 * dhp;
    let c = 0.5 / m1;
    let qa = big_a - c;
    let qb = 2.0 * (big_a + c - 1.0);
    if qa == 0.0 {
        return Err(domain("phi_D2E", "degenerate quadratic"));
    }
    let disc = sqrt_checked("phi_D2E", qb * qb - 4.0 * qa * qa)?;
    let roots = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
    Ok(if roots[0].abs() <= roots[1].abs() {
        roots[0]
    } else {
        roots[1]
    })
}

/// All region boundaries for one composite; `None` where the curve does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub psi_ab: Option<f64>,
    pub psi_bd: Option<f64>,
    pub psi_bd_printed: Option<f64>,
    pub psi_ac: f64,
    pub psi_ce: f64,
    pub psi_bc: f64,
    pub psi_a1a2: f64,
    pub psi_a1b: Option<f64>,
    pub psi_d1d2: f64,
    pub phi_d2e: Option<f64>,
    pub phi_d2e_root: Option<f64>,
}

pub fn boundary_curves(spec: &CompositeSpec) -> BoundaryCurves {
    BoundaryCurves {
        psi_ab: psi_ab(spec).ok(),
        psi_bd: psi_bd(spec).ok(),
        psi_bd_printed: psi_bd_printed(spec).ok(),
        psi_ac: psi_ac(spec),
        psi_ce: psi_ce(spec),
        psi_bc: psi_bc(spec),
        psi_a1a2: psi_a1a2(spec),
        psi_a1b: psi_a1b(spec).ok(),
        psi_d1d2: psi_d1d2(spec),
        phi_d2e: phi_d2e(spec).ok(),
        phi_d2e_root: phi_d2e_root(spec).ok(),
    }
}

struct Candidate {
    branch: Branch,
    t: f64,
    value: f64,
    tie: bool,
}

/// Maximum of `Y − 2rt` over `[k1, k2]`.
fn piece_k1_k2(spec: &CompositeSpec, r: f64) -> Result<Candidate> {
    let (k1, k2) = (spec.k1, spec.k2);
    let tol = TIE_TOL * k2;
    let ts = b_saturation_threshold(spec, r).clamp(k1, k2);
    let tb = t_cr1(spec, r);
    let tc = t_c(spec, r);
    let l = Loading { r };
    let margin = |t: f64| l.s01() * translation::h0(spec, t) / (2.0 * k1) - l.d01() / spec.m1;

    let b_ok = tb > k1 + tol && tb < k2 - tol && margin(tb) > 1e-9;
    let c_ok = tc > k1 + tol && tc < k2 - tol && margin(tc) < -1e-9;
    if b_ok && c_ok {
        return Err(Error::AmbiguousRegion {
            first: Region::B,
            second: Region::C,
            r,
        });
    }

    let c_zone = ts > k1;
    let cand = if c_zone && tc < ts - tol {
        if tc <= k1 + tol {
            Candidate {
                branch: Branch::CAtK1,
                t: k1,
                value: c_at_k1(spec, r),
                tie: (tc - k1).abs() <= tol,
            }
        } else {
            Candidate {
                branch: Branch::C,
                t: tc,
                value: b_c(spec, r),
                tie: false,
            }
        }
    } else if ts >= k2 {
        // C-branch all the way to k2 and still increasing.
        Candidate {
            branch: Branch::A,
            t: k2,
            value: b_a(spec, r),
            tie: (tc - k2).abs() <= tol,
        }
    } else if tb <= k1 + tol {
        Candidate {
            branch: Branch::D,
            t: k1,
            value: b_d(spec, r),
            tie: (tb - k1).abs() <= tol,
        }
    } else if tb >= k2 {
        Candidate {
            branch: Branch::A,
            t: k2,
            value: b_a(spec, r),
            tie: tb - k2 <= tol,
        }
    } else if tb < ts {
        // Kink exactly at the saturation threshold.
        let value = translation::y_b(spec, r, ts) - 2.0 * r * ts;
        Candidate {
            branch: Branch::B,
            t: ts,
            value,
            tie: true,
        }
    } else {
        let tie = (tb - ts).abs() <= tol || (tb - k2).abs() <= tol;
        Candidate {
            branch: Branch::B,
            t: tb,
            value: b_b(spec, r),
            tie,
        }
    };
    Ok(cand)
}

fn label(spec: &CompositeSpec, r: f64, branch: Branch) -> (Region, bool) {
    match branch {
        Branch::EInterior | Branch::CAtK1 => (Region::E, false),
        Branch::C => (Region::C, false),
        Branch::B => (Region::B, false),
        Branch::D => {
            let psi = psi_d1d2(spec);
            let tie = (r - psi).abs() <= 1e-12;
            (if r >= psi { Region::D1 } else { Region::D2 }, tie)
        }
        Branch::A | Branch::Limit => {
            let psi = psi_a1a2(spec);
            let tie = (r - psi).abs() <= 1e-12;
            (if r <= psi { Region::A2 } else { Region::A1 }, tie)
        }
    }
}

fn regime_of(branch: Branch) -> Regime {
    match branch {
        Branch::EInterior => Regime::ELike,
        Branch::CAtK1 | Branch::C => Regime::CLike,
        Branch::B => Regime::BLike,
        Branch::D => Regime::DLike,
        Branch::A | Branch::Limit => Regime::ALike,
    }
}

/// `B(r)` with its optimal `t`, region and phase averages.
pub fn lower_bound(spec: &CompositeSpec, r: f64) -> Result<BoundResult> {
    require_two_finite_phases(spec)?;
    Loading::new(r)?;

    if r == 0.0 {
        return Ok(limit_at_zero(spec));
    }

    let piece = piece_k1_k2(spec, r)?;
    let (te, fe) = e_branch(spec, r);
    let e_interior = te < e_upper(spec) * (1.0 - 1e-9);
    let scale = piece.value.abs().max(1.0);

    let (chosen, mut tie) = if e_interior && fe >= piece.value - 1e-12 * scale {
        let tie = (fe - piece.value).abs() <= 1e-12 * scale;
        (
            Candidate {
                branch: Branch::EInterior,
                t: te,
                value: fe,
                tie: false,
            },
            tie,
        )
    } else {
        let tie = piece.tie;
        (piece, tie)
    };
    tie |= chosen.tie || (r - spec.m2).abs() <= 1e-12;

    let (region, split_tie) = label(spec, r, chosen.branch);
    tie |= split_tie;
    let (_, averages) = closed_energy(spec, r, chosen.t, regime_of(chosen.branch))?;
    Ok(BoundResult {
        r,
        b: chosen.value,
        t_opt: chosen.t,
        t_cr1: t_cr1(spec, r),
        region,
        branch: chosen.branch,
        averages,
        tie,
        exact: region.attainable(),
    })
}

/// At `r = 0` the bound is the harmonic mean, reached for every `t ≥ k2`. The region is the
/// `r → 0⁺` limit: A2 when `k̃ < k1`, E when `k̃ > k1`, C on the dividing line.
fn limit_at_zero(spec: &CompositeSpec) -> BoundResult {
    let d = spec.k_tilde() - spec.k1;
    let region = if d.abs() <= 1e-12 * spec.k1 {
        Region::C
    } else if d < 0.0 {
        Region::A2
    } else {
        Region::E
    };
    let (_, averages) =
        closed_energy(spec, 0.0, spec.k2, Regime::ALike).expect("t = k2 is the A regime");
    BoundResult {
        r: 0.0,
        b: spec.harmonic_mean(),
        t_opt: spec.k2,
        t_cr1: f64::INFINITY,
        region,
        branch: Branch::Limit,
        averages,
        tie: region == Region::C,
        exact: region.attainable(),
    }
}

pub fn classify_region(spec: &CompositeSpec, r: f64) -> Result<Region> {
    lower_bound(spec, r).map(|b| b.region)
}

/// Value of the branch that produced `res`, as a smooth function of `r`.
pub fn branch_value(spec: &CompositeSpec, branch: Branch, r: f64) -> f64 {
    match branch {
        Branch::EInterior => e_branch(spec, r).1,
        Branch::CAtK1 => c_at_k1(spec, r),
        Branch::C => b_c(spec, r),
        Branch::B => b_b(spec, r),
        Branch::D => b_d(spec, r),
        Branch::A | Branch::Limit => b_a(spec, r),
    }
}

/// Oracle for `B(r)`: scans `Y − 2rt` on a grid over `[0, t_max]` (with `k1`, `k2` inserted),
/// evaluating `Y` by the active-set oracle, then refines on both cells next to the best node.
pub fn brute_force_bound(spec: &CompositeSpec, r: f64, t_max: f64, n_grid: usize) -> (f64, f64) {
    let f = |t: f64| translation::oracle(spec, r, t).y - 2.0 * r * t;
    let n = n_grid.max(2);
    let mut ts: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
    ts.extend([spec.k1, spec.k2]);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let vs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut i = 0;
    for j in 1..vs.len() {
        if vs[j] > vs[i] {
            i = j;
        }
    }
    let mut best = (vs[i], ts[i]);
    let last = ts.len() - 1;
    for (a, b) in [(i.saturating_sub(1), i), (i, (i + 1).min(last))] {
        if b > a {
            let (t, v) = crate::optim::golden_min(&mut |t| -f(t), ts[a], ts[b], 1e-13 * t_max);
            if -v > best.0 {
                best = (-v, t);
            }
        }
    }
    best
}
