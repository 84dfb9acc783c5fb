//! Lower boundary of the G-closure from the envelope of the bound family:
//! `k*1 = B − (r/2)·B'`, `k*2 = B'/(2r)`.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, lower_bound, Branch, Region};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Exec};
use crate::field::CompositeSpec;
use crate::translation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GClosurePoint {
    pub r: f64,
    pub k_star1: f64,
    pub k_star2: f64,
    pub region: Region,
    /// False where the point comes from a finite-difference derivative or an unattained bound.
    pub exact: bool,
}

/// `K_A(r) = ½(1+r)H2 − r·k2`.
pub fn k_a(spec: &CompositeSpec, r: f64) -> f64 {
    0.5 * (1.0 + r) * translation::h2(spec) - r * spec.k2
}

/// `K_D(r) = ½(1+r)H1 − r·k1`.
pub fn k_d(spec: &CompositeSpec, r: f64) -> f64 {
    0.5 * (1.0 + r) * translation::h1(spec) - r * spec.k1
}

/// `K(r) = k1(1 − √(r·m2))(1 + r − 2√(r·m2))/m1 + r·k2`.
pub fn k_b(spec: &CompositeSpec, r: f64) -> f64 {
    let q = (r * spec.m2).sqrt();
    spec.k1 * (1.0 - q) * (1.0 + r - 2.0 * q) / spec.m1 + r * spec.k2
}

/// Central-difference step for `dB/dr`.
pub fn fd_step(r: f64) -> f64 {
    1e-6 * r.max(1e-3)
}

/// `dB/dr` by central differences on the branch that is active at `r`.
pub fn branch_derivative_fd(spec: &CompositeSpec, branch: Branch, r: f64) -> f64 {
    let h = fd_step(r);
    (bounds::branch_value(spec, branch, r + h) - bounds::branch_value(spec, branch, r - h))
        / (2.0 * h)
}

/// Closed-form `dB/dr` where the branch has one; `None` for the numerical E branches.
pub fn branch_derivative(spec: &CompositeSpec, branch: Branch, r: f64) -> Option<f64> {
    let CompositeSpec { k1, k2, m1, m2, .. } = *spec;
    match branch {
        Branch::B => {
            let q = (r * m2).sqrt();
            Some(2.0 * k1 * (1.0 + r - 2.0 * q) * (1.0 - (m2 / r).sqrt()) / m1 + 2.0 * k2)
        }
        Branch::C => Some(2.0 * k2 * r / m2),
        Branch::A | Branch::Limit => Some(translation::h2(spec) * (1.0 + r) - 2.0 * k2),
        Branch::D => Some(translation::h1(spec) * (1.0 + r) - 2.0 * k1),
        Branch::EInterior | Branch::CAtK1 => None,
    }
}

/// Applies the envelope formulas to a bound value and its derivative.
pub fn envelope(b: f64, db: f64, r: f64) -> (f64, f64) {
    (b - 0.5 * r * db, db / (2.0 * r))
}

pub fn gclosure_point(spec: &CompositeSpec, r: f64) -> Result<GClosurePoint> {
    if r <= 0.0 {
        return Err(Error::Domain {
            curve: "gclosure",
            detail: "r must be positive (use r ≥ 1e-6)".into(),
        });
    }
    let res = lower_bound(spec, r)?;
    let (k_star1, k_star2, closed) = match res.branch {
        Branch::B => (k_b(spec, r), k_b(spec, 1.0 / r), true),
        Branch::C => {
            let (a, b) = bounds::c_point(spec);
            (a, b, true)
        }
        Branch::A | Branch::Limit => (k_a(spec, r), k_a(spec, 1.0 / r), true),
        Branch::D => (k_d(spec, r), k_d(spec, 1.0 / r), true),
        Branch::EInterior | Branch::CAtK1 => {
            let db = branch_derivative_fd(spec, res.branch, r);
            let (a, b) = envelope(res.b, db, r);
            (a, b, false)
        }
    };
    Ok(GClosurePoint {
        r,
        k_star1,
        k_star2,
        region: res.region,
        exact: closed && res.exact,
    })
}

/// G-closure points along `r_grid`, in input order.
pub fn gclosure_curve(
    spec: &CompositeSpec,
    r_grid: &[f64],
    exec: Exec,
) -> Result<Vec<GClosurePoint>> {
    map_ordered(r_grid, exec, |&r| gclosure_point(spec, r))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBounds {
    pub harmonic: f64,
    /// Translation-bound point `(K_D(r), K_D(1/r))`, regardless of where it is optimal.
    pub translation: (f64, f64),
}

pub fn comparison_bounds(spec: &CompositeSpec, r: f64) -> ComparisonBounds {
    ComparisonBounds {
        harmonic: spec.harmonic_mean(),
        translation: (k_d(spec, r), k_d(spec, 1.0 / r)),
    }
}

/// `|k*1 + r²k*2 − B| / B`.
pub fn envelope_residual(spec: &CompositeSpec, r: f64) -> Result<f64> {
    let p = gclosure_point(spec, r)?;
    let b = lower_bound(spec, r)?.b;
    Ok((p.k_star1 + r * r * p.k_star2 - b).abs() / b.abs())
}

/// Residual of `1/(k*1 − κ) + 1/(k*2 − κ) = 2/(H − 2κ)`, relative to the right side.
pub fn hyperbola_residual(k_star: (f64, f64), kappa: f64, h: f64) -> f64 {
    let lhs = 1.0 / (k_star.0 - kappa) + 1.0 / (k_star.1 - kappa);
    let rhs = 2.0 / (h - 2.0 * kappa);
    (lhs - rhs).abs() / rhs.abs()
}

/// Region-A relation with `κ = k2`, `H = H2`.
pub fn a_relation_residual(spec: &CompositeSpec, k_star: (f64, f64)) -> f64 {
    hyperbola_residual(k_star, spec.k2, translation::h2(spec))
}

/// Translation-bound relation with `κ = k1`, `H = H1`.
pub fn d_relation_residual(spec: &CompositeSpec, k_star: (f64, f64)) -> f64 {
    hyperbola_residual(k_star, spec.k1, translation::h1(spec))
}

/// Region-B relation at a single `r`, with `κ = t_cr1(r)` and `H = H0(t_cr1)`.
pub fn b_relation_residual(spec: &CompositeSpec, r: f64, k_star: (f64, f64)) -> f64 {
    let t = bounds::t_cr1(spec, r);
    hyperbola_residual(k_star, t, translation::h0(spec, t))
}
