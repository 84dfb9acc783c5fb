//! Field algebra shared by every other module.
//!
//! A 2×2 gradient field is written in the orthonormal basis
//! `a1 = I/√2`, `a2 = R/√2` (rotation), `a3 = diag(1,-1)/√2`, `a4 = offdiag(1,1)/√2`,
//! so that `E = s1·a1 + s2·a2 + d1·a3 + d2·a4` and `det E = (s1²+s2²−d1²−d2²)/2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Tolerance on `m1 + m2 + m3 = 1`.
pub const FRACTION_SUM_TOL: f64 = 1e-12;

pub type Mat2 = [[f64; 2]; 2];

/// Phase label. Phase 3 is the superconductor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Material {
    One,
    Two,
    Three,
}

impl Material {
    pub const ALL: [Material; 3] = [Material::One, Material::Two, Material::Three];

    pub fn index(self) -> usize {
        match self {
            Material::One => 0,
            Material::Two => 1,
            Material::Three => 2,
        }
    }
}

impl From<Material> for u8 {
    fn from(m: Material) -> u8 {
        m.index() as u8 + 1
    }
}

impl TryFrom<u8> for Material {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Material::One),
            2 => Ok(Material::Two),
            3 => Ok(Material::Three),
            _ => Err(format!("material id {v} is not 1, 2 or 3")),
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Three-phase composite: finite `k1 < k2`, superconducting phase 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpec {
    pub k1: f64,
    pub k2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl CompositeSpec {
    /// Builds a spec with `m3 = 1 − m1 − m2`.
    pub fn new(k1: f64, k2: f64, m1: f64, m2: f64) -> Result<Self> {
        let mut m3 = 1.0 - m1 - m2;
        if m3 < 0.0 && m3 > -FRACTION_SUM_TOL {
            m3 = 0.0;
        }
        Self::with_fractions(k1, k2, m1, m2, m3)
    }

    pub fn with_fractions(k1: f64, k2: f64, m1: f64, m2: f64, m3: f64) -> Result<Self> {
        let spec = Self { k1, k2, m1, m2, m3 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { k1, k2, m1, m2, m3 } = *self;
        for (name, v) in [("k1", k1), ("k2", k2), ("m1", m1), ("m2", m2), ("m3", m3)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} = {v} is not finite")));
            }
        }
        if k1 <= 0.0 {
            return Err(Error::InvalidSpec(format!("k1 = {k1} must be positive")));
        }
        if k2 <= k1 {
            return Err(Error::InvalidSpec(format!(
                "k2 = {k2} must exceed k1 = {k1}"
            )));
        }
        for (name, v) in [("m1", m1), ("m2", m2), ("m3", m3)] {
            if v < 0.0 {
                return Err(Error::InvalidSpec(format!("{name} = {v} is negative")));
            }
        }
        let sum = m1 + m2 + m3;
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::InvalidSpec(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// `k̃ = m1·k2 + m2·k1`.
    pub fn k_tilde(&self) -> f64 {
        self.m1 * self.k2 + self.m2 * self.k1
    }

    /// Wiener lower bound `(m1/k1 + m2/k2)⁻¹`; phase 3 adds no resistance.
    pub fn harmonic_mean(&self) -> f64 {
        1.0 / (self.m1 / self.k1 + self.m2 / self.k2)
    }

    pub fn conductivity(&self, m: Material) -> ExtReal {
        match m {
            Material::One => ExtReal::Finite(self.k1),
            Material::Two => ExtReal::Finite(self.k2),
            Material::Three => ExtReal::Infinite,
        }
    }

    pub fn fraction(&self, m: Material) -> f64 {
        match m {
            Material::One => self.m1,
            Material::Two => self.m2,
            Material::Three => self.m3,
        }
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.m1, self.m2, self.m3]
    }
}

/// External loading `E0 = diag(1, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    pub r: f64,
}

impl Loading {
    pub fn new(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidLoading(r));
        }
        Ok(Self { r })
    }

    pub fn e0(&self) -> [f64; 2] {
        [1.0, self.r]
    }

    pub fn s01(&self) -> f64 {
        (1.0 + self.r) / SQRT2
    }

    pub fn d01(&self) -> f64 {
        (1.0 - self.r) / SQRT2
    }

    pub fn components(&self) -> FieldComponents {
        FieldComponents::from_diagonal(1.0, self.r)
    }
}

/// Coefficients of a 2×2 field in the orthonormal basis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldComponents {
    pub s1: f64,
    pub s2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl FieldComponents {
    pub fn decompose(e: Mat2) -> Self {
        Self {
            s1: (e[0][0] + e[1][1]) / SQRT2,
            d1: (e[0][0] - e[1][1]) / SQRT2,
            s2: (e[0][1] - e[1][0]) / SQRT2,
            d2: (e[0][1] + e[1][0]) / SQRT2,
        }
    }

    pub fn from_diagonal(a: f64, b: f64) -> Self {
        Self::decompose([[a, 0.0], [0.0, b]])
    }

    pub fn reconstruct(&self) -> Mat2 {
        let Self { s1, s2, d1, d2 } = *self;
        [
            [(s1 + d1) / SQRT2, (s2 + d2) / SQRT2],
            [(d2 - s2) / SQRT2, (s1 - d1) / SQRT2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let Self { s1, s2, d1, d2 } = *self;
        (s1 * s1 + s2 * s2 - d1 * d1 - d2 * d2) / 2.0
    }

    /// `Tr(E Eᵀ)`.
    pub fn norm_sq(&self) -> f64 {
        let Self { s1, s2, d1, d2 } = *self;
        s1 * s1 + s2 * s2 + d1 * d1 + d2 * d2
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sq() == 0.0
    }
}

/// The basis `a1..a4`, in the order (s1, s2, d1, d2).
pub fn basis() -> [Mat2; 4] {
    let h = 1.0 / SQRT2;
    [
        [[h, 0.0], [0.0, h]],
        [[0.0, h], [-h, 0.0]],
        [[h, 0.0], [0.0, -h]],
        [[0.0, h], [h, 0.0]],
    ]
}

pub fn mat_det(e: Mat2) -> f64 {
    e[0][0] * e[1][1] - e[0][1] * e[1][0]
}

/// Energy density `(k/2)·Tr(E Eᵀ)`; a superconductor only admits the zero field.
pub fn energy_density(k: ExtReal, c: &FieldComponents) -> Result<f64> {
    match k {
        ExtReal::Finite(k) => Ok(0.5 * k * c.norm_sq()),
        ExtReal::Infinite if c.is_zero() => Ok(0.0),
        ExtReal::Infinite => Err(Error::InfiniteEnergy),
    }
}

/// Value on `(0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// IEEE view, `+∞` for `Infinite`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `1/x` with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            ExtReal::Finite(v) => 1.0 / v,
            ExtReal::Infinite => 0.0,
        }
    }

    /// Weighted harmonic mean; zero total resistivity gives `∞`.
    pub fn harmonic_mean(items: impl IntoIterator<Item = (ExtReal, f64)>) -> ExtReal {
        let s: f64 = items.into_iter().map(|(x, w)| w * x.recip()).sum();
        if s == 0.0 {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(1.0 / s)
        }
    }

    /// Weighted arithmetic mean; any `∞` with positive weight gives `∞`.
    pub fn arithmetic_mean(items: impl IntoIterator<Item = (ExtReal, f64)>) -> ExtReal {
        let mut s = 0.0;
        for (x, w) in items {
            match x {
                ExtReal::Infinite if w > 0.0 => return ExtReal::Infinite,
                ExtReal::Infinite => {}
                ExtReal::Finite(v) => s += w * v,
            }
        }
        ExtReal::Finite(s)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v:?}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtReal::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Effective tensor with eigenvectors along `x1`, `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedConductivity {
    pub l1: ExtReal,
    pub l2: ExtReal,
}

impl ExtendedConductivity {
    pub fn isotropic(k: ExtReal) -> Self {
        Self { l1: k, l2: k }
    }

    pub fn axis(&self, axis: usize) -> ExtReal {
        if axis == 0 {
            self.l1
        } else {
            self.l2
        }
    }

    /// `Tr(K·E0·E0ᵀ) = λ1 + r²λ2`, which is the doubled energy under `diag(1, r)`.
    pub fn energy(&self, r: f64) -> Result<f64> {
        let l1 = self
            .l1
            .finite()
            .ok_or(Error::IncompatibleLoading { axis: 1 })?;
        let l2 = match self.l2 {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite if r == 0.0 => 0.0,
            ExtReal::Infinite => return Err(Error::IncompatibleLoading { axis: 2 }),
        };
        Ok(l1 + r * r * l2)
    }
}
