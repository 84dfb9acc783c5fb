//! Axis-aligned hierarchical laminates: effective tensors, phase fields and energies.
//!
//! Every layering has its normal along `x1` or `x2`. Along the normal the effective
//! eigenvalue is the weighted harmonic mean of the children, along the tangent the
//! arithmetic mean; `∞` is carried exactly.

mod build;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::{
    build_optimal_structure, check_optimality_conditions, l1321, l1321311,
    optimize_structure_params, structure_report, BuildOptions, ConditionCheck, Optimized,
    Structure, StructureReport, Topology,
};
pub use text::{parse_text, to_text};

use crate::error::{Error, Result};
use crate::field::{CompositeSpec, ExtReal, ExtendedConductivity, Material};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x1")]
    X1,
    #[serde(rename = "x2")]
    X2,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X1 => Axis::X2,
            Axis::X2 => Axis::X1,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X1 => "x1",
            Axis::X2 => "x2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LaminateNode {
    Leaf { material: Material },
    Layering { normal: Axis, children: Vec<Layer> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub fraction: f64,
    pub node: LaminateNode,
}

impl LaminateNode {
    pub fn leaf(m: Material) -> Self {
        LaminateNode::Leaf { material: m }
    }

    /// Layering that drops children with negligible fraction, renormalizes the rest and
    /// collapses to the only child when one remains.
    pub fn layering(normal: Axis, children: Vec<(f64, LaminateNode)>) -> Self {
        let kept: Vec<(f64, LaminateNode)> =
            children.into_iter().filter(|(f, _)| *f > 1e-14).collect();
        let total: f64 = kept.iter().map(|(f, _)| f).sum();
        if kept.len() == 1 {
            return kept.into_iter().next().map(|(_, n)| n).expect("one child");
        }
        let children = kept
            .into_iter()
            .map(|(f, node)| Layer {
                fraction: f / total,
                node,
            })
            .collect();
        LaminateNode::Layering { normal, children }
    }

    /// Two-material laminate `L(ab)` with `fa` of material `a`.
    pub fn pair(normal: Axis, a: Material, fa: f64, b: Material) -> Self {
        Self::layering(normal, vec![(fa, Self::leaf(a)), (1.0 - fa, Self::leaf(b))])
    }

    pub fn depth(&self) -> usize {
        match self {
            LaminateNode::Leaf { .. } => 0,
            LaminateNode::Layering { children, .. } => {
                1 + children.iter().map(|c| c.node.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Checks fractions lie in `(0, 1]` and sum to one at every layering.
    pub fn validate(&self) -> Result<()> {
        if let LaminateNode::Layering { children, .. } = self {
            if children.is_empty() {
                return Err(Error::Parse("layering without children".into()));
            }
            let mut sum = 0.0;
            for c in children {
                if !(c.fraction > 0.0 && c.fraction <= 1.0) {
                    return Err(Error::Parse(format!(
                        "child fraction {} outside (0, 1]",
                        c.fraction
                    )));
                }
                sum += c.fraction;
                c.node.validate()?;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Parse(format!("child fractions sum to {sum}")));
            }
        }
        Ok(())
    }

    /// Total volume fraction of each material.
    pub fn aggregate_fractions(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        self.accumulate(1.0, &mut acc);
        acc
    }

    fn accumulate(&self, w: f64, acc: &mut [f64; 3]) {
        match self {
            LaminateNode::Leaf { material } => acc[material.index()] += w,
            LaminateNode::Layering { children, .. } => {
                for c in children {
                    c.node.accumulate(w * c.fraction, acc);
                }
            }
        }
    }
}

pub fn effective_tensor(node: &LaminateNode, spec: &CompositeSpec) -> ExtendedConductivity {
    match node {
        LaminateNode::Leaf { material } => {
            ExtendedConductivity::isotropic(spec.conductivity(*material))
        }
        LaminateNode::Layering { normal, children } => {
            let ts: Vec<(ExtendedConductivity, f64)> = children
                .iter()
                .map(|c| (effective_tensor(&c.node, spec), c.fraction))
                .collect();
            let n = normal.index();
            let across = ExtReal::harmonic_mean(ts.iter().map(|(t, f)| (t.axis(n), *f)));
            let along = ExtReal::arithmetic_mean(ts.iter().map(|(t, f)| (t.axis(1 - n), *f)));
            if n == 0 {
                ExtendedConductivity {
                    l1: across,
                    l2: along,
                }
            } else {
                ExtendedConductivity {
                    l1: along,
                    l2: across,
                }
            }
        }
    }
}

/// Constant field in one leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseField {
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub material: Material,
    /// Absolute volume fraction of the leaf.
    pub volume: f64,
    /// Diagonal field `[e_x1, e_x2]`.
    pub field: [f64; 2],
}

/// Leaf fields under the average diagonal field `e_avg`.
///
/// Top-down: the tangential component passes to every child; the normal current
/// `j = e_n / Σ(c_i/λ_i)` is shared and each child gets `j/λ_i` (zero for `λ_i = ∞`).
pub fn phase_fields(
    node: &LaminateNode,
    spec: &CompositeSpec,
    e_avg: [f64; 2],
) -> Result<Vec<PhaseField>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    descend(node, spec, e_avg, 1.0, &mut path, &mut out)?;
    Ok(out)
}

fn child_fields(
    children: &[Layer],
    normal: Axis,
    spec: &CompositeSpec,
    e: [f64; 2],
) -> Result<Vec<[f64; 2]>> {
    let n = normal.index();
    let o = 1 - n;
    let lam: Vec<ExtReal> = children
        .iter()
        .map(|c| effective_tensor(&c.node, spec).axis(n))
        .collect();
    let inv: f64 = children
        .iter()
        .zip(&lam)
        .map(|(c, l)| c.fraction * l.recip())
        .sum();
    let j = if inv > 0.0 {
        e[n] / inv
    } else if e[n] == 0.0 {
        0.0
    } else {
        return Err(Error::IncompatibleLoading { axis: n + 1 });
    };
    Ok(lam
        .iter()
        .map(|l| {
            let mut f = [0.0; 2];
            f[o] = e[o];
            f[n] = match l {
                ExtReal::Finite(v) => j / v,
                ExtReal::Infinite => 0.0,
            };
            f
        })
        .collect())
}

fn descend(
    node: &LaminateNode,
    spec: &CompositeSpec,
    e: [f64; 2],
    vol: f64,
    path: &mut Vec<usize>,
    out: &mut Vec<PhaseField>,
) -> Result<()> {
    match node {
        LaminateNode::Leaf { material } => {
            if *material == Material::Three && (e[0] != 0.0 || e[1] != 0.0) {
                let axis = if e[0] != 0.0 { 1 } else { 2 };
                return Err(Error::IncompatibleLoading { axis });
            }
            out.push(PhaseField {
                path: path.clone(),
                material: *material,
                volume: vol,
                field: e,
            });
            Ok(())
        }
        LaminateNode::Layering { normal, children } => {
            let fields = child_fields(children, *normal, spec, e)?;
            for (i, (c, f)) in children.iter().zip(fields).enumerate() {
                path.push(i);
                descend(&c.node, spec, f, vol * c.fraction, path, out)?;
                path.pop();
            }
            Ok(())
        }
    }
}

/// Largest gap between a layering's field and the fraction-weighted mean of its children's.
pub fn field_conservation_residual(
    node: &LaminateNode,
    spec: &CompositeSpec,
    e_avg: [f64; 2],
) -> Result<f64> {
    match node {
        LaminateNode::Leaf { .. } => Ok(0.0),
        LaminateNode::Layering { normal, children } => {
            let fields = child_fields(children, *normal, spec, e_avg)?;
            let mut mean = [0.0; 2];
            for (c, f) in children.iter().zip(&fields) {
                mean[0] += c.fraction * f[0];
                mean[1] += c.fraction * f[1];
            }
            let mut worst = (mean[0] - e_avg[0]).abs().max((mean[1] - e_avg[1]).abs());
            for (c, f) in children.iter().zip(fields) {
                worst = worst.max(field_conservation_residual(&c.node, spec, f)?);
            }
            Ok(worst)
        }
    }
}

/// `λ1 + r²λ2` from the effective tensor.
pub fn structure_energy(node: &LaminateNode, spec: &CompositeSpec, r: f64) -> Result<f64> {
    effective_tensor(node, spec).energy(r)
}

/// `Σ_leaves volume·k·|e|²`, the second evaluation path of the same energy.
pub fn field_energy(fields: &[PhaseField], spec: &CompositeSpec) -> f64 {
    fields
        .iter()
        .filter_map(|p| {
            spec.conductivity(p.material)
                .finite()
                .map(|k| p.volume * k * (p.field[0].powi(2) + p.field[1].powi(2)))
        })
        .sum()
}

/// Volume average of `det e` over all leaves.
pub fn det_average(fields: &[PhaseField]) -> f64 {
    fields
        .iter()
        .map(|p| p.volume * p.field[0] * p.field[1])
        .sum()
}
