//! Verification campaigns: region maps, attainability sweeps, the region-E gap curve,
//! the incompatibility witness, special points and the invariant suite.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, brute_force_bound, lower_bound, Region};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Exec};
use crate::field::CompositeSpec;
use crate::gclosure::{self, gclosure_point};
use crate::laminate::{build_optimal_structure, structure_energy, structure_report, BuildOptions};

/// Inclusive grid of `n` points on `[lo, hi]` (`lo` alone when `n == 1`).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` log-spaced points on `[lo, hi]`, ending exactly at `hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n)
        .into_iter()
        .enumerate()
        .map(|(i, x)| if i + 1 == n { hi } else { x.exp() })
        .collect()
}

/// Row-major `(m1, r)` pairs: `m1` is the slow index.
pub fn plane_grid(m1s: &[f64], rs: &[f64]) -> Vec<(f64, f64)> {
    m1s.iter()
        .flat_map(|&m1| rs.iter().map(move |&r| (m1, r)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub m1: f64,
    pub r: f64,
    pub region: Region,
    pub b: f64,
    pub t_opt: f64,
}

/// Classifies every `(m1, r)` point for fixed `k1`, `k2`, `m2`.
pub fn region_map(
    k1: f64,
    k2: f64,
    m2: f64,
    points: &[(f64, f64)],
    exec: Exec,
) -> Result<Vec<RegionRecord>> {
    map_ordered(points, exec, |&(m1, r)| {
        let spec = CompositeSpec::new(k1, k2, m1, m2)?;
        let res = lower_bound(&spec, r)?;
        Ok(RegionRecord {
            m1,
            r,
            region: res.region,
            b: res.b,
            t_opt: res.t_opt,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttainRecord {
    pub m1: f64,
    pub r: f64,
    pub region: Region,
    pub b: f64,
    pub w_struct: Option<f64>,
    pub delta_rel: Option<f64>,
    /// `ok`, `skipped` or the error that stopped the construction.
    pub status: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Run the numerical L(13,2,13,1,1) search at D1 points (slow).
    pub optimize_d1: bool,
    /// Build the best L(13,2,1) at D2 and E points.
    pub include_unattained: bool,
    pub seed: u64,
}

pub fn attainability_sweep(
    k1: f64,
    k2: f64,
    m2: f64,
    points: &[(f64, f64)],
    opts: SweepOptions,
    exec: Exec,
) -> Result<Vec<AttainRecord>> {
    map_ordered(points, exec, |&(m1, r)| {
        let spec = CompositeSpec::new(k1, k2, m1, m2)?;
        let res = lower_bound(&spec, r)?;
        let mut rec = AttainRecord {
            m1,
            r,
            region: res.region,
            b: res.b,
            w_struct: None,
            delta_rel: None,
            status: "skipped".into(),
        };
        let run = match res.region {
            Region::A1 | Region::A2 | Region::B | Region::C => r > 0.0,
            Region::D1 => opts.optimize_d1 || (r - bounds::psi_d1d2(&spec)).abs() <= 1e-9,
            Region::D2 | Region::E => opts.include_unattained && r > 0.0,
        };
        if run {
            match build_optimal_structure(&spec, r, res.region, &BuildOptions::with_seed(opts.seed))
                .and_then(|s| structure_energy(&s.tree, &spec, r))
            {
                Ok(w) => {
                    rec.w_struct = Some(w);
                    rec.delta_rel = Some((w - res.b) / res.b);
                    rec.status = "ok".into();
                }
                Err(e) => rec.status = e.to_string(),
            }
        }
        Ok(rec)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub r: f64,
    pub alpha_opt: f64,
    pub w_struct: f64,
    pub b: f64,
    pub delta_rel: f64,
}

/// Right end `r0` of the region-E interval that starts at `r = 0`.
pub fn region_e_end(spec: &CompositeSpec) -> Result<f64> {
    let r0 = bounds::phi_d2e_root(spec).map_err(|_| Error::EmptyRegion)?;
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(Error::EmptyRegion);
    }
    for r in [r0 * (1.0 - 1e-6), r0 * 1e-3] {
        if bounds::classify_region(spec, r)? != Region::E {
            return Err(Error::EmptyRegion);
        }
    }
    Ok(r0)
}

/// Best L(13,2,1) against the bound at `n` log-spaced points on `[r0/1000, r0]`.
pub fn region_e_gap_curve(spec: &CompositeSpec, n: usize, exec: Exec) -> Result<Vec<GapRecord>> {
    let r0 = region_e_end(spec)?;
    let rs = logspace(r0 * 1e-3, r0, n);
    map_ordered(&rs, exec, |&r| {
        let b = lower_bound(spec, r)?.b;
        let s = build_optimal_structure(spec, r, Region::E, &BuildOptions::default())?;
        let w = structure_energy(&s.tree, spec, r)?;
        Ok(GapRecord {
            r,
            alpha_opt: s.params["alpha"],
            w_struct: w,
            b,
            delta_rel: (w - b) / b,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub r: f64,
    /// Diagonal phase fields `[e_x1, e_x2]` of phases 1 and 2 at the optimal `t`.
    pub e1: [f64; 2],
    pub e2: [f64; 2],
    /// `min_c |det(c·E1 + (1−c)·E2)|` over a grid and the analytic stationary point.
    pub min_abs_det: f64,
    /// Real roots of the quadratic `det(c)` (NaN when absent).
    pub roots: [f64; 2],
    pub roots_outside: bool,
}

/// Shows the phase-1 and phase-2 fields of the E regime cannot be joined to the zero
/// field of phase 3: no convex combination of them is singular.
pub fn incompatibility_witness(spec: &CompositeSpec, r: f64) -> Result<WitnessReport> {
    let res = lower_bound(spec, r)?;
    if res.region != Region::E || res.branch != bounds::Branch::EInterior {
        return Err(Error::OutOfApplicability {
            region: res.region,
            inequality: "r inside region E".into(),
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let field = |i: usize| {
        let (s, d) = (res.averages.s[i][0], res.averages.d[i][0]);
        [h * (s + d), h * (s - d)]
    };
    let (e1, e2) = (field(0), field(1));
    let det = |c: f64| (c * e1[0] + (1.0 - c) * e2[0]) * (c * e1[1] + (1.0 - c) * e2[1]);
    // det(c) = (a0 + a1 c)(b0 + b1 c)
    let (a0, a1) = (e2[0], e1[0] - e2[0]);
    let (b0, b1) = (e2[1], e1[1] - e2[1]);
    let root = |p: f64, q: f64| if q != 0.0 { -p / q } else { f64::NAN };
    let roots = [root(a0, a1), root(b0, b1)];
    let roots_outside = roots.iter().all(|c| !(0.0..=1.0).contains(c));
    let mut min_abs_det = (0..=1000)
        .map(|i| det(i as f64 / 1000.0).abs())
        .fold(f64::INFINITY, f64::min);
    let qa = a1 * b1;
    if qa != 0.0 {
        let c = -(a0 * b1 + a1 * b0) / (2.0 * qa);
        if (0.0..=1.0).contains(&c) {
            min_abs_det = min_abs_det.min(det(c).abs());
        }
    }
    Ok(WitnessReport {
        r,
        e1,
        e2,
        min_abs_det,
        roots,
        roots_outside,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub name: String,
    pub r: f64,
    pub m1: f64,
    /// `(curve, |ψ(m1) − r|)` for every boundary meeting at the point.
    pub residuals: Vec<(String, f64)>,
}

impl SpecialPoint {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|x| x.1).fold(0.0, f64::max)
    }
}

/// P1 (A, B, C meet), P2 (B, C, D, E meet) and P3 (A, C, E meet at `r = 0`) for the given
/// `k1`, `k2`, `m2`.
pub fn special_points(k1: f64, k2: f64, m2: f64) -> Result<[SpecialPoint; 3]> {
    let at = |m1: f64| CompositeSpec::new(k1, k2, m1, m2);
    let p1_m1 = k1 * (1.0 - m2) / (2.0 * k2);
    let p2_m1 = k1 * (1.0 - m2) / (k1 + k2);
    let p3_m1 = k1 * (1.0 - m2) / k2;
    let (s1, s2, s3) = (at(p1_m1)?, at(p2_m1)?, at(p3_m1)?);
    let res = |name: &str, v: f64, r: f64| (name.to_string(), (v - r).abs());
    Ok([
        SpecialPoint {
            name: "P1".into(),
            r: m2,
            m1: p1_m1,
            residuals: vec![
                res("psi_A1A2", bounds::psi_a1a2(&s1), m2),
                res("psi_AC", bounds::psi_ac(&s1), m2),
                res("psi_AB", bounds::psi_ab(&s1)?, m2),
                res("psi_BC", bounds::psi_bc(&s1), m2),
            ],
        },
        SpecialPoint {
            name: "P2".into(),
            r: m2,
            m1: p2_m1,
            residuals: vec![
                res("psi_BD", bounds::psi_bd(&s2)?, m2),
                res("psi_CE", bounds::psi_ce(&s2), m2),
                res("psi_BC", bounds::psi_bc(&s2), m2),
            ],
        },
        SpecialPoint {
            name: "P3".into(),
            r: 0.0,
            m1: p3_m1,
            residuals: vec![
                res("psi_AC", bounds::psi_ac(&s3), 0.0),
                res("psi_CE", bounds::psi_ce(&s3), 0.0),
            ],
        },
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl InvariantCheck {
    fn from_residuals(name: &str, tolerance: f64, residuals: Result<Vec<f64>>) -> Self {
        match residuals {
            Ok(v) => {
                let max_residual = v.iter().copied().fold(0.0, f64::max);
                let finite = v.iter().all(|x| x.is_finite());
                Self {
                    name: name.into(),
                    max_residual,
                    tolerance,
                    samples: v.len(),
                    passed: finite && max_residual <= tolerance,
                }
            }
            Err(_) => Self {
                name: name.into(),
                max_residual: f64::INFINITY,
                tolerance,
                samples: 0,
                passed: false,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub k1: f64,
    pub k2: f64,
    pub m2: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 3.0,
            m2: 0.5,
            steps: 10,
            seed: 0,
        }
    }
}

fn interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
        .collect()
}

/// Runs the invariant suite on an `steps × steps` plane around `k1`, `k2`, `m2`.
pub fn run_invariant_suite(opts: SuiteOptions, exec: Exec) -> Vec<InvariantCheck> {
    let SuiteOptions {
        k1,
        k2,
        m2,
        steps,
        seed,
    } = opts;
    let m1_max = 1.0 - m2;
    let points = plane_grid(&interior(0.0, m1_max, steps), &interior(0.0, 1.0, steps));
    let spec_at = |m1: f64| CompositeSpec::new(k1, k2, m1, m2);
    let mut out = Vec::new();

    let oracle: Result<Vec<f64>> = map_ordered(&points, exec, |&(m1, r)| {
        let spec = spec_at(m1)?;
        let b = lower_bound(&spec, r)?.b;
        let (bb, _) = brute_force_bound(&spec, r, 2.0 * k2, 200);
        Ok((bb - b).abs() / b.abs())
    })
    .into_iter()
    .collect();
    out.push(InvariantCheck::from_residuals(
        "oracle agrees with lower_bound",
        1e-7,
        oracle,
    ));

    let sweep = attainability_sweep(
        k1,
        k2,
        m2,
        &points,
        SweepOptions {
            seed,
            ..Default::default()
        },
        exec,
    );
    let attain = sweep.as_ref().map_err(Clone::clone).map(|rows| {
        rows.iter()
            .filter(|row| matches!(row.region, Region::A1 | Region::A2 | Region::B | Region::C))
            .map(|row| row.delta_rel.map_or(f64::INFINITY, f64::abs))
            .collect()
    });
    out.push(InvariantCheck::from_residuals(
        "closed-form structures attain the bound",
        1e-8,
        attain,
    ));

    let undercut = attainability_sweep(
        k1,
        k2,
        m2,
        &points,
        SweepOptions {
            include_unattained: true,
            seed,
            ..Default::default()
        },
        exec,
    )
    .map(|rows| {
        rows.iter()
            .filter_map(|row| row.delta_rel)
            .map(|d| (-d).max(0.0))
            .collect()
    });
    out.push(InvariantCheck::from_residuals(
        "no structure undercuts the bound",
        1e-10,
        undercut,
    ));

    let conservation: Result<Vec<[f64; 4]>> = map_ordered(&points, exec, |&(m1, r)| {
        let spec = spec_at(m1)?;
        let region = bounds::classify_region(&spec, r)?;
        let s = build_optimal_structure(&spec, r, region, &BuildOptions::with_seed(seed))?;
        let rep = structure_report(&spec, &s)?;
        let paths = (rep.energy - rep.energy_from_fields).abs() / rep.energy.abs();
        Ok([
            rep.fraction_residual,
            rep.conservation_residual,
            rep.det_residual,
            paths,
        ])
    })
    .into_iter()
    .filter(|x| !matches!(x, Err(Error::OutOfApplicability { .. })))
    .collect();
    for (i, (name, tol)) in [
        ("fraction accounting", 1e-10),
        ("field-average conservation", 1e-12),
        ("determinant average equals r", 1e-10),
        ("energy paths agree", 1e-11),
    ]
    .into_iter()
    .enumerate()
    {
        let col = conservation
            .as_ref()
            .map_err(Clone::clone)
            .map(|rows| rows.iter().map(|row| row[i]).collect());
        out.push(InvariantCheck::from_residuals(name, tol, col));
    }

    let gclosure: Result<Vec<f64>> = map_ordered(&points, exec, |&(m1, r)| {
        let spec = spec_at(m1)?;
        let p = gclosure_point(&spec, r)?;
        Ok(match p.region {
            Region::A1 | Region::A2 => gclosure::a_relation_residual(&spec, (p.k_star1, p.k_star2)),
            Region::D1 | Region::D2 => gclosure::d_relation_residual(&spec, (p.k_star1, p.k_star2)),
            Region::B => gclosure::b_relation_residual(&spec, r, (p.k_star1, p.k_star2)),
            _ => gclosure::envelope_residual(&spec, r)?,
        })
    })
    .into_iter()
    .collect();
    out.push(InvariantCheck::from_residuals(
        "G-closure relations",
        1e-9,
        gclosure,
    ));

    let special =
        special_points(k1, k2, m2).map(|ps| ps.iter().map(SpecialPoint::max_residual).collect());
    out.push(InvariantCheck::from_residuals(
        "special points on their curves",
        1e-9,
        special,
    ));

    let witness: Result<Vec<f64>> = points
        .iter()
        .filter_map(|&(m1, r)| {
            let spec = spec_at(m1).ok()?;
            let res = lower_bound(&spec, r).ok()?;
            (res.branch == bounds::Branch::EInterior).then(|| incompatibility_witness(&spec, r))
        })
        .map(|w| {
            w.map(|w| {
                if w.min_abs_det > 0.0 && w.roots_outside {
                    0.0
                } else {
                    1.0
                }
            })
        })
        .collect();
    out.push(InvariantCheck::from_residuals(
        "region-E fields are incompatible",
        0.0,
        witness,
    ));

    let continuity: Result<Vec<f64>> = interior(0.0, m1_max, steps)
        .iter()
        .map(|&m1| {
            let spec = spec_at(m1)?;
            let h = 1e-4;
            let rs = linspace(h, 1.0, (1.0 / h) as usize);
            let mut worst: f64 = 0.0;
            let mut prev = lower_bound(&spec, rs[0])?;
            for &r in &rs[1..] {
                let cur = lower_bound(&spec, r)?;
                if cur.region != prev.region {
                    let (mut lo, mut hi) = (prev.r, r);
                    while hi - lo > 1e-13 {
                        let mid = 0.5 * (lo + hi);
                        if lower_bound(&spec, mid)?.region == prev.region {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let (a, b) = (lower_bound(&spec, lo)?.b, lower_bound(&spec, hi)?.b);
                    worst = worst.max((a - b).abs() / b.abs());
                }
                prev = cur;
            }
            Ok(worst)
        })
        .collect();
    out.push(InvariantCheck::from_residuals(
        "bound continuous across region boundaries",
        1e-8,
        continuity,
    ));
    out
}
