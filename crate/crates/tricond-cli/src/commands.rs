use serde::Serialize;
use tricond::bounds::{brute_force_bound, classify_region, lower_bound, Region};
use tricond::exec::Exec;
use tricond::field::CompositeSpec;
use tricond::gclosure::{comparison_bounds, gclosure_curve, gclosure_point};
use tricond::laminate::{build_optimal_structure, structure_report, BuildOptions};
use tricond::verify::{self, linspace, plane_grid, SuiteOptions};

use crate::config::{Format, RunConfig};
use crate::output::{csv_string, json_string, num, opt_num};
use crate::CliError;

fn spec(cfg: &RunConfig) -> Result<CompositeSpec, CliError> {
    Ok(CompositeSpec::new(cfg.k1, cfg.k2, cfg.m1, cfg.m2)?)
}

fn exec(cfg: &RunConfig) -> Exec {
    if cfg.jobs == 1 {
        Exec::Sequential
    } else {
        Exec::available()
    }
}

fn sweep_format(cfg: &RunConfig) -> Format {
    cfg.format.unwrap_or(Format::Csv)
}

#[derive(Serialize)]
struct BoundRecord {
    region: String,
    #[serde(rename = "B")]
    b: f64,
    t_opt: f64,
    k_star1: Option<f64>,
    k_star2: Option<f64>,
    exact: bool,
    #[serde(rename = "oracle_B", skip_serializing_if = "Option::is_none")]
    oracle_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_gap: Option<f64>,
}

pub fn bound(cfg: &RunConfig) -> Result<String, CliError> {
    let s = spec(cfg)?;
    let res = lower_bound(&s, cfg.r)?;
    // The envelope needs r > 0.
    let g = if cfg.r > 0.0 {
        Some(gclosure_point(&s, cfg.r)?)
    } else {
        None
    };
    let oracle_b = cfg
        .oracle
        .then(|| brute_force_bound(&s, cfg.r, 2.0 * s.k2, 400).0);
    let rec = BoundRecord {
        region: res.region.to_string(),
        b: res.b,
        t_opt: res.t_opt,
        k_star1: g.map(|p| p.k_star1),
        k_star2: g.map(|p| p.k_star2),
        exact: res.exact && g.is_none_or(|p| p.exact),
        oracle_b,
        oracle_gap: oracle_b.map(|o| (o - res.b) / res.b.abs()),
    };
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_string(&rec),
        Format::Csv => csv_string(
            &[
                "region",
                "B",
                "t_opt",
                "k_star1",
                "k_star2",
                "exact",
                "oracle_B",
                "oracle_gap",
            ],
            [vec![
                rec.region,
                num(rec.b),
                num(rec.t_opt),
                opt_num(rec.k_star1),
                opt_num(rec.k_star2),
                rec.exact.to_string(),
                opt_num(rec.oracle_b),
                opt_num(rec.oracle_gap),
            ]],
        ),
    }
}

#[derive(Serialize)]
struct RegionRow {
    m1: f64,
    r: f64,
    region: String,
    #[serde(rename = "B")]
    b: f64,
    t_opt: f64,
}

pub fn region_map(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.check_m1_range()?;
    cfg.check_r_range()?;
    let n = cfg.steps_or(50);
    let pts = plane_grid(
        &linspace(cfg.m1_min, cfg.m1_max, n),
        &linspace(cfg.r_min, cfg.r_max, n),
    );
    let rows: Vec<RegionRow> = verify::region_map(cfg.k1, cfg.k2, cfg.m2, &pts, exec(cfg))?
        .into_iter()
        .map(|x| RegionRow {
            m1: x.m1,
            r: x.r,
            region: x.region.to_string(),
            b: x.b,
            t_opt: x.t_opt,
        })
        .collect();
    match sweep_format(cfg) {
        Format::Json => json_string(&rows),
        Format::Csv => csv_string(
            &["m1", "r", "region", "B", "t_opt"],
            rows.into_iter()
                .map(|x| vec![num(x.m1), num(x.r), x.region, num(x.b), num(x.t_opt)]),
        ),
    }
}

#[derive(Serialize)]
struct GClosureRow {
    r: f64,
    k_star1: f64,
    k_star2: f64,
    region: String,
    exact: bool,
    harmonic: f64,
    transl_k1: f64,
    transl_k2: f64,
}

pub fn gclosure(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.check_r_range()?;
    let s = spec(cfg)?;
    let rs = linspace(cfg.r_min, cfg.r_max, cfg.steps_or(50));
    let rows: Vec<GClosureRow> = gclosure_curve(&s, &rs, exec(cfg))?
        .into_iter()
        .map(|p| {
            let c = comparison_bounds(&s, p.r);
            GClosureRow {
                r: p.r,
                k_star1: p.k_star1,
                k_star2: p.k_star2,
                region: p.region.to_string(),
                exact: p.exact,
                harmonic: c.harmonic,
                transl_k1: c.translation.0,
                transl_k2: c.translation.1,
            }
        })
        .collect();
    match sweep_format(cfg) {
        Format::Json => json_string(&rows),
        Format::Csv => csv_string(
            &[
                "r",
                "k_star1",
                "k_star2",
                "region",
                "exact",
                "harmonic",
                "transl_k1",
                "transl_k2",
            ],
            rows.into_iter().map(|x| {
                vec![
                    num(x.r),
                    num(x.k_star1),
                    num(x.k_star2),
                    x.region,
                    x.exact.to_string(),
                    num(x.harmonic),
                    num(x.transl_k1),
                    num(x.transl_k2),
                ]
            }),
        ),
    }
}

pub fn structure(cfg: &RunConfig, region: Option<&str>) -> Result<String, CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Input("structure reports are JSON only".into()));
    }
    let s = spec(cfg)?;
    let region = match region {
        Some(name) => Region::parse(name)
            .ok_or_else(|| CliError::Input(format!("unknown region {name:?}")))?,
        None => classify_region(&s, cfg.r)?,
    };
    let st = build_optimal_structure(&s, cfg.r, region, &BuildOptions::with_seed(cfg.seed))?;
    json_string(&structure_report(&s, &st)?)
}

#[derive(Serialize)]
struct GapRow {
    r: f64,
    alpha_opt: f64,
    #[serde(rename = "W_struct")]
    w_struct: f64,
    #[serde(rename = "B")]
    b: f64,
    delta_rel: f64,
}

pub fn gap_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.check_steps()?;
    let s = spec(cfg)?;
    let rows: Vec<GapRow> = verify::region_e_gap_curve(&s, cfg.steps_or(200), exec(cfg))?
        .into_iter()
        .map(|x| GapRow {
            r: x.r,
            alpha_opt: x.alpha_opt,
            w_struct: x.w_struct,
            b: x.b,
            delta_rel: x.delta_rel,
        })
        .collect();
    match sweep_format(cfg) {
        Format::Json => json_string(&rows),
        Format::Csv => csv_string(
            &["r", "alpha_opt", "W_struct", "B", "delta_rel"],
            rows.into_iter().map(|x| {
                vec![
                    num(x.r),
                    num(x.alpha_opt),
                    num(x.w_struct),
                    num(x.b),
                    num(x.delta_rel),
                ]
            }),
        ),
    }
}

/// Returns the rendered summary and whether every check passed.
pub fn verify(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    cfg.check_steps()?;
    if !(cfg.k1 > 0.0 && cfg.k2 > cfg.k1 && cfg.m2 > 0.0 && cfg.m2 < 1.0) {
        return Err(CliError::Input(format!(
            "need 0 < k1 < k2 and 0 < m2 < 1 (got k1 = {}, k2 = {}, m2 = {})",
            cfg.k1, cfg.k2, cfg.m2
        )));
    }
    let opts = SuiteOptions {
        k1: cfg.k1,
        k2: cfg.k2,
        m2: cfg.m2,
        steps: cfg.steps_or(10),
        seed: cfg.seed,
    };
    let checks = verify::run_invariant_suite(opts, exec(cfg));
    let ok = checks.iter().all(|c| c.passed);
    let text = match cfg.format {
        Some(Format::Json) => json_string(&checks)?,
        Some(Format::Csv) => csv_string(
            &["check", "max_residual", "tolerance", "samples", "passed"],
            checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    num(c.max_residual),
                    num(c.tolerance),
                    c.samples.to_string(),
                    c.passed.to_string(),
                ]
            }),
        )?,
        None => {
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            let mut s = String::new();
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                s += &format!(
                    "{status}  {:width$}  max {:.3e}  tol {:.0e}  n {}\n",
                    c.name, c.max_residual, c.tolerance, c.samples
                );
            }
            s += &format!(
                "{} of {} checks passed\n",
                checks.iter().filter(|c| c.passed).count(),
                checks.len()
            );
            s
        }
    };
    Ok((text, ok))
}
