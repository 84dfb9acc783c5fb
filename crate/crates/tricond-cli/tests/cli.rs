use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use tricond::bounds::{classify_region, Region};
use tricond::field::CompositeSpec;
use tricond::laminate::{parse_text, LaminateNode};

fn tricond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tricond"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn bound_example() {
    let o = tricond(&[
        "bound", "--k1", "1", "--k2", "3", "--m1", "0.1", "--m2", "0.5", "--r", "0.7",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["region"], "B");
    assert!((v["B"].as_f64().unwrap() - 6.871).abs() < 1e-3);
    assert_eq!(v["exact"], true);
    assert!(v.get("oracle_B").is_none());
}

#[test]
fn bound_with_oracle() {
    let o = tricond(&["bound", "--m1", "0.3", "--r", "0.4", "--oracle"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!(v["oracle_gap"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn bound_isotropic_small_m1_is_region_a() {
    let v = json(&tricond(&["bound", "--m1", "0.01", "--r", "1"]));
    assert!(v["region"].as_str().unwrap().starts_with('A'));
    assert_eq!(v["exact"], true);
    assert_eq!(v["k_star1"], v["k_star2"]);
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["bound", "--m1", "0.7"][..],
        &["bound", "--r", "1.5"],
        &["bound", "--k2", "0.5"],
        &["region-map", "--r-min", "0.8", "--r-max", "0.2"],
        &["region-map", "--m1-max", "0.6"],
        &["gclosure", "--steps", "0"],
        &["bound", "--bogus"],
        &["structure", "--format", "csv"],
    ] {
        let o = tricond(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn out_of_applicability_exits_4_with_inequality() {
    let o = tricond(&["structure", "--m1", "0.1", "--r", "0.4", "--region", "B"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("mu2 <= 1"), "{}", stderr(&o));
}

#[test]
fn empty_region_exits_5() {
    let o = tricond(&["gap-sweep", "--m1", "0.02"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn gap_sweep_csv() {
    let o = tricond(&["gap-sweep", "--m1", "0.2", "--m2", "0.5"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["r", "alpha_opt", "W_struct", "B", "delta_rel"]);
    assert_eq!(rows.len(), 200);
    let max = rows
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((1e-5..=1e-3).contains(&max), "{max}");
}

#[test]
fn csv_numbers_have_17_significant_digits() {
    let out = stdout(&tricond(&["region-map", "--steps", "5"]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["m1", "r", "region", "B", "t_opt"]);
    assert_eq!(rows.len(), 25);
    for row in &rows {
        for (i, field) in row.iter().enumerate() {
            if i == 2 {
                continue;
            }
            let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{field}");
            field.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn region_map_rows_match_classification() {
    let out = stdout(&tricond(&["region-map", "--k2", "2", "--steps", "8"]));
    let (_, rows) = csv_rows(&out);
    for row in rows {
        let (m1, r): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        let s = CompositeSpec::new(1.0, 2.0, m1, 0.5).unwrap();
        assert_eq!(
            classify_region(&s, r).unwrap(),
            Region::parse(&row[2]).unwrap()
        );
    }
}

#[test]
fn output_is_deterministic_across_job_counts() {
    let a = tricond(&["region-map", "--steps", "12", "--jobs", "1"]);
    let b = tricond(&["region-map", "--steps", "12", "--jobs", "3"]);
    let c = tricond(&["region-map", "--steps", "12"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let g1 = tricond(&["gclosure", "--format", "json", "--jobs", "1"]);
    let g2 = tricond(&["gclosure", "--format", "json", "--jobs", "2"]);
    assert_eq!(g1.stdout, g2.stdout);
}

#[test]
fn gclosure_region_sequence() {
    let out = stdout(&tricond(&[
        "gclosure", "--k2", "2", "--m1", "0.15", "--steps", "200",
    ]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(
        header,
        [
            "r",
            "k_star1",
            "k_star2",
            "region",
            "exact",
            "harmonic",
            "transl_k1",
            "transl_k2"
        ]
    );
    let mut seq: Vec<char> = Vec::new();
    for row in rows.iter().rev() {
        let c = row[3].chars().next().unwrap();
        if seq.last() != Some(&c) {
            seq.push(c);
        }
    }
    assert_eq!(seq, ['D', 'B', 'C', 'A']);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# reference point\nk2 = 5\nm1 = 0.1\nr = 0.7\nformat = json\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = json(&tricond(&["bound", "--config", path]));
    let flag_wins = json(&tricond(&["bound", "--config", path, "--k2", "3"]));
    let direct = json(&tricond(&[
        "bound", "--k2", "3", "--m1", "0.1", "--r", "0.7",
    ]));
    assert_eq!(flag_wins, direct);
    assert_ne!(from_file, direct);
    let defaults = json(&tricond(&["bound"]));
    let explicit = json(&tricond(&[
        "bound", "--k1", "1", "--k2", "3", "--m1", "0.2", "--m2", "0.5", "--r", "0.5",
    ]));
    assert_eq!(defaults, explicit);

    fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(tricond(&["bound", "--config", path]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let o = tricond(&["region-map", "--steps", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text, stdout(&tricond(&["region-map", "--steps", "4"])));
}

#[test]
fn structure_report_round_trips() {
    for (k2, m1, r, want_gap_zero) in [
        ("3", "0.1", "0.7", true),
        ("2", "0.15", "0.4", true),
        ("3", "0.2", "0.05", false),
    ] {
        let o = tricond(&["structure", "--k2", k2, "--m1", m1, "--r", r]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v = json(&o);
        let tree: LaminateNode = serde_json::from_value(v["structure"]["tree"].clone()).unwrap();
        assert_eq!(parse_text(v["text"].as_str().unwrap()).unwrap(), tree);
        assert_eq!(serde_json::to_value(&tree).unwrap(), v["structure"]["tree"]);
        let gap = v["relative_gap"].as_f64().unwrap();
        if want_gap_zero {
            assert!(gap.abs() < 1e-9, "m1 {m1} r {r}: {gap}");
        } else {
            assert!(gap > 0.0);
        }
        assert!(v["conditions"].as_array().unwrap().len() >= 2);
    }
}

#[test]
fn verify_passes_and_reports() {
    let o = tricond(&["verify", "--steps", "4"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().last().unwrap().contains("checks passed"));
    let csv = tricond(&["verify", "--steps", "3", "--format", "csv"]);
    let (header, rows) = csv_rows(&stdout(&csv));
    assert_eq!(
        header,
        ["check", "max_residual", "tolerance", "samples", "passed"]
    );
    assert!(rows.iter().all(|r| r[4] == "true"));
}
