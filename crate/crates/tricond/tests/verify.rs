use tricond::bounds::{lower_bound, Region};
use tricond::exec::Exec;
use tricond::field::{CompositeSpec, Material};
use tricond::laminate::{structure_energy, Axis, LaminateNode};
use tricond::verify::*;
use tricond::Error;

fn spec(k2: f64, m1: f64, m2: f64) -> CompositeSpec {
    CompositeSpec::new(1.0, k2, m1, m2).unwrap()
}

#[test]
fn grids_end_exactly() {
    let l = linspace(0.0, 1.0, 7);
    assert_eq!((l[0], l[6]), (0.0, 1.0));
    let g = logspace(1e-4, 0.3, 50);
    assert!((g[0] - 1e-4).abs() < 1e-18 && g[49] == 0.3);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(
        plane_grid(&[0.1, 0.2], &[0.5, 1.0]),
        vec![(0.1, 0.5), (0.1, 1.0), (0.2, 0.5), (0.2, 1.0)]
    );
}

#[test]
fn region_map_is_deterministic_across_exec() {
    let pts = plane_grid(&linspace(0.02, 0.48, 12), &linspace(0.01, 1.0, 12));
    let a = region_map(1.0, 3.0, 0.5, &pts, Exec::Sequential).unwrap();
    let b = region_map(1.0, 3.0, 0.5, &pts, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn region_c_rows_are_constant_in_the_gclosure() {
    let s = spec(2.0, 0.15, 0.5);
    let pts: Vec<_> = linspace(0.01, 1.0, 100)
        .into_iter()
        .map(|r| (0.15, r))
        .collect();
    let rows = region_map(1.0, 2.0, 0.5, &pts, Exec::Sequential).unwrap();
    let c: Vec<_> = rows.iter().filter(|x| x.region == Region::C).collect();
    assert!(c.len() > 5);
    for row in c {
        assert!((row.b - (0.4 / 0.15 + 4.0 * row.r * row.r)).abs() < 1e-12);
        assert_eq!(lower_bound(&s, row.r).unwrap().region, Region::C);
    }
}

#[test]
fn attainability_on_a_coarse_plane() {
    let pts = plane_grid(&linspace(0.02, 0.48, 10), &linspace(0.05, 1.0, 10));
    let rows =
        attainability_sweep(1.0, 3.0, 0.5, &pts, SweepOptions::default(), Exec::Parallel).unwrap();
    let mut checked = 0;
    for row in &rows {
        if matches!(row.region, Region::A1 | Region::A2 | Region::B | Region::C) {
            assert_eq!(row.status, "ok", "{row:?}");
            assert!(row.delta_rel.unwrap().abs() < 1e-8, "{row:?}");
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn region_e_gap_curve_shape() {
    let s = spec(3.0, 0.2, 0.5);
    let rows = region_e_gap_curve(&s, 40, Exec::Parallel).unwrap();
    assert_eq!(rows.len(), 40);
    let max = rows.iter().map(|x| x.delta_rel).fold(0.0, f64::max);
    assert!((1e-5..=1e-3).contains(&max), "max gap {max}");
    assert!(rows[0].delta_rel <= 1e-6, "{}", rows[0].delta_rel);
    assert!(rows
        .iter()
        .all(|x| x.delta_rel > -1e-12 && (0.0..=1.0).contains(&x.alpha_opt)));
    assert_eq!(rows, region_e_gap_curve(&s, 40, Exec::Sequential).unwrap());
}

#[test]
fn region_e_can_be_empty() {
    assert_eq!(region_e_end(&spec(3.0, 0.02, 0.5)), Err(Error::EmptyRegion));
}

#[test]
fn witness_in_region_e() {
    let s = spec(3.0, 0.2, 0.5);
    let w = incompatibility_witness(&s, 0.05).unwrap();
    assert!(w.min_abs_det > 0.0 && w.roots_outside, "{w:?}");
    assert!(matches!(
        incompatibility_witness(&s, 0.9),
        Err(Error::OutOfApplicability { .. })
    ));
}

#[test]
fn special_points_of_the_reference_plane() {
    let pts = special_points(1.0, 3.0, 0.5).unwrap();
    let want = [(0.5, 1.0 / 12.0), (0.5, 0.125), (0.0, 1.0 / 6.0)];
    for (p, (r, m1)) in pts.iter().zip(want) {
        assert_eq!(p.r, r);
        assert!((p.m1 - m1).abs() < 1e-15, "{}", p.name);
        assert!(p.max_residual() < 1e-9, "{p:?}");
    }
}

#[test]
fn p3_bound_is_a_simple_laminate() {
    // At r = 0 the bound is the harmonic mean of phases 1 and 2, reached by layering
    // every phase normal to x1.
    let m1 = 1.0 / 6.0;
    let s = spec(3.0, m1, 0.5);
    let tree = LaminateNode::Layering {
        normal: Axis::X1,
        children: vec![
            tricond::laminate::Layer {
                fraction: m1,
                node: LaminateNode::leaf(Material::One),
            },
            tricond::laminate::Layer {
                fraction: 0.5,
                node: LaminateNode::leaf(Material::Two),
            },
            tricond::laminate::Layer {
                fraction: 1.0 - m1 - 0.5,
                node: LaminateNode::leaf(Material::Three),
            },
        ],
    };
    let w = structure_energy(&tree, &s, 0.0).unwrap();
    assert!((w - lower_bound(&s, 0.0).unwrap().b).abs() < 1e-14);
}

#[test]
fn invariant_suite_passes() {
    let checks = run_invariant_suite(
        SuiteOptions {
            steps: 6,
            ..Default::default()
        },
        Exec::Parallel,
    );
    assert!(checks.len() >= 10);
    for c in &checks {
        assert!(c.passed, "{c:?}");
    }
}

#[test]
fn un_doubled_bound_is_caught_by_attainability() {
    let s = spec(3.0, 0.1, 0.5);
    let st = tricond::laminate::build_optimal_structure(&s, 0.7, Region::B, &Default::default())
        .unwrap();
    let w = structure_energy(&st.tree, &s, 0.7).unwrap();
    let halved = 0.5 * tricond::bounds::b_b(&s, 0.7);
    assert!((w - halved).abs() / halved > 1e-8);
}

#[test]
fn perturbed_fraction_is_caught_by_accounting() {
    let s = spec(3.0, 0.1, 0.5);
    let mut st =
        tricond::laminate::build_optimal_structure(&s, 0.7, Region::B, &Default::default())
            .unwrap();
    if let LaminateNode::Layering { children, .. } = &mut st.tree {
        children[0].fraction += 1e-3;
        children[1].fraction -= 1e-3;
    }
    let rep = tricond::laminate::structure_report(&s, &st).unwrap();
    assert!(rep.fraction_residual > 1e-10);
    assert!(rep.conservation_residual < 1e-12);
}
