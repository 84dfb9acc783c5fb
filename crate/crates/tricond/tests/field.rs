use proptest::prelude::*;
use tricond::field::*;
use tricond::Error;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn decompose_examples() {
    let id = FieldComponents::decompose([[1.0, 0.0], [0.0, 1.0]]);
    assert!(close(id.s1, SQRT2, 1e-15) && id.s2 == 0.0 && id.d1 == 0.0 && id.d2 == 0.0);

    let r = 0.3;
    let e0 = Loading::new(r).unwrap().components();
    assert!(close(e0.s1, (1.0 + r) / SQRT2, 1e-15));
    assert!(close(e0.d1, (1.0 - r) / SQRT2, 1e-15));
    assert_eq!((e0.s2, e0.d2), (0.0, 0.0));

    let rot = FieldComponents::decompose([[0.0, 1.0], [-1.0, 0.0]]);
    assert!(close(rot.s2, SQRT2, 1e-15) && rot.s1 == 0.0 && rot.d1 == 0.0 && rot.d2 == 0.0);
}

#[test]
fn determinant_examples() {
    assert!(close(
        FieldComponents::from_diagonal(1.0, 0.4).determinant(),
        0.4,
        1e-15
    ));
    assert!(close(
        FieldComponents::from_diagonal(1.0, 1.0).determinant(),
        1.0,
        1e-15
    ));
    let c = FieldComponents {
        s1: 0.6,
        s2: 0.8,
        d1: 1.0,
        d2: 0.0,
    };
    assert!(c.determinant().abs() < 1e-15);
}

#[test]
fn energy_density_examples() {
    let id = FieldComponents::from_diagonal(1.0, 1.0);
    assert!(close(
        energy_density(ExtReal::Finite(1.0), &id).unwrap(),
        1.0,
        1e-15
    ));
    assert_eq!(
        energy_density(ExtReal::Infinite, &FieldComponents::default()).unwrap(),
        0.0
    );
    assert_eq!(
        energy_density(ExtReal::Infinite, &id),
        Err(Error::InfiniteEnergy)
    );
    let e0 = Loading::new(0.5).unwrap().components();
    assert!(close(
        energy_density(ExtReal::Finite(2.0), &e0).unwrap(),
        1.25,
        1e-15
    ));
}

#[test]
fn basis_is_orthonormal() {
    let b = basis();
    for i in 0..4 {
        for j in 0..4 {
            let ip: f64 = (0..2)
                .flat_map(|p| (0..2).map(move |q| (p, q)))
                .map(|(p, q)| b[i][p][q] * b[j][p][q])
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-15, "<a{i}, a{j}> = {ip}");
        }
    }
}

#[test]
fn spec_validation() {
    assert!(matches!(
        CompositeSpec::new(0.0, 1.0, 0.2, 0.2),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(
        CompositeSpec::new(2.0, 1.0, 0.2, 0.2),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(
        CompositeSpec::new(1.0, 2.0, -0.1, 0.2),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(
        CompositeSpec::new(1.0, 2.0, 0.6, 0.5),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(Loading::new(1.5), Err(Error::InvalidLoading(_))));
    assert!(matches!(Loading::new(-0.1), Err(Error::InvalidLoading(_))));
    let s = CompositeSpec::new(1.0, 2.0, 0.15, 0.5).unwrap();
    assert!(close(s.harmonic_mean(), 2.5, 1e-15));
    assert_eq!(s.conductivity(Material::Three), ExtReal::Infinite);
}

#[test]
fn extended_energy_allows_unloaded_infinite_axis() {
    let k = ExtendedConductivity {
        l1: ExtReal::Finite(2.0),
        l2: ExtReal::Infinite,
    };
    assert_eq!(k.energy(0.0).unwrap(), 2.0);
    assert_eq!(k.energy(0.5), Err(Error::IncompatibleLoading { axis: 2 }));
}

proptest! {
    #[test]
    fn determinant_identity(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
        let e = [[a, b], [c, d]];
        let comp = FieldComponents::decompose(e);
        let want = mat_det(e);
        prop_assert!((comp.determinant() - want).abs() <= 1e-12 * (1.0 + want.abs()) * 10.0);
        let back = comp.reconstruct();
        for p in 0..2 {
            for q in 0..2 {
                prop_assert!((back[p][q] - e[p][q]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn energy_density_is_half_trace(k in 0.01..100.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
        let e = [[a, b], [c, d]];
        let tr = a * a + b * b + c * c + d * d;
        let got = energy_density(ExtReal::Finite(k), &FieldComponents::decompose(e)).unwrap();
        prop_assert!((got - 0.5 * k * tr).abs() <= 1e-12 * (0.5 * k * tr).max(1e-300) + 1e-300);
    }
}
