//! Cohomology and series against independent counts.

mod common;

use common::*;
use proptest::prelude::*;
use tilting_core::blocks::ExtendedCollection;
use tilting_core::cech;
use tilting_core::certify::certify;
use tilting_core::collections::verify_line_collection;
use tilting_core::ktheory::{euler_pairing, KClass};
use tilting_core::series::{anticanonical_hilbert, pi3_hilbert};
use tilting_core::toric::DivisorClass;

#[test]
fn projective_plane_monomials() {
    let p2 = catalog("p2");
    for d in -6..=8 {
        let h = p2.ray_divisor(0).scale(d);
        let c = p2.cohomology(&h).unwrap();
        assert_eq!(c.h0, binom2(d), "O({d})");
        // H^2(O(d)) = H^0(O(-3 - d)) dual
        assert_eq!(c.h2, binom2(-3 - d), "O({d})");
        assert_eq!(c.h1, 0);
    }
}

#[test]
fn quadric_bidegrees() {
    let q = catalog("p1xp1");
    // rays (1,0),(0,1),(-1,0),(0,-1): D_0 ~ D_2 is one ruling, D_1 ~ D_3 the other
    for a in -4..=4i64 {
        for b in -4..=4i64 {
            let d = DivisorClass(vec![a, b, 0, 0]);
            let c = q.cohomology(&d).unwrap();
            let h0 = |x: i64| if x < 0 { 0 } else { (x + 1) as u64 };
            let h1 = |x: i64| if x < -1 { (-x - 1) as u64 } else { 0 };
            assert_eq!(c.h0, h0(a) * h0(b), "({a},{b})");
            assert_eq!(c.h2, h1(a) * h1(b), "({a},{b})");
            assert_eq!(c.h1, h0(a) * h1(b) + h1(a) * h0(b), "({a},{b})");
        }
    }
}

#[test]
fn beilinson_end_and_first_degree() {
    let p2 = catalog("p2");
    let h = p2.ray_divisor(0);
    let ds = [p2.zero_divisor(), h.clone(), h.scale(2)];
    let col = verify_line_collection(&p2, &ds).unwrap();
    let ext = ExtendedCollection::from(col);
    let cert = certify(&ext).unwrap();
    let pi3 = pi3_hilbert(&ext, &cert, 3).unwrap();

    let mut end = 0;
    let mut twisted = 0;
    for i in 0..3i64 {
        for j in 0..3i64 {
            end += binom2(j - i);
            twisted += binom2(j - i + 3);
        }
    }
    assert_eq!((end, twisted), (15, 96));
    assert_eq!(&pi3.coeffs[..2], &[end, twisted]);
    let minus_k = p2.canonical.neg();
    let lattice: u64 = ds
        .iter()
        .flat_map(|a| ds.iter().map(move |b| (a, b)))
        .map(|(a, b)| lattice_h0(&p2, &b.sub(a).add(&minus_k)))
        .sum();
    assert_eq!(lattice, 96);
}

#[test]
fn quadric_pi3_first_degree() {
    let q = catalog("p1xp1");
    let ds: Vec<DivisorClass> = [[0, 0], [1, 0], [0, 1], [1, 1]]
        .iter()
        .map(|&[a, b]| DivisorClass(vec![a, b, 0, 0]))
        .collect();
    let ext = ExtendedCollection::from(verify_line_collection(&q, &ds).unwrap());
    let cert = certify(&ext).unwrap();
    let pi3 = pi3_hilbert(&ext, &cert, 2).unwrap();
    let minus_k = q.canonical.neg();
    let honest: u64 = ds
        .iter()
        .flat_map(|a| ds.iter().map(move |b| (a, b)))
        .map(|(a, b)| lattice_h0(&q, &b.sub(a).add(&minus_k)))
        .sum();
    assert_eq!(honest, 144);
    assert_eq!(pi3.coeffs[..2], [16, 144]);
}

#[test]
fn anticanonical_rings_by_raw_counts() {
    for s in weak_del_pezzo_catalog() {
        let r = anticanonical_hilbert(&s, 6).unwrap();
        let ksq = s.ksq() as u64;
        for (n, &c) in r.coeffs.iter().enumerate() {
            let n = n as u64;
            let raw = lattice_h0(&s, &s.canonical.neg().scale(n as i64));
            assert_eq!(c, raw, "{} n={n}", s.name());
            assert_eq!(c, 1 + ksq * n * (n + 1) / 2, "{} n={n}", s.name());
        }
    }
}

fn catalog_divisor() -> impl Strategy<Value = (usize, Vec<i64>)> {
    let n = catalog_all().len();
    (0..n, proptest::collection::vec(-4i64..=4, 9))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn h0_matches_lattice_count((k, coeffs) in catalog_divisor()) {
        let s = &catalog_all()[k];
        let d = DivisorClass(coeffs[..s.num_rays()].to_vec());
        prop_assert_eq!(s.h0(&d).unwrap(), lattice_h0(s, &d));
    }

    #[test]
    fn cohomology_matches_cech((k, coeffs) in catalog_divisor()) {
        let s = &catalog_all()[k];
        let d = DivisorClass(coeffs[..s.num_rays()].to_vec());
        prop_assert_eq!(s.cohomology(&d).unwrap(), cech::cohomology(s, &d).unwrap());
    }

    #[test]
    fn line_pairing_is_euler_characteristic((k, a) in catalog_divisor(), b in proptest::collection::vec(-4i64..=4, 9)) {
        let s = &catalog_all()[k];
        let n = s.num_rays();
        let (da, db) = (DivisorClass(a[..n].to_vec()), DivisorClass(b[..n].to_vec()));
        let chi = euler_pairing(s, &KClass::line(s, &da), &KClass::line(s, &db)).unwrap();
        let c = cech::cohomology(s, &db.sub(&da)).unwrap();
        prop_assert_eq!(chi, c.h0 as i64 - c.h1 as i64 + c.h2 as i64);
    }
}
