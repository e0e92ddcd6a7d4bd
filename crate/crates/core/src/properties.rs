//! Seeded random checks of the cohomology and pairing identities on a surface.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cech;
use crate::ktheory::{self, KClass};
use crate::toric::{DivisorClass, SmoothToricSurface};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyFailure {
    pub property: String,
    pub divisor: DivisorClass,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: usize,
    pub failures: Vec<PropertyFailure>,
}

fn random_divisor(rng: &mut StdRng, n: usize, bound: i64) -> DivisorClass {
    DivisorClass((0..n).map(|_| rng.gen_range(-bound..=bound)).collect())
}

/// For random divisors with coefficients in `[-bound, bound]`: cohomology
/// exists (`h1 >= 0`) and matches the local-cohomology oracle, Serre duality
/// `h2(D) = h0(K - D)`, Riemann-Roch, and `chi(E, F) = chi(F, E (x) K)` for
/// random line-bundle pairs.
pub fn check_surface(
    surface: &SmoothToricSurface,
    samples: usize,
    seed: u64,
    bound: i64,
) -> PropertyReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = surface.num_rays();
    let mut report = PropertyReport {
        samples,
        seed,
        checks: 0,
        failures: Vec::new(),
    };
    let fail = |report: &mut PropertyReport, property: &str, d: &DivisorClass, detail: String| {
        report.failures.push(PropertyFailure {
            property: property.into(),
            divisor: d.clone(),
            detail,
        });
    };
    for _ in 0..samples {
        let d = random_divisor(&mut rng, n, bound);
        report.checks += 4;
        let honest = match surface.cohomology(&d) {
            Ok(c) => c,
            Err(e) => {
                fail(&mut report, "h1-nonnegative", &d, e.to_string());
                continue;
            }
        };
        let oracle = cech::cohomology(surface, &d).expect("valid divisor");
        if honest != oracle {
            fail(
                &mut report,
                "oracle",
                &d,
                format!("{honest:?} vs {oracle:?}"),
            );
        }
        let dual = surface
            .h0(&surface.canonical.sub(&d))
            .expect("valid divisor");
        if oracle.h2 != dual {
            fail(
                &mut report,
                "serre-duality",
                &d,
                format!("h2 = {}, h0(K - D) = {dual}", oracle.h2),
            );
        }
        let dd = surface.intersect_unchecked(&d, &d.sub(&surface.canonical));
        let rr = 1 + dd / 2;
        if oracle.euler() != rr {
            fail(
                &mut report,
                "riemann-roch",
                &d,
                format!("chi = {}, formula {rr}", oracle.euler()),
            );
        }
        let e = random_divisor(&mut rng, n, bound);
        let (ce, cf) = (KClass::line(surface, &d), KClass::line(surface, &e));
        let lhs = ktheory::pairing_unchecked(surface, &ce, &cf);
        let rhs =
            ktheory::pairing_unchecked(surface, &cf, &ktheory::canonical_twist(surface, &ce, 1));
        if lhs != rhs {
            fail(
                &mut report,
                "serre-pairing",
                &d,
                format!("chi(E,F) = {lhs}, chi(F,E(K)) = {rhs}"),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::validate_fan;

    #[test]
    fn sigma2_sample() {
        let s = validate_fan("S2", &[[1, 0], [0, 1], [-1, 2], [0, -1]]).unwrap();
        let r = check_surface(&s, 50, DEFAULT_SEED, 5);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r, check_surface(&s, 50, DEFAULT_SEED, 5));
    }
}
