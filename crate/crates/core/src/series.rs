//! Graded dimensions of the anticanonical ring, the NCCR module summands and
//! the 3-Calabi-Yau completion of a certified 2-tilting bundle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::ExtendedCollection;
use crate::certify::Certificate;
use crate::ktheory::{self, KClass};
use crate::toric::{SmoothToricSurface, ToricError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("surface {0} is not weak del Pezzo")]
    NotWeakDelPezzo(String),
    #[error("certificate {0} is not two-tilting")]
    NotCertified(String),
    #[error("certificate {0} does not belong to this collection")]
    CertificateMismatch(String),
    #[error("collection has no trivial member")]
    NoTrivialMember,
    #[error("negative dimension {value} in degree {degree} of {label}")]
    Negative {
        label: String,
        degree: usize,
        value: i64,
    },
    #[error(transparent)]
    Toric(#[from] ToricError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertPrefix {
    pub label: String,
    pub coeffs: Vec<u64>,
}

impl HilbertPrefix {
    fn from_signed(label: String, values: Vec<i64>) -> Result<Self, SeriesError> {
        let mut coeffs = Vec::with_capacity(values.len());
        for (degree, v) in values.into_iter().enumerate() {
            if v < 0 {
                return Err(SeriesError::Negative {
                    label,
                    degree,
                    value: v,
                });
            }
            coeffs.push(v as u64);
        }
        Ok(HilbertPrefix { label, coeffs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

pub fn anticanonical_hilbert(
    surface: &SmoothToricSurface,
    n_max: usize,
) -> Result<HilbertPrefix, SeriesError> {
    if !surface.classify().is_weak_del_pezzo() {
        return Err(SeriesError::NotWeakDelPezzo(surface.name().to_string()));
    }
    let minus_k = surface.canonical.neg();
    let coeffs = (0..=n_max)
        .map(|n| surface.h0(&minus_k.scale(n as i64)))
        .collect::<Result<_, _>>()?;
    Ok(HilbertPrefix {
        label: format!("R({})", surface.name()),
        coeffs,
    })
}

fn require_certificate(
    collection: &ExtendedCollection,
    cert: &Certificate,
) -> Result<(), SeriesError> {
    if !cert.is_two_tilting() {
        return Err(SeriesError::NotCertified(cert.id.clone()));
    }
    let classes: Vec<KClass> = cert
        .members
        .iter()
        .map(|&o| cert.objects[o].class.clone())
        .collect();
    if classes != collection.classes() {
        return Err(SeriesError::CertificateMismatch(cert.id.clone()));
    }
    Ok(())
}

/// `dim Hom(T, T (x) omega^{-n})` as the Euler pairing summed over member
/// pairs; equal to the Hom dimension because of the certified vanishing.
pub fn pi3_hilbert(
    collection: &ExtendedCollection,
    cert: &Certificate,
    n_max: usize,
) -> Result<HilbertPrefix, SeriesError> {
    require_certificate(collection, cert)?;
    let s = &collection.base.surface;
    let classes = collection.classes();
    let values = (0..=n_max as i64)
        .map(|n| {
            let mut total = 0;
            for a in &classes {
                for b in &classes {
                    let bn = ktheory::canonical_twist(s, b, -n);
                    total += ktheory::pairing_unchecked(s, a, &bn);
                }
            }
            total
        })
        .collect();
    HilbertPrefix::from_signed("Pi3".into(), values)
}

/// `dim Gamma(E_i (x) omega^{-n})` per member: lattice counts for line
/// members, Euler characteristics (certified by `Ext^{>0}(O, -) = 0`) for the
/// others.
pub fn module_hilbert(
    collection: &ExtendedCollection,
    cert: &Certificate,
    n_max: usize,
) -> Result<Vec<HilbertPrefix>, SeriesError> {
    require_certificate(collection, cert)?;
    if collection.base.trivial_index.is_none() {
        return Err(SeriesError::NoTrivialMember);
    }
    let s = &collection.base.surface;
    let extended: Vec<bool> = {
        let mut v = vec![false; collection.len()];
        for step in &collection.log {
            v[step.pair[0]] = true;
        }
        v
    };
    let classes = collection.classes();
    let mut out = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        let label = format!("M{i}");
        let line = collection.base.members[i]
            .divisor()
            .filter(|_| !extended[i]);
        let values: Vec<i64> = match line {
            Some(d) => (0..=n_max as i64)
                .map(|n| s.h0(&d.sub(&s.canonical.scale(n))).map(|h| h as i64))
                .collect::<Result<_, _>>()?,
            None => (0..=n_max as i64)
                .map(|n| ktheory::canonical_twist(s, class, -n).chi)
                .collect(),
        };
        out.push(HilbertPrefix::from_signed(label, values)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub status: CheckStatus,
    /// `c_n - c_0 - n(n+1)/2 r^2 K^2` for every `n`.
    pub residuals: Vec<i64>,
}

pub fn check_growth_law(prefix: &HilbertPrefix, rank: i64, ksq: i64) -> GrowthCheck {
    let c0 = prefix.coeffs.first().copied().unwrap_or(0) as i64;
    let residuals: Vec<i64> = prefix
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            let n = n as i64;
            c as i64 - c0 - n * (n + 1) / 2 * rank * rank * ksq
        })
        .collect();
    let status = if prefix.coeffs.len() < 3 {
        CheckStatus::Inconclusive
    } else if residuals.iter().all(|&r| r == 0) {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    GrowthCheck { status, residuals }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GorensteinCheck {
    pub status: CheckStatus,
    /// Head of `(1 - t)^3 H(t)` up to its last nonzero coefficient.
    pub numerator: Vec<i64>,
}

/// Trailing zeros of the third difference needed before the numerator is
/// considered terminated.
const MIN_TRAILING_ZEROS: usize = 3;

pub fn gorenstein_symmetry(prefix: &HilbertPrefix) -> GorensteinCheck {
    let a: Vec<i64> = prefix.coeffs.iter().map(|&c| c as i64).collect();
    let at = |k: isize| if k < 0 { 0 } else { a[k as usize] };
    let h: Vec<i64> = (0..a.len() as isize)
        .map(|k| at(k) - 3 * at(k - 1) + 3 * at(k - 2) - at(k - 3))
        .collect();
    let last = h.iter().rposition(|&x| x != 0);
    let numerator = last.map_or_else(Vec::new, |l| h[..=l].to_vec());
    let trailing = h.len() - numerator.len();
    let status = if a.len() < 6 || trailing < MIN_TRAILING_ZEROS {
        CheckStatus::Inconclusive
    } else if numerator.iter().eq(numerator.iter().rev()) {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    GorensteinCheck { status, numerator }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_law: Option<CheckStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gorenstein: Option<CheckStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub label: String,
    pub coeffs: Vec<u64>,
    pub certificate: String,
    pub checks: Checks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerator: Option<Vec<i64>>,
}

/// Reports for `R`, `Pi3` and every module summand of a certified collection.
pub fn series_reports(
    collection: &ExtendedCollection,
    cert: &Certificate,
    n_max: usize,
) -> Result<Vec<SeriesReport>, SeriesError> {
    let s = &collection.base.surface;
    let ksq = s.ksq();
    let rank: i64 = collection.classes().iter().map(|c| c.rank).sum();
    let mut out = Vec::new();
    let pi3 = pi3_hilbert(collection, cert, n_max)?;
    let g = gorenstein_symmetry(&pi3);
    out.push(SeriesReport {
        checks: Checks {
            growth_law: Some(check_growth_law(&pi3, rank, ksq).status),
            gorenstein: Some(g.status),
        },
        numerator: Some(g.numerator),
        label: pi3.label,
        coeffs: pi3.coeffs,
        certificate: cert.id.clone(),
    });
    let r = anticanonical_hilbert(s, n_max)?;
    let g = gorenstein_symmetry(&r);
    out.push(SeriesReport {
        checks: Checks {
            growth_law: Some(check_growth_law(&r, 1, ksq).status),
            gorenstein: Some(g.status),
        },
        numerator: Some(g.numerator),
        label: r.label,
        coeffs: r.coeffs,
        certificate: cert.id.clone(),
    });
    for m in module_hilbert(collection, cert, n_max)? {
        out.push(SeriesReport {
            label: m.label,
            coeffs: m.coeffs,
            certificate: cert.id.clone(),
            checks: Checks {
                growth_law: None,
                gorenstein: None,
            },
            numerator: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::certify;
    use crate::collections::verify_line_collection;
    use crate::toric::validate_fan;

    fn prefix(c: &[u64]) -> HilbertPrefix {
        HilbertPrefix {
            label: "t".into(),
            coeffs: c.to_vec(),
        }
    }

    #[test]
    fn p2_series() {
        let s = validate_fan("P2", &[[1, 0], [0, 1], [-1, -1]]).unwrap();
        let r = anticanonical_hilbert(&s, 6).unwrap();
        assert_eq!(r.coeffs, vec![1, 10, 28, 55, 91, 136, 190]);
        let g = gorenstein_symmetry(&r);
        assert_eq!(g.numerator, vec![1, 7, 1]);
        assert_eq!(g.status, CheckStatus::Pass);

        let h = s.ray_divisor(0);
        let c = verify_line_collection(&s, &[s.zero_divisor(), h.clone(), h.scale(2)]).unwrap();
        let ext = ExtendedCollection::from(c);
        let cert = certify(&ext).unwrap();
        let pi3 = pi3_hilbert(&ext, &cert, 3).unwrap();
        assert_eq!(pi3.coeffs, vec![15, 96, 258, 501]);
        assert_eq!(check_growth_law(&pi3, 3, 9).status, CheckStatus::Pass);
        let m = module_hilbert(&ext, &cert, 2).unwrap();
        assert_eq!(m[0].coeffs, vec![1, 10, 28]);
        assert_eq!(m[1].coeffs, vec![3, 15, 36]);
    }

    #[test]
    fn checks_on_synthetic_prefixes() {
        assert_eq!(
            gorenstein_symmetry(&prefix(&[1, 9, 25])).status,
            CheckStatus::Inconclusive
        );
        assert_eq!(
            gorenstein_symmetry(&prefix(&[1, 9, 25, 49, 81, 121, 169])).numerator,
            vec![1, 6, 1]
        );
        // 1 + 2t over (1-t)^3
        let g = gorenstein_symmetry(&prefix(&[1, 5, 12, 22, 35, 51, 70]));
        assert_eq!((g.status, g.numerator), (CheckStatus::Fail, vec![1, 2]));
        let tampered = check_growth_law(&prefix(&[15, 96, 259, 501]), 3, 9);
        assert_eq!(tampered.status, CheckStatus::Fail);
        assert_eq!(tampered.residuals, vec![0, 0, 1, 0]);
        assert_eq!(
            check_growth_law(&prefix(&[15, 96]), 3, 9).status,
            CheckStatus::Inconclusive
        );
    }

    #[test]
    fn rejected_surface_has_no_series() {
        let s = validate_fan("S3", &[[1, 0], [0, 1], [-1, 3], [0, -1]]).unwrap();
        assert!(matches!(
            anticanonical_hilbert(&s, 2),
            Err(SeriesError::NotWeakDelPezzo(_))
        ));
    }
}
