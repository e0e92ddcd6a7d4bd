//! Numerical K-theory of a rational surface in `(rank, c1, chi)` coordinates.
//!
//! Storing `chi` instead of `ch_2` keeps every coordinate integral. The Euler
//! pairing is Riemann-Roch rewritten in these coordinates:
//!
//! ```text
//! chi(E, F) = r_E chi_F + r_F chi_E - r_E r_F - c1(E).c1(F) + r_F c1(E).K
//! ```

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intmat;
use crate::toric::{DivisorClass, SmoothToricSurface};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KTheoryError {
    #[error("class lives on a lattice of rank {got}, surface expects {expected}")]
    SurfaceMismatch { expected: usize, got: usize },
    #[error("slope of a rank-zero class is undefined")]
    ZeroRank,
    #[error("invalid lattice surface: {0}")]
    InvalidLattice(String),
}

/// Intersection data needed for numerical K-theory.
///
/// Divisor classes are coefficient vectors of length [`divisor_len`]; for
/// toric surfaces these are ray coefficients (with principal divisors in
/// the kernel of the form), for lattice surfaces Picard coordinates.
///
/// [`divisor_len`]: NumericalSurface::divisor_len
pub trait NumericalSurface {
    fn divisor_len(&self) -> usize;
    fn dot(&self, a: &DivisorClass, b: &DivisorClass) -> i64;
    fn canonical_class(&self) -> &DivisorClass;
    /// Coordinates of a divisor class in a `Z`-basis of `Pic`.
    fn pic_coords(&self, d: &DivisorClass) -> Vec<i64>;

    fn canonical_degree(&self) -> i64 {
        let k = self.canonical_class();
        self.dot(k, k)
    }

    /// Rank of the numerical Grothendieck group.
    fn k_rank(&self) -> usize {
        self.pic_coords(self.canonical_class()).len() + 2
    }
}

impl NumericalSurface for SmoothToricSurface {
    fn divisor_len(&self) -> usize {
        self.num_rays()
    }

    fn dot(&self, a: &DivisorClass, b: &DivisorClass) -> i64 {
        self.intersect_unchecked(a, b)
    }

    fn canonical_class(&self) -> &DivisorClass {
        &self.canonical
    }

    fn pic_coords(&self, d: &DivisorClass) -> Vec<i64> {
        self.picard_coords(d)
    }

    fn canonical_degree(&self) -> i64 {
        self.degree
    }
}

/// A surface known only through its Picard lattice, intersection form and
/// canonical class. No honest cohomology is available for these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractLatticeSurface {
    pub picard_rank: usize,
    pub gram: Vec<Vec<i64>>,
    pub canonical: DivisorClass,
}

impl AbstractLatticeSurface {
    pub fn new(gram: Vec<Vec<i64>>, canonical: Vec<i64>) -> Result<Self, KTheoryError> {
        let n = gram.len();
        if gram.iter().any(|r| r.len() != n) {
            return Err(KTheoryError::InvalidLattice(
                "gram matrix is not square".into(),
            ));
        }
        if canonical.len() != n {
            return Err(KTheoryError::InvalidLattice(
                "canonical class has the wrong length".into(),
            ));
        }
        if (0..n).any(|i| (0..i).any(|j| gram[i][j] != gram[j][i])) {
            return Err(KTheoryError::InvalidLattice(
                "gram matrix is not symmetric".into(),
            ));
        }
        let surface = AbstractLatticeSurface {
            picard_rank: n,
            gram,
            canonical: DivisorClass(canonical),
        };
        // Riemann-Roch integrality: D.(D - K) is even on a basis, hence everywhere.
        for i in 0..n {
            let e = DivisorClass::ray(n, i);
            let v = surface.dot(&e, &e) - surface.dot(&e, &surface.canonical);
            if v % 2 != 0 {
                return Err(KTheoryError::InvalidLattice(format!(
                    "basis vector {i} has odd D.(D - K)"
                )));
            }
        }
        if intmat::determinant(&surface.gram).abs() != 1 {
            return Err(KTheoryError::InvalidLattice(
                "intersection form is not unimodular".into(),
            ));
        }
        Ok(surface)
    }

    pub fn from_json(text: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        #[derive(Deserialize)]
        struct File {
            picard_rank: usize,
            gram: Vec<Vec<i64>>,
            canonical: Vec<i64>,
        }
        let f: File = serde_json::from_str(text)?;
        if f.picard_rank != f.gram.len() {
            return Err(Box::new(KTheoryError::InvalidLattice(
                "picard_rank does not match the gram matrix".into(),
            )));
        }
        Ok(AbstractLatticeSurface::new(f.gram, f.canonical)?)
    }
}

impl NumericalSurface for AbstractLatticeSurface {
    fn divisor_len(&self) -> usize {
        self.picard_rank
    }

    fn dot(&self, a: &DivisorClass, b: &DivisorClass) -> i64 {
        let mut total = 0;
        for (i, x) in a.0.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.0.iter().enumerate() {
                total += x * self.gram[i][j] * y;
            }
        }
        total
    }

    fn canonical_class(&self) -> &DivisorClass {
        &self.canonical
    }

    fn pic_coords(&self, d: &DivisorClass) -> Vec<i64> {
        d.0.clone()
    }
}

/// Numerical class `(rank, c1, chi)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KClass {
    pub rank: i64,
    pub c1: DivisorClass,
    pub chi: i64,
}

impl KClass {
    pub fn zero(len: usize) -> Self {
        KClass {
            rank: 0,
            c1: DivisorClass::zero(len),
            chi: 0,
        }
    }

    pub fn trivial(len: usize) -> Self {
        KClass {
            rank: 1,
            c1: DivisorClass::zero(len),
            chi: 1,
        }
    }

    /// Class of the line bundle `O(D)`.
    pub fn line<S: NumericalSurface + ?Sized>(surface: &S, d: &DivisorClass) -> Self {
        let dk = d.sub(surface.canonical_class());
        KClass {
            rank: 1,
            c1: d.clone(),
            chi: 1 + surface.dot(d, &dk) / 2,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        KClass {
            rank: self.rank + other.rank,
            c1: self.c1.add(&other.c1),
            chi: self.chi + other.chi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i64) -> Self {
        KClass {
            rank: self.rank * k,
            c1: self.c1.scale(k),
            chi: self.chi * k,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    /// Coordinates in a `Z`-basis of the numerical K-group.
    pub fn k_coords<S: NumericalSurface + ?Sized>(&self, surface: &S) -> Vec<i64> {
        let mut v = vec![self.rank];
        v.extend(surface.pic_coords(&self.c1));
        v.push(self.chi);
        v
    }
}

impl fmt::Display for KClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(rank {}, c1 {}, chi {})", self.rank, self.c1, self.chi)
    }
}

/// Exact slope `-(c1 . K) / rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope(pub Ratio<i64>);

impl Slope {
    pub fn integer(n: i64) -> Self {
        Slope(Ratio::from_integer(n))
    }

    pub fn new(num: i64, den: i64) -> Self {
        Slope(Ratio::new(num, den))
    }

    pub fn shift(self, n: i64) -> Self {
        Slope(self.0 + n)
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Slope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let parse = |t: &str| t.trim().parse::<i64>().map_err(serde::de::Error::custom);
        match text.split_once('/') {
            Some((n, m)) => {
                let den = parse(m)?;
                if den == 0 {
                    return Err(serde::de::Error::custom("zero denominator"));
                }
                Ok(Slope::new(parse(n)?, den))
            }
            None => Ok(Slope::integer(parse(&text)?)),
        }
    }
}

fn check_len<S: NumericalSurface + ?Sized>(surface: &S, c: &KClass) -> Result<(), KTheoryError> {
    if c.c1.len() != surface.divisor_len() {
        return Err(KTheoryError::SurfaceMismatch {
            expected: surface.divisor_len(),
            got: c.c1.len(),
        });
    }
    Ok(())
}

/// `chi(E, F) = sum (-1)^p dim Ext^p(E, F)`.
pub fn euler_pairing<S: NumericalSurface + ?Sized>(
    surface: &S,
    e: &KClass,
    f: &KClass,
) -> Result<i64, KTheoryError> {
    check_len(surface, e)?;
    check_len(surface, f)?;
    Ok(pairing_unchecked(surface, e, f))
}

pub(crate) fn pairing_unchecked<S: NumericalSurface + ?Sized>(
    surface: &S,
    e: &KClass,
    f: &KClass,
) -> i64 {
    let k = surface.canonical_class();
    e.rank * f.chi + f.rank * e.chi - e.rank * f.rank - surface.dot(&e.c1, &f.c1)
        + f.rank * surface.dot(&e.c1, k)
}

pub fn slope<S: NumericalSurface + ?Sized>(surface: &S, e: &KClass) -> Result<Slope, KTheoryError> {
    check_len(surface, e)?;
    if e.rank == 0 {
        return Err(KTheoryError::ZeroRank);
    }
    let num = -surface.dot(&e.c1, surface.canonical_class());
    Ok(Slope(Ratio::new(num, e.rank)))
}

/// Class of `E (x) O(L)`.
pub fn twist<S: NumericalSurface + ?Sized>(
    surface: &S,
    e: &KClass,
    l: &DivisorClass,
) -> Result<KClass, KTheoryError> {
    check_len(surface, e)?;
    if l.len() != surface.divisor_len() {
        return Err(KTheoryError::SurfaceMismatch {
            expected: surface.divisor_len(),
            got: l.len(),
        });
    }
    Ok(twist_unchecked(surface, e, l))
}

pub(crate) fn twist_unchecked<S: NumericalSurface + ?Sized>(
    surface: &S,
    e: &KClass,
    l: &DivisorClass,
) -> KClass {
    let lk = l.sub(surface.canonical_class());
    let ll = surface.dot(l, &lk);
    debug_assert!(ll % 2 == 0);
    KClass {
        rank: e.rank,
        c1: e.c1.add(&l.scale(e.rank)),
        chi: e.chi + surface.dot(&e.c1, l) + e.rank * ll / 2,
    }
}

/// `E (x) omega^k`, i.e. twist by `k K`.
pub fn canonical_twist<S: NumericalSurface + ?Sized>(surface: &S, e: &KClass, k: i64) -> KClass {
    twist_unchecked(surface, e, &surface.canonical_class().scale(k))
}

/// `E (x) omega^{-1}`.
pub fn serre_twist<S: NumericalSurface + ?Sized>(
    surface: &S,
    e: &KClass,
) -> Result<KClass, KTheoryError> {
    check_len(surface, e)?;
    Ok(canonical_twist(surface, e, -1))
}

/// Determinant of the matrix of K-group coordinates of `classes`; `+-1`
/// exactly when they form a basis.
pub fn class_determinant<S: NumericalSurface + ?Sized>(surface: &S, classes: &[KClass]) -> i128 {
    let rows: Vec<Vec<i64>> = classes.iter().map(|c| c.k_coords(surface)).collect();
    if rows.iter().any(|r| r.len() != classes.len()) {
        return 0;
    }
    intmat::determinant(&rows)
}

/// Gram matrix `G[i][j] = chi(E_i, E_j)`.
pub fn gram_matrix<S: NumericalSurface + ?Sized>(surface: &S, classes: &[KClass]) -> Vec<Vec<i64>> {
    classes
        .iter()
        .map(|a| {
            classes
                .iter()
                .map(|b| pairing_unchecked(surface, a, b))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::validate_fan;

    #[test]
    fn plane_pairings() {
        let s = validate_fan("P2", &[[1, 0], [0, 1], [-1, -1]]).unwrap();
        let o = KClass::trivial(3);
        let h = s.ray_divisor(0);
        let o1 = KClass::line(&s, &h);
        assert_eq!(o1.chi, 3);
        assert_eq!(euler_pairing(&s, &o, &o1).unwrap(), 3);
        assert_eq!(euler_pairing(&s, &o1, &o).unwrap(), 0);
        assert_eq!(euler_pairing(&s, &o, &o).unwrap(), 1);
        assert_eq!(slope(&s, &o).unwrap(), Slope::integer(0));
        assert_eq!(slope(&s, &o1).unwrap(), Slope::integer(3));
        assert_eq!(
            twist(&s, &o, &h).unwrap(),
            KClass {
                rank: 1,
                c1: h.clone(),
                chi: 3
            }
        );
        let kernel = KClass {
            rank: 2,
            c1: h.neg(),
            chi: 0,
        };
        assert_eq!(
            twist(&s, &kernel, &h).unwrap(),
            KClass {
                rank: 2,
                c1: h.clone(),
                chi: 3
            }
        );
        let o3 = serre_twist(&s, &o).unwrap();
        assert_eq!(o3.chi, 10);
        assert!(s.equivalent(&o3.c1, &h.scale(3)).unwrap());
        assert_eq!(slope(&s, &KClass::zero(3)), Err(KTheoryError::ZeroRank));
        assert!(matches!(
            euler_pairing(&s, &o, &KClass::trivial(4)),
            Err(KTheoryError::SurfaceMismatch { .. })
        ));
    }

    #[test]
    fn hirzebruch_two_slopes() {
        let s = validate_fan("S2", &[[1, 0], [0, 1], [-1, 2], [0, -1]]).unwrap();
        let f = s.ray_divisor(0);
        let c0 = s.ray_divisor(1);
        let members = [
            s.zero_divisor(),
            f.clone(),
            c0.add(&f.scale(2)),
            c0.add(&f.scale(3)),
        ];
        let slopes: Vec<Slope> = members
            .iter()
            .map(|d| slope(&s, &KClass::line(&s, d)).unwrap())
            .collect();
        assert_eq!(slopes, [0, 2, 4, 6].map(Slope::integer));
        let anti = serre_twist(&s, &KClass::trivial(4)).unwrap();
        assert_eq!(anti.chi, 9);
        assert!(s
            .equivalent(&anti.c1, &c0.scale(2).add(&f.scale(4)))
            .unwrap());
    }

    #[test]
    fn lattice_surface() {
        // P1 x P1 in the basis (F1, F2).
        let s = AbstractLatticeSurface::new(vec![vec![0, 1], vec![1, 0]], vec![-2, -2]).unwrap();
        assert_eq!(s.canonical_degree(), 8);
        assert_eq!(s.k_rank(), 4);
        let o = KClass::trivial(2);
        let o11 = KClass::line(&s, &DivisorClass(vec![1, 1]));
        assert_eq!(o11.chi, 4);
        assert_eq!(euler_pairing(&s, &o, &o11).unwrap(), 4);
        assert!(AbstractLatticeSurface::new(vec![vec![1, 0], vec![0, 1]], vec![0, 0]).is_err());
        let parsed = AbstractLatticeSurface::from_json(
            r#"{"picard_rank": 1, "gram": [[1]], "canonical": [-3]}"#,
        )
        .unwrap();
        assert_eq!(parsed.canonical_degree(), 9);
    }

    #[test]
    fn slope_serde() {
        let s = Slope::new(3, 2);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "\"3/2\"");
        assert_eq!(serde_json::from_str::<Slope>(&j).unwrap(), s);
        assert_eq!(
            serde_json::from_str::<Slope>("\"-4\"").unwrap(),
            Slope::integer(-4)
        );
    }
}
