//! Smooth complete toric surfaces.
//!
//! A surface is given by its fan: primitive rays in `Z^2`, ordered
//! counterclockwise, with consecutive rays forming a lattice basis. Torus
//! invariant divisors are stored as full ray-coefficient vectors, so
//! pullbacks along blowups are coordinate insertions and linear equivalence
//! is a two-variable integer solve.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lattice vector in `N = Z^2`.
pub type Ray = [i64; 2];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToricError {
    #[error("ray {ray:?} is not primitive")]
    NonPrimitiveRay { ray: Ray },
    #[error("rays {a:?} and {b:?} do not span a smooth cone (determinant {det})")]
    NotSmooth { a: Ray, b: Ray, det: i64 },
    #[error("fan is not complete: {0}")]
    NotComplete(String),
    #[error("rays are not in counterclockwise order at {a:?} -> {b:?}")]
    WrongOrientation { a: Ray, b: Ray },
    #[error("cone index {index} out of range for a fan with {rays} rays")]
    InvalidCone { index: usize, rays: usize },
    #[error("divisor has {got} coefficients, surface has {expected} rays")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ray {index} cannot be contracted: {reason}")]
    NotContractible { index: usize, reason: String },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

/// Ordered primitive rays of a smooth complete fan.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fan {
    #[serde(default)]
    pub name: String,
    pub rays: Vec<Ray>,
}

fn det(a: Ray, b: Ray) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

// 0 for directions in [0, pi), 1 for [pi, 2pi).
fn half(v: Ray) -> u8 {
    if v[1] > 0 || (v[1] == 0 && v[0] > 0) {
        0
    } else {
        1
    }
}

/// Counterclockwise angular order starting at the positive x-axis.
pub fn angular_cmp(a: Ray, b: Ray) -> Ordering {
    half(a).cmp(&half(b)).then_with(|| 0.cmp(&det(a, b)))
}

impl Fan {
    /// Validates rays given in any order and normalizes them to
    /// counterclockwise order starting from the first ray at angle `>= 0`.
    pub fn new(name: impl Into<String>, rays: &[Ray]) -> Result<Fan, ToricError> {
        check_primitive(rays)?;
        let mut sorted = rays.to_vec();
        sorted.sort_by(|a, b| angular_cmp(*a, *b));
        let fan = Fan {
            name: name.into(),
            rays: sorted,
        };
        fan.check_cycle()?;
        Ok(fan)
    }

    /// Validates rays that must already be a counterclockwise cycle (from
    /// any starting ray). The stored order is rotated to the normal form.
    pub fn from_cyclic(name: impl Into<String>, rays: &[Ray]) -> Result<Fan, ToricError> {
        check_primitive(rays)?;
        if rays.len() >= 3 {
            let n = rays.len();
            let mut turns = 0;
            for i in 0..n {
                let (a, b) = (rays[i], rays[(i + 1) % n]);
                let d = det(a, b);
                if d < 0 {
                    return Err(ToricError::WrongOrientation { a, b });
                }
                if half(a) == 1 && half(b) == 0 {
                    turns += 1;
                }
            }
            if turns != 1 {
                return Err(ToricError::NotComplete(
                    "rays do not wind exactly once around the origin".into(),
                ));
            }
        }
        Fan::new(name, rays)
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    fn check_cycle(&self) -> Result<(), ToricError> {
        let n = self.rays.len();
        if n < 3 {
            return Err(ToricError::NotComplete(format!(
                "a complete fan needs at least 3 rays, got {n}"
            )));
        }
        for i in 0..n {
            let (a, b) = (self.rays[i], self.rays[(i + 1) % n]);
            let d = det(a, b);
            if d < 0 || (d == 0 && a[0] * b[0] + a[1] * b[1] < 0) {
                return Err(ToricError::NotComplete(format!(
                    "no cone covers the directions between {a:?} and {b:?}"
                )));
            }
        }
        for i in 0..n {
            let (a, b) = (self.rays[i], self.rays[(i + 1) % n]);
            let d = det(a, b);
            if d != 1 {
                return Err(ToricError::NotSmooth { a, b, det: d });
            }
        }
        Ok(())
    }
}

fn check_primitive(rays: &[Ray]) -> Result<(), ToricError> {
    for &r in rays {
        if r[0].gcd(&r[1]) != 1 {
            return Err(ToricError::NonPrimitiveRay { ray: r });
        }
    }
    Ok(())
}

/// Torus-invariant divisor `sum coeffs[i] * D_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivisorClass(pub Vec<i64>);

impl DivisorClass {
    pub fn zero(n: usize) -> Self {
        DivisorClass(vec![0; n])
    }

    pub fn ray(n: usize, i: usize) -> Self {
        let mut c = vec![0; n];
        c[i] = 1;
        DivisorClass(c)
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        DivisorClass(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        DivisorClass(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> Self {
        DivisorClass(self.0.iter().map(|a| a * k).collect())
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Dimensions of `H^0, H^1, H^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cohomology {
    pub h0: u64,
    pub h1: u64,
    pub h2: u64,
}

impl Cohomology {
    pub fn euler(&self) -> i64 {
        self.h0 as i64 - self.h1 as i64 + self.h2 as i64
    }

    pub fn vanishes(&self) -> bool {
        self.h0 == 0 && self.h1 == 0 && self.h2 == 0
    }

    pub fn higher_vanish(&self) -> bool {
        self.h1 == 0 && self.h2 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    DelPezzo,
    WeakDelPezzo,
    Rejected,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::DelPezzo => "del-pezzo",
            SurfaceKind::WeakDelPezzo => "weak-del-pezzo",
            SurfaceKind::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakDPVerdict {
    pub kind: SurfaceKind,
    pub degree: i64,
    pub minus2curves: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl WeakDPVerdict {
    pub fn is_weak_del_pezzo(&self) -> bool {
        self.kind != SurfaceKind::Rejected
    }
}

/// A smooth complete toric surface with its intersection data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmoothToricSurface {
    pub fan: Fan,
    pub selfint: Vec<i64>,
    pub canonical: DivisorClass,
    pub degree: i64,
}

/// Where each ray of a blown-up fan comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RaySource {
    Old(usize),
    Sum(usize, usize),
}

/// Total transform along a toric blowup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PullbackMap {
    base_rays: usize,
    sources: Vec<RaySource>,
}

impl PullbackMap {
    pub fn pullback(&self, d: &DivisorClass) -> Result<DivisorClass, ToricError> {
        if d.len() != self.base_rays {
            return Err(ToricError::DimensionMismatch {
                expected: self.base_rays,
                got: d.len(),
            });
        }
        Ok(DivisorClass(
            self.sources
                .iter()
                .map(|s| match *s {
                    RaySource::Old(j) => d.0[j],
                    RaySource::Sum(i, j) => d.0[i] + d.0[j],
                })
                .collect(),
        ))
    }

    pub fn base_rays(&self) -> usize {
        self.base_rays
    }
}

#[derive(Debug, Clone)]
pub struct Blowup {
    pub surface: SmoothToricSurface,
    /// Index of the exceptional ray in the new fan.
    pub exceptional_index: usize,
    pub exceptional: DivisorClass,
    pub pullback: PullbackMap,
}

/// Parses a fan file `{"name": ..., "rays": [[x, y], ...]}`.
pub fn fan_from_json(text: &str) -> Result<SmoothToricSurface, FanFileError> {
    let file: Fan = serde_json::from_str(text)?;
    Ok(validate_fan(&file.name, &file.rays)?)
}

#[derive(Debug, Error)]
pub enum FanFileError {
    #[error("malformed fan file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toric(#[from] ToricError),
}

pub fn validate_fan(name: &str, rays: &[Ray]) -> Result<SmoothToricSurface, ToricError> {
    SmoothToricSurface::new(Fan::new(name, rays)?)
}

impl SmoothToricSurface {
    pub fn new(fan: Fan) -> Result<Self, ToricError> {
        let n = fan.len();
        let mut selfint = Vec::with_capacity(n);
        for i in 0..n {
            let v = fan.rays[i];
            let prev = fan.rays[(i + n - 1) % n];
            let next = fan.rays[(i + 1) % n];
            let s = [prev[0] + next[0], prev[1] + next[1]];
            let a = if v[0] != 0 {
                if s[0] % v[0] != 0 {
                    None
                } else {
                    Some(s[0] / v[0])
                }
            } else if s[1] % v[1] != 0 {
                None
            } else {
                Some(s[1] / v[1])
            };
            match a {
                Some(a) if [a * v[0], a * v[1]] == s => selfint.push(-a),
                _ => {
                    return Err(ToricError::NotSmooth {
                        a: prev,
                        b: next,
                        det: det(prev, next),
                    })
                }
            }
        }
        let canonical = DivisorClass(vec![-1; n]);
        let surface = SmoothToricSurface {
            degree: 12 - n as i64,
            fan,
            selfint,
            canonical,
        };
        let ksq = surface.intersect_unchecked(&surface.canonical, &surface.canonical);
        if ksq != surface.degree {
            return Err(ToricError::InternalInconsistency(format!(
                "K^2 = {ksq} but 12 - #rays = {}",
                surface.degree
            )));
        }
        Ok(surface)
    }

    pub fn name(&self) -> &str {
        &self.fan.name
    }

    pub fn rays(&self) -> &[Ray] {
        &self.fan.rays
    }

    pub fn num_rays(&self) -> usize {
        self.fan.len()
    }

    /// Rank of the Picard group.
    pub fn picard_rank(&self) -> usize {
        self.num_rays() - 2
    }

    pub fn ray_divisor(&self, i: usize) -> DivisorClass {
        DivisorClass::ray(self.num_rays(), i)
    }

    pub fn zero_divisor(&self) -> DivisorClass {
        DivisorClass::zero(self.num_rays())
    }

    pub fn check_divisor(&self, d: &DivisorClass) -> Result<(), ToricError> {
        if d.len() != self.num_rays() {
            return Err(ToricError::DimensionMismatch {
                expected: self.num_rays(),
                got: d.len(),
            });
        }
        Ok(())
    }

    /// `D_i . D_j` for ray divisors.
    pub fn ray_product(&self, i: usize, j: usize) -> i64 {
        let n = self.num_rays();
        if i == j {
            self.selfint[i]
        } else if (i + 1) % n == j || (j + 1) % n == i {
            1
        } else {
            0
        }
    }

    pub fn intersect(&self, a: &DivisorClass, b: &DivisorClass) -> Result<i64, ToricError> {
        self.check_divisor(a)?;
        self.check_divisor(b)?;
        Ok(self.intersect_unchecked(a, b))
    }

    pub(crate) fn intersect_unchecked(&self, a: &DivisorClass, b: &DivisorClass) -> i64 {
        let n = self.num_rays();
        let mut total = 0;
        for i in 0..n {
            if a.0[i] == 0 {
                continue;
            }
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let mut row = self.selfint[i] * b.0[i] + b.0[next];
            if prev != next {
                row += b.0[prev];
            }
            total += a.0[i] * row;
        }
        total
    }

    /// Principal divisor `div(chi^m) = sum <m, v_i> D_i`.
    pub fn principal(&self, m: [i64; 2]) -> DivisorClass {
        DivisorClass(
            self.fan
                .rays
                .iter()
                .map(|v| m[0] * v[0] + m[1] * v[1])
                .collect(),
        )
    }

    // Solves <m, v_i> = a, <m, v_{i+1}> = b; consecutive rays have det 1.
    fn solve_cone(&self, i: usize, a: i64, b: i64) -> [i64; 2] {
        let n = self.num_rays();
        let v0 = self.fan.rays[i];
        let v1 = self.fan.rays[(i + 1) % n];
        [v1[1] * a - v0[1] * b, -v1[0] * a + v0[0] * b]
    }

    /// Representative of the class of `d` with the first two coefficients
    /// zero. Two divisors are linearly equivalent iff their normal forms
    /// coincide; the remaining coefficients are Picard coordinates.
    pub fn normal_form(&self, d: &DivisorClass) -> DivisorClass {
        let m = self.solve_cone(0, d.0[0], d.0[1]);
        d.sub(&self.principal(m))
    }

    /// Picard-lattice coordinates (normal form without the two zero slots).
    pub fn picard_coords(&self, d: &DivisorClass) -> Vec<i64> {
        self.normal_form(d).0[2..].to_vec()
    }

    pub fn from_picard_coords(&self, coords: &[i64]) -> DivisorClass {
        let mut c = vec![0, 0];
        c.extend_from_slice(coords);
        DivisorClass(c)
    }

    pub fn equivalent(&self, a: &DivisorClass, b: &DivisorClass) -> Result<bool, ToricError> {
        self.check_divisor(a)?;
        self.check_divisor(b)?;
        Ok(self.normal_form(&a.sub(b)).0.iter().all(|&c| c == 0))
    }

    pub fn ksq(&self) -> i64 {
        self.degree
    }

    pub fn classify(&self) -> WeakDPVerdict {
        let minus2curves: Vec<usize> = (0..self.num_rays())
            .filter(|&i| self.selfint[i] == -2)
            .collect();
        if let Some(i) = (0..self.num_rays()).find(|&i| self.selfint[i] < -2) {
            return WeakDPVerdict {
                kind: SurfaceKind::Rejected,
                degree: self.degree,
                minus2curves,
                reason: Some(format!(
                    "ray {i} {:?} has self-intersection {}, so -K is not nef",
                    self.fan.rays[i], self.selfint[i]
                )),
            };
        }
        if self.degree <= 0 {
            return WeakDPVerdict {
                kind: SurfaceKind::Rejected,
                degree: self.degree,
                minus2curves,
                reason: Some(format!("K^2 = {} is not positive", self.degree)),
            };
        }
        let kind = if minus2curves.is_empty() {
            SurfaceKind::DelPezzo
        } else {
            SurfaceKind::WeakDelPezzo
        };
        WeakDPVerdict {
            kind,
            degree: self.degree,
            minus2curves,
            reason: None,
        }
    }

    /// Number of lattice points `m` with `<m, v_i> >= -a_i` for all `i`.
    pub fn h0(&self, d: &DivisorClass) -> Result<u64, ToricError> {
        self.check_divisor(d)?;
        Ok(self.h0_unchecked(d))
    }

    pub(crate) fn h0_unchecked(&self, d: &DivisorClass) -> u64 {
        let n = self.num_rays();
        // The section polygon lies in the convex hull of the cone vertices.
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        for i in 0..n {
            let m = self.solve_cone(i, -d.0[i], -d.0[(i + 1) % n]);
            for k in 0..2 {
                lo[k] = lo[k].min(m[k]);
                hi[k] = hi[k].max(m[k]);
            }
        }
        let mut count = 0;
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                if self
                    .fan
                    .rays
                    .iter()
                    .zip(&d.0)
                    .all(|(v, a)| x * v[0] + y * v[1] >= -a)
                {
                    count += 1;
                }
            }
        }
        count
    }

    /// `chi(O(D)) = 1 + D.(D - K)/2`.
    pub fn euler_characteristic(&self, d: &DivisorClass) -> Result<i64, ToricError> {
        self.check_divisor(d)?;
        Ok(self.euler_unchecked(d))
    }

    pub(crate) fn euler_unchecked(&self, d: &DivisorClass) -> i64 {
        let dk = d.sub(&self.canonical);
        1 + self.intersect_unchecked(d, &dk) / 2
    }

    pub fn cohomology(&self, d: &DivisorClass) -> Result<Cohomology, ToricError> {
        self.check_divisor(d)?;
        let h0 = self.h0_unchecked(d);
        let h2 = self.h0_unchecked(&self.canonical.sub(d));
        let chi = self.euler_unchecked(d);
        let h1 = h0 as i64 + h2 as i64 - chi;
        if h1 < 0 {
            return Err(ToricError::InternalInconsistency(format!(
                "h1 = {h1} < 0 for divisor {d} (h0 = {h0}, h2 = {h2}, chi = {chi})"
            )));
        }
        Ok(Cohomology {
            h0,
            h1: h1 as u64,
            h2,
        })
    }

    /// Star subdivision of the cone spanned by rays `corner` and `corner + 1`.
    pub fn blowup(&self, corner: usize) -> Result<Blowup, ToricError> {
        let n = self.num_rays();
        if corner >= n {
            return Err(ToricError::InvalidCone {
                index: corner,
                rays: n,
            });
        }
        let next = (corner + 1) % n;
        let a = self.fan.rays[corner];
        let b = self.fan.rays[next];
        let new_ray = [a[0] + b[0], a[1] + b[1]];
        let mut tagged: Vec<(Ray, RaySource)> = (0..n)
            .map(|j| (self.fan.rays[j], RaySource::Old(j)))
            .collect();
        tagged.push((new_ray, RaySource::Sum(corner, next)));
        tagged.sort_by(|x, y| angular_cmp(x.0, y.0));
        let rays: Vec<Ray> = tagged.iter().map(|t| t.0).collect();
        let name = if self.fan.name.is_empty() {
            String::new()
        } else {
            format!("{}+blowup({corner})", self.fan.name)
        };
        let surface = SmoothToricSurface::new(Fan::new(name, &rays)?)?;
        let exceptional_index = tagged
            .iter()
            .position(|t| matches!(t.1, RaySource::Sum(..)))
            .expect("inserted ray present");
        if surface.selfint[exceptional_index] != -1 {
            return Err(ToricError::InternalInconsistency(
                "exceptional ray does not have self-intersection -1".into(),
            ));
        }
        Ok(Blowup {
            exceptional: surface.ray_divisor(exceptional_index),
            exceptional_index,
            pullback: PullbackMap {
                base_rays: n,
                sources: tagged.iter().map(|t| t.1).collect(),
            },
            surface,
        })
    }

    /// Rays whose divisor is a torus-invariant `(-1)`-curve.
    pub fn contractible_rays(&self) -> Vec<usize> {
        if self.num_rays() <= 3 {
            return Vec::new();
        }
        (0..self.num_rays())
            .filter(|&i| self.selfint[i] == -1)
            .collect()
    }

    /// Contracts the `(-1)`-curve of ray `index`. Returns the smaller
    /// surface and the corner whose blowup recovers this fan.
    pub fn blowdown(&self, index: usize) -> Result<(SmoothToricSurface, usize), ToricError> {
        let n = self.num_rays();
        if index >= n {
            return Err(ToricError::InvalidCone { index, rays: n });
        }
        if n <= 3 || self.selfint[index] != -1 {
            return Err(ToricError::NotContractible {
                index,
                reason: format!("self-intersection {}", self.selfint[index]),
            });
        }
        let prev = self.fan.rays[(index + n - 1) % n];
        let rays: Vec<Ray> = self
            .fan
            .rays
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != index)
            .map(|(_, r)| *r)
            .collect();
        let base = SmoothToricSurface::new(Fan::new(self.fan.name.clone(), &rays)?)?;
        let corner = base
            .fan
            .rays
            .iter()
            .position(|r| *r == prev)
            .expect("neighbour survives contraction");
        Ok((base, corner))
    }
}
