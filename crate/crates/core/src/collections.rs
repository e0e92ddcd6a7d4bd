//! Exceptional collections of line bundles and mutation outputs.
//!
//! Line members are tracked by divisor and get honest cohomology. Members
//! produced by mutations are carried as numerical classes only, together
//! with the facts (exceptional, vector bundle, semistable) that were
//! justified when they were created.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ktheory::{self, KClass, KTheoryError, NumericalSurface, Slope};
use crate::toric::{Blowup, DivisorClass, SmoothToricSurface, ToricError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollectionError {
    #[error("not exceptional: Ext^{degree}(E_{}, E_{}) has dimension {dimension}", .pair.0, .pair.1)]
    NotExceptional {
        pair: (usize, usize),
        degree: u8,
        dimension: u64,
    },
    #[error("first member is not the structure sheaf")]
    FirstMemberNotTrivial,
    #[error("index {index} out of range for a collection of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("Ext data for the pair ({0}, {1}) is needed but not certified")]
    HypothesisUnknown(usize, usize),
    #[error("the trivial member would be twisted by the rotation step")]
    TrivialMemberWouldTwist,
    #[error("slope sorting did not finish within {max_steps} steps")]
    StepLimitExceeded {
        max_steps: usize,
        trace: Vec<TraceStep>,
    },
    #[error("surface is not weak del Pezzo: {0}")]
    NotWeakDelPezzo(String),
    #[error("blowup does not start from this surface")]
    WrongBlowup,
    #[error("member {0} has rank zero; its slope is undefined")]
    ZeroRank(usize),
    #[error("trace replay diverged at step {0}")]
    ReplayMismatch(usize),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Toric(#[from] ToricError),
    #[error(transparent)]
    KTheory(#[from] KTheoryError),
}

/// Dimensions of `Hom, Ext^1, Ext^2` between two objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtDims {
    pub hom: u64,
    pub ext1: u64,
    pub ext2: u64,
}

impl ExtDims {
    pub const ZERO: ExtDims = ExtDims {
        hom: 0,
        ext1: 0,
        ext2: 0,
    };

    pub fn get(&self, p: u8) -> u64 {
        match p {
            0 => self.hom,
            1 => self.ext1,
            _ => self.ext2,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == ExtDims::ZERO
    }

    pub fn euler(&self) -> i64 {
        self.hom as i64 - self.ext1 as i64 + self.ext2 as i64
    }
}

impl From<crate::toric::Cohomology> for ExtDims {
    fn from(c: crate::toric::Cohomology) -> Self {
        ExtDims {
            hom: c.h0,
            ext1: c.h1,
            ext2: c.h2,
        }
    }
}

/// Facts about a member, each with the name of the rule that justified it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemberFlags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceptional: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_bundle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semistable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indecomposable: Option<String>,
}

impl MemberFlags {
    pub fn line_bundle() -> Self {
        MemberFlags {
            exceptional: Some("line-bundle".into()),
            vector_bundle: Some("line-bundle".into()),
            semistable: Some("rank-one".into()),
            indecomposable: Some("line-bundle".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MemberKind {
    Line(DivisorClass),
    Opaque {
        class: KClass,
        provenance: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Member {
    pub kind: MemberKind,
    pub flags: MemberFlags,
}

impl Member {
    pub fn line(d: DivisorClass) -> Self {
        Member {
            kind: MemberKind::Line(d),
            flags: MemberFlags::line_bundle(),
        }
    }

    pub fn opaque(class: KClass, provenance: Vec<String>, flags: MemberFlags) -> Self {
        Member {
            kind: MemberKind::Opaque { class, provenance },
            flags,
        }
    }

    pub fn divisor(&self) -> Option<&DivisorClass> {
        match &self.kind {
            MemberKind::Line(d) => Some(d),
            MemberKind::Opaque { .. } => None,
        }
    }

    pub fn class<S: NumericalSurface + ?Sized>(&self, surface: &S) -> KClass {
        match &self.kind {
            MemberKind::Line(d) => KClass::line(surface, d),
            MemberKind::Opaque { class, .. } => class.clone(),
        }
    }

    pub fn is_trivial(&self, surface: &SmoothToricSurface) -> bool {
        match &self.kind {
            MemberKind::Line(d) => surface.normal_form(d).0.iter().all(|&c| c == 0),
            MemberKind::Opaque { .. } => false,
        }
    }

    fn twisted(&self, surface: &SmoothToricSurface, l: &DivisorClass, label: &str) -> Member {
        match &self.kind {
            MemberKind::Line(d) => Member::line(d.add(l)),
            MemberKind::Opaque { class, provenance } => {
                let mut provenance = provenance.clone();
                provenance.push(label.to_string());
                Member::opaque(
                    ktheory::twist_unchecked(surface, class, l),
                    provenance,
                    self.flags.clone(),
                )
            }
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MemberKind::Line(d) => write!(f, "O({d})"),
            MemberKind::Opaque { class, .. } => write!(f, "{class}"),
        }
    }
}

/// How fullness of a collection is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fullness {
    ByConstruction,
    NumericallyConsistent,
    Unknown,
}

impl fmt::Display for Fullness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fullness::ByConstruction => "by-construction",
            Fullness::NumericallyConsistent => "numerically-consistent",
            Fullness::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcCollection {
    pub surface: SmoothToricSurface,
    pub members: Vec<Member>,
    pub fullness: Fullness,
    pub trivial_index: Option<usize>,
}

/// Kind of a sorting step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Transposition,
    LeftMutation,
    RightMutation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// One line of a sorting trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub rule: StepRule,
    pub index: usize,
    pub members: Vec<KClass>,
}

/// Sign convention for mutated classes, which are only defined up to shift:
/// positive rank, or for rank zero positive degree against `-K`, then
/// positive `chi`, then a positive leading Picard coordinate.
fn is_negative(surface: &SmoothToricSurface, class: &KClass) -> bool {
    if class.rank != 0 {
        return class.rank < 0;
    }
    let deg = surface.intersect_unchecked(&surface.canonical.neg(), &class.c1);
    if deg != 0 {
        return deg < 0;
    }
    if class.chi != 0 {
        return class.chi < 0;
    }
    surface
        .picard_coords(&class.c1)
        .into_iter()
        .find(|&c| c != 0)
        .is_some_and(|c| c < 0)
}

/// Default cap on sorting steps for a collection of length `n`.
pub fn default_max_steps(n: usize) -> usize {
    64 * n * n
}

impl ExcCollection {
    /// Wraps line bundles without checking exceptionality.
    pub fn from_lines_unchecked(
        surface: &SmoothToricSurface,
        divisors: &[DivisorClass],
        fullness: Fullness,
    ) -> ExcCollection {
        let mut out = ExcCollection {
            surface: surface.clone(),
            members: divisors.iter().cloned().map(Member::line).collect(),
            fullness,
            trivial_index: None,
        };
        out.trivial_index = out.find_trivial();
        out
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn classes(&self) -> Vec<KClass> {
        self.members
            .iter()
            .map(|m| m.class(&self.surface))
            .collect()
    }

    pub fn slope(&self, i: usize) -> Result<Slope, CollectionError> {
        ktheory::slope(&self.surface, &self.members[i].class(&self.surface))
            .map_err(|_| CollectionError::ZeroRank(i))
    }

    pub fn slopes(&self) -> Result<Vec<Slope>, CollectionError> {
        (0..self.len()).map(|i| self.slope(i)).collect()
    }

    pub fn gram(&self) -> Vec<Vec<i64>> {
        ktheory::gram_matrix(&self.surface, &self.classes())
    }

    /// `G[j][i] = 0` for `i < j` and unit diagonal.
    pub fn gram_is_unit_upper_triangular(&self) -> bool {
        let g = self.gram();
        (0..g.len()).all(|i| g[i][i] == 1 && (0..i).all(|j| g[i][j] == 0))
    }

    /// Determinant of the member classes in a basis of the numerical
    /// K-group (zero when the length differs from the K-group rank).
    pub fn class_determinant(&self) -> i128 {
        ktheory::class_determinant(&self.surface, &self.classes())
    }

    pub fn find_trivial(&self) -> Option<usize> {
        self.members
            .iter()
            .position(|m| m.is_trivial(&self.surface))
    }

    /// Honest or rule-certified dimensions of `Ext^*(E_i, E_j)`.
    ///
    /// Line pairs use toric cohomology. Other pairs are resolved only when
    /// both members are certified semistable and the slopes force `Hom` and
    /// `Ext^2` to vanish, in which case `Ext^1 = -chi`.
    pub fn rhom(&self, i: usize, j: usize) -> Option<ExtDims> {
        let (a, b) = (&self.members[i], &self.members[j]);
        if let (MemberKind::Line(x), MemberKind::Line(y)) = (&a.kind, &b.kind) {
            return self.surface.cohomology(&y.sub(x)).ok().map(ExtDims::from);
        }
        if i == j && a.flags.exceptional.is_some() {
            return Some(ExtDims {
                hom: 1,
                ext1: 0,
                ext2: 0,
            });
        }
        if i > j && a.flags.exceptional.is_some() && b.flags.exceptional.is_some() {
            return Some(ExtDims::ZERO);
        }
        if a.flags.semistable.is_none() || b.flags.semistable.is_none() {
            return None;
        }
        let (ca, cb) = (a.class(&self.surface), b.class(&self.surface));
        let (sa, sb) = (
            ktheory::slope(&self.surface, &ca).ok()?,
            ktheory::slope(&self.surface, &cb).ok()?,
        );
        let ksq = self.surface.ksq();
        // Hom(A, B) = 0 if mu(A) > mu(B); Ext^2(A, B) = D Hom(B, A(K)) = 0 if mu(B) > mu(A) - K^2.
        if sa > sb && sb > sa.shift(-ksq) {
            let chi = ktheory::pairing_unchecked(&self.surface, &ca, &cb);
            if chi > 0 {
                return None;
            }
            return Some(ExtDims {
                hom: 0,
                ext1: (-chi) as u64,
                ext2: 0,
            });
        }
        None
    }

    fn check_index(&self, i: usize) -> Result<(), CollectionError> {
        if i + 1 >= self.len() {
            return Err(CollectionError::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Left mutation of the pair at `(i, i + 1)`: `(A, B) -> (L_A B, A)`.
    pub fn mutate_left(&self, i: usize) -> Result<(ExcCollection, StepRule), CollectionError> {
        self.mutate(i, Direction::Left)
    }

    /// Right mutation of the pair at `(i, i + 1)`: `(A, B) -> (B, R_B A)`.
    pub fn mutate_right(&self, i: usize) -> Result<(ExcCollection, StepRule), CollectionError> {
        self.mutate(i, Direction::Right)
    }

    pub fn mutate(
        &self,
        i: usize,
        dir: Direction,
    ) -> Result<(ExcCollection, StepRule), CollectionError> {
        self.check_index(i)?;
        let surface = &self.surface;
        let (a, b) = (&self.members[i], &self.members[i + 1]);
        let (ca, cb) = (a.class(surface), b.class(surface));
        let chi = ktheory::pairing_unchecked(surface, &ca, &cb);
        let orthogonal = if chi != 0 {
            false
        } else {
            match self.rhom(i, i + 1) {
                Some(d) => d.is_zero(),
                None => return Err(CollectionError::HypothesisUnknown(i, i + 1)),
            }
        };
        let mut out = self.clone();
        if orthogonal {
            out.members.swap(i, i + 1);
            out.trivial_index = self.trivial_index.map(|t| {
                if t == i {
                    i + 1
                } else if t == i + 1 {
                    i
                } else {
                    t
                }
            });
            return Ok((out, StepRule::Transposition));
        }

        // [L_A B] = chi(A, B)[A] - [B], [R_B A] = chi(A, B)[B] - [A], up to shift.
        let (mut class, label, kept, rule) = match dir {
            Direction::Left => (
                ca.scale(chi).sub(&cb),
                format!("L(E{i}, E{})", i + 1),
                a,
                StepRule::LeftMutation,
            ),
            Direction::Right => (
                cb.scale(chi).sub(&ca),
                format!("R(E{}, E{i})", i + 1),
                b,
                StepRule::RightMutation,
            ),
        };
        let mut provenance = vec![label];
        if is_negative(surface, &class) {
            class = class.neg();
            provenance.push("shift[1]".into());
        }
        let mut flags = MemberFlags {
            exceptional: Some("mutation-of-exceptional-pair".into()),
            indecomposable: Some("exceptional".into()),
            ..MemberFlags::default()
        };
        let sa = ktheory::slope(surface, &ca).ok();
        let sb = ktheory::slope(surface, &cb).ok();
        let hypothesis = matches!((sa, sb), (Some(x), Some(y)) if x > y)
            && a.flags.vector_bundle.is_some()
            && b.flags.vector_bundle.is_some();
        if hypothesis {
            let (sa, sb) = (sa.unwrap(), sb.unwrap());
            let s = ktheory::slope(surface, &class).map_err(|_| {
                CollectionError::InternalInconsistency(format!(
                    "mutation of a slope-decreasing pair produced the rank-zero class {class}"
                ))
            })?;
            if !(sb < s && s < sa) {
                return Err(CollectionError::InternalInconsistency(format!(
                    "mutated slope {s} is not strictly between {sb} and {sa}"
                )));
            }
            flags.vector_bundle = Some("prop-mut".into());
            flags.semistable = Some("stable-exceptional-bundle".into());
        }
        let new = Member::opaque(class, provenance, flags);
        let kept = kept.clone();
        match dir {
            Direction::Left => {
                out.members[i] = new;
                out.members[i + 1] = kept;
                out.trivial_index = match self.trivial_index {
                    Some(t) if t == i => Some(i + 1),
                    Some(t) if t == i + 1 => None,
                    t => t,
                };
            }
            Direction::Right => {
                out.members[i] = kept;
                out.members[i + 1] = new;
                out.trivial_index = match self.trivial_index {
                    Some(t) if t == i + 1 => Some(i),
                    Some(t) if t == i => None,
                    t => t,
                };
            }
        }
        Ok((out, rule))
    }

    /// Helix rotation `(E_1, ..., E_n) -> (E_n(K), E_1, ..., E_{n-1})`.
    pub fn rotate(&self) -> Result<ExcCollection, CollectionError> {
        let n = self.len();
        if n == 0 {
            return Ok(self.clone());
        }
        if self.trivial_index == Some(n - 1) {
            return Err(CollectionError::TrivialMemberWouldTwist);
        }
        let k = self.surface.canonical.clone();
        let mut members = Vec::with_capacity(n);
        members.push(self.members[n - 1].twisted(&self.surface, &k, "twist(K)"));
        members.extend(self.members[..n - 1].iter().cloned());
        Ok(ExcCollection {
            surface: self.surface.clone(),
            members,
            fullness: self.fullness,
            trivial_index: self.trivial_index.map(|t| t + 1),
        })
    }

    fn window_holds(&self, slopes: &[Slope]) -> bool {
        match (slopes.first(), slopes.last()) {
            (Some(lo), Some(hi)) => *hi < lo.shift(self.surface.ksq()),
            _ => true,
        }
    }

    fn record(&self, trace: &mut Vec<TraceStep>, rule: StepRule, index: usize) {
        trace.push(TraceStep {
            step: trace.len(),
            rule,
            index,
            members: self.classes(),
        });
    }

    /// Sorts by slope with adjacent mutations and helix rotations until
    /// `mu(E_1) <= ... <= mu(E_n) < mu(E_1) + K^2`.
    pub fn sort_by_slope(
        &self,
        max_steps: usize,
    ) -> Result<(ExcCollection, Vec<TraceStep>), CollectionError> {
        let mut cur = self.clone();
        let mut trace = Vec::new();
        let over = |trace: &Vec<TraceStep>| trace.len() >= max_steps;
        loop {
            let mut changed = true;
            while changed {
                changed = false;
                for i in 0..cur.len().saturating_sub(1) {
                    if cur.slope(i)? > cur.slope(i + 1)? {
                        if over(&trace) {
                            return Err(CollectionError::StepLimitExceeded { max_steps, trace });
                        }
                        // keep the trivial member intact
                        let dir = if cur.trivial_index == Some(i) {
                            Direction::Left
                        } else {
                            Direction::Right
                        };
                        let (next, rule) = cur.mutate(i, dir)?;
                        cur = next;
                        cur.record(&mut trace, rule, i);
                        changed = true;
                    }
                }
            }
            let slopes = cur.slopes()?;
            if cur.window_holds(&slopes) {
                return Ok((cur, trace));
            }
            let n = cur.len();
            if cur.trivial_index == Some(n - 1) {
                let movable = n >= 2
                    && slopes[n - 2] == slopes[n - 1]
                    && cur.rhom(n - 2, n - 1).is_some_and(|d| d.is_zero())
                    && cur.rhom(n - 1, n - 2).is_some_and(|d| d.is_zero());
                if !movable {
                    return Err(CollectionError::TrivialMemberWouldTwist);
                }
                if over(&trace) {
                    return Err(CollectionError::StepLimitExceeded { max_steps, trace });
                }
                let (next, rule) = cur.mutate(n - 2, Direction::Left)?;
                cur = next;
                cur.record(&mut trace, rule, n - 2);
            }
            if over(&trace) {
                return Err(CollectionError::StepLimitExceeded { max_steps, trace });
            }
            cur = cur.rotate()?;
            cur.record(&mut trace, StepRule::Rotation, n - 1);
        }
    }

    /// Re-applies a trace and checks every intermediate class list.
    pub fn replay(&self, trace: &[TraceStep]) -> Result<ExcCollection, CollectionError> {
        let mut cur = self.clone();
        for (k, step) in trace.iter().enumerate() {
            cur = match step.rule {
                StepRule::Rotation => cur.rotate()?,
                StepRule::LeftMutation => cur.mutate(step.index, Direction::Left)?.0,
                StepRule::RightMutation => cur.mutate(step.index, Direction::Right)?.0,
                StepRule::Transposition => {
                    let (next, rule) = cur.mutate(step.index, Direction::Right)?;
                    if rule != StepRule::Transposition {
                        return Err(CollectionError::ReplayMismatch(k));
                    }
                    next
                }
            };
            if cur.classes() != step.members {
                return Err(CollectionError::ReplayMismatch(k));
            }
        }
        Ok(cur)
    }

    /// For every ordered pair `i != j`: honest dims for `i < j` between line
    /// members, zero for `i > j`, `None` where unknown.
    pub fn strongness_report(&self) -> BTreeMap<(usize, usize), Option<ExtDims>> {
        let mut out = BTreeMap::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i == j {
                    continue;
                }
                let entry = if i > j {
                    Some(ExtDims::ZERO)
                } else {
                    match (&self.members[i].kind, &self.members[j].kind) {
                        (MemberKind::Line(_), MemberKind::Line(_)) => self.rhom(i, j),
                        _ => None,
                    }
                };
                out.insert((i, j), entry);
            }
        }
        out
    }

    pub fn is_strong(&self) -> bool {
        self.strongness_report()
            .values()
            .all(|e| matches!(e, Some(d) if d.ext1 == 0 && d.ext2 == 0))
    }

    /// Produces `(O_Y, O_Y(E), pi^* E_2, ..., pi^* E_n)` on the blowup.
    pub fn augment_blowup(&self, blowup: &Blowup) -> Result<ExcCollection, CollectionError> {
        if blowup.pullback.base_rays() != self.surface.num_rays() {
            return Err(CollectionError::WrongBlowup);
        }
        match self.members.first() {
            Some(m) if m.is_trivial(&self.surface) => {}
            _ => return Err(CollectionError::FirstMemberNotTrivial),
        }
        let y = &blowup.surface;
        let mut members = vec![
            Member::line(y.zero_divisor()),
            Member::line(blowup.exceptional.clone()),
        ];
        for m in &self.members[1..] {
            let pulled = match &m.kind {
                MemberKind::Line(d) => Member::line(blowup.pullback.pullback(d)?),
                MemberKind::Opaque { class, provenance } => {
                    let mut provenance = provenance.clone();
                    provenance.push("pullback".into());
                    Member::opaque(
                        KClass {
                            rank: class.rank,
                            c1: blowup.pullback.pullback(&class.c1)?,
                            chi: class.chi,
                        },
                        provenance,
                        MemberFlags {
                            semistable: None,
                            ..m.flags.clone()
                        },
                    )
                }
            };
            members.push(pulled);
        }
        let mut out = ExcCollection {
            surface: y.clone(),
            members,
            fullness: self.fullness,
            trivial_index: Some(0),
        };
        if out.fullness == Fullness::NumericallyConsistent && out.class_determinant().abs() != 1 {
            out.fullness = Fullness::Unknown;
        }
        Ok(out)
    }
}

/// Checks that `(O(D_1), ..., O(D_n))` is exceptional by honest cohomology.
pub fn verify_line_collection(
    surface: &SmoothToricSurface,
    divisors: &[DivisorClass],
) -> Result<ExcCollection, CollectionError> {
    for d in divisors {
        surface.check_divisor(d)?;
    }
    for i in 0..divisors.len() {
        for j in i + 1..divisors.len() {
            // RHom(O(D_j), O(D_i)) = H^*(D_i - D_j)
            let c = surface.cohomology(&divisors[i].sub(&divisors[j]))?;
            for (p, dim) in [(0u8, c.h0), (1, c.h1), (2, c.h2)] {
                if dim != 0 {
                    return Err(CollectionError::NotExceptional {
                        pair: (j, i),
                        degree: p,
                        dimension: dim,
                    });
                }
            }
        }
    }
    let mut out = ExcCollection {
        surface: surface.clone(),
        members: divisors.iter().cloned().map(Member::line).collect(),
        fullness: Fullness::Unknown,
        trivial_index: None,
    };
    out.trivial_index = out.find_trivial();
    if out.len() == surface.num_rays() && out.class_determinant().abs() == 1 {
        out.fullness = Fullness::NumericallyConsistent;
    }
    Ok(out)
}

/// Searches for window-sorted full exceptional collections of line bundles
/// starting with `O`, with Picard coordinates in `[-radius, radius]`.
pub fn search_sorted_line_collections(
    surface: &SmoothToricSurface,
    radius: i64,
    limit: usize,
) -> Result<Vec<ExcCollection>, CollectionError> {
    let verdict = surface.classify();
    if !verdict.is_weak_del_pezzo() {
        return Err(CollectionError::NotWeakDelPezzo(
            verdict.reason.unwrap_or_default(),
        ));
    }
    let rho = surface.picard_rank();
    let ksq = surface.ksq();
    let n = surface.num_rays();
    let mut candidates: Vec<(DivisorClass, Slope)> = Vec::new();
    let mut coords = vec![-radius; rho];
    loop {
        if coords.iter().any(|&c| c != 0) {
            let d = surface.from_picard_coords(&coords);
            let s = ktheory::slope(surface, &KClass::line(surface, &d))?;
            if s >= Slope::integer(0) && s < Slope::integer(ksq) {
                candidates.push((d, s));
            }
        }
        let mut k = rho;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            if coords[k] < radius {
                coords[k] += 1;
                for c in coords.iter_mut().skip(k + 1) {
                    *c = -radius;
                }
                break;
            }
            if k == 0 {
                coords.clear();
            }
        }
        if coords.is_empty() || rho == 0 {
            break;
        }
    }
    candidates.sort();

    let zero = surface.zero_divisor();
    let mut vanish_cache: HashMap<(usize, usize), bool> = HashMap::new();
    // backward[(x, y)]: RHom(O(D_y), O(D_x)) = 0, index usize::MAX for O.
    let mut orthogonal_back = |x: usize, y: usize| -> bool {
        *vanish_cache.entry((x, y)).or_insert_with(|| {
            let dx = if x == usize::MAX {
                &zero
            } else {
                &candidates[x].0
            };
            let dy = &candidates[y].0;
            surface
                .cohomology(&dx.sub(dy))
                .map(|c| c.vanishes())
                .unwrap_or(false)
        })
    };

    let mut results = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    // iterative DFS over candidate indices
    let mut next_start = vec![0usize];
    while let Some(start) = next_start.pop() {
        if results.len() >= limit {
            break;
        }
        let depth = stack.len();
        let mut found = None;
        for c in start..candidates.len() {
            if stack.contains(&c) {
                continue;
            }
            if let Some(&last) = stack.last() {
                if candidates[c].1 < candidates[last].1 {
                    continue;
                }
            }
            if !orthogonal_back(usize::MAX, c) {
                continue;
            }
            if stack.iter().all(|&p| orthogonal_back(p, c)) {
                found = Some(c);
                break;
            }
        }
        match found {
            Some(c) => {
                next_start.push(c + 1);
                stack.push(c);
                if depth + 2 == n {
                    let mut divisors = vec![zero.clone()];
                    divisors.extend(stack.iter().map(|&i| candidates[i].0.clone()));
                    let col = verify_line_collection(surface, &divisors)?;
                    if col.fullness == Fullness::NumericallyConsistent {
                        results.push(ExcCollection {
                            trivial_index: Some(0),
                            ..col
                        });
                    }
                    stack.pop();
                } else {
                    next_start.push(0);
                }
            }
            None => {
                stack.pop();
            }
        }
    }
    Ok(results)
}
