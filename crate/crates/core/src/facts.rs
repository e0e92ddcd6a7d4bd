//! Forward-chaining derivation of Ext facts.
//!
//! A fact states `dim Ext^p(A, B (x) O(tK)) = d` for two objects of a fact
//! base and a twist `t` from a small fixed window. Every fact names the rule
//! that produced it and the facts it was derived from. The rule system has
//! no negation, so saturation is monotone; a rule that would assign a
//! different dimension to an existing fact is a hard error.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collections::{ExcCollection, MemberKind};
use crate::ktheory::{self, KClass, Slope};
use crate::toric::{DivisorClass, SmoothToricSurface, ToricError};

/// Canonical twists kept in the fact universe. Closed under `t -> 1 - t`
/// (Serre duality), and contains `-1` for `Ext(T, T (x) omega^{-1})`.
pub const TWISTS: [i64; 4] = [-1, 0, 1, 2];

pub type ObjId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "R-COHOM")]
    Cohom,
    #[serde(rename = "R-EXCEPTIONAL")]
    Exceptional,
    #[serde(rename = "R-SERRE")]
    Serre,
    #[serde(rename = "R-STAB")]
    Stab,
    #[serde(rename = "R-EXT1SYM")]
    Ext1Sym,
    #[serde(rename = "R-CHI")]
    Chi,
    #[serde(rename = "R-UNIVAN")]
    Univan,
    #[serde(rename = "R-LES")]
    Les,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Cohom => "R-COHOM",
            Rule::Exceptional => "R-EXCEPTIONAL",
            Rule::Serre => "R-SERRE",
            Rule::Stab => "R-STAB",
            Rule::Ext1Sym => "R-EXT1SYM",
            Rule::Chi => "R-CHI",
            Rule::Univan => "R-UNIVAN",
            Rule::Les => "R-LES",
        })
    }
}

/// `Ext^degree(from, to (x) O(twist * K))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Key {
    pub from: ObjId,
    pub to: ObjId,
    pub twist: i64,
    pub degree: u8,
}

impl Key {
    pub fn new(from: ObjId, to: ObjId, twist: i64, degree: u8) -> Self {
        Key {
            from,
            to,
            twist,
            degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub key: Key,
    pub dim: u64,
    pub rule: Rule,
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("not exceptional: Ext^{degree}(E_{}, E_{}) has dimension {dimension}", .pair.0, .pair.1)]
    NotExceptional {
        pair: (usize, usize),
        degree: u8,
        dimension: u64,
    },
    #[error("rules disagree on {key:?}: {existing} by {existing_rule}, {new} by {new_rule}")]
    Conflict {
        key: Key,
        existing: u64,
        existing_rule: Rule,
        new: u64,
        new_rule: Rule,
    },
    #[error("hypothesis {0:?} of the universal extension is not certified")]
    HypothesisNotCertified(Key),
    #[error("extension multiplicity {given} contradicts certified dim Ext^1 = {certified}")]
    DimensionMismatch { given: u64, certified: u64 },
    #[error("extension of objects with different slopes {0} and {1}")]
    SlopeMismatch(String, String),
    #[error("object index {0} out of range")]
    UnknownObject(ObjId),
    #[error(transparent)]
    Toric(#[from] ToricError),
}

/// Which honest cohomology facts are seeded for line-bundle pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohomScope {
    /// Only `t = 0`; twisted facts must come from the other rules.
    Untwisted,
    AllTwists,
    /// No honest facts at all (used to audit the rules against cohomology).
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Position in the underlying exceptional collection.
    Member(usize),
    /// `0 -> by^d -> X -> base -> 0` (universal extension of `base` by `by`).
    Extension { base: ObjId, by: ObjId, d: u64 },
    /// `0 -> base -> Y -> by^d -> 0` (universal coextension of `base` by `by`).
    Coextension { base: ObjId, by: ObjId, d: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub class: KClass,
    pub slope: Option<Slope>,
    pub origin: Origin,
    pub line: Option<DivisorClass>,
    pub exceptional: bool,
    pub vector_bundle: bool,
    pub semistable: bool,
    pub indecomposable: bool,
    /// `X = X_0^m + F^n` is possible (the split form of an extension of
    /// indecomposables); `m`, `n` are not computed.
    pub may_split: bool,
}

#[derive(Debug, Clone)]
struct PendingUnivan {
    keys: Vec<Key>,
    inputs: Vec<usize>,
}

/// Objects, facts and the index from keys to facts.
#[derive(Debug, Clone)]
pub struct FactBase {
    surface: SmoothToricSurface,
    objects: Vec<Object>,
    facts: Vec<Fact>,
    index: HashMap<Key, usize>,
    scope: CohomScope,
    univan: Vec<PendingUnivan>,
}

fn twist_in_window(t: i64) -> bool {
    TWISTS.contains(&t)
}

impl FactBase {
    pub fn new(collection: &ExcCollection, scope: CohomScope) -> Result<Self, EngineError> {
        let surface = collection.surface.clone();
        let n = collection.len();
        for i in 0..n {
            for j in i + 1..n {
                if let (MemberKind::Line(a), MemberKind::Line(b)) =
                    (&collection.members[i].kind, &collection.members[j].kind)
                {
                    let c = surface.cohomology(&a.sub(b))?;
                    for (p, d) in [(0u8, c.h0), (1, c.h1), (2, c.h2)] {
                        if d != 0 {
                            return Err(EngineError::NotExceptional {
                                pair: (j, i),
                                degree: p,
                                dimension: d,
                            });
                        }
                    }
                }
            }
        }
        let objects = collection
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let class = m.class(&surface);
                Object {
                    slope: ktheory::slope(&surface, &class).ok(),
                    class,
                    origin: Origin::Member(i),
                    line: m.divisor().cloned(),
                    exceptional: m.flags.exceptional.is_some(),
                    vector_bundle: m.flags.vector_bundle.is_some(),
                    semistable: m.flags.semistable.is_some(),
                    indecomposable: m.flags.indecomposable.is_some(),
                    may_split: false,
                }
            })
            .collect();
        Ok(FactBase {
            surface,
            objects,
            facts: Vec::new(),
            index: HashMap::new(),
            scope,
            univan: Vec::new(),
        })
    }

    pub fn surface(&self) -> &SmoothToricSurface {
        &self.surface
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact_index(&self, key: &Key) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn fact(&self, key: &Key) -> Option<&Fact> {
        self.index.get(key).map(|&i| &self.facts[i])
    }

    pub fn dim(&self, from: ObjId, to: ObjId, twist: i64, degree: u8) -> Option<u64> {
        self.fact(&Key::new(from, to, twist, degree)).map(|f| f.dim)
    }

    fn lookup(&self, key: Key) -> Option<(u64, usize)> {
        self.index.get(&key).map(|&i| (self.facts[i].dim, i))
    }

    // Degrees outside 0..=2 vanish for sheaves on a surface.
    fn lookup_degree(
        &self,
        from: ObjId,
        to: ObjId,
        t: i64,
        p: i64,
    ) -> Option<(u64, Option<usize>)> {
        if !(0..=2).contains(&p) {
            return Some((0, None));
        }
        self.lookup(Key::new(from, to, t, p as u8))
            .map(|(d, i)| (d, Some(i)))
    }

    fn insert(
        &mut self,
        key: Key,
        dim: u64,
        rule: Rule,
        inputs: Vec<usize>,
    ) -> Result<bool, EngineError> {
        if let Some(&i) = self.index.get(&key) {
            let existing = &self.facts[i];
            if existing.dim != dim {
                return Err(EngineError::Conflict {
                    key,
                    existing: existing.dim,
                    existing_rule: existing.rule,
                    new: dim,
                    new_rule: rule,
                });
            }
            return Ok(false);
        }
        self.index.insert(key, self.facts.len());
        self.facts.push(Fact {
            key,
            dim,
            rule,
            inputs,
        });
        Ok(true)
    }

    fn twisted_slope(&self, o: ObjId, t: i64) -> Option<Slope> {
        self.objects[o]
            .slope
            .map(|s| s.shift(-t * self.surface.ksq()))
    }

    /// Euler pairing `chi(A, B (x) O(tK))`.
    pub fn chi(&self, a: ObjId, b: ObjId, t: i64) -> i64 {
        let tb = ktheory::canonical_twist(&self.surface, &self.objects[b].class, t);
        ktheory::pairing_unchecked(&self.surface, &self.objects[a].class, &tb)
    }

    /// Runs all rules in canonical order until nothing new is derived.
    pub fn saturate(&mut self) -> Result<(), EngineError> {
        loop {
            let before = self.facts.len();
            self.rule_cohom()?;
            self.rule_exceptional()?;
            self.rule_serre()?;
            self.rule_stab()?;
            self.rule_ext1sym()?;
            self.rule_chi()?;
            self.rule_univan()?;
            self.rule_les()?;
            if self.facts.len() == before {
                return Ok(());
            }
        }
    }

    fn pairs(&self) -> Vec<(ObjId, ObjId, i64)> {
        let m = self.objects.len();
        let mut out = Vec::with_capacity(m * m * TWISTS.len());
        for a in 0..m {
            for b in 0..m {
                for t in TWISTS {
                    out.push((a, b, t));
                }
            }
        }
        out
    }

    fn rule_cohom(&mut self) -> Result<(), EngineError> {
        if self.scope == CohomScope::Disabled {
            return Ok(());
        }
        for (a, b, t) in self.pairs() {
            if self.scope == CohomScope::Untwisted && t != 0 {
                continue;
            }
            let (Some(la), Some(lb)) = (&self.objects[a].line, &self.objects[b].line) else {
                continue;
            };
            if self.lookup(Key::new(a, b, t, 0)).is_some()
                && self.lookup(Key::new(a, b, t, 1)).is_some()
                && self.lookup(Key::new(a, b, t, 2)).is_some()
            {
                continue;
            }
            let d = lb.add(&self.surface.canonical.scale(t)).sub(la);
            let c = self.surface.cohomology(&d)?;
            for (p, dim) in [(0u8, c.h0), (1, c.h1), (2, c.h2)] {
                self.insert(Key::new(a, b, t, p), dim, Rule::Cohom, vec![])?;
            }
        }
        Ok(())
    }

    fn rule_exceptional(&mut self) -> Result<(), EngineError> {
        let m = self.objects.len();
        for a in 0..m {
            for b in 0..m {
                let (oa, ob) = (&self.objects[a], &self.objects[b]);
                let (Origin::Member(i), Origin::Member(j)) = (oa.origin, ob.origin) else {
                    continue;
                };
                if !(oa.exceptional && ob.exceptional) || i < j {
                    continue;
                }
                let dims = if i == j { [1, 0, 0] } else { [0, 0, 0] };
                for (p, dim) in dims.into_iter().enumerate() {
                    self.insert(Key::new(a, b, 0, p as u8), dim, Rule::Exceptional, vec![])?;
                }
            }
        }
        Ok(())
    }

    fn rule_serre(&mut self) -> Result<(), EngineError> {
        for (a, b, t) in self.pairs() {
            let s = 1 - t;
            if !twist_in_window(s) {
                continue;
            }
            for p in 0..3u8 {
                if self.lookup(Key::new(a, b, t, p)).is_some() {
                    continue;
                }
                if let Some((d, i)) = self.lookup(Key::new(b, a, s, 2 - p)) {
                    self.insert(Key::new(a, b, t, p), d, Rule::Serre, vec![i])?;
                }
            }
        }
        Ok(())
    }

    fn rule_stab(&mut self) -> Result<(), EngineError> {
        for (a, b, t) in self.pairs() {
            let (oa, ob) = (&self.objects[a], &self.objects[b]);
            if !(oa.semistable && ob.semistable) {
                continue;
            }
            let (Some(sa), Some(sb)) = (oa.slope, self.twisted_slope(b, t)) else {
                continue;
            };
            if sa > sb {
                self.insert(Key::new(a, b, t, 0), 0, Rule::Stab, vec![])?;
            }
        }
        Ok(())
    }

    fn splits_into_indecomposables_of_one_slope(&self, o: ObjId) -> bool {
        let ob = &self.objects[o];
        ob.vector_bundle && (ob.indecomposable || ob.semistable)
    }

    fn rule_ext1sym(&mut self) -> Result<(), EngineError> {
        for (a, b, t) in self.pairs() {
            if !twist_in_window(-t) || self.lookup(Key::new(a, b, t, 1)).is_some() {
                continue;
            }
            if !(self.splits_into_indecomposables_of_one_slope(a)
                && self.splits_into_indecomposables_of_one_slope(b))
            {
                continue;
            }
            let (Some(sa), Some(sb)) = (self.objects[a].slope, self.twisted_slope(b, t)) else {
                continue;
            };
            if sb <= sa {
                continue;
            }
            if let Some((0, i)) = self.lookup(Key::new(b, a, -t, 1)) {
                self.insert(Key::new(a, b, t, 1), 0, Rule::Ext1Sym, vec![i])?;
            }
        }
        Ok(())
    }

    fn rule_chi(&mut self) -> Result<(), EngineError> {
        for (a, b, t) in self.pairs() {
            let known: Vec<Option<(u64, usize)>> = (0..3u8)
                .map(|p| self.lookup(Key::new(a, b, t, p)))
                .collect();
            let count = known.iter().filter(|k| k.is_some()).count();
            if count != 2 {
                continue;
            }
            let chi = self.chi(a, b, t);
            let missing = known.iter().position(|k| k.is_none()).unwrap() as u8;
            let v = |p: usize| known[p].map(|k| k.0 as i64).unwrap_or(0);
            let value = match missing {
                0 => chi + v(1) - v(2),
                1 => v(0) + v(2) - chi,
                _ => chi - v(0) + v(1),
            };
            let inputs: Vec<usize> = known.iter().flatten().map(|k| k.1).collect();
            if value < 0 {
                return Err(EngineError::Conflict {
                    key: Key::new(a, b, t, missing),
                    existing: 0,
                    existing_rule: Rule::Chi,
                    new: value as u64,
                    new_rule: Rule::Chi,
                });
            }
            self.insert(Key::new(a, b, t, missing), value as u64, Rule::Chi, inputs)?;
        }
        Ok(())
    }

    fn rule_univan(&mut self) -> Result<(), EngineError> {
        for pending in self.univan.clone() {
            for key in pending.keys {
                self.insert(key, 0, Rule::Univan, pending.inputs.clone())?;
            }
        }
        Ok(())
    }

    fn rule_les(&mut self) -> Result<(), EngineError> {
        let m = self.objects.len();
        for x in 0..m {
            // 0 -> sub^ms -> X -> quot^mq -> 0
            let (sub, ms, quot, mq) = match self.objects[x].origin {
                Origin::Member(_) => continue,
                Origin::Extension { base, by, d } => (by, d, base, 1),
                Origin::Coextension { base, by, d } => (base, 1, by, d),
            };
            for g in 0..m {
                for t in TWISTS {
                    for p in 0..3i64 {
                        // Ext^p(X, G(t)): quot_p -> X_p -> sub_p, with
                        // sub_{p-1} -> quot_p and sub_p -> quot_{p+1}.
                        let key = Key::new(x, g, t, p as u8);
                        if self.lookup(key).is_none() {
                            let q = |k| self.lookup_degree(quot, g, t, k);
                            let s = |k| self.lookup_degree(sub, g, t, k);
                            if let Some((dim, inputs)) =
                                les_case(q(p), s(p), s(p - 1), q(p + 1), mq, ms)
                            {
                                self.insert(key, dim, Rule::Les, inputs)?;
                            }
                        }
                        // Ext^p(G, X(t)): sub_p -> X_p -> quot_p, with
                        // quot_{p-1} -> sub_p and quot_p -> sub_{p+1}.
                        let key = Key::new(g, x, t, p as u8);
                        if self.lookup(key).is_none() {
                            let q = |k| self.lookup_degree(g, quot, t, k);
                            let s = |k| self.lookup_degree(g, sub, t, k);
                            if let Some((dim, inputs)) =
                                les_case(s(p), q(p), q(p - 1), s(p + 1), ms, mq)
                            {
                                self.insert(key, dim, Rule::Les, inputs)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn require_zero(&self, key: Key) -> Result<usize, EngineError> {
        match self.lookup(key) {
            Some((0, i)) => Ok(i),
            _ => Err(EngineError::HypothesisNotCertified(key)),
        }
    }

    fn check_pair(&self, e: ObjId, f: ObjId, d: u64) -> Result<Vec<usize>, EngineError> {
        for o in [e, f] {
            if o >= self.objects.len() {
                return Err(EngineError::UnknownObject(o));
            }
        }
        let mut inputs = Vec::new();
        for p in 1..3u8 {
            inputs.push(self.require_zero(Key::new(e, e, 0, p))?);
            inputs.push(self.require_zero(Key::new(f, f, 0, p))?);
        }
        for p in 0..3u8 {
            if p > 0 {
                inputs.push(self.require_zero(Key::new(f, e, 0, p))?);
            }
        }
        inputs.push(self.require_zero(Key::new(e, f, 0, 2))?);
        let key = Key::new(e, f, 0, 1);
        match self.lookup(key) {
            Some((c, i)) if c == d => inputs.push(i),
            Some((c, _)) => {
                return Err(EngineError::DimensionMismatch {
                    given: d,
                    certified: c,
                })
            }
            None => return Err(EngineError::HypothesisNotCertified(key)),
        }
        let (se, sf) = (self.objects[e].slope, self.objects[f].slope);
        if se != sf {
            let show = |s: Option<Slope>| s.map_or("undefined".to_string(), |s| s.to_string());
            return Err(EngineError::SlopeMismatch(show(se), show(sf)));
        }
        Ok(inputs)
    }

    fn derived_object(&self, e: ObjId, f: ObjId, class: KClass, origin: Origin) -> Object {
        let (oe, of) = (&self.objects[e], &self.objects[f]);
        Object {
            slope: ktheory::slope(&self.surface, &class).ok(),
            class,
            origin,
            line: None,
            exceptional: false,
            vector_bundle: oe.vector_bundle && of.vector_bundle,
            // extensions of semistable sheaves of one slope stay semistable
            semistable: oe.semistable && of.semistable,
            indecomposable: false,
            may_split: oe.indecomposable && of.indecomposable,
        }
    }

    /// Adds the universal extension `0 -> F^d -> E' -> E -> 0` with
    /// `d = dim Ext^1(E, F)`, checking the vanishing hypotheses first.
    pub fn add_extension(&mut self, e: ObjId, f: ObjId, d: u64) -> Result<ObjId, EngineError> {
        let inputs = self.check_pair(e, f, d)?;
        let class = self.objects[e]
            .class
            .add(&self.objects[f].class.scale(d as i64));
        let obj = self.derived_object(e, f, class, Origin::Extension { base: e, by: f, d });
        let x = self.objects.len();
        self.objects.push(obj);
        let mut keys = Vec::new();
        for p in 1..3u8 {
            keys.push(Key::new(x, x, 0, p));
            keys.push(Key::new(f, x, 0, p));
            keys.push(Key::new(x, f, 0, p));
        }
        self.univan.push(PendingUnivan { keys, inputs });
        Ok(x)
    }

    /// Adds the universal coextension `0 -> F -> F' -> E^d -> 0` with
    /// `d = dim Ext^1(E, F)`.
    pub fn add_coextension(&mut self, e: ObjId, f: ObjId, d: u64) -> Result<ObjId, EngineError> {
        let inputs = self.check_pair(e, f, d)?;
        let class = self.objects[f]
            .class
            .add(&self.objects[e].class.scale(d as i64));
        let obj = self.derived_object(f, e, class, Origin::Coextension { base: f, by: e, d });
        let y = self.objects.len();
        self.objects.push(obj);
        let mut keys = Vec::new();
        for p in 1..3u8 {
            keys.push(Key::new(y, y, 0, p));
            keys.push(Key::new(y, e, 0, p));
            keys.push(Key::new(e, y, 0, p));
        }
        self.univan.push(PendingUnivan { keys, inputs });
        Ok(y)
    }

    /// Indices of the facts needed to justify `roots`, in increasing order.
    pub fn support(&self, roots: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.facts.len()];
        let mut stack: Vec<usize> = roots.to_vec();
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            stack.extend(self.facts[i].inputs.iter().copied());
        }
        (0..self.facts.len()).filter(|&i| seen[i]).collect()
    }
}

// One step of a long exact sequence `.. -> M^{mm} -> X -> N^{mn} -> ..` in a
// fixed degree p: `mid` is the term mapping into X, `next` the term X maps
// to, `before` the term preceding `mid` and `after` the term following
// `next`. Returns the forced dimension of X and the facts used.
fn les_case(
    mid: Option<(u64, Option<usize>)>,
    next: Option<(u64, Option<usize>)>,
    before_mid: Option<(u64, Option<usize>)>,
    after_next: Option<(u64, Option<usize>)>,
    m_mid: u64,
    m_next: u64,
) -> Option<(u64, Vec<usize>)> {
    let ids = |xs: &[Option<(u64, Option<usize>)>]| -> Vec<usize> {
        xs.iter().filter_map(|x| x.and_then(|y| y.1)).collect()
    };
    let zero = |x: Option<(u64, Option<usize>)>| matches!(x, Some((0, _)));
    if zero(mid) && zero(next) {
        return Some((0, ids(&[mid, next])));
    }
    // before_mid -> mid injective-on-cokernel side and X -> next zero
    if zero(before_mid) && zero(next) {
        if let Some((d, _)) = mid {
            return Some((m_mid * d, ids(&[before_mid, next, mid])));
        }
    }
    if zero(mid) && zero(after_next) {
        if let Some((d, _)) = next {
            return Some((m_next * d, ids(&[mid, after_next, next])));
        }
    }
    None
}
