//! Tilting and 2-tilting certificates built from the fact engine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::blocks::{BlockError, ExtendedCollection};
use crate::collections::{ExcCollection, ExtDims, Fullness};
use crate::facts::{CohomScope, EngineError, Key, ObjId, Origin, Rule};
use crate::ktheory::{KClass, Slope};
use crate::toric::Cohomology;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("not tilting: {} blocking fact(s)", .0.len())]
    NotTilting(Vec<Blocker>),
    #[error(
        "slope window violated by members {} and {}: {max} - {min} is not < {ksq}{}",
        .pair.0, .pair.1, .note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
    )]
    WindowViolated {
        pair: (usize, usize),
        min: Slope,
        max: Slope,
        ksq: i64,
        note: Option<String>,
    },
    #[error("member {0} has rank zero, so the slope window is undefined")]
    UndefinedSlope(usize),
    #[error("member {0} is not a line bundle")]
    NotLineCollection(usize),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Block(#[from] BlockError),
}

impl From<EngineError> for CertifyError {
    fn from(e: EngineError) -> Self {
        CertifyError::Block(BlockError::Engine(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Tilting,
    TwoTilting,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub min: Slope,
    pub max: Slope,
    pub ksq: i64,
}

impl Window {
    pub fn strict(&self) -> bool {
        self.max.0 - self.min.0 < num_rational::Ratio::from_integer(self.ksq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Vanishes,
    Dimension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactRecord {
    pub pair: [ObjId; 2],
    pub p: u8,
    pub twist: i64,
    pub status: Status,
    pub dim: u64,
    pub rule: Rule,
    /// Indices into the certificate's own fact list.
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: ObjId,
    pub class: KClass,
    pub slope: Option<Slope>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocker {
    pub pair: Option<[usize; 2]>,
    pub p: Option<u8>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub id: String,
    pub verdict: Verdict,
    pub window: Option<Window>,
    pub fullness: Fullness,
    /// Object id of every member position.
    pub members: Vec<ObjId>,
    pub objects: Vec<ObjectRecord>,
    pub facts: Vec<FactRecord>,
    pub blocking: Vec<Blocker>,
    pub note: Option<String>,
}

impl Certificate {
    fn seal(mut self) -> Self {
        self.id.clear();
        let bytes = serde_json::to_vec(&self).expect("certificate serializes");
        let digest = Sha256::digest(&bytes);
        self.id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        self
    }

    pub fn is_two_tilting(&self) -> bool {
        self.verdict == Verdict::TwoTilting
    }

    /// Member positions realising the window minimum and maximum.
    pub fn extremal_pair(&self) -> Option<(usize, usize)> {
        let slopes: Vec<Slope> = self
            .members
            .iter()
            .map(|&o| self.objects[o].slope)
            .collect::<Option<_>>()?;
        let lo = (0..slopes.len()).min_by_key(|&i| slopes[i])?;
        let hi = (0..slopes.len()).rev().max_by_key(|&i| slopes[i])?;
        Some((lo, hi))
    }
}

pub fn window_of(collection: &ExtendedCollection) -> Result<Window, CertifyError> {
    let surface = &collection.base.surface;
    let mut slopes = Vec::new();
    for (i, c) in collection.classes().iter().enumerate() {
        slopes
            .push(crate::ktheory::slope(surface, c).map_err(|_| CertifyError::UndefinedSlope(i))?);
    }
    Ok(Window {
        min: *slopes.iter().min().expect("non-empty collection"),
        max: *slopes.iter().max().expect("non-empty collection"),
        ksq: surface.ksq(),
    })
}

/// Every `Ext^{>0}` between current members must be certified zero, and
/// fullness must be known.
pub fn certify_tilting(collection: &ExtendedCollection) -> Result<Certificate, CertifyError> {
    let r = collection.realize(CohomScope::Untwisted)?;
    let fb = &r.facts;
    let mut roots = Vec::new();
    let mut blocking = Vec::new();
    for (i, &a) in r.current.iter().enumerate() {
        for (j, &b) in r.current.iter().enumerate() {
            for p in 1..3u8 {
                let key = Key::new(a, b, 0, p);
                match fb.fact_index(&key) {
                    Some(k) => {
                        let f = &fb.facts()[k];
                        roots.push(k);
                        if f.dim != 0 {
                            blocking.push(Blocker {
                                pair: Some([i, j]),
                                p: Some(p),
                                reason: format!("dimension {} by {}", f.dim, f.rule),
                            });
                        }
                    }
                    None => blocking.push(Blocker {
                        pair: Some([i, j]),
                        p: Some(p),
                        reason: "unknown".into(),
                    }),
                }
            }
        }
    }
    if collection.base.fullness == Fullness::Unknown {
        blocking.push(Blocker {
            pair: None,
            p: None,
            reason: "fullness unknown".into(),
        });
    }
    let support = fb.support(&roots);
    let local: BTreeMap<usize, usize> = support.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let facts = support
        .iter()
        .map(|&i| {
            let f = &fb.facts()[i];
            FactRecord {
                pair: [f.key.from, f.key.to],
                p: f.key.degree,
                twist: f.key.twist,
                status: if f.dim == 0 {
                    Status::Vanishes
                } else {
                    Status::Dimension
                },
                dim: f.dim,
                rule: f.rule,
                inputs: f.inputs.iter().map(|x| local[x]).collect(),
            }
        })
        .collect();
    let objects = fb
        .objects()
        .iter()
        .enumerate()
        .map(|(id, o)| ObjectRecord {
            id,
            class: o.class.clone(),
            slope: o.slope,
            origin: o.origin,
        })
        .collect();
    let verdict = if blocking.is_empty() {
        Verdict::Tilting
    } else {
        Verdict::Incomplete
    };
    Ok(Certificate {
        id: String::new(),
        verdict,
        window: window_of(collection).ok(),
        fullness: collection.base.fullness,
        members: r.current.clone(),
        objects,
        facts,
        blocking,
        note: None,
    }
    .seal())
}

/// Upgrades a tilting certificate when `max slope - min slope < K^2`.
pub fn certify_two_tilting(cert: &Certificate) -> Result<Certificate, CertifyError> {
    if cert.verdict == Verdict::Incomplete {
        return Err(CertifyError::NotTilting(cert.blocking.clone()));
    }
    let window = match &cert.window {
        Some(w) => w.clone(),
        None => {
            let i = cert
                .members
                .iter()
                .position(|&o| cert.objects[o].slope.is_none())
                .unwrap_or(0);
            return Err(CertifyError::UndefinedSlope(i));
        }
    };
    if !window.strict() {
        let pair = cert.extremal_pair().unwrap_or((0, 0));
        let note = (window.max.0 - window.min.0 == num_rational::Ratio::from_integer(window.ksq))
            .then(|| {
                "boundary case: the window criterion needs strict inequality, so a window of \
                 exactly K^2 leaves 2-tilting undecided"
                    .to_string()
            });
        return Err(CertifyError::WindowViolated {
            pair,
            min: window.min,
            max: window.max,
            ksq: window.ksq,
            note,
        });
    }
    let mut out = cert.clone();
    out.verdict = Verdict::TwoTilting;
    Ok(out.seal())
}

pub fn certify(collection: &ExtendedCollection) -> Result<Certificate, CertifyError> {
    certify_two_tilting(&certify_tilting(collection)?)
}

/// Re-derives the certificate from the collection and checks it is identical.
pub fn replay(collection: &ExtendedCollection, cert: &Certificate) -> Result<(), CertifyError> {
    let mut again = certify_tilting(collection)?;
    if cert.verdict == Verdict::TwoTilting {
        again = certify_two_tilting(&again)?;
    }
    if &again != cert {
        return Err(CertifyError::InternalInconsistency(format!(
            "certificate {} does not replay (got {})",
            cert.id, again.id
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistFailure {
    pub pair: [usize; 2],
    pub cohomology: Cohomology,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistReport {
    pub checked: usize,
    pub failures: Vec<TwistFailure>,
}

impl TwistReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Honest check that `H^{>0}(L_j - L_i - K) = 0` for all member pairs.
pub fn check_twist_vanishing(collection: &ExcCollection) -> Result<TwistReport, CertifyError> {
    let s = &collection.surface;
    let mut divisors = Vec::new();
    for (i, m) in collection.members.iter().enumerate() {
        divisors.push(m.divisor().ok_or(CertifyError::NotLineCollection(i))?);
    }
    let mut report = TwistReport {
        checked: 0,
        failures: Vec::new(),
    };
    for (i, a) in divisors.iter().enumerate() {
        for (j, b) in divisors.iter().enumerate() {
            let d = b.sub(a).sub(&s.canonical);
            let c = s
                .cohomology(&d)
                .map_err(|e| CertifyError::Block(BlockError::Engine(e.into())))?;
            report.checked += 1;
            if !c.higher_vanish() {
                report.failures.push(TwistFailure {
                    pair: [i, j],
                    cohomology: c,
                });
            }
        }
    }
    Ok(report)
}

/// Runs the honest twist check and fails hard if it contradicts a two-tilting
/// certificate.
pub fn cross_check(
    cert: &Certificate,
    collection: &ExcCollection,
) -> Result<TwistReport, CertifyError> {
    let report = check_twist_vanishing(collection)?;
    if cert.is_two_tilting() && !report.passes() {
        let f = &report.failures[0];
        return Err(CertifyError::InternalInconsistency(format!(
            "two-tilting certificate {} but H*(L_{} - L_{} - K) = {:?}",
            cert.id, f.pair[1], f.pair[0], f.cohomology
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub key: Key,
    pub rule: Rule,
    pub derived: u64,
    pub honest: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checked: usize,
    pub by_rule: BTreeMap<String, usize>,
    pub discrepancies: Vec<Discrepancy>,
}

/// Derives facts without honest cohomology and compares every fact between
/// line bundles with the honest value.
pub fn audit_rules(collection: &ExcCollection) -> Result<AuditReport, CertifyError> {
    let ext = ExtendedCollection::from(collection.clone());
    let r = ext.realize(CohomScope::Disabled)?;
    let s = &collection.surface;
    let mut report = AuditReport {
        checked: 0,
        by_rule: BTreeMap::new(),
        discrepancies: Vec::new(),
    };
    for f in r.facts.facts() {
        let objs = r.facts.objects();
        let (Some(a), Some(b)) = (&objs[f.key.from].line, &objs[f.key.to].line) else {
            continue;
        };
        let d = b.add(&s.canonical.scale(f.key.twist)).sub(a);
        let honest = ExtDims::from(
            s.cohomology(&d)
                .map_err(|e| CertifyError::Block(BlockError::Engine(e.into())))?,
        )
        .get(f.key.degree);
        report.checked += 1;
        *report.by_rule.entry(f.rule.to_string()).or_insert(0) += 1;
        if honest != f.dim {
            report.discrepancies.push(Discrepancy {
                key: f.key,
                rule: f.rule,
                derived: f.dim,
                honest,
            });
        }
    }
    Ok(report)
}
