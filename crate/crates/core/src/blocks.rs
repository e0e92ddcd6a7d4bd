//! Equal-slope blocks of a sorted collection and the universal extensions
//! that kill forward `Ext^1` inside each block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collections::{CollectionError, ExcCollection};
use crate::facts::{CohomScope, EngineError, FactBase, ObjId, Origin};
use crate::ktheory::{KClass, Slope};

pub const DEFAULT_ROUND_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("collection is not slope sorted at position {0}")]
    NotSorted(usize),
    #[error("intra-block dimensions unknown for pairs {0:?}")]
    UnknownDimensions(Vec<(usize, usize)>),
    #[error("block processing did not stabilise within {0} rounds")]
    NonConvergent(usize),
    #[error("extension log replay diverged at step {0}")]
    ReplayMismatch(usize),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Collection(#[from] CollectionError),
}

/// Members `start..end` of a sorted collection, all of slope `slope`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub slope: Slope,
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// One line of the extension log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionStep {
    pub block: usize,
    /// `[i, i']`: member `i` is extended by member `i'`.
    pub pair: [usize; 2],
    pub d: u64,
    pub new_class: KClass,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedMember {
    pub position: usize,
    pub kclass: KClass,
    /// Original member positions with multiplicities.
    pub filtration: Vec<(usize, u64)>,
    pub slope: Option<Slope>,
    pub may_split: bool,
}

/// A collection together with the universal extensions applied to it.
#[derive(Debug, Clone)]
pub struct ExtendedCollection {
    pub base: ExcCollection,
    pub log: Vec<ExtensionStep>,
}

impl From<ExcCollection> for ExtendedCollection {
    fn from(base: ExcCollection) -> Self {
        ExtendedCollection {
            base,
            log: Vec::new(),
        }
    }
}

/// Fact base with the log replayed, and the current object of every position.
#[derive(Debug, Clone)]
pub struct Realized {
    pub facts: FactBase,
    pub current: Vec<ObjId>,
}

impl ExtendedCollection {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn realize(&self, scope: CohomScope) -> Result<Realized, BlockError> {
        let mut facts = FactBase::new(&self.base, scope)?;
        facts.saturate()?;
        let mut current: Vec<ObjId> = (0..self.len()).collect();
        for (k, step) in self.log.iter().enumerate() {
            let [i, j] = step.pair;
            if i >= current.len() || j >= current.len() {
                return Err(BlockError::ReplayMismatch(k));
            }
            let x = facts.add_extension(current[i], current[j], step.d)?;
            if facts.objects()[x].class != step.new_class {
                return Err(BlockError::ReplayMismatch(k));
            }
            facts.saturate()?;
            current[i] = x;
        }
        Ok(Realized { facts, current })
    }

    pub fn classes(&self) -> Vec<KClass> {
        let mut out = self.base.classes();
        for step in &self.log {
            out[step.pair[0]] = step.new_class.clone();
        }
        out
    }

    pub fn members(&self) -> Result<Vec<ExtendedMember>, BlockError> {
        let r = self.realize(CohomScope::Untwisted)?;
        Ok(r.current
            .iter()
            .enumerate()
            .map(|(pos, &o)| {
                let obj = &r.facts.objects()[o];
                ExtendedMember {
                    position: pos,
                    kclass: obj.class.clone(),
                    filtration: filtration(&r.facts, o),
                    slope: obj.slope,
                    may_split: obj.may_split,
                }
            })
            .collect())
    }
}

/// Original members (with multiplicity) making up object `o`.
pub fn filtration(fb: &FactBase, o: ObjId) -> Vec<(usize, u64)> {
    let mut acc = BTreeMap::new();
    collect(fb, o, 1, &mut acc);
    acc.into_iter().collect()
}

fn collect(fb: &FactBase, o: ObjId, mult: u64, acc: &mut BTreeMap<usize, u64>) {
    match fb.objects()[o].origin {
        Origin::Member(i) => *acc.entry(i).or_insert(0) += mult,
        Origin::Extension { base, by, d } | Origin::Coextension { base, by, d } => {
            collect(fb, base, mult, acc);
            collect(fb, by, mult * d, acc);
        }
    }
}

pub fn partition_blocks(collection: &ExcCollection) -> Result<Vec<Block>, BlockError> {
    let slopes = collection.slopes()?;
    let mut blocks: Vec<Block> = Vec::new();
    for (i, s) in slopes.into_iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if b.slope == s => b.end = i + 1,
            Some(b) if b.slope > s => return Err(BlockError::NotSorted(i)),
            _ => blocks.push(Block {
                slope: s,
                start: i,
                end: i + 1,
            }),
        }
    }
    Ok(blocks)
}

/// `(hom, ext1)` keyed by position pair.
pub type ExtTable = BTreeMap<(usize, usize), (u64, u64)>;

/// `(hom, ext1)` for every forward pair `i < i'` of a block, from the
/// current (possibly extended) objects.
pub fn intra_block_ext(
    collection: &ExtendedCollection,
    block: &Block,
) -> Result<ExtTable, BlockError> {
    let r = collection.realize(CohomScope::Untwisted)?;
    let mut table = BTreeMap::new();
    let mut gaps = Vec::new();
    for i in block.indices() {
        for j in i + 1..block.end {
            let (a, b) = (r.current[i], r.current[j]);
            match (r.facts.dim(a, b, 0, 0), r.facts.dim(a, b, 0, 1)) {
                (Some(h), Some(e)) => {
                    table.insert((i, j), (h, e));
                }
                _ => gaps.push((i, j)),
            }
        }
    }
    if !gaps.is_empty() {
        return Err(BlockError::UnknownDimensions(gaps));
    }
    Ok(table)
}

fn check_conservation(fb: &FactBase, o: ObjId, block_slope: Slope) -> Result<(), BlockError> {
    let obj = &fb.objects()[o];
    let mut sum = KClass::zero(obj.class.c1.len());
    for (i, m) in filtration(fb, o) {
        let base = fb
            .objects()
            .iter()
            .find(|x| x.origin == Origin::Member(i))
            .expect("member object");
        sum = sum.add(&base.class.scale(m as i64));
    }
    if sum != obj.class {
        return Err(BlockError::InternalInconsistency(format!(
            "class {} differs from its filtration sum {sum}",
            obj.class
        )));
    }
    if obj.slope != Some(block_slope) {
        return Err(BlockError::InternalInconsistency(format!(
            "extension changed the slope of block slope {block_slope}"
        )));
    }
    Ok(())
}

/// Kills every forward `Ext^1` inside each block by universal extensions.
/// Pairs `(i, i')` are visited by decreasing `i'`, then increasing `i`;
/// rounds repeat until nothing changes.
pub fn process_blocks(
    collection: &ExtendedCollection,
    round_cap: usize,
) -> Result<ExtendedCollection, BlockError> {
    let blocks = partition_blocks(&collection.base)?;
    let mut r = collection.realize(CohomScope::Untwisted)?;
    let mut log = collection.log.clone();
    for (bi, block) in blocks.iter().enumerate() {
        if block.len() < 2 {
            continue;
        }
        let mut rounds = 0;
        loop {
            let mut changed = false;
            for j in block.indices().rev() {
                for i in block.start..j {
                    let (a, b) = (r.current[i], r.current[j]);
                    let d = r
                        .facts
                        .dim(a, b, 0, 1)
                        .ok_or_else(|| BlockError::UnknownDimensions(vec![(i, j)]))?;
                    if d == 0 {
                        continue;
                    }
                    let x = r.facts.add_extension(a, b, d)?;
                    r.facts.saturate()?;
                    check_conservation(&r.facts, x, block.slope)?;
                    r.current[i] = x;
                    log.push(ExtensionStep {
                        block: bi,
                        pair: [i, j],
                        d,
                        new_class: r.facts.objects()[x].class.clone(),
                        rule: "universal-extension".into(),
                    });
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            rounds += 1;
            if rounds >= round_cap {
                return Err(BlockError::NonConvergent(round_cap));
            }
        }
    }
    Ok(ExtendedCollection {
        base: collection.base.clone(),
        log,
    })
}
