//! End-to-end construction: minimal seed, blowup augmentation, slope sorting,
//! block processing and certification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{process_blocks, BlockError, ExtendedCollection};
use crate::certify::{certify_tilting, certify_two_tilting, Certificate, CertifyError, Verdict};
use crate::collections::{
    search_sorted_line_collections, verify_line_collection, CollectionError, ExcCollection,
    Fullness, TraceStep,
};
use crate::toric::{SmoothToricSurface, ToricError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("surface is not weak del Pezzo: {0}")]
    NotWeakDelPezzo(String),
    #[error("no window-sorted line bundle collection within radius {0}")]
    NothingFound(i64),
    #[error("certification incomplete: {} blocking fact(s)", .0.blocking.len())]
    Incomplete(Box<Certificate>),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Toric(#[from] ToricError),
    #[error(transparent)]
    Collection(#[from] CollectionError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seed {
    P2,
    /// Hirzebruch surface `Sigma_a`.
    Hirzebruch(u8),
}

/// Blowups at the listed corners turn `seed_surface` into the target.
#[derive(Debug, Clone)]
pub struct BlowdownChain {
    pub seed: Seed,
    pub seed_surface: SmoothToricSurface,
    pub corners: Vec<usize>,
}

fn minimal_kind(s: &SmoothToricSurface) -> Option<Seed> {
    match s.num_rays() {
        3 => Some(Seed::P2),
        4 if s.contractible_rays().is_empty() => {
            let a = s.selfint.iter().map(|x| x.abs()).max().unwrap_or(0);
            Some(Seed::Hirzebruch(a as u8))
        }
        _ => None,
    }
}

fn descend(s: &SmoothToricSurface, fallback: &mut Option<BlowdownChain>) -> Option<BlowdownChain> {
    if let Some(seed) = minimal_kind(s) {
        let chain = BlowdownChain {
            seed,
            seed_surface: s.clone(),
            corners: Vec::new(),
        };
        if seed == Seed::P2 {
            return Some(chain);
        }
        let rank = |c: &BlowdownChain| match c.seed {
            Seed::Hirzebruch(0) => 0,
            _ => 1,
        };
        if fallback.as_ref().is_none_or(|f| rank(&chain) < rank(f)) {
            *fallback = Some(chain);
        }
        return None;
    }
    for i in s.contractible_rays() {
        let Ok((base, corner)) = s.blowdown(i) else {
            continue;
        };
        let mut inner_fallback = None;
        if let Some(mut chain) = descend(&base, &mut inner_fallback) {
            chain.corners.push(corner);
            return Some(chain);
        }
        if let Some(mut f) = inner_fallback {
            f.corners.push(corner);
            let better = match (&fallback, f.seed) {
                (None, _) => true,
                (Some(old), Seed::Hirzebruch(0)) => old.seed != Seed::Hirzebruch(0),
                _ => false,
            };
            if better {
                *fallback = Some(f);
            }
        }
    }
    None
}

/// A chain of torus-fixed blowdowns ending at `P^2` when possible, else at
/// `P^1 x P^1`, else at `Sigma_2`.
pub fn blowdown_chain(surface: &SmoothToricSurface) -> Result<BlowdownChain, PipelineError> {
    let verdict = surface.classify();
    if !verdict.is_weak_del_pezzo() {
        return Err(PipelineError::NotWeakDelPezzo(
            verdict.reason.unwrap_or_default(),
        ));
    }
    let mut fallback = None;
    let chain = descend(surface, &mut fallback)
        .or(fallback)
        .ok_or_else(|| {
            PipelineError::InternalInconsistency("no minimal model reached by blowdowns".into())
        })?;
    if let Seed::Hirzebruch(a) = chain.seed {
        if a > 2 {
            return Err(PipelineError::InternalInconsistency(format!(
                "weak del Pezzo surface blows down to Sigma_{a}"
            )));
        }
    }
    Ok(chain)
}

/// Full strong exceptional collection on a minimal surface: `(O, O(H), O(2H))`
/// on `P^2`, `(O, O(F), O(C_0 + aF), O(C_0 + (a+1)F))` on `Sigma_a`.
pub fn seed_collection(
    surface: &SmoothToricSurface,
) -> Result<(Seed, ExcCollection), PipelineError> {
    let seed = minimal_kind(surface)
        .ok_or_else(|| PipelineError::InternalInconsistency("surface is not minimal".into()))?;
    let divisors = match seed {
        Seed::P2 => {
            let h = surface.ray_divisor(0);
            vec![surface.zero_divisor(), h.clone(), h.scale(2)]
        }
        Seed::Hirzebruch(a) => {
            let c = (0..4)
                .find(|&i| surface.selfint[i] == -(a as i64))
                .expect("negative section present");
            let c0 = surface.ray_divisor(c);
            let f = surface.ray_divisor((c + 1) % 4);
            vec![
                surface.zero_divisor(),
                f.clone(),
                c0.add(&f.scale(a as i64)),
                c0.add(&f.scale(a as i64 + 1)),
            ]
        }
    };
    let mut col = verify_line_collection(surface, &divisors)?;
    col.fullness = Fullness::ByConstruction;
    col.trivial_index = Some(0);
    Ok((seed, col))
}

/// Seed collection pushed up the blowdown chain.
pub fn blowup_chain_collection(
    surface: &SmoothToricSurface,
) -> Result<ExcCollection, PipelineError> {
    let chain = blowdown_chain(surface)?;
    let (_, mut col) = seed_collection(&chain.seed_surface)?;
    for &corner in &chain.corners {
        let b = col.surface.blowup(corner)?;
        col = col.augment_blowup(&b)?;
    }
    if col.surface.rays() != surface.rays() {
        return Err(PipelineError::InternalInconsistency(
            "blowup chain does not reproduce the fan".into(),
        ));
    }
    let divisors: Vec<_> = col
        .members
        .iter()
        .filter_map(|m| m.divisor().cloned())
        .collect();
    let mut checked = verify_line_collection(surface, &divisors)?;
    checked.fullness = Fullness::ByConstruction;
    checked.trivial_index = Some(0);
    Ok(checked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum Strategy {
    BlowupChain,
    Search { radius: i64 },
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub initial: ExcCollection,
    pub sorted: ExcCollection,
    pub trace: Vec<TraceStep>,
    pub extended: ExtendedCollection,
    pub certificate: Certificate,
}

/// Runs the pipeline. Incomplete certification is an error carrying the
/// certificate with its blocking list.
pub fn construct(
    surface: &SmoothToricSurface,
    strategy: Strategy,
    max_steps: usize,
    round_cap: usize,
) -> Result<Construction, PipelineError> {
    let initial = match strategy {
        Strategy::BlowupChain => blowup_chain_collection(surface)?,
        Strategy::Search { radius } => search_sorted_line_collections(surface, radius, 1)?
            .into_iter()
            .next()
            .ok_or(PipelineError::NothingFound(radius))?,
    };
    let (sorted, trace) = initial.sort_by_slope(max_steps)?;
    let extended = process_blocks(&ExtendedCollection::from(sorted.clone()), round_cap)?;
    let cert = certify_tilting(&extended)?;
    if cert.verdict == Verdict::Incomplete {
        return Err(PipelineError::Incomplete(Box::new(cert)));
    }
    let certificate = certify_two_tilting(&cert)?;
    Ok(Construction {
        initial,
        sorted,
        trace,
        extended,
        certificate,
    })
}
