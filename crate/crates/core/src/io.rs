//! JSON collection files.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{ExtendedCollection, ExtensionStep};
use crate::collections::{ExcCollection, Fullness, Member, MemberFlags, MemberKind};
use crate::ktheory::KClass;
use crate::toric::{DivisorClass, Fan, SmoothToricSurface, ToricError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("malformed collection file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("member {0} must have exactly one of \"line\" and \"opaque\"")]
    MemberShape(usize),
    #[error("member {index} has {got} coefficients, the surface has {expected} rays")]
    Length {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("trivial_index {0} does not point at the structure sheaf")]
    TrivialIndex(usize),
    #[error("unknown surface {0}")]
    UnknownSurface(String),
    #[error(transparent)]
    Toric(#[from] ToricError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceRef {
    Name(String),
    Inline(Fan),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opaque: Option<KClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<MemberFlags>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionFile {
    pub surface: SurfaceRef,
    pub members: Vec<MemberRecord>,
    #[serde(default = "unknown")]
    pub fullness: Fullness,
    #[serde(default)]
    pub trivial_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extensions: Vec<ExtensionStep>,
}

fn unknown() -> Fullness {
    Fullness::Unknown
}

impl CollectionFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_collection(c: &ExtendedCollection) -> Self {
        let members = c
            .base
            .members
            .iter()
            .map(|m| match &m.kind {
                MemberKind::Line(d) => MemberRecord {
                    line: Some(d.0.clone()),
                    opaque: None,
                    flags: None,
                    provenance: Vec::new(),
                },
                MemberKind::Opaque { class, provenance } => MemberRecord {
                    line: None,
                    opaque: Some(class.clone()),
                    flags: Some(m.flags.clone()),
                    provenance: provenance.clone(),
                },
            })
            .collect();
        CollectionFile {
            surface: SurfaceRef::Inline(c.base.surface.fan.clone()),
            members,
            fullness: c.base.fullness,
            trivial_index: c.base.trivial_index,
            extensions: c.log.clone(),
        }
    }

    /// Builds the collection; named surfaces are looked up with `resolve`.
    /// A missing `trivial_index` is filled in when some member is `O`.
    /// Line-bundle fullness claims that fail the numerical check are
    /// downgraded to unknown.
    pub fn into_collection<F>(self, resolve: F) -> Result<ExtendedCollection, FileError>
    where
        F: FnOnce(&str) -> Result<SmoothToricSurface, FileError>,
    {
        let surface = match &self.surface {
            SurfaceRef::Name(n) => resolve(n)?,
            SurfaceRef::Inline(f) => SmoothToricSurface::new(Fan::new(f.name.clone(), &f.rays)?)?,
        };
        let n = surface.num_rays();
        let mut members = Vec::with_capacity(self.members.len());
        for (index, rec) in self.members.into_iter().enumerate() {
            let m = match (rec.line, rec.opaque) {
                (Some(l), None) => {
                    if l.len() != n {
                        return Err(FileError::Length {
                            index,
                            expected: n,
                            got: l.len(),
                        });
                    }
                    Member::line(DivisorClass(l))
                }
                (None, Some(k)) => {
                    if k.c1.len() != n {
                        return Err(FileError::Length {
                            index,
                            expected: n,
                            got: k.c1.len(),
                        });
                    }
                    Member::opaque(k, rec.provenance, rec.flags.unwrap_or_default())
                }
                _ => return Err(FileError::MemberShape(index)),
            };
            members.push(m);
        }
        let mut base = ExcCollection {
            surface,
            members,
            fullness: self.fullness,
            trivial_index: self.trivial_index,
        };
        match base.trivial_index {
            Some(t) if t >= base.len() || !base.members[t].is_trivial(&base.surface) => {
                return Err(FileError::TrivialIndex(t));
            }
            Some(_) => {}
            None => base.trivial_index = base.find_trivial(),
        }
        let all_lines = base.members.iter().all(|m| m.divisor().is_some());
        if base.fullness != Fullness::Unknown
            && (base.len() != n || (all_lines && base.class_determinant().abs() != 1))
        {
            base.fullness = Fullness::Unknown;
        }
        Ok(ExtendedCollection {
            base,
            log: self.extensions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = r#"{"surface": {"name": "P2", "rays": [[1,0],[0,1],[-1,-1]]},
            "members": [{"line": [0,0,0]}, {"line": [1,0,0]}, {"line": [0,2,0]}],
            "fullness": "by-construction", "trivial_index": 0}"#;
        let c = CollectionFile::parse(text)
            .unwrap()
            .into_collection(|n| Err(FileError::UnknownSurface(n.into())))
            .unwrap();
        assert_eq!(c.base.fullness, Fullness::ByConstruction);
        let back = CollectionFile::from_collection(&c);
        let json = serde_json::to_string(&back).unwrap();
        let again = CollectionFile::parse(&json)
            .unwrap()
            .into_collection(|n| Err(FileError::UnknownSurface(n.into())))
            .unwrap();
        assert_eq!(again.base, c.base);
    }

    #[test]
    fn bad_files() {
        let named = r#"{"surface": "nowhere", "members": []}"#;
        let err = CollectionFile::parse(named)
            .unwrap()
            .into_collection(|n| Err(FileError::UnknownSurface(n.into())))
            .unwrap_err();
        assert!(matches!(err, FileError::UnknownSurface(_)));
        let both = r#"{"surface": {"rays": [[1,0],[0,1],[-1,-1]]},
            "members": [{"line": [0,0,0], "opaque": {"rank": 1, "c1": [0,0,0], "chi": 1}}]}"#;
        let err = CollectionFile::parse(both)
            .unwrap()
            .into_collection(|_| unreachable!())
            .unwrap_err();
        assert!(matches!(err, FileError::MemberShape(0)));
        let claim = r#"{"surface": {"rays": [[1,0],[0,1],[-1,-1]]},
            "members": [{"line": [0,0,0]}], "fullness": "by-construction", "trivial_index": 0}"#;
        let c = CollectionFile::parse(claim)
            .unwrap()
            .into_collection(|_| unreachable!())
            .unwrap();
        assert_eq!(c.base.fullness, Fullness::Unknown);
    }
}
