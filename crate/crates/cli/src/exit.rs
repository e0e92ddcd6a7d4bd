//! Mapping of library errors to the exit-code contract:
//! 0 success, 1 invalid input, 2 honest incompleteness, 3 internal error.

use tilting_core::blocks::BlockError;
use tilting_core::certify::CertifyError;
use tilting_core::collections::CollectionError;
use tilting_core::facts::EngineError;
use tilting_core::io::FileError;
use tilting_core::pipeline::PipelineError;
use tilting_core::series::SeriesError;
use tilting_core::toric::{FanFileError, ToricError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Input = 1,
    Incomplete = 2,
    Internal = 3,
}

pub trait Classify {
    fn outcome(&self) -> Outcome;
}

impl Classify for ToricError {
    fn outcome(&self) -> Outcome {
        match self {
            ToricError::InternalInconsistency(_) => Outcome::Internal,
            _ => Outcome::Input,
        }
    }
}

impl Classify for FanFileError {
    fn outcome(&self) -> Outcome {
        match self {
            FanFileError::Json(_) => Outcome::Input,
            FanFileError::Toric(e) => e.outcome(),
        }
    }
}

impl Classify for FileError {
    fn outcome(&self) -> Outcome {
        match self {
            FileError::Toric(e) => e.outcome(),
            _ => Outcome::Input,
        }
    }
}

impl Classify for CollectionError {
    fn outcome(&self) -> Outcome {
        use CollectionError::*;
        match self {
            HypothesisUnknown(..) | StepLimitExceeded { .. } | TrivialMemberWouldTwist => {
                Outcome::Incomplete
            }
            InternalInconsistency(_) | ReplayMismatch(_) => Outcome::Internal,
            Toric(e) => e.outcome(),
            _ => Outcome::Input,
        }
    }
}

impl Classify for EngineError {
    fn outcome(&self) -> Outcome {
        match self {
            EngineError::Conflict { .. } => Outcome::Internal,
            EngineError::HypothesisNotCertified(_) => Outcome::Incomplete,
            EngineError::Toric(e) => e.outcome(),
            _ => Outcome::Input,
        }
    }
}

impl Classify for BlockError {
    fn outcome(&self) -> Outcome {
        match self {
            BlockError::UnknownDimensions(_) | BlockError::NonConvergent(_) => Outcome::Incomplete,
            BlockError::InternalInconsistency(_) => Outcome::Internal,
            BlockError::Engine(e) => e.outcome(),
            BlockError::Collection(e) => e.outcome(),
            BlockError::NotSorted(_) | BlockError::ReplayMismatch(_) => Outcome::Input,
        }
    }
}

impl Classify for CertifyError {
    fn outcome(&self) -> Outcome {
        match self {
            CertifyError::NotTilting(_)
            | CertifyError::WindowViolated { .. }
            | CertifyError::UndefinedSlope(_) => Outcome::Incomplete,
            CertifyError::NotLineCollection(_) => Outcome::Input,
            CertifyError::InternalInconsistency(_) => Outcome::Internal,
            CertifyError::Block(e) => e.outcome(),
        }
    }
}

impl Classify for PipelineError {
    fn outcome(&self) -> Outcome {
        match self {
            PipelineError::NotWeakDelPezzo(_) => Outcome::Input,
            PipelineError::NothingFound(_) | PipelineError::Incomplete(_) => Outcome::Incomplete,
            PipelineError::InternalInconsistency(_) => Outcome::Internal,
            PipelineError::Toric(e) => e.outcome(),
            PipelineError::Collection(e) => e.outcome(),
            PipelineError::Block(e) => e.outcome(),
            PipelineError::Certify(e) => e.outcome(),
        }
    }
}

impl Classify for SeriesError {
    fn outcome(&self) -> Outcome {
        match self {
            SeriesError::NotWeakDelPezzo(_) | SeriesError::CertificateMismatch(_) => Outcome::Input,
            SeriesError::NotCertified(_) | SeriesError::NoTrivialMember => Outcome::Incomplete,
            SeriesError::Negative { .. } => Outcome::Internal,
            SeriesError::Toric(e) => e.outcome(),
        }
    }
}

/// A failed command: exit class, message and an optional JSON body still
/// worth printing (for example a certificate with its blocking list).
#[derive(Debug)]
pub struct Failure {
    pub outcome: Outcome,
    pub message: String,
    pub body: Option<serde_json::Value>,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            outcome: Outcome::Input,
            message: message.into(),
            body: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            outcome: Outcome::Internal,
            message: message.into(),
            body: None,
        }
    }

    pub fn with_body(mut self, body: serde_json::Value) -> Self {
        self.body = Some(body);
        self
    }
}

impl<E: Classify + std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            outcome: e.outcome(),
            message: e.to_string(),
            body: None,
        }
    }
}
