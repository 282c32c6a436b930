//! Coherence analysis of networks of heterogeneous linear systems.
//!
//! The crate evaluates the closed-loop transfer matrix of nodes `g_i(s)`
//! coupled through `f(s) L`, measures its distance from the rank-one coherent
//! limit, and provides the companion tooling: rational arithmetic, Laplacian
//! spectra, random node families, state-space simulation and generator
//! aggregation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod coherence;
pub mod concentration;
pub mod linalg;
pub mod network;
pub mod rational;
pub mod timedomain;

pub use aggregate::{AggregateError, AggregateModel, SwingParams};
pub use coherence::{CoherenceError, CoherenceReport, FrequencyGrid, NetworkModel};
pub use concentration::{ConcentrationError, RandomTFModel};
pub use network::{LaplacianMatrix, NetworkError};
pub use num_complex::Complex64;
pub use rational::{ExtComplex, Polynomial, RationalError, RationalTF};
pub use timedomain::{Input, SimOptions, StateSpace, TimeDomainError, Trajectory};

use thiserror::Error;

/// Any error raised by the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
    #[error(transparent)]
    TimeDomain(#[from] TimeDomainError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
}

impl Error {
    /// `true` for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Rational(e) => rational_numerical(e),
            Error::Network(_) => false,
            Error::Coherence(e) => coherence_numerical(e),
            Error::Concentration(ConcentrationError::Coherence(e)) => coherence_numerical(e),
            Error::Concentration(ConcentrationError::Rational(e)) => rational_numerical(e),
            Error::Concentration(e) => matches!(e, ConcentrationError::UndefinedExpectation(_)),
            Error::TimeDomain(e) => time_numerical(e),
            Error::Aggregate(AggregateError::TimeDomain(e)) => time_numerical(e),
            Error::Aggregate(AggregateError::Rational(e)) => rational_numerical(e),
            Error::Aggregate(_) => false,
        }
    }
}

fn rational_numerical(e: &RationalError) -> bool {
    matches!(
        e,
        RationalError::DegenerateMean | RationalError::ExcessiveDegree(_) | RationalError::IndeterminateAt(_)
    )
}

fn coherence_numerical(e: &CoherenceError) -> bool {
    match e {
        CoherenceError::SingularSystem(_) | CoherenceError::DegenerateGamma => true,
        CoherenceError::Rational(r) => rational_numerical(r),
        _ => false,
    }
}

fn time_numerical(e: &TimeDomainError) -> bool {
    matches!(
        e,
        TimeDomainError::AlgebraicLoop | TimeDomainError::StepTooLarge { .. } | TimeDomainError::SingularResolvent(_)
    )
}
