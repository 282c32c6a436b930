//! Frequency-domain evaluation of networked transfer matrices.
//!
//! A [`NetworkModel`] couples node dynamics `g_i(s)` through `f(s) L`:
//!
//! ```text
//! T(s) = (diag(g_i^{-1}(s)) + f(s) L)^{-1}
//! ```
//!
//! and compares `T(s)` against the rank-one coherent term `(1/n) gbar(s) 1 1^T`,
//! where `gbar` is the harmonic mean of the node dynamics. Everything is
//! evaluated point-wise; the symbolic `gbar` is only used to locate its poles
//! and zeros when its degree stays manageable.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::network::{LaplacianMatrix, NetworkError};
use crate::rational::{self, ExtComplex, Properness, RationalError, RationalTF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error("expected {expected} node transfer functions, got {got}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("{0} is a pole of the coupling")]
    PoleOfCoupling(Complex64),
    #[error("{0} is a pole of the coherent dynamics")]
    PoleOfCoherent(Complex64),
    #[error("{0} is not a pole of the coherent dynamics")]
    NotAPoleOfCoherent(Complex64),
    #[error("transfer matrix is singular at {0}")]
    SingularSystem(Complex64),
    #[error("bound hypothesis violated: {0}")]
    BoundHypothesisViolated(String),
    #[error("grid point {0} is a pole of the coherent dynamics")]
    PoleOnGrid(Complex64),
    #[error("grid point {0} is a zero of the coherent dynamics")]
    ZeroOnGrid(Complex64),
    #[error("incoherence undefined at grid point {0}")]
    UndefinedPointInGrid(Complex64),
    #[error("quadratic form of the limit matrix vanishes; phase is undefined")]
    DegenerateGamma,
    #[error("limit matrix must hold {expected} positive diagonal entries")]
    InvalidLimitMatrix { expected: usize },
    #[error("coupling vanishes at {0}")]
    ZeroCoupling(Complex64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("frequency grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type Result<T> = std::result::Result<T, CoherenceError>;

/// Numerical thresholds used throughout the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative size under which a polynomial value counts as zero.
    pub zero: f64,
    /// Root distance for numerator/denominator cancellation.
    pub cancel: f64,
    /// Distance to a computed root set under which a point is classified as a pole or zero.
    pub proximity: f64,
    /// Condition estimate above which a solve is flagged.
    pub condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: rational::DEFAULT_TOL_ZERO,
            cancel: rational::DEFAULT_TOL_CANCEL,
            proximity: 1e-6,
            condition: 1e12,
        }
    }
}

/// A node zero that coincides with a pole of the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleZeroClash {
    pub node: usize,
    pub point: Complex64,
}

/// Which standing structural assumptions hold for a model.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub improper_nodes: Vec<usize>,
    pub coupling_proper: bool,
    pub connected: bool,
    pub clashes: Vec<PoleZeroClash>,
}

impl AssumptionReport {
    pub fn is_satisfied(&self) -> bool {
        self.improper_nodes.is_empty() && self.coupling_proper && self.connected && self.clashes.is_empty()
    }
}

/// Classification of an evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Generic,
    PoleOfCoupling,
    PoleOfCoherent,
    ZeroOfCoherent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    laplacian: LaplacianMatrix,
    nodes: Vec<RationalTF>,
    coupling: RationalTF,
    tolerances: Tolerances,
    coherent: Option<RationalTF>,
    node_zeros: Vec<Vec<Complex64>>,
    coupling_poles: Vec<Complex64>,
    coherent_poles: Option<Vec<Complex64>>,
    coherent_zeros: Option<Vec<Complex64>>,
    assumptions: AssumptionReport,
}

/// Point-wise values of the node inverses `g_i^{-1}(s)`.
struct NodeInverses {
    values: Vec<Complex64>,
    /// Nodes with `g_i(s) = 0`.
    vanishing: Vec<usize>,
}

impl NetworkModel {
    pub fn new(laplacian: LaplacianMatrix, nodes: Vec<RationalTF>, coupling: RationalTF) -> Result<Self> {
        Self::with_tolerances(laplacian, nodes, coupling, Tolerances::default())
    }

    /// Every node runs the same dynamics `g`.
    pub fn homogeneous(laplacian: LaplacianMatrix, g: RationalTF, coupling: RationalTF) -> Result<Self> {
        let nodes = vec![g; laplacian.n()];
        Self::new(laplacian, nodes, coupling)
    }

    pub fn with_tolerances(
        laplacian: LaplacianMatrix,
        nodes: Vec<RationalTF>,
        coupling: RationalTF,
        tolerances: Tolerances,
    ) -> Result<Self> {
        if nodes.len() != laplacian.n() {
            return Err(CoherenceError::NodeCountMismatch {
                expected: laplacian.n(),
                got: nodes.len(),
            });
        }
        let nodes: Vec<RationalTF> = nodes.iter().map(|g| g.simplify(tolerances.cancel)).collect();
        let coupling = coupling.simplify(tolerances.cancel);
        let node_zeros: Vec<Vec<Complex64>> = nodes.iter().map(|g| g.zeros()).collect();
        let coupling_poles = coupling.poles();
        let coherent = match rational::harmonic_mean(&nodes) {
            Ok(g) => Some(g),
            Err(RationalError::ExcessiveDegree(_)) | Err(RationalError::DegenerateMean) => None,
            Err(e) => return Err(e.into()),
        };
        let coherent_poles = coherent.as_ref().map(|g| g.poles());
        let coherent_zeros = coherent.as_ref().map(|g| g.zeros());

        let mut clashes = Vec::new();
        for (node, zeros) in node_zeros.iter().enumerate() {
            for &z in zeros {
                if coupling_poles.iter().any(|p| (p - z).norm() <= tolerances.proximity) {
                    clashes.push(PoleZeroClash { node, point: z });
                }
            }
        }
        let assumptions = AssumptionReport {
            improper_nodes: nodes
                .iter()
                .enumerate()
                .filter(|(_, g)| !g.is_proper())
                .map(|(i, _)| i)
                .collect(),
            coupling_proper: coupling.is_proper(),
            connected: laplacian.is_connected(),
            clashes,
        };
        Ok(Self {
            laplacian,
            nodes,
            coupling,
            tolerances,
            coherent,
            node_zeros,
            coupling_poles,
            coherent_poles,
            coherent_zeros,
            assumptions,
        })
    }

    /// Same nodes and coupling over a different graph with the same node count.
    pub fn with_laplacian(&self, laplacian: LaplacianMatrix) -> Result<Self> {
        if laplacian.n() != self.n() {
            return Err(CoherenceError::NodeCountMismatch {
                expected: self.n(),
                got: laplacian.n(),
            });
        }
        let mut out = self.clone();
        out.assumptions.connected = laplacian.is_connected();
        out.laplacian = laplacian;
        Ok(out)
    }

    /// The model over `alpha L`; `alpha = 0` removes all coupling.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let laplacian = if alpha == 0.0 {
            LaplacianMatrix::empty(self.n())?
        } else {
            self.laplacian.scale_connectivity(alpha)?
        };
        self.with_laplacian(laplacian)
    }

    pub fn n(&self) -> usize {
        self.laplacian.n()
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn nodes(&self) -> &[RationalTF] {
        &self.nodes
    }

    pub fn coupling(&self) -> &RationalTF {
        &self.coupling
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// Symbolic harmonic mean of the nodes, when it was constructible.
    pub fn coherent(&self) -> Option<&RationalTF> {
        self.coherent.as_ref()
    }

    pub fn assumptions(&self) -> &AssumptionReport {
        &self.assumptions
    }

    pub fn node_zeros(&self) -> &[Vec<Complex64>] {
        &self.node_zeros
    }

    fn near(set: &[Complex64], s0: Complex64, tol: f64) -> bool {
        set.iter().any(|r| (r - s0).norm() <= tol)
    }

    fn inverses(&self, s0: Complex64) -> Result<NodeInverses> {
        let mut values = Vec::with_capacity(self.n());
        let mut vanishing = Vec::new();
        for (i, g) in self.nodes.iter().enumerate() {
            match g.eval_inverse(s0, self.tolerances.zero)? {
                ExtComplex::Finite(v) => values.push(v),
                ExtComplex::AtInfinity => {
                    values.push(Complex64::new(f64::INFINITY, 0.0));
                    vanishing.push(i);
                }
            }
        }
        Ok(NodeInverses { values, vanishing })
    }

    /// `f(s0)`, or `PoleOfCoupling`.
    pub fn coupling_value(&self, s0: Complex64) -> Result<Complex64> {
        self.coupling
            .eval_with_tolerance(s0, self.tolerances.zero)?
            .finite()
            .ok_or(CoherenceError::PoleOfCoupling(s0))
    }

    /// Point-wise `gbar(s0) = ((1/n) sum g_i^{-1}(s0))^{-1}`.
    pub fn coherent_value(&self, s0: Complex64) -> Result<ExtComplex> {
        let inv = self.inverses(s0)?;
        if !inv.vanishing.is_empty() {
            return Ok(ExtComplex::Finite(Complex64::new(0.0, 0.0)));
        }
        let sum: Complex64 = inv.values.iter().sum();
        let scale: f64 = inv.values.iter().map(|z| z.norm()).sum();
        if sum.norm() <= self.tolerances.zero * scale || scale == 0.0 {
            return Ok(ExtComplex::AtInfinity);
        }
        Ok(ExtComplex::Finite(self.n() as f64 / sum))
    }

    fn coherent_pole_pointwise(&self, s0: Complex64) -> Result<bool> {
        let inv = self.inverses(s0)?;
        if !inv.vanishing.is_empty() {
            return Ok(false);
        }
        let sum: Complex64 = inv.values.iter().sum();
        let scale: f64 = inv.values.iter().map(|z| z.norm()).sum();
        Ok(scale == 0.0 || sum.norm() <= self.tolerances.proximity * scale)
    }

    pub fn classify(&self, s0: Complex64) -> Result<PointKind> {
        let tol = self.tolerances.proximity;
        if Self::near(&self.coupling_poles, s0, tol) {
            return Ok(PointKind::PoleOfCoupling);
        }
        let pole = match &self.coherent_poles {
            Some(poles) => Self::near(poles, s0, tol),
            None => self.coherent_pole_pointwise(s0)?,
        };
        if pole {
            return Ok(PointKind::PoleOfCoherent);
        }
        let zero = match &self.coherent_zeros {
            Some(zeros) => Self::near(zeros, s0, tol),
            None => self.nodal_multiplicity(s0, tol) > 0,
        };
        Ok(if zero {
            PointKind::ZeroOfCoherent
        } else {
            PointKind::Generic
        })
    }

    /// `T(s0)`; zero-gain nodes are handled through the grounded Laplacian.
    pub fn transfer_matrix(&self, s0: Complex64) -> Result<TransferEval> {
        let f = self.coupling_value(s0)?;
        let inv = self.inverses(s0)?;
        let n = self.n();
        let kept: Vec<usize> = (0..n).filter(|i| !inv.vanishing.contains(i)).collect();
        if kept.is_empty() {
            return Ok(TransferEval {
                matrix: CMatrix::zeros(n, n),
                condition: 1.0,
                ill_conditioned: false,
            });
        }
        let sub_l = if inv.vanishing.is_empty() {
            self.laplacian.matrix().clone()
        } else {
            self.laplacian.matrix().select_rows(&kept).select_columns(&kept)
        };
        let mut a = linalg::complexify(&sub_l) * f;
        for (row, &i) in kept.iter().enumerate() {
            a[(row, row)] += inv.values[i];
        }
        let a_inv = linalg::inverse(&a).ok_or(CoherenceError::SingularSystem(s0))?;
        let condition = linalg::norm1(&a) * linalg::norm1(&a_inv);
        let matrix = if inv.vanishing.is_empty() {
            a_inv
        } else {
            let mut full = CMatrix::zeros(n, n);
            for (r, &i) in kept.iter().enumerate() {
                for (c, &j) in kept.iter().enumerate() {
                    full[(i, j)] = a_inv[(r, c)];
                }
            }
            full
        };
        Ok(TransferEval {
            matrix,
            condition,
            ill_conditioned: !(condition <= self.tolerances.condition),
        })
    }

    /// `(1/n) gbar(s0) 1 1^T`.
    pub fn coherent_projection(&self, s0: Complex64) -> Result<CMatrix> {
        if self.classify(s0)? == PointKind::PoleOfCoherent {
            return Err(CoherenceError::PoleOfCoherent(s0));
        }
        let g = self
            .coherent_value(s0)?
            .finite()
            .ok_or(CoherenceError::PoleOfCoherent(s0))?;
        Ok(linalg::ones_outer(self.n(), g / self.n() as f64))
    }

    /// `|| T(s0) - (1/n) gbar(s0) 1 1^T ||_2`.
    pub fn incoherence(&self, s0: Complex64) -> Result<f64> {
        let t = self.transfer_matrix(s0)?;
        self.incoherence_of(s0, &t.matrix)
    }

    fn incoherence_of(&self, s0: Complex64, t: &CMatrix) -> Result<f64> {
        let projection = self.coherent_projection(s0)?;
        if self.n() == 1 {
            return Ok(0.0);
        }
        Ok(linalg::spectral_norm(&(t - projection)))
    }

    /// The a-priori incoherence bound
    /// `(m1 m2 + 1)^2 / (|f| lambda_2 - m2 - m1 m2^2)`, `None` when the
    /// denominator is not positive.
    pub fn lemma4_bound(&self, s0: Complex64, m1: f64, m2: f64) -> Result<Option<f64>> {
        let f = self.coupling_value(s0)?;
        let g = self
            .coherent_value(s0)?
            .finite()
            .ok_or(CoherenceError::PoleOfCoherent(s0))?;
        if m1 < g.norm() {
            return Err(CoherenceError::BoundHypothesisViolated(format!(
                "M1 = {m1} < |gbar| = {}",
                g.norm()
            )));
        }
        let inv = self.inverses(s0)?;
        let max_inv = inv.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(m2 >= max_inv) {
            return Err(CoherenceError::BoundHypothesisViolated(format!(
                "M2 = {m2} < max |g_i^-1| = {max_inv}"
            )));
        }
        Ok(bound_formula(f.norm() * self.laplacian.algebraic_connectivity(), m1, m2))
    }

    /// `1.05` times the point values of `|gbar|` and `max_i |g_i^{-1}|`.
    pub fn pointwise_bounds(&self, s0: Complex64) -> Result<(f64, f64)> {
        let g = self
            .coherent_value(s0)?
            .finite()
            .ok_or(CoherenceError::PoleOfCoherent(s0))?;
        let inv = self.inverses(s0)?;
        let max_inv = inv.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok((1.05 * g.norm(), 1.05 * max_inv))
    }

    /// Grid-wide `M1`, `M2` for the bound.
    pub fn default_bounds(&self, points: &[Complex64]) -> Result<(f64, f64)> {
        let mut m1 = 0.0_f64;
        let mut m2 = 0.0_f64;
        for &s in points {
            match self.classify(s)? {
                PointKind::PoleOfCoherent => return Err(CoherenceError::PoleOnGrid(s)),
                PointKind::ZeroOfCoherent => return Err(CoherenceError::ZeroOnGrid(s)),
                _ => {}
            }
            let (a, b) = self.pointwise_bounds(s)?;
            m1 = m1.max(a);
            m2 = m2.max(b);
        }
        Ok((m1, m2))
    }

    /// `|f(s0)| lambda_2`, infinite at a pole of `f`.
    pub fn effective_connectivity(&self, s0: Complex64) -> f64 {
        match self.coupling.eval_with_tolerance(s0, self.tolerances.zero) {
            Ok(ExtComplex::Finite(f)) => f.norm() * self.laplacian.algebraic_connectivity(),
            _ => f64::INFINITY,
        }
    }

    /// Number of nodes with a zero within `tol` of `s0`.
    pub fn nodal_multiplicity(&self, s0: Complex64, tol: f64) -> usize {
        self.node_zeros.iter().filter(|z| Self::near(z, s0, tol)).count()
    }

    /// Incoherence of `T(s0) / ||T(s0)||` at a pole of the coherent dynamics.
    ///
    /// `lambda_lim` holds the `n - 1` non-zero diagonal entries of the limit
    /// matrix; by default the current spectrum divided by `lambda_2`.
    pub fn normalized_incoherence(
        &self,
        s0: Complex64,
        lambda_lim: Option<&[f64]>,
    ) -> Result<NormalizedIncoherence> {
        let n = self.n();
        if n < 2 {
            return Err(CoherenceError::HypothesisViolated("needs at least two nodes".into()));
        }
        if !self.coherent_pole_pointwise(s0)? {
            return Err(CoherenceError::NotAPoleOfCoherent(s0));
        }
        let f = self.coupling_value(s0)?;
        if f.norm() == 0.0 {
            return Err(CoherenceError::ZeroCoupling(s0));
        }
        let inv = self.inverses(s0)?;
        let lambda2 = self.laplacian.algebraic_connectivity();
        let default_lim: Vec<f64>;
        let lim = match lambda_lim {
            Some(l) => l,
            None => {
                default_lim = self.laplacian.eigenvalues().iter().skip(1).map(|x| x / lambda2).collect();
                &default_lim
            }
        };
        if lim.len() != n - 1 || lim.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(CoherenceError::InvalidLimitMatrix { expected: n - 1 });
        }
        let v = self.laplacian.eigenvectors();
        let sqrt_n = (n as f64).sqrt();
        let mut q = Complex64::new(0.0, 0.0);
        let mut q_scale = 0.0;
        for k in 1..n {
            let h: Complex64 = (0..n).map(|i| inv.values[i] * v[(i, k)]).sum::<Complex64>() / sqrt_n;
            q += h * h / lim[k - 1];
            q_scale += h.norm_sqr() / lim[k - 1];
        }
        let inv_scale: f64 = inv.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        if q.norm() <= self.tolerances.zero * q_scale.max(inv_scale) || q.norm() == 0.0 {
            return Err(CoherenceError::DegenerateGamma);
        }
        let gamma = q / q.norm();
        let toward = q / f;
        let phase = -toward.conj() / toward.norm();
        let t = self.transfer_matrix(s0)?;
        let norm_t = linalg::spectral_norm(&t.matrix);
        let normalized = t.matrix.unscale(norm_t);
        let value = linalg::spectral_norm(&(normalized - linalg::ones_outer(n, phase / n as f64)));
        Ok(NormalizedIncoherence {
            value,
            gamma,
            phase,
            norm_t,
        })
    }

    /// Full per-point evaluation; never fails.
    pub fn report(&self, s0: Complex64) -> CoherenceReport {
        let effective_connectivity = self.effective_connectivity(s0);
        let nodal_multiplicity = self.nodal_multiplicity(s0, self.tolerances.proximity);
        let mut report = CoherenceReport {
            s0,
            transfer: None,
            gbar: None,
            incoherence: None,
            lemma4_bound: None,
            effective_connectivity,
            nodal_multiplicity,
            norm_t: None,
            status: PointStatus::Ok,
        };
        let kind = match self.classify(s0) {
            Ok(k) => k,
            Err(_) => {
                report.status = PointStatus::IllConditioned;
                return report;
            }
        };
        if kind == PointKind::PoleOfCoupling || effective_connectivity.is_infinite() {
            report.status = PointStatus::PoleOfCoupling;
            return report;
        }
        report.gbar = self.coherent_value(s0).ok();
        let t = match self.transfer_matrix(s0) {
            Ok(t) => t,
            Err(CoherenceError::PoleOfCoupling(_)) => {
                report.status = PointStatus::PoleOfCoupling;
                return report;
            }
            Err(_) => {
                report.status = match kind {
                    PointKind::PoleOfCoherent => PointStatus::PoleOfCoherent,
                    _ => PointStatus::IllConditioned,
                };
                return report;
            }
        };
        report.norm_t = Some(linalg::spectral_norm(&t.matrix));
        match kind {
            PointKind::PoleOfCoherent => report.status = PointStatus::PoleOfCoherent,
            _ => {
                report.incoherence = self.incoherence_of(s0, &t.matrix).ok();
                report.lemma4_bound = self
                    .pointwise_bounds(s0)
                    .ok()
                    .and_then(|(m1, m2)| self.lemma4_bound(s0, m1, m2).ok().flatten());
                report.status = if kind == PointKind::ZeroOfCoherent {
                    PointStatus::ZeroOfCoherent
                } else if t.ill_conditioned {
                    PointStatus::IllConditioned
                } else {
                    PointStatus::Ok
                };
            }
        }
        report.transfer = Some(t.matrix);
        report
    }

    /// Reports for every grid point, in grid order.
    pub fn sweep(&self, grid: &FrequencyGrid) -> Vec<CoherenceReport> {
        self.sweep_points(&grid.points())
    }

    pub fn sweep_points(&self, points: &[Complex64]) -> Vec<CoherenceReport> {
        points.par_iter().map(|&s| self.report(s)).collect()
    }

    /// Max incoherence over a point set; fails on any undefined point.
    pub fn sup_incoherence(&self, points: &[Complex64]) -> Result<f64> {
        let values: Vec<Result<f64>> = points
            .par_iter()
            .map(|&s| self.incoherence(s).map_err(|_| CoherenceError::UndefinedPointInGrid(s)))
            .collect();
        values.into_iter().try_fold(0.0_f64, |m, v| Ok(m.max(v?)))
    }

    /// Sup over `grid`, doubling its density until consecutive values differ by under 5%.
    pub fn sup_incoherence_refined(&self, grid: &FrequencyGrid, max_refinements: usize) -> Result<RefinedSup> {
        let mut grid = grid.clone();
        let mut sup = self.sup_incoherence(&grid.points())?;
        for refinements in 0..max_refinements {
            grid = grid.refined();
            let next = self.sup_incoherence(&grid.points())?;
            let change = (next - sup).abs() / sup.abs().max(f64::MIN_POSITIVE);
            sup = next;
            if change < 0.05 {
                return Ok(RefinedSup {
                    sup,
                    refinements: refinements + 1,
                    converged: true,
                });
            }
        }
        Ok(RefinedSup {
            sup,
            refinements: max_refinements,
            converged: max_refinements == 0,
        })
    }

    /// Incoherence and bound at `s0` over `alpha L` for each `alpha`, sorted by `alpha`.
    pub fn convergence_study(&self, s0: Complex64, alphas: &[f64]) -> Result<Vec<ConvergenceRow>> {
        let mut alphas = alphas.to_vec();
        alphas.sort_by(f64::total_cmp);
        let rows: Vec<Result<ConvergenceRow>> = alphas
            .par_iter()
            .map(|&alpha| {
                let net = self.scaled(alpha)?;
                let t = net.transfer_matrix(s0)?;
                let norm_t = linalg::spectral_norm(&t.matrix);
                let (incoherence, lemma4_bound) = match net.classify(s0)? {
                    PointKind::PoleOfCoherent => (None, None),
                    _ => {
                        let inc = net.incoherence_of(s0, &t.matrix)?;
                        let (m1, m2) = net.pointwise_bounds(s0)?;
                        (Some(inc), net.lemma4_bound(s0, m1, m2)?)
                    }
                };
                Ok(ConvergenceRow {
                    alpha,
                    incoherence,
                    lemma4_bound,
                    norm_t,
                })
            })
            .collect();
        rows.into_iter().collect()
    }

    /// Checks the conditions for uniform convergence over the closed right half-plane.
    pub fn rhp_uniform_check(&self) -> RhpEligibility {
        for (i, g) in self.nodes.iter().enumerate() {
            match g.properness() {
                Properness::StrictlyProper => return RhpEligibility::Ineligible(RhpViolation::StrictlyProperNode(i)),
                Properness::Improper => return RhpEligibility::Ineligible(RhpViolation::ImproperNode(i)),
                Properness::Biproper => {}
            }
        }
        let Some(poles) = &self.coherent_poles else {
            return RhpEligibility::Ineligible(RhpViolation::CoherentUnavailable);
        };
        let tol = self.tolerances.proximity;
        if let Some(&p) = poles.iter().find(|p| p.re >= -tol) {
            return RhpEligibility::Ineligible(RhpViolation::UnstableCoherent(p));
        }
        for zeros in &self.node_zeros {
            for &z in zeros.iter().filter(|z| z.re >= -tol) {
                let multiplicity = self.nodal_multiplicity(z, tol);
                if multiplicity > 1 {
                    return RhpEligibility::Ineligible(RhpViolation::SharedRhpZero { zero: z, multiplicity });
                }
            }
        }
        RhpEligibility::Eligible
    }

    /// Sup incoherence over a polar grid on the disk `|s - center| <= radius`
    /// (center included) for each `alpha`.
    pub fn disk_sup_study(
        &self,
        center: Complex64,
        radius: f64,
        alphas: &[f64],
        grid: DiskGrid,
    ) -> Result<Vec<DiskSupRow>> {
        let points = grid.points(center, radius);
        let mut alphas = alphas.to_vec();
        alphas.sort_by(f64::total_cmp);
        alphas
            .iter()
            .map(|&alpha| {
                let net = self.scaled(alpha)?;
                let sup = net.sup_incoherence(&points)?;
                Ok(DiskSupRow {
                    alpha,
                    grid_sup: sup,
                    sup_incoherence: sup,
                    witness: None,
                    witness_incoherence: None,
                })
            })
            .collect()
    }

    /// Disk study around a real zero shared by every node.
    ///
    /// Besides the polar grid, each row evaluates the point
    /// `z - 1/mu_max(alpha)` where `mu_max` is the dominant eigenvalue of
    /// `diag(g_i'(z)) alpha L`; there `T` keeps a non-vanishing incoherence
    /// however large `alpha` grows.
    pub fn failure_experiment(&self, z: f64, radius: f64, alphas: &[f64], grid: DiskGrid) -> Result<Vec<DiskSupRow>> {
        let zc = Complex64::new(z, 0.0);
        let tol = self.tolerances.proximity;
        let multiplicity = self.nodal_multiplicity(zc, tol);
        if multiplicity != self.n() {
            return Err(CoherenceError::HypothesisViolated(format!(
                "{z} is a zero of {multiplicity} of {} nodes",
                self.n()
            )));
        }
        if !(radius > 0.0) {
            return Err(CoherenceError::HypothesisViolated("radius must be positive".into()));
        }
        let mut slopes = Vec::with_capacity(self.n());
        for (i, g) in self.nodes.iter().enumerate() {
            let count = self.node_zeros[i].iter().filter(|r| (*r - zc).norm() <= tol).count();
            let slope = g.num().derivative().eval_real(z) / g.den().eval_real(z);
            if count != 1 || slope == 0.0 || !slope.is_finite() {
                return Err(CoherenceError::HypothesisViolated(format!(
                    "zero at {z} of node {i} is not simple"
                )));
            }
            slopes.push(slope);
        }
        let points = grid.points(zc, radius);
        let mut alphas = alphas.to_vec();
        alphas.sort_by(f64::total_cmp);
        alphas
            .iter()
            .map(|&alpha| {
                let net = self.scaled(alpha)?;
                let grid_sup = net.sup_incoherence(&points)?;
                let witness = net.failure_witness(zc, &slopes).filter(|w| (w - zc).norm() <= radius);
                let witness_incoherence = match witness {
                    Some(w) => Some(net.incoherence(w).map_err(|_| CoherenceError::UndefinedPointInGrid(w))?),
                    None => None,
                };
                Ok(DiskSupRow {
                    alpha,
                    grid_sup,
                    sup_incoherence: grid_sup.max(witness_incoherence.unwrap_or(0.0)),
                    witness,
                    witness_incoherence,
                })
            })
            .collect()
    }

    fn failure_witness(&self, z: Complex64, slopes: &[f64]) -> Option<Complex64> {
        let n = self.n();
        let h = DMatrix::from_fn(n, n, |i, j| slopes[i] * self.laplacian.matrix()[(i, j)]);
        let mu = h
            .complex_eigenvalues()
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        (mu.norm() > 0.0).then(|| z - 1.0 / mu)
    }
}

fn bound_formula(effective: f64, m1: f64, m2: f64) -> Option<f64> {
    let denominator = effective - m2 - m1 * m2 * m2;
    (denominator > 0.0).then(|| (m1 * m2 + 1.0).powi(2) / denominator)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferEval {
    pub matrix: CMatrix,
    /// `||A||_1 ||A^{-1}||_1` of the solved system.
    pub condition: f64,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedIncoherence {
    pub value: f64,
    /// Unit-modulus phase of the limit-matrix quadratic form.
    pub gamma: Complex64,
    /// Phase of the rank-one direction `T(s0)/||T(s0)||` approaches.
    pub phase: Complex64,
    pub norm_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    PoleOfCoupling,
    PoleOfCoherent,
    ZeroOfCoherent,
    IllConditioned,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::PoleOfCoupling => "pole_f",
            PointStatus::PoleOfCoherent => "pole_gbar",
            PointStatus::ZeroOfCoherent => "zero_gbar",
            PointStatus::IllConditioned => "ill_conditioned",
        }
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub s0: Complex64,
    pub transfer: Option<CMatrix>,
    pub gbar: Option<ExtComplex>,
    pub incoherence: Option<f64>,
    pub lemma4_bound: Option<f64>,
    pub effective_connectivity: f64,
    pub nodal_multiplicity: usize,
    pub norm_t: Option<f64>,
    pub status: PointStatus,
}

pub const REPORT_CSV_HEADER: &str = "sigma,omega,incoherence,bound,eff_conn,norm_T,multiplicity,status";

/// Formats a float for CSV output: `nan` when absent, `inf` when infinite.
pub fn csv_number(x: Option<f64>) -> String {
    match x {
        None => "nan".into(),
        Some(v) if v.is_nan() => "nan".into(),
        Some(v) if v.is_infinite() => if v > 0.0 { "inf".into() } else { "-inf".into() },
        Some(v) => format!("{v}"),
    }
}

impl CoherenceReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.s0.re,
            self.s0.im,
            csv_number(self.incoherence),
            csv_number(self.lemma4_bound),
            csv_number(Some(self.effective_connectivity)),
            csv_number(self.norm_t),
            self.nodal_multiplicity,
            self.status
        )
    }
}

pub fn reports_to_csv(reports: &[CoherenceReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
    Explicit,
}

/// Points `sigma + j omega` along a vertical line.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    sigma: f64,
    omegas: Vec<f64>,
    spacing: Spacing,
}

impl FrequencyGrid {
    pub fn from_omegas(sigma: f64, omegas: Vec<f64>) -> Result<Self> {
        if omegas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CoherenceError::InvalidGrid("frequencies must be strictly increasing".into()));
        }
        if !sigma.is_finite() || omegas.iter().any(|w| !w.is_finite()) {
            return Err(CoherenceError::InvalidGrid("non-finite value".into()));
        }
        Ok(Self {
            sigma,
            omegas,
            spacing: Spacing::Explicit,
        })
    }

    pub fn linear(sigma: f64, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let omegas = match count {
            0 => vec![],
            1 => vec![lo],
            _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
        };
        let mut grid = Self::from_omegas(sigma, omegas)?;
        grid.spacing = Spacing::Linear;
        Ok(grid)
    }

    pub fn logarithmic(sigma: f64, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > 0.0) {
            return Err(CoherenceError::InvalidGrid("logarithmic grid needs positive bounds".into()));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let omegas = match count {
            0 => vec![],
            1 => vec![lo],
            _ => (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect(),
        };
        let mut grid = Self::from_omegas(sigma, omegas)?;
        grid.spacing = Spacing::Logarithmic;
        Ok(grid)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.omegas.iter().map(|&w| Complex64::new(self.sigma, w)).collect()
    }

    /// Inserts the midpoint (geometric for logarithmic grids) of each gap.
    pub fn refined(&self) -> Self {
        let mut omegas = Vec::with_capacity(2 * self.omegas.len());
        for w in self.omegas.windows(2) {
            omegas.push(w[0]);
            omegas.push(match self.spacing {
                Spacing::Logarithmic => (w[0] * w[1]).sqrt(),
                _ => 0.5 * (w[0] + w[1]),
            });
        }
        omegas.extend(self.omegas.last());
        Self {
            sigma: self.sigma,
            omegas,
            spacing: self.spacing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedSup {
    pub sup: f64,
    pub refinements: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    /// `None` at a pole of the coherent dynamics.
    pub incoherence: Option<f64>,
    pub lemma4_bound: Option<f64>,
    pub norm_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhpViolation {
    StrictlyProperNode(usize),
    ImproperNode(usize),
    CoherentUnavailable,
    UnstableCoherent(Complex64),
    SharedRhpZero { zero: Complex64, multiplicity: usize },
}

impl fmt::Display for RhpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhpViolation::StrictlyProperNode(i) => write!(f, "node {i} is strictly proper"),
            RhpViolation::ImproperNode(i) => write!(f, "node {i} is improper"),
            RhpViolation::CoherentUnavailable => f.write_str("coherent dynamics unavailable"),
            RhpViolation::UnstableCoherent(p) => write!(f, "coherent dynamics has pole {p}"),
            RhpViolation::SharedRhpZero { zero, multiplicity } => {
                write!(f, "{multiplicity} nodes share the zero {zero}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhpEligibility {
    Eligible,
    Ineligible(RhpViolation),
}

/// Polar sampling of a disk: `angles` rays times `radii` rings, plus the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiskGrid {
    pub angles: usize,
    pub radii: usize,
}

impl Default for DiskGrid {
    fn default() -> Self {
        Self { angles: 24, radii: 16 }
    }
}

impl DiskGrid {
    pub fn points(&self, center: Complex64, radius: f64) -> Vec<Complex64> {
        let mut pts = vec![center];
        for k in 1..=self.radii {
            let r = radius * k as f64 / self.radii as f64;
            for a in 0..self.angles {
                let theta = 2.0 * std::f64::consts::PI * a as f64 / self.angles as f64;
                pts.push(center + Complex64::from_polar(r, theta));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSupRow {
    pub alpha: f64,
    /// Max over the polar grid and, when present, the witness point.
    pub sup_incoherence: f64,
    pub grid_sup: f64,
    pub witness: Option<Complex64>,
    pub witness_incoherence: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(num, den).unwrap()
    }

    fn k2(w: f64) -> LaplacianMatrix {
        LaplacianMatrix::from_edges(2, &[(0, 1, w)]).unwrap()
    }

    fn homogeneous_k2(w: f64) -> NetworkModel {
        NetworkModel::homogeneous(k2(w), RationalTF::integrator(), RationalTF::constant(1.0)).unwrap()
    }

    #[test]
    fn transfer_matrix_examples() {
        let single = NetworkModel::new(
            LaplacianMatrix::empty(1).unwrap(),
            vec![RationalTF::integrator()],
            RationalTF::constant(1.0),
        )
        .unwrap();
        let t = single.transfer_matrix(c(1.0, 0.0)).unwrap().matrix;
        assert_relative_eq!(t[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(single.incoherence(c(1.0, 0.0)).unwrap(), 0.0);

        let t = homogeneous_k2(1.0).transfer_matrix(c(1.0, 0.0)).unwrap().matrix;
        for (i, j, v) in [(0, 0, 2.0 / 3.0), (0, 1, 1.0 / 3.0), (1, 1, 2.0 / 3.0)] {
            assert!((t[(i, j)] - c(v, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn incoherence_examples() {
        assert_relative_eq!(homogeneous_k2(1.0).incoherence(c(1.0, 0.0)).unwrap(), 1.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(homogeneous_k2(10.0).incoherence(c(1.0, 0.0)).unwrap(), 1.0 / 21.0, epsilon = 1e-13);
    }

    #[test]
    fn projection_examples() {
        let p = homogeneous_k2(1.0).coherent_projection(c(1.0, 0.0)).unwrap();
        assert!(p.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));
        let net = NetworkModel::new(k2(1.0), vec![tf(&[1.0], &[2.0, 1.0]), tf(&[1.0], &[4.0, 3.0])], RationalTF::constant(1.0)).unwrap();
        let p = net.coherent_projection(c(0.0, 0.0)).unwrap();
        assert!(p.iter().all(|z| (z - c(1.0 / 6.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn bound_examples() {
        let s0 = c(1.0, 0.0);
        let net = homogeneous_k2(2.0);
        assert_relative_eq!(net.lemma4_bound(s0, 1.0, 1.0).unwrap().unwrap(), 2.0, epsilon = 1e-13);
        assert_relative_eq!(net.incoherence(s0).unwrap(), 0.2, epsilon = 1e-13);
        assert_eq!(homogeneous_k2(1.0).lemma4_bound(s0, 1.0, 1.0).unwrap(), None);
        assert!(matches!(
            net.lemma4_bound(s0, 0.5, 1.0),
            Err(CoherenceError::BoundHypothesisViolated(_))
        ));
    }

    #[test]
    fn default_bounds_examples() {
        let (m1, m2) = homogeneous_k2(1.0).default_bounds(&[c(1.0, 0.0)]).unwrap();
        assert_relative_eq!(m1, 1.05);
        assert_relative_eq!(m2, 1.05);
        let net = NetworkModel::new(k2(1.0), vec![tf(&[1.0], &[2.0, 1.0]), tf(&[1.0], &[4.0, 3.0])], RationalTF::constant(1.0)).unwrap();
        assert_relative_eq!(net.default_bounds(&[c(0.0, 0.0)]).unwrap().1, 1.05 * 4.0);
        assert!(matches!(
            homogeneous_k2(1.0).default_bounds(&[c(0.0, 0.0)]),
            Err(CoherenceError::PoleOnGrid(_))
        ));
    }

    #[test]
    fn effective_connectivity_examples() {
        let l = LaplacianMatrix::from_edges(2, &[(0, 1, 1.5)]).unwrap();
        let net = NetworkModel::homogeneous(l, RationalTF::integrator(), RationalTF::integrator()).unwrap();
        assert_relative_eq!(net.effective_connectivity(c(0.0, 0.1)), 30.0, epsilon = 1e-12);
        assert!(net.effective_connectivity(c(0.0, 0.0)).is_infinite());
    }

    #[test]
    fn multiplicity_examples() {
        let a = tf(&[1.0, 1.0], &[0.0, 0.0, 1.0]);
        let b = tf(&[2.0, 1.0], &[0.0, 0.0, 1.0]);
        let net = NetworkModel::new(k2(1.0), vec![a.clone(), b], RationalTF::constant(1.0)).unwrap();
        assert_eq!(net.nodal_multiplicity(c(-1.0, 0.0), 1e-6), 1);
        let shared = NetworkModel::new(k2(1.0), vec![a.clone(), a.scale(2.0)], RationalTF::constant(1.0)).unwrap();
        assert_eq!(shared.nodal_multiplicity(c(-1.0, 0.0), 1e-6), 2);
        assert_eq!(homogeneous_k2(1.0).nodal_multiplicity(c(0.3, 0.0), 1e-6), 0);
    }

    #[test]
    fn zero_gain_node_uses_grounded_form() {
        let a = tf(&[1.0, 1.0], &[2.0, 1.0]);
        let b = tf(&[3.0, 1.0], &[4.0, 1.0]);
        let net = NetworkModel::new(k2(1.0), vec![a, b], RationalTF::constant(1.0)).unwrap();
        let t = net.transfer_matrix(c(-1.0, 0.0)).unwrap().matrix;
        assert_eq!(t[(0, 0)], c(0.0, 0.0));
        assert_eq!(t[(0, 1)], c(0.0, 0.0));
        assert!((t[(1, 1)] - c(1.0 / (3.0 / 2.0 + 1.0), 0.0)).norm() < 1e-14);
        assert_eq!(net.classify(c(-1.0, 0.0)).unwrap(), PointKind::ZeroOfCoherent);
    }

    #[test]
    fn normalized_incoherence_example() {
        let nodes = vec![tf(&[1.0], &[-1.0, 1.0]), tf(&[1.0], &[1.0, 1.0])];
        let net = NetworkModel::new(k2(10.0), nodes, RationalTF::constant(1.0)).unwrap();
        let r = net.normalized_incoherence(c(0.0, 0.0), None).unwrap();
        assert!((r.gamma - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r.phase - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(r.value < 0.1);
        assert!(matches!(
            homogeneous_k2(1.0).normalized_incoherence(c(1.0, 0.0), None),
            Err(CoherenceError::NotAPoleOfCoherent(_))
        ));
    }

    #[test]
    fn homogeneous_pole_is_degenerate() {
        let g = tf(&[1.0], &[-1.0, 1.0]);
        let net = NetworkModel::homogeneous(k2(1.0), g, RationalTF::constant(1.0)).unwrap();
        assert_eq!(
            net.normalized_incoherence(c(1.0, 0.0), None),
            Err(CoherenceError::DegenerateGamma)
        );
    }

    #[test]
    fn sweep_marks_coupling_pole() {
        let l = LaplacianMatrix::complete_graph(4, 1.0).unwrap();
        let net = NetworkModel::homogeneous(l, RationalTF::integrator(), RationalTF::integrator()).unwrap();
        let grid = FrequencyGrid::from_omegas(0.0, vec![0.0, 1.0]).unwrap();
        let reports = net.sweep(&grid);
        assert_eq!(reports[0].status, PointStatus::PoleOfCoupling);
        assert_eq!(reports[1].status, PointStatus::Ok);
        assert!(net.sweep(&FrequencyGrid::from_omegas(0.0, vec![]).unwrap()).is_empty());
    }

    #[test]
    fn convergence_study_closed_form() {
        let rows = homogeneous_k2(1.0).convergence_study(c(1.0, 0.0), &[8.0, 1.0, 4.0, 2.0]).unwrap();
        for (row, alpha) in rows.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert_eq!(row.alpha, alpha);
            assert_relative_eq!(row.incoherence.unwrap(), 1.0 / (1.0 + 2.0 * alpha), epsilon = 1e-13);
        }
    }

    #[test]
    fn rhp_examples() {
        let a = tf(&[1.0, 1.0], &[2.0, 1.0]);
        let b = tf(&[3.0, 1.0], &[4.0, 1.0]);
        let net = NetworkModel::new(k2(1.0), vec![a, b], RationalTF::constant(1.0)).unwrap();
        assert_eq!(net.rhp_uniform_check(), RhpEligibility::Eligible);
        assert_eq!(
            homogeneous_k2(1.0).rhp_uniform_check(),
            RhpEligibility::Ineligible(RhpViolation::StrictlyProperNode(0))
        );
        let h1 = tf(&[-1.0, 1.0], &[2.0, 1.0]);
        let h2 = tf(&[-1.0, 1.0], &[3.0, 1.0]).scale(2.0);
        let shared = NetworkModel::new(k2(1.0), vec![h1, h2], RationalTF::constant(1.0)).unwrap();
        assert!(matches!(
            shared.rhp_uniform_check(),
            RhpEligibility::Ineligible(RhpViolation::SharedRhpZero { multiplicity: 2, .. })
        ));
    }

    #[test]
    fn grid_refinement() {
        let grid = FrequencyGrid::linear(0.5, 0.0, 1.0, 3).unwrap();
        assert_eq!(grid.refined().omegas(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(FrequencyGrid::from_omegas(0.0, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_row_format() {
        let r = homogeneous_k2(1.0).report(c(0.0, 0.0));
        assert_eq!(r.status, PointStatus::PoleOfCoherent);
        let row = r.csv_row();
        assert!(row.starts_with("0,0,nan,nan,"), "{row}");
        assert!(row.ends_with(",pole_gbar"));
    }
}
