//! Aggregation of coherent generator groups into an equivalent machine.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::coherence::NetworkModel;
use crate::rational::{self, Polynomial, RationalError, RationalTF};
use crate::timedomain::{self, Input, SimOptions, TimeDomainError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("swing aggregate expects no droop terms (generator {0} has one)")]
    DroopPresent(usize),
    #[error("generator {0} has no droop term")]
    MissingDroop(usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("empty generator set")]
    Empty,
    #[error("aggregation error needs the coupling 1/s")]
    CouplingNotIntegrator,
    #[error("cannot parse aggregate model: {0}")]
    Parse(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    TimeDomain(#[from] TimeDomainError),
}

pub type Result<T> = std::result::Result<T, AggregateError>;

/// Turbine droop `r^{-1} / (tau s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Droop {
    pub r_inv: f64,
    pub tau: f64,
}

/// Swing-equation generator, optionally with turbine droop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingParams {
    pub inertia: f64,
    pub damping: f64,
    pub droop: Option<Droop>,
}

impl SwingParams {
    pub fn new(inertia: f64, damping: f64) -> Result<Self> {
        if !(inertia > 0.0) || !(damping > 0.0) || !inertia.is_finite() || !damping.is_finite() {
            return Err(AggregateError::InvalidParams(format!(
                "inertia and damping must be positive, got m = {inertia}, d = {damping}"
            )));
        }
        Ok(Self {
            inertia,
            damping,
            droop: None,
        })
    }

    pub fn with_droop(mut self, r_inv: f64, tau: f64) -> Result<Self> {
        if !(r_inv >= 0.0) || !(tau > 0.0) || !r_inv.is_finite() || !tau.is_finite() {
            return Err(AggregateError::InvalidParams(format!(
                "droop needs r_inv >= 0 and tau > 0, got r_inv = {r_inv}, tau = {tau}"
            )));
        }
        self.droop = Some(Droop { r_inv, tau });
        Ok(self)
    }

    /// `1 / (m s + d + r^{-1}/(tau s + 1))`.
    pub fn transfer_function(&self) -> RationalTF {
        let swing = Polynomial::new(vec![self.damping, self.inertia]);
        let tf = match self.droop {
            None => RationalTF::new(Polynomial::one(), swing),
            Some(Droop { r_inv, tau }) => {
                let turbine = Polynomial::new(vec![1.0, tau]);
                let den = swing.mul(&turbine).add(&Polynomial::constant(r_inv));
                RationalTF::new(turbine, den)
            }
        };
        tf.expect("positive parameters give a valid transfer function")
            .simplify(rational::DEFAULT_TOL_CANCEL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SwingClosedForm,
    SwingTurbineClosedForm,
    GenericHarmonic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SwingClosedForm => "swing_closed_form",
            Provenance::SwingTurbineClosedForm => "swing_turbine_closed_form",
            Provenance::GenericHarmonic => "generic_harmonic",
        }
    }
}

impl FromStr for Provenance {
    type Err = AggregateError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "swing_closed_form" => Ok(Provenance::SwingClosedForm),
            "swing_turbine_closed_form" => Ok(Provenance::SwingTurbineClosedForm),
            "generic_harmonic" => Ok(Provenance::GenericHarmonic),
            other => Err(AggregateError::Parse(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateModel {
    pub g_aggr: RationalTF,
    pub provenance: Provenance,
    /// Degree of the denominator.
    pub order: usize,
}

impl AggregateModel {
    fn new(g: RationalTF, provenance: Provenance) -> Self {
        let g_aggr = g.simplify(rational::DEFAULT_TOL_CANCEL);
        let order = g_aggr.den().degree();
        Self {
            g_aggr,
            provenance,
            order,
        }
    }
}

impl fmt::Display for AggregateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.g_aggr)?;
        write!(f, "provenance: {}", self.provenance.as_str())
    }
}

impl FromStr for AggregateModel {
    type Err = AggregateError;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let tf: RationalTF = lines
            .next()
            .ok_or_else(|| AggregateError::Parse("missing transfer function".into()))?
            .parse()?;
        let provenance = lines
            .next()
            .and_then(|l| l.strip_prefix("provenance:"))
            .ok_or_else(|| AggregateError::Parse("missing `provenance:` line".into()))?
            .parse()?;
        Ok(Self::new(tf, provenance))
    }
}

/// `(sum g_i^{-1})^{-1}` by rational arithmetic.
pub fn aggregate_dynamics(gs: &[RationalTF]) -> Result<AggregateModel> {
    let g = rational::parallel_sum(gs)?;
    Ok(AggregateModel::new(g, Provenance::GenericHarmonic))
}

/// `1 / (sum m_i s + sum d_i)`.
pub fn swing_aggregate(params: &[SwingParams]) -> Result<AggregateModel> {
    if params.is_empty() {
        return Err(AggregateError::Empty);
    }
    if let Some(i) = params.iter().position(|p| p.droop.is_some()) {
        return Err(AggregateError::DroopPresent(i));
    }
    let m: f64 = params.iter().map(|p| p.inertia).sum();
    let d: f64 = params.iter().map(|p| p.damping).sum();
    let g = RationalTF::new(Polynomial::one(), Polynomial::new(vec![d, m]))?;
    Ok(AggregateModel::new(g, Provenance::SwingClosedForm))
}

/// `1 / (sum m_i s + sum d_i + sum_i r_i^{-1}/(tau_i s + 1))`, with droops
/// sharing a time constant (within `1e-12`) merged into one term.
pub fn swing_turbine_aggregate(params: &[SwingParams]) -> Result<AggregateModel> {
    if params.is_empty() {
        return Err(AggregateError::Empty);
    }
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (i, p) in params.iter().enumerate() {
        let droop = p.droop.ok_or(AggregateError::MissingDroop(i))?;
        match groups.iter_mut().find(|(tau, _)| (tau - droop.tau).abs() <= 1e-12) {
            Some(group) => group.1 += droop.r_inv,
            None => groups.push((droop.tau, droop.r_inv)),
        }
    }
    groups.retain(|(_, r)| *r != 0.0);
    let m: f64 = params.iter().map(|p| p.inertia).sum();
    let d: f64 = params.iter().map(|p| p.damping).sum();

    // inverse = (m s + d) + sum_k r_k / (tau_k s + 1) over the common denominator
    let turbines: Vec<Polynomial> = groups.iter().map(|(tau, _)| Polynomial::new(vec![1.0, *tau])).collect();
    let common = turbines.iter().fold(Polynomial::one(), |acc, p| acc.mul(p));
    let mut inverse_num = Polynomial::new(vec![d, m]).mul(&common);
    for (k, (_, r)) in groups.iter().enumerate() {
        let others = turbines
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .fold(Polynomial::one(), |acc, (_, p)| acc.mul(p));
        inverse_num = inverse_num.add(&others.scale(*r));
    }
    let g = RationalTF::new(common, inverse_num)?;
    Ok(AggregateModel::new(g, Provenance::SwingTurbineClosedForm))
}

/// Max of `|y_i(t) - y_ref(t)|` over nodes and `t >= transient_fraction * t_end`.
pub fn aggregation_error(
    net: &NetworkModel,
    input: &Input,
    opts: &SimOptions,
    transient_fraction: f64,
) -> Result<f64> {
    if !net.coupling().approx_eq(&RationalTF::integrator(), 1e-12) {
        return Err(AggregateError::CouplingNotIntegrator);
    }
    let (full, reference) = timedomain::simulate_with_reference(net, input, opts)?;
    let start = transient_fraction * opts.t_end;
    let mut err = 0.0_f64;
    for (k, t) in full.times.iter().enumerate() {
        if *t + 1e-12 < start {
            continue;
        }
        let r = reference.outputs[(0, k)];
        for i in 0..full.outputs.nrows() {
            err = err.max((full.outputs[(i, k)] - r).abs());
        }
    }
    Ok(err)
}

/// Default transient window for [`aggregation_error`].
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::LaplacianMatrix;

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn generic_examples() {
        let g = tf(&[1.0], &[1.0, 1.0]);
        let agg = aggregate_dynamics(&[g.clone(), g.clone()]).unwrap();
        assert!(agg.g_aggr.approx_eq(&g.scale(0.5), 1e-14));
        let agg = aggregate_dynamics(&[tf(&[1.0], &[2.0, 1.0]), tf(&[1.0], &[4.0, 3.0])]).unwrap();
        assert!(agg.g_aggr.approx_eq(&tf(&[1.0], &[6.0, 4.0]), 1e-14));
        assert_eq!(agg.provenance, Provenance::GenericHarmonic);
    }

    #[test]
    fn swing_examples() {
        let params = [SwingParams::new(1.0, 3.0).unwrap(), SwingParams::new(2.0, 4.0).unwrap()];
        let agg = swing_aggregate(&params).unwrap();
        assert!(agg.g_aggr.approx_eq(&tf(&[1.0], &[7.0, 3.0]), 1e-15));
        assert_eq!(agg.order, 1);
        let single = swing_aggregate(&params[..1]).unwrap();
        assert_eq!(single.g_aggr, params[0].transfer_function());
        let with_droop = params[0].with_droop(1.0, 1.0).unwrap();
        assert_eq!(swing_aggregate(&[with_droop]), Err(AggregateError::DroopPresent(0)));
    }

    #[test]
    fn turbine_examples() {
        let a = SwingParams::new(1.0, 1.0).unwrap().with_droop(2.0, 0.5).unwrap();
        let b = SwingParams::new(1.0, 1.0).unwrap().with_droop(3.0, 0.5).unwrap();
        let agg = swing_turbine_aggregate(&[a, b]).unwrap();
        assert_eq!(agg.order, 2);
        let expected = SwingParams::new(2.0, 2.0).unwrap().with_droop(5.0, 0.5).unwrap().transfer_function();
        assert!(agg.g_aggr.approx_eq(&expected, 1e-14));

        let c = SwingParams::new(1.0, 1.0).unwrap().with_droop(3.0, 1.0).unwrap();
        assert_eq!(swing_turbine_aggregate(&[a, c]).unwrap().order, 3);
        assert!(swing_turbine_aggregate(&[a])
            .unwrap()
            .g_aggr
            .approx_eq(&a.transfer_function(), 1e-14));
        let plain = SwingParams::new(1.0, 1.0).unwrap();
        assert_eq!(swing_turbine_aggregate(&[a, plain]), Err(AggregateError::MissingDroop(1)));
    }

    #[test]
    fn serialization_round_trip() {
        let agg = swing_aggregate(&[SwingParams::new(1.0, 2.0).unwrap()]).unwrap();
        let text = agg.to_string();
        assert!(text.ends_with("provenance: swing_closed_form"));
        assert_eq!(text.parse::<AggregateModel>().unwrap(), agg);
    }

    #[test]
    fn single_node_error_vanishes() {
        let g = SwingParams::new(1.0, 1.0).unwrap().transfer_function();
        let net = NetworkModel::new(LaplacianMatrix::empty(1).unwrap(), vec![g], RationalTF::integrator()).unwrap();
        let err = aggregation_error(&net, &Input::step_node(0, 1.0), &SimOptions::new(5.0), 0.1).unwrap();
        assert!(err < 1e-9, "{err}");
    }
}
