//! Random node dynamics and their concentration around the expected dynamics.
//!
//! The expected dynamics of a random family `g(s, w)` is the harmonic
//! expectation `ghat(s) = (E[g^{-1}(s, w)])^{-1}`. For a network whose nodes
//! are independent draws, the coherent dynamics approaches `ghat` as the
//! network grows.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coherence::{CoherenceError, FrequencyGrid, NetworkModel};
use crate::linalg;
use crate::network::{LaplacianMatrix, NetworkError};
use crate::rational::{ExtComplex, Polynomial, RationalError, RationalTF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcentrationError {
    #[error("uniform distribution needs finite lo < hi, got ({lo}, {hi})")]
    InvalidDistribution { lo: f64, hi: f64 },
    #[error("template needs at least one numerator and one denominator slot")]
    EmptyTemplate,
    #[error("no closed form registered for this model")]
    NoClosedForm,
    #[error("sizes must be non-empty, positive and strictly increasing")]
    InvalidSizes,
    #[error("at least one trial and one sample are required")]
    InvalidTrials,
    #[error("expected dynamics undefined at {0}")]
    UndefinedExpectation(Complex64),
    #[error("ring ratio {0} gives no valid degree for n = {1}")]
    InvalidRing(f64, usize),
    #[error("cannot parse random model: {0}")]
    Parse(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
}

pub type Result<T> = std::result::Result<T, ConcentrationError>;

/// Distribution of one coefficient slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl Coefficient {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ConcentrationError::InvalidDistribution { lo, hi });
        }
        Ok(Coefficient::Uniform { lo, hi })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Uniform { lo, hi } => rng.random_range(lo..hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "{c}"),
            Coefficient::Uniform { lo, hi } => write!(f, "U({lo},{hi})"),
        }
    }
}

impl FromStr for Coefficient {
    type Err = ConcentrationError;

    fn from_str(tok: &str) -> Result<Self> {
        if let Some(inner) = tok.strip_prefix("U(").and_then(|t| t.strip_suffix(')')) {
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| ConcentrationError::Parse(format!("bad uniform `{tok}`")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| ConcentrationError::Parse(format!("bad bound `{x}`")))
            };
            return Coefficient::uniform(parse(lo)?, parse(hi)?);
        }
        tok.parse::<f64>()
            .map(Coefficient::Constant)
            .map_err(|_| ConcentrationError::Parse(format!("bad coefficient `{tok}`")))
    }
}

/// A rational template whose coefficients are random.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTFModel {
    num: Vec<Coefficient>,
    den: Vec<Coefficient>,
    seed: u64,
}

impl RandomTFModel {
    pub fn new(num: Vec<Coefficient>, den: Vec<Coefficient>, seed: u64) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(ConcentrationError::EmptyTemplate);
        }
        for c in num.iter().chain(&den) {
            if let Coefficient::Uniform { lo, hi } = *c {
                Coefficient::uniform(lo, hi)?;
            }
        }
        Ok(Self { num, den, seed })
    }

    /// `k / s` with `k ~ U(lo, hi)`.
    pub fn consensus(lo: f64, hi: f64, seed: u64) -> Result<Self> {
        Self::new(
            vec![Coefficient::uniform(lo, hi)?],
            vec![Coefficient::Constant(0.0), Coefficient::Constant(1.0)],
            seed,
        )
    }

    pub fn num(&self) -> &[Coefficient] {
        &self.num
    }

    pub fn den(&self) -> &[Coefficient] {
        &self.den
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Slot names: `b0..bm` for the numerator, `a0..al` for the denominator.
    pub fn slots(&self) -> Vec<(String, Coefficient)> {
        let num = self.num.iter().enumerate().map(|(k, c)| (format!("b{k}"), *c));
        let den = self.den.iter().enumerate().map(|(k, c)| (format!("a{k}"), *c));
        num.chain(den).collect()
    }

    fn draw_coeffs<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let num = self.num.iter().map(|c| c.draw(rng)).collect();
        let den = self.den.iter().map(|c| c.draw(rng)).collect();
        (num, den)
    }

    fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    /// `n` independent draws; draw `i` uses substream `i`, so prefixes agree across `n`.
    pub fn sample_nodes(&self, n: usize, seed: u64) -> Result<Vec<RationalTF>> {
        (0..n as u64)
            .map(|i| {
                let (num, den) = self.draw_coeffs(&mut Self::draw_rng(seed, i));
                Ok(RationalTF::from_coeffs(&num, &den)?)
            })
            .collect()
    }

    /// Draws using the model's own seed.
    pub fn sample(&self, n: usize) -> Result<Vec<RationalTF>> {
        self.sample_nodes(n, self.seed)
    }
}

impl fmt::Display for RandomTFModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |cs: &[Coefficient]| cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "num: {} / den: {}", join(&self.num), join(&self.den))
    }
}

impl FromStr for RandomTFModel {
    type Err = ConcentrationError;

    /// Parses `num: U(1,5) / den: 0 1`; the seed defaults to zero.
    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| ConcentrationError::Parse("missing `/` separator".into()))?;
        let section = |part: &str, label: &str| -> Result<Vec<Coefficient>> {
            let body = part
                .trim()
                .strip_prefix(label)
                .ok_or_else(|| ConcentrationError::Parse(format!("expected `{label}` section")))?;
            let body = body.trim_start();
            let body = body.strip_prefix(':').unwrap_or(body);
            body.split_whitespace().map(str::parse).collect()
        };
        Self::new(section(num, "num")?, section(den, "den")?, 0)
    }
}

/// Sample-mean estimate of `ghat` from a fixed batch of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    num_len: usize,
    den_len: usize,
    num: Vec<f64>,
    den: Vec<f64>,
}

impl MonteCarloEstimate {
    pub fn samples(&self) -> usize {
        self.num.len() / self.num_len
    }

    /// Sample mean of `g^{-1}(s, w)`.
    pub fn mean_inverse(&self, s: Complex64) -> Complex64 {
        let count = self.samples();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..count {
            let num = &self.num[k * self.num_len..(k + 1) * self.num_len];
            let den = &self.den[k * self.den_len..(k + 1) * self.den_len];
            acc += horner(den, s) / horner(num, s);
        }
        acc / count as f64
    }
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectationMethod {
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Point-wise evaluator of the expected dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedDynamics {
    ClosedForm(RationalTF),
    MonteCarlo(MonteCarloEstimate),
}

impl ExpectedDynamics {
    pub fn eval(&self, s: Complex64) -> ExtComplex {
        match self {
            ExpectedDynamics::ClosedForm(g) => g.eval(s).unwrap_or(ExtComplex::AtInfinity),
            ExpectedDynamics::MonteCarlo(mc) => {
                let m = mc.mean_inverse(s);
                if m.norm() == 0.0 || !m.re.is_finite() || !m.im.is_finite() {
                    ExtComplex::AtInfinity
                } else {
                    ExtComplex::Finite(1.0 / m)
                }
            }
        }
    }

    pub fn as_rational(&self) -> Option<&RationalTF> {
        match self {
            ExpectedDynamics::ClosedForm(g) => Some(g),
            ExpectedDynamics::MonteCarlo(_) => None,
        }
    }
}

/// `E[1/k]` for `k ~ U(lo, hi)` not straddling zero.
pub fn uniform_inverse_mean(lo: f64, hi: f64) -> Option<f64> {
    if lo > 0.0 || hi < 0.0 {
        Some((hi.abs().ln() - lo.abs().ln()) / (hi - lo))
    } else {
        None
    }
}

fn closed_form(model: &RandomTFModel) -> Result<RationalTF> {
    let constants = |cs: &[Coefficient]| cs.iter().map(Coefficient::mean).collect::<Vec<f64>>();
    let num_const = model.num.iter().all(Coefficient::is_constant);
    let den_const = model.den.iter().all(Coefficient::is_constant);
    if num_const {
        // g^{-1} = den/num is affine in the random denominator coefficients.
        return Ok(RationalTF::new(
            Polynomial::new(constants(&model.num)),
            Polynomial::new(constants(&model.den)),
        )?);
    }
    let random: Vec<usize> = (0..model.num.len()).filter(|&k| !model.num[k].is_constant()).collect();
    let others_zero = model
        .num
        .iter()
        .enumerate()
        .all(|(k, c)| random.contains(&k) || *c == Coefficient::Constant(0.0));
    if den_const && random.len() == 1 && others_zero {
        let slot = random[0];
        if let Coefficient::Uniform { lo, hi } = model.num[slot] {
            if let Some(m) = uniform_inverse_mean(lo, hi) {
                let mut num = vec![0.0; slot + 1];
                num[slot] = 1.0 / m;
                return Ok(RationalTF::new(Polynomial::new(num), Polynomial::new(constants(&model.den)))?);
            }
        }
    }
    Err(ConcentrationError::NoClosedForm)
}

pub fn expected_dynamics(model: &RandomTFModel, method: ExpectationMethod) -> Result<ExpectedDynamics> {
    match method {
        ExpectationMethod::ClosedForm => closed_form(model).map(ExpectedDynamics::ClosedForm),
        ExpectationMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(ConcentrationError::InvalidTrials);
            }
            let mut est = MonteCarloEstimate {
                num_len: model.num.len(),
                den_len: model.den.len(),
                num: Vec::with_capacity(samples * model.num.len()),
                den: Vec::with_capacity(samples * model.den.len()),
            };
            for i in 0..samples as u64 {
                let (num, den) = model.draw_coeffs(&mut RandomTFModel::draw_rng(seed, i));
                est.num.extend(num);
                est.den.extend(den);
            }
            Ok(ExpectedDynamics::MonteCarlo(est))
        }
    }
}

/// Closed form when registered, otherwise a Monte Carlo batch of 10 000 draws.
pub fn default_expected_dynamics(model: &RandomTFModel) -> Result<ExpectedDynamics> {
    match expected_dynamics(model, ExpectationMethod::ClosedForm) {
        Err(ConcentrationError::NoClosedForm) => expected_dynamics(
            model,
            ExpectationMethod::MonteCarlo {
                samples: 10_000,
                seed: mix(model.seed, 0x6d63),
            },
        ),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    Complete,
    /// Ring with degree parameter `k = round(ratio * n)`.
    Ring { ratio: f64 },
}

impl GraphFamily {
    pub fn build(&self, n: usize) -> Result<LaplacianMatrix> {
        match *self {
            GraphFamily::Complete => Ok(LaplacianMatrix::complete_graph(n, 1.0)?),
            GraphFamily::Ring { ratio } => {
                let k = (ratio * n as f64).round();
                if !(k >= 1.0) {
                    return Err(ConcentrationError::InvalidRing(ratio, n));
                }
                Ok(LaplacianMatrix::k_regular_ring(n, k as usize, 1.0)?)
            }
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of trial `trial` at network size `n`.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    mix(mix(seed, n as u64), trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub lambda2: f64,
    /// Mean over trials of the grid sup of `|gbar_n - ghat|`.
    pub sup_gbar_dev: f64,
    pub sup_incoherence_mean: f64,
    pub sup_incoherence_max: f64,
    pub trials: usize,
    /// Fraction of trials whose grid sup of `||T_n - (1/n) ghat 1 1^T||` reaches `epsilon`.
    pub exceed_frac: f64,
    /// Largest `|g_i^{-1}(s)|` seen over all draws and grid points.
    pub max_inverse: f64,
    /// Analytic bound on `|g^{-1}|` over the grid when the family admits one.
    pub inverse_envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTable {
    pub epsilon: f64,
    pub rows: Vec<ConcentrationRow>,
}

pub const CONCENTRATION_CSV_HEADER: &str =
    "n,lambda2,sup_gbar_dev,sup_incoherence_mean,sup_incoherence_max,trials,exceed_frac";

impl ConcentrationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONCENTRATION_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n, r.lambda2, r.sup_gbar_dev, r.sup_incoherence_mean, r.sup_incoherence_max, r.trials, r.exceed_frac
            ));
        }
        out
    }
}

struct TrialOutcome {
    gbar_dev: f64,
    incoherence: f64,
    max_inverse: f64,
}

fn envelope(model: &RandomTFModel, points: &[Complex64]) -> Option<f64> {
    if !model.den.iter().all(Coefficient::is_constant) {
        return None;
    }
    let random: Vec<usize> = (0..model.num.len()).filter(|&k| !model.num[k].is_constant()).collect();
    let [slot] = random[..] else { return None };
    if model.num.iter().enumerate().any(|(k, c)| k != slot && *c != Coefficient::Constant(0.0)) {
        return None;
    }
    let Coefficient::Uniform { lo, hi } = model.num[slot] else { return None };
    if lo <= 0.0 && hi >= 0.0 {
        return None;
    }
    let min_k = lo.abs().min(hi.abs());
    let den: Vec<f64> = model.den.iter().map(Coefficient::mean).collect();
    points
        .iter()
        .map(|&s| horner(&den, s).norm() / (min_k * s.norm().powi(slot as i32)))
        .reduce(f64::max)
}

/// Monte Carlo study of how tightly sampled networks concentrate around `ghat`.
///
/// The coupling is the identity, so `T_n = (diag(g_i^{-1}) + L_n)^{-1}`.
pub fn concentration_experiment(
    model: &RandomTFModel,
    family: GraphFamily,
    sizes: &[usize],
    grid: &FrequencyGrid,
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ConcentrationTable> {
    let expected = default_expected_dynamics(model)?;
    concentration_experiment_with(model, &expected, family, sizes, grid, trials, epsilon, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn concentration_experiment_with(
    model: &RandomTFModel,
    expected: &ExpectedDynamics,
    family: GraphFamily,
    sizes: &[usize],
    grid: &FrequencyGrid,
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ConcentrationTable> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConcentrationError::InvalidSizes);
    }
    if trials == 0 {
        return Err(ConcentrationError::InvalidTrials);
    }
    let points = grid.points();
    let ghat: Vec<Complex64> = points
        .iter()
        .map(|&s| expected.eval(s).finite().ok_or(ConcentrationError::UndefinedExpectation(s)))
        .collect::<Result<_>>()?;
    let inverse_envelope = envelope(model, &points);
    let coupling = RationalTF::constant(1.0);

    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let laplacian = family.build(n)?;
        let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let nodes = model.sample_nodes(n, trial_seed(seed, n, trial))?;
                let net = NetworkModel::new(laplacian.clone(), nodes, coupling.clone())?;
                let mut out = TrialOutcome {
                    gbar_dev: 0.0,
                    incoherence: 0.0,
                    max_inverse: 0.0,
                };
                for (&s, &gh) in points.iter().zip(&ghat) {
                    for g in net.nodes() {
                        out.max_inverse = out.max_inverse.max(g.eval_inverse(s, 1e-12)?.norm());
                    }
                    let gbar = net
                        .coherent_value(s)?
                        .finite()
                        .ok_or(CoherenceError::PoleOfCoherent(s))?;
                    out.gbar_dev = out.gbar_dev.max((gbar - gh).norm());
                    let t = net.transfer_matrix(s)?.matrix;
                    let diff = t - linalg::ones_outer(n, gh / n as f64);
                    out.incoherence = out.incoherence.max(linalg::spectral_norm(&diff));
                }
                Ok(out)
            })
            .collect();
        let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
        let count = outcomes.len() as f64;
        rows.push(ConcentrationRow {
            n,
            lambda2: laplacian.algebraic_connectivity(),
            sup_gbar_dev: outcomes.iter().map(|o| o.gbar_dev).sum::<f64>() / count,
            sup_incoherence_mean: outcomes.iter().map(|o| o.incoherence).sum::<f64>() / count,
            sup_incoherence_max: outcomes.iter().map(|o| o.incoherence).fold(0.0, f64::max),
            trials,
            exceed_frac: outcomes.iter().filter(|o| o.incoherence >= epsilon).count() as f64 / count,
            max_inverse: outcomes.iter().map(|o| o.max_inverse).fold(0.0, f64::max),
            inverse_envelope,
        });
    }
    Ok(ConcentrationTable { epsilon, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn samples_stay_in_range_and_repeat() {
        let model = RandomTFModel::consensus(1.0, 5.0, 0).unwrap();
        let a = model.sample_nodes(3, 7).unwrap();
        assert_eq!(a, model.sample_nodes(3, 7).unwrap());
        for g in &a {
            let k = g.num().coeffs()[0];
            assert!(k > 1.0 && k < 5.0);
            assert_eq!(g.den().coeffs(), &[0.0, 1.0]);
        }
        let longer = model.sample_nodes(5, 7).unwrap();
        assert_eq!(&longer[..3], &a[..]);
    }

    #[test]
    fn constant_model_gives_copies() {
        let model = RandomTFModel::new(
            vec![Coefficient::Constant(2.0)],
            vec![Coefficient::Constant(1.0), Coefficient::Constant(1.0)],
            3,
        )
        .unwrap();
        let nodes = model.sample(4).unwrap();
        assert!(nodes.windows(2).all(|w| w[0] == w[1]));
        let ghat = expected_dynamics(&model, ExpectationMethod::ClosedForm).unwrap();
        assert_eq!(ghat.as_rational().unwrap(), &nodes[0]);
    }

    #[test]
    fn consensus_closed_form() {
        let model = RandomTFModel::consensus(1.0, 5.0, 0).unwrap();
        let ghat = expected_dynamics(&model, ExpectationMethod::ClosedForm).unwrap();
        let g = ghat.as_rational().unwrap();
        assert_relative_eq!(g.num().coeffs()[0], 4.0 / 5f64.ln(), epsilon = 1e-14);
        assert_eq!(g.den().coeffs(), &[0.0, 1.0]);
    }

    #[test]
    fn random_denominator_closed_form_uses_mean() {
        let model = RandomTFModel::new(
            vec![Coefficient::Constant(1.0)],
            vec![Coefficient::uniform(1.0, 3.0).unwrap(), Coefficient::Constant(1.0)],
            0,
        )
        .unwrap();
        let g = closed_form(&model).unwrap();
        assert!(g.approx_eq(&RationalTF::from_coeffs(&[1.0], &[2.0, 1.0]).unwrap(), 1e-15));
    }

    #[test]
    fn no_closed_form_for_mixed_randomness() {
        let model = RandomTFModel::new(
            vec![Coefficient::uniform(1.0, 2.0).unwrap()],
            vec![Coefficient::uniform(1.0, 3.0).unwrap(), Coefficient::Constant(1.0)],
            0,
        )
        .unwrap();
        assert_eq!(
            expected_dynamics(&model, ExpectationMethod::ClosedForm),
            Err(ConcentrationError::NoClosedForm)
        );
        assert!(matches!(
            default_expected_dynamics(&model).unwrap(),
            ExpectedDynamics::MonteCarlo(_)
        ));
    }

    #[test]
    fn invalid_uniform_rejected() {
        assert!(Coefficient::uniform(2.0, 2.0).is_err());
        assert!("num: U(3,1) / den: 0 1".parse::<RandomTFModel>().is_err());
    }

    #[test]
    fn text_round_trip() {
        let model: RandomTFModel = "num: U(1,5) / den: 0 1".parse().unwrap();
        assert_eq!(model, RandomTFModel::consensus(1.0, 5.0, 0).unwrap());
        assert_eq!(model.to_string(), "num: U(1,5) / den: 0 1");
        assert_eq!(model.slots()[0].0, "b0");
    }

    #[test]
    fn constant_model_has_no_deviation() {
        let model = RandomTFModel::new(
            vec![Coefficient::Constant(1.0)],
            vec![Coefficient::Constant(1.0), Coefficient::Constant(1.0)],
            0,
        )
        .unwrap();
        let grid = FrequencyGrid::linear(0.5, 0.1, 2.0, 4).unwrap();
        let table = concentration_experiment(&model, GraphFamily::Complete, &[4, 8], &grid, 2, 0.1, 1).unwrap();
        for row in &table.rows {
            assert!(row.sup_gbar_dev < 1e-14);
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let model = RandomTFModel::consensus(1.0, 5.0, 0).unwrap();
        let grid = FrequencyGrid::linear(0.5, 0.1, 2.0, 3).unwrap();
        let run = || concentration_experiment(&model, GraphFamily::Complete, &[5], &grid, 1, 0.1, 9).unwrap();
        assert_eq!(run(), run());
        assert!(concentration_experiment(&model, GraphFamily::Complete, &[5, 5], &grid, 1, 0.1, 9).is_err());
    }
}
