//! Real-coefficient polynomials and rational transfer functions.
//!
//! A [`RationalTF`] is kept in canonical form: trailing (highest-degree)
//! coefficients below `tol_zero` relative to the largest coefficient are
//! trimmed, and the denominator is scaled to be monic. Two transfer
//! functions describing the same map therefore compare equal coefficient by
//! coefficient once common roots are cancelled with [`RationalTF::simplify`].
//!
//! Roots are computed as companion-matrix eigenvalues followed by a guarded
//! Newton polish against the original polynomial.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Relative threshold under which a coefficient counts as zero.
pub const DEFAULT_TOL_ZERO: f64 = 1e-12;
/// Root distance under which a numerator/denominator pair is cancelled.
pub const DEFAULT_TOL_CANCEL: f64 = 1e-8;
/// Largest polynomial degree accepted by the symbolic operations.
pub const MAX_DEGREE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RationalError {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("cannot invert the zero function")]
    ZeroFunctionInverse,
    #[error("numerator and denominator both vanish at {0}; simplify first")]
    IndeterminateAt(Complex64),
    #[error("sum of inverses is identically zero")]
    DegenerateMean,
    #[error("empty sequence of transfer functions")]
    EmptySequence,
    #[error("polynomial degree {0} exceeds the limit of {MAX_DEGREE}")]
    ExcessiveDegree(usize),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("cannot parse transfer function: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, RationalError>;

/// Polynomial with real coefficients stored in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial and trims negligible leading coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self::with_tolerance(coeffs, DEFAULT_TOL_ZERO)
    }

    pub fn with_tolerance(coeffs: Vec<f64>, tol_zero: f64) -> Self {
        let scale = max_abs(&coeffs);
        Self::trimmed(coeffs, tol_zero * scale)
    }

    /// Trims against an absolute threshold. Used after additions, where the
    /// operands (not the result) define what "negligible" means.
    fn trimmed(mut coeffs: Vec<f64>, threshold: f64) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= threshold) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        if coeffs.len() == 1 && coeffs[0].abs() <= threshold {
            coeffs[0] = 0.0;
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The monic linear factor `s - root`.
    pub fn linear_factor(root: f64) -> Self {
        Self { coeffs: vec![-root, 1.0] }
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::one(), |acc, &r| acc.mul(&Self::linear_factor(r)))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("coefficients are never empty")
    }

    pub fn max_abs_coeff(&self) -> f64 {
        max_abs(&self.coeffs)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `sum |c_k| |s|^k`, the natural scale for judging `|p(s)|` small.
    pub fn abs_scale(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs: Vec<f64> = (0..len)
            .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
            .collect();
        let reference = self.max_abs_coeff().max(other.max_abs_coeff());
        Self::trimmed(coeffs, DEFAULT_TOL_ZERO * reference)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let reference = self.max_abs_coeff() * other.max_abs_coeff();
        Self::trimmed(coeffs, DEFAULT_TOL_ZERO * reference)
    }

    /// Long division; returns `(quotient, remainder)`.
    ///
    /// Panics if `divisor` is the zero polynomial.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (Self::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
        }
        rem.truncate(dd.max(1));
        let reference = self.max_abs_coeff();
        (
            Self::new(quot),
            Self::trimmed(rem, DEFAULT_TOL_ZERO * reference),
        )
    }

    /// All complex roots (with multiplicity), sorted by real then imaginary part.
    /// Multiplicity of the root at `s = 0`.
    pub fn zeros_at_origin(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        let threshold = DEFAULT_TOL_ZERO * self.max_abs_coeff();
        self.coeffs.iter().take_while(|c| c.abs() <= threshold).count()
    }

    fn shifted_down(&self, k: usize) -> Self {
        Polynomial {
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    pub fn roots(&self) -> Vec<Complex64> {
        self.roots_with_tolerance(DEFAULT_TOL_ZERO)
    }

    pub fn roots_with_tolerance(&self, tol_zero: f64) -> Vec<Complex64> {
        let mut roots = Vec::with_capacity(self.degree());
        if self.is_zero() || self.degree() == 0 {
            return roots;
        }
        let threshold = tol_zero * self.max_abs_coeff();
        let zeros_at_origin = self
            .coeffs
            .iter()
            .take_while(|c| c.abs() <= threshold)
            .count();
        roots.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros_at_origin));
        let reduced = &self.coeffs[zeros_at_origin..];
        match reduced.len() {
            0 | 1 => {}
            2 => roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0)),
            3 => roots.extend(quadratic_roots(reduced[2], reduced[1], reduced[0])),
            _ => {
                let reduced_poly = Polynomial {
                    coeffs: reduced.to_vec(),
                };
                roots.extend(
                    companion_roots(reduced)
                        .into_iter()
                        .map(|r| polish_root(&reduced_poly, r)),
                );
            }
        }
        sort_complex(&mut roots);
        roots
    }
}

fn max_abs(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i] / lead;
    }
    balance(&mut companion);
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Parlett–Reinsch diagonal balancing; eigenvalues are unchanged.
pub(crate) fn balance(m: &mut DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut scaling = vec![1.0; n];
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut c = col;
            let mut r = row;
            while c < r / radix {
                c *= radix;
                r /= radix;
                f *= radix;
            }
            while c >= r * radix {
                c /= radix;
                r *= radix;
                f /= radix;
            }
            if (c + r) < 0.95 * total {
                converged = false;
                scaling[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    scaling
}

fn polish_root(p: &Polynomial, root: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut best = root;
    let mut best_res = p.eval(root).norm();
    let mut current = root;
    for _ in 0..4 {
        let slope = dp.eval(current);
        if slope.norm() == 0.0 {
            break;
        }
        current -= p.eval(current) / slope;
        let res = p.eval(current).norm();
        if !res.is_finite() || res >= best_res {
            break;
        }
        best = current;
        best_res = res;
    }
    best
}

pub(crate) fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| match a.re.total_cmp(&b.re) {
        Ordering::Equal => a.im.total_cmp(&b.im),
        other => other,
    });
}

/// A value on the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    AtInfinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::AtInfinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtComplex::AtInfinity)
    }

    /// Modulus, `+inf` at infinity.
    pub fn norm(self) -> f64 {
        self.finite().map_or(f64::INFINITY, |z| z.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Properness {
    StrictlyProper,
    Biproper,
    Improper,
}

/// Rational transfer function `num(s) / den(s)` in canonical (monic-den) form.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        if num.coeffs.iter().chain(&den.coeffs).any(|c| !c.is_finite()) {
            return Err(RationalError::NonFinite);
        }
        check_degree(&num)?;
        check_degree(&den)?;
        Ok(Self::canonical(num, den))
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    fn canonical(num: Polynomial, den: Polynomial) -> Self {
        let lead = den.leading();
        if num.is_zero() {
            return Self {
                num: Polynomial::zero(),
                den: Polynomial::one(),
            };
        }
        if lead == 1.0 {
            return Self { num, den };
        }
        let inv = 1.0 / lead;
        Self {
            num: Polynomial::trimmed(num.coeffs.iter().map(|c| c * inv).collect(), 0.0),
            den: Polynomial::trimmed(den.coeffs.iter().map(|c| c * inv).collect(), 0.0),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::canonical(Polynomial::constant(c), Polynomial::one())
    }

    /// `1/s`.
    pub fn integrator() -> Self {
        Self {
            num: Polynomial::one(),
            den: Polynomial {
                coeffs: vec![0.0, 1.0],
            },
        }
    }

    /// `gain * prod(s - z) / prod(s - p)` for real zeros and poles.
    pub fn from_real_zpk(zeros: &[f64], poles: &[f64], gain: f64) -> Result<Self> {
        Self::new(
            Polynomial::from_roots(zeros).scale(gain),
            Polynomial::from_roots(poles),
        )
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eval(&self, s: Complex64) -> Result<ExtComplex> {
        self.eval_with_tolerance(s, DEFAULT_TOL_ZERO)
    }

    pub fn eval_with_tolerance(&self, s: Complex64, tol_zero: f64) -> Result<ExtComplex> {
        let n = self.num.eval(s);
        let d = self.den.eval(s);
        if d.norm() <= tol_zero * self.den.abs_scale(s) {
            if n.norm() > tol_zero * self.num.abs_scale(s) {
                Ok(ExtComplex::AtInfinity)
            } else {
                Err(RationalError::IndeterminateAt(s))
            }
        } else {
            Ok(ExtComplex::Finite(n / d))
        }
    }

    /// Evaluates the reciprocal `den(s)/num(s)` without building it.
    pub fn eval_inverse(&self, s: Complex64, tol_zero: f64) -> Result<ExtComplex> {
        let n = self.num.eval(s);
        let d = self.den.eval(s);
        if n.norm() <= tol_zero * self.num.abs_scale(s) {
            if d.norm() > tol_zero * self.den.abs_scale(s) {
                Ok(ExtComplex::AtInfinity)
            } else {
                Err(RationalError::IndeterminateAt(s))
            }
        } else {
            Ok(ExtComplex::Finite(d / n))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(self.add_raw(other)?.simplify(DEFAULT_TOL_CANCEL))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(self.mul_raw(other)?.simplify(DEFAULT_TOL_CANCEL))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::canonical(self.num.scale(c), self.den.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(RationalError::ZeroFunctionInverse);
        }
        Ok(Self::canonical(self.den.clone(), self.num.clone()))
    }

    /// Cross-multiplied sum without root cancellation.
    pub(crate) fn add_raw(&self, other: &Self) -> Result<Self> {
        if self.den == other.den {
            return Ok(Self::canonical(self.num.add(&other.num), self.den.clone()));
        }
        let den = self.den.mul(&other.den);
        check_degree(&den)?;
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        check_degree(&num)?;
        Ok(Self::canonical(num, den))
    }

    pub(crate) fn mul_raw(&self, other: &Self) -> Result<Self> {
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        check_degree(&num)?;
        check_degree(&den)?;
        Ok(Self::canonical(num, den))
    }

    /// Cancels numerator/denominator root pairs closer than `tol_cancel`.
    ///
    /// A root of one polynomial counts as shared when the other polynomial
    /// has a root within `tol_cancel` of it, estimated from its Taylor
    /// coefficients there. Clusters of `k` roots are accepted at the
    /// `eps^(1/k)` resolution the eigenvalue solver achieves for a `k`-fold
    /// root.
    pub fn simplify(&self, tol_cancel: f64) -> Self {
        let shift = self.num.zeros_at_origin().min(self.den.zeros_at_origin());
        let mut num = self.num.shifted_down(shift);
        let mut den = self.den.shifted_down(shift);
        while !num.is_zero() && num.degree() > 0 && den.degree() > 0 {
            let num_roots = num.roots();
            let den_roots = den.roots();
            let Some(root) = common_root(&num, &den, &num_roots, &den_roots, tol_cancel) else {
                break;
            };
            let factor = if root.im.abs() <= tol_cancel * root.norm().max(1.0) {
                Polynomial::linear_factor(root.re)
            } else {
                Polynomial {
                    coeffs: vec![root.norm_sqr(), -2.0 * root.re, 1.0],
                }
            };
            num = num.div_rem(&factor).0;
            den = den.div_rem(&factor).0;
        }
        Self::canonical(num, den)
    }

    /// Poles (roots of the denominator), sorted.
    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    /// Finite zeros (roots of the numerator), sorted.
    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    pub fn properness(&self) -> Properness {
        let (dn, dd) = (self.num.degree(), self.den.degree());
        match dn.cmp(&dd) {
            Ordering::Less => Properness::StrictlyProper,
            _ if self.num.is_zero() => Properness::StrictlyProper,
            Ordering::Equal => Properness::Biproper,
            Ordering::Greater => Properness::Improper,
        }
    }

    pub fn is_proper(&self) -> bool {
        self.properness() != Properness::Improper
    }

    /// Value at `s -> infinity` for proper functions.
    pub fn high_frequency_gain(&self) -> Option<f64> {
        match self.properness() {
            Properness::StrictlyProper => Some(0.0),
            Properness::Biproper => Some(self.num.leading() / self.den.leading()),
            Properness::Improper => None,
        }
    }

    /// Coefficient-wise comparison relative to the largest coefficient.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        fn close(a: &Polynomial, b: &Polynomial, tol: f64) -> bool {
            let scale = a.max_abs_coeff().max(b.max_abs_coeff()).max(1.0);
            let len = a.coeffs.len().max(b.coeffs.len());
            (0..len).all(|k| {
                let x = a.coeffs.get(k).copied().unwrap_or(0.0);
                let y = b.coeffs.get(k).copied().unwrap_or(0.0);
                (x - y).abs() <= tol * scale
            })
        }
        close(&self.num, &other.num, tol) && close(&self.den, &other.den, tol)
    }
}

fn check_degree(p: &Polynomial) -> Result<()> {
    if p.degree() > MAX_DEGREE {
        Err(RationalError::ExcessiveDegree(p.degree()))
    } else {
        Ok(())
    }
}

/// Largest cluster size probed by [`vanishes_near`].
const MAX_CLUSTER: usize = 3;

/// Taylor coefficients `p^(k)(s) / k!` for `k = 0..=max_order`.
fn taylor_at(p: &Polynomial, s: Complex64, max_order: usize) -> Vec<Complex64> {
    let mut work: Vec<Complex64> = p.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut out = Vec::with_capacity(max_order + 1);
    for _ in 0..=max_order.min(p.degree()) {
        for k in (0..work.len() - 1).rev() {
            let carry = work[k + 1] * s;
            work[k] += carry;
        }
        out.push(work.remove(0));
        if work.is_empty() {
            break;
        }
    }
    out
}

/// Whether `p` has a root (or a cluster of up to [`MAX_CLUSTER`] roots) near `s`.
///
/// `(|c_0| / |c_k|)^(1/k)` bounds the distance to the nearest root from
/// below by `d / C(n, k)^(1/k)`, so a small estimate always means a nearby root.
fn vanishes_near(p: &Polynomial, s: Complex64, tol: f64) -> bool {
    let taylor = taylor_at(p, s, MAX_CLUSTER);
    let value = taylor[0].norm();
    if value == 0.0 {
        return true;
    }
    let scale = s.norm().max(1.0);
    taylor.iter().enumerate().skip(1).any(|(k, c)| {
        let slope = c.norm();
        if slope == 0.0 {
            return false;
        }
        let resolution = if k == 1 { tol } else { tol.max(4.0 * f64::EPSILON.powf(1.0 / k as f64)) };
        (value / slope).powf(1.0 / k as f64) <= resolution * scale
    })
}

fn common_root(
    num: &Polynomial,
    den: &Polynomial,
    num_roots: &[Complex64],
    den_roots: &[Complex64],
    tol: f64,
) -> Option<Complex64> {
    for &d in den_roots {
        if vanishes_near(num, d, tol) {
            return Some(polish_root(num, d));
        }
    }
    for &z in num_roots {
        if vanishes_near(den, z, tol) {
            return Some(polish_root(den, z));
        }
    }
    let mut best: Option<(f64, Complex64)> = None;
    for &z in num_roots {
        for &d in den_roots {
            let dist = (z - d).norm() / d.norm().max(1.0);
            if dist <= tol && best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, (z + d) * 0.5));
            }
        }
    }
    best.map(|(_, r)| r)
}

/// `((1/n) sum g_i^{-1})^{-1}`, built over a common denominator and simplified once.
pub fn harmonic_mean(gs: &[RationalTF]) -> Result<RationalTF> {
    let sum = inverse_sum(gs)?;
    let n = gs.len() as f64;
    Ok(RationalTF::canonical(sum.den.scale(n), sum.num).simplify(DEFAULT_TOL_CANCEL))
}

/// `sum g_i^{-1}` without cancellation; errors when it is identically zero.
pub(crate) fn inverse_sum(gs: &[RationalTF]) -> Result<RationalTF> {
    if gs.is_empty() {
        return Err(RationalError::EmptySequence);
    }
    let mut distinct: Vec<(&RationalTF, usize)> = Vec::new();
    for g in gs {
        match distinct.iter_mut().find(|(h, _)| *h == g) {
            Some((_, count)) => *count += 1,
            None => distinct.push((g, 1)),
        }
    }
    let mut acc: Option<RationalTF> = None;
    for (g, count) in distinct {
        let term = g.inv()?.scale(count as f64);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add_raw(&term)?,
        });
    }
    let acc = acc.expect("non-empty sequence");
    if acc.num.is_zero() {
        return Err(RationalError::DegenerateMean);
    }
    Ok(acc)
}

/// `(sum g_i^{-1})^{-1}`.
pub fn parallel_sum(gs: &[RationalTF]) -> Result<RationalTF> {
    let sum = inverse_sum(gs)?;
    Ok(RationalTF::canonical(sum.den, sum.num).simplify(DEFAULT_TOL_CANCEL))
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "num: {} / den: {}", self.num, self.den)
    }
}

fn parse_coeffs(part: &str, label: &str) -> Result<Vec<f64>> {
    let body = part.trim();
    let body = body
        .strip_prefix(label)
        .ok_or_else(|| RationalError::Parse(format!("expected `{label}` section")))?;
    let body = body.trim_start().strip_prefix(':').unwrap_or(body);
    let coeffs = body
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| RationalError::Parse(format!("bad coefficient `{tok}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if coeffs.is_empty() {
        return Err(RationalError::Parse(format!("`{label}` has no coefficients")));
    }
    Ok(coeffs)
}

impl FromStr for RationalTF {
    type Err = RationalError;

    /// Parses `num: c0 c1 ... / den: d0 d1 ...` (colons optional).
    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| RationalError::Parse("missing `/` separator".into()))?;
        let num = parse_coeffs(num, "num")?;
        let den = parse_coeffs(den, "den")?;
        RationalTF::from_coeffs(&num, &den)
    }
}
