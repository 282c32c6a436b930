#![allow(dead_code)]

use coherelab::linalg::CMatrix;
use coherelab::network::LaplacianMatrix;
use coherelab::rational::{Polynomial, RationalTF};
use coherelab::Complex64;
use nalgebra::DMatrix;
use rand::Rng;

/// Monic polynomial with random roots in the open left half-plane.
pub fn stable_poly<R: Rng>(rng: &mut R, degree: usize) -> Polynomial {
    let mut p = Polynomial::one();
    let mut remaining = degree;
    while remaining > 0 {
        if remaining >= 2 && rng.random_bool(0.4) {
            let re = -rng.random_range(0.2..3.0);
            let im = rng.random_range(0.2..3.0);
            p = p.mul(&Polynomial::new(vec![re * re + im * im, -2.0 * re, 1.0]));
            remaining -= 2;
        } else {
            p = p.mul(&Polynomial::linear_factor(-rng.random_range(0.2..4.0)));
            remaining -= 1;
        }
    }
    p
}

/// Random proper transfer function with stable poles and real zeros.
pub fn random_proper_tf<R: Rng>(rng: &mut R) -> RationalTF {
    let den_deg = rng.random_range(1..=3);
    let num_deg = rng.random_range(0..=den_deg);
    let zeros: Vec<f64> = (0..num_deg).map(|_| rng.random_range(-4.0..1.0)).collect();
    let gain = rng.random_range(0.5..3.0);
    RationalTF::new(Polynomial::from_roots(&zeros).scale(gain), stable_poly(rng, den_deg)).unwrap()
}

/// Biproper node with left half-plane zeros and poles.
pub fn random_biproper_tf<R: Rng>(rng: &mut R) -> RationalTF {
    let deg = rng.random_range(1..=2);
    let gain = rng.random_range(0.5..3.0);
    RationalTF::new(stable_poly(rng, deg).scale(gain), stable_poly(rng, deg)).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, w_lo: f64, w_hi: f64) -> LaplacianMatrix {
    let p = rng.random_range(0.2..0.8);
    LaplacianMatrix::random_connected(n, p, w_lo, w_hi, rng).unwrap()
}

pub fn random_coupling<R: Rng>(rng: &mut R) -> RationalTF {
    match rng.random_range(0..3) {
        0 => RationalTF::constant(1.0),
        1 => RationalTF::integrator(),
        _ => RationalTF::from_coeffs(&[2.0, 1.0], &[1.0, 1.0]).unwrap(),
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(I + G f L)^{-1} G` by dense inversion; `None` if some `g_i(s)` is infinite.
pub fn open_loop_form(nodes: &[RationalTF], f: &RationalTF, l: &DMatrix<f64>, s: Complex64) -> Option<CMatrix> {
    let n = nodes.len();
    let gv: Vec<Complex64> = nodes.iter().map(|g| g.eval(s).ok()?.finite()).collect::<Option<_>>()?;
    let fv = f.eval(s).ok()?.finite()?;
    let mut m = CMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += gv[i] * fv * l[(i, j)];
        }
    }
    let inv = m.try_inverse()?;
    let g = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(gv));
    Some(inv * g)
}

/// Homogeneous network: `(1/n) g 1 1^T + sum_{k>=2} v_k v_k^T / (g^{-1} + f lambda_k)`.
pub fn homogeneous_split(g: &RationalTF, f: &RationalTF, l: &LaplacianMatrix, s: Complex64) -> Option<CMatrix> {
    let n = l.n();
    let gv = g.eval(s).ok()?.finite()?;
    let fv = f.eval(s).ok()?.finite()?;
    let mut out = CMatrix::from_element(n, n, gv / n as f64);
    let v = l.eigenvectors();
    for k in 1..n {
        let w = 1.0 / (1.0 / gv + fv * l.eigenvalues()[k]);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * v[(i, k)] * v[(j, k)];
            }
        }
    }
    Some(out)
}

pub fn max_entry_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}
