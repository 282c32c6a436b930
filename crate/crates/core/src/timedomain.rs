//! State-space realizations and fixed-step simulation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::coherence::NetworkModel;
use crate::linalg::{self, CMatrix};
use crate::network::inf_norm;
use crate::rational::{balance, RationalTF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeDomainError {
    #[error("transfer function is improper")]
    ImproperTF,
    #[error("interconnection has a singular algebraic loop")]
    AlgebraicLoop,
    #[error("step {dt} too large: ||A|| dt = {product} exceeds {limit}")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },
    #[error("time step and horizon must be positive and finite")]
    InvalidStep,
    #[error("input targets node {node} of a {channels}-channel system")]
    InvalidInput { node: usize, channels: usize },
    #[error("state-space dimensions are inconsistent")]
    DimensionMismatch,
    #[error("coherent dynamics unavailable for this network")]
    CoherentUnavailable,
    #[error("(sI - A) is singular at {0}")]
    SingularResolvent(Complex64),
}

pub type Result<T> = std::result::Result<T, TimeDomainError>;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(TimeDomainError::DimensionMismatch);
        }
        Ok(Self { a, b, c, d })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `C (sI - A)^{-1} B + D`.
    pub fn frequency_response(&self, s: Complex64) -> Result<CMatrix> {
        let d = linalg::complexify(&self.d);
        if self.states() == 0 {
            return Ok(d);
        }
        let mut resolvent = linalg::complexify(&self.a) * Complex64::new(-1.0, 0.0);
        for i in 0..self.states() {
            resolvent[(i, i)] += s;
        }
        let x = resolvent
            .lu()
            .solve(&linalg::complexify(&self.b))
            .ok_or(TimeDomainError::SingularResolvent(s))?;
        Ok(linalg::complexify(&self.c) * x + d)
    }
}

/// Controllable canonical realization of a proper transfer function.
pub fn realize(g: &RationalTF) -> Result<StateSpace> {
    if !g.is_proper() {
        return Err(TimeDomainError::ImproperTF);
    }
    let den = g.den().coeffs();
    let order = den.len() - 1;
    let lead = den[order];
    let a_coef: Vec<f64> = den.iter().map(|x| x / lead).collect();
    let mut num: Vec<f64> = g.num().coeffs().iter().map(|x| x / lead).collect();
    num.resize(order + 1, 0.0);
    let d = num[order];
    let c_coef: Vec<f64> = (0..order).map(|k| num[k] - d * a_coef[k]).collect();

    let mut a = DMatrix::zeros(order, order);
    for i in 0..order.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    if order > 0 {
        for k in 0..order {
            a[(order - 1, k)] = -a_coef[k];
        }
    }
    let mut b = DMatrix::zeros(order, 1);
    if order > 0 {
        b[(order - 1, 0)] = 1.0;
    }
    let c = DMatrix::from_row_slice(1, order, &c_coef);
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|m| m.nrows()).sum();
    let cols = blocks.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for m in blocks {
        out.view_mut((r, c), m.shape()).copy_from(m);
        r += m.nrows();
        c += m.ncols();
    }
    out
}

/// Realization of `y = G (u - f L y)` with `u` and `y` indexed by node.
///
/// States are ordered node blocks first, then one copy of the coupling
/// realization per node.
pub fn closed_loop(net: &NetworkModel) -> Result<StateSpace> {
    let n = net.n();
    let nodes: Vec<StateSpace> = net.nodes().iter().map(realize).collect::<Result<_>>()?;
    let f = realize(net.coupling())?;
    let l = net.laplacian().matrix();

    let a_nodes: Vec<&DMatrix<f64>> = nodes.iter().map(|s| &s.a).collect();
    let b_nodes: Vec<&DMatrix<f64>> = nodes.iter().map(|s| &s.b).collect();
    let c_nodes: Vec<&DMatrix<f64>> = nodes.iter().map(|s| &s.c).collect();
    let ag = block_diag(&a_nodes);
    let bg = block_diag(&b_nodes);
    let cg = block_diag(&c_nodes);
    let dg = DMatrix::from_diagonal(&DVector::from_iterator(n, nodes.iter().map(|s| s.d[(0, 0)])));

    let af = block_diag(&vec![&f.a; n]);
    let bf = block_diag(&vec![&f.b; n]);
    let cf = block_diag(&vec![&f.c; n]);
    let df = f.d[(0, 0)];

    let ng = ag.nrows();
    let nf = af.nrows();

    let loop_matrix = DMatrix::identity(n, n) + &dg * l * df;
    let m_inv = if df == 0.0 || dg.iter().all(|x| *x == 0.0) {
        DMatrix::identity(n, n)
    } else {
        loop_matrix.try_inverse().ok_or(TimeDomainError::AlgebraicLoop)?
    };

    let mut c_open = DMatrix::zeros(n, ng + nf);
    c_open.view_mut((0, 0), (n, ng)).copy_from(&cg);
    c_open.view_mut((0, ng), (n, nf)).copy_from(&(-(&dg * &cf)));
    let cc = &m_inv * c_open;
    let dc = &m_inv * &dg;

    let mut wx = DMatrix::zeros(n, ng + nf);
    wx.view_mut((0, ng), (n, nf)).copy_from(&cf);
    wx += l * &cc * df;
    let wu = l * &dc * df;

    let mut a = block_diag(&[&ag, &af]);
    {
        let top = -(&bg * &wx);
        let mut view = a.view_mut((0, 0), (ng, ng + nf));
        view += top;
    }
    {
        let bottom = &bf * l * &cc;
        let mut view = a.view_mut((ng, 0), (nf, ng + nf));
        view += bottom;
    }
    let mut b = DMatrix::zeros(ng + nf, n);
    b.view_mut((0, 0), (ng, n)).copy_from(&(&bg - &bg * &wu));
    b.view_mut((ng, 0), (nf, n)).copy_from(&(&bf * l * &dc));
    StateSpace::new(a, b, cc, dc)
}

/// Excitation applied to every input channel of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Input {
    /// `magnitude * delta(t)` on every channel, applied as the initial state `B 1 magnitude`.
    ImpulseAll { magnitude: f64 },
    StepNode { node: usize, magnitude: f64 },
    SinusoidAll { omega: f64, amplitude: f64 },
}

impl Input {
    pub fn impulse_all() -> Self {
        Input::ImpulseAll { magnitude: 1.0 }
    }

    pub fn step_node(node: usize, magnitude: f64) -> Self {
        Input::StepNode { node, magnitude }
    }

    pub fn sinusoid_all(omega: f64, amplitude: f64) -> Self {
        Input::SinusoidAll { omega, amplitude }
    }

    fn initial_weights(&self, channels: usize) -> Option<DVector<f64>> {
        match *self {
            Input::ImpulseAll { magnitude } => Some(DVector::from_element(channels, magnitude)),
            _ => None,
        }
    }

    fn fill(&self, t: f64, u: &mut DVector<f64>) {
        match *self {
            Input::ImpulseAll { .. } => u.fill(0.0),
            Input::StepNode { node, magnitude } => {
                u.fill(0.0);
                u[node] = magnitude;
            }
            Input::SinusoidAll { omega, amplitude } => u.fill(amplitude * (omega * t).sin()),
        }
    }

    /// The scalar `1^T u(t)` seen by an aggregate of `n` channels.
    fn summed(&self, n: usize) -> Input {
        let n = n as f64;
        match *self {
            Input::ImpulseAll { magnitude } => Input::ImpulseAll { magnitude: n * magnitude },
            Input::StepNode { magnitude, .. } => Input::StepNode { node: 0, magnitude },
            Input::SinusoidAll { omega, amplitude } => Input::SinusoidAll {
                omega,
                amplitude: n * amplitude,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    /// `None` selects `min(0.01, 0.5 / ||A||_inf)`.
    pub dt: Option<f64>,
    /// Keep every `stride`-th sample.
    pub stride: usize,
    /// Largest accepted `||A||_inf dt`.
    pub stability_limit: f64,
}

impl SimOptions {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            dt: None,
            stride: 1,
            stability_limit: 2.5,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per output, one column per sample.
    pub outputs: DMatrix<f64>,
    pub dt: f64,
    pub input: Input,
}

impl Trajectory {
    pub fn final_outputs(&self) -> DVector<f64> {
        self.outputs.column(self.outputs.ncols() - 1).into_owned()
    }

    /// `t,y_0,...` with an optional trailing `y_ref` column sampled on the same times.
    pub fn to_csv(&self, reference: Option<&Trajectory>) -> String {
        let mut out = String::from("t");
        for i in 0..self.outputs.nrows() {
            out.push_str(&format!(",y_{i}"));
        }
        if reference.is_some() {
            out.push_str(",y_ref");
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for i in 0..self.outputs.nrows() {
                out.push_str(&format!(",{}", self.outputs[(i, k)]));
            }
            if let Some(r) = reference {
                out.push_str(&format!(",{}", r.outputs[(0, k)]));
            }
            out.push('\n');
        }
        out
    }
}

struct Balanced {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    scaling: Vec<f64>,
}

fn balanced(ss: &StateSpace) -> Balanced {
    let mut a = ss.a.clone();
    let scaling = balance(&mut a);
    let mut b = ss.b.clone();
    let mut c = ss.c.clone();
    for (i, s) in scaling.iter().enumerate() {
        b.row_mut(i).unscale_mut(*s);
        c.column_mut(i).scale_mut(*s);
    }
    Balanced { a, b, c, scaling }
}

/// Resolved step and step count for a system and options.
pub fn resolve_step(ss: &StateSpace, opts: &SimOptions) -> Result<(f64, usize)> {
    let bal = balanced(ss);
    resolve_balanced(&bal.a, opts)
}

fn resolve_balanced(a: &DMatrix<f64>, opts: &SimOptions) -> Result<(f64, usize)> {
    let norm = inf_norm(a);
    let requested = opts
        .dt
        .unwrap_or_else(|| if norm > 0.0 { (0.5 / norm).min(0.01) } else { 0.01 });
    if !(requested > 0.0) || !requested.is_finite() || !(opts.t_end > 0.0) || !opts.t_end.is_finite() {
        return Err(TimeDomainError::InvalidStep);
    }
    let steps = ((opts.t_end / requested) - 1e-9).ceil().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let product = norm * dt;
    if product > opts.stability_limit {
        return Err(TimeDomainError::StepTooLarge {
            dt,
            product,
            limit: opts.stability_limit,
        });
    }
    Ok((dt, steps))
}

/// Fixed-step RK4 integration of `x' = A x + B u(t)`, `y = C x + D u(t)`.
pub fn simulate(ss: &StateSpace, input: &Input, opts: &SimOptions) -> Result<Trajectory> {
    if let Input::StepNode { node, .. } = *input {
        if node >= ss.inputs() {
            return Err(TimeDomainError::InvalidInput {
                node,
                channels: ss.inputs(),
            });
        }
    }
    let bal = balanced(ss);
    let (dt, steps) = resolve_balanced(&bal.a, opts)?;
    let stride = opts.stride.max(1);
    let nx = ss.states();
    let ny = ss.outputs();

    let mut x = DVector::zeros(nx);
    if let Some(w) = input.initial_weights(ss.inputs()) {
        // x(0) = S^{-1} B w in balanced coordinates
        let x0 = &ss.b * w;
        for i in 0..nx {
            x[i] = x0[i] / bal.scaling[i];
        }
    }

    let samples = steps / stride + 1;
    let mut times = Vec::with_capacity(samples);
    let mut outputs = DMatrix::zeros(ny, samples);
    let mut u = DVector::zeros(ss.inputs());
    let mut y = DVector::zeros(ny);
    let mut record = |k: usize, t: f64, x: &DVector<f64>, u: &mut DVector<f64>, col: usize| {
        input.fill(t, u);
        y.gemv(1.0, &bal.c, x, 0.0);
        if k > 0 || !matches!(input, Input::ImpulseAll { .. }) {
            y.gemv(1.0, &ss.d, u, 1.0);
        }
        outputs.set_column(col, &y);
    };

    let mut k1 = DVector::zeros(nx);
    let mut k2 = DVector::zeros(nx);
    let mut k3 = DVector::zeros(nx);
    let mut k4 = DVector::zeros(nx);
    let mut tmp = DVector::zeros(nx);
    let deriv = |t: f64, state: &DVector<f64>, out: &mut DVector<f64>, u: &mut DVector<f64>| {
        input.fill(t, u);
        out.gemv(1.0, &bal.a, state, 0.0);
        out.gemv(1.0, &bal.b, u, 1.0);
    };

    record(0, 0.0, &x, &mut u, 0);
    times.push(0.0);
    for step in 0..steps {
        let t = step as f64 * dt;
        deriv(t, &x, &mut k1, &mut u);
        tmp.copy_from(&x);
        tmp.axpy(0.5 * dt, &k1, 1.0);
        deriv(t + 0.5 * dt, &tmp, &mut k2, &mut u);
        tmp.copy_from(&x);
        tmp.axpy(0.5 * dt, &k2, 1.0);
        deriv(t + 0.5 * dt, &tmp, &mut k3, &mut u);
        tmp.copy_from(&x);
        tmp.axpy(dt, &k3, 1.0);
        deriv(t + dt, &tmp, &mut k4, &mut u);
        x.axpy(dt / 6.0, &k1, 1.0);
        x.axpy(dt / 3.0, &k2, 1.0);
        x.axpy(dt / 3.0, &k3, 1.0);
        x.axpy(dt / 6.0, &k4, 1.0);
        let k = step + 1;
        if k % stride == 0 {
            let t_next = k as f64 * dt;
            record(k, t_next, &x, &mut u, times.len());
            times.push(t_next);
        }
    }
    let used = times.len();
    let outputs = outputs.columns(0, used).into_owned();
    Ok(Trajectory {
        times,
        outputs,
        dt,
        input: *input,
    })
}

/// Response of `(1/n) h(s)` driven by `1^T u(t)`.
pub fn reference_response(h: &RationalTF, n: usize, input: &Input, opts: &SimOptions) -> Result<Trajectory> {
    let aggregate = h.scale(1.0 / n as f64);
    let ss = realize(&aggregate)?;
    let mut traj = simulate(&ss, &input.summed(n), opts)?;
    traj.input = *input;
    Ok(traj)
}

/// Reference trajectory of the coherent dynamics of `net`.
pub fn coherent_reference(net: &NetworkModel, input: &Input, opts: &SimOptions) -> Result<Trajectory> {
    let gbar = net.coherent().ok_or(TimeDomainError::CoherentUnavailable)?;
    reference_response(gbar, net.n(), input, opts)
}

/// Simulates the closed loop and the coherent reference on a shared time grid.
pub fn simulate_with_reference(
    net: &NetworkModel,
    input: &Input,
    opts: &SimOptions,
) -> Result<(Trajectory, Trajectory)> {
    let ss = closed_loop(net)?;
    let (dt, _) = resolve_step(&ss, opts)?;
    let shared = SimOptions { dt: Some(dt), ..*opts };
    let full = simulate(&ss, input, &shared)?;
    let reference = coherent_reference(net, input, &shared)?;
    Ok((full, reference))
}
