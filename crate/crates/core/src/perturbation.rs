//! The localized perturbation: a sum of multiplicative, first/second
//! derivative, rank-one integral and Volterra integral terms supported in the
//! interval `Q`, together with its Nyström matrices on a grid.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Interval};
use crate::linalg::CMatrix;
use crate::probe::{ConstOne, Probe};

type C = Complex<f64>;

const ZERO: C = Complex::new(0.0, 0.0);
const ONE: C = Complex::new(1.0, 0.0);

/// Whether a coefficient function is known to be real-valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    Real,
    Unknown,
}

/// A complex-valued coefficient function supported in `Q`. The evaluator must
/// be meaningful on all of `Q`; callers sample it only there (the oracle also
/// masks it by the characteristic function of `Q`).
#[derive(Clone)]
pub struct Coefficient {
    f: Arc<dyn Fn(f64) -> C + Send + Sync>,
    kind: CoeffKind,
}

impl Coefficient {
    pub fn from_fn(f: impl Fn(f64) -> C + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            kind: CoeffKind::Unknown,
        }
    }

    /// A coefficient certified real-valued by construction.
    pub fn from_real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(move |x| Complex::new(f(x), 0.0)),
            kind: CoeffKind::Real,
        }
    }

    pub fn constant(v: C) -> Self {
        Self {
            f: Arc::new(move |_| v),
            kind: if v.im == 0.0 {
                CoeffKind::Real
            } else {
                CoeffKind::Unknown
            },
        }
    }

    /// Overrides the realness tag (used by expression-compiled coefficients
    /// whose realness is decided structurally).
    pub fn with_kind(mut self, kind: CoeffKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn eval(&self, x: f64) -> C {
        (self.f)(x)
    }

    fn sample(&self, grid: &Grid) -> Result<Vec<C>> {
        let mut out = Vec::with_capacity(grid.len());
        for &x in grid.nodes() {
            let v = self.eval(x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteSample { x });
            }
            out.push(v);
        }
        Ok(out)
    }
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coefficient")
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

/// One localized term of the perturbation.
#[derive(Debug, Clone)]
pub enum PerturbationTerm {
    /// Multiplication by V: `u -> V u`.
    Multiply(Coefficient),
    /// First-derivative coefficient: `u -> a1 u'`.
    D1(Coefficient),
    /// Second-derivative coefficient: `u -> a2 u''`.
    D2(Coefficient),
    /// Rank-one integral term: `u -> chi_Q <rho u>`.
    RankOne(Coefficient),
    /// Causal integral term: `u -> chi_Q int_a^x rho u dt`.
    Volterra(Coefficient),
}

/// Realness classification in the quadratic-form sense. Only structurally
/// sufficient cases are certified; everything else stays `Unknown` (the
/// definition quantifies over all test functions and is not checkable).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realness {
    CertifiedReal,
    Unknown,
}

/// Sum of localized terms supported in `Q`, with an optional unimodular
/// phase factor in front.
#[derive(Debug, Clone)]
pub struct PerturbationOp {
    interval: Interval,
    terms: Vec<PerturbationTerm>,
    phase: C,
}

impl PerturbationOp {
    pub fn new(interval: Interval, terms: Vec<PerturbationTerm>) -> Result<Self> {
        Self::with_phase(interval, terms, ONE)
    }

    pub fn with_phase(interval: Interval, terms: Vec<PerturbationTerm>, phase: C) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyPerturbation);
        }
        let modulus = phase.norm();
        if (modulus - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitPhase { modulus });
        }
        Ok(Self {
            interval,
            terms,
            phase,
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn terms(&self) -> &[PerturbationTerm] {
        &self.terms
    }

    pub fn phase(&self) -> C {
        self.phase
    }

    /// Structural realness check: certified only when every term is
    /// multiplicative with a real coefficient and the phase is exactly one.
    pub fn realness(&self) -> Realness {
        if self.phase != ONE {
            return Realness::Unknown;
        }
        for term in &self.terms {
            match term {
                PerturbationTerm::Multiply(c) if c.kind() == CoeffKind::Real => {}
                _ => return Realness::Unknown,
            }
        }
        Realness::CertifiedReal
    }

    /// Applies the operator to a probe, sampling the output on the grid.
    pub fn apply(&self, probe: &dyn Probe, grid: &Arc<Grid>) -> Result<GridFunction> {
        let n = grid.len();
        let mut out = vec![ZERO; n];
        let u: Vec<C> = grid.nodes().iter().map(|&x| probe.value(x)).collect();
        for (&x, v) in grid.nodes().iter().zip(&u) {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteSample { x });
            }
        }
        for term in &self.terms {
            match term {
                PerturbationTerm::Multiply(c) => {
                    let cs = c.sample(grid)?;
                    for i in 0..n {
                        out[i] += cs[i] * u[i];
                    }
                }
                PerturbationTerm::D1(c) => {
                    let cs = c.sample(grid)?;
                    for (i, &x) in grid.nodes().iter().enumerate() {
                        out[i] += cs[i] * probe.d1(x);
                    }
                }
                PerturbationTerm::D2(c) => {
                    let cs = c.sample(grid)?;
                    for (i, &x) in grid.nodes().iter().enumerate() {
                        out[i] += cs[i] * probe.d2(x);
                    }
                }
                PerturbationTerm::RankOne(c) => {
                    let cs = c.sample(grid)?;
                    let mut pairing = ZERO;
                    for i in 0..n {
                        pairing += grid.weights()[i] * cs[i] * u[i];
                    }
                    for o in out.iter_mut() {
                        *o += pairing;
                    }
                }
                PerturbationTerm::Volterra(c) => {
                    let cs = c.sample(grid)?;
                    let cum = grid.cumulative_weights();
                    for i in 0..n {
                        let mut acc = ZERO;
                        for j in 0..=i {
                            acc += cum[i * n + j] * cs[j] * u[j];
                        }
                        out[i] += acc;
                    }
                }
            }
        }
        for o in out.iter_mut() {
            *o *= self.phase;
        }
        GridFunction::new(Arc::clone(grid), out)
    }

    /// The operator applied to the constant-one probe; identically zero for
    /// purely differential operators.
    pub fn l_of_one(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        self.apply(&ConstOne, grid)
    }

    /// Pointwise evaluation of the operator output at an arbitrary x, for
    /// probes evaluable off the grid. Multiplicative and derivative terms are
    /// local; the integral terms quadrate the probe over `Q` (rank-one) or
    /// over [a, x] with an ad-hoc composite Simpson rule (Volterra).
    pub fn apply_at(&self, probe: &dyn Probe, grid: &Arc<Grid>, x: f64) -> Result<C> {
        if !self.interval.contains(x) {
            return Ok(ZERO);
        }
        let mut out = ZERO;
        for term in &self.terms {
            match term {
                PerturbationTerm::Multiply(c) => out += c.eval(x) * probe.value(x),
                PerturbationTerm::D1(c) => out += c.eval(x) * probe.d1(x),
                PerturbationTerm::D2(c) => out += c.eval(x) * probe.d2(x),
                PerturbationTerm::RankOne(c) => {
                    let cs = c.sample(grid)?;
                    let mut pairing = ZERO;
                    for (i, &t) in grid.nodes().iter().enumerate() {
                        pairing += grid.weights()[i] * cs[i] * probe.value(t);
                    }
                    out += pairing;
                }
                PerturbationTerm::Volterra(c) => {
                    let a = self.interval.left();
                    if x > a {
                        let panels = (grid.panel_count().max(2) as f64 * (x - a)
                            / self.interval.length())
                        .ceil() as usize;
                        let panels = panels.max(2);
                        let h = (x - a) / panels as f64;
                        let f = |t: f64| c.eval(t) * probe.value(t);
                        let mut acc = ZERO;
                        for p in 0..panels {
                            let t0 = a + p as f64 * h;
                            acc += h / 6.0 * (f(t0) + 4.0 * f(t0 + 0.5 * h) + f(t0 + h));
                        }
                        out += acc;
                    }
                }
            }
        }
        Ok(out * self.phase)
    }

    /// Assembles the matrices acting on node samples of (u, u', u'').
    pub fn assemble(&self, grid: &Arc<Grid>) -> Result<OpMatrices> {
        let n = grid.len();
        let mut m0 = MatRepr::Zero;
        let mut m1 = MatRepr::Zero;
        let mut m2 = MatRepr::Zero;
        for term in &self.terms {
            match term {
                PerturbationTerm::Multiply(c) => m0.add_diagonal(c.sample(grid)?),
                PerturbationTerm::D1(c) => m1.add_diagonal(c.sample(grid)?),
                PerturbationTerm::D2(c) => m2.add_diagonal(c.sample(grid)?),
                PerturbationTerm::RankOne(c) => {
                    let cs = c.sample(grid)?;
                    let row: Vec<C> = grid
                        .weights()
                        .iter()
                        .zip(&cs)
                        .map(|(&w, &r)| w * r)
                        .collect();
                    m0.add_dense(CMatrix::from_fn(n, n, |_i, j| row[j]));
                }
                PerturbationTerm::Volterra(c) => {
                    let cs = c.sample(grid)?;
                    let cum = grid.cumulative_weights();
                    m0.add_dense(CMatrix::from_fn(n, n, |i, j| cum[i * n + j] * cs[j]));
                }
            }
        }
        if self.phase != ONE {
            m0.scale(self.phase);
            m1.scale(self.phase);
            m2.scale(self.phase);
        }
        Ok(OpMatrices {
            grid: Arc::clone(grid),
            m0,
            m1,
            m2,
        })
    }

    /// Computable stand-in for the boundedness constant of the operator:
    /// weighted row-sum/column-sum spectral bounds of the three matrices,
    /// summed. An upper-bound proxy, not the sharp constant.
    pub fn norm_proxy(&self, grid: &Arc<Grid>) -> Result<f64> {
        let mats = self.assemble(grid)?;
        let w = grid.weights();
        let weighted_bound = |m: &MatRepr| -> f64 {
            match m {
                MatRepr::Zero => 0.0,
                MatRepr::Diagonal(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
                MatRepr::Dense(a) => {
                    let n = a.rows();
                    // similarity W^{1/2} A W^{-1/2} keeps the spectrum of the
                    // weighted operator
                    let s =
                        CMatrix::from_fn(n, n, |i, j| a[(i, j)] * (w[i].sqrt() / w[j].sqrt()));
                    (s.norm_one() * s.norm_inf()).sqrt()
                }
            }
        };
        Ok(weighted_bound(&mats.m0) + weighted_bound(&mats.m1) + weighted_bound(&mats.m2))
    }
}

/// Matrix representation of one coefficient slot: most terms are diagonal,
/// the integral terms dense.
#[derive(Debug, Clone)]
pub enum MatRepr {
    Zero,
    Diagonal(Vec<C>),
    Dense(CMatrix),
}

impl MatRepr {
    fn add_diagonal(&mut self, d: Vec<C>) {
        match self {
            MatRepr::Zero => *self = MatRepr::Diagonal(d),
            MatRepr::Diagonal(cur) => {
                for (a, b) in cur.iter_mut().zip(d) {
                    *a += b;
                }
            }
            MatRepr::Dense(m) => {
                for (i, v) in d.into_iter().enumerate() {
                    m[(i, i)] += v;
                }
            }
        }
    }

    fn add_dense(&mut self, a: CMatrix) {
        match self {
            MatRepr::Zero => *self = MatRepr::Dense(a),
            MatRepr::Diagonal(d) => {
                let mut m = a;
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] += v;
                }
                *self = MatRepr::Dense(m);
            }
            MatRepr::Dense(m) => m.add_assign(&a),
        }
    }

    fn scale(&mut self, s: C) {
        match self {
            MatRepr::Zero => {}
            MatRepr::Diagonal(d) => {
                for v in d.iter_mut() {
                    *v *= s;
                }
            }
            MatRepr::Dense(m) => m.scale(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MatRepr::Zero)
    }

    /// y += M x
    pub fn accumulate(&self, x: &[C], y: &mut [C]) {
        match self {
            MatRepr::Zero => {}
            MatRepr::Diagonal(d) => {
                for i in 0..x.len() {
                    y[i] += d[i] * x[i];
                }
            }
            MatRepr::Dense(m) => {
                for (yi, v) in y.iter_mut().zip(m.matvec(x)) {
                    *yi += v;
                }
            }
        }
    }

    /// M * K without materializing diagonal factors.
    pub fn left_mul(&self, k: &CMatrix) -> Option<CMatrix> {
        match self {
            MatRepr::Zero => None,
            MatRepr::Diagonal(d) => {
                let n = k.rows();
                let mut out = k.clone();
                for i in 0..n {
                    let s = d[i];
                    for v in out.row_mut(i) {
                        *v *= s;
                    }
                }
                Some(out)
            }
            MatRepr::Dense(m) => Some(m.matmul(k)),
        }
    }

    pub fn to_dense(&self, n: usize) -> CMatrix {
        match self {
            MatRepr::Zero => CMatrix::zeros(n, n),
            MatRepr::Diagonal(d) => {
                let mut m = CMatrix::zeros(n, n);
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] = *v;
                }
                m
            }
            MatRepr::Dense(m) => m.clone(),
        }
    }
}

/// The three assembled matrices: output samples = M0 u + M1 u' + M2 u''.
#[derive(Debug, Clone)]
pub struct OpMatrices {
    grid: Arc<Grid>,
    pub m0: MatRepr,
    pub m1: MatRepr,
    pub m2: MatRepr,
}

impl OpMatrices {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Applies the matrices to node samples of a probe.
    pub fn apply_samples(&self, u: &[C], du: &[C], ddu: &[C]) -> Vec<C> {
        let mut y = vec![ZERO; u.len()];
        self.m0.accumulate(u, &mut y);
        self.m1.accumulate(du, &mut y);
        self.m2.accumulate(ddu, &mut y);
        y
    }
}
