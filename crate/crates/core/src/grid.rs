//! Composite-Simpson quadrature grids on the perturbation interval and
//! complex-valued functions sampled on them.
//!
//! Every node is either a panel boundary or a panel midpoint; the kernels of
//! the pole engine have their |x-t| kink at a node whenever the evaluation
//! point is a grid node, which keeps the per-panel integrands piecewise
//! smooth. Grids are immutable after construction and shared via `Arc`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};

/// A bounded interval [a, b], a < b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFiniteInterval { a, b });
        }
        if a >= b {
            return Err(Error::EmptyInterval { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn left(&self) -> f64 {
        self.a
    }

    pub fn right(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// Uniform composite-Simpson grid: `panels` panels, `2 * panels + 1` nodes.
///
/// Node `2p` is the left boundary of panel `p`, node `2p + 1` its midpoint.
/// Weights are the composite Simpson weights; they are positive and sum to
/// the interval length.
#[derive(Debug, Clone)]
pub struct Grid {
    interval: Interval,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel_count: usize,
}

impl Grid {
    pub fn new(interval: Interval, panels: usize) -> Result<Arc<Self>> {
        if panels == 0 {
            return Err(Error::NoPanels);
        }
        let n = 2 * panels + 1;
        let h = interval.length() / panels as f64;
        let mut nodes = Vec::with_capacity(n);
        for j in 0..n {
            nodes.push(interval.left() + 0.5 * h * j as f64);
        }
        // exact right endpoint regardless of rounding
        nodes[n - 1] = interval.right();
        let mut weights = vec![0.0; n];
        for p in 0..panels {
            weights[2 * p] += h / 6.0;
            weights[2 * p + 1] += 4.0 * h / 6.0;
            weights[2 * p + 2] += h / 6.0;
        }
        Ok(Arc::new(Self {
            interval,
            nodes,
            weights,
            panel_count: panels,
        }))
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn panel_count(&self) -> usize {
        self.panel_count
    }

    /// Half-panel spacing between adjacent nodes.
    pub fn spacing(&self) -> f64 {
        0.5 * self.interval.length() / self.panel_count as f64
    }

    /// Index of the grid node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let d = self.spacing();
        let j = ((x - self.interval.left()) / d).round() as isize;
        j.clamp(0, self.nodes.len() as isize - 1) as usize
    }

    /// Cumulative quadrature weights: row `i` integrates a sampled function
    /// from the left endpoint to node `i`.
    ///
    /// Full panels use the Simpson rule. A trailing half panel ending at a
    /// midpoint node is closed by a local 3-point rule through the two
    /// previous nodes (trapezoid for the very first half panel, where no
    /// earlier node exists), so the matrix stays lower triangular.
    pub fn cumulative_weights(&self) -> Vec<f64> {
        let n = self.len();
        let h = self.interval.length() / self.panel_count as f64;
        let d = 0.5 * h;
        let mut m = vec![0.0; n * n];
        for i in (2..n).step_by(2) {
            let (head, tail) = m.split_at_mut(i * n);
            tail[..n].copy_from_slice(&head[(i - 2) * n..(i - 2) * n + n]);
            tail[i - 2] += h / 6.0;
            tail[i - 1] += 4.0 * h / 6.0;
            tail[i] += h / 6.0;
        }
        for i in (1..n).step_by(2) {
            let (head, tail) = m.split_at_mut(i * n);
            tail[..n].copy_from_slice(&head[(i - 1) * n..(i - 1) * n + n]);
            if i == 1 {
                tail[0] += 0.5 * d;
                tail[1] += 0.5 * d;
            } else {
                tail[i - 2] += -d / 12.0;
                tail[i - 1] += 8.0 * d / 12.0;
                tail[i] += 5.0 * d / 12.0;
            }
        }
        m
    }

    /// Local quadratic interpolation of node samples, zero outside [a, b].
    /// Exact at the nodes.
    pub fn interpolate(&self, values: &[Complex<f64>], x: f64) -> Complex<f64> {
        if !self.interval.contains(x) {
            return Complex::new(0.0, 0.0);
        }
        let h = self.interval.length() / self.panel_count as f64;
        let mut p = ((x - self.interval.left()) / h).floor() as usize;
        if p >= self.panel_count {
            p = self.panel_count - 1;
        }
        let i = 2 * p;
        let (x0, x1, x2) = (self.nodes[i], self.nodes[i + 1], self.nodes[i + 2]);
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
        f0 * l0 + f1 * l1 + f2 * l2
    }
}

/// Complex samples of a function on a grid. Holds a shared reference to the
/// grid, never a copy.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<Complex<f64>>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> Complex<f64>) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![Complex::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<f64>> {
        self.values
    }

    /// Quadrature of the samples: sum of w_i f_i. Exact for polynomials of
    /// degree <= 3 on each panel.
    pub fn integrate(&self) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (w, v) in self.grid.weights().iter().zip(&self.values) {
            acc += w * v;
        }
        acc
    }

    /// L2 pairing sum of w_i conj(f_i) g_i; errors on grid mismatch.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex<f64>> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid.nodes() != other.grid.nodes() {
            return Err(Error::GridMismatch);
        }
        let mut acc = Complex::new(0.0, 0.0);
        for ((w, a), b) in self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .zip(&other.values)
        {
            acc += w * a.conj() * b;
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same grid").re.max(0.0).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
