//! The regularized resolvent kernel and the probes built from kernel sums.
//!
//! The free-line kernel `-(1/2k) e^{-k|x-t|}` has a simple pole at k = 0;
//! subtracting the pole leaves `kappa(k, r) = -(e^{-kr} - 1)/(2k)`, analytic
//! through k = 0 with limit r/2. Quadrature sums of these kernels against a
//! grid function yield probes carrying values and two derivatives.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::probe::Probe;

type C = Complex<f64>;

/// exp(z) - 1 without cancellation for small |z|:
/// real part via expm1(x)cos(y) - 2 sin^2(y/2), imaginary part e^x sin(y).
pub fn expm1_complex(z: C) -> C {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// Regularized kernel `-(e^{-kr} - 1)/(2k)`, stable for all k including the
/// threshold k = 0 where it equals r/2.
///
/// Series branch for |k r| < 1/2 (also covering k = 0):
/// r/2 - k r^2/4 + k^2 r^3/12 - k^3 r^4/48 + ..., term ratio -(kr)/n.
pub fn kappa(k: C, r: f64) -> C {
    debug_assert!(r >= 0.0, "kernel distance must be nonnegative");
    let kr = k * r;
    if kr.norm() < 0.5 {
        // sum_{n>=1} (-1)^{n+1} k^{n-1} r^n / (2 n!)
        let mut term = Complex::new(0.5 * r, 0.0);
        let mut acc = term;
        let mut n = 1.0;
        while term.norm() > 1e-17 * acc.norm().max(1e-300) && n < 40.0 {
            n += 1.0;
            term = term * (-kr) / n;
            acc += term;
        }
        acc
    } else {
        -expm1_complex(-kr) / (2.0 * k)
    }
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Probe `u = A(k) g`: value `-(1/2k) sum_j w_j e^{-k|x - t_j|} g_j`,
/// slope `(1/2) sum_j w_j sign(x - t_j) e^{-k|x - t_j|} g_j`, and
/// curvature `k^2 u(x) + g(x)` with g extended by zero outside `Q`
/// (interpolated between nodes).
pub struct ResolventProbe {
    k: C,
    g: GridFunction,
}

impl ResolventProbe {
    pub fn new(k: C, g: GridFunction) -> Result<Self> {
        if k.norm() == 0.0 {
            return Err(Error::ZeroFrequency);
        }
        Ok(Self { k, g })
    }

    pub fn k(&self) -> C {
        self.k
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.g.grid()
    }

    fn kernel_sum(&self, x: f64) -> C {
        let grid = self.g.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &gv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.g.values())
        {
            acc += w * (-self.k * (x - t).abs()).exp() * gv;
        }
        acc
    }
}

impl Probe for ResolventProbe {
    fn value(&self, x: f64) -> C {
        -self.kernel_sum(x) / (2.0 * self.k)
    }

    fn d1(&self, x: f64) -> C {
        let grid = self.g.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &gv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.g.values())
        {
            acc += w * sign(x - t) * (-self.k * (x - t).abs()).exp() * gv;
        }
        0.5 * acc
    }

    fn d2(&self, x: f64) -> C {
        self.k * self.k * self.value(x) + self.g.grid().interpolate(self.g.values(), x)
    }
}

/// Probe of the pole-free part: value `sum_j w_j kappa(k, |x - t_j|) g_j`,
/// the same slope as [`ResolventProbe`] (the subtracted constant has none),
/// curvature `k^2 value - (k/2) <g> + g(x)`. Defined for every k, including
/// the threshold where the value is the half moment `(1/2) int |x-t| g dt`.
pub struct RegularizedProbe {
    k: C,
    g: GridFunction,
    g_mean: C,
}

impl RegularizedProbe {
    pub fn new(k: C, g: GridFunction) -> Self {
        let g_mean = g.integrate();
        Self { k, g, g_mean }
    }
}

impl Probe for RegularizedProbe {
    fn value(&self, x: f64) -> C {
        let grid = self.g.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &gv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.g.values())
        {
            acc += w * kappa(self.k, (x - t).abs()) * gv;
        }
        acc
    }

    fn d1(&self, x: f64) -> C {
        let grid = self.g.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &gv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.g.values())
        {
            acc += w * sign(x - t) * (-self.k * (x - t).abs()).exp() * gv;
        }
        0.5 * acc
    }

    fn d2(&self, x: f64) -> C {
        self.k * self.k * self.value(x) - 0.5 * self.k * self.g_mean
            + self.g.grid().interpolate(self.g.values(), x)
    }
}

/// Probe `w(x) = sum_j w_j |x - y_j| v_j` (the |x-y| moment of a grid
/// function), with slope `sum_j w_j sign(x - y_j) v_j` and curvature `2 v(x)`.
pub struct AbsMomentProbe {
    v: GridFunction,
}

impl AbsMomentProbe {
    pub fn new(v: GridFunction) -> Self {
        Self { v }
    }
}

impl Probe for AbsMomentProbe {
    fn value(&self, x: f64) -> C {
        let grid = self.v.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &vv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.v.values())
        {
            acc += w * (x - t).abs() * vv;
        }
        acc
    }

    fn d1(&self, x: f64) -> C {
        let grid = self.v.grid();
        let mut acc = Complex::new(0.0, 0.0);
        for ((&t, &w), &vv) in grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .zip(self.v.values())
        {
            acc += w * sign(x - t) * vv;
        }
        acc
    }

    fn d2(&self, x: f64) -> C {
        2.0 * self.v.grid().interpolate(self.v.values(), x)
    }
}
