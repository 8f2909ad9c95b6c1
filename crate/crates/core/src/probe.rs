//! Probes: functions known together with their first and second derivatives,
//! the inputs a perturbation consumes.

use num_complex::Complex;

/// A function evaluable with two derivatives at any real point (at minimum at
/// all grid nodes of the perturbation interval).
pub trait Probe {
    fn value(&self, x: f64) -> Complex<f64>;
    fn d1(&self, x: f64) -> Complex<f64>;
    fn d2(&self, x: f64) -> Complex<f64>;
}

/// The constant-one probe with vanishing derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ConstOne;

impl Probe for ConstOne {
    fn value(&self, _x: f64) -> Complex<f64> {
        Complex::new(1.0, 0.0)
    }
    fn d1(&self, _x: f64) -> Complex<f64> {
        Complex::new(0.0, 0.0)
    }
    fn d2(&self, _x: f64) -> Complex<f64> {
        Complex::new(0.0, 0.0)
    }
}

/// Probe assembled from three closures.
pub struct FnProbe<V, D, S>
where
    V: Fn(f64) -> Complex<f64>,
    D: Fn(f64) -> Complex<f64>,
    S: Fn(f64) -> Complex<f64>,
{
    pub value: V,
    pub d1: D,
    pub d2: S,
}

impl<V, D, S> Probe for FnProbe<V, D, S>
where
    V: Fn(f64) -> Complex<f64>,
    D: Fn(f64) -> Complex<f64>,
    S: Fn(f64) -> Complex<f64>,
{
    fn value(&self, x: f64) -> Complex<f64> {
        (self.value)(x)
    }
    fn d1(&self, x: f64) -> Complex<f64> {
        (self.d1)(x)
    }
    fn d2(&self, x: f64) -> Complex<f64> {
        (self.d2)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_probe_derivatives_are_consistent() {
        // d2 should match a centered difference of d1 on smooth input
        let p = FnProbe {
            value: |x: f64| Complex::new((2.0 * x).sin(), 0.0),
            d1: |x: f64| Complex::new(2.0 * (2.0 * x).cos(), 0.0),
            d2: |x: f64| Complex::new(-4.0 * (2.0 * x).sin(), 0.0),
        };
        let h = 1e-5;
        for &x in &[-0.7, 0.0, 0.31, 1.2] {
            let fd = (p.d1(x + h) - p.d1(x - h)) / (2.0 * h);
            assert!((fd - p.d2(x)).norm() < 1e-8);
        }
    }

    #[test]
    fn const_one() {
        assert_eq!(ConstOne.value(3.2), Complex::new(1.0, 0.0));
        assert_eq!(ConstOne.d1(3.2), Complex::new(0.0, 0.0));
        assert_eq!(ConstOne.d2(-1.0), Complex::new(0.0, 0.0));
    }
}
