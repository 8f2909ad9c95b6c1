//! Polynomial extrapolation of parameter families to their limit.

/// Neville evaluation at zero of the interpolating polynomial through
/// `(h_i, v_i)`; used to extrapolate eps- and step-size families.
pub fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    assert!(!points.is_empty(), "need at least one point");
    let n = points.len();
    let mut v: Vec<f64> = points.iter().map(|p| p.1).collect();
    let h: Vec<f64> = points.iter().map(|p| p.0).collect();
    for level in 1..n {
        for i in 0..(n - level) {
            let (hi, hj) = (h[i], h[i + level]);
            v[i] = (hj * v[i] - hi * v[i + 1]) / (hj - hi);
        }
    }
    v[0]
}

/// Richardson step for a pair computed at step h and h/2 with error order p:
/// returns the O(h^{p+1}) combination.
pub fn richardson_pair(coarse: f64, fine: f64, order: u32) -> f64 {
    let f = (1u64 << order) as f64; // 2^p for halved steps
    (f * fine - coarse) / (f - 1.0)
}
