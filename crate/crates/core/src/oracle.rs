//! Independent spectral cross-check: discretize the perturbed operator on a
//! truncated line with Dirichlet ends, hunt for eigenvalues near zero by
//! shift-and-invert iteration, and compare against the pole engine.
//!
//! Nothing here shares numerics with the pole engine: second differences on
//! a uniform grid, trapezoid quadrature for the integral terms, banded LU
//! with a capacitance block for the shift solves. Agreement between the two
//! pipelines is therefore meaningful evidence.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{Banded, BandedPlusBlock, Block, CMatrix};
use crate::perturbation::{PerturbationOp, PerturbationTerm, Realness};
use crate::pole::{Decision, EigenPair, Verdict};

type C = Complex<f64>;

/// Truncated-line discretization parameters.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Half-width of the computational domain (Dirichlet walls near +-X).
    pub half_width: f64,
    /// Grid step; at most diam(Q)/64.
    pub step: f64,
    /// Initial eigenvalue guess for shift-and-invert.
    pub shift_seed: C,
    /// Number of candidate states to deflate through.
    pub n_states: usize,
    /// Retain only eigenvalues with |lambda| below this.
    pub band_cut: f64,
    /// Minimum fraction of vector mass inside |x| <= X/2.
    pub mass_threshold: f64,
    /// Residual acceptance, relative to the vector norm.
    pub residual_tol: f64,
}

impl OracleConfig {
    /// Sizes the domain from the expected decay rate: X = 15 / Re k capped
    /// at 2000 (absence runs fall back to the 0.05 floor), step diam(Q)/64.
    pub fn auto(op: &PerturbationOp, k_expected: C) -> Self {
        let rate = k_expected.re.max(0.05);
        let half_width = (15.0 / rate).min(2000.0);
        let diam = op.interval().length();
        let step = diam / 64.0;
        let shift_seed = if k_expected.re > 0.0 {
            -k_expected * k_expected
        } else {
            Complex::new(-1e-4, 0.0)
        };
        Self {
            half_width,
            step,
            shift_seed,
            n_states: 3,
            band_cut: 0.1,
            mass_threshold: 0.99,
            residual_tol: 1e-8,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }
}

/// Discretized operator: banded second-difference part plus an optional
/// dense block over the Q rows (integral terms).
pub struct Hamiltonian {
    pub matrix: BandedPlusBlock,
    /// Interior node positions (Dirichlet removes the walls).
    pub xs: Vec<f64>,
    pub step: f64,
    mass_radius: f64,
}

/// One converged eigenpair of the discretized operator.
#[derive(Debug, Clone)]
pub struct OraclePair {
    pub lambda: C,
    pub vector: Vec<C>,
    pub iterations: usize,
    pub residual: f64,
}

/// Near-zero spectrum found by the oracle, plus per-candidate diagnostics.
#[derive(Debug, Clone, Default)]
pub struct OracleSpectrum {
    pub pairs: Vec<OraclePair>,
    pub xs: Vec<f64>,
    pub notes: Vec<String>,
}

/// Outcome of the spectral-localization bound.
#[derive(Debug, Clone)]
pub struct BandCheck {
    pub pass: bool,
    pub bound: f64,
    pub notes: String,
}

/// Verdict-level and eigenpair-level agreement between pole engine and
/// oracle.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub verdict_agreement: bool,
    pub lambda_rel_error: Option<f64>,
    pub eigenfunction_correlation: Option<f64>,
    pub band_check: Option<bool>,
    pub notes: Vec<String>,
}

/// Assembles the truncated-line matrix. The domain is aligned so the ends of
/// Q land exactly on grid nodes; the line extends at least `half_width` on
/// both sides.
pub fn build_hamiltonian(op: &PerturbationOp, eps: f64, config: &OracleConfig) -> Result<Hamiltonian> {
    let iv = op.interval();
    let (a, b) = (iv.left(), iv.right());
    let diam = iv.length();
    if config.step > diam / 64.0 + 1e-15 {
        return Err(Error::StepTooCoarse {
            step: config.step,
            len: diam,
        });
    }
    if config.half_width <= a.abs().max(b.abs()) + 2.0 * config.step {
        return Err(Error::DomainTooSmall {
            a,
            b,
            half_width: config.half_width,
        });
    }
    // commensurate step: integer count across Q, walls beyond half_width
    let n_q = (diam / config.step).ceil() as usize;
    let h = diam / n_q as f64;
    let m_left = ((config.half_width + a) / h).ceil() as usize;
    let m_right = ((config.half_width - b) / h).ceil() as usize;
    let x_left = a - m_left as f64 * h; // Dirichlet wall
    let n = m_left + n_q + m_right - 1; // interior nodes
    let xs: Vec<f64> = (1..=n).map(|j| x_left + j as f64 * h).collect();
    let j_a = m_left - 1; // index of node at x = a
    let j_b = j_a + n_q;

    let inv_h2 = 1.0 / (h * h);
    let mut band = Banded::zeros(n, 1, 1);
    for j in 0..n {
        band.set(j, j, Complex::new(2.0 * inv_h2, 0.0));
        if j + 1 < n {
            band.set(j, j + 1, Complex::new(-inv_h2, 0.0));
            band.set(j + 1, j, Complex::new(-inv_h2, 0.0));
        }
    }

    let phase = op.phase();
    let scale = -eps; // the perturbation enters the operator with -eps
    let mut block_data: Option<CMatrix> = None;
    let block_len = j_b - j_a + 1;
    // trapezoid weights over the Q section
    let trap = |j: usize| -> f64 {
        if j == 0 || j == block_len - 1 {
            0.5 * h
        } else {
            h
        }
    };
    for term in op.terms() {
        match term {
            PerturbationTerm::Multiply(c) => {
                for j in j_a..=j_b {
                    band.add(j, j, scale * phase * c.eval(xs[j]));
                }
            }
            PerturbationTerm::D1(c) => {
                for j in j_a..=j_b {
                    let v = scale * phase * c.eval(xs[j]) / (2.0 * h);
                    band.add(j, j + 1, v);
                    band.add(j, j - 1, -v);
                }
            }
            PerturbationTerm::D2(c) => {
                for j in j_a..=j_b {
                    let v = scale * phase * c.eval(xs[j]) * inv_h2;
                    band.add(j, j + 1, v);
                    band.add(j, j - 1, v);
                    band.add(j, j, -2.0 * v);
                }
            }
            PerturbationTerm::RankOne(c) => {
                let data = block_data.get_or_insert_with(|| CMatrix::zeros(block_len, block_len));
                for q in 0..block_len {
                    let w = trap(q) * c.eval(xs[j_a + q]);
                    for p in 0..block_len {
                        data[(p, q)] += scale * phase * w;
                    }
                }
            }
            PerturbationTerm::Volterra(c) => {
                let data = block_data.get_or_insert_with(|| CMatrix::zeros(block_len, block_len));
                // cumulative trapezoid from a to x_p
                for p in 0..block_len {
                    for q in 0..=p {
                        let w = if p == 0 {
                            0.0
                        } else if q == 0 || q == p {
                            0.5 * h
                        } else {
                            h
                        };
                        data[(p, q)] += scale * phase * w * c.eval(xs[j_a + q]);
                    }
                }
            }
        }
    }

    Ok(Hamiltonian {
        matrix: BandedPlusBlock {
            banded: band,
            block: block_data.map(|data| Block { start: j_a, data }),
        },
        xs,
        step: h,
        mass_radius: 0.5 * config.half_width,
    })
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn scale_to_unit(v: &mut [C]) {
    let n = norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

fn project_out(v: &mut [C], basis: &[Vec<C>]) {
    for b in basis {
        let dot: C = b.iter().zip(v.iter()).map(|(p, q)| p.conj() * q).sum();
        for (z, p) in v.iter_mut().zip(b) {
            *z -= dot * p;
        }
    }
}

/// Least-squares eigenvalue estimate for a unit vector.
fn rayleigh(h: &BandedPlusBlock, v: &[C]) -> (C, f64) {
    let hv = h.matvec(v);
    let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let num: C = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
    let lambda = num / vv;
    let res = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / vv.sqrt();
    (lambda, res)
}

/// SplitMix64; deterministic start vectors keep reports byte-identical.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

/// Shift-and-invert hunt for localized states near zero. Deflates through
/// `n_states` candidates, refines each shift with two Rayleigh updates, and
/// keeps only converged, localized, in-band eigenpairs.
pub fn bound_states_near_zero(h: &Hamiltonian, config: &OracleConfig) -> OracleSpectrum {
    let mut spectrum = OracleSpectrum {
        pairs: Vec::new(),
        xs: h.xs.clone(),
        notes: Vec::new(),
    };
    let mut deflate: Vec<Vec<C>> = Vec::new();
    let mut rng = SplitMix(0x5EED_0F_D15C0);
    let width = h.xs.last().unwrap().abs().max(h.xs[0].abs()) / 6.0;

    'attempts: for attempt in 0..config.n_states {
        // localized start vector, jittered per attempt
        let mut v: Vec<C> = h
            .xs
            .iter()
            .map(|&x| {
                let g = (-(x / width).powi(2)).exp();
                let poly = match attempt % 3 {
                    0 => 1.0,
                    1 => x / width,
                    _ => x * x / (width * width) - 0.5,
                };
                Complex::new(g * poly + 0.02 * rng.next_f64(), 0.0)
            })
            .collect();
        project_out(&mut v, &deflate);
        scale_to_unit(&mut v);

        let mut sigma = config.shift_seed;
        let mut solver = match h.matrix.shift_solver(sigma) {
            Ok(s) => s,
            Err(_) => {
                sigma += Complex::new(1e-8, 1e-9);
                match h.matrix.shift_solver(sigma) {
                    Ok(s) => s,
                    Err(e) => {
                        spectrum.notes.push(format!("candidate {attempt}: {e}"));
                        continue 'attempts;
                    }
                }
            }
        };

        let mut lambda = sigma;
        let mut residual = f64::INFINITY;
        let mut iterations = 0usize;
        let mut reshifts = 0usize;
        for it in 0..120 {
            iterations = it + 1;
            let mut next = solver.solve(&v);
            project_out(&mut next, &deflate);
            let growth = norm(&next);
            if !growth.is_finite() || growth == 0.0 {
                break;
            }
            scale_to_unit(&mut next);
            v = next;
            let (lam, res) = rayleigh(&h.matrix, &v);
            let stalled = (lam - lambda).norm() <= 1e-13 * lam.norm().max(1e-12);
            lambda = lam;
            residual = res;
            if res <= config.residual_tol {
                break;
            }
            // Rayleigh update once the fixed shift stops making progress
            if (stalled || it % 25 == 24) && reshifts < 4 {
                reshifts += 1;
                sigma = lambda;
                match h.matrix.shift_solver(sigma) {
                    Ok(s) => solver = s,
                    Err(_) => {
                        sigma += Complex::new(residual.max(1e-12), 0.0);
                        if let Ok(s) = h.matrix.shift_solver(sigma) {
                            solver = s;
                        }
                    }
                }
            }
        }

        if residual > config.residual_tol {
            spectrum.notes.push(format!(
                "candidate {attempt}: no convergence (residual {residual:.3e} after {iterations} iterations)"
            ));
            continue;
        }
        deflate.push(v.clone());

        // localization and band filters
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let inside: f64 = h
            .xs
            .iter()
            .zip(&v)
            .filter(|(&x, _)| x.abs() <= h.mass_radius)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        if inside / total < config.mass_threshold {
            spectrum.notes.push(format!(
                "candidate {attempt}: discarded, mass {:.4} inside |x| <= {:.1}",
                inside / total,
                h.mass_radius
            ));
            continue;
        }
        if lambda.norm() > config.band_cut {
            spectrum.notes.push(format!(
                "candidate {attempt}: discarded, |lambda| = {:.3e} outside band",
                lambda.norm()
            ));
            continue;
        }
        if spectrum
            .pairs
            .iter()
            .any(|p| (p.lambda - lambda).norm() <= 1e-8 * lambda.norm().max(1e-10))
        {
            spectrum
                .notes
                .push(format!("candidate {attempt}: duplicate of an earlier state"));
            continue;
        }
        spectrum.pairs.push(OraclePair {
            lambda,
            vector: v,
            iterations,
            residual,
        });
    }
    spectrum
}

/// Localization bound for the retained spectrum: with slack 1.5, real ops
/// must have real eigenvalues above -eps C, complex ops eigenvalues in the
/// strip Re >= -eps C, |Im| <= eps C.
pub fn spectral_band_check(
    spectrum: &OracleSpectrum,
    eps: f64,
    c_proxy: f64,
    realness: Realness,
) -> BandCheck {
    let bound = eps * c_proxy * 1.5;
    if spectrum.pairs.is_empty() {
        return BandCheck {
            pass: true,
            bound,
            notes: "vacuous: no retained eigenvalues".into(),
        };
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for p in &spectrum.pairs {
        match realness {
            Realness::CertifiedReal => {
                if p.lambda.im.abs() > 1e-8 {
                    pass = false;
                    notes.push(format!("Im lambda = {:.3e} for a real operator", p.lambda.im));
                }
                if p.lambda.re < -bound {
                    pass = false;
                    notes.push(format!("lambda = {:.6e} below -{bound:.3e}", p.lambda.re));
                }
            }
            Realness::Unknown => {
                if p.lambda.re < -bound || p.lambda.im.abs() > bound {
                    pass = false;
                    notes.push(format!(
                        "lambda = {} outside the strip of width {bound:.3e}",
                        p.lambda
                    ));
                }
            }
        }
    }
    BandCheck {
        pass,
        bound,
        notes: if notes.is_empty() {
            format!("{} eigenvalue(s) inside the strip", spectrum.pairs.len())
        } else {
            notes.join("; ")
        },
    }
}

/// Cross-checks the pole-engine decision against the oracle spectrum.
/// Marginal verdicts are reported indeterminate, never as disagreement.
pub fn compare(
    decision: &Decision,
    eigenpair: Option<&EigenPair>,
    spectrum: &OracleSpectrum,
    band_check: Option<bool>,
) -> ComparisonReport {
    let mut notes = Vec::new();
    let predicted = decision.verdict == Verdict::Eigenvalue;
    let found = !spectrum.pairs.is_empty();
    let verdict_agreement = if decision.verdict == Verdict::Marginal {
        notes.push("marginal verdict: agreement indeterminate".into());
        true
    } else {
        predicted == found
    };
    let mut lambda_rel_error = None;
    let mut eigenfunction_correlation = None;
    if predicted && found {
        let lambda = decision.lambda.expect("eigenvalue verdict carries lambda");
        let closest = spectrum
            .pairs
            .iter()
            .min_by(|p, q| {
                (p.lambda - lambda)
                    .norm()
                    .total_cmp(&(q.lambda - lambda).norm())
            })
            .expect("nonempty");
        lambda_rel_error = Some((lambda - closest.lambda).norm() / closest.lambda.norm());
        if let Some(pair) = eigenpair {
            let phi: Vec<C> = spectrum.xs.iter().map(|&x| pair.phi_at(x)).collect();
            let dot: C = phi
                .iter()
                .zip(&closest.vector)
                .map(|(a, b)| a.conj() * b)
                .sum();
            let denom = norm(&phi) * norm(&closest.vector);
            if denom > 0.0 {
                eigenfunction_correlation = Some(dot.norm() / denom);
            }
        }
    } else if predicted != found && decision.verdict != Verdict::Marginal {
        notes.push(format!(
            "pole engine says {}, oracle found {} state(s)",
            decision.verdict,
            spectrum.pairs.len()
        ));
    }
    ComparisonReport {
        verdict_agreement,
        lambda_rel_error,
        eigenfunction_correlation,
        band_check,
        notes,
    }
}

/// Runs the oracle at the configured step and at half the step, returning
/// (coarse, fine, Richardson-extrapolated) eigenvalues of the state closest
/// to `target`, when both runs detect one.
pub fn richardson_bound_state(
    op: &PerturbationOp,
    eps: f64,
    config: &OracleConfig,
    target: C,
) -> Result<Option<(C, C, C)>> {
    let closest = |spectrum: &OracleSpectrum| -> Option<C> {
        spectrum
            .pairs
            .iter()
            .min_by(|p, q| (p.lambda - target).norm().total_cmp(&(q.lambda - target).norm()))
            .map(|p| p.lambda)
    };
    let coarse_h = build_hamiltonian(op, eps, config)?;
    let coarse = closest(&bound_states_near_zero(&coarse_h, config));
    let fine_cfg = config.with_step(config.step / 2.0);
    let fine_h = build_hamiltonian(op, eps, &fine_cfg)?;
    let fine = closest(&bound_states_near_zero(&fine_h, &fine_cfg));
    Ok(match (coarse, fine) {
        (Some(c), Some(f)) => {
            // second-order differences: lambda(h) = lambda + c h^2
            let extrap = (4.0 * f - c) / 3.0;
            Some((c, f, extrap))
        }
        _ => None,
    })
}
