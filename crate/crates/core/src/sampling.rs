//! Monte Carlo primitives: shifted-Gaussian and Gamma(1/4) importance
//! samplers, the adaptive biased oracle for noisy cubic gates, Chernoff-
//! Hoeffding sample planning, and oracle-spec chaining.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::{
    cubic_continuous_kernel, cubic_deterministic_phase, cubic_discrete_factor, ThermalLoss,
};
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;
use crate::special::GAMMA_QUARTER;

/// Bias and magnitude bookkeeping of a sampling oracle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleSpec {
    pub bias: f64,
    pub magnitude: f64,
}

impl OracleSpec {
    pub fn unbiased(magnitude: f64) -> Self {
        Self {
            bias: 0.0,
            magnitude,
        }
    }

    pub fn exact() -> Self {
        Self {
            bias: 0.0,
            magnitude: 1.0,
        }
    }
}

/// Chain an outer oracle with an inner one: bias e1 + A1 e2, magnitude A1 A2.
pub fn chain_specs(outer: OracleSpec, inner: OracleSpec) -> OracleSpec {
    OracleSpec {
        bias: outer.bias + outer.magnitude * inner.bias,
        magnitude: outer.magnitude * inner.magnitude,
    }
}

/// Deterministic, splittable RNG handle: identical (seed, stream) pairs
/// reproduce identical draw sequences; distinct streams never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn substream(&self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(offset),
        }
    }
}

/// Smallest n with 2 exp(-n lambda^2 / (2 M^2)) <= delta.
pub fn plan_samples(magnitude: f64, precision: f64, failure: f64) -> Result<u64> {
    if !(precision > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "precision must be positive, got {precision}"
        )));
    }
    if !(failure > 0.0 && failure < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "failure probability must lie in (0,1), got {failure}"
        )));
    }
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "magnitude must be >= 0, got {magnitude}"
        )));
    }
    if magnitude == 0.0 {
        return Ok(1);
    }
    let n = (2.0 * magnitude * magnitude / (precision * precision)) * (2.0 / failure).ln();
    Ok(n.ceil() as u64)
}

/// One draw for I = int exp(-A (a y + b)^2) G(y) dy with |G| <= 1:
/// y ~ Normal(-b/a, 1/(2 A a^2)), weight sqrt(pi/A)/|a|, E[w G(y)] = I.
pub fn sample_shifted_gaussian<R: Rng>(
    a: f64,
    b: f64,
    big_a: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if a == 0.0 {
        return Err(Error::DegenerateKernel);
    }
    if !(big_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Gaussian kernel scale A must be positive, got {big_a}"
        )));
    }
    let mean = -b / a;
    let sd = (1.0 / (2.0 * big_a * a * a)).sqrt();
    let y = mean + sd * rng.sample::<f64, _>(StandardNormal);
    let weight = (std::f64::consts::PI / big_a).sqrt() / a.abs();
    debug_assert!(weight <= shifted_gaussian_magnitude(a, big_a) + 1e-12);
    Ok((weight, y))
}

/// Magnitude bound of the shifted-Gaussian oracle: sqrt(pi/A)/|a|.
pub fn shifted_gaussian_magnitude(a: f64, big_a: f64) -> f64 {
    (std::f64::consts::PI / big_a).sqrt() / a.abs()
}

/// Draw U ~ Gamma(shape 1/4, rate A) via Marsaglia-Tsang with the shape
/// boost U^(1/alpha) for alpha < 1 (here alpha = 1/4, boost exponent 4).
pub fn gamma_quarter_draw<R: Rng>(rate: f64, rng: &mut R) -> f64 {
    debug_assert!(rate > 0.0);
    // Marsaglia-Tsang for shape alpha + 1 = 5/4, rate 1.
    let alpha = 1.25f64;
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    let x_big = loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        if u < 1.0 - 0.0331 * x.powi(4) {
            break d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            break d * v;
        }
    };
    // Boost down to shape 1/4: X = X_{5/4} * U^(1/(1/4)) = X_{5/4} * U^4 ... no:
    // X_alpha = X_{alpha+1} * U^(1/alpha), so exponent 1/(1/4) = 4.
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    x_big * u.powi(4) / rate
}

/// One draw for I = int exp(-A (a y + b)^2) / (B sqrt(|a y + b|)) G(y) dy:
/// U ~ Gamma(1/4, A), fair sign s, y = (s sqrt(U) - b)/a,
/// weight Gamma(1/4) / (|a| A^(1/4) B).
pub fn sample_gamma_quarter<R: Rng>(
    a: f64,
    b: f64,
    big_a: f64,
    big_b: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if a == 0.0 {
        return Err(Error::DegenerateKernel);
    }
    if !(big_a > 0.0) || !(big_b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel scales must be positive, got A = {big_a}, B = {big_b}"
        )));
    }
    let u = gamma_quarter_draw(big_a, rng);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let y = (sign * u.sqrt() - b) / a;
    let weight = GAMMA_QUARTER / (a.abs() * big_a.powf(0.25) * big_b);
    debug_assert!(weight <= gamma_quarter_magnitude(a, big_a, big_b) + 1e-12);
    Ok((weight, y))
}

/// Magnitude bound of the Gamma(1/4) oracle: Gamma(1/4) A^(-1/4) / (|a| B).
pub fn gamma_quarter_magnitude(a: f64, big_a: f64, big_b: f64) -> f64 {
    GAMMA_QUARTER / (a.abs() * big_a.powf(0.25) * big_b)
}

/// Which branch an adaptive draw took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AdaptiveBranch {
    /// |gamma q1| < lambda: the cubic gate collapsed to a deterministic phase.
    DeterministicPhase,
    /// |gamma q1| >= lambda: momentum resampled against the thermal Gaussian.
    Sampled,
}

/// One draw of the biased oracle for Lambda* o C_gamma*(D(r)).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveDraw {
    pub weight: Complex64,
    pub point: PhasePoint,
    pub branch: AdaptiveBranch,
    /// Per-draw bias bound 6 |gamma q1| M (zero on the sampled branch).
    pub bias_bound: f64,
}

/// Exact magnitude bound of the sampled branch, sup over |gamma q1| >= lambda:
/// (24 lambda c)^(-1/2) exp(-c lambda^2 / gamma^2), c = (1/2 + nbar)(1 - eta).
pub fn adaptive_case2_magnitude(gamma: f64, lambda: f64, loss: &ThermalLoss) -> f64 {
    let c = loss.noise_strength();
    if lambda <= 0.0 || c <= 0.0 || gamma == 0.0 {
        return f64::INFINITY;
    }
    (24.0 * lambda * c).powf(-0.5) * (-c * lambda * lambda / (gamma * gamma)).exp()
}

/// Magnitude the adaptive oracle declares a priori: the deterministic branch
/// is bounded by 1, the sampled branch by `adaptive_case2_magnitude`.
pub fn adaptive_oracle_magnitude(gamma: f64, lambda: f64, loss: &ThermalLoss) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return adaptive_case2_magnitude(gamma, lambda, loss);
    }
    adaptive_case2_magnitude(gamma, lambda, loss).max(1.0)
}

/// Biased per-layer oracle from the adaptive-sampling construction.
///
/// Case 1, |gamma q1| < lambda: deterministic weight
/// exp(-i 4 gamma q1^3) exp(-c (q1^2 + p1^2)) with the mode-1 coordinates
/// scaled by sqrt(eta); bias bounded by 6 |gamma q1| M.
/// Case 2: p1 is resampled from the Gaussian measure exp(-c p1^2); unbiased.
pub fn sample_adaptive_cubic<R: Rng>(
    gamma: f64,
    loss: &ThermalLoss,
    r: &PhasePoint,
    lambda: f64,
    curvature_m: f64,
    rng: &mut R,
) -> Result<AdaptiveDraw> {
    if lambda < 0.0 || curvature_m < 0.0 {
        return Err(Error::InvalidParameter(
            "lambda and curvature bound must be >= 0".into(),
        ));
    }
    let c = loss.noise_strength();
    let q1 = r.q(0);
    let p1 = r.p(0);
    let root_eta = loss.eta().sqrt();
    let v = (gamma * q1).abs();
    if v < lambda || gamma == 0.0 {
        let weight = cubic_deterministic_phase(gamma, q1)
            * (-c * (q1 * q1 + p1 * p1)).exp();
        let mut point = r.clone();
        point.set_q(0, q1 * root_eta);
        point.set_p(0, p1 * root_eta);
        debug_assert!(weight.norm() <= 1.0 + 1e-12);
        Ok(AdaptiveDraw {
            weight,
            point,
            branch: AdaptiveBranch::DeterministicPhase,
            bias_bound: 6.0 * v * curvature_m,
        })
    } else {
        if c <= 0.0 {
            return Err(Error::DivergentVariance);
        }
        let p_new = (1.0 / (2.0 * c)).sqrt() * rng.sample::<f64, _>(StandardNormal);
        let gaussian_weight = (std::f64::consts::PI / c).sqrt();
        let weight = cubic_discrete_factor(gamma, q1)
            * cubic_continuous_kernel(gamma, q1, p1, p_new)
            * gaussian_weight
            * (-c * q1 * q1).exp();
        let mut point = r.clone();
        point.set_q(0, q1 * root_eta);
        point.set_p(0, p_new * root_eta);
        debug_assert!(
            weight.norm() <= adaptive_case2_magnitude(gamma, lambda, loss) + 1e-9,
            "case-2 weight {} exceeds bound {}",
            weight.norm(),
            adaptive_case2_magnitude(gamma, lambda, loss)
        );
        Ok(AdaptiveDraw {
            weight,
            point,
            branch: AdaptiveBranch::Sampled,
            bias_bound: 0.0,
        })
    }
}

/// Mean/stderr helper for Monte Carlo accumulation over complex samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    pub sum: Complex64,
    pub sum_sq: f64,
    pub count: u64,
}

impl Accumulator {
    pub fn push(&mut self, x: Complex64) {
        self.sum += x;
        self.sum_sq += x.norm_sqr();
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.count += other.count;
    }

    pub fn mean(&self) -> Complex64 {
        if self.count == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean, combining both complex components.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let var = (self.sum_sq / n - mean.norm_sqr()).max(0.0);
        (var / (n - 1.0)).sqrt()
    }
}
