//! Displacement-propagation estimators for Tr[D(r) U(rho0)]: the unbiased
//! chained-oracle walk, the adaptive walk that rides the deterministic-phase
//! branch while |q1 gamma| stays under threshold, and the near-Gaussian walk
//! that chains the biased per-layer oracle through every layer.
//!
//! All three process layers from L down to 1, pushing a weighted displacement
//! backwards: weight magnitudes accumulate in log space, unit-modulus phases
//! in complex arithmetic, and each path ends by evaluating the input-state
//! characteristic function at the final point.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    cubic_continuous_kernel, cubic_deterministic_phase, cubic_discrete_factor,
    cubic_discrete_weight, gaussian_adjoint_phase_exponent, Circuit, NoisyLayer,
};
use crate::error::{Error, Result};
use crate::phase_space::{input_char, InputState, PhasePoint};
use crate::sampling::{
    adaptive_case2_magnitude, chain_specs, gamma_quarter_magnitude, plan_samples,
    sample_adaptive_cubic, sample_gamma_quarter, sample_shifted_gaussian,
    shifted_gaussian_magnitude, Accumulator, OracleSpec, RngStream,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Unbiased,
    Adaptive,
    NearGaussian,
}

/// A point estimate with its statistical and bookkeeping metadata.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: u64,
    pub algorithm: Algorithm,
    /// A-priori bias ledger of the executed path (0 for unbiased runs;
    /// 6 tau M x deterministic steps for adaptive; the chained fold for
    /// near-Gaussian).
    pub declared_bias: f64,
    /// Run-level oracle declaration: |estimates| never exceed
    /// magnitude + declared_bias.
    pub oracle_spec: OracleSpec,
    /// Product of per-layer oracle magnitudes from the sampling lemmas,
    /// folded with `chain_specs` (excludes deterministic boundary factors).
    pub lemma_magnitude: f64,
    /// Deterministic walk steps taken before any sampling.
    pub deterministic_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimationOptions {
    /// Cap on the planned Chernoff-Hoeffding sample count; the reported
    /// stderr stays honest when the cap bites.
    pub max_samples: u64,
    pub batch_size: u64,
    /// Worker threads for path sampling; 0 uses the global pool. Results are
    /// bit-identical for any worker count because batches own their streams.
    pub workers: usize,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            max_samples: 2_000_000,
            batch_size: 8192,
            workers: 0,
        }
    }
}

/// Exact per-path state: unit-modulus phase times exp(log magnitude).
#[derive(Debug, Clone)]
struct PathState {
    phase: Complex64,
    log_mag: f64,
    point: PhasePoint,
}

impl PathState {
    fn start(point: PhasePoint) -> Self {
        Self {
            phase: Complex64::new(1.0, 0.0),
            log_mag: 0.0,
            point,
        }
    }

    fn mul_real_positive(&mut self, mag: f64) {
        debug_assert!(mag >= 0.0);
        self.log_mag += mag.ln();
    }

    fn mul_unit(&mut self, phase: Complex64) {
        debug_assert!((phase.norm() - 1.0).abs() < 1e-9);
        self.phase *= phase;
    }

    fn mul_complex(&mut self, z: Complex64) {
        let mag = z.norm();
        if mag == 0.0 {
            self.log_mag = f64::NEG_INFINITY;
            return;
        }
        self.log_mag += mag.ln();
        self.phase *= z / mag;
    }

    fn weight(&self) -> Complex64 {
        self.phase * self.log_mag.exp()
    }
}

fn scale_mode1(point: &PhasePoint, factor: f64) -> PhasePoint {
    let mut out = point.clone();
    out.set_q(0, out.q(0) * factor);
    out.set_p(0, out.p(0) * factor);
    out
}

/// Apply the deterministic tail of a layer step: shift mode 1 by sqrt(eta),
/// pick up the Gaussian adjoint phase, move the point through S^-1.
fn apply_shift_and_gaussian(state: &mut PathState, layer: &NoisyLayer) -> Result<()> {
    let shifted = scale_mode1(&state.point, layer.loss.eta().sqrt());
    let phase = gaussian_adjoint_phase_exponent(layer.gaussian.d(), &shifted)?;
    state.mul_unit(Complex64::new(0.0, phase).exp());
    state.point = layer.gaussian.apply_inverse(&shifted);
    Ok(())
}

/// Upfront applicability of the unbiased chained-oracle walk.
fn check_unbiased_applicable(layers: &[NoisyLayer]) -> Result<()> {
    for (idx, layer) in layers.iter().enumerate() {
        if layer.cubic.gamma() == 0.0 {
            return Err(Error::EstimatorInapplicable(format!(
                "layer {} has zero cubicity; use the adaptive or near-Gaussian estimator",
                idx + 1
            )));
        }
        if layer.gaussian.sigma_inv() == 0.0 {
            return Err(Error::EstimatorInapplicable(format!(
                "layer {} has zero symplectic coherence (S^-1)_q1,p1; \
                 use the adaptive or near-Gaussian estimator",
                idx + 1
            )));
        }
        if layer.loss.noise_strength() == 0.0 {
            return Err(Error::EstimatorInapplicable(format!(
                "layer {} is noiseless (eta = 1); the sampling measures degenerate",
                idx + 1
            )));
        }
    }
    Ok(())
}

/// One unbiased path through `layers` (processed last to first), starting at
/// `r`: returns B0 * chi_rho0(r0).
fn unbiased_path(
    layers: &[NoisyLayer],
    input: &InputState,
    r: &PhasePoint,
    rng: &mut ChaCha8Rng,
) -> Result<Complex64> {
    let t = layers.len();
    let mut state = PathState::start(r.clone());
    if t == 0 {
        return input_char(input, &state.point);
    }
    // boundary: layer t's Lambda^(Re),* and C*_D at the initial point
    let top = &layers[t - 1];
    let q1 = state.point.q(0);
    state.mul_real_positive((-top.loss.noise_strength() * q1 * q1).exp());
    state.mul_complex(cubic_discrete_factor(top.cubic.gamma(), q1));

    for k in (1..=t).rev() {
        let layer = &layers[k - 1];
        let gamma_k = layer.cubic.gamma();
        let c_k = layer.loss.noise_strength();
        let q1 = state.point.q(0);
        let p1 = state.point.p(0);
        if gamma_k * q1 != 0.0 {
            let p_new = if k >= 2 {
                let prev = &layers[k - 2];
                let c_prev = prev.loss.noise_strength();
                let gamma_prev = prev.cubic.gamma();
                if c_prev <= 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "interior noiseless layer leaves the q-tilde measure unnormalizable"
                            .into(),
                    ));
                }
                // q_tilde_1 = a p_new + b after shift and S_k^-1
                let a = layer.loss.eta().sqrt() * layer.gaussian.s_inv()[(0, 1)];
                if a == 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "zero symplectic coherence encountered mid-walk".into(),
                    ));
                }
                let mut probe = scale_mode1(&state.point, layer.loss.eta().sqrt());
                probe.set_p(0, 0.0);
                let b = layer.gaussian.apply_inverse(&probe).q(0);
                let (weight, p_new) = if gamma_prev != 0.0 {
                    let big_b = (24.0 * std::f64::consts::PI * gamma_prev.abs()).sqrt();
                    sample_gamma_quarter(a, b, c_prev, big_b, rng)?
                } else {
                    sample_shifted_gaussian(a, b, c_prev, rng)?
                };
                state.mul_real_positive(weight);
                // layer k's Im damping rides along as a bounded factor
                state.mul_real_positive((-c_k * p_new * p_new).exp());
                p_new
            } else {
                if c_k <= 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "noiseless first layer leaves the momentum measure unnormalizable"
                            .into(),
                    ));
                }
                let (weight, p_new) = sample_shifted_gaussian(1.0, 0.0, c_k, rng)?;
                state.mul_real_positive(weight);
                p_new
            };
            state.mul_unit(cubic_continuous_kernel(gamma_k, q1, p1, p_new));
            state.point.set_p(0, p_new);
            apply_shift_and_gaussian(&mut state, layer)?;
            if k >= 2 {
                let prev = &layers[k - 2];
                let gamma_prev = prev.cubic.gamma();
                if gamma_prev != 0.0 {
                    // density consumed magnitude and Re damping; the branch
                    // sign sqrt(sgn(gamma q~1)) stays in the weight
                    if gamma_prev * state.point.q(0) < 0.0 {
                        state.mul_unit(Complex64::new(0.0, 1.0));
                    }
                }
            }
        } else {
            // identity cubic branch: fully deterministic step
            state.mul_real_positive((-c_k * p1 * p1).exp());
            apply_shift_and_gaussian(&mut state, layer)?;
            if k >= 2 {
                let prev = &layers[k - 2];
                let qt = state.point.q(0);
                state.mul_real_positive((-prev.loss.noise_strength() * qt * qt).exp());
                state.mul_complex(cubic_discrete_factor(prev.cubic.gamma(), qt));
            }
        }
    }
    let chi = input_char(input, &state.point)?;
    Ok(state.weight() * chi)
}

/// Static plan of an unbiased walk: the chained lemma spec (fold of per-layer
/// oracle magnitudes) and the run-level planning magnitude including the
/// boundary and any deterministic-prefix factors.
#[derive(Debug, Clone)]
struct UnbiasedPlan {
    lemma_spec: OracleSpec,
    planning_magnitude: f64,
    deterministic: bool,
}

fn plan_unbiased(layers: &[NoisyLayer], r: &PhasePoint) -> Result<UnbiasedPlan> {
    let t = layers.len();
    let mut lemma_spec = OracleSpec::exact();
    let mut det_log = 0.0f64;
    let mut point = Some(r.clone());
    if t == 0 {
        return Ok(UnbiasedPlan {
            lemma_spec,
            planning_magnitude: 1.0,
            deterministic: true,
        });
    }
    {
        let top = &layers[t - 1];
        let q1 = r.q(0);
        det_log += -top.loss.noise_strength() * q1 * q1;
        det_log += cubic_discrete_weight(top.cubic.gamma(), q1).ln();
    }
    for k in (1..=t).rev() {
        let layer = &layers[k - 1];
        let gamma_k = layer.cubic.gamma();
        let samples_here = match &point {
            Some(p) => gamma_k * p.q(0) != 0.0,
            None => gamma_k != 0.0,
        };
        if samples_here {
            let step_mag = if k >= 2 {
                let prev = &layers[k - 2];
                let c_prev = prev.loss.noise_strength();
                let gamma_prev = prev.cubic.gamma();
                if c_prev <= 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "interior noiseless layer leaves the q-tilde measure unnormalizable"
                            .into(),
                    ));
                }
                let a = layer.loss.eta().sqrt() * layer.gaussian.s_inv()[(0, 1)];
                if a == 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "zero symplectic coherence in a sampled layer".into(),
                    ));
                }
                if gamma_prev != 0.0 {
                    let big_b = (24.0 * std::f64::consts::PI * gamma_prev.abs()).sqrt();
                    gamma_quarter_magnitude(a, c_prev, big_b)
                } else {
                    shifted_gaussian_magnitude(a, c_prev)
                }
            } else {
                let c1 = layer.loss.noise_strength();
                if c1 <= 0.0 {
                    return Err(Error::EstimatorInapplicable(
                        "noiseless first layer leaves the momentum measure unnormalizable"
                            .into(),
                    ));
                }
                shifted_gaussian_magnitude(1.0, c1)
            };
            lemma_spec = chain_specs(lemma_spec, OracleSpec::unbiased(step_mag));
            point = None;
        } else if let Some(p) = point.take() {
            // deterministic step with an exactly known point
            let mut st = PathState::start(p);
            let p1 = st.point.p(0);
            st.log_mag += -layer.loss.noise_strength() * p1 * p1;
            apply_shift_and_gaussian(&mut st, layer)?;
            if k >= 2 {
                let prev = &layers[k - 2];
                let qt = st.point.q(0);
                st.log_mag += -prev.loss.noise_strength() * qt * qt;
                st.log_mag += cubic_discrete_weight(prev.cubic.gamma(), qt).ln();
            }
            det_log += st.log_mag;
            point = Some(st.point);
        } else {
            // gamma = 0 layer below a sampled one: the next discrete factor
            // would be an unbounded weight
            if k >= 2 && layers[k - 2].cubic.gamma() != 0.0 {
                return Err(Error::EstimatorInapplicable(
                    "zero-cubicity layer between sampled cubic layers has no bounded weight"
                        .into(),
                ));
            }
        }
    }
    Ok(UnbiasedPlan {
        planning_magnitude: det_log.exp() * lemma_spec.magnitude,
        deterministic: point.is_some(),
        lemma_spec,
    })
}

/// Run `n` independent paths, batched over deterministic RNG substreams.
fn run_paths<F>(n: u64, stream: RngStream, opts: &EstimationOptions, path: F) -> Result<Accumulator>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync,
{
    let batch = opts.batch_size.max(1);
    let batches = n.div_ceil(batch);
    let run = || -> Result<Vec<Accumulator>> {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.substream(b).rng();
                let count = batch.min(n - b * batch);
                let mut acc = Accumulator::default();
                for _ in 0..count {
                    acc.push(path(&mut rng)?);
                }
                Ok(acc)
            })
            .collect()
    };
    let parts = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };
    let mut total = Accumulator::default();
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

fn check_point(circuit: &Circuit, r: &PhasePoint) -> Result<()> {
    if r.modes() != circuit.modes() {
        return Err(Error::InvalidDimension {
            expected: 2 * circuit.modes(),
            got: r.dim(),
        });
    }
    Ok(())
}

fn exact_result(value: Complex64, algorithm: Algorithm, det_steps: usize, bias: f64) -> EstimateResult {
    EstimateResult {
        value,
        stderr: 0.0,
        samples: 1,
        algorithm,
        declared_bias: bias,
        oracle_spec: OracleSpec {
            bias,
            magnitude: value.norm().max(1.0),
        },
        lemma_magnitude: 1.0,
        deterministic_steps: det_steps,
    }
}

/// Unbiased estimator: every layer needs nonzero cubicity, nonzero inverse
/// symplectic coherence and nonzero noise; q1 = 0 takes the identity branch
/// of the discrete cubic factor.
pub fn estimate_char_unbiased(
    circuit: &Circuit,
    r: &PhasePoint,
    epsilon: f64,
    delta: f64,
    stream: RngStream,
    opts: &EstimationOptions,
) -> Result<EstimateResult> {
    check_point(circuit, r)?;
    if circuit.depth() == 0 {
        return Ok(exact_result(
            input_char(circuit.input(), r)?,
            Algorithm::Unbiased,
            0,
            0.0,
        ));
    }
    check_unbiased_applicable(circuit.layers())?;
    estimate_unbiased_tail(
        circuit.layers(),
        circuit.input(),
        r,
        epsilon,
        delta,
        stream,
        opts,
        Algorithm::Unbiased,
    )
}

#[allow(clippy::too_many_arguments)]
fn estimate_unbiased_tail(
    layers: &[NoisyLayer],
    input: &InputState,
    r: &PhasePoint,
    precision: f64,
    delta: f64,
    stream: RngStream,
    opts: &EstimationOptions,
    algorithm: Algorithm,
) -> Result<EstimateResult> {
    let plan = plan_unbiased(layers, r)?;
    if plan.deterministic {
        let mut rng = stream.rng();
        let value = unbiased_path(layers, input, r, &mut rng)?;
        let mut res = exact_result(value, algorithm, layers.len(), 0.0);
        res.lemma_magnitude = plan.lemma_spec.magnitude;
        return Ok(res);
    }
    let n = plan_samples(plan.planning_magnitude, precision, delta)?.min(opts.max_samples).max(1);
    let acc = run_paths(n, stream, opts, |rng| unbiased_path(layers, input, r, rng))?;
    Ok(EstimateResult {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: acc.count,
        algorithm,
        declared_bias: 0.0,
        oracle_spec: OracleSpec {
            bias: 0.0,
            magnitude: plan.planning_magnitude,
        },
        lemma_magnitude: plan.lemma_spec.magnitude,
        deterministic_steps: 0,
    })
}

/// Adaptive estimator (catch-all): rides the deterministic-phase branch while
/// |q1 gamma_j| < tau with tau = epsilon / (12 M L), then hands the remaining
/// layers to the unbiased walk with the other half of the budget.
pub fn estimate_char_adaptive(
    circuit: &Circuit,
    r: &PhasePoint,
    epsilon: f64,
    delta: f64,
    curvature_m: f64,
    stream: RngStream,
    opts: &EstimationOptions,
) -> Result<EstimateResult> {
    check_point(circuit, r)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if curvature_m < 0.0 {
        return Err(Error::InvalidParameter("curvature bound must be >= 0".into()));
    }
    let depth = circuit.depth();
    if depth == 0 {
        return Ok(exact_result(
            input_char(circuit.input(), r)?,
            Algorithm::Adaptive,
            0,
            0.0,
        ));
    }
    let tau = if curvature_m == 0.0 {
        f64::INFINITY
    } else {
        epsilon / (12.0 * curvature_m * depth as f64)
    };

    // deterministic prefix, layers L down to j*+1
    let mut state = PathState::start(r.clone());
    let mut j = depth;
    while j >= 1 {
        let layer = circuit.layer(j);
        let gamma = layer.cubic.gamma();
        let q1 = state.point.q(0);
        if (gamma * q1).abs() >= tau {
            break;
        }
        let c = layer.loss.noise_strength();
        let p1 = state.point.p(0);
        state.mul_unit(cubic_deterministic_phase(gamma, q1));
        state.mul_real_positive((-c * (q1 * q1 + p1 * p1)).exp());
        apply_shift_and_gaussian(&mut state, layer)?;
        j -= 1;
    }
    let det_steps = depth - j;
    let declared_bias = if curvature_m == 0.0 {
        0.0
    } else {
        6.0 * tau * curvature_m * det_steps as f64
    };
    let prefix = state.weight();

    if j == 0 {
        let chi = input_char(circuit.input(), &state.point)?;
        let mut res = exact_result(prefix * chi, Algorithm::Adaptive, det_steps, declared_bias);
        res.oracle_spec = OracleSpec {
            bias: declared_bias,
            magnitude: prefix.norm().max(1e-300),
        };
        return Ok(res);
    }

    let tail = estimate_unbiased_tail(
        &circuit.layers()[..j],
        circuit.input(),
        &state.point,
        epsilon / 2.0,
        delta,
        stream,
        opts,
        Algorithm::Adaptive,
    )?;
    Ok(EstimateResult {
        value: prefix * tail.value,
        stderr: prefix.norm() * tail.stderr,
        samples: tail.samples,
        algorithm: Algorithm::Adaptive,
        declared_bias,
        oracle_spec: OracleSpec {
            bias: declared_bias,
            magnitude: prefix.norm() * tail.oracle_spec.magnitude,
        },
        lemma_magnitude: tail.lemma_magnitude,
        deterministic_steps: det_steps,
    })
}

/// Cubicity threshold of the near-Gaussian regime:
/// (eps / 6M) sqrt((1 + 2 nbar)(1 - eta) / (2 ln 2 ln(2M / eps))).
pub fn near_gaussian_gamma_threshold(epsilon: f64, curvature_m: f64, eta: f64, nbar: f64) -> f64 {
    if curvature_m == 0.0 {
        return f64::INFINITY;
    }
    let log_arg = (2.0 * curvature_m / epsilon).ln();
    if log_arg <= 0.0 {
        return f64::INFINITY;
    }
    epsilon / (6.0 * curvature_m)
        * ((1.0 + 2.0 * nbar) * (1.0 - eta) / (2.0 * std::f64::consts::LN_2 * log_arg)).sqrt()
}

fn check_near_gaussian_regime(circuit: &Circuit, epsilon: f64, curvature_m: f64) -> Result<()> {
    for (idx, layer) in circuit.layers().iter().enumerate() {
        let gamma = layer.cubic.gamma();
        if gamma == 0.0 {
            continue;
        }
        let threshold = near_gaussian_gamma_threshold(
            epsilon,
            curvature_m,
            layer.loss.eta(),
            layer.loss.nbar(),
        );
        if gamma.abs() >= threshold {
            return Err(Error::RegimeViolation {
                layer: idx + 1,
                detail: format!(
                    "|gamma| = {} >= near-Gaussian threshold {threshold:.3e}",
                    gamma.abs()
                ),
            });
        }
    }
    Ok(())
}

/// One near-Gaussian path: biased per-layer oracle then the Gaussian adjoint.
fn near_gaussian_path(
    circuit: &Circuit,
    r: &PhasePoint,
    lambda_of: &dyn Fn(&NoisyLayer) -> f64,
    curvature_m: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Complex64> {
    let mut state = PathState::start(r.clone());
    for k in (1..=circuit.depth()).rev() {
        let layer = circuit.layer(k);
        let draw = sample_adaptive_cubic(
            layer.cubic.gamma(),
            &layer.loss,
            &state.point,
            lambda_of(layer),
            curvature_m,
            rng,
        )?;
        state.mul_complex(draw.weight);
        state.point = draw.point;
        let phase = gaussian_adjoint_phase_exponent(layer.gaussian.d(), &state.point)?;
        state.mul_unit(Complex64::new(0.0, phase).exp());
        state.point = layer.gaussian.apply_inverse(&state.point);
    }
    let chi = input_char(circuit.input(), &state.point)?;
    Ok(state.weight() * chi)
}

/// Dry-run of the near-Gaussian walk assuming every layer takes the
/// deterministic branch; returns the exact value when that holds.
fn near_gaussian_deterministic(
    circuit: &Circuit,
    r: &PhasePoint,
    lambda_of: &dyn Fn(&NoisyLayer) -> f64,
) -> Result<Option<(Complex64, usize)>> {
    let mut state = PathState::start(r.clone());
    let mut steps = 0usize;
    for k in (1..=circuit.depth()).rev() {
        let layer = circuit.layer(k);
        let gamma = layer.cubic.gamma();
        let q1 = state.point.q(0);
        if gamma != 0.0 && (gamma * q1).abs() >= lambda_of(layer) {
            return Ok(None);
        }
        let c = layer.loss.noise_strength();
        let p1 = state.point.p(0);
        state.mul_unit(cubic_deterministic_phase(gamma, q1));
        state.mul_real_positive((-c * (q1 * q1 + p1 * p1)).exp());
        apply_shift_and_gaussian(&mut state, layer)?;
        steps += 1;
    }
    let chi = input_char(circuit.input(), &state.point)?;
    Ok(Some((state.weight() * chi, steps)))
}

/// Near-Gaussian estimator: chains the biased oracle through all L layers
/// with per-layer bias eps' = eps/4, so the geometric chaining keeps the
/// total bias under eps/2 and the other half pays for sampling.
pub fn estimate_char_near_gaussian(
    circuit: &Circuit,
    r: &PhasePoint,
    epsilon: f64,
    delta: f64,
    curvature_m: f64,
    stream: RngStream,
    opts: &EstimationOptions,
) -> Result<EstimateResult> {
    check_point(circuit, r)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if curvature_m < 0.0 {
        return Err(Error::InvalidParameter("curvature bound must be >= 0".into()));
    }
    if circuit.depth() == 0 {
        return Ok(exact_result(
            input_char(circuit.input(), r)?,
            Algorithm::NearGaussian,
            0,
            0.0,
        ));
    }
    check_near_gaussian_regime(circuit, epsilon, curvature_m)?;
    let eps_prime = epsilon / 4.0;
    let lambda_of = move |layer: &NoisyLayer| -> f64 {
        let _ = layer;
        if curvature_m == 0.0 {
            f64::INFINITY
        } else {
            eps_prime / (6.0 * curvature_m)
        }
    };

    // chained specs: lemma-level (per-layer case-2 magnitude) and declared
    // (deterministic branch bounded by 1)
    let mut lemma_spec = OracleSpec::exact();
    let mut declared = OracleSpec::exact();
    for layer in circuit.layers() {
        let gamma = layer.cubic.gamma();
        if gamma == 0.0 {
            continue;
        }
        let lambda = lambda_of(layer);
        let d_layer = adaptive_case2_magnitude(gamma, lambda, &layer.loss);
        lemma_spec = chain_specs(lemma_spec, OracleSpec { bias: eps_prime, magnitude: d_layer });
        declared = chain_specs(
            declared,
            OracleSpec {
                bias: eps_prime,
                magnitude: d_layer.max(1.0),
            },
        );
    }

    // The bias ledger follows the chaining lemma with the per-layer lemma
    // magnitudes; the declared run-level magnitude keeps the deterministic
    // branch's bound of 1 per layer.
    if let Some((value, steps)) = near_gaussian_deterministic(circuit, r, &lambda_of)? {
        return Ok(EstimateResult {
            value,
            stderr: 0.0,
            samples: 1,
            algorithm: Algorithm::NearGaussian,
            declared_bias: lemma_spec.bias,
            oracle_spec: OracleSpec {
                bias: lemma_spec.bias,
                magnitude: declared.magnitude.max(value.norm()),
            },
            lemma_magnitude: lemma_spec.magnitude,
            deterministic_steps: steps,
        });
    }

    let n = plan_samples(declared.magnitude, epsilon / 2.0, delta)?
        .min(opts.max_samples)
        .max(1);
    let acc = run_paths(n, stream, opts, |rng| {
        near_gaussian_path(circuit, r, &lambda_of, curvature_m, rng)
    })?;
    Ok(EstimateResult {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: acc.count,
        algorithm: Algorithm::NearGaussian,
        declared_bias: lemma_spec.bias,
        oracle_spec: OracleSpec {
            bias: lemma_spec.bias,
            magnitude: declared.magnitude,
        },
        lemma_magnitude: lemma_spec.magnitude,
        deterministic_steps: 0,
    })
}

/// Estimator dispatch: near-Gaussian when its cubicity threshold certifiably
/// holds, adaptive otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorChoice {
    pub algorithm: Algorithm,
    pub rationale: String,
    pub d_eps: Option<f64>,
    pub c2: Option<f64>,
}

pub fn select_estimator(
    circuit: &Circuit,
    epsilon: f64,
    curvature_m: Option<f64>,
) -> EstimatorChoice {
    if circuit.depth() == 0 {
        return EstimatorChoice {
            algorithm: Algorithm::Adaptive,
            rationale: "empty circuit: the estimate is the input characteristic function".into(),
            d_eps: None,
            c2: None,
        };
    }
    let coeffs = curvature_m
        .and_then(|m| crate::regimes::contraction_coefficients(circuit, m, epsilon).ok());
    let (d_eps, c2) = coeffs
        .as_ref()
        .map(|r| (Some(r.d_eps), Some(r.c2)))
        .unwrap_or((None, None));
    match curvature_m {
        Some(m) => {
            if check_near_gaussian_regime(circuit, epsilon, m).is_ok() {
                EstimatorChoice {
                    algorithm: Algorithm::NearGaussian,
                    rationale: format!(
                        "all cubicities below the near-Gaussian threshold (d_eps = {:?})",
                        d_eps
                    ),
                    d_eps,
                    c2,
                }
            } else {
                EstimatorChoice {
                    algorithm: Algorithm::Adaptive,
                    rationale: format!(
                        "near-Gaussian threshold violated; adaptive walk with c2 = {:?}",
                        c2
                    ),
                    d_eps,
                    c2,
                }
            }
        }
        None => EstimatorChoice {
            algorithm: Algorithm::Adaptive,
            rationale: "no curvature bound supplied; the adaptive walk is the catch-all".into(),
            d_eps,
            c2,
        },
    }
}

/// Exact closed-form propagation for circuits with all cubicities zero:
/// the composition of thermal and Gaussian adjoint actions on D(r).
pub fn gaussian_circuit_char(circuit: &Circuit, r: &PhasePoint) -> Result<Complex64> {
    check_point(circuit, r)?;
    for (idx, layer) in circuit.layers().iter().enumerate() {
        if layer.cubic.gamma() != 0.0 {
            return Err(Error::EstimatorInapplicable(format!(
                "layer {} has nonzero cubicity; not a Gaussian circuit",
                idx + 1
            )));
        }
    }
    let mut state = PathState::start(r.clone());
    for k in (1..=circuit.depth()).rev() {
        let layer = circuit.layer(k);
        let c = layer.loss.noise_strength();
        let q1 = state.point.q(0);
        let p1 = state.point.p(0);
        state.mul_real_positive((-c * (q1 * q1 + p1 * p1)).exp());
        apply_shift_and_gaussian(&mut state, layer)?;
    }
    Ok(state.weight() * input_char(circuit.input(), &state.point)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{thermal_adjoint_on_displacement, CubicGate, ThermalLoss, WeightedDisplacement};
    use crate::channels::gaussian_adjoint_on_displacement;
    use crate::phase_space::SymplecticGaussian;
    use ndarray::{array, Array1};

    fn rotation(theta: f64) -> SymplecticGaussian {
        let s = array![[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]];
        SymplecticGaussian::new(s, Array1::zeros(2)).unwrap()
    }

    fn reference_circuit(depth: usize, gamma: f64) -> Circuit {
        let layers = (0..depth)
            .map(|_| NoisyLayer {
                gaussian: rotation(0.7),
                loss: ThermalLoss::new(0.7, 0.3).unwrap(),
                cubic: CubicGate::new(gamma).unwrap(),
            })
            .collect();
        Circuit::new(1, layers, InputState::Vacuum { modes: 1 }).unwrap()
    }

    #[test]
    fn zero_depth_estimators_return_input_char() {
        let circuit = Circuit::new(1, vec![], InputState::Vacuum { modes: 1 }).unwrap();
        let r = PhasePoint::new(vec![0.4, -0.3]).unwrap();
        let want = input_char(circuit.input(), &r).unwrap();
        let opts = EstimationOptions::default();
        let stream = RngStream::new(0, 0);
        for res in [
            estimate_char_unbiased(&circuit, &r, 1e-2, 0.05, stream, &opts).unwrap(),
            estimate_char_adaptive(&circuit, &r, 1e-2, 0.05, 1.0, stream, &opts).unwrap(),
            estimate_char_near_gaussian(&circuit, &r, 1e-2, 0.05, 1.0, stream, &opts).unwrap(),
        ] {
            assert_eq!(res.value, want);
            assert_eq!(res.stderr, 0.0);
            assert_eq!(res.samples, 1);
        }
    }

    #[test]
    fn unbiased_rejects_zero_cubicity() {
        let circuit = reference_circuit(1, 0.0);
        let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            estimate_char_unbiased(
                &circuit,
                &r,
                1e-2,
                0.05,
                RngStream::new(0, 0),
                &EstimationOptions::default()
            ),
            Err(Error::EstimatorInapplicable(_))
        ));
    }

    #[test]
    fn unbiased_rejects_zero_symplectic_coherence() {
        let shear = SymplecticGaussian::new(array![[1.0, 0.0], [0.8, 1.0]], Array1::zeros(2)).unwrap();
        let layers = vec![NoisyLayer {
            gaussian: shear,
            loss: ThermalLoss::new(0.7, 0.3).unwrap(),
            cubic: CubicGate::new(0.2).unwrap(),
        }];
        let circuit = Circuit::new(1, layers, InputState::Vacuum { modes: 1 }).unwrap();
        let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            estimate_char_unbiased(
                &circuit,
                &r,
                1e-2,
                0.05,
                RngStream::new(0, 0),
                &EstimationOptions::default()
            ),
            Err(Error::EstimatorInapplicable(_))
        ));
    }

    #[test]
    fn lemma_magnitude_is_product_of_per_layer_values() {
        let depth = 10;
        let circuit = reference_circuit(depth, 0.2);
        let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
        let plan = plan_unbiased(circuit.layers(), &r).unwrap();
        // analytic product: A_1 ... A_t from the oracle lemmas
        let c = (0.5f64 + 0.3) * (1.0 - 0.7);
        let eta: f64 = 0.7;
        let sigma_inv = 0.7f64.sin();
        let a1 = (std::f64::consts::PI / c).sqrt();
        let aj = crate::special::GAMMA_QUARTER
            / (sigma_inv
                * (24.0 * std::f64::consts::PI * eta * 0.2).sqrt()
                * c.powf(0.25));
        let want = a1 * aj.powi(depth as i32 - 1);
        assert!(
            (plan.lemma_spec.magnitude - want).abs() < 1e-12 * want,
            "{} vs {}",
            plan.lemma_spec.magnitude,
            want
        );
    }

    #[test]
    fn unbiased_planning_magnitude_includes_boundary() {
        let circuit = reference_circuit(1, 0.2);
        let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
        let plan = plan_unbiased(circuit.layers(), &r).unwrap();
        let c = (0.5f64 + 0.3) * (1.0 - 0.7);
        let boundary = cubic_discrete_weight(0.2, 1.0) * (-c).exp();
        let a1 = (std::f64::consts::PI / c).sqrt();
        assert!((plan.planning_magnitude - boundary * a1).abs() < 1e-12);
    }

    #[test]
    fn unbiased_weights_respect_declared_magnitude() {
        let circuit = reference_circuit(3, 0.2);
        let r = PhasePoint::new(vec![0.8, -0.4]).unwrap();
        let plan = plan_unbiased(circuit.layers(), &r).unwrap();
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..2000 {
            let x = unbiased_path(circuit.layers(), circuit.input(), &r, &mut rng).unwrap();
            assert!(
                x.norm() <= plan.planning_magnitude + 1e-9,
                "path weight {} exceeds plan {}",
                x.norm(),
                plan.planning_magnitude
            );
        }
    }

    #[test]
    fn gaussian_only_circuit_is_deterministic_and_matches_channel_composition() {
        let layers = vec![
            NoisyLayer {
                gaussian: rotation(0.4),
                loss: ThermalLoss::new(0.8, 0.5).unwrap(),
                cubic: CubicGate::new(0.0).unwrap(),
            },
            NoisyLayer {
                gaussian: rotation(-0.9),
                loss: ThermalLoss::new(0.6, 0.0).unwrap(),
                cubic: CubicGate::new(0.0).unwrap(),
            },
        ];
        let circuit =
            Circuit::new(1, layers.clone(), InputState::Vacuum { modes: 1 }).unwrap();
        let r = PhasePoint::new(vec![0.9, -0.2]).unwrap();
        let direct = gaussian_circuit_char(&circuit, &r).unwrap();

        // channel-module composition
        let mut wd = WeightedDisplacement::unit(r.clone());
        for layer in layers.iter().rev() {
            wd = thermal_adjoint_on_displacement(&layer.loss, &wd, 0).unwrap();
            wd = gaussian_adjoint_on_displacement(&layer.gaussian, &wd).unwrap();
        }
        let chi = input_char(circuit.input(), &wd.point).unwrap();
        let composed = wd.weight * chi;
        assert!((direct - composed).norm() < 1e-12);

        // both the adaptive and near-Gaussian estimators are deterministic here
        let opts = EstimationOptions::default();
        let adaptive = estimate_char_adaptive(
            &circuit, &r, 1e-3, 0.05, 1.0, RngStream::new(0, 0), &opts,
        )
        .unwrap();
        assert_eq!(adaptive.stderr, 0.0);
        assert!((adaptive.value - composed).norm() < 1e-12);
        let ng = estimate_char_near_gaussian(
            &circuit, &r, 1e-3, 0.05, 1.0, RngStream::new(0, 0), &opts,
        )
        .unwrap();
        assert_eq!(ng.stderr, 0.0);
        assert!((ng.value - composed).norm() < 1e-12);
    }

    #[test]
    fn adaptive_all_deterministic_walk_has_zero_stderr() {
        // q1 = 0 and small gamma: |q1 gamma| = 0 < tau at the first layer;
        // subsequent q1 values stay small enough for the default tau
        let circuit = reference_circuit(1, 0.2);
        let r = PhasePoint::new(vec![0.0, 0.5]).unwrap();
        let res = estimate_char_adaptive(
            &circuit,
            &r,
            5e-3,
            0.05,
            3.0,
            RngStream::new(1, 0),
            &EstimationOptions::default(),
        )
        .unwrap();
        assert_eq!(res.deterministic_steps, 1);
        assert_eq!(res.stderr, 0.0);
        assert_eq!(res.samples, 1);
        assert!(res.declared_bias <= 6.0 * (5e-3 / (12.0 * 3.0)) * 3.0);
    }

    #[test]
    fn adaptive_bias_ledger_counts_deterministic_steps() {
        let circuit = reference_circuit(4, 1e-4);
        let r = PhasePoint::new(vec![0.3, 0.1]).unwrap();
        let eps = 1e-2;
        let m = 2.0;
        let res = estimate_char_adaptive(
            &circuit,
            &r,
            eps,
            0.05,
            m,
            RngStream::new(1, 0),
            &EstimationOptions::default(),
        )
        .unwrap();
        let tau = eps / (12.0 * m * 4.0);
        assert_eq!(
            res.declared_bias,
            6.0 * tau * m * res.deterministic_steps as f64
        );
        assert_eq!(res.deterministic_steps, 4); // gamma tiny: all deterministic
    }

    #[test]
    fn adaptive_switches_to_sampling_above_threshold() {
        let circuit = reference_circuit(1, 0.2);
        let r = PhasePoint::new(vec![1e-2, 0.5]).unwrap();
        let eps = 5e-3;
        let m = 3.0;
        // |q1 gamma| = 2e-3 > tau = eps/(12 M L) = 1.39e-4
        let res = estimate_char_adaptive(
            &circuit,
            &r,
            eps,
            0.05,
            m,
            RngStream::new(2, 0),
            &EstimationOptions {
                max_samples: 50_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.deterministic_steps, 0);
        assert!(res.samples > 1);
        assert_eq!(res.declared_bias, 0.0);
    }

    #[test]
    fn near_gaussian_regime_violation_names_layer() {
        let circuit = reference_circuit(2, 0.2);
        let r = PhasePoint::new(vec![0.5, 0.5]).unwrap();
        let err = estimate_char_near_gaussian(
            &circuit,
            &r,
            1e-2,
            0.05,
            2.0,
            RngStream::new(0, 0),
            &EstimationOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::RegimeViolation { layer, .. } => assert_eq!(layer, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn near_gaussian_lemma_magnitude_is_contractive_power() {
        let depth = 5;
        let circuit = reference_circuit(depth, 1e-3);
        let r = PhasePoint::new(vec![0.5, 0.5]).unwrap();
        let eps = 0.2;
        let m = 1.5;
        let res = estimate_char_near_gaussian(
            &circuit,
            &r,
            eps,
            0.05,
            m,
            RngStream::new(3, 0),
            &EstimationOptions::default(),
        )
        .unwrap();
        let lambda = eps / 4.0 / (6.0 * m);
        let loss = ThermalLoss::new(0.7, 0.3).unwrap();
        let d = adaptive_case2_magnitude(1e-3, lambda, &loss);
        assert!(d < 0.5, "per-layer magnitude {d} not below 1/2");
        assert!(
            (res.lemma_magnitude - d.powi(depth as i32)).abs()
                <= 1e-12 * res.lemma_magnitude.max(1e-30)
        );
        let eps_prime = eps / 4.0;
        assert!(res.declared_bias <= eps_prime / (1.0 - d) + 1e-12);
        assert!(res.declared_bias <= 2.0 * eps_prime);
    }

    #[test]
    fn estimator_selection_is_deterministic() {
        let tiny = reference_circuit(3, 1e-6);
        let big = reference_circuit(3, 1.0);
        let a = select_estimator(&tiny, 0.1, Some(1.0));
        let b = select_estimator(&tiny, 0.1, Some(1.0));
        assert_eq!(a.algorithm, b.algorithm);
        assert_eq!(a.algorithm, Algorithm::NearGaussian);
        let c = select_estimator(&big, 0.1, Some(1.0));
        assert_eq!(c.algorithm, Algorithm::Adaptive);
        let d = select_estimator(&big, 0.1, None);
        assert_eq!(d.algorithm, Algorithm::Adaptive);
    }

    #[test]
    fn runs_are_reproducible_across_worker_counts() {
        let circuit = reference_circuit(2, 0.2);
        let r = PhasePoint::new(vec![0.9, -0.1]).unwrap();
        let run = |workers: usize| {
            estimate_char_unbiased(
                &circuit,
                &r,
                0.05,
                0.05,
                RngStream::new(11, 0),
                &EstimationOptions {
                    max_samples: 20_000,
                    workers,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let a = run(1);
        let b = run(2);
        assert_eq!(a.value, b.value);
        assert_eq!(a.stderr, b.stderr);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn unbiased_and_adaptive_agree_within_combined_errors() {
        let circuit = reference_circuit(1, 0.2);
        let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
        let opts = EstimationOptions {
            max_samples: 60_000,
            ..Default::default()
        };
        let mut agree = 0;
        let trials = 60;
        for seed in 0..trials {
            let a = estimate_char_unbiased(&circuit, &r, 2e-2, 0.05, RngStream::new(seed, 0), &opts)
                .unwrap();
            let b = estimate_char_adaptive(
                &circuit,
                &r,
                2e-2,
                0.05,
                3.0,
                RngStream::new(seed, 1000),
                &opts,
            )
            .unwrap();
            let tol = 3.0 * (a.stderr + b.stderr) + a.declared_bias + b.declared_bias;
            if (a.value - b.value).norm() <= tol {
                agree += 1;
            }
        }
        assert!(agree * 100 >= trials * 95, "agreement {agree}/{trials}");
    }
}
