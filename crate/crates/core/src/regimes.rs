//! Contraction coefficients, concentration and overlap-decay bounds, the
//! curvature bound feeding the adaptive estimators, regime classification,
//! and phase-diagram grids.

use serde::Serialize;

use crate::channels::{Circuit, ThermalLoss};
use crate::error::{Error, Result};
use crate::phase_space::{InputState, PhasePoint};
use crate::special::{ln_gamma, GAMMA_QUARTER};

const SQRT_24PI: f64 = 8.683215054699211; // sqrt(24 pi)

/// Depth constant in the concentration predicate L >= c * m.
pub const DEFAULT_DEPTH_CONSTANT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeTag {
    TrivialConcentration,
    EfficientC2,
    EfficientShallow,
    EfficientNearGaussian,
    Unclassified,
}

/// The three contraction coefficients of a circuit plus the raw quantities
/// they are built from.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub c1: f64,
    pub c2: f64,
    pub d_eps: f64,
    /// The appendix variant of d_eps carrying the extra factor 1/2; reported
    /// alongside, never silently reconciled.
    pub d_eps_appendix: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub sigma_min: f64,
    pub sigma_inv_min: f64,
    pub curvature_m: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub nbar: f64,
    pub regime: RegimeTag,
    pub notes: Vec<String>,
}

fn uniform_loss(circuit: &Circuit) -> Result<ThermalLoss> {
    let layers = circuit.layers();
    if layers.is_empty() {
        return Err(Error::InvalidParameter(
            "contraction coefficients need at least one layer".into(),
        ));
    }
    let first = layers[0].loss;
    for layer in layers {
        if layer.loss.eta() != first.eta() || layer.loss.nbar() != first.nbar() {
            return Err(Error::InvalidParameter(
                "contraction coefficients assume a uniform thermal-loss channel".into(),
            ));
        }
    }
    Ok(first)
}

/// c1 as a function of the raw quantities; sigma here is sigma_min.
pub fn c1_from_parts(sigma_min: f64, gamma_min: f64, eta: f64, nbar: f64) -> f64 {
    let c = (0.5 + nbar) * (1.0 - eta);
    GAMMA_QUARTER / (sigma_min * eta.powf(0.25) * SQRT_24PI * gamma_min.sqrt() * c.powf(0.25))
}

pub fn c2_from_parts(sigma_inv_min: f64, gamma_min: f64, eta: f64, nbar: f64) -> f64 {
    let c = (0.5 + nbar) * (1.0 - eta);
    GAMMA_QUARTER / (sigma_inv_min * eta.sqrt() * SQRT_24PI * gamma_min.sqrt() * c.powf(0.25))
}

/// Appendix grouping of c2 with eta inside the root; algebraically equal to
/// `c2_from_parts` and unit-tested against it.
pub fn c2_appendix_grouping(sigma_inv_min: f64, gamma_min: f64, eta: f64, nbar: f64) -> f64 {
    let c = (0.5 + nbar) * (1.0 - eta);
    GAMMA_QUARTER
        / (sigma_inv_min * (24.0 * std::f64::consts::PI * eta * gamma_min).sqrt() * c.powf(0.25))
}

pub fn d_eps_from_parts(gamma_max: f64, curvature_m: f64, epsilon: f64, eta: f64, nbar: f64) -> f64 {
    if curvature_m == 0.0 || gamma_max == 0.0 {
        return 0.0;
    }
    let c = (0.5 + nbar) * (1.0 - eta);
    (curvature_m / epsilon).sqrt()
        * (-c * epsilon * epsilon / (36.0 * curvature_m * curvature_m * gamma_max * gamma_max))
            .exp()
}

/// Evaluate the contraction coefficients for a circuit.
pub fn contraction_coefficients(
    circuit: &Circuit,
    curvature_m: f64,
    epsilon: f64,
) -> Result<ContractionReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if curvature_m < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "curvature bound must be >= 0, got {curvature_m}"
        )));
    }
    let loss = uniform_loss(circuit)?;
    let eta = loss.eta();
    let nbar = loss.nbar();
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::BoundaryRegime { eta });
    }
    let gamma_min = circuit.gamma_min().unwrap();
    let gamma_max = circuit.gamma_max().unwrap();
    let sigma_min = circuit.sigma_min().unwrap();
    let sigma_inv_min = circuit.sigma_inv_min().unwrap();
    let mut notes = Vec::new();
    if gamma_min == 0.0 {
        notes.push("c1/c2 diverge: some layer has zero cubicity".to_string());
    }
    if sigma_min == 0.0 || sigma_inv_min == 0.0 {
        notes.push("c1/c2 diverge: some layer has zero symplectic coherence".to_string());
    }
    let c1 = if gamma_min == 0.0 || sigma_min == 0.0 {
        f64::INFINITY
    } else {
        c1_from_parts(sigma_min, gamma_min, eta, nbar)
    };
    let c2 = if gamma_min == 0.0 || sigma_inv_min == 0.0 {
        f64::INFINITY
    } else {
        c2_from_parts(sigma_inv_min, gamma_min, eta, nbar)
    };
    let d_eps = d_eps_from_parts(gamma_max, curvature_m, epsilon, eta, nbar);
    Ok(ContractionReport {
        c1,
        c2,
        d_eps,
        d_eps_appendix: 0.5 * d_eps,
        gamma_min,
        gamma_max,
        sigma_min,
        sigma_inv_min,
        curvature_m,
        epsilon,
        eta,
        nbar,
        regime: RegimeTag::Unclassified,
        notes,
    })
}

/// Classify the circuit per the concentration / simulability predicates.
/// Returns the tag and a one-line justification.
pub fn classify_regime(
    report: &ContractionReport,
    depth: usize,
    modes: usize,
    depth_constant: f64,
) -> (RegimeTag, String) {
    let shallow_cutoff = ((modes as f64 + 1.0).log2().ceil() as usize).max(1);
    if report.c1 < 1.0 && (depth as f64) >= depth_constant * modes as f64 {
        return (
            RegimeTag::TrivialConcentration,
            format!(
                "c1 = {:.4} < 1 and L = {depth} >= {depth_constant} * m: expectation values \
                 concentrate exponentially to zero",
                report.c1
            ),
        );
    }
    if report.c2 < 1.0 {
        return (
            RegimeTag::EfficientC2,
            format!(
                "c2 = {:.4} < 1: displacement propagation contracts layer by layer \
                 for any polynomial depth",
                report.c2
            ),
        );
    }
    if depth <= shallow_cutoff {
        return (
            RegimeTag::EfficientShallow,
            format!(
                "L = {depth} <= ceil(log2(m+1)) = {shallow_cutoff}: shallow circuit, \
                 magnitude growth c2^L stays polynomial"
            ),
        );
    }
    if report.d_eps < 1.0 {
        return (
            RegimeTag::EfficientNearGaussian,
            format!(
                "d_eps = {:.4} < 1: the biased per-layer oracle contracts",
                report.d_eps
            ),
        );
    }
    (
        RegimeTag::Unclassified,
        "no simulability predicate matched; the circuit is potentially hard".to_string(),
    )
}

/// Concentration bound for vacuum input:
/// 2^m ((1/2+nbar)(1-eta))^(-1/2) / (sqrt(2) sigma_L sqrt(eta)) * c1^(L-1)
/// * trace_norm, evaluated in log space.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationBound {
    pub bound: f64,
    pub log_bound: f64,
    pub c1: f64,
    /// False when the vacuum-input hypothesis is violated; the bound is still
    /// emitted but is not rigorous.
    pub hypothesis_ok: bool,
}

pub fn concentration_bound(circuit: &Circuit, trace_norm_bound: f64) -> Result<ConcentrationBound> {
    if !(trace_norm_bound > 0.0) {
        return Err(Error::InvalidParameter(
            "trace-norm bound must be positive".into(),
        ));
    }
    let loss = uniform_loss(circuit)?;
    let eta = loss.eta();
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::BoundaryRegime { eta });
    }
    let depth = circuit.depth();
    let gamma_min = circuit.gamma_min().unwrap();
    let sigma_min = circuit.sigma_min().unwrap();
    if gamma_min == 0.0 || sigma_min == 0.0 {
        return Err(Error::InvalidParameter(
            "concentration bound needs nonzero cubicity and symplectic coherence".into(),
        ));
    }
    let sigma_last = circuit.layers().last().unwrap().gaussian.sigma();
    if sigma_last == 0.0 {
        return Err(Error::InvalidParameter(
            "final layer has zero symplectic coherence".into(),
        ));
    }
    let c = (0.5 + loss.nbar()) * (1.0 - eta);
    let c1 = c1_from_parts(sigma_min, gamma_min, eta, loss.nbar());
    let log_bound = circuit.modes() as f64 * 2f64.ln() - 0.5 * c.ln()
        - (2f64.sqrt() * sigma_last * eta.sqrt()).ln()
        + (depth as f64 - 1.0) * c1.ln()
        + trace_norm_bound.ln();
    let hypothesis_ok = matches!(circuit.input(), InputState::Vacuum { .. });
    Ok(ConcentrationBound {
        bound: log_bound.exp(),
        log_bound,
        c1,
        hypothesis_ok,
    })
}

/// Overlap decay under a uniform thermal layer:
/// |Tr[Lambda^(x m)(rho) sigma]| <= sqrt(tau^m / m! + exp(-2 p tau)),
/// p = nbar (1 - eta), plus the value at the optimized tau = 0.9 m / e.
#[derive(Debug, Clone, Serialize)]
pub struct PurityOverlapBound {
    pub bound: f64,
    pub optimized_tau: f64,
    pub optimized_bound: f64,
    pub noise_rate: f64,
    /// True when the bound is >= 1 and therefore says nothing.
    pub vacuous: bool,
}

pub fn purity_overlap_bound(
    modes: usize,
    nbar: f64,
    eta: f64,
    tau: f64,
) -> Result<PurityOverlapBound> {
    if modes == 0 {
        return Err(Error::InvalidDimension { expected: 1, got: 0 });
    }
    if tau < 0.0 || nbar < 0.0 || !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(
            "need tau >= 0, nbar >= 0, eta in [0,1]".into(),
        ));
    }
    let p = nbar * (1.0 - eta);
    let eval = |tau: f64| -> f64 {
        let m = modes as f64;
        let ball = if tau == 0.0 {
            0.0
        } else {
            (m * tau.ln() - ln_gamma(m + 1.0)).exp()
        };
        (ball + (-2.0 * p * tau).exp()).sqrt()
    };
    let optimized_tau = 0.9 * std::f64::consts::E.recip() * modes as f64;
    let bound = eval(tau);
    let optimized_bound = eval(optimized_tau);
    Ok(PurityOverlapBound {
        bound,
        optimized_tau,
        optimized_bound,
        noise_rate: p,
        vacuous: bound >= 1.0,
    })
}

/// First four position moments of the lossy mode: <q>, <q^2>, <q^3>, <q^4>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl QuadratureMoments {
    pub fn vacuum() -> Self {
        Self { m1: 0.0, m2: 1.0, m3: 0.0, m4: 3.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.m2 < 0.0 || self.m4 < 0.0 {
            return Err(Error::InvalidMoments(
                "even moments must be nonnegative".into(),
            ));
        }
        if self.m2 * self.m2 > self.m4 * (1.0 + 1e-9) {
            return Err(Error::InvalidMoments(format!(
                "<q^2>^2 = {} exceeds <q^4> = {}",
                self.m2 * self.m2,
                self.m4
            )));
        }
        Ok(())
    }

    /// <(q + u)^2>
    fn shifted_m2(&self, u: f64) -> f64 {
        self.m2 + 2.0 * u * self.m1 + u * u
    }

    /// <(q + u)^4>
    fn shifted_m4(&self, u: f64) -> f64 {
        self.m4 + 4.0 * u * self.m3 + 6.0 * u * u * self.m2 + 4.0 * u.powi(3) * self.m1 + u.powi(4)
    }
}

/// Pointwise curvature envelope: a bound on
/// |d^2/dp1^2 Tr[D(r) Lambda(rho)]| at the mode-1 coordinates of `r`, built
/// from the first four position moments of rho. Differentiating
/// exp(-c(q1^2+p1^2)) D(sqrt(eta) r) twice in p1 leaves the operator
/// polynomial s0 + s1 qhat + s2 qhat^2; each trace term is bounded through
/// the symmetrized second moment, which brings in the moments of q shifted
/// by 2 sqrt(eta) q1.
pub fn curvature_envelope_at(
    moments: &QuadratureMoments,
    loss: &ThermalLoss,
    r: &PhasePoint,
) -> Result<f64> {
    moments.validate()?;
    let c = loss.noise_strength();
    let eta = loss.eta();
    let q1 = r.q(0);
    let p1 = r.p(0);
    let u = 2.0 * eta.sqrt() * q1;
    let damping = (-c * (q1 * q1 + p1 * p1)).exp();
    let s0_re = 4.0 * c * c * p1 * p1 - 2.0 * c - eta * eta * q1 * q1;
    let s0_im = 4.0 * c * eta * p1 * q1;
    let s0 = (s0_re * s0_re + s0_im * s0_im).sqrt();
    let s1 = 2.0 * eta.sqrt() * (4.0 * c * c * p1 * p1 + eta * eta * q1 * q1).sqrt();
    let t1 = (0.5 * (moments.m2 + moments.shifted_m2(u))).max(0.0).sqrt();
    let t2 = (0.5 * (moments.m4 + moments.shifted_m4(u))).max(0.0).sqrt();
    Ok(damping * (s0 + s1 * t1 + eta * t2))
}

/// Curvature bound M: sup of the envelope over a centered 81 x 81 grid of
/// half-width 10 max(1, sqrt(<q^2>)), plus, while the Gaussian damping is
/// active, a radial tail sweep out to 50x that radius.
pub fn curvature_bound(moments: &QuadratureMoments, loss: &ThermalLoss) -> Result<f64> {
    moments.validate()?;
    let radius = 10.0 * moments.m2.sqrt().max(1.0);
    let steps = 81usize;
    let mut best = 0.0f64;
    for i in 0..steps {
        for j in 0..steps {
            let q = -radius + 2.0 * radius * i as f64 / (steps - 1) as f64;
            let p = -radius + 2.0 * radius * j as f64 / (steps - 1) as f64;
            let r = PhasePoint::new(vec![q, p])?;
            best = best.max(curvature_envelope_at(moments, loss, &r)?);
        }
    }
    if loss.noise_strength() > 0.0 {
        let mut s = radius;
        while s <= radius * 50.0 {
            s *= 1.05;
            for (q, p) in [(s, 0.0), (0.0, s), (s / 2f64.sqrt(), s / 2f64.sqrt())] {
                let r = PhasePoint::new(vec![q, p])?;
                best = best.max(curvature_envelope_at(moments, loss, &r)?);
            }
        }
    }
    Ok(best)
}

/// Which coefficient a phase diagram sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientKind {
    C1,
    C2,
    DEps,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidGrid("axis needs at least one point".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        if !(self.max > self.min) {
            return Err(Error::InvalidGrid(format!(
                "degenerate axis span [{}, {}]",
                self.min, self.max
            )));
        }
        Ok((0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect())
    }
}

/// Grid request: eta along rows; the resource axis is sqrt(gamma) * sigma for
/// c1/c2 and gamma itself for d_eps.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramSpec {
    pub coefficient: CoefficientKind,
    pub eta: AxisSpec,
    pub resource: AxisSpec,
    pub nbar: f64,
    pub curvature_m: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramGrid {
    pub coefficient: CoefficientKind,
    pub eta_values: Vec<f64>,
    pub resource_values: Vec<f64>,
    /// values[i][j] = coefficient at (eta_values[i], resource_values[j])
    pub values: Vec<Vec<f64>>,
    /// Per-eta-row crossing of the level set {coefficient = 1}, linearly
    /// interpolated along the resource axis; None when the row never crosses.
    pub contour: Vec<Option<(f64, f64)>>,
}

pub fn phase_diagram_grid(spec: &PhaseDiagramSpec) -> Result<PhaseDiagramGrid> {
    let eta_values = spec.eta.values()?;
    let resource_values = spec.resource.values()?;
    for &eta in &eta_values {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::BoundaryRegime { eta });
        }
    }
    if spec.coefficient == CoefficientKind::DEps && !(spec.epsilon > 0.0) {
        return Err(Error::InvalidParameter("d_eps grid needs epsilon > 0".into()));
    }
    let eval = |eta: f64, x: f64| -> f64 {
        match spec.coefficient {
            // x = sqrt(gamma_min) sigma folds into the single prefactor slot
            CoefficientKind::C1 => c1_from_parts(x, 1.0, eta, spec.nbar),
            CoefficientKind::C2 => c2_from_parts(x, 1.0, eta, spec.nbar),
            CoefficientKind::DEps => {
                d_eps_from_parts(x, spec.curvature_m, spec.epsilon, eta, spec.nbar)
            }
        }
    };
    let mut values = Vec::with_capacity(eta_values.len());
    let mut contour = Vec::with_capacity(eta_values.len());
    for &eta in &eta_values {
        let row: Vec<f64> = resource_values.iter().map(|&x| eval(eta, x)).collect();
        let mut crossing = None;
        for w in 0..row.len().saturating_sub(1) {
            let (a, b) = (row[w] - 1.0, row[w + 1] - 1.0);
            if a == 0.0 {
                crossing = Some((eta, resource_values[w]));
                break;
            }
            if a * b < 0.0 {
                let frac = a / (a - b);
                let x = resource_values[w] + frac * (resource_values[w + 1] - resource_values[w]);
                crossing = Some((eta, x));
                break;
            }
        }
        values.push(row);
        contour.push(crossing);
    }
    Ok(PhaseDiagramGrid {
        coefficient: spec.coefficient,
        eta_values,
        resource_values,
        values,
        contour,
    })
}
