//! Exact action of Gaussian unitaries, thermal loss, and cubic phase gates
//! on displacement operators, in the adjoint (Heisenberg) and forward
//! directions, plus the per-layer decomposition into elementary linear maps
//! that the Monte Carlo samplers walk through.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::{symplectic_form, InputState, PhasePoint, SymplecticGaussian};

/// A complex weight attached to a phase-space point; the unit of propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDisplacement {
    pub weight: Complex64,
    pub point: PhasePoint,
}

impl WeightedDisplacement {
    pub fn unit(point: PhasePoint) -> Self {
        Self {
            weight: Complex64::new(1.0, 0.0),
            point,
        }
    }
}

/// Thermal loss channel with transmissivity eta and mean thermal photons nbar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalLoss {
    eta: f64,
    nbar: f64,
}

impl ThermalLoss {
    pub fn new(eta: f64, nbar: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "transmissivity eta must lie in (0, 1], got {eta}"
            )));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "thermal occupation nbar must be finite and >= 0, got {nbar}"
            )));
        }
        Ok(Self { eta, nbar })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// Noise strength c = (1/2 + nbar)(1 - eta); the adjoint damping is
    /// exp(-c (q^2 + p^2)) on the lossy mode.
    pub fn noise_strength(&self) -> f64 {
        (0.5 + self.nbar) * (1.0 - self.eta)
    }
}

/// Cubic phase gate exp(i gamma q1^3); acts on mode 1 by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicGate {
    gamma: f64,
}

impl CubicGate {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cubicity must be finite, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// One noisy circuit layer: cubic . thermal-loss . Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLayer {
    pub gaussian: SymplecticGaussian,
    pub loss: ThermalLoss,
    pub cubic: CubicGate,
}

/// An L-layer noisy bosonic circuit over m modes with an input-state descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    modes: usize,
    layers: Vec<NoisyLayer>,
    input: InputState,
}

impl Circuit {
    pub fn new(modes: usize, layers: Vec<NoisyLayer>, input: InputState) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidDimension { expected: 1, got: 0 });
        }
        if input.modes() != modes {
            return Err(Error::InvalidDimension {
                expected: modes,
                got: input.modes(),
            });
        }
        input.validate()?;
        for layer in &layers {
            if layer.gaussian.modes() != modes {
                return Err(Error::InvalidDimension {
                    expected: 2 * modes,
                    got: 2 * layer.gaussian.modes(),
                });
            }
        }
        Ok(Self {
            modes,
            layers,
            input,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[NoisyLayer] {
        &self.layers
    }

    /// Layer by 1-based index, matching the composition U_L o ... o U_1.
    pub fn layer(&self, j: usize) -> &NoisyLayer {
        &self.layers[j - 1]
    }

    pub fn input(&self) -> &InputState {
        &self.input
    }

    pub fn gamma_min(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(|l| l.cubic.gamma().abs())
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn gamma_max(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(|l| l.cubic.gamma().abs())
            .max_by(|a, b| a.total_cmp(b))
    }

    pub fn sigma_min(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(|l| l.gaussian.sigma())
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn sigma_inv_min(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(|l| l.gaussian.sigma_inv())
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// G*(D(r)) = exp(i d^T Omega r) D(S^-1 r); phase-only weight factor.
pub fn gaussian_adjoint_on_displacement(
    g: &SymplecticGaussian,
    input: &WeightedDisplacement,
) -> Result<WeightedDisplacement> {
    if input.point.modes() != g.modes() {
        return Err(Error::InvalidDimension {
            expected: 2 * g.modes(),
            got: input.point.dim(),
        });
    }
    let phase = gaussian_adjoint_phase_exponent(g.d(), &input.point)?;
    Ok(WeightedDisplacement {
        weight: input.weight * Complex64::new(0.0, phase).exp(),
        point: g.apply_inverse(&input.point),
    })
}

/// d^T Omega r, the exponent of the Gaussian adjoint phase.
pub fn gaussian_adjoint_phase_exponent(d: &Array1<f64>, r: &PhasePoint) -> Result<f64> {
    if d.len() != r.dim() {
        return Err(Error::InvalidDimension {
            expected: d.len(),
            got: r.dim(),
        });
    }
    let omega = symplectic_form(r.modes())?;
    Ok(d.dot(&omega.dot(&r.to_array())))
}

/// Lambda*(D(r)): the lossy mode's coordinates scale by sqrt(eta) and the
/// weight picks up exp(-(1 + 2 nbar)(1 - eta)(q^2 + p^2)/2).
pub fn thermal_adjoint_on_displacement(
    t: &ThermalLoss,
    input: &WeightedDisplacement,
    mode: usize,
) -> Result<WeightedDisplacement> {
    if mode >= input.point.modes() {
        return Err(Error::InvalidDimension {
            expected: input.point.modes(),
            got: mode + 1,
        });
    }
    let q = input.point.q(mode);
    let p = input.point.p(mode);
    let damping = (-t.noise_strength() * (q * q + p * p)).exp();
    let mut point = input.point.clone();
    let root_eta = t.eta().sqrt();
    point.set_q(mode, q * root_eta);
    point.set_p(mode, p * root_eta);
    Ok(WeightedDisplacement {
        weight: input.weight * damping,
        point,
    })
}

/// Lambda(D(r)) = (1/eta) exp(-(1 + 2 nbar)(1/eta - 1)(q^2 + p^2)/2) D(r/sqrt(eta)).
pub fn thermal_forward_on_displacement(
    t: &ThermalLoss,
    input: &WeightedDisplacement,
    mode: usize,
) -> Result<WeightedDisplacement> {
    if mode >= input.point.modes() {
        return Err(Error::InvalidDimension {
            expected: input.point.modes(),
            got: mode + 1,
        });
    }
    let q = input.point.q(mode);
    let p = input.point.p(mode);
    let exponent = -(0.5 + t.nbar()) * (1.0 / t.eta() - 1.0) * (q * q + p * p);
    let factor = exponent.exp() / t.eta();
    let mut point = input.point.clone();
    let root_eta = t.eta().sqrt();
    point.set_q(mode, q / root_eta);
    point.set_p(mode, p / root_eta);
    Ok(WeightedDisplacement {
        weight: input.weight * factor,
        point,
    })
}

/// Magnitude of the discrete cubic factor: (24 pi |gamma q1|)^(-1/2), with the
/// identity branch at gamma q1 = 0.
pub fn cubic_discrete_weight(gamma: f64, q1: f64) -> f64 {
    let gq = gamma * q1;
    if gq == 0.0 {
        1.0
    } else {
        1.0 / (24.0 * std::f64::consts::PI * gq.abs()).sqrt()
    }
}

/// Full complex discrete cubic factor sqrt(1 / (24 pi gamma q1)), with the
/// branch sqrt(sgn) in {1, i} carrying the sign of gamma q1 into the weight.
pub fn cubic_discrete_factor(gamma: f64, q1: f64) -> Complex64 {
    let gq = gamma * q1;
    if gq == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        let mag = cubic_discrete_weight(gamma, q1);
        if gq > 0.0 {
            Complex64::new(mag, 0.0)
        } else {
            Complex64::new(0.0, mag)
        }
    }
}

/// Oscillatory kernel of the continuous cubic map for resampling p1 -> p1_new:
/// exp(i [ (p1 - p1_new)^2 / (24 gamma q1) - 4 gamma q1^3 - pi/4 ]).
/// Identity (returns 1) when gamma q1 = 0.
pub fn cubic_continuous_kernel(gamma: f64, q1: f64, p1: f64, p1_new: f64) -> Complex64 {
    let gq = gamma * q1;
    if gq == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let dp = p1 - p1_new;
    let phase = dp * dp / (24.0 * gamma * q1)
        - 4.0 * gamma * q1.powi(3)
        - std::f64::consts::FRAC_PI_4;
    Complex64::new(0.0, phase).exp()
}

/// Deterministic phase exp(-i 4 gamma q1^3) used when the cubic gate is
/// approximated by the identity on the momentum coordinate.
pub fn cubic_deterministic_phase(gamma: f64, q1: f64) -> Complex64 {
    Complex64::new(0.0, -4.0 * gamma * q1.powi(3)).exp()
}

/// Elementary adjoint maps emitted by the layer decomposition, listed in
/// application order (first entry acts first on the displacement).
#[derive(Debug, Clone, PartialEq)]
pub enum ElementaryMap {
    /// C*_D: discrete cubic factor at the current q1.
    CubicDiscreteAdjoint { gamma: f64 },
    /// C*_C: oscillatory momentum resampling; identity at gamma q1 = 0.
    CubicContinuousAdjoint { gamma: f64 },
    /// Lambda^(Im),*: exp(-c p1^2) damping.
    ThermalImAdjoint { loss: ThermalLoss },
    /// Lambda^(Re),*: exp(-c q1^2) damping.
    ThermalReAdjoint { loss: ThermalLoss },
    /// Lambda^(shift),*: mode-1 coordinates scale by sqrt(eta).
    ThermalShiftAdjoint { loss: ThermalLoss },
    /// G*: phase exp(i d^T Omega r) and point S^-1 r.
    GaussianAdjoint { gaussian: SymplecticGaussian },
}

impl ElementaryMap {
    /// Apply the map to a weighted displacement. `resample` supplies the new
    /// mode-1 momentum for the continuous cubic map; any deterministic map
    /// ignores it.
    pub fn apply(
        &self,
        input: &WeightedDisplacement,
        resample: Option<f64>,
    ) -> Result<WeightedDisplacement> {
        match self {
            ElementaryMap::CubicDiscreteAdjoint { gamma } => {
                let factor = cubic_discrete_factor(*gamma, input.point.q(0));
                Ok(WeightedDisplacement {
                    weight: input.weight * factor,
                    point: input.point.clone(),
                })
            }
            ElementaryMap::CubicContinuousAdjoint { gamma } => {
                let q1 = input.point.q(0);
                if *gamma * q1 == 0.0 {
                    return Ok(input.clone());
                }
                let p1_new = resample.ok_or_else(|| {
                    Error::InvalidParameter(
                        "continuous cubic map needs a resampled momentum".into(),
                    )
                })?;
                let kernel = cubic_continuous_kernel(*gamma, q1, input.point.p(0), p1_new);
                let mut point = input.point.clone();
                point.set_p(0, p1_new);
                Ok(WeightedDisplacement {
                    weight: input.weight * kernel,
                    point,
                })
            }
            ElementaryMap::ThermalImAdjoint { loss } => {
                let p1 = input.point.p(0);
                Ok(WeightedDisplacement {
                    weight: input.weight * (-loss.noise_strength() * p1 * p1).exp(),
                    point: input.point.clone(),
                })
            }
            ElementaryMap::ThermalReAdjoint { loss } => {
                let q1 = input.point.q(0);
                Ok(WeightedDisplacement {
                    weight: input.weight * (-loss.noise_strength() * q1 * q1).exp(),
                    point: input.point.clone(),
                })
            }
            ElementaryMap::ThermalShiftAdjoint { loss } => {
                let mut point = input.point.clone();
                let root_eta = loss.eta().sqrt();
                point.set_q(0, point.q(0) * root_eta);
                point.set_p(0, point.p(0) * root_eta);
                Ok(WeightedDisplacement {
                    weight: input.weight,
                    point,
                })
            }
            ElementaryMap::GaussianAdjoint { gaussian } => {
                gaussian_adjoint_on_displacement(gaussian, input)
            }
        }
    }

    /// True for the map that consumes a sampled momentum.
    pub fn needs_resample(&self) -> bool {
        matches!(self, ElementaryMap::CubicContinuousAdjoint { .. })
    }
}

/// Emit the elementary-map sequence for processing layer j of the adjoint
/// walk, in application order. Layer L (processed first) is prefixed with the
/// boundary maps Lambda^(Re),* and C*_{L,D}; interior layers close with the
/// next layer's Lambda^(Re),* and C*_{j-1,D}, which the sampler absorbs into
/// its density; layer 1 ends at its Gaussian.
pub fn decompose_layer_adjoint(circuit: &Circuit, j: usize) -> Result<Vec<ElementaryMap>> {
    let depth = circuit.depth();
    if j == 0 || j > depth {
        return Err(Error::InvalidParameter(format!(
            "layer index {j} out of range 1..={depth}"
        )));
    }
    let layer = circuit.layer(j);
    let mut maps = Vec::new();
    if j == depth {
        maps.push(ElementaryMap::ThermalReAdjoint { loss: layer.loss });
        maps.push(ElementaryMap::CubicDiscreteAdjoint {
            gamma: layer.cubic.gamma(),
        });
    }
    maps.push(ElementaryMap::CubicContinuousAdjoint {
        gamma: layer.cubic.gamma(),
    });
    maps.push(ElementaryMap::ThermalImAdjoint { loss: layer.loss });
    maps.push(ElementaryMap::ThermalShiftAdjoint { loss: layer.loss });
    maps.push(ElementaryMap::GaussianAdjoint {
        gaussian: layer.gaussian.clone(),
    });
    if j >= 2 {
        let prev = circuit.layer(j - 1);
        maps.push(ElementaryMap::ThermalReAdjoint { loss: prev.loss });
        maps.push(ElementaryMap::CubicDiscreteAdjoint {
            gamma: prev.cubic.gamma(),
        });
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn wd(coords: Vec<f64>) -> WeightedDisplacement {
        WeightedDisplacement::unit(PhasePoint::new(coords).unwrap())
    }

    #[test]
    fn gaussian_adjoint_identity_gate() {
        let g = SymplecticGaussian::identity(1);
        let input = wd(vec![0.3, -0.7]);
        let out = gaussian_adjoint_on_displacement(&g, &input).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn gaussian_adjoint_displacement_phase() {
        let g = SymplecticGaussian::new(Array2::eye(2), array![1.0, 0.0]).unwrap();
        let input = wd(vec![0.0, 2.0]);
        let out = gaussian_adjoint_on_displacement(&g, &input).unwrap();
        // d^T Omega r = (1,0) . (2, 0) = 2
        let want = Complex64::new(0.0, 2.0).exp();
        assert!((out.weight - want).norm() < 1e-14);
        assert_eq!(out.point, input.point);
    }

    #[test]
    fn gaussian_adjoint_rotation_moves_point() {
        let th = std::f64::consts::FRAC_PI_2;
        let s = array![[th.cos(), th.sin()], [-th.sin(), th.cos()]];
        let g = SymplecticGaussian::new(s, Array1::zeros(2)).unwrap();
        let out = gaussian_adjoint_on_displacement(&g, &wd(vec![1.0, 0.0])).unwrap();
        // Quarter turn sends (1,0) onto the momentum axis; the sign is the
        // library's rotation convention.
        assert!((out.point.q(0)).abs() < 1e-12);
        assert!((out.point.p(0).abs() - 1.0).abs() < 1e-12);
        assert!((out.weight.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_adjoint_eta_one_is_identity() {
        let t = ThermalLoss::new(1.0, 0.7).unwrap();
        let input = wd(vec![1.3, -0.2]);
        let out = thermal_adjoint_on_displacement(&t, &input, 0).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn thermal_adjoint_half_loss() {
        let t = ThermalLoss::new(0.5, 0.0).unwrap();
        let out = thermal_adjoint_on_displacement(&t, &wd(vec![1.0, 1.0]), 0).unwrap();
        assert!((out.weight.re - (-0.5f64).exp()).abs() < 1e-14);
        assert_eq!(out.weight.im, 0.0);
        assert!((out.point.q(0) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((out.point.p(0) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pure_loss_adjoint_composes_multiplicatively() {
        let e1 = 0.8;
        let e2 = 0.55;
        let t1 = ThermalLoss::new(e1, 0.0).unwrap();
        let t2 = ThermalLoss::new(e2, 0.0).unwrap();
        let t12 = ThermalLoss::new(e1 * e2, 0.0).unwrap();
        let input = wd(vec![0.9, -1.4]);
        let a = thermal_adjoint_on_displacement(&t1, &input, 0).unwrap();
        let ab = thermal_adjoint_on_displacement(&t2, &a, 0).unwrap();
        let direct = thermal_adjoint_on_displacement(&t12, &input, 0).unwrap();
        assert!((ab.weight - direct.weight).norm() < 1e-12);
        assert!((ab.point.q(0) - direct.point.q(0)).abs() < 1e-12);
        assert!((ab.point.p(0) - direct.point.p(0)).abs() < 1e-12);
    }

    #[test]
    fn thermal_forward_eta_one_is_identity() {
        let t = ThermalLoss::new(1.0, 2.0).unwrap();
        let input = wd(vec![0.4, 0.1]);
        let out = thermal_forward_on_displacement(&t, &input, 0).unwrap();
        assert!((out.weight - input.weight).norm() < 1e-14);
        assert_eq!(out.point, input.point);
    }

    #[test]
    fn thermal_forward_quarter_eta() {
        let t = ThermalLoss::new(0.25, 1.0).unwrap();
        let out = thermal_forward_on_displacement(&t, &wd(vec![0.5, 0.0]), 0).unwrap();
        let want = 4.0 * (-3.0 * 3.0 * 0.125f64).exp();
        assert!((out.weight.re - want).abs() < 1e-12);
        assert!((out.point.q(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_and_adjoint_are_inverse_scalings() {
        let t = ThermalLoss::new(0.6, 0.8).unwrap();
        let input = wd(vec![0.7, -0.3]);
        let there = thermal_adjoint_on_displacement(&t, &input, 0).unwrap();
        let back = thermal_forward_on_displacement(&t, &there, 0).unwrap();
        assert!((back.point.q(0) - input.point.q(0)).abs() < 1e-12);
        assert!((back.point.p(0) - input.point.p(0)).abs() < 1e-12);
    }

    #[test]
    fn cubic_discrete_weight_branches() {
        assert_eq!(cubic_discrete_weight(0.3, 0.0), 1.0);
        assert_eq!(cubic_discrete_weight(0.0, 2.0), 1.0);
        let gamma = 1.0 / (24.0 * std::f64::consts::PI);
        assert!((cubic_discrete_weight(gamma, 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_discrete_factor_branch_for_negative_argument() {
        let f = cubic_discrete_factor(0.2, -1.0);
        assert!(f.re.abs() < 1e-15);
        assert!((f.im - cubic_discrete_weight(0.2, -1.0)).abs() < 1e-15);
    }

    #[test]
    fn layer_decomposition_single_layer_has_boundary() {
        let circuit = test_circuit(1);
        let maps = decompose_layer_adjoint(&circuit, 1).unwrap();
        assert!(matches!(maps[0], ElementaryMap::ThermalReAdjoint { .. }));
        assert!(matches!(maps[1], ElementaryMap::CubicDiscreteAdjoint { .. }));
        assert!(matches!(maps[2], ElementaryMap::CubicContinuousAdjoint { .. }));
        assert!(matches!(maps[3], ElementaryMap::ThermalImAdjoint { .. }));
        assert!(matches!(maps[4], ElementaryMap::ThermalShiftAdjoint { .. }));
        assert!(matches!(maps[5], ElementaryMap::GaussianAdjoint { .. }));
        assert_eq!(maps.len(), 6);
    }

    #[test]
    fn layer_decomposition_index_out_of_range() {
        let circuit = test_circuit(2);
        assert!(decompose_layer_adjoint(&circuit, 0).is_err());
        assert!(decompose_layer_adjoint(&circuit, 3).is_err());
    }

    #[test]
    fn zero_cubicity_maps_act_as_identity() {
        let disc = ElementaryMap::CubicDiscreteAdjoint { gamma: 0.0 };
        let cont = ElementaryMap::CubicContinuousAdjoint { gamma: 0.0 };
        let input = wd(vec![1.5, -0.4]);
        assert_eq!(disc.apply(&input, None).unwrap(), input);
        assert_eq!(cont.apply(&input, None).unwrap(), input);
    }

    /// Composing the emitted maps over a full 2-layer walk must reproduce the
    /// direct application of the per-channel closed forms for a fixed choice
    /// of resampled momenta.
    #[test]
    fn symbolic_two_layer_composition_matches_direct_channel_application() {
        let circuit = test_circuit(2);
        let r0 = PhasePoint::new(vec![0.8, -0.5]).unwrap();
        let resamples = [0.37, -1.21];

        let mut walked = WeightedDisplacement::unit(r0.clone());
        let mut draw = resamples.iter();
        for j in (1..=2usize).rev() {
            for map in decompose_layer_adjoint(&circuit, j).unwrap() {
                let sample = map.needs_resample().then(|| *draw.next().unwrap());
                walked = map.apply(&walked, sample).unwrap();
            }
        }

        // Direct: U* = U_1* o U_2*, each U_j* = G* o Lambda* o C*, with the
        // cubic expanded at the same resampled momenta.
        let mut direct = WeightedDisplacement::unit(r0);
        for (j, p_new) in [(2usize, resamples[0]), (1usize, resamples[1])] {
            let layer = circuit.layer(j);
            let gamma = layer.cubic.gamma();
            let q1 = direct.point.q(0);
            let factor = cubic_discrete_factor(gamma, q1)
                * cubic_continuous_kernel(gamma, q1, direct.point.p(0), p_new);
            let mut point = direct.point.clone();
            point.set_p(0, p_new);
            direct = WeightedDisplacement {
                weight: direct.weight * factor,
                point,
            };
            direct = thermal_adjoint_on_displacement(&layer.loss, &direct, 0).unwrap();
            direct = gaussian_adjoint_on_displacement(&layer.gaussian, &direct).unwrap();
        }

        assert!((walked.weight - direct.weight).norm() < 1e-12);
        for i in 0..2 {
            assert!((walked.point.as_slice()[i] - direct.point.as_slice()[i]).abs() < 1e-12);
        }
    }

    fn test_circuit(depth: usize) -> Circuit {
        let th = 0.7f64;
        let s = array![[th.cos(), th.sin()], [-th.sin(), th.cos()]];
        let layers = (0..depth)
            .map(|_| NoisyLayer {
                gaussian: SymplecticGaussian::new(s.clone(), array![0.1, -0.2]).unwrap(),
                loss: ThermalLoss::new(0.7, 0.3).unwrap(),
                cubic: CubicGate::new(0.2).unwrap(),
            })
            .collect();
        Circuit::new(1, layers, InputState::Vacuum { modes: 1 }).unwrap()
    }
}
