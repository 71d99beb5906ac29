//! Symplectic phase-space algebra under the hbar = 2 convention.
//!
//! Coordinates are interleaved per mode, r = (q1, p1, ..., qm, pm), and the
//! displacement operator is D(r) = exp(i R^T Omega r) so that the vacuum
//! characteristic function is exp(-(q^2 + p^2)/2) per mode. The complex
//! amplitude of the mode-j displacement is beta_j = q_j + i p_j; a coherent
//! state |alpha> is centered at (q, p) = (2 Re alpha, 2 Im alpha), i.e.
//! alpha = (q + i p) / 2.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// A phase-space point: 2m interleaved quadrature coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(Error::InvalidDimension {
                expected: coords.len() + 1,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "phase point contains non-finite coordinates".into(),
            ));
        }
        Ok(Self { coords })
    }

    pub fn zero(modes: usize) -> Self {
        Self {
            coords: vec![0.0; 2 * modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn q(&self, mode: usize) -> f64 {
        self.coords[2 * mode]
    }

    pub fn p(&self, mode: usize) -> f64 {
        self.coords[2 * mode + 1]
    }

    pub fn set_q(&mut self, mode: usize, v: f64) {
        self.coords[2 * mode] = v;
    }

    pub fn set_p(&mut self, mode: usize, v: f64) {
        self.coords[2 * mode + 1] = v;
    }

    /// Complex displacement amplitude of one mode, beta = q + i p.
    pub fn beta(&self, mode: usize) -> Complex64 {
        Complex64::new(self.q(mode), self.p(mode))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from_vec(self.coords.clone())
    }

    pub fn from_array(a: &Array1<f64>) -> Result<Self> {
        Self::new(a.to_vec())
    }
}

/// Standard symplectic form, the m-fold direct sum of [[0, 1], [-1, 0]].
pub fn symplectic_form(modes: usize) -> Result<Array2<f64>> {
    if modes == 0 {
        return Err(Error::InvalidDimension { expected: 1, got: 0 });
    }
    let n = 2 * modes;
    let mut omega = Array2::zeros((n, n));
    for j in 0..modes {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    Ok(omega)
}

/// Outcome of a symplectic-condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticCheck {
    pub pass: bool,
    pub max_dev: f64,
}

/// Checks S^T Omega S = Omega entrywise against `SYMPLECTIC_TOL`.
pub fn validate_symplectic(s: &Array2<f64>) -> Result<SymplecticCheck> {
    let n = s.nrows();
    if n != s.ncols() || n % 2 != 0 || n == 0 {
        return Err(Error::InvalidDimension {
            expected: n + n % 2,
            got: s.ncols(),
        });
    }
    let omega = symplectic_form(n / 2)?;
    let lhs = s.t().dot(&omega).dot(s);
    let max_dev = lhs
        .iter()
        .zip(omega.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(SymplecticCheck {
        pass: max_dev <= SYMPLECTIC_TOL,
        max_dev,
    })
}

/// A Gaussian unitary in phase space: r -> S r + d on the quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticGaussian {
    s: Array2<f64>,
    s_inv: Array2<f64>,
    d: Array1<f64>,
}

impl SymplecticGaussian {
    pub fn new(s: Array2<f64>, d: Array1<f64>) -> Result<Self> {
        let check = validate_symplectic(&s)?;
        if !check.pass {
            return Err(Error::SymplecticViolation {
                max_dev: check.max_dev,
                tol: SYMPLECTIC_TOL,
            });
        }
        if d.len() != s.nrows() {
            return Err(Error::InvalidDimension {
                expected: s.nrows(),
                got: d.len(),
            });
        }
        // S^-1 = Omega^T S^T Omega, exact for symplectic S.
        let omega = symplectic_form(s.nrows() / 2)?;
        let s_inv = omega.t().dot(&s.t()).dot(&omega);
        if s_inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditionedGate);
        }
        Ok(Self { s, s_inv, d })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            s: Array2::eye(2 * modes),
            s_inv: Array2::eye(2 * modes),
            d: Array1::zeros(2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    pub fn s(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn s_inv(&self) -> &Array2<f64> {
        &self.s_inv
    }

    pub fn d(&self) -> &Array1<f64> {
        &self.d
    }

    /// |S_{q1,p1}|, the symplectic coherence of the forward matrix.
    pub fn sigma(&self) -> f64 {
        self.s[(0, 1)].abs()
    }

    /// |(S^-1)_{q1,p1}|, the symplectic coherence of the inverse.
    pub fn sigma_inv(&self) -> f64 {
        self.s_inv[(0, 1)].abs()
    }

    pub fn apply(&self, r: &PhasePoint) -> PhasePoint {
        let out = self.s.dot(&r.to_array()) + &self.d;
        PhasePoint { coords: out.to_vec() }
    }

    pub fn apply_inverse(&self, r: &PhasePoint) -> PhasePoint {
        let out = self.s_inv.dot(&r.to_array());
        PhasePoint { coords: out.to_vec() }
    }

    /// Composition: the gate that acts as `self` after `first`.
    pub fn compose(&self, first: &SymplecticGaussian) -> Result<Self> {
        let s = self.s.dot(&first.s);
        let d = self.s.dot(&first.d) + &self.d;
        Self::new(s, d)
    }
}

/// Input-state descriptors with closed-form characteristic functions.
#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    Vacuum { modes: usize },
    CoherentProduct { alphas: Vec<Complex64> },
    ThermalProduct { nbars: Vec<f64> },
}

impl InputState {
    pub fn modes(&self) -> usize {
        match self {
            InputState::Vacuum { modes } => *modes,
            InputState::CoherentProduct { alphas } => alphas.len(),
            InputState::ThermalProduct { nbars } => nbars.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputState::Vacuum { modes } => {
                if *modes == 0 {
                    return Err(Error::InvalidDimension { expected: 1, got: 0 });
                }
            }
            InputState::CoherentProduct { alphas } => {
                if alphas.is_empty() {
                    return Err(Error::InvalidDimension { expected: 1, got: 0 });
                }
                if alphas.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "coherent amplitude is not finite".into(),
                    ));
                }
            }
            InputState::ThermalProduct { nbars } => {
                if nbars.is_empty() {
                    return Err(Error::InvalidDimension { expected: 1, got: 0 });
                }
                if nbars.iter().any(|n| !n.is_finite() || *n < 0.0) {
                    return Err(Error::InvalidParameter(
                        "thermal occupation must be finite and >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Characteristic function of a single-mode coherent projector |alpha><alpha|
/// at displacement amplitude beta = q + i p:
/// exp(-|beta|^2 / 2 + beta conj(alpha) - conj(beta) alpha).
fn coherent_mode_char(alpha: Complex64, beta: Complex64) -> Complex64 {
    let exponent = Complex64::new(-0.5 * beta.norm_sqr(), 0.0) + beta * alpha.conj()
        - beta.conj() * alpha;
    exponent.exp()
}

/// chi_rho0(r) = Tr[rho0 D(r)] in closed form.
pub fn input_char(state: &InputState, r: &PhasePoint) -> Result<Complex64> {
    if r.modes() != state.modes() {
        return Err(Error::InvalidDimension {
            expected: 2 * state.modes(),
            got: r.dim(),
        });
    }
    state.validate()?;
    match state {
        InputState::Vacuum { .. } => Ok(Complex64::new((-0.5 * r.norm_sq()).exp(), 0.0)),
        InputState::CoherentProduct { alphas } => {
            let mut chi = Complex64::new(1.0, 0.0);
            for (j, alpha) in alphas.iter().enumerate() {
                chi *= coherent_mode_char(*alpha, r.beta(j));
            }
            Ok(chi)
        }
        InputState::ThermalProduct { nbars } => {
            let mut log = 0.0;
            for (j, nbar) in nbars.iter().enumerate() {
                let b = r.beta(j);
                log -= (0.5 + nbar) * b.norm_sqr();
            }
            Ok(Complex64::new(log.exp(), 0.0))
        }
    }
}

/// Characteristic function of a local coherent projector observable,
/// (tensor of |alpha_i><alpha_i| over modes 1..k) tensor identity on the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorChar {
    pub value: Complex64,
    /// True when identity modes exist, whose delta-function support pins
    /// those coordinates to the origin.
    pub delta_constrained: bool,
}

pub fn coherent_projector_char(
    alphas: &[Complex64],
    modes: usize,
    r: &PhasePoint,
) -> Result<ProjectorChar> {
    let k = alphas.len();
    if k == 0 || k > modes {
        return Err(Error::InvalidDimension {
            expected: modes,
            got: k,
        });
    }
    if r.modes() != modes {
        return Err(Error::InvalidDimension {
            expected: 2 * modes,
            got: r.dim(),
        });
    }
    for mode in k..modes {
        if r.q(mode) != 0.0 || r.p(mode) != 0.0 {
            return Err(Error::OutOfSupport { mode });
        }
    }
    let mut value = Complex64::new(1.0, 0.0);
    for (i, alpha) in alphas.iter().enumerate() {
        value *= coherent_mode_char(*alpha, r.beta(i));
    }
    Ok(ProjectorChar {
        value,
        delta_constrained: k < modes,
    })
}

/// Observables with a known Fourier 1-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FourierObservable {
    /// k coherent-state projectors tensored with identity; norm 2^k.
    CoherentProjectors { k: usize },
    /// A single displacement operator; norm 1.
    Displacement,
}

pub fn fourier_one_norm(observable: FourierObservable) -> f64 {
    match observable {
        FourierObservable::CoherentProjectors { k } => (2.0f64).powi(k as i32),
        FourierObservable::Displacement => 1.0,
    }
}
