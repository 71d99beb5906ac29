//! Brute-force ground truth: dense density-matrix simulation of the same
//! noisy circuits in a truncated Fock space (1-2 system modes), used to
//! validate estimators, channel closed forms, and analytic bounds.

mod linalg;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::channels::ThermalLoss;
use crate::error::{Error, Result};
use crate::phase_space::{InputState, PhasePoint};

pub use linalg::{adjoint, expm, hermitian_eigenvalues, kron, partial_trace_last, Csr};

type CMat = Array2<Complex64>;

const THERMAL_TAIL_TOL: f64 = 1e-8;
/// Above this joint dimension the loss channel avoids materializing the
/// system-environment state and contracts the environment blockwise instead.
const JOINT_DENSE_LIMIT: usize = 6000;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ladder and quadrature operators at cutoff D (hbar = 2: q = a + a^dag).
#[derive(Debug, Clone)]
pub struct Quadratures {
    pub a: CMat,
    pub adag: CMat,
    pub q: CMat,
    pub p: CMat,
}

pub fn build_quadratures(cutoff: usize) -> Result<Quadratures> {
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let mut a: CMat = Array2::zeros((cutoff, cutoff));
    for n in 0..cutoff - 1 {
        a[(n, n + 1)] = c(((n + 1) as f64).sqrt());
    }
    let adag = adjoint(&a);
    let q = &a + &adag;
    let p = (&a - &adag).mapv(|z| z * Complex64::new(0.0, -1.0));
    Ok(Quadratures { a, adag, q, p })
}

/// Single-mode displacement D(q, p) = exp(i p q_hat - i q p_hat) at cutoff D.
pub fn displacement_matrix(cutoff: usize, q: f64, p: f64) -> Result<CMat> {
    let ops = build_quadratures(cutoff)?;
    let gen = ops.q.mapv(|z| z * Complex64::new(0.0, p))
        + ops.p.mapv(|z| z * Complex64::new(0.0, -q));
    Ok(expm(&gen))
}

/// Parametric gates with known generators and analytic phase-space images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateParam {
    Rotation { theta: f64, mode: usize },
    Squeeze { r: f64, phi: f64, mode: usize },
    Shear { s: f64, mode: usize },
    Displacement { beta: Complex64, mode: usize },
    Beamsplitter { theta: f64, modes: (usize, usize) },
    Cubic { gamma: f64 },
}

fn rotation_block(theta: f64) -> Array2<f64> {
    ndarray::array![[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]]
}

impl GateParam {
    /// Analytic (S, d) of the gate on an m-mode register, interleaved
    /// ordering; None for the cubic gate (not Gaussian).
    pub fn symplectic_image(&self, modes: usize) -> Result<Option<(Array2<f64>, Array1<f64>)>> {
        let n = 2 * modes;
        let mut s = Array2::eye(n);
        let mut d = Array1::zeros(n);
        let place = |s: &mut Array2<f64>, block: &Array2<f64>, mode: usize| {
            for i in 0..2 {
                for j in 0..2 {
                    s[(2 * mode + i, 2 * mode + j)] = block[(i, j)];
                }
            }
        };
        match *self {
            GateParam::Rotation { theta, mode } => {
                check_mode(mode, modes)?;
                place(&mut s, &rotation_block(theta), mode);
            }
            GateParam::Squeeze { r, phi, mode } => {
                check_mode(mode, modes)?;
                let sq = ndarray::array![[(-r).exp(), 0.0], [0.0, r.exp()]];
                let block = rotation_block(-phi).dot(&sq).dot(&rotation_block(phi));
                place(&mut s, &block, mode);
            }
            GateParam::Shear { s: shear, mode } => {
                check_mode(mode, modes)?;
                let block = ndarray::array![[1.0, 0.0], [shear, 1.0]];
                place(&mut s, &block, mode);
            }
            GateParam::Displacement { beta, mode } => {
                check_mode(mode, modes)?;
                d[2 * mode] = 2.0 * beta.re;
                d[2 * mode + 1] = 2.0 * beta.im;
            }
            GateParam::Beamsplitter { theta, modes: (i, j) } => {
                check_mode(i, modes)?;
                check_mode(j, modes)?;
                if i == j {
                    return Err(Error::InvalidParameter(
                        "beamsplitter needs two distinct modes".into(),
                    ));
                }
                let (ct, st) = (theta.cos(), theta.sin());
                for k in 0..2 {
                    s[(2 * i + k, 2 * i + k)] = ct;
                    s[(2 * i + k, 2 * j + k)] = st;
                    s[(2 * j + k, 2 * i + k)] = -st;
                    s[(2 * j + k, 2 * j + k)] = ct;
                }
            }
            GateParam::Cubic { .. } => return Ok(None),
        }
        Ok(Some((s, d)))
    }
}

fn check_mode(mode: usize, modes: usize) -> Result<()> {
    if mode >= modes {
        return Err(Error::InvalidDimension {
            expected: modes,
            got: mode + 1,
        });
    }
    Ok(())
}

/// Geometric thermal weights at the given cutoff, plus the truncated tail.
pub fn thermal_weights(nbar: f64, cutoff: usize) -> (Vec<f64>, f64) {
    if nbar == 0.0 {
        let mut w = vec![0.0; cutoff];
        w[0] = 1.0;
        return (w, 0.0);
    }
    let ratio = nbar / (nbar + 1.0);
    let w: Vec<f64> = (0..cutoff)
        .map(|k| ratio.powi(k as i32) / (nbar + 1.0))
        .collect();
    (w, ratio.powi(cutoff as i32))
}

/// Default ancilla cutoff: max(10, ceil(10 (nbar + 1)), tail < 1e-8).
pub fn default_env_cutoff(nbar: f64) -> usize {
    let heuristic = (10.0 * (nbar + 1.0)).ceil() as usize;
    let tail_cut = if nbar > 0.0 {
        (THERMAL_TAIL_TOL.ln() / (nbar / (nbar + 1.0)).ln()).ceil() as usize + 1
    } else {
        1
    };
    10usize.max(heuristic).max(tail_cut)
}

/// Number-conserving beamsplitter exp(theta (a1^dag a2 - a1 a2^dag)) on a
/// (d1, d2) truncated pair, assembled per total-photon-number block.
pub fn beamsplitter_csr(d1: usize, d2: usize, theta: f64) -> Csr {
    let mut triplets = Vec::new();
    for total in 0..=(d1 - 1 + d2 - 1) {
        let n_min = total.saturating_sub(d2 - 1);
        let n_max = total.min(d1 - 1);
        if n_min > n_max {
            continue;
        }
        let size = n_max - n_min + 1;
        let mut gen: CMat = Array2::zeros((size, size));
        for i in 0..size.saturating_sub(1) {
            let n = n_min + i;
            let e = total - n;
            // <n+1, e-1| a1^dag a2 |n, e> = sqrt((n+1) e)
            let v = theta * (((n + 1) * e) as f64).sqrt();
            gen[(i + 1, i)] = c(v);
            gen[(i, i + 1)] = c(-v);
        }
        let block = expm(&gen);
        for i in 0..size {
            for j in 0..size {
                let v = block[(i, j)];
                if v.norm() > 1e-300 {
                    let ni = n_min + i;
                    let nj = n_min + j;
                    triplets.push((ni * d2 + (total - ni), nj * d2 + (total - nj), v));
                }
            }
        }
    }
    Csr::from_triplets(d1 * d2, triplets)
}

/// Per-mode moment table: entry k-1 holds E[q^k] and E[p^k].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// A truncated density matrix over `modes` modes at per-mode cutoff D.
#[derive(Debug, Clone)]
pub struct FockState {
    rho: CMat,
    cutoff: usize,
    modes: usize,
}

impl FockState {
    pub fn new(rho: CMat, cutoff: usize, modes: usize) -> Result<Self> {
        let dim = cutoff.pow(modes as u32);
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::InvalidDimension {
                expected: dim,
                got: rho.nrows(),
            });
        }
        Ok(Self { rho, cutoff, modes })
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        let dim = cutoff.pow(modes as u32);
        let mut rho: CMat = Array2::zeros((dim, dim));
        rho[(0, 0)] = c(1.0);
        Ok(Self { rho, cutoff, modes })
    }

    /// Build the oracle state for an input-state descriptor.
    pub fn from_input(input: &InputState, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        input.validate()?;
        match input {
            InputState::Vacuum { modes } => Self::vacuum(*modes, cutoff),
            InputState::CoherentProduct { alphas } => {
                let mut rho = coherent_rho(alphas[0], cutoff);
                for alpha in &alphas[1..] {
                    rho = kron(&rho, &coherent_rho(*alpha, cutoff));
                }
                Self::new(rho, cutoff, alphas.len())
            }
            InputState::ThermalProduct { nbars } => {
                let make = |nbar: f64| {
                    let (w, _) = thermal_weights(nbar, cutoff);
                    Array2::from_diag(&Array1::from_vec(w.into_iter().map(c).collect()))
                };
                let mut rho = make(nbars[0]);
                for nbar in &nbars[1..] {
                    rho = kron(&rho, &make(*nbar));
                }
                Self::new(rho, cutoff, nbars.len())
            }
        }
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.rho[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let adj = adjoint(&self.rho);
        self.rho
            .iter()
            .zip(adj.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.rho)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Population living in the top `levels` Fock levels of any mode.
    pub fn trailing_population(&self, levels: usize) -> f64 {
        let mut worst = 0.0f64;
        for mode in 0..self.modes {
            let marg = self.mode_populations(mode);
            let tail: f64 = marg[self.cutoff.saturating_sub(levels)..].iter().sum();
            worst = worst.max(tail);
        }
        worst
    }

    pub fn mode_populations(&self, mode: usize) -> Vec<f64> {
        let stride = self.cutoff.pow((self.modes - 1 - mode) as u32);
        let mut pops = vec![0.0; self.cutoff];
        for i in 0..self.dim() {
            let n = (i / stride) % self.cutoff;
            pops[n] += self.rho[(i, i)].re;
        }
        pops
    }

    pub fn expectation(&self, op: &CMat) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                acc += self.rho[(i, k)] * op[(k, i)];
            }
        }
        acc
    }

    /// Lift a single-mode operator to the full register.
    pub fn lift(&self, op: &CMat, mode: usize) -> CMat {
        let mut full: Option<CMat> = None;
        for m in 0..self.modes {
            let factor = if m == mode {
                op.clone()
            } else {
                linalg::eye(self.cutoff)
            };
            full = Some(match full {
                None => factor,
                Some(acc) => kron(&acc, &factor),
            });
        }
        full.unwrap()
    }

    /// rho -> U rho U^dagger for a parametric gate.
    pub fn apply_gate(&self, gate: &GateParam) -> Result<FockState> {
        let d = self.cutoff;
        let ops = build_quadratures(d)?;
        let i = Complex64::new(0.0, 1.0);
        let rho = match *gate {
            GateParam::Rotation { theta, mode } => {
                check_mode(mode, self.modes)?;
                let n_op = ops.adag.dot(&ops.a);
                let u = expm(&n_op.mapv(|z| z * (-i * theta)));
                self.sandwich_dense(&self.lift(&u, mode))
            }
            GateParam::Squeeze { r, phi, mode } => {
                check_mode(mode, self.modes)?;
                let phase = Complex64::new(0.0, -2.0 * phi).exp();
                let gen = ops.a.dot(&ops.a).mapv(|z| z * (0.5 * r) * phase)
                    - ops.adag.dot(&ops.adag).mapv(|z| z * (0.5 * r) * phase.conj());
                let u = expm(&gen);
                self.sandwich_dense(&self.lift(&u, mode))
            }
            GateParam::Shear { s, mode } => {
                check_mode(mode, self.modes)?;
                let q2 = ops.q.dot(&ops.q);
                let u = expm(&q2.mapv(|z| z * i * (s / 4.0)));
                self.sandwich_dense(&self.lift(&u, mode))
            }
            GateParam::Displacement { beta, mode } => {
                check_mode(mode, self.modes)?;
                let u = displacement_matrix(d, beta.re, beta.im)?;
                self.sandwich_dense(&self.lift(&u, mode))
            }
            GateParam::Beamsplitter { theta, modes } => {
                check_mode(modes.0, self.modes)?;
                check_mode(modes.1, self.modes)?;
                if self.modes != 2 || modes != (0, 1) {
                    return Err(Error::NotImplementedObservable(
                        "oracle beamsplitter gates support the (0,1) pair on two modes".into(),
                    ));
                }
                beamsplitter_csr(d, d, theta).sandwich(&self.rho)
            }
            GateParam::Cubic { gamma } => {
                let q3 = ops.q.dot(&ops.q).dot(&ops.q);
                let u = expm(&q3.mapv(|z| z * i * gamma));
                self.sandwich_dense(&self.lift(&u, 0))
            }
        };
        FockState::new(rho, self.cutoff, self.modes)
    }

    fn sandwich_dense(&self, u: &CMat) -> CMat {
        u.dot(&self.rho).dot(&adjoint(u))
    }

    /// Thermal loss on one mode: couple to a truncated thermal ancilla with
    /// the beamsplitter of transmissivity eta, apply the two-mode unitary,
    /// trace the ancilla. Large registers contract the environment blockwise
    /// instead of materializing the joint state; both paths use the same
    /// beamsplitter unitary and agree to rounding.
    pub fn apply_thermal_loss(
        &self,
        loss: &ThermalLoss,
        mode: usize,
        env_cutoff: Option<usize>,
    ) -> Result<FockState> {
        check_mode(mode, self.modes)?;
        if loss.eta() == 1.0 && loss.nbar() == 0.0 {
            return Ok(self.clone());
        }
        let d_env = env_cutoff.unwrap_or_else(|| default_env_cutoff(loss.nbar()));
        let (weights, tail) = thermal_weights(loss.nbar(), d_env);
        if tail >= THERMAL_TAIL_TOL {
            return Err(Error::IncreaseCutoff {
                tail,
                tol: THERMAL_TAIL_TOL,
                required: default_env_cutoff(loss.nbar()),
            });
        }
        let theta = loss.eta().sqrt().acos();
        if self.dim() * d_env <= JOINT_DENSE_LIMIT {
            self.loss_via_joint(mode, d_env, &weights, theta)
        } else {
            self.loss_via_blocks(mode, d_env, &weights, theta)
        }
    }

    fn loss_via_joint(
        &self,
        mode: usize,
        d_env: usize,
        weights: &[f64],
        theta: f64,
    ) -> Result<FockState> {
        let env = Array2::from_diag(&Array1::from_vec(weights.iter().map(|w| c(*w)).collect()));
        let joint = kron(&self.rho, &env);
        let d = self.cutoff;
        let dense_pair = beamsplitter_csr(d, d_env, theta).to_dense();
        // Lift the (target, env) unitary onto (sys..., env); diagonal in the
        // non-target system indices.
        let stride = d.pow((self.modes - 1 - mode) as u32);
        let sys_dim = self.dim();
        let mut triplets = Vec::new();
        for i_sys in 0..sys_dim {
            let n_t = (i_sys / stride) % d;
            for e_in in 0..d_env {
                let total = n_t + e_in;
                for n_out in total.saturating_sub(d_env - 1)..=total.min(d - 1) {
                    let e_out = total - n_out;
                    let v = dense_pair[(n_out * d_env + e_out, n_t * d_env + e_in)];
                    if v.norm() <= 1e-300 {
                        continue;
                    }
                    let j_sys = i_sys - n_t * stride + n_out * stride;
                    triplets.push((j_sys * d_env + e_out, i_sys * d_env + e_in, v));
                }
            }
        }
        let lifted = Csr::from_triplets(sys_dim * d_env, triplets);
        let evolved = lifted.sandwich(&joint);
        let reduced = partial_trace_last(&evolved, sys_dim, d_env);
        FockState::new(reduced, self.cutoff, self.modes)
    }

    fn loss_via_blocks(
        &self,
        mode: usize,
        d_env: usize,
        weights: &[f64],
        theta: f64,
    ) -> Result<FockState> {
        let d = self.cutoff;
        let pair = beamsplitter_csr(d, d_env, theta).to_dense();
        let stride = d.pow((self.modes - 1 - mode) as u32);
        let dim = self.dim();
        let blocks = dim / (d * stride);
        let mut out: CMat = Array2::zeros((dim, dim));
        // rho' = sum_k w_k sum_e K_{e,k} rho K_{e,k}^dag with
        // K_{e,k}[n_out, n_in] = <n_out, e| B |n_in, k>, applied in place on
        // the target-mode index.
        for (k, w) in weights.iter().enumerate() {
            if *w < 1e-14 {
                continue;
            }
            for e in 0..(d + k).min(d_env) {
                let mut kraus: Vec<(usize, usize, Complex64)> = Vec::new();
                for n_in in 0..d {
                    let shifted = n_in as isize + k as isize - e as isize;
                    if shifted < 0 || shifted >= d as isize {
                        continue;
                    }
                    let n_out = shifted as usize;
                    let v = pair[(n_out * d_env + e, n_in * d_env + k)];
                    if v.norm() > 1e-300 {
                        kraus.push((n_out, n_in, v));
                    }
                }
                if kraus.is_empty() {
                    continue;
                }
                let mut x: CMat = Array2::zeros((dim, dim));
                for &(n_out, n_in, v) in &kraus {
                    for b in 0..blocks {
                        for s in 0..stride {
                            let row_out = (b * d + n_out) * stride + s;
                            let row_in = (b * d + n_in) * stride + s;
                            for col in 0..dim {
                                x[(row_out, col)] += v * self.rho[(row_in, col)];
                            }
                        }
                    }
                }
                for &(n_out, n_in, v) in &kraus {
                    let vc = v.conj() * *w;
                    for b in 0..blocks {
                        for s in 0..stride {
                            let col_out = (b * d + n_out) * stride + s;
                            let col_in = (b * d + n_in) * stride + s;
                            for row in 0..dim {
                                out[(row, col_out)] += vc * x[(row, col_in)];
                            }
                        }
                    }
                }
            }
        }
        FockState::new(out, self.cutoff, self.modes)
    }

    /// chi(r) = Tr[rho D(r)].
    pub fn char_function(&self, r: &PhasePoint) -> Result<Complex64> {
        if r.modes() != self.modes {
            return Err(Error::InvalidDimension {
                expected: 2 * self.modes,
                got: r.dim(),
            });
        }
        let mut disp = displacement_matrix(self.cutoff, r.q(0), r.p(0))?;
        for mode in 1..self.modes {
            disp = kron(
                &disp,
                &displacement_matrix(self.cutoff, r.q(mode), r.p(mode))?,
            );
        }
        Ok(self.expectation(&disp))
    }

    /// Exact truncated moments E[q^k], E[p^k] for k = 1..=max_order.
    pub fn observable_moments(&self, mode: usize, max_order: usize) -> Result<MomentTable> {
        check_mode(mode, self.modes)?;
        let ops = build_quadratures(self.cutoff)?;
        let q = self.lift(&ops.q, mode);
        let p = self.lift(&ops.p, mode);
        let mut table = MomentTable {
            q: Vec::with_capacity(max_order),
            p: Vec::with_capacity(max_order),
        };
        let mut qk = linalg::eye(self.dim());
        let mut pk = linalg::eye(self.dim());
        for _ in 1..=max_order {
            qk = qk.dot(&q);
            pk = pk.dot(&p);
            table.q.push(self.expectation(&qk).re);
            table.p.push(self.expectation(&pk).re);
        }
        Ok(table)
    }

    /// Mode-j mean energy (q^2 + p^2)/2.
    pub fn mode_energy(&self, mode: usize) -> Result<f64> {
        let m = self.observable_moments(mode, 2)?;
        Ok(0.5 * (m.q[1] + m.p[1]))
    }

    /// Max over a (q1, p1) grid of the central-difference second derivative
    /// in p1 of Tr[D(r) Lambda(rho)]; other coordinates pinned at zero.
    pub fn empirical_curvature(
        &self,
        loss: &ThermalLoss,
        q_grid: &[f64],
        p_grid: &[f64],
        step: f64,
    ) -> Result<f64> {
        if step < 1e-7 {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step {step} is below the oracle's truncation precision"
            )));
        }
        let lossy = self.apply_thermal_loss(loss, 0, None)?;
        let mut worst = 0.0f64;
        for &q in q_grid {
            for &p in p_grid {
                let mut at = |pp: f64| -> Result<Complex64> {
                    let mut r = PhasePoint::zero(self.modes);
                    r.set_q(0, q);
                    r.set_p(0, pp);
                    lossy.char_function(&r)
                };
                let hi = at(p + step)?;
                let mid = at(p)?;
                let lo = at(p - step)?;
                let second = (hi - mid * 2.0 + lo) / (step * step);
                worst = worst.max(second.norm());
            }
        }
        Ok(worst)
    }
}

fn coherent_rho(alpha: Complex64, cutoff: usize) -> CMat {
    let mut amp = Vec::with_capacity(cutoff);
    let norm = (-0.5 * alpha.norm_sqr()).exp();
    let mut term = Complex64::new(norm, 0.0);
    amp.push(term);
    for n in 1..cutoff {
        term = term * alpha / c((n as f64).sqrt());
        amp.push(term);
    }
    let mut rho = Array2::zeros((cutoff, cutoff));
    for i in 0..cutoff {
        for j in 0..cutoff {
            rho[(i, j)] = amp[i] * amp[j].conj();
        }
    }
    rho
}
