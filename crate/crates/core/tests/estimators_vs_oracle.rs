//! Cross-checks of the displacement-propagation estimators against the
//! truncated Fock-space oracle on one-mode circuits.

use dispprop::channels::{Circuit, CubicGate, NoisyLayer, ThermalLoss};
use dispprop::fock_oracle::{FockState, GateParam};
use dispprop::phase_space::{InputState, PhasePoint, SymplecticGaussian};
use dispprop::propagation::{
    estimate_char_adaptive, estimate_char_near_gaussian, estimate_char_unbiased,
    gaussian_circuit_char, EstimationOptions,
};
use dispprop::sampling::RngStream;
use ndarray::{array, Array1};
use num_complex::Complex64;

fn rotation(theta: f64) -> SymplecticGaussian {
    let s = array![[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]];
    SymplecticGaussian::new(s, Array1::zeros(2)).unwrap()
}

/// m = 1, rotation 0.7, eta = 0.7, nbar = 0.3, gamma = 0.2, vacuum input.
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

/// Evolve the matching state through the oracle: U_j = C_j . Lambda . G_j.
fn oracle_state(circuit: &Circuit, cutoff: usize, env_cutoff: usize) -> FockState {
    let mut state = FockState::from_input(circuit.input(), cutoff).unwrap();
    for layer in circuit.layers() {
        // the reference Gaussians are rotations by construction
        let theta = layer.gaussian.s()[(0, 1)].asin();
        state = state
            .apply_gate(&GateParam::Rotation { theta, mode: 0 })
            .unwrap();
        state = state
            .apply_thermal_loss(&layer.loss, 0, Some(env_cutoff))
            .unwrap();
        if layer.cubic.gamma() != 0.0 {
            state = state
                .apply_gate(&GateParam::Cubic {
                    gamma: layer.cubic.gamma(),
                })
                .unwrap();
        }
    }
    state
}

#[test]
fn gaussian_only_estimator_matches_oracle() {
    let circuit = reference_circuit(2, 0.0);
    let state = oracle_state(&circuit, 40, 20);
    for (q, p) in [(0.0, 0.0), (0.8, -0.3), (1.5, 1.0)] {
        let r = PhasePoint::new(vec![q, p]).unwrap();
        let truth = state.char_function(&r).unwrap();
        let closed = gaussian_circuit_char(&circuit, &r).unwrap();
        assert!(
            (truth - closed).norm() < 1e-6,
            "({q},{p}): oracle {truth} vs closed form {closed}"
        );
    }
}

#[test]
fn unbiased_estimator_matches_oracle_on_reference_circuit() {
    let circuit = reference_circuit(1, 0.2);
    let state = oracle_state(&circuit, 60, 20);
    let opts = EstimationOptions {
        max_samples: 400_000,
        ..Default::default()
    };
    for (q, p) in [(1.0, 0.5), (0.7, -0.4), (-1.2, 0.3)] {
        let r = PhasePoint::new(vec![q, p]).unwrap();
        let truth = state.char_function(&r).unwrap();
        let est =
            estimate_char_unbiased(&circuit, &r, 5e-3, 0.05, RngStream::new(42, 0), &opts)
                .unwrap();
        let tol = (3.0 * est.stderr).max(2e-3);
        assert!(
            (est.value - truth).norm() < tol,
            "({q},{p}): estimate {} vs oracle {} (stderr {})",
            est.value,
            truth,
            est.stderr
        );
    }
}

#[test]
fn unbiased_estimator_matches_oracle_two_layers() {
    let circuit = reference_circuit(2, 0.2);
    let state = oracle_state(&circuit, 60, 20);
    let opts = EstimationOptions {
        max_samples: 600_000,
        ..Default::default()
    };
    let r = PhasePoint::new(vec![1.0, 0.5]).unwrap();
    let truth = state.char_function(&r).unwrap();
    let est = estimate_char_unbiased(&circuit, &r, 5e-3, 0.05, RngStream::new(7, 0), &opts)
        .unwrap();
    let tol = (3.0 * est.stderr).max(2e-3);
    assert!(
        (est.value - truth).norm() < tol,
        "estimate {} vs oracle {} (stderr {})",
        est.value,
        truth,
        est.stderr
    );
}

#[test]
fn adaptive_estimator_matches_oracle_at_small_q1() {
    let circuit = reference_circuit(1, 0.2);
    let state = oracle_state(&circuit, 60, 20);
    let opts = EstimationOptions {
        max_samples: 300_000,
        ..Default::default()
    };
    // conservative curvature bound for this circuit
    let m = 6.0;
    let eps = 5e-3;
    for q in [0.0, 1e-6, 1e-2] {
        let r = PhasePoint::new(vec![q, 0.5]).unwrap();
        let truth = state.char_function(&r).unwrap();
        let est =
            estimate_char_adaptive(&circuit, &r, eps, 0.05, m, RngStream::new(3, 0), &opts)
                .unwrap();
        let tol = eps + 3.0 * est.stderr;
        assert!(
            (est.value - truth).norm() < tol,
            "q1 = {q}: estimate {} vs oracle {} (stderr {}, bias {})",
            est.value,
            truth,
            est.stderr,
            est.declared_bias
        );
    }
}

#[test]
fn near_gaussian_estimator_matches_oracle() {
    let depth = 5;
    let gamma = 1e-3;
    let layers = (0..depth)
        .map(|_| NoisyLayer {
            gaussian: rotation(0.7),
            loss: ThermalLoss::new(0.6, 0.5).unwrap(),
            cubic: CubicGate::new(gamma).unwrap(),
        })
        .collect();
    let circuit = Circuit::new(1, layers, InputState::Vacuum { modes: 1 }).unwrap();
    let state = oracle_state(&circuit, 40, 30);
    let opts = EstimationOptions::default();
    let m = 2.0;
    let eps = 0.12;
    for (q, p) in [(0.5, 0.5), (0.0, 1.0), (1.0, -0.5)] {
        let r = PhasePoint::new(vec![q, p]).unwrap();
        let truth = state.char_function(&r).unwrap();
        let est = estimate_char_near_gaussian(
            &circuit,
            &r,
            eps,
            0.05,
            m,
            RngStream::new(5, 0),
            &opts,
        )
        .unwrap();
        let tol = eps + 3.0 * est.stderr;
        assert!(
            (est.value - truth).norm() < tol,
            "({q},{p}): estimate {} vs oracle {} (stderr {})",
            est.value,
            truth,
            est.stderr
        );
        // the parameters sit deep in the near-Gaussian regime, so the actual
        // deviation should be far smaller than the budgeted eps
        assert!(
            (est.value - truth).norm() < 0.02,
            "({q},{p}): deviation {} unexpectedly large",
            (est.value - truth).norm()
        );
    }
}

#[test]
fn thermal_channel_duality_on_grid() {
    // Tr[Lambda(D(xi)) D(chi)] = Tr[D(xi) Lambda*(D(chi))], both sides through
    // the oracle and the closed forms.
    let cutoff = 40;
    let loss = ThermalLoss::new(0.55, 0.4).unwrap();
    for (xq, xp, cq, cp) in [
        (0.5, 0.0, -0.3, 0.2),
        (1.0, -0.5, 0.4, 0.4),
        (0.0, 0.8, 0.0, -0.6),
    ] {
        // lhs: oracle state of D(xi) pushed through the channel
        let d_xi = dispprop::fock_oracle::displacement_matrix(cutoff, xq, xp).unwrap();
        let op_state = FockState::new(d_xi, cutoff, 1).unwrap();
        let pushed = op_state.apply_thermal_loss(&loss, 0, Some(30)).unwrap();
        let r_chi = PhasePoint::new(vec![cq, cp]).unwrap();
        let lhs = pushed.char_function(&r_chi).unwrap();
        // rhs: closed-form adjoint acting on D(chi), evaluated against D(xi)
        use dispprop::channels::{thermal_adjoint_on_displacement, WeightedDisplacement};
        let adj = thermal_adjoint_on_displacement(
            &loss,
            &WeightedDisplacement::unit(r_chi),
            0,
        )
        .unwrap();
        let d_chi_scaled = dispprop::fock_oracle::displacement_matrix(
            cutoff,
            adj.point.q(0),
            adj.point.p(0),
        )
        .unwrap();
        let xi_state = FockState::new(
            dispprop::fock_oracle::displacement_matrix(cutoff, xq, xp).unwrap(),
            cutoff,
            1,
        )
        .unwrap();
        let rhs = adj.weight * xi_state.expectation(&d_chi_scaled);
        assert!(
            (lhs - rhs).norm() < 1e-6,
            "duality violated: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn thermal_adjoint_closed_form_matches_oracle_grid() {
    // chi_{Lambda(rho)}(r) = damping * chi_rho(sqrt(eta) r) for input states
    // with closed-form characteristic functions.
    let cutoff = 40;
    let alpha = Complex64::new(0.6, -0.2);
    let input = InputState::CoherentProduct { alphas: vec![alpha] };
    let state = FockState::from_input(&input, cutoff).unwrap();
    for eta in [0.3, 0.7, 1.0] {
        for nbar in [0.0, 1.0] {
            let loss = ThermalLoss::new(eta, nbar).unwrap();
            let lossy = state.apply_thermal_loss(&loss, 0, Some(40)).unwrap();
            for (q, p) in [(0.0, 0.0), (1.0, 0.5), (-2.0, 1.0), (3.0, 0.0), (0.5, -2.5)] {
                let r = PhasePoint::new(vec![q, p]).unwrap();
                let oracle = lossy.char_function(&r).unwrap();
                use dispprop::channels::{
                    thermal_adjoint_on_displacement, WeightedDisplacement,
                };
                let adj =
                    thermal_adjoint_on_displacement(&loss, &WeightedDisplacement::unit(r), 0)
                        .unwrap();
                let closed = adj.weight
                    * dispprop::phase_space::input_char(&input, &adj.point).unwrap();
                assert!(
                    (oracle - closed).norm() < 1e-6,
                    "eta {eta} nbar {nbar} ({q},{p}): {oracle} vs {closed}"
                );
            }
        }
    }
}
