//! Integrator abstractions: interface synthesis, explicit simulation-function
//! certificates, and the tracking bound they induce.
//!
//! Every admissible plant tracks a scalar integrator `dz/dt = v` through the
//! interface `u = k (x - X z) + U z + R v`. The certificate
//! `V(z, x) = c_hat * (x - X z)^T P (x - X z)` bounds the squared output
//! mismatch and decreases at rate `alpha_rate` whenever the mismatch
//! dominates `gamma_coeff * v^2`.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::plant::{self, Plant};

/// Interface gains binding one plant to its integrator abstraction.
#[derive(Debug, Clone)]
pub struct Interface {
    plant: Plant,
    state_map: DVector<f64>,
    feedforward: f64,
    feedback: RowDVector<f64>,
    feedthrough: f64,
}

/// Lyapunov certificate realizing the simulation-function inequalities.
#[derive(Debug, Clone)]
pub struct SimCertificate {
    p: DMatrix<f64>,
    c_hat: f64,
    alpha_rate: f64,
    gamma_coeff: f64,
}

/// Default state-feedback poles `{-1, -2, ..., -n}`.
pub fn default_state_poles(n: usize) -> Vec<Complex<f64>> {
    (1..=n).map(|i| Complex::new(-(i as f64), 0.0)).collect()
}

/// Default observer poles `{-2, -4, ..., -2n}`, faster than the state loop.
pub fn default_observer_poles(n: usize) -> Vec<Complex<f64>> {
    (1..=n)
        .map(|i| Complex::new(-2.0 * i as f64, 0.0))
        .collect()
}

/// Synthesizes the interface for `plant`: `X, U` from the regulator
/// equations, `k` by pole placement (defaults when `poles` is `None`), and
/// `R` as the least-squares minimizer of `|| b R - X ||` unless overridden.
pub fn build_interface(
    plant: &Plant,
    poles: Option<&[Complex<f64>]>,
    r_override: Option<f64>,
) -> Result<Interface> {
    let (state_map, feedforward) = plant.solve_regulator()?;
    let default_poles;
    let poles = match poles {
        Some(p) => p,
        None => {
            default_poles = default_state_poles(plant.dim());
            &default_poles
        }
    };
    let feedback = plant::place_poles(plant.a(), plant.b(), poles)?;
    let feedthrough = match r_override {
        Some(r) => r,
        None => plant.b().dot(&state_map) / plant.b().dot(plant.b()),
    };
    Ok(Interface {
        plant: plant.clone(),
        state_map,
        feedforward,
        feedback,
        feedthrough,
    })
}

impl Interface {
    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    /// X: state the plant holds while tracking abstraction state z.
    pub fn state_map(&self) -> &DVector<f64> {
        &self.state_map
    }

    /// U: input holding the plant at `X z`.
    pub fn feedforward(&self) -> f64 {
        self.feedforward
    }

    /// k: stabilizing feedback on the tracking error `x - X z`.
    pub fn feedback(&self) -> &RowDVector<f64> {
        &self.feedback
    }

    /// R: direct injection of the abstraction input.
    pub fn feedthrough(&self) -> f64 {
        self.feedthrough
    }

    /// `A + b k`.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        self.plant.a() + self.plant.b() * &self.feedback
    }

    /// Interface control `u = k (xhat - X z) + U z + R v`; `xhat` is the true
    /// state under state feedback and the observer state under output
    /// feedback.
    pub fn input(&self, xhat: &DVector<f64>, z: f64, v: f64) -> f64 {
        let mut u = self.feedforward * z + self.feedthrough * v;
        for i in 0..xhat.len() {
            u += self.feedback[i] * (xhat[i] - self.state_map[i] * z);
        }
        u
    }

    /// Tracking error coordinate `x - X z`.
    pub fn tracking_error(&self, x: &DVector<f64>, z: f64) -> DVector<f64> {
        x - &self.state_map * z
    }
}

/// Builds the certificate for the interface's own closed loop `A + b k`.
pub fn build_certificate(iface: &Interface) -> Result<SimCertificate> {
    SimCertificate::for_closed_loop(iface, &iface.closed_loop())
}

impl SimCertificate {
    /// Certificate for an arbitrary Hurwitz tracking loop `a_cl` paired with
    /// the interface's `(X, R)`: solves `a_cl^T P + P a_cl = -I` and fixes
    /// `c_hat = ||c||^2 / lambda_min(P)` (the tightest valid scale),
    /// `alpha_rate = 1 / (2 lambda_max(P))`, and
    /// `gamma_coeff = 16 c_hat lambda_max(P) ||P (b R - X)||^2`.
    pub fn for_closed_loop(iface: &Interface, a_cl: &DMatrix<f64>) -> Result<Self> {
        let p = plant::solve_lyapunov(a_cl)?;
        let eigs = p.symmetric_eigenvalues();
        let lambda_min = eigs.min();
        let lambda_max = eigs.max();
        if lambda_min <= 0.0 {
            return Err(Error::NotHurwitz(plant::max_real_eigenvalue(a_cl)));
        }
        let c_hat = iface.plant().c().norm_squared() / lambda_min;
        let mismatch_gain = &p * (iface.plant().b() * iface.feedthrough() - iface.state_map());
        let gamma_coeff = 16.0 * c_hat * lambda_max * mismatch_gain.norm_squared();
        Ok(Self {
            p,
            c_hat,
            alpha_rate: 1.0 / (2.0 * lambda_max),
            gamma_coeff,
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    pub fn alpha_rate(&self) -> f64 {
        self.alpha_rate
    }

    pub fn gamma_coeff(&self) -> f64 {
        self.gamma_coeff
    }

    /// Simulation-function value `c_hat (x - X z)^T P (x - X z)`; always at
    /// least `(c x - z)^2`.
    pub fn value(&self, iface: &Interface, z: f64, x: &DVector<f64>) -> f64 {
        let err = iface.tracking_error(x, z);
        self.c_hat * (&err.transpose() * &self.p * &err)[0]
    }

    /// Explicit tracking bound `V0 exp(-alpha t) + gamma v_sup^2`.
    pub fn tracking_bound(&self, v0: f64, t: f64, v_sup: f64) -> f64 {
        v0 * (-self.alpha_rate * t).exp() + self.gamma_coeff * v_sup * v_sup
    }
}

/// Checks the certificate's decrease condition on a uniformly sampled
/// trajectory of `(z, x, v)` triples spaced `dt` apart: wherever
/// `gamma_coeff v^2 < V`, the forward difference of `V` must fall below
/// `-alpha_rate V` up to a fixed discretization slack. A test oracle, not a
/// runtime gate.
pub fn verify_decrease(
    cert: &SimCertificate,
    iface: &Interface,
    samples: &[(f64, DVector<f64>, f64)],
    dt: f64,
) -> bool {
    assert!(dt > 0.0, "sample spacing must be positive");
    let slack = 1e-6 + 10.0 * dt;
    let mut prev: Option<f64> = None;
    let mut prev_gated = false;
    for (z, x, v) in samples {
        let value = cert.value(iface, *z, x);
        if let Some(prev_value) = prev {
            if prev_gated {
                let rate = (value - prev_value) / dt;
                if rate >= -cert.alpha_rate * prev_value + slack {
                    return false;
                }
            }
        }
        prev_gated = cert.gamma_coeff * v * v < value;
        prev = Some(value);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{agent1, agent3_printed, agent4};
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    pub(crate) fn agent1_interface() -> Interface {
        build_interface(&agent1(), None, None).unwrap()
    }

    pub(crate) fn agent4_interface() -> Interface {
        build_interface(&agent4(), None, None).unwrap()
    }

    #[test]
    fn interface_for_agent1() {
        let iface = agent1_interface();
        assert_abs_diff_eq!(iface.state_map()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedforward(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedback()[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedthrough(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interface_for_agent4() {
        let iface = agent4_interface();
        assert_abs_diff_eq!(iface.state_map()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.state_map()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedforward(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedback()[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(iface.feedback()[1], -3.0, epsilon = 1e-12);
        // b^T X = 0, so the least-squares R vanishes
        assert_abs_diff_eq!(iface.feedthrough(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn interface_rejects_printed_agent3() {
        assert!(matches!(
            build_interface(&agent3_printed(), None, None),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn interface_residuals() {
        for iface in [agent1_interface(), agent4_interface()] {
            let p = iface.plant();
            let residual = p.a() * iface.state_map() + p.b() * iface.feedforward();
            assert!(residual.norm() <= 1e-10);
            assert!((p.output(iface.state_map()) - 1.0).abs() <= 1e-10);
            assert!(plant::is_hurwitz(&iface.closed_loop()));
        }
    }

    #[test]
    fn certificate_for_agent1() {
        let cert = build_certificate(&agent1_interface()).unwrap();
        assert_abs_diff_eq!(cert.p()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.c_hat(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.alpha_rate(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.gamma_coeff(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_vanishes_when_feedthrough_matches_state_map() {
        // scalar plant with b R = X by the least-squares default
        let cert = build_certificate(&agent1_interface()).unwrap();
        assert_eq!(cert.gamma_coeff(), 0.0);
    }

    #[test]
    fn certificate_for_agent4_matches_closed_forms() {
        let iface = agent4_interface();
        let cert = build_certificate(&iface).unwrap();
        // closed loop [[0,1],[-2,-3]] gives P = [[5/4,1/4],[1/4,1/4]]
        assert!((cert.p() - nalgebra::dmatrix![1.25, 0.25; 0.25, 0.25]).norm() < 1e-12);
        // 2x2 closed forms: trace 1.5, det 0.25
        let lmax = 0.75 + (0.75f64 * 0.75 - 0.25).sqrt();
        let lmin = 0.75 - (0.75f64 * 0.75 - 0.25).sqrt();
        assert_abs_diff_eq!(cert.c_hat(), 1.0 / lmin, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.alpha_rate(), 1.0 / (2.0 * lmax), epsilon = 1e-12);
        let mismatch = cert.p() * iface.tracking_error(&dvector![0.0, 0.0], 1.0);
        assert_abs_diff_eq!(
            cert.gamma_coeff(),
            16.0 * cert.c_hat() * lmax * mismatch.norm_squared(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn simulation_value_examples() {
        let iface = agent1_interface();
        let cert = build_certificate(&iface).unwrap();
        // x = X z gives zero
        assert_eq!(cert.value(&iface, 3.7, &dvector![3.7]), 0.0);
        // agent 1 at z = 0, x = 1: V = 2 * 0.5 = 1, tight against (y - z)^2 = 1
        assert_abs_diff_eq!(
            cert.value(&iface, 0.0, &dvector![1.0]),
            1.0,
            epsilon = 1e-12
        );

        let iface4 = agent4_interface();
        let cert4 = build_certificate(&iface4).unwrap();
        assert_eq!(cert4.value(&iface4, 1.0, &dvector![1.0, 0.0]), 0.0);
    }

    #[test]
    fn interface_input_examples() {
        let iface = agent1_interface();
        // stationary tracking: u = U z
        assert_abs_diff_eq!(iface.input(&dvector![2.0], 2.0, 0.0), -2.0, epsilon = 1e-12);
        // agent 1, x = 2, z = 1, v = 0
        assert_abs_diff_eq!(iface.input(&dvector![2.0], 1.0, 0.0), -3.0, epsilon = 1e-12);
        // linearity
        let u1 = iface.input(&dvector![0.7], 0.3, 0.1);
        let u2 = iface.input(&dvector![1.4], 0.6, 0.2);
        assert_abs_diff_eq!(u2, 2.0 * u1, epsilon = 1e-12);
    }

    #[test]
    fn tracking_bound_examples() {
        let cert = build_certificate(&agent1_interface()).unwrap();
        for t in [0.0, 0.5, 12.0] {
            assert_eq!(cert.tracking_bound(0.0, t, 0.0), 0.0);
        }
        assert_abs_diff_eq!(cert.tracking_bound(4.0, 0.0, 3.0), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            cert.tracking_bound(4.0, 2.0f64.ln(), 0.0),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn decrease_holds_on_stationary_track() {
        let iface = agent1_interface();
        let cert = build_certificate(&iface).unwrap();
        let samples: Vec<_> = (0..100).map(|_| (1.5, dvector![1.5], 0.0)).collect();
        assert!(verify_decrease(&cert, &iface, &samples, 1e-2));
    }

    #[test]
    fn decrease_holds_on_closed_loop_decay() {
        // agent 1 closed loop with z = 0, v = 0: x(t) = exp(-t) x0, V = x^2
        let iface = agent1_interface();
        let cert = build_certificate(&iface).unwrap();
        let dt = 1e-3;
        let samples: Vec<_> = (0..2000)
            .map(|k| (0.0, dvector![(-(k as f64) * dt).exp()], 0.0))
            .collect();
        assert!(verify_decrease(&cert, &iface, &samples, dt));
    }

    #[test]
    fn decrease_rejects_growing_value() {
        let iface = agent1_interface();
        let cert = build_certificate(&iface).unwrap();
        let dt = 1e-2;
        let samples: Vec<_> = (0..100)
            .map(|k| (0.0, dvector![1.0 + k as f64 * dt], 0.0))
            .collect();
        assert!(!verify_decrease(&cert, &iface, &samples, dt));
    }
}
