//! The three distributed control laws: state feedback, observer-based output
//! feedback, and static output feedback, each pairing the neighbor-averaging
//! consensus protocol with a per-agent interface.

use nalgebra::{Complex, DMatrix, DVector, DVectorView};

use crate::abstraction::{self, Interface};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::plant::{self, Plant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    StateFeedback,
    OutputFeedback,
    StaticOutput,
}

/// Verified static output-feedback certificate and the gain it induces.
#[derive(Debug, Clone)]
pub struct StaticCertificate {
    p: DMatrix<f64>,
    nu: f64,
    lambda_hat: f64,
    gain: f64,
}

impl StaticCertificate {
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda_hat(&self) -> f64 {
        self.lambda_hat
    }

    /// Output gain `k_static = -lambda_hat * nu`.
    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// Per-agent law: interface plus kind-specific gains.
#[derive(Debug, Clone)]
pub struct AgentLaw {
    pub interface: Interface,
    pub observer: Option<DVector<f64>>,
    pub static_cert: Option<StaticCertificate>,
    pub weight: f64,
}

/// One agent's dynamic state as seen by the controller.
pub struct AgentState<'a> {
    pub x: DVectorView<'a, f64>,
    pub z: f64,
    pub observer: Option<DVectorView<'a, f64>>,
}

/// Rates produced by one controller evaluation.
#[derive(Debug, Clone)]
pub struct AgentRates {
    pub u: f64,
    pub dz: f64,
    pub dobserver: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct ControllerSpec {
    kind: ControllerKind,
    laws: Vec<AgentLaw>,
}

fn check_weights(interfaces: &[Interface], weights: &[f64]) -> Result<()> {
    if interfaces.is_empty() {
        return Err(Error::DimensionMismatch(
            "controller needs at least one agent".into(),
        ));
    }
    if weights.len() != interfaces.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} agents",
            weights.len(),
            interfaces.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w <= 0.0) {
        return Err(Error::InvalidScenario(format!(
            "agent weights must be positive, got {w}"
        )));
    }
    Ok(())
}

/// Distributed state-feedback law.
pub fn make_state_feedback(interfaces: Vec<Interface>, weights: &[f64]) -> Result<ControllerSpec> {
    check_weights(&interfaces, weights)?;
    let laws = interfaces
        .into_iter()
        .zip(weights)
        .map(|(interface, &weight)| AgentLaw {
            interface,
            observer: None,
            static_cert: None,
            weight,
        })
        .collect();
    Ok(ControllerSpec {
        kind: ControllerKind::StateFeedback,
        laws,
    })
}

/// Observer-based output feedback; `observer_poles[i]` of `None` selects the
/// default set `{-2, -4, ...}` for that agent.
pub fn make_output_feedback(
    interfaces: Vec<Interface>,
    observer_poles: &[Option<Vec<Complex<f64>>>],
    weights: &[f64],
) -> Result<ControllerSpec> {
    check_weights(&interfaces, weights)?;
    if observer_poles.len() != interfaces.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observer pole sets for {} agents",
            observer_poles.len(),
            interfaces.len()
        )));
    }
    let mut laws = Vec::with_capacity(interfaces.len());
    for ((interface, poles), &weight) in interfaces.into_iter().zip(observer_poles).zip(weights) {
        let plant = interface.plant();
        let default;
        let poles = match poles {
            Some(p) => p.as_slice(),
            None => {
                default = abstraction::default_observer_poles(plant.dim());
                &default
            }
        };
        let gain = plant::observer_gain(plant.a(), plant.c(), poles)?;
        laws.push(AgentLaw {
            interface,
            observer: Some(gain),
            static_cert: None,
            weight,
        });
    }
    Ok(ControllerSpec {
        kind: ControllerKind::OutputFeedback,
        laws,
    })
}

/// Checks a user-supplied static output-feedback certificate: `P` symmetric
/// positive definite, `b^T P = nu c` with `nu != 0`, and
/// `2 P b b^T P - A^T P - P A` positive definite.
pub fn verify_static_certificate(plant: &Plant, p: &DMatrix<f64>, nu: f64) -> bool {
    let n = plant.dim();
    if nu == 0.0 || p.nrows() != n || p.ncols() != n {
        return false;
    }
    if (p - p.transpose()).norm() > 1e-9 * p.norm().max(1.0) {
        return false;
    }
    if p.symmetric_eigenvalues().min() <= 0.0 {
        return false;
    }
    let alignment = plant.b().transpose() * p - plant.c() * nu;
    if alignment.norm() > 1e-9 * p.norm() {
        return false;
    }
    let pb = p * plant.b();
    let slack = 2.0 * &pb * pb.transpose() - plant.a().transpose() * p - p * plant.a();
    slack.symmetric_eigenvalues().min() > 0.0
}

/// Static output feedback from verified `(P, nu)` certificates and margins
/// `lambda_hat > 1`; the induced gain is `k_static = -lambda_hat * nu` and
/// the closed loop `A + b k_static c` is checked Hurwitz.
pub fn make_static_output_feedback(
    interfaces: Vec<Interface>,
    certificates: &[(DMatrix<f64>, f64)],
    lambda_hats: &[f64],
    weights: &[f64],
) -> Result<ControllerSpec> {
    check_weights(&interfaces, weights)?;
    if certificates.len() != interfaces.len() || lambda_hats.len() != interfaces.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} certificates and {} margins for {} agents",
            certificates.len(),
            lambda_hats.len(),
            interfaces.len()
        )));
    }
    let mut laws = Vec::with_capacity(interfaces.len());
    for (idx, ((interface, (p, nu)), (&lambda_hat, &weight))) in interfaces
        .into_iter()
        .zip(certificates)
        .zip(lambda_hats.iter().zip(weights))
        .enumerate()
    {
        if lambda_hat.is_nan() || lambda_hat <= 1.0 {
            return Err(Error::CertificateInvalid(format!(
                "agent {idx}: lambda_hat must exceed 1, got {lambda_hat}"
            )));
        }
        let plant = interface.plant();
        if !verify_static_certificate(plant, p, *nu) {
            return Err(Error::CertificateInvalid(format!(
                "agent {idx}: (P, nu) fails the static feedback conditions"
            )));
        }
        let gain = -lambda_hat * nu;
        let closed = plant.a() + plant.b() * plant.c() * gain;
        if !plant::is_hurwitz(&closed) {
            return Err(Error::CertificateInvalid(format!(
                "agent {idx}: A + b k c is not Hurwitz for k = {gain}"
            )));
        }
        laws.push(AgentLaw {
            interface,
            observer: None,
            static_cert: Some(StaticCertificate {
                p: p.clone(),
                nu: *nu,
                lambda_hat,
                gain,
            }),
            weight,
        });
    }
    Ok(ControllerSpec {
        kind: ControllerKind::StaticOutput,
        laws,
    })
}

/// Best-effort diagonal search for a static certificate, `n <= 2` only.
///
/// Heuristic: sweeps diagonal `P` candidates over a log grid, solves the
/// alignment `b^T P = nu c` in least squares, and keeps the first candidate
/// that verifies. Absence of a result does not prove infeasibility.
pub fn search_static_certificate(plant: &Plant) -> Option<(DMatrix<f64>, f64)> {
    let n = plant.dim();
    if n > 2 {
        return None;
    }
    let grid: Vec<f64> = (-6..=6).map(|e| 2.0_f64.powi(e)).collect();
    let mut diag = vec![0.0; n];
    let mut indices = vec![0usize; n];
    loop {
        for (d, &idx) in diag.iter_mut().zip(&indices) {
            *d = grid[idx];
        }
        let p = DMatrix::from_diagonal(&DVector::from_row_slice(&diag));
        let bp = plant.b().transpose() * &p;
        let c = plant.c();
        let denom = c.norm_squared();
        if denom > 0.0 {
            let nu = bp.dot(c) / denom;
            if nu != 0.0 && verify_static_certificate(plant, &p, nu) {
                return Some((p, nu));
            }
        }
        // odometer over the grid
        let mut carry = 0;
        loop {
            indices[carry] += 1;
            if indices[carry] < grid.len() {
                break;
            }
            indices[carry] = 0;
            carry += 1;
            if carry == n {
                return None;
            }
        }
    }
}

impl ControllerSpec {
    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn laws(&self) -> &[AgentLaw] {
        &self.laws
    }

    pub fn agent_count(&self) -> usize {
        self.laws.len()
    }

    /// Evaluates agent `i`'s law: consensus input from the active graph,
    /// abstraction rate `dz = v`, the control `u`, and the observer rate
    /// where applicable.
    pub fn rates(
        &self,
        i: usize,
        state: &AgentState,
        z_all: &DVector<f64>,
        graph: &Digraph,
    ) -> AgentRates {
        let law = &self.laws[i];
        let iface = &law.interface;
        let plant = iface.plant();
        let v = graph.consensus_input(z_all, i, law.weight);
        match self.kind {
            ControllerKind::StateFeedback => {
                let u = interface_input_view(iface, &state.x, state.z, v);
                AgentRates {
                    u,
                    dz: v,
                    dobserver: None,
                }
            }
            ControllerKind::OutputFeedback => {
                let observer = state
                    .observer
                    .as_ref()
                    .expect("output feedback carries an observer state");
                let gain = law.observer.as_ref().expect("observer gain");
                let u = interface_input_view(iface, observer, state.z, v);
                let y = dot_row(plant.c(), &state.x);
                let innovation = y - dot_row(plant.c(), observer);
                let dobserver = plant.a() * observer + plant.b() * u - gain * innovation;
                AgentRates {
                    u,
                    dz: v,
                    dobserver: Some(dobserver),
                }
            }
            ControllerKind::StaticOutput => {
                let cert = law.static_cert.as_ref().expect("static gain");
                let y = dot_row(plant.c(), &state.x);
                let u = cert.gain() * (y - state.z)
                    + iface.feedforward() * state.z
                    + iface.feedthrough() * v;
                AgentRates {
                    u,
                    dz: v,
                    dobserver: None,
                }
            }
        }
    }
}

fn dot_row(row: &nalgebra::RowDVector<f64>, x: &DVectorView<f64>) -> f64 {
    row.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

fn interface_input_view(iface: &Interface, xhat: &DVectorView<f64>, z: f64, v: f64) -> f64 {
    let mut u = iface.feedforward() * z + iface.feedthrough() * v;
    let k = iface.feedback();
    let x_map = iface.state_map();
    for i in 0..xhat.len() {
        u += k[i] * (xhat[i] - x_map[i] * z);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::build_interface;
    use crate::demo::{agent1, agent2, agent4};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    fn scalar_interfaces() -> Vec<Interface> {
        vec![build_interface(&agent1(), None, None).unwrap()]
    }

    #[test]
    fn state_feedback_construction() {
        let ifaces = vec![
            build_interface(&agent1(), None, None).unwrap(),
            build_interface(&agent4(), None, None).unwrap(),
        ];
        let spec = make_state_feedback(ifaces, &[1.0, 1.0]).unwrap();
        assert_eq!(spec.kind(), ControllerKind::StateFeedback);
        assert_eq!(spec.agent_count(), 2);
    }

    #[test]
    fn empty_agent_list_rejected() {
        assert!(matches!(
            make_state_feedback(vec![], &[]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn output_feedback_default_observer() {
        let spec = make_output_feedback(scalar_interfaces(), &[None], &[1.0]).unwrap();
        let gain = spec.laws()[0].observer.as_ref().unwrap();
        // agent 1 with default pole -2: 1 + l = -2
        assert_abs_diff_eq!(gain[0], -3.0, epsilon = 1e-12);
    }

    #[test]
    fn output_feedback_closed_observers_are_hurwitz() {
        let ifaces = vec![
            build_interface(&agent1(), None, None).unwrap(),
            build_interface(&agent2(), None, None).unwrap(),
            build_interface(&agent4(), None, None).unwrap(),
        ];
        let spec = make_output_feedback(ifaces, &[None, None, None], &[1.0; 3]).unwrap();
        for law in spec.laws() {
            let p = law.interface.plant();
            let closed = p.a() + law.observer.as_ref().unwrap() * p.c();
            assert!(plant::is_hurwitz(&closed));
        }
    }

    #[test]
    fn output_feedback_rejects_unobservable() {
        let p = Plant::new(
            DMatrix::identity(2, 2),
            dvector![1.0, 1.0],
            nalgebra::RowDVector::from_row_slice(&[1.0, 0.0]),
        )
        .unwrap();
        let err = plant::observer_gain(
            p.a(),
            p.c(),
            &[Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)],
        );
        assert!(matches!(err, Err(Error::Unobservable)));
    }

    #[test]
    fn static_certificate_examples() {
        let p1 = agent1();
        assert!(verify_static_certificate(&p1, &dmatrix![2.0], 2.0));
        assert!(!verify_static_certificate(&p1, &dmatrix![0.5], 0.5));
        assert!(!verify_static_certificate(&p1, &dmatrix![2.0], 0.0));
    }

    #[test]
    fn static_gain_and_closed_loop() {
        let spec = make_static_output_feedback(
            scalar_interfaces(),
            &[(dmatrix![2.0], 2.0)],
            &[1.5],
            &[1.0],
        )
        .unwrap();
        let cert = spec.laws()[0].static_cert.as_ref().unwrap();
        assert_abs_diff_eq!(cert.gain(), -3.0, epsilon = 1e-12);
        // closed matrix 1 - 3 = -2
        let p = spec.laws()[0].interface.plant();
        let closed = p.a() + p.b() * p.c() * cert.gain();
        assert_abs_diff_eq!(closed[(0, 0)], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn static_rejects_boundary_lambda_hat() {
        let err = make_static_output_feedback(
            scalar_interfaces(),
            &[(dmatrix![2.0], 2.0)],
            &[1.0],
            &[1.0],
        );
        assert!(matches!(err, Err(Error::CertificateInvalid(_))));
    }

    #[test]
    fn static_rejects_failing_certificate() {
        let err = make_static_output_feedback(
            scalar_interfaces(),
            &[(dmatrix![0.5], 0.5)],
            &[2.0],
            &[1.0],
        );
        assert!(matches!(err, Err(Error::CertificateInvalid(_))));
    }

    #[test]
    fn certificate_search_heuristic() {
        assert!(search_static_certificate(&agent1()).is_some());
        // oscillator: b^T P = nu c forces P22 = 0, impossible for P > 0
        assert!(search_static_certificate(&agent2()).is_none());
    }

    fn single_node_graph() -> Digraph {
        Digraph::new(DMatrix::zeros(1, 1)).unwrap()
    }

    #[test]
    fn rates_state_feedback_example() {
        // agent 1 as node 0 with a sole neighbor holding z = 3
        let g = Digraph::from_edges(2, &[(1, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let ifaces = vec![
            build_interface(&agent1(), None, None).unwrap(),
            build_interface(&agent1(), None, None).unwrap(),
        ];
        let spec = make_state_feedback(ifaces, &[1.0, 1.0]).unwrap();
        let x = dvector![2.0];
        let z_all = DVector::from_vec(vec![1.0, 3.0]);
        let state = AgentState {
            x: x.as_view(),
            z: 1.0,
            observer: None,
        };
        let rates = spec.rates(0, &state, &z_all, &g);
        assert_abs_diff_eq!(rates.dz, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rates.u, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rates_static_example() {
        // k_static = -3, y = 2, z = 1, v = 0 gives u = -3 - 1 = -4
        let spec = make_static_output_feedback(
            scalar_interfaces(),
            &[(dmatrix![2.0], 2.0)],
            &[1.5],
            &[1.0],
        )
        .unwrap();
        let x = dvector![2.0];
        let z_all = DVector::from_vec(vec![1.0]);
        let state = AgentState {
            x: x.as_view(),
            z: 1.0,
            observer: None,
        };
        let rates = spec.rates(0, &state, &z_all, &single_node_graph());
        assert_abs_diff_eq!(rates.u, -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rates.dz, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn consensus_manifold_is_an_equilibrium() {
        let z_star = 1.7;
        let plants = [agent1(), agent2(), agent4()];
        let g = Digraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let ifaces: Vec<_> = plants
            .iter()
            .map(|p| build_interface(p, None, None).unwrap())
            .collect();

        let state_spec = make_state_feedback(ifaces.clone(), &[1.0; 3]).unwrap();
        let output_spec =
            make_output_feedback(ifaces.clone(), &[None, None, None], &[1.0; 3]).unwrap();

        let z_all = DVector::from_element(3, z_star);
        for (i, iface) in ifaces.iter().enumerate() {
            let x_eq = iface.state_map() * z_star;
            let state = AgentState {
                x: x_eq.as_view(),
                z: z_star,
                observer: None,
            };
            let rates = state_spec.rates(i, &state, &z_all, &g);
            assert_abs_diff_eq!(rates.dz, 0.0, epsilon = 1e-12);
            let dx = iface.plant().a() * &x_eq + iface.plant().b() * rates.u;
            assert!(dx.norm() < 1e-10);

            let obs_state = AgentState {
                x: x_eq.as_view(),
                z: z_star,
                observer: Some(x_eq.as_view()),
            };
            let rates = output_spec.rates(i, &obs_state, &z_all, &g);
            assert_abs_diff_eq!(rates.dz, 0.0, epsilon = 1e-12);
            let dx = iface.plant().a() * &x_eq + iface.plant().b() * rates.u;
            assert!(dx.norm() < 1e-10);
            assert!(rates.dobserver.unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn unit_weight_matches_unweighted_bitwise() {
        let g = Digraph::from_edges(
            3,
            &[(0, 1, 0.3), (1, 2, 1.7), (2, 0, 0.9), (1, 0, 0.2)],
        )
        .unwrap();
        let z = DVector::from_vec(vec![0.3, -1.7, 2.9]);
        for i in 0..3 {
            // raw neighbor-averaging sum, no weight division anywhere
            let mut unweighted = 0.0;
            for j in 0..3 {
                unweighted += g.weights()[(i, j)] * (z[j] - z[i]);
            }
            assert_eq!(g.consensus_input(&z, i, 1.0).to_bits(), unweighted.to_bits());
        }
    }
}
