//! Closed-loop network simulation: composes plants, interfaces, and a
//! controller over a fixed or switching graph into one ODE, integrates it
//! with fixed-step RK4, and records trajectories and consensus metrics.

use nalgebra::{Complex, DMatrix, DVector};

use crate::abstraction::{self, Interface, SimCertificate};
use crate::controllers::{self, AgentState, ControllerKind, ControllerSpec};
use crate::error::{Error, Result};
use crate::graph::{Digraph, SwitchingSchedule};
use crate::plant::Plant;

/// Communication topology: one graph for the whole run, or a periodic
/// switching schedule.
#[derive(Debug, Clone)]
pub enum Topology {
    Fixed(Digraph),
    Switching(SwitchingSchedule),
}

impl Topology {
    pub fn node_count(&self) -> usize {
        match self {
            Topology::Fixed(g) => g.node_count(),
            Topology::Switching(s) => s.node_count(),
        }
    }

    /// Graph active at time `t` (right-continuous for schedules).
    pub fn active(&self, t: f64) -> &Digraph {
        match self {
            Topology::Fixed(g) => g,
            Topology::Switching(s) => s.active_graph(t),
        }
    }
}

/// Observer initialization policy for output-feedback runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObserverInit {
    /// Least-norm state consistent with the measured initial output,
    /// `xi(0) = c^T y(0) / ||c||^2`. Uses only measured data.
    #[default]
    MeasurementConsistent,
    Zero,
    /// Copies the true plant state; turns output feedback into an exact
    /// replica of state feedback (observer error identically zero).
    PlantState,
}

/// Static output-feedback certificate as supplied by a scenario.
#[derive(Debug, Clone)]
pub struct StaticCertSpec {
    pub p: DMatrix<f64>,
    pub nu: f64,
    pub lambda_hat: f64,
}

/// One agent's scenario entry: plant, initial state, and synthesis overrides.
#[derive(Debug, Clone)]
pub struct AgentSetup {
    pub plant: Plant,
    pub x0: DVector<f64>,
    pub poles: Option<Vec<Complex<f64>>>,
    pub observer_poles: Option<Vec<Complex<f64>>>,
    pub feedthrough: Option<f64>,
    pub weight: f64,
    pub static_cert: Option<StaticCertSpec>,
}

impl AgentSetup {
    pub fn new(plant: Plant, x0: DVector<f64>) -> Self {
        Self {
            plant,
            x0,
            poles: None,
            observer_poles: None,
            feedthrough: None,
            weight: 1.0,
            static_cert: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub agents: Vec<AgentSetup>,
    pub controller: ControllerKind,
    pub topology: Topology,
    pub observer_init: ObserverInit,
    pub dt: f64,
    pub t_final: f64,
    pub tolerance: f64,
    /// Record every `stride`-th sample (the final sample is always kept).
    pub stride: usize,
}

impl Scenario {
    pub fn new(agents: Vec<AgentSetup>, controller: ControllerKind, topology: Topology) -> Self {
        Self {
            agents,
            controller,
            topology,
            observer_init: ObserverInit::default(),
            dt: 1e-3,
            t_final: 40.0,
            tolerance: 1e-2,
            stride: 1,
        }
    }

    /// Runs every scenario check eagerly and aggregates the diagnostics.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.agents.is_empty() {
            issues.push("scenario lists no agents".to_string());
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            issues.push(format!("dt must be positive, got {}", self.dt));
        }
        if self.t_final.is_nan() || self.t_final < self.dt {
            issues.push(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            issues.push(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if self.stride == 0 {
            issues.push("stride must be at least 1".to_string());
        }
        for (i, agent) in self.agents.iter().enumerate() {
            let n = agent.plant.dim();
            if agent.x0.len() != n {
                issues.push(format!(
                    "agent {i}: initial state has length {}, plant dimension is {n}",
                    agent.x0.len()
                ));
            }
            if agent.weight.is_nan() || agent.weight <= 0.0 {
                issues.push(format!(
                    "agent {i}: weight must be positive, got {}",
                    agent.weight
                ));
            }
            let report = agent.plant.validate();
            for msg in &report.messages {
                issues.push(format!("agent {i}: {msg}"));
            }
            if let Some(poles) = &agent.poles {
                if poles.len() != n {
                    issues.push(format!(
                        "agent {i}: expected {n} poles, got {}",
                        poles.len()
                    ));
                }
            }
            if let Some(poles) = &agent.observer_poles {
                if poles.len() != n {
                    issues.push(format!(
                        "agent {i}: expected {n} observer poles, got {}",
                        poles.len()
                    ));
                }
            }
            if self.controller == ControllerKind::StaticOutput && agent.static_cert.is_none() {
                issues.push(format!(
                    "agent {i}: static output feedback requires a (P, nu, lambda_hat) certificate"
                ));
            }
        }
        if self.topology.node_count() != self.agents.len() {
            issues.push(format!(
                "topology has {} nodes for {} agents",
                self.topology.node_count(),
                self.agents.len()
            ));
        }
        match &self.topology {
            Topology::Fixed(g) => {
                if !g.is_strongly_connected_balanced() {
                    issues.push(
                        "graph fails is_strongly_connected_balanced (connectivity/balance)"
                            .to_string(),
                    );
                }
            }
            Topology::Switching(s) => {
                // schedule graphs are validated at construction; check that
                // switch instants land on the integration grid
                let ratio = s.dwell() / self.dt;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                    issues.push(format!(
                        "switch-grid alignment: segment duration {} is not an integer multiple \
                         of dt = {}",
                        s.dwell(),
                        self.dt
                    ));
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(issues.join("; ")))
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.weight).collect()
    }

    /// Initial outputs `y_i(0) = c_i x_i(0)`.
    pub fn initial_outputs(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.plant.output(&a.x0)).collect()
    }

    /// Deterministic FNV-1a fingerprint of every scenario field.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.usize(self.agents.len());
        h.usize(match self.controller {
            ControllerKind::StateFeedback => 0,
            ControllerKind::OutputFeedback => 1,
            ControllerKind::StaticOutput => 2,
        });
        h.usize(match self.observer_init {
            ObserverInit::MeasurementConsistent => 0,
            ObserverInit::Zero => 1,
            ObserverInit::PlantState => 2,
        });
        for agent in &self.agents {
            h.usize(agent.plant.dim());
            agent.plant.a().iter().for_each(|&v| h.f64(v));
            agent.plant.b().iter().for_each(|&v| h.f64(v));
            agent.plant.c().iter().for_each(|&v| h.f64(v));
            agent.x0.iter().for_each(|&v| h.f64(v));
            for poles in [&agent.poles, &agent.observer_poles] {
                match poles {
                    Some(ps) => {
                        h.usize(1 + ps.len());
                        ps.iter().for_each(|p| {
                            h.f64(p.re);
                            h.f64(p.im);
                        });
                    }
                    None => h.usize(0),
                }
            }
            h.f64(agent.feedthrough.unwrap_or(f64::NAN));
            h.f64(agent.weight);
            match &agent.static_cert {
                Some(cert) => {
                    h.usize(1);
                    cert.p.iter().for_each(|&v| h.f64(v));
                    h.f64(cert.nu);
                    h.f64(cert.lambda_hat);
                }
                None => h.usize(0),
            }
        }
        match &self.topology {
            Topology::Fixed(g) => {
                h.usize(0);
                g.weights().iter().for_each(|&v| h.f64(v));
            }
            Topology::Switching(s) => {
                h.usize(1 + s.graphs().len());
                for g in s.graphs() {
                    g.weights().iter().for_each(|&v| h.f64(v));
                }
                s.order().iter().for_each(|&k| h.usize(k));
                h.f64(s.dwell());
            }
        }
        h.f64(self.dt);
        h.f64(self.t_final);
        h.f64(self.tolerance);
        h.usize(self.stride);
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn f64(&mut self, v: f64) {
        self.write(&v.to_bits().to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Arithmetic mean of the initial outputs.
pub fn ave(y0: &[f64]) -> f64 {
    assert!(!y0.is_empty(), "ave needs at least one value");
    y0.iter().sum::<f64>() / y0.len() as f64
}

/// Weighted mean `sum(w_i y_i) / sum(w_i)`.
pub fn weighted_ave(y0: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(y0.len(), weights.len());
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "weights must be positive");
    y0.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total
}

/// Gains and certificates synthesized for one scenario.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub interfaces: Vec<Interface>,
    pub certificates: Vec<SimCertificate>,
    pub controller: ControllerSpec,
}

/// Builds all interfaces, the controller for the scenario's kind, and the
/// simulation certificates for the loop each agent actually closes.
pub fn synthesize(scenario: &Scenario) -> Result<Synthesis> {
    let mut interfaces = Vec::with_capacity(scenario.agents.len());
    for agent in &scenario.agents {
        interfaces.push(abstraction::build_interface(
            &agent.plant,
            agent.poles.as_deref(),
            agent.feedthrough,
        )?);
    }
    let weights = scenario.weights();
    let controller = match scenario.controller {
        ControllerKind::StateFeedback => {
            controllers::make_state_feedback(interfaces.clone(), &weights)?
        }
        ControllerKind::OutputFeedback => {
            let poles: Vec<_> = scenario
                .agents
                .iter()
                .map(|a| a.observer_poles.clone())
                .collect();
            controllers::make_output_feedback(interfaces.clone(), &poles, &weights)?
        }
        ControllerKind::StaticOutput => {
            let mut certs = Vec::with_capacity(scenario.agents.len());
            let mut margins = Vec::with_capacity(scenario.agents.len());
            for (i, agent) in scenario.agents.iter().enumerate() {
                let cert = agent.static_cert.as_ref().ok_or_else(|| {
                    Error::InvalidScenario(format!("agent {i}: missing static certificate"))
                })?;
                certs.push((cert.p.clone(), cert.nu));
                margins.push(cert.lambda_hat);
            }
            controllers::make_static_output_feedback(
                interfaces.clone(),
                &certs,
                &margins,
                &weights,
            )?
        }
    };
    // Certificates are built for the loop each agent actually closes: A + bk
    // for interface-based laws, A + b k_static c for static output feedback.
    let mut certificates = Vec::with_capacity(interfaces.len());
    for (iface, law) in interfaces.iter().zip(controller.laws()) {
        let closed = match scenario.controller {
            ControllerKind::StaticOutput => {
                let gain = law.static_cert.as_ref().expect("static law").gain();
                let plant = iface.plant();
                plant.a() + plant.b() * plant.c() * gain
            }
            _ => iface.closed_loop(),
        };
        certificates.push(SimCertificate::for_closed_loop(iface, &closed)?);
    }
    Ok(Synthesis {
        interfaces,
        certificates,
        controller,
    })
}

/// Offsets of each agent's `[x, z, xi?]` block in the stacked state vector.
#[derive(Debug, Clone)]
struct StateLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    with_observer: bool,
    total: usize,
}

impl StateLayout {
    fn new(dims: Vec<usize>, with_observer: bool) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d + 1 + if with_observer { d } else { 0 };
        }
        Self {
            dims,
            offsets,
            with_observer,
            total,
        }
    }

    fn z_index(&self, i: usize) -> usize {
        self.offsets[i] + self.dims[i]
    }

    fn agent_state<'a>(&self, state: &'a DVector<f64>, i: usize) -> AgentState<'a> {
        let x = state.rows(self.offsets[i], self.dims[i]);
        let observer = self
            .with_observer
            .then(|| state.rows(self.offsets[i] + self.dims[i] + 1, self.dims[i]));
        AgentState {
            x,
            z: state[self.z_index(i)],
            observer,
        }
    }

    fn z_vector(&self, state: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dims.len(),
            (0..self.dims.len()).map(|i| state[self.z_index(i)]),
        )
    }
}

fn layout_for(scenario: &Scenario) -> StateLayout {
    StateLayout::new(
        scenario.agents.iter().map(|a| a.plant.dim()).collect(),
        scenario.controller == ControllerKind::OutputFeedback,
    )
}

fn initial_state(scenario: &Scenario, layout: &StateLayout) -> DVector<f64> {
    let mut state = DVector::zeros(layout.total);
    for (i, agent) in scenario.agents.iter().enumerate() {
        state
            .rows_mut(layout.offsets[i], agent.plant.dim())
            .copy_from(&agent.x0);
        let y0 = agent.plant.output(&agent.x0);
        state[layout.z_index(i)] = y0;
        if layout.with_observer {
            let xi0 = match scenario.observer_init {
                ObserverInit::Zero => DVector::zeros(agent.plant.dim()),
                ObserverInit::PlantState => agent.x0.clone(),
                ObserverInit::MeasurementConsistent => {
                    let c = agent.plant.c();
                    let norm2 = c.norm_squared();
                    if norm2 > 0.0 {
                        c.transpose() * (y0 / norm2)
                    } else {
                        DVector::zeros(agent.plant.dim())
                    }
                }
            };
            state
                .rows_mut(layout.offsets[i] + agent.plant.dim() + 1, agent.plant.dim())
                .copy_from(&xi0);
        }
    }
    state
}

/// Validates the scenario and returns the stacked initial state with the
/// mandated `z_i(0) = y_i(0)` initialization.
pub fn init_network(scenario: &Scenario) -> Result<DVector<f64>> {
    scenario.validate()?;
    let layout = layout_for(scenario);
    Ok(initial_state(scenario, &layout))
}

/// One classical 4th-order Runge-Kutta step; fails if any component of the
/// result is non-finite.
pub fn step_rk4<F>(state: &DVector<f64>, t: f64, dt: f64, rate: F) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = rate(t, state);
    let k2 = rate(t + 0.5 * dt, &(state + &k1 * (0.5 * dt)));
    let k3 = rate(t + 0.5 * dt, &(state + &k2 * (0.5 * dt)));
    let k4 = rate(t + dt, &(state + &k3 * dt));
    let next = state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Time-indexed record of a closed-loop run, agent-major.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// `e_i(t) = y_i(t) - target` where the target is the (weighted) average
    /// of the initial outputs.
    pub e: Vec<Vec<f64>>,
    pub x: Vec<Vec<DVector<f64>>>,
    pub observer: Option<Vec<Vec<DVector<f64>>>>,
    pub weights: Vec<f64>,
    pub target: f64,
    pub scenario_hash: u64,
}

impl Trajectory {
    pub fn agent_count(&self) -> usize {
        self.y.len()
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }
}

/// Consensus quality metrics for one run.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub final_errors: Vec<f64>,
    /// `max_t | sum_i w_i z_i(t) - sum_i w_i y_i(0) |`.
    pub max_sum_drift: f64,
    /// Earliest recorded time from which every `|e_i|` stays below the
    /// tolerance through the end of the run.
    pub settling_time: Option<f64>,
    /// Samples violating the certificate tracking bound (plus 1e-9 slack).
    pub bound_violations: usize,
}

/// Integrates the scenario from 0 to `t_final` and computes metrics.
/// Deterministic: identical scenarios produce identical results.
pub fn run(scenario: &Scenario) -> Result<(Trajectory, RunMetrics)> {
    scenario.validate()?;
    let synthesis = synthesize(scenario)?;
    run_with(scenario, &synthesis)
}

/// As [`run`], reusing an existing synthesis.
pub fn run_with(scenario: &Scenario, synthesis: &Synthesis) -> Result<(Trajectory, RunMetrics)> {
    let layout = layout_for(scenario);
    let n_agents = scenario.agents.len();
    let dt = scenario.dt;
    let steps = (scenario.t_final / dt).round().max(1.0) as usize;

    let weights = scenario.weights();
    let target = weighted_ave(&scenario.initial_outputs(), &weights);

    let mut traj = Trajectory {
        times: Vec::new(),
        y: vec![Vec::new(); n_agents],
        z: vec![Vec::new(); n_agents],
        u: vec![Vec::new(); n_agents],
        v: vec![Vec::new(); n_agents],
        e: vec![Vec::new(); n_agents],
        x: vec![Vec::new(); n_agents],
        observer: (scenario.controller == ControllerKind::OutputFeedback)
            .then(|| vec![Vec::new(); n_agents]),
        weights,
        target,
        scenario_hash: scenario.fingerprint(),
    };

    let controller = &synthesis.controller;
    let mut state = initial_state(scenario, &layout);
    for step in 0..=steps {
        let t = step as f64 * dt;
        // switch instants sit on the grid, so the step midpoint is safely
        // inside the active segment
        let graph = scenario.topology.active(t + 0.5 * dt);
        if step % scenario.stride == 0 || step == steps {
            let z_all = layout.z_vector(&state);
            traj.times.push(t);
            for i in 0..n_agents {
                let agent_state = layout.agent_state(&state, i);
                let rates = controller.rates(i, &agent_state, &z_all, graph);
                let x_owned = agent_state.x.clone_owned();
                let y = scenario.agents[i].plant.output(&x_owned);
                traj.y[i].push(y);
                traj.z[i].push(agent_state.z);
                traj.u[i].push(rates.u);
                traj.v[i].push(rates.dz);
                traj.e[i].push(y - target);
                traj.x[i].push(x_owned);
                if let Some(obs) = traj.observer.as_mut() {
                    obs[i].push(agent_state.observer.as_ref().unwrap().clone_owned());
                }
            }
        }
        if step == steps {
            break;
        }
        let rate = |_t: f64, s: &DVector<f64>| -> DVector<f64> {
            let z_all = layout.z_vector(s);
            let mut deriv = DVector::zeros(layout.total);
            for i in 0..n_agents {
                let agent_state = layout.agent_state(s, i);
                let rates = controller.rates(i, &agent_state, &z_all, graph);
                let plant = &scenario.agents[i].plant;
                let dx = plant.a() * agent_state.x + plant.b() * rates.u;
                deriv
                    .rows_mut(layout.offsets[i], plant.dim())
                    .copy_from(&dx);
                deriv[layout.z_index(i)] = rates.dz;
                if let Some(dobs) = rates.dobserver {
                    deriv
                        .rows_mut(layout.offsets[i] + plant.dim() + 1, plant.dim())
                        .copy_from(&dobs);
                }
            }
            deriv
        };
        state = step_rk4(&state, t, dt, rate)?;
    }

    let metrics = compute_metrics(
        &traj,
        &synthesis.interfaces,
        &synthesis.certificates,
        scenario.tolerance,
    );
    Ok((traj, metrics))
}

/// Computes consensus metrics from a recorded trajectory. Bound violations
/// use each agent's certificate with `V(0)` from the first sample and the
/// running supremum of `|v_i|`.
pub fn compute_metrics(
    traj: &Trajectory,
    interfaces: &[Interface],
    certificates: &[SimCertificate],
    tolerance: f64,
) -> RunMetrics {
    let n_agents = traj.agent_count();
    let samples = traj.sample_count();
    assert!(samples > 0, "trajectory has no samples");
    assert_eq!(interfaces.len(), n_agents);
    assert_eq!(certificates.len(), n_agents);

    let final_errors: Vec<f64> = (0..n_agents)
        .map(|i| traj.e[i][samples - 1].abs())
        .collect();

    let target_sum: f64 = (0..n_agents).map(|i| traj.weights[i] * traj.z[i][0]).sum();
    let mut max_sum_drift = 0.0_f64;
    for k in 0..samples {
        let sum: f64 = (0..n_agents).map(|i| traj.weights[i] * traj.z[i][k]).sum();
        max_sum_drift = max_sum_drift.max((sum - target_sum).abs());
    }

    let mut settled_from = samples;
    for k in (0..samples).rev() {
        if (0..n_agents).all(|i| traj.e[i][k].abs() < tolerance) {
            settled_from = k;
        } else {
            break;
        }
    }
    let settling_time = (settled_from < samples).then(|| traj.times[settled_from]);

    let mut bound_violations = 0;
    for i in 0..n_agents {
        let v0 = certificates[i].value(&interfaces[i], traj.z[i][0], &traj.x[i][0]);
        let mut v_sup = 0.0_f64;
        for k in 0..samples {
            v_sup = v_sup.max(traj.v[i][k].abs());
            let mismatch = traj.y[i][k] - traj.z[i][k];
            let bound = certificates[i].tracking_bound(v0, traj.times[k], v_sup);
            if mismatch * mismatch > bound + 1e-9 {
                bound_violations += 1;
            }
        }
    }

    RunMetrics {
        final_errors,
        max_sum_drift,
        settling_time,
        bound_violations,
    }
}
