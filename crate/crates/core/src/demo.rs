//! Built-in demonstration scenarios: the four heterogeneous agents with the
//! two switching ring/path graphs, a static output-feedback trio of scalar
//! plants, and a weighted-consensus integrator network.

use nalgebra::{dmatrix, dvector, DMatrix, DVector, RowDVector};

use crate::controllers::ControllerKind;
use crate::graph::{Digraph, SwitchingSchedule};
use crate::plant::Plant;
use crate::simulator::{AgentSetup, Scenario, StaticCertSpec, Topology};

/// Scalar first-order agent, `A = 1, b = 1, c = 1`.
pub fn agent1() -> Plant {
    Plant::new(
        dmatrix![1.0],
        dvector![1.0],
        RowDVector::from_row_slice(&[1.0]),
    )
    .unwrap()
}

/// Undamped oscillator with position output.
pub fn agent2() -> Plant {
    Plant::new(
        dmatrix![0.0, 1.0; -1.0, 0.0],
        dvector![0.0, 1.0],
        RowDVector::from_row_slice(&[1.0, 0.0]),
    )
    .unwrap()
}

/// Third-order agent with the output row as printed; its regulator equations
/// are infeasible (transmission zero at the origin), so admissibility checks
/// reject it.
pub fn agent3_printed() -> Plant {
    Plant::new(
        dmatrix![0.0, 1.0, 0.0; -1.0, 0.0, 1.0; 2.0, 0.0, 1.0],
        dvector![0.0, 1.0, 1.0],
        RowDVector::from_row_slice(&[0.0, 1.0, 0.0]),
    )
    .unwrap()
}

/// Third-order agent with the minimally corrected output row `[0, 1, 1]`,
/// which restores solvability (`X = (0, 0, 1)`, `U = -1`).
pub fn agent3_corrected() -> Plant {
    Plant::new(
        dmatrix![0.0, 1.0, 0.0; -1.0, 0.0, 1.0; 2.0, 0.0, 1.0],
        dvector![0.0, 1.0, 1.0],
        RowDVector::from_row_slice(&[0.0, 1.0, 1.0]),
    )
    .unwrap()
}

/// Double integrator with position output.
pub fn agent4() -> Plant {
    Plant::new(
        dmatrix![0.0, 1.0; 0.0, 0.0],
        dvector![0.0, 1.0],
        RowDVector::from_row_slice(&[1.0, 0.0]),
    )
    .unwrap()
}

/// Bidirected unit-weight path 1-2-3-4.
pub fn path_graph() -> Digraph {
    Digraph::from_edges(
        4,
        &[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 3, 1.0),
            (3, 2, 1.0),
        ],
    )
    .unwrap()
}

/// Unidirectional unit-weight ring in which node 1 receives from node 2,
/// 2 from 3, 3 from 4, and 4 from 1.
pub fn ring_graph() -> Digraph {
    Digraph::from_edges(4, &[(1, 0, 1.0), (2, 1, 1.0), (3, 2, 1.0), (0, 3, 1.0)]).unwrap()
}

/// Demo initial states; outputs are `(2, -1, 3, -2)` with average `0.5`.
pub fn demo_initial_states() -> Vec<DVector<f64>> {
    vec![
        dvector![2.0],
        dvector![-1.0, 0.5],
        dvector![0.5, 1.0, 2.0],
        dvector![-2.0, 1.0],
    ]
}

/// Periodic schedule alternating path and ring with a 5-time-unit dwell.
pub fn demo_schedule() -> SwitchingSchedule {
    SwitchingSchedule::new(vec![path_graph(), ring_graph()], vec![0, 1], 5.0).unwrap()
}

/// The four-agent switching-topology demo under the requested controller.
pub fn demo_scenario(controller: ControllerKind) -> Scenario {
    let plants = [agent1(), agent2(), agent3_corrected(), agent4()];
    let agents = plants
        .into_iter()
        .zip(demo_initial_states())
        .map(|(plant, x0)| AgentSetup::new(plant, x0))
        .collect();
    Scenario::new(agents, controller, Topology::Switching(demo_schedule()))
}

/// As [`demo_scenario`] but with agent 3 exactly as printed; validation
/// rejects it with the origin-zero diagnostic.
pub fn demo_scenario_printed_agent3(controller: ControllerKind) -> Scenario {
    let mut scenario = demo_scenario(controller);
    scenario.agents[2] = AgentSetup::new(agent3_printed(), demo_initial_states()[2].clone());
    scenario
}

/// Static output-feedback demo: three heterogeneous scalar plants on a
/// directed unit ring, each with a hand-verified `(P, nu)` certificate.
pub fn static_demo_scenario() -> Scenario {
    let plants = [
        (agent1(), 2.0, 2.0), // A = 1: needs P > 1
        (
            Plant::new(
                dmatrix![0.0],
                dvector![1.0],
                RowDVector::from_row_slice(&[1.0]),
            )
            .unwrap(),
            1.0,
            1.0,
        ),
        (
            Plant::new(
                dmatrix![-1.0],
                dvector![1.0],
                RowDVector::from_row_slice(&[1.0]),
            )
            .unwrap(),
            1.0,
            1.0,
        ),
    ];
    let x0s = [dvector![2.0], dvector![-1.0], dvector![0.5]];
    let agents = plants
        .into_iter()
        .zip(x0s)
        .map(|((plant, p, nu), x0)| {
            let mut setup = AgentSetup::new(plant, x0);
            setup.static_cert = Some(StaticCertSpec {
                p: DMatrix::from_element(1, 1, p),
                nu,
                lambda_hat: 2.0,
            });
            setup
        })
        .collect();
    let ring = Digraph::from_edges(3, &[(1, 0, 1.0), (2, 1, 1.0), (0, 2, 1.0)]).unwrap();
    Scenario::new(agents, ControllerKind::StaticOutput, Topology::Fixed(ring))
}

/// Weighted-consensus demo: three integrators with weights `(1, 2, 3)` on a
/// bidirected triangle; the outputs converge to the weighted average of the
/// initial outputs.
pub fn weighted_demo_scenario() -> Scenario {
    let integrator = || {
        Plant::new(
            dmatrix![0.0],
            dvector![1.0],
            RowDVector::from_row_slice(&[1.0]),
        )
        .unwrap()
    };
    let x0s = [dvector![1.0], dvector![4.0], dvector![-2.0]];
    let weights = [1.0, 2.0, 3.0];
    let agents = x0s
        .into_iter()
        .zip(weights)
        .map(|(x0, weight)| {
            let mut setup = AgentSetup::new(integrator(), x0);
            setup.weight = weight;
            setup
        })
        .collect();
    let triangle = Digraph::from_edges(
        3,
        &[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 0, 1.0),
            (0, 2, 1.0),
        ],
    )
    .unwrap();
    Scenario::new(
        agents,
        ControllerKind::StateFeedback,
        Topology::Fixed(triangle),
    )
}
