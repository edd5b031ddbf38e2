//! File-level packaging of the built-in demo scenarios.

use avecon::controllers::ControllerKind;
use avecon::demo;
use avecon::simulator::Scenario;

use crate::scenario::ScenarioFile;

pub fn agent_names() -> Vec<Option<String>> {
    (1..=4).map(|i| Some(format!("agent{i}"))).collect()
}

/// The four-agent switching demo and its file form (state-feedback base;
/// other controllers are selected per run).
pub fn paper_demo() -> (ScenarioFile, Scenario) {
    let scenario = demo::demo_scenario(ControllerKind::StateFeedback);
    let file = ScenarioFile::from_scenario(&scenario, &agent_names());
    (file, scenario)
}

/// The demo with agent 3 exactly as printed; fails validation.
pub fn paper_demo_printed_agent3() -> Scenario {
    demo::demo_scenario_printed_agent3(ControllerKind::StateFeedback)
}

/// Scalar static output-feedback demo.
pub fn static_demo() -> (ScenarioFile, Scenario) {
    let scenario = demo::static_demo_scenario();
    let names = vec![
        Some("agent1".to_string()),
        Some("integrator".to_string()),
        Some("stable".to_string()),
    ];
    let file = ScenarioFile::from_scenario(&scenario, &names);
    (file, scenario)
}

/// README dropped next to the demo artifacts.
pub fn demo_readme() -> &'static str {
    r#"# Built-in four-agent demo

Four heterogeneous SISO agents reach average consensus of their outputs over
a topology that switches every 5 time units between a bidirected path
(1-2-3-4) and a unidirectional ring, in the segment order {path, ring}.

Agents (state dimension, initial output):
  agent1: dx = x + u,          y = x        (n = 1, y(0) =  2)
  agent2: undamped oscillator, y = position (n = 2, y(0) = -1)
  agent3: third-order,         y = x2 + x3  (n = 3, y(0) =  3)
  agent4: double integrator,   y = position (n = 2, y(0) = -2)

All outputs converge to Ave(y(0)) = 0.5.

## Agent 3 output row

This demo ships agent 3 with the output row c3 = [0, 1, 1]. The variant with
c3 = [0, 1, 0] (run `demo-paper --printed-agent3` to see it) is rejected by
validation: row 1 of its A matrix equals c3 while b3's first entry is zero,
so the matrix [[A, b], [c, 0]] is rank-deficient - a transmission zero at
the origin. Concretely, the regulator equations then demand x2 = 0 and
x2 = 1 at once. The shipped row is the minimal edit restoring solvability
and gives X3 = (0, 0, 1), U3 = -1.

## Gains

No gain values are prescribed by the scenario; the tool synthesizes the
defaults, which the consensus limit does not depend on:
  state-feedback poles {-1, ..., -n}
  observer poles       {-2, -4, ..., -2n}
  R                    least-squares minimizer of ||b R - X||
Run `avecon check scenario.json` to print every synthesized gain.

## Files

  scenario.json            the scenario (state-feedback base; re-runnable)
  state_trajectory.csv     run with u_i = k_i(x_i - X_i z_i) + U_i z_i + R_i v_i
  output_trajectory.csv    run with the observer-based law
  *_metrics.json           final errors, settling time, conservation drift

CSV columns: t, then y_1..y_4, z_1..z_4, e_1..e_4, u_1..u_4, v_1..v_4,
one row per millisecond sample. e_i = y_i - Ave(y(0)).

Reproduce: `avecon run scenario.json --out <dir>` and
`avecon run scenario.json --controller output --out <dir>`.
"#
}

pub fn static_demo_readme() -> &'static str {
    r#"# Static output-feedback demo

Three scalar agents (dx = a x + u, y = x, with a = 1, 0, -1) on a directed
unit ring reach average consensus using only their measured outputs:
u_i = k_i (y_i - z_i) + U_i z_i + R_i v_i with constant k_i = -lambda_hat * nu_i.

Each agent carries a certificate (P_i, nu_i) with b P_i = nu_i c_i and
2 P_i b b P_i > A_i P_i + P_i A_i; lambda_hat = 2 then makes
A_i + b_i k_i c_i Hurwitz (agent1: P = 2, nu = 2, k = -4, closed loop -3).

Files: static_scenario.json, static_trajectory.csv, static_metrics.json.
"#
}
