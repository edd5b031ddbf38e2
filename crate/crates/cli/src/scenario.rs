//! Scenario file schema (versioned JSON) and its conversion to and from the
//! simulator's [`Scenario`] value.
//!
//! Matrices are nested row-major arrays; `b`, `c`, and `x0` are flat arrays.
//! Edges are `{from, to, weight}` and mean "`to` receives from `from`";
//! node indices refer to positions in the `agents` array.

use std::fs;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use avecon::controllers::ControllerKind;
use avecon::graph::{Digraph, SwitchingSchedule};
use avecon::plant::Plant;
use avecon::simulator::{AgentSetup, Scenario, StaticCertSpec, Topology};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerField {
    State,
    Output,
    Static,
}

impl From<ControllerField> for ControllerKind {
    fn from(field: ControllerField) -> Self {
        match field {
            ControllerField::State => ControllerKind::StateFeedback,
            ControllerField::Output => ControllerKind::OutputFeedback,
            ControllerField::Static => ControllerKind::StaticOutput,
        }
    }
}

impl From<ControllerKind> for ControllerField {
    fn from(kind: ControllerKind) -> Self {
        match kind {
            ControllerKind::StateFeedback => ControllerField::State,
            ControllerKind::OutputFeedback => ControllerField::Output,
            ControllerKind::StaticOutput => ControllerField::Static,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticCertEntry {
    pub p: Vec<Vec<f64>>,
    pub nu: f64,
    pub lambda_hat: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer_poles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_certificate: Option<StaticCertEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: usize,
    pub to: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEntry {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyEntry {
    Fixed {
        graph: GraphEntry,
    },
    Switching {
        graphs: Vec<GraphEntry>,
        order: Vec<usize>,
        dwell: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsEntry {
    pub dt: f64,
    pub t_final: f64,
    pub tolerance: f64,
    pub stride: usize,
}

impl Default for NumericsEntry {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 40.0,
            tolerance: 1e-2,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsEntry {
    pub dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub controller: ControllerField,
    pub agents: Vec<AgentEntry>,
    pub topology: TopologyEntry,
    #[serde(default)]
    pub numerics: NumericsEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsEntry>,
}

impl AgentEntry {
    pub fn label(&self, index: usize) -> String {
        match &self.name {
            Some(name) => format!("agent {index} ({name})"),
            None => format!("agent {index}"),
        }
    }

    /// Builds the plant, checking that `a` is rectangular and square.
    pub fn build_plant(&self) -> Result<Plant, String> {
        let n = self.a.len();
        if self.a.iter().any(|row| row.len() != n) {
            return Err(format!("matrix a must be square, got {} rows", n));
        }
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        let a = DMatrix::from_row_slice(n, n, &flat);
        let b = DVector::from_row_slice(&self.b);
        let c = RowDVector::from_row_slice(&self.c);
        Plant::new(a, b, c).map_err(|e| e.to_string())
    }

    fn build_setup(&self) -> Result<AgentSetup, String> {
        let plant = self.build_plant()?;
        let mut setup = AgentSetup::new(plant, DVector::from_row_slice(&self.x0));
        setup.poles = self.poles.as_ref().map(|ps| real_poles(ps));
        setup.observer_poles = self.observer_poles.as_ref().map(|ps| real_poles(ps));
        setup.feedthrough = self.r;
        setup.weight = self.weight;
        if let Some(cert) = &self.static_certificate {
            let rows = cert.p.len();
            if cert.p.iter().any(|row| row.len() != rows) {
                return Err("static certificate matrix p must be square".into());
            }
            let flat: Vec<f64> = cert.p.iter().flatten().copied().collect();
            setup.static_cert = Some(StaticCertSpec {
                p: DMatrix::from_row_slice(rows, rows, &flat),
                nu: cert.nu,
                lambda_hat: cert.lambda_hat,
            });
        }
        Ok(setup)
    }
}

fn real_poles(poles: &[f64]) -> Vec<Complex<f64>> {
    poles.iter().map(|&p| Complex::new(p, 0.0)).collect()
}

impl GraphEntry {
    pub fn build(&self) -> Result<Digraph, String> {
        let edges: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|e| (e.from, e.to, e.weight))
            .collect();
        Digraph::from_edges(self.nodes, &edges).map_err(|e| e.to_string())
    }
}

impl TopologyEntry {
    pub fn build(&self) -> Result<Topology, String> {
        match self {
            TopologyEntry::Fixed { graph } => Ok(Topology::Fixed(graph.build()?)),
            TopologyEntry::Switching {
                graphs,
                order,
                dwell,
            } => {
                let built: Result<Vec<_>, String> = graphs.iter().map(GraphEntry::build).collect();
                let schedule = SwitchingSchedule::new(built?, order.clone(), *dwell)
                    .map_err(|e| e.to_string())?;
                Ok(Topology::Switching(schedule))
            }
        }
    }
}

impl ScenarioFile {
    /// Converts to a validated simulator scenario, aggregating diagnostics.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut issues = Vec::new();
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, entry) in self.agents.iter().enumerate() {
            match entry.build_setup() {
                Ok(setup) => agents.push(setup),
                Err(msg) => issues.push(format!("{}: {msg}", entry.label(i))),
            }
        }
        let topology = match self.topology.build() {
            Ok(t) => Some(t),
            Err(msg) => {
                issues.push(format!("topology: {msg}"));
                None
            }
        };
        if !issues.is_empty() {
            return Err(CliError::Validation(issues.join("\n")));
        }
        let mut scenario = Scenario::new(agents, self.controller.into(), topology.unwrap());
        scenario.dt = self.numerics.dt;
        scenario.t_final = self.numerics.t_final;
        scenario.tolerance = self.numerics.tolerance;
        scenario.stride = self.numerics.stride;
        scenario
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(scenario)
    }

    /// Rebuilds a file representation from an in-memory scenario.
    pub fn from_scenario(scenario: &Scenario, names: &[Option<String>]) -> Self {
        let agents = scenario
            .agents
            .iter()
            .enumerate()
            .map(|(i, setup)| {
                let plant = &setup.plant;
                let n = plant.dim();
                let a = (0..n)
                    .map(|r| (0..n).map(|c| plant.a()[(r, c)]).collect())
                    .collect();
                AgentEntry {
                    name: names.get(i).cloned().flatten(),
                    a,
                    b: plant.b().iter().copied().collect(),
                    c: plant.c().iter().copied().collect(),
                    x0: setup.x0.iter().copied().collect(),
                    poles: setup
                        .poles
                        .as_ref()
                        .map(|ps| ps.iter().map(|p| p.re).collect()),
                    observer_poles: setup
                        .observer_poles
                        .as_ref()
                        .map(|ps| ps.iter().map(|p| p.re).collect()),
                    r: setup.feedthrough,
                    weight: setup.weight,
                    static_certificate: setup.static_cert.as_ref().map(|cert| {
                        let rows = cert.p.nrows();
                        StaticCertEntry {
                            p: (0..rows)
                                .map(|r| (0..rows).map(|c| cert.p[(r, c)]).collect())
                                .collect(),
                            nu: cert.nu,
                            lambda_hat: cert.lambda_hat,
                        }
                    }),
                }
            })
            .collect();
        let graph_entry = |g: &Digraph| {
            let mut edges = Vec::new();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    let w = g.weights()[(i, j)];
                    if w != 0.0 {
                        edges.push(EdgeEntry {
                            from: j,
                            to: i,
                            weight: w,
                        });
                    }
                }
            }
            GraphEntry {
                nodes: g.node_count(),
                edges,
            }
        };
        let topology = match &scenario.topology {
            Topology::Fixed(g) => TopologyEntry::Fixed {
                graph: graph_entry(g),
            },
            Topology::Switching(s) => TopologyEntry::Switching {
                graphs: s.graphs().iter().map(graph_entry).collect(),
                order: s.order().to_vec(),
                dwell: s.dwell(),
            },
        };
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            controller: scenario.controller.into(),
            agents,
            topology,
            numerics: NumericsEntry {
                dt: scenario.dt,
                t_final: scenario.t_final,
                tolerance: scenario.tolerance,
                stride: scenario.stride,
            },
            outputs: None,
        }
    }
}

/// Reads and fully validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<(ScenarioFile, Scenario), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let scenario = file.to_scenario()?;
    Ok((file, scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_file() -> ScenarioFile {
        serde_json::from_str(
            r#"{
                "schema_version": 1,
                "controller": "state",
                "agents": [
                    {"a": [[1.0]], "b": [1.0], "c": [1.0], "x0": [2.0]}
                ],
                "topology": {"kind": "fixed", "graph": {"nodes": 1, "edges": []}}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let scenario = minimal_file().to_scenario().unwrap();
        assert_eq!(scenario.dt, 1e-3);
        assert_eq!(scenario.t_final, 40.0);
        assert_eq!(scenario.stride, 1);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "schema_version": 1,
            "controller": "state",
            "agents": [
                {"a": [[1.0]], "b": [1.0], "c": [1.0], "x0": [2.0], "z0": [9.0]}
            ],
            "topology": {"kind": "fixed", "graph": {"nodes": 1, "edges": []}}
        }"#;
        let err = serde_json::from_str::<ScenarioFile>(text);
        assert!(err.is_err(), "supplying z0 must be rejected");
    }

    #[test]
    fn schema_version_is_enforced() {
        let mut file = minimal_file();
        file.schema_version = 99;
        assert!(matches!(file.to_scenario(), Err(CliError::Validation(_))));
    }

    #[test]
    fn file_round_trips_through_scenario() {
        let file = minimal_file();
        let scenario = file.to_scenario().unwrap();
        let rebuilt = ScenarioFile::from_scenario(&scenario, &[None]);
        let reparsed = rebuilt.to_scenario().unwrap();
        assert_eq!(scenario.fingerprint(), reparsed.fingerprint());
    }
}
