//! The `check`, `run`, and `demo-paper` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use avecon::abstraction::{build_certificate, build_interface, default_observer_poles};
use avecon::controllers::{verify_static_certificate, ControllerKind};
use avecon::plant::observer_gain;
use avecon::simulator::{run, Scenario, Topology};

use crate::output::{atomic_write, write_metrics, write_trajectory};
use crate::scenario::{parse_scenario, ScenarioFile};
use crate::{demo, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerArg {
    State,
    Output,
    Static,
}

impl From<ControllerArg> for ControllerKind {
    fn from(arg: ControllerArg) -> Self {
        match arg {
            ControllerArg::State => ControllerKind::StateFeedback,
            ControllerArg::Output => ControllerKind::OutputFeedback,
            ControllerArg::Static => ControllerKind::StaticOutput,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub controller: Option<ControllerArg>,
    pub out_dir: Option<PathBuf>,
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

fn fmt_row(values: impl IntoIterator<Item = f64>) -> String {
    let inner: Vec<String> = values.into_iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|r| fmt_row(m.row(r).iter().copied()))
        .collect();
    format!("[{}]", rows.join("; "))
}

/// Prints per-agent and per-graph check tables plus synthesized gains.
/// Returns true iff every check passed.
pub fn cmd_check(path: &Path) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;

    let mut all_ok = true;
    let mut report = String::new();
    writeln!(
        report,
        "scenario: {} ({} agents)",
        path.display(),
        file.agents.len()
    )
    .unwrap();
    writeln!(report).unwrap();

    for (i, entry) in file.agents.iter().enumerate() {
        let label = entry.label(i);
        match entry.build_plant() {
            Err(msg) => {
                all_ok = false;
                writeln!(report, "{label}: INVALID ({msg})").unwrap();
            }
            Ok(plant) => {
                let v = plant.validate();
                writeln!(
                    report,
                    "{label} (n = {}): controllable: {}  observable: {}  no origin zero: {}",
                    plant.dim(),
                    yes_no(v.controllable),
                    yes_no(v.observable),
                    yes_no(v.no_origin_zero)
                )
                .unwrap();
                if !v.is_admissible() {
                    all_ok = false;
                    for msg in &v.messages {
                        writeln!(report, "    {msg}").unwrap();
                    }
                    continue;
                }
                let poles = entry.poles.as_ref().map(|ps| {
                    ps.iter()
                        .map(|&p| nalgebra::Complex::new(p, 0.0))
                        .collect::<Vec<_>>()
                });
                match build_interface(&plant, poles.as_deref(), entry.r) {
                    Ok(iface) => {
                        writeln!(
                            report,
                            "    X = {}  U = {:.6}  k = {}  R = {:.6}",
                            fmt_row(iface.state_map().iter().copied()),
                            iface.feedforward(),
                            fmt_row(iface.feedback().iter().copied()),
                            iface.feedthrough()
                        )
                        .unwrap();
                        let obs_poles = entry
                            .observer_poles
                            .as_ref()
                            .map(|ps| {
                                ps.iter()
                                    .map(|&p| nalgebra::Complex::new(p, 0.0))
                                    .collect::<Vec<_>>()
                            })
                            .unwrap_or_else(|| default_observer_poles(plant.dim()));
                        match observer_gain(plant.a(), plant.c(), &obs_poles) {
                            Ok(l) => {
                                writeln!(report, "    observer l = {}", fmt_row(l.iter().copied()))
                                    .unwrap()
                            }
                            Err(e) => {
                                all_ok = false;
                                writeln!(report, "    observer gain failed: {e}").unwrap();
                            }
                        }
                        match build_certificate(&iface) {
                            Ok(cert) => writeln!(
                                report,
                                "    certificate: P = {}  c_hat = {:.6}  alpha = {:.6}  gamma = {:.6}",
                                fmt_matrix(cert.p()),
                                cert.c_hat(),
                                cert.alpha_rate(),
                                cert.gamma_coeff()
                            )
                            .unwrap(),
                            Err(e) => {
                                all_ok = false;
                                writeln!(report, "    certificate failed: {e}").unwrap();
                            }
                        }
                    }
                    Err(e) => {
                        all_ok = false;
                        writeln!(report, "    interface synthesis failed: {e}").unwrap();
                    }
                }
                if let Some(cert) = &entry.static_certificate {
                    let rows = cert.p.len();
                    let square = cert.p.iter().all(|r| r.len() == rows);
                    let verified = square && {
                        let flat: Vec<f64> = cert.p.iter().flatten().copied().collect();
                        let p = DMatrix::from_row_slice(rows, rows, &flat);
                        verify_static_certificate(&plant, &p, cert.nu)
                    };
                    let ok = verified && cert.lambda_hat > 1.0;
                    if !ok {
                        all_ok = false;
                    }
                    writeln!(
                        report,
                        "    static certificate: {} (k_static = {:.6})",
                        if ok { "verified" } else { "REJECTED" },
                        -cert.lambda_hat * cert.nu
                    )
                    .unwrap();
                }
            }
        }
    }

    writeln!(report).unwrap();
    match file.topology.build() {
        Err(msg) => {
            all_ok = false;
            writeln!(report, "topology: INVALID ({msg})").unwrap();
        }
        Ok(topology) => {
            let describe = |g: &avecon::graph::Digraph, name: &str, report: &mut String| {
                let strong = g.is_strongly_connected_balanced();
                writeln!(
                    report,
                    "{name}: strongly connected + balanced: {}  undirected connected: {}",
                    yes_no(strong),
                    yes_no(g.is_undirected_connected())
                )
                .unwrap();
                strong
            };
            match &topology {
                Topology::Fixed(g) => {
                    if !describe(g, "graph", &mut report) {
                        all_ok = false;
                    }
                }
                Topology::Switching(s) => {
                    writeln!(
                        report,
                        "switching topology: {} graphs, dwell {}, order {:?}, period {}",
                        s.graphs().len(),
                        s.dwell(),
                        s.order(),
                        s.period()
                    )
                    .unwrap();
                    for (gi, g) in s.graphs().iter().enumerate() {
                        if !describe(g, &format!("  graph {gi}"), &mut report) {
                            all_ok = false;
                        }
                    }
                    let ratio = s.dwell() / file.numerics.dt;
                    let aligned = (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0);
                    writeln!(
                        report,
                        "  switch instants align with dt = {}: {}",
                        file.numerics.dt,
                        yes_no(aligned)
                    )
                    .unwrap();
                    if !aligned {
                        all_ok = false;
                    }
                }
            }
        }
    }

    // full conversion catches anything the per-item passes above missed
    if let Err(err) = file.to_scenario() {
        all_ok = false;
        writeln!(report, "\nvalidation: {err}").unwrap();
    }

    writeln!(report, "\nresult: {}", if all_ok { "PASS" } else { "FAIL" }).unwrap();
    print!("{report}");
    Ok(all_ok)
}

fn run_and_emit(
    scenario: &Scenario,
    out_dir: &Path,
    trajectory_name: &str,
    metrics_name: &str,
) -> Result<bool, CliError> {
    let (traj, metrics) = run(scenario)?;
    write_trajectory(&traj, &out_dir.join(trajectory_name)).map_err(|source| CliError::Io {
        path: out_dir.join(trajectory_name),
        source,
    })?;
    write_metrics(&metrics, traj.target, &out_dir.join(metrics_name)).map_err(|source| {
        CliError::Io {
            path: out_dir.join(metrics_name),
            source,
        }
    })?;
    let settled = metrics.settling_time.is_some();
    println!(
        "wrote {} and {} (target {:.6}, settled: {}, max |e(t_final)| = {:.3e}, drift = {:.3e})",
        out_dir.join(trajectory_name).display(),
        out_dir.join(metrics_name).display(),
        traj.target,
        match metrics.settling_time {
            Some(t) => format!("t = {t:.3}"),
            None => "no".to_string(),
        },
        metrics.final_errors.iter().cloned().fold(0.0_f64, f64::max),
        metrics.max_sum_drift
    );
    Ok(settled)
}

/// Runs a scenario file with optional overrides; true iff the run settled.
pub fn cmd_run(path: &Path, opts: &RunOptions) -> Result<bool, CliError> {
    let (file, mut scenario) = parse_scenario(path)?;
    if let Some(dt) = opts.dt {
        scenario.dt = dt;
    }
    if let Some(t_final) = opts.t_final {
        scenario.t_final = t_final;
    }
    if let Some(controller) = opts.controller {
        scenario.controller = controller.into();
    }
    scenario
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| file.outputs.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("out"));
    run_and_emit(&scenario, &out_dir, "trajectory.csv", "metrics.json")
}

/// Materializes and runs the built-in demo. With no controller choice, both
/// the state- and output-feedback runs are emitted; `static` selects the
/// scalar static-output sub-demo; `--printed-agent3` demonstrates the
/// validation failure of the uncorrected third agent.
pub fn cmd_demo_paper(
    out_dir: &Path,
    controller: Option<ControllerArg>,
    printed_agent3: bool,
) -> Result<bool, CliError> {
    if printed_agent3 {
        let scenario = demo::paper_demo_printed_agent3();
        match scenario.validate() {
            Ok(()) => unreachable!("the printed agent 3 must fail validation"),
            Err(err) => {
                println!("printed agent 3 is rejected as designed:\n  {err}");
                return Ok(false);
            }
        }
    }

    if controller == Some(ControllerArg::Static) {
        let (file, scenario) = demo::static_demo();
        let json = serde_json::to_string_pretty(&file).expect("demo serialize");
        let path = out_dir.join("static_scenario.json");
        atomic_write(&path, format!("{json}\n").as_bytes())
            .map_err(|source| CliError::Io { path, source })?;
        atomic_write(
            &out_dir.join("README.md"),
            demo::static_demo_readme().as_bytes(),
        )
        .map_err(|source| CliError::Io {
            path: out_dir.join("README.md"),
            source,
        })?;
        return run_and_emit(
            &scenario,
            out_dir,
            "static_trajectory.csv",
            "static_metrics.json",
        );
    }

    let (file, base) = demo::paper_demo();
    let json = serde_json::to_string_pretty(&file).expect("demo serialize");
    let path = out_dir.join("scenario.json");
    atomic_write(&path, format!("{json}\n").as_bytes())
        .map_err(|source| CliError::Io { path, source })?;
    atomic_write(&out_dir.join("README.md"), demo::demo_readme().as_bytes()).map_err(|source| {
        CliError::Io {
            path: out_dir.join("README.md"),
            source,
        }
    })?;

    let mut all_settled = true;
    let run_state = controller.is_none() || controller == Some(ControllerArg::State);
    let run_output = controller.is_none() || controller == Some(ControllerArg::Output);
    if run_state {
        let mut scenario = base.clone();
        scenario.controller = ControllerKind::StateFeedback;
        all_settled &= run_and_emit(
            &scenario,
            out_dir,
            "state_trajectory.csv",
            "state_metrics.json",
        )?;
    }
    if run_output {
        let mut scenario = base.clone();
        scenario.controller = ControllerKind::OutputFeedback;
        all_settled &= run_and_emit(
            &scenario,
            out_dir,
            "output_trajectory.csv",
            "output_metrics.json",
        )?;
    }
    Ok(all_settled)
}
