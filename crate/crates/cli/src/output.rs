//! Trajectory CSV and metrics JSON emission with atomic writes.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use avecon::simulator::{RunMetrics, Trajectory};

/// Writes `bytes` to a temp file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn push_float(out: &mut String, value: f64) {
    // 17 significant digits: lossless f64 round trip
    out.push_str(&format!("{value:.16e}"));
}

/// One row per stored sample; columns `t, y_1..y_N, z_1..z_N, e_1..e_N,
/// u_1..u_N, v_1..v_N`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.agent_count();
    let mut out = String::with_capacity(traj.sample_count() * (1 + 5 * n) * 26);
    out.push('t');
    for series in ["y", "z", "e", "u", "v"] {
        for i in 1..=n {
            out.push_str(&format!(",{series}_{i}"));
        }
    }
    out.push('\n');
    for k in 0..traj.sample_count() {
        push_float(&mut out, traj.times[k]);
        for series in [&traj.y, &traj.z, &traj.e, &traj.u, &traj.v] {
            for agent_series in series.iter() {
                out.push(',');
                push_float(&mut out, agent_series[k]);
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> io::Result<()> {
    atomic_write(path, trajectory_csv(traj).as_bytes())
}

#[derive(Serialize)]
struct MetricsOut<'a> {
    final_errors: &'a [f64],
    settling_time: Option<f64>,
    max_sum_drift: f64,
    bound_violations: usize,
    ave_y0: f64,
}

pub fn metrics_json(metrics: &RunMetrics, ave_y0: f64) -> String {
    let out = MetricsOut {
        final_errors: &metrics.final_errors,
        settling_time: metrics.settling_time,
        max_sum_drift: metrics.max_sum_drift,
        bound_violations: metrics.bound_violations,
        ave_y0,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("metrics serialize");
    text.push('\n');
    text
}

pub fn write_metrics(metrics: &RunMetrics, ave_y0: f64, path: &Path) -> io::Result<()> {
    atomic_write(path, metrics_json(metrics, ave_y0).as_bytes())
}
