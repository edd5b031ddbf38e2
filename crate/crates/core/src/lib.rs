//! Output average consensus over heterogeneous linear multi-agent systems.
//!
//! Each SISO agent `(A_i, b_i, c_i)` is abstracted by a scalar integrator
//! `dz_i/dt = v_i`; the integrators run the neighbor-averaging protocol
//! `v_i = sum_j a_ij (z_j - z_i)` over a strongly connected balanced (or
//! switching) graph, and a per-agent interface `u_i = k_i (x_i - X_i z_i) +
//! U_i z_i + R_i v_i` makes the physical output track its abstraction. With
//! the mandated initialization `z_i(0) = y_i(0)`, all outputs converge to the
//! average of the initial outputs.
//!
//! Modules mirror that structure: [`graph`] holds the topology model,
//! [`plant`] the agent model and synthesis kernels, [`abstraction`] the
//! interface and its Lyapunov certificate, [`controllers`] the three
//! distributed laws, and [`simulator`] the closed-loop integrator. [`demo`]
//! ships ready-made scenarios, including the four-agent switching example:
//!
//! ```
//! use avecon::controllers::ControllerKind;
//! use avecon::demo;
//! use avecon::simulator::run;
//!
//! let mut scenario = demo::demo_scenario(ControllerKind::StateFeedback);
//! scenario.t_final = 15.0;
//! let (trajectory, metrics) = run(&scenario).unwrap();
//! assert_eq!(trajectory.target, 0.5);
//! assert!(metrics.settling_time.is_some());
//! assert_eq!(metrics.bound_violations, 0);
//! ```

pub mod abstraction;
pub mod controllers;
pub mod demo;
pub mod error;
pub mod graph;
pub mod plant;
pub mod simulator;

pub use error::{Error, Result};
