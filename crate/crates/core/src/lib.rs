//! Covariance-based device activity detection for multi-cell massive MIMO.
//!
//! The crate builds synthetic cooperative multi-cell networks, forms the
//! per-BS sample covariances of the received pilots, and estimates which
//! devices are active by solving the box-constrained maximum-likelihood
//! problem with coordinate descent:
//!
//! * [`solvers::random_cd`] sweeps every coordinate in random order each pass;
//! * [`solvers::active_set_cd`] only revisits coordinates that currently
//!   violate first-order optimality by more than a shrinking threshold.
//!
//! ```no_run
//! use covact::scenario::{draw_truth, synthesize_observations, Scenario, ScenarioConfig};
//! use covact::solvers::{solve, Algorithm, SolverConfig};
//!
//! let cfg = ScenarioConfig { devices_per_cell: 100, active_per_cell: 10, antennas: 64, ..Default::default() };
//! let scn = Scenario::generate(&cfg).unwrap().normalized();
//! let truth = draw_truth(&cfg).unwrap();
//! let obs = synthesize_observations(&scn, &truth, cfg.antennas);
//! let sol = solve(Algorithm::ActiveSetCd, &scn, &obs.sample_covs, &SolverConfig::default()).unwrap();
//! println!("{} passes, residual {:e}", sol.report.iterations, sol.report.final_residual);
//! ```

pub mod container;
pub mod linalg;
pub mod metrics;
pub mod mle;
pub mod parallel;
pub mod poly;
pub mod rng;
pub mod scenario;
pub mod solvers;
pub mod subproblem;

pub use linalg::{ComplexMatrix, ComplexVector, LinalgError};
pub use mle::{ActivityVector, CoordinateStats, SolverState};
pub use scenario::{GroundTruth, ObservationSet, Scenario, ScenarioConfig};
pub use solvers::{Algorithm, SolverConfig, SolverReport};
