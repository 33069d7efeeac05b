//! Run configuration: JSON file merged with command-line overrides.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Grunsky,
    Operators,
    Scatter,
    Overfare,
    Hbvp,
    Hm,
    Report,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub unitarity: f64,
    pub pythagoras: f64,
    pub conjugation: f64,
    pub overfare: f64,
    pub grunsky_margin: f64,
    pub hbvp_gamma: f64,
    pub hbvp_boundary: f64,
    pub hbvp_solvability: f64,
    pub period_symmetry: f64,
    pub theta_drift: f64,
    /// Defect levels below this are treated as converged by the
    /// monotonicity gate (the f64 measurement floor of the assembly).
    pub defect_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-4,
            pythagoras: 1e-4,
            conjugation: 1e-7,
            overfare: 1e-6,
            grunsky_margin: 1e-6,
            hbvp_gamma: 1e-9,
            hbvp_boundary: 1e-6,
            hbvp_solvability: 1e-6,
            period_symmetry: 1e-8,
            theta_drift: 0.10,
            defect_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub cap_spec: Option<PathBuf>,
    pub command: Option<Command>,
    /// Refinement ladder truncations, strictly increasing.
    pub truncations: Vec<usize>,
    /// Quadrature orders per ladder level (scales the kernel FFT size).
    pub quad_orders: Vec<usize>,
    /// Boundary Fourier cutoff J; 0 means the 4N rule.
    pub boundary_modes: i64,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Optional HBVP datum file for the `hbvp` command.
    pub hbvp_data: Option<PathBuf>,
    /// Optional golden report to compare against (regenerated with
    /// --regen-golden).
    pub golden: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cap_spec: None,
            command: None,
            truncations: vec![8, 16, 24],
            quad_orders: vec![24, 40, 56],
            boundary_modes: 0,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            seed: 7,
            hbvp_data: None,
            golden: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.truncations.is_empty() {
            return Err("truncations must be non-empty".into());
        }
        if !self.truncations.windows(2).all(|w| w[0] < w[1]) {
            return Err("truncations must be strictly increasing".into());
        }
        if self.quad_orders.len() != self.truncations.len() {
            return Err("quad_orders must match truncations in length".into());
        }
        if !self.quad_orders.windows(2).all(|w| w[0] <= w[1]) {
            return Err("quad_orders must be non-decreasing".into());
        }
        Ok(())
    }

    pub fn modes_for(&self, truncation: usize) -> i64 {
        if self.boundary_modes > 0 {
            self.boundary_modes
        } else {
            4 * truncation as i64
        }
    }
}
