//! Experiment configuration. The defaults are the golden run: an empty JSON
//! object `{}` is a complete config.

use std::path::Path;

use bifree::descriptor::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of every random draw that is not part of a model descriptor.
    pub seed: u64,
    /// Checks to run; empty runs all of them.
    pub checks: Vec<String>,
    pub lattice: LatticeConfig,
    pub cumulants: CumulantConfig,
    pub bifree: BifreeConfig,
    pub rcyclic: RCyclicConfig,
    pub transforms: TransformConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub catalan_max: usize,
    pub mobius_max: usize,
    pub kreweras_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CumulantConfig {
    pub d: usize,
    pub depth: usize,
    pub round_trip_max: usize,
    pub round_trip_tol: f64,
    pub vanishing_max: usize,
    pub vanishing_draws: usize,
    pub vanishing_tol: f64,
    pub products_max: usize,
    pub products_tol: f64,
    pub matrix_max: usize,
    pub matrix_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifreeRun {
    pub model: ModelSpec,
    pub order: usize,
    pub draws: usize,
    pub tol: f64,
}

/// A run that must fail: the worst residual has to reach `min_residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRun {
    pub model: ModelSpec,
    pub order: usize,
    pub draws: usize,
    pub tol: f64,
    pub min_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifreeConfig {
    pub scalar: BifreeRun,
    pub matrix: BifreeRun,
    pub control: ControlRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RCyclicConfig {
    pub model: ModelSpec,
    pub order: usize,
    pub tol: f64,
    pub over_d_order: usize,
    pub over_d_tol: f64,
    pub draws: usize,
    pub control: ControlRun,
}

/// `(N, ρ, points)` of one transform check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub order: usize,
    pub rho: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub model: ModelSpec,
    pub relations: Sweep,
    pub r_transform: Sweep,
    pub s_transform: Sweep,
    pub t_transform: Sweep,
    pub s_partial: Sweep,
    /// Orders over which residuals must not grow.
    pub convergence_orders: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 11,
            checks: Vec::new(),
            lattice: LatticeConfig::default(),
            cumulants: CumulantConfig::default(),
            bifree: BifreeConfig::default(),
            rcyclic: RCyclicConfig::default(),
            transforms: TransformConfig::default(),
        }
    }
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { catalan_max: 8, mobius_max: 6, kreweras_max: 4 }
    }
}

impl Default for CumulantConfig {
    fn default() -> Self {
        CumulantConfig {
            d: 2,
            depth: 8,
            round_trip_max: 6,
            round_trip_tol: 1e-10,
            vanishing_max: 5,
            vanishing_draws: 3,
            vanishing_tol: 1e-10,
            products_max: 6,
            products_tol: 1e-9,
            matrix_max: 4,
            matrix_tol: 1e-9,
        }
    }
}

impl Default for BifreeConfig {
    fn default() -> Self {
        BifreeConfig {
            scalar: BifreeRun { model: ModelSpec::ScalarPairs { pairs: 2, depth: 8, seed: 1, shared: false }, order: 5, draws: 3, tol: 1e-9 },
            matrix: BifreeRun {
                model: ModelSpec::ShiftedPairs { d: 2, alpha: 1.0, pairs: 2, depth: 8, seed: 2, shared: false },
                order: 4,
                draws: 3,
                tol: 1e-8,
            },
            control: ControlRun {
                model: ModelSpec::ShiftedPairs { d: 1, alpha: 1.0, pairs: 2, depth: 8, seed: 3, shared: true },
                order: 3,
                draws: 3,
                tol: 1e-9,
                min_residual: 0.5,
            },
        }
    }
}

impl Default for RCyclicConfig {
    fn default() -> Self {
        RCyclicConfig {
            model: ModelSpec::CreationExample { d: 2, families: 2, depth: 6, perturbed: false },
            order: 4,
            tol: 1e-9,
            over_d_order: 3,
            over_d_tol: 1e-8,
            draws: 3,
            control: ControlRun {
                model: ModelSpec::CreationExample { d: 2, families: 2, depth: 6, perturbed: true },
                order: 2,
                draws: 3,
                tol: 1e-9,
                min_residual: 0.1,
            },
        }
    }
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            model: ModelSpec::ShiftedPairs { d: 2, alpha: 0.5, pairs: 2, depth: 6, seed: 5, shared: false },
            relations: Sweep { order: 6, rho: 0.08, points: 5 },
            r_transform: Sweep { order: 6, rho: 0.05, points: 5 },
            s_transform: Sweep { order: 5, rho: 0.05, points: 5 },
            t_transform: Sweep { order: 5, rho: 0.05, points: 3 },
            s_partial: Sweep { order: 5, rho: 0.05, points: 3 },
            convergence_orders: vec![3, 4, 5],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for name in &self.checks {
            crate::suite::spec(name)?;
        }
        for (label, s) in [
            ("relations", self.transforms.relations),
            ("r_transform", self.transforms.r_transform),
            ("s_transform", self.transforms.s_transform),
            ("t_transform", self.transforms.t_transform),
            ("s_partial", self.transforms.s_partial),
        ] {
            if s.order == 0 || !(s.rho > 0.0 && s.rho < 1.0) {
                return Err(CliError::Config(format!("transforms.{label}: need order ≥ 1 and 0 < rho < 1")));
            }
        }
        if self.cumulants.d == 0 {
            return Err(CliError::Config("cumulants.d must be positive".into()));
        }
        Ok(())
    }
}
