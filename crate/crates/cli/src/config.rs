//! Run configuration: one TOML file, fully defaulted except for the model,
//! with every piece of randomness flowing from a single root seed. The
//! resolved configuration is written next to the outputs of every run so
//! that rerunning it reproduces the results byte for byte.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pspin_core::{DiscreteCdf, MixingFunction, SpaceGrid, StepOrderParam};

use crate::Failure;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; subcommands derive named sub-streams from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; all artifacts land here.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub compare: CompareSection,
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("pspin-run")
}

/// ξ(s) = Σ c_p² s^p plus external field h.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Interaction orders with their coefficients: `[[p, c_p], ...]`.
    pub coeffs: Vec<(u32, f64)>,
    #[serde(default)]
    pub h: f64,
}

impl ModelSection {
    pub fn build(&self) -> Result<MixingFunction, Failure> {
        MixingFunction::new(&self.coeffs, self.h)
            .map_err(|e| Failure::Config(format!("model: {e}")))
    }

    /// Compact human tag for tables: "p2:0.707+p4:0.3@h0.5".
    pub fn label(&self) -> String {
        let terms: Vec<String> =
            self.coeffs.iter().map(|(p, c)| format!("p{p}:{c:.4}")).collect();
        let mut label = terms.join("+");
        if self.h != 0.0 {
            label.push_str(&format!("@h{:.4}", self.h));
        }
        label
    }
}

/// Discretization; unset fields fall back to model-aware defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_max: Option<f64>,
    pub n_x: Option<usize>,
    pub quad_nodes: Option<usize>,
    pub sub_levels: Option<usize>,
}

impl GridSection {
    pub fn resolve(&self, m: &MixingFunction) -> SpaceGrid {
        let base = SpaceGrid::default_for(m);
        SpaceGrid {
            x_max: self.x_max.unwrap_or(base.x_max),
            n_x: self.n_x.unwrap_or(base.n_x),
            quad_nodes: self.quad_nodes.unwrap_or(base.quad_nodes),
            sub_levels: self.sub_levels.unwrap_or(base.sub_levels),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveKind {
    #[default]
    ZeroT,
    FiniteBeta,
}

/// Functional evaluation at a fixed, explicitly given order parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default)]
    pub kind: SolveKind,
    /// Step order parameter as `[[t, value], ...]`; first t must be 0.
    #[serde(default = "default_gamma")]
    pub gamma: Vec<(f64, f64)>,
    /// Inverse temperature for `kind = "finite_beta"`.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Probability atoms as `[[position, mass], ...]` for finite beta.
    #[serde(default = "default_atoms")]
    pub atoms: Vec<(f64, f64)>,
}

fn default_gamma() -> Vec<(f64, f64)> {
    vec![(0.0, 0.0)]
}

fn default_beta() -> f64 {
    2.0
}

fn default_atoms() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0)]
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            kind: SolveKind::default(),
            gamma: default_gamma(),
            beta: default_beta(),
            atoms: default_atoms(),
        }
    }
}

/// Validates the breakpoint/value pairs with index-level diagnostics before
/// handing them to the library constructor.
pub fn build_gamma(pairs: &[(f64, f64)]) -> Result<StepOrderParam, Failure> {
    if pairs.is_empty() {
        return Err(Failure::Config("gamma: needs at least one [t, value] pair".into()));
    }
    for (i, w) in pairs.windows(2).enumerate() {
        if w[1].1 < w[0].1 {
            return Err(Failure::Config(format!(
                "gamma: value at index {} decreases ({} after {})",
                i + 1,
                w[1].1,
                w[0].1
            )));
        }
        if w[1].0 <= w[0].0 {
            return Err(Failure::Config(format!(
                "gamma: breakpoint at index {} does not increase ({} after {})",
                i + 1,
                w[1].0,
                w[0].0
            )));
        }
    }
    StepOrderParam::new(pairs).map_err(|e| Failure::Config(format!("gamma: {e}")))
}

pub fn build_atoms(pairs: &[(f64, f64)]) -> Result<DiscreteCdf, Failure> {
    DiscreteCdf::new(pairs).map_err(|e| Failure::Config(format!("atoms: {e}")))
}

/// β-sweep of the finite-temperature functional against the zero-temperature
/// value at a fixed order parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_sweep_gamma")]
    pub gamma: Vec<(f64, f64)>,
}

fn default_betas() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
}

fn default_sweep_gamma() -> Vec<(f64, f64)> {
    vec![(0.0, 0.5), (0.5, 1.5)]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { betas: default_betas(), gamma: default_sweep_gamma() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_f_tol")]
    pub f_tol: f64,
}

fn default_k_max() -> usize {
    3
}

fn default_restarts() -> usize {
    4
}

fn default_max_iters() -> usize {
    400
}

fn default_f_tol() -> f64 {
    1e-8
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            k_max: default_k_max(),
            restarts: default_restarts(),
            max_iters: default_max_iters(),
            f_tol: default_f_tol(),
        }
    }
}

/// Monte Carlo verification of the control representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Order parameter defining the equation being verified.
    #[serde(default = "default_control_gamma")]
    pub gamma: Vec<(f64, f64)>,
    /// Start points `[[s, x], ...]` for the verification battery.
    #[serde(default = "default_points")]
    pub points: Vec<(f64, f64)>,
}

fn default_paths() -> usize {
    20_000
}

fn default_steps() -> usize {
    256
}

fn default_control_gamma() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0)]
}

fn default_points() -> Vec<(f64, f64)> {
    vec![(0.0, 0.0)]
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            steps: default_steps(),
            gamma: default_control_gamma(),
            points: default_points(),
        }
    }
}

/// Exact finite-N disorder averages.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Also compute F_N at this inverse temperature.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Finite-size scaling exponent for the N → ∞ extrapolation.
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_sizes() -> Vec<usize> {
    vec![12, 16, 20]
}

fn default_samples() -> usize {
    100
}

fn default_omega() -> f64 {
    2.0 / 3.0
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            sizes: default_sizes(),
            samples: default_samples(),
            beta: None,
            omega: default_omega(),
        }
    }
}

/// End-to-end consistency: optimizer estimate vs. finite-N extrapolation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Models to compare; defaults to the top-level model alone.
    #[serde(default)]
    pub models: Option<Vec<ModelSection>>,
    /// Agreement tolerance between the two independent estimates.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    0.02
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { models: None, tolerance: default_tolerance() }
    }
}

impl RunConfig {
    /// Parses TOML, surfacing position diagnostics from the parser.
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("{e}")))
    }

    /// Canonical serialization written beside every run's outputs. Replaying
    /// it resolves to the identical configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_every_default() {
        let cfg = RunConfig::from_toml("[model]\ncoeffs = [[2, 0.7071067811865476]]\n").unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.optimizer.k_max, 3);
        assert_eq!(cfg.control.steps, 256);
        assert_eq!(cfg.oracle.sizes, vec![12, 16, 20]);
        assert_eq!(cfg.solve.kind, SolveKind::ZeroT);
        let m = cfg.model.build().unwrap();
        let grid = cfg.grid.resolve(&m);
        assert_eq!(grid.n_x, 2049);
        // Round trip through the canonical form is lossless and stable.
        let text = cfg.to_toml();
        let again = RunConfig::from_toml(&text).unwrap();
        assert_eq!(text, again.to_toml());
    }

    #[test]
    fn missing_model_is_a_schema_error() {
        let err = RunConfig::from_toml("seed = 3\n").unwrap_err();
        match err {
            Failure::Config(msg) => assert!(msg.contains("model"), "{msg}"),
            other => panic!("wrong failure class: {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_positions() {
        let err = RunConfig::from_toml("[model\ncoeffs = []\n").unwrap_err();
        match err {
            Failure::Config(msg) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("wrong failure class: {other:?}"),
        }
    }

    #[test]
    fn decreasing_gamma_names_the_offending_index() {
        let err = build_gamma(&[(0.0, 1.0), (0.4, 0.5)]).unwrap_err();
        match err {
            Failure::Config(msg) => {
                assert!(msg.contains("index 1") && msg.contains("decreases"), "{msg}")
            }
            other => panic!("wrong failure class: {other:?}"),
        }
        assert!(build_gamma(&[(0.0, 0.0), (0.3, 0.7)]).is_ok());
    }
}
