//! Run configuration: a JSON file selecting the symbol and the numerical
//! parameters shared by every subcommand.  Command-line flags override the
//! corresponding fields.

use serde::{Deserialize, Serialize};

use nwl_core::{Error, Result, Symbol, SymbolConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    /// steady-solve residual target
    #[serde(default = "default_solve_tol")]
    pub solve: f64,
    /// complete-monotonicity slack on signed differences
    #[serde(default = "default_cm_tol")]
    pub cm: f64,
    /// kernel half-period monotonicity slack (relative to max |K|)
    #[serde(default = "default_mono_tol")]
    pub mono: f64,
    /// symmetry-defect bound in the structural audit
    #[serde(default = "default_audit_tol")]
    pub audit: f64,
}

fn default_solve_tol() -> f64 {
    1e-10
}
fn default_cm_tol() -> f64 {
    1e-12
}
fn default_mono_tol() -> f64 {
    1e-8
}
fn default_audit_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solve: default_solve_tol(),
            cm: default_cm_tol(),
            mono: default_mono_tol(),
            audit: default_audit_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchConfig {
    /// stop when max phi reaches this fraction of c/2
    #[serde(default = "default_theta")]
    pub target_height_fraction: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_theta() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_max_steps() -> usize {
    500
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self {
            target_height_fraction: default_theta(),
            epsilon: default_epsilon(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub symbol: SymbolConfig,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m_trunc")]
    pub m_trunc: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub branch: BranchConfig,
}

fn default_n() -> usize {
    256
}
fn default_m_trunc() -> u64 {
    100_000
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn build_symbol(&self) -> Result<Symbol> {
        self.symbol.build()
    }
}
