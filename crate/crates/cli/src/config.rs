//! Run configuration: a TOML file holding a DGP catalog plus sections for
//! each subcommand. Command-line flags override file values.
//!
//! ```toml
//! [dgp.null]                 # catalog entries, see rdd_core::dgp::catalog
//! ...
//! [experiment]
//! dgps = ["null", "adv"]     # default: every catalog entry
//! n = [500, 2000, 8000]
//! reps = 1000
//! seed = 1
//! theta0 = 0.0
//! alpha = 0.05
//! tests = ["cct", "conventional"]
//! offsets = [0.0, 0.5, 1.0]  # simulate: sweep power over shifted DGPs
//! bandwidth_c = 0.5          # or bandwidth_fixed; default c = sd(Z)
//! bandwidth_r = 0.2
//!
//! [adversarial]
//! alt = "alt"
//! null = "null"
//! schedule = [1e-1, 1e-2, 1e-3, 1e-4]
//! n = 2000
//!
//! [check]
//! kappa = 0.5                # default: each DGP's own kappa
//! grid = 4096
//! kappa_tilde = 0.5          # all three enable the uniform-constants check
//! l_tilde = 0.1
//! u_tilde = 10.0
//!
//! [diagnose]
//! dgp = "cubic"
//! n = [2000, 8000]
//! reps = 2000
//! ```

use std::collections::BTreeMap;

use rdd_core::dgp::catalog::{Catalog, CatalogFile, DgpEntry, SpliceEntry};
use rdd_core::montecarlo::TestKind;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub dgp: BTreeMap<String, DgpEntry>,
    #[serde(default)]
    pub splice: BTreeMap<String, SpliceEntry>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub adversarial: Option<AdversarialSection>,
    #[serde(default)]
    pub check: CheckSection,
    pub diagnose: Option<DiagnoseSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub dgps: Option<Vec<String>>,
    pub n: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub theta0: Option<f64>,
    pub alpha: Option<f64>,
    pub tests: Option<Vec<TestKind>>,
    pub offsets: Option<Vec<f64>>,
    pub bandwidth_c: Option<f64>,
    pub bandwidth_r: Option<f64>,
    pub bandwidth_fixed: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialSection {
    pub alt: String,
    pub null: String,
    pub schedule: Option<Vec<f64>>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub kappa: Option<f64>,
    pub grid: Option<usize>,
    pub kappa_tilde: Option<f64>,
    pub l_tilde: Option<f64>,
    pub u_tilde: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    pub dgp: String,
    pub n: Option<Vec<usize>>,
    pub reps: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn catalog(&self) -> Result<Catalog, CliError> {
        CatalogFile { dgp: self.dgp.clone(), splice: self.splice.clone() }
            .resolve()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
