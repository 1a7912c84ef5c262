//! Instance files.
//!
//! ```json
//! {
//!   "d": 2,
//!   "probabilities": [0.5, 0.5],
//!   "positions": [[1.0, -2.0], [0.0, 1.0]],
//!   "aggregation": { "kind": "sum" },
//!   "acceptance": { "kind": "nonnegative" },
//!   "mode": "rho",
//!   "solver": { "tol": 1e-6, "max_iter": 10000, "restarts": 5, "seed": 0 }
//! }
//! ```
//!
//! `positions` holds one row per institution and one column per scenario.
//! Shortfall instances have `d = 1`, a `shortfall` block, and no aggregation or
//! acceptance block.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::AggregationSpec;
use crate::dual::Mode;
use crate::error::{Error, Result};
use crate::primal::SolverOptions;
use crate::scenario::{RandomVector, ScenarioSpace};
use crate::shortfall::ShortfallSpec;
use crate::utility::Utility;

/// Aggregation as named in an instance file. Custom functions have no file form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregationConfig {
    Sum,
    SumOfLosses,
    UtilityOfSum { utility: Utility },
    ComponentwiseUtility { utilities: Vec<Utility> },
}

impl AggregationConfig {
    pub fn build(&self, d: usize) -> Result<AggregationSpec> {
        match self {
            AggregationConfig::Sum => Ok(AggregationSpec::sum(d)),
            AggregationConfig::SumOfLosses => Ok(AggregationSpec::sum_of_losses(d)),
            AggregationConfig::UtilityOfSum { utility } => {
                AggregationSpec::utility_of_sum(d, *utility)
            }
            AggregationConfig::ComponentwiseUtility { utilities } => {
                if utilities.len() != d {
                    return Err(Error::dimension(format!(
                        "{} utilities for d = {d}",
                        utilities.len()
                    )));
                }
                AggregationSpec::componentwise(utilities.clone())
            }
        }
    }
}

fn default_mode() -> Mode {
    Mode::Rho
}

/// The on-disk layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub d: usize,
    pub probabilities: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceSpec>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<ShortfallSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// A validated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub space: ScenarioSpace,
    pub x: RandomVector,
    pub mode: Mode,
    pub aggregation: Option<(AggregationConfig, AggregationSpec)>,
    pub acceptance: Option<AcceptanceSpec>,
    pub shortfall: Option<ShortfallSpec>,
    pub solver: SolverOptions,
}

impl Instance {
    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let space = ScenarioSpace::new(file.probabilities)?;
        if file.d == 0 {
            return Err(Error::validation("at least one institution", "d = 0"));
        }
        if file.positions.len() != file.d {
            return Err(Error::dimension(format!(
                "{} position rows for d = {}",
                file.positions.len(),
                file.d
            )));
        }
        if let Some(row) = file.positions.iter().find(|r| r.len() != space.len()) {
            return Err(Error::dimension(format!(
                "position row of length {} for n = {}",
                row.len(),
                space.len()
            )));
        }
        let x = RandomVector::from_rows(file.positions)?;
        let opts = file.solver;
        if !(opts.tol > 0.0 && opts.tol.is_finite()) || opts.max_iter == 0 {
            return Err(Error::validation(
                "positive tolerance and iteration budget",
                format!("{opts:?}"),
            ));
        }
        let mut instance = Instance {
            space,
            x,
            mode: file.mode,
            aggregation: None,
            acceptance: None,
            shortfall: None,
            solver: opts,
        };
        match file.mode {
            Mode::Rho | Mode::RhoTilde => {
                let (Some(agg), Some(acc)) = (file.aggregation, file.acceptance) else {
                    return Err(Error::validation(
                        "mode parameters present",
                        "rho and rho_tilde need an aggregation and an acceptance block",
                    ));
                };
                if file.shortfall.is_some() {
                    return Err(Error::validation(
                        "mode parameters present",
                        "shortfall block outside shortfall mode",
                    ));
                }
                let spec = agg.build(file.d)?;
                acc.validate(&instance.space)?;
                instance.aggregation = Some((agg, spec));
                instance.acceptance = Some(acc);
            }
            Mode::Shortfall => {
                let Some(spec) = file.shortfall else {
                    return Err(Error::validation(
                        "mode parameters present",
                        "shortfall mode needs a utility and u0",
                    ));
                };
                if file.aggregation.is_some() || file.acceptance.is_some() {
                    return Err(Error::validation(
                        "mode parameters present",
                        "shortfall mode takes no aggregation or acceptance block",
                    ));
                }
                if file.d != 1 {
                    return Err(Error::dimension(format!(
                        "shortfall mode needs d = 1, got {}",
                        file.d
                    )));
                }
                spec.validate()?;
                instance.shortfall = Some(spec);
            }
        }
        Ok(instance)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            d: self.x.d(),
            probabilities: self.space.probs().to_vec(),
            positions: self.x.rows(),
            aggregation: self.aggregation.as_ref().map(|(c, _)| c.clone()),
            acceptance: self.acceptance.clone(),
            mode: self.mode,
            shortfall: self.shortfall.clone(),
            solver: self.solver.clone(),
        }
    }

    /// `(Lambda, A)` for the systemic modes.
    pub fn systemic(&self) -> Option<(&AggregationSpec, &AcceptanceSpec)> {
        Some((&self.aggregation.as_ref()?.1, self.acceptance.as_ref()?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance files serialize")
    }

    /// SHA-256 of the compact serialization, hex encoded.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(&self.to_file()).expect("instance files serialize");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        detail: e.to_string(),
    })?;
    Instance::from_file(file)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"d": 1, "probabilities": [1.0], "positions": [[0.0]],
        "aggregation": {"kind": "sum"}, "acceptance": {"kind": "nonnegative"}}"#;

    #[test]
    fn minimal_file_loads() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.mode, Mode::Rho);
        assert_eq!(inst.solver, SolverOptions::default());
        assert_eq!(inst.x.d(), 1);
    }

    #[test]
    fn load_errors() {
        let bad_probs = MINIMAL.replace("[1.0]", "[0.9]");
        assert!(matches!(
            parse_instance(&bad_probs),
            Err(Error::Validation { .. })
        ));
        let bad_rows = MINIMAL.replace("\"d\": 1", "\"d\": 2");
        assert!(matches!(
            parse_instance(&bad_rows),
            Err(Error::Dimension(_))
        ));
        let unknown = MINIMAL.replace("\"d\": 1", "\"d\": 1, \"extra\": 3");
        match parse_instance(&unknown) {
            Err(Error::Parse { detail, .. }) => assert!(detail.contains("extra")),
            other => panic!("{other:?}"),
        }
        let no_acc = r#"{"d": 1, "probabilities": [1.0], "positions": [[0.0]], "aggregation": {"kind": "sum"}}"#;
        assert!(matches!(
            parse_instance(no_acc),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn round_trip_and_hash() {
        let inst = parse_instance(MINIMAL).unwrap();
        let again = parse_instance(&inst.to_json()).unwrap();
        assert_eq!(inst.to_file(), again.to_file());
        assert_eq!(inst.hash(), again.hash());
        assert_eq!(inst.hash().len(), 64);
    }

    #[test]
    fn shortfall_instance() {
        let text = r#"{"d": 1, "probabilities": [0.5, 0.5], "positions": [[-1.0, 3.0]], "mode": "shortfall",
            "shortfall": {"utility": {"kind": "exponential", "gamma": 1.0}, "u0": 0.0}}"#;
        let inst = parse_instance(text).unwrap();
        assert!(inst.systemic().is_none());
        assert!(inst.shortfall.is_some());
    }
}
