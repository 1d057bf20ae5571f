//! Run configuration, read from TOML.
//!
//! ```toml
//! suites = ["identities", "counterexample"]
//! seed = 7
//! tolerance = 1e-9
//!
//! [[operator]]
//! family = "characterized"
//! c0 = 1.0
//! c1 = "x"
//! k = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use leibniz_core::corpus::{builtin_corpus, lookup, FunctionSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::registry::{default_operators, NamedOperator, OperatorEntry};

pub const DEFAULT_REPORT: &str = "leibniz-report.json";
pub const REPORT_ENV: &str = "LEIBNIZ_REPORT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Faa,
    Aichinger,
    Recover,
    Counterexample,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Identities,
        Suite::Faa,
        Suite::Aichinger,
        Suite::Recover,
        Suite::Counterexample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Faa => "faa",
            Suite::Aichinger => "aichinger",
            Suite::Recover => "recover",
            Suite::Counterexample => "counterexample",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(CliError::Config(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    /// Function names from the builtin corpus.
    pub corpus: Vec<String>,
    #[serde(rename = "operator")]
    pub operators: Vec<OperatorEntry>,
    pub points_per_check: usize,
    /// Corpus triples per trilinear case.
    pub triples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub report_path: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suites: Suite::ALL.to_vec(),
            corpus: builtin_corpus()
                .iter()
                .map(|f| f.name().to_string())
                .collect(),
            operators: default_operators(),
            points_per_check: 16,
            triples: 20,
            seed: 2024,
            tolerance: 1e-9,
            report_path: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.suites.is_empty() {
            return Err(CliError::Config("no suites selected".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Config(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.points_per_check == 0 || self.triples == 0 {
            return Err(CliError::Config(
                "points_per_check and triples must be positive".into(),
            ));
        }
        if self.corpus.is_empty() {
            return Err(CliError::Config("corpus is empty".into()));
        }
        self.functions()?;
        self.built_operators()?;
        Ok(())
    }

    pub fn functions(&self) -> Result<Vec<FunctionSpec>, CliError> {
        self.corpus
            .iter()
            .map(|n| {
                lookup(n).map_err(|_| CliError::UnknownName {
                    kind: "function",
                    name: n.clone(),
                })
            })
            .collect()
    }

    pub fn built_operators(&self) -> Result<Vec<NamedOperator>, CliError> {
        self.operators.iter().map(OperatorEntry::build).collect()
    }

    /// Default < config < `LEIBNIZ_REPORT` < flag.
    pub fn resolve_report_path(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(REPORT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.report_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_operator_tables() {
        let cfg = RunConfig::from_toml(
            r#"
suites = ["identities"]
corpus = ["sin", "exp"]
seed = 3

[[operator]]
family = "characterized"
name = "mixed"
c0 = 1.5
c1 = "x"
k = 1

[[operator]]
family = "diffusion_pair"
b = 0.2
c = "cos"
"#,
        )
        .unwrap();
        assert_eq!(cfg.suites, vec![Suite::Identities]);
        assert_eq!(cfg.operators.len(), 2);
        assert_eq!(cfg.points_per_check, 16);
        let ops = cfg.built_operators().unwrap();
        assert_eq!(ops[0].name, "mixed");
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "tolerance = 0.0",
            "tolerance = -1e-9",
            "suites = []",
            "corpus = [\"nope\"]",
            "suites = [\"plots\"]",
            "[[operator]]\nfamily = \"characterized\"\nc1 = 1.0\nk = 0",
            "[[operator]]\nfamily = \"characterized\"\nc0 = \"tan\"",
            "[[operator]]\nfamily = \"wavelet\"",
            "colour = \"blue\"",
        ] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn report_path_precedence() {
        let mut cfg = RunConfig::default();
        assert_eq!(
            cfg.resolve_report_path(Some(Path::new("flag.json"))),
            PathBuf::from("flag.json")
        );
        cfg.report_path = Some("cfg.json".into());
        if std::env::var_os(REPORT_ENV).is_none() {
            assert_eq!(cfg.resolve_report_path(None), PathBuf::from("cfg.json"));
        }
    }
}
