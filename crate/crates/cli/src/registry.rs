//! Named coefficients, operator descriptors and the presets the CLI knows.

use std::sync::Arc;

use leibniz_core::corpus::{self, lookup, FunctionSpec};
use leibniz_core::counterexample::{counterexample_operator, PsiSolution};
use leibniz_core::operators::{CoeffFn, KmPair, LogPolynomial, OperatorSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// What a case asserts: the identity holds, or the residual exceeds tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Hold,
    Violation,
}

impl Expect {
    pub fn as_str(self) -> &'static str {
        match self {
            Expect::Hold => "hold",
            Expect::Violation => "violation",
        }
    }
}

/// A coefficient in a config file: a number or a builtin name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Number(f64),
    Named(String),
}

impl Default for Coeff {
    fn default() -> Self {
        Coeff::Number(0.0)
    }
}

impl From<f64> for Coeff {
    fn from(v: f64) -> Self {
        Coeff::Number(v)
    }
}

impl From<&str> for Coeff {
    fn from(v: &str) -> Self {
        Coeff::Named(v.to_string())
    }
}

pub const COEFFICIENT_NAMES: &[&str] = &["x", "sin", "cos", "exp", "one_plus_x2"];

impl Coeff {
    pub fn build(&self) -> Result<CoeffFn, CliError> {
        Ok(match self {
            Coeff::Number(v) if v.is_finite() => CoeffFn::constant(*v),
            Coeff::Number(v) => {
                return Err(CliError::Config(format!("non-finite coefficient {v}")))
            }
            Coeff::Named(n) => match n.as_str() {
                "x" => CoeffFn::from_callable("x", |x| x),
                "sin" => CoeffFn::from_callable("sin", f64::sin),
                "cos" => CoeffFn::from_callable("cos", f64::cos),
                "exp" => CoeffFn::from_callable("exp", f64::exp),
                "one_plus_x2" => CoeffFn::from_callable("1+x^2", |x| 1.0 + x * x),
                other => {
                    return Err(CliError::UnknownName {
                        kind: "coefficient",
                        name: other.to_string(),
                    })
                }
            },
        })
    }
}

/// One `[[operator]]` table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorEntry {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Coeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<Coeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<Coeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d00: Option<Coeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `b` and `c` of a diffusion pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Coeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Coeff>,
    /// Linear and quadratic coefficients of a log-polynomial operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<f64>>>,
    /// Seed name of a composition operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone)]
pub enum Built {
    Single(OperatorSpec),
    Pair(KmPair),
}

#[derive(Debug, Clone)]
pub struct NamedOperator {
    pub name: String,
    pub built: Built,
    pub expect: Expect,
}

impl NamedOperator {
    pub fn single(&self) -> Option<&OperatorSpec> {
        match &self.built {
            Built::Single(op) => Some(op),
            Built::Pair(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.built {
            Built::Single(op) => op.describe(),
            Built::Pair(p) => format!("pair(T={}, A={})", p.t.describe(), p.a.describe()),
        }
    }
}

fn coeff(c: &Option<Coeff>) -> Result<CoeffFn, CliError> {
    c.clone().unwrap_or_default().build()
}

impl OperatorEntry {
    pub fn characterized(
        name: &str,
        c0: impl Into<Coeff>,
        c1: impl Into<Coeff>,
        c2: impl Into<Coeff>,
        d00: impl Into<Coeff>,
        k: usize,
    ) -> Self {
        OperatorEntry {
            family: "characterized".into(),
            name: Some(name.into()),
            c0: Some(c0.into()),
            c1: Some(c1.into()),
            c2: Some(c2.into()),
            d00: Some(d00.into()),
            k: Some(k),
            ..Default::default()
        }
    }

    pub fn family(name: &str, family: &str) -> Self {
        OperatorEntry {
            family: family.into(),
            name: Some(name.into()),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<NamedOperator, CliError> {
        let ctx = |e: leibniz_core::Error| {
            CliError::Config(format!(
                "operator `{}`: {e}",
                self.name.as_deref().unwrap_or(&self.family)
            ))
        };
        let built = match self.family.as_str() {
            "characterized" => Built::Single(
                OperatorSpec::characterized(
                    coeff(&self.c0)?,
                    coeff(&self.c1)?,
                    coeff(&self.c2)?,
                    coeff(&self.d00)?,
                    self.k.unwrap_or(2),
                )
                .map_err(ctx)?,
            ),
            "second_derivative" => Built::Single(OperatorSpec::second_derivative(
                self.c2.clone().unwrap_or(Coeff::Number(1.0)).build()?,
            )),
            "linear_differential" => {
                Built::Single(OperatorSpec::linear(coeff(&self.c1)?, coeff(&self.c2)?))
            }
            "third_derivative" => Built::Single(third_derivative()),
            "log_polynomial" => {
                let lin = self.linear.clone().unwrap_or_else(|| vec![1.0]);
                let n = lin.len();
                let quad = self
                    .quadratic
                    .clone()
                    .unwrap_or_else(|| vec![vec![0.0; n]; n]);
                let c = lin.into_iter().map(CoeffFn::constant).collect();
                let d = quad
                    .into_iter()
                    .map(|row| row.into_iter().map(CoeffFn::constant).collect())
                    .collect();
                Built::Single(OperatorSpec::LogPolynomial(
                    LogPolynomial::new(c, d).map_err(ctx)?,
                ))
            }
            "composition" => {
                let seed = self.seed.as_deref().unwrap_or("cubic");
                let sol = PsiSolution::by_name(seed).map_err(|_| CliError::UnknownName {
                    kind: "composition seed",
                    name: seed.to_string(),
                })?;
                Built::Single(counterexample_operator(Arc::new(sol)))
            }
            "logarithmic_pair" => Built::Pair(KmPair::logarithmic()),
            "diffusion_pair" => Built::Pair(KmPair::diffusion(
                self.b.clone().unwrap_or_default().build()?,
                self.c.clone().unwrap_or(Coeff::Number(1.0)).build()?,
            )),
            other => {
                return Err(CliError::UnknownName {
                    kind: "operator family",
                    name: other.to_string(),
                })
            }
        };
        let name = match &self.name {
            Some(n) => n.clone(),
            None => match &built {
                Built::Single(op) => op.describe(),
                Built::Pair(_) => self.family.clone(),
            },
        };
        Ok(NamedOperator {
            name,
            built,
            expect: self.expect,
        })
    }
}

pub fn third_derivative() -> OperatorSpec {
    OperatorSpec::black_box("f'''", 3, |_, j| j.get(3))
}

/// The operator list used when a config names none: the second derivative,
/// twelve characterized operators covering every order, two log-polynomial
/// operators and both second-order Leibniz pairs.
pub fn default_operators() -> Vec<OperatorEntry> {
    let mut second = OperatorEntry::family("second_derivative", "second_derivative");
    second.c2 = Some(1.0.into());
    let mut log_poly = OperatorEntry::family("log_polynomial", "log_polynomial");
    log_poly.linear = Some(vec![0.5, -1.0, 0.25]);
    log_poly.quadratic = Some(vec![
        vec![0.3, 0.0, 0.0],
        vec![0.1, -0.2, 0.0],
        vec![0.0, 0.4, 0.05],
    ]);
    let mut diffusion = OperatorEntry::family("diffusion_pair", "diffusion_pair");
    diffusion.b = Some(0.6.into());
    diffusion.c = Some((-1.4).into());
    let mut diffusion_var = OperatorEntry::family("diffusion_pair_variable", "diffusion_pair");
    diffusion_var.b = Some("sin".into());
    diffusion_var.c = Some("one_plus_x2".into());
    vec![
        second,
        OperatorEntry::characterized("entropy", 1.0, 0.0, 0.0, 0.0, 0),
        OperatorEntry::characterized("log_square", 0.0, 0.0, 0.0, 1.0, 0),
        OperatorEntry::characterized("order0_mixed", 0.7, 0.0, 0.0, -1.3, 0),
        OperatorEntry::characterized("order0_variable", "sin", 0.0, 0.0, "cos", 0),
        OperatorEntry::characterized("first_derivative", 0.0, 1.0, 0.0, 0.0, 1),
        OperatorEntry::characterized("order1_full", -0.5, 2.0, 0.0, 0.25, 1),
        OperatorEntry::characterized("order1_variable", "cos", "x", 0.0, "sin", 1),
        OperatorEntry::characterized("second_derivative_family", 0.0, 0.0, 1.0, 0.0, 2),
        OperatorEntry::characterized("order2_full", 1.5, -0.5, 0.25, 0.75, 2),
        OperatorEntry::characterized("order2_variable", "cos", "x", "one_plus_x2", "sin", 2),
        OperatorEntry::characterized("order2_exp", "exp", 0.0, 1.0, -1.0, 2),
        OperatorEntry::characterized("order3_full", -2.0, 1.0, -3.0, 0.5, 3),
        log_poly,
        OperatorEntry::family("logarithmic_pair", "logarithmic_pair"),
        diffusion,
        diffusion_var,
    ]
}

/// Operators accepted by `recover --operator NAME`.
pub fn preset(name: &str) -> Result<NamedOperator, CliError> {
    if let Some(e) = default_operators()
        .into_iter()
        .find(|e| e.name.as_deref() == Some(name))
    {
        return e.build();
    }
    match name {
        "counterexample" => OperatorEntry::family("counterexample", "composition").build(),
        "third_derivative" => OperatorEntry::family("third_derivative", "third_derivative").build(),
        _ => Err(CliError::UnknownName {
            kind: "operator",
            name: name.to_string(),
        }),
    }
}

pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = default_operators()
        .into_iter()
        .filter_map(|e| e.name)
        .collect();
    names.push("counterexample".into());
    names.push("third_derivative".into());
    names
}

/// Functions whose values stay above `e`, the range the counterexample needs.
pub fn composition_corpus() -> Vec<FunctionSpec> {
    let lift = |base: &str, c: f64, name: &str| {
        corpus::sum(&corpus::constant_fn(c), &lookup(base).expect("builtin"))
            .expect("real-line sum")
            .renamed(name)
    };
    vec![
        lift("square", 3.0, "three_plus_square"),
        lift("exp", 4.0, "four_plus_exp"),
        lift("lorentzian", 3.0, "three_plus_lorentzian"),
        lift("sin", 5.0, "five_plus_sin"),
    ]
}
