//! JSON problem files.
//!
//! Costs and probabilities are plain JSON numbers; the string `"inf"`
//! stands for an infinite stage cost. Per-step tables may be given once
//! and are then repeated over the horizon.

use std::fs;
use std::path::Path;

use distmatch::lqg::{
    GaussianGain, LinearGaussianDynamics, LinearGaussianPolicy, LinearGaussianStep, QuadraticCost,
    QuadraticStage,
};
use distmatch::{CostModel, DiscreteProblem, TabularPolicy};
use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// A finite number, or `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Num(x)),
            Raw::Text(s) => match s.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(Num(f64::INFINITY)),
                "-inf" | "-Infinity" => Ok(Num(f64::NEG_INFINITY)),
                other => Err(D::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// One table for all steps, or one table per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerStep<T> {
    Varying(Vec<T>),
    Invariant(T),
}

impl<T: Clone> PerStep<T> {
    fn expand(&self, horizon: usize, field: &str) -> Result<Vec<T>, CliError> {
        match self {
            PerStep::Invariant(t) => Ok(vec![t.clone(); horizon]),
            PerStep::Varying(v) if v.len() == horizon => Ok(v.clone()),
            PerStep::Varying(v) => Err(CliError::schema(
                field,
                format!("{} steps for horizon {horizon}", v.len()),
            )),
        }
    }
}

type Table3 = Vec<Vec<Vec<f64>>>;
type CostTable = Vec<Vec<Num>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial: Vec<f64>,
    /// `[t][x][u][x']`, or `[x][u][x']` for all steps.
    pub transitions: PerStep<Table3>,
    /// `[t][x][u]`, or `[x][u]` for all steps.
    pub stage_costs: PerStep<CostTable>,
    pub terminal_costs: Vec<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    /// `[t][x][u]`, or `[x][u]`; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PerStep<Vec<Vec<f64>>>>,
}

fn one() -> f64 {
    1.0
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPrior {
    #[serde(rename = "K")]
    pub gain: PerStep<Matrix>,
    pub k: PerStep<Vec<f64>>,
    #[serde(rename = "Sigma")]
    pub sigma: PerStep<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqgFile {
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    #[serde(rename = "F_xi")]
    pub f_xi: PerStep<Matrix>,
    pub f: PerStep<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: PerStep<Matrix>,
    #[serde(rename = "R_xixi")]
    pub r_xixi: PerStep<Matrix>,
    #[serde(rename = "R_xi")]
    pub r_xi: PerStep<Vec<f64>>,
    #[serde(rename = "R_xx_T")]
    pub r_xx_terminal: Matrix,
    #[serde(rename = "R_x_T")]
    pub r_x_terminal: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<GaussianPrior>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemFile {
    Discrete(DiscreteFile),
    Lqg(LqgFile),
}

pub struct Discrete {
    pub problem: DiscreteProblem,
    pub cost: CostModel,
    pub prior: TabularPolicy,
}

pub struct Lqg {
    pub dynamics: LinearGaussianDynamics,
    pub cost: QuadraticCost,
    pub prior: LinearGaussianPolicy,
}

pub enum Problem {
    Discrete(Discrete),
    Lqg(Lqg),
}

fn in_field(field: &'static str) -> impl Fn(distmatch::Error) -> CliError {
    move |e| CliError::Invalid { field, source: e }
}

fn check_shape(ok: bool, field: &str, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::schema(field, what.to_string()))
    }
}

fn flatten_rows(
    table: &[Vec<f64>],
    rows: usize,
    cols: usize,
    field: &str,
) -> Result<Vec<f64>, CliError> {
    check_shape(
        table.len() == rows && table.iter().all(|r| r.len() == cols),
        field,
        &format!("expected {rows} rows of {cols} entries"),
    )?;
    Ok(table.concat())
}

impl DiscreteFile {
    pub fn build(&self) -> Result<Discrete, CliError> {
        let (n, m, horizon) = (self.num_states, self.num_actions, self.horizon);
        let transitions = self
            .transitions
            .expand(horizon, "transitions")?
            .iter()
            .map(|table| {
                check_shape(
                    table.len() == n,
                    "transitions",
                    &format!("expected {n} states per step"),
                )?;
                let rows: Vec<Vec<f64>> = table
                    .iter()
                    .map(|by_action| flatten_rows(by_action, m, n, "transitions"))
                    .collect::<Result<_, _>>()?;
                Ok(rows.concat())
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let problem = DiscreteProblem::new(n, m, self.initial.clone(), transitions)
            .map_err(in_field("transitions"))?;
        let stage = self
            .stage_costs
            .expand(horizon, "stage_costs")?
            .iter()
            .map(|table| {
                let rows: Vec<Vec<f64>> = table
                    .iter()
                    .map(|r| r.iter().map(|c| c.0).collect())
                    .collect();
                flatten_rows(&rows, n, m, "stage_costs")
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cost = CostModel::new(stage, self.terminal_costs.clone(), self.sigma)
            .map_err(in_field("stage_costs"))?;
        let prior = match &self.prior {
            None => TabularPolicy::uniform_for(&problem),
            Some(p) => {
                let tables = p
                    .expand(horizon, "prior")?
                    .iter()
                    .map(|t| flatten_rows(t, n, m, "prior"))
                    .collect::<Result<Vec<_>, _>>()?;
                TabularPolicy::new(n, m, tables).map_err(in_field("prior"))?
            }
        };
        Ok(Discrete {
            problem,
            cost,
            prior,
        })
    }

    pub fn from_parts(problem: &DiscreteProblem, cost: &CostModel) -> Self {
        let (n, m) = (problem.num_states(), problem.num_actions());
        let transitions = (0..problem.horizon())
            .map(|t| {
                (0..n)
                    .map(|x| {
                        (0..m)
                            .map(|u| problem.transition_row(t, x, u).to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let stage_costs = (0..problem.horizon())
            .map(|t| {
                (0..n)
                    .map(|x| {
                        (0..m)
                            .map(|u| Num(cost.stage(t, x, u) / cost.sigma()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            num_states: n,
            num_actions: m,
            horizon: problem.horizon(),
            initial: problem.initial().to_vec(),
            transitions: PerStep::Varying(transitions),
            stage_costs: PerStep::Varying(stage_costs),
            terminal_costs: cost.terminal().iter().map(|c| c / cost.sigma()).collect(),
            sigma: cost.sigma(),
            prior: None,
        }
    }
}

fn matrix(rows: &Matrix, r: usize, c: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    let flat = flatten_rows(rows, r, c, field)?;
    Ok(DMatrix::from_row_slice(r, c, &flat))
}

fn vector(v: &[f64], len: usize, field: &str) -> Result<DVector<f64>, CliError> {
    check_shape(v.len() == len, field, &format!("expected length {len}"))?;
    Ok(DVector::from_column_slice(v))
}

impl LqgFile {
    pub fn build(&self) -> Result<Lqg, CliError> {
        let (n, m, horizon) = (self.state_dim, self.action_dim, self.horizon);
        let f_xi = self.f_xi.expand(horizon, "F_xi")?;
        let f = self.f.expand(horizon, "f")?;
        let p = self.p.expand(horizon, "P")?;
        let steps = (0..horizon)
            .map(|t| {
                Ok(LinearGaussianStep {
                    f_xi: matrix(&f_xi[t], n, n + m, "F_xi")?,
                    f: vector(&f[t], n, "f")?,
                    p: matrix(&p[t], n, n, "P")?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let dynamics = LinearGaussianDynamics::new(n, m, steps).map_err(in_field("F_xi/f/P"))?;
        let r_xixi = self.r_xixi.expand(horizon, "R_xixi")?;
        let r_xi = self.r_xi.expand(horizon, "R_xi")?;
        let stages = (0..horizon)
            .map(|t| {
                Ok(QuadraticStage {
                    r_xixi: matrix(&r_xixi[t], n + m, n + m, "R_xixi")?,
                    r_xi: vector(&r_xi[t], n + m, "R_xi")?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let cost = QuadraticCost::new(
            n,
            m,
            stages,
            matrix(&self.r_xx_terminal, n, n, "R_xx_T")?,
            vector(&self.r_x_terminal, n, "R_x_T")?,
        )
        .map_err(in_field("R_xixi/R_xi/R_xx_T/R_x_T"))?;
        let prior = match &self.prior {
            None => LinearGaussianPolicy::standard(&dynamics),
            Some(prior) => {
                let gain = prior.gain.expand(horizon, "prior.K")?;
                let k = prior.k.expand(horizon, "prior.k")?;
                let sigma = prior.sigma.expand(horizon, "prior.Sigma")?;
                let steps = (0..horizon)
                    .map(|t| {
                        Ok(GaussianGain {
                            gain: matrix(&gain[t], m, n, "prior.K")?,
                            offset: vector(&k[t], m, "prior.k")?,
                            sigma: matrix(&sigma[t], m, m, "prior.Sigma")?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                LinearGaussianPolicy::new(n, m, steps).map_err(in_field("prior"))?
            }
        };
        Ok(Lqg {
            dynamics,
            cost,
            prior,
        })
    }
}

impl ProblemFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let located = |e: serde_json::Error| CliError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        };
        // the tagged pass buffers its input, so positions come from a syntax-only pass
        serde_json::from_str::<serde::de::IgnoredAny>(text).map_err(located)?;
        serde_json::from_str(text).map_err(|e| CliError::Schema {
            field: origin.to_string(),
            what: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("problem files serialize");
        text.push('\n');
        text
    }

    pub fn build(&self) -> Result<Problem, CliError> {
        match self {
            ProblemFile::Discrete(d) => d.build().map(Problem::Discrete),
            ProblemFile::Lqg(l) => l.build().map(Problem::Lqg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use distmatch::fixtures;

    #[test]
    fn generated_files_round_trip_bitwise() {
        let text = crate::commands::generate(4, 3, 3, 17, false).unwrap();
        let Problem::Discrete(loaded) = ProblemFile::parse(&text, "generated")
            .unwrap()
            .build()
            .unwrap()
        else {
            panic!("expected a discrete problem");
        };
        let again = ProblemFile::Discrete(DiscreteFile::from_parts(&loaded.problem, &loaded.cost))
            .to_json();
        assert_eq!(text, again);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let Problem::Discrete(reloaded) = ProblemFile::parse(&again, "again")
            .unwrap()
            .build()
            .unwrap()
        else {
            panic!("expected a discrete problem");
        };
        for t in 0..3 {
            assert_eq!(
                bits(loaded.problem.transition_table(t)),
                bits(reloaded.problem.transition_table(t))
            );
            assert_eq!(
                bits(loaded.cost.stage_table(t)),
                bits(reloaded.cost.stage_table(t))
            );
        }
        assert_eq!(
            bits(loaded.problem.initial()),
            bits(reloaded.problem.initial())
        );
    }

    #[test]
    fn infinite_costs_and_invariant_tables() {
        let text = r#"{
            "kind": "discrete", "num_states": 2, "num_actions": 2, "horizon": 2,
            "initial": [1, 0],
            "transitions": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
            "stage_costs": [[0, "inf"], [0, 0]],
            "terminal_costs": [0, 1]
        }"#;
        let Problem::Discrete(d) = ProblemFile::parse(text, "inline").unwrap().build().unwrap()
        else {
            panic!("expected a discrete problem");
        };
        assert_eq!(d.cost.stage(1, 0, 1), f64::INFINITY);
        assert_eq!(d.problem.horizon(), 2);
        let (chain, _) = fixtures::chain2();
        assert_eq!(d.problem.transition_table(0), chain.transition_table(0));
    }

    #[test]
    fn diagnostics_name_the_location() {
        let err = ProblemFile::parse(
            "{\n  \"kind\": \"discrete\",\n  \"num_states\": 2,\n}",
            "bad.json",
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
        let err = ProblemFile::parse("{\"kind\": \"discrete\", \"num_states\": -1}", "neg.json")
            .unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }), "{err}");
        let text = r#"{"kind": "discrete", "num_states": 2, "num_actions": 2, "horizon": 1,
            "initial": [0.5, 0.4], "transitions": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
            "stage_costs": [[0, 0], [0, 0]], "terminal_costs": [0, 1]}"#;
        let err = ProblemFile::parse(text, "x")
            .unwrap()
            .build()
            .err()
            .unwrap();
        assert!(matches!(
            err,
            CliError::Invalid {
                field: "transitions",
                ..
            }
        ));
        assert_eq!(err.exit_code(), 2);
    }
}
