//! Parsers for solver output.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::maxsat::Assignment;

/// What the solver claims about its answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    Feasible,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxSatOutput {
    pub assignment: Assignment,
    pub status: SolverStatus,
    /// Last `o` line, if any.
    pub cost: Option<u64>,
}

enum Model {
    Literals(Vec<i32>),
    Bits(String),
}

/// Reads the last complete model from MaxSAT solver output.
///
/// `v` lines may hold signed literals, possibly spread over several lines
/// and closed by `0`, or a single string of `0`/`1` characters. Literals
/// left open at the end of the output belong to an interrupted model and
/// are dropped.
pub fn parse_maxsat_output(text: &str, n_vars: usize) -> Result<MaxSatOutput> {
    let mut status = SolverStatus::Unknown;
    let mut cost = None;
    let mut last: Option<Model> = None;
    let mut open: Option<Vec<i32>> = None;
    for line in text.lines() {
        let line = line.trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("s") => {
                let rest: Vec<&str> = tokens.collect();
                match rest.join(" ").as_str() {
                    "OPTIMUM FOUND" => status = SolverStatus::Optimal,
                    "SATISFIABLE" => status = SolverStatus::Feasible,
                    "UNSATISFIABLE" => return Err(Error::Infeasible),
                    _ => {}
                }
            }
            Some("o") => {
                let v = tokens.next().unwrap_or("");
                cost = Some(
                    v.parse::<u64>()
                        .map_err(|_| Error::SolverParse(format!("bad cost line: {line}")))?,
                );
            }
            Some("v") => {
                let rest: Vec<&str> = tokens.collect();
                let bit_string = rest.len() == 1
                    && open.is_none()
                    && rest[0].bytes().all(|b| b == b'0' || b == b'1')
                    && (rest[0].len() > 1 || n_vars == 1);
                if bit_string {
                    last = Some(Model::Bits(rest[0].to_string()));
                    continue;
                }
                let lits = open.get_or_insert_with(Vec::new);
                for tok in rest {
                    let l: i32 = tok
                        .parse()
                        .map_err(|_| Error::SolverParse(format!("malformed v-line: {line}")))?;
                    if l == 0 {
                        last = Some(Model::Literals(std::mem::take(lits)));
                        open = None;
                        break;
                    }
                    lits.push(l);
                }
            }
            _ => {}
        }
    }
    if open.is_some() {
        log::warn!("discarding an unterminated model at the end of solver output");
    }
    let assignment = match last {
        None => return Err(Error::NoIncumbent),
        Some(Model::Literals(lits)) => Assignment::from_literals(n_vars, &lits)?,
        Some(Model::Bits(bits)) => {
            if bits.len() < n_vars {
                return Err(Error::IncompleteAssignment(format!(
                    "model has {} values, encoding has {n_vars} variables",
                    bits.len()
                )));
            }
            Assignment::from_bits(bits.bytes().take(n_vars).map(|b| b == b'1').collect())
        }
    };
    Ok(MaxSatOutput {
        assignment,
        status,
        cost,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpOutput {
    pub values: HashMap<String, f64>,
    pub status: SolverStatus,
    pub objective: Option<f64>,
}

fn objective_after(line: &str, marker: &str) -> Option<f64> {
    let lower = line.to_ascii_lowercase();
    let at = lower.find(marker)?;
    line[at + marker.len()..]
        .trim_start_matches([' ', '=', ':'])
        .split_whitespace()
        .next()?
        .parse()
        .ok()
}

/// Reads a MILP solution file: `name value` lines, CBC's
/// `index name value reduced-cost` listing under a status header, or a
/// `.sol` file with `#` comments.
pub fn parse_milp_solution(text: &str) -> Result<MilpOutput> {
    let mut values = HashMap::new();
    let mut status = SolverStatus::Unknown;
    let mut objective = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_start_matches("**").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = objective_after(comment, "objective value") {
                objective = Some(v);
            }
            continue;
        }
        if k == 0 && line.contains("objective value") {
            let head = line.to_ascii_lowercase();
            if head.starts_with("infeasible") || head.contains("integer infeasible") {
                return Err(Error::Infeasible);
            }
            status = if head.starts_with("optimal") {
                SolverStatus::Optimal
            } else {
                SolverStatus::Feasible
            };
            objective = objective_after(line, "objective value");
            continue;
        }
        if k == 0 && line.to_ascii_lowercase().starts_with("infeasible") {
            return Err(Error::Infeasible);
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (name, value) = match tokens.as_slice() {
            [name, value] => (*name, *value),
            [idx, name, value, ..] if idx.parse::<usize>().is_ok() => (*name, *value),
            _ => return Err(Error::SolverParse(format!("line {}: cannot read `{raw}`", k + 1))),
        };
        let v: f64 = value
            .parse()
            .map_err(|_| Error::SolverParse(format!("line {}: bad value in `{raw}`", k + 1)))?;
        values.insert(name.to_string(), v);
    }
    if values.is_empty() && status == SolverStatus::Unknown {
        return Err(Error::NoIncumbent);
    }
    Ok(MilpOutput {
        values,
        status,
        objective,
    })
}
