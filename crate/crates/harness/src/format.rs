//! JSON files for instances, allocations, solutions and perturbed instances.
//!
//! Keys are written in a fixed order so equal inputs give byte-identical
//! files. Agents and items are 1-based on disk. Values are JSON integers
//! when they fit in an `i64` and `"p/q"` strings otherwise.

use std::collections::BTreeMap;

use efr_core::{Allocation, BigInt, EfrCertificate, Instance, PerturbParams, PerturbedInstance, Rational, WeightVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Free-form descriptive fields, kept sorted.
pub type Metadata = BTreeMap<String, serde_json::Value>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unsupported format_version {0}")]
    Version(u32),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Field { field: field.into(), message: message.into() }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    render(&serde_json::to_value(value).expect("file types always serialize"))
}

/// Indented JSON with arrays of scalars kept on one line, plus a trailing
/// newline. Object keys keep their insertion order.
pub fn render(value: &serde_json::Value) -> String {
    fn go(v: &serde_json::Value, indent: usize, out: &mut String) {
        use serde_json::Value;
        let pad = |n: usize| " ".repeat(n);
        match v {
            Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
                let parts: Vec<String> = items.iter().map(|x| x.to_string()).collect();
                out.push('[');
                out.push_str(&parts.join(", "));
                out.push(']');
            }
            Value::Array(items) => {
                out.push_str("[\n");
                for (k, x) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 2));
                    go(x, indent + 2, out);
                    out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Value::Object(map) if map.is_empty() => out.push_str("{}"),
            Value::Object(map) => {
                out.push_str("{\n");
                for (k, (key, x)) in map.iter().enumerate() {
                    out.push_str(&pad(indent + 2));
                    out.push_str(&Value::String(key.clone()).to_string());
                    out.push_str(": ");
                    go(x, indent + 2, out);
                    out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
            scalar => out.push_str(&scalar.to_string()),
        }
    }
    let mut out = String::new();
    go(value, 0, &mut out);
    out.push('\n');
    out
}

fn check_version(v: u32) -> Result<(), FormatError> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(FormatError::Version(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Text(String),
}

impl From<&Rational> for Number {
    fn from(v: &Rational) -> Self {
        if v.is_integer() {
            if let Ok(i) = i64::try_from(v.numer()) {
                return Number::Int(i);
            }
        }
        Number::Text(v.to_string())
    }
}

impl Number {
    fn to_rational(&self, field: &str) -> Result<Rational, FormatError> {
        match self {
            Number::Int(i) => Ok(Rational::from_integer(BigInt::from(*i))),
            Number::Text(s) => parse_rational(s).ok_or_else(|| field_err(field, format!("cannot read {s:?} as p/q"))),
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim().parse::<BigInt>().ok()?, q.trim().parse::<BigInt>().ok()?),
        None => (s.trim().parse::<BigInt>().ok()?, BigInt::from(1)),
    };
    (q != BigInt::from(0)).then(|| Rational::new(p, q))
}

fn numbers(row: &[Rational]) -> Vec<Number> {
    row.iter().map(Number::from).collect()
}

fn matrix(rows: &[Vec<Rational>]) -> Vec<Vec<Number>> {
    rows.iter().map(|r| numbers(r)).collect()
}

fn read_matrix(raw: &[Vec<Number>], field: &str, n: usize, m: usize) -> Result<Vec<Vec<Rational>>, FormatError> {
    if raw.len() != n {
        return Err(field_err(field, format!("expected {n} rows, found {}", raw.len())));
    }
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != m {
                return Err(field_err(format!("{field}[{i}]"), format!("expected {m} entries, found {}", row.len())));
            }
            row.iter().enumerate().map(|(t, v)| v.to_rational(&format!("{field}[{i}][{t}]"))).collect()
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format_version: u32,
    agents: usize,
    items: usize,
    values: Vec<Vec<Number>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: Metadata,
}

pub fn instance_to_json(inst: &Instance, metadata: &Metadata) -> String {
    let file = InstanceFile {
        format_version: FORMAT_VERSION,
        agents: inst.num_agents(),
        items: inst.num_items(),
        values: matrix(inst.rows()),
        metadata: metadata.clone(),
    };
    to_json(&file)
}

pub fn parse_instance(text: &str) -> Result<(Instance, Metadata), FormatError> {
    let file: InstanceFile = from_json(text)?;
    check_version(file.format_version)?;
    if file.agents == 0 {
        return Err(field_err("agents", "need at least one agent"));
    }
    let values = read_matrix(&file.values, "values", file.agents, file.items)?;
    let inst = Instance::new(file.agents, file.items, values).map_err(|e| field_err("values", e.to_string()))?;
    Ok((inst, file.metadata))
}

/// 1-based bundles.
pub fn one_based_bundles(alloc: &Allocation) -> Vec<Vec<usize>> {
    alloc.bundles().into_iter().map(|b| b.into_iter().map(|t| t + 1).collect()).collect()
}

fn bundles_in(raw: &[Vec<usize>], field: &str, n: usize, m: usize) -> Result<Allocation, FormatError> {
    if raw.len() != n {
        return Err(field_err(field, format!("expected {n} bundles, found {}", raw.len())));
    }
    let mut zero_based = Vec::with_capacity(n);
    for (i, b) in raw.iter().enumerate() {
        let mut out = Vec::with_capacity(b.len());
        for (k, &t) in b.iter().enumerate() {
            if t == 0 || t > m {
                return Err(field_err(format!("{field}[{i}][{k}]"), format!("item {t} is outside 1..={m}")));
            }
            out.push(t - 1);
        }
        zero_based.push(out);
    }
    Allocation::from_bundles(m, &zero_based).map_err(|e| field_err(field, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationFile {
    format_version: u32,
    agents: usize,
    items: usize,
    bundles: Vec<Vec<usize>>,
}

pub fn allocation_to_json(alloc: &Allocation) -> String {
    to_json(&AllocationFile {
        format_version: FORMAT_VERSION,
        agents: alloc.num_agents(),
        items: alloc.num_items(),
        bundles: one_based_bundles(alloc),
    })
}

pub fn parse_allocation(text: &str) -> Result<Allocation, FormatError> {
    let file: AllocationFile = from_json(text)?;
    check_version(file.format_version)?;
    bundles_in(&file.bundles, "bundles", file.agents, file.items)
}

/// Output of a solver: the allocation, an optional reallocation certificate
/// and optional Pareto weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub algorithm: String,
    pub base: Allocation,
    pub certificate: Option<EfrCertificate>,
    pub weights: Option<WeightVector>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    format_version: u32,
    algorithm: String,
    agents: usize,
    items: usize,
    base: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    realloc_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witnesses: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Number>>,
}

pub fn solution_to_json(sol: &Solution) -> String {
    to_json(&SolutionFile {
        format_version: FORMAT_VERSION,
        algorithm: sol.algorithm.clone(),
        agents: sol.base.num_agents(),
        items: sol.base.num_items(),
        base: one_based_bundles(&sol.base),
        realloc_set: sol.certificate.as_ref().map(|c| c.realloc_set.iter().map(|t| t + 1).collect()),
        witnesses: sol.certificate.as_ref().map(|c| c.witnesses.iter().map(one_based_bundles).collect()),
        weights: sol.weights.as_ref().map(|w| numbers(w.weights())),
    })
}

pub fn parse_solution(text: &str) -> Result<Solution, FormatError> {
    let file: SolutionFile = from_json(text)?;
    check_version(file.format_version)?;
    let (n, m) = (file.agents, file.items);
    let base = bundles_in(&file.base, "base", n, m)?;
    let certificate = match (file.realloc_set, file.witnesses) {
        (None, None) => None,
        (Some(set), Some(ws)) => {
            let mut realloc_set = std::collections::BTreeSet::new();
            for (k, &t) in set.iter().enumerate() {
                if t == 0 || t > m {
                    return Err(field_err(format!("realloc_set[{k}]"), format!("item {t} is outside 1..={m}")));
                }
                realloc_set.insert(t - 1);
            }
            let witnesses = ws
                .iter()
                .enumerate()
                .map(|(i, w)| bundles_in(w, &format!("witnesses[{i}]"), n, m))
                .collect::<Result<_, _>>()?;
            Some(EfrCertificate { base: base.clone(), realloc_set, witnesses })
        }
        _ => return Err(field_err("witnesses", "realloc_set and witnesses must appear together")),
    };
    let weights = match file.weights {
        None => None,
        Some(raw) => {
            let w = raw
                .iter()
                .enumerate()
                .map(|(i, v)| v.to_rational(&format!("weights[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Some(WeightVector::new(w).map_err(|e| field_err("weights", e.to_string()))?)
        }
    };
    Ok(Solution { algorithm: file.algorithm, base, certificate, weights })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    lambda_lb: Number,
    big_lambda: Number,
    omega_lb: Number,
    eta: Number,
    epsilon: Number,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbedFile {
    format_version: u32,
    agents: usize,
    items: usize,
    values: Vec<Vec<Number>>,
    params: ParamsFile,
    eps: Vec<Vec<Number>>,
    perturbed_values: Vec<Vec<Number>>,
}

pub fn perturbed_to_json(pert: &PerturbedInstance) -> String {
    let p = pert.params();
    let (n, m) = (pert.num_agents(), pert.num_items());
    to_json(&PerturbedFile {
        format_version: FORMAT_VERSION,
        agents: n,
        items: m,
        values: matrix(pert.base().rows()),
        params: ParamsFile {
            lambda_lb: (&p.lambda_lb).into(),
            big_lambda: (&p.big_lambda).into(),
            omega_lb: (&p.omega_lb).into(),
            eta: (&p.eta).into(),
            epsilon: (&p.epsilon).into(),
        },
        eps: matrix(pert.eps()),
        perturbed_values: matrix(pert.values()),
    })
}

/// Reads a perturbed instance back; the stored perturbed values must agree
/// with `values - eps`.
pub fn parse_perturbed(text: &str) -> Result<PerturbedInstance, FormatError> {
    let file: PerturbedFile = from_json(text)?;
    check_version(file.format_version)?;
    let (n, m) = (file.agents, file.items);
    let values = read_matrix(&file.values, "values", n, m)?;
    let base = Instance::new(n, m, values).map_err(|e| field_err("values", e.to_string()))?;
    let p = &file.params;
    let params = PerturbParams {
        lambda_lb: p.lambda_lb.to_rational("params.lambda_lb")?,
        big_lambda: p.big_lambda.to_rational("params.big_lambda")?,
        omega_lb: p.omega_lb.to_rational("params.omega_lb")?,
        eta: p.eta.to_rational("params.eta")?,
        epsilon: p.epsilon.to_rational("params.epsilon")?,
    };
    let eps = read_matrix(&file.eps, "eps", n, m)?;
    let stored = read_matrix(&file.perturbed_values, "perturbed_values", n, m)?;
    let pert = PerturbedInstance::new(base, eps, params).map_err(|e| field_err("eps", e.to_string()))?;
    if pert.values() != stored.as_slice() {
        return Err(field_err("perturbed_values", "does not equal values minus eps"));
    }
    Ok(pert)
}
