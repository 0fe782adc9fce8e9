use std::fmt::Display;
use std::io::Read;

use serde::Serialize;
use serde_json::json;
use wick_core::perturbation::{
    extract_self_energy, greens as derive_greens, GreensRequest, InteractionSpec, Particles,
};
use wick_core::{
    build_matrix, evaluate_pair_product, laplace_expand, oracle_string_expectation, MatrixScalar, PairProduct,
    PointLabel, Propagator, PropagatorProvider, Ring, Sign, Statistics, SymbolicPropagator, Value,
    DEFAULT_ORACLE_LIMIT,
};

use crate::problem::{Problem, ProblemFile};
use crate::{Cli, CliError, Format};

/// Reads the problem from `--input`, or stdin when absent.
pub fn load(cli: &Cli) -> Result<Problem, CliError> {
    match cli.input() {
        Some(path) => ProblemFile::read(path)?.resolve(path.parent()),
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).map_err(|e| CliError::Io(e.to_string()))?;
            ProblemFile::parse(&text)?.resolve(None)
        }
    }
}

fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Symbolic(s) => serde_json::to_value(s),
        Value::Exact(x) => serde_json::to_value(x),
    }
    .expect("values always serialize")
}

fn signed(sign: Sign, v: Value) -> Value {
    match (sign, v) {
        (Sign::Plus, v) => v,
        (Sign::Minus, Value::Symbolic(s)) => Value::Symbolic(s.neg()),
        (Sign::Minus, Value::Exact(x)) => Value::Exact(x.neg()),
    }
}

fn to_text(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("json values always serialize")
}

pub fn evaluate(problem: &Problem, format: Format) -> Result<String, CliError> {
    let value = signed(problem.sign, evaluate_pair_product(&problem.fermi, &problem.bose, &problem.provider)?);
    Ok(match format {
        Format::Json => to_text(&value_json(&value)),
        Format::Pretty => value.to_string(),
    })
}

/// Adds one to a single contraction, leaving every other entry untouched.
struct Faulty<'a, P> {
    inner: &'a P,
    statistics: Statistics,
    left: PointLabel,
    right: PointLabel,
}

impl<P: Propagator> Propagator for Faulty<'_, P> {
    type Value = P::Value;

    fn contraction(
        &self,
        statistics: Statistics,
        left: &PointLabel,
        right: &PointLabel,
    ) -> wick_core::Result<P::Value> {
        let v = self.inner.contraction(statistics, left, right)?;
        if statistics == self.statistics && *left == self.left && *right == self.right {
            Ok(v.add(&P::Value::one()))
        } else {
            Ok(v)
        }
    }
}

fn oracle_side<P: Propagator>(
    problem: &Problem,
    provider: &P,
    limit: usize,
    fault: bool,
) -> wick_core::Result<P::Value> {
    let target = [&problem.fermi, &problem.bose].into_iter().find(|p| !p.is_empty());
    match (fault, target) {
        (true, Some(p)) => {
            let faulty = Faulty {
                inner: provider,
                statistics: p.statistics,
                left: p.pairs[0].0.clone(),
                right: p.pairs[0].1.clone(),
            };
            oracle_string_expectation(&problem.string, &faulty, limit)
        }
        _ => oracle_string_expectation(&problem.string, provider, limit),
    }
}

pub fn oracle_check(problem: &Problem, limit: Option<usize>, fault: bool, format: Format) -> Result<String, CliError> {
    let limit = limit.or(problem.options.oracle_limit).unwrap_or(DEFAULT_ORACLE_LIMIT);
    let n = problem.fermi.len().max(problem.bose.len());
    if n > limit {
        return Err(wick_core::WickError::OracleLimit { n, limit }.into());
    }
    let theorem = signed(problem.sign, evaluate_pair_product(&problem.fermi, &problem.bose, &problem.provider)?);
    let oracle = match &problem.provider {
        PropagatorProvider::Symbolic => Value::Symbolic(oracle_side(problem, &SymbolicPropagator, limit, fault)?),
        PropagatorProvider::Table(t) => Value::Exact(oracle_side(problem, t, limit, fault)?),
    };
    let verdict = if theorem == oracle { "EQUAL" } else { "UNEQUAL" };
    let report = match format {
        Format::Json => to_text(&json!({
            "n_fermi": problem.fermi.len(),
            "n_bose": problem.bose.len(),
            "theorem": value_json(&theorem),
            "oracle": value_json(&oracle),
            "verdict": verdict,
        })),
        Format::Pretty => format!("{verdict}\ntheorem: {theorem}\noracle:  {oracle}"),
    };
    if theorem == oracle {
        Ok(report)
    } else {
        Err(CliError::Mismatch(report))
    }
}

fn laplace_with<P>(p: &PairProduct, provider: &P, rows: &[usize], format: Format) -> Result<String, CliError>
where
    P: Propagator,
    P::Value: MatrixScalar + Serialize + Display,
{
    let matrix = build_matrix(p, provider)?;
    let n = matrix.n();
    let zero_based = rows
        .iter()
        .map(|&r| {
            r.checked_sub(1)
                .ok_or_else(|| CliError::Wick(wick_core::WickError::InvalidRowSet("rows are 1-based".into())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expansion = laplace_expand(&matrix, &zero_based)?;
    let determinant = P::Value::average(&matrix);
    let verdict = if expansion.total == determinant { "EQUAL" } else { "UNEQUAL" };
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let text = match format {
        Format::Json => {
            let terms: Vec<serde_json::Value> = expansion
                .terms
                .iter()
                .map(|t| {
                    json!({
                        "rows": one_based(&t.row_set),
                        "cols": one_based(&t.col_set),
                        "sign": t.sign.value(),
                        "minor": t.minor_value,
                        "complement": t.complement_value,
                    })
                })
                .collect();
            to_text(&json!({
                "n": n,
                "rows": rows,
                "term_count": terms.len(),
                "terms": terms,
                "total": expansion.total,
                "determinant": determinant,
                "verdict": verdict,
            }))
        }
        Format::Pretty => {
            let mut out = format!("n = {n}, rows {rows:?}: {} terms\n", expansion.terms.len());
            for t in &expansion.terms {
                let s = if t.sign == Sign::Plus { '+' } else { '-' };
                out.push_str(&format!(
                    "{s} cols {:?}: [{}] * [{}]\n",
                    one_based(&t.col_set),
                    t.minor_value,
                    t.complement_value
                ));
            }
            out.push_str(&format!("total: {}\n{verdict}", expansion.total));
            out
        }
    };
    if verdict == "EQUAL" {
        Ok(text)
    } else {
        Err(CliError::Mismatch(text))
    }
}

pub fn laplace(problem: &Problem, rows: Option<&[usize]>, format: Format) -> Result<String, CliError> {
    let rows = rows
        .map(<[usize]>::to_vec)
        .or_else(|| problem.options.rows.clone())
        .ok_or_else(|| CliError::Schema("laplace needs --rows".into()))?;
    let p = match (problem.fermi.is_empty(), problem.bose.is_empty()) {
        (false, true) => &problem.fermi,
        (true, false) => &problem.bose,
        _ => return Err(CliError::Schema("laplace needs operators of exactly one statistics".into())),
    };
    match &problem.provider {
        PropagatorProvider::Symbolic => laplace_with(p, &SymbolicPropagator, &rows, format),
        PropagatorProvider::Table(t) => laplace_with(p, t, &rows, format),
    }
}

pub fn greens(
    particles: u8,
    order: u32,
    self_energy: bool,
    labels: Option<&[String]>,
    format: Format,
) -> Result<String, CliError> {
    let particles = match particles {
        1 => Particles::One,
        2 => Particles::Two,
        k => return Err(CliError::Schema(format!("--particles must be 1 or 2, got {k}"))),
    };
    let request = match labels {
        Some(labels) => {
            let points = labels.iter().map(|l| PointLabel::new(l.trim())).collect::<wick_core::Result<Vec<_>>>()?;
            GreensRequest::with_points(particles, order, points)
        }
        None => GreensRequest::new(particles, order),
    };
    let result = derive_greens(&request, &InteractionSpec::default())?;
    let join = |v: &[PointLabel]| v.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(",");
    let measure = |v: &[PointLabel]| {
        if v.is_empty() {
            String::new()
        } else {
            format!("\nintegrated over: {}", v.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(" "))
        }
    };
    if self_energy {
        let sigma = extract_self_energy(&result)?;
        return Ok(match format {
            Format::Json => sigma.to_json(),
            Format::Pretty => {
                format!("Σ({}) = {}{}", join(&sigma.arguments), sigma.expression, measure(&sigma.integration_vars))
            }
        });
    }
    Ok(match format {
        Format::Json => result.to_json(),
        Format::Pretty => {
            format!("G({}) = {}{}", join(&result.external_points), result.expression, measure(&result.integration_vars))
        }
    })
}
