//! Vertex functions given on the command line: the constant `one`, an
//! arithmetic expression (evalexpr syntax), or `@path` to a CSV table with
//! columns `vertex,value`.
//!
//! Expression variables: lattice `x1..xN`, `r2 = |x|²`, `r = |x|`;
//! trees `n` (the level); graph files `d` (distance to the base point) and
//! `mu` (the vertex measure). Every family also has `d`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _};
use evalexpr::{Context, EvalexprError, EvalexprResult, Node, Value};
use liouville_core::builders::LatticePoint;
use liouville_core::graph::{TableFunction, VertexFunction};

pub enum FunctionSpec {
    One,
    Expr(Arc<Node>),
    Table(BTreeMap<String, f64>),
}

impl FunctionSpec {
    /// `allowed` lists the variables the family provides.
    pub fn parse(text: &str, allowed: &[String]) -> anyhow::Result<Self> {
        let text = text.trim();
        if text == "one" {
            return Ok(Self::One);
        }
        if let Some(path) = text.strip_prefix('@') {
            return read_table(Path::new(path)).map(Self::Table);
        }
        let node = evalexpr::build_operator_tree(text).map_err(|e| anyhow!("expression {text:?}: {e}"))?;
        let unknown: Vec<&str> = node
            .iter_variable_identifiers()
            .filter(|v| !allowed.iter().any(|a| a == v))
            .collect();
        if !unknown.is_empty() {
            bail!("expression {text:?} uses unknown variables {unknown:?}; available: {allowed:?}");
        }
        Ok(Self::Expr(Arc::new(node)))
    }

    /// Table form with vertices parsed by `V::from_str`.
    pub fn table<V>(&self) -> anyhow::Result<Option<TableFunction<V>>>
    where
        V: FromStr + Ord + Clone,
        V::Err: std::fmt::Display,
    {
        let Self::Table(rows) = self else { return Ok(None) };
        let parsed = rows
            .iter()
            .map(|(k, v)| Ok((k.parse::<V>().map_err(|e| anyhow!("table vertex {k:?}: {e}"))?, *v)))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Some(TableFunction::partial(parsed)))
    }
}

fn read_table(path: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening table {}", path.display()))?;
    let mut rows = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{} row {}", path.display(), i + 2))?;
        let (Some(k), Some(v)) = (rec.get(0), rec.get(1)) else {
            bail!("{} row {}: need vertex,value", path.display(), i + 2);
        };
        let v: f64 = v.trim().parse().with_context(|| format!("{} row {}", path.display(), i + 2))?;
        rows.insert(k.trim().to_string(), v);
    }
    Ok(rows)
}

/// Variable bindings for one evaluation.
struct Bindings<'a> {
    names: &'a [String],
    values: Vec<Value>,
}

impl Context for Bindings<'_> {
    fn get_value(&self, identifier: &str) -> Option<&Value> {
        self.names.iter().position(|n| n == identifier).map(|i| &self.values[i])
    }

    fn call_function(&self, identifier: &str, _argument: &Value) -> EvalexprResult<Value> {
        Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string()))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<()> {
        Err(EvalexprError::BuiltinFunctionsCannotBeDisabled)
    }
}

fn evaluate(node: &Node, names: &[String], values: &[f64]) -> Option<f64> {
    let ctx = Bindings {
        names,
        values: values.iter().map(|&v| Value::Float(v)).collect(),
    };
    node.eval_number_with_context(&ctx).ok()
}

pub fn lattice_variables(dim: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    names.extend(["r2", "r", "d"].map(String::from));
    names
}

pub fn level_variables() -> Vec<String> {
    vec!["n".into(), "d".into()]
}

pub fn file_variables() -> Vec<String> {
    vec!["d".into(), "mu".into()]
}

/// Expression over lattice coordinates; `d` is the distance to `base`.
pub struct LatticeExpr {
    pub node: Arc<Node>,
    pub names: Vec<String>,
    pub base: LatticePoint,
}

impl VertexFunction<LatticePoint> for LatticeExpr {
    fn value(&self, x: &LatticePoint) -> Option<f64> {
        let mut vals: Vec<f64> = x.coords().iter().map(|&c| c as f64).collect();
        let r2 = x.norm_squared() as f64;
        let d2: i64 = x
            .coords()
            .iter()
            .zip(self.base.coords())
            .map(|(a, b)| ((a - b) as i64).pow(2))
            .sum();
        vals.extend([r2, r2.sqrt(), (d2 as f64).sqrt()]);
        evaluate(&self.node, &self.names, &vals)
    }
}

/// Level-indexed expression for trees; failures evaluate to NaN, which the
/// positivity checks downstream reject.
pub fn level_fn(node: Arc<Node>) -> impl Fn(usize) -> f64 + Sync {
    let names = level_variables();
    move |n| evaluate(&node, &names, &[n as f64, n as f64]).unwrap_or(f64::NAN)
}

/// Expression over a loaded graph, with `d` and `mu` supplied per vertex.
pub struct FileExpr<D, M> {
    pub node: Arc<Node>,
    pub distance: D,
    pub measure: M,
}

impl<D, M> VertexFunction<String> for FileExpr<D, M>
where
    D: Fn(&String) -> f64 + Sync,
    M: Fn(&String) -> f64 + Sync,
{
    fn value(&self, x: &String) -> Option<f64> {
        evaluate(&self.node, &file_variables(), &[(self.distance)(x), (self.measure)(x)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_expression() {
        let names = lattice_variables(2);
        let FunctionSpec::Expr(node) = FunctionSpec::parse("1 + r2 / 2 + x1", &names).unwrap() else {
            panic!()
        };
        let f = LatticeExpr {
            node,
            names,
            base: LatticePoint::origin(2),
        };
        assert_eq!(f.value(&LatticePoint::new(&[2, 1])), Some(1.0 + 2.5 + 2.0));
    }

    #[test]
    fn builtin_functions_work() {
        let FunctionSpec::Expr(node) = FunctionSpec::parse("math::exp(-n)", &level_variables()).unwrap() else {
            panic!()
        };
        assert!((level_fn(node)(2) - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn unknown_variables_are_reported() {
        let err = FunctionSpec::parse("y + 1", &level_variables()).err().unwrap().to_string();
        assert!(err.contains("\"y\""), "{err}");
    }
}
