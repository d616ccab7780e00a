//! Scenario files: a market, an acceptance set and optional queries as JSON.
//!
//! Numbers are JSON decimals; infinities are spelled `"inf"` and `"-inf"`.
//! Every schema violation is collected with its JSON pointer before loading
//! fails.

use crate::acceptance::{AcceptanceSet, Utility};
use crate::error::{Error, Result, SchemaIssue};
use crate::expr::{parse, Expr};
use crate::model::{ConstraintSet, Curve, Market, PricingRule, ProbabilitySpace};
use crate::oracle::GridSpec;
use serde_json::{Map, Value};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Price { payoff: Vec<f64> },
    Mcp { payoff: Vec<f64> },
    GoodDeal,
    Deflator { d: Option<Vec<f64>> },
    DualityGap { payoff: Vec<f64> },
    FtapCheck,
    OracleCheck { payoff: Vec<f64>, grid: Option<GridSpec> },
}

impl Query {
    pub fn command(&self) -> &'static str {
        match self {
            Query::Price { .. } => "price",
            Query::Mcp { .. } => "mcp",
            Query::GoodDeal => "gooddeal",
            Query::Deflator { .. } => "deflator",
            Query::DualityGap { .. } => "duality-gap",
            Query::FtapCheck => "ftap-check",
            Query::OracleCheck { .. } => "oracle-check",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: Option<String>,
    pub description: Option<String>,
    pub market: Market,
    pub acceptance: AcceptanceSet,
    pub queries: Vec<Query>,
    /// Expression text as written, kept for re-serialization.
    pricing_source: Option<String>,
    acceptance_sources: Vec<String>,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    from_str(&text)
}

pub fn from_str(text: &str) -> Result<Scenario> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::Schema(vec![SchemaIssue { pointer: String::new(), message: format!("not valid JSON: {e}") }])
    })?;
    from_value(&value)
}

pub fn from_value(v: &Value) -> Result<Scenario> {
    let mut r = Reader::default();
    let scenario = r.scenario(v);
    match scenario {
        Some(s) if r.issues.is_empty() => Ok(s),
        _ => Err(Error::Schema(r.issues)),
    }
}

#[derive(Default)]
struct Reader {
    issues: Vec<SchemaIssue>,
}

fn child(ptr: &str, key: impl std::fmt::Display) -> String {
    let key = key.to_string().replace('~', "~0").replace('/', "~1");
    format!("{ptr}/{key}")
}

impl Reader {
    fn issue(&mut self, ptr: &str, msg: impl Into<String>) {
        self.issues.push(SchemaIssue { pointer: ptr.to_string(), message: msg.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, ptr: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.issue(ptr, "expected an object");
            return None;
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.issue(&child(ptr, key), "unknown field");
            }
        }
        Some(obj)
    }

    fn field<'a>(&mut self, obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Option<&'a Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.issue(&child(ptr, key), "missing field");
        }
        v
    }

    fn number(&mut self, v: &Value, ptr: &str) -> Option<f64> {
        let out = match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => match s.as_str() {
                "inf" | "+inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                _ => None,
            },
            _ => None,
        };
        if out.is_none() {
            self.issue(ptr, "expected a number, \"inf\" or \"-inf\"");
        }
        out
    }

    fn finite(&mut self, v: &Value, ptr: &str) -> Option<f64> {
        let x = self.number(v, ptr)?;
        if !x.is_finite() {
            self.issue(ptr, "must be finite");
            return None;
        }
        Some(x)
    }

    fn list<'a>(&mut self, v: &'a Value, ptr: &str) -> Option<&'a Vec<Value>> {
        let out = v.as_array();
        if out.is_none() {
            self.issue(ptr, "expected an array");
        }
        out
    }

    fn vector(&mut self, v: &Value, ptr: &str, len: Option<usize>, finite: bool) -> Option<Vec<f64>> {
        let items = self.list(v, ptr)?;
        if let Some(n) = len {
            if items.len() != n {
                self.issue(ptr, format!("expected {n} entries, found {}", items.len()));
                return None;
            }
        }
        let vals: Vec<Option<f64>> = items
            .iter()
            .enumerate()
            .map(|(i, x)| if finite { self.finite(x, &child(ptr, i)) } else { self.number(x, &child(ptr, i)) })
            .collect();
        vals.into_iter().collect()
    }

    fn matrix(&mut self, v: &Value, ptr: &str, cols: Option<usize>) -> Option<Vec<Vec<f64>>> {
        let rows = self.list(v, ptr)?;
        let out: Vec<Option<Vec<f64>>> = rows.iter().enumerate().map(|(i, r)| self.vector(r, &child(ptr, i), cols, true)).collect();
        out.into_iter().collect()
    }

    fn string<'a>(&mut self, v: &'a Value, ptr: &str) -> Option<&'a str> {
        let out = v.as_str();
        if out.is_none() {
            self.issue(ptr, "expected a string");
        }
        out
    }

    fn expr(&mut self, v: &Value, ptr: &str) -> Option<(Expr, String)> {
        let text = self.string(v, ptr)?;
        match parse(text) {
            Ok(e) => Some((e, text.to_string())),
            Err(e) => {
                self.issue(ptr, e.to_string());
                None
            }
        }
    }

    fn kind<'a>(&mut self, obj: &'a Map<String, Value>, ptr: &str) -> Option<&'a str> {
        let v = self.field(obj, ptr, "type")?;
        self.string(v, &child(ptr, "type"))
    }

    fn scenario(&mut self, v: &Value) -> Option<Scenario> {
        let keys = ["name", "description", "states", "probs", "securities", "pricing", "constraints", "acceptance", "queries"];
        let root = self.object(v, "", &keys)?;
        let text = |r: &mut Self, key: &str| root.get(key).and_then(|v| r.string(v, &child("", key)).map(str::to_string));
        let name = text(self, "name");
        let description = text(self, "description");
        let n = self.field(root, "", "states").and_then(|v| match v.as_u64() {
            Some(n) if n > 0 => Some(n as usize),
            _ => {
                self.issue("/states", "expected a positive integer");
                None
            }
        });
        let probs = self.field(root, "", "probs").and_then(|v| self.vector(v, "/probs", n, true));
        let securities = self.field(root, "", "securities").and_then(|v| self.matrix(v, "/securities", n));
        let k = securities.as_ref().map(|s| s.len());
        if k == Some(0) {
            self.issue("/securities", "at least one security is required");
        }
        let pricing = self.field(root, "", "pricing").and_then(|v| self.pricing(v, k));
        let constraints = self.field(root, "", "constraints").and_then(|v| self.constraints(v, k));
        let acceptance = self.field(root, "", "acceptance").and_then(|v| self.acceptance(v, n));
        let queries = match root.get("queries") {
            Some(q) => self.queries(q, n, k),
            None => Some(Vec::new()),
        };

        let space = probs.and_then(|p| match ProbabilitySpace::new(p) {
            Ok(s) => Some(s),
            Err(e) => {
                self.issue("/probs", e.to_string());
                None
            }
        });
        let (space, securities, (rule, pricing_source), constraints, (acceptance, acceptance_sources), queries) =
            (space?, securities?, pricing?, constraints?, acceptance?, queries?);
        if !self.issues.is_empty() {
            return None;
        }
        let market = match Market::new(space, securities, rule, constraints) {
            Ok(m) => m,
            Err(e) => {
                let ptr = match e {
                    Error::RankDeficient { .. } => "/securities",
                    Error::Syntax(_) | Error::Convexity(_) => "/pricing",
                    _ => "",
                };
                self.issue(ptr, e.to_string());
                return None;
            }
        };
        if let Err(e) = acceptance.validate(market.probs()) {
            self.issue("/acceptance", e.to_string());
            return None;
        }
        Some(Scenario { name, description, market, acceptance, queries, pricing_source, acceptance_sources })
    }

    fn curves(&mut self, v: &Value, ptr: &str, k: Option<usize>) -> Option<Vec<Curve>> {
        let items = self.list(v, ptr)?;
        if let Some(k) = k {
            if items.len() != k {
                self.issue(ptr, format!("expected {k} curves, found {}", items.len()));
                return None;
            }
        }
        let out: Vec<Option<Curve>> = items
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = child(ptr, i);
                let obj = self.object(c, &p, &["knots", "slopes", "cap"])?;
                let knots = self.field(obj, &p, "knots").and_then(|v| self.vector(v, &child(&p, "knots"), None, true));
                let slopes = self.field(obj, &p, "slopes").and_then(|v| self.vector(v, &child(&p, "slopes"), None, true));
                let cap = match obj.get("cap") {
                    Some(v) => Some(Some(self.finite(v, &child(&p, "cap"))?)),
                    None => Some(None),
                };
                Some(Curve { knots: knots?, slopes: slopes?, cap: cap? })
            })
            .collect();
        out.into_iter().collect()
    }

    fn pricing(&mut self, v: &Value, k: Option<usize>) -> Option<(PricingRule, Option<String>)> {
        let ptr = "/pricing";
        let obj = self.object(v, ptr, &["type", "prices", "buy", "sell", "body"])?;
        let kind = self.kind(obj, ptr)?;
        let vec = |r: &mut Self, key: &str| r.field(obj, ptr, key).and_then(|v| r.vector(v, &child(ptr, key), k, true));
        match kind {
            "linear" => Some((PricingRule::Linear(vec(self, "prices")?), None)),
            "proportional" => {
                let (buy, sell) = (vec(self, "buy"), vec(self, "sell"));
                Some((PricingRule::Proportional { buy: buy?, sell: sell? }, None))
            }
            "convex_separable" => {
                let buy = self.field(obj, ptr, "buy").and_then(|v| self.curves(v, "/pricing/buy", k));
                let sell = self.field(obj, ptr, "sell").and_then(|v| self.curves(v, "/pricing/sell", k));
                Some((PricingRule::ConvexSeparable { buy: buy?, sell: sell? }, None))
            }
            "expr" => {
                let (e, src) = self.field(obj, ptr, "body").and_then(|v| self.expr(v, "/pricing/body"))?;
                Some((PricingRule::GeneralConvex(e), Some(src)))
            }
            other => {
                self.issue("/pricing/type", format!("unknown pricing type `{other}`"));
                None
            }
        }
    }

    fn constraints(&mut self, v: &Value, k: Option<usize>) -> Option<ConstraintSet> {
        let ptr = "/constraints";
        let obj = self.object(v, ptr, &["type", "lower", "upper", "rows"])?;
        match self.kind(obj, ptr)? {
            "none" => Some(ConstraintSet::Unconstrained),
            "long_only" => Some(ConstraintSet::LongOnly),
            "box" => {
                let lower = self.field(obj, ptr, "lower").and_then(|v| self.vector(v, "/constraints/lower", k, false));
                let upper = self.field(obj, ptr, "upper").and_then(|v| self.vector(v, "/constraints/upper", k, false));
                Some(ConstraintSet::Box { lower: lower?, upper: upper? })
            }
            "halfspaces" => {
                let rows = self.field(obj, ptr, "rows").and_then(|v| self.list(v, "/constraints/rows"))?;
                let out: Vec<Option<(Vec<f64>, f64)>> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let p = child("/constraints/rows", i);
                        let o = self.object(row, &p, &["a", "b"])?;
                        let a = self.field(o, &p, "a").and_then(|v| self.vector(v, &child(&p, "a"), k, true));
                        let b = self.field(o, &p, "b").and_then(|v| self.finite(v, &child(&p, "b")));
                        Some((a?, b?))
                    })
                    .collect();
                Some(ConstraintSet::Halfspaces(out.into_iter().collect::<Option<Vec<_>>>()?))
            }
            other => {
                self.issue("/constraints/type", format!("unknown constraint type `{other}`"));
                None
            }
        }
    }

    fn acceptance(&mut self, v: &Value, n: Option<usize>) -> Option<(AcceptanceSet, Vec<String>)> {
        let ptr = "/acceptance";
        let keys = ["type", "alpha", "event", "tests", "knots", "slopes", "floor", "benchmark", "constraints", "generators"];
        let obj = self.object(v, ptr, &keys)?;
        let kind = self.kind(obj, ptr)?;
        if obj.contains_key("generators") && !matches!(kind, "expr" | "cone") {
            self.issue("/acceptance/generators", "generators are only accepted for `expr` and `cone` sets");
        }
        let num = |r: &mut Self, key: &str| r.field(obj, ptr, key).and_then(|v| r.finite(v, &child(ptr, key)));
        let gens = |r: &mut Self| r.matrix(&obj["generators"], "/acceptance/generators", n);
        let set = match kind {
            "positive" => AcceptanceSet::PositiveCone,
            "es" => AcceptanceSet::ExpectedShortfall { alpha: num(self, "alpha")? },
            "gainloss" => AcceptanceSet::GainLoss { alpha: num(self, "alpha")? },
            "scenarios" => {
                let items = self.field(obj, ptr, "event").and_then(|v| self.list(v, "/acceptance/event"))?;
                let mut event = Vec::new();
                for (i, e) in items.iter().enumerate() {
                    match e.as_u64().map(|w| w as usize) {
                        Some(w) if n.map_or(true, |n| w < n) => event.push(w),
                        _ => self.issue(&child("/acceptance/event", i), "expected a zero-based outcome index"),
                    }
                }
                AcceptanceSet::Scenarios { event }
            }
            "testprobs" => {
                let items = self.field(obj, ptr, "tests").and_then(|v| self.list(v, "/acceptance/tests"))?;
                let tests: Vec<Option<(Vec<f64>, f64)>> = items
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let p = child("/acceptance/tests", i);
                        let o = self.object(t, &p, &["density", "floor"])?;
                        let q = self.field(o, &p, "density").and_then(|v| self.vector(v, &child(&p, "density"), n, true));
                        let f = self.field(o, &p, "floor").and_then(|v| self.finite(v, &child(&p, "floor")));
                        Some((q?, f?))
                    })
                    .collect();
                AcceptanceSet::TestProbabilities { tests: tests.into_iter().collect::<Option<Vec<_>>>()? }
            }
            "utility_pwl" => {
                let knots = self.field(obj, ptr, "knots").and_then(|v| self.vector(v, "/acceptance/knots", None, true));
                let slopes = self.field(obj, ptr, "slopes").and_then(|v| self.vector(v, "/acceptance/slopes", None, true));
                let floor = num(self, "floor");
                AcceptanceSet::UtilityPwl { utility: Utility { knots: knots?, slopes: slopes? }, floor: floor? }
            }
            "ssd" => {
                let b = self.field(obj, ptr, "benchmark").and_then(|v| self.vector(v, "/acceptance/benchmark", n, true))?;
                AcceptanceSet::Ssd { benchmark: b }
            }
            "expr" => {
                let items = self.field(obj, ptr, "constraints").and_then(|v| self.list(v, "/acceptance/constraints"))?;
                let parsed: Vec<Option<(Expr, String)>> =
                    items.iter().enumerate().map(|(i, c)| self.expr(c, &child("/acceptance/constraints", i))).collect();
                let generators = if obj.contains_key("generators") { Some(gens(self)?) } else { None };
                let (constraints, sources): (Vec<Expr>, Vec<String>) = parsed.into_iter().collect::<Option<Vec<_>>>()?.into_iter().unzip();
                return Some((AcceptanceSet::Scripted { constraints, generators }, sources));
            }
            "cone" => {
                self.field(obj, ptr, "generators")?;
                AcceptanceSet::Cone { generators: gens(self)? }
            }
            other => {
                self.issue("/acceptance/type", format!("unknown acceptance type `{other}`"));
                return None;
            }
        };
        Some((set, Vec::new()))
    }

    fn queries(&mut self, v: &Value, n: Option<usize>, k: Option<usize>) -> Option<Vec<Query>> {
        let items = self.list(v, "/queries")?;
        let out: Vec<Option<Query>> = items
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let p = child("/queries", i);
                let obj = self.object(q, &p, &["command", "payoff", "d", "grid"])?;
                let cmd = self.field(obj, &p, "command").and_then(|v| self.string(v, &child(&p, "command")))?;
                let payoff = |r: &mut Self| r.field(obj, &p, "payoff").and_then(|v| r.vector(v, &child(&p, "payoff"), n, true));
                Some(match cmd {
                    "price" => Query::Price { payoff: payoff(self)? },
                    "mcp" => Query::Mcp { payoff: payoff(self)? },
                    "gooddeal" => Query::GoodDeal,
                    "deflator" => Query::Deflator {
                        d: match obj.get("d") {
                            Some(d) => Some(self.vector(d, &child(&p, "d"), n, true)?),
                            None => None,
                        },
                    },
                    "duality-gap" => Query::DualityGap { payoff: payoff(self)? },
                    "ftap-check" => Query::FtapCheck,
                    "oracle-check" => {
                        let x = payoff(self);
                        let grid = match obj.get("grid") {
                            Some(g) => Some(self.grid(g, &child(&p, "grid"))?),
                            None => None,
                        };
                        if k.map_or(false, |k| k > crate::oracle::MAX_SECURITIES) {
                            self.issue(&p, "oracle-check needs at most 3 securities");
                        }
                        Query::OracleCheck { payoff: x?, grid }
                    }
                    other => {
                        self.issue(&child(&p, "command"), format!("unknown command `{other}`"));
                        return None;
                    }
                })
            })
            .collect();
        out.into_iter().collect()
    }

    fn grid(&mut self, v: &Value, ptr: &str) -> Option<GridSpec> {
        let obj = self.object(v, ptr, &["lower", "upper", "step"])?;
        let mut get = |key: &str| self.field(obj, ptr, key).and_then(|v| self.finite(v, &child(ptr, key)));
        let (lower, upper, step) = (get("lower"), get("upper"), get("step"));
        Some(GridSpec { lower: lower?, upper: upper?, step: step? })
    }
}

/// JSON for a possibly infinite number.
pub fn number(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(x)
    }
}

fn numbers(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| number(x)).collect())
}

fn rows(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| numbers(r)).collect())
}

fn obj(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn curve_json(c: &Curve) -> Value {
    let mut pairs = vec![("knots", numbers(&c.knots)), ("slopes", numbers(&c.slopes))];
    if let Some(cap) = c.cap {
        pairs.push(("cap", number(cap)));
    }
    obj(pairs)
}

impl Scenario {
    /// Builds a scenario from parts; expression sources are rendered from the parsed trees.
    pub fn new(market: Market, acceptance: AcceptanceSet, queries: Vec<Query>) -> Self {
        let pricing_source = match &market.rule {
            PricingRule::GeneralConvex(e) => Some(e.to_string()),
            _ => None,
        };
        let acceptance_sources = match &acceptance {
            AcceptanceSet::Scripted { constraints, .. } => constraints.iter().map(|c| c.to_string()).collect(),
            _ => Vec::new(),
        };
        Scenario { name: None, description: None, market, acceptance, queries, pricing_source, acceptance_sources }
    }

    pub fn to_value(&self) -> Value {
        let m = &self.market;
        let mut root = Map::new();
        if let Some(name) = &self.name {
            root.insert("name".into(), Value::from(name.as_str()));
        }
        if let Some(d) = &self.description {
            root.insert("description".into(), Value::from(d.as_str()));
        }
        root.insert("states".into(), Value::from(m.n_states() as u64));
        root.insert("probs".into(), numbers(m.probs()));
        root.insert("securities".into(), rows(&m.securities));
        let pricing = match &m.rule {
            PricingRule::Linear(p) => obj(vec![("type", "linear".into()), ("prices", numbers(p))]),
            PricingRule::Proportional { buy, sell } => {
                obj(vec![("type", "proportional".into()), ("buy", numbers(buy)), ("sell", numbers(sell))])
            }
            PricingRule::ConvexSeparable { buy, sell } => obj(vec![
                ("type", "convex_separable".into()),
                ("buy", Value::Array(buy.iter().map(curve_json).collect())),
                ("sell", Value::Array(sell.iter().map(curve_json).collect())),
            ]),
            PricingRule::GeneralConvex(e) => {
                let body = self.pricing_source.clone().unwrap_or_else(|| e.to_string());
                obj(vec![("type", "expr".into()), ("body", body.into())])
            }
        };
        root.insert("pricing".into(), pricing);
        let constraints = match &m.constraints {
            ConstraintSet::Unconstrained => obj(vec![("type", "none".into())]),
            ConstraintSet::LongOnly => obj(vec![("type", "long_only".into())]),
            ConstraintSet::Box { lower, upper } => {
                obj(vec![("type", "box".into()), ("lower", numbers(lower)), ("upper", numbers(upper))])
            }
            ConstraintSet::Halfspaces(hs) => obj(vec![
                ("type", "halfspaces".into()),
                ("rows", Value::Array(hs.iter().map(|(a, b)| obj(vec![("a", numbers(a)), ("b", number(*b))])).collect())),
            ]),
        };
        root.insert("constraints".into(), constraints);
        root.insert("acceptance".into(), self.acceptance_json());
        if !self.queries.is_empty() {
            root.insert("queries".into(), Value::Array(self.queries.iter().map(query_json).collect()));
        }
        Value::Object(root)
    }

    fn acceptance_json(&self) -> Value {
        match &self.acceptance {
            AcceptanceSet::PositiveCone => obj(vec![("type", "positive".into())]),
            AcceptanceSet::ExpectedShortfall { alpha } => obj(vec![("type", "es".into()), ("alpha", number(*alpha))]),
            AcceptanceSet::GainLoss { alpha } => obj(vec![("type", "gainloss".into()), ("alpha", number(*alpha))]),
            AcceptanceSet::Scenarios { event } => {
                obj(vec![("type", "scenarios".into()), ("event", Value::Array(event.iter().map(|&w| Value::from(w as u64)).collect()))])
            }
            AcceptanceSet::TestProbabilities { tests } => obj(vec![
                ("type", "testprobs".into()),
                ("tests", Value::Array(tests.iter().map(|(q, f)| obj(vec![("density", numbers(q)), ("floor", number(*f))])).collect())),
            ]),
            AcceptanceSet::UtilityPwl { utility, floor } => obj(vec![
                ("type", "utility_pwl".into()),
                ("knots", numbers(&utility.knots)),
                ("slopes", numbers(&utility.slopes)),
                ("floor", number(*floor)),
            ]),
            AcceptanceSet::Ssd { benchmark } => obj(vec![("type", "ssd".into()), ("benchmark", numbers(benchmark))]),
            AcceptanceSet::Scripted { constraints, generators } => {
                let texts: Vec<Value> = constraints
                    .iter()
                    .enumerate()
                    .map(|(i, c)| Value::from(self.acceptance_sources.get(i).cloned().unwrap_or_else(|| c.to_string())))
                    .collect();
                let mut pairs = vec![("type", "expr".into()), ("constraints", Value::Array(texts))];
                if let Some(g) = generators {
                    pairs.push(("generators", rows(g)));
                }
                obj(pairs)
            }
            AcceptanceSet::Cone { generators } => obj(vec![("type", "cone".into()), ("generators", rows(generators))]),
        }
    }
}

fn query_json(q: &Query) -> Value {
    let mut pairs = vec![("command", Value::from(q.command()))];
    match q {
        Query::Price { payoff } | Query::Mcp { payoff } | Query::DualityGap { payoff } => pairs.push(("payoff", numbers(payoff))),
        Query::Deflator { d: Some(d) } => pairs.push(("d", numbers(d))),
        Query::OracleCheck { payoff, grid } => {
            pairs.push(("payoff", numbers(payoff)));
            if let Some(g) = grid {
                pairs.push(("grid", obj(vec![("lower", number(g.lower)), ("upper", number(g.upper)), ("step", number(g.step))])));
            }
        }
        _ => {}
    }
    obj(pairs)
}

/// Structural equality with numbers compared by value and object keys
/// compared as sets.
pub fn semantically_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(u, v)| semantically_equal(u, v)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, u)| y.get(k).map_or(false, |v| semantically_equal(u, v)))
        }
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX_LINEAR: &str = r#"{
        "states": 2, "probs": [0.5, 0.5], "securities": [[1, 0], [0, 1]],
        "pricing": {"type": "expr", "body": "max(2*x1 + x2, x1 + 2*x2)"},
        "constraints": {"type": "box", "lower": ["-inf", 0], "upper": ["inf", "inf"]},
        "acceptance": {"type": "expr", "constraints": ["max(-s1, 0) - s2"]},
        "queries": [{"command": "price", "payoff": [-2, 1]}]
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let s = from_str(MAX_LINEAR).unwrap();
        assert_eq!(s.market.constraints, ConstraintSet::Box { lower: vec![f64::NEG_INFINITY, 0.0], upper: vec![f64::INFINITY; 2] });
        assert_eq!(s.queries, vec![Query::Price { payoff: vec![-2.0, 1.0] }]);
        let original: Value = serde_json::from_str(MAX_LINEAR).unwrap();
        assert!(semantically_equal(&s.to_value(), &original));
    }

    #[test]
    fn empty_input_is_a_schema_error() {
        assert!(matches!(from_str(""), Err(Error::Schema(_))));
    }

    #[test]
    fn issues_are_collected_with_pointers() {
        let text = r#"{"states": 2, "probs": [0.5, "x"], "securities": [[1, 0, 3]],
            "pricing": {"type": "linear", "prices": [1]}, "constraints": {"type": "nope"},
            "acceptance": {"type": "es"}}"#;
        let Err(Error::Schema(issues)) = from_str(text) else { panic!("expected schema error") };
        let ptrs: Vec<&str> = issues.iter().map(|i| i.pointer.as_str()).collect();
        assert_eq!(ptrs, vec!["/probs/1", "/securities/0", "/constraints/type", "/acceptance/alpha"]);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let text = MAX_LINEAR.replace("[0.5, 0.5]", "[0.5, 0.6]");
        let Err(Error::Schema(issues)) = from_str(&text) else { panic!("expected schema error") };
        assert_eq!(issues[0].pointer, "/probs");
    }
}
