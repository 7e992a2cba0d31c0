//! JSON and CSV encodings for multisets, distributions, grids, channels, EM
//! states and succession requests.
//!
//! A distribution carries a `"mode"` field. Rational entries are
//! `{"point":[..],"num":int,"den":int}` with arbitrarily large integers;
//! float entries are `{"point":[..],"p":float}`. Entries always appear in
//! point order, so equal values encode to identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value};

use crate::binomials::{Coin, GridDist, Limits};
use crate::channels::Channel;
use crate::em::{EMRecord, EMState, EMTrace};
use crate::error::{Error, Result};
use crate::kernel::{format_rational, Dist, Mode, Multiset, Point, Rational, Scalar};
use crate::succession::{
    beta_succession_mean, binomial_poisson_mean, bivbin_dirichlet_mean,
    bivbin_dirichlet_mean_oracle, bivbin_poisson_mean, dirichlet_succession_mean, BetaParams,
    DirichletParams,
};

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| invalid(format!("missing field {key:?}")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| invalid(format!("{what} must be an array")))
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| invalid(format!("{what} must be a non-negative integer")))
}

fn parse_point(v: &Value) -> Result<Point> {
    let coords = as_array(v, "point")?
        .iter()
        .map(|c| {
            c.as_i64()
                .ok_or_else(|| invalid("point coordinates must be integers"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Point(coords))
}

fn point_json(p: &Point) -> Value {
    json!(p.coords())
}

fn big_int_json(n: &BigInt) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("integers are valid JSON numbers"))
}

fn parse_big_int(v: &Value, what: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) => BigInt::from_str(&n.to_string())
            .map_err(|_| invalid(format!("{what} must be an integer"))),
        _ => Err(invalid(format!("{what} must be an integer"))),
    }
}

/// Scalars with a JSON entry encoding.
pub trait JsonScalar: Scalar {
    fn entry_fields(&self, entry: &mut Map<String, Value>);
    fn parse_entry(entry: &Value) -> Result<Self>;
}

impl JsonScalar for Rational {
    fn entry_fields(&self, entry: &mut Map<String, Value>) {
        entry.insert("num".into(), big_int_json(self.numer()));
        entry.insert("den".into(), big_int_json(self.denom()));
    }

    fn parse_entry(entry: &Value) -> Result<Self> {
        let num = parse_big_int(field(entry, "num")?, "num")?;
        let den = parse_big_int(field(entry, "den")?, "den")?;
        if den == BigInt::from(0) {
            return Err(invalid("zero denominator"));
        }
        Ok(Rational::new(num, den))
    }
}

impl JsonScalar for f64 {
    fn entry_fields(&self, entry: &mut Map<String, Value>) {
        entry.insert("p".into(), json!(self));
    }

    fn parse_entry(entry: &Value) -> Result<Self> {
        let p = field(entry, "p")?
            .as_f64()
            .ok_or_else(|| invalid("p must be a number"))?;
        if !p.is_finite() {
            return Err(invalid("p must be finite"));
        }
        Ok(p)
    }
}

pub fn multiset_to_json(m: &Multiset<Point>) -> Value {
    let entries: Vec<Value> = m
        .iter()
        .map(|(p, n)| json!({"point": point_json(p), "mult": n}))
        .collect();
    json!({ "entries": entries })
}

pub fn multiset_from_json(v: &Value) -> Result<Multiset<Point>> {
    let mut m = Multiset::empty();
    for e in as_array(field(v, "entries")?, "entries")? {
        m.insert(
            parse_point(field(e, "point")?)?,
            as_u64(field(e, "mult")?, "mult")?,
        );
    }
    Ok(m)
}

fn dist_entries<S: JsonScalar>(d: &Dist<Point, S>) -> Vec<Value> {
    d.iter()
        .map(|(p, s)| {
            let mut entry = Map::new();
            entry.insert("point".into(), point_json(p));
            s.entry_fields(&mut entry);
            Value::Object(entry)
        })
        .collect()
}

pub fn dist_to_json<S: JsonScalar>(d: &Dist<Point, S>) -> Value {
    json!({ "mode": S::MODE.as_str(), "entries": dist_entries(d) })
}

/// A distribution read from a file, in whichever mode the file declares.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyDist {
    Rational(Dist<Point, Rational>),
    Float(Dist<Point, f64>),
}

impl AnyDist {
    pub fn mode(&self) -> Mode {
        match self {
            AnyDist::Rational(_) => Mode::Rational,
            AnyDist::Float(_) => Mode::Float,
        }
    }

    pub fn to_float(&self) -> Dist<Point, f64> {
        match self {
            AnyDist::Rational(d) => d.to_float(),
            AnyDist::Float(d) => d.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyDist::Rational(d) => dist_to_json(d),
            AnyDist::Float(d) => dist_to_json(d),
        }
    }
}

fn parse_typed<S: JsonScalar>(v: &Value) -> Result<Dist<Point, S>> {
    let pairs = as_array(field(v, "entries")?, "entries")?
        .iter()
        .map(|e| Ok((parse_point(field(e, "point")?)?, S::parse_entry(e)?)))
        .collect::<Result<Vec<_>>>()?;
    Dist::new(pairs)
}

pub fn dist_from_json(v: &Value) -> Result<AnyDist> {
    match field(v, "mode")?.as_str() {
        Some("rational") => parse_typed(v).map(AnyDist::Rational),
        Some("float") => parse_typed(v).map(AnyDist::Float),
        other => Err(invalid(format!("unknown mode {other:?}"))),
    }
}

/// Reads a distribution, requiring the mode of `S`.
pub fn typed_dist_from_json<S: JsonScalar>(v: &Value) -> Result<Dist<Point, S>> {
    match field(v, "mode")?.as_str() {
        Some(m) if m == S::MODE.as_str() => parse_typed(v),
        other => Err(invalid(format!(
            "expected mode {:?}, found {other:?}",
            S::MODE.as_str()
        ))),
    }
}

pub fn coin_to_json<S: JsonScalar>(c: &Coin<S>) -> Value {
    dist_to_json(c.dist())
}

pub fn grid_to_json<S: JsonScalar>(g: &GridDist<S>) -> Value {
    json!({
        "mode": S::MODE.as_str(),
        "K": g.k(),
        "N": g.dim(),
        "entries": dist_entries(g.dist()),
    })
}

/// Reads a grid file. Returns the distribution together with `K` and `N`
/// when the file declares them.
pub fn grid_from_json(v: &Value) -> Result<(AnyDist, Option<u64>, Option<usize>)> {
    let d = dist_from_json(v)?;
    let k = v.get("K").map(|k| as_u64(k, "K")).transpose()?;
    let n = v
        .get("N")
        .map(|n| as_u64(n, "N").map(|n| n as usize))
        .transpose()?;
    Ok((d, k, n))
}

/// Rows are `n1 = 0..=K`, columns `n2 = 0..=K`; cells are probabilities as
/// floats.
pub fn grid_to_csv<S: Scalar>(g: &GridDist<S>) -> Result<String> {
    if g.dim() != 2 {
        return Err(Error::WrongSpace(format!(
            "CSV export needs N = 2, got {}",
            g.dim()
        )));
    }
    let k = g.k() as i64;
    let mut out = String::from("n1");
    for n2 in 0..=k {
        write!(out, ",{n2}").unwrap();
    }
    out.push('\n');
    for n1 in 0..=k {
        write!(out, "{n1}").unwrap();
        for n2 in 0..=k {
            write!(out, ",{}", g.prob(&[n1, n2]).to_f64()).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn channel_to_json<S: JsonScalar>(c: &Channel<Point, Point, S>) -> Value {
    let domain: Vec<Value> = c.domain().map(point_json).collect();
    let kernel: Vec<Value> = c
        .iter()
        .map(|(x, d)| json!({"point": point_json(x), "dist": dist_to_json(d)}))
        .collect();
    json!({ "domain": domain, "kernel": kernel })
}

pub fn channel_from_json<S: JsonScalar>(v: &Value) -> Result<Channel<Point, Point, S>> {
    let rows = as_array(field(v, "kernel")?, "kernel")?
        .iter()
        .map(|row| {
            Ok((
                parse_point(field(row, "point")?)?,
                typed_dist_from_json(field(row, "dist")?)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Channel::new(rows))
}

pub fn em_state_to_json(s: &EMState) -> Value {
    let coins: Vec<Value> = s.coins().iter().map(coin_to_json).collect();
    json!({
        "K": s.k(),
        "classes": s.classes(),
        "mixture": dist_to_json(s.mixture()),
        "coins": coins,
    })
}

pub fn em_state_from_json(v: &Value) -> Result<EMState> {
    let k = as_u64(field(v, "K")?, "K")?;
    let mixture = typed_dist_from_json(field(v, "mixture")?)?;
    let coins = as_array(field(v, "coins")?, "coins")?
        .iter()
        .map(|c| Coin::new(typed_dist_from_json(c)?))
        .collect::<Result<Vec<_>>>()?;
    EMState::new(k, mixture, coins)
}

pub fn em_trace_to_json(t: &EMTrace) -> Value {
    let records: Vec<Value> = t
        .records
        .iter()
        .map(|r| json!({"iteration": r.iteration, "kl": r.kl, "state": em_state_to_json(&r.state)}))
        .collect();
    json!({ "records": records })
}

pub fn em_trace_from_json(v: &Value) -> Result<EMTrace> {
    let records = as_array(field(v, "records")?, "records")?
        .iter()
        .map(|r| {
            Ok(EMRecord {
                iteration: as_u64(field(r, "iteration")?, "iteration")? as usize,
                kl: field(r, "kl")?
                    .as_f64()
                    .ok_or_else(|| invalid("kl must be a number"))?,
                state: em_state_from_json(field(r, "state")?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        return Err(invalid("empty trace"));
    }
    Ok(EMTrace { records })
}

pub fn em_trace_to_csv(t: &EMTrace) -> String {
    let mut out = String::from("iteration,kl\n");
    for r in &t.records {
        writeln!(out, "{},{}", r.iteration, r.kl).unwrap();
    }
    out
}

/// Compact JSON with a trailing newline, as written to files.
pub fn to_line(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))
}

/// A succession question, tagged by `"rule"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SuccessionRequest {
    Beta {
        alpha: u64,
        beta: u64,
        #[serde(rename = "K")]
        k: u64,
        n: u64,
    },
    Dirichlet {
        psi: Value,
        phi: Value,
    },
    BivbinDirichlet {
        psi: Value,
        #[serde(rename = "K")]
        k: u64,
        n1: u64,
        n2: u64,
    },
    PoissonBinomial {
        r: f64,
        lambda: f64,
        n: u64,
    },
    PoissonBivbin {
        coin: Value,
        lambda: f64,
        n1: u64,
        n2: u64,
    },
}

impl SuccessionRequest {
    pub fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone())
            .map_err(|e| invalid(format!("bad succession request: {e}")))
    }

    /// `{"mean": …}`; exact means are rendered as `"num/den"` strings and
    /// exact distributions in the rational Dist encoding. The bivariate
    /// Dirichlet rule also reports the weighted posterior mean as
    /// `"oracle"` and whether the two agree.
    pub fn evaluate(&self) -> Result<Value> {
        match self {
            SuccessionRequest::Beta { alpha, beta, k, n } => {
                let m = beta_succession_mean(BetaParams::new(*alpha, *beta)?, *k, *n)?;
                Ok(json!({ "mean": format_rational(&m) }))
            }
            SuccessionRequest::Dirichlet { psi, phi } => {
                let d = DirichletParams::from_psi(multiset_from_json(psi)?)?;
                let m = dirichlet_succession_mean(&d, &multiset_from_json(phi)?)?;
                Ok(json!({ "mean": dist_to_json(&m) }))
            }
            SuccessionRequest::BivbinDirichlet { psi, k, n1, n2 } => {
                let d = DirichletParams::new(multiset_from_json(psi)?, Point::all_bits(2))?;
                let mean = bivbin_dirichlet_mean(&d, *k, *n1, *n2)?;
                let oracle = bivbin_dirichlet_mean_oracle(&d, *k, *n1, *n2)?;
                Ok(json!({
                    "mean": dist_to_json(&mean),
                    "oracle": dist_to_json(&oracle),
                    "agrees": mean == oracle,
                }))
            }
            SuccessionRequest::PoissonBinomial { r, lambda, n } => {
                Ok(json!({ "mean": binomial_poisson_mean(*r, *lambda, *n)? }))
            }
            SuccessionRequest::PoissonBivbin {
                coin,
                lambda,
                n1,
                n2,
            } => {
                let coin = Coin::with_max_dim(
                    dist_from_json(coin)?.to_float(),
                    Limits::default().max_dim,
                )?;
                Ok(json!({ "mean": bivbin_poisson_mean(&coin, *lambda, *n1, *n2)? }))
            }
        }
    }
}
