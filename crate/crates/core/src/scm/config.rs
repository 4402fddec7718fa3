//! Declarative TOML form of the structural models.
//!
//! ```toml
//! variant = "relaxed"        # basic | relaxed | time_trend | additive
//! lag = 1
//! positive = true
//!
//! [y_domain]
//! values = [0.0, 1.0]
//! [l_domain]
//! values = [0.0, 1.0]
//! [initial]
//! y = 0                      # level indices
//! l = 0
//! a = 0                      # 0, 1 or "match"
//!
//! [[u]]
//! name = "typical"
//! weight = 1.0
//! l_kernel = [...]           # nested over (a, y_prev, l_prev)
//! y_kernel = [...]           # nested over (l, a, y_prev, l_prev, a_prev)
//! ```
//!
//! Kernels nest over the parents each variant conditions on, in the order
//! `l, a, y_prev, l_prev, a_prev`; the innermost array is the distribution.
//! Basic: `y_kernel[a]`. Time trend: `l_kernel[l_prev]`,
//! `y_kernel[l][a][l_prev]`.
//!
//! The additive model uses `beta`, `u_value`, `noise_sd` and
//! `noise_family` instead of domains and kernels.

use std::fmt;

use rand::RngCore;
use toml::{Table, Value};

use super::{
    AdditiveScm, DiscreteScm, ExactModel, InitialState, InitialTreatment, NoiseFamily, NoiseRecord, ScmError,
    StructuralModel, Variant,
};
use crate::kernel::{CondTable, ParentMask, ParentSizes};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Either model family, loaded from one document.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyScm {
    Discrete(DiscreteScm),
    Additive(AdditiveScm),
}

impl StructuralModel for AnyScm {
    fn u_count(&self) -> usize {
        match self {
            AnyScm::Discrete(m) => m.u_count(),
            AnyScm::Additive(m) => m.u_count(),
        }
    }

    fn u_name(&self, u: usize) -> String {
        match self {
            AnyScm::Discrete(m) => m.u_name(u),
            AnyScm::Additive(m) => m.u_name(u),
        }
    }

    fn draw_noise(&self, t: usize, rng: &mut dyn RngCore) -> NoiseRecord {
        match self {
            AnyScm::Discrete(m) => m.draw_noise(t, rng),
            AnyScm::Additive(m) => m.draw_noise(t, rng),
        }
    }

    fn realize(&self, u: usize, treatments: &[u8], noise: &NoiseRecord) -> Result<Trajectory, ScmError> {
        match self {
            AnyScm::Discrete(m) => m.realize(u, treatments, noise),
            AnyScm::Additive(m) => m.realize(u, treatments, noise),
        }
    }
}

impl ExactModel for AnyScm {
    fn u_weights(&self) -> Vec<f64> {
        match self {
            AnyScm::Discrete(m) => m.u_weights(),
            AnyScm::Additive(m) => m.u_weights(),
        }
    }

    fn mean_under(&self, u: usize, treatments: &[u8]) -> Result<Vec<f64>, ScmError> {
        match self {
            AnyScm::Discrete(m) => m.mean_under(u, treatments),
            AnyScm::Additive(m) => m.mean_under(u, treatments),
        }
    }
}

pub fn parse_model(text: &str) -> Result<AnyScm, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("", e.to_string()))?;
    model_from_table(&table, "")
}

pub fn parse_discrete(text: &str) -> Result<DiscreteScm, ConfigError> {
    match parse_model(text)? {
        AnyScm::Discrete(m) => Ok(m),
        AnyScm::Additive(_) => Err(ConfigError::new("variant", "expected a discrete variant, found additive")),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn get<'a>(t: &'a Table, prefix: &str, key: &str) -> Result<&'a Value, ConfigError> {
    t.get(key).ok_or_else(|| ConfigError::new(join(prefix, key), "missing required key"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(ConfigError::new(path, format!("expected a number, found {}", other.type_str()))),
    }
}

fn as_index(v: &Value, path: &str) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(ConfigError::new(path, format!("expected a non-negative integer, found {other}"))),
    }
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| ConfigError::new(path, format!("expected a string, found {}", v.type_str())))
}

fn as_table<'a>(v: &'a Value, path: &str) -> Result<&'a Table, ConfigError> {
    v.as_table().ok_or_else(|| ConfigError::new(path, format!("expected a table, found {}", v.type_str())))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ConfigError> {
    v.as_array().ok_or_else(|| ConfigError::new(path, format!("expected an array, found {}", v.type_str())))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>, ConfigError> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{path}[{i}]")))
        .collect()
}

fn parse_variant(s: &str, path: &str) -> Result<Option<Variant>, ConfigError> {
    match s {
        "basic" => Ok(Some(Variant::Basic)),
        "relaxed" => Ok(Some(Variant::Relaxed)),
        "time_trend" => Ok(Some(Variant::TimeTrend)),
        "additive" => Ok(None),
        other => Err(ConfigError::new(
            path,
            format!("unknown variant {other:?}; expected basic, relaxed, time_trend or additive"),
        )),
    }
}

/// Parse a model from a (sub)table; `prefix` is the table's path in the
/// enclosing document.
pub fn model_from_table(t: &Table, prefix: &str) -> Result<AnyScm, ConfigError> {
    let vpath = join(prefix, "variant");
    let variant = parse_variant(as_str(get(t, prefix, "variant")?, &vpath)?, &vpath)?;
    if let Some(lag) = t.get("lag") {
        let lpath = join(prefix, "lag");
        if as_index(lag, &lpath)? != 1 {
            return Err(ConfigError::new(lpath, "only lag = 1 is supported"));
        }
    }
    match variant {
        None => additive_from_table(t, prefix).map(AnyScm::Additive),
        Some(v) => discrete_from_table(t, prefix, v).map(AnyScm::Discrete),
    }
}

fn additive_from_table(t: &Table, prefix: &str) -> Result<AdditiveScm, ConfigError> {
    let num = |key: &str, default: Option<f64>| -> Result<f64, ConfigError> {
        match (t.get(key), default) {
            (Some(v), _) => as_f64(v, &join(prefix, key)),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ConfigError::new(join(prefix, key), "missing required key")),
        }
    };
    let beta = num("beta", None)?;
    let u_value = num("u_value", Some(0.0))?;
    let noise_sd = num("noise_sd", None)?;
    let fpath = join(prefix, "noise_family");
    let family = match t.get("noise_family") {
        None => NoiseFamily::Gaussian,
        Some(v) => match as_str(v, &fpath)? {
            "gaussian" => NoiseFamily::Gaussian,
            "uniform" => NoiseFamily::Uniform,
            "constant" => NoiseFamily::Constant,
            other => return Err(ConfigError::new(fpath, format!("unknown noise family {other:?}"))),
        },
    };
    AdditiveScm::new(beta, u_value, noise_sd, family).map_err(|e| ConfigError::new(prefix, e.to_string()))
}

fn discrete_from_table(t: &Table, prefix: &str, variant: Variant) -> Result<DiscreteScm, ConfigError> {
    let domain = |key: &str| -> Result<Vec<f64>, ConfigError> {
        let dpath = join(prefix, key);
        let d = as_table(get(t, prefix, key)?, &dpath)?;
        let vals = numbers(get(d, &dpath, "values")?, &join(&dpath, "values"))?;
        if vals.is_empty() {
            return Err(ConfigError::new(join(&dpath, "values"), "domain must have at least one level"));
        }
        for (i, w) in vals.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(ConfigError::new(format!("{dpath}.values[{}]", i + 1), "duplicate level label"));
            }
        }
        Ok(vals)
    };
    let y_values = domain("y_domain")?;
    let l_values = if variant.has_covariate() { domain("l_domain")? } else { vec![0.0] };
    let sizes = ParentSizes { n_y: y_values.len(), n_l: l_values.len() };

    let positive = match t.get("positive") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| ConfigError::new(join(prefix, "positive"), "expected a boolean"))?,
    };

    let mut initial = InitialState::default();
    if let Some(v) = t.get("initial") {
        let ipath = join(prefix, "initial");
        let it = as_table(v, &ipath)?;
        if let Some(y) = it.get("y") {
            initial.y = as_index(y, &join(&ipath, "y"))?;
            if initial.y >= sizes.n_y {
                return Err(ConfigError::new(join(&ipath, "y"), "index outside y_domain"));
            }
        }
        if let Some(l) = it.get("l") {
            initial.l = as_index(l, &join(&ipath, "l"))?;
            if initial.l >= sizes.n_l {
                return Err(ConfigError::new(join(&ipath, "l"), "index outside l_domain"));
            }
        }
        if let Some(a) = it.get("a") {
            let apath = join(&ipath, "a");
            initial.a = match a {
                Value::String(s) if s == "match" => InitialTreatment::MatchFirst,
                Value::Integer(0) => InitialTreatment::Fixed(0),
                Value::Integer(1) => InitialTreatment::Fixed(1),
                _ => return Err(ConfigError::new(apath, "expected 0, 1 or \"match\"")),
            };
        }
    }

    let upath = join(prefix, "u");
    let levels = as_array(get(t, prefix, "u")?, &upath)?;
    if levels.is_empty() {
        return Err(ConfigError::new(upath, "at least one u level is required"));
    }
    let mut builder = DiscreteScm::builder(variant).y_values(y_values).l_values(l_values).initial(initial).positive(positive);
    for (i, lv) in levels.iter().enumerate() {
        let p = format!("{upath}[{i}]");
        let lt = as_table(lv, &p)?;
        let name = as_str(get(lt, &p, "name")?, &join(&p, "name"))?.to_string();
        let weight = as_f64(get(lt, &p, "weight")?, &join(&p, "weight"))?;
        let ypath = join(&p, "y_kernel");
        let y = table_from_nested(get(lt, &p, "y_kernel")?, &ypath, variant.outcome_mask(), sizes, sizes.n_y, positive)?;
        let l = if variant.has_covariate() {
            let lpath = join(&p, "l_kernel");
            Some(table_from_nested(get(lt, &p, "l_kernel")?, &lpath, variant.covariate_mask(), sizes, sizes.n_l, positive)?)
        } else {
            if lt.contains_key("l_kernel") {
                return Err(ConfigError::new(join(&p, "l_kernel"), "the basic variant has no covariate kernel"));
            }
            None
        };
        builder = builder.u_level_tables(name, weight, y, l);
    }
    builder.build().map_err(|e| ConfigError::new(upath, e.to_string()))
}

fn masked_dims(mask: ParentMask, sizes: ParentSizes) -> Vec<usize> {
    let flags = [mask.l, mask.a, mask.y_prev, mask.l_prev, mask.a_prev];
    let full = [sizes.n_l, 2, sizes.n_y, sizes.n_l, 2];
    flags.iter().zip(full).filter(|(on, _)| **on).map(|(_, n)| n).collect()
}

fn flatten(v: &Value, path: &str, dims: &[usize], n_out: usize, positive: bool, out: &mut Vec<f64>) -> Result<(), ConfigError> {
    let arr = as_array(v, path)?;
    match dims.split_first() {
        None => {
            if arr.len() != n_out {
                return Err(ConfigError::new(path, format!("row has {} entries, expected {n_out}", arr.len())));
            }
            let mut row = Vec::with_capacity(n_out);
            for (i, x) in arr.iter().enumerate() {
                let p = as_f64(x, &format!("{path}[{i}]"))?;
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(ConfigError::new(format!("{path}[{i}]"), "probability must be finite and >= 0"));
                }
                if positive && p == 0.0 {
                    return Err(ConfigError::new(format!("{path}[{i}]"), "zero entry in a model declared positive"));
                }
                row.push(p);
            }
            let sum = crate::numeric::compensated_sum(row.iter().copied());
            if (sum - 1.0).abs() > crate::kernel::NORMALIZATION_TOL {
                return Err(ConfigError::new(path, format!("row sums to {sum}, expected 1")));
            }
            out.extend(row);
            Ok(())
        }
        Some((&n, rest)) => {
            if arr.len() != n {
                return Err(ConfigError::new(path, format!("axis has {} entries, expected {n}", arr.len())));
            }
            for (i, sub) in arr.iter().enumerate() {
                flatten(sub, &format!("{path}[{i}]"), rest, n_out, positive, out)?;
            }
            Ok(())
        }
    }
}

fn table_from_nested(
    v: &Value,
    path: &str,
    mask: ParentMask,
    sizes: ParentSizes,
    n_out: usize,
    positive: bool,
) -> Result<CondTable, ConfigError> {
    let dims = masked_dims(mask, sizes);
    let mut flat = Vec::new();
    flatten(v, path, &dims, n_out, positive, &mut flat)?;
    let mut rows = flat.chunks(n_out);
    CondTable::from_fn(mask, sizes, n_out, |_| rows.next().map(<[f64]>::to_vec).unwrap_or_default())
        .map_err(|e| ConfigError::new(path, e.to_string()))
}

/// Nested-array form of a table, the inverse of the parser's flattening.
pub fn table_to_nested(table: &CondTable) -> Value {
    let dims = masked_dims(table.mask(), table.sizes());
    let rows: Vec<Value> = (0..table.n_rows())
        .map(|r| Value::Array(table.row_by_index(r).iter().map(|&p| Value::Float(p)).collect()))
        .collect();
    nest(rows, &dims)
}

fn nest(mut items: Vec<Value>, dims: &[usize]) -> Value {
    for &n in dims.iter().rev() {
        items = items.chunks(n).map(|c| Value::Array(c.to_vec())).collect();
    }
    items.into_iter().next().unwrap_or(Value::Array(Vec::new()))
}

fn float_array(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

pub fn discrete_to_table(scm: &DiscreteScm) -> Table {
    let mut t = Table::new();
    t.insert("variant".into(), Value::String(scm.variant().name().into()));
    t.insert("lag".into(), Value::Integer(1));
    t.insert("positive".into(), Value::Boolean(scm.is_positive()));
    let mut yd = Table::new();
    yd.insert("values".into(), float_array(scm.y_values()));
    t.insert("y_domain".into(), Value::Table(yd));
    if scm.variant().has_covariate() {
        let mut ld = Table::new();
        ld.insert("values".into(), float_array(scm.l_values()));
        t.insert("l_domain".into(), Value::Table(ld));
    }
    let init = scm.initial();
    let mut it = Table::new();
    it.insert("y".into(), Value::Integer(init.y as i64));
    it.insert("l".into(), Value::Integer(init.l as i64));
    it.insert(
        "a".into(),
        match init.a {
            InitialTreatment::Fixed(a) => Value::Integer(a as i64),
            InitialTreatment::MatchFirst => Value::String("match".into()),
        },
    );
    t.insert("initial".into(), Value::Table(it));
    let levels = scm
        .u_levels()
        .iter()
        .enumerate()
        .map(|(u, lv)| {
            let mut e = Table::new();
            e.insert("name".into(), Value::String(lv.name.clone()));
            e.insert("weight".into(), Value::Float(lv.weight));
            if scm.variant().has_covariate() {
                e.insert("l_kernel".into(), table_to_nested(scm.covariate_table(u)));
            }
            e.insert("y_kernel".into(), table_to_nested(scm.outcome_table(u)));
            Value::Table(e)
        })
        .collect();
    t.insert("u".into(), Value::Array(levels));
    t
}

pub fn discrete_to_toml(scm: &DiscreteScm) -> String {
    toml::to_string(&discrete_to_table(scm)).expect("tables of numbers and strings always serialize")
}
