//! Simulator configurations as characteristic forms `P(z)·K + Q(z)·B + R(z)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::output;
use crate::poly::Polynomial;

/// Normalized virtual stiffness `K·T²/m` and damping `B·T/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteParams {
    #[serde(rename = "K")]
    pub stiffness: f64,
    #[serde(rename = "B")]
    pub damping: f64,
}

impl DiscreteParams {
    pub fn new(stiffness: f64, damping: f64) -> Self {
        DiscreteParams { stiffness, damping }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin,
    File,
}

/// Which `R(z)` to use for the real-damping configuration.
///
/// `AsPrinted` is `g·z(z−1)`; `Reconstructed` is `g·z(z−1)(z−e^{−b0})`, whose
/// `b0 → 0` limit is the unit-delay form. Here `g = b0/(1−e^{−b0})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingVariant {
    AsPrinted,
    #[default]
    Reconstructed,
}

impl FromStr for DampingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_printed" => Ok(DampingVariant::AsPrinted),
            "reconstructed" => Ok(DampingVariant::Reconstructed),
            other => Err(Error::InvalidParam(format!("unknown variant `{other}`"))),
        }
    }
}

impl fmt::Display for DampingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DampingVariant::AsPrinted => "as_printed",
            DampingVariant::Reconstructed => "reconstructed",
        })
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["no_delay", "unit_delay", "real_damping"];

/// Default real damping of the built-in real-damping configuration.
pub const DEFAULT_B0: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicForm {
    pub name: String,
    #[serde(rename = "P")]
    pub p: Polynomial,
    #[serde(rename = "Q")]
    pub q: Polynomial,
    #[serde(rename = "R")]
    pub r: Polynomial,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<DampingVariant>,
    pub provenance: Provenance,
}

impl CharacteristicForm {
    fn builtin_form(name: &str, p: Vec<f64>, q: Vec<f64>, r: Polynomial) -> Self {
        CharacteristicForm {
            name: name.to_string(),
            p: Polynomial::new(p),
            q: Polynomial::new(q),
            r,
            params: BTreeMap::new(),
            variant: None,
            provenance: Provenance::Builtin,
        }
    }

    /// Ideal sampling, no computation delay: `P = z`, `Q = z − 1`, `R = (z − 1)²`.
    pub fn no_delay() -> Self {
        Self::builtin_form(
            "no_delay",
            vec![0.0, 1.0],
            vec![-1.0, 1.0],
            Polynomial::new(vec![1.0, -2.0, 1.0]),
        )
    }

    /// One sample of computation delay: `R = z(z − 1)²`.
    pub fn unit_delay() -> Self {
        Self::builtin_form(
            "unit_delay",
            vec![0.0, 1.0],
            vec![-1.0, 1.0],
            Polynomial::new(vec![0.0, 1.0, -2.0, 1.0]),
        )
    }

    /// Unit delay plus a real device damping `b0 > 0` (normalized units).
    pub fn real_damping(b0: f64, variant: DampingVariant) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::InvalidParam(format!("b0 must be positive, got {b0}")));
        }
        let decay = (-b0).exp();
        let gain = b0 / -(-b0).exp_m1();
        let r = match variant {
            DampingVariant::AsPrinted => Polynomial::new(vec![0.0, -1.0, 1.0]),
            DampingVariant::Reconstructed => Polynomial::new(vec![0.0, decay, -(1.0 + decay), 1.0]),
        }
        .scale(gain);
        let mut form = Self::builtin_form("real_damping", vec![0.0, 1.0], vec![-1.0, 1.0], r);
        form.params.insert("b0".to_string(), b0);
        form.variant = Some(variant);
        Ok(form)
    }

    /// Looks up a built-in by name. `real_damping` reads `b0` from `params`
    /// (default 0.5); the others take no parameters.
    pub fn builtin(
        name: &str,
        params: &BTreeMap<String, f64>,
        variant: Option<DampingVariant>,
    ) -> Result<Self> {
        match name {
            "no_delay" | "unit_delay" => {
                if let Some(key) = params.keys().next() {
                    return Err(Error::InvalidParam(format!("`{name}` takes no parameter `{key}`")));
                }
                Ok(if name == "no_delay" { Self::no_delay() } else { Self::unit_delay() })
            }
            "real_damping" => {
                let b0 = params.get("b0").copied().unwrap_or(DEFAULT_B0);
                Self::real_damping(b0, variant.unwrap_or_default())
            }
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    /// `K·P + B·Q + R`, trimmed.
    pub fn assemble(&self, d: DiscreteParams) -> Polynomial {
        let kp = self.p.scale(d.stiffness);
        let bq = self.q.scale(d.damping);
        &(&kp + &bq) + &self.r
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.p.is_zero() && self.q.is_zero() && self.r.is_zero() {
            return Err(Error::Invariant("P, Q and R are all zero".to_string()));
        }
        let finite = [&self.p, &self.q, &self.r]
            .iter()
            .all(|p| p.coeffs().iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::Invariant("non-finite coefficient".to_string()));
        }
        Ok(())
    }

    pub fn b0(&self) -> Option<f64> {
        self.params.get("b0").copied()
    }
}

/// On-disk layout: coefficients ascending in degree, as numbers or numeric
/// strings.
#[derive(Serialize)]
struct ConfigFileOut<'a> {
    name: &'a str,
    #[serde(rename = "P")]
    p: &'a [f64],
    #[serde(rename = "Q")]
    q: &'a [f64],
    #[serde(rename = "R")]
    r: &'a [f64],
    params: &'a BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<DampingVariant>,
}

fn parse_coeffs(doc: &Value, key: &str) -> Result<Polynomial> {
    let arr = doc
        .get(key)
        .ok_or_else(|| Error::Schema(format!("missing field `{key}`")))?
        .as_array()
        .ok_or_else(|| Error::Schema(format!("`{key}` must be an array of reals")))?;
    let coeffs = arr
        .iter()
        .map(|v| match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("`{key}`: {n} is not a real"))),
            Value::String(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{key}`: `{s}` is not a real"))),
            other => Err(Error::Schema(format!("`{key}`: {other} is not a real"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Polynomial::new(coeffs))
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<CharacteristicForm> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if !doc.is_object() {
        return Err(Error::Schema("top level must be an object".to_string()));
    }
    let name = doc
        .get("name")
        .ok_or_else(|| Error::Schema("missing field `name`".to_string()))?
        .as_str()
        .ok_or_else(|| Error::Schema("`name` must be a string".to_string()))?
        .to_string();
    let p = parse_coeffs(&doc, "P")?;
    let q = parse_coeffs(&doc, "Q")?;
    let r = parse_coeffs(&doc, "R")?;

    let mut params = BTreeMap::new();
    if let Some(v) = doc.get("params") {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Schema("`params` must be an object".to_string()))?;
        for (key, val) in obj {
            let x = match val {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => s.trim().parse().ok(),
                _ => None,
            }
            .ok_or_else(|| Error::Parse(format!("param `{key}` is not a real")))?;
            params.insert(key.clone(), x);
        }
    }
    let variant = match doc.get("variant") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse()?),
        Some(_) => return Err(Error::Schema("`variant` must be a string".to_string())),
    };

    let form = CharacteristicForm { name, p, q, r, params, variant, provenance: Provenance::File };
    form.check_invariants()?;
    Ok(form)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<CharacteristicForm> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Serializes with 17 significant digits, so loading the result gives back
/// the same coefficients bit for bit.
pub fn config_to_string(form: &CharacteristicForm) -> String {
    let out = ConfigFileOut {
        name: &form.name,
        p: form.p.coeffs(),
        q: form.q.coeffs(),
        r: form.r.coeffs(),
        params: &form.params,
        variant: form.variant,
    };
    output::to_json(&out)
}

pub fn save_config(form: &CharacteristicForm, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, config_to_string(form))?;
    Ok(())
}
