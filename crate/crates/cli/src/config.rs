//! Run configuration: JSON file, command-line overrides, validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use bergman_dyadic::geometry::ModelDomain;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainSpec {
    Ball { n: usize },
    Egg { m: u32 },
}

impl DomainSpec {
    pub fn build(&self) -> ModelDomain<f64> {
        match *self {
            DomainSpec::Ball { n } => ModelDomain::ball(n),
            DomainSpec::Egg { m } => ModelDomain::egg(m),
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, DomainSpec::Ball { .. })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Ball { n } => write!(f, "ball:n={n}"),
            DomainSpec::Egg { m } => write!(f, "egg:m={m}"),
        }
    }
}

/// Splits `kind:key=value` into the kind and its single parameter.
fn split_spec(s: &str) -> Result<(&str, Option<(&str, &str)>), String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    if rest.is_empty() {
        return Ok((kind, None));
    }
    let (k, v) = rest
        .split_once('=')
        .ok_or_else(|| format!("expected `key=value` after `{kind}:`, got `{rest}`"))?;
    Ok((kind, Some((k.trim(), v.trim()))))
}

impl FromStr for DomainSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split_spec(s.trim())? {
            ("ball", None) => Ok(DomainSpec::Ball { n: 1 }),
            ("ball", Some(("n", v))) => v
                .parse()
                .map(|n| DomainSpec::Ball { n })
                .map_err(|_| format!("ball dimension `{v}` is not a positive integer")),
            ("egg", None) => Ok(DomainSpec::Egg { m: 2 }),
            ("egg", Some(("m", v))) => v
                .parse()
                .map(|m| DomainSpec::Egg { m })
                .map_err(|_| format!("egg exponent `{v}` is not an integer")),
            _ => Err(format!("unknown domain `{s}` (expected ball:n=N or egg:m=M)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightSpec {
    One,
    Power { alpha: f64 },
    Sharp { s: f64 },
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::One => write!(f, "one:"),
            WeightSpec::Power { alpha } => write!(f, "power:alpha={alpha}"),
            WeightSpec::Sharp { s } => write!(f, "sharp:s={s}"),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        match split_spec(s.trim())? {
            ("one", None) => Ok(WeightSpec::One),
            ("power", Some(("alpha", v))) => Ok(WeightSpec::Power { alpha: num(v)? }),
            ("sharp", Some(("s", v))) => Ok(WeightSpec::Sharp { s: num(v)? }),
            _ => Err(format!("unknown weight `{s}` (expected one:, power:alpha=A or sharp:s=S)")),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(DomainSpec);
string_serde!(WeightSpec);

/// Everything a command depends on. Reports embed the resolved value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub interior: usize,
    pub boundary: usize,
    pub seed: u64,
    /// Ratio between consecutive dyadic scales.
    pub s: f64,
    /// Top dyadic scale.
    pub delta: f64,
    pub kmax: usize,
    pub systems: usize,
    pub p: f64,
    pub weight: WeightSpec,
    /// `s` values of the sharp sweep.
    pub s_grid: Vec<f64>,
    /// Bump depths of the weak-type check.
    pub depths: Vec<f64>,
    /// Random balls tested for adjacency.
    pub trials: usize,
    /// Random pairs tested for domination.
    pub pairs: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::Ball { n: 1 },
            interior: 3000,
            boundary: 1000,
            seed: 0,
            s: 8.0,
            delta: 0.8,
            kmax: 4,
            systems: 5,
            p: 2.0,
            weight: WeightSpec::One,
            s_grid: vec![0.4, 0.2, 0.1, 0.05],
            depths: vec![0.1, 0.01, 0.001],
            trials: 1000,
            pairs: 100_000,
            out: PathBuf::from("out"),
        }
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field,
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad("config", format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self.domain {
            DomainSpec::Ball { n } if n == 0 => return Err(bad("domain", "ball dimension must be at least 1")),
            DomainSpec::Egg { m } if m < 2 => return Err(bad("domain", "egg exponent must be at least 2")),
            _ => {}
        }
        if self.interior == 0 {
            return Err(bad("interior", "need at least one interior sample"));
        }
        if self.boundary < 2 {
            return Err(bad("boundary", "need at least two boundary samples"));
        }
        if !(self.s > 2.0 && self.s.is_finite()) {
            return Err(bad("s", "dyadic ratio must exceed 2"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(bad("delta", "top scale must be positive"));
        }
        if self.systems == 0 {
            return Err(bad("systems", "need at least one dyadic system"));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(bad("p", "exponent must lie in (1, inf)"));
        }
        match self.weight {
            WeightSpec::Power { alpha } if !(alpha > -1.0) => {
                return Err(bad("weight", "power weights need alpha > -1"));
            }
            WeightSpec::Sharp { s } if !(s > 0.0 && s <= 0.5) => {
                return Err(bad("weight", "sharp weights need 0 < s <= 0.5"));
            }
            WeightSpec::Sharp { .. } if !self.domain.is_ball() => {
                return Err(bad("weight", "sharp weights are defined on the ball only"));
            }
            _ => {}
        }
        if self.s_grid.iter().any(|s| !(*s > 0.0 && *s <= 0.5)) {
            return Err(bad("s_grid", "every value must lie in (0, 0.5]"));
        }
        if self.depths.iter().any(|d| !(*d > 0.0 && *d < 0.5)) {
            return Err(bad("depths", "every depth must lie in (0, 0.5)"));
        }
        if self.trials == 0 || self.pairs == 0 {
            return Err(bad(if self.trials == 0 { "trials" } else { "pairs" }, "must be positive"));
        }
        Ok(())
    }
}
