//! Run configuration: one JSON document naming an experiment and its parameters.
//!
//! ```json
//! { "experiment": "shear", "seed": 7, "output_dir": "out", "shear": { "eta_tilde": 150 } }
//! ```
//!
//! Missing parameters take their defaults, unknown keys are rejected and every
//! parameter is validated before any computation starts.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::experiments::calibrate::CalibrateParams;
use crate::experiments::ellipsoid::EllipsoidParams;
use crate::experiments::relaxation::RelaxParams;
use crate::experiments::shear::ShearParams;
use crate::experiments::stokes_check::StokesCheckParams;
use crate::experiments::suspension::SuspensionParams;

/// A positive length written either as a number or as an exact fraction `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshWidth(f64);

impl MeshWidth {
    pub fn new(value: f64) -> Self {
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::str::FromStr for MeshWidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse '{s}' as a number or fraction p/q"));
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                let q: f64 = q.trim().parse().map_err(|_| bad())?;
                p / q
            }
            None => s.parse().map_err(|_| bad())?,
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("length '{s}' must be positive and finite")));
        }
        Ok(Self(value))
    }
}

impl fmt::Display for MeshWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inv = 1.0 / self.0;
        if inv.fract() == 0.0 && inv < 1e9 && 1.0 / inv == self.0 {
            write!(f, "1/{inv}")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for MeshWidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MeshWidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = MeshWidth;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or a fraction string such as \"1/64\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<MeshWidth, E> {
                v.to_string().parse().map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<MeshWidth, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<MeshWidth, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<MeshWidth, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Calibrate,
    EllipsoidDrag,
    Relax,
    Shear,
    Suspension,
    StokesCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Calibrate,
        ExperimentKind::EllipsoidDrag,
        ExperimentKind::Relax,
        ExperimentKind::Shear,
        ExperimentKind::Suspension,
        ExperimentKind::StokesCheck,
    ];

    /// Subcommand and key of the parameter block.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::EllipsoidDrag => "ellipsoid-drag",
            ExperimentKind::Relax => "relax",
            ExperimentKind::Shear => "shear",
            ExperimentKind::Suspension => "suspension",
            ExperimentKind::StokesCheck => "stokes-check",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'")))
    }

    pub fn default_params(self) -> ExperimentParams {
        match self {
            ExperimentKind::Calibrate => ExperimentParams::Calibrate(Default::default()),
            ExperimentKind::EllipsoidDrag => ExperimentParams::EllipsoidDrag(Default::default()),
            ExperimentKind::Relax => ExperimentParams::Relax(Default::default()),
            ExperimentKind::Shear => ExperimentParams::Shear(Default::default()),
            ExperimentKind::Suspension => ExperimentParams::Suspension(Default::default()),
            ExperimentKind::StokesCheck => ExperimentParams::StokesCheck(Default::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    Calibrate(CalibrateParams),
    EllipsoidDrag(EllipsoidParams),
    Relax(RelaxParams),
    Shear(ShearParams),
    Suspension(SuspensionParams),
    StokesCheck(StokesCheckParams),
}

impl ExperimentParams {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentParams::Calibrate(_) => ExperimentKind::Calibrate,
            ExperimentParams::EllipsoidDrag(_) => ExperimentKind::EllipsoidDrag,
            ExperimentParams::Relax(_) => ExperimentKind::Relax,
            ExperimentParams::Shear(_) => ExperimentKind::Shear,
            ExperimentParams::Suspension(_) => ExperimentKind::Suspension,
            ExperimentParams::StokesCheck(_) => ExperimentKind::StokesCheck,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentParams::Calibrate(p) => p.validate(),
            ExperimentParams::EllipsoidDrag(p) => p.validate(),
            ExperimentParams::Relax(p) => p.validate(),
            ExperimentParams::Shear(p) => p.validate(),
            ExperimentParams::Suspension(p) => p.validate(),
            ExperimentParams::StokesCheck(p) => p.validate(),
        }
    }

    pub fn from_value(kind: ExperimentKind, value: serde_json::Value) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::Config(format!("invalid '{}' block: {e}", kind.name()));
        Ok(match kind {
            ExperimentKind::Calibrate => ExperimentParams::Calibrate(serde_json::from_value(value).map_err(bad)?),
            ExperimentKind::EllipsoidDrag => {
                ExperimentParams::EllipsoidDrag(serde_json::from_value(value).map_err(bad)?)
            }
            ExperimentKind::Relax => ExperimentParams::Relax(serde_json::from_value(value).map_err(bad)?),
            ExperimentKind::Shear => ExperimentParams::Shear(serde_json::from_value(value).map_err(bad)?),
            ExperimentKind::Suspension => ExperimentParams::Suspension(serde_json::from_value(value).map_err(bad)?),
            ExperimentKind::StokesCheck => {
                ExperimentParams::StokesCheck(serde_json::from_value(value).map_err(bad)?)
            }
        })
    }

    pub fn to_value(&self) -> serde_json::Value {
        let v = match self {
            ExperimentParams::Calibrate(p) => serde_json::to_value(p),
            ExperimentParams::EllipsoidDrag(p) => serde_json::to_value(p),
            ExperimentParams::Relax(p) => serde_json::to_value(p),
            ExperimentParams::Shear(p) => serde_json::to_value(p),
            ExperimentParams::Suspension(p) => serde_json::to_value(p),
            ExperimentParams::StokesCheck(p) => serde_json::to_value(p),
        };
        v.expect("parameter blocks serialize to JSON")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: Option<String>,
    pub params: ExperimentParams,
}

impl RunConfig {
    pub fn new(params: ExperimentParams) -> Self {
        Self {
            seed: 0,
            output_dir: None,
            params,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.params.kind()
    }

    /// Canonical JSON: every parameter spelled out, keys in a fixed order.
    pub fn to_canonical_json(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert("experiment".into(), self.kind().name().into());
        map.insert("seed".into(), self.seed.into());
        if let Some(dir) = &self.output_dir {
            map.insert("output_dir".into(), dir.clone().into());
        }
        map.insert(self.kind().name().into(), self.params.to_value());
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("config serializes")
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed configuration: {e}")))?;
    let serde_json::Value::Object(mut map) = value else {
        return Err(Error::Config("configuration must be a JSON object".into()));
    };
    let kind = match map.remove("experiment") {
        Some(serde_json::Value::String(name)) => ExperimentKind::from_name(&name)?,
        Some(_) => return Err(Error::Config("'experiment' must be a string".into())),
        None => return Err(Error::Config("missing 'experiment'".into())),
    };
    let seed = match map.remove("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::Config("'seed' must be an unsigned 64-bit integer".into()))?,
    };
    let output_dir = match map.remove("output_dir") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(_) => return Err(Error::Config("'output_dir' must be a string".into())),
    };
    let block = map
        .remove(kind.name())
        .unwrap_or_else(|| serde_json::Value::Object(Default::default()));
    if let Some(key) = map.keys().next() {
        return Err(Error::Config(format!("unknown key '{key}'")));
    }
    let params = ExperimentParams::from_value(kind, block)?;
    params.validate()?;
    Ok(RunConfig {
        seed,
        output_dir,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fractions_parse_exactly() {
        assert_eq!("1/64".parse::<MeshWidth>().unwrap().value(), 1.0 / 64.0);
        assert_eq!("0.25".parse::<MeshWidth>().unwrap().value(), 0.25);
        assert_eq!(" 3 / 128 ".parse::<MeshWidth>().unwrap().value(), 3.0 / 128.0);
        assert!("1/0".parse::<MeshWidth>().is_err());
        assert!("-1/4".parse::<MeshWidth>().is_err());
        assert!("abc".parse::<MeshWidth>().is_err());
        assert_eq!(MeshWidth::new(1.0 / 64.0).to_string(), "1/64");
        assert_eq!(MeshWidth::new(0.3).to_string(), "0.3");
    }

    #[test]
    fn empty_shear_block_takes_defaults() {
        let cfg = parse_config(r#"{"experiment": "shear", "shear": {}}"#).unwrap();
        let ExperimentParams::Shear(p) = cfg.params else { panic!() };
        assert_eq!(p.eta_tilde, 450.0);
        assert_eq!(p.h.value(), 1.0 / 32.0);
        assert_eq!(p.shear_rate, 3.0);
        assert_eq!(p.mu, 1.0);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn oversized_radius_is_rejected() {
        let err = parse_config(r#"{"experiment": "relax", "relax": {"h": "1/16", "radius": 0.5}}"#).unwrap_err();
        assert!(err.to_string().contains("physical radius exceeds grid hydrodynamic radius"), "{err}");
    }

    #[test]
    fn malformed_and_unknown_keys() {
        assert!(parse_config("{").is_err());
        assert!(parse_config("[]").is_err());
        assert!(parse_config(r#"{"seed": 1}"#).is_err());
        assert!(parse_config(r#"{"experiment": "dance"}"#).is_err());
        assert!(parse_config(r#"{"experiment": "shear", "colour": 1}"#).is_err());
        assert!(parse_config(r#"{"experiment": "shear", "shear": {"eta": 1}}"#).is_err());
        assert!(parse_config(r#"{"experiment": "shear", "seed": -1}"#).is_err());
    }

    #[test]
    fn every_experiment_round_trips_with_defaults() {
        for kind in ExperimentKind::ALL {
            let cfg = RunConfig::new(kind.default_params());
            let text = cfg.to_canonical_json();
            let back = parse_config(&text).unwrap();
            assert_eq!(back, cfg, "{}", kind.name());
            assert_eq!(back.to_canonical_json(), text);
        }
    }

    proptest! {
        #[test]
        fn canonical_form_is_idempotent(
            kind in 0usize..6,
            seed in any::<u64>(),
            denom in 4u32..200,
            dir in proptest::option::of("[a-z]{1,8}"),
        ) {
            let kind = ExperimentKind::ALL[kind];
            let h = format!("1/{}", 2 * denom);
            let text = match kind {
                ExperimentKind::Calibrate | ExperimentKind::Shear => {
                    format!(r#"{{"experiment":"{}","seed":{seed},"{}":{{"h":"{h}"}}}}"#, kind.name(), kind.name())
                }
                _ => format!(r#"{{"experiment":"{}","seed":{seed}}}"#, kind.name()),
            };
            let mut cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(_) => return Ok(()),
            };
            cfg.output_dir = dir;
            let once = cfg.to_canonical_json();
            let reparsed = parse_config(&once).unwrap();
            prop_assert_eq!(&reparsed, &cfg);
            prop_assert_eq!(reparsed.to_canonical_json(), once);
        }
    }
}
