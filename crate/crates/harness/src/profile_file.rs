//! Driver-profile documents:
//! `{"version", "alpha_lin", "alpha_ang", "revision", "dpu": {"avg", "std"}}`.
//! Infinite DPU thresholds are written as the string `"inf"`.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use teleop_entropy::{Baseline64, DriverProfile64, EngineError, Thresholds64};
use thiserror::Error;

pub const PROFILE_VERSION: u32 = 1;

/// Serde adapter for non-negative floats that may be `+∞`.
pub mod float_or_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub const INF: &str = "inf";

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str(INF)
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) if x.is_finite() => Ok(x),
            Raw::Str(s) if s == INF => Ok(f64::INFINITY),
            Raw::Num(x) => Err(de::Error::custom(format!("invalid value {x}"))),
            Raw::Str(s) => Err(de::Error::custom(format!("expected a number or \"{INF}\", got \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpuSeed {
    #[serde(with = "float_or_inf")]
    pub avg: f64,
    #[serde(with = "float_or_inf")]
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub alpha_lin: f64,
    pub alpha_ang: f64,
    pub revision: u32,
    pub dpu: DpuSeed,
}

fn default_version() -> u32 {
    PROFILE_VERSION
}

#[derive(Debug, Error)]
pub enum ProfileFileError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("malformed profile: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported profile version {0}")]
    Version(u32),
    #[error("invalid profile: {0}")]
    Invalid(#[from] EngineError),
    #[error("invalid profile: DPU thresholds must be non-negative")]
    NegativeThreshold,
}

impl ProfileFile {
    pub fn from_baseline(b: &Baseline64) -> Self {
        Self {
            version: PROFILE_VERSION,
            alpha_lin: b.profile.alpha_lin,
            alpha_ang: b.profile.alpha_ang,
            revision: b.profile.revision,
            dpu: DpuSeed {
                avg: b.thresholds.avg,
                std: b.thresholds.std,
            },
        }
    }

    /// Checked conversion into a session starting point.
    pub fn to_baseline(&self) -> Result<Baseline64, ProfileFileError> {
        if self.version != PROFILE_VERSION {
            return Err(ProfileFileError::Version(self.version));
        }
        if !(self.dpu.avg >= 0.0 && self.dpu.std >= 0.0) {
            return Err(ProfileFileError::NegativeThreshold);
        }
        Ok(Baseline64 {
            profile: DriverProfile64::new(self.alpha_lin, self.alpha_ang, 0, self.revision)?,
            thresholds: Thresholds64 {
                avg: self.dpu.avg,
                std: self.dpu.std,
            },
            entropy_history: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn parse(text: &str) -> Result<Self, ProfileFileError> {
        let p: Self = serde_json::from_str(text)?;
        p.to_baseline()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, ProfileFileError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_thresholds_as_strings() {
        let p = ProfileFile {
            version: 1,
            alpha_lin: 0.2,
            alpha_ang: 0.4,
            revision: 0,
            dpu: DpuSeed {
                avg: f64::INFINITY,
                std: f64::INFINITY,
            },
        };
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["dpu"]["avg"], "inf");
        assert_eq!(v["dpu"]["std"], "inf");
        assert_eq!(ProfileFile::parse(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn finite_round_trip() {
        let text = r#"{"alpha_lin": 0.125, "alpha_ang": 0.3, "revision": 2, "dpu": {"avg": 0.31, "std": 0.12}}"#;
        let p = ProfileFile::parse(text).unwrap();
        assert_eq!(p.version, 1);
        let b = p.to_baseline().unwrap();
        assert_eq!(b.profile.revision, 2);
        assert_eq!(b.profile.boundaries_lin.as_array()[0], -0.625);
        assert_eq!(b.thresholds.avg, 0.31);
        assert_eq!(ProfileFile::parse(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            r#"{"alpha_lin": 0, "alpha_ang": 0.3, "revision": 0, "dpu": {"avg": 1, "std": 1}}"#,
            r#"{"alpha_lin": 0.1, "alpha_ang": 0.3, "revision": 0, "dpu": {"avg": "infinity", "std": 1}}"#,
            r#"{"alpha_lin": 0.1, "alpha_ang": 0.3, "revision": 0, "dpu": {"avg": -1, "std": 1}}"#,
            r#"{"alpha_lin": 0.1, "alpha_ang": 0.3, "revision": 0}"#,
            r#"{"version": 2, "alpha_lin": 0.1, "alpha_ang": 0.3, "revision": 0, "dpu": {"avg": 1, "std": 1}}"#,
        ] {
            assert!(ProfileFile::parse(text).is_err(), "{text}");
        }
    }
}
