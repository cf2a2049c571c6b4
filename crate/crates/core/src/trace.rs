//! Per-iteration record of a run.

use alloc::string::String;
use alloc::vec::Vec;

use crate::analysis::{CheckResult, PotentialReport};
use crate::dynamics::StepConfig;
use crate::oracle::OracleResult;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TerminalStatus {
    MaxIter,
    TargetReached,
    /// Consecutive iterates agree to the stationary tolerance.
    Stationary,
    /// The support left by IRLS zeroing can no longer carry `b`.
    SupportCollapse,
    KernelError(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub instance_id: String,
    pub config: StepConfig,
    pub rows: Vec<PotentialReport>,
    /// `‖A·y^(k) − b‖∞`, parallel to `rows`.
    pub residuals: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub checks: Vec<CheckResult>,
    pub terminal_status: TerminalStatus,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub oracle: Option<OracleResult>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub column_names: Option<Vec<String>>,
    /// `y^(k)` for every row, when requested.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub iterates: Option<Vec<Vec<f64>>>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub notes: Vec<String>,
}

impl Trace {
    pub fn new(instance_id: String, config: StepConfig) -> Self {
        Self {
            instance_id,
            config,
            rows: Vec::new(),
            residuals: Vec::new(),
            checks: Vec::new(),
            terminal_status: TerminalStatus::MaxIter,
            oracle: None,
            column_names: None,
            iterates: None,
            notes: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&PotentialReport> {
        self.rows.last()
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `f64` that may be infinite: finite values as JSON numbers, the rest as
/// the strings `"inf"`, `"-inf"` and `"nan"`.
#[cfg(feature = "serde")]
pub mod extended_f64 {
    use core::fmt;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ExtendedVisitor;

    impl Visitor<'_> for ExtendedVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtendedVisitor)
    }
}
