//! Complex activities modelled as weighted atomic activities and the context
//! attributes they act on.
//!
//! Element indices are 0-based in the API. The plain-text model files
//! (see [`parse_activity_models`]) use the 1-based `At1..Atn` numbering.

mod file;

pub use file::{load_activity_models, parse_activity_models};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the "weights sum to one" invariant.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Slack on the completion threshold comparison.
pub const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ActivityError {
    #[error("element index {index} out of range for model `{model}` with {len} elements")]
    IndexOutOfRange {
        model: String,
        index: usize,
        len: usize,
    },
    #[error("{} models but {} zone names", .models, .zones)]
    LengthMismatch { models: usize, zones: usize },
    #[error("zone name `{0}` used twice; activity-based zones must not overlap")]
    OverlappingZone(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no models found")]
    NoModels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedElement {
    pub name: String,
    pub weight: f64,
}

impl WeightedElement {
    pub fn new(name: impl Into<String>, weight: f64) -> Self {
        WeightedElement {
            name: name.into(),
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexActivityModel {
    pub name: String,
    /// Atomic activities.
    pub atomic: Vec<WeightedElement>,
    /// Context attributes, index-aligned with `atomic`.
    pub context: Vec<WeightedElement>,
    pub core: BTreeSet<usize>,
    pub start: BTreeSet<usize>,
    pub end: BTreeSet<usize>,
    /// Weighted-sum completion threshold.
    pub threshold: f64,
}

/// A single broken invariant of a [`ComplexActivityModel`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    LengthMismatch { atomic: usize, context: usize },
    BadWeight { element: String, weight: f64 },
    AtomicWeightSum(f64),
    ContextWeightSum(f64),
    CoreSeparation {
        kind: ElementKind,
        min_core: f64,
        max_non_core: f64,
    },
    IndexOutOfRange { set: &'static str, index: usize },
    EmptyStart,
    EmptyEnd,
    BadThreshold(f64),
    ThresholdAboveTotal { threshold: f64, total: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    Atomic,
    Context,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { atomic, context } => write!(
                f,
                "length mismatch: {atomic} atomic activities vs {context} context attributes"
            ),
            Violation::BadWeight { element, weight } => {
                write!(f, "bad weight: `{element}` has weight {weight}, expected (0, 1]")
            }
            Violation::AtomicWeightSum(s) => {
                write!(f, "weight sum: atomic weights sum to {s}, expected 1")
            }
            Violation::ContextWeightSum(s) => {
                write!(f, "weight sum: context weights sum to {s}, expected 1")
            }
            Violation::CoreSeparation {
                kind,
                min_core,
                max_non_core,
            } => write!(
                f,
                "core separation: {kind:?} min core weight {min_core} is not above max non-core weight {max_non_core}"
            ),
            Violation::IndexOutOfRange { set, index } => {
                write!(f, "index out of range: {set} set holds At{}", index + 1)
            }
            Violation::EmptyStart => f.write_str("start set is empty"),
            Violation::EmptyEnd => f.write_str("end set is empty"),
            Violation::BadThreshold(t) => write!(f, "threshold {t} outside (0, 1]"),
            Violation::ThresholdAboveTotal { threshold, total } => {
                write!(f, "threshold {threshold} exceeds total weight {total}")
            }
        }
    }
}

impl ComplexActivityModel {
    pub fn len(&self) -> usize {
        self.atomic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atomic.is_empty()
    }

    /// Every broken invariant; empty when the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.atomic.len();
        if n != self.context.len() {
            out.push(Violation::LengthMismatch {
                atomic: n,
                context: self.context.len(),
            });
        }
        for e in self.atomic.iter().chain(&self.context) {
            if !(e.weight.is_finite() && e.weight > 0.0 && e.weight <= 1.0) {
                out.push(Violation::BadWeight {
                    element: e.name.clone(),
                    weight: e.weight,
                });
            }
        }
        let atomic_sum: f64 = self.atomic.iter().map(|e| e.weight).sum();
        if (atomic_sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            out.push(Violation::AtomicWeightSum(atomic_sum));
        }
        let context_sum: f64 = self.context.iter().map(|e| e.weight).sum();
        if (context_sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            out.push(Violation::ContextWeightSum(context_sum));
        }
        for (set, indices) in [("core", &self.core), ("start", &self.start), ("end", &self.end)] {
            for &i in indices.iter().filter(|&&i| i >= n) {
                out.push(Violation::IndexOutOfRange { set, index: i });
            }
        }
        for (kind, elems) in [
            (ElementKind::Atomic, &self.atomic),
            (ElementKind::Context, &self.context),
        ] {
            if let Some(v) = core_separation(kind, elems, &self.core) {
                out.push(v);
            }
        }
        if self.start.is_empty() {
            out.push(Violation::EmptyStart);
        }
        if self.end.is_empty() {
            out.push(Violation::EmptyEnd);
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0 && self.threshold <= 1.0) {
            out.push(Violation::BadThreshold(self.threshold));
        } else if self.threshold > atomic_sum + THRESHOLD_SLACK {
            out.push(Violation::ThresholdAboveTotal {
                threshold: self.threshold,
                total: atomic_sum,
            });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn check_indices(&self, observed: &BTreeSet<usize>) -> Result<(), ActivityError> {
        match observed.iter().find(|&&i| i >= self.atomic.len()) {
            Some(&index) => Err(ActivityError::IndexOutOfRange {
                model: self.name.clone(),
                index,
                len: self.atomic.len(),
            }),
            None => Ok(()),
        }
    }

    /// Sum of the atomic weights of the observed elements.
    pub fn completion_score(&self, observed: &BTreeSet<usize>) -> Result<f64, ActivityError> {
        self.check_indices(observed)?;
        Ok(observed.iter().map(|&i| self.atomic[i].weight).sum())
    }

    /// All core elements observed and the weighted sum reaches the threshold.
    pub fn is_complete(&self, observed: &BTreeSet<usize>) -> Result<bool, ActivityError> {
        let score = self.completion_score(observed)?;
        Ok(self.core.is_subset(observed) && score >= self.threshold - THRESHOLD_SLACK)
    }
}

fn core_separation(
    kind: ElementKind,
    elems: &[WeightedElement],
    core: &BTreeSet<usize>,
) -> Option<Violation> {
    let min_core = core
        .iter()
        .filter_map(|&i| elems.get(i))
        .map(|e| e.weight)
        .reduce(f64::min)?;
    let max_non_core = elems
        .iter()
        .enumerate()
        .filter(|(i, _)| !core.contains(i))
        .map(|(_, e)| e.weight)
        .reduce(f64::max)?;
    (min_core <= max_non_core).then_some(Violation::CoreSeparation {
        kind,
        min_core,
        max_non_core,
    })
}

/// Positional pairing of activities with non-overlapping zone names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub entries: Vec<(String, String)>,
}

impl ZoneMap {
    pub fn zone_of(&self, activity: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(a, _)| a == activity)
            .map(|(_, z)| z.as_str())
    }
}

pub fn derive_zone_map(
    models: &[ComplexActivityModel],
    zone_names: &[&str],
) -> Result<ZoneMap, ActivityError> {
    if models.len() != zone_names.len() {
        return Err(ActivityError::LengthMismatch {
            models: models.len(),
            zones: zone_names.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for z in zone_names {
        if !seen.insert(*z) {
            return Err(ActivityError::OverlappingZone(z.to_string()));
        }
    }
    Ok(ZoneMap {
        entries: models
            .iter()
            .zip(zone_names)
            .map(|(m, z)| (m.name.clone(), z.to_string()))
            .collect(),
    })
}
