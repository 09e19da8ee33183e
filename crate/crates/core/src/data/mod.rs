//! Observation records, CSV ingestion, deterministic splitting and synthetic
//! data generation.
//!
//! Three record shapes are supported:
//!
//! * [`RssiSample`]: one RSSI reading per zone scanner plus the true zone.
//! * [`ImuSample`]: six accelerometer/gyroscope channels plus the true zone.
//! * [`BeaconDistanceSample`]: distances (m) to three fixed beacons plus the
//!   ground-truth position (cm).
//!
//! A [`Dataset`] is a homogeneous ordered sequence of one record kind.

mod csv_io;
mod split;
mod synth;

pub use csv_io::{
    parse_beacon_csv, parse_imu_csv, parse_rssi_csv, read_beacon_csv, read_imu_csv, read_rssi_csv,
    write_beacon_csv, write_imu_csv, write_rssi_csv,
};
pub use split::{split_data, split_dataset_indices, split_indices, SplitConfig, SplitIndices};
pub use synth::{
    default_walk_beacons, default_walk_waypoints, generate_default_walk, generate_synthetic_imu, generate_synthetic_rssi,
    generate_synthetic_walk, Point,
};

use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentinel RSSI value written by a scanner that cannot see the beacon.
pub const RSSI_OUT_OF_RANGE: f64 = -120.0;

/// Upper bound of a valid RSSI reading.
pub const RSSI_MAX: f64 = 0.0;

/// Nominal IMU sampling rate of the wearable, in Hz.
pub const IMU_SAMPLE_RATE_HZ: f64 = 20.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: csv error: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{path}: row {row}: {message}")]
    Validation {
        path: String,
        row: usize,
        message: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid split configuration: {0}")]
    InvalidSplit(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

/// Activity-based zone of the simulated smart home.
///
/// The declaration order is the canonical report-column order and the
/// tie-break order used everywhere a "first zone wins" rule applies.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Bedroom,
    Kitchen,
    Office,
    Toilet,
}

impl Zone {
    pub const COUNT: usize = 4;
    pub const ALL: [Zone; Zone::COUNT] = [Zone::Bedroom, Zone::Kitchen, Zone::Office, Zone::Toilet];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Zone> {
        Zone::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Bedroom => "bedroom",
            Zone::Kitchen => "kitchen",
            Zone::Office => "office",
            Zone::Toilet => "toilet",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown zone `{0}`")]
pub struct UnknownZone(pub String);

impl FromStr for Zone {
    type Err = UnknownZone;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bedroom" => Ok(Zone::Bedroom),
            "kitchen" => Ok(Zone::Kitchen),
            "office" => Ok(Zone::Office),
            "toilet" => Ok(Zone::Toilet),
            _ => Err(UnknownZone(s.trim().to_string())),
        }
    }
}

/// One value per zone, indexed by [`Zone`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerZone<T>(pub [T; Zone::COUNT]);

impl<T: Copy> PerZone<T> {
    pub fn splat(value: T) -> Self {
        PerZone([value; Zone::COUNT])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Zone, T)> + '_ {
        Zone::ALL.iter().map(move |&z| (z, self.0[z.index()]))
    }
}

impl<T> Index<Zone> for PerZone<T> {
    type Output = T;

    fn index(&self, zone: Zone) -> &T {
        &self.0[zone.index()]
    }
}

impl<T> IndexMut<Zone> for PerZone<T> {
    fn index_mut(&mut self, zone: Zone) -> &mut T {
        &mut self.0[zone.index()]
    }
}

/// RSSI readings of the four zone scanners for one beacon advertisement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    pub readings: PerZone<f64>,
    pub label: Zone,
}

impl RssiSample {
    /// Checks the `[-120, 0]` range of every reading.
    pub fn validate(&self) -> Result<(), String> {
        for (zone, value) in self.readings.iter() {
            if !value.is_finite() || !(RSSI_OUT_OF_RANGE..=RSSI_MAX).contains(&value) {
                return Err(format!(
                    "rssi reading for {zone} is {value}, outside [{RSSI_OUT_OF_RANGE}, {RSSI_MAX}]"
                ));
            }
        }
        Ok(())
    }
}

/// Accelerometer and gyroscope channels of the waist-worn wearable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
    pub label: Zone,
    pub activity_tag: Option<String>,
}

impl ImuSample {
    pub fn channels(&self) -> [f64; 6] {
        [self.ax, self.ay, self.az, self.gx, self.gy, self.gz]
    }
}

/// Distances to three fixed beacons with the ground-truth planar position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconDistanceSample {
    /// Meters.
    pub distance_a: f64,
    pub distance_b: f64,
    pub distance_c: f64,
    /// Centimeters.
    pub position_x: f64,
    pub position_y: f64,
    /// Kept verbatim apart from surrounding whitespace; never parsed.
    pub timestamp: String,
}

impl BeaconDistanceSample {
    pub fn distances(&self) -> [f64; 3] {
        [self.distance_a, self.distance_b, self.distance_c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaTag {
    Rssi,
    Imu,
    Beacon,
}

/// A record kind that can live in a [`Dataset`].
pub trait Record: Clone {
    const SCHEMA: SchemaTag;

    /// Class label used for stratified splitting, if the record has one.
    fn stratum(&self) -> Option<Zone>;
}

impl Record for RssiSample {
    const SCHEMA: SchemaTag = SchemaTag::Rssi;

    fn stratum(&self) -> Option<Zone> {
        Some(self.label)
    }
}

impl Record for ImuSample {
    const SCHEMA: SchemaTag = SchemaTag::Imu;

    fn stratum(&self) -> Option<Zone> {
        Some(self.label)
    }
}

impl Record for BeaconDistanceSample {
    const SCHEMA: SchemaTag = SchemaTag::Beacon;

    fn stratum(&self) -> Option<Zone> {
        None
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    File(PathBuf),
    Synthetic,
    /// Derived from another dataset (for example one side of a split).
    Derived(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File(p) => write!(f, "{}", p.display()),
            Source::Synthetic => f.write_str("synthetic"),
            Source::Derived(s) => f.write_str(s),
        }
    }
}

/// Ordered, homogeneous sequence of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<R> {
    pub rows: Vec<R>,
    pub source: Source,
}

impl<R: Record> Dataset<R> {
    pub fn new(rows: Vec<R>, source: Source) -> Self {
        Dataset { rows, source }
    }

    pub fn schema_tag(&self) -> SchemaTag {
        R::SCHEMA
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at `indices`, in the order given.
    pub fn select(&self, indices: &[usize], label: &str) -> Dataset<R> {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            source: Source::Derived(format!("{} [{label}]", self.source)),
        }
    }
}

impl Dataset<BeaconDistanceSample> {
    /// Number of rows holding at least one distance of exactly 0.0.
    ///
    /// Such rows are kept as real readings; the count is surfaced so that
    /// reports can flag them.
    pub fn zero_distance_rows(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.distances().contains(&0.0))
            .count()
    }
}

impl Dataset<RssiSample> {
    pub fn labels(&self) -> Vec<Zone> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

impl Dataset<ImuSample> {
    pub fn labels(&self) -> Vec<Zone> {
        self.rows.iter().map(|r| r.label).collect()
    }
}
