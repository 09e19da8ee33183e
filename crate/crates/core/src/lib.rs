//! Indoor localization benchmark toolkit.
//!
//! Zone classification from BLE RSSI and IMU readings, coordinate regression
//! from beacon distances, eight from-scratch learners and the localization
//! error metrics used to compare them.

pub mod activity;
pub mod data;
pub mod evaluation;
pub mod learners;
pub mod pipelines;
