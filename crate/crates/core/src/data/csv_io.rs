//! Header-driven CSV readers and writers for the three record shapes.
//!
//! Column names are matched after normalization: lowercased, with every run
//! of non-alphanumeric characters collapsed to `_` (so `Position X`,
//! `position-x` and `POSITION_X` all match `position_x`). Column order is
//! free. Row numbers in errors count data rows from 1, excluding the header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{
    BeaconDistanceSample, DataError, Dataset, ImuSample, PerZone, RssiSample, Source, Zone,
};

const BEACON_COLUMNS: [&str; 6] = [
    "position_x",
    "position_y",
    "distance_a",
    "distance_b",
    "distance_c",
    "time",
];
const IMU_COLUMNS: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"];

fn normalize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for ch in name.trim().chars() {
        if ch.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

struct Table {
    name: String,
    headers: Vec<String>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R, name: &str) -> Result<Table, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let csv_err = |e: csv::Error| DataError::Csv {
            path: name.to_string(),
            message: e.to_string(),
        };
        let headers = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(normalize)
            .collect();
        let records = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Ok(Table {
            name: name.to_string(),
            headers,
            records,
        })
    }

    /// Index of the first column matching any of `aliases`.
    fn find(&self, aliases: &[&str]) -> Option<usize> {
        aliases
            .iter()
            .find_map(|a| self.headers.iter().position(|h| h == a))
    }

    fn require(&self, aliases: &[&str]) -> Result<usize, DataError> {
        self.find(aliases).ok_or_else(|| DataError::MissingColumn {
            path: self.name.clone(),
            column: aliases[0].to_string(),
        })
    }

    fn cell<'a>(&self, record: &'a csv::StringRecord, col: usize) -> &'a str {
        record.get(col).unwrap_or("")
    }

    fn number(&self, row: usize, record: &csv::StringRecord, col: usize) -> Result<f64, DataError> {
        let raw = self.cell(record, col);
        let value: f64 = raw.parse().map_err(|_| DataError::Parse {
            path: self.name.clone(),
            row,
            column: self.headers[col].clone(),
            message: format!("`{raw}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(DataError::Parse {
                path: self.name.clone(),
                row,
                column: self.headers[col].clone(),
                message: format!("`{raw}` is not finite"),
            });
        }
        Ok(value)
    }

    fn zone(&self, row: usize, record: &csv::StringRecord, col: usize) -> Result<Zone, DataError> {
        self.cell(record, col)
            .parse()
            .map_err(|e: super::UnknownZone| DataError::Parse {
                path: self.name.clone(),
                row,
                column: self.headers[col].clone(),
                message: e.to_string(),
            })
    }
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_beacon_csv(path: &Path) -> Result<Dataset<BeaconDistanceSample>, DataError> {
    let mut ds = read_beacon_csv(open(path)?, &path.display().to_string())?;
    ds.source = Source::File(path.to_path_buf());
    Ok(ds)
}

pub fn parse_rssi_csv(path: &Path) -> Result<Dataset<RssiSample>, DataError> {
    let mut ds = read_rssi_csv(open(path)?, &path.display().to_string())?;
    ds.source = Source::File(path.to_path_buf());
    Ok(ds)
}

pub fn parse_imu_csv(path: &Path) -> Result<Dataset<ImuSample>, DataError> {
    let mut ds = read_imu_csv(open(path)?, &path.display().to_string())?;
    ds.source = Source::File(path.to_path_buf());
    Ok(ds)
}

pub fn read_beacon_csv<R: Read>(
    reader: R,
    name: &str,
) -> Result<Dataset<BeaconDistanceSample>, DataError> {
    let table = Table::read(reader, name)?;
    let cols = BEACON_COLUMNS
        .iter()
        .map(|c| table.require(&[c]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(table.records.len());
    for (i, rec) in table.records.iter().enumerate() {
        let row = i + 1;
        let sample = BeaconDistanceSample {
            position_x: table.number(row, rec, cols[0])?,
            position_y: table.number(row, rec, cols[1])?,
            distance_a: table.number(row, rec, cols[2])?,
            distance_b: table.number(row, rec, cols[3])?,
            distance_c: table.number(row, rec, cols[4])?,
            timestamp: table.cell(rec, cols[5]).to_string(),
        };
        if let Some(d) = sample.distances().iter().find(|d| **d < 0.0) {
            return Err(DataError::Validation {
                path: table.name.clone(),
                row,
                message: format!("distance {d} is negative"),
            });
        }
        rows.push(sample);
    }
    Ok(Dataset::new(rows, Source::Derived(name.to_string())))
}

pub fn read_rssi_csv<R: Read>(reader: R, name: &str) -> Result<Dataset<RssiSample>, DataError> {
    let table = Table::read(reader, name)?;
    let mut zone_cols = [0usize; Zone::COUNT];
    for zone in Zone::ALL {
        let prefixed = format!("rssi_{zone}");
        zone_cols[zone.index()] = table.require(&[prefixed.as_str(), zone.as_str()])?;
    }
    let label_col = table.require(&["location"])?;
    let mut rows = Vec::with_capacity(table.records.len());
    for (i, rec) in table.records.iter().enumerate() {
        let row = i + 1;
        let mut readings = PerZone::splat(0.0);
        for zone in Zone::ALL {
            readings[zone] = table.number(row, rec, zone_cols[zone.index()])?;
        }
        let sample = RssiSample {
            readings,
            label: table.zone(row, rec, label_col)?,
        };
        sample.validate().map_err(|message| DataError::Validation {
            path: table.name.clone(),
            row,
            message,
        })?;
        rows.push(sample);
    }
    Ok(Dataset::new(rows, Source::Derived(name.to_string())))
}

pub fn read_imu_csv<R: Read>(reader: R, name: &str) -> Result<Dataset<ImuSample>, DataError> {
    let table = Table::read(reader, name)?;
    let cols = IMU_COLUMNS
        .iter()
        .map(|c| table.require(&[c]))
        .collect::<Result<Vec<_>, _>>()?;
    let label_col = table.require(&["location"])?;
    let tag_col = table.find(&["activity"]);
    let mut rows = Vec::with_capacity(table.records.len());
    for (i, rec) in table.records.iter().enumerate() {
        let row = i + 1;
        let mut ch = [0.0; 6];
        for (slot, &col) in ch.iter_mut().zip(&cols) {
            *slot = table.number(row, rec, col)?;
        }
        let activity_tag = tag_col
            .map(|c| table.cell(rec, c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        rows.push(ImuSample {
            ax: ch[0],
            ay: ch[1],
            az: ch[2],
            gx: ch[3],
            gy: ch[4],
            gz: ch[5],
            label: table.zone(row, rec, label_col)?,
            activity_tag,
        });
    }
    Ok(Dataset::new(rows, Source::Derived(name.to_string())))
}

fn csv_write_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

// `{}` on f64 prints the shortest string that parses back to the same bits.

pub fn write_beacon_csv<W: Write>(
    dataset: &Dataset<BeaconDistanceSample>,
    writer: W,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BEACON_COLUMNS).map_err(csv_write_err)?;
    for r in &dataset.rows {
        w.write_record([
            r.position_x.to_string(),
            r.position_y.to_string(),
            r.distance_a.to_string(),
            r.distance_b.to_string(),
            r.distance_c.to_string(),
            r.timestamp.clone(),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush()
}

pub fn write_rssi_csv<W: Write>(dataset: &Dataset<RssiSample>, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = Zone::ALL.iter().map(|z| format!("rssi_{z}")).collect();
    header.push("location".into());
    w.write_record(&header).map_err(csv_write_err)?;
    for r in &dataset.rows {
        let mut rec: Vec<String> = r.readings.iter().map(|(_, v)| v.to_string()).collect();
        rec.push(r.label.to_string());
        w.write_record(&rec).map_err(csv_write_err)?;
    }
    w.flush()
}

pub fn write_imu_csv<W: Write>(dataset: &Dataset<ImuSample>, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = IMU_COLUMNS.to_vec();
    header.extend(["location", "activity"]);
    w.write_record(&header).map_err(csv_write_err)?;
    for r in &dataset.rows {
        let mut rec: Vec<String> = r.channels().iter().map(f64::to_string).collect();
        rec.push(r.label.to_string());
        rec.push(r.activity_tag.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_write_err)?;
    }
    w.flush()
}
