//! Prediction tables as CSV text.

use super::{CoordPredictionRow, ZonePredictionRow};
use crate::data::Zone;

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

/// `row, location, prediction(location), confidence(<zone>)...`
pub fn zone_predictions_csv(rows: &[ZonePredictionRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_string(), "location".into(), "prediction(location)".into()];
    header.extend(Zone::ALL.iter().map(|z| format!("confidence({z})")));
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.row.to_string(), r.actual.to_string(), r.predicted.to_string()];
        rec.extend(r.confidence.0.iter().map(|c| c.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    finish(w)
}

/// `row, Position <axis>, prediction(Position <axis>), Distance A, B, C, Time`
pub fn coord_predictions_csv(rows: &[CoordPredictionRow], axis: char) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let target = format!("Position {axis}");
    w.write_record([
        "row".to_string(),
        target.clone(),
        format!("prediction({target})"),
        "Distance A".into(),
        "Distance B".into(),
        "Distance C".into(),
        "Time".into(),
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.row.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
            r.distance_a.to_string(),
            r.distance_b.to_string(),
            r.distance_c.to_string(),
            r.time.clone(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
