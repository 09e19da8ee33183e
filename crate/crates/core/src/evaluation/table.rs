use serde::{Deserialize, Serialize};

pub const TABLE_HEADERS: [&str; 3] = ["RMSE in X-Direction", "RMSE in Y-Direction", "Horizontal Error"];

/// Two decimals, the precision reports show centimetre errors at.
pub fn format_cm(v: f64) -> String {
    format!("{v:.2}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    /// `[rmse_x, rmse_y, horizontal]`, or `None` when the model failed.
    pub metrics: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    fn cells(row: &ComparisonRow) -> [String; 3] {
        match row.metrics {
            Some(m) => m.map(format_cm),
            None => ["failed".to_string(), "failed".to_string(), "failed".to_string()],
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("| Learning Approach | {} |\n|---|---:|---:|---:|\n", TABLE_HEADERS.join(" | "));
        for row in &self.rows {
            out.push_str(&format!("| {} | {} |\n", row.name, Self::cells(row).join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("Learning Approach,{}\n", TABLE_HEADERS.join(","));
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.name, Self::cells(row).join(",")));
        }
        out
    }
}
