use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::{PerZone, Zone};

/// Counts indexed `[predicted][actual]` over the four zones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; Zone::COUNT]; Zone::COUNT],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; Zone::COUNT]; Zone::COUNT]) -> ConfusionMatrix {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..Zone::COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, predicted: Zone) -> u64 {
        self.counts[predicted.index()].iter().sum()
    }

    pub fn column_sum(&self, actual: Zone) -> u64 {
        self.counts.iter().map(|r| r[actual.index()]).sum()
    }

    pub fn get(&self, predicted: Zone, actual: Zone) -> u64 {
        self.counts[predicted.index()][actual.index()]
    }
}

pub fn confusion_matrix(truth: &[Zone], predicted: &[Zone]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = [[0u64; Zone::COUNT]; Zone::COUNT];
    for (t, p) in truth.iter().zip(predicted) {
        counts[p.index()][t.index()] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    /// `None` when nothing was predicted as that zone.
    pub precision: PerZone<Option<f64>>,
    /// `None` when the zone never occurs in the truth.
    pub recall: PerZone<Option<f64>>,
}

pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let mut precision = PerZone([None; Zone::COUNT]);
    let mut recall = PerZone([None; Zone::COUNT]);
    for z in Zone::ALL {
        precision[z] = ratio(cm.get(z, z), cm.row_sum(z));
        recall[z] = ratio(cm.get(z, z), cm.column_sum(z));
    }
    Ok(ClassificationReport {
        matrix: cm.clone(),
        accuracy: cm.trace() as f64 / total as f64,
        precision,
        recall,
    })
}

pub(crate) fn percent(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "n/a".to_string(),
    }
}

impl ClassificationReport {
    /// Grid with predicted zones as rows, true zones as columns, class
    /// precision in the last column and class recall in the last row.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("accuracy: {}\n\n| |", percent(Some(self.accuracy)));
        for z in Zone::ALL {
            out.push_str(&format!(" true {z} |"));
        }
        out.push_str(" class precision |\n|---|");
        for _ in Zone::ALL {
            out.push_str("---:|");
        }
        out.push_str("---:|\n");
        for p in Zone::ALL {
            out.push_str(&format!("| pred. {p} |"));
            for t in Zone::ALL {
                out.push_str(&format!(" {} |", self.matrix.get(p, t)));
            }
            out.push_str(&format!(" {} |\n", percent(self.precision[p])));
        }
        out.push_str("| class recall |");
        for t in Zone::ALL {
            out.push_str(&format!(" {} |", percent(self.recall[t])));
        }
        out.push_str(" |\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_one_correct() {
        let cm = confusion_matrix(&[Zone::Bedroom, Zone::Office], &[Zone::Bedroom, Zone::Toilet]).unwrap();
        assert_eq!(cm.total(), 2);
        assert_eq!(cm.get(Zone::Toilet, Zone::Office), 1);
        let r = classification_report(&cm).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.precision[Zone::Toilet], Some(0.0));
        assert_eq!(r.recall[Zone::Office], Some(0.0));
        assert_eq!(r.precision[Zone::Kitchen], None);
        assert_eq!(r.recall[Zone::Kitchen], None);
    }

    #[test]
    fn perfect_and_single_sample() {
        let truth = [Zone::Kitchen, Zone::Toilet, Zone::Kitchen];
        let r = classification_report(&confusion_matrix(&truth, &truth).unwrap()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        let r = classification_report(&confusion_matrix(&[Zone::Office], &[Zone::Office]).unwrap()).unwrap();
        assert_eq!(r.precision[Zone::Office], Some(1.0));
        assert_eq!(r.recall[Zone::Office], Some(1.0));
    }

    #[test]
    fn input_errors() {
        assert_eq!(confusion_matrix(&[], &[]), Err(EvalError::Empty));
        assert!(matches!(
            confusion_matrix(&[Zone::Office], &[]),
            Err(EvalError::LengthMismatch { left: 1, right: 0 })
        ));
        assert!(classification_report(&ConfusionMatrix::from_counts([[0; 4]; 4])).is_err());
    }

    #[test]
    fn markdown_layout() {
        let r = classification_report(&confusion_matrix(&[Zone::Office], &[Zone::Office]).unwrap()).unwrap();
        let md = r.to_markdown();
        assert!(md.starts_with("accuracy: 100.00%\n"));
        assert!(md.contains("| pred. office | 0 | 0 | 1 | 0 | 100.00% |"));
        assert!(md.contains("| pred. bedroom | 0 | 0 | 0 | 0 | n/a |"));
        assert!(md.contains("| class recall | n/a | n/a | 100.00% | n/a | |"));
        assert!(md.contains("\n| | true bedroom | true kitchen |"));
    }
}
