//! Plain-text activity model files.
//!
//! ```text
//! # comments start with '#'
//! model: Preparing Breakfast
//! threshold: 0.73
//! 1, Standing, 0.10, Lights on, 0.10, start
//! 3, Putting bread into Toaster, 0.15, Bread Present, 0.15, core
//! 6, Taking out bread, 0.18, Bread cool, 0.18, core end
//! ```
//!
//! Element lines are `index, atomic_name, weight, context_name,
//! context_weight[, flags]`, with 1-based sequential indices and flags drawn
//! from `core`, `start`, `end` (separated by whitespace, `|` or further
//! commas). Each `model:` line opens a new block.

use std::collections::BTreeSet;
use std::path::Path;

use super::{ActivityError, ComplexActivityModel, WeightedElement};

struct Draft {
    line: usize,
    model: ComplexActivityModel,
    threshold_seen: bool,
}

impl Draft {
    fn finish(self) -> Result<ComplexActivityModel, ActivityError> {
        if !self.threshold_seen {
            return Err(ActivityError::Syntax {
                line: self.line,
                message: format!("model `{}` has no threshold line", self.model.name),
            });
        }
        if self.model.atomic.is_empty() {
            return Err(ActivityError::Syntax {
                line: self.line,
                message: format!("model `{}` has no element lines", self.model.name),
            });
        }
        Ok(self.model)
    }
}

fn number(line: usize, field: &str, what: &str) -> Result<f64, ActivityError> {
    field.trim().parse().map_err(|_| ActivityError::Syntax {
        line,
        message: format!("{what} `{}` is not a number", field.trim()),
    })
}

pub fn parse_activity_models(text: &str) -> Result<Vec<ComplexActivityModel>, ActivityError> {
    let mut models = Vec::new();
    let mut current: Option<Draft> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| ActivityError::Syntax {
            line: line_no,
            message,
        };
        if let Some((key, value)) = line.split_once(':') {
            match key.trim().to_ascii_lowercase().as_str() {
                "model" => {
                    if let Some(done) = current.take() {
                        models.push(done.finish()?);
                    }
                    current = Some(Draft {
                        line: line_no,
                        model: ComplexActivityModel {
                            name: value.trim().to_string(),
                            atomic: Vec::new(),
                            context: Vec::new(),
                            core: BTreeSet::new(),
                            start: BTreeSet::new(),
                            end: BTreeSet::new(),
                            threshold: f64::NAN,
                        },
                        threshold_seen: false,
                    });
                    continue;
                }
                "threshold" => {
                    let draft = current
                        .as_mut()
                        .ok_or_else(|| syntax("threshold before any `model:` line".into()))?;
                    draft.model.threshold = number(line_no, value, "threshold")?;
                    draft.threshold_seen = true;
                    continue;
                }
                _ => {}
            }
        }
        let draft = current
            .as_mut()
            .ok_or_else(|| syntax("element line before any `model:` line".into()))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 5 {
            return Err(syntax(format!(
                "expected `index, atomic, weight, context, context_weight[, flags]`, got {} fields",
                fields.len()
            )));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| syntax(format!("index `{}` is not an integer", fields[0])))?;
        let expected = draft.model.atomic.len() + 1;
        if index != expected {
            return Err(syntax(format!("index {index} out of sequence, expected {expected}")));
        }
        let slot = index - 1;
        draft.model.atomic.push(WeightedElement::new(
            fields[1],
            number(line_no, fields[2], "weight")?,
        ));
        draft.model.context.push(WeightedElement::new(
            fields[3],
            number(line_no, fields[4], "context weight")?,
        ));
        for flag in fields[5..]
            .iter()
            .flat_map(|f| f.split(|c: char| c.is_whitespace() || c == '|'))
            .filter(|f| !f.is_empty())
        {
            let set = match flag.to_ascii_lowercase().as_str() {
                "core" => &mut draft.model.core,
                "start" => &mut draft.model.start,
                "end" => &mut draft.model.end,
                other => return Err(syntax(format!("unknown flag `{other}`"))),
            };
            set.insert(slot);
        }
    }
    if let Some(done) = current.take() {
        models.push(done.finish()?);
    }
    if models.is_empty() {
        return Err(ActivityError::NoModels);
    }
    Ok(models)
}

pub fn load_activity_models(path: &Path) -> Result<Vec<ComplexActivityModel>, ActivityError> {
    let text = std::fs::read_to_string(path).map_err(|source| ActivityError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_activity_models(&text)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{eating_lunch, preparing_breakfast};
    use super::*;

    const FIXTURE: &str = include_str!("../../fixtures/adl_models.txt");

    #[test]
    fn shipped_fixture_matches_tables() {
        let models = parse_activity_models(FIXTURE).unwrap();
        assert_eq!(models.len(), 2);
        for (parsed, expected) in models.iter().zip([preparing_breakfast(), eating_lunch()]) {
            assert_eq!(parsed.name, expected.name);
            assert_eq!(parsed.threshold, expected.threshold);
            assert_eq!(parsed.core, expected.core);
            assert_eq!(parsed.start, expected.start);
            assert_eq!(parsed.end, expected.end);
            let w: Vec<f64> = parsed.atomic.iter().map(|e| e.weight).collect();
            let we: Vec<f64> = expected.atomic.iter().map(|e| e.weight).collect();
            assert_eq!(w, we);
            assert!(parsed.is_valid(), "{:?}", parsed.validate());
        }
        assert_eq!(models[0].atomic[1].name, "Walking Towards Toaster");
        assert_eq!(models[1].context[5].name, "Food Quality and Taste");
    }

    #[test]
    fn empty_text_has_no_models() {
        assert!(matches!(parse_activity_models(""), Err(ActivityError::NoModels)));
        assert!(matches!(
            parse_activity_models("# only a comment\n\n"),
            Err(ActivityError::NoModels)
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "model: X\nthreshold: 0.5\n1, a, 0.5, b, 0.5, start\n3, c, 0.5, d, 0.5, end\n";
        match parse_activity_models(text) {
            Err(ActivityError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "model: X\n1, a, 0.5, b, 0.5, sometimes\n";
        assert!(parse_activity_models(text).is_err());
        let text = "model: X\n1, a, 0.5, b, 0.5, start\n";
        assert!(parse_activity_models(text).is_err(), "missing threshold");
    }

    #[test]
    fn flags_may_be_comma_or_space_separated() {
        let text = "model: X\nthreshold: 1\n1, a, 0.5, b, 0.5, start, core\n2, c, 0.5, d, 0.5, core|end\n";
        let m = &parse_activity_models(text).unwrap()[0];
        assert_eq!(m.core, [0, 1].into());
        assert_eq!(m.start, [0].into());
        assert_eq!(m.end, [1].into());
    }
}
