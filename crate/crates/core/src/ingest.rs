//! Estimating a system from recorded trial streams.
//!
//! Frequencies are kept as exact rationals (count over total) with no
//! smoothing; zero-count outcomes get mass 0 over the dense support. Trial
//! order is deliberately ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rational::Q;
use crate::system::{
    build_system, ContentSpec, ContextSpec, PmfEntry, System, SystemSpec,
};

/// One recorded trial: the context it was run in and one outcome label per
/// content, in the context's declared content order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub context: String,
    pub values: Vec<String>,
}

/// A system skeleton: contents and contexts, no pmfs yet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    pub name: String,
    pub contents: Vec<ContentSpec>,
    pub contexts: Vec<DesignContext>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignContext {
    pub id: String,
    pub contents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextCounts {
    pub context: String,
    pub total: usize,
    /// Observed tuples and their counts, in first-seen-in-support order.
    pub counts: Vec<(Vec<String>, usize)>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("trial references unknown context {0}")]
    UnknownContext(String),
    #[error("unknown condition tag {0}")]
    UnknownTag(String),
    #[error("context {context}: value {value} outside the declared alphabet")]
    AlphabetViolation { context: String, value: String },
    #[error("context {context}: expected {expected} values per trial, got {got}")]
    ArityMismatch {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("declared context {0} has no trials")]
    EmptyContext(String),
    #[error("malformed trials line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error(transparent)]
    System(#[from] crate::system::SystemError),
}

/// Counts occurrences per context and normalizes to exact relative
/// frequencies. Every declared context must appear in at least one trial.
pub fn estimate_system(
    trials: &[TrialRecord],
    design: &Design,
) -> Result<(System, Vec<ContextCounts>), IngestError> {
    let mut per_ctx: BTreeMap<&str, BTreeMap<Vec<String>, usize>> = BTreeMap::new();
    for t in trials {
        let ctx = design
            .contexts
            .iter()
            .find(|c| c.id == t.context)
            .ok_or_else(|| IngestError::UnknownContext(t.context.clone()))?;
        if t.values.len() != ctx.contents.len() {
            return Err(IngestError::ArityMismatch {
                context: ctx.id.clone(),
                expected: ctx.contents.len(),
                got: t.values.len(),
            });
        }
        for (pos, v) in t.values.iter().enumerate() {
            let content = design
                .contents
                .iter()
                .find(|c| c.id == ctx.contents[pos])
                .ok_or_else(|| {
                    IngestError::System(crate::system::SystemError::UnknownContentRef(
                        ctx.contents[pos].clone(),
                    ))
                })?;
            if !content.outcomes.contains(v) {
                return Err(IngestError::AlphabetViolation {
                    context: ctx.id.clone(),
                    value: v.clone(),
                });
            }
        }
        *per_ctx
            .entry(ctx.id.as_str())
            .or_default()
            .entry(t.values.clone())
            .or_default() += 1;
    }

    let mut context_specs = Vec::new();
    let mut all_counts = Vec::new();
    for ctx in &design.contexts {
        let counts = per_ctx
            .get(ctx.id.as_str())
            .ok_or_else(|| IngestError::EmptyContext(ctx.id.clone()))?;
        let total: usize = counts.values().sum();
        let pmf = counts
            .iter()
            .map(|(values, &c)| PmfEntry {
                values: values.clone(),
                p: Q::new(c as i64, total as i64),
            })
            .collect();
        context_specs.push(ContextSpec {
            id: ctx.id.clone(),
            contents: ctx.contents.clone(),
            pmf,
        });
        all_counts.push(ContextCounts {
            context: ctx.id.clone(),
            total,
            counts: counts.iter().map(|(v, &c)| (v.clone(), c)).collect(),
        });
    }
    let spec = SystemSpec {
        name: design.name.clone(),
        contents: design.contents.clone(),
        contexts: context_specs,
        identity_classes: None,
    };
    Ok((build_system(&spec)?, all_counts))
}

/// Conditionalization: recorded condition tags split the stream, one
/// declared context per tag; the probabilities of the tags themselves are
/// discarded. Tags are context ids.
pub fn conditionalize(
    trials: &[(String, Vec<String>)],
    design: &Design,
) -> Result<System, IngestError> {
    let records: Vec<TrialRecord> = trials
        .iter()
        .map(|(tag, values)| {
            if !design.contexts.iter().any(|c| c.id == *tag) {
                return Err(IngestError::UnknownTag(tag.clone()));
            }
            Ok(TrialRecord {
                context: tag.clone(),
                values: values.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    let (system, _) = estimate_system(&records, design)?;
    Ok(system)
}

/// Parses the trials CSV format: header `context,v1,v2,...`, one row per
/// trial, values positional in the context's content order, `#` comments.
pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>, IngestError> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_header {
            if fields.first() != Some(&"context") {
                return Err(IngestError::MalformedCsv {
                    line: lineno + 1,
                    reason: "header must start with \"context\"".into(),
                });
            }
            saw_header = true;
            continue;
        }
        if fields.len() < 2 || fields[0].is_empty() {
            return Err(IngestError::MalformedCsv {
                line: lineno + 1,
                reason: "expected context,v1[,v2,...]".into(),
            });
        }
        out.push(TrialRecord {
            context: fields[0].to_string(),
            values: fields[1..].iter().map(|s| s.to_string()).collect(),
        });
    }
    if !saw_header {
        return Err(IngestError::MalformedCsv {
            line: 0,
            reason: "missing header".into(),
        });
    }
    Ok(out)
}

impl Design {
    /// A design is a System JSON with the pmfs left out; extra pmf fields
    /// in the input are ignored.
    pub fn from_json(text: &str) -> Result<Design, serde_json::Error> {
        #[derive(Deserialize)]
        struct Loose {
            name: String,
            contents: Vec<ContentSpec>,
            contexts: Vec<LooseContext>,
        }
        #[derive(Deserialize)]
        struct LooseContext {
            id: String,
            contents: Vec<String>,
        }
        let loose: Loose = serde_json::from_str(text)?;
        Ok(Design {
            name: loose.name,
            contents: loose.contents,
            contexts: loose
                .contexts
                .into_iter()
                .map(|c| DesignContext {
                    id: c.id,
                    contents: c.contents,
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat_design() -> Design {
        Design {
            name: "pat".into(),
            contents: vec![ContentSpec {
                id: "C".into(),
                outcomes: vec!["00".into(), "01".into(), "10".into(), "11".into()],
            }],
            contexts: vec![DesignContext {
                id: "c".into(),
                contents: vec!["C".into()],
            }],
        }
    }

    /// The nine-symbol monitor sequence.
    pub const MONITOR: [&str; 9] = ["01", "11", "11", "10", "10", "10", "11", "11", "01"];

    #[test]
    fn nine_symbol_sequence_counts_exactly() {
        let trials: Vec<TrialRecord> = MONITOR
            .iter()
            .map(|v| TrialRecord {
                context: "c".into(),
                values: vec![v.to_string()],
            })
            .collect();
        let (sys, counts) = estimate_system(&trials, &pat_design()).unwrap();
        let pmf = &sys.contexts[0].pmf;
        assert_eq!(pmf.mass_of(&["00".into()]), Q::zero());
        assert_eq!(pmf.mass_of(&["01".into()]), Q::new(2, 9));
        assert_eq!(pmf.mass_of(&["10".into()]), Q::new(1, 3));
        assert_eq!(pmf.mass_of(&["11".into()]), Q::new(4, 9));
        assert_eq!(counts[0].total, 9);
    }

    #[test]
    fn permutation_invariant() {
        let mut trials: Vec<TrialRecord> = MONITOR
            .iter()
            .map(|v| TrialRecord {
                context: "c".into(),
                values: vec![v.to_string()],
            })
            .collect();
        let (a, _) = estimate_system(&trials, &pat_design()).unwrap();
        trials.reverse();
        trials.swap(0, 4);
        let (b, _) = estimate_system(&trials, &pat_design()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_context_and_alphabet_violations() {
        let design = pat_design();
        let bad_ctx = vec![TrialRecord {
            context: "c99".into(),
            values: vec!["00".into()],
        }];
        assert!(matches!(
            estimate_system(&bad_ctx, &design),
            Err(IngestError::UnknownContext(_))
        ));
        let bad_val = vec![TrialRecord {
            context: "c".into(),
            values: vec!["22".into()],
        }];
        assert!(matches!(
            estimate_system(&bad_val, &design),
            Err(IngestError::AlphabetViolation { .. })
        ));
        assert!(matches!(
            estimate_system(&[], &design),
            Err(IngestError::EmptyContext(_))
        ));
    }

    #[test]
    fn conditionalize_splits_by_tag() {
        let design = Design {
            name: "pat".into(),
            contents: vec![ContentSpec {
                id: "C".into(),
                outcomes: vec!["00".into(), "01".into(), "10".into(), "11".into()],
            }],
            contexts: vec![
                DesignContext { id: "red".into(), contents: vec!["C".into()] },
                DesignContext { id: "blue".into(), contents: vec!["C".into()] },
            ],
        };
        let tags = ["red", "blue"];
        let trials: Vec<(String, Vec<String>)> = MONITOR
            .iter()
            .enumerate()
            .map(|(i, v)| (tags[i % 2].to_string(), vec![v.to_string()]))
            .collect();
        let sys = conditionalize(&trials, &design).unwrap();
        assert_eq!(sys.contexts.len(), 2);
        // red gets positions 0,2,4,6,8: 01,11,10,11,01
        let red = &sys.contexts[0].pmf;
        assert_eq!(red.mass_of(&["01".into()]), Q::new(2, 5));
        assert_eq!(red.mass_of(&["11".into()]), Q::new(2, 5));
        assert_eq!(red.mass_of(&["10".into()]), Q::new(1, 5));
        assert!(matches!(
            conditionalize(&[("green".into(), vec!["00".into()])], &design),
            Err(IngestError::UnknownTag(_))
        ));
    }

    #[test]
    fn csv_parser_handles_comments_and_errors() {
        let text = "# trials\ncontext,v1,v2\nc11, +1, -1\n\nc12,+1,+1\n";
        let trials = parse_trials_csv(text).unwrap();
        assert_eq!(trials.len(), 2);
        assert_eq!(trials[0].values, vec!["+1", "-1"]);
        assert!(parse_trials_csv("a,b\nc,d\n").is_err());
        assert!(parse_trials_csv("").is_err());
    }
}
