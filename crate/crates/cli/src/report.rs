//! The analysis report: every section independent, all rationals
//! serialized as "a/b", field order fixed so serialization is
//! byte-deterministic for a fixed input.

use serde::Serialize;

use cbd_core::bell::{BellClass, ChFineReport, SelectivityReport};
use cbd_core::coupling::{AgreementOutcome, ReducedCoupling};
use cbd_core::quasi::QuasiResult;
use cbd_core::rational::Q;
use cbd_core::system::{NoSignalingReport, System};

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub system: String,
    pub validation: String,
    pub no_signaling: NoSignalingSection,
    pub bell: BellSection,
    pub identity: IdentitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quasi: Option<QuasiSection>,
}

#[derive(Debug, Serialize)]
pub struct NoSignalingSection {
    pub pass: bool,
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Serialize)]
pub struct ClassEntry {
    pub class: String,
    pub pass: bool,
    pub max_discrepancy: Q,
}

#[derive(Debug, Serialize)]
pub struct BellSection {
    pub applicable: bool,
    /// "ok", "undefined: signaling", or why the system is not 2x2 Bell.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expressions: Option<Vec<ExpressionEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<Q>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ExpressionEntry {
    pub i: usize,
    pub j: usize,
    pub value: Q,
}

#[derive(Debug, Serialize)]
pub struct IdentitySection {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MeasureEntries>,
}

#[derive(Debug, Serialize)]
pub struct AgreementSection {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<Q>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Q>,
}

#[derive(Debug, Serialize)]
pub struct QuasiSection {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negativity: Option<Q>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<MeasureEntries>,
}

#[derive(Debug, Serialize)]
pub struct MeasureEntries {
    pub classes: Vec<String>,
    /// Nonzero masses only.
    pub masses: Vec<MassEntry>,
}

#[derive(Debug, Serialize)]
pub struct MassEntry {
    pub values: Vec<String>,
    pub p: Q,
}

pub fn class_label(c: BellClass) -> &'static str {
    match c {
        BellClass::Noncontextual => "noncontextual",
        BellClass::Case1Signaling => "case1: signaling",
        BellClass::Case2PureContextuality => "case2: pure contextuality",
    }
}

pub fn no_signaling_section(r: &NoSignalingReport) -> NoSignalingSection {
    NoSignalingSection {
        pass: r.pass,
        classes: r
            .classes
            .iter()
            .map(|c| ClassEntry {
                class: c.class.clone(),
                pass: c.pass,
                max_discrepancy: c.max_discrepancy.clone(),
            })
            .collect(),
    }
}

pub fn bell_section(
    applicable: Result<(&SelectivityReport, Option<&ChFineReport>, BellClass), String>,
) -> BellSection {
    match applicable {
        Err(reason) => BellSection {
            applicable: false,
            status: reason,
            expressions: None,
            satisfied: None,
            max_violation: None,
            classification: None,
        },
        Ok((_sel, None, class)) => BellSection {
            applicable: true,
            status: "undefined: signaling".into(),
            expressions: None,
            satisfied: None,
            max_violation: None,
            classification: Some(class_label(class).into()),
        },
        Ok((_sel, Some(ch), class)) => BellSection {
            applicable: true,
            status: "ok".into(),
            expressions: Some(
                (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| ExpressionEntry {
                        i: i + 1,
                        j: j + 1,
                        value: ch.expressions[i][j].clone(),
                    })
                    .collect(),
            ),
            satisfied: Some(ch.satisfied),
            max_violation: Some(ch.max_violation.clone()),
            classification: Some(class_label(class).into()),
        },
    }
}

pub fn identity_section(witness: &Option<ReducedCoupling>) -> IdentitySection {
    IdentitySection {
        exists: witness.is_some(),
        witness: witness.as_ref().map(|w| MeasureEntries {
            classes: w.classes.clone(),
            masses: w
                .joint
                .iter()
                .filter(|(_, m)| !m.is_zero())
                .map(|(values, m)| MassEntry {
                    values: values.clone(),
                    p: m.clone(),
                })
                .collect(),
        }),
    }
}

pub fn agreement_section(outcome: Result<&AgreementOutcome, String>) -> AgreementSection {
    match outcome {
        Err(reason) => AgreementSection {
            status: reason,
            p_max: None,
            measure: None,
        },
        Ok(AgreementOutcome::NoUniformP) => AgreementSection {
            status: "no uniform agreement probability".into(),
            p_max: None,
            measure: None,
        },
        Ok(AgreementOutcome::Agreement(r)) => AgreementSection {
            status: "ok".into(),
            p_max: Some(r.p_max.clone()),
            measure: Some(r.measure.clone()),
        },
    }
}

pub fn quasi_section(result: &Option<QuasiResult>) -> QuasiSection {
    match result {
        None => QuasiSection {
            exists: false,
            negativity: None,
            support: None,
        },
        Some(r) => QuasiSection {
            exists: true,
            negativity: Some(r.negativity.clone()),
            support: Some(MeasureEntries {
                classes: r.classes.clone(),
                masses: r
                    .measure
                    .support
                    .iter()
                    .zip(&r.measure.masses)
                    .filter(|(_, m)| !m.is_zero())
                    .map(|(values, m)| MassEntry {
                        values: values.clone(),
                        p: m.clone(),
                    })
                    .collect(),
            }),
        },
    }
}

pub fn render_text(report: &AnalysisReport, system: &System) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "system: {}", report.system);
    let _ = writeln!(
        out,
        "contents: {}  contexts: {}  identity classes: {}",
        system.contents.len(),
        system.contexts.len(),
        system.classes.len()
    );
    let _ = writeln!(out, "validation: {}", report.validation);
    let _ = writeln!(
        out,
        "no-signaling: {}",
        if report.no_signaling.pass { "pass" } else { "FAIL" }
    );
    for c in &report.no_signaling.classes {
        let _ = writeln!(
            out,
            "  class {}: {} (max TV discrepancy {})",
            c.class,
            if c.pass { "pass" } else { "FAIL" },
            c.max_discrepancy
        );
    }
    let _ = writeln!(out, "bell 2x2: {}", report.bell.status);
    if let Some(exprs) = &report.bell.expressions {
        for e in exprs {
            let _ = writeln!(out, "  CH/Fine ({},{}): {}", e.i, e.j, e.value);
        }
        let _ = writeln!(
            out,
            "  satisfied: {}  max violation: {}",
            report.bell.satisfied.unwrap(),
            report.bell.max_violation.as_ref().unwrap()
        );
    }
    if let Some(class) = &report.bell.classification {
        let _ = writeln!(out, "  classification: {class}");
    }
    let _ = writeln!(
        out,
        "identity coupling: {}",
        if report.identity.exists { "exists (noncontextual)" } else { "does not exist (contextual)" }
    );
    if let Some(a) = &report.agreement {
        match (&a.p_max, &a.measure) {
            (Some(p), Some(m)) => {
                let _ = writeln!(out, "agreement: p_max = {p}, contextuality measure 1-p = {m}");
            }
            _ => {
                let _ = writeln!(out, "agreement: {}", a.status);
            }
        }
    }
    if let Some(qs) = &report.quasi {
        if qs.exists {
            let _ = writeln!(
                out,
                "quasi-coupling: exists, min negativity {}",
                qs.negativity.as_ref().unwrap()
            );
        } else {
            let _ = writeln!(out, "quasi-coupling: does not exist (signaling system)");
        }
    }
    out
}
