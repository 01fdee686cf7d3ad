//! Context-indexed systems of finite random variables.
//!
//! A `System` is a set of contexts, each carrying an exact joint
//! distribution over the contents measured together in it. Variables are
//! indexed by (content, context) pairs; identity classes group the
//! variables hypothesized to be "essentially the same" across contexts
//! (by default, all variables sharing a content).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Q;

/// A measured quantity: a label plus its ordered outcome alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Content {
    pub id: String,
    pub outcomes: Vec<String>,
}

/// An exact pmf over an ordered support of value tuples.
///
/// The support is stored dense over the relevant product alphabet, in
/// lexicographic order by declared outcome order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    support: Vec<Vec<String>>,
    masses: Vec<Q>,
}

impl Distribution {
    /// Validates nonnegativity, exact normalization and support distinctness.
    pub fn new(support: Vec<Vec<String>>, masses: Vec<Q>) -> Result<Distribution, SystemError> {
        if support.len() != masses.len() {
            return Err(SystemError::ShapeMismatch);
        }
        let mut seen = BTreeSet::new();
        for tuple in &support {
            if !seen.insert(tuple.clone()) {
                return Err(SystemError::DuplicateTuple(tuple.join(",")));
            }
        }
        if masses.iter().any(Q::is_negative) {
            return Err(SystemError::NegativeMass);
        }
        let total: Q = masses.iter().sum();
        if total != Q::one() {
            return Err(SystemError::NonNormalized(total.to_string()));
        }
        Ok(Distribution { support, masses })
    }

    pub fn support(&self) -> &[Vec<String>] {
        &self.support
    }

    pub fn masses(&self) -> &[Q] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mass_of(&self, tuple: &[String]) -> Q {
        self.support
            .iter()
            .position(|t| t[..] == *tuple)
            .map(|i| self.masses[i].clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, &Q)> {
        self.support.iter().zip(self.masses.iter())
    }

    /// Total variation distance; both distributions must share an alphabet.
    pub fn total_variation(&self, other: &Distribution) -> Q {
        let mut keys: BTreeSet<&Vec<String>> = self.support.iter().collect();
        keys.extend(other.support.iter());
        let sum: Q = keys
            .into_iter()
            .map(|k| (self.mass_of(k) - other.mass_of(k)).abs())
            .sum();
        sum * Q::new(1, 2)
    }
}

/// Tags every support value with a recording condition, making supports for
/// distinct tags disjoint while preserving the mass vector.
pub fn relabel_with_condition(dist: &Distribution, tag: &str) -> Distribution {
    let support = dist
        .support
        .iter()
        .map(|tuple| {
            tuple
                .iter()
                .map(|v| {
                    if tag.is_empty() {
                        v.clone()
                    } else {
                        format!("{tag} {v}")
                    }
                })
                .collect()
        })
        .collect();
    Distribution {
        support,
        masses: dist.masses.clone(),
    }
}

/// One context (treatment): the contents recorded together and their joint pmf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub id: String,
    pub contents: Vec<String>,
    pub pmf: Distribution,
}

/// A random variable, identified by the content it records and the context
/// it is recorded in. Displayed as `content@context`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub content: String,
    pub context: String,
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.content, self.context)
    }
}

/// A group of variables hypothesized to share one identity, with the
/// outcome alphabet they all use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityClass {
    pub id: String,
    pub members: Vec<VariableId>,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub name: String,
    pub contents: Vec<Content>,
    pub contexts: Vec<Context>,
    pub classes: Vec<IdentityClass>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("pmf masses sum to {0}, expected 1")]
    NonNormalized(String),
    #[error("negative probability mass")]
    NegativeMass,
    #[error("context {context} lists content {content} more than once")]
    DuplicateContentInContext { context: String, content: String },
    #[error("reference to unknown content {0}")]
    UnknownContentRef(String),
    #[error("identity class {0} mixes outcome alphabets")]
    MixedOutcomeAlphabetInClass(String),
    #[error("duplicate content id {0}")]
    DuplicateContentId(String),
    #[error("duplicate context id {0}")]
    DuplicateContextId(String),
    #[error("content {0} needs at least 2 distinct outcomes")]
    BadOutcomeAlphabet(String),
    #[error("unknown context {0}")]
    UnknownContext(String),
    #[error("empty keep set for marginalization")]
    EmptyKeepSet,
    #[error("value {value} not in the alphabet of content {content}")]
    UnknownOutcome { content: String, value: String },
    #[error("duplicate support tuple ({0})")]
    DuplicateTuple(String),
    #[error("identity classes do not partition the variable set (at {0})")]
    ClassesNotPartition(String),
    #[error("unknown variable {0} in identity class")]
    UnknownVariable(String),
    #[error("empty identity class")]
    EmptyClass,
    #[error("support/mass shape mismatch")]
    ShapeMismatch,
    #[error("context {context}: {source}")]
    InContext {
        context: String,
        #[source]
        source: Box<SystemError>,
    },
}

/// JSON-facing description of a system, prior to validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub contents: Vec<ContentSpec>,
    pub contexts: Vec<ContextSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_classes: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentSpec {
    pub id: String,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextSpec {
    pub id: String,
    pub contents: Vec<String>,
    pub pmf: Vec<PmfEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfEntry {
    pub values: Vec<String>,
    pub p: Q,
}

/// Enumerates the dense product support of the given alphabets, last
/// coordinate fastest.
pub fn product_support(alphabets: &[&[String]]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for alpha in alphabets {
        let mut next = Vec::with_capacity(out.len() * alpha.len());
        for prefix in &out {
            for v in *alpha {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Validates a parsed description into a `System`. Omitted pmf tuples get
/// mass zero; the default identity-class partition groups variables by
/// content id.
pub fn build_system(spec: &SystemSpec) -> Result<System, SystemError> {
    let mut contents = Vec::new();
    let mut by_id: BTreeMap<&str, &ContentSpec> = BTreeMap::new();
    for c in &spec.contents {
        if by_id.insert(&c.id, c).is_some() {
            return Err(SystemError::DuplicateContentId(c.id.clone()));
        }
        let distinct: BTreeSet<&String> = c.outcomes.iter().collect();
        if c.outcomes.len() < 2 || distinct.len() != c.outcomes.len() {
            return Err(SystemError::BadOutcomeAlphabet(c.id.clone()));
        }
        contents.push(Content {
            id: c.id.clone(),
            outcomes: c.outcomes.clone(),
        });
    }

    let mut contexts = Vec::new();
    let mut ctx_ids = BTreeSet::new();
    for ctx in &spec.contexts {
        if !ctx_ids.insert(&ctx.id) {
            return Err(SystemError::DuplicateContextId(ctx.id.clone()));
        }
        let in_ctx = |e: SystemError| SystemError::InContext {
            context: ctx.id.clone(),
            source: Box::new(e),
        };
        let mut seen = BTreeSet::new();
        let mut alphabets: Vec<&[String]> = Vec::new();
        for cid in &ctx.contents {
            let c = by_id
                .get(cid.as_str())
                .ok_or_else(|| in_ctx(SystemError::UnknownContentRef(cid.clone())))?;
            if !seen.insert(cid) {
                return Err(SystemError::DuplicateContentInContext {
                    context: ctx.id.clone(),
                    content: cid.clone(),
                });
            }
            alphabets.push(&c.outcomes);
        }
        let support = product_support(&alphabets);
        let mut masses = vec![Q::zero(); support.len()];
        for entry in &ctx.pmf {
            if entry.values.len() != ctx.contents.len() {
                return Err(in_ctx(SystemError::ShapeMismatch));
            }
            for (pos, v) in entry.values.iter().enumerate() {
                if !alphabets[pos].contains(v) {
                    return Err(in_ctx(SystemError::UnknownOutcome {
                        content: ctx.contents[pos].clone(),
                        value: v.clone(),
                    }));
                }
            }
            let idx = support
                .iter()
                .position(|t| *t == entry.values)
                .expect("value tuple is in the dense support");
            if !masses[idx].is_zero() {
                return Err(in_ctx(SystemError::DuplicateTuple(entry.values.join(","))));
            }
            masses[idx] = entry.p.clone();
        }
        let pmf = Distribution::new(support, masses).map_err(in_ctx)?;
        contexts.push(Context {
            id: ctx.id.clone(),
            contents: ctx.contents.clone(),
            pmf,
        });
    }

    // every (content, context) pair, in declaration order
    let variables: Vec<VariableId> = contexts
        .iter()
        .flat_map(|ctx| {
            ctx.contents.iter().map(|c| VariableId {
                content: c.clone(),
                context: ctx.id.clone(),
            })
        })
        .collect();

    let classes = match &spec.identity_classes {
        None => default_classes(&contents, &variables),
        Some(groups) => explicit_classes(groups, &contents, &contexts, &variables)?,
    };
    for class in &classes {
        if class.members.is_empty() {
            return Err(SystemError::EmptyClass);
        }
        let alphabet = |v: &VariableId| -> &Vec<String> {
            &contents.iter().find(|c| c.id == v.content).unwrap().outcomes
        };
        let first = alphabet(&class.members[0]);
        if class.members.iter().any(|m| alphabet(m) != first) {
            return Err(SystemError::MixedOutcomeAlphabetInClass(class.id.clone()));
        }
    }

    Ok(System {
        name: spec.name.clone(),
        contents,
        contexts,
        classes,
    })
}

fn default_classes(contents: &[Content], variables: &[VariableId]) -> Vec<IdentityClass> {
    contents
        .iter()
        .filter_map(|c| {
            let members: Vec<VariableId> = variables
                .iter()
                .filter(|v| v.content == c.id)
                .cloned()
                .collect();
            if members.is_empty() {
                None
            } else {
                Some(IdentityClass {
                    id: c.id.clone(),
                    members,
                    outcomes: c.outcomes.clone(),
                })
            }
        })
        .collect()
}

fn explicit_classes(
    groups: &[Vec<String>],
    contents: &[Content],
    contexts: &[Context],
    variables: &[VariableId],
) -> Result<Vec<IdentityClass>, SystemError> {
    let mut assigned: BTreeSet<VariableId> = BTreeSet::new();
    let mut classes = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        let mut members = Vec::new();
        for spec in group {
            let (content, context) = spec
                .split_once('@')
                .ok_or_else(|| SystemError::UnknownVariable(spec.clone()))?;
            let v = VariableId {
                content: content.to_string(),
                context: context.to_string(),
            };
            let declared = contexts
                .iter()
                .any(|c| c.id == v.context && c.contents.contains(&v.content));
            if !declared {
                return Err(SystemError::UnknownVariable(spec.clone()));
            }
            if !assigned.insert(v.clone()) {
                return Err(SystemError::ClassesNotPartition(spec.clone()));
            }
            members.push(v);
        }
        if members.is_empty() {
            return Err(SystemError::EmptyClass);
        }
        let outcomes = contents
            .iter()
            .find(|c| c.id == members[0].content)
            .map(|c| c.outcomes.clone())
            .unwrap();
        classes.push(IdentityClass {
            id: format!("class{i}"),
            members,
            outcomes,
        });
    }
    if let Some(missing) = variables.iter().find(|v| !assigned.contains(v)) {
        return Err(SystemError::ClassesNotPartition(missing.to_string()));
    }
    Ok(classes)
}

impl System {
    /// All variables in stable order: contexts as declared, contents within
    /// each context as declared.
    pub fn variables(&self) -> Vec<VariableId> {
        self.contexts
            .iter()
            .flat_map(|ctx| {
                ctx.contents.iter().map(|c| VariableId {
                    content: c.clone(),
                    context: ctx.id.clone(),
                })
            })
            .collect()
    }

    pub fn content(&self, id: &str) -> Option<&Content> {
        self.contents.iter().find(|c| c.id == id)
    }

    pub fn context(&self, id: &str) -> Option<&Context> {
        self.contexts.iter().find(|c| c.id == id)
    }

    pub fn outcomes_of(&self, var: &VariableId) -> &[String] {
        &self.content(&var.content).expect("validated").outcomes
    }
}

/// Marginal of a context pmf onto a subset of its contents, summing masses
/// over the dropped coordinates. `keep` preserves the context's content order.
pub fn marginal(system: &System, context_id: &str, keep: &[&str]) -> Result<Distribution, SystemError> {
    let ctx = system
        .context(context_id)
        .ok_or_else(|| SystemError::UnknownContext(context_id.to_string()))?;
    if keep.is_empty() {
        return Err(SystemError::EmptyKeepSet);
    }
    let mut positions = Vec::new();
    for (pos, c) in ctx.contents.iter().enumerate() {
        if keep.contains(&c.as_str()) {
            positions.push(pos);
        }
    }
    if positions.len() != keep.len() {
        let missing = keep
            .iter()
            .find(|k| !ctx.contents.iter().any(|c| c == *k))
            .unwrap();
        return Err(SystemError::UnknownContentRef(missing.to_string()));
    }
    let alphabets: Vec<&[String]> = positions
        .iter()
        .map(|&p| system.content(&ctx.contents[p]).unwrap().outcomes.as_slice())
        .collect();
    let support = product_support(&alphabets);
    let mut masses = vec![Q::zero(); support.len()];
    for (tuple, mass) in ctx.pmf.iter() {
        let projected: Vec<String> = positions.iter().map(|&p| tuple[p].clone()).collect();
        let idx = support.iter().position(|t| *t == projected).unwrap();
        masses[idx] += mass;
    }
    Distribution::new(support, masses)
}

/// One identity class with its members and shared alphabet, in stable order.
pub fn connections(system: &System) -> Vec<(String, Vec<VariableId>, Vec<String>)> {
    system
        .classes
        .iter()
        .map(|c| (c.id.clone(), c.members.clone(), c.outcomes.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSignalingVerdict {
    pub class: String,
    pub pass: bool,
    /// Largest pairwise total-variation distance between the class members'
    /// single-variable marginals.
    pub max_discrepancy: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoSignalingReport {
    pub pass: bool,
    pub classes: Vec<ClassSignalingVerdict>,
}

/// Marginal selectivity check: within each identity class, the marginal of
/// each member must be exactly the same in every context containing it.
pub fn check_no_signaling(system: &System) -> NoSignalingReport {
    let mut classes = Vec::new();
    let mut pass = true;
    for class in &system.classes {
        let marginals: Vec<Distribution> = class
            .members
            .iter()
            .map(|v| marginal(system, &v.context, &[&v.content]).expect("validated system"))
            .collect();
        let mut max_tv = Q::zero();
        for i in 0..marginals.len() {
            for j in (i + 1)..marginals.len() {
                let tv = marginals[i].total_variation(&marginals[j]);
                if tv > max_tv {
                    max_tv = tv;
                }
            }
        }
        let ok = max_tv.is_zero();
        pass &= ok;
        classes.push(ClassSignalingVerdict {
            class: class.id.clone(),
            pass: ok,
            max_discrepancy: max_tv,
        });
    }
    NoSignalingReport { pass, classes }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    fn pat_spec() -> SystemSpec {
        // two contexts over the same pair of binary contents
        serde_json::from_value(serde_json::json!({
            "name": "pat",
            "contents": [
                {"id": "A", "outcomes": ["0", "1"]},
                {"id": "B", "outcomes": ["0", "1"]}
            ],
            "contexts": [
                {"id": "red", "contents": ["A", "B"], "pmf": [
                    {"values": ["0", "0"], "p": "1/2"},
                    {"values": ["1", "1"], "p": "1/2"}
                ]},
                {"id": "blue", "contents": ["A", "B"], "pmf": [
                    {"values": ["0", "1"], "p": "1/2"},
                    {"values": ["1", "0"], "p": "1/2"}
                ]}
            ]
        }))
        .unwrap()
    }

    #[test]
    fn builds_pat_system_with_default_classes() {
        let sys = build_system(&pat_spec()).unwrap();
        assert_eq!(sys.variables().len(), 4);
        assert_eq!(sys.classes.len(), 2);
        assert_eq!(sys.classes[0].members.len(), 2);
    }

    #[test]
    fn duplicate_content_in_context_rejected() {
        let mut spec = pat_spec();
        spec.contexts[0].contents = vec!["A".into(), "A".into()];
        assert!(matches!(
            build_system(&spec),
            Err(SystemError::DuplicateContentInContext { .. })
        ));
    }

    #[test]
    fn negative_mass_rejected() {
        let mut spec = pat_spec();
        spec.contexts[0].pmf = vec![
            PmfEntry { values: vec!["0".into(), "0".into()], p: q(1, 2) },
            PmfEntry { values: vec!["0".into(), "1".into()], p: q(1, 2) },
            PmfEntry { values: vec!["1".into(), "0".into()], p: q(1, 2) },
            PmfEntry { values: vec!["1".into(), "1".into()], p: q(-1, 2) },
        ];
        match build_system(&spec) {
            Err(SystemError::InContext { source, .. }) => {
                assert_eq!(*source, SystemError::NegativeMass)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_normalized_rejected() {
        let mut spec = pat_spec();
        spec.contexts[1].pmf.pop();
        assert!(matches!(
            build_system(&spec),
            Err(SystemError::InContext { .. })
        ));
    }

    #[test]
    fn marginal_sums_dropped_coordinates() {
        let sys = build_system(&pat_spec()).unwrap();
        // red joint (1/2,0,0,1/2) over {00,01,10,11}: keep B -> (1/2,1/2)
        let m = marginal(&sys, "red", &["B"]).unwrap();
        assert_eq!(m.masses(), &[q(1, 2), q(1, 2)]);
    }

    #[test]
    fn marginal_is_composition_compatible() {
        let spec: SystemSpec = serde_json::from_value(serde_json::json!({
            "name": "triple",
            "contents": [
                {"id": "X", "outcomes": ["0", "1"]},
                {"id": "Y", "outcomes": ["0", "1"]},
                {"id": "Z", "outcomes": ["0", "1"]}
            ],
            "contexts": [
                {"id": "c", "contents": ["X", "Y", "Z"], "pmf": [
                    {"values": ["0", "0", "0"], "p": "1/8"},
                    {"values": ["0", "0", "1"], "p": "1/4"},
                    {"values": ["0", "1", "1"], "p": "1/8"},
                    {"values": ["1", "0", "1"], "p": "1/8"},
                    {"values": ["1", "1", "0"], "p": "3/8"}
                ]}
            ]
        }))
        .unwrap();
        let sys = build_system(&spec).unwrap();
        let direct = marginal(&sys, "c", &["X"]).unwrap();
        // through the intermediate {X,Y} marginal, by hand over its masses
        let xy = marginal(&sys, "c", &["X", "Y"]).unwrap();
        let x0: Q = xy.iter().filter(|(t, _)| t[0] == "0").map(|(_, m)| m).sum();
        assert_eq!(direct.mass_of(&["0".into()]), x0);
    }

    #[test]
    fn relabel_preserves_masses_and_disjoins_supports() {
        let sys = build_system(&pat_spec()).unwrap();
        let d = sys.contexts[0].pmf.clone();
        let red = relabel_with_condition(&d, "red");
        let blue = relabel_with_condition(&d, "blue");
        assert_eq!(red.masses(), d.masses());
        assert_ne!(red, blue);
        let red_support: BTreeSet<_> = red.support().iter().collect();
        assert!(blue.support().iter().all(|t| !red_support.contains(t)));
        // empty tag leaves values unchanged
        assert_eq!(relabel_with_condition(&d, ""), d);
    }

    #[test]
    fn connections_lists_classes_in_stable_order() {
        let sys = build_system(&pat_spec()).unwrap();
        let conns = connections(&sys);
        assert_eq!(conns.len(), 2);
        assert_eq!(conns[0].0, "A");
        assert_eq!(conns[0].1.len(), 2);
    }

    #[test]
    fn pat_as_one_class_via_explicit_partition() {
        // C_red/C_blue treated as a single vector-valued variable per context
        let spec: SystemSpec = serde_json::from_value(serde_json::json!({
            "name": "pat-vector",
            "contents": [{"id": "C", "outcomes": ["00", "01", "10", "11"]}],
            "contexts": [
                {"id": "red", "contents": ["C"], "pmf": [
                    {"values": ["00"], "p": "1/2"}, {"values": ["11"], "p": "1/2"}
                ]},
                {"id": "blue", "contents": ["C"], "pmf": [
                    {"values": ["01"], "p": "1/2"}, {"values": ["10"], "p": "1/2"}
                ]}
            ],
            "identity_classes": [["C@red", "C@blue"]]
        }))
        .unwrap();
        let sys = build_system(&spec).unwrap();
        assert_eq!(sys.classes.len(), 1);
        assert_eq!(sys.classes[0].members.len(), 2);
    }

    #[test]
    fn signaling_detected_with_tv_quarter() {
        let spec: SystemSpec = serde_json::from_value(serde_json::json!({
            "name": "signal",
            "contents": [
                {"id": "A1", "outcomes": ["+1", "-1"]},
                {"id": "B1", "outcomes": ["+1", "-1"]},
                {"id": "B2", "outcomes": ["+1", "-1"]}
            ],
            "contexts": [
                {"id": "c11", "contents": ["A1", "B1"], "pmf": [
                    {"values": ["+1", "+1"], "p": "3/4"},
                    {"values": ["-1", "-1"], "p": "1/4"}
                ]},
                {"id": "c12", "contents": ["A1", "B2"], "pmf": [
                    {"values": ["+1", "+1"], "p": "1/2"},
                    {"values": ["-1", "-1"], "p": "1/2"}
                ]}
            ]
        }))
        .unwrap();
        let sys = build_system(&spec).unwrap();
        let report = check_no_signaling(&sys);
        assert!(!report.pass);
        let a1 = report.classes.iter().find(|c| c.class == "A1").unwrap();
        assert_eq!(a1.max_discrepancy, q(1, 4));
    }

    #[test]
    fn single_context_passes_vacuously() {
        let mut spec = pat_spec();
        spec.contexts.truncate(1);
        let sys = build_system(&spec).unwrap();
        assert!(check_no_signaling(&sys).pass);
    }
}
