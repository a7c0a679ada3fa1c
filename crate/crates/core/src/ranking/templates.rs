use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RankError;
use crate::graph::{EdgeKind, KnowledgeGraph, Node, NodeKind};

/// Sentence used for an entity that no other template names.
const FALLBACK: &str = "{label} is a known {kind}.";

const BUNDLED: &[(&str, &str)] = &[
    ("person", "{label} can be reached at {email} or {phone}."),
    ("event", "{label} runs from {start} to {end}."),
    ("member_of", "{src} is a member of the {dst} group."),
    ("has_office", "{src} has the office {dst}."),
    ("organizes", "{src} organizes {dst}."),
    ("attends", "{src} attends {dst}."),
    ("located_in", "{src} takes place in {dst}."),
];

/// Sentence templates keyed by node or edge kind wire name.
///
/// Node templates draw slots from `label`, `kind`, and node attributes and
/// are skipped when an attribute is missing. Edge templates use `src` and
/// `dst`, the endpoint labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::bundled()
    }
}

fn slots(template: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err("unbalanced `}`".into());
        }
        let close = rest[open..].find('}').ok_or("unclosed `{`")? + open;
        let name = &rest[open + 1..close];
        if name.is_empty() || name.contains('{') {
            return Err("empty or nested slot".into());
        }
        out.push(name);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

fn fill(template: &str, lookup: impl Fn(&str) -> Option<String>) -> Option<String> {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}')? + open;
        out.push_str(&rest[..open]);
        out.push_str(&lookup(&rest[open + 1..close])?);
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Some(out)
}

fn node_slot(node: &Node, slot: &str) -> Option<String> {
    match slot {
        "label" => Some(node.label.clone()),
        "kind" => Some(node.kind.as_str().to_string()),
        other => node.attrs.get(other).cloned(),
    }
}

impl TemplateRegistry {
    pub fn bundled() -> Self {
        TemplateRegistry {
            templates: BUNDLED
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn from_map(templates: BTreeMap<String, String>) -> Result<Self, RankError> {
        let nodes: HashSet<&str> = NodeKind::LINKABLE.iter().map(|k| k.as_str()).collect();
        let edges: HashSet<&str> = EdgeKind::ALL.iter().map(|k| k.as_str()).collect();
        for (key, template) in &templates {
            let bad = |message: String| RankError::BadTemplate {
                key: key.clone(),
                message,
            };
            let names = slots(template).map_err(bad)?;
            if edges.contains(key.as_str()) {
                if let Some(s) = names.iter().find(|s| !matches!(**s, "src" | "dst")) {
                    return Err(bad(format!(
                        "edge templates only take src and dst, found `{s}`"
                    )));
                }
            } else if !nodes.contains(key.as_str()) {
                return Err(bad("not a linkable node kind or edge kind".into()));
            }
        }
        Ok(TemplateRegistry { templates })
    }

    pub fn from_json(text: &str) -> Result<Self, RankError> {
        let map: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| RankError::Io(format!("template registry: {e}")))?;
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self, RankError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RankError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.templates.get(key).map(String::as_str)
    }
}

/// One sentence per templated fact. Entities are visited in subgraph node
/// order; each contributes its node sentence and then its outgoing edges in
/// edge-kind order. Entities left unnamed get a fallback sentence.
pub fn verbalize(
    subgraph: &KnowledgeGraph,
    registry: &TemplateRegistry,
) -> Result<String, RankError> {
    let mut sentences = Vec::new();
    let mut named = HashSet::new();
    for node in subgraph.nodes() {
        if let Some(t) = registry.get(node.kind.as_str()) {
            if let Some(s) = fill(t, |slot| node_slot(node, slot)) {
                sentences.push(s);
                named.insert(node.id.clone());
            }
        }
        let mut out = subgraph.out_edges(&node.id)?;
        out.sort_by_key(|(_, k)| EdgeKind::ALL.iter().position(|x| x == k));
        for (dst, kind) in out {
            let template = registry
                .get(kind.as_str())
                .ok_or_else(|| RankError::MissingTemplate(kind.as_str().into()))?;
            let dst_node = subgraph.node(&dst).expect("edge endpoint exists");
            let s = fill(template, |slot| match slot {
                "src" => Some(node.label.clone()),
                "dst" => Some(dst_node.label.clone()),
                _ => None,
            })
            .ok_or_else(|| RankError::BadTemplate {
                key: kind.as_str().into(),
                message: "unknown slot".into(),
            })?;
            sentences.push(s);
            named.insert(node.id.clone());
            named.insert(dst);
        }
    }
    for node in subgraph.nodes() {
        if !named.contains(&node.id) {
            sentences.push(
                fill(FALLBACK, |slot| node_slot(node, slot)).expect("fallback slots always exist"),
            );
        }
    }
    Ok(sentences.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::ranking::relevant_subgraph;
    use crate::ranking::tests::fig3_background;
    use crate::{fixtures, org_to_graph};

    #[test]
    fn person_document() {
        let mut g = fig3_background();
        let s = relevant_subgraph(&g, &[NodeId::new("person:1")]).unwrap();
        let text = verbalize(&s, &TemplateRegistry::bundled()).unwrap();
        assert_eq!(
            text,
            "Mark Suarez organizes users workshop. Mark Suarez is a member of the Mathematics group. \
             Mark Suarez has the office room 270."
        );
        // Without the event the person is described in two sentences.
        g = {
            let keep = [
                NodeId::new("person:1"),
                NodeId::new("room:3"),
                NodeId::new("group:0"),
            ];
            g.induced_subgraph(&keep).unwrap()
        };
        let text = verbalize(&g, &TemplateRegistry::bundled()).unwrap();
        assert_eq!(text.matches(". ").count() + 1, 2);
        for name in ["Mark Suarez", "Mathematics", "room 270"] {
            assert!(text.contains(name));
        }
    }

    #[test]
    fn empty_and_deterministic() {
        let reg = TemplateRegistry::bundled();
        assert_eq!(verbalize(&KnowledgeGraph::new(), &reg).unwrap(), "");
        let g = org_to_graph(&fixtures::org()).unwrap();
        assert_eq!(verbalize(&g, &reg).unwrap(), verbalize(&g, &reg).unwrap());
    }

    #[test]
    fn covers_every_entity() {
        let g = org_to_graph(&fixtures::org()).unwrap();
        let text = verbalize(&g, &TemplateRegistry::bundled()).unwrap();
        assert!(g.linkable_entities().all(|n| text.contains(&n.label)));
    }

    #[test]
    fn missing_edge_template() {
        let mut map: BTreeMap<String, String> = BUNDLED
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        map.remove("has_office");
        let reg = TemplateRegistry::from_map(map).unwrap();
        let g = fig3_background();
        match verbalize(&g, &reg) {
            Err(RankError::MissingTemplate(k)) => assert_eq!(k, "has_office"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn registry_file_validation() {
        assert!(TemplateRegistry::from_json(r#"{"attends": "{src} goes to {dst}."}"#).is_ok());
        assert!(TemplateRegistry::from_json(r#"{"attends": "{who} goes"}"#).is_err());
        assert!(TemplateRegistry::from_json(r#"{"utterance": "{label}"}"#).is_err());
        assert!(TemplateRegistry::from_json(r#"{"person": "{label"}"#).is_err());
        let reg = TemplateRegistry::bundled();
        assert_eq!(TemplateRegistry::from_json(&reg.to_json()).unwrap(), reg);
    }
}
