use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::LinkError;
use crate::graph::{KnowledgeGraph, NodeId};
use crate::strsim;

/// Path length used when mention and entity are disconnected.
pub const NO_PATH_HOPS: usize = 10;

/// Which feature groups a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    String,
    StringGraph,
}

impl FeatureSet {
    pub fn dim(self) -> usize {
        match self {
            FeatureSet::String => 8,
            FeatureSet::StringGraph => 9,
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "string" => Ok(FeatureSet::String),
            "string+graph" | "string_graph" => Ok(FeatureSet::StringGraph),
            other => Err(format!(
                "unknown feature set `{other}` (expected string or string+graph)"
            )),
        }
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureSet::String => "string",
            FeatureSet::StringGraph => "string+graph",
        })
    }
}

/// Features of one (mention, candidate entity) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFeatureVector {
    pub exact_match: f64,
    pub levenshtein: f64,
    pub jaro_winkler: f64,
    pub lcs_len: f64,
    pub levenshtein_norm: f64,
    pub lcs_norm: f64,
    pub token_diff_card: f64,
    pub token_union_card: f64,
    pub graph_dist: f64,
}

impl LinkFeatureVector {
    pub fn to_vec(&self, set: FeatureSet) -> Vec<f64> {
        let mut v = vec![
            self.exact_match,
            self.levenshtein,
            self.jaro_winkler,
            self.lcs_len,
            self.levenshtein_norm,
            self.lcs_norm,
            self.token_diff_card,
            self.token_union_card,
        ];
        if set == FeatureSet::StringGraph {
            v.push(self.graph_dist);
        }
        v
    }
}

/// Case-folded whitespace tokens with surrounding punctuation removed.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn fold(text: &str) -> String {
    text.trim().to_lowercase()
}

/// String-similarity features; `graph_dist` is left at the no-path value.
pub fn string_features(mention: &str, entity: &str) -> Result<LinkFeatureVector, LinkError> {
    let m = fold(mention);
    let e = fold(entity);
    if m.is_empty() || e.is_empty() {
        return Err(LinkError::EmptyText);
    }
    let m_len = m.chars().count() as f64;
    let lev = strsim::levenshtein(&m, &e) as f64;
    let lcs = strsim::longest_common_substring(&m, &e) as f64;
    let mt = tokens(&m);
    let et = tokens(&e);
    Ok(LinkFeatureVector {
        exact_match: if m == e { 1.0 } else { 0.0 },
        levenshtein: lev,
        jaro_winkler: strsim::jaro_winkler(&m, &e),
        lcs_len: lcs,
        levenshtein_norm: lev / m_len,
        lcs_norm: lcs / m_len,
        token_diff_card: mt.difference(&et).count() as f64,
        token_union_card: mt.union(&et).count() as f64,
        graph_dist: hops_to_feature(None),
    })
}

/// `2^-l`, with `l` clamped to `[1, 10]` and 10 used when there is no path.
pub fn hops_to_feature(hops: Option<usize>) -> f64 {
    let l = hops.unwrap_or(NO_PATH_HOPS).clamp(1, NO_PATH_HOPS);
    0.5f64.powi(l as i32)
}

pub fn graph_distance_feature(
    graph: &KnowledgeGraph,
    mention: &NodeId,
    entity: &NodeId,
) -> Result<f64, LinkError> {
    Ok(hops_to_feature(graph.shortest_hops(mention, entity, true)?))
}

/// Full feature vectors for every candidate, sharing one breadth-first search.
pub fn candidate_features(
    graph: &KnowledgeGraph,
    mention: &NodeId,
    mention_text: &str,
    candidates: &[NodeId],
) -> Result<Vec<LinkFeatureVector>, LinkError> {
    let dist: HashMap<NodeId, usize> = graph.hop_distances(mention, true)?;
    candidates
        .iter()
        .map(|c| {
            let node = graph
                .node(c)
                .ok_or_else(|| LinkError::Graph(crate::GraphError::UnknownNode(c.clone())))?;
            let mut f = string_features(mention_text, &node.label)?;
            f.graph_dist = hops_to_feature(dist.get(c).copied());
            Ok(f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair() {
        let f = string_features("mark suarez", "Mark Suarez").unwrap();
        assert_eq!(f.exact_match, 1.0);
        assert_eq!(f.levenshtein, 0.0);
        assert_eq!(f.jaro_winkler, 1.0);
        assert_eq!(f.lcs_len, 11.0);
        assert_eq!(f.lcs_norm, 1.0);
    }

    #[test]
    fn token_sets() {
        let f = string_features("Stephanie Jules", "Stephanie Shields").unwrap();
        assert_eq!(f.token_diff_card, 1.0);
        assert_eq!(f.token_union_card, 3.0);
        assert_eq!(
            tokens("Hi, Wendy!"),
            ["hi", "wendy"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn normalized_by_mention_length() {
        let f = string_features("his", "Mark Suarez").unwrap();
        assert_eq!(f.levenshtein_norm, f.levenshtein / 3.0);
        assert_eq!(
            string_features("kitten", "sitting").unwrap().levenshtein,
            3.0
        );
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(
            string_features("  ", "x"),
            Err(LinkError::EmptyText)
        ));
        assert!(matches!(
            string_features("x", ""),
            Err(LinkError::EmptyText)
        ));
    }

    #[test]
    fn distance_values() {
        assert_eq!(hops_to_feature(Some(2)), 0.25);
        assert_eq!(hops_to_feature(None), 0.0009765625);
        assert_eq!(hops_to_feature(Some(25)), 0.0009765625);
        for l in 1..10 {
            assert!(hops_to_feature(Some(l)) > hops_to_feature(Some(l + 1)));
        }
    }

    #[test]
    fn chain_shortcut_on_three_utterances() {
        use crate::graph::{EdgeKind, NodeKind, Speaker};
        let mut g = KnowledgeGraph::new();
        let mark = g
            .add_node(NodeKind::Person, "Mark Suarez", Default::default())
            .unwrap();
        let (_, first) = g
            .add_utterance(Speaker::User, "Mark Suarez", 0.0, 1.0, &["Mark Suarez"])
            .unwrap();
        g.add_edge(&first[0], &mark, EdgeKind::RefersTo).unwrap();
        g.add_utterance::<&str>(Speaker::Agent, "Yes.", 1.0, 2.0, &[])
            .unwrap();
        let (_, his) = g
            .add_utterance(Speaker::User, "his office", 2.0, 3.0, &["his"])
            .unwrap();
        assert_eq!(graph_distance_feature(&g, &his[0], &mark).unwrap(), 0.03125);
        crate::linking::inject_coref(&mut g, &[vec![his[0].clone(), first[0].clone()]]).unwrap();
        assert_eq!(graph_distance_feature(&g, &his[0], &mark).unwrap(), 0.25);
    }
}
