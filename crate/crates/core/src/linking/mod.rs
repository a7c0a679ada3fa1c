//! Conversational entity linking: features, coreference, classifiers,
//! baselines, and dialogue replay.

pub mod baselines;
pub mod coref;
pub mod features;
pub mod model;
pub mod optim;
pub mod pipeline;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, KnowledgeGraph, NodeId, NodeKind};

pub use baselines::{baseline_recency, baseline_string_equality};
pub use coref::{heuristic_coref, inject_coref, Chain, MentionRef, NameLexicon};
pub use features::{
    candidate_features, graph_distance_feature, string_features, FeatureSet, LinkFeatureVector,
};
pub use model::{train_linker, Hyper, LinkerModel, ModelKind, OptimizerKind};
pub use pipeline::{CorefSource, Linker, MentionRecord, ReplayOptions};

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("string features need non-empty mention and entity text")]
    EmptyText,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node `{0}` is not a mention of this graph")]
    ForeignMention(NodeId),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("decisions and gold are misaligned at position {position}")]
    Misaligned { position: usize },
    #[error("chain refers to unknown mention {0:?}")]
    UnknownChainMember(MentionRef),
    #[error("{0}")]
    Io(String),
    #[error("malformed file: {0}")]
    Format(String),
}

/// Predicted entity set for one mention, with the score of every candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDecision {
    pub mention: NodeId,
    /// Sorted by id.
    pub entities: Vec<NodeId>,
    pub scores: Vec<(NodeId, f64)>,
}

impl LinkDecision {
    pub fn empty(mention: NodeId) -> Self {
        LinkDecision {
            mention,
            entities: Vec::new(),
            scores: Vec::new(),
        }
    }
}

/// Every linkable entity of the graph.
pub fn candidate_set(graph: &KnowledgeGraph, mention: &NodeId) -> Result<Vec<NodeId>, LinkError> {
    match graph.node(mention) {
        Some(n) if n.kind == NodeKind::Mention => {
            Ok(graph.linkable_entities().map(|n| n.id.clone()).collect())
        }
        Some(_) => Err(LinkError::ForeignMention(mention.clone())),
        None => Err(GraphError::UnknownNode(mention.clone()).into()),
    }
}

/// Scores every candidate and keeps those at or above the model threshold.
pub fn link(
    model: &LinkerModel,
    graph: &KnowledgeGraph,
    mention: &NodeId,
    candidates: &[NodeId],
) -> Result<LinkDecision, LinkError> {
    let text = &graph
        .node(mention)
        .ok_or_else(|| GraphError::UnknownNode(mention.clone()))?
        .label;
    let feats = candidate_features(graph, mention, text, candidates)?;
    let scores = model.score_all(&feats);
    let mut entities: Vec<NodeId> = candidates
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s >= model.threshold)
        .map(|(c, _)| c.clone())
        .collect();
    entities.sort();
    entities.dedup();
    Ok(LinkDecision {
        mention: mention.clone(),
        entities,
        scores: candidates.iter().cloned().zip(scores).collect(),
    })
}

/// Micro-averaged precision, recall and F1 over (mention, entity) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    /// Zero predictions give precision 0.
    pub fn from_counts(true_positives: usize, predicted: usize, gold: usize) -> Prf {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(true_positives, predicted);
        let recall = ratio(true_positives, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            true_positives,
            predicted,
            gold,
        }
    }

    /// Accumulates pair counts over aligned (predicted, gold) sets.
    pub fn from_sets<'a, I, T>(pairs: I) -> Prf
    where
        I: IntoIterator<Item = (&'a [T], &'a [T])>,
        T: Ord + 'a,
    {
        let (mut tp, mut p, mut g) = (0, 0, 0);
        for (pred, gold) in pairs {
            let pred: BTreeSet<&T> = pred.iter().collect();
            let gold: BTreeSet<&T> = gold.iter().collect();
            tp += pred.intersection(&gold).count();
            p += pred.len();
            g += gold.len();
        }
        Prf::from_counts(tp, p, g)
    }
}

/// Gold entity set of one mention; empty for spurious and new-entity mentions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldLinks {
    pub mention: NodeId,
    pub entities: Vec<NodeId>,
}

pub fn evaluate_linking(decisions: &[LinkDecision], gold: &[GoldLinks]) -> Result<Prf, LinkError> {
    if decisions.len() != gold.len() {
        return Err(LinkError::Misaligned {
            position: decisions.len().min(gold.len()),
        });
    }
    if let Some(position) = decisions
        .iter()
        .zip(gold)
        .position(|(d, g)| d.mention != g.mention)
    {
        return Err(LinkError::Misaligned { position });
    }
    Ok(Prf::from_sets(
        decisions
            .iter()
            .zip(gold)
            .map(|(d, g)| (&d.entities[..], &g.entities[..])),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, org_to_graph, Speaker};

    fn ids(v: &[&str]) -> Vec<NodeId> {
        v.iter().map(|s| NodeId::new(*s)).collect()
    }

    fn decision(m: &str, e: &[&str]) -> LinkDecision {
        LinkDecision {
            mention: NodeId::new(m),
            entities: ids(e),
            scores: vec![],
        }
    }

    fn gold(m: &str, e: &[&str]) -> GoldLinks {
        GoldLinks {
            mention: NodeId::new(m),
            entities: ids(e),
        }
    }

    #[test]
    fn prf_conventions() {
        let g = [gold("m1", &["a"]), gold("m2", &["b"])];
        let perfect =
            evaluate_linking(&[decision("m1", &["a"]), decision("m2", &["b"])], &g).unwrap();
        assert_eq!(
            (perfect.precision, perfect.recall, perfect.f1),
            (1.0, 1.0, 1.0)
        );
        let none = evaluate_linking(&[decision("m1", &[]), decision("m2", &[])], &g).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
        let half = evaluate_linking(&[decision("m1", &["a"]), decision("m2", &["c"])], &g).unwrap();
        assert_eq!((half.precision, half.recall, half.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn misaligned_rejected() {
        let g = [gold("m1", &["a"])];
        assert!(matches!(
            evaluate_linking(&[decision("m9", &[])], &g),
            Err(LinkError::Misaligned { position: 0 })
        ));
        assert!(evaluate_linking(&[], &g).is_err());
    }

    #[test]
    fn candidates_are_all_entities() {
        let mut g = org_to_graph(&fixtures::org()).unwrap();
        let n = g.linkable_entities().count();
        let (utt, ms) = g
            .add_utterance(Speaker::User, "hi Wendy", 0.0, 1.0, &["Wendy"])
            .unwrap();
        let c = candidate_set(&g, &ms[0]).unwrap();
        assert_eq!(c.len(), n);
        assert!(c.iter().all(|id| g.node(id).unwrap().kind.is_linkable()));
        assert!(candidate_set(&g, &utt).is_err());

        let mut empty = KnowledgeGraph::new();
        let (_, ms) = empty
            .add_utterance(Speaker::User, "x", 0.0, 1.0, &["x"])
            .unwrap();
        assert!(candidate_set(&empty, &ms[0]).unwrap().is_empty());
    }
}
