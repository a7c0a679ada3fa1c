//! Response ranking: relevant-subgraph extraction, template verbalization,
//! context assembly, and candidate scoring.

mod augment;
mod negatives;
mod scorer;
mod sidecar;
mod templates;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, KnowledgeGraph, NodeId, Speaker};

pub use augment::{augment, Augmented};
pub use negatives::{sample_negatives, NegativeMethod};
pub use scorer::{
    terms, tfidf_cosine, train_scorer, NativeScorer, Scorer, TfIdfSpace, TrainConfig, TrainExample,
    TrainMode, TrainOutcome,
};
pub use sidecar::{Frame, SidecarScorer};
pub use templates::{verbalize, TemplateRegistry};

/// Number of candidates per ranking instance.
pub const CANDIDATES: usize = 10;
/// Default context budget in whitespace tokens.
pub const DEFAULT_BUDGET: usize = 512;

#[derive(Debug, Error)]
pub enum RankError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no template for `{0}`")]
    MissingTemplate(String),
    #[error("template for `{key}` is malformed: {message}")]
    BadTemplate { key: String, message: String },
    #[error("subgraph text has {tokens} tokens, over the budget of {budget}")]
    OverBudget { tokens: usize, budget: usize },
    #[error("response pool has {available} usable entries, {needed} needed")]
    PoolTooSmall { available: usize, needed: usize },
    #[error("scorer transport failed for batch {batch}: {message}")]
    Transport { batch: u64, message: String },
    #[error("scorer returned an error for batch {batch}: {message}")]
    Remote { batch: u64, message: String },
    #[error("scorer does not support {0}")]
    Unsupported(&'static str),
    #[error("training stream is empty")]
    EmptyTraining,
    #[error("invalid ranking instance: {0}")]
    Instance(String),
    #[error("{0}")]
    Io(String),
}

/// Linked entities plus their linkable one-hop neighbors, with every edge
/// among them. Nodes keep first-mention order, neighbors following.
pub fn relevant_subgraph(
    graph: &KnowledgeGraph,
    linked: &[NodeId],
) -> Result<KnowledgeGraph, RankError> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    for id in linked {
        if graph.node(id).is_none() {
            return Err(GraphError::UnknownNode(id.clone()).into());
        }
        if seen.insert(id.clone()) {
            order.push(id.clone());
        }
    }
    let mentioned = order.len();
    for i in 0..mentioned {
        for n in graph.neighbors(&order[i], true)? {
            if graph.node(&n).is_some_and(|node| node.kind.is_linkable()) && seen.insert(n.clone())
            {
                order.push(n);
            }
        }
    }
    Ok(graph.induced_subgraph(&order)?)
}

/// What precedes the candidate responses in the scorer input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    History,
    SubgraphHistory,
}

impl std::str::FromStr for InputMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "history" => Ok(InputMode::History),
            "subgraph+history" | "subgraph_history" => Ok(InputMode::SubgraphHistory),
            other => Err(format!(
                "unknown input mode `{other}` (expected history or subgraph+history)"
            )),
        }
    }
}

impl std::fmt::Display for InputMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputMode::History => "history",
            InputMode::SubgraphHistory => "subgraph+history",
        })
    }
}

/// Scorer input for one decision point.
pub fn build_context(
    graph: &KnowledgeGraph,
    linked: &[NodeId],
    history: &[(Speaker, String)],
    mode: InputMode,
    registry: &TemplateRegistry,
    budget: usize,
) -> Result<String, RankError> {
    let text = match mode {
        InputMode::History => String::new(),
        InputMode::SubgraphHistory => verbalize(&relevant_subgraph(graph, linked)?, registry)?,
    };
    assemble_context(&text, history, budget)
}

/// Whitespace token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn speaker_tag(s: Speaker) -> &'static str {
    match s {
        Speaker::User => "Visitor:",
        Speaker::Agent => "Robot:",
    }
}

/// Subgraph text followed by speaker-tagged history, dropping the oldest
/// turns until everything fits in `budget` whitespace tokens.
pub fn assemble_context(
    subgraph_text: &str,
    history: &[(Speaker, String)],
    budget: usize,
) -> Result<String, RankError> {
    let head = token_count(subgraph_text);
    if head > budget {
        return Err(RankError::OverBudget {
            tokens: head,
            budget,
        });
    }
    let mut used = head;
    let mut kept = Vec::new();
    for (speaker, text) in history.iter().rev() {
        let line = format!("{} {}", speaker_tag(*speaker), text.trim());
        let n = token_count(&line);
        if used + n > budget {
            break;
        }
        used += n;
        kept.push(line);
    }
    kept.reverse();
    let mut parts = Vec::with_capacity(kept.len() + 1);
    if !subgraph_text.trim().is_empty() {
        parts.push(subgraph_text.trim().to_string());
    }
    parts.extend(kept);
    Ok(parts.join("\n"))
}

/// Context, ten candidate responses, and the position of the gold one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingInstance {
    pub context: String,
    pub candidates: Vec<String>,
    pub gold_index: usize,
}

impl RankingInstance {
    pub fn validate(&self) -> Result<(), RankError> {
        if self.candidates.len() != CANDIDATES {
            return Err(RankError::Instance(format!(
                "{} candidates, expected {CANDIDATES}",
                self.candidates.len()
            )));
        }
        if self.gold_index >= self.candidates.len() {
            return Err(RankError::Instance(format!(
                "gold index {} out of range",
                self.gold_index
            )));
        }
        let distinct: HashSet<&String> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err(RankError::Instance("candidates are not distinct".into()));
        }
        Ok(())
    }
}

/// Candidate indices by descending score; ties keep their original order.
pub fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

pub fn rank<S: Scorer + ?Sized>(
    scorer: &S,
    context: &str,
    candidates: &[String],
) -> Result<Vec<usize>, RankError> {
    Ok(order_by_score(&scorer.score(context, candidates)?))
}

/// 1-based rank of `gold` within an ordering.
pub fn gold_rank(order: &[usize], gold: usize) -> usize {
    order
        .iter()
        .position(|&i| i == gold)
        .map_or(order.len() + 1, |p| p + 1)
}

/// Fraction of instances whose gold response ranks within the top `k`.
pub fn recall_at_k(gold_ranks: &[usize], k: usize) -> f64 {
    if gold_ranks.is_empty() {
        return 0.0;
    }
    gold_ranks.iter().filter(|&&r| r <= k).count() as f64 / gold_ranks.len() as f64
}

/// Mean reciprocal rank.
pub fn mrr(gold_ranks: &[usize]) -> f64 {
    if gold_ranks.is_empty() {
        return 0.0;
    }
    gold_ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / gold_ranks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, NodeKind};
    use std::collections::BTreeMap;

    pub(crate) fn fig3_background() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        let add = |g: &mut KnowledgeGraph, id: &str, kind, label: &str| {
            g.add_node_with_id(NodeId::new(id), kind, label, BTreeMap::new())
                .unwrap()
        };
        let mark = add(&mut g, "person:1", NodeKind::Person, "Mark Suarez");
        let ws = add(&mut g, "event:0", NodeKind::Event, "users workshop");
        let room = add(&mut g, "room:3", NodeKind::Room, "room 270");
        let grp = add(&mut g, "group:0", NodeKind::Group, "Mathematics");
        let other = add(&mut g, "person:9", NodeKind::Person, "Helen Okafor");
        g.add_edge(&mark, &ws, EdgeKind::Organizes).unwrap();
        g.add_edge(&mark, &room, EdgeKind::HasOffice).unwrap();
        g.add_edge(&mark, &grp, EdgeKind::MemberOf).unwrap();
        g.add_edge(&other, &grp, EdgeKind::MemberOf).unwrap();
        g
    }

    #[test]
    fn subgraph_of_mark() {
        let g = fig3_background();
        let s = relevant_subgraph(&g, &[NodeId::new("person:1")]).unwrap();
        assert_eq!(s.node_count(), 4);
        assert_eq!(s.edge_count(), 3);
        assert!(relevant_subgraph(&g, &[]).unwrap().node_count() == 0);
        assert!(relevant_subgraph(&g, &[NodeId::new("nope")]).is_err());
    }

    #[test]
    fn subgraph_skips_dialogue_nodes() {
        let mut g = fig3_background();
        let (_, ms) = g
            .add_utterance(Speaker::User, "Mark", 0.0, 1.0, &["Mark"])
            .unwrap();
        g.add_edge(&ms[0], &NodeId::new("person:1"), EdgeKind::RefersTo)
            .unwrap();
        let s = relevant_subgraph(&g, &[NodeId::new("person:1")]).unwrap();
        assert!(s.nodes().all(|n| n.kind.is_linkable()));
    }

    #[test]
    fn context_budget() {
        let history = vec![
            (Speaker::User, "one two three".to_string()),
            (Speaker::Agent, "four five".to_string()),
            (Speaker::User, "six".to_string()),
        ];
        assert_eq!(
            assemble_context("", &history, 100).unwrap(),
            "Visitor: one two three\nRobot: four five\nVisitor: six"
        );
        let c = assemble_context("A fact.", &history, 8).unwrap();
        assert_eq!(c, "A fact.\nRobot: four five\nVisitor: six");
        assert!(matches!(
            assemble_context("a b c", &history, 2),
            Err(RankError::OverBudget { .. })
        ));
    }

    #[test]
    fn metric_arithmetic() {
        let ranks = [1, 2, 4];
        assert!((recall_at_k(&ranks, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((recall_at_k(&ranks, 2) - 2.0 / 3.0).abs() < 1e-12);
        assert!((mrr(&ranks) - 1.75 / 3.0).abs() < 1e-12);
        assert_eq!(mrr(&[1, 1]), 1.0);
    }

    #[test]
    fn stable_ordering() {
        assert_eq!(order_by_score(&[0.5, 0.5, 0.5]), vec![0, 1, 2]);
        assert_eq!(order_by_score(&[0.1, 0.9, 0.5]), vec![1, 2, 0]);
        assert_eq!(order_by_score(&[0.3]), vec![0]);
        assert_eq!(gold_rank(&[1, 2, 0], 0), 3);
    }

    #[test]
    fn instance_validation() {
        let candidates: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        let ok = RankingInstance {
            context: "c".into(),
            candidates: candidates.clone(),
            gold_index: 3,
        };
        assert!(ok.validate().is_ok());
        let mut dup = ok.clone();
        dup.candidates[1] = "r0".into();
        assert!(dup.validate().is_err());
        let short = RankingInstance {
            candidates: candidates[..9].to_vec(),
            ..ok
        };
        assert!(short.validate().is_err());
    }
}
