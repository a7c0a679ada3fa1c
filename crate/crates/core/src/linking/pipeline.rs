//! Turn-by-turn replay of annotated dialogues through the graph.
//!
//! Each turn is appended with `add_utterance`, available coreference edges
//! are injected, every mention is linked against the graph as it stands, and
//! only then are the turn's links committed. Links on agent turns are always
//! the gold ones since the system knows what it referred to.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::baselines::{baseline_recency, baseline_string_equality};
use super::coref::{heuristic_coref, inject_coref, Chain, MentionRef, NameLexicon};
use super::features::{candidate_features, LinkFeatureVector};
use super::model::LinkerModel;
use super::{candidate_set, link, LinkDecision, LinkError, Prf};
use crate::dataset::{DialogueRecord, MentionAnnotation, Target};
use crate::graph::{EdgeKind, KnowledgeGraph, NodeId, Speaker};

#[derive(Debug, Clone, Copy)]
pub enum Linker<'a> {
    StringEquality,
    Recency,
    Model(&'a LinkerModel),
}

impl Linker<'_> {
    pub fn decide(
        &self,
        graph: &KnowledgeGraph,
        mention: &NodeId,
    ) -> Result<LinkDecision, LinkError> {
        match self {
            Linker::StringEquality => baseline_string_equality(graph, mention),
            Linker::Recency => baseline_recency(graph, mention),
            Linker::Model(m) => link(m, graph, mention, &candidate_set(graph, mention)?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Linker::StringEquality => "string_equality".to_string(),
            Linker::Recency => "recency".to_string(),
            Linker::Model(m) => format!("{} {}", m.kind, m.features),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum CorefSource {
    #[default]
    None,
    Heuristic,
    /// Precomputed chains, possibly covering many dialogues.
    Chains(Vec<Chain>),
}

impl CorefSource {
    pub fn chains_for(&self, dialogue: &DialogueRecord, lexicon: &NameLexicon) -> Vec<Chain> {
        match self {
            CorefSource::None => Vec::new(),
            CorefSource::Heuristic => heuristic_coref(&dialogue.id, &dialogue.turns, lexicon),
            CorefSource::Chains(all) => all
                .iter()
                .filter(|c| c.first().is_some_and(|m| m.dialogue == dialogue.id))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkCommit {
    /// Commit predictions on user turns and gold links on agent turns.
    #[default]
    Predicted,
    /// Commit gold links everywhere (used when building training data).
    Gold,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOptions {
    pub coref: CorefSource,
    pub commit: LinkCommit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetTag {
    Linked,
    Spurious,
    New,
}

/// Outcome for one annotated mention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub dialogue: String,
    pub turn: usize,
    pub index: usize,
    pub speaker: Speaker,
    pub surface: String,
    pub node: NodeId,
    pub target: TargetTag,
    pub gold: Vec<NodeId>,
    pub predicted: Vec<NodeId>,
}

fn gold_of(m: &MentionAnnotation) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = m.targets.entities().iter().map(NodeId::new).collect();
    v.sort();
    v.dedup();
    v
}

fn target_tag(t: &Target) -> TargetTag {
    match t {
        Target::Entities(_) => TargetTag::Linked,
        Target::Spurious => TargetTag::Spurious,
        Target::New => TargetTag::New,
    }
}

/// Replays `dialogue` on a copy of `org_graph`, calling `on_mention` for every
/// mention before the turn's links are committed. The callback returns the
/// predicted entity set.
pub fn replay_with<F>(
    org_graph: &KnowledgeGraph,
    dialogue: &DialogueRecord,
    options: &ReplayOptions,
    mut on_mention: F,
) -> Result<(KnowledgeGraph, Vec<MentionRecord>), LinkError>
where
    F: FnMut(&KnowledgeGraph, &NodeId, &MentionAnnotation) -> Result<Vec<NodeId>, LinkError>,
{
    let lexicon = NameLexicon::from_graph(org_graph);
    let chains = options.coref.chains_for(dialogue, &lexicon);
    let mut graph = org_graph.clone();
    let mut nodes: HashMap<MentionRef, NodeId> = HashMap::new();
    let mut records = Vec::new();

    for turn in &dialogue.turns {
        let surfaces: Vec<&str> = turn.mentions.iter().map(|m| m.surface.as_str()).collect();
        let t = turn.i as f64;
        let (_, ids) = graph.add_utterance(turn.speaker, &turn.asr, t, t + 1.0, &surfaces)?;
        for (j, id) in ids.iter().enumerate() {
            nodes.insert(
                MentionRef {
                    dialogue: dialogue.id.clone(),
                    turn: turn.i,
                    mention: j,
                },
                id.clone(),
            );
        }
        let present: Vec<Vec<NodeId>> = chains
            .iter()
            .map(|c| {
                c.iter()
                    .filter_map(|r| nodes.get(r).cloned())
                    .collect::<Vec<_>>()
            })
            .filter(|c| c.len() >= 2)
            .collect();
        inject_coref(&mut graph, &present)?;

        let mut commits = Vec::new();
        for (j, (id, ann)) in ids.iter().zip(&turn.mentions).enumerate() {
            let mut predicted = on_mention(&graph, id, ann)?;
            predicted.sort();
            predicted.dedup();
            let gold = gold_of(ann);
            let commit = match (options.commit, turn.speaker) {
                (LinkCommit::Predicted, Speaker::User) => predicted.clone(),
                _ => gold.clone(),
            };
            commits.push((id.clone(), commit));
            records.push(MentionRecord {
                dialogue: dialogue.id.clone(),
                turn: turn.i,
                index: j,
                speaker: turn.speaker,
                surface: ann.surface.clone(),
                node: id.clone(),
                target: target_tag(&ann.targets),
                gold,
                predicted,
            });
        }
        for (id, entities) in commits {
            for e in entities {
                graph.add_edge(&id, &e, EdgeKind::RefersTo)?;
            }
        }
    }

    for r in chains.iter().flatten() {
        if !nodes.contains_key(r) {
            return Err(LinkError::UnknownChainMember(r.clone()));
        }
    }
    Ok((graph, records))
}

pub fn replay_dialogue(
    org_graph: &KnowledgeGraph,
    dialogue: &DialogueRecord,
    linker: &Linker<'_>,
    options: &ReplayOptions,
) -> Result<(KnowledgeGraph, Vec<MentionRecord>), LinkError> {
    replay_with(org_graph, dialogue, options, |g, id, _| {
        Ok(linker.decide(g, id)?.entities)
    })
}

/// Labeled (mention, candidate) feature vectors from a gold-committed replay.
pub fn training_examples(
    org_graph: &KnowledgeGraph,
    dialogue: &DialogueRecord,
    coref: &CorefSource,
) -> Result<Vec<(LinkFeatureVector, bool)>, LinkError> {
    let mut out = Vec::new();
    let options = ReplayOptions {
        coref: coref.clone(),
        commit: LinkCommit::Gold,
    };
    replay_with(org_graph, dialogue, &options, |g, id, ann| {
        let candidates = candidate_set(g, id)?;
        let gold: BTreeSet<NodeId> = gold_of(ann).into_iter().collect();
        let feats = candidate_features(g, id, &ann.surface, &candidates)?;
        out.extend(
            feats
                .into_iter()
                .zip(&candidates)
                .map(|(f, c)| (f, gold.contains(c))),
        );
        Ok(gold.into_iter().collect())
    })?;
    Ok(out)
}

/// Which speakers' mentions are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerScope {
    #[default]
    User,
    Agent,
    All,
}

impl SpeakerScope {
    pub fn includes(self, s: Speaker) -> bool {
        match self {
            SpeakerScope::User => s == Speaker::User,
            SpeakerScope::Agent => s == Speaker::Agent,
            SpeakerScope::All => true,
        }
    }
}

impl std::str::FromStr for SpeakerScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "user" => Ok(SpeakerScope::User),
            "agent" => Ok(SpeakerScope::Agent),
            "all" => Ok(SpeakerScope::All),
            other => Err(format!(
                "unknown speaker scope `{other}` (expected user, agent or all)"
            )),
        }
    }
}

/// Records that count towards the metrics: in-scope speakers, in turns that
/// have at least one gold-linked mention.
pub fn scored_records(records: &[MentionRecord], scope: SpeakerScope) -> Vec<&MentionRecord> {
    let linked_turns: BTreeSet<(&str, usize)> = records
        .iter()
        .filter(|r| !r.gold.is_empty())
        .map(|r| (r.dialogue.as_str(), r.turn))
        .collect();
    records
        .iter()
        .filter(|r| {
            scope.includes(r.speaker) && linked_turns.contains(&(r.dialogue.as_str(), r.turn))
        })
        .collect()
}

pub fn score_records(records: &[MentionRecord], scope: SpeakerScope) -> Prf {
    Prf::from_sets(
        scored_records(records, scope)
            .into_iter()
            .map(|r| (&r.predicted[..], &r.gold[..])),
    )
}

/// Per-dialogue metrics in dialogue id order.
pub fn score_by_dialogue(records: &[MentionRecord], scope: SpeakerScope) -> BTreeMap<String, Prf> {
    let mut by: BTreeMap<String, Vec<MentionRecord>> = BTreeMap::new();
    for r in records {
        by.entry(r.dialogue.clone()).or_default().push(r.clone());
    }
    by.into_iter()
        .map(|(d, rs)| (d, score_records(&rs, scope)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, org_to_graph};

    fn org_graph() -> KnowledgeGraph {
        org_to_graph(&fixtures::org()).unwrap()
    }

    #[test]
    fn replay_builds_valid_graph() {
        let g0 = org_graph();
        for d in fixtures::dialogues() {
            let opts = ReplayOptions {
                coref: CorefSource::Heuristic,
                ..Default::default()
            };
            let (g, records) = replay_dialogue(&g0, &d, &Linker::Recency, &opts).unwrap();
            assert!(g.validate().is_ok());
            assert_eq!(records.len(), d.mention_count());
            assert!(g.edges().any(|e| e.kind == EdgeKind::SameChain));
        }
    }

    #[test]
    fn recency_resolves_his() {
        let d = fixtures::dialogue_1();
        let (_, records) = replay_dialogue(
            &org_graph(),
            &d,
            &Linker::Recency,
            &ReplayOptions::default(),
        )
        .unwrap();
        let his = records
            .iter()
            .find(|r| r.turn == 3 && r.index == 0)
            .unwrap();
        assert_eq!(his.surface, "his");
        assert_eq!(his.predicted, vec![NodeId::new("person:1")]);
    }

    #[test]
    fn string_equality_misses_anaphors() {
        let d = fixtures::dialogue_1();
        let (_, records) = replay_dialogue(
            &org_graph(),
            &d,
            &Linker::StringEquality,
            &ReplayOptions::default(),
        )
        .unwrap();
        let p = score_records(&records, SpeakerScope::User);
        assert_eq!(p.precision, 1.0);
        assert!(p.recall < 1.0);
    }

    #[test]
    fn scope_requires_a_gold_linked_turn() {
        let rec =
            |turn: usize, speaker: Speaker, gold: &[&str], predicted: &[&str]| MentionRecord {
                dialogue: "d".into(),
                turn,
                index: 0,
                speaker,
                surface: "x".into(),
                node: NodeId::new(format!("mention:{turn}")),
                target: if gold.is_empty() {
                    TargetTag::Spurious
                } else {
                    TargetTag::Linked
                },
                gold: gold.iter().map(|s| NodeId::new(*s)).collect(),
                predicted: predicted.iter().map(|s| NodeId::new(*s)).collect(),
            };
        let records = vec![
            rec(1, Speaker::User, &[], &["person:9"]),
            rec(2, Speaker::User, &["person:1"], &["person:1"]),
            rec(2, Speaker::User, &[], &["person:2"]),
            rec(3, Speaker::Agent, &["person:1"], &[]),
        ];
        let user = score_records(&records, SpeakerScope::User);
        assert_eq!((user.true_positives, user.predicted, user.gold), (1, 2, 1));
        let all = score_records(&records, SpeakerScope::All);
        assert_eq!((all.true_positives, all.predicted, all.gold), (1, 2, 2));
    }

    #[test]
    fn foreign_chain_member_is_reported() {
        let d = fixtures::dialogue_1();
        let bad = vec![vec![
            MentionRef {
                dialogue: d.id.clone(),
                turn: 1,
                mention: 0,
            },
            MentionRef {
                dialogue: d.id.clone(),
                turn: 99,
                mention: 0,
            },
        ]];
        let opts = ReplayOptions {
            coref: CorefSource::Chains(bad),
            ..Default::default()
        };
        assert!(matches!(
            replay_dialogue(&org_graph(), &d, &Linker::Recency, &opts),
            Err(LinkError::UnknownChainMember(_))
        ));
    }

    #[test]
    fn training_examples_have_both_labels() {
        let d = fixtures::dialogue_1();
        let ex = training_examples(&org_graph(), &d, &CorefSource::Heuristic).unwrap();
        let n_entities = org_graph().linkable_entities().count();
        assert_eq!(ex.len(), d.mention_count() * n_entities);
        assert!(ex.iter().any(|(_, y)| *y) && ex.iter().any(|(_, y)| !*y));
    }
}
