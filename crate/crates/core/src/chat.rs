//! Live dialogue sessions: mention detection, incremental coreference and
//! linking, and response selection over the growing graph.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Intent, MentionAnnotation, Target, Turn};
use crate::graph::{EdgeKind, GraphError, KnowledgeGraph, NodeId, NodeKind, Speaker, Violation};
use crate::linking::coref::{
    anaphor_surfaces, heuristic_coref, inject_coref, MentionRef, NameLexicon, FUZZY_NAME_THRESHOLD,
};
use crate::linking::features::fold;
use crate::linking::{LinkError, Linker, LinkerModel};
use crate::org::{org_to_graph, OrgError, Organization};
use crate::ranking::{
    assemble_context, order_by_score, relevant_subgraph, verbalize, NativeScorer, RankError,
    Scorer, TemplateRegistry, DEFAULT_BUDGET,
};
use crate::strsim::jaro_winkler;

pub const CLARIFICATION: &str = "Sorry, I didn't understand that. Could you repeat?";
const DEFAULT_LINKER_JSON: &str = include_str!("../fixtures/default_linker.json");
const MAX_NAME_TOKENS: usize = 5;
const TOP_CANDIDATES: usize = 10;

/// The bundled MLP (string and graph features) trained on the synthetic
/// linking benchmark.
pub fn default_linker() -> LinkerModel {
    LinkerModel::from_json(DEFAULT_LINKER_JSON).expect("bundled linker model is valid")
}

#[derive(Debug, Error)]
pub enum ChatError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Org(#[from] OrgError),
    #[error("graph failed validation: {0:?}")]
    Invalid(Vec<Violation>),
}

/// A mention found in live text, with char offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedMention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

struct Token {
    start: usize,
    end: usize,
    folded: String,
    capitalized: bool,
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].is_whitespace() {
            j += 1;
        }
        let (mut s, mut e) = (i, j);
        while s < e && !chars[s].is_alphanumeric() {
            s += 1;
        }
        while e > s && !chars[e - 1].is_alphanumeric() {
            e -= 1;
        }
        if e >= s + 2 && chars[e - 2] == '\'' && matches!(chars[e - 1], 's' | 'S') {
            e -= 2;
        }
        if s < e {
            let word: String = chars[s..e].iter().collect();
            out.push(Token {
                start: s,
                end: e,
                folded: word.to_lowercase(),
                capitalized: chars[s].is_uppercase(),
            });
        }
        i = j;
    }
    out
}

/// Dictionary mention detection: exact entity names, capitalized given
/// names, fuzzy multi-word names, and (optionally) the closed anaphor list.
pub fn detect_mentions(text: &str, lexicon: &NameLexicon, anaphors: bool) -> Vec<DetectedMention> {
    let tokens = tokenize(text);
    let labels: BTreeSet<&str> = lexicon.entries().map(|(l, _, _)| l).collect();
    let given: BTreeSet<&str> = lexicon
        .entries()
        .filter(|(_, k, _)| *k == NodeKind::Person)
        .filter_map(|(l, _, _)| l.split(' ').next())
        .collect();
    let multi: Vec<(&str, usize)> = labels
        .iter()
        .map(|l| (*l, l.split(' ').count()))
        .filter(|(_, n)| *n >= 2)
        .collect();
    let mut taken = vec![false; tokens.len()];
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let phrase = |i: usize, n: usize| {
        tokens[i..i + n]
            .iter()
            .map(|t| t.folded.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut claim = |taken: &mut Vec<bool>, i: usize, n: usize| {
        taken[i..i + n].iter_mut().for_each(|t| *t = true);
        spans.push((tokens[i].start, tokens[i + n - 1].end));
    };
    let free = |taken: &[bool], i: usize, n: usize| taken[i..i + n].iter().all(|t| !t);

    for n in (1..=MAX_NAME_TOKENS.min(tokens.len())).rev() {
        for i in 0..=tokens.len() - n {
            if free(&taken, i, n) && labels.contains(phrase(i, n).as_str()) {
                claim(&mut taken, i, n);
            }
        }
    }
    for n in (2..=MAX_NAME_TOKENS.min(tokens.len())).rev() {
        for i in 0..=tokens.len() - n {
            if !free(&taken, i, n) {
                continue;
            }
            if !tokens[i..i + n].iter().all(|t| t.capitalized) {
                continue;
            }
            let p = phrase(i, n);
            if multi
                .iter()
                .any(|(l, k)| *k == n && jaro_winkler(&p, l) >= FUZZY_NAME_THRESHOLD)
            {
                claim(&mut taken, i, n);
            }
        }
    }
    for (i, t) in tokens.iter().enumerate() {
        if free(&taken, i, 1)
            && t.capitalized
            && t.folded.len() >= 3
            && given.contains(t.folded.as_str())
        {
            claim(&mut taken, i, 1);
        }
    }
    if anaphors {
        for a in anaphor_surfaces() {
            let n = a.split(' ').count();
            if n > tokens.len() {
                continue;
            }
            for i in 0..=tokens.len() - n {
                if free(&taken, i, n) && phrase(i, n) == a {
                    claim(&mut taken, i, n);
                }
            }
        }
    }
    spans.sort();
    let chars: Vec<char> = text.chars().collect();
    spans
        .into_iter()
        .map(|(s, e)| DetectedMention {
            start: s,
            end: e,
            surface: chars[s..e].iter().collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedMention {
    pub mention: NodeId,
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub entities: Vec<EntityRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub text: String,
    pub score: f64,
}

/// Everything computed for one user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub turn: usize,
    pub response: String,
    pub linked: Vec<LinkedMention>,
    pub subgraph_text: String,
    pub candidates: Vec<ScoredCandidate>,
    pub scorer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone)]
pub struct ChatConfig {
    pub linker: Arc<LinkerModel>,
    pub scorer: Arc<dyn Scorer>,
    pub registry: TemplateRegistry,
    /// Fixed responses always offered besides the generated answers.
    pub response_pool: Vec<String>,
    pub budget: usize,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            linker: Arc::new(default_linker()),
            scorer: Arc::new(NativeScorer),
            registry: TemplateRegistry::bundled(),
            response_pool: fixture_responses(),
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Agent responses of the bundled dialogues plus the clarification line.
pub fn fixture_responses() -> Vec<String> {
    let mut pool = vec![CLARIFICATION.to_string()];
    for d in crate::fixtures::dialogues() {
        for t in d
            .turns
            .iter()
            .filter(|t| t.speaker == Speaker::Agent && !t.asr.trim().is_empty())
        {
            if !pool.contains(&t.asr) {
                pool.push(t.asr.clone());
            }
        }
    }
    pool
}

pub struct ChatSession {
    pub id: String,
    pub org: Organization,
    pub graph: KnowledgeGraph,
    pub history: Vec<(Speaker, String)>,
    turns: Vec<Turn>,
    mention_nodes: HashMap<MentionRef, NodeId>,
    /// Linked entities in first-mention order.
    linked: Vec<NodeId>,
    lexicon: NameLexicon,
    config: ChatConfig,
}

fn clock(ts: &str) -> &str {
    ts.split('T')
        .nth(1)
        .map(|t| &t[..t.len().min(5)])
        .unwrap_or(ts)
}

fn list(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

impl ChatSession {
    pub fn new(
        id: impl Into<String>,
        org: Organization,
        config: ChatConfig,
    ) -> Result<ChatSession, ChatError> {
        let graph = org_to_graph(&org)?;
        let lexicon = NameLexicon::from_graph(&graph);
        Ok(ChatSession {
            id: id.into(),
            org,
            graph,
            history: Vec::new(),
            turns: Vec::new(),
            mention_nodes: HashMap::new(),
            linked: Vec::new(),
            lexicon,
            config,
        })
    }

    pub fn linked_entities(&self) -> &[NodeId] {
        &self.linked
    }

    fn entity_ref(&self, id: &NodeId) -> EntityRef {
        let n = self.graph.node(id).expect("linked entity exists");
        EntityRef {
            id: id.clone(),
            kind: n.kind,
            label: n.label.clone(),
        }
    }

    fn neighbors_by(&self, id: &NodeId, kind: EdgeKind, outgoing: bool) -> Vec<&str> {
        let edges = if outgoing {
            self.graph.out_edges(id)
        } else {
            self.graph.in_edges(id)
        };
        edges
            .unwrap_or_default()
            .into_iter()
            .filter(|(_, k)| *k == kind)
            .filter_map(|(n, _)| self.graph.node(&n).map(|n| n.label.as_str()))
            .collect()
    }

    /// Answers stating facts about `entities`, read off the graph.
    pub fn template_answers(&self, entities: &[NodeId]) -> Vec<String> {
        let mut out = Vec::new();
        for id in entities {
            let Some(n) = self.graph.node(id) else {
                continue;
            };
            let name = n.label.as_str();
            match n.kind {
                NodeKind::Person => {
                    for room in self.neighbors_by(id, EdgeKind::HasOffice, true) {
                        out.push(format!("The office of {name} is {room}."));
                    }
                    if let Some(email) = n.attrs.get("email") {
                        out.push(format!("You can reach {name} at {email}."));
                    }
                    if let Some(phone) = n.attrs.get("phone") {
                        out.push(format!("The phone number of {name} is {phone}."));
                    }
                    for g in self.neighbors_by(id, EdgeKind::MemberOf, true) {
                        out.push(format!("{name} is a member of the {g} group."));
                    }
                    for e in self.neighbors_by(id, EdgeKind::Organizes, true) {
                        out.push(format!("{name} is organizing {e}."));
                    }
                }
                NodeKind::Event => {
                    for p in self.neighbors_by(id, EdgeKind::Organizes, false) {
                        out.push(format!("The {name} is organized by {p}."));
                    }
                    for r in self.neighbors_by(id, EdgeKind::LocatedIn, true) {
                        out.push(format!("The {name} takes place in {r}."));
                    }
                    if let Some(start) = n.attrs.get("start") {
                        out.push(format!("The {name} starts at {}.", clock(start)));
                    }
                    let attendees = self.neighbors_by(id, EdgeKind::Attends, false);
                    if !attendees.is_empty() {
                        out.push(format!("The {name} is attended by {}.", list(&attendees)));
                    }
                }
                NodeKind::Group => {
                    let members = self.neighbors_by(id, EdgeKind::MemberOf, false);
                    out.push(format!("The {name} group has {} members.", members.len()));
                }
                NodeKind::Room => {
                    let events = self.neighbors_by(id, EdgeKind::LocatedIn, false);
                    if !events.is_empty() {
                        out.push(format!("{name} hosts {}.", list(&events)));
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn append_turn(
        &mut self,
        speaker: Speaker,
        text: &str,
        found: &[DetectedMention],
    ) -> Result<Vec<NodeId>, ChatError> {
        let i = self.turns.len() + 1;
        let surfaces: Vec<&str> = found.iter().map(|m| m.surface.as_str()).collect();
        let (_, ids) =
            self.graph
                .add_utterance(speaker, text, i as f64, i as f64 + 1.0, &surfaces)?;
        for (j, id) in ids.iter().enumerate() {
            self.mention_nodes.insert(
                MentionRef {
                    dialogue: self.id.clone(),
                    turn: i,
                    mention: j,
                },
                id.clone(),
            );
        }
        self.turns.push(Turn {
            i,
            speaker,
            asr: text.to_string(),
            gold: None,
            intent: Intent {
                name: String::new(),
                args: Vec::new(),
            },
            mentions: found
                .iter()
                .map(|m| MentionAnnotation {
                    start: m.start,
                    end: m.end,
                    surface: m.surface.clone(),
                    targets: Target::Entities(Vec::new()),
                    constraints: None,
                })
                .collect(),
        });
        self.history.push((speaker, text.to_string()));
        let chains: Vec<Vec<NodeId>> = heuristic_coref(&self.id, &self.turns, &self.lexicon)
            .into_iter()
            .map(|c| {
                c.iter()
                    .filter_map(|r| self.mention_nodes.get(r).cloned())
                    .collect::<Vec<_>>()
            })
            .filter(|c| c.len() >= 2)
            .collect();
        inject_coref(&mut self.graph, &chains)?;
        Ok(ids)
    }

    fn commit(&mut self, mention: &NodeId, entities: &[NodeId]) -> Result<(), ChatError> {
        for e in entities {
            self.graph.add_edge(mention, e, EdgeKind::RefersTo)?;
            if !self.linked.contains(e) {
                self.linked.push(e.clone());
            }
        }
        Ok(())
    }

    /// Processes one user utterance and selects the agent response.
    pub fn chat_turn(&mut self, user_text: &str) -> Result<ChatReply, ChatError> {
        let text = user_text.trim();
        let found = if text.is_empty() {
            Vec::new()
        } else {
            detect_mentions(text, &self.lexicon, true)
        };
        let ids = self.append_turn(Speaker::User, text, &found)?;
        let turn = self.turns.len();

        let model = Arc::clone(&self.config.linker);
        let linker = Linker::Model(&model);
        let mut linked = Vec::new();
        let mut decisions = Vec::new();
        for id in &ids {
            decisions.push(linker.decide(&self.graph, id)?);
        }
        for ((id, m), d) in ids.iter().zip(&found).zip(&decisions) {
            self.commit(id, &d.entities)?;
            linked.push(LinkedMention {
                mention: id.clone(),
                surface: m.surface.clone(),
                start: m.start,
                end: m.end,
                entities: d.entities.iter().map(|e| self.entity_ref(e)).collect(),
            });
        }

        let subgraph_text = verbalize(
            &relevant_subgraph(&self.graph, &self.linked)?,
            &self.config.registry,
        )?;
        let (response, candidates, scorer, warning) = if text.is_empty() {
            let only = vec![ScoredCandidate {
                text: CLARIFICATION.to_string(),
                score: 1.0,
            }];
            (CLARIFICATION.to_string(), only, "none".to_string(), None)
        } else {
            let focus: Vec<NodeId> = {
                let now: Vec<NodeId> = decisions.iter().flat_map(|d| d.entities.clone()).collect();
                if now.is_empty() {
                    self.linked.iter().rev().take(1).cloned().collect()
                } else {
                    now
                }
            };
            let mut pool = self.config.response_pool.clone();
            for a in self.template_answers(&focus) {
                if !pool.contains(&a) {
                    pool.push(a);
                }
            }
            let context = assemble_context(&subgraph_text, &self.history, self.config.budget)?;
            let (scores, scorer, warning) = match self.config.scorer.score(&context, &pool) {
                Ok(s) => (s, self.config.scorer.name().to_string(), None),
                Err(e) => (
                    NativeScorer.score(&context, &pool)?,
                    NativeScorer.name().to_string(),
                    Some(format!("scorer unavailable ({e}); used the native scorer")),
                ),
            };
            let order = order_by_score(&scores);
            let candidates: Vec<ScoredCandidate> = order
                .iter()
                .take(TOP_CANDIDATES)
                .map(|&i| ScoredCandidate {
                    text: pool[i].clone(),
                    score: scores[i],
                })
                .collect();
            (pool[order[0]].clone(), candidates, scorer, warning)
        };

        let agent_found: Vec<DetectedMention> = detect_mentions(&response, &self.lexicon, false);
        let agent_ids = self.append_turn(Speaker::Agent, &response, &agent_found)?;
        for (id, m) in agent_ids.iter().zip(&agent_found) {
            let entities = self.agent_targets(&m.surface);
            self.commit(id, &entities)?;
        }
        self.graph.validate().map_err(ChatError::Invalid)?;
        Ok(ChatReply {
            turn,
            response,
            linked,
            subgraph_text,
            candidates,
            scorer,
            warning,
        })
    }

    /// Entities the agent means by a name it uttered: same-label entities,
    /// preferring ones already in play, then people by given name.
    fn agent_targets(&self, surface: &str) -> Vec<NodeId> {
        let s = fold(surface);
        let mut exact: Vec<NodeId> = self
            .lexicon
            .entries()
            .filter(|(l, _, _)| *l == s)
            .map(|(_, _, id)| id.clone())
            .collect();
        if exact.is_empty() {
            exact = self
                .lexicon
                .entries()
                .filter(|(l, k, _)| {
                    *k == NodeKind::Person && l.split(' ').next() == Some(s.as_str())
                })
                .map(|(_, _, id)| id.clone())
                .collect();
        }
        let in_play: Vec<NodeId> = exact
            .iter()
            .filter(|e| self.linked.contains(e))
            .cloned()
            .collect();
        if in_play.is_empty() {
            exact
        } else {
            in_play
        }
    }
}
