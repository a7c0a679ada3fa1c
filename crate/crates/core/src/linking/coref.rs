//! Coreference chains: the heuristic chainer, chain files, and injection of
//! chains into the graph as `SameChain` cliques.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::fold;
use super::LinkError;
use crate::dataset::Turn;
use crate::graph::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};
use crate::strsim::jaro_winkler;

/// Minimum Jaro-Winkler similarity for a fuzzy name match.
pub const FUZZY_NAME_THRESHOLD: f64 = 0.85;

/// Address of a mention inside a dialogue: `(dialogue id, turn index, mention index)`.
/// Turn indices are 1-based as in the dialogue records, mention indices 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(String, usize, usize)", into = "(String, usize, usize)")]
pub struct MentionRef {
    pub dialogue: String,
    pub turn: usize,
    pub mention: usize,
}

impl From<(String, usize, usize)> for MentionRef {
    fn from((dialogue, turn, mention): (String, usize, usize)) -> Self {
        MentionRef {
            dialogue,
            turn,
            mention,
        }
    }
}

impl From<MentionRef> for (String, usize, usize) {
    fn from(m: MentionRef) -> Self {
        (m.dialogue, m.turn, m.mention)
    }
}

pub type Chain = Vec<MentionRef>;

pub fn read_chain_file(path: &Path) -> Result<Vec<Chain>, LinkError> {
    let text =
        fs::read_to_string(path).map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LinkError::Format(format!("{}: {e}", path.display())))
}

pub fn write_chain_file(path: &Path, chains: &[Chain]) -> Result<(), LinkError> {
    let text = serde_json::to_string(chains).expect("chains serialize");
    fs::write(path, text).map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))
}

/// Groups chains by dialogue id.
pub fn chains_by_dialogue(chains: &[Chain]) -> BTreeMap<String, Vec<Chain>> {
    let mut out: BTreeMap<String, Vec<Chain>> = BTreeMap::new();
    for c in chains {
        if let Some(first) = c.first() {
            out.entry(first.dialogue.clone())
                .or_default()
                .push(c.clone());
        }
    }
    out
}

/// Adds a `SameChain` edge between every pair of mentions of every chain.
/// Edges point from the later mention to the earlier one.
pub fn inject_coref(
    graph: &mut KnowledgeGraph,
    chains: &[Vec<NodeId>],
) -> Result<usize, LinkError> {
    for id in chains.iter().flatten() {
        match graph.node(id) {
            Some(n) if n.kind == NodeKind::Mention => {}
            _ => return Err(LinkError::ForeignMention(id.clone())),
        }
    }
    let mut added = 0;
    for chain in chains {
        for (j, later) in chain.iter().enumerate() {
            for earlier in &chain[..j] {
                if later != earlier
                    && !graph.has_edge(earlier, later, EdgeKind::SameChain)
                    && graph.add_edge(later, earlier, EdgeKind::SameChain)?
                {
                    added += 1;
                }
            }
        }
    }
    Ok(added)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnaphorClass {
    /// he, she, his, her, ...
    PersonSingular,
    /// they, them, their, ...
    Plural,
    /// it, its
    Thing,
    /// "the event", "that meeting", ...
    Event,
    Room,
    Group,
    PersonDescription,
}

impl AnaphorClass {
    fn accepts(self, kind: NodeKind) -> bool {
        match self {
            AnaphorClass::PersonSingular | AnaphorClass::PersonDescription => {
                kind == NodeKind::Person
            }
            AnaphorClass::Plural => matches!(kind, NodeKind::Person | NodeKind::Group),
            AnaphorClass::Thing => matches!(kind, NodeKind::Event | NodeKind::Room),
            AnaphorClass::Event => kind == NodeKind::Event,
            AnaphorClass::Room => kind == NodeKind::Room,
            AnaphorClass::Group => kind == NodeKind::Group,
        }
    }
}

const ANAPHORS: &[(&str, AnaphorClass)] = &[
    ("he", AnaphorClass::PersonSingular),
    ("him", AnaphorClass::PersonSingular),
    ("his", AnaphorClass::PersonSingular),
    ("himself", AnaphorClass::PersonSingular),
    ("she", AnaphorClass::PersonSingular),
    ("her", AnaphorClass::PersonSingular),
    ("hers", AnaphorClass::PersonSingular),
    ("herself", AnaphorClass::PersonSingular),
    ("they", AnaphorClass::Plural),
    ("them", AnaphorClass::Plural),
    ("their", AnaphorClass::Plural),
    ("theirs", AnaphorClass::Plural),
    ("themselves", AnaphorClass::Plural),
    ("it", AnaphorClass::Thing),
    ("its", AnaphorClass::Thing),
    ("the event", AnaphorClass::Event),
    ("that event", AnaphorClass::Event),
    ("this event", AnaphorClass::Event),
    ("the meeting", AnaphorClass::Event),
    ("that meeting", AnaphorClass::Event),
    ("this meeting", AnaphorClass::Event),
    ("the room", AnaphorClass::Room),
    ("that room", AnaphorClass::Room),
    ("the group", AnaphorClass::Group),
    ("that group", AnaphorClass::Group),
    ("that person", AnaphorClass::PersonDescription),
    ("this person", AnaphorClass::PersonDescription),
];

pub fn anaphor_class(surface: &str) -> Option<AnaphorClass> {
    let s = fold(surface);
    ANAPHORS.iter().find(|(a, _)| *a == s).map(|(_, c)| *c)
}

pub fn is_anaphor(surface: &str) -> bool {
    anaphor_class(surface).is_some()
}

/// Every anaphor surface the chainer recognizes, longest first.
pub fn anaphor_surfaces() -> Vec<&'static str> {
    let mut v: Vec<&str> = ANAPHORS.iter().map(|(a, _)| *a).collect();
    v.sort_by_key(|a| std::cmp::Reverse(a.len()));
    v
}

/// Entity names of an organization graph, for guessing the kind of a surface.
#[derive(Debug, Clone, Default)]
pub struct NameLexicon {
    entries: Vec<(String, NodeKind, NodeId)>,
}

impl NameLexicon {
    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        NameLexicon {
            entries: graph
                .linkable_entities()
                .map(|n| (fold(&n.label), n.kind, n.id.clone()))
                .collect(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, NodeKind, &NodeId)> {
        self.entries.iter().map(|(l, k, id)| (l.as_str(), *k, id))
    }

    /// Kind of the entity a name most plausibly denotes: exact label, then a
    /// person's given name, then the best fuzzy match above the threshold.
    pub fn guess_kind(&self, surface: &str) -> Option<NodeKind> {
        let s = fold(surface);
        if s.is_empty() {
            return None;
        }
        if let Some((_, k, _)) = self.entries.iter().find(|(l, _, _)| *l == s) {
            return Some(*k);
        }
        if !s.contains(' ')
            && self
                .entries
                .iter()
                .any(|(l, k, _)| *k == NodeKind::Person && l.split(' ').next() == Some(s.as_str()))
        {
            return Some(NodeKind::Person);
        }
        self.entries
            .iter()
            .map(|(l, k, _)| (jaro_winkler(&s, l), *k))
            .filter(|(sim, _)| *sim >= FUZZY_NAME_THRESHOLD)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, k)| k)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            x
        } else {
            let r = self.find(p);
            self.0[x] = r;
            r
        }
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Fallback chainer used when no precomputed chain file is available.
///
/// A third-person anaphor joins the chain of the most recent earlier
/// non-anaphoric mention whose guessed kind it accepts; plural anaphors also
/// take every other compatible person mention of that same turn. Non-anaphoric
/// mentions with equal case-folded surfaces are chained together.
pub fn heuristic_coref(dialogue: &str, turns: &[Turn], lexicon: &NameLexicon) -> Vec<Chain> {
    let flat: Vec<(MentionRef, String)> = turns
        .iter()
        .flat_map(|t| {
            t.mentions.iter().enumerate().map(move |(j, m)| {
                (
                    MentionRef {
                        dialogue: dialogue.to_string(),
                        turn: t.i,
                        mention: j,
                    },
                    m.surface.clone(),
                )
            })
        })
        .collect();
    let kinds: Vec<Option<NodeKind>> = flat
        .iter()
        .map(|(_, s)| {
            if is_anaphor(s) {
                None
            } else {
                lexicon.guess_kind(s)
            }
        })
        .collect();

    let mut uf = UnionFind((0..flat.len()).collect());
    let mut first_by_surface: BTreeMap<String, usize> = BTreeMap::new();
    for (i, (_, surface)) in flat.iter().enumerate() {
        match anaphor_class(surface) {
            None => {
                let key = fold(surface);
                match first_by_surface.get(&key) {
                    Some(&j) => uf.union(i, j),
                    None => {
                        first_by_surface.insert(key, i);
                    }
                }
            }
            Some(class) => {
                let antecedent = (0..i).rev().find(|&j| {
                    !is_anaphor(&flat[j].1) && kinds[j].is_some_and(|k| class.accepts(k))
                });
                if let Some(j) = antecedent {
                    uf.union(i, j);
                    if class == AnaphorClass::Plural && kinds[j] == Some(NodeKind::Person) {
                        let turn = flat[j].0.turn;
                        for k in 0..i {
                            if flat[k].0.turn == turn
                                && k != j
                                && kinds[k] == Some(NodeKind::Person)
                            {
                                uf.union(i, k);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Chain> = BTreeMap::new();
    for (i, (m, _)) in flat.iter().enumerate() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(m.clone());
    }
    groups.into_values().filter(|c| c.len() >= 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, org_to_graph};

    fn lexicon() -> NameLexicon {
        NameLexicon::from_graph(&org_to_graph(&fixtures::org()).unwrap())
    }

    fn chain_with(chains: &[Chain], turn: usize, mention: usize) -> Option<&Chain> {
        chains
            .iter()
            .find(|c| c.iter().any(|m| m.turn == turn && m.mention == mention))
    }

    #[test]
    fn possessive_chains_to_last_person() {
        let d = fixtures::dialogue_1();
        let chains = heuristic_coref(&d.id, &d.turns, &lexicon());
        let his = chain_with(&chains, 3, 0).expect("`his` is chained");
        // turn 2, mention 2 is "Mark Suarez"
        assert!(his.iter().any(|m| m.turn == 2 && m.mention == 2));
        assert!(
            !his.iter().any(|m| m.turn == 2 && m.mention == 1),
            "not the event"
        );
    }

    #[test]
    fn her_skips_the_event() {
        let d = fixtures::dialogue_2();
        let chains = heuristic_coref(&d.id, &d.turns, &lexicon());
        let her = chain_with(&chains, 9, 0).expect("`her` is chained");
        assert!(her.iter().any(|m| m.turn == 8 && m.mention == 0));
        assert!(her.iter().any(|m| m.turn == 7 && m.mention == 0));
        assert!(!her.iter().any(|m| m.turn == 8 && m.mention == 1));
    }

    #[test]
    fn no_pronouns_no_chains() {
        let mut d = fixtures::dialogue_1();
        d.turns.truncate(1);
        assert!(heuristic_coref(&d.id, &d.turns, &lexicon()).is_empty());
    }

    #[test]
    fn chain_file_format() {
        let chains = vec![vec![
            MentionRef {
                dialogue: "d1".into(),
                turn: 3,
                mention: 0,
            },
            MentionRef {
                dialogue: "d1".into(),
                turn: 2,
                mention: 2,
            },
        ]];
        let text = serde_json::to_string(&chains).unwrap();
        assert_eq!(text, r#"[[["d1",3,0],["d1",2,2]]]"#);
        let back: Vec<Chain> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, chains);
    }

    #[test]
    fn clique_injection() {
        let mut g = KnowledgeGraph::new();
        let (_, ms) = g
            .add_utterance(crate::Speaker::User, "a b c", 0.0, 1.0, &["a", "b", "c"])
            .unwrap();
        assert_eq!(inject_coref(&mut g, &[]).unwrap(), 0);
        assert_eq!(inject_coref(&mut g, std::slice::from_ref(&ms)).unwrap(), 3);
        let edges = g.edge_count();
        assert_eq!(inject_coref(&mut g, std::slice::from_ref(&ms)).unwrap(), 0);
        assert_eq!(g.edge_count(), edges);
        let utt = g.last_utterance().unwrap().clone();
        assert!(matches!(
            inject_coref(&mut g, &[vec![utt]]),
            Err(LinkError::ForeignMention(_))
        ));
    }

    #[test]
    fn kind_guessing() {
        let lex = lexicon();
        assert_eq!(lex.guess_kind("Mark Suarez"), Some(NodeKind::Person));
        assert_eq!(lex.guess_kind("Wendy"), Some(NodeKind::Person));
        assert_eq!(lex.guess_kind("users workshop"), Some(NodeKind::Event));
        assert_eq!(lex.guess_kind("Stephanie Jules"), Some(NodeKind::Person));
        assert_eq!(lex.guess_kind("zzzz"), None);
    }
}
