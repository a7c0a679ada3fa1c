use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{KnowledgeGraph, NodeKind};

const SWAPPABLE: [NodeKind; 3] = [NodeKind::Person, NodeKind::Event, NodeKind::Group];

/// An augmented (context, response) pair and the name substitutions used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub context: String,
    pub response: String,
    pub swaps: Vec<(String, String, NodeKind)>,
}

/// Byte spans of whole-word, non-overlapping name occurrences, longest first
/// at each position.
pub fn find_names<'a>(text: &str, names: &'a [String]) -> Vec<(usize, usize, &'a str)> {
    let boundary = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
    let mut hits = Vec::new();
    for name in names {
        if name.is_empty() {
            continue;
        }
        for (start, _) in text.match_indices(name.as_str()) {
            let end = start + name.len();
            if boundary(text[..start].chars().next_back()) && boundary(text[end..].chars().next()) {
                hits.push((start, end, name.as_str()));
            }
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out: Vec<(usize, usize, &str)> = Vec::new();
    for h in hits {
        if out.last().is_none_or(|l| h.0 >= l.1) {
            out.push(h);
        }
    }
    out
}

fn rebuild(text: &str, spans: &[(usize, usize, &str)], map: &BTreeMap<&str, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for &(s, e, name) in spans {
        out.push_str(&text[at..s]);
        out.push_str(map.get(name).map_or(name, String::as_str));
        at = e;
    }
    out.push_str(&text[at..]);
    out
}

/// Replaces person, event and group names consistently in both strings
/// with other names of the same kind drawn from the graph.
pub fn augment(context: &str, response: &str, graph: &KnowledgeGraph, seed: u64) -> Augmented {
    let mut by_kind: BTreeMap<NodeKind, BTreeSet<String>> = BTreeMap::new();
    let mut kind_of: BTreeMap<String, NodeKind> = BTreeMap::new();
    for n in graph
        .linkable_entities()
        .filter(|n| SWAPPABLE.contains(&n.kind))
    {
        by_kind.entry(n.kind).or_default().insert(n.label.clone());
        kind_of.entry(n.label.clone()).or_insert(n.kind);
    }
    let names: Vec<String> = kind_of.keys().cloned().collect();
    let in_context = find_names(context, &names);
    let in_response = find_names(response, &names);

    let mut detected: Vec<&str> = Vec::new();
    for (_, _, n) in in_context.iter().chain(&in_response) {
        if !detected.contains(n) {
            detected.push(n);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: BTreeSet<String> = detected.iter().map(|s| s.to_string()).collect();
    let mut map: BTreeMap<&str, String> = BTreeMap::new();
    let mut swaps = Vec::new();
    for name in detected {
        let kind = kind_of[name];
        let options: Vec<&String> = by_kind[&kind]
            .iter()
            .filter(|o| !used.contains(*o))
            .collect();
        if let Some(choice) = options.choose(&mut rng) {
            used.insert((*choice).clone());
            map.insert(name, (*choice).clone());
            swaps.push((name.to_string(), (*choice).clone(), kind));
        }
    }
    Augmented {
        context: rebuild(context, &in_context, &map),
        response: rebuild(response, &in_response, &map),
        swaps,
    }
}
