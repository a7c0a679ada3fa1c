//! Dynamic conversational knowledge graph.
//!
//! The graph holds the background organization (persons, events, rooms,
//! groups) together with the dialogue itself (utterances and the entity
//! mentions they contain). Every turn is applied as a transformation of this
//! one structure; there is no separate slot-based state.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Person,
    Event,
    Room,
    Group,
    Utterance,
    Mention,
}

impl NodeKind {
    /// Kinds that a mention may be linked to.
    pub const LINKABLE: [NodeKind; 4] = [
        NodeKind::Person,
        NodeKind::Event,
        NodeKind::Room,
        NodeKind::Group,
    ];

    pub fn is_linkable(self) -> bool {
        matches!(
            self,
            NodeKind::Person | NodeKind::Event | NodeKind::Room | NodeKind::Group
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Person => "person",
            NodeKind::Event => "event",
            NodeKind::Room => "room",
            NodeKind::Group => "group",
            NodeKind::Utterance => "utterance",
            NodeKind::Mention => "mention",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Attends,
    Organizes,
    LocatedIn,
    MemberOf,
    HasOffice,
    Mentions,
    RefersTo,
    Follows,
    SameChain,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 9] = [
        EdgeKind::Attends,
        EdgeKind::Organizes,
        EdgeKind::LocatedIn,
        EdgeKind::MemberOf,
        EdgeKind::HasOffice,
        EdgeKind::Mentions,
        EdgeKind::RefersTo,
        EdgeKind::Follows,
        EdgeKind::SameChain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Attends => "attends",
            EdgeKind::Organizes => "organizes",
            EdgeKind::LocatedIn => "located_in",
            EdgeKind::MemberOf => "member_of",
            EdgeKind::HasOffice => "has_office",
            EdgeKind::Mentions => "mentions",
            EdgeKind::RefersTo => "refers_to",
            EdgeKind::Follows => "follows",
            EdgeKind::SameChain => "same_chain",
        }
    }

    /// Checks the endpoint-kind constraint for this edge kind.
    pub fn accepts(self, src: NodeKind, dst: NodeKind) -> bool {
        use NodeKind::*;
        match self {
            EdgeKind::Attends | EdgeKind::Organizes => src == Person && dst == Event,
            EdgeKind::LocatedIn => src == Event && dst == Room,
            EdgeKind::MemberOf => src == Person && dst == Group,
            EdgeKind::HasOffice => src == Person && dst == Room,
            EdgeKind::Mentions => src == Utterance && dst == Mention,
            EdgeKind::RefersTo => src == Mention && dst.is_linkable(),
            EdgeKind::Follows => src == Utterance && dst == Utterance,
            EdgeKind::SameChain => src == Mention && dst == Mention,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::User => "user",
            Speaker::Agent => "agent",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown node id `{0}`")]
    UnknownNode(NodeId),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("node label must not be empty")]
    EmptyLabel,
    #[error("{kind} edge cannot connect {src} -> {dst}")]
    EndpointMismatch {
        kind: EdgeKind,
        src: NodeKind,
        dst: NodeKind,
    },
    #[error("utterance `{0}` already has a successor")]
    FollowsFanOut(NodeId),
    #[error("utterance `{0}` already has a predecessor")]
    FollowsFanIn(NodeId),
    #[error("malformed graph document: {0}")]
    Document(String),
}

/// A single validator finding.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation(pub String);

/// Node and edge store with both directions of adjacency indexed.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    edges: Vec<(usize, usize, EdgeKind)>,
    edge_set: HashSet<(usize, usize, EdgeKind)>,
    out_adj: Vec<Vec<(usize, EdgeKind)>>,
    in_adj: Vec<Vec<(usize, EdgeKind)>>,
    last_utterance: Option<usize>,
    next_id: u64,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges().collect::<Vec<_>>() == other.edges().collect::<Vec<_>>()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(move |&(s, d, kind)| Edge {
            src: self.nodes[s].id.clone(),
            dst: self.nodes[d].id.clone(),
            kind,
        })
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    fn ix(&self, id: &NodeId) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))
    }

    fn fresh_id(&mut self, kind: NodeKind) -> NodeId {
        loop {
            let id = NodeId(format!("{}:{}", kind.as_str(), self.next_id));
            self.next_id += 1;
            if !self.index.contains_key(&id) {
                return id;
            }
        }
    }

    /// Adds a node with a generated id.
    pub fn add_node(
        &mut self,
        kind: NodeKind,
        label: impl Into<String>,
        attrs: BTreeMap<String, String>,
    ) -> Result<NodeId, GraphError> {
        let id = self.fresh_id(kind);
        self.insert_node(Node {
            id: id.clone(),
            kind,
            label: label.into(),
            attrs,
        })?;
        Ok(id)
    }

    /// Adds a node under a caller-chosen id, e.g. an organization entity id.
    pub fn add_node_with_id(
        &mut self,
        id: NodeId,
        kind: NodeKind,
        label: impl Into<String>,
        attrs: BTreeMap<String, String>,
    ) -> Result<NodeId, GraphError> {
        self.insert_node(Node {
            id: id.clone(),
            kind,
            label: label.into(),
            attrs,
        })?;
        Ok(id)
    }

    fn insert_node(&mut self, node: Node) -> Result<(), GraphError> {
        if node.label.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        if self.index.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        let i = self.nodes.len();
        self.index.insert(node.id.clone(), i);
        self.nodes.push(node);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        Ok(())
    }

    /// Inserts a directed edge. Re-inserting an existing triple is a no-op;
    /// the return value tells whether a new edge was created.
    pub fn add_edge(
        &mut self,
        src: &NodeId,
        dst: &NodeId,
        kind: EdgeKind,
    ) -> Result<bool, GraphError> {
        let s = self.ix(src)?;
        let d = self.ix(dst)?;
        let (sk, dk) = (self.nodes[s].kind, self.nodes[d].kind);
        if !kind.accepts(sk, dk) {
            return Err(GraphError::EndpointMismatch {
                kind,
                src: sk,
                dst: dk,
            });
        }
        if self.edge_set.contains(&(s, d, kind)) {
            return Ok(false);
        }
        if kind == EdgeKind::Follows && self.out_adj[s].iter().any(|&(_, k)| k == EdgeKind::Follows)
        {
            return Err(GraphError::FollowsFanOut(src.clone()));
        }
        if kind == EdgeKind::Follows && self.in_adj[d].iter().any(|&(_, k)| k == EdgeKind::Follows)
        {
            return Err(GraphError::FollowsFanIn(dst.clone()));
        }
        self.edge_set.insert((s, d, kind));
        self.edges.push((s, d, kind));
        self.out_adj[s].push((d, kind));
        self.in_adj[d].push((s, kind));
        Ok(true)
    }

    pub fn has_edge(&self, src: &NodeId, dst: &NodeId, kind: EdgeKind) -> bool {
        match (self.index.get(src), self.index.get(dst)) {
            (Some(&s), Some(&d)) => self.edge_set.contains(&(s, d, kind)),
            _ => false,
        }
    }

    /// Appends an utterance node, one mention node per mention text, the
    /// `Mentions` edges, and a `Follows` edge to the previous utterance.
    ///
    /// An empty text is stored with the label `[UNK]` since labels are
    /// never empty.
    pub fn add_utterance<S: AsRef<str>>(
        &mut self,
        speaker: Speaker,
        text: &str,
        t_start: f64,
        t_end: f64,
        mention_texts: &[S],
    ) -> Result<(NodeId, Vec<NodeId>), GraphError> {
        let mut attrs = BTreeMap::new();
        attrs.insert("speaker".to_string(), speaker.as_str().to_string());
        attrs.insert("t_start".to_string(), format!("{t_start}"));
        attrs.insert("t_end".to_string(), format!("{t_end}"));
        attrs.insert("text".to_string(), text.to_string());
        let label = if text.trim().is_empty() {
            "[UNK]"
        } else {
            text
        };
        let utt = self.add_node(NodeKind::Utterance, label, attrs)?;
        let prev = self.last_utterance.map(|i| self.nodes[i].id.clone());
        if let Some(prev) = prev {
            self.add_edge(&utt, &prev, EdgeKind::Follows)?;
        }
        self.last_utterance = Some(self.index[&utt]);

        let mut mentions = Vec::with_capacity(mention_texts.len());
        for m in mention_texts {
            let m = m.as_ref();
            let label = if m.is_empty() { "[UNK]" } else { m };
            let mid = self.add_node(NodeKind::Mention, label, BTreeMap::new())?;
            self.add_edge(&utt, &mid, EdgeKind::Mentions)?;
            mentions.push(mid);
        }
        Ok((utt, mentions))
    }

    fn step<'a>(&'a self, i: usize, undirected: bool) -> impl Iterator<Item = usize> + 'a {
        let inbound = if undirected {
            &self.in_adj[i][..]
        } else {
            &[][..]
        };
        self.out_adj[i]
            .iter()
            .chain(inbound.iter())
            .map(|&(j, _)| j)
    }

    /// Breadth-first hop counts from `src` to every reachable node.
    pub fn hop_distances(
        &self,
        src: &NodeId,
        undirected: bool,
    ) -> Result<HashMap<NodeId, usize>, GraphError> {
        let s = self.ix(src)?;
        let dist = self.bfs(s, undirected);
        Ok(dist
            .into_iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (self.nodes[i].id.clone(), d)))
            .collect())
    }

    fn bfs(&self, s: usize, undirected: bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap_or(0);
            for j in self.step(i, undirected) {
                if dist[j].is_none() {
                    dist[j] = Some(d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    pub fn shortest_hops(
        &self,
        a: &NodeId,
        b: &NodeId,
        undirected: bool,
    ) -> Result<Option<usize>, GraphError> {
        let s = self.ix(a)?;
        let t = self.ix(b)?;
        if s == t {
            return Ok(Some(0));
        }
        Ok(self.bfs(s, undirected)[t])
    }

    /// Nodes one hop away from `node`, in edge insertion order.
    pub fn neighbors(&self, node: &NodeId, undirected: bool) -> Result<Vec<NodeId>, GraphError> {
        let i = self.ix(node)?;
        let mut seen = HashSet::new();
        Ok(self
            .step(i, undirected)
            .filter(|&j| j != i && seen.insert(j))
            .map(|j| self.nodes[j].id.clone())
            .collect())
    }

    /// Outgoing edges of `node` with their targets.
    pub fn out_edges(&self, node: &NodeId) -> Result<Vec<(NodeId, EdgeKind)>, GraphError> {
        let i = self.ix(node)?;
        Ok(self.out_adj[i]
            .iter()
            .map(|&(j, k)| (self.nodes[j].id.clone(), k))
            .collect())
    }

    /// Incoming edges of `node` with their sources.
    pub fn in_edges(&self, node: &NodeId) -> Result<Vec<(NodeId, EdgeKind)>, GraphError> {
        let i = self.ix(node)?;
        Ok(self.in_adj[i]
            .iter()
            .map(|&(j, k)| (self.nodes[j].id.clone(), k))
            .collect())
    }

    /// Keeps exactly the given nodes (in the given order) and every edge whose
    /// endpoints both survive.
    pub fn induced_subgraph(&self, ids: &[NodeId]) -> Result<KnowledgeGraph, GraphError> {
        let mut keep = Vec::with_capacity(ids.len());
        let mut seen = HashSet::new();
        for id in ids {
            let i = self.ix(id)?;
            if seen.insert(i) {
                keep.push(i);
            }
        }
        let mut sub = KnowledgeGraph::new();
        for &i in &keep {
            sub.insert_node(self.nodes[i].clone())?;
        }
        for &(s, d, kind) in &self.edges {
            if seen.contains(&s) && seen.contains(&d) {
                sub.add_edge(&self.nodes[s].id, &self.nodes[d].id, kind)?;
            }
        }
        sub.next_id = self.next_id;
        Ok(sub)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn linkable_entities(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind.is_linkable())
    }

    /// The most recent utterance node, if any.
    pub fn last_utterance(&self) -> Option<&NodeId> {
        self.last_utterance.map(|i| &self.nodes[i].id)
    }

    /// Sweeps every structural invariant and reports all violations.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for n in &self.nodes {
            if n.label.is_empty() {
                out.push(Violation(format!("node {} has an empty label", n.id)));
            }
            if n.kind == NodeKind::Utterance {
                match n.attrs.get("speaker").map(String::as_str) {
                    Some("user") | Some("agent") => {}
                    _ => out.push(Violation(format!(
                        "utterance {} lacks a valid speaker",
                        n.id
                    ))),
                }
                if !n.attrs.contains_key("t_start") || !n.attrs.contains_key("t_end") {
                    out.push(Violation(format!("utterance {} lacks timestamps", n.id)));
                }
            }
        }
        let mut follows_in = vec![0usize; self.nodes.len()];
        for (i, adj) in self.out_adj.iter().enumerate() {
            let succ = adj.iter().filter(|&&(_, k)| k == EdgeKind::Follows).count();
            if succ > 1 {
                out.push(Violation(format!(
                    "utterance {} has {succ} outgoing follows edges",
                    self.nodes[i].id
                )));
            }
        }
        for &(s, d, kind) in &self.edges {
            let (sk, dk) = (self.nodes[s].kind, self.nodes[d].kind);
            if !kind.accepts(sk, dk) {
                out.push(Violation(format!(
                    "{kind} edge {} -> {} connects {sk} -> {dk}",
                    self.nodes[s].id, self.nodes[d].id
                )));
            }
            if kind == EdgeKind::Follows {
                follows_in[d] += 1;
            }
        }
        for (i, &c) in follows_in.iter().enumerate() {
            if c > 1 {
                out.push(Violation(format!(
                    "utterance {} has {c} followers",
                    self.nodes[i].id
                )));
            }
        }
        if self.edge_set.len() != self.edges.len() {
            out.push(Violation("duplicate edge triples".into()));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            nodes: self.nodes.clone(),
            edges: self.edges().collect(),
        };
        serde_json::to_string(&doc).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<KnowledgeGraph, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| GraphError::Document(e.to_string()))?;
        let mut g = KnowledgeGraph::new();
        for n in doc.nodes {
            g.insert_node(n)?;
        }
        for e in doc.edges {
            g.add_edge(&e.src, &e.dst, e.kind)?;
        }
        // Recover the tail of the utterance path: the utterance nobody follows.
        let followed: HashSet<usize> = g
            .edges
            .iter()
            .filter(|e| e.2 == EdgeKind::Follows)
            .map(|e| e.1)
            .collect();
        g.last_utterance = g
            .nodes
            .iter()
            .enumerate()
            .rev()
            .find(|(i, n)| n.kind == NodeKind::Utterance && !followed.contains(i))
            .map(|(i, _)| i);
        g.next_id = g.nodes.len() as u64;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn path(n: usize) -> (KnowledgeGraph, Vec<NodeId>) {
        let mut g = KnowledgeGraph::new();
        let ids: Vec<_> = (0..n)
            .map(|i| {
                g.add_node(NodeKind::Mention, format!("m{i}"), BTreeMap::new())
                    .unwrap()
            })
            .collect();
        for w in ids.windows(2) {
            g.add_edge(&w[0], &w[1], EdgeKind::SameChain).unwrap();
        }
        (g, ids)
    }

    #[test]
    fn add_node_basics() {
        let mut g = KnowledgeGraph::new();
        let a = g
            .add_node(
                NodeKind::Person,
                "Mark Suarez",
                attrs(&[("email", "mark@example.org")]),
            )
            .unwrap();
        let b = g
            .add_node(NodeKind::Person, "Mark Suarez", BTreeMap::new())
            .unwrap();
        assert_ne!(a, b);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.node(&a).unwrap().attrs["email"], "mark@example.org");
        assert_eq!(
            g.add_node(NodeKind::Room, "", BTreeMap::new()),
            Err(GraphError::EmptyLabel)
        );
    }

    #[test]
    fn add_edge_checks_and_dedups() {
        let mut g = KnowledgeGraph::new();
        let p = g.add_node(NodeKind::Person, "p", BTreeMap::new()).unwrap();
        let grp = g.add_node(NodeKind::Group, "g", BTreeMap::new()).unwrap();
        let m1 = g
            .add_node(NodeKind::Mention, "m1", BTreeMap::new())
            .unwrap();
        let m2 = g
            .add_node(NodeKind::Mention, "m2", BTreeMap::new())
            .unwrap();
        assert_eq!(g.add_edge(&p, &grp, EdgeKind::MemberOf), Ok(true));
        assert_eq!(g.add_edge(&p, &grp, EdgeKind::MemberOf), Ok(false));
        assert_eq!(g.edge_count(), 1);
        assert!(matches!(
            g.add_edge(&m1, &m2, EdgeKind::RefersTo),
            Err(GraphError::EndpointMismatch { .. })
        ));
        assert!(matches!(
            g.add_edge(&p, &NodeId::from("nope"), EdgeKind::MemberOf),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn utterances_chain_by_follows() {
        let mut g = KnowledgeGraph::new();
        let (u1, _) = g
            .add_utterance::<&str>(Speaker::User, "hello", 0.0, 1.0, &[])
            .unwrap();
        assert_eq!(g.edge_count(), 0);
        let (u2, _) = g
            .add_utterance::<&str>(Speaker::Agent, "hi", 1.0, 2.0, &[])
            .unwrap();
        assert!(g.has_edge(&u2, &u1, EdgeKind::Follows));
        assert_eq!(g.edges().filter(|e| e.kind == EdgeKind::Follows).count(), 1);

        let text = "Hello! My name is Wendy Parker and I am trying to find out who is organizing the users workshop.";
        let before = g.node_count();
        let (u3, ms) = g
            .add_utterance(
                Speaker::User,
                text,
                2.0,
                6.5,
                &["Wendy Parker", "users workshop"],
            )
            .unwrap();
        assert_eq!(g.node_count() - before, 3);
        assert_eq!(ms.len(), 2);
        let mentions = g
            .out_edges(&u3)
            .unwrap()
            .into_iter()
            .filter(|e| e.1 == EdgeKind::Mentions)
            .count();
        assert_eq!(mentions, 2);
        assert!(g.validate().is_ok());
        assert!(matches!(
            g.add_edge(&u3, &u1, EdgeKind::Follows),
            Err(GraphError::FollowsFanOut(_))
        ));
        let (u4, _) = g
            .add_utterance::<&str>(Speaker::Agent, "ok", 6.5, 7.0, &[])
            .unwrap();
        assert!(matches!(
            g.add_edge(&u4, &u2, EdgeKind::Follows),
            Err(GraphError::FollowsFanOut(_))
        ));
        assert!(matches!(
            g.add_edge(&u1, &u2, EdgeKind::Follows),
            Err(GraphError::FollowsFanIn(_))
        ));
    }

    #[test]
    fn empty_utterance_is_unk() {
        let mut g = KnowledgeGraph::new();
        let (u, _) = g
            .add_utterance::<&str>(Speaker::User, "", 0.0, 0.5, &[])
            .unwrap();
        assert_eq!(g.node(&u).unwrap().label, "[UNK]");
        assert!(g.validate().is_ok());
    }

    #[test]
    fn hops() {
        let (g, ids) = path(3);
        assert_eq!(g.shortest_hops(&ids[0], &ids[0], true).unwrap(), Some(0));
        assert_eq!(g.shortest_hops(&ids[0], &ids[2], true).unwrap(), Some(2));
        assert_eq!(g.shortest_hops(&ids[2], &ids[0], false).unwrap(), None);
        let mut g2 = g.clone();
        let lone = g2
            .add_node(NodeKind::Mention, "x", BTreeMap::new())
            .unwrap();
        assert_eq!(g2.shortest_hops(&ids[0], &lone, true).unwrap(), None);
        assert!(g2
            .shortest_hops(&ids[0], &NodeId::from("zz"), true)
            .is_err());
    }

    #[test]
    fn induced() {
        let (mut g, ids) = path(3);
        g.add_edge(&ids[2], &ids[0], EdgeKind::SameChain).unwrap();
        let sub = g.induced_subgraph(&ids[..2]).unwrap();
        assert_eq!(sub.edge_count(), 1);
        assert_eq!(g.induced_subgraph(&ids).unwrap(), g);
        let empty = g.induced_subgraph(&[]).unwrap();
        assert_eq!((empty.node_count(), empty.edge_count()), (0, 0));
        assert!(g.induced_subgraph(&[NodeId::from("missing")]).is_err());
    }

    #[test]
    fn neighbor_directionality() {
        let mut g = KnowledgeGraph::new();
        let iso = g.add_node(NodeKind::Group, "g", BTreeMap::new()).unwrap();
        assert!(g.neighbors(&iso, true).unwrap().is_empty());
        let center = g.add_node(NodeKind::Person, "c", BTreeMap::new()).unwrap();
        for i in 0..3 {
            let e = g
                .add_node(NodeKind::Event, format!("e{i}"), BTreeMap::new())
                .unwrap();
            g.add_edge(&center, &e, EdgeKind::Attends).unwrap();
        }
        assert_eq!(g.neighbors(&center, false).unwrap().len(), 3);
        let leaf = g.out_edges(&center).unwrap()[0].0.clone();
        assert!(g.neighbors(&leaf, false).unwrap().is_empty());
        assert_eq!(g.neighbors(&leaf, true).unwrap(), vec![center]);
    }

    #[test]
    fn json_round_trip() {
        let mut g = KnowledgeGraph::new();
        let p = g
            .add_node(
                NodeKind::Person,
                "Ærøskøbing Ünïcode",
                attrs(&[("phone", "+1 555 0100")]),
            )
            .unwrap();
        let r = g
            .add_node(NodeKind::Room, "room 270", BTreeMap::new())
            .unwrap();
        g.add_edge(&p, &r, EdgeKind::HasOffice).unwrap();
        g.add_utterance(Speaker::User, "where is it", 0.0, 1.0, &["it"])
            .unwrap();
        let text = g.to_json();
        assert!(text.contains("\"has_office\""));
        let back = KnowledgeGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        let mut back = back;
        let (u, _) = back
            .add_utterance::<&str>(Speaker::Agent, "ok", 1.0, 2.0, &[])
            .unwrap();
        assert_eq!(back.out_edges(&u).unwrap().len(), 1);
    }
}
