//! Dialogue management over a conversational knowledge graph.
//!
//! The dialogue state is a single [`graph::KnowledgeGraph`] holding the
//! background organization and every utterance and mention of the ongoing
//! conversation. On top of it sit conversational entity linking
//! ([`linking`]) and response ranking by verbalizing the relevant subgraph
//! ([`ranking`]).

pub mod chat;
pub mod dataset;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod linking;
pub mod org;
pub mod ranking;
pub mod strsim;
pub mod synth;

pub use chat::{ChatConfig, ChatReply, ChatSession};
pub use eval::EvalReport;
pub use graph::{Edge, EdgeKind, GraphError, KnowledgeGraph, Node, NodeId, NodeKind, Speaker};
pub use linking::{LinkDecision, LinkError, LinkFeatureVector, LinkerModel};
pub use org::{generate_org, org_to_graph, OrgConfig, Organization};
pub use ranking::{RankError, RankingInstance, Scorer, TemplateRegistry};
