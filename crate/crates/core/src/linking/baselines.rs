use super::features::fold;
use super::{LinkDecision, LinkError};
use crate::graph::{EdgeKind, GraphError, KnowledgeGraph, NodeId};

fn mention_label<'a>(graph: &'a KnowledgeGraph, mention: &NodeId) -> Result<&'a str, LinkError> {
    Ok(&graph
        .node(mention)
        .ok_or_else(|| GraphError::UnknownNode(mention.clone()))?
        .label)
}

/// Links to every entity whose case-folded label equals the mention text.
pub fn baseline_string_equality(
    graph: &KnowledgeGraph,
    mention: &NodeId,
) -> Result<LinkDecision, LinkError> {
    let text = fold(mention_label(graph, mention)?);
    let mut entities: Vec<NodeId> = graph
        .linkable_entities()
        .filter(|n| fold(&n.label) == text)
        .map(|n| n.id.clone())
        .collect();
    entities.sort();
    let scores = entities.iter().map(|e| (e.clone(), 1.0)).collect();
    Ok(LinkDecision {
        mention: mention.clone(),
        entities,
        scores,
    })
}

fn targets(graph: &KnowledgeGraph, mention: &NodeId) -> Result<Vec<NodeId>, GraphError> {
    Ok(graph
        .out_edges(mention)?
        .into_iter()
        .filter(|(_, k)| *k == EdgeKind::RefersTo)
        .map(|(id, _)| id)
        .collect())
}

fn mentions_of(graph: &KnowledgeGraph, utterance: &NodeId) -> Result<Vec<NodeId>, GraphError> {
    Ok(graph
        .out_edges(utterance)?
        .into_iter()
        .filter(|(_, k)| *k == EdgeKind::Mentions)
        .map(|(id, _)| id)
        .collect())
}

/// Targets of the closest earlier mention that already carries links,
/// searching earlier mentions of the same utterance first and then walking
/// `Follows` edges backwards.
pub fn most_recent_links(
    graph: &KnowledgeGraph,
    mention: &NodeId,
) -> Result<Vec<NodeId>, LinkError> {
    let utterance = graph
        .in_edges(mention)?
        .into_iter()
        .find(|(_, k)| *k == EdgeKind::Mentions)
        .map(|(id, _)| id);
    let Some(mut utterance) = utterance else {
        return Ok(Vec::new());
    };
    let same = mentions_of(graph, &utterance)?;
    let pos = same.iter().position(|m| m == mention).unwrap_or(same.len());
    for m in same[..pos].iter().rev() {
        let t = targets(graph, m)?;
        if !t.is_empty() {
            return Ok(t);
        }
    }
    loop {
        let prev = graph
            .out_edges(&utterance)?
            .into_iter()
            .find(|(_, k)| *k == EdgeKind::Follows);
        let Some((prev, _)) = prev else {
            return Ok(Vec::new());
        };
        for m in mentions_of(graph, &prev)?.iter().rev() {
            let t = targets(graph, m)?;
            if !t.is_empty() {
                return Ok(t);
            }
        }
        utterance = prev;
    }
}

/// Exact match if any; otherwise the targets of the most recently linked mention.
pub fn baseline_recency(
    graph: &KnowledgeGraph,
    mention: &NodeId,
) -> Result<LinkDecision, LinkError> {
    let exact = baseline_string_equality(graph, mention)?;
    if !exact.entities.is_empty() {
        return Ok(exact);
    }
    let mut entities = most_recent_links(graph, mention)?;
    entities.sort();
    entities.dedup();
    let scores = entities.iter().map(|e| (e.clone(), 1.0)).collect();
    Ok(LinkDecision {
        mention: mention.clone(),
        entities,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, org_to_graph, Speaker};

    fn graph() -> KnowledgeGraph {
        org_to_graph(&fixtures::org()).unwrap()
    }

    #[test]
    fn exact_label_match() {
        let mut g = graph();
        let (_, ms) = g
            .add_utterance(
                Speaker::User,
                "the users workshop",
                0.0,
                1.0,
                &["Users Workshop", "his"],
            )
            .unwrap();
        assert_eq!(
            baseline_string_equality(&g, &ms[0]).unwrap().entities,
            vec![NodeId::new("event:0")]
        );
        assert!(baseline_string_equality(&g, &ms[1])
            .unwrap()
            .entities
            .is_empty());
    }

    #[test]
    fn ties_are_all_returned() {
        let mut g = graph();
        let (_, ms) = g
            .add_utterance(
                Speaker::User,
                "x",
                0.0,
                1.0,
                &["web-readiness status update"],
            )
            .unwrap();
        assert_eq!(
            baseline_string_equality(&g, &ms[0]).unwrap().entities,
            vec![NodeId::new("event:2"), NodeId::new("event:3")]
        );
    }

    #[test]
    fn recency_follows_history() {
        let mut g = graph();
        let (_, first) = g
            .add_utterance(Speaker::User, "his", 0.0, 1.0, &["his"])
            .unwrap();
        assert!(baseline_recency(&g, &first[0]).unwrap().entities.is_empty());
        let (_, ms) = g
            .add_utterance(Speaker::Agent, "Mark Suarez", 1.0, 2.0, &["Mark Suarez"])
            .unwrap();
        g.add_edge(&ms[0], &NodeId::new("person:1"), EdgeKind::RefersTo)
            .unwrap();
        g.add_utterance(Speaker::Agent, "ok", 2.0, 3.0, &[] as &[&str])
            .unwrap();
        let (_, his) = g
            .add_utterance(Speaker::User, "his office", 3.0, 4.0, &["his"])
            .unwrap();
        assert_eq!(
            baseline_recency(&g, &his[0]).unwrap().entities,
            vec![NodeId::new("person:1")]
        );
        let (_, exact) = g
            .add_utterance(Speaker::User, "Wendy Parker", 4.0, 5.0, &["wendy parker"])
            .unwrap();
        assert_eq!(
            baseline_recency(&g, &exact[0]).unwrap(),
            baseline_string_equality(&g, &exact[0]).unwrap()
        );
    }
}
