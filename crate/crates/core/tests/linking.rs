use std::collections::BTreeSet;

use kgdm_core::dataset::{DialogueRecord, MentionAnnotation, Target, Turn};
use kgdm_core::eval::train_on;
use kgdm_core::linking::pipeline::{replay_dialogue, replay_with, TargetTag};
use kgdm_core::linking::{link, CorefSource, FeatureSet, Hyper, Linker, ModelKind, ReplayOptions};
use kgdm_core::synth::{linking_benchmark, MentionStyle};
use kgdm_core::{org_to_graph, NodeId, Organization, Speaker};

fn turn(i: usize, speaker: Speaker, asr: &str, mentions: &[(&str, &[&str])]) -> Turn {
    let mentions = mentions
        .iter()
        .map(|(surface, targets)| {
            let start = asr[..asr.find(surface).unwrap()].chars().count();
            MentionAnnotation {
                start,
                end: start + surface.chars().count(),
                surface: surface.to_string(),
                targets: Target::Entities(targets.iter().map(|t| t.to_string()).collect()),
                constraints: None,
            }
        })
        .collect();
    Turn {
        i,
        speaker,
        asr: asr.to_string(),
        gold: None,
        intent: Default::default(),
        mentions,
    }
}

fn plural_dialogue(org: &Organization, id: &str, a: usize, b: usize) -> DialogueRecord {
    let (pa, pb) = (&org.persons[a], &org.persons[b]);
    let first = format!("I need to meet {} and {}.", pa.name, pb.name);
    let turns = vec![
        turn(
            0,
            Speaker::User,
            &first,
            &[(&pa.name, &[&pa.id]), (&pb.name, &[&pb.id])],
        ),
        turn(1, Speaker::Agent, "Sure, let me check.", &[]),
        turn(
            2,
            Speaker::User,
            "When are they free?",
            &[("they", &[&pa.id, &pb.id])],
        ),
    ];
    DialogueRecord {
        id: id.into(),
        org: "org".into(),
        task: "plural".into(),
        turns,
    }
}

#[test]
fn plural_pronoun_scores_both_antecedents_highest() {
    let bench = linking_benchmark(42);
    let graph = org_to_graph(&bench.org).unwrap();
    let mut train = bench.train.clone();
    for k in 0..20 {
        train.push(plural_dialogue(
            &bench.org,
            &format!("plural_{k}"),
            2 * k,
            2 * k + 1,
        ));
    }
    let model = train_on(
        &graph,
        &train,
        ModelKind::Mlp,
        FeatureSet::StringGraph,
        &CorefSource::Heuristic,
        &Hyper::default(),
    )
    .unwrap();

    let probe = plural_dialogue(&bench.org, "probe", 41, 42);
    let gold: BTreeSet<NodeId> = [41, 42]
        .iter()
        .map(|&i| NodeId::new(&bench.org.persons[i].id))
        .collect();
    let options = ReplayOptions {
        coref: CorefSource::Heuristic,
        ..ReplayOptions::default()
    };
    let mut checked = 0;
    replay_with(&graph, &probe, &options, |g, m, ann| {
        let d = link(&model, g, m, &kgdm_core::linking::candidate_set(g, m)?)?;
        if ann.surface == "they" {
            let lowest_gold = d
                .scores
                .iter()
                .filter(|(e, _)| gold.contains(e))
                .map(|(_, s)| *s)
                .fold(1.0, f64::min);
            let best_other = d
                .scores
                .iter()
                .filter(|(e, _)| !gold.contains(e))
                .map(|(_, s)| *s)
                .fold(0.0, f64::max);
            assert!(lowest_gold > best_other, "{lowest_gold} <= {best_other}");
            checked += 1;
        }
        Ok(d.entities)
    })
    .unwrap();
    assert_eq!(checked, 1);
}

#[test]
fn string_equality_is_precise_on_exact_names() {
    let bench = linking_benchmark(42);
    let graph = org_to_graph(&bench.org).unwrap();
    let mut label_count = std::collections::BTreeMap::new();
    for n in graph.linkable_entities() {
        *label_count.entry(n.label.to_lowercase()).or_insert(0) += 1;
    }
    let unique = |id: &NodeId| label_count[&graph.node(id).unwrap().label.to_lowercase()] == 1;

    let mut records = Vec::new();
    for d in &bench.test {
        records.extend(
            replay_dialogue(
                &graph,
                d,
                &Linker::StringEquality,
                &ReplayOptions::default(),
            )
            .unwrap()
            .1
            .into_iter()
            .filter(|r| r.speaker == Speaker::User),
        );
    }
    assert_eq!(records.len(), bench.test_styles.len());
    let exact: Vec<_> = records
        .iter()
        .zip(&bench.test_styles)
        .filter(|(r, s)| **s == MentionStyle::Exact && r.target == TargetTag::Linked)
        .map(|(r, _)| r)
        .collect();
    assert!(exact.len() > 50);
    for r in exact {
        assert!(
            r.gold.iter().all(|g| r.predicted.contains(g)),
            "{}",
            r.surface
        );
        if r.gold.iter().all(unique) {
            assert_eq!(r.predicted, r.gold, "{}", r.surface);
        }
    }
}

#[test]
fn decisions_ignore_candidate_order() {
    let bench = linking_benchmark(42);
    let graph = org_to_graph(&bench.org).unwrap();
    let model = kgdm_core::chat::default_linker();
    let d = &bench.test[0];
    let options = ReplayOptions {
        coref: CorefSource::Heuristic,
        ..ReplayOptions::default()
    };
    replay_with(&graph, d, &options, |g, m, _| {
        let mut candidates = kgdm_core::linking::candidate_set(g, m)?;
        let forward = link(&model, g, m, &candidates)?;
        candidates.reverse();
        let backward = link(&model, g, m, &candidates)?;
        assert_eq!(forward.entities, backward.entities);
        let mut a = forward.scores.clone();
        let mut b = backward.scores;
        a.sort_by(|x, y| x.0.cmp(&y.0));
        b.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(a, b);
        assert_eq!(
            forward,
            link(&model, g, m, &kgdm_core::linking::candidate_set(g, m)?)?
        );
        Ok(forward.entities)
    })
    .unwrap();
}
