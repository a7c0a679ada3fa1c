//! Evaluation harness for linking and ranking, producing self-checking reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dataset::DialogueRecord;
use crate::graph::{KnowledgeGraph, NodeId, Speaker};
use crate::linking::pipeline::{
    replay_dialogue, score_by_dialogue, score_records, training_examples, SpeakerScope,
};
use crate::linking::{
    train_linker, CorefSource, FeatureSet, Hyper, LinkError, Linker, LinkerModel, MentionRecord,
    ModelKind, ReplayOptions,
};
use crate::ranking::{
    build_context, gold_rank, mrr, order_by_score, recall_at_k, sample_negatives, InputMode,
    NegativeMethod, RankError, RankingInstance, Scorer, TemplateRegistry, CANDIDATES,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("no organization graph for dialogue `{0}`")]
    MissingOrg(String),
    #[error("report metric `{name}` is {stored} but recomputes to {recomputed}")]
    Inconsistent {
        name: String,
        stored: f64,
        recomputed: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Linking,
    Ranking,
}

/// Stored outcome of one ranking instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedInstance {
    pub index: usize,
    pub gold_index: usize,
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "items")]
pub enum InstanceDump {
    Linking(Vec<MentionRecord>),
    Ranking(Vec<RankedInstance>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub split: String,
    pub config: String,
    pub metrics: BTreeMap<String, f64>,
    pub per_dialogue: BTreeMap<String, BTreeMap<String, f64>>,
    pub instances: InstanceDump,
}

fn linking_metrics(records: &[MentionRecord]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for (prefix, scope) in [
        ("", SpeakerScope::User),
        ("agent_", SpeakerScope::Agent),
        ("all_", SpeakerScope::All),
    ] {
        let p = score_records(records, scope);
        m.insert(format!("{prefix}precision"), p.precision);
        m.insert(format!("{prefix}recall"), p.recall);
        m.insert(format!("{prefix}f1"), p.f1);
    }
    m
}

fn ranking_metrics(items: &[RankedInstance]) -> BTreeMap<String, f64> {
    let ranks: Vec<usize> = items
        .iter()
        .map(|i| gold_rank(&i.order, i.gold_index))
        .collect();
    BTreeMap::from([
        ("r10@1".to_string(), recall_at_k(&ranks, 1)),
        ("r10@2".to_string(), recall_at_k(&ranks, 2)),
        ("mrr".to_string(), mrr(&ranks)),
    ])
}

impl EvalReport {
    /// Recomputes every metric from the stored instances.
    pub fn recompute(&self) -> BTreeMap<String, f64> {
        match &self.instances {
            InstanceDump::Linking(r) => linking_metrics(r),
            InstanceDump::Ranking(r) => {
                let fresh: Vec<RankedInstance> = r
                    .iter()
                    .map(|i| RankedInstance {
                        order: order_by_score(&i.scores),
                        ..i.clone()
                    })
                    .collect();
                ranking_metrics(&fresh)
            }
        }
    }

    pub fn verify(&self) -> Result<(), EvalError> {
        let fresh = self.recompute();
        for (name, stored) in &self.metrics {
            let recomputed = fresh.get(name).copied().unwrap_or(f64::NAN);
            if (recomputed - stored).abs() > 1e-12 || recomputed.is_nan() {
                return Err(EvalError::Inconsistent {
                    name: name.clone(),
                    stored: *stored,
                    recomputed,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<EvalReport> {
        serde_json::from_str(text)
    }

    pub fn metric(&self, name: &str) -> f64 {
        self.metrics.get(name).copied().unwrap_or(f64::NAN)
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .filter(|(k, _)| !k.starts_with("agent_") && !k.starts_with("all_"))
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect();
        format!(
            "{:?} [{}] {}: {}",
            self.task,
            self.split,
            self.config,
            metrics.join(" ")
        )
    }
}

/// Resolves the organization graph of a dialogue.
pub trait GraphSource {
    fn graph_for(&self, dialogue: &DialogueRecord) -> Option<&KnowledgeGraph>;
}

impl GraphSource for KnowledgeGraph {
    fn graph_for(&self, _: &DialogueRecord) -> Option<&KnowledgeGraph> {
        Some(self)
    }
}

impl GraphSource for BTreeMap<String, KnowledgeGraph> {
    fn graph_for(&self, d: &DialogueRecord) -> Option<&KnowledgeGraph> {
        self.get(&d.org)
    }
}

/// Replays every dialogue with `linker` and scores the predictions.
pub fn eval_linking<G: GraphSource + ?Sized>(
    graphs: &G,
    dialogues: &[DialogueRecord],
    linker: &Linker<'_>,
    coref: &CorefSource,
    split: &str,
) -> Result<EvalReport, EvalError> {
    let options = ReplayOptions {
        coref: coref.clone(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for d in dialogues {
        let g = graphs
            .graph_for(d)
            .ok_or_else(|| EvalError::MissingOrg(d.id.clone()))?;
        records.extend(replay_dialogue(g, d, linker, &options)?.1);
    }
    let per_dialogue = score_by_dialogue(&records, SpeakerScope::User)
        .into_iter()
        .map(|(d, p)| {
            (
                d,
                BTreeMap::from([
                    ("precision".into(), p.precision),
                    ("recall".into(), p.recall),
                    ("f1".into(), p.f1),
                ]),
            )
        })
        .collect();
    let coref_name = match coref {
        CorefSource::None => "none",
        CorefSource::Heuristic => "heuristic",
        CorefSource::Chains(_) => "file",
    };
    Ok(EvalReport {
        task: Task::Linking,
        split: split.to_string(),
        config: format!("{} coref={coref_name}", linker.describe()),
        metrics: linking_metrics(&records),
        per_dialogue,
        instances: InstanceDump::Linking(records),
    })
}

/// Builds training pairs from every dialogue and fits a classifier.
pub fn train_on<G: GraphSource + ?Sized>(
    graphs: &G,
    dialogues: &[DialogueRecord],
    kind: ModelKind,
    features: FeatureSet,
    coref: &CorefSource,
    hyper: &Hyper,
) -> Result<LinkerModel, EvalError> {
    let mut examples = Vec::new();
    for d in dialogues {
        let g = graphs
            .graph_for(d)
            .ok_or_else(|| EvalError::MissingOrg(d.id.clone()))?;
        examples.extend(training_examples(g, d, coref)?);
    }
    Ok(train_linker(&examples, kind, features, hyper)?)
}

/// How ranking instances are cut from annotated dialogues.
#[derive(Debug, Clone)]
pub struct InstanceOptions {
    pub mode: InputMode,
    pub budget: usize,
    pub negatives: NegativeMethod,
    pub seed: u64,
    /// Responses added to the negative pool.
    pub extra_pool: Vec<String>,
}

fn instance_seed(seed: u64, dialogue: &str, turn: usize) -> u64 {
    let h = Sha256::new()
        .chain_update(dialogue.as_bytes())
        .chain_update(turn.to_le_bytes())
        .finalize();
    seed ^ u64::from_le_bytes(h[..8].try_into().expect("digest has 32 bytes"))
}

/// One instance per agent turn after the first user turn. The context holds
/// the preceding history and the gold-linked entities so far; negatives come
/// from every agent response of `dialogues`.
pub fn dialogue_ranking_instances<G: GraphSource + ?Sized>(
    graphs: &G,
    dialogues: &[DialogueRecord],
    registry: &TemplateRegistry,
    options: &InstanceOptions,
) -> Result<Vec<RankingInstance>, EvalError> {
    let pool: Vec<String> = dialogues
        .iter()
        .flat_map(|d| {
            d.turns
                .iter()
                .filter(|t| t.speaker == Speaker::Agent)
                .map(|t| t.asr.clone())
        })
        .chain(options.extra_pool.iter().cloned())
        .collect();
    let mut out = Vec::new();
    for d in dialogues {
        let g = graphs
            .graph_for(d)
            .ok_or_else(|| EvalError::MissingOrg(d.id.clone()))?;
        let mut history: Vec<(Speaker, String)> = Vec::new();
        let mut linked: Vec<NodeId> = Vec::new();
        for t in &d.turns {
            if t.speaker == Speaker::Agent && history.iter().any(|(s, _)| *s == Speaker::User) {
                let seed = instance_seed(options.seed, &d.id, t.i);
                let mut candidates =
                    sample_negatives(&pool, &t.asr, CANDIDATES - 1, options.negatives, seed)?;
                let gold_index = ChaCha8Rng::seed_from_u64(seed).gen_range(0..CANDIDATES);
                candidates.insert(gold_index, t.asr.clone());
                let context =
                    build_context(g, &linked, &history, options.mode, registry, options.budget)?;
                out.push(RankingInstance {
                    context,
                    candidates,
                    gold_index,
                });
            }
            history.push((t.speaker, t.asr.clone()));
            for m in &t.mentions {
                for e in m.targets.entities() {
                    let id = NodeId::new(e);
                    if !linked.contains(&id) {
                        linked.push(id);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Ranks every instance with `scorer`.
pub fn eval_ranking<S: Scorer + ?Sized>(
    scorer: &S,
    instances: &[RankingInstance],
    split: &str,
    config: &str,
) -> Result<EvalReport, EvalError> {
    let mut items = Vec::with_capacity(instances.len());
    for (index, inst) in instances.iter().enumerate() {
        inst.validate()?;
        let scores = scorer.score(&inst.context, &inst.candidates)?;
        let order = order_by_score(&scores);
        items.push(RankedInstance {
            index,
            gold_index: inst.gold_index,
            scores,
            order,
        });
    }
    Ok(EvalReport {
        task: Task::Ranking,
        split: split.to_string(),
        config: format!("{} {config}", scorer.name()),
        metrics: ranking_metrics(&items),
        per_dialogue: BTreeMap::new(),
        instances: InstanceDump::Ranking(items),
    })
}
