use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RankError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Pointwise,
    #[default]
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Pairwise,
            epochs: 10,
            batch_size: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainExample {
    Pairwise {
        context: String,
        positive: String,
        negative: String,
    },
    Pointwise {
        context: String,
        response: String,
        label: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub status: String,
    pub final_loss: f64,
    /// Incremented by every successful training call on a handle.
    pub version: u64,
}

/// Scores each candidate response for a context, each score in `[0, 1]`.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, context: &str, candidates: &[String]) -> Result<Vec<f64>, RankError>;

    fn train(
        &self,
        _config: &TrainConfig,
        _examples: &[TrainExample],
    ) -> Result<TrainOutcome, RankError> {
        Err(RankError::Unsupported("training"))
    }
}

/// Forwards training examples to a scorer, rejecting an empty stream.
pub fn train_scorer<S: Scorer + ?Sized>(
    scorer: &S,
    config: &TrainConfig,
    examples: &[TrainExample],
) -> Result<TrainOutcome, RankError> {
    if examples.is_empty() {
        return Err(RankError::EmptyTraining);
    }
    scorer.train(config, examples)
}

pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Smoothed inverse document frequencies over a document collection.
#[derive(Debug, Clone, Default)]
pub struct TfIdfSpace {
    idf: BTreeMap<String, f64>,
    default_idf: f64,
}

impl TfIdfSpace {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let n = docs.len() as f64;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            let mut t = terms(d.as_ref());
            t.sort();
            t.dedup();
            for term in t {
                *df.entry(term).or_default() += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(t, c)| (t, ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0))
            .collect();
        TfIdfSpace {
            idf,
            default_idf: (1.0 + n).ln() + 1.0,
        }
    }

    pub fn vector(&self, text: &str) -> BTreeMap<String, f64> {
        let mut v: BTreeMap<String, f64> = BTreeMap::new();
        for t in terms(text) {
            *v.entry(t).or_default() += 1.0;
        }
        for (t, w) in v.iter_mut() {
            *w *= self.idf.get(t).copied().unwrap_or(self.default_idf);
        }
        v
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vector(a), &self.vector(b))
    }
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(t, x)| large.get(t).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Cosine of TF-IDF vectors, with document frequencies taken over the
/// context and all candidates.
pub fn tfidf_cosine(context: &str, candidates: &[String]) -> Vec<f64> {
    let mut docs: Vec<&str> = vec![context];
    docs.extend(candidates.iter().map(String::as_str));
    let space = TfIdfSpace::fit(&docs);
    let c = space.vector(context);
    candidates
        .iter()
        .map(|r| cosine(&c, &space.vector(r)))
        .collect()
}

/// In-process lexical scorer; needs no model files.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeScorer;

impl Scorer for NativeScorer {
    fn name(&self) -> &str {
        "native"
    }

    fn score(&self, context: &str, candidates: &[String]) -> Result<Vec<f64>, RankError> {
        Ok(tfidf_cosine(context, candidates))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::rank;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn scores_in_unit_interval() {
        let scores = tfidf_cosine(
            "Mark Suarez has the office room 270.",
            &s(&["room 270", "", "banana split"]),
        );
        assert!(scores.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(scores[1], 0.0);
        assert_eq!(scores[2], 0.0);
        assert!((TfIdfSpace::fit(&["a b"]).cosine("a b", "a b") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attribute_repeat_ranks_first() {
        let context = "Mark Suarez has the office room 270.\nVisitor: Could you give me the room number for his office?";
        let candidates = s(&[
            "The cafeteria opens at noon.",
            "Sure! It is room 270.",
            "Have a nice day!",
            "I do not know about that.",
        ]);
        assert_eq!(rank(&NativeScorer, context, &candidates).unwrap()[0], 1);
    }

    #[test]
    fn native_cannot_train() {
        let ex = [TrainExample::Pairwise {
            context: "c".into(),
            positive: "p".into(),
            negative: "n".into(),
        }];
        assert!(matches!(
            train_scorer(&NativeScorer, &TrainConfig::default(), &ex),
            Err(RankError::Unsupported(_))
        ));
        assert!(matches!(
            train_scorer(&NativeScorer, &TrainConfig::default(), &[]),
            Err(RankError::EmptyTraining)
        ));
        let cfg = TrainConfig::default();
        assert_eq!((cfg.epochs, cfg.batch_size), (10, 5));
    }
}
