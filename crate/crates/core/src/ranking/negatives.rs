use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scorer::TfIdfSpace;
use super::RankError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMethod {
    #[default]
    Random,
    /// Sample from the quarter of the pool most similar to the gold response.
    Similar,
}

impl std::str::FromStr for NegativeMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(NegativeMethod::Random),
            "similar" => Ok(NegativeMethod::Similar),
            other => Err(format!(
                "unknown sampling method `{other}` (expected random or similar)"
            )),
        }
    }
}

/// `n` distinct responses from `pool`, none equal to `gold`.
pub fn sample_negatives(
    pool: &[String],
    gold: &str,
    n: usize,
    method: NegativeMethod,
    seed: u64,
) -> Result<Vec<String>, RankError> {
    let mut seen = BTreeSet::new();
    let usable: Vec<&String> = pool
        .iter()
        .filter(|r| r.as_str() != gold && seen.insert(r.as_str()))
        .collect();
    if usable.len() < n {
        return Err(RankError::PoolTooSmall {
            available: usable.len(),
            needed: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let from: Vec<&String> = match method {
        NegativeMethod::Random => usable,
        NegativeMethod::Similar => {
            let space = TfIdfSpace::fit(pool);
            let g = space.vector(gold);
            let mut scored: Vec<(f64, &String)> = usable
                .into_iter()
                .map(|r| {
                    let v = space.vector(r);
                    let dot: f64 = v.iter().filter_map(|(t, x)| g.get(t).map(|y| x * y)).sum();
                    let norm = v.values().map(|x| x * x).sum::<f64>().sqrt()
                        * g.values().map(|x| x * x).sum::<f64>().sqrt();
                    (if norm == 0.0 { 0.0 } else { dot / norm }, r)
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            let keep = scored.len().div_ceil(4).max(n);
            scored.into_iter().take(keep).map(|(_, r)| r).collect()
        }
    };
    let mut picked: Vec<usize> = index::sample(&mut rng, from.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| from[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> Vec<String> {
        (0..40)
            .map(|i| format!("response number {i} about topic {}", i % 5))
            .collect()
    }

    #[test]
    fn excludes_gold_and_is_deterministic() {
        let p = pool();
        let a = sample_negatives(&p, &p[3], 9, NegativeMethod::Random, 5).unwrap();
        assert_eq!(
            a,
            sample_negatives(&p, &p[3], 9, NegativeMethod::Random, 5).unwrap()
        );
        assert_eq!(a.len(), 9);
        assert!(!a.contains(&p[3]));
        let distinct: BTreeSet<&String> = a.iter().collect();
        assert_eq!(distinct.len(), 9);
    }

    #[test]
    fn pool_too_small() {
        let p = pool();
        assert!(matches!(
            sample_negatives(&p[..5], &p[0], 9, NegativeMethod::Similar, 0),
            Err(RankError::PoolTooSmall {
                available: 4,
                needed: 9
            })
        ));
    }
}
