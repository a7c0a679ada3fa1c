//! Character-level string metrics used as entity-linking features.
//!
//! All functions operate on Unicode scalar values, not bytes.

use std::cmp::{max, min};

/// Longest pattern handled by the bit-parallel paths.
const WORD: usize = 64;

/// ASCII pattern of at most 64 bytes and the other string, if both qualify.
fn bit_parallel_operands<'s>(a: &'s str, b: &'s str) -> Option<(&'s [u8], &'s [u8])> {
    if !a.is_ascii() || !b.is_ascii() {
        return None;
    }
    let (p, t) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    (!p.is_empty() && p.len() <= WORD).then_some((p.as_bytes(), t.as_bytes()))
}

fn match_masks(pattern: &[u8]) -> [u64; 128] {
    let mut peq = [0u64; 128];
    for (i, &c) in pattern.iter().enumerate() {
        peq[c as usize] |= 1 << i;
    }
    peq
}

/// Hyyrö's bit-vector edit distance.
fn levenshtein_bits(pattern: &[u8], text: &[u8]) -> usize {
    let peq = match_masks(pattern);
    let last = 1u64 << (pattern.len() - 1);
    let (mut pv, mut mv) = (!0u64, 0u64);
    let mut score = pattern.len();
    for &c in text {
        let eq = peq[c as usize];
        let xv = eq | mv;
        let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
        let mut ph = mv | !(xh | pv);
        let mut mh = pv & xh;
        if ph & last != 0 {
            score += 1;
        } else if mh & last != 0 {
            score -= 1;
        }
        ph = (ph << 1) | 1;
        mh <<= 1;
        pv = mh | !(xv | ph);
        mv = ph & xv;
    }
    score
}

/// `runs[k]` marks pattern positions ending a common run of length at least `k`.
fn longest_common_substring_bits(pattern: &[u8], text: &[u8]) -> usize {
    let peq = match_masks(pattern);
    let mut runs = [0u64; WORD + 1];
    let (mut depth, mut best) = (0usize, 0usize);
    for &c in text {
        let eq = peq[c as usize];
        if eq == 0 {
            depth = 0;
            continue;
        }
        let mut deepest = 1;
        for k in (2..=min(depth + 1, WORD)).rev() {
            runs[k] = eq & (runs[k - 1] << 1);
            if deepest == 1 && runs[k] != 0 {
                deepest = k;
            }
        }
        runs[1] = eq;
        depth = deepest;
        best = max(best, depth);
    }
    best
}

/// Edit distance with unit-cost insertion, deletion and substitution.
pub fn levenshtein(a: &str, b: &str) -> usize {
    if let Some((p, t)) = bit_parallel_operands(a, b) {
        return levenshtein_bits(p, t);
    }
    levenshtein_dp(a, b)
}

fn levenshtein_dp(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = min(min(curr[j] + 1, prev[j + 1] + 1), prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Length of the longest contiguous run of characters shared by both strings.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    if let Some((p, t)) = bit_parallel_operands(a, b) {
        return longest_common_substring_bits(p, t);
    }
    longest_common_substring_dp(a, b)
}

fn longest_common_substring_dp(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            curr[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = max(best, curr[j + 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    best
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (max(a.len(), b.len()) / 2).saturating_sub(1);
    let mut a_match = vec![false; a.len()];
    let mut b_match = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = min(i + window + 1, b.len());
        for j in lo..hi {
            if !b_match[j] && b[j] == *ca {
                a_match[i] = true;
                b_match[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let mut transpositions = 0usize;
    let mut k = 0;
    for (i, ca) in a.iter().enumerate() {
        if !a_match[i] {
            continue;
        }
        while !b_match[k] {
            k += 1;
        }
        if *ca != b[k] {
            transpositions += 1;
        }
        k += 1;
    }
    let m = matches as f64;
    let t = (transpositions / 2) as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro similarity boosted by a common prefix of up to four characters,
/// scaling factor 0.1. Always in `[0, 1]`.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let sim = jaro(a, b);
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    (sim + prefix as f64 * 0.1 * (1.0 - sim)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(longest_common_substring("mark suarez", "mark suarez"), 11);
        assert_eq!(longest_common_substring("abcde", "xbcdy"), 3);
        assert_eq!(longest_common_substring("", "x"), 0);
        assert!((jaro_winkler("martha", "marhta") - 0.9611).abs() < 1e-4);
        assert!((jaro_winkler("dixon", "dicksonx") - 0.8133).abs() < 1e-4);
        assert_eq!(jaro_winkler("mark suarez", "mark suarez"), 1.0);
        assert_eq!(jaro_winkler("abc", "xyz"), 0.0);
    }

    #[test]
    fn bit_parallel_paths_agree_with_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5000 {
            let word = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
                let n = rng.gen_range(0..80);
                (0..n)
                    .map(|_| (b'a' + rng.gen_range(0..4)) as char)
                    .collect()
            };
            let (a, b) = (word(&mut rng), word(&mut rng));
            assert_eq!(levenshtein(&a, &b), levenshtein_dp(&a, &b), "{a} {b}");
            assert_eq!(
                longest_common_substring(&a, &b),
                longest_common_substring_dp(&a, &b),
                "{a} {b}"
            );
        }
        let long = "a".repeat(64);
        assert_eq!(longest_common_substring(&long, &long), 64);
        assert_eq!(levenshtein(&long, ""), 64);
    }

    #[test]
    fn unicode_is_per_char() {
        assert_eq!(levenshtein("Jürgen", "Jurgen"), 1);
        assert_eq!(longest_common_substring("Zoë", "Zoë"), 3);
    }
}
