use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use taxoprobe_core::seed::rng_for;
use taxoprobe_core::Gold;

use crate::wire::TopLogprob;
use crate::{Decision, EvalError, Result};

pub const YES_VARIANTS: [&str; 4] = ["Yes", "yes", " Yes", " yes"];
pub const NO_VARIANTS: [&str; 4] = ["No", "no", " No", " no"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YesNoScore {
    pub p_yes: f64,
    pub p_no: f64,
    /// Argmax of the renormalized pair; a tie answers No.
    pub answer: Gold,
    /// Log-probability of every Yes/No surface variant found in the top tokens.
    pub raw_variants: BTreeMap<String, f64>,
}

fn log_sum_exp(xs: &[f64]) -> Option<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return None;
    }
    Some(m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Pools the Yes and No surface variants among the first token's top
/// log-probabilities and renormalizes over the two groups. Variants missing
/// from the list count as probability 0; a token repeated in the list keeps
/// its first value.
pub fn aggregate_yes_no(top: &[TopLogprob]) -> Result<YesNoScore> {
    let mut raw_variants = BTreeMap::new();
    for t in top {
        let known = YES_VARIANTS.contains(&t.token.as_str()) || NO_VARIANTS.contains(&t.token.as_str());
        if known && !t.logprob.is_nan() {
            raw_variants.entry(t.token.clone()).or_insert(t.logprob);
        }
    }
    let group = |names: &[&str]| -> Option<f64> {
        let xs: Vec<f64> = names.iter().filter_map(|n| raw_variants.get(*n).copied()).collect();
        log_sum_exp(&xs)
    };
    let (p_yes, p_no) = match (group(&YES_VARIANTS), group(&NO_VARIANTS)) {
        (None, None) => {
            return Err(EvalError::Abstention {
                tokens: top.iter().map(|t| t.token.clone()).collect(),
            })
        }
        (Some(_), None) => (1.0, 0.0),
        (None, Some(_)) => (0.0, 1.0),
        (Some(y), Some(n)) => (sigmoid(y - n), sigmoid(n - y)),
    };
    let answer = if p_yes > p_no { Gold::Yes } else { Gold::No };
    Ok(YesNoScore {
        p_yes,
        p_no,
        answer,
        raw_variants,
    })
}

/// Final answer under `decision`. Sampling draws from a stream keyed by
/// the seed and `key`, so it does not depend on request order.
pub fn decide(score: &YesNoScore, decision: Decision, key: &str) -> Gold {
    match decision {
        Decision::Argmax => score.answer,
        Decision::Sample(seed) => {
            let u: f64 = rng_for(seed, key).random();
            if u < score.p_yes {
                Gold::Yes
            } else {
                Gold::No
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top(pairs: &[(&str, f64)]) -> Vec<TopLogprob> {
        pairs
            .iter()
            .map(|(t, l)| TopLogprob {
                token: t.to_string(),
                logprob: *l,
            })
            .collect()
    }

    #[test]
    fn tie_answers_no() {
        let s = aggregate_yes_no(&top(&[("Yes", -1.0), ("No", -1.0)])).unwrap();
        assert_eq!(s.p_yes, 0.5);
        assert_eq!(s.answer, Gold::No);
    }

    #[test]
    fn one_sided_groups() {
        let s = aggregate_yes_no(&top(&[(" yes", -3.0), ("Maybe", -0.1)])).unwrap();
        assert_eq!((s.p_yes, s.p_no, s.answer), (1.0, 0.0, Gold::Yes));
        let s = aggregate_yes_no(&top(&[("no", -3.0)])).unwrap();
        assert_eq!((s.p_yes, s.p_no, s.answer), (0.0, 1.0, Gold::No));
    }

    #[test]
    fn near_variants_are_not_pooled() {
        let s = aggregate_yes_no(&top(&[("YES", -0.1), ("Yes.", -0.2), ("no", -2.0)])).unwrap();
        assert_eq!(s.answer, Gold::No);
        assert_eq!(s.raw_variants.keys().collect::<Vec<_>>(), ["no"]);
    }

    #[test]
    fn sampling_is_keyed_and_tracks_p_yes() {
        let s = aggregate_yes_no(&top(&[("Yes", 0.3f64.ln()), ("No", 0.7f64.ln())])).unwrap();
        let key = |i: usize| format!("q{i}/positive");
        let draws: Vec<Gold> = (0..4000).map(|i| decide(&s, Decision::Sample(5), &key(i))).collect();
        let again: Vec<Gold> = (0..4000).map(|i| decide(&s, Decision::Sample(5), &key(i))).collect();
        assert_eq!(draws, again);
        let yes = draws.iter().filter(|&&g| g == Gold::Yes).count() as f64 / 4000.0;
        assert!((yes - 0.3).abs() < 0.03, "{yes}");
        assert_eq!(decide(&s, Decision::Argmax, "x"), Gold::No);
    }
}
