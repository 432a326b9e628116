//! Evaluation runs: answer every instance with every candidate model,
//! grade singles, and grade a seeded sample of pairwise matchups.

use std::collections::BTreeMap;

use benchforge_core::assemble::TestInstance;
use benchforge_core::judge::{
    self, Aggregate, CandidateAnswer, GradedPair, GradedSingle, VerdictMode,
};
use benchforge_core::llm::ChatClient;
use benchforge_core::{hash, rng};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PAIR_BUDGET: usize = 6000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    /// Answers that failed with a transport/LLM error, per model.
    pub missing_answers: BTreeMap<String, usize>,
    /// Answers produced, per model.
    pub answered: BTreeMap<String, usize>,
    /// Judgments skipped because the judge reply never parsed.
    pub unparseable_verdicts: usize,
}

pub struct EvalOutcome {
    pub aggregate: Aggregate,
    pub singles: Vec<GradedSingle>,
    pub pairs: Vec<GradedPair>,
    pub counts: EvalCounts,
}

/// Run the full protocol. Deterministic given deterministic clients and
/// a seed; pairwise matchups are sampled uniformly over
/// (instance, model pair) when the cross-product exceeds the budget.
pub fn run_eval(
    dataset: &[TestInstance],
    models: &[(String, Box<dyn ChatClient>)],
    judge_id: &str,
    judge_client: &dyn ChatClient,
    pair_budget: usize,
    seed: u64,
) -> EvalOutcome {
    let mut counts = EvalCounts::default();
    for (name, _) in models {
        counts.missing_answers.insert(name.clone(), 0);
        counts.answered.insert(name.clone(), 0);
    }

    // Answer phase.
    let mut answers: BTreeMap<(usize, usize), CandidateAnswer> = BTreeMap::new();
    for (ii, inst) in dataset.iter().enumerate() {
        for (mi, (name, client)) in models.iter().enumerate() {
            match judge::answer(client.as_ref(), name, inst) {
                Ok(a) => {
                    *counts.answered.get_mut(name).unwrap() += 1;
                    answers.insert((ii, mi), a);
                }
                Err(e) => {
                    log::warn!("{name} failed on {}: {e}", inst.id);
                    *counts.missing_answers.get_mut(name).unwrap() += 1;
                }
            }
        }
    }

    // Single-answer grading.
    let mut singles = Vec::new();
    for (ii, inst) in dataset.iter().enumerate() {
        for (mi, (name, _)) in models.iter().enumerate() {
            let Some(ans) = answers.get(&(ii, mi)) else { continue };
            match judge::grade_single(judge_client, judge_id, inst, ans) {
                Ok(v) => {
                    if let VerdictMode::Single { score } = v.mode {
                        singles.push(GradedSingle {
                            instance_id: inst.id.clone(),
                            query_type: inst.query_type,
                            model_id: name.clone(),
                            score,
                        });
                    }
                }
                Err(e) => {
                    log::warn!("judge failed on {}: {e}", inst.id);
                    counts.unparseable_verdicts += 1;
                }
            }
        }
    }

    // Pairwise grading over a seeded sample of the cross-product.
    let mut combos: Vec<(usize, usize, usize)> = Vec::new();
    for ii in 0..dataset.len() {
        for a in 0..models.len() {
            for b in (a + 1)..models.len() {
                if answers.contains_key(&(ii, a)) && answers.contains_key(&(ii, b)) {
                    combos.push((ii, a, b));
                }
            }
        }
    }
    if combos.len() > pair_budget {
        let mut stream = rng::seeded(hash::mix_seed(seed, "pairwise"));
        let mut picked: Vec<usize> = rng::choose_indices(&mut stream, combos.len(), pair_budget);
        picked.sort_unstable();
        combos = picked.into_iter().map(|i| combos[i]).collect();
    }
    let mut pairs = Vec::new();
    for (ii, a, b) in combos {
        let inst = &dataset[ii];
        let ans_a = &answers[&(ii, a)];
        let ans_b = &answers[&(ii, b)];
        match judge::grade_pairwise(judge_client, judge_id, inst, ans_a, ans_b) {
            Ok(v) => {
                if let VerdictMode::Pairwise { winner } = v.mode {
                    pairs.push(GradedPair {
                        instance_id: inst.id.clone(),
                        model_a: models[a].0.clone(),
                        model_b: models[b].0.clone(),
                        winner,
                    });
                }
            }
            Err(e) => {
                log::warn!("pairwise judge failed on {}: {e}", inst.id);
                counts.unparseable_verdicts += 1;
            }
        }
    }

    let aggregate = judge::aggregate(&singles, &pairs);
    EvalOutcome { aggregate, singles, pairs, counts }
}

/// Models with zero produced answers; a nonzero-exit condition for the
/// CLI.
pub fn models_without_answers(counts: &EvalCounts) -> Vec<String> {
    counts
        .answered
        .iter()
        .filter(|&(_, &n)| n == 0)
        .map(|(m, _)| m.clone())
        .collect()
}
