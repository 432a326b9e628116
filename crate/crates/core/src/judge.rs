//! Benchmark evaluation: zero-shot candidate answering, single-answer
//! grading on a 1..10 scale, pairwise grading with position-swap
//! debiasing, and aggregation into per-type means and a win-rate matrix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::assemble::TestInstance;
use crate::llm::{ChatClient, ChatRequest, LlmError, Message};
use crate::types::QueryType;

/// The fixed zero-shot reading-comprehension prompt. Filled with the
/// redacted passage and the query; the reference answer never appears.
pub const ZERO_SHOT_RC_PROMPT: &str = "Answer the question based on the passage below. If the \
passage does not contain the answer, say so.\n\nPassage:\n{passage}\n\nQuestion: {query}\n\nAnswer:";

/// Build the candidate prompt for one instance.
pub fn candidate_prompt(instance: &TestInstance) -> String {
    ZERO_SHOT_RC_PROMPT
        .replace("{passage}", &instance.passage_text)
        .replace("{query}", &instance.query)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateAnswer {
    pub instance_id: String,
    pub model_id: String,
    pub text: String,
}

/// Ask a candidate model the instance's query, zero-shot, temperature 0.
pub fn answer(
    client: &dyn ChatClient,
    model_id: &str,
    instance: &TestInstance,
) -> Result<CandidateAnswer, LlmError> {
    let req = ChatRequest::new(model_id, candidate_prompt(instance)).with_max_tokens(512);
    let text = client.chat(&req)?;
    Ok(CandidateAnswer {
        instance_id: instance.id.clone(),
        model_id: model_id.to_string(),
        text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairWinner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMode {
    Single { score: u8 },
    Pairwise { winner: PairWinner },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub mode: VerdictMode,
    pub rationale: String,
    pub judge_model_id: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("could not parse a verdict from judge reply: {0:?}")]
    Parse(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Single-grading prompt: query, reference answer, candidate answer.
/// Model identities are deliberately absent so grading is blind.
pub fn single_judge_prompt(instance: &TestInstance, answer_text: &str) -> String {
    format!(
        "You are grading an answer to a reading-comprehension question.\n\n\
         Question: {query}\n\nReference answer: {reference}\n\nCandidate answer: {candidate}\n\n\
         Rate the candidate answer for correctness and helpfulness against the reference. \
         Reply with a line of the form \"Score: <integer 1-10>\".",
        query = instance.query,
        reference = instance.answer,
        candidate = answer_text,
    )
}

/// Pairwise prompt: query, reference answer, two positioned answers.
pub fn pairwise_judge_prompt(instance: &TestInstance, first: &str, second: &str) -> String {
    format!(
        "You are comparing two answers to a reading-comprehension question.\n\n\
         Question: {query}\n\nReference answer: {reference}\n\n\
         Answer A: {first}\n\nAnswer B: {second}\n\n\
         Which answer is better against the reference? Reply with exactly one of \
         [[A]], [[B]], or [[Tie]].",
        query = instance.query,
        reference = instance.answer,
    )
}

/// Parse an integer score 1..10 from a judge reply. Accepts "Score: 8",
/// "8/10", or a bare integer; the first digit run in the reply decides.
pub fn parse_single_score(reply: &str) -> Option<u8> {
    let bytes = reply.as_bytes();
    let start = bytes.iter().position(u8::is_ascii_digit)?;
    let end = bytes[start..]
        .iter()
        .position(|b| !b.is_ascii_digit())
        .map_or(bytes.len(), |o| start + o);
    let value: u32 = reply[start..end].parse().ok()?;
    if (1..=10).contains(&value) {
        Some(value as u8)
    } else {
        None
    }
}

/// Parse a pairwise verdict. Accepts the bracketed forms [[A]]/[[B]]/
/// [[Tie]] anywhere in the reply, or a bare trimmed "A"/"B"/"Tie".
pub fn parse_pair_winner(reply: &str) -> Option<PairWinner> {
    let lower = reply.to_lowercase();
    let marks = [("[[a]]", PairWinner::A), ("[[b]]", PairWinner::B), ("[[tie]]", PairWinner::Tie)];
    let mut found: Option<(usize, PairWinner)> = None;
    for (mark, winner) in marks {
        if let Some(at) = lower.find(mark) {
            if found.is_none_or(|(prev, _)| at < prev) {
                found = Some((at, winner));
            }
        }
    }
    if let Some((_, w)) = found {
        return Some(w);
    }
    match lower.trim().trim_end_matches('.') {
        "a" => Some(PairWinner::A),
        "b" => Some(PairWinner::B),
        "tie" => Some(PairWinner::Tie),
        _ => None,
    }
}

const RETRY_NUDGE: &str = "Reply with only the verdict in the requested format.";

fn ask_with_retry<T>(
    client: &dyn ChatClient,
    judge_id: &str,
    prompt: String,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<(T, String), JudgeError> {
    let req = ChatRequest::new(judge_id, prompt.clone());
    let reply = client.chat(&req)?;
    if let Some(v) = parse(&reply) {
        return Ok((v, reply));
    }
    let mut retry = ChatRequest::new(judge_id, prompt);
    retry.messages.push(Message { role: crate::llm::Role::Assistant, text: reply });
    retry.messages.push(Message::user(RETRY_NUDGE.to_string()));
    let reply = client.chat(&retry)?;
    match parse(&reply) {
        Some(v) => Ok((v, reply)),
        None => Err(JudgeError::Parse(reply)),
    }
}

/// Grade one answer 1..10 against the reference.
pub fn grade_single(
    client: &dyn ChatClient,
    judge_id: &str,
    instance: &TestInstance,
    answer: &CandidateAnswer,
) -> Result<JudgeVerdict, JudgeError> {
    let (score, rationale) =
        ask_with_retry(client, judge_id, single_judge_prompt(instance, &answer.text), parse_single_score)?;
    Ok(JudgeVerdict {
        mode: VerdictMode::Single { score },
        rationale,
        judge_model_id: judge_id.to_string(),
    })
}

/// Grade a pair of answers twice with positions swapped. The verdict is
/// a winner only when both orderings agree; any disagreement is a Tie.
pub fn grade_pairwise(
    client: &dyn ChatClient,
    judge_id: &str,
    instance: &TestInstance,
    ans_a: &CandidateAnswer,
    ans_b: &CandidateAnswer,
) -> Result<JudgeVerdict, JudgeError> {
    let (first, r1) =
        ask_with_retry(client, judge_id, pairwise_judge_prompt(instance, &ans_a.text, &ans_b.text), parse_pair_winner)?;
    let (second_raw, r2) =
        ask_with_retry(client, judge_id, pairwise_judge_prompt(instance, &ans_b.text, &ans_a.text), parse_pair_winner)?;
    // Map the swapped call back to the original labels.
    let second = match second_raw {
        PairWinner::A => PairWinner::B,
        PairWinner::B => PairWinner::A,
        PairWinner::Tie => PairWinner::Tie,
    };
    let winner = if first == second { first } else { PairWinner::Tie };
    Ok(JudgeVerdict {
        mode: VerdictMode::Pairwise { winner },
        rationale: format!("{r1} | swapped: {r2}"),
        judge_model_id: judge_id.to_string(),
    })
}

/// A single-grading outcome tagged with what it graded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedSingle {
    pub instance_id: String,
    pub query_type: QueryType,
    pub model_id: String,
    pub score: u8,
}

/// A pairwise outcome tagged with the two models, in the order graded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedPair {
    pub instance_id: String,
    pub model_a: String,
    pub model_b: String,
    pub winner: PairWinner,
}

/// Pairwise results as count matrices over a fixed model ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRateMatrix {
    pub models: Vec<String>,
    pub wins: Vec<Vec<usize>>,
    pub ties: Vec<Vec<usize>>,
    pub totals: Vec<Vec<usize>>,
}

impl WinRateMatrix {
    pub fn index_of(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    /// wins[i][j] + wins[j][i] + ties[i][j] = totals[i][j]; diagonal zero;
    /// ties and totals symmetric.
    pub fn check_conservation(&self) -> bool {
        let n = self.models.len();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    if self.wins[i][j] != 0 || self.ties[i][j] != 0 || self.totals[i][j] != 0 {
                        return false;
                    }
                    continue;
                }
                if self.ties[i][j] != self.ties[j][i] || self.totals[i][j] != self.totals[j][i] {
                    return false;
                }
                if self.wins[i][j] + self.wins[j][i] + self.ties[i][j] != self.totals[i][j] {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub mean_score: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean single score per (model, query type).
    pub per_model_type: BTreeMap<String, BTreeMap<QueryType, TypeScore>>,
    pub matrix: WinRateMatrix,
}

/// Exact counting of graded results into per-type means and the win-rate
/// matrix. Model order in the matrix is sorted for determinism.
pub fn aggregate(singles: &[GradedSingle], pairs: &[GradedPair]) -> Aggregate {
    let mut per_model_type: BTreeMap<String, BTreeMap<QueryType, (u64, usize)>> = BTreeMap::new();
    for s in singles {
        let slot = per_model_type
            .entry(s.model_id.clone())
            .or_default()
            .entry(s.query_type)
            .or_insert((0, 0));
        slot.0 += s.score as u64;
        slot.1 += 1;
    }
    let per_model_type = per_model_type
        .into_iter()
        .map(|(m, by_type)| {
            let scores = by_type
                .into_iter()
                .map(|(qt, (sum, n))| (qt, TypeScore { mean_score: sum as f64 / n as f64, n }))
                .collect();
            (m, scores)
        })
        .collect();

    let mut model_set: alloc::collections::BTreeSet<String> = alloc::collections::BTreeSet::new();
    for p in pairs {
        model_set.insert(p.model_a.clone());
        model_set.insert(p.model_b.clone());
    }
    let models: Vec<String> = model_set.into_iter().collect();
    let n = models.len();
    let mut wins = alloc::vec![alloc::vec![0usize; n]; n];
    let mut ties = alloc::vec![alloc::vec![0usize; n]; n];
    let mut totals = alloc::vec![alloc::vec![0usize; n]; n];
    let idx = |m: &str| models.iter().position(|x| x == m).unwrap();
    for p in pairs {
        let (a, b) = (idx(&p.model_a), idx(&p.model_b));
        if a == b {
            continue;
        }
        totals[a][b] += 1;
        totals[b][a] += 1;
        match p.winner {
            PairWinner::A => wins[a][b] += 1,
            PairWinner::B => wins[b][a] += 1,
            PairWinner::Tie => {
                ties[a][b] += 1;
                ties[b][a] += 1;
            }
        }
    }
    Aggregate { per_model_type, matrix: WinRateMatrix { models, wins, ties, totals } }
}
