//! Monte Carlo protocol runs with JSON-lines transcripts.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Correlator, Game, Question, Strategy};
use crate::qcore::sample_index;
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prover {
    Alice,
    Bob,
}

impl fmt::Display for Prover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prover::Alice => "alice",
            Prover::Bob => "bob",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Addressed {
    pub to: Prover,
    pub question: Question,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
    None,
}

/// One round: the seed of its randomness stream, two addressed questions
/// with replies, and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub q1: Addressed,
    pub r1: usize,
    pub q2: Addressed,
    pub r2: usize,
    pub verdict: Verdict,
}

impl Transcript {
    pub fn new(seed: u64, q1: Addressed, r1: usize, q2: Addressed, r2: usize, verdict: Verdict) -> Result<Self> {
        if q1.to == q2.to {
            return Err(Error::Policy(format!("both questions addressed to {}", q1.to)));
        }
        Ok(Self { seed, q1, r1, q2, r2, verdict })
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRun {
    pub rounds: usize,
    pub accepts: usize,
    pub transcripts: Vec<Transcript>,
}

impl ProtocolRun {
    pub fn frequency(&self) -> f64 {
        self.accepts as f64 / self.rounds as f64
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.transcripts {
            out.push_str(&t.to_json_line()?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Plays `rounds` independent rounds. Round i draws from its own stream
/// seeded by `derive_seed(seed, "round/i")`: the question pair by weight,
/// Alice's answer from her Born marginal, Bob's from the Born distribution
/// conditioned on Alice's outcome (which is what his measurement on the
/// post-measurement state gives, Bell measurements included), then the
/// verifier's coin for fractional predicates. The first `keep` transcripts
/// are returned.
pub fn run_protocol(game: &Game, strategy: &Strategy, rounds: usize, seed: u64, keep: usize) -> Result<ProtocolRun> {
    let picker = WeightedIndex::new(game.rounds().iter().map(|r| r.weight))
        .map_err(|e| Error::Game(format!("round weights: {e}")))?;
    for r in game.rounds() {
        let (x, y) = game.round_question(r);
        if strategy.alice_pvm(x).is_none() {
            return Err(Error::MissingMeasurement { side: "alice", question: x.to_string() });
        }
        if strategy.bob_pvm(y).is_none() {
            return Err(Error::MissingMeasurement { side: "bob", question: y.to_string() });
        }
    }
    let mut corr = Correlator::new(strategy);
    // Per round: Alice's marginal and the joint table.
    let mut tables: HashMap<usize, (Vec<f64>, Vec<f64>)> = HashMap::new();
    let mut accepts = 0;
    let mut transcripts = Vec::with_capacity(keep.min(rounds));
    for i in 0..rounds {
        let round_seed = seeds::derive_seed(seed, &format!("round/{i}"));
        let mut rng = seeds::stream(round_seed, "play");
        let ri = picker.sample(&mut rng);
        let r = &game.rounds()[ri];
        let (x, y) = game.round_question(r);
        let arity_b = game.bob_questions()[r.y].arity;
        if let Entry::Vacant(slot) = tables.entry(ri) {
            let joint = corr.joint(x, y)?;
            if joint.len() != r.table.len() {
                return Err(Error::Game(format!("strategy arities do not match round {x}/{y}")));
            }
            let marginal = joint.chunks(arity_b).map(|row| row.iter().sum()).collect();
            slot.insert((marginal, joint));
        }
        let (marginal, joint) = &tables[&ri];
        let a = sample_index(marginal, &mut rng);
        let b = sample_index(&joint[a * arity_b..(a + 1) * arity_b], &mut rng);
        let accept = rng.random::<f64>() < r.table[a * arity_b + b];
        accepts += accept as usize;
        if transcripts.len() < keep {
            transcripts.push(Transcript::new(
                round_seed,
                Addressed { to: Prover::Alice, question: x.clone() },
                a,
                Addressed { to: Prover::Bob, question: y.clone() },
                b,
                if accept { Verdict::Accept } else { Verdict::Reject },
            )?);
        }
    }
    Ok(ProtocolRun { rounds, accepts, transcripts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{canonical_ms_strategy, exact_value, magic_square_game, perturbed_strategy, lwpbt, canonical_lwpbt_strategy};

    #[test]
    fn perfect_strategy_always_wins() {
        let run = run_protocol(&magic_square_game(), &canonical_ms_strategy(), 2000, 5, 3).unwrap();
        assert_eq!(run.accepts, 2000);
        assert_eq!(run.transcripts.len(), 3);
        assert!(run.transcripts.iter().all(|t| t.verdict == Verdict::Accept));
    }

    #[test]
    fn deterministic_given_seed() {
        let g = lwpbt(2, 6).unwrap();
        let s = perturbed_strategy(&canonical_lwpbt_strategy(&g, 2).unwrap(), 0.3).unwrap();
        let a = run_protocol(&g, &s, 3000, 11, 10).unwrap();
        let b = run_protocol(&g, &s, 3000, 11, 10).unwrap();
        assert_eq!(a.accepts, b.accepts);
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        let exact = exact_value(&g, &s).unwrap();
        let sigma = (exact * (1.0 - exact) / 3000.0).sqrt();
        assert!((a.frequency() - exact).abs() < 3.0 * sigma + 1e-12);
    }

    #[test]
    fn transcript_fields() {
        let run = run_protocol(&magic_square_game(), &canonical_ms_strategy(), 1, 0, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&run.to_jsonl().unwrap()).unwrap();
        for f in ["seed", "q1", "r1", "q2", "r2", "verdict"] {
            assert!(v.get(f).is_some(), "{f}");
        }
        assert_eq!(v["q1"]["to"], "alice");
    }

    #[test]
    fn same_addressee_rejected() {
        let q = Addressed { to: Prover::Bob, question: Question::Energy };
        assert!(Transcript::new(0, q.clone(), 0, q, 0, Verdict::None).is_err());
    }
}
