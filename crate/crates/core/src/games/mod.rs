//! Nonlocal games with exact and sampled value computation, plus the
//! Magic Square, low-weight linearity / anti-commutation tests and their
//! mixture.

mod diagnostics;
mod lw;
mod magic_square;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{sample_index, ComplexMatrix, PauliString, Pvm, StateVector, C64};

pub use diagnostics::{
    rigidity_diagnostics, AnticommutationEntry, ConsistencyEntry, DiagnosticSummary, LinearityEntry,
    RigidityDiagnostics,
};
pub use lw::{
    canonical_lwpbt_strategy, honest_pvm, low_weight_masks, lw_anticommutation_test, lw_linearity_test, lwpbt,
    perturbed_strategy, w_of, DEFAULT_WEIGHT_CAP, LW_MAX_N,
};
pub use magic_square::{
    canonical_ms_strategy, magic_square_game, ms_operator, ms_win_table, Line, LINES,
};

/// Anything a player can be asked.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Question {
    /// Alice measures an unsigned Pauli string; one-bit answer.
    Pauli { string: PauliString },
    /// Bob measures two commuting strings; answer `b1 << 1 | b2`.
    PauliPair { first: PauliString, second: PauliString },
    /// Magic Square variable v_k, k in 1..=9.
    Variable { k: u8 },
    /// Magic Square equation; three bits, first variable most significant.
    Line { line: Line },
    /// Alice's (v_9, a) question for the support pair i < j.
    SquareSpecial { i: usize, j: usize },
    /// Bob's (q, a) question for the support pair i < j.
    SquareLine { line: Line, i: usize, j: usize },
    /// Bob Bell-measures his n pairs; answer packs the 2n key bits.
    Energy,
    /// The anchoring question; any answer is accepted.
    Bottom,
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Question::Pauli { string } => write!(f, "{string}"),
            Question::PauliPair { first, second } => write!(f, "({first},{second})"),
            Question::Variable { k } => write!(f, "v{k}"),
            Question::Line { line } => write!(f, "{line}"),
            Question::SquareSpecial { i, j } => write!(f, "(v9,{i}{j})"),
            Question::SquareLine { line, i, j } => write!(f, "({line},{i}{j})"),
            Question::Energy => write!(f, "energy"),
            Question::Bottom => write!(f, "bottom"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub question: Question,
    pub arity: usize,
}

/// One question pair with its probability and win table.
/// `table[a * arity_b + b]` is the probability of accepting answers (a, b);
/// fractional entries encode verifier-side randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub x: usize,
    pub y: usize,
    pub weight: f64,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GameDoc")]
pub struct Game {
    pub name: String,
    alice: Vec<QuestionSpec>,
    bob: Vec<QuestionSpec>,
    rounds: Vec<Round>,
}

#[derive(Deserialize)]
struct GameDoc {
    name: String,
    alice: Vec<QuestionSpec>,
    bob: Vec<QuestionSpec>,
    rounds: Vec<Round>,
}

impl TryFrom<GameDoc> for Game {
    type Error = Error;
    fn try_from(doc: GameDoc) -> Result<Self> {
        Game::new(doc.name, doc.alice, doc.bob, doc.rounds)
    }
}

pub const WEIGHT_TOL: f64 = 1e-12;

impl Game {
    pub fn new(name: String, alice: Vec<QuestionSpec>, bob: Vec<QuestionSpec>, rounds: Vec<Round>) -> Result<Self> {
        let mut total = 0.0;
        for (r, round) in rounds.iter().enumerate() {
            let (xa, yb) = match (alice.get(round.x), bob.get(round.y)) {
                (Some(x), Some(y)) => (x.arity, y.arity),
                _ => return Err(Error::Game(format!("round {r} references an unknown question"))),
            };
            if round.table.len() != xa * yb {
                return Err(Error::Game(format!("round {r}: table has {} entries, expected {}", round.table.len(), xa * yb)));
            }
            if round.table.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Game(format!("round {r}: acceptance probabilities must lie in [0, 1]")));
            }
            if !(round.weight >= 0.0) {
                return Err(Error::Game(format!("round {r}: negative weight")));
            }
            total += round.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Game(format!("weights sum to {total}")));
        }
        Ok(Self { name, alice, bob, rounds })
    }

    pub fn alice_questions(&self) -> &[QuestionSpec] {
        &self.alice
    }

    pub fn bob_questions(&self) -> &[QuestionSpec] {
        &self.bob
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn round_question(&self, r: &Round) -> (&Question, &Question) {
        (&self.alice[r.x].question, &self.bob[r.y].question)
    }

    /// Value when both players answer uniformly at random.
    pub fn random_play_value(&self) -> f64 {
        self.rounds.iter().map(|r| r.weight * r.table.iter().sum::<f64>() / r.table.len() as f64).sum()
    }

    /// Σ_k w_k G_k over a common question universe. Identical questions are
    /// merged, as are rounds with the same questions and table.
    pub fn mixture(name: impl Into<String>, parts: &[(f64, &Game)]) -> Result<Game> {
        let mut b = GameBuilder::new(name);
        for (w, g) in parts {
            for r in &g.rounds {
                let (x, y) = (&g.alice[r.x], &g.bob[r.y]);
                b.add(x.question.clone(), x.arity, y.question.clone(), y.arity, w * r.weight, r.table.clone())?;
            }
        }
        b.finish()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Accumulates weighted rounds, deduplicating questions and rounds.
pub struct GameBuilder {
    name: String,
    alice: Vec<QuestionSpec>,
    bob: Vec<QuestionSpec>,
    alice_index: HashMap<Question, usize>,
    bob_index: HashMap<Question, usize>,
    rounds: Vec<Round>,
    round_index: HashMap<(usize, usize, Vec<u64>), usize>,
}

impl GameBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            alice: Vec::new(),
            bob: Vec::new(),
            alice_index: HashMap::new(),
            bob_index: HashMap::new(),
            rounds: Vec::new(),
            round_index: HashMap::new(),
        }
    }

    fn intern(specs: &mut Vec<QuestionSpec>, index: &mut HashMap<Question, usize>, q: Question, arity: usize) -> Result<usize> {
        if let Some(&i) = index.get(&q) {
            if specs[i].arity != arity {
                return Err(Error::Game(format!("question {q} declared with arities {} and {arity}", specs[i].arity)));
            }
            return Ok(i);
        }
        specs.push(QuestionSpec { question: q.clone(), arity });
        index.insert(q, specs.len() - 1);
        Ok(specs.len() - 1)
    }

    pub fn add(&mut self, x: Question, arity_a: usize, y: Question, arity_b: usize, weight: f64, table: Vec<f64>) -> Result<()> {
        let xi = Self::intern(&mut self.alice, &mut self.alice_index, x, arity_a)?;
        let yi = Self::intern(&mut self.bob, &mut self.bob_index, y, arity_b)?;
        let key = (xi, yi, table.iter().map(|p| p.to_bits()).collect());
        match self.round_index.get(&key) {
            Some(&r) => self.rounds[r].weight += weight,
            None => {
                self.round_index.insert(key, self.rounds.len());
                self.rounds.push(Round { x: xi, y: yi, weight, table });
            }
        }
        Ok(())
    }

    /// Normalizes the accumulated weights.
    pub fn finish(mut self) -> Result<Game> {
        let total: f64 = self.rounds.iter().map(|r| r.weight).sum();
        if total <= 0.0 {
            return Err(Error::Game("no weighted rounds".into()));
        }
        for r in &mut self.rounds {
            r.weight /= total;
        }
        Game::new(self.name, self.alice, self.bob, self.rounds)
    }
}

/// Shared state plus per-question PVMs. Alice holds the leading qubits.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StrategyDoc", into = "StrategyDoc")]
pub struct Strategy {
    pub label: String,
    state: StateVector,
    alice_qubits: usize,
    bob_qubits: usize,
    alice: BTreeMap<Question, Pvm>,
    bob: BTreeMap<Question, Pvm>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    question: Question,
    pvm: Pvm,
}

#[derive(Serialize, Deserialize)]
struct StrategyDoc {
    label: String,
    state: StateVector,
    alice_qubits: usize,
    bob_qubits: usize,
    alice: Vec<Entry>,
    bob: Vec<Entry>,
}

impl TryFrom<StrategyDoc> for Strategy {
    type Error = Error;
    fn try_from(d: StrategyDoc) -> Result<Self> {
        let collect = |v: Vec<Entry>| v.into_iter().map(|e| (e.question, e.pvm)).collect();
        Strategy::new(d.label, d.state, d.alice_qubits, collect(d.alice), collect(d.bob))
    }
}

impl From<Strategy> for StrategyDoc {
    fn from(s: Strategy) -> Self {
        let entries = |m: BTreeMap<Question, Pvm>| m.into_iter().map(|(question, pvm)| Entry { question, pvm }).collect();
        StrategyDoc {
            label: s.label,
            state: s.state,
            alice_qubits: s.alice_qubits,
            bob_qubits: s.bob_qubits,
            alice: entries(s.alice),
            bob: entries(s.bob),
        }
    }
}

impl Strategy {
    pub fn new(
        label: impl Into<String>,
        state: StateVector,
        alice_qubits: usize,
        alice: BTreeMap<Question, Pvm>,
        bob: BTreeMap<Question, Pvm>,
    ) -> Result<Self> {
        let total = state.n_qubits();
        if alice_qubits > total {
            return Err(Error::Dimension(format!("{alice_qubits} Alice qubits in a {total}-qubit state")));
        }
        let bob_qubits = total - alice_qubits;
        for (side, map, q) in [("alice", &alice, alice_qubits), ("bob", &bob, bob_qubits)] {
            for (question, pvm) in map {
                if pvm.dim() != 1 << q {
                    return Err(Error::Dimension(format!(
                        "{side} PVM for {question} acts on dim {} but the register has dim {}",
                        pvm.dim(),
                        1usize << q
                    )));
                }
            }
        }
        Ok(Self { label: label.into(), state, alice_qubits, bob_qubits, alice, bob })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn alice_qubits(&self) -> usize {
        self.alice_qubits
    }

    pub fn bob_qubits(&self) -> usize {
        self.bob_qubits
    }

    pub fn alice_pvm(&self, q: &Question) -> Option<&Pvm> {
        self.alice.get(q)
    }

    pub fn bob_pvm(&self, q: &Question) -> Option<&Pvm> {
        self.bob.get(q)
    }

    pub fn alice_map(&self) -> &BTreeMap<Question, Pvm> {
        &self.alice
    }

    pub fn bob_map(&self) -> &BTreeMap<Question, Pvm> {
        &self.bob
    }

    pub fn set_alice(&mut self, q: Question, pvm: Pvm) -> Result<()> {
        if pvm.dim() != 1 << self.alice_qubits {
            return Err(Error::Dimension(format!("alice PVM for {q} has dim {}", pvm.dim())));
        }
        self.alice.insert(q, pvm);
        Ok(())
    }

    pub fn set_bob(&mut self, q: Question, pvm: Pvm) -> Result<()> {
        if pvm.dim() != 1 << self.bob_qubits {
            return Err(Error::Dimension(format!("bob PVM for {q} has dim {}", pvm.dim())));
        }
        self.bob.insert(q, pvm);
        Ok(())
    }

    /// ψ reshaped as a dim_A × dim_B matrix.
    pub fn state_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(1 << self.alice_qubits, 1 << self.bob_qubits, self.state.amplitudes().to_vec())
            .expect("state dimension splits")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn frob_inner(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    u.data().iter().zip(v.data()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Joint answer distributions p(a, b | x, y) = ⟨ψ|E^x_a ⊗ F^y_b|ψ⟩, with the
/// per-question vectors (E ⊗ I)ψ and (I ⊗ F)ψ memoized.
pub struct Correlator<'a> {
    strategy: &'a Strategy,
    psi: ComplexMatrix,
    alice_cache: HashMap<Question, Vec<ComplexMatrix>>,
    bob_cache: HashMap<Question, Vec<ComplexMatrix>>,
}

impl<'a> Correlator<'a> {
    pub fn new(strategy: &'a Strategy) -> Self {
        Self { strategy, psi: strategy.state_matrix(), alice_cache: HashMap::new(), bob_cache: HashMap::new() }
    }

    fn alice_vectors(&mut self, q: &Question) -> Result<&[ComplexMatrix]> {
        if !self.alice_cache.contains_key(q) {
            let pvm = self
                .strategy
                .alice_pvm(q)
                .ok_or_else(|| Error::MissingMeasurement { side: "alice", question: q.to_string() })?;
            let v = pvm.projectors().iter().map(|e| e.matmul(&self.psi)).collect();
            self.alice_cache.insert(q.clone(), v);
        }
        Ok(&self.alice_cache[q])
    }

    fn bob_vectors(&mut self, q: &Question) -> Result<&[ComplexMatrix]> {
        if !self.bob_cache.contains_key(q) {
            let pvm = self
                .strategy
                .bob_pvm(q)
                .ok_or_else(|| Error::MissingMeasurement { side: "bob", question: q.to_string() })?;
            let v = pvm.projectors().iter().map(|f| self.psi.matmul(&f.transpose())).collect();
            self.bob_cache.insert(q.clone(), v);
        }
        Ok(&self.bob_cache[q])
    }

    /// Row-major `arity_a × arity_b` table of probabilities.
    pub fn joint(&mut self, x: &Question, y: &Question) -> Result<Vec<f64>> {
        let us: Vec<ComplexMatrix> = self.alice_vectors(x)?.to_vec();
        let vs = self.bob_vectors(y)?;
        Ok(us.iter().flat_map(|u| vs.iter().map(move |v| frob_inner(u, v).max(0.0))).collect())
    }

    /// ⟨ψ|A ⊗ B|ψ⟩ for arbitrary operators on each side.
    pub fn correlation(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
        let u = a.matmul(&self.psi);
        let v = self.psi.matmul(&b.transpose());
        u.data().iter().zip(v.data()).map(|(x, y)| x.conj() * y).sum()
    }
}

fn check_arities(game: &Game, strategy: &Strategy, r: &Round) -> Result<()> {
    let (xs, ys) = (&game.alice[r.x], &game.bob[r.y]);
    for (side, spec, pvm) in [("alice", xs, strategy.alice_pvm(&xs.question)), ("bob", ys, strategy.bob_pvm(&ys.question))] {
        let pvm = pvm.ok_or_else(|| Error::MissingMeasurement { side, question: spec.question.to_string() })?;
        if pvm.outcomes() != spec.arity {
            return Err(Error::Game(format!(
                "{side} PVM for {} has {} outcomes, game expects {}",
                spec.question,
                pvm.outcomes(),
                spec.arity
            )));
        }
    }
    Ok(())
}

/// ω(G, S) = Σ μ(x,y) λ(a,b|x,y) ⟨ψ|E^x_a ⊗ F^y_b|ψ⟩.
pub fn exact_value(game: &Game, strategy: &Strategy) -> Result<f64> {
    let mut corr = Correlator::new(strategy);
    let mut value = 0.0;
    for r in game.rounds.iter().filter(|r| r.weight > 0.0) {
        check_arities(game, strategy, r)?;
        let (x, y) = game.round_question(r);
        let p = corr.joint(x, y)?;
        value += r.weight * p.iter().zip(&r.table).map(|(p, t)| p * t).sum::<f64>();
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Per-round winning probabilities, aligned with `game.rounds()`.
pub fn round_win_probabilities(game: &Game, strategy: &Strategy) -> Result<Vec<f64>> {
    let mut corr = Correlator::new(strategy);
    game.rounds
        .iter()
        .map(|r| {
            check_arities(game, strategy, r)?;
            let (x, y) = game.round_question(r);
            Ok(corr.joint(x, y)?.iter().zip(&r.table).map(|(p, t)| p * t).sum())
        })
        .collect()
}

/// Number of wins in `rounds` independent plays: sample (x, y) by weight,
/// answers from the Born distribution, then the verifier's coin.
pub fn monte_carlo_wins<R: Rng + ?Sized>(game: &Game, strategy: &Strategy, rounds: usize, rng: &mut R) -> Result<usize> {
    let picker = WeightedIndex::new(game.rounds.iter().map(|r| r.weight))
        .map_err(|e| Error::Game(format!("round weights: {e}")))?;
    let mut corr = Correlator::new(strategy);
    let mut tables: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut wins = 0;
    for _ in 0..rounds {
        let ri = picker.sample(rng);
        let r = &game.rounds[ri];
        if let std::collections::hash_map::Entry::Vacant(slot) = tables.entry(ri) {
            check_arities(game, strategy, r)?;
            let (x, y) = game.round_question(r);
            slot.insert(corr.joint(x, y)?);
        }
        let k = sample_index(&tables[&ri], rng);
        if rng.random::<f64>() < r.table[k] {
            wins += 1;
        }
    }
    Ok(wins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{epr_state, Pvm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chsh() -> Game {
        let mut b = GameBuilder::new("chsh");
        for x in 0..2u8 {
            for y in 0..2u8 {
                let table = (0..4).map(|k| ((k >> 1 ^ k & 1) as u8 == x & y) as u8 as f64).collect();
                b.add(Question::Variable { k: x }, 2, Question::Variable { k: y }, 2, 0.25, table).unwrap();
            }
        }
        b.finish().unwrap()
    }

    fn fixed_zero(n: usize) -> Strategy {
        let mut alice = BTreeMap::new();
        let mut bob = BTreeMap::new();
        for k in 0..2 {
            alice.insert(Question::Variable { k }, Pvm::constant(1 << n, 2, 0));
            bob.insert(Question::Variable { k }, Pvm::constant(1 << n, 2, 0));
        }
        Strategy::new("zeros", epr_state(n), n, alice, bob).unwrap()
    }

    #[test]
    fn deterministic_strategy_on_chsh() {
        let g = chsh();
        assert!((exact_value(&g, &fixed_zero(1)).unwrap() - 0.75).abs() < 1e-15);
        assert!((g.random_play_value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn optimal_chsh_reaches_tsirelson() {
        let g = chsh();
        let z = crate::qcore::pauli_to_matrix(&"Z".parse().unwrap());
        let x = crate::qcore::pauli_to_matrix(&"X".parse().unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b0 = (&z + &x).scale_real(s);
        let b1 = (&z - &x).scale_real(s);
        let mut alice = BTreeMap::new();
        alice.insert(Question::Variable { k: 0 }, Pvm::from_observable(&z).unwrap());
        alice.insert(Question::Variable { k: 1 }, Pvm::from_observable(&x).unwrap());
        let mut bob = BTreeMap::new();
        bob.insert(Question::Variable { k: 0 }, Pvm::from_observable(&b0).unwrap());
        bob.insert(Question::Variable { k: 1 }, Pvm::from_observable(&b1).unwrap());
        let st = Strategy::new("chsh", epr_state(1), 1, alice, bob).unwrap();
        let tsirelson = 0.5 + s / 2.0;
        assert!((exact_value(&g, &st).unwrap() - tsirelson).abs() < 1e-12);
    }

    #[test]
    fn missing_and_mismatched_pvms() {
        let g = chsh();
        let mut s = fixed_zero(1);
        s.alice.remove(&Question::Variable { k: 1 });
        assert!(matches!(exact_value(&g, &s), Err(Error::MissingMeasurement { .. })));
        let mut s = fixed_zero(1);
        s.set_bob(Question::Variable { k: 0 }, Pvm::constant(2, 3, 0)).unwrap();
        assert!(exact_value(&g, &s).is_err());
    }

    #[test]
    fn game_validation() {
        let spec = |k| QuestionSpec { question: Question::Variable { k }, arity: 2 };
        let round = |w| Round { x: 0, y: 0, weight: w, table: vec![1.0; 4] };
        assert!(Game::new("g".into(), vec![spec(0)], vec![spec(0)], vec![round(0.9)]).is_err());
        assert!(Game::new("g".into(), vec![spec(0)], vec![spec(0)], vec![round(1.0)]).is_ok());
        let bad = Round { x: 0, y: 0, weight: 1.0, table: vec![1.0; 3] };
        assert!(Game::new("g".into(), vec![spec(0)], vec![spec(0)], vec![bad]).is_err());
        let mut b = GameBuilder::new("g");
        b.add(Question::Bottom, 1, Question::Bottom, 1, 1.0, vec![1.0]).unwrap();
        assert!(b.add(Question::Bottom, 2, Question::Bottom, 1, 1.0, vec![1.0; 2]).is_err());
    }

    #[test]
    fn mixture_is_linear() {
        let g = chsh();
        let ms = magic_square_game();
        let mix = Game::mixture("mix", &[(0.3, &g), (0.7, &ms)]).unwrap();
        let mut s = canonical_ms_strategy();
        // Give the CHSH questions (Variable 0/1 overlap Variable 1 of the
        // square) some Bob measurements on the same register.
        for k in 0..2 {
            s.set_bob(Question::Variable { k }, Pvm::constant(4, 2, 0)).unwrap();
        }
        s.set_alice(Question::Variable { k: 0 }, Pvm::constant(4, 2, 0)).unwrap();
        let lhs = exact_value(&mix, &s).unwrap();
        let rhs = 0.3 * exact_value(&g, &s).unwrap() + 0.7 * exact_value(&ms, &s).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let g = chsh();
        let back = Game::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back.rounds(), g.rounds());
        let s = canonical_ms_strategy();
        let t = Strategy::from_json(&s.to_json().unwrap()).unwrap();
        let ms = magic_square_game();
        assert!((exact_value(&ms, &t).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_tracks_exact() {
        let g = chsh();
        let s = fixed_zero(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let wins = monte_carlo_wins(&g, &s, n, &mut rng).unwrap();
        let f = wins as f64 / n as f64;
        assert!((f - 0.75).abs() < 3.0 * (0.75 * 0.25 / n as f64).sqrt());
    }
}
