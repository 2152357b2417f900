//! Zero-knowledge audit: the exact transcript distribution of an adaptive
//! verifier against the honest provers, and a simulator that reproduces it
//! from EPR statistics plus reduced history states on small qubit sets.
//!
//! The simulator never touches the shared state. Its only access to the
//! witness is [`HistoryOracle::local`], the exact reduced history state on
//! a set S, which stands in for a code-based simulator of local density
//! matrices.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::runner::{Addressed, Prover};
use super::{energy_test_game, semi_honest_strategy, strip_zero_terms, unpack_keys};
use crate::error::{Error, Result};
use crate::games::{honest_pvm, lwpbt, ms_operator, w_of, Correlator, Game, Question, Strategy};
use crate::hamiltonian::{circuit_to_hamiltonian, history_state, local_density, Circuit, XZHamiltonian, DEFAULT_S_CAP};
use crate::qcore::{epr_state, trace_of_product, DensityMatrix, PauliString, Pvm};

/// Exact enumeration keeps the honest state on 3n qubits and 4^n keys.
pub const MAX_ZK_QUBITS: usize = 3;

/// Transcript probabilities below this are rounding noise from zero
/// amplitudes and are left out of the support.
const SUPPORT_FLOOR: f64 = 1e-14;

/// Which branch of the simulator's case analysis a transcript falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyCase {
    /// Neither prover gets the energy flag.
    BothPauli,
    /// Bob gets the energy flag first, Alice a measurement second.
    BobFirstEnergy,
    /// Alice measures first, Bob gets the energy flag second.
    AliceFirstEnergy,
}

impl PolicyCase {
    pub fn label(self) -> &'static str {
        match self {
            PolicyCase::BothPauli => "both-pauli",
            PolicyCase::BobFirstEnergy => "bob-first-energy",
            PolicyCase::AliceFirstEnergy => "alice-first-energy",
        }
    }
}

/// A verifier that asks one question to each prover; the second may depend
/// on the first reply. All of its randomness is the index θ into `first`.
pub trait AdversaryPolicy {
    fn name(&self) -> &str;
    fn cases(&self) -> &[PolicyCase];
    /// (probability, question) per value of θ.
    fn first(&self) -> Vec<(f64, Addressed)>;
    /// Distribution of the second question given θ and the first reply.
    fn second(&self, theta: usize, r1: usize) -> Vec<(f64, Addressed)>;
}

#[derive(Clone, Debug)]
enum Plan {
    HonestLwpbt(Vec<(f64, Question, Question)>),
    BobPauliFirst { pairs: Vec<(PauliString, PauliString)>, heavy: PauliString },
    BobEnergyFirstTerm(Vec<PauliString>),
    BobEnergyFirstSpecial { weight_two: PauliString },
    AliceFirstTerm(Vec<PauliString>),
    AliceFirstHeavy { heavy: PauliString, light: PauliString },
}

#[derive(Clone, Debug)]
pub struct Policy {
    name: String,
    cases: Vec<PolicyCase>,
    plan: Plan,
}

fn alice(q: Question) -> Addressed {
    Addressed { to: Prover::Alice, question: q }
}

fn bob(q: Question) -> Addressed {
    Addressed { to: Prover::Bob, question: q }
}

fn pauli(string: PauliString) -> Question {
    Question::Pauli { string }
}

fn uniform<T: Clone>(items: &[T], f: impl Fn(T) -> Addressed) -> Vec<(f64, Addressed)> {
    let w = 1.0 / items.len() as f64;
    items.iter().cloned().map(|t| (w, f(t))).collect()
}

impl AdversaryPolicy for Policy {
    fn name(&self) -> &str {
        &self.name
    }

    fn cases(&self) -> &[PolicyCase] {
        &self.cases
    }

    fn first(&self) -> Vec<(f64, Addressed)> {
        match &self.plan {
            Plan::HonestLwpbt(rounds) => rounds.iter().map(|(w, x, _)| (*w, alice(x.clone()))).collect(),
            Plan::BobPauliFirst { pairs, .. } => {
                uniform(pairs, |(first, second)| bob(Question::PauliPair { first, second }))
            }
            Plan::BobEnergyFirstTerm(_) | Plan::BobEnergyFirstSpecial { .. } => vec![(1.0, bob(Question::Energy))],
            Plan::AliceFirstTerm(terms) => uniform(terms, |t| alice(pauli(t))),
            Plan::AliceFirstHeavy { heavy, .. } => vec![(1.0, alice(pauli(*heavy)))],
        }
    }

    fn second(&self, theta: usize, r1: usize) -> Vec<(f64, Addressed)> {
        match &self.plan {
            Plan::HonestLwpbt(rounds) => vec![(1.0, bob(rounds[theta].2.clone()))],
            Plan::BobPauliFirst { pairs, heavy } => {
                let (p, q) = pairs[theta];
                let product = p.multiply(&q).expect("same register").unsigned();
                let pick = [product, p, q, *heavy][r1 % 4];
                vec![(1.0, alice(pauli(pick)))]
            }
            Plan::BobEnergyFirstTerm(terms) => uniform(terms, |t| alice(pauli(t))),
            Plan::BobEnergyFirstSpecial { weight_two } => {
                if r1.count_ones() % 2 == 0 {
                    vec![(1.0, alice(Question::SquareSpecial { i: 0, j: 1 }))]
                } else {
                    vec![(1.0, alice(pauli(*weight_two)))]
                }
            }
            Plan::AliceFirstTerm(_) => vec![(1.0, bob(Question::Energy))],
            Plan::AliceFirstHeavy { heavy, light } => {
                if r1 == 0 {
                    vec![(1.0, bob(Question::Energy))]
                } else {
                    vec![(1.0, bob(Question::PauliPair { first: *heavy, second: *light }))]
                }
            }
        }
    }
}

/// The six shipped adversaries for an n-qubit Hamiltonian (n ≥ 2).
pub fn shipped_policies(h: &XZHamiltonian, cap: usize) -> Result<Vec<Policy>> {
    let n = h.n();
    if n < 2 {
        return Err(Error::Policy(format!("policies need at least 2 qubits, got {n}")));
    }
    let game = lwpbt(n, cap)?;
    let rounds = game
        .rounds()
        .iter()
        .map(|r| {
            let (x, y) = game.round_question(r);
            (r.weight, x.clone(), y.clone())
        })
        .collect();
    let pairs = game
        .bob_questions()
        .iter()
        .filter_map(|s| match s.question {
            Question::PauliPair { first, second } => Some((first, second)),
            _ => None,
        })
        .collect();
    // Alternate X, Z, X, ... on the first min(n, cap) qubits.
    let width = n.min(cap);
    let support = (1u64 << width) - 1;
    let zsites = support & 0xAAAA_AAAA_AAAA_AAAA;
    let heavy = w_of(n, zsites, support);
    let light = w_of(n, zsites, 1);
    let weight_two = w_of(n, 0b10, 0b11);
    let terms: Vec<PauliString> = strip_zero_terms(h)?.terms().iter().map(|t| t.paulis).collect();
    let mk = |name: &str, cases: Vec<PolicyCase>, plan| Policy { name: name.into(), cases, plan };
    use PolicyCase::*;
    Ok(vec![
        mk("honest-lwpbt", vec![BothPauli], Plan::HonestLwpbt(rounds)),
        mk("bob-pauli-first-adaptive", vec![BothPauli], Plan::BobPauliFirst { pairs, heavy }),
        mk("bob-energy-first-term", vec![BobFirstEnergy], Plan::BobEnergyFirstTerm(terms.clone())),
        mk("bob-energy-first-adaptive-special", vec![BobFirstEnergy], Plan::BobEnergyFirstSpecial { weight_two }),
        mk("alice-first-then-energy", vec![AliceFirstEnergy], Plan::AliceFirstTerm(terms)),
        mk("alice-first-max-weight-then-energy", vec![AliceFirstEnergy, BothPauli], Plan::AliceFirstHeavy { heavy, light }),
    ])
}

/// (q1, r1, q2, r2) of a transcript; the verdict is not part of a view.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TranscriptKey {
    pub q1: Addressed,
    pub r1: usize,
    pub q2: Addressed,
    pub r2: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ViewDistribution {
    pub support: BTreeMap<TranscriptKey, f64>,
}

#[derive(Serialize)]
struct Entry<'a> {
    #[serde(flatten)]
    transcript: &'a TranscriptKey,
    probability: f64,
}

impl ViewDistribution {
    pub fn total(&self) -> f64 {
        self.support.values().sum()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Distribution of the first reply.
    pub fn first_reply_marginal(&self) -> BTreeMap<usize, f64> {
        let mut m = BTreeMap::new();
        for (k, p) in &self.support {
            *m.entry(k.r1).or_insert(0.0) += p;
        }
        m
    }

    /// JSON dump, probabilities rounded to 1e-12.
    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<Entry> = self
            .support
            .iter()
            .map(|(k, p)| Entry { transcript: k, probability: (p * 1e12).round() / 1e12 })
            .collect();
        Ok(serde_json::to_string_pretty(&entries)?)
    }
}

/// (1/2) Σ |p - q| over the union of supports.
pub fn statistical_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut d: f64 = p.iter().map(|(k, a)| (a - q.get(k).copied().unwrap_or(0.0)).abs()).sum();
    d += q.iter().filter(|(k, _)| !p.contains_key(k)).map(|(_, b)| b.abs()).sum::<f64>();
    d / 2.0
}

fn arity(q: &Question, n: usize) -> usize {
    match q {
        Question::Pauli { .. } | Question::Variable { .. } | Question::SquareSpecial { .. } => 2,
        Question::PauliPair { .. } => 4,
        Question::Line { .. } | Question::SquareLine { .. } => 8,
        Question::Energy => 1 << (2 * n),
        Question::Bottom => 1,
    }
}

/// Enumerates θ, r1, q2 and r2, weighting each transcript by the policy's
/// probabilities and `joint(q1, q2)[r1 · arity(q2) + r2]`.
fn assemble(
    policy: &dyn AdversaryPolicy,
    n: usize,
    mut joint: impl FnMut(&Addressed, &Addressed) -> Result<Vec<f64>>,
) -> Result<ViewDistribution> {
    let mut cache: HashMap<(Addressed, Addressed), Vec<f64>> = HashMap::new();
    let mut out = ViewDistribution::default();
    for (theta, (w1, q1)) in policy.first().into_iter().enumerate() {
        let a1 = arity(&q1.question, n);
        for r1 in 0..a1 {
            for (w2, q2) in policy.second(theta, r1) {
                if q2.to == q1.to {
                    return Err(Error::Policy(format!("{} asks {} twice", policy.name(), q1.to)));
                }
                let key = (q1.clone(), q2.clone());
                if !cache.contains_key(&key) {
                    let j = joint(&q1, &q2)?;
                    cache.insert(key.clone(), j);
                }
                let table = &cache[&key];
                let a2 = arity(&q2.question, n);
                if table.len() != a1 * a2 {
                    return Err(Error::Policy(format!("joint table for {}/{} has the wrong size", q1.question, q2.question)));
                }
                for r2 in 0..a2 {
                    let p = w1 * w2 * table[r1 * a2 + r2];
                    if p > SUPPORT_FLOOR {
                        let k = TranscriptKey { q1: q1.clone(), r1, q2: q2.clone(), r2 };
                        *out.support.entry(k).or_insert(0.0) += p;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn transpose(t: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = t[r * cols + c];
        }
    }
    out
}

/// Orders (Alice question, Bob question) and reports whether Alice is first.
fn split<'a>(q1: &'a Addressed, q2: &'a Addressed) -> (&'a Question, &'a Question, bool) {
    if q1.to == Prover::Alice {
        (&q1.question, &q2.question, true)
    } else {
        (&q2.question, &q1.question, false)
    }
}

/// Exact View(V̂, S) from the full shared state of `strategy`.
pub fn view_distribution(policy: &dyn AdversaryPolicy, strategy: &Strategy) -> Result<ViewDistribution> {
    let n = strategy.alice_qubits();
    let mut corr = Correlator::new(strategy);
    assemble(policy, n, |q1, q2| {
        let (xa, yb, alice_first) = split(q1, q2);
        let t = corr.joint(xa, yb)?;
        Ok(if alice_first { t } else { transpose(&t, arity(xa, n), arity(yb, n)) })
    })
}

/// Reduced history states of a circuit on a fixed witness.
pub struct HistoryOracle {
    circuit: Circuit,
    witness: DensityMatrix,
    s_cap: usize,
}

impl HistoryOracle {
    pub fn new(circuit: Circuit, witness: DensityMatrix) -> Result<Self> {
        let n = circuit.total_qubits();
        if !(2..=MAX_ZK_QUBITS).contains(&n) {
            return Err(Error::TooLarge(format!("zero-knowledge audit on {n} qubits, supported 2..={MAX_ZK_QUBITS}")));
        }
        if witness.dim() != 1 << circuit.p() {
            return Err(Error::Dimension(format!("witness of dim {} for p = {}", witness.dim(), circuit.p())));
        }
        Ok(Self { circuit, witness, s_cap: DEFAULT_S_CAP })
    }

    pub fn n(&self) -> usize {
        self.circuit.total_qubits()
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Tr_{S̄} of the history state, |S| ≤ 3s + 2.
    pub fn local(&self, s: &[usize]) -> Result<DensityMatrix> {
        local_density(&self.circuit, &self.witness, s, self.s_cap)
    }

    pub fn hamiltonian(&self) -> Result<XZHamiltonian> {
        strip_zero_terms(&circuit_to_hamiltonian(&self.circuit)?.xz)
    }

    /// The honest provers: EPR pairs, and Bob holding the full history state.
    /// Only the view uses this.
    pub fn honest_strategy(&self, cap: usize) -> Result<Strategy> {
        let h = self.hamiltonian()?;
        let n = h.n();
        let universe = Game::mixture("zk-universe", &[(0.5, &lwpbt(n, cap)?), (0.5, &energy_test_game(&h)?)])?;
        let hist = history_state(&self.circuit, &self.witness)?;
        let [(_, held)] = hist.components() else {
            return Err(Error::InvalidState("the honest strategy needs a pure witness".into()));
        };
        semi_honest_strategy(&universe, n, held, "honest-history")
    }
}

/// Alice's measurement restricted to the qubits it touches; `None` for a
/// constant answer.
fn local_measurement(q: &Question, n: usize) -> Result<Option<(Vec<usize>, Pvm)>> {
    Ok(match q {
        Question::Bottom => None,
        Question::Pauli { string } if string.weight() == 0 => Some((vec![], Pvm::constant(1, 2, 0))),
        Question::Pauli { string } => {
            let s = string.support();
            Some((s.clone(), Pvm::pauli(&string.restrict(&s))))
        }
        Question::SquareSpecial { i, j } => Some((vec![*i, *j], Pvm::pauli(&ms_operator(9)))),
        other => {
            let pvm = honest_pvm(other, n)?.ok_or_else(|| Error::Policy(format!("Alice cannot be asked {other}")))?;
            Some(((0..n).collect(), pvm))
        }
    })
}

/// X^{α_S} Z^{β_S} on the |S| qubits, from packed keys on n pairs.
fn key_pauli(s: &[usize], n: usize, k: usize) -> PauliString {
    let (xk, zk) = unpack_keys(n, k);
    let (mut x, mut z) = (0u64, 0u64);
    for (pos, &q) in s.iter().enumerate() {
        x |= (xk >> q & 1) << pos;
        z |= (zk >> q & 1) << pos;
    }
    PauliString::from_masks(s.len(), x, z, false).expect("fits")
}

fn restricted_key(s: &[usize], n: usize, k: usize) -> usize {
    let (xk, zk) = unpack_keys(n, k);
    s.iter().enumerate().fold(0, |acc, (pos, &q)| acc | ((xk >> q & 1) as usize) << pos | ((zk >> q & 1) as usize) << (s.len() + pos))
}

/// The simulator. Both-Pauli: answers from the canonical strategy on EPR
/// pairs alone. Energy to Bob first: uniform keys, then Alice's answer on
/// Z^β X^α ρ_S X^α Z^β. Alice first: her EPR marginal, then keys on S from
/// the Bell statistics of Tr_{S̄}Φ_{q1,r1} ⊗ ρ_S, uniform keys off S.
pub fn zk_simulator(policy: &dyn AdversaryPolicy, oracle: &HistoryOracle) -> Result<ViewDistribution> {
    let n = oracle.n();
    let mut local_cache: HashMap<Vec<usize>, DensityMatrix> = HashMap::new();
    let mut local = |s: &[usize]| -> Result<DensityMatrix> {
        if !local_cache.contains_key(s) {
            local_cache.insert(s.to_vec(), oracle.local(s)?);
        }
        Ok(local_cache[s].clone())
    };
    assemble(policy, n, |q1, q2| {
        let (xa, yb, alice_first) = split(q1, q2);
        let (aa, ab) = (arity(xa, n), arity(yb, n));
        if *xa == Question::Energy {
            return Err(Error::Policy("the energy flag goes to Bob".into()));
        }
        if *yb != Question::Energy {
            let t = epr_joint(xa, yb, n)?;
            return Ok(if alice_first { t } else { transpose(&t, aa, ab) });
        }
        let keys = ab;
        let Some((s, pvm)) = local_measurement(xa, n)? else {
            // Constant answer; keys are uniform either way.
            return Ok(vec![1.0 / keys as f64; keys]);
        };
        let rho = if s.is_empty() { None } else { Some(local(&s)?) };
        let d = 1usize << s.len();
        if !alice_first {
            // Rows are keys, columns Alice's answers.
            let mut t = vec![0.0; keys * aa];
            let mut memo: HashMap<usize, Vec<f64>> = HashMap::new();
            for k in 0..keys {
                let probs = memo.entry(restricted_key(&s, n, k)).or_insert_with(|| match &rho {
                    None => pvm.projectors().iter().map(|e| e[(0, 0)].re).collect(),
                    Some(r) => {
                        let u = key_pauli(&s, n, k).to_matrix();
                        let corrected = u.matmul(r.matrix()).matmul(&u.adjoint());
                        pvm.projectors().iter().map(|e| trace_of_product(e, &corrected).re.max(0.0)).collect()
                    }
                });
                for a in 0..aa {
                    t[k * aa + a] = probs[a] / keys as f64;
                }
            }
            Ok(t)
        } else {
            let mut t = vec![0.0; aa * keys];
            let off = 1usize << (2 * (n - s.len()));
            for (a, e) in pvm.projectors().iter().enumerate() {
                let rank = e.trace().re;
                if rank < 0.5 {
                    continue;
                }
                let pa = rank / d as f64;
                let Some(r) = &rho else {
                    t[a * keys..(a + 1) * keys].iter_mut().for_each(|x| *x = pa / keys as f64);
                    continue;
                };
                let sigma = e.transpose().scale_real(1.0 / rank);
                let rho_t = r.matrix().transpose();
                let mut memo: HashMap<usize, f64> = HashMap::new();
                for k in 0..keys {
                    let pk = *memo.entry(restricted_key(&s, n, k)).or_insert_with(|| {
                        let p = key_pauli(&s, n, k).to_matrix();
                        let moved = p.adjoint().matmul(&sigma).matmul(&p);
                        (trace_of_product(&moved, &rho_t).re / d as f64).max(0.0)
                    });
                    t[a * keys + k] = pa * pk / off as f64;
                }
            }
            Ok(t)
        }
    })
}

/// Canonical answers on EPR^⊗n alone.
fn epr_joint(xa: &Question, yb: &Question, n: usize) -> Result<Vec<f64>> {
    let measure = |q: &Question| -> Result<Pvm> {
        match q {
            Question::Bottom => Ok(Pvm::constant(1 << n, 1, 0)),
            q => honest_pvm(q, n)?.ok_or_else(|| Error::Policy(format!("no canonical measurement for {q}"))),
        }
    };
    let s = Strategy::new(
        "epr",
        epr_state(n),
        n,
        BTreeMap::from([(xa.clone(), measure(xa)?)]),
        BTreeMap::from([(yb.clone(), measure(yb)?)]),
    )?;
    Correlator::new(&s).joint(xa, yb)
}

/// Exact E[c·∏d] consistency helper for tests: Alice's answer sign times the
/// key sign, averaged over a view restricted to energy rounds.
#[cfg(test)]
fn energy_average(v: &ViewDistribution, term: &PauliString) -> f64 {
    v.support
        .iter()
        .filter(|(k, _)| k.q1.question == Question::Energy && k.q2.question == Question::Pauli { string: *term })
        .map(|(k, p)| p * if k.r2 == 0 { 1.0 } else { -1.0 } * super::key_sign(term, k.r1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Gate, GateKind};
    use crate::qcore::StateVector;

    fn one_gate() -> HistoryOracle {
        let c = Circuit::new(1, 0, vec![Gate { kind: GateKind::H, wires: vec![0] }]).unwrap();
        HistoryOracle::new(c, DensityMatrix::pure(&StateVector::zero(1))).unwrap()
    }

    #[test]
    fn distance_goldens() {
        let p: BTreeMap<u8, f64> = BTreeMap::from([(0, 0.5), (1, 0.5)]);
        let q: BTreeMap<u8, f64> = BTreeMap::from([(0, 1.0)]);
        assert!((statistical_distance(&p, &q) - 0.5).abs() < 1e-15);
        assert_eq!(statistical_distance(&p, &p), 0.0);
        let r: BTreeMap<u8, f64> = BTreeMap::from([(2, 1.0)]);
        assert!((statistical_distance(&q, &r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_gate_audit() {
        let o = one_gate();
        let s = o.honest_strategy(6).unwrap();
        let h = o.hamiltonian().unwrap();
        for pol in shipped_policies(&h, 6).unwrap() {
            let view = view_distribution(&pol, &s).unwrap();
            let sim = zk_simulator(&pol, &o).unwrap();
            assert!((view.total() - 1.0).abs() < 1e-9, "{}", pol.name());
            assert!((sim.total() - 1.0).abs() < 1e-9, "{}", pol.name());
            let d = statistical_distance(&view.support, &sim.support);
            assert!(d < 1e-9, "{}: {d}", pol.name());
        }
    }

    #[test]
    fn wrong_witness_is_detected() {
        // Term-sampling energy rounds see the witness through ρ_S; Pauli-only
        // rounds do not. The other energy policies measure observables that
        // happen to agree on both witnesses.
        let honest = one_gate();
        let s = honest.honest_strategy(6).unwrap();
        let c = honest.circuit().clone();
        let liar = HistoryOracle::new(c, DensityMatrix::pure(&StateVector::basis(1, 1))).unwrap();
        let h = honest.hamiltonian().unwrap();
        for pol in shipped_policies(&h, 6).unwrap() {
            let d = statistical_distance(&view_distribution(&pol, &s).unwrap().support, &zk_simulator(&pol, &liar).unwrap().support);
            match pol.name() {
                "honest-lwpbt" | "bob-pauli-first-adaptive" => assert!(d < 1e-9, "{}", pol.name()),
                "bob-energy-first-term" | "alice-first-then-energy" => assert!(d > 1e-3, "{}: {d}", pol.name()),
                _ => {}
            }
        }
    }

    #[test]
    fn size_guard() {
        let c = Circuit::new(2, 1, vec![Gate { kind: GateKind::H, wires: vec![0] }]).unwrap();
        let w = DensityMatrix::pure(&StateVector::zero(2));
        assert!(matches!(HistoryOracle::new(c, w), Err(Error::TooLarge(_))));
    }

    #[test]
    fn simulated_keys_uniform() {
        let o = one_gate();
        let h = o.hamiltonian().unwrap();
        let pol = shipped_policies(&h, 6).unwrap().into_iter().find(|p| p.name() == "bob-energy-first-term").unwrap();
        let sim = zk_simulator(&pol, &o).unwrap();
        let marg = sim.first_reply_marginal();
        let keys = 1usize << (2 * o.n());
        assert_eq!(marg.len(), keys);
        assert!(marg.values().all(|p| (p - 1.0 / keys as f64).abs() < 1e-12));
    }

    #[test]
    fn energy_identity_inside_view() {
        // Bob-first energy rounds reproduce E[c·∏d] = Tr(H_ℓ ρ) per term.
        let o = one_gate();
        let h = o.hamiltonian().unwrap();
        let pol = shipped_policies(&h, 6).unwrap().into_iter().find(|p| p.name() == "bob-energy-first-term").unwrap();
        let sim = zk_simulator(&pol, &o).unwrap();
        let rho = history_state(o.circuit(), &DensityMatrix::pure(&StateVector::zero(1))).unwrap().density().unwrap();
        let m = h.m() as f64;
        for t in h.terms() {
            let want = crate::qcore::pauli_expectation(&t.paulis, &rho) / m;
            assert!((energy_average(&sim, &t.paulis) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn double_question_rejected() {
        struct Twice;
        impl AdversaryPolicy for Twice {
            fn name(&self) -> &str {
                "twice"
            }
            fn cases(&self) -> &[PolicyCase] {
                &[]
            }
            fn first(&self) -> Vec<(f64, Addressed)> {
                vec![(1.0, bob(Question::Energy))]
            }
            fn second(&self, _: usize, _: usize) -> Vec<(f64, Addressed)> {
                vec![(1.0, bob(Question::Energy))]
            }
        }
        assert!(matches!(zk_simulator(&Twice, &one_gate()), Err(Error::Policy(_))));
    }
}
