//! The energy test, the Hamiltonian game G(H, p), anchoring, threshold
//! repetition, protocol runs with transcripts, the off-the-shelf device and
//! the zero-knowledge audit.
//!
//! Honest register layout: Alice holds A (n qubits); Bob holds B (n qubits,
//! EPR partners of A) followed by B' (n qubits, the held state). Bob's answer
//! to the energy question packs the teleportation keys of pair (B_i, B'_i)
//! as x-key in bit i and z-key in bit n + i.

mod ots;
mod repetition;
mod runner;
mod zk;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{honest_pvm, lwpbt, Correlator, Game, GameBuilder, Question, Strategy, DEFAULT_WEIGHT_CAP};
use crate::hamiltonian::{ground_energy, XZHamiltonian, XZTerm};
use crate::qcore::{epr_state, ComplexMatrix, DensityMatrix, PauliString, Pvm, StateVector};

pub use ots::{implementable, ots_device, DeviceCheck, DeviceSpec, VerificationDevice, MAX_DEVICE_QUBITS};
pub use repetition::{gap_report, repetition_params, threshold_accept_prob, GapReport, RepetitionParams};
pub use runner::{run_protocol, Addressed, Prover, ProtocolRun, Transcript, Verdict};
pub use zk::{
    shipped_policies, statistical_distance, MAX_ZK_QUBITS, view_distribution, zk_simulator, AdversaryPolicy, HistoryOracle, Policy,
    PolicyCase, TranscriptKey, ViewDistribution,
};

/// Energy answers have 4^n outcomes; this keeps Bob's PVM tractable.
pub const MAX_ENERGY_QUBITS: usize = 5;
/// LWPBT needs at least two qubits; smaller Hamiltonians are padded.
pub const MIN_GAME_QUBITS: usize = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HamiltonianGameConfig {
    pub h: XZHamiltonian,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c_lw: f64,
    pub big_c: f64,
    pub weight_cap: usize,
}

impl HamiltonianGameConfig {
    /// Zero-weight terms are dropped first, which renormalizes m.
    pub fn new(h: XZHamiltonian, p: f64, alpha: f64, beta: f64, c_lw: f64, big_c: f64) -> Result<Self> {
        let cfg = Self { h: strip_zero_terms(&h)?, p, alpha, beta, c_lw, big_c, weight_cap: DEFAULT_WEIGHT_CAP };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uses [`default_p`] for the energy-test probability.
    pub fn with_default_p(h: XZHamiltonian, alpha: f64, beta: f64, c_lw: f64, big_c: f64) -> Result<Self> {
        let p = default_p(h.n().max(MIN_GAME_QUBITS), alpha, beta, c_lw)?;
        Self::new(h, p, alpha, beta, c_lw, big_c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0 && self.p < 1.0) {
            return Err(Error::Parameter(format!("p = {} must lie in [0, 1)", self.p)));
        }
        if !(self.beta > self.alpha) {
            return Err(Error::Parameter(format!("beta = {} must exceed alpha = {}", self.beta, self.alpha)));
        }
        if !(self.c_lw > 0.0 && self.big_c > 0.0) {
            return Err(Error::Parameter("c_lw and C must be positive".into()));
        }
        Ok(())
    }

    /// η = 16(β-α)^32 / (27(c_lw+1)^4), the slack that pairs with [`default_p`].
    pub fn eta(&self) -> f64 {
        16.0 * (self.beta - self.alpha).powi(32) / (27.0 * (self.c_lw + 1.0).powi(4))
    }
}

/// p = 32 n^-6 (β-α)^24 / (27 (c_lw+1)^4).
pub fn default_p(n: usize, alpha: f64, beta: f64, c_lw: f64) -> Result<f64> {
    if !(beta > alpha) || !(c_lw > 0.0) || n == 0 {
        return Err(Error::Parameter(format!("default_p needs beta > alpha, c_lw > 0, n > 0 (got {alpha}, {beta}, {c_lw}, {n})")));
    }
    let p = 32.0 * (n as f64).powi(-6) * (beta - alpha).powi(24) / (27.0 * (c_lw + 1.0).powi(4));
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("default_p = {p} falls outside (0, 1)")));
    }
    Ok(p)
}

pub fn strip_zero_terms(h: &XZHamiltonian) -> Result<XZHamiltonian> {
    XZHamiltonian::new(h.n(), h.terms().iter().filter(|t| t.gamma != 0.0).copied().collect())
}

/// The same Hamiltonian on at least [`MIN_GAME_QUBITS`] qubits; extra
/// qubits carry identities.
pub fn pad_hamiltonian(h: &XZHamiltonian) -> Result<XZHamiltonian> {
    let n = h.n().max(MIN_GAME_QUBITS);
    if n == h.n() {
        return Ok(h.clone());
    }
    let positions: Vec<usize> = (0..h.n()).collect();
    let terms = h
        .terms()
        .iter()
        .map(|t| Ok(XZTerm { gamma: t.gamma, paulis: t.paulis.embed(n, &positions)? }))
        .collect::<Result<_>>()?;
    XZHamiltonian::new(n, terms)
}

/// Packs per-pair keys: x-key of pair i in bit i, z-key in bit n + i.
pub fn pack_keys(n: usize, x_keys: u64, z_keys: u64) -> usize {
    (x_keys | z_keys << n) as usize
}

pub fn unpack_keys(n: usize, k: usize) -> (u64, u64) {
    let mask = (1u64 << n) - 1;
    (k as u64 & mask, k as u64 >> n)
}

/// ∏ d_i for a term and Bob's keys: an X site reads its z-key, a Z site its
/// x-key, identity sites contribute +1.
pub fn key_sign(term: &PauliString, k: usize) -> f64 {
    let (xk, zk) = unpack_keys(term.n(), k);
    let flips = (term.x_mask() & zk).count_ones() + (term.z_mask() & xk).count_ones();
    if flips % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_energy_size(n: usize) -> Result<()> {
    if n > MAX_ENERGY_QUBITS {
        return Err(Error::TooLarge(format!("energy test on {n} qubits (4^{n} key outcomes)")));
    }
    Ok(())
}

/// Accept when c·∏d ≠ sign(γ); otherwise accept with probability 1 - |γ|.
pub fn energy_table(term: &XZTerm) -> Result<Vec<f64>> {
    if term.gamma == 0.0 {
        return Err(Error::Hamiltonian(format!("term {} has gamma = 0, its sign is undefined", term.paulis)));
    }
    let n = term.paulis.n();
    check_energy_size(n)?;
    let keys = 1usize << (2 * n);
    let sign = term.gamma.signum();
    let mut t = vec![0.0; 2 * keys];
    for c in 0..2 {
        let cv = if c == 0 { 1.0 } else { -1.0 };
        for k in 0..keys {
            t[c * keys + k] = if cv * key_sign(&term.paulis, k) != sign { 1.0 } else { 1.0 - term.gamma.abs() };
        }
    }
    Ok(t)
}

/// Uniform term ℓ; Alice is asked σ_W(r) = H_ℓ (every (W, r) with that
/// product yields the same string), Bob the energy flag.
pub fn energy_test_game(h: &XZHamiltonian) -> Result<Game> {
    let n = h.n();
    check_energy_size(n)?;
    let mut b = GameBuilder::new(format!("energy-test(n={n},m={})", h.m()));
    let w = 1.0 / h.m() as f64;
    for t in h.terms() {
        b.add(Question::Pauli { string: t.paulis }, 2, Question::Energy, 1 << (2 * n), w, energy_table(t)?)?;
    }
    b.finish()
}

/// (1-p) LWPBT + p energy test on the padded Hamiltonian; p = 0 leaves
/// plain LWPBT.
pub fn hamiltonian_game(cfg: &HamiltonianGameConfig) -> Result<Game> {
    cfg.validate()?;
    let h = pad_hamiltonian(&strip_zero_terms(&cfg.h)?)?;
    if h.locality() > cfg.weight_cap {
        return Err(Error::Hamiltonian(format!("locality {} exceeds the weight cap {}", h.locality(), cfg.weight_cap)));
    }
    let lw = lwpbt(h.n(), cfg.weight_cap)?;
    let name = format!("hamiltonian-game(n={},p={})", h.n(), cfg.p);
    if cfg.p == 0.0 {
        return Game::mixture(name, &[(1.0, &lw)]);
    }
    let et = energy_test_game(&h)?;
    Game::mixture(name, &[(1.0 - cfg.p, &lw), (cfg.p, &et)])
}

/// Bob's n Bell measurements on (B_i, B'_i), one projector per packed key.
pub fn energy_pvm(n: usize) -> Result<Pvm> {
    check_energy_size(n)?;
    let phi = epr_state(n);
    let projectors = (0..1usize << (2 * n))
        .map(|k| {
            let (xk, zk) = unpack_keys(n, k);
            let v = PauliString::from_masks(2 * n, xk, zk, false).expect("masks fit").apply(phi.amplitudes());
            ComplexMatrix::outer(&v, &v)
        })
        .collect();
    Pvm::new(projectors)
}

/// Semi-honest strategy for `game`: EPR^⊗n ⊗ |held⟩, canonical Pauli
/// measurements, Bell measurements on the energy flag and a fixed answer 0
/// on ⊥. `held` lives on the game's register width.
pub fn semi_honest_strategy(game: &Game, n: usize, held: &StateVector, label: &str) -> Result<Strategy> {
    if held.n_qubits() != n {
        return Err(Error::Dimension(format!("held state on {} qubits, game register has {n}", held.n_qubits())));
    }
    let da = 1usize << n;
    let mut alice = BTreeMap::new();
    let mut bob = BTreeMap::new();
    for spec in game.alice_questions() {
        let pvm = match &spec.question {
            Question::Bottom => Pvm::constant(da, spec.arity, 0),
            q => honest_pvm(q, n)?.ok_or_else(|| Error::Game(format!("no honest measurement for {q}")))?,
        };
        alice.insert(spec.question.clone(), pvm);
    }
    for spec in game.bob_questions() {
        let pvm = match &spec.question {
            Question::Bottom => Pvm::constant(da * da, spec.arity, 0),
            Question::Energy => energy_pvm(n)?,
            q => honest_pvm(q, n)?.ok_or_else(|| Error::Game(format!("no honest measurement for {q}")))?.tensor_identity(da),
        };
        bob.insert(spec.question.clone(), pvm);
    }
    Strategy::new(label, epr_state(n).kron(held), n, alice, bob)
}

/// The honest strategy: Bob holds a ground state of the padded Hamiltonian.
pub fn honest_strategy(game: &Game, h: &XZHamiltonian) -> Result<Strategy> {
    let padded = pad_hamiltonian(h)?;
    let (_, g) = ground_energy(&padded)?;
    semi_honest_strategy(game, padded.n(), &g, "honest")
}

/// 1 - p((1/2m) Σ|γ| + Tr(H·held)/2).
pub fn semi_honest_value(h: &XZHamiltonian, p: f64, held: &DensityMatrix) -> Result<f64> {
    let e = h.energy(held)?;
    Ok(1.0 - p * (h.abs_gamma_sum() / (2.0 * h.m() as f64) + 0.5 * e))
}

/// E[c·∏d] for Alice asked `term` and Bob asked the energy flag, by
/// enumerating every (c, keys) outcome of `strategy`.
pub fn energy_correlation(strategy: &Strategy, term: &PauliString) -> Result<f64> {
    let mut corr = Correlator::new(strategy);
    let joint = corr.joint(&Question::Pauli { string: *term }, &Question::Energy)?;
    let keys = joint.len() / 2;
    Ok((0..2)
        .flat_map(|c| (0..keys).map(move |k| (c, k)))
        .map(|(c, k)| {
            let cv = if c == 0 { 1.0 } else { -1.0 };
            joint[c * keys + k] * cv * key_sign(term, k)
        })
        .sum())
}

/// With weight 1/2 play `g`, with weight 1/2 both players get ⊥ and win.
pub fn anchor(g: &Game) -> Result<Game> {
    let mut b = GameBuilder::new("bottom");
    b.add(Question::Bottom, 1, Question::Bottom, 1, 1.0, vec![1.0])?;
    let bottom = b.finish()?;
    Game::mixture(format!("anchored({})", g.name), &[(0.5, g), (0.5, &bottom)])
}

/// Adds the constant ⊥ answers to both players.
pub fn anchor_strategy(s: &Strategy) -> Result<Strategy> {
    let mut out = s.clone();
    out.set_alice(Question::Bottom, Pvm::constant(1 << s.alice_qubits(), 1, 0))?;
    out.set_bob(Question::Bottom, Pvm::constant(1 << s.bob_qubits(), 1, 0))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{canonical_lwpbt_strategy, canonical_ms_strategy, exact_value, magic_square_game};
    use crate::hamiltonian::ground_energy;
    use crate::qcore::{partial_trace, Letter};

    fn h1() -> XZHamiltonian {
        XZHamiltonian::new(
            1,
            vec![
                XZTerm { gamma: 1.0, paulis: "X".parse().unwrap() },
                XZTerm { gamma: 1.0, paulis: "Z".parse().unwrap() },
            ],
        )
        .unwrap()
    }

    fn h2() -> XZHamiltonian {
        XZHamiltonian::new(
            2,
            vec![
                XZTerm { gamma: 0.5, paulis: "ZZ".parse().unwrap() },
                XZTerm { gamma: -0.8, paulis: "XI".parse().unwrap() },
            ],
        )
        .unwrap()
    }

    #[test]
    fn default_p_golden() {
        // 32 · 2^-6 / (27 · 16) = 1/864.
        assert!((default_p(2, 0.0, 1.0, 1.0).unwrap() - 1.0 / 864.0).abs() < 1e-18);
        assert!(default_p(3, 0.0, 1.0, 1.0).unwrap() < default_p(2, 0.0, 1.0, 1.0).unwrap());
        assert!(default_p(2, 0.0, 1e-3, 1.0).unwrap() < 1e-70);
        assert!(default_p(2, 1.0, 0.5, 1.0).is_err());
        // (β-α)^24 blows past 1 for wide promise gaps.
        assert!(default_p(1, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn key_sign_reads_opposite_keys() {
        let n = 2;
        let xz: PauliString = "XZ".parse().unwrap();
        // z-key of pair 0 flips the X site; x-key of pair 1 flips the Z site.
        assert_eq!(key_sign(&xz, pack_keys(n, 0, 0b01)), -1.0);
        assert_eq!(key_sign(&xz, pack_keys(n, 0b10, 0)), -1.0);
        assert_eq!(key_sign(&xz, pack_keys(n, 0b01, 0b10)), 1.0);
        assert_eq!(key_sign(&xz, pack_keys(n, 0b11, 0b11)), 1.0);
    }

    #[test]
    fn zero_gamma_rejected_by_energy_test() {
        let h = XZHamiltonian::new(1, vec![XZTerm { gamma: 0.0, paulis: "Z".parse().unwrap() }, XZTerm { gamma: 1.0, paulis: "X".parse().unwrap() }])
            .unwrap();
        assert!(energy_test_game(&h).is_err());
        let cfg = HamiltonianGameConfig::new(h, 0.5, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(cfg.h.m(), 1);
        assert!(hamiltonian_game(&cfg).is_ok());
    }

    #[test]
    fn single_z_term_held_one() {
        // γ = 1, P = Z, Bob holds |1⟩: loss (1/2)(1 + (-1)) = 0.
        let h = XZHamiltonian::new(1, vec![XZTerm { gamma: 1.0, paulis: "Z".parse().unwrap() }]).unwrap();
        let g = energy_test_game(&h).unwrap();
        let s = semi_honest_strategy(&g, 1, &StateVector::basis(1, 1), "held-one").unwrap();
        assert!((exact_value(&g, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_correlation_matches_trace() {
        let h = h2();
        let g = energy_test_game(&h).unwrap();
        let held = StateVector::normalized(vec![
            crate::qcore::C64::new(0.3, 0.1),
            crate::qcore::C64::new(-0.5, 0.2),
            crate::qcore::C64::new(0.4, -0.6),
            crate::qcore::C64::new(0.1, 0.25),
        ])
        .unwrap();
        let s = semi_honest_strategy(&g, 2, &held, "random").unwrap();
        for t in h.terms() {
            let want = crate::qcore::pauli_expectation(&t.paulis, &held.to_density());
            let got = energy_correlation(&s, &t.paulis).unwrap();
            assert!((got - want).abs() < 1e-12, "{}: {got} vs {want}", t.paulis);
        }
    }

    #[test]
    fn honest_value_identity_small() {
        for h in [h1(), h2()] {
            let cfg = HamiltonianGameConfig::new(h.clone(), 0.3, -1.0, 1.0, 1.0, 1.0).unwrap();
            let g = hamiltonian_game(&cfg).unwrap();
            let s = honest_strategy(&g, &h).unwrap();
            let (l0, gs) = ground_energy(&pad_hamiltonian(&h).unwrap()).unwrap();
            let held = partial_trace(&gs.to_density(), &(0..h.n()).collect::<Vec<_>>()).unwrap();
            let formula = semi_honest_value(&h, cfg.p, &held).unwrap();
            let closed = 1.0 - cfg.p * (h.abs_gamma_sum() / (2.0 * h.m() as f64) + 0.5 * l0);
            assert!((formula - closed).abs() < 1e-12);
            assert!((exact_value(&g, &s).unwrap() - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_keeps_spectrum_floor() {
        let h = h1();
        let p = pad_hamiltonian(&h).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.terms()[0].paulis.site(1), Letter::I);
        let (a, _) = ground_energy(&h).unwrap();
        let (b, _) = ground_energy(&p).unwrap();
        assert!((a + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn anchoring_maps_values() {
        let ms = magic_square_game();
        let s = canonical_ms_strategy();
        let a = anchor(&ms).unwrap();
        assert!((exact_value(&a, &anchor_strategy(&s).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let lw = lwpbt(2, 6).unwrap();
        let c = canonical_lwpbt_strategy(&lw, 2).unwrap();
        let v = exact_value(&anchor(&lw).unwrap(), &anchor_strategy(&c).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_pvm_is_complete() {
        let e = energy_pvm(2).unwrap();
        assert_eq!(e.outcomes(), 16);
    }
}
