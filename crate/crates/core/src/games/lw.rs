//! Low-weight linearity and anti-commutation tests and their half/half
//! mixture.

use std::collections::BTreeMap;

use super::magic_square::{ms_operator, ms_win_table, LINES};
use super::{Game, GameBuilder, Question, Strategy};
use crate::error::{Error, Result};
use crate::qcore::{epr_state, ComplexMatrix, Letter, PauliString, Pvm};

pub const DEFAULT_WEIGHT_CAP: usize = 6;
/// Question sets grow like 2^n · |{a : |a| ≤ cap}|²; beyond this the dense
/// strategies are impractical anyway.
pub const LW_MAX_N: usize = 5;

/// W(a): letter W_i on the support of `a`, where bit i of `w` selects Z.
pub fn w_of(n: usize, w: u64, a: u64) -> PauliString {
    PauliString::from_masks(n, a & !w, a & w, false).expect("masks fit")
}

pub fn low_weight_masks(n: usize, cap: usize) -> Vec<u64> {
    (0..1u64 << n).filter(|a| a.count_ones() as usize <= cap).collect()
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Parameter(format!("n = {n} is below the minimum {min}")));
    }
    if n > LW_MAX_N {
        return Err(Error::TooLarge(format!("low-weight tests on {n} qubits")));
    }
    Ok(())
}

fn rule_table(rule: usize) -> Vec<f64> {
    let mut t = vec![0.0; 8];
    for c in 0..2 {
        for b in 0..4 {
            let (b1, b2) = (b >> 1, b & 1);
            let target = [b1, b2, b1 ^ b2][rule];
            t[c * 4 + b] = (c == target) as u8 as f64;
        }
    }
    t
}

/// W uniform in {X,Z}^n, a and a' independent and uniform over
/// {a : |a| ≤ cap}. Bob gets (W(a), W(a')); Alice gets W(a), W(a') or, when
/// |a+a'| ≤ cap, also W(a+a'), uniformly.
pub fn lw_linearity_test(n: usize, cap: usize) -> Result<Game> {
    check_n(n, 1)?;
    let masks = low_weight_masks(n, cap);
    let base = 1.0 / ((1u64 << n) as f64 * (masks.len() * masks.len()) as f64);
    let mut b = GameBuilder::new(format!("lw-linearity(n={n},cap={cap})"));
    for w in 0..1u64 << n {
        for &a in &masks {
            for &a2 in &masks {
                let (p, q) = (w_of(n, w, a), w_of(n, w, a2));
                let y = Question::PauliPair { first: p, second: q };
                let sum = a ^ a2;
                let options: Vec<(PauliString, usize)> = if sum.count_ones() as usize <= cap {
                    vec![(p, 0), (q, 1), (w_of(n, w, sum), 2)]
                } else {
                    vec![(p, 0), (q, 1)]
                };
                let share = base / options.len() as f64;
                for (x, rule) in options {
                    b.add(Question::Pauli { string: x }, 2, y.clone(), 4, share, rule_table(rule))?;
                }
            }
        }
    }
    b.finish()
}

/// Support pair i < j uniform, line uniform, variable on the line uniform.
/// Alice gets A_k placed on (i, j), or (v_9, a) when k = 9.
pub fn lw_anticommutation_test(n: usize) -> Result<Game> {
    check_n(n, 2)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let weight = 1.0 / (pairs.len() * 18) as f64;
    let mut b = GameBuilder::new(format!("lw-anticommutation(n={n})"));
    for &(i, j) in &pairs {
        for line in LINES {
            let y = Question::SquareLine { line, i, j };
            for k in line.variables() {
                let x = if k == 9 {
                    Question::SquareSpecial { i, j }
                } else {
                    Question::Pauli { string: ms_operator(k).embed(n, &[i, j])? }
                };
                b.add(x, 2, y.clone(), 8, weight, ms_win_table(line, k))?;
            }
        }
    }
    b.finish()
}

pub fn lwpbt(n: usize, cap: usize) -> Result<Game> {
    let lin = lw_linearity_test(n, cap)?;
    let anti = lw_anticommutation_test(n)?;
    Game::mixture(format!("lwpbt(n={n},cap={cap})"), &[(0.5, &lin), (0.5, &anti)])
}

/// The honest measurement for a question on an n-qubit register, or `None`
/// for questions with no Pauli meaning.
pub fn honest_pvm(question: &Question, n: usize) -> Result<Option<Pvm>> {
    let placed = |k: u8, i: usize, j: usize| ms_operator(k).embed(n, &[i, j]);
    Ok(Some(match question {
        Question::Pauli { string } => Pvm::pauli(string),
        Question::PauliPair { first, second } => Pvm::joint(&[first.to_matrix(), second.to_matrix()])?,
        Question::SquareSpecial { i, j } => Pvm::pauli(&placed(9, *i, *j)?),
        Question::SquareLine { line, i, j } => {
            let ops: Vec<ComplexMatrix> = line
                .variables()
                .iter()
                .map(|&k| placed(k, *i, *j).map(|p| p.to_matrix()))
                .collect::<Result<_>>()?;
            Pvm::joint(&ops)?
        }
        _ => return Ok(None),
    }))
}

/// EPR^⊗n with honest Pauli measurements for every question of `game`.
pub fn canonical_lwpbt_strategy(game: &Game, n: usize) -> Result<Strategy> {
    let mut alice = BTreeMap::new();
    let mut bob = BTreeMap::new();
    for spec in game.alice_questions() {
        let pvm = honest_pvm(&spec.question, n)?
            .ok_or_else(|| Error::Game(format!("no honest measurement for {}", spec.question)))?;
        alice.insert(spec.question.clone(), pvm);
    }
    for spec in game.bob_questions() {
        let pvm = honest_pvm(&spec.question, n)?
            .ok_or_else(|| Error::Game(format!("no honest measurement for {}", spec.question)))?;
        bob.insert(spec.question.clone(), pvm);
    }
    Strategy::new(format!("canonical-{}", game.name), epr_state(n), n, alice, bob)
}

/// cos φ I + i sin φ σ_Y on qubit 0 of an n-qubit register.
fn y_rotation(n: usize, phi: f64) -> ComplexMatrix {
    // iσ_Y = σ_Zσ_X = -σ_Xσ_Z.
    let xz = PauliString::single(n, 0, Letter::XZ).to_matrix();
    &ComplexMatrix::identity(1 << n).scale_real(phi.cos()) - &xz.scale_real(phi.sin())
}

/// Alice's Pauli questions whose qubit-0 letter is X are conjugated by
/// e^{iθ|x|σ_Y} on qubit 0, |x| the string weight. The weight dependence
/// breaks the algebraic relations so every residual family moves with θ.
pub fn perturbed_strategy(base: &Strategy, theta: f64) -> Result<Strategy> {
    let n = base.alice_qubits();
    if n == 0 {
        return Err(Error::Parameter("perturbation needs at least one Alice qubit".into()));
    }
    let mut s = base.clone();
    s.label = format!("{}+theta={theta}", base.label);
    let targets: Vec<(Question, Pvm)> = base
        .alice_map()
        .iter()
        .filter_map(|(q, pvm)| match q {
            Question::Pauli { string } if string.site(0) == Letter::X => {
                let u = y_rotation(n, theta * string.weight() as f64);
                Some((q.clone(), pvm.conjugated(&u)))
            }
            _ => None,
        })
        .collect();
    for (q, pvm) in targets {
        s.set_alice(q, pvm)?;
    }
    Ok(s)
}
