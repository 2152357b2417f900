//! The Mermin-Peres Magic Square.
//!
//! Variables v1..v9 sit in a 3×3 grid; every row and the first two columns
//! have even parity, column 3 has odd parity.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Game, GameBuilder, Question, Strategy};
use crate::qcore::{epr_state, Letter, PauliString, Pvm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    Row(u8),
    Col(u8),
}

pub const LINES: [Line; 6] = [Line::Row(1), Line::Row(2), Line::Row(3), Line::Col(1), Line::Col(2), Line::Col(3)];

impl Line {
    /// Variable indices in 1..=9, in answer-bit order.
    pub fn variables(self) -> [u8; 3] {
        match self {
            Line::Row(r) => {
                let s = 3 * (r - 1);
                [s + 1, s + 2, s + 3]
            }
            Line::Col(c) => [c, c + 3, c + 6],
        }
    }

    /// Required sum of the line's variables mod 2.
    pub fn parity(self) -> u8 {
        (self == Line::Col(3)) as u8
    }

    pub fn position(self, k: u8) -> Option<usize> {
        self.variables().iter().position(|&v| v == k)
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Line::Row(r) => write!(f, "r{r}"),
            Line::Col(c) => write!(f, "c{c}"),
        }
    }
}

/// A_k of the operator solution, on two qubits.
pub fn ms_operator(k: u8) -> PauliString {
    use Letter::*;
    let pair = |a, b| PauliString::from_letters(&[a, b]);
    match k {
        1 => pair(I, Z),
        2 => pair(Z, I),
        3 => pair(Z, Z),
        4 => pair(X, I),
        5 => pair(I, X),
        6 => pair(X, X),
        7 => pair(X, Z),
        8 => pair(Z, X),
        // σ_Xσ_Z ⊗ σ_Zσ_X = -(σ_Xσ_Z ⊗ σ_Xσ_Z).
        9 => pair(XZ, XZ).negated(),
        _ => panic!("Magic Square variable {k} out of range"),
    }
}

/// Win table for Alice asked v_k and Bob asked `line`: Bob's three bits must
/// satisfy the line equation and agree with Alice on v_k.
pub fn ms_win_table(line: Line, k: u8) -> Vec<f64> {
    let pos = line.position(k).expect("variable on line");
    let mut t = vec![0.0; 2 * 8];
    for c in 0..2usize {
        for b in 0..8usize {
            let parity_ok = (b.count_ones() % 2) as u8 == line.parity();
            let agree = (b >> (2 - pos) & 1) == c;
            t[c * 8 + b] = (parity_ok && agree) as u8 as f64;
        }
    }
    t
}

pub fn magic_square_game() -> Game {
    let mut b = GameBuilder::new("magic-square");
    for line in LINES {
        for k in line.variables() {
            b.add(Question::Variable { k }, 2, Question::Line { line }, 8, 1.0 / 18.0, ms_win_table(line, k))
                .expect("consistent arities");
        }
    }
    b.finish().expect("valid game")
}

/// Two EPR pairs; Alice measures A_k, Bob jointly measures the line's three
/// operators (all A_k are real symmetric, so Bob uses them untransposed).
pub fn canonical_ms_strategy() -> Strategy {
    let mut alice = BTreeMap::new();
    let mut bob = BTreeMap::new();
    for k in 1..=9 {
        alice.insert(Question::Variable { k }, Pvm::pauli(&ms_operator(k)));
    }
    for line in LINES {
        let ops: Vec<_> = line.variables().iter().map(|&k| ms_operator(k).to_matrix()).collect();
        bob.insert(Question::Line { line }, Pvm::joint(&ops).expect("line operators commute"));
    }
    Strategy::new("canonical-magic-square", epr_state(2), 2, alice, bob).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::exact_value;
    use crate::qcore::ComplexMatrix;

    #[test]
    fn line_products_encode_parities() {
        for line in LINES {
            let prod = line
                .variables()
                .iter()
                .fold(ComplexMatrix::identity(4), |acc, &k| acc.matmul(&ms_operator(k).to_matrix()));
            let sign = if line.parity() == 1 { -1.0 } else { 1.0 };
            assert!(prod.max_abs_diff(&ComplexMatrix::identity(4).scale_real(sign)) < 1e-15, "{line}");
        }
    }

    #[test]
    fn operators_are_real_symmetric() {
        for k in 1..=9 {
            let m = ms_operator(k).to_matrix();
            assert!(m.max_abs_diff(&m.transpose()) == 0.0);
            assert!(m.data().iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn zero_row_answer_satisfies_r1() {
        let t = ms_win_table(Line::Row(1), 2);
        assert_eq!(t[0], 1.0);
        assert_eq!(ms_win_table(Line::Col(3), 3)[0], 0.0);
    }

    #[test]
    fn canonical_value_is_one() {
        let v = exact_value(&magic_square_game(), &canonical_ms_strategy()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_play_golden() {
        // Bob's random triple satisfies the parity half the time and Alice
        // matches the chosen bit half the time.
        assert!((magic_square_game().random_play_value() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn negated_a1_golden() {
        let mut s = canonical_ms_strategy();
        s.set_alice(Question::Variable { k: 1 }, Pvm::pauli(&ms_operator(1).negated())).unwrap();
        let v = exact_value(&magic_square_game(), &s).unwrap();
        // v1 sits on two of the six lines and is asked with prob 1/3 there;
        // those 2/18 rounds are now always lost.
        assert!((v - 8.0 / 9.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn question_counts() {
        let g = magic_square_game();
        assert_eq!(g.alice_questions().len(), 9);
        assert_eq!(g.bob_questions().len(), 6);
        assert_eq!(g.rounds().len(), 18);
    }
}
