use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{ComplexMatrix, C64, ZERO};
use super::qubit_mask;
use crate::error::{Error, Result};

/// Maximum register width addressable by the bitmask representation.
pub const MAX_PAULI_QUBITS: usize = 64;

/// Signed product `±⊗_i σ_X^{x_i} σ_Z^{z_i}`.
///
/// Bit `i` of `x`/`z` describes qubit `i`. A site with both bits set is
/// σ_Xσ_Z = -iσ_Y; it prints as `Y` but is that real matrix, not σ_Y.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    negative: bool,
}

/// Single-site letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Z,
    XZ,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Z => (false, true),
            Letter::XZ => (true, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (false, true) => Letter::Z,
            (true, true) => Letter::XZ,
        }
    }

    fn symbol(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Z => 'Z',
            Letter::XZ => 'Y',
        }
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "register too wide for PauliString");
        Self { n, x: 0, z: 0, negative: false }
    }

    pub fn from_masks(n: usize, x: u64, z: u64, negative: bool) -> Result<Self> {
        if n > MAX_PAULI_QUBITS {
            return Err(Error::Pauli(format!("{n} qubits exceeds {MAX_PAULI_QUBITS}")));
        }
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if (x | z) & !valid != 0 {
            return Err(Error::Pauli("mask has bits beyond the register".into()));
        }
        Ok(Self { n, x, z, negative })
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = Self::identity(letters.len());
        for (i, l) in letters.iter().enumerate() {
            p = p.with_site(i, *l);
        }
        p
    }

    /// Single-site operator on qubit `q`.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        Self::identity(n).with_site(q, letter)
    }

    pub fn with_site(mut self, q: usize, letter: Letter) -> Self {
        assert!(q < self.n, "site out of range");
        let (x, z) = letter.bits();
        self.x = (self.x & !(1 << q)) | ((x as u64) << q);
        self.z = (self.z & !(1 << q)) | ((z as u64) << q);
        self
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn unsigned(mut self) -> Self {
        self.negative = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn site(&self, q: usize) -> Letter {
        Letter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n).map(|q| self.site(q)).collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| (self.x | self.z) >> q & 1 == 1).collect()
    }

    /// True when no site is σ_Xσ_Z.
    pub fn is_xz_type(&self) -> bool {
        self.x & self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        (self.x & self.z).count_ones() % 2 == 0
    }

    /// Product with the normal-form sign rule: moving Z^{z_p} past X^{x_q}
    /// costs (-1)^{z_p·x_q}.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Pauli(format!("size mismatch {} vs {}", self.n, other.n)));
        }
        let swap = (self.z & other.x).count_ones() % 2 == 1;
        Ok(Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            negative: self.negative ^ other.negative ^ swap,
        })
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Places this string on `positions` of a `total`-qubit register.
    pub fn embed(&self, total: usize, positions: &[usize]) -> Result<Self> {
        if positions.len() != self.n {
            return Err(Error::Pauli("embedding needs one position per site".into()));
        }
        let mut out = Self::identity(total);
        out.negative = self.negative;
        for (i, &q) in positions.iter().enumerate() {
            if q >= total {
                return Err(Error::QubitRange { index: q, qubits: total });
            }
            out = out.with_site(q, self.site(i));
        }
        Ok(out)
    }

    /// Contiguous embedding at `offset`.
    pub fn shifted(&self, total: usize, offset: usize) -> Result<Self> {
        let positions: Vec<usize> = (offset..offset + self.n).collect();
        self.embed(total, &positions)
    }

    /// Sites `positions` only, keeping the sign.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        let mut out = Self::identity(positions.len());
        out.negative = self.negative;
        for (i, &q) in positions.iter().enumerate() {
            out = out.with_site(i, self.site(q));
        }
        out
    }

    /// Basis-index masks for this string on an `n`-qubit register.
    fn index_masks(&self) -> (usize, usize) {
        let mut xm = 0;
        let mut zm = 0;
        for q in 0..self.n {
            if self.x >> q & 1 == 1 {
                xm |= qubit_mask(self.n, q);
            }
            if self.z >> q & 1 == 1 {
                zm |= qubit_mask(self.n, q);
            }
        }
        (xm, zm)
    }

    /// Column action: P|c> = sign·(-1)^{z·c} |c ⊕ x>.
    pub fn column(&self, c: usize) -> (usize, f64) {
        let (xm, zm) = self.index_masks();
        let parity = (zm & c).count_ones() % 2 == 1;
        (c ^ xm, if parity ^ self.negative { -1.0 } else { 1.0 })
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = 1usize << self.n;
        let (xm, zm) = self.index_masks();
        let mut m = ComplexMatrix::zeros(d, d);
        for c in 0..d {
            let parity = (zm & c).count_ones() % 2 == 1;
            m[(c ^ xm, c)] = C64::new(if parity ^ self.negative { -1.0 } else { 1.0 }, 0.0);
        }
        m
    }

    /// Applies the string to a full `n`-qubit amplitude vector.
    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        assert_eq!(amps.len(), 1 << self.n, "amplitude count mismatch");
        let (xm, zm) = self.index_masks();
        let mut out = vec![ZERO; amps.len()];
        for (c, a) in amps.iter().enumerate() {
            let parity = (zm & c).count_ones() % 2 == 1;
            out[c ^ xm] = if parity ^ self.negative { -a } else { *a };
        }
        out
    }

    /// Expectation <v|P|v> (real part) for a full register vector.
    pub fn expectation(&self, amps: &[C64]) -> f64 {
        let pv = self.apply(amps);
        amps.iter().zip(&pv).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// `Tr(M P†)/2^k` for every P with the given masks, without building P.
pub(crate) fn pauli_coefficient(m: &ComplexMatrix, p: &PauliString) -> C64 {
    let d = m.rows();
    let mut acc = ZERO;
    for c in 0..d {
        let (r, s) = p.column(c);
        acc += m[(r, c)] * s;
    }
    acc / d as f64
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        for q in 0..self.n {
            write!(f, "{}", self.site(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Z' => Ok(Letter::Z),
                'Y' => Ok(Letter::XZ),
                other => Err(Error::Pauli(format!("unknown letter {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.len() > MAX_PAULI_QUBITS {
            return Err(Error::Pauli(format!("{s:?} is longer than {MAX_PAULI_QUBITS}")));
        }
        let p = Self::from_letters(&letters);
        Ok(if negative { p.negated() } else { p })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Convenience alias used by the spec-level API.
pub fn pauli_to_matrix(p: &PauliString) -> ComplexMatrix {
    p.to_matrix()
}
