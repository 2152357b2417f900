//! XZ-type local Hamiltonians, Pauli decompositions and the unary-clock
//! circuit-to-Hamiltonian construction.

mod circuit;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    hermitian_eig, pauli_coefficient, pauli_expectation, ComplexMatrix, DensityMatrix, PauliString, StateVector, C64,
};

pub use circuit::{
    circuit_to_hamiltonian, history_state, local_density, local_density_dense, Circuit, ClockHamiltonian, ClockTerm, Gate, GateKind,
    HistoryState, TermKind, DEFAULT_S_CAP, MAX_HISTORY_QUBITS,
};

/// Dense eigensolves beyond this many qubits are refused.
pub const MAX_DENSE_QUBITS: usize = 12;
/// pauli_decompose enumerates 4^k strings.
pub const MAX_DECOMPOSE_QUBITS: usize = 10;
const COEFF_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XZTerm {
    pub gamma: f64,
    pub paulis: PauliString,
}

/// H = (1/m) Σ γ_ℓ P_ℓ with every P_ℓ a product of I, X and Z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "XZDoc", into = "XZDoc")]
pub struct XZHamiltonian {
    n: usize,
    terms: Vec<XZTerm>,
}

#[derive(Serialize, Deserialize)]
struct XZDoc {
    n: usize,
    terms: Vec<XZTerm>,
}

impl TryFrom<XZDoc> for XZHamiltonian {
    type Error = Error;
    fn try_from(d: XZDoc) -> Result<Self> {
        XZHamiltonian::new(d.n, d.terms)
    }
}

impl From<XZHamiltonian> for XZDoc {
    fn from(h: XZHamiltonian) -> Self {
        XZDoc { n: h.n, terms: h.terms }
    }
}

impl XZHamiltonian {
    pub fn new(n: usize, terms: Vec<XZTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Hamiltonian("no terms".into()));
        }
        for (l, t) in terms.iter().enumerate() {
            if t.paulis.n() != n {
                return Err(Error::Hamiltonian(format!("term {l} acts on {} qubits, expected {n}", t.paulis.n())));
            }
            if !t.paulis.is_xz_type() || t.paulis.is_negative() {
                return Err(Error::Hamiltonian(format!("term {l} ({}) is not an unsigned I/X/Z product", t.paulis)));
            }
            if !(t.gamma.abs() <= 1.0) {
                return Err(Error::Hamiltonian(format!("term {l} has |gamma| = {} > 1", t.gamma.abs())));
            }
        }
        Ok(Self { n, terms })
    }

    /// Normalizes Σ c_j P_j as (m · c_max) · H with γ_j = c_j / c_max.
    /// Returns H and the scale m · c_max.
    pub fn from_coefficients(n: usize, coeffs: &[(f64, PauliString)]) -> Result<(Self, f64)> {
        let c_max = coeffs.iter().map(|c| c.0.abs()).fold(0.0, f64::max);
        if c_max == 0.0 {
            return Err(Error::Hamiltonian("all coefficients vanish".into()));
        }
        let terms: Vec<XZTerm> = coeffs.iter().map(|&(c, p)| XZTerm { gamma: c / c_max, paulis: p }).collect();
        let scale = terms.len() as f64 * c_max;
        Ok((Self::new(n, terms)?, scale))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[XZTerm] {
        &self.terms
    }

    pub fn locality(&self) -> usize {
        self.terms.iter().map(|t| t.paulis.weight()).max().unwrap_or(0)
    }

    pub fn abs_gamma_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.gamma.abs()).sum()
    }

    /// Dense (1/m) Σ γ P.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::TooLarge(format!("dense Hamiltonian on {} qubits", self.n)));
        }
        let d = 1usize << self.n;
        let mut m = ComplexMatrix::zeros(d, d);
        let w = 1.0 / self.m() as f64;
        for t in &self.terms {
            for c in 0..d {
                let (r, s) = t.paulis.column(c);
                m[(r, c)] += C64::new(w * t.gamma * s, 0.0);
            }
        }
        Ok(m)
    }

    /// Tr(Hρ).
    pub fn energy(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dim() != 1 << self.n {
            return Err(Error::Dimension(format!("state of dim {} for {} qubits", rho.dim(), self.n)));
        }
        let w = 1.0 / self.m() as f64;
        Ok(self.terms.iter().map(|t| w * t.gamma * pauli_expectation(&t.paulis, rho)).sum())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Smallest eigenvalue and the solver's first eigenvector for it.
pub fn ground_energy(h: &XZHamiltonian) -> Result<(f64, StateVector)> {
    let e = hermitian_eig(&h.matrix()?)?;
    let v = StateVector::normalized(e.vector(0))?;
    Ok((e.values[0], v))
}

/// Orthonormal basis of the eigenspace within `window` of λ0.
pub fn ground_space(h: &XZHamiltonian, window: f64) -> Result<(f64, Vec<StateVector>)> {
    let e = hermitian_eig(&h.matrix()?)?;
    let l0 = e.values[0];
    let vs = (0..e.values.len())
        .take_while(|&k| e.values[k] < l0 + window)
        .map(|k| StateVector::normalized(e.vector(k)))
        .collect::<Result<_>>()?;
    Ok((l0, vs))
}

pub fn energy(h: &XZHamiltonian, rho: &DensityMatrix) -> Result<f64> {
    h.energy(rho)
}

/// Expansion over the 4^k strings σ_X^x σ_Z^z (sites with x = z = 1 are
/// σ_Xσ_Z), coefficients Tr(M P*)/2^k; terms below 1e-12 are dropped.
pub fn pauli_decompose(m: &ComplexMatrix) -> Result<Vec<(C64, PauliString)>> {
    let k = m.qubit_count()?;
    if k > MAX_DECOMPOSE_QUBITS {
        return Err(Error::TooLarge(format!("Pauli decomposition on {k} qubits")));
    }
    let mut out = Vec::new();
    for z in 0..1u64 << k {
        for x in 0..1u64 << k {
            let p = PauliString::from_masks(k, x, z, false)?;
            let c = pauli_coefficient(m, &p);
            if c.norm() > COEFF_TOL {
                out.push((c, p));
            }
        }
    }
    out.sort_by_key(|t| t.1);
    Ok(out)
}

/// Σ c P.
pub fn pauli_reconstruct(k: usize, terms: &[(C64, PauliString)]) -> ComplexMatrix {
    let d = 1usize << k;
    let mut m = ComplexMatrix::zeros(d, d);
    for (c, p) in terms {
        for col in 0..d {
            let (r, s) = p.column(col);
            m[(r, col)] += c * s;
        }
    }
    m
}

/// Merges real coefficients by string, dropping cancellations.
pub(crate) fn merge_terms(items: impl IntoIterator<Item = (f64, PauliString)>) -> Vec<(f64, PauliString)> {
    let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
    for (c, p) in items {
        let (c, p) = if p.is_negative() { (-c, p.unsigned()) } else { (c, p) };
        *acc.entry(p).or_insert(0.0) += c;
    }
    acc.into_iter().filter(|(_, c)| c.abs() > COEFF_TOL).map(|(p, c)| (c, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Letter;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn h(n: usize, terms: &[(f64, &str)]) -> XZHamiltonian {
        XZHamiltonian::new(n, terms.iter().map(|(g, s)| XZTerm { gamma: *g, paulis: s.parse().unwrap() }).collect())
            .unwrap()
    }

    #[test]
    fn ground_energies() {
        let (l, v) = ground_energy(&h(1, &[(1.0, "Z")])).unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        assert!((v.fidelity(&StateVector::basis(1, 1)) - 1.0).abs() < 1e-12);
        let (l, _) = ground_energy(&h(2, &[(1.0, "ZI"), (1.0, "IZ")])).unwrap();
        assert!((l + 1.0).abs() < 1e-12);
        let (l, _) = ground_energy(&h(1, &[(1.0, "X"), (1.0, "Z")])).unwrap();
        assert!((l + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn energies() {
        let hz = h(1, &[(1.0, "Z")]);
        assert!(hz.energy(&DensityMatrix::pure(&StateVector::plus(1))).unwrap().abs() < 1e-12);
        let h2 = h(2, &[(0.5, "ZX"), (-0.3, "XI")]);
        assert!(h2.energy(&DensityMatrix::maximally_mixed(2)).unwrap().abs() < 1e-12);
        let (l, v) = ground_energy(&h2).unwrap();
        assert!((h2.energy(&DensityMatrix::pure(&v)).unwrap() - l).abs() < 1e-10);
        assert!(h2.energy(&DensityMatrix::maximally_mixed(1)).is_err());
    }

    #[test]
    fn rejects_bad_terms() {
        let y = XZTerm { gamma: 1.0, paulis: "Y".parse().unwrap() };
        assert!(XZHamiltonian::new(1, vec![y]).is_err());
        let big = XZTerm { gamma: 1.5, paulis: "Z".parse().unwrap() };
        assert!(XZHamiltonian::new(1, vec![big]).is_err());
        let neg = XZTerm { gamma: 0.5, paulis: "-Z".parse().unwrap() };
        assert!(XZHamiltonian::new(1, vec![neg]).is_err());
        assert!(XZHamiltonian::from_json(r#"{"n":1,"terms":[{"gamma":0.5,"paulis":"ZZ"}]}"#).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let h3 = h(3, &[(0.1, "ZXI"), (-0.7300000000000001, "IIX"), (1.0, "XZZ")]);
        let back = XZHamiltonian::from_json(&h3.to_json().unwrap()).unwrap();
        assert_eq!(back, h3);
    }

    #[test]
    fn decompose_hadamard() {
        let had = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale_real(FRAC_1_SQRT_2);
        let terms = pauli_decompose(&had).unwrap();
        assert_eq!(terms.len(), 2);
        for (c, p) in &terms {
            assert!(matches!(p.site(0), Letter::X | Letter::Z));
            assert!((c - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn decompose_cnot() {
        let cx = ComplexMatrix::from_real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let got: BTreeMap<String, C64> = pauli_decompose(&cx).unwrap().into_iter().map(|(c, p)| (p.to_string(), c)).collect();
        let want = [("II", 0.5), ("ZI", 0.5), ("IX", 0.5), ("ZX", -0.5)];
        assert_eq!(got.len(), 4);
        for (s, c) in want {
            assert!((got[s] - C64::new(c, 0.0)).norm() < 1e-12, "{s}");
        }
    }

    #[test]
    fn decompose_identity() {
        let t = pauli_decompose(&ComplexMatrix::identity(8)).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].0 - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(pauli_decompose(&ComplexMatrix::zeros(3, 3)).is_err());
    }

    proptest! {
        #[test]
        fn decompose_reconstructs(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
            let raw = ComplexMatrix::from_vec(8, 8, entries.iter().map(|(a, b)| C64::new(*a, *b)).collect()).unwrap();
            let m = raw.hermitian_part();
            let back = pauli_reconstruct(3, &pauli_decompose(&m).unwrap());
            prop_assert!(back.max_abs_diff(&m) < 1e-9);
        }

        #[test]
        fn real_inputs_have_real_coefficients(entries in prop::collection::vec(-1.0f64..1.0, 16)) {
            let raw = ComplexMatrix::from_real(4, 4, &entries).unwrap();
            let m = (&raw + &raw.transpose()).scale_real(0.5);
            for (c, p) in pauli_decompose(&m).unwrap() {
                // The σ_X^x σ_Z^z basis is real, so real inputs stay real.
                prop_assert!(c.im.abs() < 1e-10, "{} {}", p, c);
            }
        }
    }
}
