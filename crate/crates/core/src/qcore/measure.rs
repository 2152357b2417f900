use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use super::pauli::{Letter, PauliString};
use super::state::{apply_local, check_qubits, norm_sqr, StateVector};
use crate::error::{Error, Result};

/// Tolerance for PVM validity checks.
pub const PVM_TOL: f64 = 1e-9;

/// Projective measurement; outcome `k` corresponds to `projectors[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct Pvm {
    projectors: Vec<ComplexMatrix>,
}

impl Pvm {
    /// Checks Hermiticity, idempotence and completeness. Hermitian idempotents
    /// summing to the identity are automatically mutually orthogonal.
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let d = projectors
            .first()
            .map(ComplexMatrix::rows)
            .ok_or_else(|| Error::InvalidPvm("no outcomes".into()))?;
        let mut sum = ComplexMatrix::zeros(d, d);
        for (k, p) in projectors.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return Err(Error::InvalidPvm(format!("outcome {k} has shape {}x{}", p.rows(), p.cols())));
            }
            if !p.is_hermitian(PVM_TOL) {
                return Err(Error::InvalidPvm(format!("outcome {k} is not Hermitian")));
            }
            if p.matmul(p).max_abs_diff(p) > PVM_TOL {
                return Err(Error::InvalidPvm(format!("outcome {k} is not idempotent")));
            }
            sum = &sum + p;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(d)) > PVM_TOL {
            return Err(Error::InvalidPvm("projectors do not sum to the identity".into()));
        }
        Ok(Self { projectors })
    }

    /// Two-outcome measurement of a Hermitian involution O: outcome 0 is the
    /// +1 eigenspace.
    pub fn from_observable(o: &ComplexMatrix) -> Result<Self> {
        let d = o.rows();
        if !o.is_hermitian(PVM_TOL) || o.matmul(o).max_abs_diff(&ComplexMatrix::identity(d)) > PVM_TOL {
            return Err(Error::InvalidPvm("observable is not a Hermitian involution".into()));
        }
        Ok(Self::observable_unchecked(o))
    }

    pub(crate) fn observable_unchecked(o: &ComplexMatrix) -> Self {
        let id = ComplexMatrix::identity(o.rows());
        Self {
            projectors: vec![(&id + o).scale_real(0.5), (&id - o).scale_real(0.5)],
        }
    }

    pub fn pauli(p: &PauliString) -> Self {
        assert!(p.is_hermitian(), "Pauli measurement needs a Hermitian string");
        Self::observable_unchecked(&p.to_matrix())
    }

    /// Joint measurement of commuting involutions; outcome bits are listed
    /// first-observable-most-significant.
    pub fn joint(observables: &[ComplexMatrix]) -> Result<Self> {
        let d = observables.first().map(ComplexMatrix::rows).unwrap_or(1);
        let singles: Vec<Pvm> = observables.iter().map(Pvm::from_observable).collect::<Result<_>>()?;
        for (i, a) in observables.iter().enumerate() {
            for b in &observables[i + 1..] {
                if a.matmul(b).max_abs_diff(&b.matmul(a)) > PVM_TOL {
                    return Err(Error::InvalidPvm("joint measurement of non-commuting observables".into()));
                }
            }
        }
        let k = observables.len();
        let projectors = (0..1usize << k)
            .map(|outcome| {
                (0..k).fold(ComplexMatrix::identity(d), |acc, j| {
                    let bit = outcome >> (k - 1 - j) & 1;
                    acc.matmul(&singles[j].projectors[bit])
                })
            })
            .collect();
        Ok(Self { projectors })
    }

    /// `{I, 0, ..., 0}` with `arity` outcomes: always answers 0.
    pub fn constant(dim: usize, arity: usize, answer: usize) -> Self {
        let projectors = (0..arity)
            .map(|k| if k == answer { ComplexMatrix::identity(dim) } else { ComplexMatrix::zeros(dim, dim) })
            .collect();
        Self { projectors }
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }

    /// E_0 - E_1 for a two-outcome measurement.
    pub fn observable(&self) -> Result<ComplexMatrix> {
        if self.outcomes() != 2 {
            return Err(Error::InvalidPvm(format!("{} outcomes is not a binary observable", self.outcomes())));
        }
        Ok(&self.projectors[0] - &self.projectors[1])
    }

    /// Observable `Σ_k (-1)^{bit j of k} E_k` for outcome bit `j` of a
    /// `bits`-bit answer, most significant first.
    pub fn marginal_observable(&self, bits: usize, j: usize) -> ComplexMatrix {
        let d = self.dim();
        let mut o = ComplexMatrix::zeros(d, d);
        for (k, p) in self.projectors.iter().enumerate() {
            let sign = if k >> (bits - 1 - j) & 1 == 1 { -1.0 } else { 1.0 };
            o = &o + &p.scale_real(sign);
        }
        o
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let ud = u.adjoint();
        Self { projectors: self.projectors.iter().map(|p| u.matmul(p).matmul(&ud)).collect() }
    }

    /// P ⊗ I_d for every projector.
    pub fn tensor_identity(&self, d: usize) -> Self {
        let id = ComplexMatrix::identity(d);
        Self { projectors: self.projectors.iter().map(|p| p.kron(&id)).collect() }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        if self.outcomes() != other.outcomes() {
            return f64::INFINITY;
        }
        self.projectors.iter().zip(&other.projectors).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<ComplexMatrix>> for Pvm {
    type Error = Error;
    fn try_from(v: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Pvm> for Vec<ComplexMatrix> {
    fn from(p: Pvm) -> Self {
        p.projectors
    }
}

/// Samples `k` from a probability vector by inversion. Tiny negative values
/// from rounding are treated as zero.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Born-rule measurement of the whole register.
pub fn born_measure<R: Rng + ?Sized>(state: &StateVector, pvm: &Pvm, rng: &mut R) -> Result<(usize, StateVector)> {
    if pvm.dim() != state.dim() {
        return Err(Error::Dimension(format!("measurement on {} vs state {}", pvm.dim(), state.dim())));
    }
    let branches: Vec<Vec<C64>> = pvm.projectors.iter().map(|p| p.apply(state.amplitudes())).collect();
    let probs: Vec<f64> = branches.iter().map(|b| norm_sqr(b)).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PVM_TOL {
        return Err(Error::InvalidPvm(format!("outcome probabilities sum to {total}")));
    }
    let k = sample_index(&probs, rng);
    let post = StateVector::normalized(branches[k].clone())?;
    Ok((k, post))
}

/// Teleportation keys: `x` is the σ_X exponent α, `z` the σ_Z exponent β of
/// the Bell state (σ_X^α σ_Z^β ⊗ I)|Φ>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellKeys {
    pub x: bool,
    pub z: bool,
}

impl BellKeys {
    pub fn all() -> [BellKeys; 4] {
        [
            BellKeys { x: false, z: false },
            BellKeys { x: false, z: true },
            BellKeys { x: true, z: false },
            BellKeys { x: true, z: true },
        ]
    }

    pub fn index(self) -> usize {
        (self.x as usize) << 1 | self.z as usize
    }

    pub fn from_index(k: usize) -> Self {
        BellKeys { x: k >> 1 & 1 == 1, z: k & 1 == 1 }
    }
}

/// |Φ_{αβ}><Φ_{αβ}| on two qubits. The projector is symmetric under swapping
/// the two qubits, so the pair order does not affect the labels.
pub fn bell_projector(keys: BellKeys) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
    let mut local = PauliString::identity(2);
    if keys.x {
        local = local.multiply(&PauliString::single(2, 0, Letter::X)).unwrap();
    }
    if keys.z {
        local = local.multiply(&PauliString::single(2, 0, Letter::Z)).unwrap();
    }
    let v = local.apply(&phi);
    ComplexMatrix::outer(&v, &v)
}

/// Bell measurement of `pair = (measuring qubit, held qubit)`. After it, a
/// qubit maximally entangled with the measuring qubit holds
/// σ_Z^β σ_X^α ρ σ_X^α σ_Z^β, undone by [`correct_keys`].
pub fn bell_measure<R: Rng + ?Sized>(
    state: &StateVector,
    pair: (usize, usize),
    rng: &mut R,
) -> Result<(BellKeys, StateVector)> {
    let n = state.n_qubits();
    check_qubits(&[pair.0, pair.1], n)?;
    let branches: Vec<Vec<C64>> = BellKeys::all()
        .iter()
        .map(|&k| apply_local(state.amplitudes(), n, &bell_projector(k), &[pair.0, pair.1]))
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = branches.iter().map(|b| norm_sqr(b)).collect();
    let k = sample_index(&probs, rng);
    Ok((BellKeys::from_index(k), StateVector::normalized(branches[k].clone())?))
}

/// Applies σ_X^α σ_Z^β to `qubit`.
pub fn correct_keys(state: &StateVector, qubit: usize, keys: BellKeys) -> Result<StateVector> {
    let n = state.n_qubits();
    check_qubits(&[qubit], n)?;
    let mut p = PauliString::identity(n);
    if keys.x {
        p = p.with_site(qubit, Letter::X);
    }
    if keys.z {
        p = p.multiply(&PauliString::single(n, qubit, Letter::Z))?;
    }
    StateVector::new(p.apply(state.amplitudes()))
}
