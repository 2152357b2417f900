use serde::{Deserialize, Serialize};

use super::eig::hermitian_eig;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use super::pauli::PauliString;
use super::qubit_mask;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Pure state on a register of qubits; qubit 0 is the most significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidState(format!("dimension {} is not a power of two", amps.len())));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm}")));
        }
        Ok(Self { amps })
    }

    /// Rescales to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(amps.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { amps }
    }

    /// |0...0>.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// |+>^{⊗n}.
    pub fn plus(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { amps: vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d] }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Self { amps }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { m: ComplexMatrix::outer(&self.amps, &self.amps) }
    }

    /// <ψ|M|ψ>.
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        inner(&self.amps, &m.apply(&self.amps))
    }
}

impl TryFrom<Vec<[f64; 2]>> for StateVector {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

impl From<StateVector> for Vec<[f64; 2]> {
    fn from(s: StateVector) -> Self {
        s.amps.iter().map(|z| [z.re, z.im]).collect()
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies a 2^k x 2^k operator to `qubits` (first listed = most significant
/// factor of `op`) of an `n`-qubit amplitude vector.
pub fn apply_local(amps: &[C64], n: usize, op: &ComplexMatrix, qubits: &[usize]) -> Result<Vec<C64>> {
    let k = qubits.len();
    if op.rows() != 1 << k || op.cols() != 1 << k {
        return Err(Error::Dimension(format!("{k}-qubit operator has shape {}x{}", op.rows(), op.cols())));
    }
    if amps.len() != 1 << n {
        return Err(Error::Dimension(format!("{} amplitudes for {n} qubits", amps.len())));
    }
    check_qubits(qubits, n)?;
    let masks: Vec<usize> = qubits.iter().map(|&q| qubit_mask(n, q)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|local| {
            (0..k).filter(|&j| local & (1 << (k - 1 - j)) != 0).map(|j| masks[j]).sum()
        })
        .collect();
    let mut out = vec![ZERO; amps.len()];
    let mut gathered = vec![ZERO; 1 << k];
    for base in 0..amps.len() {
        if base & all != 0 {
            continue;
        }
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = op.row(r);
            out[base | off] = row.iter().zip(&gathered).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

pub(crate) fn check_qubits(qubits: &[usize], n: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitRange { index: q, qubits: n });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::QubitCollision(q));
        }
    }
    Ok(())
}

/// `⊗_{i<n} (|00>+|11>)/√2`, side A on qubits `0..n`, side B on `n..2n`;
/// qubit `i` pairs with qubit `n+i`.
pub fn epr_state(n: usize) -> StateVector {
    let d = 1usize << (2 * n);
    let amp = C64::new((1.0 / (1usize << n) as f64).sqrt(), 0.0);
    let mut amps = vec![ZERO; d];
    for i in 0..1usize << n {
        amps[(i << n) | i] = amp;
    }
    StateVector { amps }
}

/// Mixed state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || !m.rows().is_power_of_two() {
            return Err(Error::InvalidState(format!("{}x{} density matrix", m.rows(), m.cols())));
        }
        let dev = m.hermitian_deviation();
        if dev > NORM_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let lowest = hermitian_eig(&m)?.values[0];
        if lowest < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix known to be a state, symmetrizing rounding noise.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self { m: m.hermitian_part() }
    }

    pub fn pure(s: &StateVector) -> Self {
        s.to_density()
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { m: ComplexMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kron(&other.m) }
    }

    /// Tr(Mρ).
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        trace_of_product(m, &self.m)
    }

    /// Spectral decomposition into weighted pure states, dropping weights
    /// below `cutoff`.
    pub fn spectral_components(&self, cutoff: f64) -> Result<Vec<(f64, StateVector)>> {
        let e = hermitian_eig(&self.m)?;
        let mut out = Vec::new();
        for (k, &w) in e.values.iter().enumerate().rev() {
            if w > cutoff {
                out.push((w, StateVector::normalized(e.vector(k))?));
            }
        }
        Ok(out)
    }

    /// Conjugation UρU*.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self::from_trusted(u.matmul(&self.m).matmul(&u.adjoint()))
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.m
    }
}

/// Tr(AB) without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.cols(), b.rows());
    assert_eq!(a.rows(), b.cols());
    let mut acc = ZERO;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Index tables splitting a register into kept and traced parts.
fn split_tables(n: usize, keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let table = |qs: &[usize]| -> Vec<usize> {
        let k = qs.len();
        (0..1usize << k)
            .map(|local| {
                (0..k)
                    .filter(|&j| local & (1 << (k - 1 - j)) != 0)
                    .map(|j| qubit_mask(n, qs[j]))
                    .sum()
            })
            .collect()
    };
    (table(keep), table(&rest))
}

fn normalize_keep(keep: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if let Some(&q) = k.iter().find(|&&q| q >= n) {
        return Err(Error::QubitRange { index: q, qubits: n });
    }
    Ok(k)
}

/// Reduced state on `keep` (ascending order) of a density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let keep = normalize_keep(keep, n)?;
    let (kt, et) = split_tables(n, &keep);
    let dk = kt.len();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for (r, &rk) in kt.iter().enumerate() {
        for (c, &ck) in kt.iter().enumerate() {
            out[(r, c)] = et.iter().map(|&e| rho.m[(rk | e, ck | e)]).sum();
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Reduced state on `keep` of a pure state, computed as M M* with M the
/// amplitude matrix reshaped to (kept, traced).
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    let keep = normalize_keep(keep, n)?;
    let (kt, et) = split_tables(n, &keep);
    let rows: Vec<Vec<C64>> = kt.iter().map(|&k| et.iter().map(|&e| state.amps[k | e]).collect()).collect();
    let mut out = ComplexMatrix::zeros(kt.len(), kt.len());
    for (r, row_r) in rows.iter().enumerate() {
        for (c, row_c) in rows.iter().enumerate().skip(r) {
            let v = inner(row_c, row_r);
            out[(r, c)] = v;
            out[(c, r)] = v.conj();
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// ‖A‖²_ρ = Re Tr(A*Aρ).
pub fn rho_norm_sq(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if a.cols() != rho.dim() {
        return Err(Error::Dimension(format!("operator {}x{} vs state {}", a.rows(), a.cols(), rho.dim())));
    }
    // Tr(A ρ A*) = Σ_{i,k} (Aρ)_{ik} conj(A_{ik}).
    let arho = a.matmul(&rho.m);
    Ok(arho.data().iter().zip(a.data()).map(|(x, y)| (x * y.conj()).re).sum::<f64>().max(0.0))
}

pub fn rho_norm(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    rho_norm_sq(a, rho).map(f64::sqrt)
}

/// (1/2)Σ|eig(ρ-σ)|.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let diff = &rho.m - &sigma.m;
    Ok(0.5 * hermitian_eig(&diff)?.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Expectation of a Pauli string in a density matrix.
pub fn pauli_expectation(p: &PauliString, rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut acc = ZERO;
    for c in 0..d {
        let (r, s) = p.column(c);
        // Tr(Pρ) = Σ_c ρ[c, c⊕x]·P[c⊕x, c]
        acc += rho.m[(c, r)] * s;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn epr_amplitudes() {
        let e = epr_state(1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, h];
        for (a, b) in e.amplitudes().iter().zip(expected) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn epr_correlations() {
        let e2 = epr_state(2);
        assert!((e2.expectation(&p("XIXI").to_matrix()).re - 1.0).abs() < 1e-12);
        assert!((e2.expectation(&p("IZIZ").to_matrix()).re - 1.0).abs() < 1e-12);
        let e1 = epr_state(1);
        assert!(e1.expectation(&p("XZ").to_matrix()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_epr_is_mixed() {
        let rho = epr_state(1).to_density();
        let a = partial_trace(&rho, &[0]).unwrap();
        assert!(a.matrix().max_abs_diff(&DensityMatrix::maximally_mixed(1).m) < 1e-15);
        let same = partial_trace(&rho, &[0, 1]).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = StateVector::normalized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let b = StateVector::plus(2);
        let rho = a.kron(&b).to_density();
        let back = partial_trace(&rho, &[0]).unwrap();
        assert!(back.matrix().max_abs_diff(a.to_density().matrix()) < 1e-14);
        let pure = reduced_density(&a.kron(&b), &[0]).unwrap();
        assert!(pure.matrix().max_abs_diff(back.matrix()) < 1e-14);
    }

    #[test]
    fn partial_trace_range_error() {
        let rho = epr_state(1).to_density();
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::QubitRange { .. })));
    }

    #[test]
    fn rho_norm_cases() {
        let zero = StateVector::zero(1).to_density();
        assert!((rho_norm(&p("Z").to_matrix(), &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!((rho_norm(&ComplexMatrix::identity(2), &zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rho_norm(&ComplexMatrix::zeros(2, 2), &zero).unwrap(), 0.0);
    }

    #[test]
    fn trace_distance_cases() {
        let z0 = StateVector::zero(1).to_density();
        let z1 = StateVector::basis(1, 1).to_density();
        let mm = DensityMatrix::maximally_mixed(1);
        assert!(trace_distance(&z0, &z0).unwrap().abs() < 1e-15);
        assert!((trace_distance(&z0, &z1).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&z0, &mm).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(DensityMatrix::new(bad).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2).scale_real(0.5)).is_ok());
    }

    #[test]
    fn apply_local_matches_embedding() {
        let s = StateVector::normalized((0..8).map(|i| C64::new(i as f64, 1.0)).collect()).unwrap();
        let op = p("XZ").to_matrix();
        let local = apply_local(s.amplitudes(), 3, &op, &[2, 0]).unwrap();
        let global = p("ZIX").apply(s.amplitudes());
        for (a, b) in local.iter().zip(&global) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn pauli_expectation_matches_trace() {
        let s = StateVector::normalized((0..4).map(|i| C64::new(1.0 + i as f64, -(i as f64))).collect()).unwrap();
        let rho = s.to_density();
        for q in ["XZ", "ZZ", "IX", "YY"] {
            let direct = rho.expectation(&p(q).to_matrix()).re;
            assert!((pauli_expectation(&p(q), &rho) - direct).abs() < 1e-13);
        }
    }

    fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("nonzero", |v| {
            StateVector::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).ok()
        })
    }

    fn random_unitary(seed: &[(f64, f64)]) -> ComplexMatrix {
        let raw = ComplexMatrix::from_vec(2, 2, seed.iter().map(|(a, b)| C64::new(*a, *b)).collect()).unwrap();
        let e = hermitian_eig(&raw.hermitian_part()).unwrap();
        let phases: Vec<C64> = e.values.iter().map(|v| C64::from_polar(1.0, 3.0 * v)).collect();
        e.vectors.matmul(&ComplexMatrix::diagonal(&phases)).matmul(&e.vectors.adjoint())
    }

    proptest! {
        #[test]
        fn partial_trace_composes(s in arb_state(3)) {
            let rho = s.to_density();
            let once = partial_trace(&rho, &[0]).unwrap();
            let stepwise = partial_trace(&partial_trace(&rho, &[0, 2]).unwrap(), &[0]).unwrap();
            prop_assert!(once.matrix().max_abs_diff(stepwise.matrix()) < 1e-12);
            let pure = reduced_density(&s, &[0]).unwrap();
            prop_assert!(once.matrix().max_abs_diff(pure.matrix()) < 1e-12);
        }

        #[test]
        fn rho_norm_left_unitary_invariant(
            s in arb_state(1),
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        ) {
            let rho = s.to_density();
            let a = ComplexMatrix::from_vec(2, 2, a.iter().map(|(x, y)| C64::new(*x, *y)).collect()).unwrap();
            let u = random_unitary(&u);
            let lhs = rho_norm(&u.matmul(&a), &rho).unwrap();
            let rhs = rho_norm(&a, &rho).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn correlation_identity(s in arb_state(2), pa in 0usize..3, pb in 0usize..3) {
            // 2 - 2 Re<ψ|A⊗B|ψ> = ‖A⊗I - I⊗B‖²_ρ for Hermitian unitaries A, B.
            let names = ["I", "X", "Z"];
            let a = p(names[pa]).to_matrix();
            let b = p(names[pb]).to_matrix();
            let i2 = ComplexMatrix::identity(2);
            let rho = s.to_density();
            let lhs = 2.0 - 2.0 * s.expectation(&a.kron(&b)).re;
            let diff = &a.kron(&i2) - &i2.kron(&b);
            let rhs = rho_norm_sq(&diff, &rho).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
