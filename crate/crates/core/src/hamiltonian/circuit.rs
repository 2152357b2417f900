//! Circuits over {H, CX, CCX}, the unary-clock Hamiltonian and history
//! states.
//!
//! Layout of the N = T + p + q qubit register: clock qubits c_1..c_T first,
//! then the p witness wires, then the q ancillas. Time t is the unary word
//! 1^t 0^(T-t) on the clock.

use serde::{Deserialize, Serialize};

use super::{merge_terms, pauli_decompose, XZHamiltonian};
use crate::error::{Error, Result};
use crate::qcore::{
    apply_local, partial_trace, reduced_density, trace_of_product, ComplexMatrix, DensityMatrix, Letter, StateVector,
    C64, ZERO,
};

/// Default simulatability parameter; local_density accepts |S| ≤ 3·s + 2.
pub const DEFAULT_S_CAP: usize = 2;
/// History states are kept as vectors up to this width.
pub const MAX_HISTORY_QUBITS: usize = 16;
const DENSE_HISTORY_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    CX,
    CCX,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H => 1,
            GateKind::CX => 2,
            GateKind::CCX => 3,
        }
    }

    /// Matrix in wire order, controls first.
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).expect("2x2")
            }
            GateKind::CX | GateKind::CCX => {
                let d = 1usize << self.arity();
                let mut m = ComplexMatrix::identity(d);
                // Flip the target when every control is set: swap the last two rows.
                for (r, c) in [(d - 2, d - 2), (d - 1, d - 1)] {
                    m[(r, c)] = ZERO;
                }
                m[(d - 2, d - 1)] = C64::new(1.0, 0.0);
                m[(d - 1, d - 2)] = C64::new(1.0, 0.0);
                m
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitDoc", into = "CircuitDoc")]
pub struct Circuit {
    p: usize,
    q: usize,
    gates: Vec<Gate>,
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    p: usize,
    q: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = Error;
    fn try_from(d: CircuitDoc) -> Result<Self> {
        Circuit::new(d.p, d.q, d.gates)
    }
}

impl From<Circuit> for CircuitDoc {
    fn from(c: Circuit) -> Self {
        CircuitDoc { p: c.p, q: c.q, gates: c.gates }
    }
}

impl Circuit {
    pub fn new(p: usize, q: usize, gates: Vec<Gate>) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::Circuit("circuit has no wires".into()));
        }
        for (t, g) in gates.iter().enumerate() {
            if g.wires.len() != g.kind.arity() {
                return Err(Error::Circuit(format!("gate {t}: {:?} takes {} wires", g.kind, g.kind.arity())));
            }
            for (i, &w) in g.wires.iter().enumerate() {
                if w >= p + q {
                    return Err(Error::Circuit(format!("gate {t}: wire {w} out of range")));
                }
                if g.wires[..i].contains(&w) {
                    return Err(Error::Circuit(format!("gate {t}: wire {w} repeated")));
                }
            }
        }
        Ok(Self { p, q, gates })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of gates T.
    pub fn t(&self) -> usize {
        self.gates.len()
    }

    pub fn wires(&self) -> usize {
        self.p + self.q
    }

    pub fn total_qubits(&self) -> usize {
        self.t() + self.wires()
    }

    /// Global index of clock qubit c_i, i in 1..=T.
    pub fn clock_qubit(&self, i: usize) -> usize {
        i - 1
    }

    pub fn data_qubit(&self, w: usize) -> usize {
        self.t() + w
    }

    /// The first ancilla, or wire 0 when there are none.
    pub fn output_wire(&self) -> usize {
        if self.q > 0 {
            self.p
        } else {
            0
        }
    }

    /// U_t ··· U_1 applied to a data-register vector, for t = 0..=T.
    pub fn trajectory(&self, init: &[C64]) -> Result<Vec<Vec<C64>>> {
        let mut out = vec![init.to_vec()];
        for g in &self.gates {
            let next = apply_local(out.last().expect("nonempty"), self.wires(), &g.kind.matrix(), &g.wires)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TermKind {
    Input { wire: usize },
    Clock { i: usize },
    Propagation { t: usize },
    Output,
}

/// A positive semidefinite clock term on an ascending `support`.
#[derive(Clone, Debug)]
pub struct ClockTerm {
    pub kind: TermKind,
    pub support: Vec<usize>,
    pub matrix: ComplexMatrix,
}

fn proj(bit: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(bit, bit)] = C64::new(1.0, 0.0);
    m
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
}

/// Gate matrix reordered so its wires ascend; returns the sorted wires.
fn sorted_gate(g: &Gate) -> Result<(Vec<usize>, ComplexMatrix)> {
    let mut perm: Vec<usize> = (0..g.wires.len()).collect();
    perm.sort_by_key(|&i| g.wires[i]);
    let wires = perm.iter().map(|&i| g.wires[i]).collect();
    Ok((wires, g.kind.matrix().permute_qubits(&perm)?))
}

/// Input, clock-legality, propagation and output terms, unweighted.
pub fn clock_terms(c: &Circuit) -> Result<Vec<ClockTerm>> {
    let t_max = c.t();
    let mut terms = Vec::new();
    for w in c.p()..c.wires() {
        let (support, matrix) = if t_max == 0 {
            (vec![c.data_qubit(w)], proj(1))
        } else {
            (vec![c.clock_qubit(1), c.data_qubit(w)], proj(0).kron(&proj(1)))
        };
        terms.push(ClockTerm { kind: TermKind::Input { wire: w }, support, matrix });
    }
    for i in 1..t_max {
        terms.push(ClockTerm {
            kind: TermKind::Clock { i },
            support: vec![c.clock_qubit(i), c.clock_qubit(i + 1)],
            matrix: proj(0).kron(&proj(1)),
        });
    }
    for (idx, g) in c.gates().iter().enumerate() {
        let t = idx + 1;
        let (wires, u) = sorted_gate(g)?;
        let mut support = Vec::new();
        let mut left = ComplexMatrix::identity(1);
        if t > 1 {
            support.push(c.clock_qubit(t - 1));
            left = left.kron(&proj(1));
        }
        support.push(c.clock_qubit(t));
        let mut right = ComplexMatrix::identity(1);
        if t < t_max {
            support.push(c.clock_qubit(t + 1));
            right = right.kron(&proj(0));
        }
        support.extend(wires.iter().map(|&w| c.data_qubit(w)));
        let dd = u.rows();
        let stay = left.kron(&ComplexMatrix::identity(2)).kron(&right).kron(&ComplexMatrix::identity(dd));
        let hop = left.kron(&pauli_x()).kron(&right).kron(&u);
        terms.push(ClockTerm { kind: TermKind::Propagation { t }, support, matrix: (&stay - &hop).scale_real(0.5) });
    }
    let out = c.data_qubit(c.output_wire());
    let (support, matrix) = if t_max == 0 {
        (vec![out], proj(0))
    } else {
        (vec![c.clock_qubit(t_max), out], proj(1).kron(&proj(0)))
    };
    terms.push(ClockTerm { kind: TermKind::Output, support, matrix });
    Ok(terms)
}

#[derive(Clone, Debug)]
pub struct ClockHamiltonian {
    pub circuit: Circuit,
    pub terms: Vec<ClockTerm>,
    /// Normalized form; Σ terms = scale · xz.
    pub xz: XZHamiltonian,
    pub scale: f64,
}

impl ClockHamiltonian {
    pub fn non_output_terms(&self) -> impl Iterator<Item = &ClockTerm> {
        self.terms.iter().filter(|t| t.kind != TermKind::Output)
    }

    /// Σ_i Tr(H_i ρ) over the selected terms, using local reductions.
    pub fn term_energy<'a>(&self, terms: impl Iterator<Item = &'a ClockTerm>, h: &HistoryState) -> Result<f64> {
        let mut e = 0.0;
        for term in terms {
            e += trace_of_product(&term.matrix, h.local(&term.support)?.matrix()).re;
        }
        Ok(e)
    }
}

/// Unary-clock Hamiltonian, expanded in Pauli strings and normalized to XZ
/// form. Every gate is real, so the expansion has real coefficients; any
/// σ_Xσ_Z site left after merging is reported as an error.
pub fn circuit_to_hamiltonian(c: &Circuit) -> Result<ClockHamiltonian> {
    let total = c.total_qubits();
    let terms = clock_terms(c)?;
    let mut coeffs = Vec::new();
    for term in &terms {
        for (coef, p) in pauli_decompose(&term.matrix)? {
            if coef.im.abs() > 1e-10 {
                return Err(Error::Hamiltonian(format!("{:?}: complex coefficient on {p}", term.kind)));
            }
            coeffs.push((coef.re, p.embed(total, &term.support)?));
        }
    }
    let merged = merge_terms(coeffs);
    if let Some((_, p)) = merged.iter().find(|(_, p)| p.letters().contains(&Letter::XZ)) {
        return Err(Error::Hamiltonian(format!("construction produced a Y-type site in {p}")));
    }
    let (xz, scale) = XZHamiltonian::from_coefficients(total, &merged)?;
    Ok(ClockHamiltonian { circuit: c.clone(), terms, xz, scale })
}

/// Mixture Σ_k p_k |η_k⟩⟨η_k| of pure history states
/// |η⟩ = (T+1)^{-1/2} Σ_t |unary(t)⟩ ⊗ U_t···U_1 |w, 0^q⟩.
#[derive(Clone, Debug)]
pub struct HistoryState {
    total_qubits: usize,
    components: Vec<(f64, StateVector)>,
}

fn unary(t: usize, t_max: usize) -> usize {
    ((1usize << t) - 1) << (t_max - t)
}

fn pure_history(c: &Circuit, witness: &StateVector) -> Result<StateVector> {
    let nd = c.wires();
    let mut init = vec![ZERO; 1 << nd];
    for (i, a) in witness.amplitudes().iter().enumerate() {
        init[i << c.q()] = *a;
    }
    let traj = c.trajectory(&init)?;
    let t_max = c.t();
    let norm = 1.0 / ((t_max + 1) as f64).sqrt();
    let mut amps = vec![ZERO; 1 << c.total_qubits()];
    for (t, phi) in traj.iter().enumerate() {
        let base = unary(t, t_max) << nd;
        for (i, a) in phi.iter().enumerate() {
            amps[base | i] = a * norm;
        }
    }
    StateVector::new(amps)
}

pub fn history_state(c: &Circuit, witness: &DensityMatrix) -> Result<HistoryState> {
    if witness.dim() != 1 << c.p() {
        return Err(Error::Dimension(format!("witness of dim {} for p = {}", witness.dim(), c.p())));
    }
    if c.total_qubits() > MAX_HISTORY_QUBITS {
        return Err(Error::TooLarge(format!("history state on {} qubits", c.total_qubits())));
    }
    let components = witness
        .spectral_components(1e-12)?
        .into_iter()
        .map(|(p, w)| Ok((p, pure_history(c, &w)?)))
        .collect::<Result<_>>()?;
    Ok(HistoryState { total_qubits: c.total_qubits(), components })
}

impl HistoryState {
    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }

    /// The full density matrix.
    pub fn density(&self) -> Result<DensityMatrix> {
        if self.total_qubits > DENSE_HISTORY_QUBITS {
            return Err(Error::TooLarge(format!("dense history state on {} qubits", self.total_qubits)));
        }
        let d = 1usize << self.total_qubits;
        let mut m = ComplexMatrix::zeros(d, d);
        for (p, v) in &self.components {
            let a = v.amplitudes();
            m = &m + &ComplexMatrix::outer(a, a).scale_real(*p);
        }
        DensityMatrix::new(m)
    }

    /// Reduced state on `qubits` (ascending), from the pure components.
    pub fn local(&self, qubits: &[usize]) -> Result<DensityMatrix> {
        let mut acc: Option<ComplexMatrix> = None;
        for (p, v) in &self.components {
            let r = reduced_density(v, qubits)?.matrix().scale_real(*p);
            acc = Some(match acc {
                None => r,
                Some(a) => &a + &r,
            });
        }
        DensityMatrix::new(acc.ok_or_else(|| Error::InvalidState("empty history state".into()))?)
    }

    /// Weight on clock words outside {unary(t)}.
    pub fn illegal_clock_weight(&self, c: &Circuit) -> f64 {
        let nd = c.wires();
        let legal: Vec<usize> = (0..=c.t()).map(|t| unary(t, c.t())).collect();
        self.components
            .iter()
            .map(|(p, v)| {
                p * v.amplitudes().iter().enumerate().filter(|(i, _)| !legal.contains(&(i >> nd))).map(|(_, a)| a.norm_sqr()).sum::<f64>()
            })
            .sum()
    }
}

/// Exact reduced history state on S, standing in for a code-based simulator.
pub fn local_density(c: &Circuit, witness: &DensityMatrix, s: &[usize], s_cap: usize) -> Result<DensityMatrix> {
    if s.len() > 3 * s_cap + 2 {
        return Err(Error::Parameter(format!("|S| = {} exceeds 3*{s_cap}+2", s.len())));
    }
    history_state(c, witness)?.local(s)
}

/// Reference path: trace out the dense history state.
pub fn local_density_dense(c: &Circuit, witness: &DensityMatrix, s: &[usize]) -> Result<DensityMatrix> {
    partial_trace(&history_state(c, witness)?.density()?, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ground_energy;

    fn gate(kind: GateKind, wires: &[usize]) -> Gate {
        Gate { kind, wires: wires.to_vec() }
    }

    fn basis_witness(p: usize, idx: usize) -> DensityMatrix {
        DensityMatrix::pure(&StateVector::basis(p, idx))
    }

    #[test]
    fn validation() {
        assert!(Circuit::new(1, 0, vec![gate(GateKind::CX, &[0, 1])]).is_err());
        assert!(Circuit::new(2, 0, vec![gate(GateKind::CX, &[0, 0])]).is_err());
        assert!(Circuit::new(2, 0, vec![gate(GateKind::H, &[0, 1])]).is_err());
        assert!(Circuit::new(0, 0, vec![]).is_err());
        let json = r#"{"p":1,"q":1,"gates":[{"kind":"CX","wires":[0,1]}]}"#;
        let c = Circuit::from_json(json).unwrap();
        assert_eq!(c.t(), 1);
        assert_eq!(Circuit::from_json(&c.to_json().unwrap()).unwrap(), c);
        assert!(Circuit::from_json(r#"{"p":1,"q":0,"gates":[{"kind":"T","wires":[0]}]}"#).is_err());
    }

    #[test]
    fn reversed_cx_is_permuted() {
        let (wires, m) = sorted_gate(&gate(GateKind::CX, &[1, 0])).unwrap();
        assert_eq!(wires, vec![0, 1]);
        // Control on the second factor: |01> <-> |11>.
        assert_eq!(m[(3, 1)], C64::new(1.0, 0.0));
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(2, 2)], C64::new(1.0, 0.0));
    }

    #[test]
    fn empty_circuit_golden() {
        // T = 0, one ancilla: input |1><1| plus output |0><0| is the identity.
        let c = Circuit::new(0, 1, vec![]).unwrap();
        let h = circuit_to_hamiltonian(&c).unwrap();
        assert_eq!(h.xz.m(), 1);
        let (l0, _) = ground_energy(&h.xz).unwrap();
        assert!((l0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_gate_history_has_zero_non_output_energy() {
        let c = Circuit::new(1, 0, vec![gate(GateKind::H, &[0])]).unwrap();
        let h = circuit_to_hamiltonian(&c).unwrap();
        let hist = history_state(&c, &basis_witness(1, 0)).unwrap();
        assert!(h.term_energy(h.non_output_terms(), &hist).unwrap().abs() < 1e-12);
        assert!(hist.illegal_clock_weight(&c) < 1e-15);
        assert!((hist.density().unwrap().matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gate_history_is_product() {
        let c = Circuit::new(1, 1, vec![]).unwrap();
        let hist = history_state(&c, &basis_witness(1, 1)).unwrap();
        let rho = hist.density().unwrap();
        assert!((rho.matrix()[(2, 2)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn terms_are_xz_and_local() {
        let c = Circuit::new(2, 1, vec![gate(GateKind::H, &[0]), gate(GateKind::CCX, &[0, 1, 2]), gate(GateKind::H, &[0])]).unwrap();
        let h = circuit_to_hamiltonian(&c).unwrap();
        assert!(h.xz.terms().iter().all(|t| t.paulis.is_xz_type()));
        assert_eq!(h.xz.locality(), 6);
        // Σ terms = scale · H.
        let mut sum = ComplexMatrix::zeros(1 << 6, 1 << 6);
        for term in &h.terms {
            let mut full = ComplexMatrix::zeros(1 << 6, 1 << 6);
            for (coef, p) in pauli_decompose(&term.matrix).unwrap() {
                full = &full + &p.embed(6, &term.support).unwrap().to_matrix().scale(coef);
            }
            sum = &sum + &full;
        }
        assert!(sum.max_abs_diff(&h.xz.matrix().unwrap().scale_real(h.scale)) < 1e-12);
    }

    #[test]
    fn accept_and_reject_instances() {
        let accept = Circuit::new(1, 1, vec![gate(GateKind::CX, &[0, 1])]).unwrap();
        let h = circuit_to_hamiltonian(&accept).unwrap();
        let (l0, _) = ground_energy(&h.xz).unwrap();
        assert!(l0.abs() < 1e-9);
        let hist = history_state(&accept, &basis_witness(1, 1)).unwrap();
        assert!(h.term_energy(h.terms.iter(), &hist).unwrap().abs() < 1e-12);

        let reject = Circuit::new(0, 2, vec![gate(GateKind::CX, &[0, 1])]).unwrap();
        let (l0, _) = ground_energy(&circuit_to_hamiltonian(&reject).unwrap().xz).unwrap();
        assert!(l0 > 1e-3, "{l0}");
    }

    #[test]
    fn local_paths_agree() {
        let c = Circuit::new(1, 1, vec![gate(GateKind::H, &[0]), gate(GateKind::CX, &[0, 1])]).unwrap();
        let w = DensityMatrix::new(ComplexMatrix::from_real(2, 2, &[0.6, 0.2, 0.2, 0.4]).unwrap()).unwrap();
        for s in [vec![0], vec![1, 3], vec![0, 1, 2, 3]] {
            let a = local_density(&c, &w, &s, DEFAULT_S_CAP).unwrap();
            let b = local_density_dense(&c, &w, &s).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
        }
        assert!(local_density(&c, &w, &[0, 1, 2], 0).is_err());
        assert!(local_density(&c, &w, &[7], DEFAULT_S_CAP).is_err());
    }
}
