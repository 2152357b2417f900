//! The instance-independent verification device: n EPR pairs split A|B and
//! a fixed menu of Alice-side measurements.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{honest_pvm, low_weight_masks, Question, Strategy, DEFAULT_WEIGHT_CAP};
use crate::qcore::{epr_state, inner, ComplexMatrix, PauliString, Pvm, PVM_TOL};

/// The menu lists 3^n-ish strings; past this it stops being a listing.
pub const MAX_DEVICE_QUBITS: usize = 10;
const FIDELITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct VerificationDevice {
    n: usize,
    menu: Vec<Question>,
    index: BTreeSet<Question>,
}

/// Every unsigned I/X/Z string of weight ≤ 6 (weight 0 included), in
/// increasing weight, then the (v_9, a) special for every pair i < j.
pub fn ots_device(n: usize) -> Result<VerificationDevice> {
    if n == 0 {
        return Err(Error::Parameter("device needs at least one pair".into()));
    }
    if n > MAX_DEVICE_QUBITS {
        return Err(Error::TooLarge(format!("device menu on {n} qubits")));
    }
    let mut strings = Vec::new();
    for a in low_weight_masks(n, DEFAULT_WEIGHT_CAP) {
        // Every W restricted to the support of a.
        let mut w = 0u64;
        loop {
            strings.push(PauliString::from_masks(n, a & !w, a & w, false)?);
            w = w.wrapping_sub(a) & a;
            if w == 0 {
                break;
            }
        }
    }
    strings.sort_by_key(|p| (p.weight(), p.to_string()));
    let mut menu: Vec<Question> = strings.into_iter().map(|string| Question::Pauli { string }).collect();
    for i in 0..n {
        for j in i + 1..n {
            menu.push(Question::SquareSpecial { i, j });
        }
    }
    let index = menu.iter().cloned().collect();
    Ok(VerificationDevice { n, menu, index })
}

impl VerificationDevice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn menu(&self) -> &[Question] {
        &self.menu
    }

    pub fn contains(&self, q: &Question) -> bool {
        self.index.contains(q)
    }

    /// The PVM behind menu entry `i`, acting on K_A.
    pub fn menu_pvm(&self, i: usize) -> Result<Pvm> {
        let q = self.menu.get(i).ok_or_else(|| Error::Parameter(format!("menu index {i} out of range")))?;
        honest_pvm(q, self.n)?.ok_or_else(|| Error::Game(format!("menu entry {q} has no measurement")))
    }

    pub fn state(&self) -> crate::qcore::StateVector {
        epr_state(self.n)
    }

    pub fn spec(&self) -> DeviceSpec {
        DeviceSpec {
            pairs: self.n,
            state: format!("EPR^{}: qubit i of K_A paired with qubit i of K_B", self.n),
            split: [self.n, self.n],
            menu: self
                .menu
                .iter()
                .enumerate()
                .map(|(index, q)| MenuItem {
                    index,
                    observable: match q {
                        Question::Pauli { string } => string.to_string(),
                        Question::SquareSpecial { i, j } => format!("-(XZ)_{i}(XZ)_{j}"),
                        other => other.to_string(),
                    },
                    question: q.clone(),
                })
                .collect(),
        }
    }
}

/// Machine-readable description of the device, the set-up message a
/// verifier would publish.
#[derive(Clone, Debug, Serialize)]
pub struct DeviceSpec {
    pub pairs: usize,
    pub state: String,
    pub split: [usize; 2],
    pub menu: Vec<MenuItem>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MenuItem {
    pub index: usize,
    pub observable: String,
    pub question: Question,
}

/// Outcome of the three implementability conditions, checked in order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviceCheck {
    pub dimensions: bool,
    pub menu: bool,
    pub fidelity: f64,
    pub implementable: bool,
    pub reason: Option<String>,
}

/// (i) Alice's register is K_A and Bob's starts with K_B; (ii) every Alice
/// measurement is a menu entry (constant answers need no measurement);
/// (iii) the reduced state on K_A ⊗ K_B is the device state, i.e. the
/// shared state factors as |ψ⟩ ⊗ |φ'⟩ with φ' on Bob's extra register.
pub fn implementable(s: &Strategy, d: &VerificationDevice) -> Result<DeviceCheck> {
    let fail = |dimensions, menu, fidelity, reason: String| DeviceCheck {
        dimensions,
        menu,
        fidelity,
        implementable: false,
        reason: Some(reason),
    };
    let n = d.n;
    if s.alice_qubits() != n || s.bob_qubits() < n {
        let why = format!("strategy splits {}|{}, device needs {n}|{n}+", s.alice_qubits(), s.bob_qubits());
        return Ok(fail(false, false, 0.0, why));
    }
    for (q, pvm) in s.alice_map() {
        if is_constant(pvm) {
            continue;
        }
        if !d.contains(q) {
            return Ok(fail(true, false, 0.0, format!("Alice question {q} is not on the menu")));
        }
        let want = honest_pvm(q, n)?.expect("menu entries are measurable");
        if pvm.max_diff(&want) > PVM_TOL {
            return Ok(fail(true, false, 0.0, format!("Alice measurement for {q} differs from the menu entry")));
        }
    }
    let fidelity = ab_fidelity(s, n)?;
    if fidelity < 1.0 - FIDELITY_TOL {
        return Ok(fail(true, true, fidelity, format!("shared state is not EPR^{n} on K_A ⊗ K_B (fidelity {fidelity})")));
    }
    Ok(DeviceCheck { dimensions: true, menu: true, fidelity, implementable: true, reason: None })
}

fn is_constant(p: &Pvm) -> bool {
    p.projectors().iter().any(|e| e.max_abs_diff(&ComplexMatrix::identity(p.dim())) < PVM_TOL)
}

/// ⟨ψ|ρ_AB|ψ⟩ = ‖(⟨ψ| ⊗ I)|state⟩‖², with the state reshaped as
/// (A,B) × (rest).
fn ab_fidelity(s: &Strategy, n: usize) -> Result<f64> {
    let psi = epr_state(n);
    let rest = 1usize << (s.alice_qubits() + s.bob_qubits() - 2 * n);
    let amps = s.state().amplitudes();
    let mut total = 0.0;
    for r in 0..rest {
        let column: Vec<_> = (0..psi.dim()).map(|i| amps[i * rest + r]).collect();
        total += inner(psi.amplitudes(), &column).norm_sqr();
    }
    Ok(total)
}
