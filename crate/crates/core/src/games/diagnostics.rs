//! Residual families that quantify how far a strategy sits from the
//! canonical Pauli strategy.

use std::collections::BTreeSet;

use serde::Serialize;

use super::lw::{low_weight_masks, w_of};
use super::{Correlator, Question, Strategy};
use crate::error::{Error, Result};
use crate::qcore::{reduced_density, rho_norm_sq, ComplexMatrix, Letter, PauliString};

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyEntry {
    pub alice: PauliString,
    pub bob: (PauliString, PauliString),
    /// 0: first bit, 1: second bit, 2: parity of both.
    pub slot: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearityEntry {
    pub first: PauliString,
    pub second: PauliString,
    /// ‖τ(P)τ(Q) - τ(PQ)‖²
    pub product: f64,
    /// ‖τ(Q)τ(P) - τ(PQ)‖²
    pub swapped: f64,
    /// ‖τ(P)τ(Q) - τ(Q)τ(P)‖²
    pub commutator: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnticommutationEntry {
    pub i: usize,
    pub j: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityDiagnostics {
    pub consistency: Vec<ConsistencyEntry>,
    pub linearity: Vec<LinearityEntry>,
    pub anticommutation: Vec<AnticommutationEntry>,
}

/// Worst case of each family; consistency reported as 1 - min value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticSummary {
    pub consistency_gap: f64,
    pub linearity: f64,
    pub linearity_swapped: f64,
    pub commutation: f64,
    pub anticommutation: f64,
}

impl DiagnosticSummary {
    pub fn families(&self) -> [(&'static str, f64); 5] {
        [
            ("consistency_gap", self.consistency_gap),
            ("linearity", self.linearity),
            ("linearity_swapped", self.linearity_swapped),
            ("commutation", self.commutation),
            ("anticommutation", self.anticommutation),
        ]
    }

    pub fn max(&self) -> f64 {
        self.families().iter().map(|f| f.1).fold(0.0, f64::max)
    }
}

impl RigidityDiagnostics {
    pub fn summary(&self) -> DiagnosticSummary {
        let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
        DiagnosticSummary {
            consistency_gap: max(&mut self.consistency.iter().map(|c| 1.0 - c.value)),
            linearity: max(&mut self.linearity.iter().map(|l| l.product)),
            linearity_swapped: max(&mut self.linearity.iter().map(|l| l.swapped)),
            commutation: max(&mut self.linearity.iter().map(|l| l.commutator)),
            anticommutation: max(&mut self.anticommutation.iter().map(|a| a.residual)),
        }
    }
}

fn alice_observable(s: &Strategy, p: &PauliString) -> Result<ComplexMatrix> {
    let q = Question::Pauli { string: *p };
    s.alice_pvm(&q)
        .ok_or_else(|| Error::MissingMeasurement { side: "alice", question: q.to_string() })?
        .observable()
}

/// Consistency over Bob's pair questions, the three linearity families over
/// all (W, a, a') with |a|, |a'|, |a+a'| ≤ cap, and the X/Z anti-commutation
/// family for every (i, j).
pub fn rigidity_diagnostics(strategy: &Strategy, n: usize, cap: usize) -> Result<RigidityDiagnostics> {
    if strategy.alice_qubits() < n {
        return Err(Error::Dimension(format!("{n} Pauli qubits but Alice holds {}", strategy.alice_qubits())));
    }
    let rho_a = reduced_density(strategy.state(), &(0..strategy.alice_qubits()).collect::<Vec<_>>())?;
    let corr = Correlator::new(strategy);

    let mut consistency = Vec::new();
    for (q, pvm) in strategy.bob_map() {
        let Question::PauliPair { first, second } = q else { continue };
        let product = first.multiply(second)?.unsigned();
        for (slot, alice) in [*first, *second, product].iter().enumerate() {
            let key = Question::Pauli { string: *alice };
            let Some(apvm) = strategy.alice_pvm(&key) else { continue };
            let bob_obs = match slot {
                0 => pvm.marginal_observable(2, 0),
                1 => pvm.marginal_observable(2, 1),
                _ => pvm.marginal_observable(2, 0).matmul(&pvm.marginal_observable(2, 1)),
            };
            let value = corr.correlation(&apvm.observable()?, &bob_obs).re.clamp(-1.0, 1.0);
            consistency.push(ConsistencyEntry { alice: *alice, bob: (*first, *second), slot, value });
        }
    }

    let masks = low_weight_masks(n, cap);
    let mut pairs = BTreeSet::new();
    for w in 0..1u64 << n {
        for &a in &masks {
            for &a2 in &masks {
                if ((a ^ a2).count_ones() as usize) <= cap {
                    pairs.insert((w_of(n, w, a), w_of(n, w, a2), w_of(n, w, a ^ a2)));
                }
            }
        }
    }
    let embed = |p: &PauliString| -> Result<PauliString> {
        if strategy.alice_qubits() == n {
            Ok(*p)
        } else {
            p.embed(strategy.alice_qubits(), &(0..n).collect::<Vec<_>>())
        }
    };
    let mut linearity = Vec::new();
    for (p, q, pq) in pairs {
        let (tp, tq, tpq) = (alice_observable(strategy, &embed(&p)?)?, alice_observable(strategy, &embed(&q)?)?, alice_observable(strategy, &embed(&pq)?)?);
        let ab = tp.matmul(&tq);
        let ba = tq.matmul(&tp);
        linearity.push(LinearityEntry {
            first: p,
            second: q,
            product: rho_norm_sq(&(&ab - &tpq), &rho_a)?,
            swapped: rho_norm_sq(&(&ba - &tpq), &rho_a)?,
            commutator: rho_norm_sq(&(&ab - &ba), &rho_a)?,
        });
    }

    let mut anticommutation = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = alice_observable(strategy, &embed(&PauliString::single(n, i, Letter::X))?)?;
            let z = alice_observable(strategy, &embed(&PauliString::single(n, j, Letter::Z))?)?;
            let sign = if i == j { -1.0 } else { 1.0 };
            let diff = &x.matmul(&z) - &z.matmul(&x).scale_real(sign);
            anticommutation.push(AnticommutationEntry { i, j, residual: rho_norm_sq(&diff, &rho_a)? });
        }
    }
    Ok(RigidityDiagnostics { consistency, linearity, anticommutation })
}
