//! Threshold parallel repetition of the anchored game, evaluated for product
//! strategies only: the m rounds are independent, so the number of wins is
//! Binomial(m, ω). Values of general entangled strategies on the repeated
//! game are not computed here.

use serde::Serialize;

use super::{anchor, anchor_strategy, hamiltonian_game, honest_strategy, HamiltonianGameConfig};
use crate::error::{Error, Result};
use crate::games::exact_value;
use crate::hamiltonian::{ground_energy, XZHamiltonian};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepetitionParams {
    pub gamma: f64,
    pub m: u64,
}

/// Largest m we accept; beyond 2^53 the count is no longer exact in f64.
const MAX_REPETITIONS: f64 = 9.0e15;

/// γ = (ε_α - ε_β)/4 and m = ⌈max{4γ^-2, 2Cγ^-9}⌉, for ε_α > ε_β ≥ 0.
pub fn repetition_params(eps_alpha: f64, eps_beta: f64, big_c: f64) -> Result<RepetitionParams> {
    if !(eps_alpha > eps_beta && eps_beta >= 0.0 && eps_alpha <= 1.0) {
        return Err(Error::Parameter(format!("need 1 >= eps_alpha > eps_beta >= 0, got {eps_alpha}, {eps_beta}")));
    }
    if !(big_c > 0.0) {
        return Err(Error::Parameter(format!("C = {big_c} must be positive")));
    }
    let gamma = (eps_alpha - eps_beta) / 4.0;
    let m = (4.0 / (gamma * gamma)).max(2.0 * big_c / gamma.powi(9)).ceil();
    if !(m <= MAX_REPETITIONS) {
        return Err(Error::TooLarge(format!("m = {m:e} repetitions")));
    }
    Ok(RepetitionParams { gamma, m: m as u64 })
}

/// Pr[X > threshold] for X ~ Binomial(m, per_round_value).
///
/// Terms are generated from the mode outwards by the pmf ratio recurrence
/// and normalized at the end, so no factorials are formed; summation stops
/// once terms fall below 1e-20 of the mode, past which the geometric decay
/// leaves nothing visible in f64.
pub fn threshold_accept_prob(per_round_value: f64, m: u64, threshold: f64) -> Result<f64> {
    let v = per_round_value;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Parameter(format!("per-round value {v} outside [0, 1]")));
    }
    if threshold.is_nan() {
        return Err(Error::Parameter("threshold is NaN".into()));
    }
    if threshold < 0.0 {
        return Ok(1.0);
    }
    if threshold >= m as f64 {
        return Ok(0.0);
    }
    // Wins needed: k > threshold, i.e. k >= first.
    let first = threshold.floor() as u64 + 1;
    if v == 0.0 {
        return Ok(0.0);
    }
    if v == 1.0 {
        return Ok(1.0);
    }
    let odds = v / (1.0 - v);
    let mode = (((m + 1) as f64) * v).floor().min(m as f64) as u64;
    const CUTOFF: f64 = 1e-20;

    let (mut above, mut below) = (0.0, 0.0);
    let mut add = |k: u64, w: f64| {
        if k >= first {
            above += w;
        } else {
            below += w;
        }
    };
    add(mode, 1.0);
    let mut w = 1.0;
    let mut k = mode;
    while k < m {
        w *= (m - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        add(k, w);
        if w < CUTOFF {
            break;
        }
    }
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / (m - k + 1) as f64 / odds;
        k -= 1;
        add(k, w);
        if w < CUTOFF {
            break;
        }
    }
    Ok(above / (above + below))
}

/// Completeness-soundness separation of the repeated anchored game for a
/// yes/no Hamiltonian pair under honest product strategies.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub p: f64,
    pub m: u64,
    pub lambda0_yes: f64,
    pub lambda0_no: f64,
    pub promise_holds: bool,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub anchored_alpha: f64,
    pub anchored_beta: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub accept_yes: f64,
    pub accept_no: f64,
    pub separation: f64,
    pub separated: bool,
    pub strategy_class: &'static str,
}

/// ω_α and ω_β are exact honest values (the best semi-honest values) of the
/// anchored game; threshold (ω_β,⊥ + γ)m with γ = (ε_β - ε_α)/4.
pub fn gap_report(h_yes: &XZHamiltonian, h_no: &XZHamiltonian, p: f64, alpha: f64, beta: f64, m: u64) -> Result<GapReport> {
    let value = |h: &XZHamiltonian| -> Result<(f64, f64, f64)> {
        let cfg = HamiltonianGameConfig::new(h.clone(), p, alpha, beta, 1.0, 1.0)?;
        let g = hamiltonian_game(&cfg)?;
        let s = honest_strategy(&g, &cfg.h)?;
        let omega = exact_value(&g, &s)?;
        let anchored = exact_value(&anchor(&g)?, &anchor_strategy(&s)?)?;
        Ok((ground_energy(&cfg.h)?.0, omega, anchored))
    };
    let (l_yes, w_a, a_a) = value(h_yes)?;
    let (l_no, w_b, a_b) = value(h_no)?;
    let gamma = ((1.0 - w_b) - (1.0 - w_a)) / 4.0;
    let threshold = (a_b + gamma) * m as f64;
    let accept_yes = threshold_accept_prob(a_a, m, threshold)?;
    let accept_no = threshold_accept_prob(a_b, m, threshold)?;
    let separation = accept_yes - accept_no;
    Ok(GapReport {
        p,
        m,
        lambda0_yes: l_yes,
        lambda0_no: l_no,
        promise_holds: l_yes <= alpha && l_no >= beta,
        omega_alpha: w_a,
        omega_beta: w_b,
        anchored_alpha: a_a,
        anchored_beta: a_b,
        gamma,
        threshold,
        accept_yes,
        accept_no,
        separation,
        separated: gamma > 0.0 && separation > 0.25,
        strategy_class: "product (independent rounds)",
    })
}
