use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde_json::{json, Value};

use ots_core::data;
use ots_core::games::{canonical_lwpbt_strategy, exact_value, lwpbt, perturbed_strategy, rigidity_diagnostics, DEFAULT_WEIGHT_CAP};
use ots_core::group::{gowers_hatami_round, perturbed_sigma, GroupElement, MAX_ROUNDING_N};
use ots_core::hamiltonian::{ground_energy, Circuit, XZHamiltonian};
use ots_core::protocol::{
    default_p, gap_report, hamiltonian_game, honest_strategy, ots_device, pad_hamiltonian, repetition_params,
    run_protocol, semi_honest_value, shipped_policies, statistical_distance, view_distribution, zk_simulator,
    AdversaryPolicy, HamiltonianGameConfig, HistoryOracle, MAX_DEVICE_QUBITS,
};
use ots_core::qcore::{partial_trace, DensityMatrix, StateVector};
use ots_core::seeds::derive_seed;

use crate::config::{ExperimentConfig, PSource};
use crate::output::Report;

const ZK_TOL: f64 = 1e-9;

fn load_hamiltonian(spec: &str) -> Result<XZHamiltonian> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        return XZHamiltonian::from_json(&text).with_context(|| format!("parsing Hamiltonian {spec}"));
    }
    data::hamiltonian(spec).with_context(|| format!("{spec} is neither a file nor a shipped Hamiltonian"))
}

fn load_circuit(spec: &str) -> Result<Circuit> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        return Circuit::from_json(&text).with_context(|| format!("parsing circuit {spec}"));
    }
    data::circuit(spec).with_context(|| format!("{spec} is neither a file nor a shipped circuit"))
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    ensure!(!grid.is_empty(), "empty grid");
    ensure!(grid.iter().all(|t| t.is_finite() && *t >= 0.0), "grid values must be finite and nonnegative");
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

pub fn rigidity_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.n.unwrap_or(2);
    ensure!(n == 2 || n == 3, "rigidity-sweep supports n in {{2, 3}}, got {n}");
    let cap = cfg.weight_cap.unwrap_or(DEFAULT_WEIGHT_CAP);
    let grid = sorted_grid(cfg.theta_grid.as_deref().unwrap_or(&[0.0, 0.02, 0.05, 0.1, 0.2]))?;
    let game = lwpbt(n, cap)?;
    let base = canonical_lwpbt_strategy(&game, n)?;
    let header = [
        "theta",
        "one_minus_omega",
        "consistency_gap",
        "linearity",
        "linearity_swapped",
        "commutation",
        "anticommutation",
        "max_residual",
    ];
    let mut rows = Vec::new();
    for &theta in &grid {
        let s = perturbed_strategy(&base, theta)?;
        let omega = exact_value(&game, &s)?;
        let d = rigidity_diagnostics(&s, n, cap)?.summary();
        let mut row = vec![json!(theta), json!(1.0 - omega)];
        row.extend(d.families().iter().map(|f| json!(f.1)));
        row.push(json!(d.max()));
        rows.push(row);
    }
    let records: Vec<Value> = rows
        .iter()
        .map(|r| Value::Object(header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect()))
        .collect();
    let doc = json!({ "command": "rigidity-sweep", "n": n, "weight_cap": cap, "rows": records });
    Ok(Report { doc, header: header.iter().map(|h| h.to_string()).collect(), rows })
}

/// With an explicit p the promise is not needed; [-1, 1] always holds since
/// every |γ| ≤ 1.
fn game_config(cfg: &ExperimentConfig, h: &XZHamiltonian) -> Result<(HamiltonianGameConfig, &'static str)> {
    let big_c = cfg.big_c.unwrap_or(1.0);
    Ok(match cfg.p_source()? {
        PSource::Override(p) => (HamiltonianGameConfig::new(h.clone(), p, -1.0, 1.0, 1.0, big_c)?, "override"),
        PSource::Promise { alpha, beta, c_lw } => {
            (HamiltonianGameConfig::with_default_p(h.clone(), alpha, beta, c_lw, big_c)?, "default_p")
        }
    })
}

pub fn energy_demo(cfg: &ExperimentConfig) -> Result<Report> {
    let h = load_hamiltonian(cfg.hamiltonian.as_deref().unwrap_or("h2"))?;
    let (mut gc, source) = game_config(cfg, &h)?;
    if let Some(cap) = cfg.weight_cap {
        gc.weight_cap = cap;
    }
    let rounds = cfg.rounds.unwrap_or(100_000);
    ensure!(rounds > 0, "rounds must be positive");
    let game = hamiltonian_game(&gc)?;
    let strategy = honest_strategy(&game, &gc.h)?;
    let padded = pad_hamiltonian(&gc.h)?;
    let (lambda0, ground) = ground_energy(&padded)?;
    let held = partial_trace(&ground.to_density(), &(0..gc.h.n()).collect::<Vec<_>>())?;
    let hs = &gc.h;
    let formula = 1.0 - gc.p * (hs.abs_gamma_sum() / (2.0 * hs.m() as f64) + lambda0 / 2.0);
    let semi = semi_honest_value(hs, gc.p, &held)?;
    let exact = exact_value(&game, &strategy)?;
    let run = run_protocol(&game, &strategy, rounds, derive_seed(cfg.seed(), "energy-demo/monte-carlo"), 0)?;
    let freq = run.frequency();
    let sigma = (exact * (1.0 - exact) / rounds as f64).sqrt();
    let doc = json!({
        "command": "energy-demo",
        "n": hs.n(),
        "game_qubits": padded.n(),
        "m": hs.m(),
        "p": gc.p,
        "p_source": source,
        "lambda0": lambda0,
        "formula_value": formula,
        "semi_honest_value": semi,
        "exact_value": exact,
        "monte_carlo_frequency": freq,
        "rounds": rounds,
        "sigma": sigma,
        "delta_exact_formula": exact - formula,
        "delta_exact_semi_honest": exact - semi,
        "delta_monte_carlo_exact": freq - exact,
        "monte_carlo_within_3_sigma": (freq - exact).abs() <= 3.0 * sigma + 1e-12,
    });
    Ok(single_row(doc))
}

fn single_row(doc: Value) -> Report {
    let obj = doc.as_object().expect("object");
    let header = obj.keys().cloned().collect();
    let rows = vec![obj.values().cloned().collect()];
    Report { doc, header, rows }
}

fn witness(cfg: &ExperimentConfig, c: &Circuit) -> Result<DensityMatrix> {
    let bits = cfg.witness.clone().unwrap_or_else(|| "0".repeat(c.p()));
    ensure!(bits.len() == c.p(), "witness has {} bits, circuit expects {}", bits.len(), c.p());
    if c.p() == 0 {
        return Ok(DensityMatrix::pure(&StateVector::zero(0)));
    }
    let index = usize::from_str_radix(&bits, 2).with_context(|| format!("witness {bits:?} is not a bit string"))?;
    Ok(DensityMatrix::pure(&StateVector::basis(c.p(), index)))
}

pub fn zk_audit(cfg: &ExperimentConfig) -> Result<Report> {
    let circuit = load_circuit(cfg.circuit.as_deref().unwrap_or("one_gate"))?;
    let cap = cfg.weight_cap.unwrap_or(DEFAULT_WEIGHT_CAP);
    let oracle = HistoryOracle::new(circuit.clone(), witness(cfg, &circuit)?)?;
    let honest = oracle.honest_strategy(cap)?;
    let h = oracle.hamiltonian()?;
    let header = ["policy", "cases", "view_support", "simulator_support", "distance", "pass"];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for policy in shipped_policies(&h, cap)? {
        let view = view_distribution(&policy, &honest)?;
        let sim = zk_simulator(&policy, &oracle)?;
        let d = statistical_distance(&view.support, &sim.support);
        let cases: Vec<&str> = policy.cases().iter().map(|c| c.label()).collect();
        rows.push(vec![
            json!(policy.name()),
            json!(cases.join(";")),
            json!(view.len()),
            json!(sim.len()),
            json!(d),
            json!(d <= ZK_TOL),
        ]);
        records.push(json!({
            "policy": policy.name(),
            "cases": cases,
            "view_support": view.len(),
            "simulator_support": sim.len(),
            "distance": d,
            "pass": d <= ZK_TOL,
        }));
    }
    let all = records.iter().all(|r| r["pass"] == json!(true));
    let doc = json!({
        "command": "zk-audit",
        "qubits": oracle.n(),
        "gates": circuit.gates().len(),
        "tolerance": ZK_TOL,
        "all_pass": all,
        "policies": records,
    });
    Ok(Report { doc, header: header.iter().map(|h| h.to_string()).collect(), rows })
}

pub fn gap_demo(cfg: &ExperimentConfig) -> Result<Report> {
    let yes = load_hamiltonian(cfg.yes.as_deref().unwrap_or("gap_yes"))?;
    let no = load_hamiltonian(cfg.no.as_deref().unwrap_or("gap_no"))?;
    let (Some(alpha), Some(beta)) = (cfg.alpha, cfg.beta) else {
        bail!("gap-demo needs the promise alpha and beta");
    };
    let p = match cfg.p {
        Some(p) => {
            ensure!(cfg.c_lw.is_none(), "c_lw only matters when p is derived from (alpha, beta)");
            p
        }
        None => default_p(yes.n().max(no.n()).max(2), alpha, beta, cfg.c_lw.unwrap_or(1.0))?,
    };
    let m = cfg.m.unwrap_or(25);
    ensure!(m > 0, "m must be positive");
    let r = gap_report(&yes, &no, p, alpha, beta, m)?;
    // The m the amplification argument asks for at this gap, if representable.
    let paper_m = repetition_params(1.0 - r.omega_beta, 1.0 - r.omega_alpha, cfg.big_c.unwrap_or(1.0)).ok().map(|x| x.m);
    let mut doc = serde_json::to_value(&r)?;
    let obj = doc.as_object_mut().expect("object");
    obj.insert("command".into(), json!("gap-demo"));
    obj.insert("alpha".into(), json!(alpha));
    obj.insert("beta".into(), json!(beta));
    obj.insert("amplification_m".into(), json!(paper_m));
    Ok(single_row(doc))
}

pub fn gh_round(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.n.unwrap_or(1);
    ensure!((1..=MAX_ROUNDING_N).contains(&n), "gh-round supports n in 1..={MAX_ROUNDING_N}, got {n}");
    let grid = sorted_grid(cfg.theta_grid.as_deref().unwrap_or(&[0.0, 0.01, 0.05, 0.1]))?;
    let aux = 2;
    let rho = DensityMatrix::maximally_mixed(n + 1);
    let center = [GroupElement::identity(n), GroupElement::j(n)];
    let header = ["eps", "defect", "max_residual", "isometry_error", "retained", "filtered"];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, &eps) in grid.iter().enumerate() {
        let f = perturbed_sigma(n, aux, eps, derive_seed(cfg.seed(), &format!("gh-round/{i}")))?;
        let r = gowers_hatami_round(&f, &rho, &center)?;
        let retained: Vec<String> = r.components.iter().map(|c| format!("{}^{}", c.label, c.multiplicity)).collect();
        rows.push(vec![
            json!(eps),
            json!(r.defect),
            json!(r.max_residual()),
            json!(r.isometry_error),
            json!(retained.join(";")),
            json!(r.filtered.len()),
        ]);
        records.push(json!({
            "eps": eps,
            "defect": r.defect,
            "max_residual": r.max_residual(),
            "isometry_error": r.isometry_error,
            "retained": retained,
            "filtered": r.filtered.len(),
        }));
    }
    let doc = json!({ "command": "gh-round", "n": n, "aux_dim": aux, "rows": records });
    Ok(Report { doc, header: header.iter().map(|h| h.to_string()).collect(), rows })
}

pub fn device_spec(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.n.unwrap_or(2);
    ensure!((1..=MAX_DEVICE_QUBITS).contains(&n), "device-spec supports n in 1..={MAX_DEVICE_QUBITS}, got {n}");
    let spec = ots_device(n)?.spec();
    let rows = spec.menu.iter().map(|m| vec![json!(m.index), json!(m.observable)]).collect();
    let mut doc = serde_json::to_value(&spec)?;
    doc.as_object_mut().expect("object").insert("command".into(), json!("device-spec"));
    Ok(Report { doc, header: vec!["index".into(), "observable".into()], rows })
}
