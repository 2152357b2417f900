use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything a run reads. Loaded from `--config`, then overridden flag by
/// flag.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub n: Option<usize>,
    pub weight_cap: Option<usize>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub c_lw: Option<f64>,
    pub big_c: Option<f64>,
    pub m: Option<u64>,
    pub seed: Option<u64>,
    pub rounds: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub theta_grid: Option<Vec<f64>>,
    /// Path to a Hamiltonian JSON file, or the name of a shipped one.
    pub hamiltonian: Option<String>,
    pub circuit: Option<String>,
    pub yes: Option<String>,
    pub no: Option<String>,
    /// Computational-basis witness as a bit string, qubit 0 first.
    pub witness: Option<String>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// JSON config file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "cap", global = true)]
    pub weight_cap: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long = "clw", global = true)]
    pub c_lw: Option<f64>,
    #[arg(long = "bigC", global = true)]
    pub big_c: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<u64>,
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Comma-separated list, e.g. 0,0.05,0.1.
    #[arg(long, global = true)]
    pub theta_grid: Option<String>,
    #[arg(long, global = true)]
    pub hamiltonian: Option<String>,
    #[arg(long, global = true)]
    pub circuit: Option<String>,
    #[arg(long, global = true)]
    pub yes: Option<String>,
    #[arg(long, global = true)]
    pub no: Option<String>,
    #[arg(long, global = true)]
    pub witness: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn resolve(command: &str, flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(c) = &cfg.command {
            if c != command {
                bail!("config is for command {c:?}, invoked as {command:?}");
            }
        }
        cfg.command = Some(command.to_string());
        macro_rules! overlay {
            ($($f:ident),*) => { $( if flags.$f.is_some() { cfg.$f = flags.$f.clone(); } )* };
        }
        overlay!(seed, out, format, n, weight_cap, p, alpha, beta, c_lw, big_c, m, rounds, hamiltonian, circuit, yes, no, witness);
        if let Some(g) = &flags.theta_grid {
            cfg.theta_grid = Some(parse_grid(g)?);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    /// Where p comes from for a Hamiltonian command.
    pub fn p_source(&self) -> Result<PSource> {
        match (self.p, self.alpha, self.beta) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                bail!("give either p or the promise (alpha, beta), not both")
            }
            (Some(p), None, None) => {
                if self.c_lw.is_some() {
                    bail!("c_lw only matters when p is derived from (alpha, beta)");
                }
                Ok(PSource::Override(p))
            }
            (None, Some(a), Some(b)) => Ok(PSource::Promise { alpha: a, beta: b, c_lw: self.c_lw.unwrap_or(1.0) }),
            _ => bail!("need p, or both alpha and beta"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PSource {
    Override(f64),
    Promise { alpha: f64, beta: f64, c_lw: f64 },
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad grid value {t:?}")))
        .collect()
}
