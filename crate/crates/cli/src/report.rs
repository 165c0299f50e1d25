//! Row types and CSV/JSON emission. Identical command lines produce
//! byte-identical output apart from the timing columns.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Destination honoring `DOPT_OUT_DIR` for relative paths.
pub fn resolve_output(path: Option<&Path>) -> Option<PathBuf> {
    let path = path?;
    if path.is_absolute() {
        return Some(path.to_path_buf());
    }
    match std::env::var_os("DOPT_OUT_DIR") {
        Some(dir) => Some(PathBuf::from(dir).join(path)),
        None => Some(path.to_path_buf()),
    }
}

pub trait Row: Serialize {
    fn header() -> &'static str;
    fn csv(&self) -> String;
}

pub fn emit<R: Row>(rows: &[R], format: Format, output: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Csv => {
            let mut out = String::from(R::header());
            out.push('\n');
            for r in rows {
                out.push_str(&r.csv());
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut out = serde_json::to_string_pretty(rows)?;
            out.push('\n');
            out
        }
    };
    match resolve_output(output) {
        Some(path) => {
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fmt_opt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v.is_nan() {
        String::new()
    } else {
        "-inf".into()
    }
}

/// One solve on one instance with one configuration.
#[derive(Debug, Serialize)]
pub struct SolveRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub s: i64,
    pub version: String,
    pub vbt: bool,
    pub lsi: bool,
    pub lsc: bool,
    pub hs: bool,
    pub status: String,
    pub best_z: f64,
    pub root_primal: f64,
    pub root_dual: f64,
    pub nodes: u64,
    pub vbt_effective: u64,
    pub vars_fixed: u64,
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_time_s: Option<f64>,
}

impl Row for SolveRow {
    fn header() -> &'static str {
        "instance,n,m,s,version,vbt,lsi,lsc,hs,status,best_z,root_primal,root_dual,\
         nodes,vbt_effective,vars_fixed,time_s,ls_z,ls_time_s"
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3},{},{}",
            self.instance,
            self.n,
            self.m,
            self.s,
            self.version,
            self.vbt,
            self.lsi,
            self.lsc,
            self.hs,
            self.status,
            fmt_opt(self.best_z),
            fmt_opt(self.root_primal),
            fmt_opt(self.root_dual),
            self.nodes,
            self.vbt_effective,
            self.vars_fixed,
            self.time_s,
            self.ls_z.map(fmt_opt).unwrap_or_default(),
            self.ls_time_s.map(|t| format!("{t:.3}")).unwrap_or_default(),
        )
    }
}

/// One local-search run of the seed×mode grid.
#[derive(Debug, Serialize)]
pub struct LsRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub s: i64,
    pub seed: String,
    pub mode: String,
    pub ldet: f64,
    pub time_s: f64,
}

impl Row for LsRow {
    fn header() -> &'static str {
        "instance,n,m,s,seed,mode,ldet,time_s"
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.instance,
            self.n,
            self.m,
            self.s,
            self.seed,
            self.mode,
            fmt_opt(self.ldet),
            self.time_s
        )
    }
}

/// One timed local search of the engine benchmark (long format).
#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub strategy: String,
    pub n: usize,
    pub m: usize,
    pub s: i64,
    pub mode: String,
    pub seed: u64,
    pub seconds: f64,
}

impl Row for BenchRow {
    fn header() -> &'static str {
        "strategy,n,m,s,mode,seed,seconds"
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3}",
            self.strategy, self.n, self.m, self.s, self.mode, self.seed, self.seconds
        )
    }
}

/// Root bound report.
#[derive(Debug, Serialize)]
pub struct BoundsRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub s: i64,
    pub hadamard: f64,
    pub spectral: f64,
    pub root_primal: f64,
    pub zeta_hat: f64,
}

impl Row for BoundsRow {
    fn header() -> &'static str {
        "instance,n,m,s,hadamard,spectral,root_primal,zeta_hat"
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.instance,
            self.n,
            self.m,
            self.s,
            fmt_opt(self.hadamard),
            fmt_opt(self.spectral),
            fmt_opt(self.root_primal),
            fmt_opt(self.zeta_hat)
        )
    }
}
