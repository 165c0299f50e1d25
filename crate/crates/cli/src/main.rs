//! `dopt`: generate instances, run the heuristics, solve exactly, and
//! benchmark the determinant engines. Outputs are CSV (or JSON with
//! `--format json`) with one row per instance × configuration.

mod report;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dopt_core::bnb::{self, LsMode, SolverConfig};
use dopt_core::detengine::Strategy;
use dopt_core::heuristics::{self, Mode, SeedKind};
use dopt_core::instance::{self, Normalized};
use dopt_core::relaxation::{self, FwOptions};

use report::{emit, BenchRow, BoundsRow, Format, LsRow, SolveRow};

#[derive(Parser)]
#[command(name = "dopt", version, about = "Integer D-optimal design toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct OutputOpts {
    /// Output format for the report rows.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file (stdout when omitted). Relative paths are placed under
    /// $DOPT_OUT_DIR when that variable is set.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance file.
    Gen {
        /// Number of candidate experiments (n ≥ 8); m = ⌊n/4⌋, s = ⌊n/2⌋.
        #[arg(long)]
        n: usize,
        /// RNG seed; identical seeds give identical files.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Probability that an entry of A is nonzero.
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Upper repetition bounds are uniform on {1,…,u_max}.
        #[arg(long, default_value_t = 3)]
        u_max: i64,
        /// Destination file.
        #[arg(long, short = 'o')]
        output: PathBuf,
    },
    /// Exact branch-and-bound solve; one report row per version.
    Solve {
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// Version shortcut 1..7 (see --versions for ranges).
        #[arg(long, conflicts_with = "versions")]
        version: Option<u8>,
        /// Version list or range, e.g. `1-7` or `1,5,6`.
        #[arg(long)]
        versions: Option<String>,
        /// Fine-grained toggles (ignored when a version is given).
        #[arg(long)]
        vbt: bool,
        #[arg(long)]
        lsi: bool,
        #[arg(long)]
        lsc: bool,
        #[arg(long)]
        hs: bool,
        /// Append the root local-search columns (the Table-2 layout).
        #[arg(long)]
        with_ls: bool,
        #[arg(long, default_value_t = 1e-6)]
        gap_tol: f64,
        #[arg(long, default_value_t = 1e-5)]
        int_tol: f64,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Wall-clock limit per solve, seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        relax_tol: f64,
        #[arg(long, default_value_t = 5000)]
        relax_iters: usize,
        /// Worker threads for the node loop (1 = deterministic reference).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Local searches inside the tree: fi|fiplus|bi|all.
        #[arg(long, default_value = "all")]
        ls_mode: String,
        /// Swap engine: simplest|chol|sm|svd|qr.
        #[arg(long, default_value = "sm")]
        engine: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Seed×mode local-search grid.
    Ls {
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// Comma list of seeds (bin-x0|int-x0|bin-xhat0|int-xhat0|relax) or `all`.
        #[arg(long, default_value = "all")]
        seeds: String,
        /// Comma list of modes (fi|fiplus|bi) or `all`.
        #[arg(long, default_value = "all")]
        modes: String,
        #[arg(long, default_value = "sm")]
        engine: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Time the determinant-update strategies inside the local searches
    /// over a budget grid (strategies run sequentially).
    BenchDet {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        m: usize,
        /// Budget grid: a single value `150` or an inclusive range `100..250`.
        #[arg(long, default_value = "100..250")]
        s: String,
        #[arg(long, default_value_t = 50)]
        s_step: i64,
        /// Repetitions per cell.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 3)]
        u_max: i64,
        /// Comma list of modes or `all`.
        #[arg(long, default_value = "all")]
        modes: String,
        /// Comma list of strategies or `all`.
        #[arg(long, default_value = "all")]
        strategies: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Hadamard, spectral, and relaxation bounds at the root.
    Bounds {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        relax_tol: f64,
        #[arg(long, default_value_t = 5000)]
        relax_iters: usize,
        #[command(flatten)]
        out: OutputOpts,
    },
}

fn main() {
    env_logger::init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_normalized(path: &PathBuf) -> Result<(String, Normalized)> {
    let inst = instance::load(path).with_context(|| format!("loading {}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    let (norm, _, _) = instance::normalize_to_zero_lower(&inst);
    Ok((id, norm))
}

fn parse_versions(spec: &str) -> Result<Vec<u8>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once('-') {
        let (a, b): (u8, u8) = (a.trim().parse()?, b.trim().parse()?);
        if a < 1 || b > 7 || a > b {
            bail!("version range must sit inside 1-7, got {spec:?}");
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|t| {
            let v: u8 = t.trim().parse()?;
            if !(1..=7).contains(&v) {
                bail!("version must be 1..7, got {v}");
            }
            Ok(v)
        })
        .collect()
}

fn parse_list<T: FromStr<Err = String>>(spec: &str, all: &[T]) -> Result<Vec<T>>
where
    T: Copy,
{
    if spec.trim() == "all" {
        return Ok(all.to_vec());
    }
    spec.split(',')
        .map(|t| T::from_str(t.trim()).map_err(anyhow::Error::msg))
        .collect()
}

fn parse_budget_grid(spec: &str, step: i64) -> Result<Vec<i64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (i64, i64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b || step <= 0 {
            bail!("bad budget range {spec:?} with step {step}");
        }
        let mut grid: Vec<i64> = (a..=b).step_by(step as usize).collect();
        if *grid.last().unwrap() != b {
            grid.push(b);
        }
        return Ok(grid);
    }
    Ok(vec![spec.trim().parse()?])
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen {
            n,
            seed,
            density,
            u_max,
            output,
        } => {
            let inst = instance::generate_random(n, seed, density, u_max)?;
            let path = report::resolve_output(Some(&output)).unwrap();
            instance::save(&inst, &path)?;
            println!(
                "wrote {} (n={}, m={}, s={})",
                path.display(),
                inst.n(),
                inst.m(),
                inst.s()
            );
            Ok(())
        }
        Cmd::Solve {
            input,
            version,
            versions,
            vbt,
            lsi,
            lsc,
            hs,
            with_ls,
            gap_tol,
            int_tol,
            node_limit,
            time_limit,
            relax_tol,
            relax_iters,
            threads,
            ls_mode,
            engine,
            out,
        } => {
            let (id, norm) = load_normalized(&input)?;
            let versions: Vec<Option<u8>> = if let Some(spec) = versions {
                parse_versions(&spec)?.into_iter().map(Some).collect()
            } else if let Some(v) = version {
                if !(1..=7).contains(&v) {
                    bail!("version must be 1..7, got {v}");
                }
                vec![Some(v)]
            } else {
                vec![None]
            };
            let engine = Strategy::from_str(&engine).map_err(anyhow::Error::msg)?;
            let ls_mode = LsMode::from_str(&ls_mode).map_err(anyhow::Error::msg)?;
            let mut rows = Vec::new();
            for v in versions {
                let mut cfg = match v {
                    Some(v) => SolverConfig::version(v),
                    None => {
                        let mut c = SolverConfig::version(1);
                        c.vbt = vbt;
                        c.lsi = lsi;
                        c.lsc = lsc;
                        c.hs = hs;
                        c
                    }
                };
                cfg.gap_tol = gap_tol;
                cfg.integrality_tol = int_tol;
                cfg.node_limit = node_limit;
                cfg.time_limit = time_limit.map(Duration::from_secs_f64);
                cfg.relax_tol = relax_tol;
                cfg.relax_iters = relax_iters;
                cfg.threads = threads;
                cfg.ls_mode = ls_mode;
                cfg.engine = engine;
                let res = bnb::solve(&norm, &cfg)?;
                rows.push(SolveRow {
                    instance: id.clone(),
                    n: norm.n(),
                    m: norm.m(),
                    s: norm.s(),
                    version: v.map(|v| v.to_string()).unwrap_or_else(|| "custom".into()),
                    vbt: cfg.vbt,
                    lsi: cfg.lsi,
                    lsc: cfg.lsc,
                    hs: cfg.hs,
                    status: res.status.to_string(),
                    best_z: res.best_z,
                    root_primal: res.root_relax_value,
                    root_dual: res.root_dual_bound,
                    nodes: res.node_count,
                    vbt_effective: res.vbt_effective,
                    vars_fixed: res.vars_fixed,
                    time_s: res.wall_time.as_secs_f64(),
                    ls_z: with_ls.then_some(res.ls_value),
                    ls_time_s: with_ls.then(|| res.ls_time.as_secs_f64()),
                });
            }
            emit(&rows, out.format, out.output.as_deref())
        }
        Cmd::Ls {
            input,
            seeds,
            modes,
            engine,
            out,
        } => {
            let (id, norm) = load_normalized(&input)?;
            let engine = Strategy::from_str(&engine).map_err(anyhow::Error::msg)?;
            let seed_kinds: Vec<SeedKind> = parse_list(
                &seeds,
                &[
                    SeedKind::BinX0,
                    SeedKind::IntX0,
                    SeedKind::BinXhat0,
                    SeedKind::IntXhat0,
                    SeedKind::Relax,
                ],
            )?;
            let modes: Vec<Mode> = parse_list(&modes, &Mode::ALL)?;
            let ind = heuristics::select_independent_rows(&norm)?;
            let x0 = heuristics::leverage_scores(&norm);
            let xhat0 = heuristics::weighted_scores(&norm);
            let mut relax_point: Option<Vec<f64>> = None;
            let mut rows = Vec::new();
            for kind in seed_kinds {
                for &mode in &modes {
                    let t0 = Instant::now();
                    let start = match kind {
                        SeedKind::Relax => {
                            if relax_point.is_none() {
                                let sol = relaxation::solve_relaxation(
                                    &norm,
                                    norm.instance().l(),
                                    norm.u(),
                                    1e-6,
                                    5000,
                                )?;
                                relax_point = Some(sol.x);
                            }
                            heuristics::continuous_to_integer(
                                relax_point.as_ref().unwrap(),
                                norm.s(),
                                norm.u(),
                            )
                        }
                        other => heuristics::seed_design(&norm, other, &ind, &x0, &xhat0)?,
                    };
                    let (_, ldet) =
                        heuristics::local_search(&norm, &start, mode, engine, norm.u())?;
                    rows.push(LsRow {
                        instance: id.clone(),
                        n: norm.n(),
                        m: norm.m(),
                        s: norm.s(),
                        seed: kind.to_string(),
                        mode: mode.to_string(),
                        ldet,
                        time_s: t0.elapsed().as_secs_f64(),
                    });
                }
            }
            emit(&rows, out.format, out.output.as_deref())
        }
        Cmd::BenchDet {
            n,
            m,
            s,
            s_step,
            reps,
            seed,
            density,
            u_max,
            modes,
            strategies,
            out,
        } => {
            let grid = parse_budget_grid(&s, s_step)?;
            let modes: Vec<Mode> = parse_list(&modes, &Mode::ALL)?;
            let strategies: Vec<Strategy> = parse_list(&strategies, &Strategy::ALL)?;
            let mut rows = Vec::new();
            for &strategy in &strategies {
                for &s_val in &grid {
                    let inst_s =
                        instance::generate_with_dims(n, m, s_val, seed, density, u_max)?;
                    let (norm, _, _) = instance::normalize_to_zero_lower(&inst_s);
                    let ind = heuristics::select_independent_rows(&norm)?;
                    let x0 = heuristics::leverage_scores(&norm);
                    let start = heuristics::round_bin(&x0, &ind, norm.s())?;
                    for &mode in &modes {
                        for _ in 0..reps {
                            let t0 = Instant::now();
                            let (_, ldet) = heuristics::local_search(
                                &norm,
                                &start,
                                mode,
                                strategy,
                                norm.u(),
                            )?;
                            let seconds = t0.elapsed().as_secs_f64();
                            debug_assert!(ldet.is_finite());
                            rows.push(BenchRow {
                                strategy: strategy.to_string(),
                                n,
                                m,
                                s: s_val,
                                mode: mode.to_string(),
                                seed,
                                seconds,
                            });
                        }
                    }
                }
            }
            emit(&rows, out.format, out.output.as_deref())
        }
        Cmd::Bounds {
            input,
            relax_tol,
            relax_iters,
            out,
        } => {
            let (id, norm) = load_normalized(&input)?;
            let rep = dopt_core::bounds::bounds_report(&norm, norm.u());
            let opts = FwOptions {
                tol: relax_tol,
                max_iters: relax_iters,
                ..FwOptions::default()
            };
            let (sol, dual) =
                relaxation::solve_with_options(&norm, norm.instance().l(), norm.u(), &opts)?;
            let rows = vec![BoundsRow {
                instance: id,
                n: norm.n(),
                m: norm.m(),
                s: norm.s(),
                hadamard: rep.hadamard,
                spectral: rep.spectral,
                root_primal: sol.z_primal,
                zeta_hat: dual.zeta_hat,
            }];
            emit(&rows, out.format, out.output.as_deref())
        }
    }
}
