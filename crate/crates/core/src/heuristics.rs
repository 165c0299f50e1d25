//! Seed construction and swap local search.
//!
//! Seeds come from the SVD of `A`: the leverage profile `x⁰` (feasible for
//! the continuous relaxation) and the weighted profile `x̂⁰` (row
//! energies), each rounded two ways (`Bin`: 0/1 fill, `Int`: greedy fill
//! capped by `u`), always on top of `m` linearly independent rows so the
//! starting information matrix is nonsingular. The local search explores
//! the ±1 exchange neighborhood with first-improvement (FI), first-`i`
//! best-`j` (FI⁺), or best-improvement (BI) pivoting.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::detengine::{EngineState, Strategy};
use crate::error::{Error, Result};
use crate::instance::{Design, Normalized};
use crate::linalg;

/// Accepted moves must improve the objective by this much, so numerically
/// equal values cannot cycle.
pub const IMPROVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Fi,
    FiPlus,
    Bi,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Fi, Mode::FiPlus, Mode::Bi];

    pub fn token(self) -> &'static str {
        match self {
            Mode::Fi => "fi",
            Mode::FiPlus => "fiplus",
            Mode::Bi => "bi",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fi" => Ok(Mode::Fi),
            "fiplus" => Ok(Mode::FiPlus),
            "bi" => Ok(Mode::Bi),
            other => Err(format!("unknown mode {other:?} (expected fi|fiplus|bi)")),
        }
    }
}

/// The four SVD seeds plus the relaxation-rounding seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedKind {
    BinX0,
    IntX0,
    BinXhat0,
    IntXhat0,
    Relax,
}

impl SeedKind {
    /// The seeds used by the root sweep (the relaxation seed belongs to
    /// the branch-and-bound enhancements, not the sweep).
    pub const SWEEP: [SeedKind; 4] = [
        SeedKind::BinX0,
        SeedKind::IntX0,
        SeedKind::BinXhat0,
        SeedKind::IntXhat0,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SeedKind::BinX0 => "bin-x0",
            SeedKind::IntX0 => "int-x0",
            SeedKind::BinXhat0 => "bin-xhat0",
            SeedKind::IntXhat0 => "int-xhat0",
            SeedKind::Relax => "relax",
        }
    }
}

impl fmt::Display for SeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SeedKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bin-x0" => Ok(SeedKind::BinX0),
            "int-x0" => Ok(SeedKind::IntX0),
            "bin-xhat0" => Ok(SeedKind::BinXhat0),
            "int-xhat0" => Ok(SeedKind::IntXhat0),
            "relax" => Ok(SeedKind::Relax),
            other => Err(format!(
                "unknown seed {other:?} (expected bin-x0|int-x0|bin-xhat0|int-xhat0|relax)"
            )),
        }
    }
}

/// Nonnegative per-index scores plus the permutation `tau` sorting them
/// descending (stable, so ties keep natural order).
#[derive(Debug, Clone)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub tau: Vec<usize>,
}

fn descending_permutation(scores: &[f64]) -> Vec<usize> {
    let mut tau: Vec<usize> = (0..scores.len()).collect();
    tau.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    tau
}

/// `m` linearly independent rows of `A` and their 0/1 incidence vector;
/// the information matrix of the incidence vector is nonsingular.
#[derive(Debug, Clone)]
pub struct IndependentSeed {
    pub tilde_n: Vec<usize>,
    pub tilde_x: Vec<i64>,
}

/// Greedy pivoted elimination over rows in natural order; returns the
/// first `m` rows forming a basis.
pub fn select_independent_rows(norm: &Normalized) -> Result<IndependentSeed> {
    let m = norm.m();
    let rows = linalg::independent_rows(norm.instance().a(), m)
        .ok_or(Error::RankDeficient { expected: m })?;
    let mut tilde_x = vec![0i64; norm.n()];
    for &r in &rows {
        tilde_x[r] = 1;
    }
    Ok(IndependentSeed {
        tilde_n: rows,
        tilde_x,
    })
}

/// Full SVD `A = UΣVᵀ` with `U` square `n×n`: the thin factor is sorted
/// by descending singular value and completed to an orthonormal basis.
fn full_left_singular_basis(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let m = a.ncols();
    let svd = nalgebra::SVD::new(a.clone(), true, false);
    let u_thin = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
    let mut sorted = DMatrix::zeros(n, m);
    let mut sigma = Vec::with_capacity(m);
    for (c, &p) in order.iter().enumerate() {
        sorted.column_mut(c).copy_from(&u_thin.column(p));
        sigma.push(svd.singular_values[p]);
    }
    if n == m {
        return (sorted, sigma);
    }
    // Orthonormal completion: the QR of U keeps the leading columns up to
    // sign (they are already orthonormal) and fills the complement.
    let (q, _) = linalg::qr_full(&sorted);
    let mut full = q;
    full.columns_mut(0, m).copy_from(&sorted);
    (full, sigma)
}

/// Leverage scores `x⁰ⱼ = Σ_{k≤s} U²ⱼₖ` over the full left singular
/// basis: sums to `s` and lies in `[0, 1]` componentwise, so it is
/// feasible for the continuous relaxation.
pub fn leverage_scores(norm: &Normalized) -> ScoreVector {
    let s = norm.s() as usize;
    let (u, _) = full_left_singular_basis(norm.instance().a());
    let n = norm.n();
    let cols = s.min(n);
    let scores: Vec<f64> = (0..n)
        .map(|j| (0..cols).map(|k| u[(j, k)] * u[(j, k)]).sum())
        .collect();
    let tau = descending_permutation(&scores);
    ScoreVector { scores, tau }
}

/// Weighted scores `x̂⁰ⱼ = Σᵢ (Uⱼᵢ Σᵢᵢ)²`, which collapse to the squared
/// row norms of `A`. Nonnegative but not budget-feasible in general.
pub fn weighted_scores(norm: &Normalized) -> ScoreVector {
    let a = norm.instance().a();
    let scores: Vec<f64> = (0..norm.n()).map(|j| a.row(j).norm_squared()).collect();
    let tau = descending_permutation(&scores);
    ScoreVector { scores, tau }
}

/// `Bin` rounding: the independent rows plus the first `s − m` indices in
/// `tau` outside them, all at repetition 1.
pub fn round_bin(sv: &ScoreVector, seed: &IndependentSeed, s: i64) -> Result<Design> {
    let n = sv.scores.len();
    let m = seed.tilde_n.len();
    let extra = s - m as i64;
    if extra > (n - m) as i64 {
        return Err(Error::BudgetExceedsN {
            needed: extra,
            available: (n - m) as i64,
        });
    }
    let mut x = seed.tilde_x.clone();
    let mut left = extra;
    for &j in &sv.tau {
        if left == 0 {
            break;
        }
        if x[j] == 0 {
            x[j] = 1;
            left -= 1;
        }
    }
    Ok(Design { x })
}

/// `Int` rounding: greedy fill along `tau` of `ỹ_{τ(j)} = min{Δ_{τ(j)},
/// max{0, s̄ − filled}}` with `Δ = u − x̃`, then `x̄ = x̃ + ỹ`.
pub fn round_int(sv: &ScoreVector, seed: &IndependentSeed, s: i64, u: &[i64]) -> Design {
    let m = seed.tilde_n.len() as i64;
    let mut x = seed.tilde_x.clone();
    let mut left = s - m;
    debug_assert!(left >= 0);
    for &j in &sv.tau {
        if left == 0 {
            break;
        }
        let delta = u[j] - seed.tilde_x[j];
        let take = delta.min(left).max(0);
        x[j] += take;
        left -= take;
    }
    debug_assert_eq!(left, 0, "eᵀu ≥ s guarantees the fill completes");
    Design { x }
}

/// Rounds a relaxation point to a feasible design: floor, then hand the
/// missing budget to the largest remaining fractional parts (lowest index
/// on ties), never exceeding `u`.
pub fn continuous_to_integer(xc: &[f64], s: i64, u: &[i64]) -> Design {
    let n = xc.len();
    let mut x: Vec<i64> = xc
        .iter()
        .zip(u)
        .map(|(&v, &hi)| (v.floor() as i64).clamp(0, hi))
        .collect();
    let mut frac: Vec<f64> = xc
        .iter()
        .zip(&x)
        .map(|(&v, &fl)| v - fl as f64)
        .collect();
    let mut k: i64 = x.iter().sum();
    while k < s {
        let mut best = usize::MAX;
        for j in 0..n {
            if x[j] >= u[j] {
                continue;
            }
            if best == usize::MAX || frac[j] > frac[best] {
                best = j;
            }
        }
        assert!(best != usize::MAX, "budget exceeds eᵀu");
        x[best] += 1;
        frac[best] = 0.0;
        k += 1;
    }
    Design { x }
}

/// Builds one of the four sweep seeds.
pub fn seed_design(
    norm: &Normalized,
    kind: SeedKind,
    seed: &IndependentSeed,
    x0: &ScoreVector,
    xhat0: &ScoreVector,
) -> Result<Design> {
    match kind {
        SeedKind::BinX0 => round_bin(x0, seed, norm.s()),
        SeedKind::IntX0 => Ok(round_int(x0, seed, norm.s(), norm.u())),
        SeedKind::BinXhat0 => round_bin(xhat0, seed, norm.s()),
        SeedKind::IntXhat0 => Ok(round_int(xhat0, seed, norm.s(), norm.u())),
        SeedKind::Relax => Err(Error::InvalidInstance(
            "the relax seed needs a relaxation point; use continuous_to_integer".into(),
        )),
    }
}

/// 2-swap local search. Scans pairs `(i, j)` with `xᵢ < uᵢ`, `xⱼ > 0`
/// against the current design; FI commits the first improving pair, FI⁺
/// the best `j` for the first improving `i`, BI the best pair overall.
/// Returns a design with no improving 2-swap.
pub fn local_search(
    norm: &Normalized,
    start: &Design,
    mode: Mode,
    strategy: Strategy,
    u: &[i64],
) -> Result<(Design, f64)> {
    let mut engine = EngineState::init(norm, start, strategy)?;
    let n = norm.n();
    loop {
        let z0 = engine.ldet();
        let mut best: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..n {
            if engine.x()[i] >= u[i] {
                continue;
            }
            let mut improved_i = false;
            for j in 0..n {
                if j == i || engine.x()[j] == 0 {
                    continue;
                }
                let z = engine.eval(i, j).ldet_new;
                if z > z0 + IMPROVE_EPS && best.is_none_or(|(_, _, bz)| z > bz) {
                    best = Some((i, j, z));
                    improved_i = true;
                    if mode == Mode::Fi {
                        break 'scan;
                    }
                }
            }
            if mode == Mode::FiPlus && improved_i {
                break;
            }
        }
        match best {
            Some((i, j, _)) => {
                engine.commit(i, j);
            }
            None => break,
        }
    }
    Ok((engine.design(), engine.ldet()))
}

/// One seed×mode run of the sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub seed: SeedKind,
    pub mode: Mode,
    pub design: Design,
    pub ldet: f64,
    pub seconds: f64,
}

/// Runs the 4-seed × 3-mode local-search sweep. With the `parallel`
/// feature (and `parallel = true`) the twelve runs fan out over rayon;
/// results are identical either way.
pub fn sweep_with(norm: &Normalized, strategy: Strategy, parallel: bool) -> Result<Vec<SweepEntry>> {
    let seed = select_independent_rows(norm)?;
    let x0 = leverage_scores(norm);
    let xhat0 = weighted_scores(norm);
    let mut jobs = Vec::new();
    for kind in SeedKind::SWEEP {
        for mode in Mode::ALL {
            jobs.push((kind, mode));
        }
    }
    let run = |&(kind, mode): &(SeedKind, Mode)| -> Result<SweepEntry> {
        let t0 = Instant::now();
        let start = seed_design(norm, kind, &seed, &x0, &xhat0)?;
        let (design, ldet) = local_search(norm, &start, mode, strategy, norm.u())?;
        Ok(SweepEntry {
            seed: kind,
            mode,
            design,
            ldet,
            seconds: t0.elapsed().as_secs_f64(),
        })
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return jobs.par_iter().map(run).collect();
    }
    let _ = parallel;
    jobs.iter().map(run).collect()
}

/// Sweep with the compile-time default parallelism.
pub fn sweep(norm: &Normalized, strategy: Strategy) -> Result<Vec<SweepEntry>> {
    sweep_with(norm, strategy, cfg!(feature = "parallel"))
}

/// Best entry of a sweep, ties resolved by enumeration order.
pub fn best_entry(entries: &[SweepEntry]) -> &SweepEntry {
    entries
        .iter()
        .reduce(|best, e| if e.ldet > best.ldet { e } else { best })
        .expect("sweep is never empty")
}
