//! Continuous relaxation and its Lagrangian dual.
//!
//! The relaxation `max { ldet(base + AᵀDiag(x)A) : eᵀx = s, l ≤ x ≤ u }`
//! is solved by Frank–Wolfe with exact line search: the gradient is
//! `gᵢ = vᵢᵀB(x)⁻¹vᵢ`, the linear maximization over the capped simplex is
//! a greedy fill, and the 1-D profile along the step direction is
//! maximized exactly through a generalized eigendecomposition.
//!
//! A feasible dual point comes for free from any strictly feasible `x`:
//! `Λ = B(x)⁻¹` satisfies the dual constraint with `λᵢ = max(0, cᵢ − ν)`,
//! `θᵢ = max(0, ν − cᵢ)` for every `ν`; `ν` is chosen to minimize the
//! piecewise-linear dual objective over its breakpoints. The resulting
//! value `ζ̂` upper-bounds the subproblem by weak duality, and it equals
//! the Frank–Wolfe gap added to the primal value, so it doubles as the
//! stopping rule.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::instance::{weighted_gram, Normalized};
use crate::linalg::cholesky_ldet;

/// Solution of the continuous relaxation at one node.
#[derive(Debug, Clone)]
pub struct RelaxSolution {
    pub x: Vec<f64>,
    pub z_primal: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Feasible point of the Lagrangian dual: `(Λ, λ, θ, ν)` with value
/// `ζ̂ = −ldet Λ + λᵀu − θᵀl + νs − m` (plus `Λ•base` when the instance
/// carries fixed repetitions). `ζ̂` is a certified upper bound.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub lambda_mat: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub nu: f64,
    pub zeta_hat: f64,
    /// `cᵢ = vᵢᵀ Λ vᵢ`, kept for residual checks.
    pub c: Vec<f64>,
}

impl DualCertificate {
    /// Largest violation of `Λ•vᵢvᵢᵀ − λᵢ + θᵢ − ν = 0`.
    pub fn max_residual(&self, norm: &Normalized) -> f64 {
        let a = norm.instance().a();
        (0..norm.n())
            .map(|i| {
                let v = a.row(i).transpose();
                let c = v.dot(&(&self.lambda_mat * &v));
                (c - self.lambda[i] + self.theta[i] - self.nu).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Options for the Frank–Wolfe loop. `cutoff` lets branch-and-bound abort
/// a node early once the running dual value proves it prunable.
#[derive(Debug, Clone)]
pub struct FwOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub cutoff: Option<f64>,
    pub start: Option<Vec<f64>>,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 5000,
            cutoff: None,
            start: None,
        }
    }
}

/// Maximizes `gᵀy` over `{eᵀy = s, l ≤ y ≤ u}`: start at `l` and raise
/// coordinates to `u` in descending-`g` order (ties by lowest index).
/// With integer data the output is integer, and every coordinate sits at
/// a bound except possibly the last one filled.
pub fn lmo_capped_simplex(g: &[f64], l: &[i64], u: &[i64], s: i64) -> Vec<f64> {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut y: Vec<i64> = l.to_vec();
    let mut rem: i64 = s - l.iter().sum::<i64>();
    debug_assert!(rem >= 0);
    for idx in order {
        if rem == 0 {
            break;
        }
        let take = (u[idx] - l[idx]).min(rem);
        y[idx] += take;
        rem -= take;
    }
    debug_assert_eq!(rem, 0, "eᵀu ≥ s required");
    y.into_iter().map(|v| v as f64).collect()
}

/// `gᵢ = vᵢᵀ B(x)⁻¹ vᵢ`, or `None` when `B(x)` is singular.
pub fn gradient(norm: &Normalized, x: &[f64]) -> Option<Vec<f64>> {
    let b = norm.info_matrix_real(x);
    let (l, _) = cholesky_ldet(&b)?;
    Some(gradient_from_factor(norm, &l))
}

fn gradient_from_factor(norm: &Normalized, l: &DMatrix<f64>) -> Vec<f64> {
    // g = squared column norms of L⁻¹Aᵀ.
    let at = norm.instance().a().transpose();
    let w = l
        .solve_lower_triangular(&at)
        .expect("factor has positive diagonal");
    (0..norm.n()).map(|i| w.column(i).norm_squared()).collect()
}

/// Minimizes `f(ν) = Σ uᵢ·max(0, cᵢ−ν) + Σ lᵢ·max(0, ν−cᵢ) + νs` over
/// its breakpoints; returns `(ν, f(ν))`.
fn minimize_nu(c: &[f64], l: &[i64], u: &[i64], s: i64) -> (f64, f64) {
    let n = c.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
    // Prefix sums over the sorted order: l-terms below, u-terms at-or-above.
    let mut suf_u = vec![0.0; n + 1];
    let mut suf_uc = vec![0.0; n + 1];
    for t in (0..n).rev() {
        let k = order[t];
        suf_u[t] = suf_u[t + 1] + u[k] as f64;
        suf_uc[t] = suf_uc[t + 1] + u[k] as f64 * c[k];
    }
    let mut pre_l = 0.0;
    let mut pre_lc = 0.0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for t in 0..n {
        let k = order[t];
        let nu = c[k];
        let f = (suf_uc[t] - nu * suf_u[t]) + (nu * pre_l - pre_lc) + nu * s as f64;
        if f < best.1 {
            best = (nu, f);
        }
        pre_l += l[k] as f64;
        pre_lc += l[k] as f64 * c[k];
    }
    best
}

/// Dual value at a point with objective `z` and gradient `c`, using the
/// closed-form multipliers. The base term `Λ•base = Σ fixedℓ cℓ` keeps
/// the bound valid when fixed repetitions are present.
fn zeta_from_gradient(norm: &Normalized, z: f64, c: &[f64], l: &[i64], u: &[i64]) -> (f64, f64) {
    let (nu, f_nu) = minimize_nu(c, l, u, norm.s());
    let base_term: f64 = norm
        .fixed()
        .iter()
        .zip(c)
        .map(|(&f, &ci)| f as f64 * ci)
        .sum();
    (nu, z + f_nu - norm.m() as f64 + base_term)
}

/// Recovers a feasible dual point at `xc`: `Λ = B(xc)⁻¹`, breakpoint-
/// optimal `ν`, and the thresholded multipliers. Exact dual feasibility
/// holds by construction.
pub fn recover_dual(
    norm: &Normalized,
    l: &[i64],
    u: &[i64],
    xc: &[f64],
) -> Result<DualCertificate> {
    let b = norm.info_matrix_real(xc);
    let (lf, ldet) = cholesky_ldet(&b).ok_or(Error::SingularPoint)?;
    let m = norm.m();
    let linv = lf
        .solve_lower_triangular(&DMatrix::identity(m, m))
        .ok_or(Error::SingularPoint)?;
    let lambda_mat = linv.transpose() * &linv;
    let c = gradient_from_factor(norm, &lf);
    let (nu, zeta_hat) = zeta_from_gradient(norm, ldet, &c, l, u);
    let lambda: Vec<f64> = c.iter().map(|&ci| (ci - nu).max(0.0)).collect();
    let theta: Vec<f64> = c.iter().map(|&ci| (nu - ci).max(0.0)).collect();
    Ok(DualCertificate {
        lambda_mat,
        lambda,
        theta,
        nu,
        zeta_hat,
        c,
    })
}

/// Exact maximization of `γ ↦ ldet(B + γC)` over `[0, 1]`, given the
/// Cholesky factor of `B`. The profile is `Σ log(1 + γμₖ)` over the
/// eigenvalues of `L⁻¹CL⁻ᵀ`; its derivative is monotone, so a bisection
/// on the derivative is exact to machine precision.
fn exact_line_search(lf: &DMatrix<f64>, c_mat: &DMatrix<f64>) -> f64 {
    let tmp = lf
        .solve_lower_triangular(c_mat)
        .expect("factor has positive diagonal");
    let m_mat = lf
        .solve_lower_triangular(&tmp.transpose())
        .expect("factor has positive diagonal");
    let sym = (&m_mat + m_mat.transpose()) * 0.5;
    let mu = nalgebra::SymmetricEigen::new(sym).eigenvalues;

    let mut cap = 1.0f64;
    for &e in mu.iter() {
        if e < 0.0 {
            cap = cap.min(-(1.0 - 1e-9) / e);
        }
    }
    if cap <= 0.0 {
        return 0.0;
    }
    let dphi = |g: f64| -> f64 { mu.iter().map(|&e| e / (1.0 + g * e)).sum() };
    if dphi(cap) >= 0.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn interior_start(l: &[i64], u: &[i64], s: i64) -> Vec<f64> {
    let span: i64 = l.iter().zip(u).map(|(&lo, &hi)| hi - lo).sum();
    let rem = s - l.iter().sum::<i64>();
    if span == 0 {
        return l.iter().map(|&v| v as f64).collect();
    }
    let frac = rem as f64 / span as f64;
    l.iter()
        .zip(u)
        .map(|(&lo, &hi)| lo as f64 + frac * (hi - lo) as f64)
        .collect()
}

/// Repairs a warm-start point into the node box while keeping the budget.
fn clamp_into_box(x: &[f64], l: &[i64], u: &[i64], s: i64) -> Option<Vec<f64>> {
    let mut y: Vec<f64> = x
        .iter()
        .zip(l.iter().zip(u))
        .map(|(&v, (&lo, &hi))| v.clamp(lo as f64, hi as f64))
        .collect();
    for _ in 0..64 {
        let short: f64 = s as f64 - y.iter().sum::<f64>();
        if short.abs() < 1e-12 {
            return Some(y);
        }
        let slack: f64 = if short > 0.0 {
            y.iter().zip(u).map(|(&v, &hi)| hi as f64 - v).sum()
        } else {
            y.iter().zip(l).map(|(&v, &lo)| v - lo as f64).sum()
        };
        if slack <= 1e-15 {
            return None;
        }
        let f = short / slack;
        for (v, (&lo, &hi)) in y.iter_mut().zip(l.iter().zip(u)) {
            if short > 0.0 {
                *v += f * (hi as f64 - *v);
            } else {
                *v += f * (*v - lo as f64);
            }
            *v = v.clamp(lo as f64, hi as f64);
        }
    }
    None
}

/// Frank–Wolfe on the node `{eᵀx = s, l ≤ x ≤ u}`; returns the primal
/// point and the dual certificate recovered at it.
pub fn solve_with_options(
    norm: &Normalized,
    l: &[i64],
    u: &[i64],
    opts: &FwOptions,
) -> Result<(RelaxSolution, DualCertificate)> {
    let mut x = opts
        .start
        .as_ref()
        .and_then(|w| clamp_into_box(w, l, u, norm.s()))
        .unwrap_or_else(|| interior_start(l, u, norm.s()));
    let mut factored = match cholesky_ldet(&norm.info_matrix_real(&x)) {
        Some(ok) => ok,
        None => {
            // A failed warm start may still leave a viable interior start.
            x = interior_start(l, u, norm.s());
            cholesky_ldet(&norm.info_matrix_real(&x)).ok_or(Error::NoInteriorStart)?
        }
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let (lf, z) = &factored;
        let g = gradient_from_factor(norm, lf);
        let (_, zeta) = zeta_from_gradient(norm, *z, &g, l, u);
        let gap = zeta - z;
        if gap <= opts.tol * z.abs().max(1.0) {
            converged = true;
            break;
        }
        if let Some(cut) = opts.cutoff {
            if zeta <= cut {
                break;
            }
        }
        let y = lmo_capped_simplex(&g, l, u, norm.s());
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let c_mat = weighted_gram(norm.instance().a(), &d);
        let gamma = exact_line_search(lf, &c_mat);
        if gamma <= 0.0 {
            break;
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += gamma * di;
        }
        for (xi, (&lo, &hi)) in x.iter_mut().zip(l.iter().zip(u)) {
            *xi = xi.clamp(lo as f64, hi as f64);
        }
        match cholesky_ldet(&norm.info_matrix_real(&x)) {
            Some(next) => factored = next,
            None => break,
        }
    }
    let z_primal = factored.1;
    let dual = recover_dual(norm, l, u, &x)?;
    Ok((
        RelaxSolution {
            x,
            z_primal,
            iterations,
            converged,
        },
        dual,
    ))
}

/// Spec-level entry point: solve the relaxation on the given bounds.
pub fn solve_relaxation(
    norm: &Normalized,
    l: &[i64],
    u: &[i64],
    tol: f64,
    max_iters: usize,
) -> Result<RelaxSolution> {
    let opts = FwOptions {
        tol,
        max_iters,
        ..FwOptions::default()
    };
    solve_with_options(norm, l, u, &opts).map(|(sol, _)| sol)
}
