//! Upper bounds on the 0/1 row expansion and duality-based
//! variable-bound tightening.
//!
//! Expanding row `i` of `A` into `uᵢ` copies turns the problem into
//! choosing `s` rows of `A_u`. The Hadamard bound sums `log(1 + φℓ²)`
//! over the `s` largest squared row norms; the spectral bound sums
//! `log(1 + σℓ²)` over the `s` largest squared singular values (zero
//! beyond `m`). Both are valid at every node when built from the node's
//! own upper bounds, which is the always-sound variant used here.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::instance::Normalized;
use crate::relaxation::DualCertificate;

/// Guard added to `ζ̂ − LB` before the divisions of the tightening rule;
/// absorbs round-off so a true optimum can never be cut by noise.
const GAP_SLACK: f64 = 1e-9;

/// Hadamard and spectral bounds for one node, with the sorted statistics
/// they are built from.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub hadamard: f64,
    pub spectral: f64,
    /// Squared row 2-norms of the expansion, sorted descending.
    pub row_norms: Vec<f64>,
    /// Squared singular values of the expansion, sorted descending.
    pub sing_vals: Vec<f64>,
}

impl BoundsReport {
    pub fn min(&self) -> f64 {
        self.hadamard.min(self.spectral)
    }
}

/// Bound-tightening outcome: the shrunken box plus how many inequalities
/// changed a bound and how many variables they fixed.
#[derive(Debug, Clone)]
pub struct TightenResult {
    pub new_l: Vec<i64>,
    pub new_u: Vec<i64>,
    pub n_tightened: usize,
    pub n_fixed: usize,
}

/// Repeats row `i` of `a` a total of `mult[i]` times.
pub fn expand_to_binary(a: &DMatrix<f64>, mult: &[i64]) -> DMatrix<f64> {
    let total: i64 = mult.iter().sum();
    let m = a.ncols();
    let mut out = DMatrix::zeros(total as usize, m);
    let mut r = 0;
    for (i, &c) in mult.iter().enumerate() {
        for _ in 0..c {
            out.row_mut(r).copy_from(&a.row(i));
            r += 1;
        }
    }
    out
}

/// `Σ_{ℓ≤s} log(1 + φℓ²)` over the `s` largest squared row norms.
pub fn hadamard_bound(a_u: &DMatrix<f64>, s: i64) -> f64 {
    let mut norms: Vec<f64> = (0..a_u.nrows()).map(|i| a_u.row(i).norm_squared()).collect();
    norms.sort_by(|a, b| b.total_cmp(a));
    norms.iter().take(s as usize).map(|&p| p.ln_1p()).sum()
}

/// `Σ_{ℓ≤s} log(1 + σℓ²)` with `σℓ = 0` beyond `m`; computed from the
/// eigenvalues of `A_uᵀA_u`, which are the squared singular values.
pub fn spectral_bound(a_u: &DMatrix<f64>, s: i64) -> f64 {
    let gram = a_u.transpose() * a_u;
    let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&e| e.max(0.0))
        .collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs.iter().take(s as usize).map(|&e| e.ln_1p()).sum()
}

/// Node-level report: the expansion uses the node's upper bounds plus the
/// fixed base multiplicities, and the sums run over `s + Σ fixed` terms so
/// the base repetitions are accounted for.
pub fn bounds_report(norm: &Normalized, u: &[i64]) -> BoundsReport {
    let mult: Vec<i64> = u.iter().zip(norm.fixed()).map(|(&u, &f)| u + f).collect();
    let s_eff = norm.s() + norm.fixed().iter().sum::<i64>();
    let a_u = expand_to_binary(norm.instance().a(), &mult);

    let mut row_norms: Vec<f64> = (0..a_u.nrows()).map(|i| a_u.row(i).norm_squared()).collect();
    row_norms.sort_by(|a, b| b.total_cmp(a));
    let hadamard = row_norms.iter().take(s_eff as usize).map(|&p| p.ln_1p()).sum();

    let gram = a_u.transpose() * &a_u;
    let mut sing_vals: Vec<f64> = nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&e| e.max(0.0))
        .collect();
    sing_vals.sort_by(|a, b| b.total_cmp(a));
    let spectral = sing_vals.iter().take(s_eff as usize).map(|&e| e.ln_1p()).sum();

    BoundsReport {
        hadamard,
        spectral,
        row_norms,
        sing_vals,
    }
}

/// Tightening rule without the crossing check: for `θ̂ₖ > 0` the upper
/// bound drops to `l′ₖ + ⌊gap/θ̂ₖ⌋`, for `λ̂ₖ > 0` the lower bound rises
/// to `u′ₖ − ⌊gap/λ̂ₖ⌋`, where `gap = max(0, ζ̂ − LB)`. The returned box
/// may be crossed; callers that need the error form use [`vbt_tighten`].
pub fn vbt_tighten_raw(
    l: &[i64],
    u: &[i64],
    lb: f64,
    dual: &DualCertificate,
) -> TightenResult {
    let n = l.len();
    let gap = (dual.zeta_hat - lb).max(0.0) + GAP_SLACK;
    let mut new_l = l.to_vec();
    let mut new_u = u.to_vec();
    let mut n_tightened = 0;
    let mut n_fixed = 0;
    for k in 0..n {
        let width = u[k] - l[k];
        if dual.theta[k] > 0.0 {
            let q = (gap / dual.theta[k]).floor();
            if q < width as f64 {
                let cand = l[k] + q as i64;
                if cand < new_u[k] {
                    new_u[k] = cand;
                    n_tightened += 1;
                }
            }
        }
        if dual.lambda[k] > 0.0 {
            let q = (gap / dual.lambda[k]).floor();
            if q < width as f64 {
                let cand = u[k] - q as i64;
                if cand > new_l[k] {
                    new_l[k] = cand;
                    n_tightened += 1;
                }
            }
        }
        if new_l[k] == new_u[k] && l[k] < u[k] {
            n_fixed += 1;
        }
    }
    TightenResult {
        new_l,
        new_u,
        n_tightened,
        n_fixed,
    }
}

/// Theorem-guarded tightening: every design at least as good as `LB`
/// inside the input box stays inside the output box. `EmptyBox` signals
/// that the node holds nothing better than the incumbent.
pub fn vbt_tighten(l: &[i64], u: &[i64], lb: f64, dual: &DualCertificate) -> Result<TightenResult> {
    let res = vbt_tighten_raw(l, u, lb, dual);
    for k in 0..l.len() {
        if res.new_l[k] > res.new_u[k] {
            return Err(Error::EmptyBox {
                index: k,
                lo: res.new_l[k],
                hi: res.new_u[k],
            });
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{normalize_to_zero_lower, Instance};
    use nalgebra::DMatrix;

    fn dual_with(theta: Vec<f64>, lambda: Vec<f64>, zeta_hat: f64) -> DualCertificate {
        let n = theta.len();
        DualCertificate {
            lambda_mat: DMatrix::identity(1, 1),
            lambda,
            theta,
            nu: 0.0,
            zeta_hat,
            c: vec![0.0; n],
        }
    }

    #[test]
    fn expansion_repeats_rows() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let e = expand_to_binary(&a, &[2, 1]);
        assert_eq!(e.nrows(), 3);
        assert_eq!(e.row(0), e.row(1));
        assert_eq!(e.row(2), a.row(1));
        let same = expand_to_binary(&a, &[1, 1]);
        assert_eq!(same, a);
    }

    #[test]
    fn hadamard_hand_example() {
        // rows e₁, e₂, (1,1); s = 2: norms² {1,1,2}, top-2 {2,1}.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let h = hadamard_bound(&a, 2);
        assert!((h - (3.0f64.ln() + 2.0f64.ln())).abs() < 1e-12);
        assert_eq!(hadamard_bound(&DMatrix::zeros(4, 2), 3), 0.0);
        // The integer optimum on that instance is 0; the bound is above it.
        assert!(h >= 0.0);
    }

    #[test]
    fn spectral_hand_example() {
        // Same rows: eig(AᵀA) = {3, 1} → log 4 + log 2.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let s = spectral_bound(&a, 2);
        assert!((s - (4.0f64.ln() + 2.0f64.ln())).abs() < 1e-10);
        assert!(s >= 0.0);

        // Orthonormal rows, s = m: m·log 2.
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((spectral_bound(&id, 3) - 3.0 * 2.0f64.ln()).abs() < 1e-10);
        // s beyond m only adds zero singular values.
        let tall = expand_to_binary(&id, &[2, 2, 1]);
        let expect = 3.0f64.ln() + 3.0f64.ln() + 2.0f64.ln();
        assert!((spectral_bound(&tall, 5) - expect).abs() < 1e-10);
    }

    #[test]
    fn node_report_covers_budget_terms() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let inst = Instance::new(a, vec![0, 0, 0], vec![1, 1, 1], 2).unwrap();
        let (norm, _, _) = normalize_to_zero_lower(&inst);
        let rep = bounds_report(&norm, norm.u());
        assert!((rep.hadamard - (3.0f64.ln() + 2.0f64.ln())).abs() < 1e-12);
        assert!((rep.spectral - (4.0f64.ln() + 2.0f64.ln())).abs() < 1e-10);
        assert!(rep.row_norms.windows(2).all(|w| w[0] >= w[1]));
        assert!(rep.sing_vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn tighten_zero_gap_fixes_at_lower() {
        let dual = dual_with(vec![0.3, 0.0], vec![0.0, 0.0], 5.0);
        let res = vbt_tighten(&[0, 0], &[3, 3], 5.0, &dual).unwrap();
        assert_eq!(res.new_u, vec![0, 3]);
        assert_eq!(res.new_l, vec![0, 0]);
        assert_eq!(res.n_tightened, 1);
        assert_eq!(res.n_fixed, 1);
    }

    #[test]
    fn tighten_floor_example() {
        // gap 0.7, θ = 0.3 → ⌊0.7/0.3⌋ = 2.
        let dual = dual_with(vec![0.3, 0.0], vec![0.0, 0.0], 5.7);
        let res = vbt_tighten(&[0, 0], &[5, 5], 5.0, &dual).unwrap();
        assert_eq!(res.new_u, vec![2, 5]);
    }

    #[test]
    fn tighten_respects_zero_multipliers() {
        let dual = dual_with(vec![0.0, 0.0], vec![0.0, 0.0], 5.0);
        let res = vbt_tighten(&[0, 1], &[3, 4], 5.0, &dual).unwrap();
        assert_eq!(res.new_l, vec![0, 1]);
        assert_eq!(res.new_u, vec![3, 4]);
        assert_eq!(res.n_tightened, 0);
    }

    #[test]
    fn tighten_monotone_in_lb_and_idempotent() {
        // One coordinate per multiplier, as the recovery construction
        // produces (λₖ and θₖ are never both positive).
        let dual = dual_with(vec![0.4, 0.0], vec![0.0, 0.5], 8.0);
        let weak = vbt_tighten(&[0, 0], &[6, 6], 6.0, &dual).unwrap();
        let strong = vbt_tighten(&[0, 0], &[6, 6], 7.5, &dual).unwrap();
        for k in 0..2 {
            assert!(strong.new_u[k] <= weak.new_u[k]);
            assert!(strong.new_l[k] >= weak.new_l[k]);
        }
        let twice = vbt_tighten(&weak.new_l, &weak.new_u, 6.0, &dual).unwrap();
        assert_eq!(twice.new_l, weak.new_l);
        assert_eq!(twice.new_u, weak.new_u);
        assert_eq!(twice.n_tightened, 0);
    }

    #[test]
    fn tighten_reports_empty_box() {
        // λ large forces l up while θ forces u down past it.
        let dual = dual_with(vec![1000.0, 0.0], vec![1000.0, 0.0], 5.0);
        match vbt_tighten(&[0, 0], &[4, 4], 5.0, &dual) {
            Err(Error::EmptyBox { index: 0, .. }) => {}
            other => panic!("expected EmptyBox, got {other:?}"),
        }
    }
}
