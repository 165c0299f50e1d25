//! Dense kernels shared by the determinant engines: a tolerance-aware
//! Cholesky, rank-one factor updates and downdates, and a full Householder
//! QR with its Givens-based rank-one update.

use nalgebra::{DMatrix, DVector};

/// A pivot, eigenvalue, or singular value below this fraction of the
/// largest one is treated as zero (the matrix as singular).
pub const SINGULARITY_RTOL: f64 = 1e-10;

/// Lower Cholesky factor of a symmetric positive-definite matrix together
/// with `ldet B = 2 Σ log Lᵢᵢ`. Returns `None` when a pivot falls below
/// `SINGULARITY_RTOL` times the largest diagonal entry of `b`.
pub fn cholesky_ldet(b: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let m = b.nrows();
    debug_assert_eq!(m, b.ncols());
    let scale = (0..m).map(|i| b[(i, i)]).fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let tol = SINGULARITY_RTOL * scale;
    let mut l = DMatrix::zeros(m, m);
    let mut ldet = 0.0;
    for j in 0..m {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        ldet += 2.0 * dj.ln();
        for i in j + 1..m {
            let mut v = b[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some((l, ldet))
}

/// `ldet` of the triangular factor: `2 Σ log |diag|`, or `-∞` when the
/// smallest diagonal entry is below tolerance relative to the largest.
pub fn ldet_from_diag(diag: impl Iterator<Item = f64> + Clone) -> f64 {
    let largest = diag.clone().map(f64::abs).fold(0.0f64, f64::max);
    if !(largest > 0.0) {
        return f64::NEG_INFINITY;
    }
    let tol = SINGULARITY_RTOL * largest;
    let mut ldet = 0.0;
    for d in diag {
        let a = d.abs();
        if a <= tol {
            return f64::NEG_INFINITY;
        }
        ldet += 2.0 * a.ln();
    }
    ldet
}

/// In-place rank-one update of a lower Cholesky factor:
/// `L̃L̃ᵀ = LLᵀ + wwᵀ`, by Givens rotations on the columns of `[L w]`.
pub fn chol_update(l: &mut DMatrix<f64>, w: &mut DVector<f64>) {
    let m = w.len();
    for j in 0..m {
        let ljj = l[(j, j)];
        let wj = w[j];
        if wj == 0.0 {
            continue;
        }
        let r = ljj.hypot(wj);
        let c = ljj / r;
        let s = wj / r;
        l[(j, j)] = r;
        for k in j + 1..m {
            let lkj = l[(k, j)];
            l[(k, j)] = c * lkj + s * w[k];
            w[k] = -s * lkj + c * w[k];
        }
    }
}

/// In-place rank-one downdate: `L̂L̂ᵀ = LLᵀ − wwᵀ`, by hyperbolic
/// rotations. Returns `false` (leaving `l` partially modified) when a
/// pivot becomes non-positive under tolerance, i.e. the downdated matrix
/// is not positive definite.
pub fn chol_downdate(l: &mut DMatrix<f64>, w: &mut DVector<f64>) -> bool {
    let m = w.len();
    for j in 0..m {
        let ljj = l[(j, j)];
        let wj = w[j];
        let d = ljj * ljj - wj * wj;
        if d <= SINGULARITY_RTOL * ljj * ljj {
            return false;
        }
        let r = d.sqrt();
        let c = r / ljj;
        let s = wj / ljj;
        l[(j, j)] = r;
        for k in j + 1..m {
            let lkj = l[(k, j)];
            let wk = w[k];
            l[(k, j)] = (lkj - s * wk) / c;
            w[k] = (wk - s * lkj) / c;
        }
    }
    true
}

/// Full Householder QR of a tall `s×m` matrix (`s ≥ m`): `a = Q R` with
/// `Q` square `s×s` orthonormal and `R` upper triangular `s×m`.
pub fn qr_full(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = a.nrows();
    let m = a.ncols();
    assert!(s >= m, "qr_full expects a tall matrix");
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(s, s);
    let mut v = vec![0.0; s];
    for k in 0..m {
        let mut norm2 = 0.0;
        for i in k..s {
            norm2 += r[(i, k)] * r[(i, k)];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        v[k] = r[(k, k)] - alpha;
        for i in k + 1..s {
            v[i] = r[(i, k)];
        }
        let mut vtv = 0.0;
        for i in k..s {
            vtv += v[i] * v[i];
        }
        if vtv == 0.0 {
            continue;
        }
        // R ← (I − 2vvᵀ/vᵀv) R on columns k..m
        for j in k..m {
            let mut dot = 0.0;
            for i in k..s {
                dot += v[i] * r[(i, j)];
            }
            let f = 2.0 * dot / vtv;
            for i in k..s {
                r[(i, j)] -= f * v[i];
            }
        }
        // Q ← Q (I − 2vvᵀ/vᵀv)
        for row in 0..s {
            let mut dot = 0.0;
            for i in k..s {
                dot += q[(row, i)] * v[i];
            }
            let f = 2.0 * dot / vtv;
            for i in k..s {
                q[(row, i)] -= f * v[i];
            }
        }
    }
    // Clear round-off below the diagonal.
    for j in 0..m {
        for i in j + 1..s {
            r[(i, j)] = 0.0;
        }
    }
    (q, r)
}

/// Givens pair `(c, s)` with `c·a + s·b = hypot(a, b)` and `−s·a + c·b = 0`.
#[inline]
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// In-place QR rank-one update for a row replacement: given `A = QR`
/// (`Q` `s×s`, `R` `s×m` upper triangular), restores the factorization of
/// `A + e_row vᵀ`. Two sweeps of Givens rotations: the first reduces
/// `w = Qᵀe_row` to a multiple of `e₁` (making `R` upper Hessenberg), the
/// second restores the triangle after the rank-one term is folded into the
/// first row. `O(s²)` when `Q` is carried along.
pub fn qr_rank_one_update(q: &mut DMatrix<f64>, r: &mut DMatrix<f64>, row: usize, v: &DVector<f64>) {
    let s = q.nrows();
    let m = r.ncols();
    let mut w: Vec<f64> = (0..s).map(|k| q[(row, k)]).collect();
    for k in (0..s - 1).rev() {
        if w[k + 1] == 0.0 {
            continue;
        }
        let (c, sn) = givens(w[k], w[k + 1]);
        w[k] = c * w[k] + sn * w[k + 1];
        w[k + 1] = 0.0;
        // Rows k, k+1 of R carry entries only in columns ≥ k.
        if k < m {
            for j in k..m {
                let a = r[(k, j)];
                let b = r[(k + 1, j)];
                r[(k, j)] = c * a + sn * b;
                r[(k + 1, j)] = -sn * a + c * b;
            }
        }
        for i in 0..s {
            let a = q[(i, k)];
            let b = q[(i, k + 1)];
            q[(i, k)] = c * a + sn * b;
            q[(i, k + 1)] = -sn * a + c * b;
        }
    }
    for j in 0..m {
        r[(0, j)] += w[0] * v[j];
    }
    for k in 0..m.min(s - 1) {
        if r[(k + 1, k)] == 0.0 {
            continue;
        }
        let (c, sn) = givens(r[(k, k)], r[(k + 1, k)]);
        for j in k..m {
            let a = r[(k, j)];
            let b = r[(k + 1, j)];
            r[(k, j)] = c * a + sn * b;
            r[(k + 1, j)] = -sn * a + c * b;
        }
        r[(k + 1, k)] = 0.0;
        for i in 0..s {
            let a = q[(i, k)];
            let b = q[(i, k + 1)];
            q[(i, k)] = c * a + sn * b;
            q[(i, k + 1)] = -sn * a + c * b;
        }
    }
}

/// Matrix-determinant-lemma factor `1 + bᵀ M⁻¹ a` given the explicit
/// inverse of `M`.
pub fn det_lemma_factor(minv: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    1.0 + b.dot(&(minv * a))
}

/// Greedy pivoted selection of the first `want` linearly independent rows
/// of `a`, scanning in natural order (modified Gram–Schmidt against the
/// already-selected rows).
pub fn independent_rows(a: &DMatrix<f64>, want: usize) -> Option<Vec<usize>> {
    let n = a.nrows();
    let m = a.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(want);
    let mut picked = Vec::with_capacity(want);
    for row in 0..n {
        if picked.len() == want {
            break;
        }
        let mut r: DVector<f64> = a.row(row).transpose();
        let norm0 = r.norm();
        if norm0 == 0.0 {
            continue;
        }
        for b in &basis {
            let proj = r.dot(b);
            r.axpy(-proj, b, 1.0);
        }
        // Second pass for numerical robustness.
        for b in &basis {
            let proj = r.dot(b);
            r.axpy(-proj, b, 1.0);
        }
        let norm = r.norm();
        if norm > 1e-10 * norm0 {
            r /= norm;
            basis.push(r);
            picked.push(row);
        }
    }
    debug_assert!(m >= want || picked.len() < want);
    (picked.len() == want).then_some(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(2 * m, m, |_, _| rng.random::<f64>() - 0.5);
        a.transpose() * a + DMatrix::identity(m, m) * 0.1
    }

    #[test]
    fn cholesky_matches_direct_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b = random_spd(6, &mut rng);
            let (l, ldet) = cholesky_ldet(&b).unwrap();
            assert_abs_diff_eq!(&l * l.transpose(), b.clone(), epsilon = 1e-10);
            assert_abs_diff_eq!(ldet, b.determinant().ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_ldet(&b).is_none());
        assert!(cholesky_ldet(&DMatrix::zeros(3, 3)).is_none());
    }

    #[test]
    fn update_then_downdate_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = random_spd(5, &mut rng);
            let (l0, _) = cholesky_ldet(&b).unwrap();
            let w = DVector::from_fn(5, |_, _| rng.random::<f64>() - 0.5);

            let mut l = l0.clone();
            chol_update(&mut l, &mut w.clone());
            let expected = &b + &w * w.transpose();
            assert_abs_diff_eq!(&l * l.transpose(), expected, epsilon = 1e-9);

            assert!(chol_downdate(&mut l, &mut w.clone()));
            assert_abs_diff_eq!(&l * l.transpose(), b.clone(), epsilon = 1e-8);
        }
    }

    #[test]
    fn downdate_detects_indefinite() {
        let (mut l, _) = cholesky_ldet(&DMatrix::identity(2, 2)).unwrap();
        let mut w = DVector::from_vec(vec![0.0, 1.0]);
        assert!(!chol_downdate(&mut l, &mut w));
    }

    #[test]
    fn full_qr_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(7, 4, |_, _| rng.random::<f64>() - 0.5);
        let (q, r) = qr_full(&a);
        assert_abs_diff_eq!(&q * &r, a.clone(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            &q * q.transpose(),
            DMatrix::identity(7, 7),
            epsilon = 1e-10
        );
        for j in 0..4 {
            for i in j + 1..7 {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_update_tracks_row_replacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let a = DMatrix::from_fn(6, 3, |_, _| rng.random::<f64>() - 0.5);
            let (mut q, mut r) = qr_full(&a);
            let v = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
            let row = rng.random_range(0..6);
            qr_rank_one_update(&mut q, &mut r, row, &v);
            let mut expected = a.clone();
            for j in 0..3 {
                expected[(row, j)] += v[j];
            }
            assert_abs_diff_eq!(&q * &r, expected, epsilon = 1e-9);
            assert_abs_diff_eq!(
                &q * q.transpose(),
                DMatrix::identity(6, 6),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn det_lemma_unit_case() {
        // M = I₂, a = b = (1,1)ᵀ: det(M + abᵀ) = 1 + aᵀa = 3.
        let minv = DMatrix::identity(2, 2);
        let a = DVector::from_vec(vec![1.0, 1.0]);
        assert_abs_diff_eq!(det_lemma_factor(&minv, &a, &a), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn independent_rows_picks_first_basis() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        assert_eq!(independent_rows(&a, 2).unwrap(), vec![0, 2]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(independent_rows(&id, 3).unwrap(), vec![0, 1, 2]);
        let rank1 = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(independent_rows(&rank1, 2).is_none());
    }
}
