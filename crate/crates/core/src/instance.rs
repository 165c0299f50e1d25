//! Problem data: instances, designs, random generation, text I/O, and the
//! reduction to zero lower bounds.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Problem data for the integer D-optimality problem: `n` candidate row
/// vectors `vℓ ∈ ℝᵐ` (the rows of `a`), integer repetition bounds
/// `l ≤ x ≤ u`, and a total budget `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    m: usize,
    a: DMatrix<f64>,
    l: Vec<i64>,
    u: Vec<i64>,
    s: i64,
}

/// An integer repetition vector. Feasible when `l ≤ x ≤ u` and `eᵀx = s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub x: Vec<i64>,
}

impl Design {
    pub fn budget(&self) -> i64 {
        self.x.iter().sum()
    }

    pub fn is_feasible(&self, l: &[i64], u: &[i64], s: i64) -> bool {
        self.x.len() == l.len()
            && self.budget() == s
            && self.x.iter().zip(l).all(|(&x, &lo)| x >= lo)
            && self.x.iter().zip(u).all(|(&x, &hi)| x <= hi)
    }
}

impl Instance {
    /// Validates everything except the rank of `a`, which callers check
    /// separately (it is a warning on load, an error in the generator).
    pub fn new(a: DMatrix<f64>, l: Vec<i64>, u: Vec<i64>, s: i64) -> Result<Self> {
        let n = a.nrows();
        let m = a.ncols();
        if n == 0 || m == 0 || n < m {
            return Err(Error::InvalidInstance(format!(
                "need n ≥ m ≥ 1, got n={n}, m={m}"
            )));
        }
        if l.len() != n || u.len() != n {
            return Err(Error::InvalidInstance(format!(
                "bound vectors must have length n={n}"
            )));
        }
        if let Some(k) = (0..n).find(|&k| l[k] < 0 || l[k] >= u[k]) {
            return Err(Error::InvalidInstance(format!(
                "bounds must satisfy 0 ≤ l < u; violated at index {k}: l={}, u={}",
                l[k], u[k]
            )));
        }
        let sum_l: i64 = l.iter().sum();
        let sum_u: i64 = u.iter().sum();
        if s < sum_l || s > sum_u {
            return Err(Error::InvalidInstance(format!(
                "budget s={s} outside [eᵀl, eᵀu] = [{sum_l}, {sum_u}]"
            )));
        }
        if s < m as i64 {
            return Err(Error::InvalidInstance(format!(
                "budget s={s} below design dimension m={m}"
            )));
        }
        Ok(Self { n, m, a, l, u, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Row `ℓ` of `a` as a column vector `vℓ`.
    pub fn row(&self, l: usize) -> DVector<f64> {
        self.a.row(l).transpose()
    }

    pub fn l(&self) -> &[i64] {
        &self.l
    }

    pub fn u(&self) -> &[i64] {
        &self.u
    }

    pub fn s(&self) -> i64 {
        self.s
    }

    pub fn has_full_rank(&self) -> bool {
        linalg::independent_rows(&self.a, self.m).is_some()
    }
}

/// An instance reduced to `l = 0` plus the row multiplicities that were
/// shifted out. The fixed multiplicities contribute
/// `base = Σ fixedℓ vℓvℓᵀ` to every information matrix, so the objective
/// of the reduced problem at `x` equals the original objective at
/// `x + fixed`.
#[derive(Debug, Clone)]
pub struct Normalized {
    inst: Instance,
    fixed: Vec<i64>,
}

impl Normalized {
    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn n(&self) -> usize {
        self.inst.n
    }

    pub fn m(&self) -> usize {
        self.inst.m
    }

    pub fn s(&self) -> i64 {
        self.inst.s
    }

    pub fn u(&self) -> &[i64] {
        &self.inst.u
    }

    /// Row multiplicities fixed into every design (the original `l`).
    pub fn fixed(&self) -> &[i64] {
        &self.fixed
    }

    pub fn has_base(&self) -> bool {
        self.fixed.iter().any(|&f| f > 0)
    }

    /// The base matrix `Σ fixedℓ vℓvℓᵀ`.
    pub fn base_matrix(&self) -> DMatrix<f64> {
        let weights: Vec<f64> = self.fixed.iter().map(|&f| f as f64).collect();
        weighted_gram(&self.inst.a, &weights)
    }

    /// `base + AᵀDiag(x)A` for an integer design of the reduced problem.
    pub fn info_matrix_int(&self, x: &[i64]) -> DMatrix<f64> {
        let weights: Vec<f64> = x
            .iter()
            .zip(&self.fixed)
            .map(|(&x, &f)| (x + f) as f64)
            .collect();
        weighted_gram(&self.inst.a, &weights)
    }

    /// `base + AᵀDiag(x)A` for a fractional point of the reduced problem.
    pub fn info_matrix_real(&self, x: &[f64]) -> DMatrix<f64> {
        let weights: Vec<f64> = x
            .iter()
            .zip(&self.fixed)
            .map(|(&x, &f)| x + f as f64)
            .collect();
        weighted_gram(&self.inst.a, &weights)
    }

    /// Total multiplicity `xℓ + fixedℓ` per row; the stacked matrix used
    /// by the SVD and QR engines repeats row `ℓ` this many times.
    pub fn stack_counts(&self, x: &[i64]) -> Vec<i64> {
        x.iter().zip(&self.fixed).map(|(&x, &f)| x + f).collect()
    }

    /// Maps a design of the reduced problem back to the original one.
    pub fn recover(&self, x: &Design) -> Design {
        Design {
            x: x.x.iter().zip(&self.fixed).map(|(&x, &f)| x + f).collect(),
        }
    }
}

/// `AᵀDiag(w)A`, skipping zero weights.
pub fn weighted_gram(a: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let m = a.ncols();
    let mut b = DMatrix::zeros(m, m);
    for (l, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = a.row(l);
        for p in 0..m {
            let vp = w * row[p];
            for q in p..m {
                b[(p, q)] += vp * row[q];
            }
        }
    }
    for p in 0..m {
        for q in 0..p {
            b[(p, q)] = b[(q, p)];
        }
    }
    b
}

/// Shifts the lower bounds to zero: bounds become `u − l`, the budget
/// `s − eᵀl`, and the shifted-out repetitions are carried as a base term
/// in every information matrix. Also returns the base matrix and the
/// shifted budget. Solving the reduced problem and adding `l` back yields
/// an optimum of the original.
pub fn normalize_to_zero_lower(inst: &Instance) -> (Normalized, DMatrix<f64>, i64) {
    let fixed = inst.l.clone();
    let sum_l: i64 = fixed.iter().sum();
    let u: Vec<i64> = inst.u.iter().zip(&fixed).map(|(&u, &l)| u - l).collect();
    let s = inst.s - sum_l;
    let reduced = Instance {
        n: inst.n,
        m: inst.m,
        a: inst.a.clone(),
        l: vec![0; inst.n],
        u,
        s,
    };
    let norm = Normalized {
        inst: reduced,
        fixed,
    };
    let base = norm.base_matrix();
    (norm, base, s)
}

const GEN_ATTEMPTS: usize = 100;

/// Random instance following the experimental recipe: `m = ⌊0.25 n⌋`,
/// `s = ⌊0.5 n⌋`, `l = 0`, `uᵢ` uniform on `{1,…,u_max}`, and `A` sparse
/// with each entry nonzero with probability `density` and uniform on
/// `(0,1)`, redrawn until it has full column rank. Deterministic for a
/// fixed seed.
pub fn generate_random(n: usize, seed: u64, density: f64, u_max: i64) -> Result<Instance> {
    if n < 8 {
        return Err(Error::InvalidInstance(format!("need n ≥ 8, got {n}")));
    }
    generate_with_dims(n, n / 4, (n / 2) as i64, seed, density, u_max)
}

/// Same recipe with explicit `m` and `s` (used by the engine benchmarks,
/// which vary the dimensions independently).
pub fn generate_with_dims(
    n: usize,
    m: usize,
    s: i64,
    seed: u64,
    density: f64,
    u_max: i64,
) -> Result<Instance> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "density must be in (0, 1], got {density}"
        )));
    }
    if u_max < 1 {
        return Err(Error::InvalidInstance(format!(
            "u_max must be ≥ 1, got {u_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<i64> = (0..n).map(|_| rng.random_range(1..=u_max)).collect();
    for _ in 0..GEN_ATTEMPTS {
        let mut a = DMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                if rng.random::<f64>() < density {
                    a[(i, j)] = rng.random::<f64>();
                }
            }
        }
        if linalg::independent_rows(&a, m).is_some() {
            return Instance::new(a, vec![0; n], u, s);
        }
    }
    Err(Error::GenerationFailed {
        attempts: GEN_ATTEMPTS,
    })
}

/// Text format: line 1 `n m s`; line 2 the `n` lower bounds; line 3 the
/// `n` upper bounds; then `n` lines of `m` reals (full precision).
pub fn save(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{} {} {}", inst.n, inst.m, inst.s).unwrap();
    let ints = |v: &[i64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "{}", ints(&inst.l)).unwrap();
    writeln!(out, "{}", ints(&inst.u)).unwrap();
    for i in 0..inst.n {
        let row = (0..inst.m)
            .map(|j| format!("{:.17e}", inst.a[(i, j)]))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "{row}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(&path)?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Instance> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty instance file".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::Parse(format!(
            "header must be `n m s`, got {header:?}"
        )));
    }
    let n: usize = head[0]
        .parse()
        .map_err(|e| Error::Parse(format!("bad n: {e}")))?;
    let m: usize = head[1]
        .parse()
        .map_err(|e| Error::Parse(format!("bad m: {e}")))?;
    let s: i64 = head[2]
        .parse()
        .map_err(|e| Error::Parse(format!("bad s: {e}")))?;

    let mut int_line = |name: &str| -> Result<Vec<i64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {name} line")))?;
        let v: std::result::Result<Vec<i64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let v = v.map_err(|e| Error::Parse(format!("bad {name} entry: {e}")))?;
        if v.len() != n {
            return Err(Error::Parse(format!(
                "{name} has {} entries, expected n={n}",
                v.len()
            )));
        }
        Ok(v)
    };
    let l = int_line("l")?;
    let u = int_line("u")?;

    let mut a = DMatrix::zeros(n, m);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing row {} of A", i + 1)))?;
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| Error::Parse(format!("bad real in row {}: {e}", i + 1)))?;
        if vals.len() != m {
            return Err(Error::Parse(format!(
                "row {} has {} entries, expected m={m}",
                i + 1,
                vals.len()
            )));
        }
        for j in 0..m {
            a[(i, j)] = vals[j];
        }
    }
    let inst = Instance::new(a, l, u, s)?;
    if !inst.has_full_rank() {
        log::warn!(
            "loaded instance does not have full column rank (n={}, m={}); \
             downstream solves will report singular objectives",
            inst.n,
            inst.m
        );
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnb::brute_force_optimum;
    use proptest::prelude::*;

    #[test]
    fn generator_follows_recipe() {
        let inst = generate_random(20, 1, 0.5, 3).unwrap();
        assert_eq!(inst.m(), 5);
        assert_eq!(inst.s(), 10);
        assert!(inst.l().iter().all(|&l| l == 0));
        assert!(inst.u().iter().all(|&u| (1..=3).contains(&u)));
        assert!(inst.has_full_rank());

        let binary = generate_random(8, 7, 1.0, 1).unwrap();
        assert_eq!(binary.m(), 2);
        assert_eq!(binary.s(), 4);
        assert!(binary.u().iter().all(|&u| u == 1));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random(20, 1, 0.5, 3).unwrap();
        let b = generate_random(20, 1, 0.5, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalize_shifts_bounds_and_budget() {
        // l = (1,0), u = (2,1), s = 2 → u' = (1,1), s' = 1, base = v₁v₁ᵀ.
        let a = DMatrix::from_row_slice(2, 1, &[2.0, 3.0]);
        let inst = Instance::new(a, vec![1, 0], vec![2, 1], 2).unwrap();
        let (norm, base, s_shift) = normalize_to_zero_lower(&inst);
        assert_eq!(norm.u(), &[1, 1]);
        assert_eq!(s_shift, 1);
        assert_eq!(base[(0, 0)], 4.0);
        // Reduced objective at x' equals original objective at x' + l.
        let x_shift = [0i64, 1];
        let b = norm.info_matrix_int(&x_shift);
        assert_eq!(b[(0, 0)], 4.0 + 9.0);
        let rec = norm.recover(&Design {
            x: x_shift.to_vec(),
        });
        assert_eq!(rec.x, vec![1, 1]);
    }

    #[test]
    fn normalize_is_identity_for_zero_lower() {
        let inst = generate_random(8, 3, 1.0, 2).unwrap();
        let (norm, base, s_shift) = normalize_to_zero_lower(&inst);
        assert_eq!(s_shift, inst.s());
        assert_eq!(base, DMatrix::zeros(2, 2));
        assert_eq!(norm.instance(), &inst);
    }

    #[test]
    fn normalize_preserves_brute_force_optimum() {
        // Enumerate the original problem directly and through the reduction.
        let a = DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 0.2, 0.3, 1.0, 0.8, 0.8, 0.1, 0.4],
        );
        let inst = Instance::new(a, vec![1, 0, 0, 1], vec![2, 2, 1, 2], 4).unwrap();
        let (norm, _, _) = normalize_to_zero_lower(&inst);
        let (_, z_shifted) =
            brute_force_optimum(&norm, norm.instance().l(), norm.u()).unwrap();

        let (raw, _, _) = normalize_to_zero_lower(&Instance::new(
            inst.a().clone(),
            vec![0; 4],
            inst.u().to_vec(),
            inst.s(),
        )
        .unwrap());
        // Direct enumeration of the original feasible set (l ≤ x ≤ u).
        let (_, z_direct) = brute_force_optimum(&raw, inst.l(), inst.u()).unwrap();
        assert!((z_shifted - z_direct).abs() < 1e-9);
    }

    #[test]
    fn save_load_roundtrip() {
        let inst = generate_random(12, 5, 0.7, 3).unwrap();
        let dir = std::env::temp_dir().join("dopt-instance-roundtrip.txt");
        save(&inst, &dir).unwrap();
        let back = load(&dir).unwrap();
        assert_eq!(inst, back);
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn load_rejects_infeasible_budget() {
        let text = "2 1 5\n0 0\n1 1\n1.0\n2.0\n";
        match parse(text) {
            Err(Error::InvalidInstance(_)) => {}
            other => panic!("expected InvalidInstance, got {other:?}"),
        }
    }

    #[test]
    fn load_accepts_hand_written_fixture() {
        let text = "3 2 2\n0 0 0\n1 1 1\n1.0 0.0\n0.0 1.0\n1.0 1.0\n";
        let inst = parse(text).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.m(), 2);
        assert_eq!(inst.s(), 2);
        assert_eq!(inst.a()[(2, 0)], 1.0);
    }

    proptest! {
        #[test]
        fn generated_instances_satisfy_invariants(seed in 0u64..64, n in 8usize..24) {
            let inst = generate_random(n, seed, 0.6, 3).unwrap();
            prop_assert_eq!(inst.m(), n / 4);
            prop_assert_eq!(inst.s(), (n / 2) as i64);
            prop_assert!(inst.has_full_rank());
            let sum_l: i64 = inst.l().iter().sum();
            let sum_u: i64 = inst.u().iter().sum();
            prop_assert!(sum_l <= inst.s() && inst.s() <= sum_u);
            prop_assert!(inst.s() >= inst.m() as i64);
            prop_assert!(inst.l().iter().zip(inst.u()).all(|(&l, &u)| l < u));
        }
    }
}
