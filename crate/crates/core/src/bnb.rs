//! Branch-and-bound over integer designs.
//!
//! Nodes are boxes `(l′, u′)`; each is processed per the enhanced node
//! procedure: optional Hadamard/spectral bounds, the continuous
//! relaxation with its dual bound `ζ̂`, fathoming against the incumbent,
//! optional variable-bound tightening with a re-solve loop, optional
//! local search from the rounded relaxation point, then a most-fractional
//! dichotomy. Best-first order on the certified upper bound; the
//! single-threaded run is the deterministic reference and `threads > 1`
//! (with the `parallel` feature) processes distinct nodes concurrently
//! against a shared queue and incumbent.

use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::bounds;
use crate::detengine::{ldet_direct, Strategy};
use crate::error::{Error, Result};
use crate::heuristics::{self, continuous_to_integer, local_search, Mode};
use crate::instance::{Design, Normalized};
use crate::relaxation::{solve_with_options, FwOptions};

/// Which local searches run inside the tree (the root sweep always runs
/// all three from all four seeds).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsMode {
    All,
    Single(Mode),
}

impl LsMode {
    fn modes(self) -> Vec<Mode> {
        match self {
            LsMode::All => Mode::ALL.to_vec(),
            LsMode::Single(m) => vec![m],
        }
    }
}

impl fmt::Display for LsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LsMode::All => f.write_str("all"),
            LsMode::Single(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for LsMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            Ok(LsMode::All)
        } else {
            Mode::from_str(s).map(LsMode::Single)
        }
    }
}

/// Enhancement toggles and tolerances. `version(1..=7)` reproduces the
/// seven studied combinations: (1) none, (2) VBT, (3) VBT+LSI,
/// (4) VBT+LSI+HS, (5) LSC, (6) VBT+LSC, (7) VBT+LSC+HS.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub vbt: bool,
    pub lsi: bool,
    pub lsc: bool,
    pub hs: bool,
    /// A coordinate within this distance of an integer counts as integer.
    pub integrality_tol: f64,
    /// Fathoming slack on ldet, absolute.
    pub gap_tol: f64,
    pub ls_mode: LsMode,
    pub engine: Strategy,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub relax_tol: f64,
    pub relax_iters: usize,
    pub threads: usize,
    /// Cap on tighten-resolve rounds per node, so the loop terminates.
    pub vbt_rounds_cap: usize,
    /// Start child relaxations from the parent's point (off by default).
    pub warm_start: bool,
    /// Record every tightening event in the result (testing aid).
    pub trace_vbt: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::version(6)
    }
}

impl SolverConfig {
    pub fn version(v: u8) -> Self {
        let mut cfg = Self {
            vbt: false,
            lsi: false,
            lsc: false,
            hs: false,
            integrality_tol: 1e-5,
            gap_tol: 1e-6,
            ls_mode: LsMode::All,
            engine: Strategy::Sm,
            node_limit: None,
            time_limit: None,
            relax_tol: 1e-6,
            relax_iters: 5000,
            threads: 1,
            vbt_rounds_cap: 20,
            warm_start: false,
            trace_vbt: false,
        };
        match v {
            1 => {}
            2 => cfg.vbt = true,
            3 => {
                cfg.vbt = true;
                cfg.lsi = true;
            }
            4 => {
                cfg.vbt = true;
                cfg.lsi = true;
                cfg.hs = true;
            }
            5 => cfg.lsc = true,
            6 => {
                cfg.vbt = true;
                cfg.lsc = true;
            }
            7 => {
                cfg.vbt = true;
                cfg.lsc = true;
                cfg.hs = true;
            }
            other => panic!("version must be 1..=7, got {other}"),
        }
        cfg
    }
}

/// One subproblem: bound vectors, the certified upper bound inherited
/// from the parent, and the depth. `warm` carries the parent's relaxation
/// point when warm starts are enabled.
#[derive(Debug, Clone)]
pub struct Node {
    pub l: Vec<i64>,
    pub u: Vec<i64>,
    pub ub: f64,
    pub depth: u32,
    pub warm: Option<Vec<f64>>,
}

impl Node {
    pub fn root(norm: &Normalized) -> Self {
        Node {
            l: norm.instance().l().to_vec(),
            u: norm.u().to_vec(),
            ub: f64::INFINITY,
            depth: 0,
            warm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneReason {
    /// Certified bound at or below the incumbent.
    Bound,
    /// Tightening crossed some variable's bounds.
    EmptyBox,
    /// No feasible point has a nonsingular information matrix.
    NoInterior,
    /// Bounds cannot meet the budget.
    Infeasible,
}

#[derive(Debug)]
pub enum NodeOutcome {
    Pruned(PruneReason),
    /// The relaxation point was integral: the incumbent was offered the
    /// rounded design. `children` is non-empty only when the certified
    /// gap at the node still exceeded the tolerance (possible with an
    /// approximate relaxation solver), in which case the node is split
    /// instead of discarded.
    IntegerFound {
        design: Design,
        z: f64,
        children: Vec<Node>,
    },
    Branched(Vec<Node>),
}

/// Best known feasible design and value, shared across workers.
#[derive(Debug)]
pub struct Incumbent {
    inner: Mutex<(f64, Option<Design>)>,
}

impl Default for Incumbent {
    fn default() -> Self {
        Self::new()
    }
}

impl Incumbent {
    pub fn new() -> Self {
        Self {
            inner: Mutex::new((f64::NEG_INFINITY, None)),
        }
    }

    pub fn value(&self) -> f64 {
        self.inner.lock().unwrap().0
    }

    pub fn best(&self) -> Option<(Design, f64)> {
        let g = self.inner.lock().unwrap();
        g.1.clone().map(|d| (d, g.0))
    }

    /// Keeps the design if it improves the value; returns whether it did.
    pub fn offer(&self, design: &Design, z: f64) -> bool {
        if !z.is_finite() {
            return false;
        }
        let mut g = self.inner.lock().unwrap();
        if z > g.0 {
            *g = (z, Some(design.clone()));
            true
        } else {
            false
        }
    }
}

/// A successful tightening step: the box before and after.
#[derive(Debug, Clone)]
pub struct VbtEvent {
    pub pre_l: Vec<i64>,
    pub pre_u: Vec<i64>,
    pub post_l: Vec<i64>,
    pub post_u: Vec<i64>,
}

/// Counters shared across workers.
#[derive(Debug)]
pub struct SolveStats {
    pub nodes: AtomicU64,
    pub vbt_effective: AtomicU64,
    pub vars_fixed: AtomicU64,
    root_primal: Mutex<Option<f64>>,
    root_dual: Mutex<Option<f64>>,
    vbt_trace: Option<Mutex<Vec<VbtEvent>>>,
}

impl SolveStats {
    pub fn new(trace: bool) -> Self {
        Self {
            nodes: AtomicU64::new(0),
            vbt_effective: AtomicU64::new(0),
            vars_fixed: AtomicU64::new(0),
            root_primal: Mutex::new(None),
            root_dual: Mutex::new(None),
            vbt_trace: trace.then(|| Mutex::new(Vec::new())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    NodeLimit,
    TimeLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::TimeLimit => "time_limit",
        })
    }
}

/// Result of a solve, one row of the experiment tables.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best_x: Design,
    pub best_z: f64,
    pub node_count: u64,
    pub wall_time: Duration,
    /// Value and time of the root seed×mode sweep.
    pub ls_value: f64,
    pub ls_time: Duration,
    /// Primal value of the root relaxation (NaN if the root never solved).
    pub root_relax_value: f64,
    /// Dual bound `ζ̂` at the root.
    pub root_dual_bound: f64,
    pub vbt_effective: u64,
    pub vars_fixed: u64,
    pub status: SolveStatus,
    pub vbt_trace: Vec<VbtEvent>,
}

fn is_integral(x: &[f64], tol: f64) -> bool {
    x.iter().all(|&v| (v - v.round()).abs() <= tol)
}

fn round_integral(x: &[f64]) -> Design {
    Design {
        x: x.iter().map(|&v| v.round() as i64).collect(),
    }
}

fn budget_feasible(l: &[i64], u: &[i64], s: i64) -> bool {
    l.iter().sum::<i64>() <= s && u.iter().sum::<i64>() >= s
}

/// Most-fractional coordinate: maximizes `min(frac, 1 − frac)`, ties to
/// the lowest index.
fn most_fractional(x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = -1.0;
    for (j, &v) in x.iter().enumerate() {
        let frac = v - v.floor();
        let score = frac.min(1.0 - frac);
        if score > best_score {
            best_score = score;
            best = j;
        }
    }
    best
}

/// Dichotomy children around `split` on coordinate `j`:
/// `u′ⱼ ← split` and `l′ⱼ ← split + 1`. Children failing the budget
/// check are dropped (they contain no feasible point).
fn split_children(
    l: &[i64],
    u: &[i64],
    j: usize,
    split: i64,
    ub: f64,
    depth: u32,
    warm: Option<&[f64]>,
    s: i64,
) -> Vec<Node> {
    let mut children = Vec::with_capacity(2);
    let mut lo_u = u.to_vec();
    lo_u[j] = split;
    if budget_feasible(l, &lo_u, s) {
        children.push(Node {
            l: l.to_vec(),
            u: lo_u,
            ub,
            depth: depth + 1,
            warm: warm.map(<[f64]>::to_vec),
        });
    }
    let mut hi_l = l.to_vec();
    hi_l[j] = split + 1;
    if budget_feasible(&hi_l, u, s) {
        children.push(Node {
            l: hi_l,
            u: u.to_vec(),
            ub,
            depth: depth + 1,
            warm: warm.map(<[f64]>::to_vec),
        });
    }
    children
}

/// Splits a node on a fractional relaxation coordinate (the spec branch
/// operation). The children partition the node's integer points.
pub fn branch(node: &Node, xc: &[f64], s: i64) -> Vec<Node> {
    let j = most_fractional(xc);
    let split = xc[j].floor() as i64;
    split_children(
        &node.l,
        &node.u,
        j,
        split,
        node.ub,
        node.depth,
        node.warm.as_deref(),
        s,
    )
}

/// Runs the node procedure. Order per node: (a) Hadamard/spectral bounds
/// when enabled; (b) relaxation and dual bound; (c) integral point →
/// incumbent update (plus LSI) and close; (d) fathom on the best bound;
/// (e) tighten and re-loop while bounds change; (f) LSC rounding and
/// local search; (g) branch on the most fractional coordinate.
pub fn process_node(
    norm: &Normalized,
    cfg: &SolverConfig,
    node: Node,
    inc: &Incumbent,
    stats: &SolveStats,
) -> NodeOutcome {
    let s = norm.s();
    let mut l = node.l.clone();
    let mut u = node.u.clone();
    let mut rounds = 0;
    let (rel, ub_node) = loop {
        let mut hs_min = f64::INFINITY;
        if cfg.hs {
            let rep = bounds::bounds_report(norm, &u);
            hs_min = rep.min();
            if hs_min <= inc.value() + cfg.gap_tol {
                return NodeOutcome::Pruned(PruneReason::Bound);
            }
        }
        let opts = FwOptions {
            tol: cfg.relax_tol,
            max_iters: cfg.relax_iters,
            cutoff: (node.depth > 0).then(|| inc.value() + cfg.gap_tol),
            start: if cfg.warm_start {
                node.warm.clone()
            } else {
                None
            },
        };
        let (rel, dual) = match solve_with_options(norm, &l, &u, &opts) {
            Ok(pair) => pair,
            Err(Error::NoInteriorStart) | Err(Error::SingularPoint) => {
                return NodeOutcome::Pruned(PruneReason::NoInterior)
            }
            Err(e) => unreachable!("unexpected relaxation error: {e}"),
        };
        if node.depth == 0 && rounds == 0 {
            *stats.root_primal.lock().unwrap() = Some(rel.z_primal);
            *stats.root_dual.lock().unwrap() = Some(dual.zeta_hat);
        }
        let ub_node = dual.zeta_hat.min(hs_min);

        if is_integral(&rel.x, cfg.integrality_tol) {
            break (rel, ub_node);
        }
        if ub_node <= inc.value() + cfg.gap_tol {
            return NodeOutcome::Pruned(PruneReason::Bound);
        }
        if cfg.vbt && rounds < cfg.vbt_rounds_cap {
            let raw = bounds::vbt_tighten_raw(&l, &u, inc.value(), &dual);
            if raw.n_tightened > 0 {
                stats
                    .vbt_effective
                    .fetch_add(raw.n_tightened as u64, Ordering::Relaxed);
                stats
                    .vars_fixed
                    .fetch_add(raw.n_fixed as u64, Ordering::Relaxed);
                if let Some(trace) = &stats.vbt_trace {
                    trace.lock().unwrap().push(VbtEvent {
                        pre_l: l.clone(),
                        pre_u: u.clone(),
                        post_l: raw.new_l.clone(),
                        post_u: raw.new_u.clone(),
                    });
                }
                if raw.new_l.iter().zip(&raw.new_u).any(|(&lo, &hi)| lo > hi) {
                    return NodeOutcome::Pruned(PruneReason::EmptyBox);
                }
                l = raw.new_l;
                u = raw.new_u;
                if !budget_feasible(&l, &u, s) {
                    return NodeOutcome::Pruned(PruneReason::Infeasible);
                }
                rounds += 1;
                continue;
            }
        }
        break (rel, ub_node);
    };

    let warm = cfg.warm_start.then_some(rel.x.as_slice());

    if is_integral(&rel.x, cfg.integrality_tol) {
        let design = round_integral(&rel.x);
        debug_assert!(design.is_feasible(&l, &u, s));
        let z = ldet_direct(norm, &design.x);
        let mut best = (design.clone(), z);
        inc.offer(&design, z);
        if cfg.lsi && z.is_finite() {
            for mode in cfg.ls_mode.modes() {
                if let Ok((xx, zz)) = local_search(norm, &design, mode, cfg.engine, norm.u()) {
                    if zz > best.1 {
                        best = (xx.clone(), zz);
                    }
                    inc.offer(&xx, zz);
                }
            }
        }
        // With an exact relaxation solver the node is certified here; an
        // under-converged one can leave residual gap, in which case the
        // node is split on some open coordinate instead of discarded.
        let mut children = Vec::new();
        if ub_node > inc.value() + cfg.gap_tol {
            if let Some(j) = (0..l.len())
                .filter(|&j| l[j] < u[j])
                .max_by_key(|&j| u[j] - l[j])
            {
                let split = design.x[j].clamp(l[j], u[j] - 1);
                children = split_children(&l, &u, j, split, ub_node, node.depth, warm, s);
            }
        }
        return NodeOutcome::IntegerFound {
            design: best.0,
            z: best.1,
            children,
        };
    }

    if cfg.lsc {
        let seed = continuous_to_integer(&rel.x, s, &u);
        if ldet_direct(norm, &seed.x).is_finite() {
            for mode in cfg.ls_mode.modes() {
                if let Ok((xx, zz)) = local_search(norm, &seed, mode, cfg.engine, norm.u()) {
                    inc.offer(&xx, zz);
                }
            }
        }
        // The improved incumbent may close the node on the spot.
        if ub_node <= inc.value() + cfg.gap_tol {
            return NodeOutcome::Pruned(PruneReason::Bound);
        }
    }

    let child = Node {
        l,
        u,
        ub: ub_node,
        depth: node.depth,
        warm: warm.map(<[f64]>::to_vec),
    };
    let children = branch(&child, &rel.x, s);
    if children.is_empty() {
        return NodeOutcome::Pruned(PruneReason::Infeasible);
    }
    NodeOutcome::Branched(children)
}

/// Best of the 3-mode × 4-seed local-search sweep.
pub fn root_incumbent(norm: &Normalized, cfg: &SolverConfig) -> Result<(Design, f64)> {
    let entries = heuristics::sweep(norm, cfg.engine)?;
    let best = heuristics::best_entry(&entries);
    Ok((best.design.clone(), best.ldet))
}

struct HeapNode {
    ub: f64,
    seq: u64,
    node: Node,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.ub == other.ub && self.seq == other.seq
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: larger bound first, then first-in among equals.
        self.ub
            .total_cmp(&other.ub)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Exact solve. The incumbent starts from the root sweep; the queue is
/// best-first on the certified bound.
pub fn solve(norm: &Normalized, cfg: &SolverConfig) -> Result<OptResult> {
    let t0 = Instant::now();
    let ls_clock = Instant::now();
    let entries = heuristics::sweep(norm, cfg.engine)?;
    let ls_time = ls_clock.elapsed();
    let sweep_best = heuristics::best_entry(&entries);
    let ls_value = sweep_best.ldet;

    let inc = Incumbent::new();
    inc.offer(&sweep_best.design, sweep_best.ldet);
    let stats = SolveStats::new(cfg.trace_vbt);

    let status = run_queue(norm, cfg, &inc, &stats, t0);

    let (best_x, best_z) = inc.best().ok_or(Error::Infeasible)?;
    let vbt_trace = stats
        .vbt_trace
        .as_ref()
        .map(|t| t.lock().unwrap().clone())
        .unwrap_or_default();
    let root_primal = *stats.root_primal.lock().unwrap();
    let root_dual = *stats.root_dual.lock().unwrap();
    Ok(OptResult {
        best_x,
        best_z,
        node_count: stats.nodes.load(Ordering::Relaxed),
        wall_time: t0.elapsed(),
        ls_value,
        ls_time,
        root_relax_value: root_primal.unwrap_or(f64::NAN),
        root_dual_bound: root_dual.unwrap_or(f64::NAN),
        vbt_effective: stats.vbt_effective.load(Ordering::Relaxed),
        vars_fixed: stats.vars_fixed.load(Ordering::Relaxed),
        status,
        vbt_trace,
    })
}

fn over_limits(
    cfg: &SolverConfig,
    stats: &SolveStats,
    t0: Instant,
) -> Option<SolveStatus> {
    if let Some(limit) = cfg.node_limit {
        if stats.nodes.load(Ordering::Relaxed) >= limit {
            return Some(SolveStatus::NodeLimit);
        }
    }
    if let Some(tl) = cfg.time_limit {
        if t0.elapsed() >= tl {
            return Some(SolveStatus::TimeLimit);
        }
    }
    None
}

fn run_queue(
    norm: &Normalized,
    cfg: &SolverConfig,
    inc: &Incumbent,
    stats: &SolveStats,
    t0: Instant,
) -> SolveStatus {
    #[cfg(feature = "parallel")]
    if cfg.threads > 1 {
        return run_queue_parallel(norm, cfg, inc, stats, t0);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(HeapNode {
        ub: f64::INFINITY,
        seq,
        node: Node::root(norm),
    });
    while let Some(hn) = heap.pop() {
        if hn.ub <= inc.value() + cfg.gap_tol {
            continue;
        }
        if let Some(stop) = over_limits(cfg, stats, t0) {
            return stop;
        }
        stats.nodes.fetch_add(1, Ordering::Relaxed);
        let children = match process_node(norm, cfg, hn.node, inc, stats) {
            NodeOutcome::Branched(c) => c,
            NodeOutcome::IntegerFound { children, .. } => children,
            NodeOutcome::Pruned(_) => Vec::new(),
        };
        for node in children {
            seq += 1;
            heap.push(HeapNode {
                ub: node.ub,
                seq,
                node,
            });
        }
    }
    SolveStatus::Optimal
}

#[cfg(feature = "parallel")]
fn run_queue_parallel(
    norm: &Normalized,
    cfg: &SolverConfig,
    inc: &Incumbent,
    stats: &SolveStats,
    t0: Instant,
) -> SolveStatus {
    use std::sync::Condvar;

    struct QueueState {
        heap: BinaryHeap<HeapNode>,
        active: usize,
        seq: u64,
        stop: Option<SolveStatus>,
    }
    let state = Mutex::new(QueueState {
        heap: BinaryHeap::new(),
        active: 0,
        seq: 0,
        stop: None,
    });
    state.lock().unwrap().heap.push(HeapNode {
        ub: f64::INFINITY,
        seq: 0,
        node: Node::root(norm),
    });
    let cv = Condvar::new();

    std::thread::scope(|scope| {
        for _ in 0..cfg.threads {
            scope.spawn(|| loop {
                let hn = {
                    let mut g = state.lock().unwrap();
                    loop {
                        if g.stop.is_some() {
                            return;
                        }
                        if let Some(hn) = g.heap.pop() {
                            g.active += 1;
                            break hn;
                        }
                        if g.active == 0 {
                            cv.notify_all();
                            return;
                        }
                        g = cv.wait(g).unwrap();
                    }
                };
                let mut done = false;
                if hn.ub > inc.value() + cfg.gap_tol {
                    if let Some(stop) = over_limits(cfg, stats, t0) {
                        state.lock().unwrap().stop = Some(stop);
                        cv.notify_all();
                        done = true;
                    } else {
                        stats.nodes.fetch_add(1, Ordering::Relaxed);
                        let children = match process_node(norm, cfg, hn.node, inc, stats) {
                            NodeOutcome::Branched(c) => c,
                            NodeOutcome::IntegerFound { children, .. } => children,
                            NodeOutcome::Pruned(_) => Vec::new(),
                        };
                        let mut g = state.lock().unwrap();
                        for node in children {
                            g.seq += 1;
                            let seq = g.seq;
                            g.heap.push(HeapNode {
                                ub: node.ub,
                                seq,
                                node,
                            });
                        }
                        g.active -= 1;
                        cv.notify_all();
                        done = true;
                    }
                }
                if !done {
                    let mut g = state.lock().unwrap();
                    g.active -= 1;
                    cv.notify_all();
                }
            });
        }
    });

    let stop = state.lock().unwrap().stop;
    stop.unwrap_or(SolveStatus::Optimal)
}

/// Visits every integer point of `{l ≤ x ≤ u, eᵀx = s}`.
pub fn enumerate_feasible(l: &[i64], u: &[i64], s: i64, mut visit: impl FnMut(&[i64])) {
    let n = l.len();
    let mut lo_suffix = vec![0i64; n + 1];
    let mut hi_suffix = vec![0i64; n + 1];
    for k in (0..n).rev() {
        lo_suffix[k] = lo_suffix[k + 1] + l[k];
        hi_suffix[k] = hi_suffix[k + 1] + u[k];
    }
    let mut x = vec![0i64; n];
    fn rec(
        k: usize,
        rem: i64,
        l: &[i64],
        u: &[i64],
        lo_suffix: &[i64],
        hi_suffix: &[i64],
        x: &mut Vec<i64>,
        visit: &mut impl FnMut(&[i64]),
    ) {
        let n = l.len();
        if k == n {
            if rem == 0 {
                visit(x);
            }
            return;
        }
        let lo = l[k].max(rem - hi_suffix[k + 1]);
        let hi = u[k].min(rem - lo_suffix[k + 1]);
        for v in lo..=hi {
            x[k] = v;
            rec(k + 1, rem - v, l, u, lo_suffix, hi_suffix, x, visit);
        }
        x[k] = 0;
    }
    rec(0, s, l, u, &lo_suffix, &hi_suffix, &mut x, &mut visit);
}

/// Number of feasible integer points.
pub fn count_feasible(l: &[i64], u: &[i64], s: i64) -> u64 {
    let mut count = 0u64;
    enumerate_feasible(l, u, s, |_| count += 1);
    count
}

/// Exhaustive optimum: the verification oracle for small instances.
/// Returns `None` when the feasible set is empty; the value is `-∞` when
/// every feasible design is singular.
pub fn brute_force_optimum(
    norm: &Normalized,
    l: &[i64],
    u: &[i64],
) -> Option<(Design, f64)> {
    let mut best: Option<(Design, f64)> = None;
    enumerate_feasible(l, u, norm.s(), |x| {
        let z = ldet_direct(norm, x);
        if best.as_ref().is_none_or(|(_, bz)| z > *bz) {
            best = Some((Design { x: x.to_vec() }, z));
        }
    });
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random, normalize_to_zero_lower, Instance};
    use nalgebra::DMatrix;

    #[test]
    fn enumeration_counts_and_visits() {
        let mut seen = Vec::new();
        enumerate_feasible(&[0, 0, 0], &[1, 1, 1], 2, |x| seen.push(x.to_vec()));
        assert_eq!(seen.len(), 3);
        assert!(seen.contains(&vec![1, 1, 0]));
        assert_eq!(count_feasible(&[0, 0], &[2, 2], 3), 2);
        assert_eq!(count_feasible(&[1, 1], &[2, 2], 5), 0);
    }

    #[test]
    fn single_point_instance_closes_at_root() {
        // eᵀu = s forces x = u.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let inst = Instance::new(a, vec![0; 3], vec![1, 1, 1], 3).unwrap();
        let (norm, _, _) = normalize_to_zero_lower(&inst);
        let res = solve(&norm, &SolverConfig::version(1)).unwrap();
        assert_eq!(res.node_count, 1);
        assert_eq!(res.best_x.x, vec![1, 1, 1]);
        assert!((res.best_z - 3.0f64.ln()).abs() < 1e-8);
        assert_eq!(res.status, SolveStatus::Optimal);
    }

    #[test]
    fn all_versions_match_enumeration_on_small_instances() {
        for seed in [2, 11, 29] {
            let inst = generate_random(8, seed, 0.9, 2).unwrap();
            let (norm, _, _) = normalize_to_zero_lower(&inst);
            let (_, z_star) =
                brute_force_optimum(&norm, norm.instance().l(), norm.u()).unwrap();
            for v in 1..=7 {
                let res = solve(&norm, &SolverConfig::version(v)).unwrap();
                assert_eq!(res.status, SolveStatus::Optimal, "seed {seed} v{v}");
                assert!(
                    (res.best_z - z_star).abs() <= 1e-6,
                    "seed {seed} v{v}: {} vs {}",
                    res.best_z,
                    z_star
                );
                assert!(res
                    .best_x
                    .is_feasible(norm.instance().l(), norm.u(), norm.s()));
                // Bound sanity: incumbent chain below the root bounds.
                assert!(res.best_z <= res.root_dual_bound + 1e-8);
                assert!(res.ls_value <= res.best_z + 1e-9);
            }
        }
    }

    #[test]
    fn incumbent_monotone_offers() {
        let inc = Incumbent::new();
        let d1 = Design { x: vec![1, 0] };
        let d2 = Design { x: vec![0, 1] };
        assert!(inc.offer(&d1, 1.0));
        assert!(!inc.offer(&d2, 0.5));
        assert!(inc.offer(&d2, 2.0));
        assert_eq!(inc.best().unwrap().0, d2);
        assert!(!inc.offer(&d1, f64::NEG_INFINITY));
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = generate_random(12, 4, 0.9, 3).unwrap();
        let (norm, _, _) = normalize_to_zero_lower(&inst);
        let mut cfg = SolverConfig::version(1);
        cfg.node_limit = Some(1);
        let res = solve(&norm, &cfg).unwrap();
        if res.status == SolveStatus::NodeLimit {
            assert!(res.node_count <= 1);
        }
        assert!(res.best_z.is_finite());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_solve_matches_sequential_value() {
        let inst = generate_random(10, 17, 0.9, 2).unwrap();
        let (norm, _, _) = normalize_to_zero_lower(&inst);
        let seq = solve(&norm, &SolverConfig::version(6)).unwrap();
        let mut cfg = SolverConfig::version(6);
        cfg.threads = 2;
        let par = solve(&norm, &cfg).unwrap();
        assert!((seq.best_z - par.best_z).abs() <= 1e-9);
    }
}
