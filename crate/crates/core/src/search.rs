//! Subspace search shared by the discrete and continuous estimators.
//!
//! An angular value is a supremum over the Grassmannian of a long-time
//! average. At a finite horizon this is approximated by
//!
//! 1. a candidate pool: caller-supplied seeds, structured candidates and
//!    seeded Haar-random subspaces;
//! 2. coordinate-wise local refinement of the best candidates;
//! 3. tail statistics of the running averages `c_n(V)` over a tail window.
//!
//! Every candidate is evaluated on the same tail sample, so the four variants
//! obey the ordering `sup-liminf ≤ sup-limsup ≤ limsup-sup` and
//! `sup-liminf ≤ liminf-sup ≤ limsup-sup` exactly. Sup-type values are search
//! lower bounds.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_thin, Matrix, DEFAULT_RANK_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    SupLimsup,
    SupLiminf,
    LimsupSup,
    LiminfSup,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SupLimsup,
        Variant::SupLiminf,
        Variant::LimsupSup,
        Variant::LiminfSup,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::SupLimsup => "sup-limsup",
            Variant::SupLiminf => "sup-liminf",
            Variant::LimsupSup => "limsup-sup",
            Variant::LiminfSup => "liminf-sup",
        }
    }

    /// True for the outer variants, where the supremum over subspaces is
    /// taken last.
    pub fn is_outer(&self) -> bool {
        matches!(self, Variant::SupLimsup | Variant::SupLiminf)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variant '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceSearchConfig {
    pub seed: u64,
    /// Number of Haar-random starting subspaces.
    pub starts: usize,
    /// How many of the best candidates (per objective) get refined.
    pub refine_top: usize,
    /// Coordinate sweeps per refined candidate.
    pub refine_rounds: usize,
    /// Initial perturbation size for refinement; halved after a sweep without
    /// improvement.
    pub refine_step: f64,
    /// Tail window is `[(1 − f)·N, N]`. `None` picks the estimator default.
    pub tail_fraction: Option<f64>,
    /// Upper bound on the tail sample size; longer tails are strided.
    pub max_tail_samples: usize,
    /// Budget in propagation steps (horizon steps × subspace evaluations).
    pub cost_cap: u64,
    /// Also try every coordinate subspace `span(e_i : i ∈ I)` (for `d ≤ 10`).
    pub coordinate_candidates: bool,
    /// Extra spanning matrices, each `d × s`.
    pub seed_subspaces: Vec<Matrix>,
}

impl Default for SubspaceSearchConfig {
    fn default() -> Self {
        SubspaceSearchConfig {
            seed: 0,
            starts: 16,
            refine_top: 2,
            refine_rounds: 8,
            refine_step: 0.25,
            tail_fraction: None,
            max_tail_samples: 4096,
            cost_cap: 20_000_000_000,
            coordinate_candidates: true,
            seed_subspaces: Vec::new(),
        }
    }
}

impl SubspaceSearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SubspaceSearchConfig {
            seed,
            ..Default::default()
        }
    }

    pub(crate) fn tail_fraction_or(&self, default: f64) -> Result<f64> {
        let f = self.tail_fraction.unwrap_or(default);
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail_fraction must lie in (0, 1], got {f}"
            )));
        }
        Ok(f)
    }

    fn refinement_evaluations(&self, d: usize, s: usize) -> usize {
        // three objectives, each step tries ± on every entry
        3 * self.refine_top * self.refine_rounds * 2 * d * s
    }
}

/// Tail statistics of one candidate.
#[derive(Clone, Debug, Serialize)]
pub struct TailStats {
    pub mean: f64,
    pub sup: f64,
    pub inf: f64,
    /// Running average at the horizon.
    pub last: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AngularValueReport {
    pub variant: Variant,
    /// Radians per step (discrete) or per unit time (continuous).
    pub value: f64,
    /// `N` or `T`.
    pub horizon: f64,
    pub tail_window: (f64, f64),
    pub tail_samples: usize,
    pub candidates: usize,
    /// Subspace attaining the value for outer variants; for inner variants
    /// the maximizer at the tail time that decides the value.
    pub best_subspace: Matrix,
    /// Tail statistics of `best_subspace`.
    pub best_tail: TailStats,
    pub seed: u64,
    /// The value comes from a finite search over subspaces.
    pub search_lower_bound: bool,
}

/// Evaluates a candidate: running averages at the shared tail sample.
pub(crate) type Evaluator<'a> = dyn Fn(&Matrix) -> Result<Vec<f64>> + Sync + 'a;

#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub basis: Matrix,
    pub tail: Vec<f64>,
}

impl Candidate {
    fn stats(&self) -> TailStats {
        let n = self.tail.len().max(1) as f64;
        TailStats {
            mean: self.tail.iter().sum::<f64>() / n,
            sup: self.tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            inf: self.tail.iter().copied().fold(f64::INFINITY, f64::min),
            last: self.tail.last().copied().unwrap_or(0.0),
        }
    }
}

/// Everything needed to read off the four variants.
#[derive(Clone, Debug)]
pub(crate) struct SearchOutcome {
    pub pool: Vec<Candidate>,
    pub horizon: f64,
    pub tail_window: (f64, f64),
    pub seed: u64,
}

fn argmax_by(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

impl SearchOutcome {
    pub fn report(&self, variant: Variant) -> AngularValueReport {
        let stats: Vec<TailStats> = self.pool.iter().map(Candidate::stats).collect();
        let samples = self.pool.first().map_or(0, |c| c.tail.len());
        let (best, value) = match variant {
            Variant::SupLimsup => argmax_by(stats.iter().map(|s| s.sup)).unwrap(),
            Variant::SupLiminf => argmax_by(stats.iter().map(|s| s.inf)).unwrap(),
            Variant::LimsupSup | Variant::LiminfSup => {
                // envelope over candidates at each tail sample
                let envelope: Vec<(usize, f64)> = (0..samples)
                    .map(|k| argmax_by(self.pool.iter().map(|c| c.tail[k])).unwrap())
                    .collect();
                let pick = if variant == Variant::LimsupSup {
                    argmax_by(envelope.iter().map(|e| e.1))
                } else {
                    argmax_by(envelope.iter().map(|e| -e.1))
                };
                let (k, _) = pick.unwrap();
                envelope[k]
            }
        };
        AngularValueReport {
            variant,
            value,
            horizon: self.horizon,
            tail_window: self.tail_window,
            tail_samples: samples,
            candidates: self.pool.len(),
            best_subspace: self.pool[best].basis.clone(),
            best_tail: stats[best].clone(),
            seed: self.seed,
            search_lower_bound: true,
        }
    }

    pub fn reports(&self) -> Vec<AngularValueReport> {
        Variant::ALL.iter().map(|v| self.report(*v)).collect()
    }
}

/// Haar-distributed orthonormal `d × s` basis.
pub fn haar_basis(rng: &mut ChaCha8Rng, d: usize, s: usize) -> Matrix {
    loop {
        let g = Matrix::from_fn(d, s, |_, _| StandardNormal.sample(rng));
        if let Ok((q, _)) = qr_thin(&g, DEFAULT_RANK_TOL) {
            return q;
        }
    }
}

fn coordinate_subsets(d: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, s: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, s, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, s, &mut Vec::new(), &mut out);
    out
}

/// Initial pool, in a fixed order: user seeds, structured, coordinate, Haar.
pub(crate) fn initial_pool(
    d: usize,
    s: usize,
    cfg: &SubspaceSearchConfig,
    structured: Vec<Matrix>,
) -> Result<Vec<Matrix>> {
    if s == 0 || s > d {
        return Err(Error::InvalidInput(format!(
            "subspace dimension {s} must lie in 1..={d}"
        )));
    }
    let mut pool = Vec::new();
    for m in cfg.seed_subspaces.iter().chain(structured.iter()) {
        if m.shape() != (d, s) {
            return Err(Error::DimensionMismatch(format!(
                "seed subspace is {}x{}, expected {d}x{s}",
                m.rows(),
                m.cols()
            )));
        }
        pool.push(qr_thin(m, DEFAULT_RANK_TOL)?.0);
    }
    if cfg.coordinate_candidates && d <= 10 {
        for idx in coordinate_subsets(d, s) {
            pool.push(Matrix::from_fn(d, s, |i, j| if idx[j] == i { 1.0 } else { 0.0 }));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.starts {
        pool.push(haar_basis(&mut rng, d, s));
    }
    Ok(pool)
}

#[derive(Clone, Copy)]
enum Objective {
    TailSup,
    TailInf,
    Last,
}

impl Objective {
    fn score(&self, tail: &[f64]) -> f64 {
        match self {
            Objective::TailSup => tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Objective::TailInf => tail.iter().copied().fold(f64::INFINITY, f64::min),
            Objective::Last => tail.last().copied().unwrap_or(f64::NEG_INFINITY),
        }
    }
}

/// Greedy coordinate search from `start`; returns all accepted iterates.
fn refine(
    start: &Candidate,
    objective: Objective,
    cfg: &SubspaceSearchConfig,
    eval: &Evaluator<'_>,
) -> Result<Vec<Candidate>> {
    let (d, s) = start.basis.shape();
    let mut current = start.clone();
    let mut best = objective.score(&current.tail);
    let mut step = cfg.refine_step;
    let mut accepted = Vec::new();
    for _round in 0..cfg.refine_rounds {
        let mut improved = false;
        for i in 0..d {
            for j in 0..s {
                // both signs evaluated, better one kept
                let trials: Vec<Matrix> = [step, -step]
                    .iter()
                    .filter_map(|&delta| {
                        let mut b = current.basis.clone();
                        b[(i, j)] += delta;
                        qr_thin(&b, DEFAULT_RANK_TOL).ok().map(|(q, _)| q)
                    })
                    .collect();
                for basis in trials {
                    let tail = eval(&basis)?;
                    let score = objective.score(&tail);
                    if score > best {
                        best = score;
                        current = Candidate { basis, tail };
                        accepted.push(current.clone());
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(accepted)
}

/// Runs the search. `steps` is the horizon in propagation steps, used only
/// for the budget check; `eval` maps a basis to its tail sample.
pub(crate) fn run_search(
    pool: Vec<Matrix>,
    steps: u64,
    cfg: &SubspaceSearchConfig,
    eval: &Evaluator<'_>,
    horizon: f64,
    tail_window: (f64, f64),
) -> Result<SearchOutcome> {
    let (d, s) = pool.first().map(Matrix::shape).unwrap_or((0, 0));
    let evaluations = (pool.len() + cfg.refinement_evaluations(d, s)) as u64;
    let cost = steps.saturating_mul(evaluations);
    if cost > cfg.cost_cap {
        return Err(Error::BudgetExceeded {
            cost,
            cap: cfg.cost_cap,
        });
    }

    let tails: Vec<Result<Vec<f64>>> = pool.par_iter().map(|b| eval(b)).collect();
    let mut candidates = Vec::with_capacity(pool.len());
    for (basis, tail) in pool.into_iter().zip(tails) {
        candidates.push(Candidate { basis, tail: tail? });
    }

    if cfg.refine_rounds > 0 && cfg.refine_top > 0 {
        let mut starts: Vec<(Candidate, Objective)> = Vec::new();
        for objective in [Objective::TailSup, Objective::TailInf, Objective::Last] {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|&a, &b| {
                objective
                    .score(&candidates[b].tail)
                    .total_cmp(&objective.score(&candidates[a].tail))
                    .then(a.cmp(&b))
            });
            for &k in order.iter().take(cfg.refine_top) {
                starts.push((candidates[k].clone(), objective));
            }
        }
        let refined: Vec<Result<Vec<Candidate>>> = starts
            .par_iter()
            .map(|(c, objective)| refine(c, *objective, cfg, eval))
            .collect();
        for r in refined {
            candidates.extend(r?);
        }
    }

    Ok(SearchOutcome {
        pool: candidates,
        horizon,
        tail_window,
        seed: cfg.seed,
    })
}

/// Indices `n₀ ≤ k ≤ n_end` of the tail window, strided to at most `max`
/// entries; the last index is always included.
pub(crate) fn tail_indices(n0: usize, n_end: usize, max: usize) -> Vec<usize> {
    let len = n_end + 1 - n0;
    let stride = len.div_ceil(max.max(1)).max(1);
    let mut out: Vec<usize> = (0..len).step_by(stride).map(|k| n_end - k).collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("sup".parse::<Variant>().is_err());
    }

    #[test]
    fn tail_indices_cover_end() {
        assert_eq!(tail_indices(5, 10, 100), vec![5, 6, 7, 8, 9, 10]);
        let t = tail_indices(1000, 2000, 10);
        assert_eq!(*t.last().unwrap(), 2000);
        assert!(t.len() <= 11);
        assert!(t[0] >= 1000);
    }

    #[test]
    fn ordering_holds_on_synthetic_pool() {
        let pool = vec![
            Candidate { basis: Matrix::identity(1), tail: vec![0.1, 0.9, 0.3] },
            Candidate { basis: Matrix::identity(1), tail: vec![0.5, 0.4, 0.45] },
            Candidate { basis: Matrix::identity(1), tail: vec![0.2, 0.2, 0.8] },
        ];
        let out = SearchOutcome { pool, horizon: 3.0, tail_window: (1.0, 3.0), seed: 0 };
        let v = |x| out.report(x).value;
        assert_eq!(v(Variant::SupLimsup), 0.9);
        assert_eq!(v(Variant::SupLiminf), 0.4);
        assert_eq!(v(Variant::LimsupSup), 0.9);
        assert_eq!(v(Variant::LiminfSup), 0.5);
    }

    #[test]
    fn haar_bases_are_orthonormal_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let x = haar_basis(&mut a, 5, 3);
        assert_eq!(x, haar_basis(&mut b, 5, 3));
        assert!((&x.tr_matmul(&x) - &Matrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn coordinate_subsets_count() {
        assert_eq!(coordinate_subsets(4, 2).len(), 6);
        assert_eq!(coordinate_subsets(3, 3), vec![vec![0, 1, 2]]);
    }
}
