//! Block column echelon form, truncated bases and admissible index sets.
//!
//! All block indices are 0-based positions in the (sorted) spec.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SchurSpec;
use crate::error::{Error, Result};
use crate::linalg::{complete_basis, qr_thin, svd, Matrix, SchurBlock, DEFAULT_RANK_TOL};

/// Pivot data of a block column echelon form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchelonStructure {
    /// Pivot block indices `k₁ < … < k_r`.
    pub pivots: Vec<usize>,
    /// Widths `b_j ∈ {1, 2}`.
    pub widths: Vec<usize>,
    /// Number of consecutive blocks from `k_j` sharing its real part.
    pub plateaus: Vec<usize>,
    /// Orthonormal basis in echelon form (same range as the input).
    pub basis: Matrix,
    /// `basis` with every column group cut to its plateau rows.
    pub truncated: Matrix,
}

impl EchelonStructure {
    /// Complex pivot blocks carrying a single column.
    pub fn single_complex_pivots(&self, spec: &SchurSpec) -> Vec<usize> {
        self.pivots
            .iter()
            .zip(&self.widths)
            .filter(|&(&k, &b)| b == 1 && spec.blocks()[k].is_complex())
            .map(|(&k, _)| k)
            .collect()
    }

    /// `(k_j, b_j)` pairs.
    pub fn choice(&self) -> Vec<(usize, usize)> {
        self.pivots.iter().copied().zip(self.widths.iter().copied()).collect()
    }
}

fn plateau_lengths(spec: &SchurSpec, pivots: &[usize]) -> Vec<usize> {
    let blocks = spec.blocks();
    pivots
        .iter()
        .map(|&k| {
            let b = blocks[k].beta();
            blocks[k..].iter().take_while(|blk| blk.beta() == b).count()
        })
        .collect()
}

/// Column echelon form of `range(W)`. Block ranks are decided by singular
/// values above `tol` on an orthonormalized basis.
pub fn column_echelon(w: &Matrix, spec: &SchurSpec, tol: f64) -> Result<EchelonStructure> {
    let d = spec.dim();
    if w.rows() != d {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows, spec has dimension {d}",
            w.rows()
        )));
    }
    let s = w.cols();
    if s == 0 || s > d {
        return Err(Error::InvalidInput(format!("need 1 <= s <= {d}, got {s}")));
    }
    let (mut rest, _) = qr_thin(w, DEFAULT_RANK_TOL)?;
    let offsets = spec.offsets();
    let mut pivots = Vec::new();
    let mut widths = Vec::new();
    let mut done: Vec<Vec<f64>> = Vec::with_capacity(s);

    for (i, blk) in spec.blocks().iter().enumerate() {
        let m = rest.cols();
        if m == 0 {
            break;
        }
        let rows = offsets[i]..offsets[i] + blk.dim();
        // Right singular vectors of the block rows, from the SVD of the transpose.
        let dec = svd(&rest.row_block(rows.clone()).transpose())?;
        let b = dec.values.iter().filter(|&&v| v > tol).count();
        if b == 0 {
            for r in rows {
                for c in 0..m {
                    rest[(r, c)] = 0.0;
                }
            }
            continue;
        }
        let v = complete_basis(&dec.left.columns(0..b));
        let rotated = rest.matmul(&v);
        for c in 0..b {
            done.push(rotated.column(c));
        }
        let mut next = rotated.columns(b..m);
        for r in rows {
            for c in 0..next.cols() {
                next[(r, c)] = 0.0;
            }
        }
        rest = next;
        pivots.push(i);
        widths.push(b);
    }
    if done.len() < s {
        return Err(Error::RankDeficient {
            column: done.len(),
            value: 0.0,
            threshold: tol,
        });
    }
    let basis = Matrix::from_columns(&done)?;
    let plateaus = plateau_lengths(spec, &pivots);
    let mut truncated = basis.clone();
    let mut col = 0;
    for ((&k, &b), &l) in pivots.iter().zip(&widths).zip(&plateaus) {
        let lo = offsets[k];
        let hi = offsets.get(k + l).copied().unwrap_or(d);
        for c in col..col + b {
            for r in (0..lo).chain(hi..d) {
                truncated[(r, c)] = 0.0;
            }
        }
        col += b;
    }
    Ok(EchelonStructure {
        pivots,
        widths,
        plateaus,
        basis,
        truncated,
    })
}

/// `W∞`: the echelon basis restricted to plateau rows.
pub fn w_infinity(w: &Matrix, spec: &SchurSpec) -> Result<Matrix> {
    spec.require_isolated_real_parts()?;
    Ok(column_echelon(w, spec, 1e-10)?.truncated)
}

/// Which admissible sets to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissibleFilter {
    /// Every admissible set, including `∅` when admissible.
    All,
    /// Nonempty sets only.
    #[default]
    NonEmpty,
    /// Sets not strictly contained in another admissible set.
    Maximal,
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out: Vec<Vec<usize>> = (0u64..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| items[i]).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b: &Vec<usize>| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn check_s(s: usize, spec: &SchurSpec) -> Result<()> {
    let d = spec.dim();
    if s == 0 || s > d {
        return Err(Error::InvalidInput(format!("need 1 <= s <= {d}, got {s}")));
    }
    Ok(())
}

/// Admissible sets of complex block indices for dimension `s`, ordered by
/// size and then lexicographically. Nonempty sets only.
pub fn admissible_sets(s: usize, spec: &SchurSpec) -> Result<Vec<Vec<usize>>> {
    admissible_sets_with(s, spec, AdmissibleFilter::NonEmpty)
}

pub fn admissible_sets_with(
    s: usize,
    spec: &SchurSpec,
    filter: AdmissibleFilter,
) -> Result<Vec<Vec<usize>>> {
    check_s(s, spec)?;
    let d = spec.dim();
    let jc = spec.complex_indices();
    let all_complex = jc.len() == spec.num_blocks();
    let bound = s.min(d - s);
    let sets: Vec<Vec<usize>> = subsets(&jc)
        .into_iter()
        .filter(|j| j.len() <= bound && (!all_complex || (s - j.len()) % 2 == 0))
        .collect();
    Ok(match filter {
        AdmissibleFilter::All => sets,
        AdmissibleFilter::NonEmpty => sets.into_iter().filter(|j| !j.is_empty()).collect(),
        AdmissibleFilter::Maximal => {
            let maximal: Vec<Vec<usize>> = sets
                .iter()
                .filter(|j| {
                    !sets
                        .iter()
                        .any(|o| o.len() > j.len() && j.iter().all(|x| o.contains(x)))
                })
                .cloned()
                .collect();
            maximal.into_iter().filter(|j| !j.is_empty()).collect()
        }
    })
}

/// Every pivot/width sequence `((k₁, b₁), …)` with `Σ b_j = s`, in
/// lexicographic order.
pub fn echelon_choices(s: usize, spec: &SchurSpec) -> Result<Vec<Vec<(usize, usize)>>> {
    check_s(s, spec)?;
    fn rec(
        blocks: &[SchurBlock],
        from: usize,
        left: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in from..blocks.len() {
            for b in 1..=blocks[k].dim().min(left) {
                cur.push((k, b));
                rec(blocks, k + 1, left - b, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(spec.blocks(), 0, s, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Sets of single-column complex pivots over all echelon choices, sorted
/// as in [`admissible_sets_with`] and including `∅` when it occurs.
pub fn realizable_sets(s: usize, spec: &SchurSpec) -> Result<Vec<Vec<usize>>> {
    let mut sets: Vec<Vec<usize>> = echelon_choices(s, spec)?
        .into_iter()
        .map(|choice| {
            choice
                .into_iter()
                .filter(|&(k, b)| b == 1 && spec.blocks()[k].is_complex())
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    sets.sort_by(|a: &Vec<usize>, b: &Vec<usize>| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    Ok(sets)
}

/// Echelon-structured spanning matrices supported on pivot blocks only:
/// `per_set` random instances for each maximal admissible set (or one
/// instance of a pure double/real pivot choice when there is none).
pub fn echelon_candidates(
    spec: &SchurSpec,
    s: usize,
    per_set: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Matrix>> {
    let mut sets = admissible_sets_with(s, spec, AdmissibleFilter::Maximal)?;
    if sets.is_empty() {
        let all = admissible_sets_with(s, spec, AdmissibleFilter::All)?;
        if all.iter().any(Vec::is_empty) {
            sets.push(Vec::new());
        }
    }
    let d = spec.dim();
    let offsets = spec.offsets();
    let jc = spec.complex_indices();
    let reals: Vec<usize> = (0..spec.num_blocks()).filter(|k| !jc.contains(k)).collect();
    let mut out = Vec::new();
    for j in &sets {
        let others: Vec<usize> = jc.iter().copied().filter(|k| !j.contains(k)).collect();
        let n2 = ((s - j.len()) / 2).min(others.len());
        let n1 = s - j.len() - 2 * n2;
        if n1 > reals.len() {
            continue;
        }
        let reps = if j.is_empty() { 1 } else { per_set.max(1) };
        for _ in 0..reps {
            let mut cols = Vec::with_capacity(s);
            for &k in j {
                let a: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let mut c = vec![0.0; d];
                c[offsets[k]] = a.cos();
                c[offsets[k] + 1] = a.sin();
                cols.push(c);
            }
            for &k in &others[..n2] {
                for r in 0..2 {
                    let mut c = vec![0.0; d];
                    c[offsets[k] + r] = 1.0;
                    cols.push(c);
                }
            }
            for &k in &reals[..n1] {
                let mut c = vec![0.0; d];
                c[offsets[k]] = 1.0;
                cols.push(c);
            }
            out.push(Matrix::from_columns(&cols)?);
        }
    }
    Ok(out)
}
