//! Greedy search with backtracking for superregular LTT matrices and for
//! jointly superregular (optionally product preserving) pairs.
//!
//! The search grows the exponent vector one level at a time. Accepting a
//! candidate at level l only requires re-checking the selectors that are new
//! at l: the proper selectors using row l and column 1 (everything else was
//! checked at an earlier level, shifted). Candidates at each level are tried
//! in ascending order and levels backtrack by resuming the parent's cursor,
//! so the first result found is the lexicographically smallest solution.

use std::fmt;
use std::sync::Arc;

use crate::galois::{FieldElement, FieldSpec, GaloisError};
use crate::regularity::{dense_superregular, raw_determinant, stacked_is_trd};
use crate::toeplitz::{incremental_selectors, DenseMatrix, MatrixPair, ToeplitzSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchError {
    /// The field has no solution of the requested size: every branch of the
    /// search tree was exhausted.
    InsufficientFieldSize,
    UnsupportedDimension { n: usize },
    Galois(GaloisError),
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::InsufficientFieldSize => {
                write!(f, "field too small: search space exhausted without a solution")
            }
            SearchError::UnsupportedDimension { n } => {
                write!(f, "unsupported search dimension {n}")
            }
            SearchError::Galois(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SearchError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SearchError::Galois(e) => Some(e),
            _ => None,
        }
    }
}

impl From<GaloisError> for SearchError {
    fn from(e: GaloisError) -> Self {
        SearchError::Galois(e)
    }
}

// True when the column prefix (length l, entries [1, w^i1, ...]) passes all
// selectors that become new at dimension l.
fn extension_ok(field: &Arc<FieldSpec>, col: &[FieldElement]) -> bool {
    let l = col.len();
    let dense = DenseMatrix::lower_toeplitz(Arc::clone(field), col);
    for sel in incremental_selectors(l) {
        let sub = dense.submatrix(&sel).expect("selector within bounds");
        if sub.determinant().expect("square submatrix").0 == 0 {
            return false;
        }
    }
    true
}

/// Finds the lexicographically smallest exponent vector whose n x n matrix
/// is superregular, by greedy extension with optional backtracking. With
/// backtracking disabled the search gives up as soon as one level has no
/// viable candidate.
pub fn greedy_search(
    field: &Arc<FieldSpec>,
    omega: FieldElement,
    n: usize,
    backtracking: bool,
) -> Result<ToeplitzSpec, SearchError> {
    if n == 0 {
        return Err(SearchError::UnsupportedDimension { n });
    }
    if !field.is_root(omega) {
        return Err(SearchError::Galois(GaloisError::NotARoot { value: omega.0 }));
    }
    let powers = field.omega_powers(omega)?;
    let order = field.order();

    let mut exps: Vec<u16> = Vec::with_capacity(n - 1);
    let mut col: Vec<FieldElement> = Vec::with_capacity(n);
    col.push(FieldElement(1));
    // cursors[d] = next candidate exponent to try at level d + 2.
    let mut cursors: Vec<u32> = vec![0];

    loop {
        if exps.len() == n - 1 {
            return Ok(ToeplitzSpec::new(Arc::clone(field), omega, exps).expect("validated"));
        }
        let h = *cursors.last().expect("cursor stack nonempty");
        if h >= order {
            // Level exhausted: step back and resume the parent after the
            // exponent it had accepted.
            if !backtracking || exps.is_empty() {
                return Err(SearchError::InsufficientFieldSize);
            }
            cursors.pop();
            let prev = exps.pop().expect("nonempty") as u32;
            col.pop();
            *cursors.last_mut().expect("parent cursor") = prev + 1;
            continue;
        }
        col.push(powers.get(h as u64));
        if extension_ok(field, &col) {
            exps.push(h as u16);
            cursors.push(0);
        } else {
            col.pop();
            *cursors.last_mut().expect("cursor") = h + 1;
        }
    }
}

/// Incremental joint check: given two first columns of equal length l whose
/// length l-1 prefixes already form a jointly superregular pair, decides
/// whether the full columns still do.
///
/// Only the stacked assemblies that are new at dimension l need checking: row
/// and column picks from both halves with row l involved and column 1
/// selected. Everything not touching row l or not using column 1 reduces to
/// an assembly already covered at a smaller dimension (dropping unused
/// leading columns shifts it onto a prefix of the pair; rows entirely below
/// the smallest selected column make it trivially rank deficient).
pub fn joint_extension_ok(
    field: &FieldSpec,
    a_col: &[FieldElement],
    b_col: &[FieldElement],
) -> bool {
    let l = a_col.len();
    debug_assert_eq!(l, b_col.len());
    let entry = |colv: &[FieldElement], r: usize, c: usize| {
        if r >= c {
            colv[r - c]
        } else {
            FieldElement(0)
        }
    };
    let mut rows: Vec<Vec<FieldElement>> = Vec::with_capacity(l);
    let idx: Vec<usize> = (1..=l).collect();
    for r in 1..=l {
        for sa in (0..=r).rev() {
            let sb = r - sa;
            for ra in combos(&idx, sa) {
                for rb in combos(&idx, sb) {
                    if !ra.contains(&l) && !rb.contains(&l) {
                        continue;
                    }
                    for ctail in combos(&idx[1..], r - 1) {
                        rows.clear();
                        let mut cols = Vec::with_capacity(r);
                        cols.push(1);
                        cols.extend_from_slice(&ctail);
                        for &j in &ra {
                            rows.push(cols.iter().map(|&c| entry(a_col, j, c)).collect());
                        }
                        for &j in &rb {
                            rows.push(cols.iter().map(|&c| entry(b_col, j, c)).collect());
                        }
                        if stacked_is_trd(&rows) {
                            continue;
                        }
                        if raw_determinant(field, &rows).0 == 0 {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn combos(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(pool: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, i + 1, k, cur, out);
            cur.pop();
        }
    }
    rec(pool, 0, k, &mut cur, &mut out);
    out
}

// Per-level scratch for the pair search: one cursor over (ha, hb) pairs and
// memoized single-side extension verdicts, valid as long as the prefix below
// this level is unchanged.
struct PairLevel {
    cursor: u64,
    a_ok: Vec<Option<bool>>,
    b_ok: Vec<Option<bool>>,
}

impl PairLevel {
    fn new(order: u32) -> PairLevel {
        PairLevel {
            cursor: 0,
            a_ok: vec![None; order as usize],
            b_ok: vec![None; order as usize],
        }
    }
}

/// Finds the first (in cursor order: level by level, a-exponent major) pair
/// of exponent vectors whose matrices are jointly superregular at n x n,
/// optionally also requiring the product to be superregular. Joint
/// superregularity is enforced at every intermediate size, the product only
/// at the final one (a superregular n x n product has superregular leading
/// blocks, so nothing is lost).
pub fn greedy_pair_search(
    field: &Arc<FieldSpec>,
    omega: FieldElement,
    n: usize,
    product_preserving: bool,
    backtracking: bool,
) -> Result<MatrixPair, SearchError> {
    if n < 2 {
        return Err(SearchError::UnsupportedDimension { n });
    }
    if !field.is_root(omega) {
        return Err(SearchError::Galois(GaloisError::NotARoot { value: omega.0 }));
    }
    let powers = field.omega_powers(omega)?;
    let order = field.order() as u64;

    let mut a_exps: Vec<u16> = Vec::with_capacity(n - 1);
    let mut b_exps: Vec<u16> = Vec::with_capacity(n - 1);
    let mut a_col = vec![FieldElement(1)];
    let mut b_col = vec![FieldElement(1)];
    let mut levels = vec![PairLevel::new(order as u32)];

    loop {
        if a_exps.len() == n - 1 {
            let pair = MatrixPair::new(
                ToeplitzSpec::new(Arc::clone(field), omega, a_exps.clone()).expect("validated"),
                ToeplitzSpec::new(Arc::clone(field), omega, b_exps.clone()).expect("validated"),
            )
            .expect("matched by construction");
            if !product_preserving || product_is_superregular(&pair) {
                return Ok(pair);
            }
            // Treat a failed product check like an exhausted level: the
            // joint prefix was fine, so resume the last level's scan.
            if !backtracking {
                return Err(SearchError::InsufficientFieldSize);
            }
            levels.pop();
            let pa = a_exps.pop().expect("nonempty") as u64;
            let pb = b_exps.pop().expect("nonempty") as u64;
            a_col.pop();
            b_col.pop();
            levels.last_mut().expect("parent level").cursor = pa * order + pb + 1;
            continue;
        }

        let level = levels.last_mut().expect("level stack nonempty");
        let c = level.cursor;
        if c >= order * order {
            if !backtracking || a_exps.is_empty() {
                return Err(SearchError::InsufficientFieldSize);
            }
            levels.pop();
            let pa = a_exps.pop().expect("nonempty") as u64;
            let pb = b_exps.pop().expect("nonempty") as u64;
            a_col.pop();
            b_col.pop();
            levels.last_mut().expect("parent level").cursor = pa * order + pb + 1;
            continue;
        }
        let (ha, hb) = (c / order, c % order);

        let a_fine = *level.a_ok[ha as usize].get_or_insert_with(|| {
            a_col.push(powers.get(ha));
            let ok = extension_ok(field, &a_col);
            a_col.pop();
            ok
        });
        if !a_fine {
            // No hb can rescue a bad a-side: skip the whole ha block.
            level.cursor = (ha + 1) * order;
            continue;
        }
        let b_fine = *level.b_ok[hb as usize].get_or_insert_with(|| {
            b_col.push(powers.get(hb));
            let ok = extension_ok(field, &b_col);
            b_col.pop();
            ok
        });
        if !b_fine {
            level.cursor = c + 1;
            continue;
        }

        a_col.push(powers.get(ha));
        b_col.push(powers.get(hb));
        if joint_extension_ok(field, &a_col, &b_col) {
            a_exps.push(ha as u16);
            b_exps.push(hb as u16);
            levels.push(PairLevel::new(order as u32));
        } else {
            a_col.pop();
            b_col.pop();
            level.cursor = c + 1;
        }
    }
}

fn product_is_superregular(pair: &MatrixPair) -> bool {
    let prod = pair
        .a
        .dense()
        .multiply(&pair.b.dense())
        .expect("matched pair");
    dense_superregular(&prod).expect("square").verdict
}
