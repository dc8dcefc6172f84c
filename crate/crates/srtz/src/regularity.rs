//! Superregularity verdicts and counts.
//!
//! A square matrix is superregular when every proper submatrix (dominated
//! selector) is nonsingular. Two same-size LTT matrices over one field and
//! root are jointly superregular when every square matrix assembled from
//! rows of both, restricted to any column set of matching size, is either
//! trivially rank deficient or nonsingular. A jointly superregular pair is
//! additionally product preserving when the product matrix is itself
//! superregular.
//!
//! Verdicts come in two speeds: brute-force enumeration ([`is_superregular`]
//! and friends, the reference semantics) and closed-form predicates for
//! dimensions up to 5 (`check_*`, used for counting and fast screening).

use std::fmt;
use std::sync::Arc;

use crate::galois::{Exponent, FieldElement, FieldSpec, GaloisError, OmegaPowers};
use crate::toeplitz::{
    proper_selectors, DenseMatrix, MatrixPair, RowSource, Selector, ToeplitzError, ToeplitzSpec,
};

/// Singular proper submatrix found by a verdict function: which rows (with
/// their source matrix) and which columns select it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub rows: Vec<RowSource>,
    pub cols: Vec<usize>,
}

impl Witness {
    fn from_selector(sel: &Selector) -> Witness {
        Witness {
            rows: sel.rows.iter().map(|&r| RowSource::A(r)).collect(),
            cols: sel.cols.clone(),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let single_sided = self.rows.iter().all(|r| matches!(r, RowSource::A(_)));
        write!(f, "rows (")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match (single_sided, r) {
                (true, RowSource::A(j)) => write!(f, "{j}")?,
                _ => write!(f, "{r}")?,
            }
        }
        write!(f, ") cols (")?;
        for (i, c) in self.cols.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Outcome of a verdict function. The witness is present exactly when the
/// verdict is false and names the first failing submatrix in enumeration
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityReport {
    pub verdict: bool,
    pub witness: Option<Witness>,
}

impl RegularityReport {
    fn pass() -> RegularityReport {
        RegularityReport { verdict: true, witness: None }
    }

    fn fail(witness: Witness) -> RegularityReport {
        RegularityReport { verdict: false, witness: Some(witness) }
    }
}

/// Brute-force superregularity: every proper submatrix must have nonzero
/// determinant. Witness is the first failing selector in enumeration order
/// (sizes ascending, then rows, then columns).
pub fn is_superregular(a: &ToeplitzSpec) -> RegularityReport {
    dense_superregular(&a.dense()).expect("LTT dense matrix is square")
}

/// Same verdict for an already-materialized square matrix.
pub fn dense_superregular(m: &DenseMatrix) -> Result<RegularityReport, ToeplitzError> {
    if m.rows() != m.cols() {
        return Err(ToeplitzError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    for sel in proper_selectors(m.rows()) {
        let sub = m.submatrix(&sel)?;
        if sub.determinant()?.0 == 0 {
            return Ok(RegularityReport::fail(Witness::from_selector(&sel)));
        }
    }
    Ok(RegularityReport::pass())
}

// Row sets drawn from both halves of a pair, sharing one column set. Yields
// every assembled square matrix exactly once: sizes ascending, then the
// count taken from A descending, then row/column combinations in
// lexicographic order.
fn stacked_failure(a: &DenseMatrix, b: &DenseMatrix, t: usize) -> Option<Witness> {
    let mut scratch: Vec<Vec<FieldElement>> = Vec::with_capacity(t);
    for r in 1..=t {
        for sa in (0..=r).rev() {
            let sb = r - sa;
            for ra in combinations(t, sa) {
                for rb in combinations(t, sb) {
                    for cols in combinations(t, r) {
                        scratch.clear();
                        for &j in &ra {
                            scratch.push(cols.iter().map(|&c| a.at(j - 1, c - 1)).collect());
                        }
                        for &j in &rb {
                            scratch.push(cols.iter().map(|&c| b.at(j - 1, c - 1)).collect());
                        }
                        if stacked_is_trd(&scratch) {
                            continue;
                        }
                        if raw_determinant(a.field(), &scratch).0 == 0 {
                            let mut rows: Vec<RowSource> =
                                ra.iter().map(|&j| RowSource::A(j)).collect();
                            rows.extend(rb.iter().map(|&j| RowSource::B(j)));
                            return Some(Witness { rows, cols });
                        }
                    }
                }
            }
        }
    }
    None
}

pub(crate) fn stacked_is_trd(rows: &[Vec<FieldElement>]) -> bool {
    let mut supports: Vec<usize> = rows
        .iter()
        .map(|row| row.iter().filter(|v| v.0 != 0).count())
        .collect();
    supports.sort();
    supports.iter().enumerate().any(|(i, &s)| s < i + 1)
}

pub(crate) fn raw_determinant(field: &FieldSpec, rows: &[Vec<FieldElement>]) -> FieldElement {
    let n = rows.len();
    let mut m: Vec<FieldElement> = rows.iter().flatten().copied().collect();
    let mut det = FieldElement(1);
    for col in 0..n {
        let pivot = match (col..n).find(|&r| m[r * n + col].0 != 0) {
            Some(r) => r,
            None => return FieldElement(0),
        };
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
        }
        let pv = m[col * n + col];
        det = field.mul(det, pv);
        let pinv = field.inv(pv).unwrap();
        for r in col + 1..n {
            if m[r * n + col].0 == 0 {
                continue;
            }
            let factor = field.mul(m[r * n + col], pinv);
            for c in col..n {
                let sub = field.mul(factor, m[col * n + c]);
                m[r * n + c] ^= sub;
            }
        }
    }
    det
}

// All size-k subsets of 1..=n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..=n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(1, n, k, &mut cur, &mut out);
    out
}

/// Joint superregularity of a matched pair: every assembled submatrix that
/// is not trivially rank deficient must be nonsingular. Row sets may repeat
/// an index across the two matrices (a receiver can hold coded row j from
/// both branches), and the all-A / all-B row sets are included, so a true
/// verdict implies each matrix is individually superregular.
pub fn is_jointly_superregular(pair: &MatrixPair) -> RegularityReport {
    let a = pair.a.dense();
    let b = pair.b.dense();
    match stacked_failure(&a, &b, pair.n()) {
        Some(w) => RegularityReport::fail(w),
        None => RegularityReport::pass(),
    }
}

/// Product preservation: the product of the pair (lower-triangular Toeplitz
/// again, and order-independent since LTT matrices commute) must be
/// superregular. Meant to run on pairs already known to be jointly
/// superregular; this function checks only the product.
pub fn is_product_preserving(pair: &MatrixPair) -> RegularityReport {
    let prod = pair
        .a
        .dense()
        .multiply(&pair.b.dense())
        .expect("matched pair dimensions");
    dense_superregular(&prod).expect("product of square matrices is square")
}

// ---------------------------------------------------------------------------
// Closed-form predicates. Exponent arithmetic is modulo 2^p - 1 throughout.
// ---------------------------------------------------------------------------

/// 3x3 closed form: 2 i1 != i2 (mod 2^p - 1).
pub fn check_n3(field: &FieldSpec, i1: Exponent, i2: Exponent) -> bool {
    let n = field.order();
    (2 * i1 as u32) % n != i2 as u32 % n
}

/// 4x4 closed form on top of [`check_n3`]: three more modular conditions.
pub fn check_n4(field: &FieldSpec, i1: Exponent, i2: Exponent, i3: Exponent) -> bool {
    let n = field.order();
    let (i1, i2, i3) = (i1 as u32, i2 as u32, i3 as u32);
    (3 * i1) % n != i3 % n
        && (i1 + i2) % n != i3 % n
        && (2 * i2) % n != (i1 + i3) % n
}

/// 5x5 closed form on top of [`check_n4`]: five modular conditions plus four
/// field inequalities evaluated through the given root's power table.
pub fn check_n5(
    powers: &OmegaPowers,
    i1: Exponent,
    i2: Exponent,
    i3: Exponent,
    i4: Exponent,
) -> bool {
    let n = powers.order();
    let (i1, i2, i3, i4) = (i1 as u32, i2 as u32, i3 as u32, i4 as u32);
    if i4 % n == (2 * i1 + i2) % n
        || i4 % n == (i1 + i3) % n
        || i4 % n == (2 * i2) % n
        || (2 * i3) % n == (i2 + i4) % n
        || (i2 + i3) % n == (i1 + i4) % n
    {
        return false;
    }
    let w = |e: u32| powers.get(e as u64).0;
    if w(2 * i2 + i1) ^ w(i2 + i3) ^ w(2 * i1 + i3) ^ w(i1 + i4) == 0 {
        return false;
    }
    if w(2 * i1 + i4) ^ w(i2 + i4) ^ w(3 * i2) ^ w(2 * i3) == 0 {
        return false;
    }
    if w(2 * i1 + i2) ^ w(i1 + i3) ^ w(2 * i2) ^ w(i4) == 0 {
        return false;
    }
    if w(2 * i1 + i2) ^ w(4 * i1) ^ w(2 * i2) ^ w(i4) == 0 {
        return false;
    }
    true
}

/// Single-equation family replacing the four field inequalities of
/// [`check_n5`]: the same five modular conditions, then one parametrized
/// inequality
///
/// ```text
/// w^(a i1 + b i2) + w^(c i1 + i4) + w^(d i1 + e i3) + w^(f i2 + g i3 + h i4) != 0
/// ```
///
/// required for every (a,b,c,d,e,f,g,h) in
/// {0,1,2} x {1,2,3} x {0,1,2} x {0,1,2,4} x {0,1,2} x {1,2} x {0,1} x {0,1}
/// (2592 combinations). The family contains the four inequalities of
/// [`check_n5`], so this predicate is strictly stronger: sufficient for
/// superregularity, not necessary.
pub fn check_n5_single_family(
    powers: &OmegaPowers,
    i1: Exponent,
    i2: Exponent,
    i3: Exponent,
    i4: Exponent,
) -> bool {
    let n = powers.order();
    let (i1, i2, i3, i4) = (i1 as u32, i2 as u32, i3 as u32, i4 as u32);
    if i4 % n == (2 * i1 + i2) % n
        || i4 % n == (i1 + i3) % n
        || i4 % n == (2 * i2) % n
        || (2 * i3) % n == (i2 + i4) % n
        || (i2 + i3) % n == (i1 + i4) % n
    {
        return false;
    }
    let w = |e: u32| powers.get(e as u64).0;
    for a in [0u32, 1, 2] {
        for b in [1u32, 2, 3] {
            let t1 = w(a * i1 + b * i2);
            for c in [0u32, 1, 2] {
                let t12 = t1 ^ w(c * i1 + i4);
                for d in [0u32, 1, 2, 4] {
                    for e in [0u32, 1, 2] {
                        let t123 = t12 ^ w(d * i1 + e * i3);
                        for f in [1u32, 2] {
                            for g in [0u32, 1] {
                                for h in [0u32, 1] {
                                    if t123 ^ w(f * i2 + g * i3 + h * i4) == 0 {
                                        return false;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

/// Exact 2x2 joint condition: the first exponents differ.
pub fn check_joint_n2(pair: &MatrixPair) -> bool {
    pair.a.exponents()[0] != pair.b.exponents()[0]
}

/// Quick rejection valid at every size: a pair with any coinciding
/// coordinate i_{a_j} = i_{b_j} cannot be jointly superregular.
pub fn check_joint_any_n_necessary(pair: &MatrixPair) -> bool {
    pair.a
        .exponents()
        .iter()
        .zip(pair.b.exponents())
        .all(|(x, y)| x != y)
}

/// Exact 3x3 joint condition set. Beyond the cross conditions (three
/// modular inequalities and two field inequalities) this includes the
/// prerequisites that make the set equivalent to the brute-force verdict:
/// each side superregular at 3x3 and both off-diagonal coordinates
/// distinct.
pub fn check_joint_n3(pair: &MatrixPair) -> bool {
    let powers = pair
        .field()
        .omega_powers(pair.omega())
        .expect("pair root is nonzero");
    let [a1, a2] = [pair.a.exponents()[0], pair.a.exponents()[1]];
    let [b1, b2] = [pair.b.exponents()[0], pair.b.exponents()[1]];
    joint_n3_exps(&powers, a1, a2, b1, b2)
}

pub(crate) fn joint_n3_exps(
    powers: &OmegaPowers,
    a1: Exponent,
    a2: Exponent,
    b1: Exponent,
    b2: Exponent,
) -> bool {
    let n = powers.order();
    let (a1, a2, b1, b2) = (a1 as u32, a2 as u32, b1 as u32, b2 as u32);
    if a1 == b1 || a2 == b2 {
        return false;
    }
    // Each half must be superregular on its own at 3x3.
    if (2 * a1) % n == a2 % n || (2 * b1) % n == b2 % n {
        return false;
    }
    if (a1 + b1) % n == a2 % n
        || (a1 + b1) % n == b2 % n
        || (a1 + b2) % n == (a2 + b1) % n
    {
        return false;
    }
    let w = |e: u32| powers.get(e as u64).0;
    let core = w(a2) ^ w(b2) ^ w(a1 + b1);
    core ^ w(2 * a1) != 0 && core ^ w(2 * b1) != 0
}

/// Exact product condition at 3x3, for pairs already jointly superregular:
/// two field inequalities on the product's subdiagonal values.
pub fn check_product_n3(pair: &MatrixPair) -> bool {
    let powers = pair
        .field()
        .omega_powers(pair.omega())
        .expect("pair root is nonzero");
    product_n3_exps(
        &powers,
        pair.a.exponents()[0],
        pair.a.exponents()[1],
        pair.b.exponents()[0],
        pair.b.exponents()[1],
    )
}

pub(crate) fn product_n3_exps(
    powers: &OmegaPowers,
    a1: Exponent,
    a2: Exponent,
    b1: Exponent,
    b2: Exponent,
) -> bool {
    let (a1, a2, b1, b2) = (a1 as u32, a2 as u32, b1 as u32, b2 as u32);
    let w = |e: u32| powers.get(e as u64).0;
    let core = w(a2) ^ w(b2) ^ w(a1 + b1);
    core != 0 && core ^ w(2 * a1) ^ w(2 * b1) != 0
}

/// Exact product condition at 4x4, for pairs already jointly superregular:
/// the 3x3 product conditions plus four more field inequalities (one with
/// eleven terms, one with eight, one with six, one with four).
pub fn check_product_n4(pair: &MatrixPair) -> bool {
    let powers = pair
        .field()
        .omega_powers(pair.omega())
        .expect("pair root is nonzero");
    let a = pair.a.exponents();
    let b = pair.b.exponents();
    product_n4_exps(&powers, [a[0], a[1], a[2]], [b[0], b[1], b[2]])
}

pub(crate) fn product_n4_exps(
    powers: &OmegaPowers,
    a: [Exponent; 3],
    b: [Exponent; 3],
) -> bool {
    let [a1, a2, a3] = a.map(|v| v as u32);
    let [b1, b2, b3] = b.map(|v| v as u32);
    if !product_n3_exps(powers, a[0], a[1], b[0], b[1]) {
        return false;
    }
    let w = |e: u32| powers.get(e as u64).0;
    // Third subdiagonal of the product against the first two.
    let extra = w(a1 + a2) ^ w(2 * a1 + b1) ^ w(a1 + 2 * b1) ^ w(b1 + b2) ^ w(a3) ^ w(b3);
    if extra == 0 {
        return false;
    }
    let h1 = w(b1 + a3)
        ^ w(b3 + a1)
        ^ w(a1 + a3)
        ^ w(b2 + 2 * a1)
        ^ w(2 * b1 + a2)
        ^ w(2 * b2)
        ^ w(2 * b1 + 2 * a1)
        ^ w(2 * a2)
        ^ w(b1 + b3)
        ^ w(b1 + b2 + a1)
        ^ w(b1 + a1 + a2);
    if h1 == 0 {
        return false;
    }
    let h2 = w(a3)
        ^ w(b3)
        ^ w(b1 + a2)
        ^ w(b2 + a1)
        ^ w(b1 + 2 * a1)
        ^ w(2 * b1 + a1)
        ^ w(3 * b1)
        ^ w(3 * a1);
    if h2 == 0 {
        return false;
    }
    w(a3) ^ w(b3) ^ w(b1 + a2) ^ w(b2 + a1) != 0
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

/// How [`count_superregular`] decides each exponent tuple.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CountMethod {
    /// Closed-form conditions (exact), n <= 5.
    Lemma,
    /// Single-equation family (sufficient only), n <= 5.
    Corollary,
    /// Brute-force verdict per tuple, any n.
    BruteForce,
}

impl std::str::FromStr for CountMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<CountMethod, String> {
        match s {
            "lemma" => Ok(CountMethod::Lemma),
            "corollary" => Ok(CountMethod::Corollary),
            "bruteforce" => Ok(CountMethod::BruteForce),
            other => Err(format!("unknown count method '{other}'")),
        }
    }
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CountMethod::Lemma => "lemma",
            CountMethod::Corollary => "corollary",
            CountMethod::BruteForce => "bruteforce",
        };
        f.write_str(s)
    }
}

/// Number of exponent tuples in [0, 2^p - 2]^(n-1) whose n x n matrix passes
/// the chosen predicate. By root invariance the count does not depend on
/// which root is passed; it is still taken explicitly so callers state what
/// they evaluate. The corollary method counts tuples passing the
/// single-equation family on top of the size-4 closed form; it undercounts
/// wherever the family is stricter than necessary.
pub fn count_superregular(
    field: &Arc<FieldSpec>,
    omega: FieldElement,
    n: usize,
    method: CountMethod,
) -> Result<u64, ToeplitzError> {
    if !field.is_root(omega) {
        return Err(ToeplitzError::Galois(GaloisError::NotARoot { value: omega.0 }));
    }
    if n == 0 {
        return Err(ToeplitzError::UnsupportedDimension { n });
    }
    if n == 1 {
        // Only the 1x1 matrix [1].
        return Ok(1);
    }
    let order = field.order();
    match method {
        CountMethod::BruteForce => {
            let mut exps = vec![0u16; n - 1];
            let mut count = 0u64;
            loop {
                let spec =
                    ToeplitzSpec::new(Arc::clone(field), omega, exps.clone()).expect("valid");
                if is_superregular(&spec).verdict {
                    count += 1;
                }
                // Odometer over the tuple space.
                let mut pos = 0;
                loop {
                    if pos == exps.len() {
                        return Ok(count);
                    }
                    exps[pos] += 1;
                    if (exps[pos] as u32) < order {
                        break;
                    }
                    exps[pos] = 0;
                    pos += 1;
                }
            }
        }
        CountMethod::Lemma => match n {
            2 => Ok(order as u64),
            3 => {
                let mut count = 0u64;
                for i1 in 0..order {
                    for i2 in 0..order {
                        if (2 * i1) % order != i2 {
                            count += 1;
                        }
                    }
                }
                Ok(count)
            }
            4 => {
                let mut count = 0u64;
                for i1 in 0..order {
                    for i2 in 0..order {
                        if (2 * i1) % order == i2 {
                            continue;
                        }
                        for i3 in 0..order {
                            if (3 * i1) % order != i3
                                && (i1 + i2) % order != i3
                                && (2 * i2) % order != (i1 + i3) % order
                            {
                                count += 1;
                            }
                        }
                    }
                }
                Ok(count)
            }
            5 => {
                let powers = field.omega_powers(omega).expect("root is nonzero");
                Ok(count_dim5_lemma(order, &powers))
            }
            _ => Err(ToeplitzError::UnsupportedDimension { n }),
        },
        CountMethod::Corollary => match n {
            // Below 5 the family predicate does not apply; the closed forms
            // are the only conditions, so the counts coincide with `Lemma`.
            2 | 3 | 4 => count_superregular(field, omega, n, CountMethod::Lemma),
            5 => {
                let powers = field.omega_powers(omega).expect("root is nonzero");
                Ok(count_dim5_family(order, &powers))
            }
            _ => Err(ToeplitzError::UnsupportedDimension { n }),
        },
    }
}

// Counts via forbidden values of i4: for each admissible (i1,i2,i3) every
// condition of check_n5 excludes at most one value of i4, so the tuple count
// is order minus the number of distinct excluded values. Keeps p = 8 under a
// second where the direct four-level loop takes minutes.
fn count_dim5_lemma(order: u32, powers: &OmegaPowers) -> u64 {
    let n = order;
    let w = |e: u32| powers.get(e as u64);
    let mut total = 0u64;
    for i1 in 0..n {
        for i2 in 0..n {
            if (2 * i1) % n == i2 {
                continue;
            }
            for i3 in 0..n {
                if (3 * i1) % n == i3
                    || (i1 + i2) % n == i3
                    || (2 * i2) % n == (i1 + i3) % n
                {
                    continue;
                }
                let mut forbidden = [0u32; 9];
                let mut cnt = 0usize;
                let push = |v: u32, forbidden: &mut [u32; 9], cnt: &mut usize| {
                    if !forbidden[..*cnt].contains(&v) {
                        forbidden[*cnt] = v;
                        *cnt += 1;
                    }
                };
                push((2 * i1 + i2) % n, &mut forbidden, &mut cnt);
                push((i1 + i3) % n, &mut forbidden, &mut cnt);
                push((2 * i2) % n, &mut forbidden, &mut cnt);
                push((2 * i3 + n - i2) % n, &mut forbidden, &mut cnt);
                push((i2 + i3 + n - i1) % n, &mut forbidden, &mut cnt);
                // Field conditions solved for i4. A zero sum on the far side
                // excludes nothing since omega^i4 is never zero.
                let s1 = w(2 * i2 + i1) ^ w(i2 + i3) ^ w(2 * i1 + i3);
                if let Some(e) = powers.log_of(s1) {
                    push((e as u32 + n - i1 % n) % n, &mut forbidden, &mut cnt);
                }
                // w^(2 i1 + i4) + w^(i2 + i4) = w^i4 * d with d nonzero
                // because 2 i1 != i2 was already enforced.
                let d = w(2 * i1) ^ w(i2);
                let t = w(3 * i2) ^ w(2 * i3);
                if let Some(te) = powers.log_of(t) {
                    let de = powers.log_of(d).expect("nonzero by the 3x3 condition");
                    push((te as u32 + n - de as u32) % n, &mut forbidden, &mut cnt);
                }
                let u3 = w(2 * i1 + i2) ^ w(i1 + i3) ^ w(2 * i2);
                if let Some(e) = powers.log_of(u3) {
                    push(e as u32, &mut forbidden, &mut cnt);
                }
                let u4 = w(2 * i1 + i2) ^ w(4 * i1) ^ w(2 * i2);
                if let Some(e) = powers.log_of(u4) {
                    push(e as u32, &mut forbidden, &mut cnt);
                }
                total += (n - cnt as u32) as u64;
            }
        }
    }
    total
}

fn count_dim5_family(order: u32, powers: &OmegaPowers) -> u64 {
    let n = order;
    let mut total = 0u64;
    for i1 in 0..n {
        for i2 in 0..n {
            if (2 * i1) % n == i2 {
                continue;
            }
            for i3 in 0..n {
                if (3 * i1) % n == i3
                    || (i1 + i2) % n == i3
                    || (2 * i2) % n == (i1 + i3) % n
                {
                    continue;
                }
                for i4 in 0..n {
                    if check_n5_single_family(
                        powers, i1 as Exponent, i2 as Exponent, i3 as Exponent, i4 as Exponent,
                    ) {
                        total += 1;
                    }
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::{default_poly, make_field};
    use crate::toeplitz::RowSource;

    fn gf(p: u32) -> Arc<FieldSpec> {
        make_field(p, default_poly(p).unwrap()).unwrap()
    }

    fn spec(field: &Arc<FieldSpec>, omega: u16, exps: &[u16]) -> ToeplitzSpec {
        ToeplitzSpec::new(Arc::clone(field), FieldElement(omega), exps.to_vec()).unwrap()
    }

    fn pair(field: &Arc<FieldSpec>, omega: u16, a: &[u16], b: &[u16]) -> MatrixPair {
        MatrixPair::new(spec(field, omega, a), spec(field, omega, b)).unwrap()
    }

    #[test]
    fn single_matrix_reference_verdicts() {
        let f8 = gf(8);
        let a10 = spec(&f8, 2, &[125, 35, 109, 219, 83, 177, 191, 39, 23]);
        assert!(is_superregular(&a10).verdict);
        let a10b = spec(&f8, 2, &[1, 0, 0, 3, 5, 10, 36, 86, 83]);
        assert!(is_superregular(&a10b).verdict);

        let f3 = gf(3);
        let one = spec(&f3, 2, &[]);
        assert!(is_superregular(&one).verdict);

        let bad = spec(&f3, 2, &[1, 2]);
        let report = is_superregular(&bad);
        assert!(!report.verdict);
        let w = report.witness.unwrap();
        assert_eq!(w.rows, vec![RowSource::A(2), RowSource::A(3)]);
        assert_eq!(w.cols, vec![1, 2]);
        assert_eq!(format!("{w}"), "rows (2,3) cols (1,2)");
        // The witness really is singular.
        let sel = Selector::new(vec![2, 3], vec![1, 2]).unwrap();
        let sub = bad.dense().submatrix(&sel).unwrap();
        assert_eq!(sub.determinant().unwrap().0, 0);
    }

    #[test]
    fn closed_forms_small_cases() {
        let f3 = gf(3);
        assert!(!check_n3(&f3, 0, 0));
        assert!(!check_n3(&f3, 1, 2));
        assert!(check_n3(&f3, 1, 3));
        assert!(!check_n4(&f3, 1, 3, 3));
        assert!(!check_n4(&f3, 1, 3, 4));
    }

    #[test]
    fn closed_forms_match_bruteforce_gf8() {
        let f3 = gf(3);
        let omega = FieldElement(2);
        let powers = f3.omega_powers(omega).unwrap();
        let n = f3.order() as u16;
        for i1 in 0..n {
            for i2 in 0..n {
                let closed = check_n3(&f3, i1, i2);
                let brute = is_superregular(&spec(&f3, 2, &[i1, i2])).verdict;
                assert_eq!(closed, brute, "n=3 ({i1},{i2})");
                for i3 in 0..n {
                    let closed = closed && check_n4(&f3, i1, i2, i3);
                    let brute = is_superregular(&spec(&f3, 2, &[i1, i2, i3])).verdict;
                    assert_eq!(closed, brute, "n=4 ({i1},{i2},{i3})");
                    for i4 in 0..n {
                        let closed = closed && check_n5(&powers, i1, i2, i3, i4);
                        let brute =
                            is_superregular(&spec(&f3, 2, &[i1, i2, i3, i4])).verdict;
                        assert_eq!(closed, brute, "n=5 ({i1},{i2},{i3},{i4})");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_forms_match_bruteforce_all_roots_gf16() {
        // Spot the full cascade over GF(2^4) for every root, on a strided
        // subset of tuples (the full 15^4 sweep lives in the counting test).
        let f4 = gf(4);
        for &root in &f4.primitive_roots() {
            let powers = f4.omega_powers(root).unwrap();
            for i1 in 0..15u16 {
                for i2 in 0..15u16 {
                    for i3 in (i1 % 3..15u16).step_by(3) {
                        for i4 in (i2 % 5..15u16).step_by(5) {
                            let closed = check_n3(&f4, i1, i2)
                                && check_n4(&f4, i1, i2, i3)
                                && check_n5(&powers, i1, i2, i3, i4);
                            let s = ToeplitzSpec::new(
                                Arc::clone(&f4),
                                root,
                                vec![i1, i2, i3, i4],
                            )
                            .unwrap();
                            assert_eq!(
                                closed,
                                is_superregular(&s).verdict,
                                "root {root} ({i1},{i2},{i3},{i4})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn family_implies_closed_form() {
        let f4 = gf(4);
        let powers = f4.omega_powers(FieldElement(2)).unwrap();
        let mut family_hits = 0;
        for i1 in 0..15u16 {
            for i2 in 0..15u16 {
                for i3 in 0..15u16 {
                    for i4 in 0..15u16 {
                        if check_n5_single_family(&powers, i1, i2, i3, i4) {
                            family_hits += 1;
                            assert!(
                                check_n5(&powers, i1, i2, i3, i4),
                                "family passed but closed form failed ({i1},{i2},{i3},{i4})"
                            );
                        }
                    }
                }
            }
        }
        // Without the size-4 preconditions the family still passes a few
        // hundred tuples; all of them must be genuinely superregular.
        assert!(family_hits > 0);
    }

    #[test]
    fn root_invariance_exhaustive_gf8() {
        let f3 = gf(3);
        let roots = f3.primitive_roots();
        let n = f3.order() as u16;
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    for i4 in 0..n {
                        let verdicts: Vec<bool> = roots
                            .iter()
                            .map(|&r| {
                                let s = ToeplitzSpec::new(
                                    Arc::clone(&f3),
                                    r,
                                    vec![i1, i2, i3, i4],
                                )
                                .unwrap();
                                is_superregular(&s).verdict
                            })
                            .collect();
                        assert!(
                            verdicts.windows(2).all(|w| w[0] == w[1]),
                            "({i1},{i2},{i3},{i4}): {verdicts:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_of_superregular_is_superregular() {
        let f3 = gf(3);
        let n = f3.order() as u16;
        for dim in 3..=5usize {
            let mut tuple = vec![0u16; dim - 1];
            let mut checked = 0;
            'outer: loop {
                let s = spec(&f3, 2, &tuple);
                if is_superregular(&s).verdict {
                    let inv = s.try_inverse().expect("superregular inverse is LTT-expressible");
                    assert!(is_superregular(&inv).verdict, "tuple {tuple:?}");
                    checked += 1;
                }
                let mut pos = 0;
                loop {
                    if pos == tuple.len() {
                        break 'outer;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < n {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
            }
            assert!(checked > 0, "dim {dim}: no superregular matrices found");
        }
    }

    #[test]
    fn joint_exhaustive_gf8_t3() {
        // Exhaustive cross-validation at t = 3 over GF(2^3): brute force,
        // closed form, symmetry, and the implied individual verdicts; the
        // totals pin the number of jointly superregular and product
        // preserving pairs at omega = 2.
        let f3 = gf(3);
        let powers = f3.omega_powers(FieldElement(2)).unwrap();
        let n = f3.order() as u16;
        let mut joint_count = 0u32;
        let mut product_count = 0u32;
        for a1 in 0..n {
            for a2 in 0..n {
                for b1 in 0..n {
                    for b2 in 0..n {
                        let p = pair(&f3, 2, &[a1, a2], &[b1, b2]);
                        let joint = is_jointly_superregular(&p).verdict;
                        assert_eq!(
                            joint,
                            joint_n3_exps(&powers, a1, a2, b1, b2),
                            "closed form disagrees at ({a1},{a2})/({b1},{b2})"
                        );
                        let swapped = pair(&f3, 2, &[b1, b2], &[a1, a2]);
                        assert_eq!(joint, is_jointly_superregular(&swapped).verdict);
                        if joint {
                            joint_count += 1;
                            assert!(is_superregular(&p.a).verdict);
                            assert!(is_superregular(&p.b).verdict);
                            assert!(check_joint_any_n_necessary(&p));
                            let pp = is_product_preserving(&p).verdict;
                            assert_eq!(
                                pp,
                                product_n3_exps(&powers, a1, a2, b1, b2),
                                "product closed form disagrees at ({a1},{a2})/({b1},{b2})"
                            );
                            assert_eq!(pp, is_product_preserving(&swapped).verdict);
                            if pp {
                                product_count += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(joint_count, 420);
        assert_eq!(product_count, 252);
    }

    #[test]
    fn joint_t2_matches_first_exponent_rule() {
        let f3 = gf(3);
        let n = f3.order() as u16;
        let mut count = 0;
        for a1 in 0..n {
            for b1 in 0..n {
                let p = pair(&f3, 2, &[a1], &[b1]);
                let brute = is_jointly_superregular(&p).verdict;
                assert_eq!(brute, check_joint_n2(&p), "({a1})/({b1})");
                if brute {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 42);
    }

    #[test]
    fn section5_pairs_reference_verdicts() {
        let f8 = gf(8);
        let p6 = pair(&f8, 2, &[0, 2, 5, 0, 15], &[1, 0, 4, 9, 30]);
        assert!(is_jointly_superregular(&p6).verdict);
        assert!(is_product_preserving(&p6).verdict);
        assert!(check_joint_any_n_necessary(&p6));

        let p7 = pair(&f8, 2, &[6, 0, 0, 4, 136, 133], &[7, 2, 3, 11, 77, 157]);
        assert!(is_jointly_superregular(&p7).verdict);
        assert!(!is_product_preserving(&p7).verdict);
    }

    #[test]
    fn coinciding_coordinate_blocks_jointness() {
        let f8 = gf(8);
        let p = pair(&f8, 2, &[3, 7], &[3, 9]);
        assert!(!check_joint_n2(&p));
        assert!(!check_joint_any_n_necessary(&p));
        assert!(!is_jointly_superregular(&p).verdict);
        // Collision in a later coordinate.
        let p = pair(&f8, 2, &[3, 7], &[4, 7]);
        assert!(check_joint_n2(&p));
        assert!(!check_joint_any_n_necessary(&p));
        assert!(!is_jointly_superregular(&p).verdict);
    }

    #[test]
    fn joint_witness_reports_sources() {
        let f3 = gf(3);
        let p = pair(&f3, 2, &[0, 0], &[0, 1]);
        let report = is_jointly_superregular(&p);
        assert!(!report.verdict);
        let w = report.witness.unwrap();
        assert_eq!(w.rows.len(), w.cols.len());
        assert!(w.rows.iter().any(|r| matches!(r, RowSource::B(_)))
            || w.rows.iter().all(|r| matches!(r, RowSource::A(_))));
        let shown = format!("{w}");
        assert!(shown.contains("rows") && shown.contains("cols"), "{shown}");
    }

    #[test]
    fn pair_with_inverse_is_never_joint() {
        let f3 = gf(3);
        let n = f3.order() as u16;
        for dim in 2..=5usize {
            let mut tuple = vec![0u16; dim - 1];
            let mut tested = 0;
            'outer: loop {
                let s = spec(&f3, 2, &tuple);
                if is_superregular(&s).verdict {
                    let inv = s.try_inverse().unwrap();
                    let p = MatrixPair::new(s.clone(), inv).unwrap();
                    assert!(!is_jointly_superregular(&p).verdict, "tuple {tuple:?}");
                    if dim <= 4 {
                        // The product with the inverse is the identity,
                        // which is not superregular past 1x1: a superregular
                        // partner with non-superregular product always
                        // exists.
                        let prod = p.a.dense().multiply(&p.b.dense()).unwrap();
                        assert!(!dense_superregular(&prod).unwrap().verdict);
                    }
                    tested += 1;
                }
                let mut pos = 0;
                loop {
                    if pos == tuple.len() {
                        break 'outer;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < n {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
            }
            assert!(tested > 0);
        }
    }

    #[test]
    fn counts_match_reference_table_small() {
        let f3 = gf(3);
        let w = FieldElement(2);
        assert_eq!(count_superregular(&f3, w, 5, CountMethod::Lemma).unwrap(), 84);
        assert_eq!(
            count_superregular(&f3, w, 5, CountMethod::BruteForce).unwrap(),
            84
        );
        assert_eq!(count_superregular(&f3, w, 5, CountMethod::Corollary).unwrap(), 0);

        let f4 = gf(4);
        assert_eq!(
            count_superregular(&f4, w, 5, CountMethod::Lemma).unwrap(),
            17280
        );

        let f2 = gf(2);
        assert_eq!(count_superregular(&f2, w, 5, CountMethod::Lemma).unwrap(), 0);
        assert_eq!(count_superregular(&f2, w, 3, CountMethod::Lemma).unwrap(), 6);
        assert_eq!(
            count_superregular(&f2, w, 3, CountMethod::BruteForce).unwrap(),
            6
        );
        assert_eq!(count_superregular(&f2, w, 4, CountMethod::Lemma).unwrap(), 0);
    }

    #[test]
    fn lemma_count_matches_direct_predicate_loop() {
        // The forbidden-value counting shortcut must agree with literally
        // evaluating the closed form on every tuple.
        for p in [3u32, 4] {
            let field = gf(p);
            let omega = FieldElement(2);
            let powers = field.omega_powers(omega).unwrap();
            let n = field.order() as u16;
            let mut direct = 0u64;
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        for i4 in 0..n {
                            if check_n3(&field, i1, i2)
                                && check_n4(&field, i1, i2, i3)
                                && check_n5(&powers, i1, i2, i3, i4)
                            {
                                direct += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(
                count_superregular(&field, omega, 5, CountMethod::Lemma).unwrap(),
                direct,
                "p={p}"
            );
        }
    }

    #[test]
    fn count_rejects_bad_inputs() {
        let f3 = gf(3);
        assert!(matches!(
            count_superregular(&f3, FieldElement(2), 0, CountMethod::Lemma),
            Err(ToeplitzError::UnsupportedDimension { n: 0 })
        ));
        assert!(matches!(
            count_superregular(&f3, FieldElement(2), 6, CountMethod::Lemma),
            Err(ToeplitzError::UnsupportedDimension { n: 6 })
        ));
        assert!(matches!(
            count_superregular(&f3, FieldElement(3), 3, CountMethod::Lemma),
            Err(ToeplitzError::Galois(GaloisError::NotARoot { value: 3 }))
        ));
        assert_eq!(
            count_superregular(&f3, FieldElement(2), 1, CountMethod::BruteForce).unwrap(),
            1
        );
    }

    #[test]
    fn counts_are_root_invariant() {
        let f4 = gf(4);
        let counts: Vec<u64> = f4
            .primitive_roots()
            .iter()
            .map(|&r| count_superregular(&f4, r, 5, CountMethod::Lemma).unwrap())
            .collect();
        assert!(counts.iter().all(|&c| c == 17280), "{counts:?}");
    }
}
