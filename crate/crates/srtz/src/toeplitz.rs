//! Lower-triangular Toeplitz (LTT) matrices with unit diagonal, dense
//! matrices over GF(2^p), and the selector machinery for their square
//! submatrices.
//!
//! An LTT matrix here is described compactly by a root omega and the
//! exponent vector of its first column: column entries are
//! [1, omega^{i_1}, ..., omega^{i_{n-1}}] and every other column is the
//! same sequence shifted down. Submatrices are addressed by selectors, a
//! pair of strictly increasing 1-based row and column index lists.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::galois::{make_field, Exponent, FieldElement, FieldSpec, GaloisError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToeplitzError {
    NotSquare { rows: usize, cols: usize },
    /// Two dimensions that had to agree did not.
    DimensionMismatch { left: usize, right: usize },
    UnsupportedDimension { n: usize },
    IndexOutOfBounds { index: usize, bound: usize },
    InvalidSelector { reason: &'static str },
    /// The two halves of a pair disagree on field, root, or size.
    PairMismatch { reason: &'static str },
    Galois(GaloisError),
}

impl fmt::Display for ToeplitzError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToeplitzError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            ToeplitzError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            ToeplitzError::UnsupportedDimension { n } => {
                write!(f, "unsupported dimension {n}")
            }
            ToeplitzError::IndexOutOfBounds { index, bound } => {
                write!(f, "index {index} out of bounds for size {bound}")
            }
            ToeplitzError::InvalidSelector { reason } => {
                write!(f, "invalid selector: {reason}")
            }
            ToeplitzError::PairMismatch { reason } => {
                write!(f, "mismatched pair: {reason}")
            }
            ToeplitzError::Galois(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ToeplitzError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ToeplitzError::Galois(e) => Some(e),
            _ => None,
        }
    }
}

impl From<GaloisError> for ToeplitzError {
    fn from(e: GaloisError) -> Self {
        ToeplitzError::Galois(e)
    }
}

/// Unit-diagonal LTT matrix in exponent form: omega plus the subdiagonal
/// exponent vector i_1..i_{n-1}. The matrix itself is n x n.
#[derive(Clone)]
pub struct ToeplitzSpec {
    field: Arc<FieldSpec>,
    omega: FieldElement,
    exponents: Vec<Exponent>,
}

impl ToeplitzSpec {
    /// Builds the spec, checking that omega is a root of the defining
    /// polynomial and every exponent lies in [0, 2^p - 2].
    pub fn new(
        field: Arc<FieldSpec>,
        omega: FieldElement,
        exponents: Vec<Exponent>,
    ) -> Result<ToeplitzSpec, GaloisError> {
        if !field.is_root(omega) {
            return Err(GaloisError::NotARoot { value: omega.0 });
        }
        for &e in &exponents {
            field.validate_exponent(e as u32)?;
        }
        Ok(ToeplitzSpec { field, omega, exponents })
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn omega(&self) -> FieldElement {
        self.omega
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exponents
    }

    /// Matrix dimension, one more than the exponent count.
    pub fn n(&self) -> usize {
        self.exponents.len() + 1
    }

    /// Appends one exponent, growing the matrix from n x n to (n+1) x (n+1)
    /// with the old matrix as its leading principal block.
    pub fn extend(&self, e: Exponent) -> Result<ToeplitzSpec, GaloisError> {
        self.field.validate_exponent(e as u32)?;
        let mut exponents = self.exponents.clone();
        exponents.push(e);
        Ok(ToeplitzSpec {
            field: Arc::clone(&self.field),
            omega: self.omega,
            exponents,
        })
    }

    /// First column as field values: [1, omega^{i_1}, ..., omega^{i_{n-1}}].
    pub fn first_column(&self) -> Vec<FieldElement> {
        let mut col = Vec::with_capacity(self.n());
        col.push(FieldElement(1));
        for &e in &self.exponents {
            // exponents are pre-validated, omega is a nonzero root
            col.push(self.field.omega_pow(self.omega, e as u64).unwrap());
        }
        col
    }

    pub fn dense(&self) -> DenseMatrix {
        DenseMatrix::lower_toeplitz(Arc::clone(&self.field), &self.first_column())
    }

    /// First column of the inverse matrix. The inverse of a unit-diagonal
    /// LTT matrix is again unit-diagonal LTT, so this determines it fully.
    pub fn inverse_first_column(&self) -> Vec<FieldElement> {
        let col = self.first_column();
        let n = col.len();
        let mut inv = vec![FieldElement(0); n];
        inv[0] = FieldElement(1);
        // Unit diagonal: row t of A * inv(A) reads sum_j c_{t-j} v_j = 0,
        // so v_t collects the lower terms (addition is XOR).
        for t in 1..n {
            let mut acc = FieldElement(0);
            for j in 0..t {
                acc ^= self.field.mul(col[t - j], inv[j]);
            }
            inv[t] = acc;
        }
        inv
    }

    /// Inverse in exponent form. Returns None when some subdiagonal entry of
    /// the inverse is zero; the inverse matrix still exists then, it just has
    /// no representation with a full exponent vector.
    pub fn try_inverse(&self) -> Option<ToeplitzSpec> {
        let powers = self.field.omega_powers(self.omega).ok()?;
        let mut exponents = Vec::with_capacity(self.exponents.len());
        for v in self.inverse_first_column().into_iter().skip(1) {
            exponents.push(powers.log_of(v)?);
        }
        Some(ToeplitzSpec {
            field: Arc::clone(&self.field),
            omega: self.omega,
            exponents,
        })
    }
}

impl fmt::Debug for ToeplitzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToeplitzSpec")
            .field("p", &self.field.p())
            .field("omega", &self.omega.0)
            .field("exponents", &self.exponents)
            .finish()
    }
}

/// Which matrix of a pair a stacked row came from (1-based row index).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum RowSource {
    A(usize),
    B(usize),
}

impl fmt::Display for RowSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowSource::A(r) => write!(f, "A{r}"),
            RowSource::B(r) => write!(f, "B{r}"),
        }
    }
}

/// Row-major dense matrix over one field, with optional per-row source tags
/// for stacked constructions.
#[derive(Clone)]
pub struct DenseMatrix {
    field: Arc<FieldSpec>,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
    tags: Option<Vec<RowSource>>,
}

impl DenseMatrix {
    pub fn zero(field: Arc<FieldSpec>, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix {
            field,
            rows,
            cols,
            data: vec![FieldElement(0); rows * cols],
            tags: None,
        }
    }

    pub fn identity(field: Arc<FieldSpec>, n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = FieldElement(1);
        }
        m
    }

    pub(crate) fn lower_toeplitz(field: Arc<FieldSpec>, col: &[FieldElement]) -> DenseMatrix {
        let n = col.len();
        let mut m = DenseMatrix::zero(field, n, n);
        for r in 0..n {
            for c in 0..=r {
                m.data[r * n + c] = col[r - c];
            }
        }
        m
    }

    pub fn from_rows(
        field: Arc<FieldSpec>,
        rows: Vec<Vec<FieldElement>>,
    ) -> Result<DenseMatrix, ToeplitzError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(ToeplitzError::DimensionMismatch { left: ncols, right: row.len() });
            }
            data.extend(row);
        }
        Ok(DenseMatrix { field, rows: nrows, cols: ncols, data, tags: None })
    }

    pub fn with_tags(mut self, tags: Vec<RowSource>) -> Result<DenseMatrix, ToeplitzError> {
        if tags.len() != self.rows {
            return Err(ToeplitzError::DimensionMismatch { left: self.rows, right: tags.len() });
        }
        self.tags = Some(tags);
        Ok(self)
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn tags(&self) -> Option<&[RowSource]> {
        self.tags.as_deref()
    }

    /// Entry at 0-based (r, c).
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Square submatrix picked by a selector, carrying over row tags.
    pub fn submatrix(&self, sel: &Selector) -> Result<DenseMatrix, ToeplitzError> {
        sel.validate_bounds(self.rows, self.cols)?;
        let k = sel.size();
        let mut data = Vec::with_capacity(k * k);
        for &r in &sel.rows {
            for &c in &sel.cols {
                data.push(self.at(r - 1, c - 1));
            }
        }
        let tags = self
            .tags
            .as_ref()
            .map(|t| sel.rows.iter().map(|&r| t[r - 1]).collect());
        Ok(DenseMatrix {
            field: Arc::clone(&self.field),
            rows: k,
            cols: k,
            data,
            tags,
        })
    }

    pub fn multiply(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, ToeplitzError> {
        if self.cols != rhs.rows {
            return Err(ToeplitzError::DimensionMismatch { left: self.cols, right: rhs.rows });
        }
        let mut out = DenseMatrix::zero(Arc::clone(&self.field), self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.0 == 0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    let prod = self.field.mul(a, rhs.at(k, c));
                    out.data[r * rhs.cols + c] ^= prod;
                }
            }
        }
        Ok(out)
    }

    /// Determinant by Gaussian elimination with first-nonzero pivoting.
    /// In characteristic 2 row swaps do not change the sign.
    pub fn determinant(&self) -> Result<FieldElement, ToeplitzError> {
        if self.rows != self.cols {
            return Err(ToeplitzError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.data.clone();
        let mut det = FieldElement(1);
        for col in 0..n {
            let pivot = match (col..n).find(|&r| m[r * n + col].0 != 0) {
                Some(r) => r,
                None => return Ok(FieldElement(0)),
            };
            if pivot != col {
                for c in 0..n {
                    m.swap(pivot * n + c, col * n + c);
                }
            }
            let pv = m[col * n + col];
            det = self.field.mul(det, pv);
            let pinv = self.field.inv(pv).unwrap();
            for r in col + 1..n {
                let lead = m[r * n + col];
                if lead.0 == 0 {
                    continue;
                }
                let factor = self.field.mul(lead, pinv);
                for c in col..n {
                    let sub = self.field.mul(factor, m[col * n + c]);
                    m[r * n + c] ^= sub;
                }
            }
        }
        Ok(det)
    }

    pub fn rank(&self) -> usize {
        let (nr, nc) = (self.rows, self.cols);
        let mut m = self.data.clone();
        let mut rank = 0;
        for col in 0..nc {
            let pivot = match (rank..nr).find(|&r| m[r * nc + col].0 != 0) {
                Some(r) => r,
                None => continue,
            };
            if pivot != rank {
                for c in 0..nc {
                    m.swap(pivot * nc + c, rank * nc + c);
                }
            }
            let pinv = self.field.inv(m[rank * nc + col]).unwrap();
            for r in 0..nr {
                if r == rank || m[r * nc + col].0 == 0 {
                    continue;
                }
                let factor = self.field.mul(m[r * nc + col], pinv);
                for c in col..nc {
                    let sub = self.field.mul(factor, m[rank * nc + c]);
                    m[r * nc + c] ^= sub;
                }
            }
            rank += 1;
            if rank == nr {
                break;
            }
        }
        rank
    }

    /// Inverse by Gauss-Jordan. Ok(None) when singular.
    pub fn inverse(&self) -> Result<Option<DenseMatrix>, ToeplitzError> {
        if self.rows != self.cols {
            return Err(ToeplitzError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.data.clone();
        let mut out = DenseMatrix::identity(Arc::clone(&self.field), n);
        for col in 0..n {
            let pivot = match (col..n).find(|&r| m[r * n + col].0 != 0) {
                Some(r) => r,
                None => return Ok(None),
            };
            if pivot != col {
                for c in 0..n {
                    m.swap(pivot * n + c, col * n + c);
                    out.data.swap(pivot * n + c, col * n + c);
                }
            }
            let pinv = self.field.inv(m[col * n + col]).unwrap();
            for c in 0..n {
                m[col * n + c] = self.field.mul(m[col * n + c], pinv);
                out.data[col * n + c] = self.field.mul(out.data[col * n + c], pinv);
            }
            for r in 0..n {
                if r == col || m[r * n + col].0 == 0 {
                    continue;
                }
                let factor = m[r * n + col];
                for c in 0..n {
                    let s1 = self.field.mul(factor, m[col * n + c]);
                    m[r * n + c] ^= s1;
                    let s2 = self.field.mul(factor, out.data[col * n + c]);
                    out.data[r * n + c] ^= s2;
                }
            }
        }
        Ok(Some(out))
    }
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.field.p() == other.field.p()
            && self.field.poly() == other.field.poly()
            && self.rows == other.rows
            && self.cols == other.cols
            && self.data == other.data
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} over GF(2^{})", self.rows, self.cols, self.field.p())?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
            if r + 1 < self.rows {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Row/column index lists naming a square submatrix. Indices are 1-based and
/// strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Selector {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Selector {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Selector, ToeplitzError> {
        if rows.is_empty() {
            return Err(ToeplitzError::InvalidSelector { reason: "empty index lists" });
        }
        if rows.len() != cols.len() {
            return Err(ToeplitzError::InvalidSelector { reason: "row/column counts differ" });
        }
        let increasing =
            |v: &[usize]| v[0] >= 1 && v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&rows) || !increasing(&cols) {
            return Err(ToeplitzError::InvalidSelector {
                reason: "indices must be 1-based and strictly increasing",
            });
        }
        Ok(Selector { rows, cols })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    fn validate_bounds(&self, rows: usize, cols: usize) -> Result<(), ToeplitzError> {
        let rmax = *self.rows.last().unwrap_or(&0);
        if rmax > rows {
            return Err(ToeplitzError::IndexOutOfBounds { index: rmax, bound: rows });
        }
        let cmax = *self.cols.last().unwrap_or(&0);
        if cmax > cols {
            return Err(ToeplitzError::IndexOutOfBounds { index: cmax, bound: cols });
        }
        Ok(())
    }

    /// Domination: the t-th selected row is at or below the t-th selected
    /// column, for every t.
    pub fn is_dominated(&self) -> bool {
        self.rows.iter().zip(&self.cols).all(|(&j, &h)| j >= h)
    }

    /// Proper for an m x m matrix: in bounds and dominated.
    pub fn is_proper_for(&self, m: usize) -> bool {
        self.validate_bounds(m, m).is_ok() && self.is_dominated()
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows ({}) cols ({})",
            self.rows.iter().join(","),
            self.cols.iter().join(",")
        )
    }
}

/// All proper selectors of an m x m matrix: every size r = 1..=m, every
/// dominated pair of increasing index lists. Deterministic order: by size,
/// then rows lexicographically, then columns.
pub fn proper_selectors(m: usize) -> impl Iterator<Item = Selector> {
    (1..=m).flat_map(move |r| {
        (1..=m)
            .combinations(r)
            .cartesian_product((1..=m).combinations(r))
            .filter(|(rows, cols)| rows.iter().zip(cols).all(|(&j, &h)| j >= h))
            .map(|(rows, cols)| Selector { rows, cols })
    })
}

/// The selectors that are new when an (l-1) x (l-1) matrix grows to l x l:
/// exactly the proper selectors of the l x l matrix that use row l and
/// column 1. Emitted as the single entry (l, 1), then the intermediate
/// sizes, then the full l x l selector (whose determinant is 1 for a
/// unit-diagonal lower-triangular matrix, kept for uniformity).
pub fn incremental_selectors(l: usize) -> impl Iterator<Item = Selector> {
    assert!(l >= 2, "incremental selectors start at dimension 2");
    let single = std::iter::once(Selector { rows: vec![l], cols: vec![1] });
    let mids = (2..l).flat_map(move |s| {
        (1..l)
            .combinations(s - 1)
            .cartesian_product((2..=l).combinations(s - 1))
            .filter_map(move |(mut rows, cols_tail)| {
                rows.push(l);
                let mut cols = Vec::with_capacity(s);
                cols.push(1);
                cols.extend(cols_tail);
                if rows.iter().zip(&cols).all(|(&j, &h)| j >= h) {
                    Some(Selector { rows, cols })
                } else {
                    None
                }
            })
    });
    let full = std::iter::once(Selector {
        rows: (1..=l).collect(),
        cols: (1..=l).collect(),
    });
    single.chain(mids).chain(full)
}

/// Trivial rank deficiency: sort rows by support (the number of nonzero
/// entries in the row), then check whether the i-th smallest support is
/// below i. This is the filter used when testing stacked submatrices:
/// rows drawn from lower-triangular stacks have their nonzeros packed to
/// the left, so i rows with support under i are confined to i-1 columns
/// and force a zero determinant. On general matrices the test is a
/// support-count heuristic, not a singularity proof (it flags the k x k
/// identity for k >= 2). The sort is stable; ties do not affect the
/// verdict.
pub fn is_trivially_rank_deficient(m: &DenseMatrix) -> Result<bool, ToeplitzError> {
    if m.rows() != m.cols() {
        return Err(ToeplitzError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let mut supports: Vec<usize> = (0..m.rows())
        .map(|r| (0..m.cols()).filter(|&c| m.at(r, c).0 != 0).count())
        .collect();
    supports.sort();
    Ok(supports.iter().enumerate().any(|(i, &s)| s < i + 1))
}

/// Two LTT matrices over one field with one shared root and equal size,
/// usually examined through their row-stacked combinations.
#[derive(Clone, Debug)]
pub struct MatrixPair {
    pub a: ToeplitzSpec,
    pub b: ToeplitzSpec,
}

impl MatrixPair {
    pub fn new(a: ToeplitzSpec, b: ToeplitzSpec) -> Result<MatrixPair, ToeplitzError> {
        if a.field().p() != b.field().p() || a.field().poly() != b.field().poly() {
            return Err(ToeplitzError::PairMismatch { reason: "different fields" });
        }
        if a.omega() != b.omega() {
            return Err(ToeplitzError::PairMismatch { reason: "different roots" });
        }
        if a.n() != b.n() {
            return Err(ToeplitzError::PairMismatch { reason: "different sizes" });
        }
        Ok(MatrixPair { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        self.a.field()
    }

    pub fn omega(&self) -> FieldElement {
        self.a.omega()
    }
}

/// On-disk form of one matrix: field parameters plus the exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub p: u32,
    pub poly: u32,
    pub omega: u16,
    pub n: usize,
    pub exponents: Vec<u16>,
}

impl MatrixFile {
    pub fn from_spec(spec: &ToeplitzSpec) -> MatrixFile {
        MatrixFile {
            p: spec.field().p(),
            poly: spec.field().poly(),
            omega: spec.omega().0,
            n: spec.n(),
            exponents: spec.exponents().to_vec(),
        }
    }

    pub fn into_spec(&self) -> Result<ToeplitzSpec, ToeplitzError> {
        if self.n != self.exponents.len() + 1 {
            return Err(ToeplitzError::DimensionMismatch {
                left: self.n,
                right: self.exponents.len() + 1,
            });
        }
        let field = make_field(self.p, self.poly)?;
        let omega = field.element(self.omega as u32)?;
        Ok(ToeplitzSpec::new(field, omega, self.exponents.clone())?)
    }
}
