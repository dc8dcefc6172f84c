//! Rate-1/m erasure codec built from an identity branch plus lower-triangular
//! Toeplitz coding branches.
//!
//! A generation is a block of k source rows of l bytes each. The encoder emits
//! m rows per source row: the systematic copy (branch 0) and one coded row per
//! Toeplitz branch. Because every branch is lower triangular, coded row t
//! depends on source rows 1..t only, so rows can be emitted as soon as their
//! source prefix is available.
//!
//! Decoding assembles the coefficient rows named by (branch, index) and runs
//! Gauss-Jordan elimination over the field; a generation decodes exactly when
//! those rows reach rank k. Recoding rewrites a full branch through a second
//! lower-triangular matrix, which multiplies the branch coefficients on the
//! left without touching the other branches.
//!
//! Symbols are bytes, so the field degree must be at most 8.

use std::error::Error;
use std::fmt;
use std::sync::Arc;

use crate::galois::{FieldElement, FieldSpec};
use crate::toeplitz::{DenseMatrix, ToeplitzSpec};

/// Errors from encoding, decoding, and recoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    /// Field degree above 8; payload symbols are single bytes.
    UnsupportedField { p: u32 },
    /// A coding branch does not match the stack's field or size.
    BranchMismatch { reason: &'static str },
    /// Source block shape does not match the generator.
    DimensionMismatch { expected: usize, got: usize },
    /// A payload byte is not an element of the field.
    InvalidSymbol { value: u8 },
    /// A received row is inconsistent with the generator or its peers.
    InvalidRow { reason: &'static str },
    /// Recoding needs every row of the branch exactly once.
    IncompleteBranch { got: usize, needed: usize },
    /// The recoding matrix is not square lower triangular of size k.
    InvalidRecodingMatrix { reason: &'static str },
    /// Received rows span too small a space; carries the achieved rank.
    Undecodable { rank: usize, needed: usize },
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::UnsupportedField { p } => {
                write!(f, "codec needs p <= 8 for byte symbols, got p = {}", p)
            }
            CodecError::BranchMismatch { reason } => write!(f, "branch mismatch: {}", reason),
            CodecError::DimensionMismatch { expected, got } => {
                write!(f, "expected {} rows, got {}", expected, got)
            }
            CodecError::InvalidSymbol { value } => {
                write!(f, "byte {:#04x} is not a field element", value)
            }
            CodecError::InvalidRow { reason } => write!(f, "invalid coded row: {}", reason),
            CodecError::IncompleteBranch { got, needed } => {
                write!(f, "recoding needs all {} branch rows, got {}", needed, got)
            }
            CodecError::InvalidRecodingMatrix { reason } => {
                write!(f, "invalid recoding matrix: {}", reason)
            }
            CodecError::Undecodable { rank, needed } => {
                write!(f, "undecodable: rank {} of {} needed", rank, needed)
            }
        }
    }
}

impl Error for CodecError {}

/// Order in which the encoder emits rows of a generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionOrder {
    /// Round-robin by time step: I_1, A_1, B_1, I_2, A_2, B_2, ...
    Interleaved,
    /// Branch by branch: I_1..I_k, A_1..A_k, B_1..B_k.
    Blockwise,
}

/// One emitted row of a generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedRow {
    /// 0 for the systematic branch, 1..m-1 for the coding branches.
    pub branch: u8,
    /// 1-based time step within the generation.
    pub index: u16,
    /// Generation this row belongs to.
    pub generation: u32,
    /// l field symbols, one byte each.
    pub payload: Vec<u8>,
}

/// The generator of a rate-1/m code: the implicit identity branch plus
/// m-1 lower-triangular Toeplitz branches of size k over one field.
#[derive(Debug, Clone)]
pub struct GeneratorStack {
    field: Arc<FieldSpec>,
    k: usize,
    branches: Vec<ToeplitzSpec>,
    dense: Vec<DenseMatrix>,
    order: EmissionOrder,
}

impl GeneratorStack {
    /// Builds a stack from the coding branches; branch 0 is always the
    /// identity and is not listed. An empty branch list gives m = 1.
    pub fn new(
        field: Arc<FieldSpec>,
        k: usize,
        branches: Vec<ToeplitzSpec>,
        order: EmissionOrder,
    ) -> Result<GeneratorStack, CodecError> {
        if field.p() > 8 {
            return Err(CodecError::UnsupportedField { p: field.p() });
        }
        if k == 0 || k > u16::MAX as usize {
            return Err(CodecError::BranchMismatch {
                reason: "generation size must be between 1 and 65535",
            });
        }
        if branches.len() + 1 > u8::MAX as usize {
            return Err(CodecError::BranchMismatch {
                reason: "at most 254 coding branches",
            });
        }
        for b in &branches {
            if b.n() != k {
                return Err(CodecError::BranchMismatch {
                    reason: "branch size differs from generation size",
                });
            }
            if b.field().p() != field.p() || b.field().poly() != field.poly() {
                return Err(CodecError::BranchMismatch {
                    reason: "branch field differs from stack field",
                });
            }
        }
        let dense = branches.iter().map(|b| b.dense()).collect();
        Ok(GeneratorStack {
            field,
            k,
            branches,
            dense,
            order,
        })
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of branches including the identity.
    pub fn m(&self) -> usize {
        self.branches.len() + 1
    }

    /// Rows emitted per generation.
    pub fn emitted_rows(&self) -> usize {
        self.m() * self.k
    }

    pub fn order(&self) -> EmissionOrder {
        self.order
    }

    pub fn branches(&self) -> &[ToeplitzSpec] {
        &self.branches
    }

    /// Coefficient row of `branch` at 1-based time step `index`: the weights
    /// applied to source rows 1..k to form that coded row.
    pub fn coefficient_row(&self, branch: u8, index: u16) -> Result<Vec<FieldElement>, CodecError> {
        if branch as usize >= self.m() {
            return Err(CodecError::InvalidRow {
                reason: "branch id out of range",
            });
        }
        if index == 0 || index as usize > self.k {
            return Err(CodecError::InvalidRow {
                reason: "row index out of range",
            });
        }
        let t = index as usize - 1;
        if branch == 0 {
            let mut row = vec![FieldElement(0); self.k];
            row[t] = FieldElement(1);
            return Ok(row);
        }
        Ok(self.dense[branch as usize - 1].row(t).to_vec())
    }

    fn check_source(&self, source: &[Vec<u8>]) -> Result<usize, CodecError> {
        if source.len() != self.k {
            return Err(CodecError::DimensionMismatch {
                expected: self.k,
                got: source.len(),
            });
        }
        let l = source[0].len();
        for row in source {
            if row.len() != l {
                return Err(CodecError::InvalidRow {
                    reason: "source rows differ in length",
                });
            }
            check_symbols(&self.field, row)?;
        }
        Ok(l)
    }

    /// Encodes one generation, emitting m*k rows in the stack's order.
    pub fn encode(&self, source: &[Vec<u8>], generation: u32) -> Result<Vec<CodedRow>, CodecError> {
        let l = self.check_source(source)?;
        let mut out = Vec::with_capacity(self.emitted_rows());
        let emit = |out: &mut Vec<CodedRow>, branch: u8, t: usize| {
            let payload = if branch == 0 {
                source[t].clone()
            } else {
                let coeffs = self.dense[branch as usize - 1].row(t);
                let mut acc = vec![0u8; l];
                // Lower triangular: only source rows 1..=t+1 contribute.
                for (s, row) in source.iter().enumerate().take(t + 1) {
                    combine_into(&self.field, &mut acc, row, coeffs[s]);
                }
                acc
            };
            out.push(CodedRow {
                branch,
                index: (t + 1) as u16,
                generation,
                payload,
            });
        };
        match self.order {
            EmissionOrder::Interleaved => {
                for t in 0..self.k {
                    for branch in 0..self.m() {
                        emit(&mut out, branch as u8, t);
                    }
                }
            }
            EmissionOrder::Blockwise => {
                for branch in 0..self.m() {
                    for t in 0..self.k {
                        emit(&mut out, branch as u8, t);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Recovers the k source rows from any subset of received rows whose
    /// coefficient rows reach rank k. Duplicate (branch, index) pairs keep
    /// the first copy.
    pub fn decode(&self, received: &[CodedRow]) -> Result<Vec<Vec<u8>>, CodecError> {
        let (rank, solution) = self.solve(received)?;
        solution.ok_or(CodecError::Undecodable {
            rank,
            needed: self.k,
        })
    }

    /// Rank of the coefficient rows named by `received`, plus the solved
    /// source block when that rank is k.
    fn solve(&self, received: &[CodedRow]) -> Result<(usize, Option<Vec<Vec<u8>>>), CodecError> {
        if received.is_empty() {
            return Ok((0, None));
        }
        let generation = received[0].generation;
        let l = received[0].payload.len();
        let mut seen = Vec::new();
        let mut coeff = Vec::new();
        let mut payload = Vec::new();
        for row in received {
            if row.generation != generation {
                return Err(CodecError::InvalidRow {
                    reason: "rows from different generations",
                });
            }
            if row.payload.len() != l {
                return Err(CodecError::InvalidRow {
                    reason: "payload lengths differ",
                });
            }
            check_symbols(&self.field, &row.payload)?;
            let key = (row.branch, row.index);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            coeff.push(self.coefficient_row(row.branch, row.index)?);
            payload.push(row.payload.clone());
        }

        // Gauss-Jordan over the augmented system (coeff | payload).
        let k = self.k;
        let mut rank = 0usize;
        let mut pivot_col = Vec::with_capacity(k);
        for col in 0..k {
            let Some(p) = (rank..coeff.len()).find(|&r| coeff[r][col].0 != 0) else {
                continue;
            };
            coeff.swap(rank, p);
            payload.swap(rank, p);
            let inv = self
                .field
                .inv(coeff[rank][col])
                .expect("pivot is nonzero");
            if inv.0 != 1 {
                for c in col..k {
                    coeff[rank][c] = self.field.mul(inv, coeff[rank][c]);
                }
                scale_in_place(&self.field, &mut payload[rank], inv);
            }
            for r in 0..coeff.len() {
                if r == rank || coeff[r][col].0 == 0 {
                    continue;
                }
                let f = coeff[r][col];
                let (head, tail) = split_rows(&mut coeff, r, rank);
                for c in col..k {
                    head[c] ^= self.field.mul(f, tail[c]);
                }
                let (head, tail) = split_rows(&mut payload, r, rank);
                combine_into(&self.field, head, tail, f);
            }
            pivot_col.push(col);
            rank += 1;
        }
        if rank < k {
            return Ok((rank, None));
        }
        let mut out = vec![Vec::new(); k];
        for (r, &col) in pivot_col.iter().enumerate() {
            out[col] = std::mem::take(&mut payload[r]);
        }
        Ok((rank, Some(out)))
    }

    /// Encodes `source`, drops the rows named by `erasures` (branch, index),
    /// and reports what a decoder would see.
    pub fn simulate(
        &self,
        source: &[Vec<u8>],
        erasures: &[(u8, u16)],
        generation: u32,
    ) -> Result<DecodeOutcome, CodecError> {
        let emitted = self.encode(source, generation)?;
        let received: Vec<CodedRow> = emitted
            .into_iter()
            .filter(|row| !erasures.contains(&(row.branch, row.index)))
            .collect();
        let names = received.iter().map(|r| (r.branch, r.index)).collect();
        let (rank, solution) = self.solve(&received)?;
        let correct = solution.as_deref() == Some(source);
        Ok(DecodeOutcome {
            received: names,
            rank,
            success: solution.is_some(),
            correct,
            recovered: solution,
        })
    }
}

/// Result of a simulated encode-erase-decode round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// (branch, index) of every row that survived the erasures.
    pub received: Vec<(u8, u16)>,
    /// Rank of the surviving coefficient rows.
    pub rank: usize,
    /// Whether the rank reached k.
    pub success: bool,
    /// Whether the recovered block equals the source exactly.
    pub correct: bool,
    /// The recovered block, when successful.
    pub recovered: Option<Vec<Vec<u8>>>,
}

/// Rewrites a complete branch through the lower-triangular matrix `r`.
///
/// The input must be all k rows of one branch of one generation; the output
/// carries the same branch id and indices, with payloads recombined so the
/// effective coefficient matrix becomes r times the branch matrix. `r` may be
/// the identity or any other dense lower-triangular square matrix; a
/// Toeplitz branch supplies one via [`ToeplitzSpec::dense`].
pub fn recode(r: &DenseMatrix, rows: &[CodedRow]) -> Result<Vec<CodedRow>, CodecError> {
    let field = r.field().clone();
    if field.p() > 8 {
        return Err(CodecError::UnsupportedField { p: field.p() });
    }
    let k = r.rows();
    if r.cols() != k {
        return Err(CodecError::InvalidRecodingMatrix {
            reason: "matrix is not square",
        });
    }
    for i in 0..k {
        for j in i + 1..k {
            if r.at(i, j).0 != 0 {
                return Err(CodecError::InvalidRecodingMatrix {
                    reason: "matrix is not lower triangular",
                });
            }
        }
    }
    if rows.len() != k {
        return Err(CodecError::IncompleteBranch {
            got: rows.len(),
            needed: k,
        });
    }
    let branch = rows[0].branch;
    let generation = rows[0].generation;
    let l = rows[0].payload.len();
    // ordered[t] holds the row with index t+1.
    let mut ordered: Vec<Option<&CodedRow>> = vec![None; k];
    for row in rows {
        if row.branch != branch {
            return Err(CodecError::InvalidRow {
                reason: "rows from different branches",
            });
        }
        if row.generation != generation {
            return Err(CodecError::InvalidRow {
                reason: "rows from different generations",
            });
        }
        if row.payload.len() != l {
            return Err(CodecError::InvalidRow {
                reason: "payload lengths differ",
            });
        }
        check_symbols(&field, &row.payload)?;
        let t = row.index as usize;
        if t == 0 || t > k {
            return Err(CodecError::InvalidRow {
                reason: "row index out of range",
            });
        }
        if ordered[t - 1].is_some() {
            return Err(CodecError::InvalidRow {
                reason: "duplicate row index",
            });
        }
        ordered[t - 1] = Some(row);
    }
    let ordered: Vec<&CodedRow> = ordered.into_iter().map(|r| r.unwrap()).collect();
    let mut out = Vec::with_capacity(k);
    for t in 0..k {
        let mut acc = vec![0u8; l];
        for (s, row) in ordered.iter().enumerate().take(t + 1) {
            combine_into(&field, &mut acc, &row.payload, r.at(t, s));
        }
        out.push(CodedRow {
            branch,
            index: (t + 1) as u16,
            generation,
            payload: acc,
        });
    }
    Ok(out)
}

fn check_symbols(field: &FieldSpec, payload: &[u8]) -> Result<(), CodecError> {
    // Every byte is valid once the field fills the whole byte.
    if field.p() == 8 {
        return Ok(());
    }
    let limit = field.element_count() as u8;
    match payload.iter().find(|&&b| b >= limit) {
        Some(&b) => Err(CodecError::InvalidSymbol { value: b }),
        None => Ok(()),
    }
}

/// acc ^= coeff * src, elementwise over the field.
///
/// Coefficient 0 contributes nothing and coefficient 1 reduces to a plain
/// XOR with no table lookups; other coefficients go through a per-call
/// product table so each byte costs one lookup.
fn combine_into(field: &FieldSpec, acc: &mut [u8], src: &[u8], coeff: FieldElement) {
    debug_assert_eq!(acc.len(), src.len());
    match coeff.0 {
        0 => {}
        1 => {
            for (a, s) in acc.iter_mut().zip(src) {
                *a ^= s;
            }
        }
        c => {
            let table = product_table(field, FieldElement(c));
            for (a, s) in acc.iter_mut().zip(src) {
                *a ^= table[*s as usize];
            }
        }
    }
}

/// payload *= coeff, elementwise.
fn scale_in_place(field: &FieldSpec, payload: &mut [u8], coeff: FieldElement) {
    if coeff.0 == 1 {
        return;
    }
    let table = product_table(field, coeff);
    for b in payload.iter_mut() {
        *b = table[*b as usize];
    }
}

fn product_table(field: &FieldSpec, coeff: FieldElement) -> Vec<u8> {
    (0..field.element_count())
        .map(|v| field.mul(coeff, FieldElement(v as u16)).0 as u8)
        .collect()
}

/// Two distinct mutable rows of a row-major matrix.
fn split_rows<T>(rows: &mut [Vec<T>], a: usize, b: usize) -> (&mut Vec<T>, &mut [T]) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = rows.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}
