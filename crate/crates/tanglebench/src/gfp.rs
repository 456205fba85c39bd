//! Sparse linear algebra over a large prime field, used as a fast
//! certification backend for span-rank computations.
//!
//! Entries of the exact operators are Laurent polynomials in q; evaluating
//! them at a fixed point q = c modulo a prime p turns span computations into
//! machine-word arithmetic. Soundness is one-directional and is the only
//! direction we use: a family whose images at (q = c mod p) are linearly
//! independent is independent over the rational function field, because the
//! corresponding minor is a rational function that does not vanish at c.
//! Dependence at the evaluation point is only evidence, never a certificate,
//! and callers treat it as such (saturation stopping rule).

use crate::exactla::Operator;
use crate::qfield::{modp_add, modp_inv, modp_mul, modp_sub};


/// 2^61 - 1, a Mersenne prime comfortably above any coefficient this
/// workload produces at the fixed evaluation point.
pub const PRIME: u64 = (1 << 61) - 1;

/// Fixed evaluation point for q. Any value that is not a root of the handful
/// of structure denominators works; failures would surface as failed rank
/// assertions, not as silent wrong answers.
pub const Q_POINT: u64 = 1_000_003;

/// Evaluation point for r, only relevant for entries that still carry r.
pub const R_POINT: u64 = 7_777_777;

/// Sparse matrix over GF(p), column-major like [`Operator`].
#[derive(Clone, Debug)]
pub struct GfOp {
    pub rows: usize,
    pub cols: usize,
    cols_data: Vec<Vec<(usize, u64)>>,
}

impl GfOp {
    pub fn zero(rows: usize, cols: usize) -> Self {
        GfOp { rows, cols, cols_data: vec![Vec::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for j in 0..n {
            m.cols_data[j].push((j, 1));
        }
        m
    }

    pub fn column(&self, j: usize) -> &[(usize, u64)] {
        &self.cols_data[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols_data.iter().map(|c| c.len()).sum()
    }

    /// Evaluates an exact operator at the fixed (q, r) point. None when some
    /// denominator vanishes mod p there.
    pub fn from_operator(op: &Operator) -> Option<Self> {
        let mut out = Self::zero(op.rows(), op.cols());
        for (i, j, v) in op.entries() {
            let x = v.eval_modp(Q_POINT, R_POINT, PRIME)?;
            if x != 0 {
                out.cols_data[j].push((i, x));
            }
        }
        for col in &mut out.cols_data {
            col.sort_by_key(|(i, _)| *i);
        }
        Some(out)
    }

    pub fn matmul(&self, other: &GfOp) -> GfOp {
        assert_eq!(self.cols, other.rows);
        let mut out = GfOp::zero(self.rows, other.cols);
        let mut dense: Vec<u64> = vec![0; self.rows];
        let mut touched: Vec<usize> = Vec::new();
        for j in 0..other.cols {
            for (k, b) in &other.cols_data[j] {
                for (i, a) in &self.cols_data[*k] {
                    if dense[*i] == 0 {
                        touched.push(*i);
                    }
                    dense[*i] = modp_add(dense[*i], modp_mul(*a, *b, PRIME), PRIME);
                }
            }
            touched.sort_unstable();
            let col = &mut out.cols_data[j];
            for &i in &touched {
                if dense[i] != 0 {
                    col.push((i, dense[i]));
                }
                dense[i] = 0;
            }
            touched.clear();
        }
        out
    }

    /// Column-major flattening matching [`Operator::flatten`].
    pub fn flatten(&self) -> Vec<(usize, u64)> {
        let mut v = Vec::with_capacity(self.nnz());
        for (j, col) in self.cols_data.iter().enumerate() {
            for (i, x) in col {
                v.push((j * self.rows + i, *x));
            }
        }
        v.sort_by_key(|(i, _)| *i);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.cols_data.iter().all(|c| c.is_empty())
    }
}

/// w - c*row over GF(p), both sorted by index; zero entries dropped.
fn axpy_merge(w: &[(usize, u64)], c: u64, row: &[(usize, u64)]) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(w.len() + row.len());
    let (mut i, mut j) = (0, 0);
    while i < w.len() && j < row.len() {
        match w[i].0.cmp(&row[j].0) {
            std::cmp::Ordering::Less => {
                out.push(w[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((row[j].0, modp_sub(0, modp_mul(c, row[j].1, PRIME), PRIME)));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let v = modp_sub(w[i].1, modp_mul(c, row[j].1, PRIME), PRIME);
                if v != 0 {
                    out.push((w[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&w[i..]);
    for &(idx, x) in &row[j..] {
        out.push((idx, modp_sub(0, modp_mul(c, x, PRIME), PRIME)));
    }
    out
}

/// Incremental row echelon over GF(p) with reduction bookkeeping.
pub struct GfEchelon {
    /// (pivot index, row normalized to pivot value 1)
    rows: Vec<(usize, Vec<(usize, u64)>)>,
}

impl GfEchelon {
    pub fn new() -> Self {
        GfEchelon { rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[(usize, u64)]) -> Vec<(usize, u64)> {
        let mut w: Vec<(usize, u64)> = v.to_vec();
        for (piv, row) in &self.rows {
            if w.is_empty() {
                break;
            }
            let Ok(k) = w.binary_search_by_key(piv, |(i, _)| *i) else { continue };
            let c = w[k].1;
            w = axpy_merge(&w, c, row);
        }
        w
    }

    /// Adds v to the span; true when it extended the span.
    pub fn insert(&mut self, v: &[(usize, u64)]) -> bool {
        let w = self.reduce(v);
        if w.is_empty() {
            return false;
        }
        let (piv, lead) = w[0];
        let lead_inv = modp_inv(lead, PRIME).unwrap();
        let row: Vec<(usize, u64)> =
            w.into_iter().map(|(i, x)| (i, modp_mul(x, lead_inv, PRIME))).collect();
        self.rows.push((piv, row));
        self.rows.sort_by_key(|(p, _)| *p);
        true
    }

    pub fn contains(&self, v: &[(usize, u64)]) -> bool {
        self.reduce(v).is_empty()
    }

    /// Pivot coordinate positions, ascending. The inserted family restricted
    /// to these positions has a nonzero determinant mod p, hence over the
    /// rational function field.
    pub fn pivot_positions(&self) -> Vec<usize> {
        self.rows.iter().map(|(p, _)| *p).collect()
    }
}

impl Default for GfEchelon {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::RatFunc;

    #[test]
    fn echelon_rank() {
        let mut e = GfEchelon::new();
        assert!(e.insert(&[(0, 1), (1, 2)]));
        assert!(e.insert(&[(1, 5)]));
        // dependent on the first two
        assert!(!e.insert(&[(0, 3), (1, 6)]));
        assert_eq!(e.dim(), 2);
    }

    #[test]
    fn operator_eval_round() {
        let op = Operator::from_entries(
            2,
            2,
            [
                (0usize, 0usize, RatFunc::q()),
                (1, 1, RatFunc::q().inv().unwrap()),
            ],
        );
        let g = GfOp::from_operator(&op).unwrap();
        let qi = modp_inv(Q_POINT, PRIME).unwrap();
        assert_eq!(g.column(0), &[(0, Q_POINT)]);
        assert_eq!(g.column(1), &[(1, qi)]);
    }

    #[test]
    fn matmul_mod_p() {
        let a = GfOp {
            rows: 2,
            cols: 2,
            cols_data: vec![vec![(0, 2)], vec![(1, 3)]],
        };
        let b = GfOp {
            rows: 2,
            cols: 2,
            cols_data: vec![vec![(1, 5)], vec![(0, 7)]],
        };
        let c = a.matmul(&b);
        assert_eq!(c.column(0), &[(1, 15)]);
        assert_eq!(c.column(1), &[(0, 14)]);
    }
}
