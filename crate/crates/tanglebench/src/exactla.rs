//! Exact sparse linear algebra over the rational function field: Kronecker
//! products, composition, fraction-free rank/kernel computations and span
//! saturation.
//!
//! An [`Operator`] is a sparse matrix over [`RatFunc`] optionally tagged with
//! a tensor arity `(s, t)` meaning it maps `V^(⊗s) -> V^(⊗t)` with
//! `cols = dim^s`, `rows = dim^t`. Matrices act on column vectors; composing
//! "f then g" is the product `M(g) * M(f)`.
//!
//! Flattening convention: an operator is flattened column-major, entry
//! `(row, col)` lands at index `col * rows + row`. Kernel coefficient vectors
//! returned by [`rank_kernel`] refer to the input operators in order.

use crate::qfield::{poly_div_exact, poly_gcd, LaurentPoly, Rat, RatFunc};
use num::{BigInt, One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LaError {
    #[error("dimension mismatch: left is {lr}x{lc}, right is {rr}x{rc}")]
    DimensionMismatch { lr: usize, lc: usize, rr: usize, rc: usize },
    #[error("operators in one family must share dimensions")]
    MixedDimensions,
    #[error("span saturation did not converge within {rounds} rounds")]
    NonConvergence { rounds: usize },
    #[error("bad operator JSON: {0}")]
    BadJson(String),
}

/// Sparse vector over the scalar field, sorted by index.
pub type SparseVec = Vec<(usize, RatFunc)>;

#[derive(Clone, Debug)]
pub struct Operator {
    rows: usize,
    cols: usize,
    arity: Option<(usize, usize)>,
    /// column-major storage; each column sorted by row index, no zeros
    cols_data: Vec<Vec<(usize, RatFunc)>>,
}

/// Equality compares shape and entries; the arity tag is bookkeeping only.
impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.cols_data == other.cols_data
    }
}

impl Eq for Operator {}

impl Operator {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Operator { rows, cols, arity: None, cols_data: vec![Vec::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = Self::zero(n, n);
        for j in 0..n {
            op.cols_data[j].push((j, RatFunc::one()));
        }
        op
    }

    pub fn with_arity(mut self, s: usize, t: usize) -> Self {
        self.arity = Some((s, t));
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn arity(&self) -> Option<(usize, usize)> {
        self.arity
    }

    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, RatFunc)>,
    ) -> Self {
        let mut acc: Vec<BTreeMap<usize, RatFunc>> = vec![BTreeMap::new(); cols];
        for (i, j, v) in entries {
            assert!(i < rows && j < cols, "entry out of range");
            if v.is_zero() {
                continue;
            }
            match acc[j].get_mut(&i) {
                Some(cur) => {
                    let s = cur.add(&v);
                    if s.is_zero() {
                        acc[j].remove(&i);
                    } else {
                        *cur = s;
                    }
                }
                None => {
                    acc[j].insert(i, v);
                }
            }
        }
        Operator {
            rows,
            cols,
            arity: None,
            cols_data: acc.into_iter().map(|m| m.into_iter().collect()).collect(),
        }
    }

    pub fn column(&self, j: usize) -> &[(usize, RatFunc)] {
        &self.cols_data[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> RatFunc {
        self.cols_data[j]
            .binary_search_by_key(&i, |(r, _)| *r)
            .map(|k| self.cols_data[j][k].1.clone())
            .unwrap_or_else(|_| RatFunc::zero())
    }

    pub fn nnz(&self) -> usize {
        self.cols_data.iter().map(|c| c.len()).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &RatFunc)> {
        self.cols_data
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, v)| (*i, j, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.cols_data.iter().all(|c| c.is_empty())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self.cols_data.iter().enumerate().all(|(j, col)| {
                col.len() == 1 && col[0].0 == j && col[0].1.is_one()
            })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LaError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LaError::DimensionMismatch {
                lr: self.rows,
                lc: self.cols,
                rr: other.rows,
                rc: other.cols,
            });
        }
        let mut out = Operator {
            rows: self.rows,
            cols: self.cols,
            arity: self.arity.or(other.arity),
            cols_data: Vec::with_capacity(self.cols),
        };
        for j in 0..self.cols {
            out.cols_data.push(merge_cols(&self.cols_data[j], &other.cols_data[j]));
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LaError> {
        self.add(&other.scale(&RatFunc::from_int(-1)))
    }

    pub fn scale(&self, c: &RatFunc) -> Self {
        if c.is_zero() {
            return Operator { arity: self.arity, ..Self::zero(self.rows, self.cols) };
        }
        Operator {
            rows: self.rows,
            cols: self.cols,
            arity: self.arity,
            cols_data: self
                .cols_data
                .iter()
                .map(|col| col.iter().map(|(i, v)| (*i, v.mul(c))).collect())
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut acc: Vec<Vec<(usize, RatFunc)>> = vec![Vec::new(); self.rows];
        for (i, j, v) in self.entries() {
            acc[i].push((j, v.clone()));
        }
        for col in &mut acc {
            col.sort_by_key(|(r, _)| *r);
        }
        Operator {
            rows: self.cols,
            cols: self.rows,
            arity: self.arity.map(|(s, t)| (t, s)),
            cols_data: acc,
        }
    }

    /// Exact product self * other.
    pub fn matmul(&self, other: &Self) -> Result<Self, LaError> {
        if self.cols != other.rows {
            return Err(LaError::DimensionMismatch {
                lr: self.rows,
                lc: self.cols,
                rr: other.rows,
                rc: other.cols,
            });
        }
        let arity = match (self.arity, other.arity) {
            (Some((_sa, ta)), Some((sb, _tb))) => Some((sb, ta)),
            _ => None,
        };
        let mut out = Operator {
            rows: self.rows,
            cols: other.cols,
            arity,
            cols_data: Vec::with_capacity(other.cols),
        };
        for j in 0..other.cols {
            let mut acc: BTreeMap<usize, RatFunc> = BTreeMap::new();
            for (k, b) in &other.cols_data[j] {
                for (i, a) in &self.cols_data[*k] {
                    let prod = a.mul(b);
                    if prod.is_zero() {
                        continue;
                    }
                    match acc.get_mut(i) {
                        Some(cur) => {
                            let s = cur.add(&prod);
                            if s.is_zero() {
                                acc.remove(i);
                            } else {
                                *cur = s;
                            }
                        }
                        None => {
                            acc.insert(*i, prod);
                        }
                    }
                }
            }
            out.cols_data.push(acc.into_iter().collect());
        }
        Ok(out)
    }

    /// Standard Kronecker product; dimensions multiply, arity tags add.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let arity = match (self.arity, other.arity) {
            (Some((sa, ta)), Some((sb, tb))) => Some((sa + sb, ta + tb)),
            _ => None,
        };
        let mut cols_data = vec![Vec::new(); cols];
        for (ja, cola) in self.cols_data.iter().enumerate() {
            for (jb, colb) in other.cols_data.iter().enumerate() {
                let j = ja * other.cols + jb;
                let col = &mut cols_data[j];
                for (ia, va) in cola {
                    for (ib, vb) in colb {
                        col.push((ia * other.rows + ib, va.mul(vb)));
                    }
                }
                col.sort_by_key(|(r, _)| *r);
            }
        }
        Operator { rows, cols, arity, cols_data }
    }

    /// Column-major flattening: entry (row, col) -> index col*rows + row.
    pub fn flatten(&self) -> SparseVec {
        let mut v: SparseVec = self
            .entries()
            .map(|(i, j, val)| (j * self.rows + i, val.clone()))
            .collect();
        v.sort_by_key(|(i, _)| *i);
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut entries: Vec<(usize, usize, &RatFunc)> = self.entries().collect();
        entries.sort_by_key(|(i, j, _)| (*i, *j));
        serde_json::json!({
            "rows": self.rows,
            "cols": self.cols,
            "arity": self.arity.map(|(s, t)| vec![s, t]),
            "entries": entries
                .into_iter()
                .map(|(i, j, v)| serde_json::json!([i, j, v.to_string()]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, LaError> {
        let bad = |m: &str| LaError::BadJson(m.to_string());
        let rows = v["rows"].as_u64().ok_or_else(|| bad("missing rows"))? as usize;
        let cols = v["cols"].as_u64().ok_or_else(|| bad("missing cols"))? as usize;
        let mut entries = Vec::new();
        for e in v["entries"].as_array().ok_or_else(|| bad("missing entries"))? {
            let triple = e.as_array().ok_or_else(|| bad("entry is not a triple"))?;
            if triple.len() != 3 {
                return Err(bad("entry is not a triple"));
            }
            let i = triple[0].as_u64().ok_or_else(|| bad("bad row index"))? as usize;
            let j = triple[1].as_u64().ok_or_else(|| bad("bad col index"))? as usize;
            let s = triple[2].as_str().ok_or_else(|| bad("bad entry value"))?;
            let val: RatFunc = s.parse().map_err(|e| LaError::BadJson(format!("{e}")))?;
            if i >= rows || j >= cols {
                return Err(bad("entry out of range"));
            }
            entries.push((i, j, val));
        }
        let mut op = Operator::from_entries(rows, cols, entries);
        if let Some(arr) = v["arity"].as_array() {
            if arr.len() == 2 {
                let s = arr[0].as_u64().ok_or_else(|| bad("bad arity"))? as usize;
                let t = arr[1].as_u64().ok_or_else(|| bad("bad arity"))? as usize;
                op = op.with_arity(s, t);
            }
        }
        Ok(op)
    }
}

fn merge_cols(a: &[(usize, RatFunc)], b: &[(usize, RatFunc)]) -> Vec<(usize, RatFunc)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let s = a[i].1.add(&b[j].1);
                if !s.is_zero() {
                    out.push((a[i].0, s));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Factor of a Kronecker product applied positionally without materializing
/// the full product matrix.
pub enum KronFactor<'a> {
    Id(usize),
    Mat(&'a Operator),
}

impl KronFactor<'_> {
    fn in_dim(&self) -> usize {
        match self {
            KronFactor::Id(n) => *n,
            KronFactor::Mat(m) => m.cols(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            KronFactor::Id(n) => *n,
            KronFactor::Mat(m) => m.rows(),
        }
    }
}

/// Computes (f1 ⊗ f2 ⊗ ... ⊗ fk) * input without building the Kronecker
/// matrix. Input row indices decompose big-endian by the factors' input
/// dimensions, matching [`Operator::kron`].
pub fn kron_apply(factors: &[KronFactor], input: &Operator) -> Operator {
    let in_dim: usize = factors.iter().map(|f| f.in_dim()).product();
    let out_dim: usize = factors.iter().map(|f| f.out_dim()).product();
    assert_eq!(in_dim, input.rows(), "kron_apply: factor/input dimension mismatch");
    let mut out_strides = vec![1usize; factors.len()];
    for k in (0..factors.len().saturating_sub(1)).rev() {
        out_strides[k] = out_strides[k + 1] * factors[k + 1].out_dim();
    }
    let mut in_strides = vec![1usize; factors.len()];
    for k in (0..factors.len().saturating_sub(1)).rev() {
        in_strides[k] = in_strides[k + 1] * factors[k + 1].in_dim();
    }
    let mut cols_data = Vec::with_capacity(input.cols());
    for j in 0..input.cols() {
        let mut acc: BTreeMap<usize, RatFunc> = BTreeMap::new();
        for (row, coeff) in input.column(j) {
            expand_entry(factors, &in_strides, &out_strides, 0, *row, 0, coeff.clone(), &mut acc);
        }
        acc.retain(|_, v| !v.is_zero());
        cols_data.push(acc.into_iter().collect());
    }
    Operator { rows: out_dim, cols: input.cols(), arity: None, cols_data }
}

fn expand_entry(
    factors: &[KronFactor],
    in_strides: &[usize],
    out_strides: &[usize],
    k: usize,
    rest: usize,
    out_base: usize,
    coeff: RatFunc,
    acc: &mut BTreeMap<usize, RatFunc>,
) {
    if k == factors.len() {
        match acc.get_mut(&out_base) {
            Some(cur) => *cur = cur.add(&coeff),
            None => {
                acc.insert(out_base, coeff);
            }
        }
        return;
    }
    let digit = rest / in_strides[k];
    let rest2 = rest % in_strides[k];
    match &factors[k] {
        KronFactor::Id(_) => {
            expand_entry(
                factors,
                in_strides,
                out_strides,
                k + 1,
                rest2,
                out_base + digit * out_strides[k],
                coeff,
                acc,
            );
        }
        KronFactor::Mat(m) => {
            for (r, v) in m.column(digit) {
                expand_entry(
                    factors,
                    in_strides,
                    out_strides,
                    k + 1,
                    rest2,
                    out_base + r * out_strides[k],
                    coeff.mul(v),
                    acc,
                );
            }
        }
    }
}

// --- fraction-free elimination ---
//
// Rows are kept denominator-free with integer coefficients and content 1.
// The update is the Bareiss-style cross-multiplication
//     row' = pivot_entry * row - row_entry * pivot_row
// followed by an early gcd reduction of the whole row.

type PolyVec = Vec<(usize, LaurentPoly)>;

fn clear_denominators(v: &SparseVec) -> PolyVec {
    let mut den = LaurentPoly::one();
    for (_, f) in v {
        if !f.denom().is_one() {
            let g = poly_gcd(&den, f.denom());
            den = poly_div_exact(&den.mul(f.denom()), &g);
        }
    }
    let mut out: PolyVec = v
        .iter()
        .map(|(i, f)| {
            let scaled = f.numer().mul(&poly_div_exact(&den, f.denom()));
            (*i, scaled)
        })
        .collect();
    strip_content(&mut out);
    out
}

fn strip_content(v: &mut PolyVec) {
    v.retain(|(_, p)| !p.is_zero());
    if v.is_empty() {
        return;
    }
    // rational content first (entries become integer, coprime overall)
    let mut int_content = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for (_, p) in v.iter() {
        for (_, c) in p.terms() {
            int_content = num::integer::gcd(int_content, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
    }
    let scale = Rat::new(den_lcm, int_content);
    if !scale.is_one() {
        for (_, p) in v.iter_mut() {
            *p = p.scale(&scale);
        }
    }
    // polynomial content
    let mut g = LaurentPoly::zero();
    for (_, p) in v.iter() {
        g = poly_gcd(&g, p);
        if g.is_one() {
            return;
        }
    }
    if !g.is_one() && !g.is_zero() {
        for (_, p) in v.iter_mut() {
            *p = poly_div_exact(p, &g);
        }
    }
}

fn pv_get(v: &PolyVec, idx: usize) -> Option<&LaurentPoly> {
    v.binary_search_by_key(&idx, |(i, _)| *i).ok().map(|k| &v[k].1)
}

/// w = a*w - b*row, sparse merge.
fn pv_cross(w: &PolyVec, a: &LaurentPoly, row: &PolyVec, b: &LaurentPoly) -> PolyVec {
    let mut out = Vec::with_capacity(w.len() + row.len());
    let (mut i, mut j) = (0, 0);
    while i < w.len() && j < row.len() {
        match w[i].0.cmp(&row[j].0) {
            std::cmp::Ordering::Less => {
                out.push((w[i].0, w[i].1.mul(a)));
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((row[j].0, row[j].1.mul(b).neg()));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let val = w[i].1.mul(a).sub(&row[j].1.mul(b));
                if !val.is_zero() {
                    out.push((w[i].0, val));
                }
                i += 1;
                j += 1;
            }
        }
    }
    while i < w.len() {
        out.push((w[i].0, w[i].1.mul(a)));
        i += 1;
    }
    while j < row.len() {
        out.push((row[j].0, row[j].1.mul(b).neg()));
        j += 1;
    }
    out
}

struct ElimRow {
    main: PolyVec,
    aug: PolyVec,
    original_index: usize,
    pivot: Option<usize>,
}

/// Exact rank and kernel of a family of sparse vectors over the field.
///
/// Fraction-free elimination with early gcd reduction; pivots are chosen by
/// minimal entry complexity (total terms in numerator and denominator).
/// Kernel vectors are exact coefficient vectors over the inputs, normalized
/// so the first nonzero coordinate is 1, ordered by input index.
pub fn rank_kernel(vecs: &[SparseVec]) -> (usize, Vec<Vec<RatFunc>>) {
    let n = vecs.len();
    let mut rows: Vec<ElimRow> = vecs
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let main = clear_denominators(v);
            ElimRow {
                main,
                aug: vec![(idx, LaurentPoly::one())],
                original_index: idx,
                pivot: None,
            }
        })
        .collect();

    let mut used_cols: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    let mut rank = 0usize;
    loop {
        // pick the unpivoted entry of minimal complexity
        let mut best: Option<(usize, usize, usize)> = None; // (complexity, row, col)
        for (ri, row) in rows.iter().enumerate() {
            if row.pivot.is_some() {
                continue;
            }
            for (ci, p) in &row.main {
                if used_cols.contains(ci) {
                    continue;
                }
                let cx = p.num_terms();
                let cand = (cx, ri, *ci);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let Some((_, ri, ci)) = best else { break };
        rank += 1;
        used_cols.insert(ci);
        rows[ri].pivot = Some(ci);
        let piv_main = rows[ri].main.clone();
        let piv_aug = rows[ri].aug.clone();
        let piv_entry = pv_get(&piv_main, ci).unwrap().clone();
        for row in rows.iter_mut() {
            if row.pivot.is_some() {
                continue;
            }
            let Some(entry) = pv_get(&row.main, ci).cloned() else { continue };
            row.main = pv_cross(&row.main, &piv_entry, &piv_main, &entry);
            row.aug = pv_cross(&row.aug, &piv_entry, &piv_aug, &entry);
            joint_strip(&mut row.main, &mut row.aug);
        }
    }

    let mut kernel: Vec<(usize, Vec<RatFunc>)> = Vec::new();
    for row in &rows {
        if row.pivot.is_none() {
            debug_assert!(row.main.is_empty());
            kernel.push((row.original_index, aug_to_coeffs(&row.aug, n)));
        }
    }
    kernel.sort_by_key(|(idx, _)| *idx);
    (rank, kernel.into_iter().map(|(_, v)| v).collect())
}

fn joint_strip(main: &mut PolyVec, aug: &mut PolyVec) {
    main.retain(|(_, p)| !p.is_zero());
    aug.retain(|(_, p)| !p.is_zero());
    let mut joint: Vec<(usize, LaurentPoly)> = Vec::with_capacity(main.len() + aug.len());
    joint.extend(main.iter().cloned());
    joint.extend(aug.iter().map(|(i, p)| (usize::MAX - 1 - i, p.clone())));
    strip_content(&mut joint);
    let mut new_main = Vec::with_capacity(main.len());
    let mut new_aug = Vec::with_capacity(aug.len());
    for (i, p) in joint {
        if i > usize::MAX / 2 {
            new_aug.push((usize::MAX - 1 - i, p));
        } else {
            new_main.push((i, p));
        }
    }
    new_main.sort_by_key(|(i, _)| *i);
    new_aug.sort_by_key(|(i, _)| *i);
    *main = new_main;
    *aug = new_aug;
}

fn aug_to_coeffs(aug: &PolyVec, n: usize) -> Vec<RatFunc> {
    let mut out = vec![RatFunc::zero(); n];
    for (i, p) in aug {
        out[*i] = RatFunc::from_poly(p.clone());
    }
    let first = out.iter().find(|v| !v.is_zero()).cloned();
    if let Some(f) = first {
        let inv = f.inv().unwrap();
        for v in &mut out {
            *v = v.mul(&inv);
        }
    }
    out
}

/// Rank and kernel of a family of operators (flattened column-major).
pub fn rank_kernel_ops(ops: &[Operator]) -> Result<(usize, Vec<Vec<RatFunc>>), LaError> {
    if ops.is_empty() {
        return Ok((0, Vec::new()));
    }
    let (r, c) = (ops[0].rows(), ops[0].cols());
    if ops.iter().any(|o| o.rows() != r || o.cols() != c) {
        return Err(LaError::MixedDimensions);
    }
    let vecs: Vec<SparseVec> = ops.iter().map(|o| o.flatten()).collect();
    Ok(rank_kernel(&vecs))
}

/// Incremental echelon basis over the field; used for saturation and for
/// membership tests. Rows are fraction-free with first-index pivots.
pub struct SpanBasis {
    rows: Vec<(usize, PolyVec)>,
}

impl SpanBasis {
    pub fn new() -> Self {
        SpanBasis { rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &SparseVec) -> PolyVec {
        let mut w = clear_denominators(v);
        self.reduce_poly(&mut w);
        w
    }

    fn reduce_poly(&self, w: &mut PolyVec) {
        for (piv, row) in &self.rows {
            if w.is_empty() {
                return;
            }
            let Some(entry) = pv_get(w, *piv).cloned() else { continue };
            let piv_entry = pv_get(row, *piv).unwrap().clone();
            *w = pv_cross(w, &piv_entry, row, &entry);
            strip_content(w);
        }
    }

    /// Reduces v against the basis; if a nonzero remainder survives, adds it
    /// and returns true.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let w = self.reduce(v);
        if w.is_empty() {
            return false;
        }
        let piv = w[0].0;
        self.rows.push((piv, w));
        self.rows.sort_by_key(|(p, _)| *p);
        true
    }

    /// True when v lies in the current span.
    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }
}

impl Default for SpanBasis {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
    Both,
}

#[derive(Debug)]
pub struct Saturation {
    pub basis: Vec<Operator>,
    pub dim: usize,
    pub rounds: usize,
}

/// Closes the linear span of `seed` under multiplication by `multipliers`
/// until the rank stabilizes. Reports non-convergence after `max_rounds`
/// full passes instead of looping.
pub fn span_saturate(
    seed: &[Operator],
    multipliers: &[Operator],
    side: Side,
    max_rounds: usize,
) -> Result<Saturation, LaError> {
    let mut echelon = SpanBasis::new();
    let mut basis: Vec<Operator> = Vec::new();
    let mut frontier: Vec<usize> = Vec::new();
    for s in seed {
        if echelon.insert(&s.flatten()) {
            basis.push(s.clone());
            frontier.push(basis.len() - 1);
        }
    }
    let mut rounds = 0usize;
    while !frontier.is_empty() {
        rounds += 1;
        if rounds > max_rounds {
            return Err(LaError::NonConvergence { rounds: max_rounds });
        }
        let mut next = Vec::new();
        for &bi in &frontier {
            for m in multipliers {
                let mut products = Vec::new();
                if side == Side::Left || side == Side::Both {
                    products.push(m.matmul(&basis[bi])?);
                }
                if side == Side::Right || side == Side::Both {
                    products.push(basis[bi].matmul(m)?);
                }
                for p in products {
                    if echelon.insert(&p.flatten()) {
                        basis.push(p);
                        next.push(basis.len() - 1);
                    }
                }
            }
        }
        frontier = next;
    }
    let dim = basis.len();
    Ok(Saturation { basis, dim, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    fn op(rows: usize, cols: usize, e: &[(usize, usize, &str)]) -> Operator {
        Operator::from_entries(rows, cols, e.iter().map(|(i, j, s)| (*i, *j, rf(s))))
    }

    #[test]
    fn kron_identities() {
        let id2 = Operator::identity(2);
        assert_eq!(id2.kron(&id2), Operator::identity(4));
        let a = op(2, 2, &[(0, 0, "q"), (1, 0, "1"), (0, 1, "q^-1")]);
        assert_eq!(a.kron(&Operator::identity(1)), a);
        let b = op(4, 4, &[(0, 0, "1")]);
        let c = op(2, 2, &[(1, 1, "q")]);
        let k = b.kron(&c);
        assert_eq!((k.rows(), k.cols()), (8, 8));
    }

    #[test]
    fn matmul_basics() {
        let a = op(2, 2, &[(0, 0, "q"), (1, 1, "q^-1"), (0, 1, "1")]);
        assert_eq!(a.matmul(&Operator::identity(2)).unwrap(), a);
        let bad = Operator::identity(4).matmul(&Operator::identity(2));
        assert!(matches!(bad, Err(LaError::DimensionMismatch { .. })));
    }

    #[test]
    fn rank_of_identity() {
        for n in 1..=4 {
            let rows: Vec<SparseVec> = (0..n)
                .map(|i| Operator::identity(n).column(i).to_vec())
                .map(|col| col.into_iter().collect())
                .collect();
            let (rank, kernel) = rank_kernel(&rows);
            assert_eq!(rank, n);
            assert!(kernel.is_empty());
        }
    }

    #[test]
    fn kernel_is_exact() {
        // v3 = q*v1 - v2   =>   kernel vector (q, -1, -1) up to scale
        let v1: SparseVec = vec![(0, rf("1")), (1, rf("q"))];
        let v2: SparseVec = vec![(0, rf("q^2")), (2, rf("1"))];
        let v3: SparseVec = vec![(0, rf("q-q^2")), (1, rf("q^2")), (2, rf("-1"))];
        let (rank, kernel) = rank_kernel(&[v1.clone(), v2.clone(), v3.clone()]);
        assert_eq!(rank, 2);
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        // verify sum_i k_i v_i = 0 exactly
        let mut acc: BTreeMap<usize, RatFunc> = BTreeMap::new();
        for (kv, vec) in k.iter().zip([&v1, &v2, &v3]) {
            for (i, x) in vec {
                let term = kv.mul(x);
                let cur = acc.entry(*i).or_insert_with(RatFunc::zero);
                *cur = cur.add(&term);
            }
        }
        assert!(acc.values().all(|v| v.is_zero()));
    }

    #[test]
    fn rank_invariant_under_transpose_and_scaling() {
        let a = op(
            3,
            3,
            &[(0, 0, "q"), (0, 1, "1"), (1, 0, "q^2"), (1, 1, "q"), (2, 2, "q-q^-1")],
        );
        let rows_a: Vec<SparseVec> =
            (0..3).map(|j| a.column(j).to_vec()).collect();
        let at = a.transpose();
        let rows_at: Vec<SparseVec> =
            (0..3).map(|j| at.column(j).to_vec()).collect();
        assert_eq!(rank_kernel(&rows_a).0, rank_kernel(&rows_at).0);
        let scaled: Vec<SparseVec> = rows_a
            .iter()
            .map(|r| r.iter().map(|(i, v)| (*i, v.mul(&rf("q^3-q")))).collect())
            .collect();
        assert_eq!(rank_kernel(&rows_a).0, rank_kernel(&scaled).0);
    }

    #[test]
    fn saturation_trivial() {
        let sat = span_saturate(&[Operator::identity(3)], &[], Side::Both, 20).unwrap();
        assert_eq!(sat.dim, 1);
    }

    #[test]
    fn kron_mixed_product_property() {
        let a = op(2, 2, &[(0, 0, "q"), (1, 0, "1")]);
        let b = op(2, 2, &[(0, 1, "q^-1"), (1, 1, "2")]);
        let c = op(2, 2, &[(0, 0, "1"), (1, 1, "q")]);
        let d = op(2, 2, &[(0, 0, "q+1")]);
        let lhs = a.kron(&b).matmul(&c.kron(&d)).unwrap();
        let rhs = a.matmul(&c).unwrap().kron(&b.matmul(&d).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn kron_apply_matches_kron() {
        let a = op(2, 2, &[(0, 0, "q"), (1, 0, "1"), (1, 1, "q^-1")]);
        let b = op(2, 2, &[(0, 1, "1"), (1, 0, "q")]);
        let input = Operator::identity(8);
        let via_apply = kron_apply(
            &[KronFactor::Id(2), KronFactor::Mat(&a), KronFactor::Mat(&b)],
            &input,
        );
        let full = Operator::identity(2).kron(&a).kron(&b);
        assert_eq!(via_apply.cols_data, full.cols_data);
    }

    #[test]
    fn json_round_trip() {
        let a = op(2, 3, &[(0, 0, "q"), (1, 2, "(q^2+1)/(q)")]).with_arity(1, 1);
        let j = a.to_json();
        let back = Operator::from_json(&j).unwrap();
        assert_eq!(a, back);
    }
}
