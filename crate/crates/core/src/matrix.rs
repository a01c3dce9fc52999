//! Sparse per-sign adjacency and row capping.

use crate::graph::{BeliefGraph, NodeId, Sign};

/// Row-indexed sparse matrix. Each row is sorted by column with no duplicates
/// and no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    /// Builds an `n x n` matrix from `(row, col, value)` triplets, summing
    /// duplicates.
    ///
    /// Duplicates are summed in ascending value order so the result does not
    /// depend on triplet order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut rows = vec![Vec::new(); n];
        let mut iter = triplets.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 != i || j2 != j {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != 0.0 {
                rows[i].push((j, v));
            }
        }
        Self { n, rows }
    }

    /// Wraps prepared rows. Each row must be sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.windows(2).all(|w| w[0].0 < w[1].0)));
        Self {
            n: rows.len(),
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, v)| v).sum()
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// `out = Aᵀ x`
    pub fn mul_transpose_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for &(j, v) in row {
                out[j] += v * xi;
            }
        }
    }

    /// `self + scale * other`, merged row by row.
    pub fn add_scaled(&self, other: &SparseRows, scale: f64) -> SparseRows {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut p, mut q) = (0, 0);
                while p < a.len() || q < b.len() {
                    let next = match (a.get(p), b.get(q)) {
                        (Some(&(ja, va)), Some(&(jb, vb))) if ja == jb => {
                            p += 1;
                            q += 1;
                            (ja, va + scale * vb)
                        }
                        (Some(&(ja, va)), Some(&(jb, _))) if ja < jb => {
                            p += 1;
                            (ja, va)
                        }
                        (Some(&(ja, va)), None) => {
                            p += 1;
                            (ja, va)
                        }
                        (_, Some(&(jb, vb))) => {
                            q += 1;
                            (jb, scale * vb)
                        }
                        (None, None) => unreachable!(),
                    };
                    out.push(next);
                }
                out
            })
            .collect();
        SparseRows { n: self.n, rows }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[i][j] = v;
            }
        }
        d
    }
}

/// Divides a row by `max(1, row sum)`.
pub fn cap_row(row: &[f64]) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    let d = s.max(1.0);
    row.iter().map(|v| v / d).collect()
}

/// Row-caps a nonnegative matrix: every row is divided by `max(1, its sum)`.
/// Rows already summing to at most one (including all-zero rows) are kept
/// bit-for-bit.
pub fn row_normalize(raw: &SparseRows) -> SparseRows {
    let rows = raw
        .rows
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|&(_, v)| v).sum();
            if s <= 1.0 {
                row.clone()
            } else {
                row.iter().map(|&(j, v)| (j, v / s)).collect()
            }
        })
        .collect();
    SparseRows { n: raw.n, rows }
}

/// Aggregated support/contradiction weights and their row-capped variants.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMatrices {
    pub supp: SparseRows,
    pub contr: SparseRows,
    pub supp_norm: SparseRows,
    pub contr_norm: SparseRows,
}

impl SignedMatrices {
    pub fn from_raw(supp: SparseRows, contr: SparseRows) -> Self {
        assert_eq!(supp.dim(), contr.dim(), "dimension mismatch");
        let supp_norm = row_normalize(&supp);
        let contr_norm = row_normalize(&contr);
        Self {
            supp,
            contr,
            supp_norm,
            contr_norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.supp.dim()
    }

    /// `M = Â⁺ − η Â⁻` as a sparse matrix.
    pub fn operator(&self, eta: f64) -> SparseRows {
        if eta == 0.0 {
            return self.supp_norm.clone();
        }
        self.supp_norm.add_scaled(&self.contr_norm, -eta)
    }

    /// Undirected neighbours of `u` through any positive or negative weight.
    pub fn neighbours(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.supp
            .row(u)
            .iter()
            .chain(self.contr.row(u))
            .map(|&(v, _)| v)
    }
}

/// Aggregates edges by sign into `supp`/`contr` and row-caps them.
/// Neutral edges contribute to neither matrix.
pub fn build_signed_matrices(graph: &BeliefGraph) -> SignedMatrices {
    let n = graph.node_count();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for e in graph.edges() {
        match e.sign {
            Sign::Positive => pos.push((e.src, e.dst, e.weight)),
            Sign::Negative => neg.push((e.src, e.dst, e.weight)),
            Sign::Neutral => {}
        }
    }
    SignedMatrices::from_raw(
        SparseRows::from_triplets(n, pos),
        SparseRows::from_triplets(n, neg),
    )
}
