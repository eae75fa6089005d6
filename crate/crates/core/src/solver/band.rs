//! Row-oriented Cholesky factorization of symmetric banded matrices.
//!
//! Row `r` of the factor is stored as `bandwidth + 1` values; slot `k` holds
//! column `r + k - bandwidth`, so the diagonal sits at `k = bandwidth`. The
//! factorization can run either keeping every row, or with a rolling window
//! of `bandwidth + 1` rows when only the determinant and forward-substituted
//! vectors are needed. The rolling mode uses O(bandwidth²) memory.

use crate::error::{LerwError, Result};

/// Lower triangle of a symmetric matrix, one sparse row at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricBand {
    dim: usize,
    bandwidth: usize,
    lower: Vec<Vec<(usize, f64)>>,
}

impl SymmetricBand {
    /// Builds from `(row, col, value)` triples. Each off-diagonal pair may be
    /// given in either triangle but only once; duplicates are summed.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        let mut bandwidth = 0;
        for (i, j, v) in entries {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            assert!(r < dim, "entry ({i},{j}) outside a {dim}x{dim} matrix");
            bandwidth = bandwidth.max(r - c);
            match lower[r].iter_mut().find(|(col, _)| *col == c) {
                Some(slot) => slot.1 += v,
                None => lower[r].push((c, v)),
            }
        }
        for row in &mut lower {
            row.sort_by_key(|&(c, _)| c);
        }
        SymmetricBand {
            dim,
            bandwidth,
            lower,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for (r, row) in self.lower.iter().enumerate() {
            for &(c, v) in row {
                m[r][c] = v;
                m[c][r] = v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (r, row) in self.lower.iter().enumerate() {
            for &(c, v) in row {
                y[r] += v * x[c];
                if c != r {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

struct Factorizer<'a> {
    a: &'a SymmetricBand,
    width: usize,
    slots: usize,
    storage: Vec<f64>,
    scratch: Vec<f64>,
    log_det: f64,
}

impl<'a> Factorizer<'a> {
    fn new(a: &'a SymmetricBand, keep_all: bool) -> Self {
        let width = a.bandwidth + 1;
        let slots = if keep_all { a.dim } else { width.min(a.dim) };
        Factorizer {
            a,
            width,
            slots,
            storage: vec![0.0; slots * width],
            scratch: vec![0.0; width],
            log_det: 0.0,
        }
    }

    #[inline]
    fn row(&self, r: usize) -> &[f64] {
        let s = r % self.slots;
        &self.storage[s * self.width..(s + 1) * self.width]
    }

    /// Factors row `i`; rows `i - bandwidth .. i` must already be present.
    fn factor_row(&mut self, i: usize) -> Result<()> {
        let bw = self.a.bandwidth;
        let lo = i.saturating_sub(bw);
        let mut cur = std::mem::take(&mut self.scratch);
        cur.fill(0.0);
        for &(c, v) in &self.a.lower[i] {
            cur[c + bw - i] = v;
        }
        let start_i = lo + bw - i;
        for c in lo..i {
            let row_c = self.row(c);
            let k = c + bw - i;
            let s = cur[k] - dot(&cur[start_i..k], &row_c[lo + bw - c..bw]);
            cur[k] = s / row_c[bw];
        }
        let d = cur[bw] - dot(&cur[start_i..bw], &cur[start_i..bw]);
        if !(d > 0.0) || !d.is_finite() {
            self.scratch = cur;
            return Err(LerwError::numerical(format!(
                "nonpositive pivot {d:e} at elimination step {i} of {}",
                self.a.dim
            )));
        }
        cur[bw] = d.sqrt();
        self.log_det += d.ln();
        let s = i % self.slots;
        self.storage[s * self.width..(s + 1) * self.width].copy_from_slice(&cur);
        self.scratch = cur;
        Ok(())
    }

    /// Forward-substitutes entry `i` of `y` using the freshly factored row.
    #[inline]
    fn forward_row(&self, i: usize, y: &mut [f64]) {
        let bw = self.a.bandwidth;
        let lo = i.saturating_sub(bw);
        let row = self.row(i);
        let s = y[i] - dot(&row[lo + bw - i..bw], &y[lo..i]);
        y[i] = s / row[bw];
    }
}

/// Factors `a` with a rolling window, returning `ln det a` and replacing
/// every vector in `rhs` by `L⁻¹ rhs`.
pub fn streaming_factor(a: &SymmetricBand, rhs: &mut [Vec<f64>]) -> Result<f64> {
    for v in rhs.iter() {
        if v.len() != a.dim {
            return Err(LerwError::precondition(format!(
                "right-hand side has length {}, expected {}",
                v.len(),
                a.dim
            )));
        }
    }
    let mut f = Factorizer::new(a, false);
    for i in 0..a.dim {
        f.factor_row(i)?;
        for v in rhs.iter_mut() {
            f.forward_row(i, v);
        }
    }
    Ok(f.log_det)
}

/// A stored Cholesky factor `A = L Lᵀ`.
pub struct BandCholesky {
    dim: usize,
    bandwidth: usize,
    storage: Vec<f64>,
    log_det: f64,
}

impl BandCholesky {
    pub fn factor(a: &SymmetricBand) -> Result<Self> {
        let mut f = Factorizer::new(a, true);
        for i in 0..a.dim {
            f.factor_row(i)?;
        }
        Ok(BandCholesky {
            dim: a.dim,
            bandwidth: a.bandwidth,
            storage: f.storage,
            log_det: f.log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.bandwidth + 1;
        &self.storage[r * w..(r + 1) * w]
    }

    /// `y ← L⁻¹ y`.
    pub fn forward(&self, y: &mut [f64]) {
        let bw = self.bandwidth;
        for i in 0..self.dim {
            let lo = i.saturating_sub(bw);
            let row = self.row(i);
            let s = y[i] - dot(&row[lo + bw - i..bw], &y[lo..i]);
            y[i] = s / row[bw];
        }
    }

    /// `z ← L⁻ᵀ z`.
    pub fn backward(&self, z: &mut [f64]) {
        let bw = self.bandwidth;
        for i in (0..self.dim).rev() {
            let row = self.row(i);
            let xi = z[i] / row[bw];
            z[i] = xi;
            let lo = i.saturating_sub(bw);
            for c in lo..i {
                z[c] -= row[c + bw - i] * xi;
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }
}
