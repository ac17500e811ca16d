//! Cholesky factor `RᵀR = M` maintained under column insertion and deletion.

/// Pivots below this fraction of the diagonal entry are treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Upper-triangular factor stored by columns; column `j` holds `R[0..=j, j]`.
#[derive(Debug, Clone, Default)]
pub struct Cholesky {
    cols: Vec<Vec<f64>>,
}

/// The pivot that failed: its position and squared value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub position: usize,
    pub value: f64,
}

impl Cholesky {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Fresh factorization of a dense symmetric matrix (row-major `dim × dim`).
    pub fn factor(m: &[f64], dim: usize) -> Result<Self, PivotFailure> {
        assert_eq!(m.len(), dim * dim);
        let mut ch = Self::new();
        for k in 0..dim {
            ch.push(&m[k * dim..k * dim + k], m[k * dim + k])?;
        }
        Ok(ch)
    }

    /// Appends a row/column with off-diagonal entries `cross` (against the
    /// current columns, in order) and diagonal `diag`.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> Result<(), PivotFailure> {
        let k = self.dim();
        assert_eq!(cross.len(), k);
        let mut col = cross.to_vec();
        self.forward_in_place(&mut col);
        let norm: f64 = col.iter().map(|v| v * v).sum();
        let piv = diag - norm;
        if !(piv > RANK_TOL * diag.abs()) || !piv.is_finite() {
            return Err(PivotFailure { position: k, value: piv });
        }
        col.push(piv.sqrt());
        self.cols.push(col);
        Ok(())
    }

    /// Deletes row/column `pos`, restoring triangularity with Givens rotations.
    pub fn remove(&mut self, pos: usize) {
        assert!(pos < self.dim());
        self.cols.remove(pos);
        // Columns j ≥ pos now carry one subdiagonal entry at row j+1.
        for k in pos..self.cols.len() {
            let (a, b) = (self.cols[k][k], self.cols[k][k + 1]);
            let r = a.hypot(b);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            for col in self.cols[k..].iter_mut() {
                let (u, v) = (col[k], col[k + 1]);
                col[k] = c * u + s * v;
                col[k + 1] = -s * u + c * v;
            }
            self.cols[k][k] = r;
            self.cols[k].truncate(k + 1);
        }
    }

    /// Whether every diagonal entry is finite and positive.
    pub fn is_healthy(&self) -> bool {
        self.cols.iter().enumerate().all(|(j, c)| c[j].is_finite() && c[j] > 0.0)
    }

    /// Solves `Rᵀz = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        for j in 0..b.len() {
            let col = &self.cols[j];
            let mut s = b[j];
            for i in 0..j {
                s -= col[i] * b[i];
            }
            b[j] = s / col[j];
        }
    }

    /// Solves `Rx = z` in place.
    pub fn backward_in_place(&self, z: &mut [f64]) {
        for j in (0..z.len()).rev() {
            let col = &self.cols[j];
            z[j] /= col[j];
            let xj = z[j];
            for i in 0..j {
                z[i] -= col[i] * xj;
            }
        }
    }

    /// Solves `RᵀR x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim());
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    /// Dense `R` (row-major), for checks.
    pub fn upper(&self) -> Vec<f64> {
        let d = self.dim();
        let mut r = vec![0.0; d * d];
        for (j, col) in self.cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                r[i * d + j] = v;
            }
        }
        r
    }

    /// Dense `RᵀR` (row-major).
    pub fn reconstruct(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let k = i.min(j);
                m[i * d + j] = (0..=k).map(|t| self.cols[i][t] * self.cols[j][t]).sum();
            }
        }
        m
    }
}
