use super::NumericsError;

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps a row-major buffer; every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.data[i * size + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(NumericsError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of the first `p` columns.
    pub fn leading_cols(&self, p: usize) -> DenseMatrix {
        assert!(p <= self.cols);
        let mut data = Vec::with_capacity(self.rows * p);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[..p]);
        }
        DenseMatrix {
            rows: self.rows,
            cols: p,
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v`.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        // SAFETY: the buffers have the stated shapes and strides; `out` does
        // not alias the inputs.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                other.cols as isize,
                1,
            );
        }
        out
    }

    /// `self * lᵀ` for lower-triangular `l`, skipping its zero upper blocks.
    pub fn matmul_lower_t(&self, l: &DenseMatrix) -> DenseMatrix {
        const BLOCK: usize = 64;
        assert_eq!(l.rows, l.cols);
        assert_eq!(self.cols, l.cols);
        let (n, p) = (self.rows, l.rows);
        let mut out = DenseMatrix::zeros(n, p);
        let mut k0 = 0;
        while k0 < p {
            let k1 = (k0 + BLOCK).min(p);
            // out[:, k0..k1] = self[:, ..k1] · l[k0..k1, ..k1]ᵀ
            // SAFETY: all offsets stay inside the row-major buffers; `out` is
            // a separate allocation.
            unsafe {
                matrixmultiply::dgemm(
                    n,
                    k1,
                    k1 - k0,
                    1.0,
                    self.data.as_ptr(),
                    self.cols as isize,
                    1,
                    l.data.as_ptr().add(k0 * p),
                    1,
                    p as isize,
                    0.0,
                    out.data.as_mut_ptr().add(k0),
                    p as isize,
                    1,
                );
            }
            k0 = k1;
        }
        out
    }

    /// Row Gram matrix `X Xᵀ` (rows × rows).
    pub fn gram_rows(&self) -> DenseMatrix {
        let n = self.rows;
        let mut out = DenseMatrix::zeros(n, n);
        // SAFETY: B = Xᵀ is expressed through swapped strides on the same
        // buffer; `out` is a separate allocation.
        unsafe {
            matrixmultiply::dgemm(
                n,
                self.cols,
                n,
                1.0,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                self.data.as_ptr(),
                1,
                self.cols as isize,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }

    /// Column Gram matrix `Xᵀ X` (cols × cols).
    pub fn gram_cols(&self) -> DenseMatrix {
        let p = self.cols;
        let mut out = DenseMatrix::zeros(p, p);
        // SAFETY: as in `gram_rows`, with A = Xᵀ.
        unsafe {
            matrixmultiply::dgemm(
                p,
                self.rows,
                p,
                1.0,
                self.data.as_ptr(),
                1,
                p as isize,
                self.data.as_ptr(),
                p as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                p as isize,
                1,
            );
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}
