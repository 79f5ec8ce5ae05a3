//! Small dense linear-algebra kernels shared by the solvers.
//!
//! Matrices are row-major `Vec<f64>` slices. Everything here is sized for
//! snapshots of at most a few hundred vertices, so the plain O(n³)
//! factorizations are the right tool.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix. Returns `None` on a non-positive pivot.
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &[f64], n: usize) -> Option<Cholesky> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }

    /// Solve A x = b via the two triangular systems.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.l[i * n + k] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.l[k * n + i] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }
}

/// LU factorization with partial pivoting. Returns `None` only on an
/// exactly zero pivot column.
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[f64], n: usize) -> Option<Lu> {
        debug_assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[col * n + col].abs();
            for row in (col + 1)..n {
                let v = lu[row * n + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot * n + k);
                }
                perm.swap(col, pivot);
            }
            let d = lu[col * n + col];
            for row in (col + 1)..n {
                let f = lu[row * n + col] / d;
                lu[row * n + col] = f;
                for k in (col + 1)..n {
                    lu[row * n + k] -= f * lu[col * n + k];
                }
            }
        }
        Some(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Least squares by Householder QR: minimizes ‖A β − y‖₂ for a tall
/// row-major A (rows ≥ cols). Returns `None` when A is rank deficient.
pub(crate) fn lstsq_qr(a: &[f64], rows: usize, cols: usize, y: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert!(rows >= cols);
    let mut r = a.to_vec();
    let mut rhs = y.to_vec();
    let mut v = vec![0.0; rows];

    for j in 0..cols {
        let mut norm = 0.0;
        for i in j..rows {
            norm += r[i * cols + j] * r[i * cols + j];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if r[j * cols + j] >= 0.0 { -norm } else { norm };
        for i in j..rows {
            v[i] = r[i * cols + j];
        }
        v[j] -= alpha;
        let vnorm2: f64 = (j..rows).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            return None;
        }
        // apply H = I - 2 v vᵀ / (vᵀv) to the remaining columns and rhs
        for k in j..cols {
            let s: f64 = (j..rows).map(|i| v[i] * r[i * cols + k]).sum();
            let f = 2.0 * s / vnorm2;
            for i in j..rows {
                r[i * cols + k] -= f * v[i];
            }
        }
        let s: f64 = (j..rows).map(|i| v[i] * rhs[i]).sum();
        let f = 2.0 * s / vnorm2;
        for i in j..rows {
            rhs[i] -= f * v[i];
        }
        r[j * cols + j] = alpha;
    }

    let mut beta = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..cols {
            s -= r[i * cols + k] * beta[k];
        }
        let d = r[i * cols + i];
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        beta[i] = s / d;
    }
    Some(beta)
}

/// Eigenvalues of a tiny symmetric matrix by cyclic Jacobi rotations,
/// ascending. Used for condition-number estimates on fit designs; the
/// snapshot eigensolvers use iterative methods instead.
pub(crate) fn sym_eigenvalues_small(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + norm2(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
