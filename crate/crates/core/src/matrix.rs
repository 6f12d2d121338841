//! Dense row-major matrices and the linear-algebra primitives shared by the
//! solver, the CAA model and the detectors.

use std::fmt;
use std::ops::Index;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};

/// Real-valued `rows x cols` matrix stored in row-major order.
///
/// Every entry is finite; constructors that accept external data check this.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = CaaError;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CaaError::InvalidArgument(format!(
                "matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(CaaError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(CaaError::NonFinite);
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(CaaError::DimensionMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        DenseMatrix::new(n, m, data)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(CaaError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(CaaError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T * y`.
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(CaaError::DimensionMismatch {
                expected: self.rows,
                found: y.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        Ok(out)
    }

    /// Gram matrix `self^T * self`.
    pub fn gram(&self) -> DenseMatrix {
        let m = self.cols;
        let mut out = DenseMatrix::zeros(m, m);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..m {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..m {
                    out.data[a * m + b] += ra * r[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                out.data[a * m + b] = out.data[b * m + a];
            }
        }
        out
    }

    /// `self - alpha * x y^T`, in place.
    pub fn rank1_update(&mut self, alpha: f64, x: &[f64], y: &[f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (e, &yj) in row.iter_mut().zip(y) {
                *e -= alpha * xi * yj;
            }
        }
    }

    /// `self - lambda * I`; the matrix must be square.
    pub fn shift_diagonal(&self, lambda: f64) -> DenseMatrix {
        assert_eq!(self.rows, self.cols, "diagonal shift needs a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] -= lambda;
        }
        out
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(CaaError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: rhs.rows * rhs.cols,
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix::from_raw(self.rows, self.cols, data))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DenseMatrix> {
        if indices.is_empty() {
            return Err(CaaError::InvalidArgument("row selection is empty".into()));
        }
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(CaaError::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(DenseMatrix::from_raw(indices.len(), self.cols, data))
    }

    /// Stacks `extra` zero rows underneath.
    pub(crate) fn pad_rows(&self, extra: usize) -> DenseMatrix {
        let mut data = self.data.clone();
        data.resize((self.rows + extra) * self.cols, 0.0);
        DenseMatrix::from_raw(self.rows + extra, self.cols, data)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Pearson correlation; zero when either side has no spread.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Per-column location and scale fitted by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
}

impl StandardizationParams {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Standardizes a single observation.
    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.means.len() {
            return Err(CaaError::DimensionMismatch {
                expected: self.means.len(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CaaError::NonFinite);
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.stdevs))
            .map(|(v, (mu, sd))| (v - mu) / sd)
            .collect())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.means.len() != self.stdevs.len() {
            return Err(CaaError::Format(
                "standardization means and stdevs differ in length".into(),
            ));
        }
        if self
            .stdevs
            .iter()
            .any(|s| !s.is_finite() || *s <= 0.0)
            || self.means.iter().any(|m| !m.is_finite())
        {
            return Err(CaaError::Format(
                "standardization params must be finite with positive stdevs".into(),
            ));
        }
        Ok(())
    }
}

/// Centers every column and scales it to unit sample standard deviation
/// (`n - 1` denominator).
pub fn standardize(x: &DenseMatrix) -> Result<(DenseMatrix, StandardizationParams)> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(CaaError::InsufficientData(
            "standardization needs at least two rows".into(),
        ));
    }
    let mut means = vec![0.0; m];
    for i in 0..n {
        for (mu, v) in means.iter_mut().zip(x.row(i)) {
            *mu += v;
        }
    }
    means.iter_mut().for_each(|mu| *mu /= n as f64);

    let mut ss = vec![0.0; m];
    for i in 0..n {
        for ((s, v), mu) in ss.iter_mut().zip(x.row(i)).zip(&means) {
            let d = v - mu;
            *s += d * d;
        }
    }
    let mut stdevs = Vec::with_capacity(m);
    for (j, s) in ss.iter().enumerate() {
        let sd = (s / (n - 1) as f64).sqrt();
        if sd == 0.0 {
            return Err(CaaError::ConstantColumn(j));
        }
        stdevs.push(sd);
    }
    let params = StandardizationParams { means, stdevs };
    let out = apply_standardization(x, &params)?;
    Ok((out, params))
}

/// Applies previously fitted standardization: `(x_ij - means[j]) / stdevs[j]`.
pub fn apply_standardization(x: &DenseMatrix, p: &StandardizationParams) -> Result<DenseMatrix> {
    if x.cols() != p.means.len() {
        return Err(CaaError::DimensionMismatch {
            expected: p.means.len(),
            found: x.cols(),
        });
    }
    let m = x.cols();
    let data = x
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let j = k % m;
            (v - p.means[j]) / p.stdevs[j]
        })
        .collect();
    Ok(DenseMatrix::from_raw(x.rows(), m, data))
}

/// Thin singular value decomposition `X = U diag(S) V^T` with `r = min(n, m)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `n x r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Singular values, nonincreasing.
    pub s: Vec<f64>,
    /// `m x r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let (n, r) = self.u.shape();
        let m = self.v.rows();
        let mut out = DenseMatrix::zeros(n, m);
        for k in 0..r {
            let uk = self.u.column(k);
            let vk = self.v.column(k);
            out.rank1_update(-self.s[k], &uk, &vk);
        }
        out
    }

    pub fn top_right_vector(&self) -> Vec<f64> {
        self.v.column(0)
    }
}

/// Singular value decomposition via Golub-Kahan bidiagonalization with
/// implicit-shift QR.
///
/// Values are sorted descending and each right singular vector is signed so
/// that its largest-magnitude entry (lowest index on ties) is positive; the
/// matching left vector is flipped with it.
pub fn svd(x: &DenseMatrix) -> Result<SvdResult> {
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(CaaError::NonFinite);
    }
    let (n, m) = x.shape();
    let r = n.min(m);
    let max_iter = 100 * r;
    let dec = nalgebra::SVD::try_new(x.to_nalgebra(), true, true, f64::EPSILON, max_iter)
        .ok_or(CaaError::ConvergenceFailure)?;
    let u_na = dec.u.ok_or(CaaError::ConvergenceFailure)?;
    let vt_na = dec.v_t.ok_or(CaaError::ConvergenceFailure)?;
    let sv: Vec<f64> = dec.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut u = DenseMatrix::zeros(n, r);
    let mut v = DenseMatrix::zeros(m, r);
    let mut s = Vec::with_capacity(r);
    for (k, &src) in order.iter().enumerate() {
        let mut col_v: Vec<f64> = (0..m).map(|i| vt_na[(src, i)]).collect();
        let mut col_u: Vec<f64> = (0..n).map(|i| u_na[(i, src)]).collect();
        let mut pivot = 0;
        for (i, val) in col_v.iter().enumerate() {
            if val.abs() > col_v[pivot].abs() {
                pivot = i;
            }
        }
        if col_v[pivot] < 0.0 {
            col_v.iter_mut().for_each(|e| *e = -*e);
            col_u.iter_mut().for_each(|e| *e = -*e);
        }
        for (i, val) in col_v.into_iter().enumerate() {
            v.set(i, k, val);
        }
        for (i, val) in col_u.into_iter().enumerate() {
            u.set(i, k, val);
        }
        s.push(sv[src].max(0.0));
    }
    Ok(SvdResult { u, s, v })
}

/// `sign(x) * max(|x| - delta, 0)`.
#[inline]
pub fn soft_threshold(x: f64, delta: f64) -> f64 {
    debug_assert!(delta >= 0.0);
    let mag = x.abs() - delta;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
        let data = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::new(n, m, data).unwrap()
    }

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        let qtq = q.transpose().matmul(q).unwrap();
        qtq.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn standardize_two_points() {
        let x = DenseMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let (z, p) = standardize(&x).unwrap();
        assert_abs_diff_eq!(z[(0, 0)], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-8);
        assert_abs_diff_eq!(z[(1, 0)], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-8);
        assert_eq!(p.means, vec![2.0]);
        assert_abs_diff_eq!(p.stdevs[0], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 30, 5);
        let (z1, _) = standardize(&x).unwrap();
        let (z2, _) = standardize(&z1).unwrap();
        assert!(z1.sub(&z2).unwrap().max_abs() < 1e-10);
        for j in 0..5 {
            let col = z1.column(j);
            let mean = col.iter().sum::<f64>() / 30.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 29.0;
            assert!(mean.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DenseMatrix::from_rows(&[[5.0, 1.0], [5.0, 2.0]]).unwrap();
        assert!(matches!(standardize(&x), Err(CaaError::ConstantColumn(0))));
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(matches!(
            DenseMatrix::from_rows(&[[1.0, f64::NAN]]),
            Err(CaaError::NonFinite)
        ));
    }

    #[test]
    fn apply_standardization_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 12, 3);
        let (z, p) = standardize(&x).unwrap();
        assert_eq!(apply_standardization(&x, &p).unwrap(), z);

        let id = StandardizationParams {
            means: vec![0.0; 3],
            stdevs: vec![1.0; 3],
        };
        assert_eq!(apply_standardization(&x, &id).unwrap(), x);

        let single = DenseMatrix::from_rows(&[[4.0]]).unwrap();
        let p = StandardizationParams {
            means: vec![2.0],
            stdevs: vec![2.0],
        };
        assert_eq!(apply_standardization(&single, &p).unwrap()[(0, 0)], 1.0);

        assert!(matches!(
            apply_standardization(&single, &id),
            Err(CaaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let s = svd(&DenseMatrix::identity(2)).unwrap();
        assert_abs_diff_eq!(s.s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.s[1], 1.0, epsilon = 1e-14);

        let s = svd(&DenseMatrix::diag(&[2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(s.s[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.s[1], 2.0, epsilon = 1e-14);
        // sign convention: largest entry of each V column is positive
        assert_abs_diff_eq!(s.v[(1, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_random_5x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 5, 3);
        let s = svd(&x).unwrap();
        assert!(s.reconstruct().sub(&x).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn svd_wide_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 3, 7);
        let s = svd(&x).unwrap();
        assert_eq!(s.s.len(), 3);
        assert_eq!(s.v.shape(), (7, 3));
        assert!(s.reconstruct().sub(&x).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(-3.25, 0.0), -3.25);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    proptest! {
        #[test]
        fn svd_invariants(n in 1usize..50, m in 1usize..50, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, n, m);
            let s = svd(&x).unwrap();
            prop_assert!(s.reconstruct().sub(&x).unwrap().max_abs() < 1e-8);
            prop_assert!(orthonormality_error(&s.u) < 1e-8);
            prop_assert!(orthonormality_error(&s.v) < 1e-8);
            prop_assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..s.s.len() {
                let col = s.v.column(k);
                let pivot = col.iter().enumerate().fold(0, |p, (i, v)| if v.abs() > col[p].abs() { i } else { p });
                prop_assert!(col[pivot] > 0.0);
            }
        }

        #[test]
        fn standardize_then_apply_idempotent(n in 3usize..20, m in 1usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, n, m);
            let (z, p) = standardize(&x).unwrap();
            let again = apply_standardization(&x, &p).unwrap();
            prop_assert!(again.sub(&z).unwrap().max_abs() < 1e-10);
            let (zz, _) = standardize(&z).unwrap();
            prop_assert!(zz.sub(&z).unwrap().max_abs() < 1e-10);
        }

        #[test]
        fn soft_threshold_properties(x in -100.0f64..100.0, y in -100.0f64..100.0, d in 0.0f64..50.0, d2 in 0.0f64..50.0) {
            prop_assert_eq!(soft_threshold(-x, d), -soft_threshold(x, d));
            prop_assert!((soft_threshold(x, d) - soft_threshold(y, d)).abs() <= (x - y).abs() + 1e-12);
            let (lo, hi) = if d <= d2 { (d, d2) } else { (d2, d) };
            prop_assert!(soft_threshold(x.abs(), hi) <= soft_threshold(x.abs(), lo));
        }
    }
}
