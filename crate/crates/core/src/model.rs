//! Canonical autocorrelation analysis.
//!
//! The self-correlation problem `max u^T (X^T X - lambda I) v` is turned into
//! a sparse CCA problem on the pair `X_hat = [V (S^2 - lambda I)]^T`,
//! `Y_hat = V^T` built from the SVD of the standardized data. A grid search
//! over `lambda` keeps the smallest value whose solution has disjoint
//! supports (relative sparseness 1); successive pairs are found on the
//! deflated kernel.

use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};
use crate::matrix::{pearson, svd, DenseMatrix};
use crate::sparse_cca::{default_cap, pmd_rank1, PenalizedPair, SparseCcaConfig};

/// Entries at or below this magnitude are treated as zero when extracting
/// supports.
pub const ZERO_CUTOFF: f64 = 1e-10;

/// How the lambda of an accepted pair was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSelection {
    /// Smallest grid point whose solution reached the sparseness target.
    Grid,
    /// No grid point reached the target; the best grid solution had its
    /// overlapping coordinates split between `u` and `v` and was re-solved on
    /// the resulting disjoint supports.
    SupportSplit,
}

/// One canonical pair and its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub lambda: f64,
    /// Relative sparseness `1 - sum |u_i v_i|`.
    pub sparseness: f64,
    /// Pearson correlation of `X u` and `X v` on the training rows.
    pub correlation: f64,
    pub support_u: Vec<usize>,
    pub support_v: Vec<usize>,
    /// `u^T K v` on the kernel the pair was extracted from.
    pub objective: f64,
    pub converged: bool,
    pub selection: LambdaSelection,
}

impl CanonicalPair {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `support_u` followed by `support_v`, sorted.
    pub fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .support_u
            .iter()
            .chain(&self.support_v)
            .copied()
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.u.len() != self.v.len() {
            return Err(CaaError::Format("pair u and v differ in length".into()));
        }
        let finite = self.u.iter().chain(&self.v).all(|x| x.is_finite())
            && self.lambda.is_finite()
            && self.sparseness.is_finite()
            && self.correlation.is_finite();
        if !finite {
            return Err(CaaError::Format("pair contains non-finite values".into()));
        }
        let m = self.u.len();
        if self.support_u.iter().chain(&self.support_v).any(|&i| i >= m) {
            return Err(CaaError::Format("pair support index out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaaConfig {
    /// L1 cap on `u`; defaults to `max(1, sqrt(m)/2)`.
    pub c1: Option<f64>,
    /// L1 cap on `v`; defaults to `max(1, sqrt(m)/2)`.
    pub c2: Option<f64>,
    /// Upper bound on the number of pairs; defaults to `m`.
    pub max_pairs: Option<usize>,
    pub lambda_grid_size: usize,
    pub sparseness_tol: f64,
    /// Pairs whose projection correlation falls below this end the search.
    pub min_correlation: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Recover a disjoint pair when no grid point reaches the target.
    pub support_split_fallback: bool,
}

impl Default for CaaConfig {
    fn default() -> Self {
        CaaConfig {
            c1: None,
            c2: None,
            max_pairs: None,
            lambda_grid_size: 100,
            sparseness_tol: 1e-6,
            min_correlation: 0.3,
            max_iter: 200,
            tol: 1e-8,
            support_split_fallback: true,
        }
    }
}

impl CaaConfig {
    pub fn sparse_config(&self, m: usize) -> SparseCcaConfig {
        SparseCcaConfig {
            c1: self.c1.unwrap_or_else(|| default_cap(m)),
            c2: self.c2.unwrap_or_else(|| default_cap(m)),
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn pair_limit(&self, m: usize) -> usize {
        self.max_pairs.unwrap_or(m).min(m)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        self.sparse_config(m).validate(m, m)?;
        if self.lambda_grid_size < 2 {
            return Err(CaaError::InvalidConfig(
                "lambda_grid_size must be at least 2".into(),
            ));
        }
        if !(self.sparseness_tol > 0.0 && self.sparseness_tol < 1.0) {
            return Err(CaaError::InvalidConfig(
                "sparseness_tol must lie in (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.min_correlation) {
            return Err(CaaError::InvalidConfig(
                "min_correlation must lie in [0, 1]".into(),
            ));
        }
        if self.max_pairs == Some(0) {
            return Err(CaaError::InvalidConfig("max_pairs must be at least 1".into()));
        }
        Ok(())
    }
}

/// The factor pair whose product `x_hat^T y_hat` equals `X^T X - lambda I`.
#[derive(Debug, Clone)]
pub struct HatMatrices {
    /// `[V (S^2 - lambda I)]^T`, `m x m`.
    pub x_hat: DenseMatrix,
    /// `V^T`, `m x m`.
    pub y_hat: DenseMatrix,
    pub lambda: f64,
}

impl HatMatrices {
    /// `x_hat^T y_hat`, the matrix handed to the sparse CCA solver.
    pub fn cross_product(&self) -> DenseMatrix {
        self.x_hat
            .transpose()
            .matmul(&self.y_hat)
            .expect("hat matrices share their row dimension")
    }
}

/// Square right factor and padded spectrum of `X`.
///
/// When `n < m` the thin SVD only yields `n` right vectors, which is not
/// enough for `V V^T = I`; padding `X` with zero rows gives the full basis
/// without changing `X^T X`.
#[derive(Debug, Clone)]
struct Spectrum {
    v: DenseMatrix,
    s_sq: Vec<f64>,
}

impl Spectrum {
    fn of(x: &DenseMatrix) -> Result<Self> {
        let (n, m) = x.shape();
        let padded;
        let target = if n < m {
            padded = x.pad_rows(m - n);
            &padded
        } else {
            x
        };
        let dec = svd(target)?;
        Ok(Spectrum {
            v: dec.v,
            s_sq: dec.s.iter().map(|s| s * s).collect(),
        })
    }

    fn hats(&self, lambda: f64) -> HatMatrices {
        let m = self.v.rows();
        let y_hat = self.v.transpose();
        let mut x_hat = y_hat.clone();
        for k in 0..m {
            let scale = self.s_sq[k] - lambda;
            for j in 0..m {
                x_hat.set(k, j, scale * y_hat.get(k, j));
            }
        }
        HatMatrices {
            x_hat,
            y_hat,
            lambda,
        }
    }

    fn sigma1_sq(&self) -> f64 {
        self.s_sq.first().copied().unwrap_or(0.0)
    }
}

/// Builds `X_hat`, `Y_hat` from the SVD of the standardized data.
pub fn build_hat_matrices(x_std: &DenseMatrix, lambda: f64) -> Result<HatMatrices> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CaaError::InvalidArgument(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(Spectrum::of(x_std)?.hats(lambda))
}

/// `1 - sum_i |u_i v_i|`.
pub fn relative_sparseness(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(CaaError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(1.0 - u.iter().zip(v).map(|(a, b)| (a * b).abs()).sum::<f64>())
}

/// `lambda = 0` followed by `size` points spaced geometrically from
/// `sigma1^2 * 1e-4` to `sigma1^2`.
pub fn lambda_grid(sigma1_sq: f64, size: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(size + 1);
    grid.push(0.0);
    let lo = sigma1_sq * 1e-4;
    if size == 1 {
        grid.push(sigma1_sq);
        return grid;
    }
    let ratio = (sigma1_sq / lo).ln() / (size - 1) as f64;
    for k in 0..size {
        let value = if k == size - 1 {
            sigma1_sq
        } else {
            lo * (ratio * k as f64).exp()
        };
        grid.push(value);
    }
    grid
}

/// The lambda grid `fit_caa` sweeps for this data.
pub fn lambda_grid_for(x_std: &DenseMatrix, size: usize) -> Result<Vec<f64>> {
    Ok(lambda_grid(Spectrum::of(x_std)?.sigma1_sq(), size))
}

/// First-factor sparse CCA solution at a fixed `lambda`.
pub fn solve_at_lambda(x_std: &DenseMatrix, lambda: f64, cfg: &CaaConfig) -> Result<PenalizedPair> {
    let hats = build_hat_matrices(x_std, lambda)?;
    pmd_rank1(&hats.cross_product(), &cfg.sparse_config(x_std.cols()))
}

pub(crate) fn support(w: &[f64]) -> Vec<usize> {
    w.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > ZERO_CUTOFF)
        .map(|(i, _)| i)
        .collect()
}

fn clean(w: &mut [f64]) {
    for e in w.iter_mut() {
        if e.abs() <= ZERO_CUTOFF {
            *e = 0.0;
        }
    }
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|i| !b.contains(i))
}

struct Candidate {
    lambda: f64,
    pair: PenalizedPair,
    selection: LambdaSelection,
}

/// Splits the overlap of `pair`'s supports by magnitude and re-solves on the
/// masked kernel, so the result has disjoint supports by construction.
fn support_split(kernel: &DenseMatrix, pair: &PenalizedPair, cfg: &SparseCcaConfig) -> Result<Option<PenalizedPair>> {
    let m = kernel.rows();
    let mut keep_u: Vec<bool> = pair.u.iter().map(|x| x.abs() > ZERO_CUTOFF).collect();
    let mut keep_v: Vec<bool> = pair.v.iter().map(|x| x.abs() > ZERO_CUTOFF).collect();
    for i in 0..m {
        if keep_u[i] && keep_v[i] {
            if pair.u[i].abs() >= pair.v[i].abs() {
                keep_v[i] = false;
            } else {
                keep_u[i] = false;
            }
        }
    }
    if !keep_u.contains(&true) || !keep_v.contains(&true) {
        return Ok(None);
    }
    let mut masked = DenseMatrix::zeros(m, m);
    for i in (0..m).filter(|&i| keep_u[i]) {
        for j in (0..m).filter(|&j| keep_v[j]) {
            masked.set(i, j, kernel.get(i, j));
        }
    }
    match pmd_rank1(&masked, cfg) {
        Ok(p) if p.d > 0.0 => Ok(Some(p)),
        Ok(_) | Err(CaaError::ZeroMatrix) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sweep<F>(grid: &[f64], cfg: &CaaConfig, sparse: &SparseCcaConfig, kernel_at: F) -> Result<Option<Candidate>>
where
    F: Fn(f64) -> DenseMatrix,
{
    let target = 1.0 - cfg.sparseness_tol;
    let mut best: Option<(f64, f64, PenalizedPair)> = None;
    for &lambda in grid {
        let pair = match pmd_rank1(&kernel_at(lambda), sparse) {
            Ok(p) => p,
            Err(CaaError::ZeroMatrix) => continue,
            Err(e) => return Err(e),
        };
        let t = relative_sparseness(&pair.u, &pair.v)?;
        if t >= target && disjoint(&support(&pair.u), &support(&pair.v)) {
            return Ok(Some(Candidate {
                lambda,
                pair,
                selection: LambdaSelection::Grid,
            }));
        }
        if best.as_ref().is_none_or(|(_, bt, _)| t > *bt) {
            best = Some((lambda, t, pair));
        }
    }
    if !cfg.support_split_fallback {
        return Ok(None);
    }
    let Some((lambda, _, pair)) = best else {
        return Ok(None);
    };
    Ok(support_split(&kernel_at(lambda), &pair, sparse)?.map(|pair| Candidate {
        lambda,
        pair,
        selection: LambdaSelection::SupportSplit,
    }))
}

/// Finds up to `min(max_pairs, m)` canonical pairs in standardized data.
///
/// For each pair the lambda grid is swept in ascending order and the first
/// solution with relative sparseness at least `1 - sparseness_tol` (and
/// disjoint supports) is accepted. The search ends when the pair limit is
/// reached, a sweep yields nothing, or a pair's projection correlation falls
/// below `min_correlation`.
pub fn fit_caa(x_std: &DenseMatrix, cfg: &CaaConfig) -> Result<Vec<CanonicalPair>> {
    let (n, m) = x_std.shape();
    if n <= 2 || m < 2 {
        return Err(CaaError::InsufficientData(format!(
            "CAA needs more than two rows and at least two columns, got {n}x{m}"
        )));
    }
    cfg.validate(m)?;
    let sparse = cfg.sparse_config(m);
    let spectrum = Spectrum::of(x_std)?;
    if spectrum.sigma1_sq() == 0.0 {
        return Err(CaaError::ZeroMatrix);
    }
    let grid = lambda_grid(spectrum.sigma1_sq(), cfg.lambda_grid_size);
    let limit = cfg.pair_limit(m);

    let mut kernel = x_std.gram();
    let mut pairs: Vec<CanonicalPair> = Vec::new();
    while pairs.len() < limit {
        let found = if pairs.is_empty() {
            sweep(&grid, cfg, &sparse, |lambda| spectrum.hats(lambda).cross_product())?
        } else {
            sweep(&grid, cfg, &sparse, |lambda| kernel.shift_diagonal(lambda))?
        };
        let Some(Candidate {
            lambda,
            pair,
            selection,
        }) = found
        else {
            if pairs.is_empty() {
                return Err(CaaError::NoPairsFound);
            }
            break;
        };
        let PenalizedPair {
            mut u,
            mut v,
            converged,
            ..
        } = pair;
        clean(&mut u);
        clean(&mut v);
        let xu = x_std.matvec(&u)?;
        let xv = x_std.matvec(&v)?;
        let correlation = pearson(&xu, &xv);
        if correlation.abs() < cfg.min_correlation {
            break;
        }
        let kv = kernel.matvec(&v)?;
        let objective = crate::matrix::dot(&u, &kv);
        kernel.rank1_update(objective, &u, &v);
        pairs.push(CanonicalPair {
            sparseness: relative_sparseness(&u, &v)?,
            support_u: support(&u),
            support_v: support(&v),
            u,
            v,
            lambda,
            correlation,
            objective,
            converged,
            selection,
        });
    }
    Ok(pairs)
}

/// Maps every row onto the pair's plane: column 0 is `X u`, column 1 is `X v`.
pub fn project(x_std: &DenseMatrix, pair: &CanonicalPair) -> Result<DenseMatrix> {
    if x_std.cols() != pair.u.len() {
        return Err(CaaError::DimensionMismatch {
            expected: pair.u.len(),
            found: x_std.cols(),
        });
    }
    let xu = x_std.matvec(&pair.u)?;
    let xv = x_std.matvec(&pair.v)?;
    let data = xu.into_iter().zip(xv).flat_map(|(a, b)| [a, b]).collect();
    Ok(DenseMatrix::from_raw(x_std.rows(), 2, data))
}
