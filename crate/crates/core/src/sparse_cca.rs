//! Sparse CCA solver: maximize `u^T M v` subject to `||u||_2 <= 1`,
//! `||v||_2 <= 1`, `||u||_1 <= c1`, `||v||_1 <= c2`, using penalized
//! rank-1 matrix decomposition with alternating soft-thresholded updates.

use serde::{Deserialize, Serialize};

use crate::error::{CaaError, Result};
use crate::matrix::{dot, max_abs_diff, norm1, norm2, soft_threshold, svd, DenseMatrix};

const BISECTION_STEPS: usize = 60;
const DEFLATION_FLOOR: f64 = 1e-10;
const OBJECTIVE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseCcaConfig {
    /// L1 cap on `u`, within `[1, sqrt(p)]`.
    pub c1: f64,
    /// L1 cap on `v`, within `[1, sqrt(q)]`.
    pub c2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl SparseCcaConfig {
    pub fn new(c1: f64, c2: f64) -> Self {
        SparseCcaConfig {
            c1,
            c2,
            max_iter: 200,
            tol: 1e-8,
        }
    }

    /// Mid-range sparsity: half of the largest admissible cap, never below 1.
    pub fn default_for(p: usize, q: usize) -> Self {
        SparseCcaConfig::new(default_cap(p), default_cap(q))
    }

    /// Caps that never bind, so the solver reduces to the leading singular pair.
    pub fn inactive(p: usize, q: usize) -> Self {
        SparseCcaConfig::new((p as f64).sqrt(), (q as f64).sqrt())
    }

    pub fn validate(&self, p: usize, q: usize) -> Result<()> {
        check_cap("c1", self.c1, p)?;
        check_cap("c2", self.c2, q)?;
        if self.max_iter == 0 {
            return Err(CaaError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CaaError::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn default_cap(dim: usize) -> f64 {
    (0.5 * (dim as f64).sqrt()).max(1.0)
}

fn check_cap(name: &str, c: f64, dim: usize) -> Result<()> {
    // small slack so that sqrt(dim) computed elsewhere is accepted
    let upper = (dim as f64).sqrt() * (1.0 + 1e-12);
    if !(c >= 1.0 && c <= upper) {
        return Err(CaaError::InvalidConfig(format!(
            "{name} = {c} outside [1, sqrt({dim})]"
        )));
    }
    Ok(())
}

/// One rank-1 factor `(u, v, d)` with `d = u^T M v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub d: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

fn l1_ratio_after(a: &[f64], delta: f64) -> f64 {
    let (mut l1, mut l2) = (0.0, 0.0);
    for &x in a {
        let s = soft_threshold(x, delta);
        l1 += s.abs();
        l2 += s * s;
    }
    if l2 == 0.0 {
        0.0
    } else {
        l1 / l2.sqrt()
    }
}

/// Smallest `delta >= 0` for which the normalized soft-thresholded `a` has
/// L1 norm at most `c`, found by bisection on `[0, max |a_i|]`.
pub fn l1_projection_threshold(a: &[f64], c: f64) -> Result<f64> {
    let top = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if top == 0.0 {
        return Err(CaaError::ZeroVector);
    }
    if l1_ratio_after(a, 0.0) <= c {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if l1_ratio_after(a, mid) <= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Maximizer of `w^T a` over the L2 ball intersected with the L1 ball of
/// radius `c`.
fn sparse_direction(a: &[f64], c: f64) -> Result<Vec<f64>> {
    let delta = l1_projection_threshold(a, c)?;
    let mut w: Vec<f64> = a.iter().map(|&x| soft_threshold(x, delta)).collect();
    let n = norm2(&w);
    if n == 0.0 {
        // Several entries tie at max |a|; no nonzero threshold separates
        // them, so keep the first.
        let pivot = a
            .iter()
            .enumerate()
            .fold(0, |p, (i, x)| if x.abs() > a[p].abs() { i } else { p });
        w.iter_mut().for_each(|e| *e = 0.0);
        w[pivot] = a[pivot].signum();
        return Ok(w);
    }
    w.iter_mut().for_each(|e| *e /= n);
    Ok(w)
}

/// Rank-1 penalized matrix decomposition of `m`.
///
/// Starts from the top right singular vector of `m` and alternates
/// `u <- S(Mv)/||S(Mv)||`, `v <- S(M^T u)/||S(M^T u)||` until neither vector
/// moves by more than `tol` (max-abs) or `max_iter` is reached. Hitting the
/// cap is reported through `converged = false`, not as an error.
pub fn pmd_rank1(m: &DenseMatrix, cfg: &SparseCcaConfig) -> Result<PenalizedPair> {
    pmd_rank1_inner(m, cfg, None)
}

pub(crate) fn pmd_rank1_inner(
    m: &DenseMatrix,
    cfg: &SparseCcaConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<PenalizedPair> {
    let (p, q) = m.shape();
    cfg.validate(p, q)?;
    if m.max_abs() == 0.0 {
        return Err(CaaError::ZeroMatrix);
    }
    let init = svd(m)?;
    let mut v = init.top_right_vector();
    let mut u = vec![0.0; p];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let a = m.matvec(&v)?;
        let u_new = match sparse_direction(&a, cfg.c1) {
            Ok(w) => w,
            Err(CaaError::ZeroVector) => break,
            Err(e) => return Err(e),
        };
        // the starting v is dense and may violate the c2 cap, so the
        // objective is only traced once both vectors are feasible
        if let Some(t) = trace.as_deref_mut().filter(|_| it > 1) {
            t.push(dot(&u_new, &a));
        }
        let b = m.t_matvec(&u_new)?;
        let v_new = match sparse_direction(&b, cfg.c2) {
            Ok(w) => w,
            Err(CaaError::ZeroVector) => {
                u = u_new;
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push(dot(&b, &v_new));
        }
        let change = max_abs_diff(&u_new, &u).max(max_abs_diff(&v_new, &v));
        u = u_new;
        v = v_new;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let mv = m.matvec(&v)?;
    let mut d = dot(&u, &mv);
    if d < 0.0 {
        u.iter_mut().for_each(|e| *e = -*e);
        d = -d;
    }
    canonical_sign(&mut u, &mut v);
    Ok(PenalizedPair {
        u,
        v,
        d,
        iterations_used: iterations,
        converged,
    })
}

/// Flips `(u, v)` jointly so the largest-magnitude entry of `v` is positive.
fn canonical_sign(u: &mut [f64], v: &mut [f64]) {
    let pivot = v
        .iter()
        .enumerate()
        .fold(0, |p, (i, x)| if x.abs() > v[p].abs() { i } else { p });
    if v.get(pivot).is_some_and(|x| *x < 0.0) {
        u.iter_mut().for_each(|e| *e = -*e);
        v.iter_mut().for_each(|e| *e = -*e);
    }
}

/// Successive factors by deflation: `M_{j+1} = M_j - d_j u_j v_j^T`.
///
/// Stops before `k` once the working matrix vanishes (max-abs below 1e-10)
/// or a factor's objective drops below 1e-8.
pub fn pmd_multi(m: &DenseMatrix, cfg: &SparseCcaConfig, k: usize) -> Result<Vec<PenalizedPair>> {
    if k == 0 {
        return Err(CaaError::InvalidConfig("k must be at least 1".into()));
    }
    let mut work = m.clone();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        if work.max_abs() < DEFLATION_FLOOR {
            break;
        }
        let pair = pmd_rank1(&work, cfg)?;
        if pair.d < OBJECTIVE_FLOOR {
            break;
        }
        work.rank1_update(pair.d, &pair.u, &pair.v);
        out.push(pair);
    }
    Ok(out)
}

/// True when the pair satisfies all four constraints within `slack`.
pub fn is_feasible(pair: &PenalizedPair, cfg: &SparseCcaConfig, slack: f64) -> bool {
    norm2(&pair.u) <= 1.0 + slack
        && norm2(&pair.v) <= 1.0 + slack
        && norm1(&pair.u) <= cfg.c1 + slack
        && norm1(&pair.v) <= cfg.c2 + slack
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

    #[test]
    fn threshold_single_nonzero() {
        assert_eq!(l1_projection_threshold(&[1.0, 0.0, 0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_boundary() {
        assert_eq!(
            l1_projection_threshold(&[1.0, 1.0], 2f64.sqrt()).unwrap(),
            0.0
        );
    }

    #[test]
    fn threshold_matches_grid_scan() {
        // oracle: scan delta on a fine grid and keep the first feasible point
        let a = [3.0, 1.0];
        let ratio = |d: f64| {
            let s: Vec<f64> = a.iter().map(|&x| soft_threshold(x, d)).collect();
            norm1(&s) / norm2(&s)
        };
        let first = (0..=3000)
            .map(|k| k as f64 * 1e-3)
            .find(|&d| ratio(d) <= 1.0)
            .unwrap();
        assert_abs_diff_eq!(first, 1.0, epsilon = 1e-12);
        let delta = l1_projection_threshold(&a, 1.0).unwrap();
        assert!((delta - 1.0).abs() < 1e-9);
        assert!(ratio(delta) <= 1.0);
    }

    #[test]
    fn threshold_zero_vector() {
        assert!(matches!(
            l1_projection_threshold(&[0.0, 0.0], 1.0),
            Err(CaaError::ZeroVector)
        ));
    }

    #[test]
    fn tied_entries_collapse_to_first() {
        let w = sparse_direction(&[-2.0, 2.0], 1.0).unwrap();
        assert_eq!(w, vec![-1.0, 0.0]);
    }

    #[test]
    fn inactive_caps_give_leading_singular_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_matrix(&mut rng, 6, 4);
        let pair = pmd_rank1(&m, &SparseCcaConfig::inactive(6, 4)).unwrap();
        let s = svd(&m).unwrap();
        assert!((pair.d - s.s[0]).abs() < 1e-6);
        let v_ref = s.v.column(0);
        let align = dot(&pair.v, &v_ref).abs();
        assert!((align - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_l1_cap_picks_single_entry() {
        let m = DenseMatrix::diag(&[5.0, 1.0]);
        let pair = pmd_rank1(&m, &SparseCcaConfig::new(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(pair.d, 5.0, epsilon = 1e-12);
        assert_eq!(pair.u, vec![1.0, 0.0]);
        assert_eq!(pair.v, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_matrix_rejected() {
        let m = DenseMatrix::zeros(3, 3);
        assert!(matches!(
            pmd_rank1(&m, &SparseCcaConfig::new(1.0, 1.0)),
            Err(CaaError::ZeroMatrix)
        ));
    }

    #[test]
    fn bad_caps_rejected() {
        let m = DenseMatrix::identity(4);
        assert!(pmd_rank1(&m, &SparseCcaConfig::new(0.5, 1.0)).is_err());
        assert!(pmd_rank1(&m, &SparseCcaConfig::new(1.0, 2.5)).is_err());
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 8, 8);
        let mut cfg = SparseCcaConfig::new(1.5, 1.5);
        cfg.max_iter = 1;
        cfg.tol = 1e-300;
        let pair = pmd_rank1(&m, &cfg).unwrap();
        assert!(!pair.converged);
        assert_eq!(pair.iterations_used, 1);
    }

    #[test]
    fn multi_on_diagonal() {
        let m = DenseMatrix::diag(&[3.0, 2.0]);
        let pairs = pmd_multi(&m, &SparseCcaConfig::inactive(2, 2), 2).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_abs_diff_eq!(pairs[0].d, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1].d, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[0].u[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[0].v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1].u[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1].v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn multi_stops_on_rank_one() {
        let mut m = DenseMatrix::zeros(3, 3);
        m.rank1_update(-1.0, &[1.0, 2.0, -1.0], &[0.5, 0.0, 3.0]);
        let pairs = pmd_multi(&m, &SparseCcaConfig::inactive(3, 3), 3).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn multi_frobenius_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_matrix(&mut rng, 6, 6);
        let pairs = pmd_multi(&m, &SparseCcaConfig::inactive(6, 6), 6).unwrap();
        let sum_sq: f64 = pairs.iter().map(|p| p.d * p.d).sum();
        assert!((sum_sq - m.frobenius_norm().powi(2)).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn constraints_hold(p in 2usize..12, q in 2usize..12, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, p, q);
            let c1 = 1.0 + f1 * ((p as f64).sqrt() - 1.0);
            let c2 = 1.0 + f2 * ((q as f64).sqrt() - 1.0);
            let cfg = SparseCcaConfig::new(c1, c2);
            let pair = pmd_rank1(&m, &cfg).unwrap();
            prop_assert!(norm2(&pair.u) <= 1.0 + 1e-8);
            prop_assert!(norm2(&pair.v) <= 1.0 + 1e-8);
            prop_assert!(norm1(&pair.u) <= c1 + 1e-6);
            prop_assert!(norm1(&pair.v) <= c2 + 1e-6);
            prop_assert!(pair.d >= 0.0);
            for f in pmd_multi(&m, &cfg, 3).unwrap() {
                prop_assert!(is_feasible(&f, &cfg, 1e-6));
            }
        }

        #[test]
        fn objective_never_decreases(p in 2usize..10, q in 2usize..10, f in 0.0f64..1.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, p, q);
            let c1 = 1.0 + f * ((p as f64).sqrt() - 1.0);
            let c2 = 1.0 + f * ((q as f64).sqrt() - 1.0);
            let mut trace = Vec::new();
            pmd_rank1_inner(&m, &SparseCcaConfig::new(c1, c2), Some(&mut trace)).unwrap();
            for w in trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "objective dropped: {:?}", w);
            }
        }

        #[test]
        fn deflation_shrinks_frobenius(n in 2usize..10, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, n, n);
            let cfg = SparseCcaConfig::default_for(n, n);
            let pair = pmd_rank1(&m, &cfg).unwrap();
            let mut next = m.clone();
            next.rank1_update(pair.d, &pair.u, &pair.v);
            prop_assert!(pair.d > 0.0);
            prop_assert!(next.frobenius_norm() < m.frobenius_norm());
        }

        #[test]
        fn inactive_matches_svd(p in 1usize..=20, q in 1usize..=20, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, p, q);
            let pair = pmd_rank1(&m, &SparseCcaConfig::inactive(p, q)).unwrap();
            let s = svd(&m).unwrap();
            prop_assert!((pair.d - s.s[0]).abs() < 1e-6);
        }
    }
}
