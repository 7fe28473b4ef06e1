//! Robust trend extraction under missing data.
//!
//! The trend `tau` minimises
//!
//! ```text
//! ||W (y - tau)||_1 + lambda1 ||D1 tau||_1 + lambda2 ||D2 tau||_1
//! ```
//!
//! where `W` zeroes missing samples and `D1`, `D2` are first and second
//! difference operators. Stacking `A = [W; lambda1 D1; lambda2 D2]` and
//! `b = [W y; 0; 0]` turns this into `min ||A tau - b||_1`, which is solved by
//! ADMM. `A^T A` is pentadiagonal, so it is factored once and every x-update
//! costs O(N).

use serde::{Deserialize, Serialize};

use crate::banded::{BandedCholesky, SymBanded};
use crate::error::{Error, Result};
use crate::scalar::{median_in_place, Real};
use crate::series::{ObservedSeries, MIN_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 10.0,
            rho: 1.0,
            max_iter: 500,
            tol_abs: 1e-6,
            tol_rel: 1e-4,
        }
    }
}

impl TrendConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("rho", self.rho),
            ("tol_abs", self.tol_abs),
            ("tol_rel", self.tol_rel),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit<T> {
    pub trend: Vec<T>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Primal stopping threshold in effect at the last iteration.
    pub primal_tolerance: f64,
    pub converged: bool,
}

/// Banded difference operator of order 1 (rows `[1, -1]`) or 2 (rows `[1, -2, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceMatrix {
    order: usize,
    n: usize,
}

impl DifferenceMatrix {
    pub fn new(order: usize, n: usize) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(Error::InvalidArgument(format!(
                "difference order must be 1 or 2, got {order}"
            )));
        }
        if n < order + 1 {
            return Err(Error::InvalidArgument(format!(
                "order-{order} differences need n >= {}, got {n}",
                order + 1
            )));
        }
        Ok(Self { order, n })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> usize {
        self.n - self.order
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Nonzero pattern shared by every row.
    pub fn stencil(&self) -> &'static [f64] {
        match self.order {
            1 => &[1.0, -1.0],
            _ => &[1.0, -2.0, 1.0],
        }
    }

    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        match self.order {
            1 => x.windows(2).map(|w| w[0] - w[1]).collect(),
            _ => x
                .windows(3)
                .map(|w| w[0] - T::lit(2.0) * w[1] + w[2])
                .collect(),
        }
    }

    /// `D^T v`, accumulated into `out` after scaling by `scale`.
    pub fn apply_transpose_add<T: Real>(&self, v: &[T], scale: T, out: &mut [T]) {
        assert_eq!(v.len(), self.rows());
        assert_eq!(out.len(), self.n);
        let stencil = self.stencil();
        for (i, &vi) in v.iter().enumerate() {
            let s = scale * vi;
            for (j, &c) in stencil.iter().enumerate() {
                out[i + j] = out[i + j] + s * T::lit(c);
            }
        }
    }
}

/// `S_kappa(x) = (1 - kappa / |x|)_+ x`, with `S_kappa(0) = 0`.
#[inline]
pub fn soft_threshold<T: Real>(x: T, kappa: T) -> T {
    let a = x.abs();
    if a <= kappa {
        T::zero()
    } else {
        x - kappa * x.signum()
    }
}

pub fn soft_threshold_slice<T: Real>(x: &[T], kappa: T) -> Vec<T> {
    x.iter().map(|&v| soft_threshold(v, kappa)).collect()
}

/// The stacked L1 system `A = [W; lambda1 D1; lambda2 D2]`, `b = [W y; 0; 0]`.
#[derive(Debug, Clone)]
pub struct StackedSystem<'a, T> {
    weights: Vec<T>,
    y: &'a [T],
    lambda1: T,
    lambda2: T,
    d1: DifferenceMatrix,
    d2: DifferenceMatrix,
}

impl<'a, T: Real> StackedSystem<'a, T> {
    /// `y` is read only where `mask` is set.
    pub fn new(y: &'a [T], mask: &[bool], lambda1: T, lambda2: T) -> Result<Self> {
        let n = y.len();
        if n < MIN_LEN {
            return Err(Error::TooShort { len: n, min: MIN_LEN });
        }
        Ok(Self {
            weights: mask.iter().map(|&m| if m { T::one() } else { T::zero() }).collect(),
            y,
            lambda1,
            lambda2,
            d1: DifferenceMatrix::new(1, n)?,
            d2: DifferenceMatrix::new(2, n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn rows(&self) -> usize {
        self.n() + self.d1.rows() + self.d2.rows()
    }

    pub fn apply(&self, tau: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows());
        out.extend(tau.iter().zip(&self.weights).map(|(&t, &w)| w * t));
        out.extend(self.d1.apply(tau).into_iter().map(|v| self.lambda1 * v));
        out.extend(self.d2.apply(tau).into_iter().map(|v| self.lambda2 * v));
        out
    }

    pub fn apply_transpose(&self, v: &[T]) -> Vec<T> {
        let n = self.n();
        let (vw, rest) = v.split_at(n);
        let (v1, v2) = rest.split_at(self.d1.rows());
        let mut out: Vec<T> = vw.iter().zip(&self.weights).map(|(&a, &w)| w * a).collect();
        self.d1.apply_transpose_add(v1, self.lambda1, &mut out);
        self.d2.apply_transpose_add(v2, self.lambda2, &mut out);
        out
    }

    pub fn rhs(&self) -> Vec<T> {
        let mut b = vec![T::zero(); self.rows()];
        for (t, (&w, &y)) in self.weights.iter().zip(self.y).enumerate() {
            if w > T::zero() {
                b[t] = y;
            }
        }
        b
    }

    /// `A^T A = W + lambda1^2 D1^T D1 + lambda2^2 D2^T D2`, bandwidth 2.
    pub fn normal_matrix(&self) -> SymBanded<T> {
        let n = self.n();
        let mut m = SymBanded::zeros(n, 2);
        for (t, &w) in self.weights.iter().enumerate() {
            m.add(t, t, w);
        }
        let s1: Vec<T> = self.d1.stencil().iter().map(|&c| T::lit(c)).collect();
        let s2: Vec<T> = self.d2.stencil().iter().map(|&c| T::lit(c)).collect();
        let l1sq = self.lambda1 * self.lambda1;
        let l2sq = self.lambda2 * self.lambda2;
        for i in 0..self.d1.rows() {
            m.add_outer(i, &s1, l1sq);
        }
        for i in 0..self.d2.rows() {
            m.add_outer(i, &s2, l2sq);
        }
        m
    }

    /// `||A tau - b||_1`, equal to the trend objective.
    pub fn residual_l1(&self, tau: &[T]) -> T {
        self.apply(tau)
            .into_iter()
            .zip(self.rhs())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// The trend objective evaluated directly from its three terms.
pub fn trend_objective<T: Real>(y: &[T], mask: &[bool], tau: &[T], lambda1: T, lambda2: T) -> T {
    let fidelity: T = y
        .iter()
        .zip(tau)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&a, &b), _)| (a - b).abs())
        .sum();
    let d1: T = tau.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    let d2: T = tau
        .windows(3)
        .map(|w| (w[0] - T::lit(2.0) * w[1] + w[2]).abs())
        .sum();
    fidelity + lambda1 * d1 + lambda2 * d2
}

fn norm2<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|&x| x.to_f64_lossy().powi(2)).sum::<f64>().sqrt()
}

/// Location and scale used to normalise `y` before the solve, so `rho` and the
/// absolute tolerance act on unit-scale data.
fn robust_location_scale<T: Real>(s: &ObservedSeries<T>) -> (T, T) {
    let mut obs: Vec<T> = s.observed().map(|(_, v)| v).collect();
    let loc = median_in_place(&mut obs).unwrap_or_else(T::zero);
    let count = T::from_count(obs.len());
    let mad: T = obs.iter().map(|&v| (v - loc).abs()).sum::<T>() / count;
    let scale = if mad > T::zero() && mad.is_finite() {
        mad
    } else {
        T::one()
    };
    (loc, scale)
}

/// Over-relaxation factor applied to `A x` before the z- and u-updates.
const RELAXATION: f64 = 1.6;
/// Residual-balancing thresholds for the adaptive penalty.
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;
/// Iterations after which the penalty is frozen, so the iteration cannot cycle.
const BALANCE_UNTIL: usize = 100;
/// Tikhonov weight pulling the polished solution towards the ADMM iterate.
const POLISH_RIDGE: f64 = 1e-9;

/// Which block of the stack row `i` belongs to: fidelity, first or second difference.
#[inline]
fn block_of(i: usize, n: usize) -> usize {
    if i < n {
        0
    } else if i < 2 * n - 1 {
        1
    } else {
        2
    }
}

/// `A^T A` restricted to the rows flagged in `keep`, plus `ridge * I`.
fn restricted_normal<T: Real>(mask: &[bool], keep: &[bool], ridge: T) -> SymBanded<T> {
    let n = mask.len();
    let mut m = SymBanded::zeros(n, 2);
    for t in 0..n {
        m.add(t, t, ridge);
        if mask[t] && keep[t] {
            m.add(t, t, T::one());
        }
    }
    let s1 = [T::one(), -T::one()];
    let s2 = [T::one(), T::lit(-2.0), T::one()];
    for i in 0..n - 1 {
        if keep[n + i] {
            m.add_outer(i, &s1, T::one());
        }
    }
    for i in 0..n - 2 {
        if keep[2 * n - 1 + i] {
            m.add_outer(i, &s2, T::one());
        }
    }
    m
}

/// Least-squares solve on the rows ADMM drove to zero. For piecewise
/// polynomial optima this snaps the iterate onto the exact vertex.
fn polish<T: Real>(system: &StackedSystem<'_, T>, mask: &[bool], z: &[T], b: &[T], x: &[T]) -> Option<Vec<T>> {
    let keep: Vec<bool> = z.iter().map(|&v| v == T::zero()).collect();
    let ridge = T::lit(POLISH_RIDGE);
    let chol = restricted_normal(mask, &keep, ridge).cholesky()?;
    let masked_b: Vec<T> = b
        .iter()
        .zip(&keep)
        .map(|(&v, &k)| if k { v } else { T::zero() })
        .collect();
    let mut rhs = system.apply_transpose(&masked_b);
    for (r, &xi) in rhs.iter_mut().zip(x) {
        *r = *r + ridge * xi;
    }
    chol.solve_in_place(&mut rhs);
    rhs.iter().all(|v| v.is_finite()).then_some(rhs)
}

fn rebuild<T: Real>(mask: &[bool], pen: T) -> Result<BandedCholesky<T>> {
    let keep = vec![true; 3 * mask.len() - 3];
    let mut m = restricted_normal(mask, &keep, T::zero());
    m.scale(pen);
    m.cholesky()
        .ok_or_else(|| Error::InvalidArgument("normal matrix is not positive definite".into()))
}

/// Extracts the robust trend of `s` by ADMM.
///
/// The iteration runs on the unit stack `[W; D1; D2]` with per-row thresholds
/// `1, lambda1, lambda2`; this has the same minimiser as the lambda-folded
/// stack but is much better conditioned. `rho` is the initial penalty and is
/// rebalanced against the residuals as the iteration proceeds (the normal
/// matrix is refactored when it changes, O(N)). Reported residuals are
/// measured on the lambda-folded stack. A final polishing solve on the rows
/// driven to zero is kept only if it does not increase the objective.
///
/// Masked positions contribute nothing to the fidelity term, so the payload
/// stored there never influences the result. When `max_iter` is exhausted the
/// iterate with the lowest objective is returned with `converged = false`.
pub fn robust_detrend<T: Real>(s: &ObservedSeries<T>, cfg: &TrendConfig) -> Result<TrendFit<T>> {
    cfg.validate()?;
    let n = s.len();
    if n < MIN_LEN {
        return Err(Error::TooShort { len: n, min: MIN_LEN });
    }
    let mask = s.mask();

    let (loc, scale) = robust_location_scale(s);
    let y: Vec<T> = s
        .values()
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { (v - loc) / scale } else { T::zero() })
        .collect();
    let lambda1 = T::lit(cfg.lambda1);
    let lambda2 = T::lit(cfg.lambda2);
    let unit = StackedSystem::new(&y, mask, T::one(), T::one())?;
    let objective = |tau: &[T]| trend_objective(&y, mask, tau, lambda1, lambda2);

    let rows = unit.rows();
    let weights = [T::one(), lambda1, lambda2];
    let c = |i: usize| weights[block_of(i, n)];
    let b = unit.rhs();
    let alpha = T::lit(RELAXATION);
    let mut rho = T::lit(cfg.rho);
    let mut chol = rebuild(mask, rho)?;
    let sqrt_rows = (rows as f64).sqrt();
    let sqrt_n = (n as f64).sqrt();

    // Warm start from the better of the gap-filled observations and the
    // median level (zero after normalisation).
    let level = vec![T::zero(); n];
    let mut x = match crate::series::linear_interpolate(&ObservedSeries::new(y.clone(), mask.to_vec())?) {
        Ok(f) if objective(f.values()) < objective(&level) => f.values().to_vec(),
        _ => level,
    };
    let mut ax = unit.apply(&x);
    let mut z: Vec<T> = ax.iter().zip(&b).map(|(&a, &bb)| a - bb).collect();
    let mut u = vec![T::zero(); rows];

    let mut best = (objective(&x), x.clone(), z.clone());
    let mut primal = f64::INFINITY;
    let mut primal_tol = 0.0;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        // x-update: rho (A^T A) x = A^T (rho (b + z) - u)
        let target: Vec<T> = (0..rows).map(|i| rho * (b[i] + z[i]) - u[i]).collect();
        x = unit.apply_transpose(&target);
        chol.solve_in_place(&mut x);
        ax = unit.apply(&x);

        // relaxed A x, then z-update by per-row soft thresholding
        let ax_hat: Vec<T> = (0..rows)
            .map(|i| alpha * ax[i] + (T::one() - alpha) * (z[i] + b[i]))
            .collect();
        let z_prev = std::mem::take(&mut z);
        z = (0..rows)
            .map(|i| soft_threshold(ax_hat[i] - b[i] + u[i] / rho, c(i) / rho))
            .collect();
        for i in 0..rows {
            u[i] = u[i] + rho * (ax_hat[i] - z[i] - b[i]);
        }

        // primal residual on the lambda-folded stack: c (A x - z - b)
        let r: Vec<T> = (0..rows).map(|i| c(i) * (ax[i] - z[i] - b[i])).collect();
        let dz: Vec<T> = z.iter().zip(&z_prev).map(|(&a, &p)| a - p).collect();
        let rho_f = rho.to_f64_lossy();
        primal = norm2(&r);
        dual = rho_f * norm2(&unit.apply_transpose(&dz));

        let folded_ax: Vec<T> = (0..rows).map(|i| c(i) * ax[i]).collect();
        let folded_zb: Vec<T> = (0..rows).map(|i| c(i) * z[i] + b[i]).collect();
        let zb: Vec<T> = z.iter().zip(&b).map(|(&a, &bb)| a + bb).collect();
        let eps_primal =
            sqrt_rows * cfg.tol_abs + cfg.tol_rel * norm2(&folded_ax).max(norm2(&folded_zb));
        // A^T u vanishes at the optimum here, so the dual tolerance is taken
        // relative to the x-update right-hand side instead.
        let eps_dual = sqrt_n * cfg.tol_abs + cfg.tol_rel * rho_f * norm2(&unit.apply_transpose(&zb));

        let obj = objective(&x);
        if obj < best.0 {
            best = (obj, x.clone(), z.clone());
        }
        primal_tol = eps_primal;
        if primal <= eps_primal && dual <= eps_dual {
            converged = true;
            break;
        }
        let next = if it > BALANCE_UNTIL {
            rho
        } else if primal > BALANCE_RATIO * dual {
            rho * T::lit(BALANCE_FACTOR)
        } else if dual > BALANCE_RATIO * primal {
            rho / T::lit(BALANCE_FACTOR)
        } else {
            rho
        };
        if next != rho {
            rho = next;
            chol = rebuild(mask, rho)?;
        }
    }

    let (mut chosen, support) = if converged { (x, z) } else { (best.1, best.2) };
    if let Some(polished) = polish(&unit, mask, &support, &b, &chosen) {
        if objective(&polished) <= objective(&chosen) {
            chosen = polished;
        }
    }
    let trend = chosen.into_iter().map(|v| v * scale + loc).collect();
    Ok(TrendFit {
        trend,
        iterations,
        primal_residual: primal * scale.to_f64_lossy(),
        dual_residual: dual * scale.to_f64_lossy(),
        primal_tolerance: primal_tol * scale.to_f64_lossy(),
        converged,
    })
}
