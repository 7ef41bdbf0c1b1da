//! Two demonstrations of what goes wrong outside the solver's hypotheses.
//!
//! * At the order `α = 1/p` the fractional integral of an `L^p` function
//!   need not be bounded. [`unboundedness_demo`] refines a grid toward the
//!   singular point of
//!   `σ(s) = (t0−s)^{−1/p} (c − ln(t0−s))^{−λ}`, `1/p < λ ≤ 1`,
//!   and watches `sup J^{1/p}σ` grow while `‖σ‖_{L^p}` stays put.
//! * Without a Lipschitz weight, `x' = 2√x` (then `√x` after `t = 1/2`)
//!   with `x(0) = 0` has the zero solution and a second one;
//!   [`nonuniqueness_demo`] measures both residuals.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::exec::Threads;
use crate::fracgrid::{sup_norm_diff, Grid, GridError, GridFunction};
use crate::fracint::{caputo_l1, rl_integral_cells, FracintError};
use crate::rhs::{intro_nonuniqueness, nemytskii_eval, RhsError, WeightFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Fracint(#[from] FracintError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
}

/// Parameters of the forcing `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HLSpec {
    p: f64,
    lambda: f64,
    t0: f64,
    shift: f64,
    horizon: f64,
}

impl HLSpec {
    /// Requires `p > 1`, `1/p < λ ≤ 1`, `0 < t0 ≤ T`, `c ≥ 1` and
    /// `c − ln t0 ≥ 1` so the log factor never exceeds one.
    pub fn new(p: f64, lambda: f64, t0: f64, shift: f64, horizon: f64) -> Result<Self, BoundaryError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(BoundaryError::Domain(format!("p must be a finite number > 1, got {p}")));
        }
        if !(lambda * p > 1.0 && lambda <= 1.0) {
            return Err(BoundaryError::Domain(format!(
                "lambda must lie in (1/p, 1] = ({}, 1], got {lambda}",
                1.0 / p
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(BoundaryError::Domain(format!("T must be positive, got {horizon}")));
        }
        if !(t0 > 0.0 && t0 <= horizon) {
            return Err(BoundaryError::Domain(format!("t0 must lie in (0, {horizon}], got {t0}")));
        }
        if !(shift >= 1.0 && shift - t0.ln() >= 1.0) {
            return Err(BoundaryError::Domain(format!(
                "shift c = {shift} must satisfy c ≥ 1 and c − ln t0 ≥ 1"
            )));
        }
        Ok(HLSpec { p, lambda, t0, shift, horizon })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `σ(s)`; zero for `s ≥ t0`.
    pub fn sigma(&self, s: f64) -> f64 {
        if s >= self.t0 {
            return 0.0;
        }
        let w = self.t0 - s;
        w.powf(-1.0 / self.p) * (self.shift - w.ln()).powf(-self.lambda)
    }

    /// `∫_a^b σ(s)^p ds` in closed form: with `u = c − ln(t0 − s)` the
    /// integrand becomes `u^{−λp}`.
    pub fn sigma_p_integral(&self, a: f64, b: f64) -> f64 {
        let b = b.min(self.t0);
        if a >= b {
            return 0.0;
        }
        let m = self.lambda * self.p;
        let u = |w: f64| if w <= 0.0 { f64::INFINITY } else { self.shift - w.ln() };
        let prim = |w: f64| u(w).powf(1.0 - m) / (m - 1.0);
        prim(self.t0 - a) - prim(self.t0 - b)
    }

    /// Exact `‖σ‖_{L^p(0,T)} = (c − ln t0)^{(1−λp)/p} / (λp − 1)^{1/p}`.
    pub fn sigma_lp_norm(&self) -> f64 {
        self.sigma_p_integral(0.0, self.horizon).powf(1.0 / self.p)
    }
}

/// `σ` as a shareable weight function.
pub fn hl_sigma(spec: &HLSpec) -> WeightFn {
    let s = *spec;
    Arc::new(move |t| s.sigma(t))
}

/// One refinement level of [`unboundedness_demo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HLRow {
    pub n: usize,
    /// `max_k J^α σ(t_k)`.
    pub sup_j: f64,
    /// `‖σ‖_{L^p}` summed cell by cell.
    pub sigma_lp_norm: f64,
}

/// Default grading toward `t0`.
pub const HL_GRADING: f64 = 2.0;

/// `sup J^{1/p}σ` on grids clustered at `t0`, one row per level.
pub fn unboundedness_demo(spec: &HLSpec, levels: &[usize], threads: Threads) -> Result<Vec<HLRow>, BoundaryError> {
    transform_table(spec, levels, 1.0 / spec.p, HL_GRADING, threads)
}

/// The same pipeline at an arbitrary order `alpha`. σ is sampled at cell
/// midpoints, so the singular node itself is never evaluated.
pub fn transform_table(
    spec: &HLSpec,
    levels: &[usize],
    alpha: f64,
    grading: f64,
    threads: Threads,
) -> Result<Vec<HLRow>, BoundaryError> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BoundaryError::Domain("levels must be strictly increasing".into()));
    }
    levels
        .iter()
        .map(|&n| {
            let grid = Grid::clustered(spec.horizon, n, spec.t0, grading)?;
            let nodes = grid.nodes();
            let cells: Vec<f64> = nodes.windows(2).map(|w| spec.sigma(0.5 * (w[0] + w[1]))).collect();
            let j = rl_integral_cells(alpha, &grid, &cells, threads)?;
            let sup_j = j.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = crate::summation::NeumaierSum::new();
            for w in nodes.windows(2) {
                acc.add(spec.sigma_p_integral(w[0], w[1]));
            }
            Ok(HLRow { n, sup_j, sigma_lp_norm: acc.value().powf(1.0 / spec.p) })
        })
        .collect()
}

pub fn hl_csv(rows: &[HLRow]) -> String {
    let mut s = String::from("N,sup_J,sigma_lp_norm\n");
    for r in rows {
        let _ = writeln!(s, "{},{:?},{:?}", r.n, r.sup_j, r.sigma_lp_norm);
    }
    s
}

/// `t²` up to `1/2`, then `((t + 1/2)/2)²`; continuous at the breakpoint.
pub fn nonunique_phi1(t: f64) -> f64 {
    if t <= 0.5 {
        t * t
    } else {
        let u = 0.5 * (t + 0.5);
        u * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonuniqueRow {
    pub n: usize,
    pub res1: f64,
    pub res2: f64,
    pub separation: f64,
}

/// Residuals of the two candidate solutions of the `intro_nonuniqueness`
/// problem with `α = 1` on a uniform grid of `n` intervals (`n ≥ 16`,
/// even so that `t = 1/2` is a node).
///
/// The residual is `max |D φ(t_k) − f(φ(t_k), t_k)|` with backward
/// differences, over nodes `k ≥ 1` other than the breakpoint.
pub fn nonuniqueness_demo(n: usize) -> Result<NonuniqueRow, BoundaryError> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(BoundaryError::Domain(format!("need an even N ≥ 16, got {n}")));
    }
    let grid = Arc::new(Grid::new(1.0, n, 1.0)?);
    let rhs = intro_nonuniqueness();
    let phi1 = GridFunction::scalar(grid.clone(), nonunique_phi1)?;
    let phi2 = GridFunction::scalar(grid.clone(), |_| 0.0)?;
    let residual = |phi: &GridFunction| -> Result<f64, BoundaryError> {
        let d = caputo_l1(1.0, phi)?.derivative;
        let f = nemytskii_eval(&rhs, phi)?;
        let mut worst: f64 = 0.0;
        for k in 1..grid.len() {
            if k == n / 2 {
                continue;
            }
            worst = worst.max((d.sample(k)[0] - f.sample(k)[0]).abs());
        }
        Ok(worst)
    };
    Ok(NonuniqueRow {
        n,
        res1: residual(&phi1)?,
        res2: residual(&phi2)?,
        separation: sup_norm_diff(&phi1, &phi2)?,
    })
}

pub fn nonunique_csv(rows: &[NonuniqueRow]) -> String {
    let mut s = String::from("N,res1,res2,separation\n");
    for r in rows {
        let _ = writeln!(s, "{},{:?},{:?},{:?}", r.n, r.res1, r.res2, r.separation);
    }
    s
}
