//! Global-in-time Picard iteration for multi-order systems.
//!
//! The solution is the fixed point of
//!
//! ```text
//! 𝒯(φ)ⱼ(t) = ξⱼ + J^{αⱼ}[fⱼ(φ(·), ·)](t)
//! ```
//!
//! iterated from a constant path. A fractional Adams predictor-corrector
//! ([`adams_pc_solve`]) gives an independent time-stepping answer on the
//! same grid.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::contraction::{
    find_n0, multiorder_m, validity_gate, ContractionError, ContractionParams, GateVerdict, OrderVector, DEFAULT_N_MAX,
};
use crate::exec::Threads;
use crate::fracgrid::{lp_norm_of_samples, sup_norm_diff, Grid, GridError, GridFunction};
use crate::fracint::{build_weights, caputo_l1_with, FracintError, QuadratureRule, WeightTable};
use crate::rhs::{nemytskii_eval_with, witness_lp_norm, CaratheodoryRhs, RhsError};
use crate::summation::dot;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_ITER_BUDGET: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("refused by the validity gate: {0}")]
    Refused(GateVerdict),
    #[error("invalid problem: {0}")]
    Spec(String),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error(transparent)]
    Fracint(#[from] FracintError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

/// A system `ᶜD^{αⱼ} φⱼ = fⱼ(φ, t)`, `φ(0) = ξ` on `[0, T]`, with its
/// discretization settings.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub orders: OrderVector,
    pub initial: Vec<f64>,
    pub rhs: CaratheodoryRhs,
    pub horizon: f64,
    /// Number of grid intervals.
    pub n: usize,
    /// Grading exponent; `None` means `min(1/α₀, 4)`.
    pub grading: Option<f64>,
    pub tol: f64,
    /// `None` means `max(4·n₀, 200)`.
    pub max_iter: Option<usize>,
    /// Integrability exponent; `None` takes the right-hand side's.
    pub p: Option<f64>,
    pub rule: QuadratureRule,
    pub threads: Threads,
    /// Constant first iterate; `None` means `ξ`.
    pub start: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn new(
        orders: OrderVector,
        initial: Vec<f64>,
        rhs: CaratheodoryRhs,
        horizon: f64,
        n: usize,
    ) -> Result<Self, SolveError> {
        let spec = ProblemSpec {
            orders,
            initial,
            rhs,
            horizon,
            n,
            grading: None,
            tol: DEFAULT_TOL,
            max_iter: None,
            p: None,
            rule: QuadratureRule::Trapezoid,
            threads: Threads::SERIAL,
            start: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let d = self.rhs.dim();
        if self.orders.len() != d || self.initial.len() != d {
            return Err(SolveError::Spec(format!(
                "dimension mismatch: {} orders, {} initial values, right-hand side of dimension {d}",
                self.orders.len(),
                self.initial.len()
            )));
        }
        if let Some(s) = &self.start {
            if s.len() != d {
                return Err(SolveError::Spec(format!("start iterate has length {}, expected {d}", s.len())));
            }
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SolveError::Spec(format!("T must be positive, got {}", self.horizon)));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::Spec(format!("tol must be positive, got {}", self.tol)));
        }
        if self.n == 0 {
            return Err(SolveError::Spec("N must be at least 1".into()));
        }
        if self.initial.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Spec("initial values must be finite".into()));
        }
        if let Some(p) = self.p {
            if p > self.rhs.exponent() {
                return Err(SolveError::Spec(format!(
                    "p = {p} exceeds the exponent {} of the right-hand side's witnesses",
                    self.rhs.exponent()
                )));
            }
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        self.p.unwrap_or(self.rhs.exponent())
    }

    pub fn effective_grading(&self) -> f64 {
        self.grading.unwrap_or_else(|| (1.0 / self.orders.min().1).min(4.0))
    }

    pub fn grid(&self) -> Result<Grid, SolveError> {
        Ok(Grid::new(self.horizon, self.n, self.effective_grading())?)
    }

    pub fn gate(&self) -> GateVerdict {
        validity_gate(&self.orders, self.exponent())
    }
}

/// One weight table per component; equal orders share a table.
#[derive(Debug, Clone)]
pub struct OperatorTables {
    grid: Arc<Grid>,
    per_component: Vec<Arc<WeightTable>>,
}

impl OperatorTables {
    pub fn build(orders: &OrderVector, grid: Arc<Grid>, rule: QuadratureRule) -> Result<Self, SolveError> {
        let mut built: Vec<Arc<WeightTable>> = Vec::new();
        let mut per_component = Vec::with_capacity(orders.len());
        for &a in orders.as_slice() {
            let table = match built.iter().find(|t| t.alpha() == a) {
                Some(t) => t.clone(),
                None => {
                    let t = Arc::new(build_weights(a, grid.clone(), rule)?);
                    built.push(t.clone());
                    t
                }
            };
            per_component.push(table);
        }
        Ok(OperatorTables { grid, per_component })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn table(&self, j: usize) -> &WeightTable {
        &self.per_component[j]
    }
}

/// `𝒯(φ)`; node 0 is set to `ξ` exactly.
pub fn apply_t(problem: &ProblemSpec, phi: &GridFunction, tables: &OperatorTables) -> Result<GridFunction, SolveError> {
    let d = problem.rhs.dim();
    if phi.dim() != d {
        return Err(GridError::Shape(format!("path has dimension {}, problem has {d}", phi.dim())).into());
    }
    crate::fracint::check_same_grid(tables.grid(), phi.grid())?;
    let f = nemytskii_eval_with(&problem.rhs, phi, problem.threads)?;
    let mut comps = Vec::with_capacity(d);
    for j in 0..d {
        let xi = problem.initial[j];
        let mut c = tables.table(j).apply(&f.component(j), problem.threads);
        for v in c.iter_mut() {
            *v += xi;
        }
        c[0] = xi;
        comps.push(c);
    }
    Ok(GridFunction::from_components(phi.grid().clone(), &comps)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `‖φ − 𝒯(φ)‖_∞` over the nodes.
    pub integral: f64,
    /// Discrete `L^p` norm over nodes `≥ 1` of `‖L1(φ) − f(φ, ·)‖`.
    pub differential: f64,
}

/// Residuals of `candidate` in the integral and the differential form.
pub fn residual_check(problem: &ProblemSpec, candidate: &GridFunction) -> Result<Residuals, SolveError> {
    let tables = OperatorTables::build(&problem.orders, candidate.grid().clone(), problem.rule)?;
    residuals_with(problem, candidate, &tables)
}

fn residuals_with(problem: &ProblemSpec, candidate: &GridFunction, tables: &OperatorTables) -> Result<Residuals, SolveError> {
    let image = apply_t(problem, candidate, tables)?;
    let integral = sup_norm_diff(candidate, &image)?;
    let differential = differential_residual(problem, candidate)?;
    Ok(Residuals { integral, differential })
}

/// Node 0 and nodes where a declared weight is not finite are skipped.
fn differential_residual(problem: &ProblemSpec, phi: &GridFunction) -> Result<f64, SolveError> {
    let d = problem.rhs.dim();
    let f = nemytskii_eval_with(&problem.rhs, phi, problem.threads)?;
    let derivs = (0..d)
        .map(|j| {
            let single = GridFunction::from_components(phi.grid().clone(), &[phi.component(j)])?;
            Ok(caputo_l1_with(problem.orders.as_slice()[j], &single, problem.threads)?.derivative.component(0))
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    let nodes = phi.grid().nodes();
    let ell = problem.rhs.lipschitz_weight();
    let mut ts = Vec::with_capacity(nodes.len());
    let mut norms = Vec::with_capacity(nodes.len());
    for (k, &t) in nodes.iter().enumerate().skip(1) {
        let singular = !problem.rhs.growth_weight(t).is_finite() || ell.is_some_and(|l| !l(t).is_finite());
        if singular {
            continue;
        }
        let r: f64 = (0..d).map(|j| (derivs[j][k] - f.sample(k)[j]).powi(2)).sum::<f64>().sqrt();
        ts.push(t);
        norms.push(r);
    }
    if ts.len() < 2 {
        return Ok(norms.first().copied().unwrap_or(0.0));
    }
    Ok(lp_norm_of_samples(&ts, &norms, problem.exponent())?)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    /// `‖φ^{k} − φ^{k−1}‖_∞` for `k = 1..=iterations`.
    pub diffs: Vec<f64>,
    pub predicted_n0: Option<usize>,
    pub integral_residual: f64,
    pub differential_residual: f64,
    pub gate: GateVerdict,
    pub converged: bool,
    pub max_iter: usize,
}

impl SolveReport {
    /// `k,diff` rows.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("k,diff\n");
        for (k, d) in self.diffs.iter().enumerate() {
            let _ = writeln!(s, "{},{d:?}", k + 1);
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gate = {}", self.gate);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "iterations = {} (budget {})", self.iterations, self.max_iter);
        match self.predicted_n0 {
            Some(n) => {
                let _ = writeln!(s, "predicted_n0 = {n}");
            }
            None => {
                let _ = writeln!(s, "predicted_n0 = none (no Lipschitz weight declared)");
            }
        }
        if let Some(f) = window_contraction(&self.diffs, self.predicted_n0.unwrap_or(1)) {
            let _ = writeln!(s, "observed_window_contraction = {f:?}");
        }
        let _ = writeln!(s, "integral_residual = {:?}", self.integral_residual);
        let _ = writeln!(s, "differential_residual = {:?}", self.differential_residual);
        let last = self.solution.grid().len() - 1;
        let vals: Vec<String> = self.solution.sample(last).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "final_value = {}", vals.join(","));
        s
    }
}

/// Largest `diffs[k+w]/diffs[k]` over the trace, with the window shortened
/// to `len − 1` when the trace is shorter than `w + 1`. `None` when fewer
/// than two diffs exist or a diff is exactly zero before the end.
pub fn window_contraction(diffs: &[f64], window: usize) -> Option<f64> {
    if diffs.len() < 2 {
        return None;
    }
    let w = window.clamp(1, diffs.len() - 1);
    let mut worst: f64 = 0.0;
    for k in 0..diffs.len() - w {
        if diffs[k] == 0.0 {
            return None;
        }
        worst = worst.max(diffs[k + w] / diffs[k]);
    }
    Some(worst)
}

/// `n₀` for `ρ = α₀`, `q = p`, `g = M·ℓ`. Under the classical allowance
/// (`p = 1`, all orders 1) the weight is measured in `L^∞`.
pub fn predicted_n0(problem: &ProblemSpec, grid: &Grid) -> Result<Option<usize>, SolveError> {
    let Some(ell) = problem.rhs.lipschitz_weight() else {
        return Ok(None);
    };
    let p = problem.exponent();
    let q = if p == 1.0 { f64::INFINITY } else { p };
    let m = multiorder_m(&problem.orders, problem.horizon)?;
    let g = m * witness_lp_norm(&**ell, grid, q);
    if !g.is_finite() {
        return Ok(None);
    }
    let params = ContractionParams::new(problem.orders.min().1, q, g, problem.horizon)?;
    Ok(find_n0(&params, DEFAULT_N_MAX).n0)
}

/// Iterates `φ ← 𝒯(φ)` from a constant path until successive iterates
/// differ by at most `tol` and `‖φ − 𝒯(φ)‖ ≤ 10·tol`.
pub fn picard_solve(problem: &ProblemSpec) -> Result<SolveReport, SolveError> {
    problem.validate()?;
    let gate = problem.gate();
    if !gate.is_ok() {
        return Err(SolveError::Refused(gate));
    }
    let grid = Arc::new(problem.grid()?);
    let tables = OperatorTables::build(&problem.orders, grid.clone(), problem.rule)?;
    let n0 = predicted_n0(problem, &grid)?;
    let max_iter = problem
        .max_iter
        .unwrap_or_else(|| n0.map_or(MIN_ITER_BUDGET, |n| (4 * n).max(MIN_ITER_BUDGET)));

    let start = problem.start.as_deref().unwrap_or(&problem.initial);
    let mut phi = GridFunction::constant(grid.clone(), start)?;
    let mut diffs = Vec::new();
    let mut converged = false;
    let mut integral_residual = f64::INFINITY;
    let mut next = apply_t(problem, &phi, &tables)?;
    while diffs.len() < max_iter {
        let d = sup_norm_diff(&next, &phi)?;
        diffs.push(d);
        phi = next;
        next = apply_t(problem, &phi, &tables)?;
        if d <= problem.tol {
            integral_residual = sup_norm_diff(&phi, &next)?;
            if integral_residual <= 10.0 * problem.tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        integral_residual = sup_norm_diff(&phi, &next)?;
    }
    let differential_residual = differential_residual(problem, &phi)?;
    Ok(SolveReport {
        solution: phi,
        iterations: diffs.len(),
        diffs,
        predicted_n0: n0,
        integral_residual,
        differential_residual,
        gate,
        converged,
        max_iter,
    })
}

/// Fractional Adams predictor-corrector on the problem grid: rectangle
/// predictor, one trapezoid corrector pass per step, each component with
/// its own order.
pub fn adams_pc_solve(problem: &ProblemSpec) -> Result<GridFunction, SolveError> {
    problem.validate()?;
    let gate = problem.gate();
    if !gate.is_ok() {
        return Err(SolveError::Refused(gate));
    }
    let grid = Arc::new(problem.grid()?);
    let pred = OperatorTables::build(&problem.orders, grid.clone(), QuadratureRule::Rectangle)?;
    let corr = OperatorTables::build(&problem.orders, grid.clone(), QuadratureRule::Trapezoid)?;
    let d = problem.rhs.dim();
    let nodes = grid.nodes();
    let len = nodes.len();
    // Component-major history of f(φ(t_k), t_k).
    let mut hist = vec![Vec::with_capacity(len); d];
    let mut phi = Vec::with_capacity(len * d);
    phi.extend_from_slice(&problem.initial);
    let mut fk = vec![0.0; d];
    let eval = |x: &[f64], k: usize, out: &mut [f64]| -> Result<(), SolveError> {
        problem.rhs.eval_into(x, nodes[k], out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(RhsError::Evaluation { name: problem.rhs.name().to_string(), node: k, t: nodes[k] }.into());
        }
        Ok(())
    };
    eval(&problem.initial, 0, &mut fk)?;
    for j in 0..d {
        hist[j].push(fk[j]);
    }
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    let mut predictor = vec![0.0; d];
    let mut history_part = vec![0.0; d];
    for i in 1..len {
        for j in 0..d {
            let b = pred.table(j).row(i, &mut s1);
            predictor[j] = problem.initial[j] + dot(&b[..i], &hist[j]);
            let a = corr.table(j).row(i, &mut s2);
            history_part[j] = problem.initial[j] + dot(&a[..i], &hist[j]);
        }
        eval(&predictor, i, &mut fk)?;
        let mut corrected = vec![0.0; d];
        for j in 0..d {
            let a_ii = corr.table(j).row(i, &mut s2)[i];
            corrected[j] = history_part[j] + a_ii * fk[j];
        }
        eval(&corrected, i, &mut fk)?;
        for j in 0..d {
            hist[j].push(fk[j]);
        }
        phi.extend_from_slice(&corrected);
    }
    Ok(GridFunction::new(grid, d, phi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhs::{linear_scalar, zero};
    use crate::specfun::{mittag_leffler, MLParams};

    fn orders(a: &[f64]) -> OrderVector {
        OrderVector::new(a.to_vec()).unwrap()
    }

    fn constant_one() -> CaratheodoryRhs {
        CaratheodoryRhs::new("one", 1, |_, _, o| o[0] = 1.0).with_growth(0.0, |_| 1.0).with_lipschitz(|_| 0.0)
    }

    #[test]
    fn apply_t_examples() {
        let spec = ProblemSpec::new(orders(&[1.0, 1.0]), vec![1.0, 2.0], zero(2), 1.0, 16).unwrap();
        let grid = Arc::new(spec.grid().unwrap());
        let tables = OperatorTables::build(&spec.orders, grid.clone(), spec.rule).unwrap();
        let phi = GridFunction::from_fn(grid.clone(), 2, |t, o| {
            o[0] = t.sin();
            o[1] = 5.0;
        })
        .unwrap();
        let out = apply_t(&spec, &phi, &tables).unwrap();
        assert!(out.values().chunks(2).all(|c| c == [1.0, 2.0]));

        let spec = ProblemSpec::new(orders(&[1.0]), vec![0.5], constant_one(), 1.0, 16).unwrap();
        let tables = OperatorTables::build(&spec.orders, grid.clone(), spec.rule).unwrap();
        let phi = GridFunction::scalar(grid.clone(), |t| t * t).unwrap();
        let out = apply_t(&spec, &phi, &tables).unwrap();
        for (k, &t) in grid.nodes().iter().enumerate() {
            assert!((out.sample(k)[0] - (0.5 + t)).abs() < 1e-15);
        }

        let mut spec = ProblemSpec::new(orders(&[0.5]), vec![0.0], constant_one(), 1.0, 64).unwrap();
        spec.p = Some(4.0);
        let grid = Arc::new(spec.grid().unwrap());
        let tables = OperatorTables::build(&spec.orders, grid.clone(), spec.rule).unwrap();
        let out = apply_t(&spec, &GridFunction::scalar(grid.clone(), |_| 0.0).unwrap(), &tables).unwrap();
        let inv = std::f64::consts::FRAC_2_SQRT_PI;
        for (k, &t) in grid.nodes().iter().enumerate() {
            assert!((out.sample(k)[0] - inv * t.sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_rhs_converges_in_one_iteration() {
        let spec = ProblemSpec::new(orders(&[0.7, 0.9]), vec![1.0, 2.0], zero(2), 1.0, 32).unwrap();
        let r = picard_solve(&spec).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.diffs, vec![0.0]);
        assert_eq!(r.integral_residual, 0.0);
        assert_eq!(r.differential_residual, 0.0);
    }

    #[test]
    fn classical_exponential() {
        let spec = ProblemSpec::new(orders(&[1.0]), vec![1.0], linear_scalar(1.0), 1.0, 512).unwrap();
        let r = picard_solve(&spec).unwrap();
        assert!(r.converged);
        assert!((r.solution.sample(512)[0] - std::f64::consts::E).abs() < 1e-5);
        assert!(r.integral_residual <= 1e-9);
    }

    #[test]
    fn half_order_relaxation_tracks_mittag_leffler() {
        let mut spec = ProblemSpec::new(orders(&[0.5]), vec![1.0], linear_scalar(-1.0), 1.0, 1024).unwrap();
        spec.p = Some(4.0);
        let r = picard_solve(&spec).unwrap();
        assert!(r.converged);
        assert_eq!(r.predicted_n0, Some(10));
        let exact = mittag_leffler(&MLParams::new(0.5, 1.0, -1.0).unwrap()).unwrap();
        assert!((r.solution.sample(1024)[0] - exact).abs() < 1e-3);
    }

    #[test]
    fn gate_refusals() {
        let mut spec = ProblemSpec::new(orders(&[0.5]), vec![1.0], linear_scalar(-1.0), 1.0, 8).unwrap();
        spec.p = Some(2.0);
        assert!(matches!(picard_solve(&spec), Err(SolveError::Refused(_))));
        assert!(matches!(adams_pc_solve(&spec), Err(SolveError::Refused(_))));
    }

    #[test]
    fn residual_check_examples() {
        let spec = ProblemSpec::new(orders(&[0.4]), vec![3.0], zero(1), 1.0, 16).unwrap();
        let grid = Arc::new(spec.grid().unwrap());
        let phi = GridFunction::constant(grid, &[3.0]).unwrap();
        let r = residual_check(&spec, &phi).unwrap();
        assert_eq!(r.integral, 0.0);
        assert_eq!(r.differential, 0.0);

        let mut prev = (f64::INFINITY, f64::INFINITY);
        for n in [64, 256, 1024] {
            let spec = ProblemSpec::new(orders(&[1.0]), vec![1.0], linear_scalar(1.0), 1.0, n).unwrap();
            let grid = Arc::new(spec.grid().unwrap());
            let phi = GridFunction::scalar(grid, f64::exp).unwrap();
            let r = residual_check(&spec, &phi).unwrap();
            assert!(r.integral < prev.0 && r.differential < prev.1);
            prev = (r.integral, r.differential);
        }
        assert!(prev.0 < 1e-5 && prev.1 < 1e-2);
    }

    #[test]
    fn adams_matches_picard() {
        let mut spec = ProblemSpec::new(orders(&[0.5]), vec![1.0], linear_scalar(-1.0), 1.0, 512).unwrap();
        spec.p = Some(4.0);
        spec.tol = 1e-5;
        let a = adams_pc_solve(&spec).unwrap();
        let p = picard_solve(&spec).unwrap();
        assert!(sup_norm_diff(&a, &p.solution).unwrap() <= 10.0 * spec.tol);

        let spec = ProblemSpec::new(orders(&[0.6, 0.8]), vec![1.0, 2.0], zero(2), 1.0, 16).unwrap();
        let a = adams_pc_solve(&spec).unwrap();
        assert!(a.values().chunks(2).all(|c| c == [1.0, 2.0]));
    }

    #[test]
    fn window_contraction_shapes() {
        assert_eq!(window_contraction(&[1.0], 3), None);
        assert_eq!(window_contraction(&[1.0, 0.5, 0.1], 1), Some(0.5));
        assert_eq!(window_contraction(&[1.0, 0.5, 0.1], 10), Some(0.1));
    }

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(orders(&[0.5, 0.5]), vec![1.0], zero(1), 1.0, 8).is_err());
        assert!(ProblemSpec::new(orders(&[0.5]), vec![1.0], zero(1), 0.0, 8).is_err());
        let mut s = ProblemSpec::new(orders(&[0.5]), vec![1.0], zero(1), 1.0, 8).unwrap();
        s.tol = 0.0;
        assert!(s.validate().is_err());
    }
}
