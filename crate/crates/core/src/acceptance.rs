//! End-to-end acceptance criteria, shared by the `selftest` command and the
//! `acceptance` test target. Each criterion returns a verdict and a one-line
//! measurement summary; tolerances are fixed constants here.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{self, HLSpec};
use crate::contraction::{
    find_n0, log_c_n, log_ratio, validity_gate, wendel_pair, ContractionParams, GateVerdict, OrderVector,
    RejectionKind, DEFAULT_N_MAX,
};
use crate::exec::Threads;
use crate::fracgrid::{sup_norm_diff, Grid, GridFunction};
use crate::fracint::{build_weights, caputo_l1, rl_integral, QuadratureRule};
use crate::picard::{adams_pc_solve, picard_solve, window_contraction, ProblemSpec, SolveReport};
use crate::rhs::{check_lipschitz, intro_nonuniqueness, linear_scalar, linear_system, WitnessCheck};
use crate::specfun::{gamma, mittag_leffler, wendel_check, MLParams};

const SEED: u64 = 0x5EED_F00D;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Outcome = Result<(bool, String), String>;

fn timed(id: u32, name: &'static str, f: impl FnOnce() -> Outcome) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name, passed, detail, elapsed: start.elapsed() }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ")
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Fifty random orders and grids; `J^α 1 = t^α/Γ(α+1)` to `1e-12`.
pub fn quadrature_exactness() -> CriterionResult {
    timed(1, "quadrature exactness on constants", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let alpha = rng.random_range(0.05..=1.0);
            let n = rng.random_range(8..=2048);
            let horizon = rng.random_range(0.5..=4.0);
            let grid = match rng.random_range(0..3) {
                0 => Grid::new(horizon, n, 1.0),
                1 => Grid::new(horizon, n, rng.random_range(1.0..=4.0)),
                _ => Grid::clustered(horizon, n, rng.random_range(0.1..=1.0) * horizon, rng.random_range(1.0..=3.0)),
            }
            .map_err(err)?;
            let grid = Arc::new(grid);
            let rule = if rng.random::<bool>() { QuadratureRule::Trapezoid } else { QuadratureRule::Rectangle };
            let table = build_weights(alpha, grid.clone(), rule).map_err(err)?;
            let one = GridFunction::constant(grid.clone(), &[1.0]).map_err(err)?;
            let out = rl_integral(&table, &one).map_err(err)?;
            let g = gamma(alpha + 1.0).map_err(err)?;
            for (k, &t) in grid.nodes().iter().enumerate() {
                worst = worst.max((out.sample(k)[0] - t.powf(alpha) / g).abs());
            }
        }
        Ok((worst <= 1e-12, format!("max abs error {worst:.2e} (limit 1e-12)")))
    })
}

/// Semigroup `J^{0.4}J^{0.6} = J^1` and inversion `J^α D^α h = h − h(0)`.
pub fn semigroup_and_inversion() -> CriterionResult {
    timed(2, "semigroup and inversion under refinement", || {
        let levels = [256usize, 512, 1024, 2048];
        let g = |t: f64| (2.0 * t).cos();
        let j1g = |t: f64| (2.0 * t).sin() / 2.0;
        let mut semi = Vec::new();
        let mut inv: Vec<Vec<f64>> = vec![Vec::new(); 3];
        let orders = [0.25, 0.5, 0.75];
        for &n in &levels {
            let grid = Arc::new(Grid::new(1.0, n, 1.0).map_err(err)?);
            let gf = GridFunction::scalar(grid.clone(), g).map_err(err)?;
            let t6 = build_weights(0.6, grid.clone(), QuadratureRule::Trapezoid).map_err(err)?;
            let t4 = build_weights(0.4, grid.clone(), QuadratureRule::Trapezoid).map_err(err)?;
            let both = rl_integral(&t4, &rl_integral(&t6, &gf).map_err(err)?).map_err(err)?;
            let exact = GridFunction::scalar(grid.clone(), j1g).map_err(err)?;
            semi.push(sup_norm_diff(&both, &exact).map_err(err)?);

            let h = GridFunction::scalar(grid.clone(), |t| t * t).map_err(err)?;
            for (i, &a) in orders.iter().enumerate() {
                let d = caputo_l1(a, &h).map_err(err)?.derivative;
                let t = build_weights(a, grid.clone(), QuadratureRule::Trapezoid).map_err(err)?;
                let back = rl_integral(&t, &d).map_err(err)?;
                inv[i].push(sup_norm_diff(&back, &h).map_err(err)?);
            }
        }
        let mut ok = strictly_decreasing(&semi) && *semi.last().unwrap() <= 1e-3;
        let mut detail = format!("semigroup {}", fmt_list(&semi));
        for (a, e) in orders.iter().zip(&inv) {
            ok &= strictly_decreasing(e) && *e.last().unwrap() <= 1e-3;
            detail.push_str(&format!("; inversion a={a} {}", fmt_list(e)));
        }
        Ok((ok, detail))
    })
}

fn scalar_problem(alpha: f64, lambda: f64, n: usize, p: f64) -> Result<ProblemSpec, String> {
    let mut spec = ProblemSpec::new(
        OrderVector::new(vec![alpha]).map_err(err)?,
        vec![1.0],
        linear_scalar(lambda),
        1.0,
        n,
    )
    .map_err(err)?;
    spec.p = Some(p);
    Ok(spec)
}

/// `D^{1/2} u = −u`, `u(0) = 1` against `E_{1/2}(−√t)`.
pub fn mittag_leffler_oracle() -> CriterionResult {
    timed(3, "mittag-leffler oracle", || {
        let mut errs = Vec::new();
        for n in [256usize, 512, 1024, 2048, 4096] {
            let spec = scalar_problem(0.5, -1.0, n, 4.0)?;
            let r = picard_solve(&spec).map_err(err)?;
            if !r.converged {
                return Ok((false, format!("picard did not converge at N={n}")));
            }
            let mut worst: f64 = 0.0;
            for (k, &t) in r.solution.grid().nodes().iter().enumerate() {
                let exact = mittag_leffler(&MLParams::new(0.5, 1.0, -t.sqrt()).map_err(err)?).map_err(err)?;
                worst = worst.max((r.solution.sample(k)[0] - exact).abs());
            }
            errs.push(worst);
        }
        let ok = strictly_decreasing(&errs) && *errs.last().unwrap() <= 1e-3;
        Ok((ok, format!("sup errors {} (final limit 1e-3)", fmt_list(&errs))))
    })
}

/// `α = 1`, `f = x` reproduces `e^t`.
pub fn classical_embedding() -> CriterionResult {
    timed(4, "classical embedding", || {
        let spec = scalar_problem(1.0, 1.0, 4096, f64::INFINITY)?;
        let r = picard_solve(&spec).map_err(err)?;
        let exact = GridFunction::scalar(r.solution.grid().clone(), f64::exp).map_err(err)?;
        let e = sup_norm_diff(&r.solution, &exact).map_err(err)?;
        Ok((r.converged && e <= 1e-6, format!("sup error {e:.3e} (limit 1e-6), {} iterations", r.iterations)))
    })
}

/// Draws `(ρ, q, ‖g‖, T)` with `q` at least `2/ρ` so that `n₀` stays
/// moderate; a fifth of the draws use `q = ∞`.
pub fn random_params(rng: &mut impl Rng) -> ContractionParams {
    let rho = rng.random_range(0.4..=1.0);
    let q = if rng.random_range(0..5) == 0 { f64::INFINITY } else { rng.random_range(2.0 / rho..=10.0 / rho) };
    let g = rng.random_range(0.0..=2.0);
    let t = rng.random_range(0.1..=1.0);
    ContractionParams::new(rho, q, g, t).expect("draws satisfy the hypotheses")
}

/// Algebraic consistency, Wendel bounds, minimal `n₀` and the factorial case.
pub fn contraction_ledger() -> CriterionResult {
    timed(5, "contraction ledger", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
        let mut worst_rel: f64 = 0.0;
        let mut wendel_ok = true;
        let mut minimal = true;
        let mut max_n0 = 0;
        for _ in 0..100 {
            let p = random_params(&mut rng);
            if p.g_norm() > 0.0 {
                for n in 1..=1000 {
                    let d = log_c_n(&p, n + 1) - log_c_n(&p, n) - log_ratio(&p, n);
                    worst_rel = worst_rel.max(d.exp_m1().abs());
                }
            }
            for n in 1..=1000 {
                let (b, bound) = wendel_pair(p.beta(), n);
                wendel_ok &= b <= bound * (1.0 + 1e-10);
            }
            let x = rng.random_range(0.01..=200.0);
            let a = rng.random_range(0.01..=1.0);
            wendel_ok &= wendel_check(x, a).map_err(err)?.holds(1e-12);
            let r = find_n0(&p, DEFAULT_N_MAX);
            match r.n0 {
                Some(n0) => {
                    max_n0 = max_n0.max(n0);
                    minimal &= r.c[..n0 - 1].iter().all(|c| c.log >= 0.0) && r.c[n0 - 1].log < 0.0;
                }
                None => minimal = false,
            }
        }
        let classical = ContractionParams::new(1.0, f64::INFINITY, 2.0, 1.0).map_err(err)?;
        let n0_classical = find_n0(&classical, 100).n0;
        let ok = worst_rel <= 1e-10 && wendel_ok && minimal && n0_classical == Some(4);
        Ok((
            ok,
            format!(
                "ratio consistency {worst_rel:.2e} (limit 1e-10), wendel {wendel_ok}, n0 minimal {minimal} (max n0 {max_n0}), classical n0 {n0_classical:?}"
            ),
        ))
    })
}

/// Gate refusal at `α = 1/p`, divergence of `J^{1/p}σ`, bounded companion.
pub fn gate_and_nonexistence() -> CriterionResult {
    timed(6, "gate and nonexistence boundary", || {
        let gate = validity_gate(&OrderVector::new(vec![0.5]).map_err(err)?, 2.0);
        let boundary_refused = matches!(gate, GateVerdict::Rejected { kind: RejectionKind::Boundary, .. });
        let spec = HLSpec::new(2.0, 1.0, 0.5, 1.0, 1.0).map_err(err)?;
        let levels: Vec<usize> = (8..=14).map(|k| 1usize << k).collect();
        let threads = Threads::default();
        let rows = boundary::unboundedness_demo(&spec, &levels, threads).map_err(err)?;
        let sups: Vec<f64> = rows.iter().map(|r| r.sup_j).collect();
        let increasing = sups.windows(2).all(|w| w[1] > w[0]);
        let k = rows.len() - 1;
        let norm_step = (rows[k].sigma_lp_norm - rows[k - 1].sigma_lp_norm).abs();
        let companion = boundary::transform_table(&spec, &levels, 0.75, boundary::HL_GRADING, threads).map_err(err)?;
        let comp_step = (companion[k].sup_j - companion[k - 1].sup_j).abs();
        let ok = boundary_refused && increasing && norm_step < 1e-3 && comp_step < 1e-2;
        Ok((
            ok,
            format!(
                "gate {}; sup J^(1/2) sigma {:.4} -> {:.4} increasing {increasing}; norm step {norm_step:.1e}; companion step {comp_step:.2e}",
                if boundary_refused { "BOUNDARY" } else { "not refused" },
                sups[0],
                sups[k]
            ),
        ))
    })
}

/// Two solutions of the non-Lipschitz problem.
pub fn nonuniqueness() -> CriterionResult {
    timed(7, "nonuniqueness without a lipschitz weight", || {
        let row = boundary::nonuniqueness_demo(4096).map_err(err)?;
        let report = check_lipschitz(&intro_nonuniqueness(), &WitnessCheck::new(10.0, 10_000, SEED));
        let near_zero = report
            .witness
            .as_ref()
            .map(|w| w.x[0].abs().min(w.y.as_ref().map_or(f64::INFINITY, |y| y[0].abs())))
            .unwrap_or(f64::INFINITY);
        let ok = row.res1 <= 1e-3 && row.res2 == 0.0 && row.separation >= 0.5 && !report.passed && near_zero <= 1e-3;
        Ok((
            ok,
            format!(
                "res1 {:.2e}, res2 {:e}, separation {}, lipschitz check {} with witness at |x| = {near_zero:.1e}",
                row.res1,
                row.res2,
                row.separation,
                if report.passed { "passed" } else { "failed" }
            ),
        ))
    })
}

/// The two-order oscillator used by the last two criteria.
pub fn oscillator(n: usize, threads: usize) -> Result<ProblemSpec, String> {
    let rhs = linear_system(vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).map_err(err)?;
    let mut spec = ProblemSpec::new(OrderVector::new(vec![0.5, 1.0]).map_err(err)?, vec![1.0, 0.0], rhs, 1.0, n)
        .map_err(err)?;
    spec.p = Some(4.0);
    spec.threads = Threads::new(threads);
    Ok(spec)
}

fn solve_checked(spec: &ProblemSpec) -> Result<SolveReport, String> {
    let r = picard_solve(spec).map_err(err)?;
    if !r.converged {
        return Err(format!("picard did not converge in {} iterations", r.iterations));
    }
    Ok(r)
}

/// Picard against Adams, window contraction, two starting iterates.
pub fn multiorder_cross_check() -> CriterionResult {
    timed(8, "multi-order cross-check", || {
        let spec = oscillator(4096, 1)?;
        let r = solve_checked(&spec)?;
        let adams = adams_pc_solve(&spec).map_err(err)?;
        let gap = sup_norm_diff(&r.solution, &adams).map_err(err)?;
        let n0 = r.predicted_n0.ok_or("no predicted n0")?;
        let factor = window_contraction(&r.diffs, n0).ok_or("trace too short")?;
        let mut shifted = spec.clone();
        shifted.start = Some(vec![2.0, 1.0]);
        let r2 = solve_checked(&shifted)?;
        let spread = sup_norm_diff(&r.solution, &r2.solution).map_err(err)?;
        let ok = gap <= 1e-4 && factor < 1.0 && spread <= 2.0 * spec.tol;
        Ok((
            ok,
            format!(
                "picard vs adams {gap:.2e} (limit 1e-4); n0 {n0}, window factor {factor:.2e} over {} iterations; start spread {spread:.1e} (limit {:.0e})",
                r.iterations,
                2.0 * spec.tol
            ),
        ))
    })
}

/// Serial and four-thread runs write identical solution CSVs.
pub fn determinism() -> CriterionResult {
    timed(9, "thread-count determinism", || {
        let a = solve_checked(&oscillator(4096, 1)?)?.solution.to_csv();
        let b = solve_checked(&oscillator(4096, 4)?)?.solution.to_csv();
        Ok((a == b, format!("{} bytes, identical {}", a.len(), a == b)))
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        quadrature_exactness(),
        semigroup_and_inversion(),
        mittag_leffler_oracle(),
        classical_embedding(),
        contraction_ledger(),
        gate_and_nonexistence(),
        nonuniqueness(),
        multiorder_cross_check(),
        determinism(),
    ]
}
