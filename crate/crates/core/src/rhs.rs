//! Right-hand sides `f(x, t)` with declared growth and Lipschitz witnesses.
//!
//! A [`CaratheodoryRhs`] carries, besides the map itself, the constants of
//! the two structural bounds
//!
//! ```text
//! ‖f(x,t)‖          ≤ C‖x‖ + γ(t)        (growth, γ ∈ L^p)
//! ‖f(x,t) − f(y,t)‖ ≤ ℓ(t)‖x − y‖        (Lipschitz, ℓ ∈ L^p)
//! ```
//!
//! Neither can be certified for an opaque closure; [`check_growth`] and
//! [`check_lipschitz`] only try to falsify them on seeded random samples.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::{map_rows, Threads};
use crate::fracgrid::{euclid, Grid, GridError, GridFunction};

pub type EvalFn = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;
pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhsError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("right-hand side `{name}` returned a non-finite value at node {node} (t = {t})")]
    Evaluation { name: String, node: usize, t: f64 },
    #[error("config error: {0}")]
    Config(String),
}

impl From<GridError> for RhsError {
    fn from(e: GridError) -> Self {
        RhsError::Shape(e.to_string())
    }
}

/// An evaluable right-hand side with its witness data.
#[derive(Clone)]
pub struct CaratheodoryRhs {
    name: String,
    dim: usize,
    eval: EvalFn,
    growth_constant: f64,
    growth_weight: WeightFn,
    lipschitz_weight: Option<WeightFn>,
    exponent: f64,
}

impl fmt::Debug for CaratheodoryRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaratheodoryRhs")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("growth_constant", &self.growth_constant)
            .field("has_lipschitz", &self.lipschitz_weight.is_some())
            .field("exponent", &self.exponent)
            .finish()
    }
}

fn constant_weight(c: f64) -> WeightFn {
    Arc::new(move |_| c)
}

impl CaratheodoryRhs {
    /// A right-hand side with no declared witnesses: `C = 0`, `γ ≡ 0`, no
    /// Lipschitz weight, exponent `∞`. Chain the setters to declare them.
    pub fn new<F>(name: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dim >= 1, "dimension must be positive");
        CaratheodoryRhs {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            growth_constant: 0.0,
            growth_weight: constant_weight(0.0),
            lipschitz_weight: None,
            exponent: f64::INFINITY,
        }
    }

    pub fn with_growth<W>(mut self, c: f64, gamma: W) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.growth_constant = c;
        self.growth_weight = Arc::new(gamma);
        self
    }

    pub fn with_lipschitz<W>(mut self, ell: W) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.lipschitz_weight = Some(Arc::new(ell));
        self
    }

    /// Integrability exponent of the witnesses.
    pub fn with_exponent(mut self, p: f64) -> Self {
        assert!(p >= 1.0, "exponent must be ≥ 1");
        self.exponent = p;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn growth_weight(&self, t: f64) -> f64 {
        (self.growth_weight)(t)
    }

    pub fn lipschitz_weight(&self) -> Option<&WeightFn> {
        self.lipschitz_weight.as_ref()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Writes `f(x, t)` into `out`.
    pub fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.eval)(x, t, out)
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.eval)(x, t, &mut out);
        out
    }
}

/// Nodewise `f(φ(t_k), t_k)`.
pub fn nemytskii_eval(rhs: &CaratheodoryRhs, phi: &GridFunction) -> Result<GridFunction, RhsError> {
    nemytskii_eval_with(rhs, phi, Threads::SERIAL)
}

pub fn nemytskii_eval_with(rhs: &CaratheodoryRhs, phi: &GridFunction, threads: Threads) -> Result<GridFunction, RhsError> {
    if phi.dim() != rhs.dim {
        return Err(RhsError::Shape(format!(
            "path has dimension {}, right-hand side `{}` expects {}",
            phi.dim(),
            rhs.name,
            rhs.dim
        )));
    }
    let nodes = phi.grid().nodes();
    let rows = map_rows(nodes.len(), threads, |k, _| {
        let mut out = vec![0.0; rhs.dim];
        (rhs.eval)(phi.sample(k), nodes[k], &mut out);
        out
    });
    let mut values = Vec::with_capacity(nodes.len() * rhs.dim);
    for (k, row) in rows.into_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(RhsError::Evaluation { name: rhs.name.clone(), node: k, t: nodes[k] });
        }
        values.extend(row);
    }
    Ok(GridFunction::new(phi.grid().clone(), rhs.dim, values)?)
}

/// Discrete `L^p` norm of a scalar weight on `grid`, sampled at cell
/// midpoints so that weights singular at a node stay finite.
pub fn witness_lp_norm(weight: &dyn Fn(f64) -> f64, grid: &Grid, p: f64) -> f64 {
    let nodes = grid.nodes();
    let mut acc = crate::summation::NeumaierSum::new();
    let mut sup: f64 = 0.0;
    for w in nodes.windows(2) {
        let v = weight(0.5 * (w[0] + w[1])).abs();
        if p.is_infinite() {
            sup = sup.max(v);
        } else {
            acc.add((w[1] - w[0]) * v.powf(p));
        }
    }
    if p.is_infinite() {
        sup
    } else {
        acc.value().powf(1.0 / p)
    }
}

/// Sampling setup shared by the witness checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    /// Ball radius `R` for the state samples.
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    /// Times are drawn from `(0, horizon]`.
    pub horizon: f64,
    /// Weight assumed by [`check_lipschitz`] when the right-hand side
    /// declares none.
    pub lipschitz_probe: f64,
}

impl WitnessCheck {
    pub fn new(radius: f64, samples: usize, seed: u64) -> Self {
        WitnessCheck { radius, samples, seed, horizon: 1.0, lipschitz_probe: 1e3 }
    }

    pub fn horizon(mut self, t: f64) -> Self {
        self.horizon = t;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    Growth,
    Lipschitz,
}

/// Worst sample found by a witness check.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: Vec<f64>,
    /// Second point, for Lipschitz checks.
    pub y: Option<Vec<f64>>,
    pub t: f64,
    pub lhs: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub kind: WitnessKind,
    pub samples: usize,
    /// Largest `lhs − bound` over all samples (negative when all pass).
    pub max_violation: f64,
    pub passed: bool,
    /// Worst sample relative to its tolerance.
    pub witness: Option<Witness>,
}

struct Sampler {
    rng: ChaCha8Rng,
    dim: usize,
    radius: f64,
    horizon: f64,
}

impl Sampler {
    fn direction(&mut self) -> Vec<f64> {
        loop {
            // Box-Muller pairs.
            let mut v = Vec::with_capacity(self.dim + 1);
            while v.len() < self.dim {
                let u1: f64 = 1.0 - self.rng.random::<f64>();
                let u2: f64 = self.rng.random::<f64>();
                let r = (-2.0 * u1.ln()).sqrt();
                let th = std::f64::consts::TAU * u2;
                v.push(r * th.cos());
                v.push(r * th.sin());
            }
            v.truncate(self.dim);
            let n = euclid(&v);
            if n > 1e-300 {
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    }

    /// Half the draws uniform in the ball, half log-uniform in radius down
    /// to `1e-12·R` so that behaviour near the origin is probed.
    fn point(&mut self) -> Vec<f64> {
        let dir = self.direction();
        let u: f64 = self.rng.random();
        let r = if self.rng.random::<bool>() {
            self.radius * u.powf(1.0 / self.dim as f64)
        } else {
            self.radius * 10f64.powf(-12.0 * u)
        };
        dir.into_iter().map(|c| c * r).collect()
    }

    /// Lipschitz partner of `x`: an independent draw or a small offset.
    fn partner(&mut self, x: &[f64]) -> Vec<f64> {
        if self.rng.random::<bool>() {
            return self.point();
        }
        let dir = self.direction();
        let d = self.radius * 10f64.powf(-12.0 * self.rng.random::<f64>());
        x.iter().zip(dir).map(|(a, b)| a + d * b).collect()
    }

    /// Half uniform on `(0, T]`, half log-uniform down to `1e-6·T`.
    fn time(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        if self.rng.random::<bool>() {
            self.horizon * (1.0 - u)
        } else {
            self.horizon * 10f64.powf(-6.0 * u)
        }
    }
}

fn sampler(rhs: &CaratheodoryRhs, check: &WitnessCheck) -> Sampler {
    Sampler {
        rng: ChaCha8Rng::seed_from_u64(check.seed),
        dim: rhs.dim,
        radius: check.radius,
        horizon: check.horizon,
    }
}

const WITNESS_TOL: f64 = 1e-12;

struct Worst {
    score: f64,
    max_violation: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Worst { score: f64::NEG_INFINITY, max_violation: f64::NEG_INFINITY, witness: None }
    }

    /// `score` is the violation divided by its tolerance.
    fn offer(&mut self, violation: f64, tol: f64, w: impl FnOnce() -> Witness) {
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        self.max_violation = self.max_violation.max(violation);
        let score = violation / tol;
        if score > self.score {
            self.score = score;
            self.witness = Some(w());
        }
    }

    fn report(self, kind: WitnessKind, samples: usize) -> WitnessReport {
        WitnessReport {
            kind,
            samples,
            max_violation: self.max_violation,
            passed: self.score <= 1.0,
            witness: self.witness,
        }
    }
}

/// Tries to falsify `‖f(x,t)‖ ≤ C‖x‖ + γ(t)` on `check.samples` draws with
/// `‖x‖ ≤ R`. Passes iff every violation is at most `1e-12·(1 + C·R)`.
pub fn check_growth(rhs: &CaratheodoryRhs, check: &WitnessCheck) -> WitnessReport {
    let mut s = sampler(rhs, check);
    let tol = WITNESS_TOL * (1.0 + rhs.growth_constant * check.radius);
    let mut worst = Worst::new();
    let mut out = vec![0.0; rhs.dim];
    for _ in 0..check.samples {
        let x = s.point();
        let t = s.time();
        rhs.eval_into(&x, t, &mut out);
        let lhs = euclid(&out);
        let bound = rhs.growth_constant * euclid(&x) + rhs.growth_weight(t);
        worst.offer(lhs - bound, tol, || Witness { x: x.clone(), y: None, t, lhs, bound });
    }
    worst.report(WitnessKind::Growth, check.samples)
}

/// Tries to falsify `‖f(x,t) − f(y,t)‖ ≤ ℓ(t)‖x − y‖`. Uses the declared
/// weight, or the constant `check.lipschitz_probe` when none is declared.
/// Passes iff every violation is at most `1e-12·(1 + ℓ(t)·R)`.
pub fn check_lipschitz(rhs: &CaratheodoryRhs, check: &WitnessCheck) -> WitnessReport {
    match rhs.lipschitz_weight.clone() {
        Some(ell) => check_lipschitz_against(rhs, &*ell, check),
        None => {
            let c = check.lipschitz_probe;
            check_lipschitz_against(rhs, &move |_| c, check)
        }
    }
}

/// [`check_lipschitz`] against an explicit weight.
pub fn check_lipschitz_against(rhs: &CaratheodoryRhs, ell: &dyn Fn(f64) -> f64, check: &WitnessCheck) -> WitnessReport {
    let mut s = sampler(rhs, check);
    let mut worst = Worst::new();
    let mut fx = vec![0.0; rhs.dim];
    let mut fy = vec![0.0; rhs.dim];
    for _ in 0..check.samples {
        let x = s.point();
        let y = s.partner(&x);
        let t = s.time();
        rhs.eval_into(&x, t, &mut fx);
        rhs.eval_into(&y, t, &mut fy);
        let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let l = ell(t);
        let lhs = euclid(&df);
        let bound = l * euclid(&dx);
        let tol = WITNESS_TOL * (1.0 + l * check.radius);
        worst.offer(lhs - bound, tol, || Witness { x: x.clone(), y: Some(y.clone()), t, lhs, bound });
    }
    worst.report(WitnessKind::Lipschitz, check.samples)
}

/// Parameters for [`catalog`]. Unused fields are ignored by entries that do
/// not need them.
#[derive(Clone, Default)]
pub struct CatalogParams {
    pub lambda: Option<f64>,
    /// Row-major square matrix.
    pub matrix: Option<Vec<Vec<f64>>>,
    pub forcing: Option<Vec<f64>>,
    /// Forcing term of `hl_forced`, with the exponent it is `L^p` for.
    pub sigma: Option<(WeightFn, f64)>,
    /// Dimension of `zero`; defaults to 1.
    pub dim: Option<usize>,
}

pub const CATALOG_NAMES: [&str; 5] = ["zero", "linear_scalar", "linear_system", "intro_nonuniqueness", "hl_forced"];

/// Builds a named right-hand side from the builtin catalog.
pub fn catalog(name: &str, params: &CatalogParams) -> Result<CaratheodoryRhs, RhsError> {
    let need = |what: &str| RhsError::Config(format!("`{name}` needs parameter `{what}`"));
    match name {
        "zero" => Ok(zero(params.dim.unwrap_or(1))),
        "linear_scalar" => Ok(linear_scalar(params.lambda.ok_or_else(|| need("lambda"))?)),
        "linear_system" => {
            let a = params.matrix.clone().ok_or_else(|| need("matrix"))?;
            let b = params.forcing.clone().unwrap_or_else(|| vec![0.0; a.len()]);
            linear_system(a, b)
        }
        "intro_nonuniqueness" => Ok(intro_nonuniqueness()),
        "hl_forced" => {
            let (sigma, p) = params.sigma.clone().ok_or_else(|| need("sigma"))?;
            Ok(hl_forced(sigma, p))
        }
        other => Err(RhsError::Config(format!(
            "unknown right-hand side `{other}` (known: {})",
            CATALOG_NAMES.join(", ")
        ))),
    }
}

pub fn zero(dim: usize) -> CaratheodoryRhs {
    CaratheodoryRhs::new("zero", dim, |_, _, out| out.fill(0.0)).with_lipschitz(|_| 0.0)
}

/// `f(x, t) = λx`.
pub fn linear_scalar(lambda: f64) -> CaratheodoryRhs {
    let c = lambda.abs();
    CaratheodoryRhs::new("linear_scalar", 1, move |x, _, out| out[0] = lambda * x[0])
        .with_growth(c, |_| 0.0)
        .with_lipschitz(move |_| c)
}

/// Upper bound for the spectral norm: `min(‖A‖_F, √(‖A‖₁‖A‖_∞))`.
pub fn operator_norm_bound(a: &[Vec<f64>]) -> f64 {
    let frob = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let n = a.len();
    let row_max = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let col_max = (0..n).map(|j| a.iter().map(|r| r[j].abs()).sum::<f64>()).fold(0.0, f64::max);
    frob.min((row_max * col_max).sqrt())
}

/// `f(x, t) = A·x + b` with constant forcing.
pub fn linear_system(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<CaratheodoryRhs, RhsError> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(RhsError::Config("linear_system matrix must be square and nonempty".into()));
    }
    if b.len() != n {
        return Err(RhsError::Config(format!("forcing has length {}, matrix is {n}x{n}", b.len())));
    }
    if a.iter().flatten().chain(&b).any(|v| !v.is_finite()) {
        return Err(RhsError::Config("linear_system entries must be finite".into()));
    }
    // Pad the bound by a few ulps so rounding in A·x never trips the check.
    let c = operator_norm_bound(&a) * (1.0 + 8.0 * f64::EPSILON);
    let gamma = euclid(&b);
    Ok(CaratheodoryRhs::new("linear_system", n, move |x, _, out| {
        for (i, row) in a.iter().enumerate() {
            out[i] = crate::summation::dot(row, x) + b[i];
        }
    })
    .with_growth(c, move |_| gamma)
    .with_lipschitz(move |_| c))
}

/// Scalar `f(x, t) = 2√x` on `[0, 1/2]` and `√x` after, with `x` clamped
/// at 0. `2√x ≤ x + 1` gives the growth witness; there is no Lipschitz
/// weight near `x = 0`.
pub fn intro_nonuniqueness() -> CaratheodoryRhs {
    CaratheodoryRhs::new("intro_nonuniqueness", 1, |x, t, out| {
        let r = x[0].max(0.0).sqrt();
        out[0] = if t <= 0.5 { 2.0 * r } else { r };
    })
    .with_growth(1.0, |_| 1.0)
}

/// `f(x, t) = x + σ(t)` for a scalar forcing `σ ∈ L^p`.
pub fn hl_forced(sigma: WeightFn, p: f64) -> CaratheodoryRhs {
    let s = sigma.clone();
    CaratheodoryRhs::new("hl_forced", 1, move |x, t, out| out[0] = x[0] + s(t))
        .with_growth(1.0, move |t| sigma(t).abs())
        .with_lipschitz(|_| 1.0)
        .with_exponent(p)
}
