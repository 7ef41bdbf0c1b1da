//! A-priori contraction constants for iterated fractional integrals.
//!
//! For `ρ ∈ (0,1]`, `q ∈ (1/ρ, ∞]` and a weight `g ∈ L^q(0,T)` the n-fold
//! iterate of `u ↦ J^ρ(g·u)` is bounded by
//!
//! ```text
//! Cₙ = [‖g‖/Γ(ρ)]ⁿ · [Γ(β)ⁿ / (nβ Γ(nβ))]^{1/q*} · T^{n(ρ − 1/q)}
//! β  = (ρq − 1)/(q − 1),   q* = q/(q − 1)
//! ```
//!
//! and `Cₙ → 0`, so some `n₀` has `C_{n₀} < 1`. Everything is computed in
//! log space.

use std::fmt;

use thiserror::Error;

use crate::specfun::log_gamma_unchecked;

/// Gate tolerance for `αⱼ·p = 1`.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// `|ln Cₙ|` beyond which values are saturated.
pub const LOG_SATURATION: f64 = 700.0;
pub const DEFAULT_N_MAX: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractionError {
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Returns `(β, q*)`. At `q = ∞` this is `(ρ, 1)`.
pub fn derive_beta(rho: f64, q: f64) -> Result<(f64, f64), ContractionError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(ContractionError::Hypothesis(format!("rho must lie in (0, 1], got {rho}")));
    }
    if q.is_nan() || rho * q - 1.0 <= BOUNDARY_TOL {
        return Err(ContractionError::Hypothesis(format!("need q > 1/rho = {}, got q = {q}", 1.0 / rho)));
    }
    if q.is_infinite() {
        return Ok((rho, 1.0));
    }
    Ok(((rho * q - 1.0) / (q - 1.0), q / (q - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionParams {
    rho: f64,
    q: f64,
    g_norm: f64,
    horizon: f64,
    beta: f64,
    q_star: f64,
}

impl ContractionParams {
    pub fn new(rho: f64, q: f64, g_norm: f64, horizon: f64) -> Result<Self, ContractionError> {
        let (beta, q_star) = derive_beta(rho, q)?;
        if !(g_norm >= 0.0) || !g_norm.is_finite() {
            return Err(ContractionError::Domain(format!("g_norm must be finite and ≥ 0, got {g_norm}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(ContractionError::Domain(format!("T must be positive, got {horizon}")));
        }
        Ok(ContractionParams { rho, q, g_norm, horizon, beta, q_star })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn g_norm(&self) -> f64 {
        self.g_norm
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    fn inv_q(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            1.0 / self.q
        }
    }

    /// `ln(‖g‖ T^{ρ−1/q} / Γ(ρ))`, the per-step factor.
    fn log_step(&self) -> f64 {
        self.g_norm.ln() + (self.rho - self.inv_q()) * self.horizon.ln() - log_gamma_unchecked(self.rho)
    }
}

/// `Cₙ` with its logarithm. `value` is clamped to `exp(±700)` when
/// `saturated` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnValue {
    pub log: f64,
    pub value: f64,
    pub saturated: bool,
}

/// `ln Cₙ`; `−∞` when `‖g‖ = 0`.
pub fn log_c_n(params: &ContractionParams, n: usize) -> f64 {
    assert!(n >= 1, "C_n is defined for n ≥ 1");
    if params.g_norm == 0.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    let b = params.beta;
    let gamma_part = nf * log_gamma_unchecked(b) - log_gamma_unchecked(nf * b + 1.0);
    nf * params.log_step() + gamma_part / params.q_star
}

pub fn c_n(params: &ContractionParams, n: usize) -> CnValue {
    let log = log_c_n(params, n);
    if log == f64::NEG_INFINITY {
        return CnValue { log, value: 0.0, saturated: false };
    }
    CnValue {
        log,
        value: log.clamp(-LOG_SATURATION, LOG_SATURATION).exp(),
        saturated: log.abs() > LOG_SATURATION,
    }
}

/// `ln(C_{n+1}/Cₙ)` from the closed form
/// `[‖g‖T^{ρ−1/q}/Γ(ρ)]·[Γ(β)·n·Γ(nβ)/((n+1)Γ((n+1)β))]^{1/q*}`.
pub fn log_ratio(params: &ContractionParams, n: usize) -> f64 {
    assert!(n >= 1);
    if params.g_norm == 0.0 {
        return f64::NEG_INFINITY;
    }
    let b = params.beta;
    let inner = log_gamma_unchecked(b) + log_b_n(b, n);
    params.log_step() + inner / params.q_star
}

/// `C_{n+1}/Cₙ`; zero when `‖g‖ = 0`.
pub fn ratio(params: &ContractionParams, n: usize) -> f64 {
    log_ratio(params, n).exp()
}

/// `ln Bₙ`, `Bₙ = nΓ(nβ)/((n+1)Γ((n+1)β))`.
fn log_b_n(beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf.ln() + log_gamma_unchecked(nf * beta) - (nf + 1.0).ln() - log_gamma_unchecked((nf + 1.0) * beta)
}

/// `(Bₙ, 1/((n+1)β)^β)`; the first never exceeds the second.
pub fn wendel_pair(beta: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    (log_b_n(beta, n).exp(), (-beta * ((nf + 1.0) * beta).ln()).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub params: ContractionParams,
    /// `C₁ … C_{n₀}` (or up to `n_max` when no `n₀` was found).
    pub c: Vec<CnValue>,
    pub n0: Option<usize>,
    /// `C_{n+1}/Cₙ` for the same `n`.
    pub ratio_trace: Vec<f64>,
    /// `(Bₙ, 1/((n+1)β)^β)` for the same `n`.
    pub wendel_trace: Vec<(f64, f64)>,
    /// Some `Cₙ` in the trace was saturated.
    pub saturated: bool,
}

/// Scans `n = 1, 2, …, n_max` for the first `Cₙ < 1`.
pub fn find_n0(params: &ContractionParams, n_max: usize) -> ContractionReport {
    let mut c = Vec::new();
    let mut ratio_trace = Vec::new();
    let mut wendel_trace = Vec::new();
    let mut n0 = None;
    for n in 1..=n_max.max(1) {
        let v = c_n(params, n);
        c.push(v);
        ratio_trace.push(ratio(params, n));
        wendel_trace.push(wendel_pair(params.beta, n));
        if v.log < 0.0 {
            n0 = Some(n);
            break;
        }
    }
    let saturated = c.iter().any(|v| v.saturated);
    ContractionReport { params: *params, c, n0, ratio_trace, wendel_trace, saturated }
}

impl ContractionReport {
    /// `n,C_n,ratio,B_n,bound` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,C_n,ratio,B_n,bound\n");
        for (i, v) in self.c.iter().enumerate() {
            let (b, bound) = self.wendel_trace[i];
            s.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", i + 1, v.value, self.ratio_trace[i], b, bound));
        }
        s
    }

    pub fn summary(&self) -> String {
        let p = &self.params;
        let mut s = format!(
            "rho = {}\nq = {}\ng_norm = {}\nT = {}\nbeta = {}\nq_star = {}\n",
            p.rho, p.q, p.g_norm, p.horizon, p.beta, p.q_star
        );
        match self.n0 {
            Some(n) => s.push_str(&format!("n0 = {n}\n")),
            None => s.push_str(&format!("n0 = none (scanned {} terms)\n", self.c.len())),
        }
        if self.saturated {
            s.push_str("warning: some C_n saturated in log space\n");
        }
        s
    }
}

/// The orders `{αⱼ} ⊂ (0, 1]` of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderVector(Vec<f64>);

impl OrderVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self, ContractionError> {
        if alphas.is_empty() {
            return Err(ContractionError::Domain("order vector is empty".into()));
        }
        if let Some((j, a)) = alphas.iter().enumerate().find(|(_, a)| !(**a > 0.0 && **a <= 1.0)) {
            return Err(ContractionError::Domain(format!("order alpha_{} = {a} is outside (0, 1]", j + 1)));
        }
        Ok(OrderVector(alphas))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `α₀ = min αⱼ` and the first index attaining it.
    pub fn min(&self) -> (usize, f64) {
        let mut best = (0, self.0[0]);
        for (j, &a) in self.0.iter().enumerate() {
            if a < best.1 {
                best = (j, a);
            }
        }
        best
    }
}

/// `M = Σⱼ T^{αⱼ−α₀} Γ(α₀)/Γ(αⱼ)`.
pub fn multiorder_m(alphas: &OrderVector, horizon: f64) -> Result<f64, ContractionError> {
    if !(horizon > 0.0) {
        return Err(ContractionError::Domain(format!("T must be positive, got {horizon}")));
    }
    let (_, a0) = alphas.min();
    let lg0 = log_gamma_unchecked(a0);
    Ok(alphas
        .as_slice()
        .iter()
        .map(|&a| ((a - a0) * horizon.ln() + lg0 - log_gamma_unchecked(a)).exp())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionKind {
    /// `αⱼ = 1/p`: existence can fail.
    Boundary,
    /// `αⱼ < 1/p`.
    Insufficient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateVerdict {
    Ok,
    Rejected { kind: RejectionKind, index: usize, alpha: f64, p: f64 },
}

impl GateVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, GateVerdict::Ok)
    }
}

impl fmt::Display for GateVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateVerdict::Ok => f.write_str("OK"),
            GateVerdict::Rejected { kind: RejectionKind::Boundary, index, alpha, p } => write!(
                f,
                "BOUNDARY: order alpha_{} = {alpha} equals 1/p = {}; at this order the fractional integral of an L^p forcing can be unbounded and a solution may not exist",
                index + 1,
                1.0 / p
            ),
            GateVerdict::Rejected { kind: RejectionKind::Insufficient, index, alpha, p } => write!(
                f,
                "INSUFFICIENT: order alpha_{} = {alpha} is below 1/p = {}; need p > {}",
                index + 1,
                1.0 / p,
                1.0 / alpha
            ),
        }
    }
}

/// Accepts iff `p > max 1/αⱼ`, or `p = 1` with every `αⱼ = 1`.
pub fn validity_gate(alphas: &OrderVector, p: f64) -> GateVerdict {
    if p == 1.0 && alphas.as_slice().iter().all(|&a| a == 1.0) {
        return GateVerdict::Ok;
    }
    let (index, alpha) = alphas.min();
    let reject = |kind| GateVerdict::Rejected { kind, index, alpha, p };
    if !(p >= 1.0) {
        return reject(RejectionKind::Insufficient);
    }
    if p.is_infinite() {
        return GateVerdict::Ok;
    }
    let x = alpha * p - 1.0;
    if x.abs() <= BOUNDARY_TOL {
        reject(RejectionKind::Boundary)
    } else if x < 0.0 {
        reject(RejectionKind::Insufficient)
    } else {
        GateVerdict::Ok
    }
}
