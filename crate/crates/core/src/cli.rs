//! Config format and the command implementations behind the binary.
//!
//! A config is line oriented:
//!
//! ```text
//! # comment
//! [problem]
//! orders  = 0.5, 1
//! initial = 1, 0
//! T = 1
//! N = 4096
//! p = 4            # "inf" allowed
//!
//! [rhs]
//! name   = linear_system
//! matrix = 0, 1; -1, 0
//! ```
//!
//! Sections: `problem`, `rhs`, `contraction`, `boundary`. Lists are comma
//! separated; matrix rows are separated by `;`. Unknown sections and keys
//! are errors that name the line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::boundary::{self, BoundaryError, HLSpec};
use crate::contraction::{find_n0, ContractionError, ContractionParams, OrderVector, DEFAULT_N_MAX};
use crate::exec::Threads;
use crate::fracint::QuadratureRule;
use crate::picard::{picard_solve, ProblemSpec, SolveError, DEFAULT_TOL};
use crate::rhs::{catalog, check_growth, check_lipschitz, CatalogParams, RhsError, WitnessCheck};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        ConfigError { line: Some(line), msg: msg.into() }
    }

    fn new(msg: impl Into<String>) -> Self {
        ConfigError { line: None, msg: msg.into() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub orders: Vec<f64>,
    pub initial: Vec<f64>,
    pub horizon: f64,
    pub n: usize,
    pub grading: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub p: Option<f64>,
    pub rule: QuadratureRule,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaConfig {
    pub p: f64,
    pub lambda: f64,
    pub t0: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsConfig {
    pub name: String,
    pub lambda: Option<f64>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub forcing: Option<Vec<f64>>,
    pub sigma: Option<SigmaConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionConfig {
    pub rho: f64,
    pub q: f64,
    pub g_norm: f64,
    pub horizon: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Hl,
    Nonunique,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConfig {
    pub mode: BoundaryMode,
    pub p: f64,
    pub lambda: f64,
    pub t0: f64,
    pub shift: f64,
    pub horizon: f64,
    pub levels: Vec<usize>,
    pub companion_order: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub problem: Option<ProblemConfig>,
    pub rhs: Option<RhsConfig>,
    pub contraction: Option<ContractionConfig>,
    pub boundary: Option<BoundaryConfig>,
}

struct Entry {
    value: String,
    line: usize,
}

/// Key/value pairs of one section, consumed as they are read.
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Entry, ConfigError> {
        self.take(key)
            .ok_or_else(|| ConfigError::at(self.line, format!("[{}] is missing required key `{key}`", self.name)))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((k, e)) => Err(ConfigError::at(e.line, format!("unknown key `{k}` in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn parse_f64(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| ConfigError::at(e.line, format!("`{key}`: `{}` is not a number", e.value)))?;
    if v.is_nan() {
        return Err(ConfigError::at(e.line, format!("`{key}` must not be NaN")));
    }
    Ok(v)
}

fn parse_usize(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    e.value
        .parse()
        .map_err(|_| ConfigError::at(e.line, format!("`{key}`: `{}` is not a nonnegative integer", e.value)))
}

fn parse_list<T>(e: &Entry, key: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    e.value
        .split(',')
        .map(|s| {
            let s = s.trim();
            item(s).ok_or_else(|| ConfigError::at(e.line, format!("`{key}`: bad list item `{s}`")))
        })
        .collect()
}

fn float_item(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| !v.is_nan())
}

fn parse_matrix(e: &Entry, key: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    e.value
        .split(';')
        .map(|row| parse_list(&Entry { value: row.to_string(), line: e.line }, key, float_item))
        .collect()
}

fn split_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    const KNOWN: [&str; 4] = ["problem", "rhs", "contraction", "boundary"];
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                .trim();
            if !KNOWN.contains(&name) {
                return Err(ConfigError::at(line, format!("unknown section [{name}]")));
            }
            if sections.iter().any(|sec| sec.name == name) {
                return Err(ConfigError::at(line, format!("section [{name}] appears twice")));
            }
            sections.push(Section { name: name.to_string(), line, entries: BTreeMap::new() });
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{s}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let sec = sections
            .last_mut()
            .ok_or_else(|| ConfigError::at(line, "key outside of any section"))?;
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::at(line, "empty key or value"));
        }
        if sec.entries.contains_key(k) {
            return Err(ConfigError::at(line, format!("duplicate key `{k}`")));
        }
        sec.entries.insert(k.to_string(), Entry { value: v.to_string(), line });
    }
    Ok(sections)
}

fn problem_section(mut s: Section) -> Result<ProblemConfig, ConfigError> {
    let orders = parse_list(&s.required("orders")?, "orders", float_item)?;
    let initial = parse_list(&s.required("initial")?, "initial", float_item)?;
    let opt_f = |s: &mut Section, k: &str| s.take(k).map(|e| parse_f64(&e, k)).transpose();
    let opt_u = |s: &mut Section, k: &str| s.take(k).map(|e| parse_usize(&e, k)).transpose();
    let horizon = opt_f(&mut s, "T")?.unwrap_or(1.0);
    let n = opt_u(&mut s, "N")?.unwrap_or(1024);
    let grading = opt_f(&mut s, "grading")?;
    let tol = opt_f(&mut s, "tol")?.unwrap_or(DEFAULT_TOL);
    let max_iter = opt_u(&mut s, "max_iter")?;
    let p = opt_f(&mut s, "p")?;
    let rule = match s.take("rule") {
        Some(e) => e.value.parse().map_err(|m: String| ConfigError::at(e.line, m))?,
        None => QuadratureRule::Trapezoid,
    };
    let threads = opt_u(&mut s, "threads")?.unwrap_or(1);
    s.finish()?;
    Ok(ProblemConfig { orders, initial, horizon, n, grading, tol, max_iter, p, rule, threads })
}

fn rhs_section(mut s: Section) -> Result<RhsConfig, ConfigError> {
    let name = s.required("name")?.value;
    let lambda = s.take("lambda").map(|e| parse_f64(&e, "lambda")).transpose()?;
    let matrix = s.take("matrix").map(|e| parse_matrix(&e, "matrix")).transpose()?;
    let forcing = s.take("forcing").map(|e| parse_list(&e, "forcing", float_item)).transpose()?;
    let keys = ["sigma_p", "sigma_lambda", "sigma_t0", "sigma_shift"];
    let given: Vec<Option<Entry>> = keys.iter().map(|k| s.take(k)).collect();
    let sigma = if given.iter().any(Option::is_some) {
        let mut vals = [2.0, 1.0, 0.5, 1.0];
        for ((v, e), k) in vals.iter_mut().zip(&given).zip(keys) {
            if let Some(e) = e {
                *v = parse_f64(e, k)?;
            }
        }
        Some(SigmaConfig { p: vals[0], lambda: vals[1], t0: vals[2], shift: vals[3] })
    } else {
        None
    };
    s.finish()?;
    Ok(RhsConfig { name, lambda, matrix, forcing, sigma })
}

fn contraction_section(mut s: Section) -> Result<ContractionConfig, ConfigError> {
    let rho = parse_f64(&s.required("rho")?, "rho")?;
    let q = parse_f64(&s.required("q")?, "q")?;
    let g_norm = parse_f64(&s.required("g_norm")?, "g_norm")?;
    let horizon = s.take("T").map(|e| parse_f64(&e, "T")).transpose()?.unwrap_or(1.0);
    let n_max = s.take("n_max").map(|e| parse_usize(&e, "n_max")).transpose()?.unwrap_or(DEFAULT_N_MAX);
    s.finish()?;
    Ok(ContractionConfig { rho, q, g_norm, horizon, n_max })
}

pub const HL_DEFAULT_LEVELS: [usize; 7] = [256, 512, 1024, 2048, 4096, 8192, 16384];
pub const NONUNIQUE_DEFAULT_LEVELS: [usize; 5] = [256, 512, 1024, 2048, 4096];

fn boundary_section(mut s: Section) -> Result<BoundaryConfig, ConfigError> {
    let mode_entry = s.required("mode")?;
    let mode = match mode_entry.value.as_str() {
        "hl" => BoundaryMode::Hl,
        "nonunique" => BoundaryMode::Nonunique,
        other => {
            return Err(ConfigError::at(
                mode_entry.line,
                format!("unknown boundary mode `{other}` (expected hl or nonunique)"),
            ))
        }
    };
    let mut f = |k: &str, d: f64| s.take(k).map(|e| parse_f64(&e, k)).transpose().map(|v| v.unwrap_or(d));
    let p = f("p", 2.0)?;
    let lambda = f("lambda", 1.0)?;
    let t0 = f("t0", 0.5)?;
    let shift = f("shift", 1.0)?;
    let horizon = f("T", 1.0)?;
    let companion_order = f("companion_order", 0.75)?;
    let levels = match s.take("levels") {
        Some(e) => parse_list(&e, "levels", |v| v.parse().ok())?,
        None => match mode {
            BoundaryMode::Hl => HL_DEFAULT_LEVELS.to_vec(),
            BoundaryMode::Nonunique => NONUNIQUE_DEFAULT_LEVELS.to_vec(),
        },
    };
    s.finish()?;
    Ok(BoundaryConfig { mode, p, lambda, t0, shift, horizon, levels, companion_order })
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        for s in split_sections(text)? {
            match s.name.as_str() {
                "problem" => cfg.problem = Some(problem_section(s)?),
                "rhs" => cfg.rhs = Some(rhs_section(s)?),
                "contraction" => cfg.contraction = Some(contraction_section(s)?),
                "boundary" => cfg.boundary = Some(boundary_section(s)?),
                _ => unreachable!("section names are checked while splitting"),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Ok(Config::parse(&text)?)
    }

    /// Builds the solver problem from `[problem]` and `[rhs]`.
    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let pc = self.problem.as_ref().ok_or_else(|| ConfigError::new("missing [problem] section"))?;
        let rc = self.rhs.as_ref().ok_or_else(|| ConfigError::new("missing [rhs] section"))?;
        let orders = OrderVector::new(pc.orders.clone()).map_err(|e| ConfigError::new(format!("orders: {e}")))?;
        let mut params = CatalogParams {
            lambda: rc.lambda,
            matrix: rc.matrix.clone(),
            forcing: rc.forcing.clone(),
            sigma: None,
            dim: Some(pc.initial.len()),
        };
        if let Some(sc) = &rc.sigma {
            let hl = HLSpec::new(sc.p, sc.lambda, sc.t0, sc.shift, pc.horizon)?;
            params.sigma = Some((boundary::hl_sigma(&hl), sc.p));
        }
        let rhs = catalog(&rc.name, &params)?;
        let mut spec = ProblemSpec::new(orders, pc.initial.clone(), rhs, pc.horizon, pc.n)?;
        spec.grading = pc.grading;
        spec.tol = pc.tol;
        spec.max_iter = pc.max_iter;
        spec.p = pc.p;
        spec.rule = pc.rule;
        spec.threads = Threads::new(pc.threads);
        spec.validate()?;
        Ok(spec)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl std::fmt::Display for Config {
    /// Serializes in the format [`Config::parse`] reads; floats round-trip.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(p) = &self.problem {
            writeln!(f, "[problem]")?;
            writeln!(f, "orders = {}", join(&p.orders))?;
            writeln!(f, "initial = {}", join(&p.initial))?;
            writeln!(f, "T = {:?}", p.horizon)?;
            writeln!(f, "N = {}", p.n)?;
            if let Some(r) = p.grading {
                writeln!(f, "grading = {r:?}")?;
            }
            writeln!(f, "tol = {:?}", p.tol)?;
            if let Some(m) = p.max_iter {
                writeln!(f, "max_iter = {m}")?;
            }
            if let Some(x) = p.p {
                writeln!(f, "p = {x:?}")?;
            }
            writeln!(f, "rule = {}", p.rule)?;
            writeln!(f, "threads = {}", p.threads)?;
            writeln!(f)?;
        }
        if let Some(r) = &self.rhs {
            writeln!(f, "[rhs]")?;
            writeln!(f, "name = {}", r.name)?;
            if let Some(l) = r.lambda {
                writeln!(f, "lambda = {l:?}")?;
            }
            if let Some(m) = &r.matrix {
                let rows: Vec<String> = m.iter().map(|row| join(row)).collect();
                writeln!(f, "matrix = {}", rows.join("; "))?;
            }
            if let Some(b) = &r.forcing {
                writeln!(f, "forcing = {}", join(b))?;
            }
            if let Some(s) = &r.sigma {
                writeln!(f, "sigma_p = {:?}", s.p)?;
                writeln!(f, "sigma_lambda = {:?}", s.lambda)?;
                writeln!(f, "sigma_t0 = {:?}", s.t0)?;
                writeln!(f, "sigma_shift = {:?}", s.shift)?;
            }
            writeln!(f)?;
        }
        if let Some(c) = &self.contraction {
            writeln!(f, "[contraction]")?;
            writeln!(f, "rho = {:?}", c.rho)?;
            writeln!(f, "q = {:?}", c.q)?;
            writeln!(f, "g_norm = {:?}", c.g_norm)?;
            writeln!(f, "T = {:?}", c.horizon)?;
            writeln!(f, "n_max = {}", c.n_max)?;
            writeln!(f)?;
        }
        if let Some(b) = &self.boundary {
            writeln!(f, "[boundary]")?;
            let mode = match b.mode {
                BoundaryMode::Hl => "hl",
                BoundaryMode::Nonunique => "nonunique",
            };
            writeln!(f, "mode = {mode}")?;
            writeln!(f, "p = {:?}", b.p)?;
            writeln!(f, "lambda = {:?}", b.lambda)?;
            writeln!(f, "t0 = {:?}", b.t0)?;
            writeln!(f, "shift = {:?}", b.shift)?;
            writeln!(f, "T = {:?}", b.horizon)?;
            let levels: Vec<String> = b.levels.iter().map(usize::to_string).collect();
            writeln!(f, "levels = {}", levels.join(", "))?;
            writeln!(f, "companion_order = {:?}", b.companion_order)?;
        }
        Ok(())
    }
}

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}

/// Gate, witness checks, Picard iteration. Writes `solution.csv`,
/// `trace.csv` and `summary.txt`.
pub fn cmd_solve(cfg: &Config, opts: &RunOptions, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = cfg.problem_spec()?;
    let gate = spec.gate();
    if !gate.is_ok() {
        let text = format!("gate = {gate}\n");
        write_file(&opts.out_dir, "summary.txt", &text)?;
        say(out, &text)?;
        return Ok(EXIT_REFUSED);
    }
    let check = WitnessCheck::new(10.0, 10_000, opts.seed).horizon(spec.horizon);
    let mut witness = String::new();
    let g = check_growth(&spec.rhs, &check);
    let _ = writeln!(witness, "growth_check = {} (max violation {:e})", verdict(g.passed), g.max_violation);
    if spec.rhs.lipschitz_weight().is_some() {
        let l = check_lipschitz(&spec.rhs, &check);
        let _ = writeln!(witness, "lipschitz_check = {} (max violation {:e})", verdict(l.passed), l.max_violation);
    } else {
        let _ = writeln!(witness, "lipschitz_check = skipped (no weight declared)");
    }

    let report = picard_solve(&spec)?;
    write_file(&opts.out_dir, "solution.csv", &report.solution.to_csv())?;
    write_file(&opts.out_dir, "trace.csv", &report.trace_csv())?;
    let text = format!("{}{witness}", report.summary());
    write_file(&opts.out_dir, "summary.txt", &text)?;
    say(out, &text)?;
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Runs the `n₀` search. Writes `contraction.csv` and `contraction.txt`.
pub fn cmd_contraction(cfg: &Config, opts: &RunOptions, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = cfg.contraction.as_ref().ok_or_else(|| ConfigError::new("missing [contraction] section"))?;
    let params = ContractionParams::new(c.rho, c.q, c.g_norm, c.horizon)?;
    let report = find_n0(&params, c.n_max);
    write_file(&opts.out_dir, "contraction.csv", &report.to_csv())?;
    let text = report.summary();
    write_file(&opts.out_dir, "contraction.txt", &text)?;
    say(out, &text)?;
    Ok(if report.n0.is_some() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// `mode = hl` writes `boundary_hl.csv` and `boundary_companion.csv`;
/// `mode = nonunique` writes `boundary_nonunique.csv`.
pub fn cmd_boundary(cfg: &Config, opts: &RunOptions, out: &mut dyn Write) -> Result<i32, CliError> {
    let b = cfg.boundary.as_ref().ok_or_else(|| ConfigError::new("missing [boundary] section"))?;
    let threads = Threads::new(cfg.problem.as_ref().map_or(1, |p| p.threads));
    match b.mode {
        BoundaryMode::Hl => {
            let spec = HLSpec::new(b.p, b.lambda, b.t0, b.shift, b.horizon)?;
            let rows = boundary::unboundedness_demo(&spec, &b.levels, threads)?;
            let companion =
                boundary::transform_table(&spec, &b.levels, b.companion_order, boundary::HL_GRADING, threads)?;
            write_file(&opts.out_dir, "boundary_hl.csv", &boundary::hl_csv(&rows))?;
            write_file(&opts.out_dir, "boundary_companion.csv", &boundary::hl_csv(&companion))?;
            let increasing = rows.windows(2).all(|w| w[1].sup_j > w[0].sup_j);
            let mut text = boundary::hl_csv(&rows);
            let _ = writeln!(text, "sup column strictly increasing = {increasing}");
            let _ = writeln!(text, "companion order {}:", b.companion_order);
            text.push_str(&boundary::hl_csv(&companion));
            say(out, &text)?;
        }
        BoundaryMode::Nonunique => {
            let rows = b
                .levels
                .iter()
                .map(|&n| boundary::nonuniqueness_demo(n))
                .collect::<Result<Vec<_>, _>>()?;
            let csv = boundary::nonunique_csv(&rows);
            write_file(&opts.out_dir, "boundary_nonunique.csv", &csv)?;
            say(out, &csv)?;
        }
    }
    Ok(EXIT_OK)
}

/// Runs every acceptance criterion, one verdict line each.
pub fn cmd_selftest(out: &mut dyn Write) -> Result<i32, CliError> {
    let results = crate::acceptance::run_all();
    for r in &results {
        say(out, &format!("{r}\n"))?;
    }
    Ok(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_ERROR })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-order oscillator
[problem]
orders = 0.5, 1
initial = 1, 0
T = 1
N = 64
p = 4
threads = 2

[rhs]
name = linear_system
matrix = 0, 1; -1, 0   # rotation
";

    #[test]
    fn parses_sample() {
        let c = Config::parse(SAMPLE).unwrap();
        let p = c.problem.as_ref().unwrap();
        assert_eq!(p.orders, vec![0.5, 1.0]);
        assert_eq!(p.n, 64);
        assert_eq!(p.p, Some(4.0));
        assert_eq!(p.rule, QuadratureRule::Trapezoid);
        assert_eq!(c.rhs.as_ref().unwrap().matrix, Some(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]));
        let spec = c.problem_spec().unwrap();
        assert_eq!(spec.rhs.dim(), 2);
    }

    #[test]
    fn round_trips() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(Config::parse(&c.to_string()).unwrap(), c);
        let b = Config::parse("[boundary]\nmode = hl\n[contraction]\nrho = 1\nq = inf\ng_norm = 2\n").unwrap();
        assert_eq!(b.contraction.as_ref().unwrap().q, f64::INFINITY);
        assert_eq!(Config::parse(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn errors_name_the_line() {
        let e = Config::parse("[problem]\norders = 1\ninitial = 0\nbogus = 3\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = Config::parse("[nope]\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = Config::parse("x = 1\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = Config::parse("[problem]\norders = 1, a\ninitial = 0\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = Config::parse("[boundary]\nmode = sideways\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = Config::parse("[problem]\ninitial = 0\n").unwrap_err();
        assert!(e.msg.contains("orders"));
    }

    #[test]
    fn unknown_rhs_is_a_config_error() {
        let c = Config::parse("[problem]\norders = 1\ninitial = 0\n[rhs]\nname = mystery\n").unwrap();
        assert!(matches!(c.problem_spec(), Err(CliError::Rhs(RhsError::Config(_)))));
    }
}
