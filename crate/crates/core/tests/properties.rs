//! Property tests over random inputs.

use std::sync::Arc;

use fracpicard::cli::{Config, ProblemConfig, RhsConfig};
use fracpicard::contraction::{
    derive_beta, find_n0, log_c_n, log_ratio, multiorder_m, validity_gate, wendel_pair, ContractionParams,
    OrderVector,
};
use fracpicard::fracgrid::{lp_norm, sup_norm_diff};
use fracpicard::fracint::{build_weights, holder_envelope, rl_integral, rl_integral_cells};
use fracpicard::exec::Threads;
use fracpicard::specfun::{gamma, wendel_check};
use fracpicard::{Grid, GridFunction, QuadratureRule};
use proptest::prelude::*;

fn rule() -> impl Strategy<Value = QuadratureRule> {
    prop_oneof![Just(QuadratureRule::Rectangle), Just(QuadratureRule::Trapezoid)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_nodes_are_exact(t in 0.1f64..100.0, n in 1usize..500) {
        let g = Grid::new(t, n, 1.0).unwrap();
        for (k, &x) in g.nodes().iter().enumerate() {
            // The last node is pinned to T itself.
            let want = if k == n { t } else { k as f64 * t / n as f64 };
            prop_assert_eq!(x, want);
        }
    }

    #[test]
    fn lp_norm_is_monotone(vals in prop::collection::vec(-5.0f64..5.0, 17), scale in prop::collection::vec(0.0f64..1.0, 17), p in 1.0f64..6.0) {
        let grid = Arc::new(Grid::new(1.0, 16, 1.5).unwrap());
        let h = GridFunction::new(grid.clone(), 1, vals.clone()).unwrap();
        let g = GridFunction::new(grid, 1, vals.iter().zip(&scale).map(|(v, s)| v * s).collect()).unwrap();
        prop_assert!(lp_norm(&g, p).unwrap() <= lp_norm(&h, p).unwrap() * (1.0 + 1e-14));
        prop_assert!(lp_norm(&g, f64::INFINITY).unwrap() <= lp_norm(&h, f64::INFINITY).unwrap());
    }

    #[test]
    fn sup_norm_triangle(a in prop::collection::vec(-9.0f64..9.0, 18), b in prop::collection::vec(-9.0f64..9.0, 18), c in prop::collection::vec(-9.0f64..9.0, 18)) {
        let grid = Arc::new(Grid::new(1.0, 8, 1.0).unwrap());
        let f = |v: &Vec<f64>| GridFunction::new(grid.clone(), 2, v.clone()).unwrap();
        let (a, b, c) = (f(&a), f(&b), f(&c));
        let ac = sup_norm_diff(&a, &c).unwrap();
        let ab = sup_norm_diff(&a, &b).unwrap();
        let bc = sup_norm_diff(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn constants_are_integrated_exactly(alpha in 0.01f64..=1.0, n in 2usize..600, r in 1.0f64..4.0, t in 0.2f64..5.0, rule in rule()) {
        let grid = Arc::new(Grid::new(t, n, r).unwrap());
        let table = build_weights(alpha, grid.clone(), rule).unwrap();
        let out = rl_integral(&table, &GridFunction::constant(grid.clone(), &[1.0]).unwrap()).unwrap();
        let g = gamma(alpha + 1.0).unwrap();
        for (k, &x) in grid.nodes().iter().enumerate() {
            prop_assert!((out.sample(k)[0] - x.powf(alpha) / g).abs() <= 1e-12);
        }
    }

    #[test]
    fn integral_is_causal(alpha in 0.05f64..=1.0, m in 0usize..40, bump in -10.0f64..10.0, rule in rule()) {
        let grid = Arc::new(Grid::new(1.0, 40, 2.0).unwrap());
        let table = build_weights(alpha, grid.clone(), rule).unwrap();
        let g = GridFunction::scalar(grid.clone(), |t| (5.0 * t).sin()).unwrap();
        let mut v = g.values().to_vec();
        for x in &mut v[m + 1..] {
            *x += bump;
        }
        let h = GridFunction::new(grid, 1, v).unwrap();
        let a = rl_integral(&table, &g).unwrap();
        let b = rl_integral(&table, &h).unwrap();
        prop_assert_eq!(&a.values()[..=m], &b.values()[..=m]);
    }

    #[test]
    fn holder_envelope_dominates(alpha in 0.3f64..=1.0, p_over in 1.05f64..4.0, cells in prop::collection::vec(-3.0f64..3.0, 64)) {
        // Piecewise-constant densities are integrated exactly, so the bound
        // applies to the discrete output with the exact step-function norm.
        let p = p_over / alpha;
        let grid = Grid::new(1.0, 64, 1.7).unwrap();
        let j = rl_integral_cells(alpha, &grid, &cells, Threads::SERIAL).unwrap();
        let norm = grid.nodes().windows(2).zip(&cells).map(|(w, c)| (w[1] - w[0]) * c.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        for (k, &t) in grid.nodes().iter().enumerate() {
            let env = holder_envelope(alpha, p, norm, t).unwrap();
            prop_assert!(j[k].abs() <= env * (1.0 + 1e-12) + 1e-15, "t = {}: {} > {}", t, j[k], env);
        }
    }

    #[test]
    fn wendel_sandwich(x in 1e-6f64..=1e3, a in 1e-6f64..=1.0) {
        prop_assert!(wendel_check(x, a).unwrap().holds(1e-12));
    }

    #[test]
    fn ratio_is_consistent_with_c_n(rho in 0.4f64..=1.0, qs in 2.0f64..10.0, g in 0.01f64..2.0, t in 0.1f64..=1.0, n in 1usize..=1000) {
        let p = ContractionParams::new(rho, qs / rho, g, t).unwrap();
        let d = log_c_n(&p, n + 1) - log_c_n(&p, n) - log_ratio(&p, n);
        prop_assert!(d.exp_m1().abs() <= 1e-10);
    }

    #[test]
    fn n0_exists_and_is_minimal(rho in 0.4f64..=1.0, qs in 2.0f64..10.0, inf in any::<bool>(), g in 0.0f64..2.0, t in 0.1f64..=1.0) {
        let q = if inf { f64::INFINITY } else { qs / rho };
        let p = ContractionParams::new(rho, q, g, t).unwrap();
        let r = find_n0(&p, 1_000_000);
        let n0 = r.n0.expect("n0 exists");
        prop_assert!(r.c[..n0 - 1].iter().all(|c| c.log >= 0.0));
        prop_assert!(r.c[n0 - 1].log < 0.0);
        prop_assert!(!r.saturated || n0 > 1);
    }

    #[test]
    fn series_of_constants_converges(rho in 0.4f64..=1.0, qs in 2.0f64..10.0, g in 0.01f64..2.0, t in 0.1f64..=1.0) {
        let p = ContractionParams::new(rho, qs / rho, g, t).unwrap();
        // Once the ratio is below 1/2 the tail after n is at most C_n.
        let mut n = 1;
        while log_ratio(&p, n) > -std::f64::consts::LN_2 {
            n += 1;
            prop_assert!(n < 10_000);
        }
        let tail = (log_c_n(&p, n) + std::f64::consts::LN_2).exp();
        let mut last = n;
        while log_c_n(&p, last) > (1e-15f64).ln() && last < 10_000 {
            last += 1;
        }
        prop_assert!(tail.is_finite());
        prop_assert!(log_c_n(&p, last) <= (1e-15f64).ln());
    }

    #[test]
    fn gate_soundness(alphas in prop::collection::vec(0.05f64..=1.0, 1..5), p in 1.0f64..30.0) {
        let o = OrderVector::new(alphas).unwrap();
        if validity_gate(&o, p).is_ok() {
            let all_one = o.as_slice().iter().all(|&a| a == 1.0);
            prop_assert!(derive_beta(o.min().1, p).is_ok() || (p == 1.0 && all_one));
        }
    }

    #[test]
    fn m_is_at_least_the_count(alphas in prop::collection::vec(0.05f64..=1.0, 1..6)) {
        // Each term is ≥ 1 at T = 1 since Γ(α₀) ≥ Γ(αⱼ) for α₀ ≤ αⱼ ≤ 1.
        let o = OrderVector::new(alphas.clone()).unwrap();
        prop_assert!(multiorder_m(&o, 1.0).unwrap() >= alphas.len() as f64 * (1.0 - 1e-14));
    }

    #[test]
    fn wendel_chain(beta in 0.05f64..=1.0, n in 1usize..=1000) {
        let (b, bound) = wendel_pair(beta, n);
        prop_assert!(b <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn config_round_trip(
        orders in prop::collection::vec(0.05f64..=1.0, 1..4),
        horizon in 0.1f64..10.0,
        n in 1usize..10_000,
        grading in prop::option::of(1.0f64..4.0),
        tol in 1e-14f64..1e-2,
        max_iter in prop::option::of(1usize..5000),
        p in prop::option::of(prop_oneof![Just(f64::INFINITY), 1.0f64..50.0]),
        rule in rule(),
        threads in 1usize..8,
        lambda in -5.0f64..5.0,
    ) {
        let dim = orders.len();
        let cfg = Config {
            problem: Some(ProblemConfig {
                initial: orders.iter().map(|a| a * 3.0 - 1.0).collect(),
                orders,
                horizon,
                n,
                grading,
                tol,
                max_iter,
                p,
                rule,
                threads,
            }),
            rhs: Some(RhsConfig {
                name: "linear_system".into(),
                lambda: Some(lambda),
                matrix: Some((0..dim).map(|i| (0..dim).map(|j| lambda * (i as f64 - j as f64) + 0.1).collect()).collect()),
                forcing: Some(vec![lambda; dim]),
                sigma: None,
            }),
            contraction: None,
            boundary: None,
        };
        let back = Config::parse(&cfg.to_string()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let a = cfg.problem_spec().unwrap();
        let b = back.problem_spec().unwrap();
        prop_assert_eq!(a.orders, b.orders);
        prop_assert_eq!(a.initial, b.initial);
        prop_assert_eq!(a.n, b.n);
        prop_assert_eq!(a.grading, b.grading);
        prop_assert_eq!(a.tol, b.tol);
        prop_assert_eq!(a.p, b.p);
    }
}

#[test]
fn semigroup_converges_with_order_at_least_0_8() {
    // g = 1 + t + t²; J^γ t^k = Γ(k+1)/Γ(k+1+γ) t^{k+γ}.
    let exact = |gamma_order: f64, t: f64| -> f64 {
        (0..3)
            .map(|k| {
                let k = k as f64;
                gamma(k + 1.0).unwrap() / gamma(k + 1.0 + gamma_order).unwrap() * t.powf(k + gamma_order)
            })
            .sum()
    };
    let set = [0.3, 0.4, 0.5, 0.7];
    for &a in &set {
        for &b in &set {
            if a + b > 1.0 {
                continue;
            }
            let mut errs = Vec::new();
            for n in [128usize, 256, 512] {
                // J^β g ~ t^β at the origin, so a uniform grid caps the order at
                // α+β; grading by 1/(α+β) restores it.
                let grid = Arc::new(Grid::new(1.0, n, 1.0 / (a + b)).unwrap());
                let g = GridFunction::scalar(grid.clone(), |t| 1.0 + t + t * t).unwrap();
                let ta = build_weights(a, grid.clone(), QuadratureRule::Trapezoid).unwrap();
                let tb = build_weights(b, grid.clone(), QuadratureRule::Trapezoid).unwrap();
                let ab = rl_integral(&ta, &rl_integral(&tb, &g).unwrap()).unwrap();
                let reference = GridFunction::scalar(grid, |t| exact(a + b, t)).unwrap();
                errs.push(sup_norm_diff(&ab, &reference).unwrap());
            }
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order >= 0.8, "alpha {a}, beta {b}: errors {errs:?}");
            }
        }
    }
}

#[test]
fn integral_output_becomes_continuous() {
    // g(t) = t^{-0.3} ∈ L², α = 0.6 > 1/2: the largest jump between
    // neighbouring nodes shrinks with the spacing.
    let mut prev = f64::INFINITY;
    for n in [64usize, 256, 1024, 4096] {
        let grid = Grid::new(1.0, n, 1.0).unwrap();
        let cells: Vec<f64> = grid.nodes().windows(2).map(|w| (0.5 * (w[0] + w[1])).powf(-0.3)).collect();
        let j = rl_integral_cells(0.6, &grid, &cells, Threads::SERIAL).unwrap();
        let jump = j.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jump < prev, "n = {n}");
        prev = jump;
    }
}

fn catalog_entries() -> Vec<fracpicard::rhs::CaratheodoryRhs> {
    use fracpicard::boundary::{hl_sigma, HLSpec};
    use fracpicard::rhs::{catalog, CatalogParams, CATALOG_NAMES};
    let spec = HLSpec::new(2.0, 1.0, 0.5, 2.0, 1.0).unwrap();
    let params = CatalogParams {
        lambda: Some(-1.5),
        matrix: Some(vec![vec![0.0, 1.0], vec![-1.0, 0.3]]),
        forcing: Some(vec![0.5, -0.25]),
        sigma: Some((hl_sigma(&spec), 2.0)),
        dim: Some(3),
    };
    CATALOG_NAMES.iter().map(|n| catalog(n, &params).unwrap()).collect()
}

#[test]
fn catalog_entries_pass_their_own_checks() {
    use fracpicard::rhs::{check_growth, check_lipschitz, WitnessCheck};
    for rhs in catalog_entries() {
        let check = WitnessCheck::new(10.0, 10_000, 11);
        assert!(check_growth(&rhs, &check).passed, "{} growth", rhs.name());
        if rhs.lipschitz_weight().is_some() {
            assert!(check_lipschitz(&rhs, &check).passed, "{} lipschitz", rhs.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nemytskii_commutes_with_subsample(stride in 1usize..5, amp in -3.0f64..3.0) {
        use fracpicard::rhs::nemytskii_eval;
        let grid = Arc::new(Grid::new(0.4, 60, 1.5).unwrap());
        for rhs in catalog_entries() {
            let d = rhs.dim();
            let phi = GridFunction::from_fn(grid.clone(), d, |t, out| {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = amp * (t * (j + 1) as f64).cos();
                }
            }).unwrap();
            let a = nemytskii_eval(&rhs, &phi).unwrap().subsample(stride).unwrap();
            let b = nemytskii_eval(&rhs, &phi.subsample(stride).unwrap()).unwrap();
            prop_assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn picard_map_starts_at_the_initial_value(alpha in 0.3f64..=1.0, xi in -5.0f64..5.0, amp in -5.0f64..5.0, rule in rule()) {
        use fracpicard::picard::{apply_t, OperatorTables};
        use fracpicard::rhs::linear_scalar;
        let orders = OrderVector::new(vec![alpha]).unwrap();
        let spec = fracpicard::ProblemSpec::new(orders.clone(), vec![xi], linear_scalar(-1.0), 1.0, 50).unwrap();
        let grid = Arc::new(spec.grid().unwrap());
        let tables = OperatorTables::build(&orders, grid.clone(), rule).unwrap();
        let phi = GridFunction::scalar(grid, |t| amp * (3.0 * t).sin() + 1.0).unwrap();
        let out = apply_t(&spec, &phi, &tables).unwrap();
        prop_assert_eq!(out.sample(0)[0], xi);
    }
}
