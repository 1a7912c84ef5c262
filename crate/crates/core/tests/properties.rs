mod common;

use common::{position, rng, Case, ACC_KINDS, AGG_KINDS};
use proptest::prelude::*;
use rand::Rng;
use sysrisk::dual::{dual_rho, dual_rho_tilde};
use sysrisk::oracle::{rho_grid, Axis, GridSpec};
use sysrisk::primal::rho;
use sysrisk::{ExtReal, SolverOptions};

fn case(seed: u64, max_d: usize, max_n: usize) -> Option<Case> {
    let mut r = rng(seed);
    let agg_kind = AGG_KINDS[r.gen_range(0..4)];
    let acc_kind = ACC_KINDS[r.gen_range(0..4)];
    let (d, n) = (r.gen_range(1..=max_d), r.gen_range(2..=max_n));
    let c = Case {
        label: format!("{agg_kind}+{acc_kind} d={d} n={n}"),
        space: common::space(&mut r, n),
        x: position(&mut r, d, n, 3.0),
        agg: common::aggregation(&mut r, agg_kind, d),
        acc: common::acceptance(&mut r, acc_kind, n),
    };
    (c.acc.validate(&c.space).is_ok() && common::passes_diagnostics(&c)).then_some(c)
}

fn value(c: &Case, x: &sysrisk::RandomVector, opts: &SolverOptions) -> ExtReal {
    rho(x, &c.agg, &c.acc, &c.space, opts).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_and_convex(seed in any::<u64>(), bump in 0.0f64..2.0) {
        let Some(c) = case(seed, 3, 6) else { return Ok(()) };
        let opts = SolverOptions::default();
        let slack = 10.0 * opts.tol;
        let base = value(&c, &c.x, &opts);
        prop_assume!(base.is_finite());
        let higher = c.x.combine(1.0, &sysrisk::RandomVector::constant(c.x.d(), c.x.n(), bump), 1.0);
        let raised = value(&c, &higher, &opts);
        prop_assert!(raised.to_f64() <= base.to_f64() + slack * (1.0 + base.to_f64().abs()), "{}: {raised} > {base}", c.label);

        let other = position(&mut rng(seed ^ 0x5eed), c.x.d(), c.x.n(), 3.0);
        let (a, b) = (base, value(&c, &other, &opts));
        prop_assume!(b.is_finite());
        let mid = value(&c, &c.x.combine(0.5, &other, 0.5), &opts);
        let chord = 0.5 * (a.to_f64() + b.to_f64());
        prop_assert!(mid.to_f64() <= chord + slack * (1.0 + chord.abs()), "{}: {mid} > {chord}", c.label);
    }

    #[test]
    fn weak_duality(seed in any::<u64>()) {
        let Some(c) = case(seed, 3, 6) else { return Ok(()) };
        let opts = SolverOptions::default();
        for r in [
            dual_rho(&c.x, &c.agg, &c.acc, &c.space, &opts).unwrap(),
            dual_rho_tilde(&c.x, &c.agg, &c.acc, &c.space, &opts).unwrap(),
        ] {
            if let (ExtReal::Finite(p), Some(ExtReal::Finite(d))) = (r.primal.value, r.dual_value) {
                prop_assert!(d <= p + 1e-6 * (1.0 + p.abs()), "{}: dual {d} above primal {p}", c.label);
            }
        }
    }

    #[test]
    fn grid_bounds_solver_and_refines_toward_it(seed in any::<u64>()) {
        let Some(c) = case(seed, 2, 3) else { return Ok(()) };
        let opts = SolverOptions::default();
        let solver = value(&c, &c.x, &opts);
        prop_assume!(solver.is_finite());
        let half = 4.0 + c.x.max_abs() + solver.to_f64().abs();
        let grid = |points| GridSpec { axes: vec![Axis::new(-half, half, points).unwrap(); c.x.d()] };
        let coarse = rho_grid(&c.x, &c.agg, &c.acc, &c.space, &grid(21)).unwrap();
        let fine = rho_grid(&c.x, &c.agg, &c.acc, &c.space, &grid(41)).unwrap();
        prop_assert!(fine.to_f64() >= solver.to_f64() - opts.tol * (1.0 + solver.to_f64().abs()), "{}", c.label);
        prop_assert!(fine <= coarse, "{}: refining moved away ({coarse} -> {fine})", c.label);
    }
}
