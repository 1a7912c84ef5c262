//! Primal computation of the systemic risk measures.
//!
//! `rho(X) = inf { sum(m) : Lambda(X + m) in A }` is solved by Kelley's
//! cutting-plane method in allocation space. The constraint is written as
//! `g(m) = rho_A(Lambda(X + m)) <= 0`; `g` is convex and its subgradients come
//! from the worst-case density of `rho_A` and supergradients of `Lambda`.
//! Every LP point is also pushed along `e = (1, ..., 1)` onto the boundary of
//! the feasible set, which gives a feasible incumbent and an upper bound.
//!
//! `rho_tilde(X) = rho_A(Lambda(X))` is a single bisection.

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::AggregationSpec;
use crate::error::Result;
use crate::extended::{ExtReal, UNBOUNDED_CAP};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scenario::{RandomVector, ScenarioSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Random restarts of the Frank-Wolfe dual search.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 10_000,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalStatus {
    Optimal,
    UnboundedBelow,
    Infeasible,
    ToleranceReached,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub lower: ExtReal,
    pub upper: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalResult {
    pub value: ExtReal,
    /// Best lower bound proved by the solver; equals `value` for closed-form results.
    pub lower_bound: ExtReal,
    pub m_star: Option<Vec<f64>>,
    pub status: PrimalStatus,
    pub iterations: usize,
    pub solver_trace: Option<Vec<TraceEntry>>,
}

impl PrimalResult {
    fn unbounded(iterations: usize, trace: Option<Vec<TraceEntry>>) -> Self {
        PrimalResult {
            value: ExtReal::NegInf,
            lower_bound: ExtReal::NegInf,
            m_star: None,
            status: PrimalStatus::UnboundedBelow,
            iterations,
            solver_trace: trace,
        }
    }
}

/// `g(m) = rho_A(Lambda(X + m))` with its subgradients.
pub(crate) struct Constraint<'a> {
    pub x: &'a RandomVector,
    pub agg: &'a AggregationSpec,
    pub acc: &'a AcceptanceSpec,
    pub space: &'a ScenarioSpace,
}

/// A linearization `g(m') >= value + slope . (m' - point)`, plus the weights that produced it.
#[derive(Clone, Debug)]
pub(crate) struct Cut {
    pub point: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
    /// Normalized acceptance weight (`E[Q] = 1`) at the point.
    pub density: Vec<f64>,
    /// `grad Lambda(X(w) + m)`, row `i` holding component `i`.
    pub gradient: RandomVector,
}

impl Constraint<'_> {
    pub fn aggregate(&self, m: &[f64]) -> Vec<f64> {
        let mut buf = vec![0.0; self.x.d()];
        (0..self.x.n())
            .map(|w| {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = self.x.get(i, w) + m[i];
                }
                self.agg.eval(&buf)
            })
            .collect()
    }

    pub fn value(&self, m: &[f64]) -> ExtReal {
        self.acc.risk(&self.aggregate(m), self.space).0
    }

    pub fn feasible(&self, m: &[f64]) -> bool {
        self.value(m).to_f64() <= 0.0
    }

    pub fn cut(&self, m: &[f64]) -> Option<Cut> {
        let u = self.aggregate(m);
        let (value, density) = self.acc.risk(&u, self.space);
        let value = value.finite()?;
        let density = density?;
        let (d, n) = (self.x.d(), self.x.n());
        let mut gradient = RandomVector::zeros(d, n);
        let mut slope = vec![0.0; d];
        for w in 0..n {
            let point: Vec<f64> = (0..d).map(|i| self.x.get(i, w) + m[i]).collect();
            let g = self.agg.supergradient(&point);
            let weight = self.space.prob(w) * density[w];
            for i in 0..d {
                gradient.set(i, w, g[i]);
                slope[i] -= weight * g[i];
            }
        }
        if value.abs() > CUT_LIMIT || slope.iter().any(|s| !s.is_finite() || s.abs() > CUT_LIMIT) {
            return None;
        }
        Some(Cut {
            point: m.to_vec(),
            value,
            slope,
            density,
            gradient,
        })
    }

    /// Smallest `t` (up to `tol`) with `g(m + t e) <= 0`; `None` when `t` can go below `-1e9`.
    pub fn lift(&self, m: &[f64], tol: f64) -> Option<f64> {
        let shifted = |t: f64| -> Vec<f64> { m.iter().map(|v| v + t).collect() };
        let lowest = (0..self.x.d())
            .flat_map(|i| self.x.row(i).iter().map(move |v| v + m[i]))
            .fold(f64::INFINITY, f64::min);
        let mut hi = -lowest;
        let mut pad = 1e-9 * (1.0 + hi.abs());
        while !self.feasible(&shifted(hi)) {
            hi += pad;
            pad *= 2.0;
            assert!(pad.is_finite(), "nonnegative aggregates must be acceptable");
        }
        let mut step = 1.0f64.max(hi.abs() * 1e-3);
        let mut lo = hi - step;
        while self.feasible(&shifted(lo)) {
            hi = lo;
            step *= 2.0;
            lo = hi - step;
            if lo < -UNBOUNDED_CAP {
                return None;
            }
        }
        while hi - lo > tol * (1.0 + hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.feasible(&shifted(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Result of the Kelley iteration, kept for the dual certificate.
pub(crate) struct KelleyRun {
    pub result: PrimalResult,
    pub cuts: Vec<Cut>,
}

struct Master {
    center: Vec<f64>,
    radius: f64,
}

const MAX_RADIUS: f64 = 1e10;
/// Cuts with larger coefficients are numerically useless and are not added.
const CUT_LIMIT: f64 = 1e8;

impl Master {
    fn solve_box(&self, cuts: &[Cut], radius: f64) -> Option<(Vec<f64>, f64)> {
        let d = self.center.len();
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = self
            .center
            .iter()
            .map(|c| lp.add_var(c - radius, c + radius, 1.0))
            .collect();
        for cut in cuts {
            if cut.slope.iter().all(|s| *s == 0.0) {
                continue;
            }
            // value + slope . (m - point) <= 0, scaled to unit norm
            let scale = cut.slope.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            let rhs = cut
                .slope
                .iter()
                .zip(&cut.point)
                .map(|(s, p)| s * p)
                .sum::<f64>()
                - cut.value;
            let coefs = (0..d)
                .filter(|&i| cut.slope[i].abs() > 1e-14 * scale)
                .map(|i| (vars[i], cut.slope[i] / scale))
                .collect();
            lp.add_row(coefs, Relation::Le, rhs / scale);
        }
        match lp.minimize() {
            LpOutcome::Optimal(s) => Some((s.x, s.objective)),
            _ => None,
        }
    }

    fn on_boundary(&self, m: &[f64], radius: f64) -> bool {
        m.iter()
            .zip(&self.center)
            .any(|(v, c)| (v - c).abs() >= radius * (1.0 - 1e-7))
    }

    /// Minimizes the cut model. The returned bound is valid when the flag is set.
    fn solve(&self, cuts: &[Cut]) -> Option<(Vec<f64>, f64, bool)> {
        let (m, obj) = self.solve_box(cuts, self.radius)?;
        if !self.on_boundary(&m, self.radius) {
            return Some((m, obj, true));
        }
        // the box value is convex and nonincreasing in the radius, so a
        // larger box with the same value certifies the bound
        let valid = match self.solve_box(cuts, self.radius * 10.0) {
            Some((_, wide)) => wide >= obj - 1e-9 * (1.0 + obj.abs()),
            None => false,
        };
        Some((m, obj, valid))
    }

    /// Grows the box when the incumbent approaches its boundary.
    fn follow(&mut self, best: &[f64]) {
        while self.radius < MAX_RADIUS
            && best
                .iter()
                .zip(&self.center)
                .any(|(b, c)| (b - c).abs() > 0.5 * self.radius)
        {
            self.radius *= 10.0;
        }
    }
}

pub(crate) fn kelley(c: &Constraint<'_>, opts: &SolverOptions) -> KelleyRun {
    let d = c.x.d();
    let tol = opts.tol;
    let lift_tol = 1e-3 * tol / d as f64;
    let mut trace = Vec::new();
    let all_accepting = matches!(c.acc, AcceptanceSpec::Polyhedral { .. })
        && c.acc.risk(&vec![0.0; c.x.n()], c.space).0.is_neg_inf();
    if all_accepting {
        return KelleyRun {
            result: PrimalResult::unbounded(0, Some(trace)),
            cuts: Vec::new(),
        };
    }
    let Some(t0) = c.lift(&vec![0.0; d], lift_tol) else {
        return KelleyRun {
            result: PrimalResult::unbounded(0, Some(trace)),
            cuts: Vec::new(),
        };
    };
    let center = vec![t0; d];
    let mut best = center.clone();
    let mut upper = d as f64 * t0;
    let mut lower = f64::NEG_INFINITY;
    let mut cuts: Vec<Cut> = c.cut(&center).into_iter().collect();
    let mut master = Master {
        radius: 10.0 * (1.0 + c.x.max_abs() + t0.abs()),
        center,
    };
    let mut status = PrimalStatus::ToleranceReached;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let Some((m, bound, valid)) = master.solve(&cuts) else {
            break;
        };
        if valid {
            lower = bound;
        }
        trace.push(TraceEntry {
            iteration: iterations,
            lower: ExtReal::from_f64(lower),
            upper: ExtReal::Finite(upper),
        });
        if upper - lower <= tol * upper.abs().max(1.0) {
            status = PrimalStatus::Optimal;
            break;
        }
        // cut at the LP point, backing off toward the incumbent if the model breaks down there
        let mut probe = m.clone();
        let mut added = false;
        for _ in 0..60 {
            if let Some(cut) = c.cut(&probe) {
                cuts.push(cut);
                added = true;
                break;
            }
            probe
                .iter_mut()
                .zip(&best)
                .for_each(|(p, b)| *p = 0.5 * (*p + b));
        }
        let Some(t) = c.lift(&probe, lift_tol) else {
            return KelleyRun {
                result: PrimalResult::unbounded(iterations, Some(trace)),
                cuts,
            };
        };
        let y: Vec<f64> = probe.iter().map(|v| v + t).collect();
        let value: f64 = y.iter().sum();
        if value < upper {
            let mut y = y.clone();
            let mut value = value;
            if !valid {
                // the model is unbounded in the box: follow the improving ray while it keeps paying off
                let dir: Vec<f64> = y.iter().zip(&best).map(|(a, b)| a - b).collect();
                let mut scale = 2.0;
                while value > -UNBOUNDED_CAP && scale < 1e12 {
                    let far: Vec<f64> = y.iter().zip(&dir).map(|(a, v)| a + scale * v).collect();
                    let Some(t) = c.lift(&far, lift_tol) else {
                        return KelleyRun {
                            result: PrimalResult::unbounded(iterations, Some(trace)),
                            cuts,
                        };
                    };
                    let next: f64 = far.iter().sum::<f64>() + d as f64 * t;
                    if next >= value - tol * value.abs().max(1.0) {
                        break;
                    }
                    y = far.iter().map(|v| v + t).collect();
                    value = next;
                    scale *= 2.0;
                }
            }
            upper = value;
            best = y.clone();
            master.follow(&best);
        }
        if upper < -UNBOUNDED_CAP {
            return KelleyRun {
                result: PrimalResult::unbounded(iterations, Some(trace)),
                cuts,
            };
        }
        let before = cuts.len();
        if let Some(cut) = c.cut(&y) {
            cuts.push(cut);
        }
        if !added && cuts.len() == before {
            break;
        }
    }
    let result = PrimalResult {
        value: ExtReal::Finite(upper),
        lower_bound: ExtReal::from_f64(lower),
        m_star: Some(best),
        status,
        iterations,
        solver_trace: Some(trace),
    };
    KelleyRun { result, cuts }
}

fn check_inputs(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
) -> Result<()> {
    x.check_shape(agg.d(), space)?;
    acc.validate(space)
}

/// `rho(X) = inf { sum(m) : Lambda(X + m) in A }`.
pub fn rho(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<PrimalResult> {
    check_inputs(x, agg, acc, space)?;
    Ok(kelley(&Constraint { x, agg, acc, space }, opts).result)
}

/// `rho_tilde(X) = rho_A(Lambda(X))`; `m_star` holds the scalar bail-out amount.
pub fn rho_tilde(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<PrimalResult> {
    check_inputs(x, agg, acc, space)?;
    let u = agg.eval_vector(x)?;
    let value = acc.rho_a(&u, space, opts.tol);
    Ok(match value {
        ExtReal::Finite(v) => PrimalResult {
            value,
            lower_bound: ExtReal::Finite(v - opts.tol),
            m_star: Some(vec![v]),
            status: PrimalStatus::Optimal,
            iterations: 1,
            solver_trace: None,
        },
        _ => PrimalResult::unbounded(1, None),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rho_at_zero: ExtReal,
    pub proper: bool,
    /// No nonzero `m` with `sum(m) = 0` has `Lambda(m)` acceptable.
    pub m0_intersection_trivial: bool,
    /// No strictly negative constant is acceptable.
    pub negative_constants_rejected: bool,
    pub affine_dominance_ok: bool,
    /// A constant position `t e` whose aggregate stays acceptable after subtracting `1e-3`.
    pub interior_point_found: Option<RandomVector>,
}

/// Unit vectors of `{ sum(m) = 0 }` used to probe the intersection with the acceptance set.
fn zero_sum_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        0 | 1 => Vec::new(),
        2 => {
            let s = 0.5f64.sqrt();
            vec![vec![s, -s], vec![-s, s]]
        }
        3 => {
            let b1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
            let b2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
            (0..24)
                .map(|k| {
                    let a = k as f64 * std::f64::consts::TAU / 24.0;
                    (0..3).map(|i| a.cos() * b1[i] + a.sin() * b2[i]).collect()
                })
                .collect()
        }
        _ => {
            let s = 0.5f64.sqrt();
            let mut out = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        let mut v = vec![0.0; d];
                        v[i] = s;
                        v[j] = -s;
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

pub fn diagnostics(
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<Diagnostics> {
    let d = agg.d();
    let n = space.len();
    let zero = RandomVector::zeros(d, n);
    let rho_at_zero = rho(&zero, agg, acc, space, opts)?.value;

    let constant = |v: f64| vec![v; n];
    let m0_intersection_trivial = zero_sum_directions(d).iter().all(|dir| {
        [0.1, 1.0, 10.0, 100.0].iter().all(|r| {
            let m: Vec<f64> = dir.iter().map(|v| v * r).collect();
            !acc.contains(&constant(agg.eval(&m)), space)
        })
    });
    let negative_constants_rejected = [1e-6, 1e-3, 1.0, 1e3]
        .iter()
        .all(|e| !acc.contains(&constant(-e), space));

    let grid: Vec<f64> = (-3..=3).map(f64::from).collect();
    let affine_dominance_ok = agg.check_admissibility(&grid).affine_dominance_ok == Some(true);

    let interior_point_found = [1.0, 10.0, 100.0].iter().find_map(|&t| {
        let u = agg.eval(&vec![t; d]) - 1e-3;
        acc.contains(&constant(u), space)
            .then(|| RandomVector::constant(d, n, t))
    });

    Ok(Diagnostics {
        rho_at_zero,
        proper: rho_at_zero > ExtReal::NegInf,
        m0_intersection_trivial,
        negative_constants_rejected,
        affine_dominance_ok,
        interior_point_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::Utility;

    fn half() -> ScenarioSpace {
        ScenarioSpace::new(vec![0.5, 0.5]).unwrap()
    }

    fn worked() -> RandomVector {
        RandomVector::from_rows(vec![vec![1.0, -2.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn sum_nonnegative_example() {
        let r = rho(
            &worked(),
            &AggregationSpec::sum(2),
            &AcceptanceSpec::Nonnegative,
            &half(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.status, PrimalStatus::Optimal);
        assert!((r.value.to_f64() - 1.0).abs() < 1e-6, "{r:?}");
        let m = r.m_star.unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sum_floor_example() {
        let acc = AcceptanceSpec::ExpectationFloor { u0: 0.0 };
        let r = rho(
            &worked(),
            &AggregationSpec::sum(2),
            &acc,
            &half(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(r.value.to_f64().abs() < 1e-6);
        let t = rho_tilde(
            &worked(),
            &AggregationSpec::sum(2),
            &acc,
            &half(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(t.value.to_f64().abs() < 1e-6);
    }

    #[test]
    fn rho_tilde_es_example() {
        let acc = AcceptanceSpec::ExpectedShortfall { level: 0.5 };
        let r = rho_tilde(
            &worked(),
            &AggregationSpec::sum_of_losses(2),
            &acc,
            &half(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((r.value.to_f64() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rho_at_zero_is_nonpositive_for_all_combinations() {
        let s = ScenarioSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let aggs = [
            AggregationSpec::sum(2),
            AggregationSpec::sum_of_losses(2),
            AggregationSpec::utility_of_sum(2, Utility::Exponential { gamma: 1.0 }).unwrap(),
            AggregationSpec::componentwise(vec![
                Utility::Exponential { gamma: 0.5 },
                Utility::Power { eta: 2.0 },
            ])
            .unwrap(),
        ];
        let accs = [
            AcceptanceSpec::Nonnegative,
            AcceptanceSpec::ExpectationFloor { u0: -0.3 },
            AcceptanceSpec::ExpectedShortfall { level: 0.4 },
            AcceptanceSpec::Polyhedral {
                weights: vec![vec![1.0, 2.0, 0.5]],
                bounds: vec![-0.1],
            },
        ];
        let zero = RandomVector::zeros(2, 3);
        for agg in &aggs {
            for acc in &accs {
                let r = rho(&zero, agg, acc, &s, &SolverOptions::default()).unwrap();
                assert!(
                    r.value.to_f64() <= 1e-9,
                    "{} {}: {:?}",
                    agg.name(),
                    acc.name(),
                    r.value
                );
            }
        }
    }

    #[test]
    fn linear_case_is_not_proper_without_floor() {
        // sum + floor with u0 < 0: shifting along sum(m) = 0 is free, but the floor still binds
        let s = half();
        let acc = AcceptanceSpec::ExpectationFloor { u0: -1.0 };
        let r = rho(
            &RandomVector::zeros(2, 2),
            &AggregationSpec::sum(2),
            &acc,
            &s,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((r.value.to_f64() + 1.0).abs() < 1e-6);
        let everything = AcceptanceSpec::Polyhedral {
            weights: vec![vec![0.0, 0.0]],
            bounds: vec![0.0],
        };
        let r = rho(
            &worked(),
            &AggregationSpec::sum(2),
            &everything,
            &s,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.status, PrimalStatus::UnboundedBelow);
    }

    #[test]
    fn diagnostics_examples() {
        let s = half();
        let opts = SolverOptions::default();
        let lin = diagnostics(
            &AggregationSpec::sum(2),
            &AcceptanceSpec::Nonnegative,
            &s,
            &opts,
        )
        .unwrap();
        assert!(!lin.m0_intersection_trivial);
        assert!(lin.proper);
        let losses = diagnostics(
            &AggregationSpec::sum_of_losses(2),
            &AcceptanceSpec::Nonnegative,
            &s,
            &opts,
        )
        .unwrap();
        assert!(losses.m0_intersection_trivial);
        assert!(losses.negative_constants_rejected);
        assert!(losses.interior_point_found.is_none());
        let exp = AggregationSpec::utility_of_sum(2, Utility::Exponential { gamma: 1.0 }).unwrap();
        let e = diagnostics(&exp, &AcceptanceSpec::Nonnegative, &s, &opts).unwrap();
        assert!(e.interior_point_found.is_some());
    }

    #[test]
    fn smooth_aggregation_converges() {
        let s = ScenarioSpace::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = RandomVector::from_rows(vec![
            vec![1.0, -2.0, 0.5, 3.0],
            vec![0.0, 1.0, -1.0, 2.0],
            vec![-0.5, 0.3, 0.2, -1.0],
        ])
        .unwrap();
        let agg = AggregationSpec::componentwise(vec![
            Utility::Exponential { gamma: 1.0 },
            Utility::Exponential { gamma: 2.0 },
            Utility::Power { eta: 3.0 },
        ])
        .unwrap();
        for acc in [
            AcceptanceSpec::ExpectationFloor { u0: -0.2 },
            AcceptanceSpec::ExpectedShortfall { level: 0.3 },
            AcceptanceSpec::Nonnegative,
        ] {
            let r = rho(&x, &agg, &acc, &s, &SolverOptions::default()).unwrap();
            assert_eq!(
                r.status,
                PrimalStatus::Optimal,
                "{}: {:?}",
                acc.name(),
                r.iterations
            );
            assert!(
                r.value.to_f64() - r.lower_bound.to_f64() <= 1e-6 * r.value.to_f64().abs().max(1.0)
            );
        }
    }

    #[test]
    fn unequal_linear_slopes_are_unbounded() {
        let s = ScenarioSpace::new(vec![0.3, 0.3, 0.4]).unwrap();
        let agg = AggregationSpec::componentwise(vec![
            Utility::Linear { slope: 1.5 },
            Utility::Linear { slope: 1.4 },
        ])
        .unwrap();
        let acc = AcceptanceSpec::ExpectationFloor { u0: -0.1 };
        let r = rho(
            &RandomVector::zeros(2, 3),
            &agg,
            &acc,
            &s,
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, ExtReal::NegInf);
        assert!(r.iterations < 50, "{}", r.iterations);
    }
}
