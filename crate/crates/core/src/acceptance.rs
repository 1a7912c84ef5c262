//! Acceptance sets for aggregated outcomes.
//!
//! Each kind provides membership, the lower support function
//! `sigma_A(W) = inf_{U in A} E[U W]`, and the cash-additive risk measure
//! `rho_A(U) = inf { m : U + m in A }`. Two linear descriptions are exposed
//! to the solvers: membership of `U` as linear constraints, and the barrier
//! cone parameterized so that `sigma_A` is linear in the parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::{ExtReal, UNBOUNDED_CAP};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scenario::{essential_inf, ScenarioSpace};

/// Tolerance on the defining inequalities in [`AcceptanceSpec::contains`].
pub const CONTAINS_TOL: f64 = 1e-9;

/// Relative tolerance used to decide that a weight is constant.
pub const CONSTANT_WEIGHT_TOL: f64 = 1e-9;

/// Cumulative probabilities within this distance of a level count as equal to it.
const LEVEL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AcceptanceSpec {
    /// `A = { U >= 0 }`.
    Nonnegative,
    /// `A = { E[U] >= u0 }` with `u0 <= 0`.
    ExpectationFloor { u0: f64 },
    /// `A = { ES_level(U) <= 0 }`.
    ExpectedShortfall { level: f64 },
    /// `A = { E[U W_j] >= a_j for every j }` with `W_j >= 0` and `a_j <= 0`.
    Polyhedral {
        weights: Vec<Vec<f64>>,
        bounds: Vec<f64>,
    },
}

/// Where the barrier-cone parameters of an acceptance kind live inside a linear program.
pub(crate) struct BarrierEmbedding {
    /// `(variable, coefficient)` pairs with `sigma_A(W) = sum coef * var`.
    pub sigma: Vec<(usize, f64)>,
}

impl AcceptanceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AcceptanceSpec::Nonnegative => "nonnegative",
            AcceptanceSpec::ExpectationFloor { .. } => "expectation_floor",
            AcceptanceSpec::ExpectedShortfall { .. } => "expected_shortfall",
            AcceptanceSpec::Polyhedral { .. } => "polyhedral",
        }
    }

    /// Checks parameters against the space, including `0 in A`.
    pub fn validate(&self, space: &ScenarioSpace) -> Result<()> {
        match self {
            AcceptanceSpec::Nonnegative => {}
            AcceptanceSpec::ExpectationFloor { u0 } => {
                if !u0.is_finite() || *u0 > 0.0 {
                    return Err(Error::validation(
                        "0 in A",
                        format!("expectation floor u0 = {u0} must be <= 0"),
                    ));
                }
            }
            AcceptanceSpec::ExpectedShortfall { level } => {
                if !(*level > 0.0 && *level < 1.0) {
                    return Err(Error::validation(
                        "shortfall level in (0, 1)",
                        format!("level {level} is out of range"),
                    ));
                }
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => {
                if weights.len() != bounds.len() {
                    return Err(Error::dimension(format!(
                        "{} polyhedral weights but {} bounds",
                        weights.len(),
                        bounds.len()
                    )));
                }
                for (j, w) in weights.iter().enumerate() {
                    space.check_len(w.len(), "polyhedral weight")?;
                    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::validation(
                            "nonnegative weights",
                            format!("weight {j} has a negative entry"),
                        ));
                    }
                }
                if let Some(a) = bounds.iter().find(|a| !a.is_finite() || **a > 0.0) {
                    return Err(Error::validation(
                        "0 in A",
                        format!("polyhedral bound {a} must be <= 0"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cones are closed under positive scaling, so their support function is `0` on the barrier cone.
    pub fn is_conic(&self) -> bool {
        match self {
            AcceptanceSpec::Nonnegative | AcceptanceSpec::ExpectedShortfall { .. } => true,
            AcceptanceSpec::ExpectationFloor { u0 } => *u0 == 0.0,
            AcceptanceSpec::Polyhedral { bounds, .. } => bounds.iter().all(|a| *a == 0.0),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, AcceptanceSpec::ExpectedShortfall { .. })
    }

    /// A strictly positive element of the barrier cone, if one exists.
    pub fn strictly_positive_direction(&self, space: &ScenarioSpace) -> Option<Vec<f64>> {
        match self {
            AcceptanceSpec::Polyhedral { weights, .. } => {
                let mut w = vec![0.0; space.len()];
                for row in weights {
                    w.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                }
                if w.iter().all(|v| *v > 0.0) {
                    Some(w)
                } else {
                    None
                }
            }
            _ => Some(vec![1.0; space.len()]),
        }
    }

    pub fn contains(&self, u: &[f64], space: &ScenarioSpace) -> bool {
        match self {
            AcceptanceSpec::Nonnegative => u.iter().all(|v| *v >= -CONTAINS_TOL),
            AcceptanceSpec::ExpectationFloor { u0 } => space.expectation(u) >= u0 - CONTAINS_TOL,
            AcceptanceSpec::ExpectedShortfall { level } => {
                es_level(u, *level, space) <= CONTAINS_TOL
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => weights
                .iter()
                .zip(bounds)
                .all(|(w, a)| space.expectation_product(u, w) >= a - CONTAINS_TOL),
        }
    }

    /// `sigma_A(W) = inf_{U in A} E[U W]`.
    pub fn support_function(&self, w: &[f64], space: &ScenarioSpace) -> Result<ExtReal> {
        space.check_len(w.len(), "weight")?;
        Ok(match self {
            AcceptanceSpec::Nonnegative => {
                if w.iter().all(|v| *v >= 0.0) {
                    ExtReal::ZERO
                } else {
                    ExtReal::NegInf
                }
            }
            AcceptanceSpec::ExpectationFloor { u0 } => {
                let mean = space.expectation(w);
                let constant = w
                    .iter()
                    .all(|v| (v - mean).abs() <= CONSTANT_WEIGHT_TOL * mean.abs());
                if constant && mean >= 0.0 {
                    ExtReal::Finite(mean * u0)
                } else {
                    ExtReal::NegInf
                }
            }
            AcceptanceSpec::ExpectedShortfall { level } => {
                let cap = space.expectation(w) / level;
                if w.iter()
                    .all(|v| *v >= 0.0 && *v <= cap + LEVEL_TOL * (1.0 + cap.abs()))
                {
                    ExtReal::ZERO
                } else {
                    ExtReal::NegInf
                }
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => {
                let mut lp = LinearProgram::new();
                let u: Vec<usize> = (0..space.len())
                    .map(|k| lp.add_free_var(space.prob(k) * w[k]))
                    .collect();
                for (wj, aj) in weights.iter().zip(bounds) {
                    let coefs = u
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| (v, space.prob(k) * wj[k]))
                        .collect();
                    lp.add_row(coefs, Relation::Ge, *aj);
                }
                match lp.minimize() {
                    LpOutcome::Optimal(s) => ExtReal::Finite(s.objective),
                    LpOutcome::Unbounded => ExtReal::NegInf,
                    LpOutcome::Infeasible => {
                        return Err(Error::LinearProgram(
                            "polyhedral acceptance set reported empty".into(),
                        ))
                    }
                    LpOutcome::IterationLimit => {
                        return Err(Error::LinearProgram(
                            "iteration limit in polyhedral support function".into(),
                        ))
                    }
                }
            }
        })
    }

    pub fn in_barrier_cone(&self, w: &[f64], space: &ScenarioSpace) -> Result<bool> {
        Ok(self.support_function(w, space)? > ExtReal::NegInf)
    }

    /// `rho_A(U) = inf { m : U + m in A }` by bisection on `m`.
    ///
    /// The upper end `-ess inf U` is always acceptable. The lower end is widened
    /// geometrically; if `U + m` is still acceptable below `-1e9` the result is `-inf`.
    pub fn rho_a(&self, u: &[f64], space: &ScenarioSpace, tol: f64) -> ExtReal {
        assert!(tol > 0.0);
        let accept = |m: f64| {
            let shifted: Vec<f64> = u.iter().map(|v| v + m).collect();
            self.contains(&shifted, space)
        };
        let mut hi = -essential_inf(u);
        let mut step = 1.0;
        let mut lo = hi - step;
        while accept(lo) {
            hi = lo;
            step *= 2.0;
            lo = hi - step;
            if lo < -UNBOUNDED_CAP {
                return ExtReal::NegInf;
            }
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if accept(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        ExtReal::Finite(hi)
    }

    /// Closed form of `rho_A(U)` together with a density `Q` (with `E[Q] = 1`)
    /// attaining it, i.e. `rho_A(U + c) >= rho_A(U) - E[Q c]` for every `c`.
    pub fn risk(&self, u: &[f64], space: &ScenarioSpace) -> (ExtReal, Option<Vec<f64>>) {
        let n = space.len();
        match self {
            AcceptanceSpec::Nonnegative => {
                let (arg, min) =
                    u.iter()
                        .enumerate()
                        .fold(
                            (0, f64::INFINITY),
                            |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
                        );
                let mut q = vec![0.0; n];
                q[arg] = 1.0 / space.prob(arg);
                (ExtReal::Finite(-min), Some(q))
            }
            AcceptanceSpec::ExpectationFloor { u0 } => (
                ExtReal::Finite(u0 - space.expectation(u)),
                Some(vec![1.0; n]),
            ),
            AcceptanceSpec::ExpectedShortfall { level } => {
                let q = es_density(u, *level, space);
                (ExtReal::Finite(-space.expectation_product(u, &q)), Some(q))
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => {
                let mut best: Option<(f64, usize)> = None;
                for (j, (w, a)) in weights.iter().zip(bounds).enumerate() {
                    let mass = space.expectation(w);
                    if mass <= 0.0 {
                        continue;
                    }
                    let v = (a - space.expectation_product(u, w)) / mass;
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, j));
                    }
                }
                match best {
                    Some((v, j)) => {
                        let mass = space.expectation(&weights[j]);
                        (
                            ExtReal::Finite(v),
                            Some(weights[j].iter().map(|x| x / mass).collect()),
                        )
                    }
                    None => (ExtReal::NegInf, None),
                }
            }
        }
    }

    /// Adds `U in A` as linear constraints on the variables `u`.
    pub(crate) fn add_membership(
        &self,
        lp: &mut LinearProgram,
        u: &[usize],
        space: &ScenarioSpace,
    ) {
        let p = space.probs();
        match self {
            AcceptanceSpec::Nonnegative => {
                for &v in u {
                    lp.add_row(vec![(v, 1.0)], Relation::Ge, 0.0);
                }
            }
            AcceptanceSpec::ExpectationFloor { u0 } => {
                lp.add_row(
                    u.iter().zip(p).map(|(&v, &pk)| (v, pk)).collect(),
                    Relation::Ge,
                    *u0,
                );
            }
            AcceptanceSpec::ExpectedShortfall { level } => {
                // ES_level(U) = min_c { c + E[(-U - c)^+] / level }
                let c = lp.add_free_var(0.0);
                let mut budget = vec![(c, 1.0)];
                for (&v, &pk) in u.iter().zip(p) {
                    let s = lp.add_nonneg_var(0.0);
                    lp.add_row(vec![(s, 1.0), (v, 1.0), (c, 1.0)], Relation::Ge, 0.0);
                    budget.push((s, pk / level));
                }
                lp.add_row(budget, Relation::Le, 0.0);
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => {
                for (w, a) in weights.iter().zip(bounds) {
                    let coefs = u
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| (v, p[k] * w[k]))
                        .collect();
                    lp.add_row(coefs, Relation::Ge, *a);
                }
            }
        }
    }

    /// Constrains the nonnegative variables `w` to the barrier cone and returns
    /// `sigma_A(W)` as a linear form in auxiliary variables.
    pub(crate) fn add_barrier(
        &self,
        lp: &mut LinearProgram,
        w: &[usize],
        space: &ScenarioSpace,
    ) -> BarrierEmbedding {
        let p = space.probs();
        match self {
            AcceptanceSpec::Nonnegative => BarrierEmbedding { sigma: Vec::new() },
            AcceptanceSpec::ExpectationFloor { u0 } => {
                let lambda = lp.add_nonneg_var(0.0);
                for &v in w {
                    lp.add_row(vec![(v, 1.0), (lambda, -1.0)], Relation::Eq, 0.0);
                }
                BarrierEmbedding {
                    sigma: vec![(lambda, *u0)],
                }
            }
            AcceptanceSpec::ExpectedShortfall { level } => {
                for k in 0..w.len() {
                    let mut coefs: Vec<(usize, f64)> =
                        w.iter().zip(p).map(|(&x, &pk)| (x, -pk / level)).collect();
                    coefs[k].1 += 1.0;
                    lp.add_row(coefs, Relation::Le, 0.0);
                }
                BarrierEmbedding { sigma: Vec::new() }
            }
            AcceptanceSpec::Polyhedral { weights, bounds } => {
                let kappa: Vec<usize> = weights.iter().map(|_| lp.add_nonneg_var(0.0)).collect();
                for (k, &v) in w.iter().enumerate() {
                    let mut coefs = vec![(v, 1.0)];
                    coefs.extend(kappa.iter().zip(weights).map(|(&c, wj)| (c, -wj[k])));
                    lp.add_row(coefs, Relation::Eq, 0.0);
                }
                BarrierEmbedding {
                    sigma: kappa.iter().zip(bounds).map(|(&c, &a)| (c, a)).collect(),
                }
            }
        }
    }
}

/// Scenario order by ascending value, ties broken by index.
fn ascending(u: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
    idx
}

/// `VaR_level(U) = inf { m : P(U + m < 0) <= level }`.
///
/// With values sorted upwards and cumulative probabilities `C_k`, this is
/// `-u_(k)` for the first `k` with `C_k > level`.
pub fn var_level(u: &[f64], level: f64, space: &ScenarioSpace) -> f64 {
    assert!(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
    let order = ascending(u);
    let mut cum = 0.0;
    for &k in &order {
        cum += space.prob(k);
        if cum > level + LEVEL_TOL {
            return -u[k];
        }
    }
    -u[*order.last().expect("nonempty")]
}

/// `ES_level(U) = (1 / level) * integral_0^level VaR_mu(U) dmu`, integrated exactly
/// over the breakpoints of the piecewise constant map `mu -> VaR_mu(U)`.
pub fn es_level(u: &[f64], level: f64, space: &ScenarioSpace) -> f64 {
    assert!(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
    let order = ascending(u);
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &k in &order {
        let cum = prev + space.prob(k);
        let width = (cum.min(level) - prev).max(0.0);
        acc += width * -u[k];
        prev = cum;
        if prev >= level {
            break;
        }
    }
    acc / level
}

/// Worst-case density of Expected Shortfall: `ES_level(U) = -E[Q U]`.
pub fn es_density(u: &[f64], level: f64, space: &ScenarioSpace) -> Vec<f64> {
    let order = ascending(u);
    let mut q = vec![0.0; u.len()];
    let mut prev = 0.0;
    for &k in &order {
        let cum = prev + space.prob(k);
        let width = (cum.min(level) - prev).max(0.0);
        q[k] = width / (level * space.prob(k));
        prev = cum;
        if prev >= level {
            break;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> ScenarioSpace {
        ScenarioSpace::new(vec![0.5, 0.5]).unwrap()
    }

    /// Riemann sum of VaR_mu over a midpoint grid of `steps` levels.
    fn es_riemann(u: &[f64], level: f64, space: &ScenarioSpace, steps: usize) -> f64 {
        let h = level / steps as f64;
        (0..steps)
            .map(|i| var_level(u, (i as f64 + 0.5) * h, space))
            .sum::<f64>()
            * h
            / level
    }

    #[test]
    fn var_examples() {
        let s = half();
        assert_eq!(var_level(&[-1.0, 3.0], 0.25, &s), 1.0);
        assert_eq!(var_level(&[-1.0, 3.0], 0.5, &s), -3.0);
        assert_eq!(var_level(&[2.0, 2.0], 0.3, &s), -2.0);
    }

    #[test]
    fn es_examples() {
        let s = half();
        assert!((es_level(&[-1.0, 3.0], 0.5, &s) - 1.0).abs() < 1e-15);
        assert!((es_level(&[-1.0, 3.0], 0.75, &s) + 1.0 / 3.0).abs() < 1e-15);
        assert!((es_level(&[4.0, 4.0], 0.1, &s) + 4.0).abs() < 1e-15);
        assert!((es_riemann(&[-1.0, 3.0], 0.8, &s, 10_000) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn contains_examples() {
        let s = half();
        let kinds = [
            AcceptanceSpec::Nonnegative,
            AcceptanceSpec::ExpectationFloor { u0: 0.0 },
            AcceptanceSpec::ExpectedShortfall { level: 0.5 },
            AcceptanceSpec::Polyhedral {
                weights: vec![vec![1.0, 0.0]],
                bounds: vec![-1.0],
            },
        ];
        for k in &kinds {
            assert!(k.contains(&[0.0, 0.0], &s));
        }
        assert!(AcceptanceSpec::ExpectationFloor { u0: 0.0 }.contains(&[-1.0, 3.0], &s));
        assert!(!AcceptanceSpec::ExpectedShortfall { level: 0.5 }.contains(&[-1.0, 3.0], &s));
    }

    #[test]
    fn support_function_examples() {
        let s = half();
        assert_eq!(
            AcceptanceSpec::Nonnegative
                .support_function(&[1.0, 2.0], &s)
                .unwrap(),
            ExtReal::ZERO
        );
        assert_eq!(
            AcceptanceSpec::Nonnegative
                .support_function(&[1.0, -2.0], &s)
                .unwrap(),
            ExtReal::NegInf
        );
        let floor = AcceptanceSpec::ExpectationFloor { u0: -1.0 };
        assert_eq!(
            floor.support_function(&[2.0, 2.0], &s).unwrap(),
            ExtReal::Finite(-2.0)
        );
        assert_eq!(
            floor.support_function(&[2.0, 1.0], &s).unwrap(),
            ExtReal::NegInf
        );
        let es = AcceptanceSpec::ExpectedShortfall { level: 0.5 };
        assert_eq!(es.support_function(&[2.0, 0.0], &s).unwrap(), ExtReal::ZERO);
        let es = AcceptanceSpec::ExpectedShortfall { level: 0.75 };
        assert_eq!(
            es.support_function(&[2.0, 0.0], &s).unwrap(),
            ExtReal::NegInf
        );
        assert!(es.in_barrier_cone(&[1.0, 1.5], &s).unwrap());
        assert!(!es.in_barrier_cone(&[2.0, 0.0], &s).unwrap());

        let poly = AcceptanceSpec::Polyhedral {
            weights: vec![vec![1.0, 0.0], vec![1.0, 1.0]],
            bounds: vec![-1.0, -0.5],
        };
        // W = 2 W_1 + W_2 -> sigma = -2 - 0.5
        let v = poly
            .support_function(&[3.0, 1.0], &s)
            .unwrap()
            .finite()
            .unwrap();
        assert!((v + 2.5).abs() < 1e-9);
        assert_eq!(
            poly.support_function(&[0.0, 1.0], &s).unwrap(),
            ExtReal::NegInf
        );
    }

    #[test]
    fn rho_a_examples() {
        let s = half();
        let u = [-1.0, 3.0];
        let tol = 1e-9;
        let floor = AcceptanceSpec::ExpectationFloor { u0: 0.0 }
            .rho_a(&u, &s, tol)
            .finite()
            .unwrap();
        assert!((floor + 1.0).abs() < 2.0 * tol);
        let es = AcceptanceSpec::ExpectedShortfall { level: 0.5 }
            .rho_a(&u, &s, tol)
            .finite()
            .unwrap();
        assert!((es - 1.0).abs() < 2.0 * tol);
        let nn = AcceptanceSpec::Nonnegative
            .rho_a(&u, &s, tol)
            .finite()
            .unwrap();
        assert!((nn - 1.0).abs() < 2.0 * tol);
        let everything = AcceptanceSpec::Polyhedral {
            weights: vec![vec![0.0, 0.0]],
            bounds: vec![0.0],
        };
        assert_eq!(everything.rho_a(&u, &s, tol), ExtReal::NegInf);
        assert_eq!(everything.risk(&u, &s).0, ExtReal::NegInf);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let s = half();
        assert!(AcceptanceSpec::ExpectationFloor { u0: 0.5 }
            .validate(&s)
            .is_err());
        assert!(AcceptanceSpec::ExpectedShortfall { level: 1.0 }
            .validate(&s)
            .is_err());
        assert!(AcceptanceSpec::Polyhedral {
            weights: vec![vec![1.0]],
            bounds: vec![0.0]
        }
        .validate(&s)
        .is_err());
        assert!(AcceptanceSpec::Polyhedral {
            weights: vec![vec![1.0, -1.0]],
            bounds: vec![0.0]
        }
        .validate(&s)
        .is_err());
    }

    fn space_and_values(n: usize) -> impl Strategy<Value = (ScenarioSpace, Vec<f64>)> {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_map(|(w, u)| {
                let total: f64 = w.iter().sum();
                let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
                let fix = 1.0 - probs.iter().sum::<f64>();
                let mut probs = probs;
                probs[0] += fix;
                (ScenarioSpace::new(probs).unwrap(), u)
            })
    }

    fn kinds(n: usize) -> Vec<AcceptanceSpec> {
        vec![
            AcceptanceSpec::Nonnegative,
            AcceptanceSpec::ExpectationFloor { u0: -0.5 },
            AcceptanceSpec::ExpectedShortfall { level: 0.3 },
            AcceptanceSpec::Polyhedral {
                weights: vec![vec![1.0; n], (0..n).map(|k| (k % 2) as f64 + 0.5).collect()],
                bounds: vec![-0.2, 0.0],
            },
        ]
    }

    proptest! {
        #[test]
        fn closed_form_risk_matches_bisection((s, u) in space_and_values(5), c in -3.0f64..3.0) {
            for k in kinds(5) {
                let bis = k.rho_a(&u, &s, 1e-10).finite().unwrap();
                let (closed, q) = k.risk(&u, &s);
                let closed = closed.finite().unwrap();
                prop_assert!((bis - closed).abs() < 1e-8, "{:?}: {} vs {}", k, bis, closed);
                let q = q.unwrap();
                prop_assert!((s.expectation(&q) - 1.0).abs() < 1e-12);
                // cash additivity
                let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
                let moved = k.rho_a(&shifted, &s, 1e-10).finite().unwrap();
                prop_assert!((moved - bis + c).abs() < 1e-8);
                // acceptance and risk agree
                prop_assert_eq!(k.contains(&u, &s), closed <= 1e-9);
            }
        }

        #[test]
        fn support_function_is_superadditive_and_homogeneous(
            (s, w1) in space_and_values(4),
            w2 in prop::collection::vec(0.0f64..3.0, 4),
            t in 0.1f64..10.0,
        ) {
            let w1: Vec<f64> = w1.iter().map(|v| v.abs()).collect();
            for k in kinds(4) {
                let a = k.support_function(&w1, &s).unwrap();
                let b = k.support_function(&w2, &s).unwrap();
                let sum: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| x + y).collect();
                let ab = k.support_function(&sum, &s).unwrap();
                if a.is_finite() && b.is_finite() {
                    prop_assert!(ab.to_f64() >= a.to_f64() + b.to_f64() - 1e-8);
                }
                let scaled: Vec<f64> = w1.iter().map(|v| v * t).collect();
                let at = k.support_function(&scaled, &s).unwrap();
                if let (ExtReal::Finite(x), ExtReal::Finite(y)) = (a, at) {
                    prop_assert!((y - t * x).abs() < 1e-8 * (1.0 + y.abs()));
                }
            }
        }

        #[test]
        fn barrier_cone_lies_in_the_nonnegative_orthant((s, w) in space_and_values(4)) {
            if w.iter().any(|v| *v < 0.0) {
                for k in kinds(4) {
                    prop_assert!(!k.in_barrier_cone(&w, &s).unwrap());
                }
            }
        }

        #[test]
        fn es_breakpoints_bounded_by_riemann_error((s, u) in space_and_values(6), level in 0.01f64..0.99) {
            // each breakpoint inside a cell costs at most h * jump / level
            let exact = es_level(&u, level, &s);
            let steps = 10_000;
            let spread = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - u.iter().cloned().fold(f64::INFINITY, f64::min);
            let bound = spread / steps as f64 + 1e-9;
            prop_assert!((exact - es_riemann(&u, level, &s, steps)).abs() <= bound);
        }

        #[test]
        fn es_breakpoints_match_aligned_riemann_sum(
            units in prop::collection::vec(1u32..20, 2..8),
            u in prop::collection::vec(-5.0f64..5.0, 8),
            pick in 0usize..12,
        ) {
            // probabilities in hundredths and levels l/100 with l dividing 10^4 put every
            // breakpoint on a cell boundary of the 10^4-point grid
            let levels = [1, 2, 4, 5, 8, 10, 16, 20, 25, 40, 50, 80];
            let total: u32 = units.iter().sum();
            let mut hundredths: Vec<u32> = units.iter().map(|v| (v * 100 / total).max(1)).collect();
            let assigned: u32 = hundredths.iter().sum();
            if assigned > 100 {
                return Ok(());
            }
            hundredths[0] += 100 - assigned;
            let s = ScenarioSpace::new(hundredths.iter().map(|h| *h as f64 / 100.0).collect()).unwrap();
            let u = &u[..s.len()];
            let level = levels[pick] as f64 / 100.0;
            let exact = es_level(u, level, &s);
            prop_assert!((exact - es_riemann(u, level, &s, 10_000)).abs() <= 1e-6);
        }
    }
}
