//! Penalty functions and the support function of the systemic acceptance set.
//!
//! For a fixed dual point `Z` the penalty is
//!
//! ```text
//! alpha(Z) = sup_{W in bar(A)} sigma_A(W) + sum_w p_w W_w Lambda*(Z_w / W_w)
//! ```
//!
//! Splitting `Z_w` into one multiplier per aggregation term turns the scenario
//! term into a sum of scalar perspectives `W u*(zeta / W)`. Linear and capped
//! terms become linear constraints, smooth terms concave functions of a single
//! `W_w`, handled by tangent cuts. The barrier cone is linear for every
//! acceptance kind, so each evaluation is a sequence of small linear programs.

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::AggregationSpec;
use crate::error::{Error, Result};
use crate::extended::{ExtReal, UNBOUNDED_CAP};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scenario::{DualVector, ScenarioSpace};
use crate::utility::Utility;

/// Relative gap at which the tangent-cut iteration stops.
const PENALTY_GAP: f64 = 1e-10;
const PENALTY_MAX_ITER: usize = 500;
/// Smallest positive lower bound accepted as evidence that a strictly positive weight exists.
const POSITIVITY_TOL: f64 = 1e-9;
/// Weight assigned to a strictly positive direction when moving the maximizer off the boundary.
const INTERIOR_MIX: f64 = 1e-9;
const WEIGHT_CAP: f64 = 1e8;
/// Relative disagreement allowed between terms that pin the same weight.
const FIXED_WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyEval {
    pub value: ExtReal,
    /// Inner maximizer over the barrier cone.
    pub w_star: Option<Vec<f64>>,
    pub strict_positive_branch: bool,
    pub converged: bool,
    /// Upper bound from the cut model; equals `value` when the evaluation is exact.
    pub upper_bound: ExtReal,
}

impl PenaltyEval {
    fn neg_inf(strict: bool) -> Self {
        PenaltyEval {
            value: ExtReal::NegInf,
            w_star: None,
            strict_positive_branch: strict,
            converged: true,
            upper_bound: ExtReal::NegInf,
        }
    }
}

/// A smooth perspective term `p_w W_w u*(zeta / W_w)`.
#[derive(Clone, Debug)]
struct Smooth {
    scenario: usize,
    utility: Utility,
    zeta: f64,
}

impl Smooth {
    fn value(&self, w: f64) -> f64 {
        self.utility.perspective(self.zeta, w).to_f64()
    }

    fn slope(&self, w: f64) -> f64 {
        self.utility.perspective_dw(self.zeta, w)
    }

    fn peak(&self) -> f64 {
        self.zeta / self.utility.slope_at_zero()
    }

    /// Smallest admissible weight: power terms need `W >= zeta`, exponential terms `W > 0`.
    fn floor(&self) -> f64 {
        match self.utility {
            Utility::Power { .. } => self.zeta,
            _ => 0.0,
        }
    }
}

/// The scenario-decomposed objective for one `Z`.
#[derive(Clone, Debug)]
struct Objective {
    lower: Vec<f64>,
    fixed: Vec<Option<f64>>,
    linear: Vec<f64>,
    constant: Vec<f64>,
    smooth: Vec<Smooth>,
    /// Scenarios where the weight has to be strictly positive.
    positive: Vec<bool>,
}

impl Objective {
    /// `None` when the objective is `-inf` for every `W`.
    fn build(z: &DualVector, agg: &AggregationSpec) -> Result<Option<Objective>> {
        let Some(terms) = agg.terms() else {
            return Err(Error::Unsupported(format!(
                "penalty functions need a term decomposition; '{}' has none",
                agg.name()
            )));
        };
        let n = z.n();
        let mut obj = Objective {
            lower: vec![0.0; n],
            fixed: vec![None; n],
            linear: vec![0.0; n],
            constant: vec![0.0; n],
            smooth: Vec::new(),
            positive: vec![false; n],
        };
        for w in 0..n {
            let Some(zeta) = agg.split_dual(&z.scenario(w)) else {
                return Ok(None);
            };
            for (term, zk) in terms.iter().zip(zeta) {
                if zk < 0.0 {
                    return Ok(None);
                }
                match term.utility {
                    Utility::Linear { slope } => {
                        let v = zk / slope;
                        // terms pinning W must agree up to round-off in z / slope
                        match obj.fixed[w] {
                            Some(prev)
                                if (prev - v).abs() > FIXED_WEIGHT_TOL * prev.abs().max(1.0) =>
                            {
                                return Ok(None)
                            }
                            Some(_) => {}
                            None => obj.fixed[w] = Some(v),
                        }
                    }
                    Utility::LinearCapped { cap } => {
                        obj.lower[w] = obj.lower[w].max(zk);
                        obj.constant[w] += cap * zk;
                        obj.linear[w] -= cap;
                    }
                    Utility::Exponential { .. } if zk == 0.0 => obj.linear[w] -= 1.0,
                    Utility::Power { eta } if zk == 0.0 => obj.linear[w] -= 1.0 / (eta - 1.0),
                    utility => {
                        let s = Smooth {
                            scenario: w,
                            utility,
                            zeta: zk,
                        };
                        obj.lower[w] = obj.lower[w].max(s.floor());
                        obj.positive[w] = true;
                        obj.smooth.push(s);
                    }
                }
            }
            if let Some(v) = obj.fixed[w] {
                if v < obj.lower[w] {
                    return Ok(None);
                }
                if obj.positive[w] && v <= 0.0 {
                    return Ok(None);
                }
            }
        }
        Ok(Some(obj))
    }

    /// Adds the weight variables with their bounds.
    fn add_weights(&self, lp: &mut LinearProgram, cap: f64) -> Vec<usize> {
        (0..self.lower.len())
            .map(|w| match self.fixed[w] {
                Some(v) => lp.add_var(v, v, 0.0),
                None => lp.add_var(self.lower[w], cap.max(self.lower[w]), 0.0),
            })
            .collect()
    }

    /// True objective at `W`, with `sigma` the barrier part already evaluated.
    fn evaluate(&self, w: &[f64], sigma: f64, space: &ScenarioSpace) -> f64 {
        let mut total = sigma;
        for (k, &wk) in w.iter().enumerate() {
            total += space.prob(k) * (self.linear[k] * wk + self.constant[k]);
        }
        for s in &self.smooth {
            total += space.prob(s.scenario) * s.value(w[s.scenario]);
        }
        total
    }
}

struct Setup<'a> {
    acc: &'a AcceptanceSpec,
    space: &'a ScenarioSpace,
    normalized: bool,
}

impl Setup<'_> {
    /// Weight variables constrained to the barrier cone (and the slice if normalized).
    fn base(&self, obj: &Objective, cap: f64) -> (LinearProgram, Vec<usize>, Vec<(usize, f64)>) {
        let mut lp = LinearProgram::new();
        let w = obj.add_weights(&mut lp, cap);
        let embedding = self.acc.add_barrier(&mut lp, &w, self.space);
        if self.normalized {
            let coefs = w
                .iter()
                .enumerate()
                .map(|(k, &v)| (v, self.space.prob(k)))
                .collect();
            lp.add_row(coefs, Relation::Eq, 1.0);
        }
        (lp, w, embedding.sigma)
    }

    /// Largest `s <= 1` with `W_w >= s` on the flagged scenarios; `None` if the domain is empty.
    fn positivity(&self, obj: &Objective, flags: &[bool]) -> Option<(f64, Vec<f64>)> {
        let (mut lp, w, _) = self.base(obj, f64::INFINITY);
        let s = lp.add_var(f64::NEG_INFINITY, 1.0, 1.0);
        let mut any = false;
        for (k, &flag) in flags.iter().enumerate() {
            if flag {
                lp.add_row(vec![(w[k], 1.0), (s, -1.0)], Relation::Ge, 0.0);
                any = true;
            }
        }
        if !any {
            lp.add_row(vec![(s, 1.0)], Relation::Eq, 1.0);
        }
        match lp.maximize() {
            LpOutcome::Optimal(sol) => Some((sol.objective, w.iter().map(|&v| sol.x[v]).collect())),
            _ => None,
        }
    }

    fn maximize(&self, obj: &Objective) -> PenaltyEval {
        let cap = if self.normalized {
            f64::INFINITY
        } else {
            WEIGHT_CAP
        };
        let (mut lp, w, sigma) = self.base(obj, cap);
        for (k, &v) in w.iter().enumerate() {
            lp.set_cost(v, self.space.prob(k) * obj.linear[k]);
        }
        for &(v, c) in &sigma {
            lp.set_cost(v, c);
        }
        let constant: f64 = (0..w.len())
            .map(|k| self.space.prob(k) * obj.constant[k])
            .sum();
        let taus: Vec<usize> = obj
            .smooth
            .iter()
            .map(|s| lp.add_free_var(self.space.prob(s.scenario)))
            .collect();
        let add_cut = |lp: &mut LinearProgram, j: usize, at: f64| -> bool {
            let s = &obj.smooth[j];
            let (h, g) = (s.value(at), s.slope(at));
            if !h.is_finite() || !g.is_finite() {
                return false;
            }
            // tau <= h + g (W - at)
            lp.add_row(
                vec![(taus[j], 1.0), (w[s.scenario], -g)],
                Relation::Le,
                h - g * at,
            );
            true
        };
        for (j, s) in obj.smooth.iter().enumerate() {
            let peak = s.peak();
            let mults: &[f64] = match s.utility {
                Utility::Power { .. } => &[1.0, 1.01, 1.1, 2.0, 10.0, 100.0],
                _ => &[1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0],
            };
            for m in mults {
                add_cut(&mut lp, j, peak * m);
            }
        }

        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut upper = f64::INFINITY;
        let mut converged = false;
        for _ in 0..PENALTY_MAX_ITER {
            let sol = match lp.maximize() {
                LpOutcome::Optimal(sol) => sol,
                LpOutcome::Infeasible => return PenaltyEval::neg_inf(false),
                _ => break,
            };
            upper = upper.min(sol.objective + constant);
            // simplex output may sit a rounding error below a bound
            let wv: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(k, &v)| obj.fixed[k].unwrap_or(sol.x[v].max(obj.lower[k])))
                .collect();
            let sig: f64 = sigma.iter().map(|&(v, c)| c * sol.x[v]).sum();
            let value = obj.evaluate(&wv, sig, self.space);
            if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, wv.clone()));
            }
            let lower = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
            if upper - lower <= PENALTY_GAP * (1.0 + lower.abs()) {
                converged = true;
                break;
            }
            let mut added = false;
            for (j, s) in obj.smooth.iter().enumerate() {
                let at = wv[s.scenario];
                let h = s.value(at);
                if sol.x[taus[j]] > h + 1e-13 * (1.0 + h.abs()) || !h.is_finite() {
                    let point = if h.is_finite() {
                        at
                    } else {
                        (at.max(0.0) + 1e-12 * s.peak()).max(s.peak() * 1e-12)
                    };
                    added |= add_cut(&mut lp, j, point);
                }
            }
            if !added {
                converged = upper - lower <= 1e-7 * (1.0 + lower.abs());
                break;
            }
        }
        match best {
            Some((value, w_star)) => PenaltyEval {
                value: ExtReal::Finite(value.min(0.0)),
                w_star: Some(w_star),
                strict_positive_branch: false,
                converged,
                upper_bound: ExtReal::Finite(upper),
            },
            None => PenaltyEval::neg_inf(false),
        }
    }
}

fn penalty(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    strict_positive: bool,
    normalized: bool,
) -> Result<PenaltyEval> {
    z.check_shape(agg.d(), space)?;
    if z.as_slice().iter().any(|v| *v < 0.0) {
        return Ok(PenaltyEval::neg_inf(strict_positive));
    }
    let Some(obj) = Objective::build(z, agg)? else {
        return Ok(PenaltyEval::neg_inf(strict_positive));
    };
    let setup = Setup {
        acc,
        space,
        normalized,
    };

    let needs_positive = obj.positive.iter().any(|&b| b);
    let Some((s, _)) = setup.positivity(&obj, &obj.positive) else {
        return Ok(PenaltyEval::neg_inf(strict_positive));
    };
    if needs_positive && s <= POSITIVITY_TOL {
        return Ok(PenaltyEval::neg_inf(strict_positive));
    }
    let mut eval = setup.maximize(&obj);
    eval.strict_positive_branch = strict_positive;
    if !strict_positive || eval.value.is_neg_inf() {
        return Ok(eval);
    }
    // The supremum over strictly positive weights equals the full supremum as soon as
    // one strictly positive admissible weight exists: move along the segment toward it.
    match setup.positivity(&obj, &vec![true; space.len()]) {
        Some((s, interior)) if s > POSITIVITY_TOL => {
            if let Some(w) = eval.w_star.as_mut() {
                w.iter_mut()
                    .zip(&interior)
                    .for_each(|(a, b)| *a = (1.0 - INTERIOR_MIX) * *a + INTERIOR_MIX * b);
            }
            Ok(eval)
        }
        _ => Ok(PenaltyEval::neg_inf(true)),
    }
}

/// `alpha(Z)`, or `alpha+(Z)` (weights strictly positive) when `strict_positive` is set.
pub fn alpha(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    strict_positive: bool,
) -> Result<PenaltyEval> {
    penalty(z, agg, acc, space, strict_positive, false)
}

/// `alpha~(Z)`: as [`alpha`] with the weights restricted to `E[W] = 1`.
pub fn alpha_tilde(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    strict_positive: bool,
) -> Result<PenaltyEval> {
    penalty(z, agg, acc, space, strict_positive, true)
}

/// Membership of `Z` in the set `D` of dual points with a finite conic penalty.
///
/// Requires a positively homogeneous aggregation and a conic acceptance set.
pub fn conic_membership_d(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
) -> Result<bool> {
    if !agg.is_positively_homogeneous() || !acc.is_conic() {
        return Err(Error::Precondition(format!(
            "conic membership needs a positively homogeneous aggregation and a conic acceptance set, got {} and {}",
            agg.name(),
            acc.name()
        )));
    }
    z.check_shape(agg.d(), space)?;
    if z.as_slice().iter().any(|v| *v < 0.0) {
        return Ok(false);
    }
    let Some(obj) = Objective::build(z, agg)? else {
        return Ok(false);
    };
    let setup = Setup {
        acc,
        space,
        normalized: false,
    };
    Ok(setup.positivity(&obj, &vec![false; space.len()]).is_some())
}

/// `sigma(Z) = inf { E[<X, Z>] : Lambda(X) in A }` over all positions `X`.
pub fn support_systemic(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    tol: f64,
) -> Result<ExtReal> {
    z.check_shape(agg.d(), space)?;
    acc.validate(space)?;
    // the systemic acceptance set is closed under increases
    if z.as_slice().iter().any(|v| *v < 0.0) {
        return Ok(ExtReal::NegInf);
    }
    if z.as_slice().iter().all(|v| *v == 0.0) {
        return Ok(ExtReal::ZERO);
    }
    let Some(terms) = agg.terms() else {
        return Err(Error::Unsupported(format!(
            "support function of '{}' needs a term decomposition",
            agg.name()
        )));
    };
    SystemicModel {
        z,
        terms,
        acc,
        space,
    }
    .solve(tol)
}

struct SystemicModel<'a> {
    z: &'a DualVector,
    terms: Vec<crate::aggregation::Term>,
    acc: &'a AcceptanceSpec,
    space: &'a ScenarioSpace,
}

/// Tangent points for smooth terms before any refinement.
const INITIAL_TANGENTS: [f64; 7] = [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0];
const SUPPORT_MAX_ITER: usize = 500;

impl SystemicModel<'_> {
    fn solve(&self, tol: f64) -> Result<ExtReal> {
        let (d, n) = (self.z.d(), self.z.n());
        let smooth = self.terms.iter().any(|t| !t.utility.is_piecewise_linear());
        // tangent points per (term, scenario)
        let mut tangents: Vec<Vec<Vec<f64>>> = self
            .terms
            .iter()
            .map(|t| {
                vec![
                    if t.utility.is_piecewise_linear() {
                        Vec::new()
                    } else {
                        INITIAL_TANGENTS.to_vec()
                    };
                    n
                ]
            })
            .collect();
        let mut radius = if smooth { 10.0 } else { f64::INFINITY };
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for _ in 0..SUPPORT_MAX_ITER {
            let (outcome, x) = self.solve_model(&tangents, radius);
            let obj = match outcome {
                Outcome::Value(v) => v,
                Outcome::Unbounded => return Ok(ExtReal::NegInf),
            };
            if !smooth {
                return Ok(ExtReal::Finite(obj));
            }
            let on_box = x.iter().any(|v| v.abs() >= radius * (1.0 - 1e-7));
            let mut valid = !on_box;
            if on_box {
                let (bigger, _) = self.solve_model(&tangents, radius * 10.0);
                match bigger {
                    Outcome::Value(v) if v >= obj - 1e-9 * (1.0 + obj.abs()) => valid = true,
                    _ => {
                        if radius * 10.0 <= 1e10 {
                            radius *= 10.0;
                            continue;
                        }
                    }
                }
            }
            if valid {
                lower = lower.max(obj);
            }
            if let Some(ub) = self.repair(&x) {
                upper = upper.min(ub);
            }
            if upper < -UNBOUNDED_CAP {
                return Ok(ExtReal::NegInf);
            }
            if upper - lower <= tol * (1.0 + upper.abs()) {
                return Ok(ExtReal::Finite(upper));
            }
            let mut added = false;
            for (k, term) in self.terms.iter().enumerate() {
                if term.utility.is_piecewise_linear() {
                    continue;
                }
                for w in 0..n {
                    let arg = term.argument(&(0..d).map(|i| x[i * n + w]).collect::<Vec<_>>());
                    let pts = &mut tangents[k][w];
                    if pts
                        .iter()
                        .all(|p| (p - arg).abs() > 1e-12 * (1.0 + arg.abs()))
                    {
                        pts.push(arg);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        Err(Error::Indeterminate {
            iterations: SUPPORT_MAX_ITER,
            best: upper,
        })
    }

    /// Minimizes the pairing over the (outer-approximated) systemic acceptance set.
    /// Returns the objective and the position, flattened row-major.
    fn solve_model(&self, tangents: &[Vec<Vec<f64>>], radius: f64) -> (Outcome, Vec<f64>) {
        let (d, n) = (self.z.d(), self.z.n());
        let p = self.space.probs();
        let mut lp = LinearProgram::new();
        let x: Vec<usize> = (0..d * n)
            .map(|idx| {
                let (i, w) = (idx / n, idx % n);
                lp.add_var(-radius, radius, p[w] * self.z.get(i, w))
            })
            .collect();
        let u: Vec<usize> = (0..n).map(|_| lp.add_free_var(0.0)).collect();
        for w in 0..n {
            let mut total = vec![(u[w], 1.0)];
            for (k, term) in self.terms.iter().enumerate() {
                let t = lp.add_free_var(0.0);
                total.push((t, -1.0));
                let arg: Vec<(usize, f64)> = term
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(i, a)| (x[i * n + w], *a))
                    .collect();
                let mut piece = |slope: f64, intercept: f64| {
                    let mut coefs = vec![(t, 1.0)];
                    coefs.extend(arg.iter().map(|&(v, a)| (v, -slope * a)));
                    lp.add_row(coefs, Relation::Le, intercept);
                };
                if term.utility.is_piecewise_linear() {
                    for (slope, intercept) in term.utility.pieces() {
                        piece(slope, intercept);
                    }
                } else {
                    for &at in &tangents[k][w] {
                        let (h, g) = (term.utility.eval(at), term.utility.derivative(at));
                        if h.is_finite() && g.is_finite() {
                            piece(g, h - g * at);
                        }
                    }
                }
            }
            lp.add_row(total, Relation::Le, 0.0);
        }
        self.acc.add_membership(&mut lp, &u, self.space);
        match lp.minimize() {
            LpOutcome::Optimal(sol) => (
                Outcome::Value(sol.objective),
                x.iter().map(|&v| sol.x[v]).collect(),
            ),
            _ => (Outcome::Unbounded, Vec::new()),
        }
    }

    /// Pairing at the smallest uniform shift of `x` whose aggregate is acceptable.
    fn repair(&self, x: &[f64]) -> Option<f64> {
        let (d, n) = (self.z.d(), self.z.n());
        let aggregate = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|w| {
                    let point: Vec<f64> = (0..d).map(|i| x[i * n + w] + t).collect();
                    self.terms
                        .iter()
                        .map(|term| term.utility.eval(term.argument(&point)))
                        .sum()
                })
                .collect()
        };
        let accept = |t: f64| self.acc.contains(&aggregate(t), self.space);
        let mut hi = -x.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
        if !accept(hi) {
            return None;
        }
        let mut lo = hi - 1.0;
        let mut step = 1.0;
        while accept(lo) {
            hi = lo;
            step *= 2.0;
            lo = hi - step;
            if lo < -1e12 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
            if accept(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mass: f64 = (0..d).map(|i| self.space.expectation(self.z.row(i))).sum();
        let base: f64 = (0..d * n)
            .map(|idx| self.space.prob(idx % n) * self.z.get(idx / n, idx % n) * x[idx])
            .sum();
        Some(base + hi * mass)
    }
}

enum Outcome {
    Value(f64),
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RandomVector;

    fn half() -> ScenarioSpace {
        ScenarioSpace::new(vec![0.5, 0.5]).unwrap()
    }

    fn dv(rows: Vec<Vec<f64>>) -> DualVector {
        RandomVector::from_rows(rows).unwrap()
    }

    #[test]
    fn support_examples() {
        let s = half();
        let sum = AggregationSpec::sum(2);
        let nn = AcceptanceSpec::Nonnegative;
        assert_eq!(
            support_systemic(
                &dv(vec![vec![1.0, 1.0], vec![1.0, 1.0]]),
                &sum,
                &nn,
                &s,
                1e-9
            )
            .unwrap(),
            ExtReal::ZERO
        );
        assert_eq!(
            support_systemic(
                &dv(vec![vec![2.0, 0.0], vec![0.0, 2.0]]),
                &sum,
                &nn,
                &s,
                1e-9
            )
            .unwrap(),
            ExtReal::NegInf
        );
        assert_eq!(
            support_systemic(&RandomVector::zeros(2, 2), &sum, &nn, &s, 1e-9).unwrap(),
            ExtReal::ZERO
        );
    }

    #[test]
    fn linear_case_penalty() {
        let s = half();
        let sum = AggregationSpec::sum(2);
        let floor = AcceptanceSpec::ExpectationFloor { u0: -0.5 };
        let z = dv(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let a = alpha(&z, &sum, &floor, &s, false).unwrap();
        assert!((a.value.to_f64() + 0.5).abs() < 1e-12, "{a:?}");
        let z = dv(vec![vec![1.5, 0.5], vec![1.5, 0.5]]);
        assert_eq!(
            alpha(&z, &sum, &floor, &s, false).unwrap().value,
            ExtReal::NegInf
        );
        let z = dv(vec![vec![1.0, 1.0], vec![1.5, 0.5]]);
        assert_eq!(
            alpha(&z, &sum, &AcceptanceSpec::Nonnegative, &s, false)
                .unwrap()
                .value,
            ExtReal::NegInf
        );
        assert_eq!(
            alpha(&RandomVector::zeros(2, 2), &sum, &floor, &s, false)
                .unwrap()
                .value,
            ExtReal::ZERO
        );
    }

    #[test]
    fn exponential_penalty_matches_closed_form() {
        // single scenario family: alpha(Z) = sup_{W >= 0} E[W u*(Z / W)] with the floor u0 = 0 and W constant
        let s = half();
        let u = Utility::Exponential { gamma: 1.0 };
        let agg = AggregationSpec::componentwise(vec![u]).unwrap();
        let acc = AcceptanceSpec::ExpectationFloor { u0: 0.0 };
        let z = dv(vec![vec![1.5, 0.5]]);
        // W = lambda constant: objective sum_w p_w (z_w - z_w ln(z_w / lambda) - lambda), maximized at lambda = E[Z] = 1
        let expected: f64 = [1.5f64, 0.5]
            .iter()
            .map(|z| 0.5 * (z - z * z.ln() - 1.0))
            .sum();
        let a = alpha(&z, &agg, &acc, &s, false).unwrap();
        assert!(
            (a.value.to_f64() - expected).abs() < 1e-9,
            "{a:?} vs {expected}"
        );
        assert!(a.converged);
        let ap = alpha(&z, &agg, &acc, &s, true).unwrap();
        assert_eq!(ap.value, a.value);
        assert!(ap.strict_positive_branch);
    }

    #[test]
    fn positive_branch_needs_positive_weights() {
        let s = half();
        let losses = AggregationSpec::sum_of_losses(2);
        let poly = AcceptanceSpec::Polyhedral {
            weights: vec![vec![2.0, 0.0]],
            bounds: vec![0.0],
        };
        let z = dv(vec![vec![1.0, 0.0], vec![0.5, 0.0]]);
        assert!(alpha(&z, &losses, &poly, &s, false)
            .unwrap()
            .value
            .is_finite());
        assert_eq!(
            alpha(&z, &losses, &poly, &s, true).unwrap().value,
            ExtReal::NegInf
        );
    }

    #[test]
    fn conic_membership_examples() {
        let s = half();
        let sum = AggregationSpec::sum(2);
        let nn = AcceptanceSpec::Nonnegative;
        assert!(
            conic_membership_d(&dv(vec![vec![1.0, 3.0], vec![1.0, 3.0]]), &sum, &nn, &s).unwrap()
        );
        assert!(
            !conic_membership_d(&dv(vec![vec![1.0, 3.0], vec![3.0, 1.0]]), &sum, &nn, &s).unwrap()
        );
        assert!(conic_membership_d(&RandomVector::zeros(2, 2), &sum, &nn, &s).unwrap());
        let losses = AggregationSpec::sum_of_losses(2);
        assert!(
            conic_membership_d(&dv(vec![vec![4.0, 0.0], vec![0.5, 7.0]]), &losses, &nn, &s)
                .unwrap()
        );
        let floor = AcceptanceSpec::ExpectationFloor { u0: -1.0 };
        assert!(conic_membership_d(&RandomVector::zeros(2, 2), &sum, &floor, &s).is_err());
    }

    #[test]
    fn smooth_support_function_bounds_the_penalty() {
        let s = ScenarioSpace::new(vec![0.3, 0.7]).unwrap();
        let agg = AggregationSpec::componentwise(vec![
            Utility::Exponential { gamma: 1.0 },
            Utility::Power { eta: 2.0 },
        ])
        .unwrap();
        let acc = AcceptanceSpec::ExpectationFloor { u0: -0.2 };
        let z = dv(vec![
            vec![0.8, 1.0857142857142856],
            vec![1.5, 0.7857142857142857],
        ]);
        let sigma = support_systemic(&z, &agg, &acc, &s, 1e-9).unwrap().to_f64();
        let a = alpha(&z, &agg, &acc, &s, false).unwrap().value.to_f64();
        assert!(a <= sigma + 1e-7, "{a} > {sigma}");
        assert!(sigma <= 0.0);
    }
}
