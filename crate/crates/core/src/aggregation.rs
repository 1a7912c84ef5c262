//! Aggregation functions `Lambda: R^d -> R` and their concave conjugates.
//!
//! Every built-in kind is a sum of utilities applied to linear forms,
//! `Lambda(x) = sum_k u_k(a_k . x)`:
//!
//! | kind                    | terms                               |
//! |-------------------------|-------------------------------------|
//! | `sum`                   | one term, `a = e`, `u(s) = s`       |
//! | `sum_of_losses`         | `a_k = e_k`, `u(s) = min(s, 0)`     |
//! | `utility_of_sum`        | one term, `a = e`, user utility     |
//! | `componentwise_utility` | `a_k = e_k`, one utility per entry  |
//!
//! The solvers work on that term structure. Custom aggregation functions are
//! accepted for evaluation and the primal problem, with a numeric conjugate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extended::{ExtReal, UNBOUNDED_CAP};
use crate::scenario::RandomVector;
use crate::utility::Utility;

/// `u(a . x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub weights: Vec<f64>,
    pub utility: Utility,
}

impl Term {
    pub fn argument(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

pub type AggregationFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomAggregation {
    pub name: String,
    pub eval: AggregationFn,
    pub positively_homogeneous: bool,
    /// User-supplied `(a, b)` with `Lambda(x) <= a sum(x) + b`.
    pub affine_dominance: Option<(f64, f64)>,
}

#[derive(Clone)]
pub enum AggregationKind {
    Sum,
    SumOfLosses,
    UtilityOfSum(Utility),
    ComponentwiseUtility(Vec<Utility>),
    Custom(CustomAggregation),
}

impl fmt::Debug for AggregationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationKind::Sum => f.write_str("Sum"),
            AggregationKind::SumOfLosses => f.write_str("SumOfLosses"),
            AggregationKind::UtilityOfSum(u) => f.debug_tuple("UtilityOfSum").field(u).finish(),
            AggregationKind::ComponentwiseUtility(us) => {
                f.debug_tuple("ComponentwiseUtility").field(us).finish()
            }
            AggregationKind::Custom(c) => f.debug_struct("Custom").field("name", &c.name).finish(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AggregationSpec {
    kind: AggregationKind,
    d: usize,
}

/// Outcome of a grid sweep over the admissibility properties.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdmissibilityReport {
    pub normalized: bool,
    pub monotone: bool,
    pub concave: bool,
    pub affine_dominance_ok: Option<bool>,
    pub violations: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.normalized && self.monotone && self.concave
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 20;

impl AggregationSpec {
    pub fn sum(d: usize) -> Self {
        assert!(d > 0);
        AggregationSpec {
            kind: AggregationKind::Sum,
            d,
        }
    }

    pub fn sum_of_losses(d: usize) -> Self {
        assert!(d > 0);
        AggregationSpec {
            kind: AggregationKind::SumOfLosses,
            d,
        }
    }

    pub fn utility_of_sum(d: usize, u: Utility) -> Result<Self> {
        u.validate()?;
        if d == 0 {
            return Err(Error::dimension("aggregation dimension must be positive"));
        }
        Ok(AggregationSpec {
            kind: AggregationKind::UtilityOfSum(u),
            d,
        })
    }

    pub fn componentwise(us: Vec<Utility>) -> Result<Self> {
        if us.is_empty() {
            return Err(Error::dimension(
                "componentwise utility needs at least one component",
            ));
        }
        for u in &us {
            u.validate()?;
        }
        let d = us.len();
        Ok(AggregationSpec {
            kind: AggregationKind::ComponentwiseUtility(us),
            d,
        })
    }

    /// A user-defined aggregation. Only normalization is enforced here; run
    /// [`AggregationSpec::check_admissibility`] to spot-check concavity and monotonicity.
    pub fn custom(d: usize, custom: CustomAggregation) -> Result<Self> {
        if d == 0 {
            return Err(Error::dimension("aggregation dimension must be positive"));
        }
        let at_zero = (custom.eval)(&vec![0.0; d]);
        if at_zero.abs() > 1e-12 {
            return Err(Error::validation(
                "Lambda(0) = 0",
                format!("custom aggregation gives {at_zero}"),
            ));
        }
        Ok(AggregationSpec {
            kind: AggregationKind::Custom(custom),
            d,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &AggregationKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            AggregationKind::Sum => "sum",
            AggregationKind::SumOfLosses => "sum_of_losses",
            AggregationKind::UtilityOfSum(_) => "utility_of_sum",
            AggregationKind::ComponentwiseUtility(_) => "componentwise_utility",
            AggregationKind::Custom(c) => &c.name,
        }
    }

    /// The term decomposition; `None` for custom kinds.
    pub fn terms(&self) -> Option<Vec<Term>> {
        let d = self.d;
        let unit = |k: usize| {
            let mut a = vec![0.0; d];
            a[k] = 1.0;
            a
        };
        match &self.kind {
            AggregationKind::Sum => Some(vec![Term {
                weights: vec![1.0; d],
                utility: Utility::Linear { slope: 1.0 },
            }]),
            AggregationKind::SumOfLosses => Some(
                (0..d)
                    .map(|k| Term {
                        weights: unit(k),
                        utility: Utility::LinearCapped { cap: 0.0 },
                    })
                    .collect(),
            ),
            AggregationKind::UtilityOfSum(u) => Some(vec![Term {
                weights: vec![1.0; d],
                utility: *u,
            }]),
            AggregationKind::ComponentwiseUtility(us) => Some(
                us.iter()
                    .enumerate()
                    .map(|(k, u)| Term {
                        weights: unit(k),
                        utility: *u,
                    })
                    .collect(),
            ),
            AggregationKind::Custom(_) => None,
        }
    }

    /// Whether the terms act on the total `sum(x)` rather than on separate components.
    pub fn acts_on_total(&self) -> bool {
        matches!(
            self.kind,
            AggregationKind::Sum | AggregationKind::UtilityOfSum(_)
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match &self.kind {
            AggregationKind::Sum => x.iter().sum(),
            AggregationKind::SumOfLosses => x.iter().map(|v| v.min(0.0)).sum(),
            AggregationKind::UtilityOfSum(u) => u.eval(x.iter().sum()),
            AggregationKind::ComponentwiseUtility(us) => {
                us.iter().zip(x).map(|(u, v)| u.eval(*v)).sum()
            }
            AggregationKind::Custom(c) => (c.eval)(x),
        }
    }

    /// Scenario-wise aggregate `(Lambda(X(w)))_w`.
    pub fn eval_vector(&self, x: &RandomVector) -> Result<Vec<f64>> {
        if x.d() != self.d {
            return Err(Error::dimension(format!(
                "aggregation expects {} components, position has {}",
                self.d,
                x.d()
            )));
        }
        Ok((0..x.n()).map(|w| self.eval(&x.scenario(w))).collect())
    }

    /// A supergradient of `Lambda` at `x`. Custom kinds use central differences.
    pub fn supergradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            AggregationKind::Custom(c) => {
                let mut g = vec![0.0; self.d];
                let mut probe = x.to_vec();
                for i in 0..self.d {
                    let h = 1e-6 * (1.0 + x[i].abs());
                    probe[i] = x[i] + h;
                    let up = (c.eval)(&probe);
                    probe[i] = x[i] - h;
                    let down = (c.eval)(&probe);
                    probe[i] = x[i];
                    g[i] = (up - down) / (2.0 * h);
                }
                g
            }
            _ => {
                let mut g = vec![0.0; self.d];
                for term in self.terms().expect("built-in kinds have terms") {
                    let slope = term.utility.derivative(term.argument(x));
                    for (gi, a) in g.iter_mut().zip(&term.weights) {
                        *gi += slope * a;
                    }
                }
                g
            }
        }
    }

    /// Splits a dual point `z` into one multiplier per term, so that
    /// `z = sum_k zeta_k a_k`. Returns `None` when no such split exists, in
    /// which case the conjugate is `-inf`.
    pub fn split_dual(&self, z: &[f64]) -> Option<Vec<f64>> {
        if self.acts_on_total() {
            let first = z[0];
            if z.iter().all(|&v| v == first) {
                Some(vec![first])
            } else {
                None
            }
        } else {
            Some(z.to_vec())
        }
    }

    /// `Lambda*(z) = inf_x { <x, z> - Lambda(x) }`.
    pub fn concave_conjugate(&self, z: &[f64], tol: f64, max_iter: usize) -> Result<ExtReal> {
        if z.len() != self.d {
            return Err(Error::dimension(format!(
                "conjugate point has {} entries, expected {}",
                z.len(),
                self.d
            )));
        }
        if let AggregationKind::Custom(c) = &self.kind {
            return numeric_conjugate(c, z, tol, max_iter);
        }
        let terms = self.terms().expect("built-in kinds have terms");
        let Some(zeta) = self.split_dual(z) else {
            return Ok(ExtReal::NegInf);
        };
        let mut total = ExtReal::ZERO;
        for (term, zk) in terms.iter().zip(zeta) {
            total = total.add(term.utility.conjugate(zk));
            if total.is_neg_inf() {
                break;
            }
        }
        Ok(total)
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        match &self.kind {
            AggregationKind::Sum | AggregationKind::SumOfLosses => true,
            AggregationKind::UtilityOfSum(u) => u.is_positively_homogeneous(),
            AggregationKind::ComponentwiseUtility(us) => {
                us.iter().all(|u| u.is_positively_homogeneous())
            }
            AggregationKind::Custom(c) => c.positively_homogeneous,
        }
    }

    /// True when every term is piecewise linear, so all programs built on it are linear.
    pub fn is_piecewise_linear(&self) -> bool {
        match self.terms() {
            Some(terms) => terms.iter().all(|t| t.utility.is_piecewise_linear()),
            None => false,
        }
    }

    /// `(a, b)` with `a > 0` and `Lambda(x) <= a sum(x) + b` for all `x`.
    pub fn affine_dominance(&self) -> Option<(f64, f64)> {
        match &self.kind {
            AggregationKind::Sum | AggregationKind::SumOfLosses => Some((1.0, 0.0)),
            AggregationKind::UtilityOfSum(u) => Some((u.slope_at_zero(), 0.0)),
            AggregationKind::ComponentwiseUtility(us) => {
                let mut lo: f64 = 0.0;
                let mut hi = f64::INFINITY;
                for u in us {
                    let (a, b) = u.conjugate_domain();
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                if lo > hi || hi <= 0.0 {
                    return None;
                }
                let mean = us.iter().map(|u| u.slope_at_zero()).sum::<f64>() / us.len() as f64;
                let a = if lo == hi {
                    lo
                } else {
                    mean.clamp(lo.max(f64::MIN_POSITIVE), hi)
                };
                if a <= 0.0 {
                    return None;
                }
                let mut b = 0.0;
                for u in us {
                    b -= u.conjugate(a).finite()?;
                }
                Some((a, b))
            }
            AggregationKind::Custom(c) => c.affine_dominance,
        }
    }

    /// Sweeps the product grid `grid^d` (a diagonal sample when `d > 3`) and
    /// reports failures of normalization, monotonicity, concavity, and affine dominance.
    pub fn check_admissibility(&self, grid: &[f64]) -> AdmissibilityReport {
        let d = self.d;
        let points: Vec<Vec<f64>> = if d <= 3 {
            let mut pts = vec![Vec::new()];
            for _ in 0..d {
                pts = pts
                    .into_iter()
                    .flat_map(|p| {
                        grid.iter().map(move |&g| {
                            let mut q = p.clone();
                            q.push(g);
                            q
                        })
                    })
                    .collect();
            }
            pts
        } else {
            grid.iter()
                .flat_map(|&g| {
                    (0..d).map(move |i| {
                        (0..d)
                            .map(|k| if k == i { -g } else { g })
                            .collect::<Vec<_>>()
                    })
                })
                .collect()
        };
        let mut report = AdmissibilityReport {
            normalized: true,
            monotone: true,
            concave: true,
            ..Default::default()
        };
        let note = |report: &mut AdmissibilityReport, msg: String| {
            if report.violations.len() < MAX_REPORTED_VIOLATIONS {
                report.violations.push(msg);
            }
        };
        let at_zero = self.eval(&vec![0.0; d]);
        if at_zero.abs() > 1e-12 {
            report.normalized = false;
            note(&mut report, format!("Lambda(0) = {at_zero}"));
        }
        let step = grid
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .filter(|s| *s > 0.0)
            .fold(f64::INFINITY, f64::min);
        let step = if step.is_finite() { step } else { 1.0 };
        let values: Vec<f64> = points.iter().map(|p| self.eval(p)).collect();
        for (p, &v) in points.iter().zip(&values) {
            for i in 0..d {
                let mut q = p.clone();
                q[i] += step;
                let vq = self.eval(&q);
                if vq < v - 1e-12 * (1.0 + v.abs()) {
                    report.monotone = false;
                    note(&mut report, format!("decreasing in component {i} at {p:?}"));
                }
            }
        }
        for (a, (pa, &va)) in points.iter().zip(&values).enumerate() {
            for (pb, &vb) in points.iter().zip(&values).skip(a + 1) {
                let mid: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| 0.5 * (x + y)).collect();
                let vm = self.eval(&mid);
                let chord = 0.5 * (va + vb);
                if vm < chord - 1e-9 * (1.0 + chord.abs()) {
                    report.concave = false;
                    note(
                        &mut report,
                        format!("midpoint of {pa:?} and {pb:?} lies below the chord"),
                    );
                }
            }
        }
        if let Some((a, b)) = self.affine_dominance() {
            let mut ok = true;
            for (p, &v) in points.iter().zip(&values) {
                let bound = a * p.iter().sum::<f64>() + b;
                if v > bound + 1e-9 * (1.0 + bound.abs()) {
                    ok = false;
                    note(&mut report, format!("affine dominance fails at {p:?}"));
                }
            }
            report.affine_dominance_ok = Some(ok);
        }
        report
    }
}

/// Coordinate descent on `f(x) = <x, z> - Lambda(x)` preceded by ray probes for unboundedness.
fn numeric_conjugate(
    c: &CustomAggregation,
    z: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<ExtReal> {
    let d = z.len();
    let f = |x: &[f64]| x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - (c.eval)(x);
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            directions.push(e);
        }
    }
    let diag = 1.0 / (d as f64).sqrt();
    directions.push(vec![diag; d]);
    directions.push(vec![-diag; d]);
    if norm > 0.0 {
        directions.push(z.iter().map(|v| -v / norm).collect());
    }
    for dir in &directions {
        for t in [1e2, 1e4, 1e6, 1e8] {
            let x: Vec<f64> = dir.iter().map(|v| v * t).collect();
            let v = f(&x);
            if v.is_nan() {
                continue;
            }
            if v < -UNBOUNDED_CAP {
                return Ok(ExtReal::NegInf);
            }
        }
    }
    let mut x = vec![0.0; d];
    let mut best = f(&x);
    for sweep in 0..max_iter {
        let before = best;
        for i in 0..d {
            let base = x.clone();
            let line = |t: f64| {
                let mut y = base.clone();
                y[i] = t;
                f(&y)
            };
            let center = x[i];
            let mut width = 1.0 + center.abs();
            while line(center - width) < line(center) || line(center + width) < line(center) {
                width *= 2.0;
                if width > UNBOUNDED_CAP {
                    return Ok(ExtReal::NegInf);
                }
            }
            let (mut a, mut b) = (center - width, center + width);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            while b - a > 1e-12 * (1.0 + a.abs()) {
                let p = b - g * (b - a);
                let q = a + g * (b - a);
                if line(p) < line(q) {
                    b = q;
                } else {
                    a = p;
                }
            }
            let t = 0.5 * (a + b);
            let v = line(t);
            if v < best {
                x[i] = t;
                best = v;
            }
        }
        if best < -UNBOUNDED_CAP {
            return Ok(ExtReal::NegInf);
        }
        if before - best <= tol {
            log::debug!("numeric conjugate converged after {} sweeps", sweep + 1);
            return Ok(ExtReal::Finite(best));
        }
    }
    Err(Error::Indeterminate {
        iterations: max_iter,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn custom(d: usize, f: fn(&[f64]) -> f64) -> AggregationSpec {
        AggregationSpec::custom(
            d,
            CustomAggregation {
                name: "custom".into(),
                eval: Arc::new(f),
                positively_homogeneous: false,
                affine_dominance: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(AggregationSpec::sum(2).eval(&[1.0, -1.0]), 0.0);
        assert_eq!(AggregationSpec::sum_of_losses(2).eval(&[2.0, -3.0]), -3.0);
        let exp = AggregationSpec::utility_of_sum(2, Utility::Exponential { gamma: 1.0 }).unwrap();
        assert_eq!(exp.eval(&[0.0, 0.0]), 0.0);

        let x = RandomVector::from_rows(vec![vec![1.0, -2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            AggregationSpec::sum(2).eval_vector(&x).unwrap(),
            vec![1.0, -1.0]
        );
        assert_eq!(
            AggregationSpec::sum_of_losses(2).eval_vector(&x).unwrap(),
            vec![0.0, -2.0]
        );
        assert_eq!(
            exp.eval_vector(&RandomVector::zeros(2, 3)).unwrap(),
            vec![0.0; 3]
        );
        assert!(AggregationSpec::sum(3).eval_vector(&x).is_err());
    }

    #[test]
    fn conjugate_examples() {
        let sum = AggregationSpec::sum(2);
        assert_eq!(
            sum.concave_conjugate(&[1.0, 1.0], 1e-9, 100).unwrap(),
            ExtReal::ZERO
        );
        assert_eq!(
            sum.concave_conjugate(&[1.0, 0.5], 1e-9, 100).unwrap(),
            ExtReal::NegInf
        );
        let losses = AggregationSpec::sum_of_losses(2);
        assert_eq!(
            losses.concave_conjugate(&[0.5, 1.0], 1e-9, 100).unwrap(),
            ExtReal::ZERO
        );
        assert_eq!(
            losses.concave_conjugate(&[1.5, 0.5], 1e-9, 100).unwrap(),
            ExtReal::NegInf
        );
        assert_eq!(
            losses.concave_conjugate(&[0.5, -0.1], 1e-9, 100).unwrap(),
            ExtReal::NegInf
        );
        let exp =
            AggregationSpec::componentwise(vec![Utility::Exponential { gamma: 1.0 }]).unwrap();
        assert_eq!(
            exp.concave_conjugate(&[1.0], 1e-9, 100).unwrap(),
            ExtReal::ZERO
        );
        let v = exp
            .concave_conjugate(&[0.5], 1e-9, 100)
            .unwrap()
            .finite()
            .unwrap();
        assert!((v + 0.153426).abs() < 1e-6);
    }

    #[test]
    fn numeric_fallback_matches_closed_forms() {
        let smooth = custom(2, |x| (1.0 - (-x[0]).exp()) + (1.0 - (-2.0 * x[1]).exp()));
        let closed = AggregationSpec::componentwise(vec![
            Utility::Exponential { gamma: 1.0 },
            Utility::Exponential { gamma: 2.0 },
        ])
        .unwrap();
        for z in [[0.5, 0.5], [1.0, 2.0], [0.2, 1.5]] {
            let a = smooth
                .concave_conjugate(&z, 1e-13, 500)
                .unwrap()
                .finite()
                .unwrap();
            let b = closed
                .concave_conjugate(&z, 1e-13, 500)
                .unwrap()
                .finite()
                .unwrap();
            assert!((a - b).abs() < 1e-6, "{z:?}: {a} vs {b}");
        }
        let linear = custom(2, |x| x[0] + x[1]);
        assert_eq!(
            linear.concave_conjugate(&[1.0, 0.5], 1e-9, 100).unwrap(),
            ExtReal::NegInf
        );
    }

    #[test]
    fn admissibility_sweep() {
        let grid: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
        assert!(AggregationSpec::sum(2)
            .check_admissibility(&grid)
            .violations
            .is_empty());
        let r = AggregationSpec::sum_of_losses(3).check_admissibility(&grid);
        assert!(r.violations.is_empty() && r.affine_dominance_ok == Some(true));
        let convex = custom(1, |x| x[0] * x[0]);
        let r = convex.check_admissibility(&grid);
        assert!(!r.concave && !r.monotone && !r.violations.is_empty());
    }

    #[test]
    fn affine_dominance_of_componentwise_utilities() {
        let agg = AggregationSpec::componentwise(vec![
            Utility::Exponential { gamma: 1.0 },
            Utility::Power { eta: 2.0 },
        ])
        .unwrap();
        let (a, b) = agg.affine_dominance().unwrap();
        assert!(a > 0.0);
        let grid: Vec<f64> = (-6..=6).map(|k| k as f64).collect();
        assert_eq!(
            agg.check_admissibility(&grid).affine_dominance_ok,
            Some(true)
        );
        assert!(b >= 0.0);
        let mixed = AggregationSpec::componentwise(vec![
            Utility::Linear { slope: 1.0 },
            Utility::Linear { slope: 2.0 },
        ])
        .unwrap();
        assert!(mixed.affine_dominance().is_none());
    }

    #[test]
    fn supergradients_of_built_ins() {
        let agg = AggregationSpec::componentwise(vec![
            Utility::Exponential { gamma: 1.0 },
            Utility::LinearCapped { cap: 1.0 },
        ])
        .unwrap();
        let g = agg.supergradient(&[0.0, 2.0]);
        assert_eq!(g, vec![1.0, 0.0]);
        assert_eq!(
            AggregationSpec::sum(3).supergradient(&[1.0, 2.0, 3.0]),
            vec![1.0; 3]
        );
    }
}
