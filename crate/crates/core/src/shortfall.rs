//! Utility-based shortfall risk of a single position.
//!
//! `rho_u(X) = inf { m : E[u(X + m)] >= u0 }` and its dual
//! `sup_{Q, lambda > 0} E_Q[-X] + (1 / lambda) (u0 + E[u*(lambda dQ/dP)])`.

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::AggregationSpec;
use crate::dual::{dual_rho, DualMethod, DualityReport, Mode};
use crate::error::{Error, Result};
use crate::extended::{ExtReal, UNBOUNDED_CAP};
use crate::primal::{PrimalResult, PrimalStatus, SolverOptions};
use crate::scenario::{RandomVector, ScenarioSpace};
use crate::utility::Utility;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortfallSpec {
    pub utility: Utility,
    pub u0: f64,
}

/// Range of the `lambda` search.
const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1e6;

impl ShortfallSpec {
    pub fn new(utility: Utility, u0: f64) -> Result<Self> {
        let spec = ShortfallSpec { utility, u0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.utility.validate()?;
        if !self.u0.is_finite() {
            return Err(Error::validation(
                "finite threshold",
                format!("u0 = {}", self.u0),
            ));
        }
        if self.level_point().is_none() {
            return Err(Error::validation(
                "u exceeds u0 somewhere",
                format!(
                    "{} stays at or below {} on the probe grid",
                    self.utility.name(),
                    self.u0
                ),
            ));
        }
        Ok(())
    }

    /// Some `x` with `u(x) > u0`, found on a geometric grid.
    fn level_point(&self) -> Option<f64> {
        (0..=9)
            .map(|k| 10f64.powi(k) - 1.0)
            .find(|&x| self.utility.eval(x) > self.u0)
    }

    /// The same risk measure as a one-institution systemic one, when the threshold allows it.
    pub fn as_systemic(&self) -> Option<(AggregationSpec, AcceptanceSpec)> {
        if self.u0 > 0.0 {
            return None;
        }
        let agg = AggregationSpec::componentwise(vec![self.utility]).ok()?;
        Some((agg, AcceptanceSpec::ExpectationFloor { u0: self.u0 }))
    }
}

/// `rho_u(X)` by bisection on `m`.
pub fn rho_u_primal(
    x: &[f64],
    spec: &ShortfallSpec,
    space: &ScenarioSpace,
    tol: f64,
) -> Result<ExtReal> {
    space.check_len(x.len(), "position")?;
    spec.validate()?;
    let accept = |m: f64| {
        space.expectation(
            &x.iter()
                .map(|v| spec.utility.eval(v + m))
                .collect::<Vec<_>>(),
        ) >= spec.u0
    };
    let level = spec.level_point().expect("validated");
    let lowest = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = level - lowest;
    if !accept(hi) {
        return Ok(ExtReal::PosInf);
    }
    let mut step = 1.0;
    let mut lo = hi - step;
    while accept(lo) {
        hi = lo;
        step *= 2.0;
        lo = hi - step;
        if lo < -UNBOUNDED_CAP {
            return Ok(ExtReal::NegInf);
        }
    }
    let target = 1e-3 * tol;
    while hi - lo > target * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if accept(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExtReal::Finite(hi))
}

/// `sup_{lambda > 0} (1 / lambda) (u0 + E[u*(lambda Q)])` for a density `Q`, with the maximizing `lambda`.
pub fn lambda_sup(
    q: &[f64],
    spec: &ShortfallSpec,
    space: &ScenarioSpace,
) -> (ExtReal, Option<f64>) {
    let u = spec.utility;
    let (dom_lo, dom_hi) = u.conjugate_domain();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for &qk in q {
        if qk > 0.0 {
            lo = lo.max(dom_lo / qk);
            hi = hi.min(dom_hi / qk);
        } else if dom_lo > 0.0 {
            return (ExtReal::NegInf, None);
        }
    }
    if lo > hi * (1.0 + 1e-9) {
        return (ExtReal::NegInf, None);
    }
    let value = |lambda: f64| -> f64 {
        let mut total = 0.0;
        for (k, &qk) in q.iter().enumerate() {
            let mut z = lambda * qk;
            // snap onto the domain boundary
            if (z - dom_lo).abs() <= 1e-9 * dom_lo.abs().max(1e-300) {
                z = dom_lo;
            } else if dom_hi.is_finite() && (z - dom_hi).abs() <= 1e-9 * dom_hi {
                z = dom_hi;
            }
            total += space.prob(k) * u.conjugate(z).to_f64();
        }
        (spec.u0 + total) / lambda
    };
    if hi <= lo * (1.0 + 1e-9) {
        let lambda = lo.max(f64::MIN_POSITIVE);
        return (ExtReal::from_f64(value(lambda)), Some(lambda));
    }
    // concave in t = 1 / lambda
    let t_lo = (1.0 / hi).max(1.0 / LAMBDA_MAX);
    let t_hi = if lo > 0.0 {
        (1.0 / lo).min(1.0 / LAMBDA_MIN)
    } else {
        1.0 / LAMBDA_MIN
    };
    if t_lo > t_hi {
        return (ExtReal::NegInf, None);
    }
    let f = |t: f64| value(1.0 / t);
    let grid: Vec<f64> = (0..=120)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / 120.0))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = (0..grid.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty grid");
    let (mut a, mut b) = (
        grid[best.saturating_sub(1)],
        grid[(best + 1).min(grid.len() - 1)],
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        if b - a <= 1e-15 * b {
            break;
        }
        let c = b - ratio * (b - a);
        let e = a + ratio * (b - a);
        if f(c) >= f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    let (t, v) = if f(t) >= values[best] {
        (t, f(t))
    } else {
        (grid[best], values[best])
    };
    (ExtReal::from_f64(v), Some(1.0 / t))
}

/// Dual objective `E_Q[-X] + sup_lambda (...)` at a density `Q`.
pub fn shortfall_dual_objective(
    x: &[f64],
    q: &[f64],
    spec: &ShortfallSpec,
    space: &ScenarioSpace,
) -> ExtReal {
    let (inner, _) = lambda_sup(q, spec, space);
    inner.add_f64(-space.expectation_product(x, q))
}

/// Dual evaluation of `rho_u`, compared with the primal bisection.
pub fn rho_u_dual(
    x: &[f64],
    spec: &ShortfallSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<DualityReport> {
    let value = rho_u_primal(x, spec, space, opts.tol)?;
    let primal = PrimalResult {
        value,
        lower_bound: value.add_f64(-opts.tol),
        m_star: value.finite().map(|v| vec![v]),
        status: match value {
            ExtReal::Finite(_) => PrimalStatus::Optimal,
            ExtReal::NegInf => PrimalStatus::UnboundedBelow,
            ExtReal::PosInf => PrimalStatus::Infeasible,
        },
        iterations: 1,
        solver_trace: None,
    };
    let zero = rho_u_primal(&vec![0.0; x.len()], spec, space, opts.tol)?;
    let mut report = DualityReport::new(Mode::Shortfall, primal, zero.is_finite());
    let Some(m) = value.finite() else {
        return Ok(report);
    };

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let slopes: Vec<f64> = x.iter().map(|v| spec.utility.derivative(v + m)).collect();
    let mass = space.expectation(&slopes);
    if mass > 0.0 {
        candidates.push(slopes.iter().map(|s| s / mass).collect());
    }
    if let Some((agg, acc)) = spec.as_systemic() {
        let position = RandomVector::from_rows(vec![x.to_vec()])?;
        let general = dual_rho(&position, &agg, &acc, space, opts)?;
        if let Some(z) = general.z_star {
            candidates.push(z.row(0).to_vec());
        }
    }
    let mut best: Option<(ExtReal, Vec<f64>)> = None;
    for q in candidates {
        let v = shortfall_dual_objective(x, &q, spec, space);
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, q));
        }
    }
    if let Some((v, q)) = best {
        report.set_dual(
            v,
            Some(RandomVector::from_rows(vec![q])?),
            None,
            DualMethod::DensityAndScale,
        );
    }
    Ok(report)
}
