//! Dual side of the risk measures and duality-gap reports.
//!
//! For `rho` the dual point is assembled from the cutting-plane run: the
//! multipliers of the cut model combine the worst-case densities and the
//! aggregation gradients at the cut points into `Z* = sum_j pi_j Q_j grad Lambda_j`,
//! which lies in the product of density simplices. Its dual value
//! `alpha(Z*) - E[<X, Z*>]` is evaluated independently by the penalty engine and
//! can only undershoot `rho`. When the certificate leaves a gap and all
//! programs are linear, Frank-Wolfe over the simplices maximizes
//! `sigma(Z) - E[<X, Z>]` directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::AggregationSpec;
use crate::error::Result;
use crate::extended::ExtReal;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::oracle::{saddle_grid, GridSpec};
use crate::penalty::{alpha, alpha_tilde, support_systemic};
use crate::primal::{kelley, rho, rho_tilde, Constraint, Cut, PrimalResult, SolverOptions};
use crate::scenario::{pairing, DualVector, RandomVector, ScenarioSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Rho,
    RhoTilde,
    Shortfall,
}

/// How the reported dual point was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualMethod {
    CutMultipliers,
    FrankWolfe,
    NormalizedWeights,
    DensityAndScale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub mode: Mode,
    pub primal: PrimalResult,
    /// `false` when the risk measure is `-inf` at zero; no dual value is claimed then.
    pub proper: bool,
    pub dual_value: Option<ExtReal>,
    pub z_star: Option<DualVector>,
    pub w_star: Option<Vec<f64>>,
    pub gap_abs: Option<f64>,
    pub gap_rel: Option<f64>,
    pub method: Option<DualMethod>,
}

impl DualityReport {
    pub(crate) fn new(mode: Mode, primal: PrimalResult, proper: bool) -> Self {
        DualityReport {
            mode,
            primal,
            proper,
            dual_value: None,
            z_star: None,
            w_star: None,
            gap_abs: None,
            gap_rel: None,
            method: None,
        }
    }

    pub(crate) fn set_dual(
        &mut self,
        value: ExtReal,
        z: Option<DualVector>,
        w: Option<Vec<f64>>,
        method: DualMethod,
    ) {
        self.dual_value = Some(value);
        self.z_star = z;
        self.w_star = w;
        self.method = Some(method);
        let (gap_abs, gap_rel) = gaps(self.primal.value, value);
        self.gap_abs = gap_abs;
        self.gap_rel = gap_rel;
    }
}

/// `|p - d|` and `|p - d| / max(1, |p|)` when both sides are finite.
pub fn gaps(primal: ExtReal, dual: ExtReal) -> (Option<f64>, Option<f64>) {
    match (primal, dual) {
        (ExtReal::Finite(p), ExtReal::Finite(d)) => {
            let abs = (p - d).abs();
            (Some(abs), Some(abs / p.abs().max(1.0)))
        }
        _ => (None, None),
    }
}

/// Maximizes `sum pi_j (g_j - s_j . m_j)` over `pi >= 0` with `sum pi_j s_j = -e`.
fn cut_multipliers(cuts: &[Cut], d: usize) -> Option<Vec<f64>> {
    let mut lp = LinearProgram::new();
    let pis: Vec<usize> = cuts
        .iter()
        .map(|c| {
            let offset: f64 = c.slope.iter().zip(&c.point).map(|(s, m)| s * m).sum();
            lp.add_nonneg_var(c.value - offset)
        })
        .collect();
    for i in 0..d {
        lp.add_row(
            pis.iter()
                .zip(cuts)
                .map(|(&v, c)| (v, c.slope[i]))
                .collect(),
            Relation::Eq,
            -1.0,
        );
    }
    lp.maximize().optimal().map(|s| s.x)
}

/// `Z* = sum_j pi_j Q_j grad Lambda_j` with each component scaled to unit mean.
fn assemble(cuts: &[Cut], pi: &[f64], space: &ScenarioSpace) -> (DualVector, Vec<f64>) {
    let (d, n) = (cuts[0].gradient.d(), cuts[0].gradient.n());
    let mut z = RandomVector::zeros(d, n);
    let mut w = vec![0.0; n];
    for (cut, &p) in cuts.iter().zip(pi) {
        if p <= 0.0 {
            continue;
        }
        for k in 0..n {
            let weight = p * cut.density[k];
            w[k] += weight;
            for i in 0..d {
                z.set(i, k, z.get(i, k) + weight * cut.gradient.get(i, k));
            }
        }
    }
    for i in 0..d {
        let mass = space.expectation(z.row(i));
        if mass > 0.0 {
            z.row_mut(i).iter_mut().for_each(|v| *v /= mass);
        }
    }
    (z, w)
}

/// `rho(X) = sup_{Z in C} sigma(Z) - E[<X, Z>]`, evaluated from the primal run.
pub fn dual_rho(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<DualityReport> {
    let d = agg.d();
    let at_zero = rho(&RandomVector::zeros(d, space.len()), agg, acc, space, opts)?;
    let proper = at_zero.value > ExtReal::NegInf;
    let run = kelley(&Constraint { x, agg, acc, space }, opts);
    let mut report = DualityReport::new(Mode::Rho, run.result.clone(), proper);
    if !proper || !run.result.value.is_finite() {
        return Ok(report);
    }
    let primal = run.result.value.to_f64();
    let tol = opts.tol * primal.abs().max(1.0);

    let mut best: Option<(f64, DualVector, Option<Vec<f64>>, DualMethod)> = None;
    if !run.cuts.is_empty() {
        if let Some(pi) = cut_multipliers(&run.cuts, d) {
            let (z, _) = assemble(&run.cuts, &pi, space);
            let a = alpha(&z, agg, acc, space, false)?;
            if let ExtReal::Finite(v) = a.value {
                best = Some((
                    v - pairing(x, &z, space)?,
                    z,
                    a.w_star,
                    DualMethod::CutMultipliers,
                ));
            }
        }
    }
    let short = best.as_ref().is_none_or(|b| primal - b.0 > tol);
    if short && agg.is_piecewise_linear() {
        let start = best.as_ref().map(|b| b.1.clone());
        if let Some((v, z)) = frank_wolfe(x, agg, acc, space, opts, start)? {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, z, None, DualMethod::FrankWolfe));
            }
        }
    }
    if let Some((v, z, w, method)) = best {
        report.set_dual(ExtReal::Finite(v), Some(z), w, method);
    }
    Ok(report)
}

const FW_ITERATIONS: usize = 20;

/// Frank-Wolfe ascent of `sigma(Z) - E[<X, Z>]` over the product of density simplices.
fn frank_wolfe(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
    start: Option<DualVector>,
) -> Result<Option<(f64, DualVector)>> {
    let (d, n) = (x.d(), x.n());
    let objective = |z: &DualVector| -> Result<f64> {
        Ok(support_systemic(z, agg, acc, space, opts.tol)?.to_f64() - pairing(x, z, space)?)
    };
    let mut starts: Vec<DualVector> = start.into_iter().collect();
    starts.push(RandomVector::constant(d, n, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        // a common random density keeps total-acting aggregations finite
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let mass = space.expectation(&raw);
        let density: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        starts.push(RandomVector::from_rows(vec![density; d])?);
    }
    let mut best: Option<(f64, DualVector)> = None;
    for mut z in starts {
        let mut value = objective(&z)?;
        if !value.is_finite() {
            continue;
        }
        for _ in 0..FW_ITERATIONS {
            let Some(g) = systemic_minimizer(&z, agg, acc, space)? else {
                break;
            };
            // supergradient X*(Z) - X; the best vertex puts each component's mass on one scenario
            let mut vertex = RandomVector::zeros(d, n);
            for i in 0..d {
                let mut arg = 0;
                let mut top = f64::NEG_INFINITY;
                for k in 0..n {
                    let v = g.get(i, k) - x.get(i, k);
                    if v > top {
                        top = v;
                        arg = k;
                    }
                }
                vertex.set(i, arg, 1.0 / space.prob(arg));
            }
            let along = |t: f64| -> Result<f64> { objective(&z.combine(1.0 - t, &vertex, t)) };
            let (mut a, mut b) = (0.0, 1.0);
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..30 {
                let c = b - ratio * (b - a);
                let e = a + ratio * (b - a);
                if along(c)? >= along(e)? {
                    b = e;
                } else {
                    a = c;
                }
            }
            let t = 0.5 * (a + b);
            let candidate = along(t)?;
            if candidate > value + 1e-12 {
                value = candidate;
                z = z.combine(1.0 - t, &vertex, t);
            } else {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, z));
        }
    }
    Ok(best)
}

/// A minimizer of `E[<X, Z>]` over the systemic acceptance set, for linear models only.
fn systemic_minimizer(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
) -> Result<Option<RandomVector>> {
    let (d, n) = (z.d(), z.n());
    let Some(terms) = agg.terms() else {
        return Ok(None);
    };
    let p = space.probs();
    let mut lp = LinearProgram::new();
    let xs: Vec<usize> = (0..d * n)
        .map(|idx| lp.add_free_var(p[idx % n] * z.get(idx / n, idx % n)))
        .collect();
    let u: Vec<usize> = (0..n).map(|_| lp.add_free_var(0.0)).collect();
    for w in 0..n {
        let mut total = vec![(u[w], 1.0)];
        for term in &terms {
            let t = lp.add_free_var(0.0);
            total.push((t, -1.0));
            for (slope, intercept) in term.utility.pieces() {
                let mut coefs = vec![(t, 1.0)];
                coefs.extend(
                    term.weights
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| **a != 0.0)
                        .map(|(i, a)| (xs[i * n + w], -slope * a)),
                );
                lp.add_row(coefs, Relation::Le, intercept);
            }
        }
        lp.add_row(total, Relation::Le, 0.0);
    }
    acc.add_membership(&mut lp, &u, space);
    Ok(match lp.minimize() {
        LpOutcome::Optimal(sol) => {
            let rows = (0..d)
                .map(|i| (0..n).map(|w| sol.x[xs[i * n + w]]).collect())
                .collect();
            Some(RandomVector::from_rows(rows)?)
        }
        _ => None,
    })
}

/// `rho~(X) = sup_{Z >= 0} alpha~(Z) - E[<X, Z>]`.
///
/// The optimal normalized weight `W*` of `rho_A(Lambda(X))` is an LP over the
/// barrier cone slice; `Z* = W* grad Lambda(X)` scenario by scenario.
pub fn dual_rho_tilde(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    opts: &SolverOptions,
) -> Result<DualityReport> {
    let (d, n) = (agg.d(), space.len());
    let at_zero = rho_tilde(&RandomVector::zeros(d, n), agg, acc, space, opts)?;
    let proper = at_zero.value > ExtReal::NegInf;
    let primal = rho_tilde(x, agg, acc, space, opts)?;
    let mut report = DualityReport::new(Mode::RhoTilde, primal, proper);
    if !proper || !report.primal.value.is_finite() {
        return Ok(report);
    }
    let u = agg.eval_vector(x)?;
    let mut lp = LinearProgram::new();
    let w: Vec<usize> = (0..n)
        .map(|k| lp.add_nonneg_var(-space.prob(k) * u[k]))
        .collect();
    let embedding = acc.add_barrier(&mut lp, &w, space);
    for (v, c) in embedding.sigma {
        lp.set_cost(v, c);
    }
    lp.add_row(
        w.iter()
            .enumerate()
            .map(|(k, &v)| (v, space.prob(k)))
            .collect(),
        Relation::Eq,
        1.0,
    );
    let Some(sol) = lp.maximize().optimal() else {
        return Ok(report);
    };
    let weights: Vec<f64> = w.iter().map(|&v| sol.x[v].max(0.0)).collect();
    let mut z = RandomVector::zeros(d, n);
    for k in 0..n {
        let g = agg.supergradient(&x.scenario(k));
        for i in 0..d {
            z.set(i, k, weights[k] * g[i]);
        }
    }
    let a = alpha_tilde(&z, agg, acc, space, false)?;
    let value = a.value.add_f64(-pairing(x, &z, space)?);
    report.set_dual(
        value,
        Some(z),
        a.w_star.or(Some(weights)),
        DualMethod::NormalizedWeights,
    );
    Ok(report)
}

/// Grid comparison of the two iterated optimizations of the Lagrangian at `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub resolution: f64,
}

pub fn minimax_check(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    grid: &GridSpec,
) -> Result<MinimaxReport> {
    let (lhs, rhs) = saddle_grid(z, agg, acc, space, grid)?;
    Ok(MinimaxReport {
        lhs,
        rhs,
        discrepancy: lhs - rhs,
        resolution: grid.resolution(),
    })
}
