//! Brute-force references on tiny instances.
//!
//! Nothing here calls the solvers or the closed forms of the other modules:
//! aggregation, membership, quantiles, and barrier weights are re-evaluated
//! from their definitions so that a bug on one side cannot hide on the other.

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceSpec;
use crate::aggregation::{AggregationKind, AggregationSpec};
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::scenario::{DualVector, RandomVector, ScenarioSpace};
use crate::utility::Utility;

const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        let axis = Axis {
            lower,
            upper,
            points,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(Error::validation(
                "at least 3 grid points",
                format!("{} points", self.points),
            ));
        }
        if !self.lower.is_finite() || !self.upper.is_finite() || self.lower >= self.upper {
            return Err(Error::validation(
                "finite increasing bounds",
                format!("[{}, {}]", self.lower, self.upper),
            ));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.upper
        } else {
            self.lower + k as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }

    fn scaled(&self, factor: f64) -> Axis {
        Axis {
            lower: self.lower * factor,
            upper: self.upper * factor,
            points: self.points,
        }
    }
}

/// Per-dimension axes of a product grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn uniform(dims: usize, lower: f64, upper: f64, points: usize) -> Result<Self> {
        let axis = Axis::new(lower, upper, points)?;
        Ok(GridSpec {
            axes: vec![axis; dims],
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.axes.iter().try_for_each(Axis::validate)
    }

    /// Largest step over all axes.
    pub fn resolution(&self) -> f64 {
        self.axes.iter().map(Axis::step).fold(0.0, f64::max)
    }

    fn size(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Calls `f` on every grid point in lexicographic order.
    fn for_each(&self, mut f: impl FnMut(&[f64])) {
        let dims = self.axes.len();
        let mut idx = vec![0usize; dims];
        let mut point: Vec<f64> = self.axes.iter().map(|a| a.value(0)).collect();
        for _ in 0..self.size() {
            f(&point);
            for k in (0..dims).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].points {
                    point[k] = self.axes[k].value(idx[k]);
                    break;
                }
                idx[k] = 0;
                point[k] = self.axes[k].value(0);
            }
        }
    }
}

fn utility(u: &Utility, x: f64) -> f64 {
    match *u {
        Utility::Linear { slope } => slope * x,
        Utility::LinearCapped { cap } => {
            if x < cap {
                x
            } else {
                cap
            }
        }
        Utility::Exponential { gamma } => 1.0 - (-gamma * x).exp(),
        Utility::Power { eta } => {
            if x < 0.0 {
                x
            } else {
                ((1.0 + x).powf(1.0 - eta) - 1.0) / (1.0 - eta)
            }
        }
    }
}

fn aggregate(agg: &AggregationSpec, x: &[f64]) -> f64 {
    match agg.kind() {
        AggregationKind::Sum => x.iter().sum(),
        AggregationKind::SumOfLosses => x.iter().map(|v| if *v < 0.0 { *v } else { 0.0 }).sum(),
        AggregationKind::UtilityOfSum(u) => utility(u, x.iter().sum()),
        AggregationKind::ComponentwiseUtility(us) => {
            us.iter().zip(x).map(|(u, v)| utility(u, *v)).sum()
        }
        AggregationKind::Custom(c) => (c.eval)(x),
    }
}

/// `VaR_mu(U)` as the smallest candidate `m = -U_w` with `P(U + m < 0) <= mu`.
pub fn var_by_enumeration(u: &[f64], mu: f64, space: &ScenarioSpace) -> f64 {
    let mut best = f64::INFINITY;
    for &c in u {
        let m = -c;
        let tail: f64 = u
            .iter()
            .zip(space.probs())
            .filter(|(v, _)| **v + m < 0.0)
            .map(|(_, p)| p)
            .sum();
        if tail <= mu + 1e-12 && m < best {
            best = m;
        }
    }
    best
}

/// `(1 / level) * integral_0^level VaR_mu dmu` by the midpoint rule on `steps` cells.
pub fn es_riemann(u: &[f64], level: f64, space: &ScenarioSpace, steps: usize) -> f64 {
    let h = level / steps as f64;
    (0..steps)
        .map(|i| var_by_enumeration(u, (i as f64 + 0.5) * h, space))
        .sum::<f64>()
        * h
        / level
}

/// `ES_level(U) = min_c c + E[(-U - c)^+] / level`; the minimum sits at some `c = -U_w`.
fn es_by_minimization(u: &[f64], level: f64, space: &ScenarioSpace) -> f64 {
    u.iter()
        .map(|&v| {
            let c = -v;
            c + u
                .iter()
                .zip(space.probs())
                .map(|(x, p)| p * (-x - c).max(0.0))
                .sum::<f64>()
                / level
        })
        .fold(f64::INFINITY, f64::min)
}

fn accepts(acc: &AcceptanceSpec, u: &[f64], space: &ScenarioSpace) -> bool {
    let mean = |w: &[f64]| -> f64 {
        u.iter()
            .zip(w)
            .zip(space.probs())
            .map(|((a, b), p)| a * b * p)
            .sum()
    };
    match acc {
        AcceptanceSpec::Nonnegative => u.iter().all(|v| *v >= -MEMBERSHIP_TOL),
        AcceptanceSpec::ExpectationFloor { u0 } => mean(&vec![1.0; u.len()]) >= u0 - MEMBERSHIP_TOL,
        AcceptanceSpec::ExpectedShortfall { level } => {
            es_by_minimization(u, *level, space) <= MEMBERSHIP_TOL
        }
        AcceptanceSpec::Polyhedral { weights, bounds } => weights
            .iter()
            .zip(bounds)
            .all(|(w, a)| mean(w) >= a - MEMBERSHIP_TOL),
    }
}

/// `min sum(m)` over grid points `m` with `Lambda(X + m)` acceptable; `+inf` if none is.
pub fn rho_grid(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    grid: &GridSpec,
) -> Result<ExtReal> {
    let d = x.d();
    if d > 3 || grid.axes.len() != d {
        return Err(Error::Precondition(format!(
            "allocation grid needs 1 to 3 axes matching d = {d}"
        )));
    }
    grid.validate()?;
    let n = x.n();
    let mut best = f64::INFINITY;
    let mut u = vec![0.0; n];
    let mut buf = vec![0.0; d];
    grid.for_each(|m| {
        let total: f64 = m.iter().sum();
        if total >= best {
            return;
        }
        for (w, uw) in u.iter_mut().enumerate() {
            for i in 0..d {
                buf[i] = x.get(i, w) + m[i];
            }
            *uw = aggregate(agg, &buf);
        }
        if accepts(acc, &u, space) {
            best = total;
        }
    });
    Ok(if best.is_finite() {
        ExtReal::Finite(best)
    } else {
        ExtReal::PosInf
    })
}

/// `min c` over the axis with `Lambda(X) + c` acceptable; `+inf` if none is.
pub fn rho_tilde_grid(
    x: &RandomVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    axis: &Axis,
) -> Result<ExtReal> {
    axis.validate()?;
    let base: Vec<f64> = (0..x.n()).map(|w| aggregate(agg, &x.scenario(w))).collect();
    let found = axis.values().into_iter().find(|c| {
        let shifted: Vec<f64> = base.iter().map(|u| u + c).collect();
        accepts(acc, &shifted, space)
    });
    Ok(found.map_or(ExtReal::PosInf, ExtReal::Finite))
}

/// Value of a grid oracle together with its resolution in objective units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub value: ExtReal,
    pub resolution: f64,
}

/// `min_x <x, z> - w Lambda(x)` over a product grid.
fn inner_min(agg: &AggregationSpec, z: &[f64], w: f64, grid: &GridSpec) -> f64 {
    let mut best = f64::INFINITY;
    grid.for_each(|x| {
        let v = x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - w * aggregate(agg, x);
        if v < best {
            best = v;
        }
    });
    best
}

/// Largest `|Lambda|` on the grid and the steepest change of `Lambda` between axis neighbours.
fn aggregate_bounds(agg: &AggregationSpec, grid: &GridSpec) -> (f64, f64) {
    let (mut top, mut lip) = (0.0f64, 0.0f64);
    grid.for_each(|x| {
        let v = aggregate(agg, x);
        top = top.max(v.abs());
        let mut probe = x.to_vec();
        for (i, axis) in grid.axes.iter().enumerate() {
            if x[i] + axis.step() <= axis.upper + 1e-12 {
                probe[i] = x[i] + axis.step();
                lip = lip.max((aggregate(agg, &probe) - v).abs() / axis.step());
                probe[i] = x[i];
            }
        }
    });
    (top, lip)
}

/// Barrier weights enumerated on a grid, each with its `sigma_A` from the parameterization.
fn barrier_weights(
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    w_axis: &Axis,
) -> Vec<(Vec<f64>, f64)> {
    let n = space.len();
    let values = w_axis.values();
    match acc {
        AcceptanceSpec::Nonnegative | AcceptanceSpec::ExpectedShortfall { .. } => {
            let grid = GridSpec {
                axes: vec![*w_axis; n],
            };
            let mut out = Vec::new();
            grid.for_each(|w| {
                let keep = match acc {
                    AcceptanceSpec::ExpectedShortfall { level } => {
                        let cap =
                            w.iter().zip(space.probs()).map(|(a, p)| a * p).sum::<f64>() / level;
                        w.iter().all(|v| *v <= cap + 1e-12)
                    }
                    _ => true,
                };
                if keep {
                    out.push((w.to_vec(), 0.0));
                }
            });
            out
        }
        AcceptanceSpec::ExpectationFloor { u0 } => {
            values.iter().map(|&l| (vec![l; n], l * u0)).collect()
        }
        AcceptanceSpec::Polyhedral { weights, bounds } => {
            let axes: Vec<Axis> = weights
                .iter()
                .map(|w| {
                    let top = w.iter().cloned().fold(0.0, f64::max);
                    if top > 0.0 {
                        w_axis.scaled(1.0 / top)
                    } else {
                        Axis {
                            lower: 0.0,
                            upper: 1.0,
                            points: 3,
                        }
                    }
                })
                .collect();
            let grid = GridSpec { axes };
            let mut out = Vec::new();
            grid.for_each(|kappa| {
                let mut w = vec![0.0; n];
                for (k, row) in kappa.iter().zip(weights) {
                    w.iter_mut().zip(row).for_each(|(a, b)| *a += k * b);
                }
                out.push((w, kappa.iter().zip(bounds).map(|(k, a)| k * a).sum()));
            });
            out
        }
    }
}

/// Piecewise linear interpolation of a table on `axis`; `-inf` beyond it or next to a `-inf` entry.
fn interpolate(table: &[f64], axis: &Axis, w: f64) -> f64 {
    if w < axis.lower - 1e-12 || w > axis.upper + 1e-12 {
        return f64::NEG_INFINITY;
    }
    let pos = ((w - axis.lower) / axis.step()).clamp(0.0, (axis.points - 1) as f64);
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if frac <= 1e-9 || k + 1 == axis.points {
        return table[k];
    }
    if frac >= 1.0 - 1e-9 {
        return table[k + 1];
    }
    (1.0 - frac) * table[k] + frac * table[k + 1]
}

/// `alpha(Z) = sup_W sigma_A(W) + inf_X E[<X, Z>] - E[Lambda(X) W]` with both sides gridded.
///
/// `grid.axes[0]` is the axis for each position coordinate, `grid.axes[1]` the weight axis.
/// The inner infimum separates by scenario and is tabulated on the weight axis.
pub fn alpha_raw_grid(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    grid: &GridSpec,
) -> Result<GridValue> {
    let (d, n) = (z.d(), z.n());
    if d * n > 6 || grid.axes.len() != 2 {
        return Err(Error::Precondition(
            "raw penalty grid needs d * n <= 6 and two axes".into(),
        ));
    }
    grid.validate()?;
    let (x_axis, w_axis) = (grid.axes[0], grid.axes[1]);
    let (near, resolution) = bounded_penalty(z, agg, acc, space, &x_axis, &w_axis);
    let (far, _) = bounded_penalty(z, agg, acc, space, &x_axis.scaled(2.0), &w_axis);
    // a finite penalty moves by at most the resolution when the box doubles
    let value = if near - far > 2.0 * resolution + 1e-9 {
        ExtReal::NegInf
    } else {
        ExtReal::from_f64(near)
    };
    Ok(GridValue { value, resolution })
}

/// The raw penalty with positions restricted to the box of `x_axis`, and its grid resolution.
fn bounded_penalty(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    x_axis: &Axis,
    w_axis: &Axis,
) -> (f64, f64) {
    let (d, n) = (z.d(), z.n());
    let box_grid = GridSpec {
        axes: vec![*x_axis; d],
    };
    let tables: Vec<Vec<f64>> = (0..n)
        .map(|w| {
            let zw = z.scenario(w);
            w_axis
                .values()
                .iter()
                .map(|&wt| inner_min(agg, &zw, wt, &box_grid))
                .collect()
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for (w, sigma) in barrier_weights(acc, space, w_axis) {
        let mut total = sigma;
        for k in 0..n {
            total += space.prob(k) * interpolate(&tables[k], w_axis, w[k]);
        }
        if total > best {
            best = total;
        }
    }
    // the box objective is |Lambda|-Lipschitz in W; the position grid misses the box minimum
    // by half a step per coordinate times the slope of <x, z> - w Lambda(x)
    let (top, lip) = aggregate_bounds(agg, &box_grid);
    let z_top = z.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let w_top = w_axis.upper.abs().max(w_axis.lower.abs());
    let resolution = top * w_axis.step() + 0.5 * x_axis.step() * d as f64 * (z_top + w_top * lip);
    (best, resolution)
}

/// Both iterated optimizations of `K_Z(X, W) = sigma_A(W) + E[<X, Z>] - E[Lambda(X) W]`.
///
/// Returns `(inf_X sup_W K, sup_W inf_X K)`. `grid.axes[0]` is the axis for each of
/// the `d * n` position entries, `grid.axes[1]` the weight axis.
pub fn saddle_grid(
    z: &DualVector,
    agg: &AggregationSpec,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    let (d, n) = (z.d(), z.n());
    if d * n > 6 || grid.axes.len() != 2 {
        return Err(Error::Precondition(
            "saddle grid needs d * n <= 6 and two axes".into(),
        ));
    }
    grid.validate()?;
    let weights = barrier_weights(acc, space, &grid.axes[1]);
    let positions = GridSpec {
        axes: vec![grid.axes[0]; d * n],
    };
    // per position: E[<X, Z>] and the aggregate by scenario
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(positions.size());
    let mut buf = vec![0.0; d];
    positions.for_each(|x| {
        let mut pairing = 0.0;
        let mut agg_values = vec![0.0; n];
        for w in 0..n {
            for i in 0..d {
                buf[i] = x[i * n + w];
                pairing += space.prob(w) * x[i * n + w] * z.get(i, w);
            }
            agg_values[w] = aggregate(agg, &buf);
        }
        pairs.push((pairing, agg_values));
    });
    let k = |pair: &(f64, Vec<f64>), w: &(Vec<f64>, f64)| -> f64 {
        w.1 + pair.0
            - pair
                .1
                .iter()
                .zip(&w.0)
                .zip(space.probs())
                .map(|((l, wt), p)| p * l * wt)
                .sum::<f64>()
    };
    let lhs = pairs
        .iter()
        .map(|pair| {
            weights
                .iter()
                .map(|w| k(pair, w))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let rhs = weights
        .iter()
        .map(|w| {
            pairs
                .iter()
                .map(|pair| k(pair, w))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lhs, rhs))
}
