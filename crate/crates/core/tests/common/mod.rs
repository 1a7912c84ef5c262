#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sysrisk::primal::diagnostics;
use sysrisk::{
    AcceptanceSpec, AggregationSpec, RandomVector, ScenarioSpace, SolverOptions, Utility,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct Case {
    pub label: String,
    pub space: ScenarioSpace,
    pub x: RandomVector,
    pub agg: AggregationSpec,
    pub acc: AcceptanceSpec,
}

pub const AGG_KINDS: [&str; 4] = [
    "sum",
    "sum_of_losses",
    "utility_of_sum",
    "componentwise_utility",
];
pub const ACC_KINDS: [&str; 4] = [
    "nonnegative",
    "expectation_floor",
    "expected_shortfall",
    "polyhedral",
];

pub fn space(rng: &mut ChaCha8Rng, n: usize) -> ScenarioSpace {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ScenarioSpace::new(raw.iter().map(|p| p / total).collect()).unwrap()
}

pub fn position(rng: &mut ChaCha8Rng, d: usize, n: usize, scale: f64) -> RandomVector {
    let rows = (0..d)
        .map(|_| (0..n).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect();
    RandomVector::from_rows(rows).unwrap()
}

pub fn utility(rng: &mut ChaCha8Rng) -> Utility {
    match rng.gen_range(0..4) {
        0 => Utility::Linear {
            slope: rng.gen_range(0.5..2.0),
        },
        1 => Utility::LinearCapped {
            cap: rng.gen_range(0.5..3.0),
        },
        2 => Utility::Exponential {
            gamma: rng.gen_range(0.5..2.0),
        },
        _ => Utility::Power {
            eta: rng.gen_range(1.5..3.0),
        },
    }
}

pub fn aggregation(rng: &mut ChaCha8Rng, kind: &str, d: usize) -> AggregationSpec {
    match kind {
        "sum" => AggregationSpec::sum(d),
        "sum_of_losses" => AggregationSpec::sum_of_losses(d),
        "utility_of_sum" => AggregationSpec::utility_of_sum(d, utility(rng)).unwrap(),
        _ => AggregationSpec::componentwise((0..d).map(|_| utility(rng)).collect()).unwrap(),
    }
}

pub fn acceptance(rng: &mut ChaCha8Rng, kind: &str, n: usize) -> AcceptanceSpec {
    match kind {
        "nonnegative" => AcceptanceSpec::Nonnegative,
        "expectation_floor" => AcceptanceSpec::ExpectationFloor {
            u0: rng.gen_range(-1.0..0.0),
        },
        "expected_shortfall" => AcceptanceSpec::ExpectedShortfall {
            level: rng.gen_range(0.05..0.95),
        },
        _ => {
            let rows = rng.gen_range(1..=2);
            let weights = (0..rows)
                .map(|_| {
                    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
                    w[rng.gen_range(0..n)] += 0.5;
                    w
                })
                .collect();
            let bounds = (0..rows).map(|_| rng.gen_range(-1.0..0.0)).collect();
            AcceptanceSpec::Polyhedral { weights, bounds }
        }
    }
}

pub fn passes_diagnostics(case: &Case) -> bool {
    match diagnostics(&case.agg, &case.acc, &case.space, &SolverOptions::default()) {
        Ok(d) => d.proper && d.affine_dominance_ok,
        Err(_) => false,
    }
}

/// Every aggregation and acceptance kind, `per_combo` admissible instances each when
/// the combination admits them within a bounded number of draws.
pub fn suite(seed: u64, per_combo: usize, max_d: usize, max_n: usize) -> Vec<Case> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for agg_kind in AGG_KINDS {
        for acc_kind in ACC_KINDS {
            let mut found = 0;
            for _ in 0..10 * per_combo {
                if found == per_combo {
                    break;
                }
                let d = rng.gen_range(1..=max_d);
                let n = rng.gen_range(2..=max_n);
                let case = Case {
                    label: format!("{agg_kind}+{acc_kind} d={d} n={n}"),
                    space: space(&mut rng, n),
                    x: position(&mut rng, d, n, 3.0),
                    agg: aggregation(&mut rng, agg_kind, d),
                    acc: acceptance(&mut rng, acc_kind, n),
                };
                if case.acc.validate(&case.space).is_ok() && passes_diagnostics(&case) {
                    out.push(case);
                    found += 1;
                }
            }
        }
    }
    out
}

/// A point of the dual simplex: each component a positive density with mean 1.
pub fn density_vector(rng: &mut ChaCha8Rng, d: usize, space: &ScenarioSpace) -> RandomVector {
    let rows = (0..d)
        .map(|_| {
            let raw: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.05..2.0)).collect();
            let mean = space.expectation(&raw);
            raw.iter().map(|v| v / mean).collect()
        })
        .collect();
    RandomVector::from_rows(rows).unwrap()
}

/// An element of the barrier cone of `acc`, or a plain nonnegative vector when `inside` is false.
pub fn barrier_sample(
    rng: &mut ChaCha8Rng,
    acc: &AcceptanceSpec,
    space: &ScenarioSpace,
    inside: bool,
) -> Vec<f64> {
    let n = space.len();
    let free: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    if !inside {
        return free;
    }
    match acc {
        AcceptanceSpec::Nonnegative => free,
        AcceptanceSpec::ExpectationFloor { .. } => vec![rng.gen_range(0.1..2.0); n],
        AcceptanceSpec::ExpectedShortfall { level } => {
            let scale = rng.gen_range(0.2..2.0);
            for s in [0.0, 0.5, 0.9, 1.0] {
                let w: Vec<f64> = free.iter().map(|v| scale * ((1.0 - s) * v + s)).collect();
                let cap = space.expectation(&w) / level;
                if w.iter().all(|v| *v <= cap) {
                    return w;
                }
            }
            unreachable!("constants lie in the barrier cone")
        }
        AcceptanceSpec::Polyhedral { weights, .. } => {
            let mut w = vec![0.0; n];
            for row in weights {
                let k = rng.gen_range(0.0..1.5);
                w.iter_mut().zip(row).for_each(|(a, b)| *a += k * b);
            }
            w
        }
    }
}
