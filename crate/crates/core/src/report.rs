//! Orchestration of one instance and the machine-readable report.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual::{dual_rho, dual_rho_tilde, minimax_check, DualityReport, MinimaxReport, Mode};
use crate::error::Result;
use crate::extended::ExtReal;
use crate::instance::Instance;
use crate::oracle::{alpha_raw_grid, rho_grid, rho_tilde_grid, Axis, GridSpec};
use crate::penalty::{alpha, alpha_tilde};
use crate::primal::{diagnostics, rho, rho_tilde, Diagnostics, PrimalStatus};
use crate::scenario::{in_dual_simplex, RandomVector};
use crate::shortfall::{rho_u_dual, rho_u_primal};

/// Gap tolerance of the property checks: `max(1e-4, 1e-4 |primal|)`.
pub fn duality_tolerance(primal: f64) -> f64 {
    1e-4f64.max(1e-4 * primal.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Verify,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A grid reference next to the solver value it checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub oracle: ExtReal,
    pub solver: ExtReal,
    pub discrepancy: Option<f64>,
    pub tolerance: f64,
    pub agrees: bool,
}

impl GridCheck {
    fn new(oracle: ExtReal, solver: ExtReal, tolerance: f64) -> Self {
        let discrepancy = match (oracle, solver) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Some((a - b).abs()),
            (a, b) if a == b => Some(0.0),
            _ => None,
        };
        GridCheck {
            oracle,
            solver,
            discrepancy,
            tolerance,
            agrees: discrepancy.is_some_and(|g| g <= tolerance),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub points_per_dim: usize,
    pub value: Option<GridCheck>,
    pub penalty: Option<GridCheck>,
    pub saddle: Option<MinimaxReport>,
    /// Checks that were not run, with the reason.
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub instance_hash: String,
    pub command: Command,
    pub mode: Mode,
    /// Primal result, dual value and certificate, and the gaps between them.
    pub duality: DualityReport,
    pub diagnostics: Option<Diagnostics>,
    pub properties: Option<Vec<PropertyCheck>>,
    pub oracle: Option<OracleReport>,
    /// Wall-clock seconds per stage; absent unless requested, so reports stay reproducible.
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Report {
    /// Process exit code: 4 non-proper, 3 nonconvergence, 1 failed property, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if !self.duality.proper {
            4
        } else if self.duality.primal.status == PrimalStatus::ToleranceReached {
            3
        } else if self
            .properties
            .as_ref()
            .is_some_and(|p| p.iter().any(|c| !c.passed))
        {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct Clock {
    enabled: bool,
    start: Instant,
    stages: BTreeMap<String, f64>,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock {
            enabled,
            start: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages
            .insert(stage.to_string(), (now - self.start).as_secs_f64());
        self.start = now;
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.stages)
    }
}

fn duality(instance: &Instance) -> Result<DualityReport> {
    let (x, space, opts) = (&instance.x, &instance.space, &instance.solver);
    match (instance.mode, instance.systemic(), &instance.shortfall) {
        (Mode::Rho, Some((agg, acc)), _) => dual_rho(x, agg, acc, space, opts),
        (Mode::RhoTilde, Some((agg, acc)), _) => dual_rho_tilde(x, agg, acc, space, opts),
        (Mode::Shortfall, _, Some(spec)) => rho_u_dual(x.row(0), spec, space, opts),
        _ => unreachable!("instances are validated on load"),
    }
}

fn instance_diagnostics(instance: &Instance) -> Result<Option<Diagnostics>> {
    let opts = &instance.solver;
    if let Some((agg, acc)) = instance.systemic() {
        return diagnostics(agg, acc, &instance.space, opts).map(Some);
    }
    match instance.shortfall.as_ref().and_then(|s| s.as_systemic()) {
        Some((agg, acc)) => diagnostics(&agg, &acc, &instance.space, opts).map(Some),
        None => Ok(None),
    }
}

fn base_report(instance: &Instance, command: Command, clock: &mut Clock) -> Result<Report> {
    let duality = duality(instance)?;
    clock.lap("primal_and_dual");
    let diagnostics = instance_diagnostics(instance)?;
    clock.lap("diagnostics");
    Ok(Report {
        instance_hash: instance.hash(),
        command,
        mode: instance.mode,
        duality,
        diagnostics,
        properties: None,
        oracle: None,
        timings: None,
    })
}

pub fn solve(instance: &Instance, timings: bool) -> Result<Report> {
    let mut clock = Clock::new(timings);
    let mut report = base_report(instance, Command::Solve, &mut clock)?;
    report.timings = clock.finish();
    Ok(report)
}

fn check(name: &str, passed: bool, detail: String) -> PropertyCheck {
    PropertyCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Risk value of the instance's measure at another position.
fn value_at(instance: &Instance, x: &RandomVector) -> Result<ExtReal> {
    let (space, opts) = (&instance.space, &instance.solver);
    match (instance.mode, instance.systemic(), &instance.shortfall) {
        (Mode::Rho, Some((agg, acc)), _) => Ok(rho(x, agg, acc, space, opts)?.value),
        (Mode::RhoTilde, Some((agg, acc)), _) => Ok(rho_tilde(x, agg, acc, space, opts)?.value),
        (Mode::Shortfall, _, Some(spec)) => rho_u_primal(x.row(0), spec, space, opts.tol),
        _ => unreachable!("instances are validated on load"),
    }
}

fn property_checks(instance: &Instance, report: &DualityReport) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let primal = report.primal.value;
    let Some(p) = primal.finite() else {
        out.push(check(
            "finite_value",
            false,
            format!("primal value {primal}"),
        ));
        return Ok(out);
    };
    let tol = duality_tolerance(p);
    match report.dual_value {
        Some(ExtReal::Finite(d)) => {
            out.push(check(
                "duality_gap",
                (p - d).abs() <= tol,
                format!("|{p} - {d}| against {tol:e}"),
            ));
            out.push(check(
                "weak_duality",
                d <= p + tol,
                format!("dual {d} <= primal {p}"),
            ));
        }
        other => out.push(check(
            "duality_gap",
            false,
            format!("no finite dual value ({other:?})"),
        )),
    }

    let (d, n) = (instance.x.d(), instance.x.n());
    let shift: Vec<f64> = (0..d)
        .map(|i| {
            if i % 2 == 0 {
                0.5 * (i + 1) as f64
            } else {
                -0.25 * i as f64
            }
        })
        .collect();
    let cash_tol = 1e-5f64.max(10.0 * instance.solver.tol * (1.0 + p.abs()));
    match instance.mode {
        Mode::RhoTilde => {
            // cash additivity acts on the aggregate
            let (agg, acc) = instance.systemic().expect("systemic mode");
            let u = agg.eval_vector(&instance.x)?;
            let c = 0.75;
            let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
            let v = acc.rho_a(&shifted, &instance.space, instance.solver.tol);
            let err = v.add_f64(c - p).to_f64().abs();
            out.push(check(
                "cash_additivity",
                err <= cash_tol,
                format!("shift {c}: error {err:e}"),
            ));
        }
        _ => {
            let v = value_at(instance, &instance.x.shifted(&shift))?;
            let total: f64 = shift.iter().sum();
            let err = v.add_f64(total - p).to_f64().abs();
            out.push(check(
                "cash_additivity",
                err <= cash_tol,
                format!("shift {shift:?}: error {err:e}"),
            ));
        }
    }
    let mut better = instance.x.clone();
    better.set(0, 0, better.get(0, 0) + 1.0);
    let v = value_at(instance, &better)?;
    out.push(check(
        "monotonicity",
        v.to_f64() <= p + cash_tol,
        format!("raising one entry gives {v}"),
    ));

    if let (Some(z), Some((agg, acc))) = (&report.z_star, instance.systemic()) {
        let space = &instance.space;
        let penalty = |z: &RandomVector| match instance.mode {
            Mode::RhoTilde => alpha_tilde(z, agg, acc, space, false),
            _ => alpha(z, agg, acc, space, false),
        };
        let a = penalty(z)?.value;
        out.push(check(
            "penalty_nonpositive",
            a.to_f64() <= 1e-9,
            format!("penalty at the dual point {a}"),
        ));
        if instance.mode == Mode::Rho {
            let a2 = penalty(&z.scaled(2.0))?.value;
            let homogeneous = match (a, a2) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    (y - 2.0 * x).abs() <= 1e-6 * (1.0 + x.abs())
                }
                (x, y) => x == y,
            };
            out.push(check(
                "penalty_homogeneity",
                homogeneous,
                format!("penalty {a} at Z, {a2} at 2Z"),
            ));
            out.push(check(
                "dual_point_normalized",
                in_dual_simplex(z, space),
                format!("d = {d}, n = {n}"),
            ));
        }
    }
    Ok(out)
}

pub fn verify(instance: &Instance, timings: bool) -> Result<Report> {
    let mut clock = Clock::new(timings);
    let mut report = base_report(instance, Command::Verify, &mut clock)?;
    if report.duality.proper {
        report.properties = Some(property_checks(instance, &report.duality)?);
    } else {
        report.properties = Some(vec![check(
            "proper",
            false,
            "risk measure is -inf at zero; dual skipped".into(),
        )]);
    }
    clock.lap("properties");
    report.timings = clock.finish();
    Ok(report)
}

/// Largest `k <= cap` with `k^dims <= budget`, at least 3.
fn points_within(budget: f64, dims: usize, cap: usize) -> usize {
    let k = budget.powf(1.0 / dims as f64).floor() as usize;
    k.clamp(3, cap.max(3))
}

fn oracle_checks(
    instance: &Instance,
    report: &DualityReport,
    points: usize,
) -> Result<OracleReport> {
    let mut out = OracleReport {
        points_per_dim: points,
        ..Default::default()
    };
    let (x, space) = (&instance.x, &instance.space);
    let (d, n) = (x.d(), x.n());
    let primal = report.primal.value;
    let m_top = report
        .primal
        .m_star
        .as_ref()
        .map_or(0.0, |m| m.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let half = 1.0 + x.max_abs() + m_top;

    match (instance.mode, instance.systemic()) {
        (Mode::Rho, Some((agg, acc))) => {
            if d > 3 {
                out.skipped
                    .push(format!("value grid needs d <= 3, got {d}"));
            } else {
                let axes = (0..d)
                    .map(|_| Axis::new(-half, half, points))
                    .collect::<Result<_>>()?;
                let grid = GridSpec { axes };
                let v = rho_grid(x, agg, acc, space, &grid)?;
                out.value = Some(GridCheck::new(
                    v,
                    primal,
                    d.max(2) as f64 * grid.resolution(),
                ));
            }
        }
        (Mode::RhoTilde, Some((agg, acc))) => {
            let axis = Axis::new(-half, half, points)?;
            let v = rho_tilde_grid(x, agg, acc, space, &axis)?;
            out.value = Some(GridCheck::new(v, primal, 2.0 * axis.step()));
        }
        (Mode::Shortfall, _) => {
            let spec = instance.shortfall.as_ref().expect("shortfall mode");
            let agg = crate::aggregation::AggregationSpec::componentwise(vec![spec.utility])?;
            let acc = crate::acceptance::AcceptanceSpec::ExpectationFloor { u0: spec.u0 };
            let grid = GridSpec {
                axes: vec![Axis::new(-half, half, points)?],
            };
            let v = rho_grid(x, &agg, &acc, space, &grid)?;
            out.value = Some(GridCheck::new(v, primal, 2.0 * grid.resolution()));
        }
        _ => unreachable!("instances are validated on load"),
    }

    let systemic = instance.systemic().filter(|_| instance.mode == Mode::Rho);
    match (systemic, &report.z_star) {
        (Some((agg, acc)), Some(z)) if d * n <= 6 => {
            let solver = alpha(z, agg, acc, space, false)?.value;
            let w_top = report
                .w_star
                .as_ref()
                .map_or(1.0, |w| w.iter().cloned().fold(1.0, f64::max));
            let grid = GridSpec {
                axes: vec![
                    Axis::new(-4.0, 4.0, points)?,
                    Axis::new(0.0, 2.0 * w_top, points)?,
                ],
            };
            let raw = alpha_raw_grid(z, agg, acc, space, &grid)?;
            out.penalty = Some(GridCheck::new(raw.value, solver, 2.0 * raw.resolution));
            let coarse = points_within(2e5, d * n, points);
            let saddle = GridSpec {
                axes: vec![
                    Axis::new(-2.0, 2.0, coarse)?,
                    Axis::new(0.0, 2.0 * w_top, coarse)?,
                ],
            };
            out.saddle = Some(minimax_check(z, agg, acc, space, &saddle)?);
        }
        (Some(_), Some(_)) => out.skipped.push(format!(
            "penalty and saddle grids need d * n <= 6, got {}",
            d * n
        )),
        (Some(_), None) => out.skipped.push("no dual point to check".into()),
        (None, _) => out
            .skipped
            .push("penalty and saddle grids cover the allocate-first measure only".into()),
    }
    Ok(out)
}

pub fn oracle(instance: &Instance, points: usize, timings: bool) -> Result<Report> {
    let mut clock = Clock::new(timings);
    let mut report = base_report(instance, Command::Oracle, &mut clock)?;
    report.oracle = Some(oracle_checks(instance, &report.duality, points)?);
    clock.lap("oracle");
    report.timings = clock.finish();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    fn worked(agg: &str, acc: &str, mode: &str) -> Instance {
        parse_instance(&format!(
            r#"{{"d": 2, "probabilities": [0.5, 0.5], "positions": [[1.0, -2.0], [0.0, 1.0]],
                "aggregation": {agg}, "acceptance": {acc}, "mode": "{mode}"}}"#
        ))
        .unwrap()
    }

    #[test]
    fn worked_solve() {
        let r = solve(
            &worked(r#"{"kind": "sum"}"#, r#"{"kind": "nonnegative"}"#, "rho"),
            false,
        )
        .unwrap();
        assert!((r.duality.primal.value.to_f64() - 1.0).abs() < 1e-6);
        assert!(r.duality.gap_abs.unwrap() <= 1e-6);
        assert_eq!(r.exit_code(), 0);
        assert!(r.timings.is_none());
    }

    #[test]
    fn worked_rho_tilde() {
        let inst = worked(
            r#"{"kind": "sum_of_losses"}"#,
            r#"{"kind": "expected_shortfall", "level": 0.5}"#,
            "rho_tilde",
        );
        let r = verify(&inst, false).unwrap();
        assert!((r.duality.primal.value.to_f64() - 2.0).abs() < 1e-6);
        let failed: Vec<_> = r
            .properties
            .as_ref()
            .unwrap()
            .iter()
            .filter(|c| !c.passed)
            .collect();
        assert!(failed.is_empty(), "{failed:?}");
    }

    #[test]
    fn verify_and_oracle_on_worked_instance() {
        let inst = worked(r#"{"kind": "sum"}"#, r#"{"kind": "nonnegative"}"#, "rho");
        let r = verify(&inst, false).unwrap();
        let failed: Vec<_> = r
            .properties
            .as_ref()
            .unwrap()
            .iter()
            .filter(|c| !c.passed)
            .collect();
        assert!(failed.is_empty(), "{failed:?}");
        let r = oracle(&inst, 41, false).unwrap();
        let o = r.oracle.unwrap();
        assert!(o.value.as_ref().unwrap().agrees, "{o:?}");
        assert!(o.penalty.as_ref().unwrap().agrees, "{o:?}");
        let s = o.saddle.unwrap();
        assert!(s.discrepancy <= s.resolution, "{s:?}");
    }

    #[test]
    fn zero_position_records_properness() {
        let inst = parse_instance(
            r#"{"d": 2, "probabilities": [0.5, 0.5], "positions": [[0.0, 0.0], [0.0, 0.0]],
                "aggregation": {"kind": "sum"}, "acceptance": {"kind": "nonnegative"}}"#,
        )
        .unwrap();
        let r = solve(&inst, true).unwrap();
        assert!(r.duality.primal.value.to_f64() <= 1e-9);
        assert!(r.duality.proper);
        assert!(r.diagnostics.unwrap().proper);
        assert!(r.timings.is_some());
    }

    #[test]
    fn reports_are_deterministic() {
        let inst = worked(
            r#"{"kind": "componentwise_utility", "utilities": [{"kind": "exponential", "gamma": 1.0}, {"kind": "linear"}]}"#,
            r#"{"kind": "expected_shortfall", "level": 0.5}"#,
            "rho",
        );
        assert_eq!(
            verify(&inst, false).unwrap().to_json(),
            verify(&inst, false).unwrap().to_json()
        );
    }
}
