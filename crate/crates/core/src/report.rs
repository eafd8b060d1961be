//! Combined report: bound, recursion, value iteration, shift scan and the
//! extremal chain for one function, with a list of named checks.

use serde::{Deserialize, Serialize};

use crate::bellman::{
    compare_bounds, standard_class_s_grid, verify_lemma1, ExtremalPolicy, GridConfig, Lemma1Sample,
};
use crate::chain::{exact_expectation, extremal_chain_law};
use crate::function_kit::{ClassSCheck, FunctionSpec};
use crate::recursion::{iterate, solve_bound, BoundResult, RecursionStatus, SolverConfig};
use crate::shift::{property_scan, ScanConfig, VIOLATION_THRESHOLD};
use crate::Result;

/// Slack when comparing the last recursion term with the bound.
const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub horizon: usize,
    pub step: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            step: 1.0 / 256.0,
            trials: 10_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSummary {
    pub status: RecursionStatus,
    pub steps: usize,
    pub b_last: f64,
    pub extrapolated_limit: Option<f64>,
    pub nondecreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub horizon: usize,
    pub step: f64,
    pub c_last: f64,
    pub b_last: f64,
    pub max_abs_diff: f64,
    pub budget: f64,
    pub within_budget: bool,
    pub structural_checks: usize,
    pub structural_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSummary {
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    pub min_gap: f64,
    pub injected_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub horizon: usize,
    pub expectation: f64,
    pub value: f64,
    pub difference: f64,
    pub budget: f64,
    pub total_probability: f64,
    pub min_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: FunctionSpec,
    pub family: String,
    pub class_s: ClassSCheck,
    /// Either "in class S" or "not in class S".
    pub classification: String,
    pub bound: BoundResult,
    pub recursion: RecursionSummary,
    pub comparison: ComparisonSummary,
    pub shift_scan: ShiftSummary,
    pub chain: ChainSummary,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn run_report(spec: &FunctionSpec, cfg: &ReportConfig) -> Result<Report> {
    let solver = SolverConfig::default();
    let class_s = spec.class_s_condition(&standard_class_s_grid())?;
    let bound = solve_bound(spec, &solver)?;
    let trace = iterate(spec, &solver)?;

    let grid = GridConfig::for_horizon(cfg.horizon, cfg.step);
    let (cmp, table) = compare_bounds(spec, cfg.horizon, &grid, &grid.aligned_solver(), &solver)?;
    let structure = verify_lemma1(&table, &Lemma1Sample::all_layers(&table))?;

    let scan = property_scan(
        spec,
        &ScanConfig {
            trials: cfg.trials,
            seed: cfg.seed,
            ..ScanConfig::default()
        },
    )?;

    let value = table.c(cfg.horizon);
    let budget = table.grid_error_budget();
    let policy = ExtremalPolicy::new(table);
    let (law, drifts) = extremal_chain_law(&policy, cfg.horizon)?;
    let expectation = exact_expectation(&law, spec);

    let mut checks = Vec::new();
    checks.push(check(
        "recursion_nondecreasing",
        trace.is_nondecreasing(),
        format!("{} steps", trace.steps()),
    ));
    match bound {
        BoundResult::Finite {
            b,
            cross_check_passed: true,
            ..
        } => checks.push(check(
            "recursion_below_bound",
            trace.last() <= b + BOUND_SLACK,
            format!("b_last = {}, B = {}", trace.last(), b),
        )),
        BoundResult::Finite { .. } => checks.push(check(
            "bound_cross_check_flagged",
            !class_s.holds,
            "root of psi is not a maximum of g; expected only outside class S".into(),
        )),
        BoundResult::Unbounded => checks.push(check(
            "recursion_not_converged",
            !matches!(trace.status, RecursionStatus::Converged { .. }),
            format!("status after {} steps", trace.steps()),
        )),
    }
    if class_s.holds {
        checks.push(check(
            "value_below_recursion",
            cmp.within_budget,
            format!(
                "max(c_n - b_n) = {}, budget {}",
                cmp.rows
                    .iter()
                    .map(|r| r.c_n - r.b_n)
                    .fold(f64::MIN, f64::max),
                cmp.budget
            ),
        ));
        checks.push(check(
            "shift_inequality_holds",
            scan.violations == 0,
            format!(
                "{} of {} trials below {}",
                scan.violations, scan.trials, VIOLATION_THRESHOLD
            ),
        ));
    } else {
        checks.push(check(
            "shift_violation_found",
            scan.violations > 0,
            format!("injected gap {}", scan.injected.gap),
        ));
    }
    checks.push(check(
        "value_structure",
        structure.violations.is_empty(),
        format!("{} checks", structure.checks),
    ));
    checks.push(check(
        "extremal_chain_matches_value",
        (expectation - value).abs() <= budget,
        format!("E f(Y_N) = {expectation}, V_N(0) = {value}"),
    ));
    let min_drift = drifts.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(check(
        "extremal_chain_submartingale",
        min_drift >= -1e-12,
        format!("min drift {min_drift}"),
    ));
    let all_pass = checks.iter().all(|c| c.passed);

    let b_last = cmp.rows.last().map_or(f64::NAN, |r| r.b_n);
    Ok(Report {
        spec: *spec,
        family: spec.family_name().to_string(),
        classification: if class_s.holds {
            "in class S".into()
        } else {
            "not in class S".into()
        },
        class_s,
        bound,
        recursion: RecursionSummary {
            status: trace.status,
            steps: trace.steps(),
            b_last: trace.last(),
            extrapolated_limit: trace.extrapolated_limit(),
            nondecreasing: trace.is_nondecreasing(),
        },
        comparison: ComparisonSummary {
            horizon: cmp.horizon,
            step: cmp.step,
            c_last: value,
            b_last,
            max_abs_diff: cmp.max_abs_diff,
            budget: cmp.budget,
            within_budget: cmp.within_budget,
            structural_checks: structure.checks,
            structural_violations: structure.violations.len(),
        },
        shift_scan: ShiftSummary {
            trials: scan.trials,
            seed: scan.seed,
            violations: scan.violations,
            min_gap: scan.min_gap,
            injected_gap: scan.injected.gap,
        },
        chain: ChainSummary {
            horizon: cfg.horizon,
            expectation,
            value,
            difference: expectation - value,
            budget,
            total_probability: law.total_probability(),
            min_drift,
        },
        checks,
        all_pass,
    })
}
