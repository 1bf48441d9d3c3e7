//! Report and trace serialization: JSON for check suites, CSV for
//! trajectories.
//!
//! Trace columns follow the block layout: `t` first, then one column per
//! coordinate named `b{mask}_c{i}` (block-major, coordinate within block).
//! Loop traces put a `sample_index` column right after `t` and emit one row
//! per sample per step.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::flow::Trajectory;
use crate::loop_space::LoopTrajectory;
use crate::tower::TowerRun;

/// One named identity with its measured deviation. For `must_fail` entries,
/// `passed` records whether the identity failed as loudly as required.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub must_fail: bool,
    pub deviation: f64,
    pub tol: f64,
}

impl CheckResult {
    /// Positive check: passes when the deviation stays within tolerance.
    pub fn expect_within(name: &str, deviation: f64, tol: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: deviation <= tol,
            must_fail: false,
            deviation,
            tol,
        }
    }

    /// Negative check: passes when the deviation is at least `threshold`.
    pub fn expect_at_least(name: &str, deviation: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: deviation >= threshold,
            must_fail: true,
            deviation,
            tol: threshold,
        }
    }
}

/// Everything one verification run produced, ready for JSON.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub object: String,
    pub depth: usize,
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn new(
        object: String,
        depth: usize,
        seed: u64,
        samples: usize,
        checks: Vec<CheckResult>,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        VerifyReport {
            object,
            depth,
            seed,
            samples,
            passed,
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn coordinate_header(order: usize, base_dim: usize) -> String {
    let mut header = String::from("t");
    for mask in 0..(1usize << order) {
        for c in 0..base_dim {
            write!(header, ",b{mask}_c{c}").expect("string write");
        }
    }
    header
}

fn kept_indices(len: usize, thin: usize) -> impl Iterator<Item = usize> {
    let thin = thin.max(1);
    (0..len).filter(move |k| k % thin == 0 || *k == len - 1)
}

/// CSV trace of a trajectory, keeping every `thin`-th step and the last.
pub fn trajectory_csv(traj: &Trajectory, thin: usize) -> String {
    let mut out = coordinate_header(traj.level(), traj.base_dim());
    out.push('\n');
    for k in kept_indices(traj.len(), thin) {
        write!(out, "{}", traj.times()[k]).expect("string write");
        for v in traj.states()[k].coords() {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    out
}

/// JSON trace with metadata around the raw samples.
#[derive(Debug, Serialize)]
struct TrajectoryJson<'a> {
    name: &'a str,
    level: usize,
    base_dim: usize,
    dt: f64,
    times: &'a [f64],
    states: Vec<&'a [f64]>,
}

pub fn trajectory_json(traj: &Trajectory, name: &str) -> String {
    let doc = TrajectoryJson {
        name,
        level: traj.level(),
        base_dim: traj.base_dim(),
        dt: traj.dt(),
        times: traj.times(),
        states: traj.states().iter().map(|s| s.coords()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("trace serializes")
}

/// CSV trace of a loop trajectory: one row per sample per kept step, with
/// the sample index in the second column.
pub fn loop_trajectory_csv(traj: &LoopTrajectory, thin: usize) -> String {
    let first = &traj.points()[0];
    let header = coordinate_header(first.order(), first.base_dim());
    let mut out = String::new();
    let (head_t, head_rest) = header.split_at(1);
    write!(out, "{head_t},sample_index{head_rest}").expect("string write");
    out.push('\n');
    for k in kept_indices(traj.len(), thin) {
        let point = &traj.points()[k];
        for (s, sample) in point.samples().iter().enumerate() {
            write!(out, "{},{s}", traj.times()[k]).expect("string write");
            for v in sample.coords() {
                write!(out, ",{v}").expect("string write");
            }
            out.push('\n');
        }
    }
    out
}

/// Per-step cross-level deviations of a tower run: column `dev_{i}_{j}` is
/// the worst coordinate gap between the projected level-`j` state and the
/// level-`i` state at that time.
pub fn threading_csv(run: &TowerRun) -> Result<String> {
    let mut out = String::from("t");
    let levels = run.trajectories.len();
    for i in 0..levels.saturating_sub(1) {
        write!(out, ",dev_{i}_{}", i + 1).expect("string write");
    }
    out.push('\n');
    let steps = run.trajectories[0].len();
    for k in 0..steps {
        write!(out, "{}", run.trajectories[0].times()[k]).expect("string write");
        for i in 0..levels - 1 {
            let upper = &run.trajectories[i + 1].states()[k];
            let lower = &run.trajectories[i].states()[k];
            let projected = upper.tangent_proj()?;
            let dev = projected
                .coords()
                .iter()
                .zip(lower.coords())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            write!(out, ",{dev}").expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::TangentElement;
    use crate::flow::{integrate_field, FlowSpec};
    use crate::lifts::VectorField;

    #[test]
    fn csv_headers_follow_the_block_layout() {
        let field = VectorField::parse(1, 2, &["x2", "x3", "0", "0"]).unwrap();
        let xi = TangentElement::new(1, 2, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        let spec = FlowSpec::new(0.0, 0.1, 0.05).unwrap();
        let traj = integrate_field(&field, &xi, &spec).unwrap();
        let csv = trajectory_csv(&traj, 1);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,b0_c0,b0_c1,b1_c0,b1_c1");
        assert_eq!(csv.lines().count(), 4); // header + 3 states
        let last = csv.lines().last().unwrap();
        let fields: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(fields[0], 0.1);
        assert!((fields[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn thinning_keeps_the_first_and_final_rows() {
        let field = VectorField::parse(0, 1, &["0"]).unwrap();
        let xi = TangentElement::new(0, 1, vec![4.0]).unwrap();
        let spec = FlowSpec::new(0.0, 1.0, 0.1).unwrap();
        let traj = integrate_field(&field, &xi, &spec).unwrap();
        let csv = trajectory_csv(&traj, 4);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert!(rows[0].starts_with("0,"));
        assert!(rows.last().unwrap().starts_with('1'));
        assert_eq!(rows.len(), 4); // k = 0, 4, 8, 10
    }

    #[test]
    fn verify_reports_aggregate_their_checks() {
        let checks = vec![
            CheckResult::expect_within("alpha", 1e-15, 1e-12),
            CheckResult::expect_at_least("beta_must_fail", 0.5, 0.1),
        ];
        let report = VerifyReport::new("flat".into(), 2, 42, 10, checks);
        assert!(report.passed);
        let json = report.to_json();
        assert!(json.contains("\"alpha\""));
        assert!(json.contains("\"must_fail\": true"));

        let bad = VerifyReport::new(
            "flat".into(),
            2,
            42,
            10,
            vec![CheckResult::expect_within("gamma", 1.0, 1e-12)],
        );
        assert!(!bad.passed);
    }
}
