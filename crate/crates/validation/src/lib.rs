//! Runner for the acceptance suite: named criteria with a time budget, one
//! verdict line each.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

pub fn verdict(passed: bool, detail: impl Into<String>) -> anyhow::Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

pub struct Criterion {
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn() -> anyhow::Result<Outcome>,
}

/// Runs the criteria whose name contains one of `filters` (all of them if
/// `filters` is empty), writing one line per criterion to `out`. Returns the
/// number that failed; a criterion fails on a false verdict, an error, a
/// panic or an overrun budget.
pub fn run_criteria(criteria: &[Criterion], filters: &[String], out: &mut dyn Write) -> usize {
    let mut failed = 0;
    let mut ran = 0;
    for (i, c) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(c.run)) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome {
                passed: false,
                detail: format!("error: {e:#}"),
            },
            Err(_) => Outcome {
                passed: false,
                detail: "panicked".into(),
            },
        };
        let elapsed = start.elapsed();
        let passed = outcome.passed && elapsed <= c.budget;
        if !passed {
            failed += 1;
        }
        let _ = writeln!(
            out,
            "criterion {} {:<26} {} | {}; runtime {:.1?} (budget {:?})",
            i + 1,
            c.name,
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed,
            c.budget
        );
        let _ = out.flush();
    }
    let _ = writeln!(out, "acceptance: {} passed, {failed} failed", ran - failed);
    failed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok() -> anyhow::Result<Outcome> {
        verdict(true, "fine")
    }
    fn wrong() -> anyhow::Result<Outcome> {
        verdict(false, "off")
    }
    fn broken() -> anyhow::Result<Outcome> {
        anyhow::bail!("no data")
    }
    fn panics() -> anyhow::Result<Outcome> {
        panic!("boom")
    }
    fn slow() -> anyhow::Result<Outcome> {
        std::thread::sleep(Duration::from_millis(20));
        verdict(true, "late")
    }

    fn criterion(name: &'static str, run: fn() -> anyhow::Result<Outcome>) -> Criterion {
        Criterion {
            name,
            budget: Duration::from_millis(10),
            run,
        }
    }

    #[test]
    fn every_failure_mode_counts() {
        let all = [
            criterion("ok", ok),
            criterion("wrong", wrong),
            criterion("broken", broken),
            criterion("panics", panics),
            criterion("slow", slow),
        ];
        let mut buf = Vec::new();
        assert_eq!(run_criteria(&all, &[], &mut buf), 4);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().next().unwrap().contains("PASS"));
        assert!(text.contains("error: no data"));
        assert!(text.contains("panicked"));
        assert!(text.ends_with("acceptance: 1 passed, 4 failed\n"));
    }

    #[test]
    fn filters_select_by_substring() {
        let all = [criterion("ok", ok), criterion("wrong", wrong)];
        let mut buf = Vec::new();
        assert_eq!(run_criteria(&all, &["o".into(), "k".into()], &mut buf), 1);
        assert_eq!(run_criteria(&all, &["ok".into()], &mut Vec::new()), 0);
    }
}
