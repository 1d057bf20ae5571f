//! Batch driver for the leibniz-core checks: config loading, suite
//! execution and report writing.

pub mod config;
pub mod error;
pub mod registry;
pub mod report;
pub mod suites;

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{Format, RunConfig, Suite};
pub use error::CliError;
pub use report::{CaseResult, Report, SuiteReport};

use suites::{Context, Job};

/// Seed of case `index` in `suite`, independent of scheduling and of which
/// other suites run.
pub fn case_seed(seed: u64, suite: Suite, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((suite as u64) << 32) | index as u64);
    rng.next_u64()
}

/// Runs every selected suite. Cases run on all available cores; results are
/// assembled in declaration order.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let mut order = Vec::new();
    for s in &cfg.suites {
        if !order.contains(s) {
            order.push(*s);
        }
    }
    let mut queue = VecDeque::new();
    for &suite in &order {
        for (i, job) in suites::jobs(suite, &ctx).into_iter().enumerate() {
            let seed = case_seed(cfg.seed, suite, i);
            queue.push_back((queue.len(), seed, job));
        }
    }
    let total = queue.len();
    let queue = Mutex::new(queue);
    let results: Mutex<Vec<Option<(Suite, CaseResult)>>> = Mutex::new(vec![None; total]);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop_front();
                let Some((slot, seed, Job { suite, run })) = next else {
                    break;
                };
                let res = run(seed);
                results.lock().expect("results lock")[slot] = Some((suite, res));
            });
        }
    });
    let results = results.into_inner().expect("results lock");
    let mut suites: Vec<SuiteReport> = order
        .iter()
        .map(|s| SuiteReport {
            suite: s.as_str().to_string(),
            passed: 0,
            failed: 0,
            cases: Vec::new(),
        })
        .collect();
    for (suite, case) in results.into_iter().flatten() {
        let idx = order.iter().position(|s| *s == suite).expect("known suite");
        let rep = &mut suites[idx];
        if case.pass {
            rep.passed += 1;
        } else {
            rep.failed += 1;
        }
        rep.cases.push(case);
    }
    let wall = start.elapsed().as_millis() as u64;
    Ok(Report::new(cfg, suites, wall))
}

/// Writes `report` in `format` to `path`, creating parent directories.
pub fn write_report(report: &Report, format: Format, path: &Path) -> Result<(), CliError> {
    let text = report.render(format)?;
    let werr = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(werr)?;
    }
    std::fs::write(path, text).map_err(werr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_seeds_differ() {
        let a = case_seed(1, Suite::Identities, 0);
        assert_ne!(a, case_seed(1, Suite::Identities, 1));
        assert_ne!(a, case_seed(1, Suite::Faa, 0));
        assert_ne!(a, case_seed(2, Suite::Identities, 0));
        assert_eq!(a, case_seed(1, Suite::Identities, 0));
    }
}
