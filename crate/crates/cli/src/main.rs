use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use leibniz_cli::registry::{preset, preset_names};
use leibniz_cli::{run, write_report, CliError, Format, RunConfig};
use leibniz_core::aichinger::{
    box_probes, cube_residual, fit_quadratic, fit_symbol, recover_coefficients, SymbolG,
};
use leibniz_core::counterexample::{
    build_d, find_violation_triple, phi_quadratic_fit, PsiSolution,
};
use leibniz_core::faa::expansion_table;

#[derive(Parser)]
#[command(
    name = "leibniz",
    version,
    about = "Numerical checks of second-order Leibniz-type operator identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites and write a report.
    Verify {
        /// TOML run config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Report path. Overrides LEIBNIZ_REPORT and the config.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the partition table of the l-th logarithmic derivative.
    Faa {
        #[arg(long)]
        order: usize,
    },
    /// Recover (c0, c1, c2, d00) of a preset operator at sample points.
    Recover {
        #[arg(long)]
        operator: String,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Search for constants violating the trilinear identity for the
    /// composition counterexample.
    Counterexample {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cube residuals and quadratic fits of induced symbols.
    Aichinger {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        x: f64,
    },
}

fn verify(
    config: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    report: Option<PathBuf>,
    format: Option<Format>,
) -> Result<bool, CliError> {
    let mut cfg = match &config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol {
        cfg.tolerance = t;
    }
    if let Some(f) = format {
        cfg.format = f;
    }
    let path = cfg.resolve_report_path(report.as_deref());
    let rep = run(&cfg)?;
    write_report(&rep, cfg.format, &path)?;
    let mut failed = 0;
    for (suite, c) in rep.cases() {
        if !c.pass {
            failed += 1;
            println!(
                "FAIL {suite}/{} residual {:e} scale {:e} tol {:e}{}",
                c.case,
                c.max_residual,
                c.scale,
                c.tolerance,
                c.note
                    .as_deref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default()
            );
        }
    }
    for s in &rep.suites {
        println!(
            "{:<16} {:>4} passed {:>4} failed",
            s.suite, s.passed, s.failed
        );
    }
    println!("report: {}", path.display());
    Ok(failed == 0)
}

fn recover(name: &str, points: usize) -> Result<bool, CliError> {
    let op = preset(name)?;
    let Some(spec) = op.single() else {
        return Err(CliError::Config(format!(
            "`{name}` is a pair, not a single operator"
        )));
    };
    println!("{}", spec.describe());
    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>14} {:>10}",
        "x", "c0", "c1", "c2", "d00", "misfit"
    );
    let mut ok = true;
    for i in 0..points.max(1) {
        let x = if points <= 1 {
            0.0
        } else {
            -1.5 + 3.0 * i as f64 / (points - 1) as f64
        };
        match recover_coefficients(spec, x) {
            Ok(r) => println!(
                "{x:>10.4} {:>14.8} {:>14.8} {:>14.8} {:>14.8} {:>10.1e}",
                r.c0, r.c1, r.c2, r.d00, r.verification_residual
            ),
            Err(e) => {
                ok = false;
                println!("{x:>10.4} rejected: {e}");
            }
        }
    }
    Ok(ok)
}

fn counterexample(trials: usize, threshold: f64, seed: u64) -> Result<bool, CliError> {
    let sol = Arc::new(PsiSolution::cubic());
    let d = build_d(sol.clone());
    let fit = phi_quadratic_fit(&sol, 1.0, 10.0, 64)?;
    println!("phi quadratic fit residual on (1, 10): {:e}", fit.residual);
    match find_violation_triple(&d, seed, trials, threshold) {
        Ok(v) => {
            println!(
                "violation at trial {}: constants ({}, {}, {}) residual {:e} (scale {:e})",
                v.trial, v.x, v.y, v.z, v.residual.value, v.residual.scale
            );
            Ok(true)
        }
        Err(e) => {
            println!("{e}");
            Ok(false)
        }
    }
}

fn aichinger(dim: usize, samples: usize, x: f64) -> Result<bool, CliError> {
    let mut ok = true;
    println!("{:<26} {:>14} {:>14}", "operator", "cube", "fit");
    for name in preset_names() {
        let op = preset(&name)?;
        let Some(spec) = op.single() else { continue };
        let g = SymbolG::induced(spec, dim);
        let probes = box_probes(dim, 3, 1);
        let cube = cube_residual(&g, x, &probes[0], &probes[1], &probes[2]);
        let fit = fit_symbol(&g, x, samples, 2);
        let show = |r: Result<f64, leibniz_core::Error>| match r {
            Ok(v) => format!("{v:>14.3e}"),
            Err(_) => format!("{:>14}", "undefined"),
        };
        println!(
            "{name:<26} {} {}",
            show(cube.map(|r| r.scaled())),
            show(fit.map(|m| m.residual))
        );
    }
    let norm: Vec<_> = box_probes(dim, samples, 3)
        .into_iter()
        .map(|v| {
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            (v, n * n * n)
        })
        .collect();
    match fit_quadratic(&norm, dim) {
        Ok(m) => println!("{:<26} {:>14} {:>14.3e}", "|v|^3", "", m.residual),
        Err(e) => {
            ok = false;
            println!("|v|^3 fit failed: {e}");
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Verify {
            config,
            seed,
            tol,
            report,
            format,
        } => verify(config, seed, tol, report, format),
        Command::Faa { order } => expansion_table(order)
            .map(|t| {
                print!("{t}");
                true
            })
            .map_err(CliError::from),
        Command::Recover { operator, points } => recover(&operator, points),
        Command::Counterexample {
            trials,
            threshold,
            seed,
        } => counterexample(trials, threshold, seed),
        Command::Aichinger { dim, samples, x } => aichinger(dim, samples, x),
    };
    match out {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
