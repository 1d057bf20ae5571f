//! Case builders for each suite. Every case is an independent job that
//! receives its own seed, so cases can run in any order or in parallel.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use leibniz_core::aichinger::{
    box_probes, cube_residual, fit_quadratic, fit_symbol, recover_coefficients, SymbolG, PROBE_DIM,
    RECOVERY_TOL,
};
use leibniz_core::corpus::{
    self, lookup, sample_common, sample_points, DomainSet, FunctionSpec, Interval, DEFAULT_MARGIN,
    POSITIVE_CORPUS,
};
use leibniz_core::counterexample::{
    build_d, find_violation_triple, phi_quadratic_fit, residual_powers_composition, PsiSolution,
};
use leibniz_core::faa::{faa_ln_derivative, partitions};
use leibniz_core::operators::{
    apply, diagonal_difference_ratio, localization_check, residual_id2, residual_leibniz,
    residual_powers, residual_reduction, residual_second_leibniz, shift_commutator, KmPair,
    OperatorSpec, Residual,
};
use leibniz_core::{Error, Jet, K_MAX};

use crate::config::{RunConfig, Suite};
use crate::error::CliError;
use crate::registry::{composition_corpus, third_derivative, Built, Expect, NamedOperator};
use crate::report::{Accumulator, CaseHead, CaseResult};

pub const FIT_TOL: f64 = 1e-8;
pub const RECURRENCE_TOL: f64 = 1e-10;
pub const RECURRENCE_POINTS: usize = 128;
pub const NON_QUADRATIC_THRESHOLD: f64 = 0.01;
pub const VIOLATION_THRESHOLD: f64 = 1e-6;
pub const VIOLATION_TRIALS: usize = 1000;
pub const FAA_JETS: usize = 64;
pub const FAA_TOL: f64 = 1e-9;
/// Allowed spread of the measured diagonal constant across samples.
pub const RATIO_SPREAD_TOL: f64 = 1e-6;
/// Recovery and the probe-fit checks evaluate coefficients on this window.
const COEFF_WINDOW: f64 = 2.0;

pub type JobFn = Box<dyn FnOnce(u64) -> CaseResult + Send>;

pub struct Job {
    pub suite: Suite,
    pub run: JobFn,
}

/// Shared inputs of every suite.
#[derive(Clone)]
pub struct Context {
    pub corpus: Vec<FunctionSpec>,
    pub positive: Vec<FunctionSpec>,
    pub composition: Vec<FunctionSpec>,
    pub operators: Vec<NamedOperator>,
    pub points: usize,
    pub triples: usize,
    pub tol: f64,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let corpus = cfg.functions()?;
        let mut positive: Vec<FunctionSpec> = corpus
            .iter()
            .filter(|f| POSITIVE_CORPUS.contains(&f.name()))
            .cloned()
            .collect();
        if positive.is_empty() {
            positive = POSITIVE_CORPUS
                .iter()
                .map(|n| lookup(n))
                .collect::<Result<_, _>>()?;
        }
        Ok(Context {
            corpus,
            positive,
            composition: composition_corpus(),
            operators: cfg.built_operators()?,
            points: cfg.points_per_check,
            triples: cfg.triples,
            tol: cfg.tolerance,
        })
    }

    fn pool_for(&self, op: &OperatorSpec) -> Vec<FunctionSpec> {
        match op {
            OperatorSpec::Composition { .. } => self.composition.clone(),
            OperatorSpec::LogPolynomial(_) => self.positive.clone(),
            _ => self.corpus.clone(),
        }
    }
}

pub fn jobs(suite: Suite, ctx: &Context) -> Vec<Job> {
    let runs = match suite {
        Suite::Identities => identities(ctx),
        Suite::Faa => faa(),
        Suite::Aichinger => aichinger(ctx),
        Suite::Recover => recover(ctx),
        Suite::Counterexample => counterexample(ctx),
    };
    runs.into_iter().map(|run| Job { suite, run }).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(pool: &[FunctionSpec]) -> Vec<String> {
    pool.iter()
        .map(|f| f.name().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

type Check3 = dyn Fn(&FunctionSpec, &FunctionSpec, &FunctionSpec, f64) -> leibniz_core::Result<Residual>
    + Send
    + Sync;

/// Seeded corpus triples, `points` samples each.
fn triple_case(
    head: CaseHead,
    pool: Vec<FunctionSpec>,
    triples: usize,
    points: usize,
    tol: f64,
    check: Arc<Check3>,
) -> JobFn {
    Box::new(move |seed| {
        let mut rng = rng(seed);
        let mut acc = Accumulator::new();
        let mut used = Vec::new();
        'outer: for _ in 0..triples {
            let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
            let (f, g, h) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let xs = match sample_common(&[&f, &g, &h], points, rng.gen(), DEFAULT_MARGIN) {
                Ok(xs) => xs,
                Err(e) => {
                    acc.fail(format!("{}, {}, {}: {e}", f.name(), g.name(), h.name()));
                    break;
                }
            };
            for x in xs {
                acc.push_result(check(&f, &g, &h, x));
                if acc.failed() {
                    break 'outer;
                }
            }
            used.extend([f, g, h]);
        }
        acc.finish(head.functions(&names(&used)), tol)
    })
}

type Check2 =
    dyn Fn(&FunctionSpec, &FunctionSpec, f64) -> leibniz_core::Result<Residual> + Send + Sync;

/// Every ordered pair of the pool, `points` samples each.
fn pair_case(
    head: CaseHead,
    pool: Vec<FunctionSpec>,
    points: usize,
    tol: f64,
    check: Arc<Check2>,
) -> JobFn {
    Box::new(move |seed| {
        let mut rng = rng(seed);
        let mut acc = Accumulator::new();
        'outer: for f in &pool {
            for g in &pool {
                let xs = match sample_common(&[f, g], points, rng.gen(), DEFAULT_MARGIN) {
                    Ok(xs) => xs,
                    Err(e) => {
                        acc.fail(e);
                        break 'outer;
                    }
                };
                for x in xs {
                    acc.push_result(check(f, g, x));
                    if acc.failed() {
                        break 'outer;
                    }
                }
            }
        }
        acc.finish(head.functions(&names(&pool)), tol)
    })
}

type Check1 =
    dyn Fn(&FunctionSpec, f64, &mut ChaCha8Rng) -> leibniz_core::Result<Residual> + Send + Sync;

/// Each function of the pool, `points` samples each.
fn single_case(
    head: CaseHead,
    pool: Vec<FunctionSpec>,
    points: usize,
    tol: f64,
    check: Arc<Check1>,
) -> JobFn {
    Box::new(move |seed| {
        let mut rng = rng(seed);
        let mut acc = Accumulator::new();
        'outer: for f in &pool {
            let xs = match sample_common(&[f], points, rng.gen(), DEFAULT_MARGIN) {
                Ok(xs) => xs,
                Err(e) => {
                    acc.fail(e);
                    break;
                }
            };
            for x in xs {
                acc.push_result(check(f, x, &mut rng));
                if acc.failed() {
                    break 'outer;
                }
            }
        }
        acc.finish(head.functions(&names(&pool)), tol)
    })
}

fn window_points(n: usize, seed: u64) -> leibniz_core::Result<Vec<f64>> {
    sample_points(
        &DomainSet::interval(-COEFF_WINDOW, COEFF_WINDOW)?,
        n,
        seed,
        0.0,
        &[],
    )
}

// ---------------------------------------------------------------------------
// identities

fn identities(ctx: &Context) -> Vec<JobFn> {
    let mut out = Vec::new();
    let (points, triples, tol) = (ctx.points, ctx.triples, ctx.tol);
    for named in &ctx.operators {
        let name = named.name.clone();
        match &named.built {
            Built::Single(op) => {
                let pool = ctx.pool_for(op);
                let d = op.clone();
                out.push(triple_case(
                    CaseHead::new(format!("id2/{name}"), op.describe()).expect(named.expect),
                    pool.clone(),
                    triples,
                    points,
                    tol,
                    Arc::new(move |f, g, h, x| residual_id2(&d, f, g, h, x)),
                ));
                let d = op.clone();
                let powers_expect = match op {
                    OperatorSpec::Composition { .. } => Expect::Hold,
                    _ => named.expect,
                };
                out.push(single_case(
                    CaseHead::new(format!("id_powers/{name}"), op.describe()).expect(powers_expect),
                    pool.clone(),
                    points,
                    tol,
                    Arc::new(move |f, x, _| residual_powers(&d, f, x)),
                ));
                if !matches!(op, OperatorSpec::Composition { .. }) {
                    out.push(constants_case(&name, op, points));
                }
                out.push(localization_case(&name, op, ctx, points));
                // a black box gives no coefficients to predict the outcome from
                if !matches!(op, OperatorSpec::BlackBox { .. }) {
                    out.push(isotropy_case(&name, op, pool, points, tol));
                }
            }
            Built::Pair(pair) => {
                let pool = ctx.corpus.clone();
                let describe = named.describe();
                let p = pair.clone();
                out.push(pair_case(
                    CaseHead::new(format!("second_leibniz/{name}"), describe.clone())
                        .expect(named.expect),
                    pool.clone(),
                    points,
                    tol,
                    Arc::new(move |f, g, x| residual_second_leibniz(&p, f, g, x)),
                ));
                let p = pair.clone();
                out.push(triple_case(
                    CaseHead::new(format!("reduction/{name}"), describe).expect(named.expect),
                    pool,
                    triples,
                    points,
                    tol,
                    Arc::new(move |f, g, h, x| residual_reduction(&p, f, g, h, x)),
                ));
            }
        }
    }
    out.extend(leibniz_cases(ctx));
    let d3 = third_derivative();
    let describe = d3.describe();
    let d = d3.clone();
    out.push(triple_case(
        CaseHead::new("id2/third_derivative", describe).expect(Expect::Violation),
        ctx.corpus.clone(),
        triples,
        points,
        tol,
        Arc::new(move |f, g, h, x| residual_id2(&d, f, g, h, x)),
    ));
    out.push(delta3_case(triples, points));
    out
}

/// `D(1)(x) = D(-1)(x) = 0` exactly.
fn constants_case(name: &str, op: &OperatorSpec, points: usize) -> JobFn {
    let head = CaseHead::new(format!("constants/{name}"), op.describe());
    let op = op.clone();
    let levels: Vec<f64> = match op {
        OperatorSpec::LogPolynomial(_) => vec![1.0],
        _ => vec![1.0, -1.0],
    };
    Box::new(move |seed| {
        let mut acc = Accumulator::new();
        let fns: Vec<FunctionSpec> = levels.iter().map(|&c| corpus::constant_fn(c)).collect();
        match window_points(points, seed) {
            Ok(xs) => {
                for x in xs {
                    for f in &fns {
                        match apply(&op, f, x) {
                            Ok(v) => acc.push_abs(v),
                            Err(e) => acc.fail(e),
                        }
                    }
                }
            }
            Err(e) => acc.fail(e),
        }
        let names: Vec<String> = fns.iter().map(|f| f.name().to_string()).collect();
        acc.finish(head.functions(&names), 0.0)
    })
}

/// Two inputs that agree on `(-2, 1/2)` and differ beyond it.
fn localization_case(name: &str, op: &OperatorSpec, ctx: &Context, points: usize) -> JobFn {
    let head = CaseHead::new(format!("localization/{name}"), op.describe());
    let op = op.clone();
    let base = match op {
        OperatorSpec::Composition { .. } => ctx.composition[0].clone(),
        _ => lookup("two_plus_sin").expect("builtin"),
    };
    Box::new(move |seed| {
        let mut acc = Accumulator::new();
        let cut = 0.5;
        let bumped = corpus::sum(&base, &corpus::flat_until(cut)).map(|f| f.renamed("bumped"));
        let run = || -> leibniz_core::Result<Vec<f64>> {
            let bumped = bumped?;
            let j = Interval::new(-2.0, cut)?;
            let xs = sample_points(
                &DomainSet::interval(-2.0, cut)?,
                points,
                seed,
                DEFAULT_MARGIN,
                &[],
            )?;
            xs.iter()
                .map(|&x| Ok(localization_check(&op, &base, &bumped, j, &[x])?.max_diff))
                .collect()
        };
        match run() {
            Ok(diffs) => diffs.into_iter().for_each(|d| acc.push_abs(d)),
            Err(e) => acc.fail(e),
        }
        acc.finish(head.functions(&[base.name(), "bumped"]), 0.0)
    })
}

/// Shift commutator. Constant coefficients must commute with every shift;
/// operators with varying coefficients must not.
fn isotropy_case(
    name: &str,
    op: &OperatorSpec,
    pool: Vec<FunctionSpec>,
    points: usize,
    tol: f64,
) -> JobFn {
    let expect = if op.has_constant_coefficients() {
        Expect::Hold
    } else {
        Expect::Violation
    };
    let d = op.clone();
    single_case(
        CaseHead::new(format!("isotropy/{name}"), op.describe()).expect(expect),
        pool,
        points,
        tol,
        Arc::new(move |f, x, rng| {
            let s: f64 = rng.gen_range(-1.0..1.0);
            // D(tau_s f)(x - s) - D(f)(x) only reads f at x
            shift_commutator(&d, s, f, x - s)
        }),
    )
}

fn leibniz_cases(ctx: &Context) -> Vec<JobFn> {
    let (points, tol) = (ctx.points, ctx.tol);
    let mut out = Vec::new();
    let firsts = [
        (
            "leibniz/log_plus_first",
            OperatorSpec::characterized(1.3, -0.7, 0.0, 0.0, 1),
        ),
        (
            "leibniz/log_plus_first_variable",
            crate::registry::OperatorEntry::characterized("", "sin", "one_plus_x2", 0.0, 0.0, 1)
                .build()
                .map(|n| n.single().cloned().expect("single"))
                .map_err(|e| Error::InvalidOperator(e.to_string())),
        ),
    ];
    for (case, t) in firsts {
        let t = t.expect("valid first-order operator");
        let head = CaseHead::new(case, t.describe());
        out.push(pair_case(
            head,
            ctx.corpus.clone(),
            points,
            tol,
            Arc::new(move |f, g, x| residual_leibniz(&t, f, g, x)),
        ));
    }
    let t = OperatorSpec::second_derivative(1.0);
    let id = lookup("identity").expect("builtin");
    out.push(pair_case(
        CaseHead::new("leibniz/second_derivative_control", t.describe()).expect(Expect::Violation),
        vec![id],
        points,
        tol,
        Arc::new(move |f, g, x| residual_leibniz(&t, f, g, x)),
    ));
    let (b, c) = (0.6, -1.4);
    let loose = KmPair {
        t: OperatorSpec::linear(b, 0.5 * c * c),
        a: OperatorSpec::linear(c, 0.0),
    };
    let describe = format!("pair(T={}, A={})", loose.t.describe(), loose.a.describe());
    out.push(pair_case(
        CaseHead::new("second_leibniz/unnormalized_diffusion_control", describe)
            .expect(Expect::Violation),
        ctx.corpus.clone(),
        points,
        tol,
        Arc::new(move |f, g, x| residual_second_leibniz(&loose, f, g, x)),
    ));
    out
}

/// Measures `Delta_{f,g,h} A3*(0) / A3(f,g,h)` for the trilinear map of
/// `D = f'''`. The measured value is the mean ratio; the residual is the
/// spread across samples.
fn delta3_case(triples: usize, points: usize) -> JobFn {
    let d = third_derivative();
    let head = CaseHead::new("delta3_diagonal_constant", d.describe());
    let pool: Vec<FunctionSpec> = [
        "sin",
        "cos",
        "exp",
        "square_minus_one",
        "cube",
        "lorentzian",
        "two_plus_sin",
    ]
    .iter()
    .map(|n| lookup(n).expect("builtin"))
    .collect();
    Box::new(move |seed| {
        let mut rng = rng(seed);
        let mut ratios = Vec::new();
        let mut error = None;
        'outer: for _ in 0..triples {
            let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
            let (f, g, h) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let xs = match sample_common(&[&f, &g, &h], points, rng.gen(), DEFAULT_MARGIN) {
                Ok(xs) => xs,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            };
            for x in xs {
                match diagonal_difference_ratio(&d, &f, &g, &h, x) {
                    Ok(r) => ratios.push(r),
                    // a vanishing trilinear value carries no information
                    Err(Error::Precondition(_)) => {}
                    Err(e) => {
                        error = Some(e);
                        break 'outer;
                    }
                }
            }
        }
        let mut acc = Accumulator::new();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in &ratios {
            acc.push(Residual {
                value: r - mean,
                scale: mean.abs().max(1.0),
            });
        }
        if let Some(e) = error {
            acc.fail(e);
        }
        let mut res = acc.finish(head.functions(&names(&pool)), RATIO_SPREAD_TOL);
        res.measured = Some(mean);
        res
    })
}

// ---------------------------------------------------------------------------
// faa

/// Partitions of `n` into parts no larger than `max`, counted by recursion.
pub fn brute_force_partition_count(n: usize, max: usize) -> usize {
    if n == 0 {
        return 1;
    }
    (1..=max.min(n))
        .map(|p| brute_force_partition_count(n - p, p))
        .sum()
}

fn faa() -> Vec<JobFn> {
    let mut out: Vec<JobFn> = Vec::new();
    for l in 1..=K_MAX {
        out.push(Box::new(move |_| {
            let head = CaseHead::new(format!("partition_count/l{l}"), "partitions");
            let mut acc = Accumulator::new();
            let want = brute_force_partition_count(l, l);
            let mut measured = None;
            match partitions(l) {
                Ok(p) => {
                    measured = Some(p.len() as f64);
                    acc.push_abs(p.len() as f64 - want as f64);
                }
                Err(e) => acc.fail(e),
            }
            let mut res = acc.finish(head, 0.0);
            res.measured = measured;
            res
        }));
    }
    for l in 1..=K_MAX {
        out.push(Box::new(move |seed| {
            let head = CaseHead::new(format!("ln_derivative/l{l}"), "faa_di_bruno");
            let mut rng = rng(seed);
            let mut acc = Accumulator::new();
            for _ in 0..FAA_JETS {
                let mut d = vec![rng.gen_range(0.2..3.0)];
                d.extend((0..K_MAX).map(|_| rng.gen_range(-2.0..2.0)));
                let run = || -> leibniz_core::Result<Residual> {
                    let jet = Jet::from_derivs(&d)?;
                    let want = jet.ln()?.get(l)?;
                    let got = faa_ln_derivative(&jet, l)?;
                    Ok(Residual {
                        value: got - want,
                        scale: want.abs().max(1.0),
                    })
                };
                acc.push_result(run());
            }
            acc.finish(head.functions(&["random_positive_jets"]), FAA_TOL)
        }));
    }
    out
}

// ---------------------------------------------------------------------------
// aichinger

fn symbol_dim(op: &OperatorSpec) -> usize {
    op.order() + 1
}

fn aichinger(ctx: &Context) -> Vec<JobFn> {
    let (points, tol) = (ctx.points, ctx.tol);
    let mut out: Vec<JobFn> = Vec::new();
    for named in &ctx.operators {
        let Some(op) = named.single() else { continue };
        if matches!(op, OperatorSpec::Composition { .. }) || named.expect == Expect::Violation {
            continue;
        }
        let name = named.name.clone();
        let dim = symbol_dim(op);
        let g = SymbolG::induced(op, dim);
        let head = CaseHead::new(format!("cube/{name}"), op.describe());
        out.push(cube_job(head, g.clone(), points, tol));
        let head = CaseHead::new(format!("fit/{name}"), op.describe());
        out.push(Box::new(move |seed| {
            let mut acc = Accumulator::new();
            let cols = 1 + dim + dim * (dim + 1) / 2;
            match window_points(points, seed) {
                Ok(xs) => {
                    for (i, x) in xs.into_iter().enumerate() {
                        match fit_symbol(&g, x, 4 * cols, seed.wrapping_add(i as u64)) {
                            Ok(m) => acc.push_abs(m.residual),
                            Err(e) => acc.fail(e),
                        }
                    }
                }
                Err(e) => acc.fail(e),
            }
            acc.finish(head, FIT_TOL)
        }));
    }
    let d3 = third_derivative();
    let head = CaseHead::new("cube/third_derivative", d3.describe()).expect(Expect::Violation);
    out.push(cube_job(head, SymbolG::induced(&d3, 4), points, tol));
    out.push(Box::new(|seed| {
        let head = CaseHead::new("fit/cubic_norm", "|v|^3").expect(Expect::Violation);
        let samples: Vec<_> = box_probes(PROBE_DIM, 60, seed)
            .into_iter()
            .map(|v| {
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                (v, n * n * n)
            })
            .collect();
        let mut acc = Accumulator::new();
        let mut measured = None;
        match fit_quadratic(&samples, PROBE_DIM) {
            Ok(m) => {
                measured = Some(m.residual);
                acc.push_abs(m.residual);
            }
            Err(e) => acc.fail(e),
        }
        let mut res = acc.finish(head, NON_QUADRATIC_THRESHOLD);
        res.measured = measured;
        res
    }));
    out
}

fn cube_job(head: CaseHead, g: SymbolG, points: usize, tol: f64) -> JobFn {
    Box::new(move |seed| {
        let mut acc = Accumulator::new();
        match window_points(points, seed) {
            Ok(xs) => {
                let probes = box_probes(g.dim(), 3 * xs.len(), seed);
                for (x, t) in xs.iter().zip(probes.chunks(3)) {
                    acc.push_result(cube_residual(&g, *x, &t[0], &t[1], &t[2]));
                }
            }
            Err(e) => acc.fail(e),
        }
        acc.finish(head, tol)
    })
}

// ---------------------------------------------------------------------------
// recover

/// `(c0, c1, c2, d00)` of the operators the recovery step should reproduce.
fn truth(op: &OperatorSpec, x: f64) -> Option<[f64; 4]> {
    match op {
        OperatorSpec::Characterized(c) => {
            let [c0, c1, c2, d00] = c.coefficients();
            let k = c.k();
            Some([
                c0.at(x),
                if k >= 1 { c1.at(x) } else { 0.0 },
                if k >= 2 { c2.at(x) } else { 0.0 },
                d00.at(x),
            ])
        }
        OperatorSpec::LinearDifferential { c1, c2 } => Some([0.0, c1.at(x), c2.at(x), 0.0]),
        OperatorSpec::SecondDerivativeOnly { c2 } => Some([0.0, 0.0, c2.at(x), 0.0]),
        _ => None,
    }
}

fn recover(ctx: &Context) -> Vec<JobFn> {
    let points = ctx.points;
    let mut out: Vec<JobFn> = Vec::new();
    for named in &ctx.operators {
        let Some(op) = named.single() else { continue };
        if truth(op, 0.0).is_none() || named.expect == Expect::Violation {
            continue;
        }
        let head = CaseHead::new(format!("recover/{}", named.name), op.describe());
        let op = op.clone();
        out.push(Box::new(move |seed| {
            let mut acc = Accumulator::new();
            match window_points(points, seed) {
                Ok(xs) => {
                    for x in xs {
                        match recover_coefficients(&op, x) {
                            Ok(r) => {
                                let want = truth(&op, x).expect("checked above");
                                let err = [r.c0, r.c1, r.c2, r.d00]
                                    .iter()
                                    .zip(want)
                                    .map(|(a, b)| (a - b).abs())
                                    .fold(0.0, f64::max);
                                acc.push_abs(err);
                            }
                            Err(e) => acc.fail(e),
                        }
                    }
                }
                Err(e) => acc.fail(e),
            }
            acc.finish(head, RECOVERY_TOL)
        }));
    }
    let controls = [
        (
            "recover/counterexample",
            leibniz_core::counterexample::counterexample_operator(Arc::new(PsiSolution::cubic())),
        ),
        ("recover/third_derivative", third_derivative()),
    ];
    for (case, op) in controls {
        let head = CaseHead::new(case, op.describe()).expect(Expect::Violation);
        out.push(Box::new(move |seed| {
            // 1 marks a rejection, 0 an accepted recovery
            let mut acc = Accumulator::new();
            let mut note = None;
            match window_points(points, seed) {
                Ok(xs) => {
                    for x in xs {
                        match recover_coefficients(&op, x) {
                            Ok(_) => acc.push_abs(0.0),
                            Err(e @ Error::NotInFamily { .. }) => {
                                note.get_or_insert_with(|| e.to_string());
                                acc.push_abs(1.0);
                            }
                            Err(e) => acc.fail(e),
                        }
                    }
                }
                Err(e) => acc.fail(e),
            }
            let mut res = acc.finish(head, 0.5);
            if res.note.is_none() {
                res.note = note;
            }
            // every point must be rejected, not just the worst one
            if res.samples > 0 && res.pass {
                res.pass = res.max_residual == 1.0;
            }
            res
        }));
    }
    out
}

// ---------------------------------------------------------------------------
// counterexample

fn counterexample(ctx: &Context) -> Vec<JobFn> {
    let (points, triples, tol) = (ctx.points, ctx.triples, ctx.tol);
    let sol = Arc::new(PsiSolution::cubic());
    let op = OperatorSpec::composition(build_d(sol.clone()));
    let describe = op.describe();
    let mut out: Vec<JobFn> = Vec::new();

    let s = sol.clone();
    out.push(Box::new(move |seed| {
        let head = CaseHead::new("recurrence", format!("psi[{}]", s.seed_name()));
        let mut rng = rng(seed);
        let mut acc = Accumulator::new();
        for _ in 0..RECURRENCE_POINTS {
            let u: f64 = rng.gen_range(0.0..8.0);
            acc.push_result(s.recurrence_residual(u));
        }
        acc.finish(head, RECURRENCE_TOL)
    }));

    let d = build_d(sol.clone());
    out.push(single_case(
        CaseHead::new("id_powers/counterexample", describe.clone()),
        ctx.composition.clone(),
        points,
        tol,
        Arc::new(move |f, x, _| residual_powers_composition(&d, f, x)),
    ));

    let d = op.clone();
    out.push(triple_case(
        CaseHead::new("id2/counterexample", describe.clone()).expect(Expect::Violation),
        ctx.composition.clone(),
        triples,
        points,
        tol,
        Arc::new(move |f, g, h, x| residual_id2(&d, f, g, h, x)),
    ));

    let d = build_d(sol.clone());
    let head = CaseHead::new("id2_violation_search", describe).expect(Expect::Violation);
    out.push(Box::new(move |seed| {
        let mut acc = Accumulator::new();
        let mut measured = None;
        let mut note = None;
        match find_violation_triple(&d, seed, VIOLATION_TRIALS, VIOLATION_THRESHOLD) {
            Ok(v) => {
                acc.push_abs(v.residual.value.abs());
                measured = Some(v.trial as f64);
                note = Some(format!(
                    "constants ({:.6}, {:.6}, {:.6}) at trial {}",
                    v.x, v.y, v.z, v.trial
                ));
            }
            Err(e) => acc.fail(e),
        }
        let mut res = acc.finish(head.functions(&["constants"]), VIOLATION_THRESHOLD);
        res.measured = measured;
        res.note = res.note.or(note);
        res
    }));

    let quad = build_d(Arc::new(PsiSolution::quadratic_phi()));
    let head = CaseHead::new(
        "id2_violation_search/quadratic_seed",
        quad.name().to_string(),
    );
    out.push(Box::new(move |seed| {
        let mut acc = Accumulator::new();
        match find_violation_triple(&quad, seed, VIOLATION_TRIALS, VIOLATION_THRESHOLD) {
            Ok(v) => acc.push_abs(v.residual.value.abs()),
            Err(Error::NoViolationFound { .. }) => acc.push_abs(0.0),
            Err(e) => acc.fail(e),
        }
        acc.finish(head.functions(&["constants"]), VIOLATION_THRESHOLD)
    }));

    out.push(Box::new(move |_| {
        let head = CaseHead::new(
            "phi_quadratic_fit",
            format!("phi[{}] on (1, 10)", sol.seed_name()),
        )
        .expect(Expect::Violation);
        let mut acc = Accumulator::new();
        let mut measured = None;
        match phi_quadratic_fit(&sol, 1.0, 10.0, 64) {
            Ok(m) => {
                measured = Some(m.residual);
                acc.push_abs(m.residual);
            }
            Err(e) => acc.fail(e),
        }
        let mut res = acc.finish(head, NON_QUADRATIC_THRESHOLD);
        res.measured = measured;
        res
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_counts() {
        let counts: Vec<usize> = (1..=8).map(|n| brute_force_partition_count(n, n)).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
    }
}
