//! Test functions with explicit open domains.
//!
//! Every [`FunctionSpec`] evaluates its own jet at a point; built-in entries
//! also carry a closed-form derivative oracle that is independent of the jet
//! arithmetic, so the two can be checked against each other.

use std::f64::consts::{E, FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{Jet, FACTORIALS, K_MAX};

/// Default distance kept from interval ends and known zeros when sampling.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// Unbounded interval ends are clipped to this window when sampling.
pub const SAMPLE_WINDOW: f64 = 4.0;

/// An open interval; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// A nonempty union of disjoint open intervals, sorted by left end.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSet {
    intervals: Vec<Interval>,
}

impl DomainSet {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("empty domain".into()));
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in intervals.windows(2) {
            if w[0].hi > w[1].lo {
                return Err(Error::InvalidArgument(format!(
                    "overlapping intervals ({}, {}) and ({}, {})",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(DomainSet { intervals })
    }

    pub fn real_line() -> Self {
        DomainSet {
            intervals: vec![Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        DomainSet::new(vec![Interval::new(lo, hi)?])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    /// Intersection; `None` when empty.
    pub fn intersect(&self, other: &DomainSet) -> Option<DomainSet> {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo < hi {
                    out.push(Interval { lo, hi });
                }
            }
        }
        DomainSet::new(out).ok()
    }

    /// The set `{x : x + s in self}`.
    pub fn shifted(&self, s: f64) -> DomainSet {
        DomainSet {
            intervals: self
                .intervals
                .iter()
                .map(|i| Interval {
                    lo: i.lo - s,
                    hi: i.hi - s,
                })
                .collect(),
        }
    }
}

type JetFn = dyn Fn(f64, usize) -> Result<Jet> + Send + Sync;
type DerivFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// A named `C^k` function on an open domain.
#[derive(Clone)]
pub struct FunctionSpec {
    name: String,
    domain: DomainSet,
    eval: Arc<JetFn>,
    exact: Option<Arc<DerivFn>>,
    zeros: Vec<f64>,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl FunctionSpec {
    pub fn new(
        name: impl Into<String>,
        domain: DomainSet,
        eval: impl Fn(f64, usize) -> Result<Jet> + Send + Sync + 'static,
    ) -> Self {
        FunctionSpec {
            name: name.into(),
            domain,
            eval: Arc::new(eval),
            exact: None,
            zeros: Vec::new(),
        }
    }

    /// Builds a function from an expression in the jet of the identity.
    pub fn from_expr(
        name: impl Into<String>,
        domain: DomainSet,
        expr: impl Fn(&Jet) -> Result<Jet> + Send + Sync + 'static,
    ) -> Self {
        FunctionSpec::new(name, domain, move |x, k| expr(&Jet::variable(x, k)?))
    }

    pub fn with_exact(
        mut self,
        oracle: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(Arc::new(oracle));
        self
    }

    pub fn with_zeros(mut self, zeros: Vec<f64>) -> Self {
        self.zeros = zeros;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainSet {
        &self.domain
    }

    pub fn zero_set_hint(&self) -> &[f64] {
        &self.zeros
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Closed-form `i`-th derivative at `x`, when an oracle is attached.
    pub fn exact_deriv(&self, x: f64, i: usize) -> Option<f64> {
        self.exact.as_ref().map(|e| e(x, i))
    }

    pub fn jet_at(&self, x: f64, k: usize) -> Result<Jet> {
        if k > K_MAX {
            return Err(Error::OrderTooHigh(k));
        }
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain {
                name: self.name.clone(),
                x,
            });
        }
        (self.eval)(x, k)
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        Ok(self.jet_at(x, 0)?.value())
    }
}

/// A scalar map `d` on an open domain, used as the outer function in
/// `D(f) = d o f`. Derivatives above `max_order` are not available.
#[derive(Clone)]
pub struct ScalarMap {
    name: String,
    domain: DomainSet,
    max_order: usize,
    eval: Arc<dyn Fn(f64, usize) -> Result<Vec<f64>> + Send + Sync>,
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarMap")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl ScalarMap {
    /// `eval(y, k)` returns `[d(y), d'(y), ..., d^(k)(y)]`.
    pub fn new(
        name: impl Into<String>,
        domain: DomainSet,
        max_order: usize,
        eval: impl Fn(f64, usize) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        ScalarMap {
            name: name.into(),
            domain,
            max_order,
            eval: Arc::new(eval),
        }
    }

    /// A map known only through its values.
    pub fn from_values(
        name: impl Into<String>,
        domain: DomainSet,
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarMap::new(name, domain, 0, move |y, _| Ok(vec![f(y)?]))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &DomainSet {
        &self.domain
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn derivs(&self, y: f64, k: usize) -> Result<Vec<f64>> {
        if !self.domain.contains(y) {
            return Err(Error::OutOfDomain {
                name: self.name.clone(),
                x: y,
            });
        }
        if k > self.max_order {
            return Err(Error::InsufficientOrder {
                needed: k,
                got: self.max_order,
            });
        }
        (self.eval)(y, k)
    }

    pub fn value(&self, y: f64) -> Result<f64> {
        Ok(self.derivs(y, 0)?[0])
    }
}

// ---------------------------------------------------------------------------
// Combinators

fn joint_domain(f: &FunctionSpec, g: &FunctionSpec) -> Result<DomainSet> {
    f.domain.intersect(&g.domain).ok_or_else(|| {
        Error::Domain(format!(
            "domains of `{}` and `{}` do not overlap",
            f.name, g.name
        ))
    })
}

fn merged_zeros(f: &FunctionSpec, g: &FunctionSpec) -> Vec<f64> {
    let mut z: Vec<f64> = f.zeros.iter().chain(&g.zeros).copied().collect();
    z.sort_by(f64::total_cmp);
    z.dedup();
    z
}

pub fn product(f: &FunctionSpec, g: &FunctionSpec) -> Result<FunctionSpec> {
    let (a, b) = (f.clone(), g.clone());
    Ok(FunctionSpec::new(
        format!("({})*({})", f.name, g.name),
        joint_domain(f, g)?,
        move |x, k| a.jet_at(x, k)?.mul(&b.jet_at(x, k)?),
    )
    .with_zeros(merged_zeros(f, g)))
}

pub fn sum(f: &FunctionSpec, g: &FunctionSpec) -> Result<FunctionSpec> {
    let (a, b) = (f.clone(), g.clone());
    Ok(FunctionSpec::new(
        format!("({})+({})", f.name, g.name),
        joint_domain(f, g)?,
        move |x, k| a.jet_at(x, k)?.add(&b.jet_at(x, k)?),
    ))
}

pub fn scale(f: &FunctionSpec, s: f64) -> FunctionSpec {
    let a = f.clone();
    let zeros = if s == 0.0 {
        Vec::new()
    } else {
        f.zeros.clone()
    };
    FunctionSpec::new(
        format!("{s}*({})", f.name),
        f.domain.clone(),
        move |x, k| a.jet_at(x, k)?.scale(s),
    )
    .with_zeros(zeros)
}

pub fn power(f: &FunctionSpec, n: u32) -> FunctionSpec {
    let a = f.clone();
    FunctionSpec::new(
        format!("({})^{n}", f.name),
        f.domain.clone(),
        move |x, k| a.jet_at(x, k)?.powi(n),
    )
    .with_zeros(f.zeros.clone())
}

pub fn exp_of(f: &FunctionSpec) -> FunctionSpec {
    let a = f.clone();
    FunctionSpec::new(format!("exp({})", f.name), f.domain.clone(), move |x, k| {
        a.jet_at(x, k)?.exp()
    })
}

/// `(tau_s f)(x) = f(x + s)`.
pub fn shift(f: &FunctionSpec, s: f64) -> FunctionSpec {
    let a = f.clone();
    FunctionSpec::new(
        format!("({})(x{s:+})", f.name),
        f.domain.shifted(s),
        move |x, k| a.jet_at(x + s, k),
    )
    .with_zeros(f.zeros.iter().map(|z| z - s).collect())
}

/// `d o f`; the range condition `f(x) in dom d` is checked pointwise.
pub fn compose_scalar(d: &ScalarMap, f: &FunctionSpec) -> FunctionSpec {
    let (outer, inner) = (d.clone(), f.clone());
    FunctionSpec::new(
        format!("{}({})", d.name, f.name),
        f.domain.clone(),
        move |x, k| {
            let j = inner.jet_at(x, k)?;
            let outer_derivs = outer.derivs(j.value(), k)?;
            j.compose(&outer_derivs)
        },
    )
}

pub fn constant_fn(v: f64) -> FunctionSpec {
    FunctionSpec::new(
        format!("const({v})"),
        DomainSet::real_line(),
        move |_, k| Jet::constant(v, k),
    )
    .with_exact(move |_, i| if i == 0 { v } else { 0.0 })
}

/// The polynomial `p(s) = sum_i v[i] (s - x0)^i / i!`, whose jet at `x0` is `v`.
pub fn prescribe_jet(x0: f64, v: &[f64]) -> Result<FunctionSpec> {
    if v.is_empty() || v.len() > K_MAX + 1 {
        return Err(Error::InvalidArgument(format!(
            "prescribed jet length {} outside 1..={}",
            v.len(),
            K_MAX + 1
        )));
    }
    let coeffs = v.to_vec();
    let taylor = move |s: f64, n: usize| -> f64 {
        let h = s - x0;
        // Horner in h over sum_{i>=n} v[i] h^(i-n) / (i-n)!
        let mut acc = 0.0;
        for i in (n..coeffs.len()).rev() {
            acc = acc * h / ((i - n + 1) as f64) + coeffs[i];
        }
        acc
    };
    let t = taylor.clone();
    Ok(FunctionSpec::new(
        format!("jet@{x0}{v:?}"),
        DomainSet::real_line(),
        move |s, k| {
            let d: Vec<f64> = (0..=k).map(|n| t(s, n)).collect();
            Jet::from_derivs(&d)
        },
    )
    .with_exact(taylor))
}

/// `0` for `x <= at`, `exp(-1/(x - at))` beyond: a `C^inf` function that is
/// flat on `(-inf, at]`.
pub fn flat_until(at: f64) -> FunctionSpec {
    FunctionSpec::new(
        format!("flat_until({at})"),
        DomainSet::real_line(),
        move |x, k| {
            if x <= at {
                Jet::constant(0.0, k)
            } else {
                let t = Jet::variable(x - at, k)?;
                t.recip()?.neg().exp()
            }
        },
    )
}

// ---------------------------------------------------------------------------
// Built-in corpus

fn poly_deriv(coeffs: &[f64], x: f64, n: usize) -> f64 {
    // coeffs[i] multiplies x^i
    coeffs
        .iter()
        .enumerate()
        .skip(n)
        .map(|(i, c)| {
            let falling: f64 = (i - n + 1..=i).map(|m| m as f64).product();
            c * falling * x.powi((i - n) as i32)
        })
        .sum()
}

fn polynomial(name: &str, coeffs: &'static [f64], zeros: Vec<f64>) -> FunctionSpec {
    FunctionSpec::from_expr(name, DomainSet::real_line(), move |x| {
        let mut acc = Jet::constant(0.0, x.order())?;
        for c in coeffs.iter().rev() {
            acc = acc.mul(x)?.add(&Jet::constant(*c, x.order())?)?;
        }
        Ok(acc)
    })
    .with_exact(move |x, n| poly_deriv(coeffs, x, n))
    .with_zeros(zeros)
}

fn constant_named(name: &str, v: f64) -> FunctionSpec {
    constant_fn(v).renamed(name)
}

/// The built-in catalogue. Covers constants, polynomials with and without
/// interior zeros, exponentials, trigonometric and rational functions, and
/// strictly positive and strictly negative entries.
pub fn builtin_corpus() -> Vec<FunctionSpec> {
    let pos = DomainSet::interval(0.0, f64::INFINITY).expect("valid interval");
    let punctured = DomainSet::new(vec![
        Interval {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        },
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        },
    ])
    .expect("disjoint intervals");

    vec![
        constant_named("const_one", 1.0),
        constant_named("const_neg_one", -1.0),
        constant_named("const_e", E),
        polynomial("identity", &[0.0, 1.0], vec![0.0]),
        polynomial("square", &[0.0, 0.0, 1.0], vec![0.0]),
        polynomial("cube", &[0.0, 0.0, 0.0, 1.0], vec![0.0]),
        polynomial("square_minus_one", &[-1.0, 0.0, 1.0], vec![-1.0, 1.0]),
        polynomial("neg_two_minus_square", &[-2.0, 0.0, -1.0], vec![]),
        FunctionSpec::from_expr("exp", DomainSet::real_line(), |x| x.exp())
            .with_exact(|x, _| x.exp()),
        FunctionSpec::from_expr("exp_neg_half", DomainSet::real_line(), |x| {
            x.scale(-0.5)?.exp()
        })
        .with_exact(|x, n| (-0.5f64).powi(n as i32) * (-0.5 * x).exp()),
        FunctionSpec::from_expr("sin", DomainSet::real_line(), |x| x.sin())
            .with_exact(|x, n| (x + n as f64 * FRAC_PI_2).sin())
            .with_zeros(vec![-PI, 0.0, PI]),
        FunctionSpec::from_expr("cos", DomainSet::real_line(), |x| x.cos())
            .with_exact(|x, n| (x + n as f64 * FRAC_PI_2).cos())
            .with_zeros(vec![
                -3.0 * FRAC_PI_2,
                -FRAC_PI_2,
                FRAC_PI_2,
                3.0 * FRAC_PI_2,
            ]),
        FunctionSpec::from_expr("two_plus_sin", DomainSet::real_line(), |x| {
            x.sin()?.add(&Jet::constant(2.0, x.order())?)
        })
        .with_exact(|x, n| {
            let s = (x + n as f64 * FRAC_PI_2).sin();
            if n == 0 {
                2.0 + s
            } else {
                s
            }
        }),
        FunctionSpec::from_expr("lorentzian", DomainSet::real_line(), |x| {
            let one = Jet::constant(1.0, x.order())?;
            one.add(&x.mul(x)?)?.recip()
        })
        // 1/(1+x^2) = Im 1/(x - i); the n-th derivative is
        // Im[(-1)^n n! (x - i)^-(n+1)].
        .with_exact(|x, n| {
            let r = x.hypot(1.0);
            let theta = (-1.0f64).atan2(x);
            let m = (n + 1) as f64;
            let im = -r.powf(-m) * (m * theta).sin();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * FACTORIALS[n] as f64 * im
        }),
        FunctionSpec::from_expr("log", pos, |x| x.ln())
            .with_exact(|x, n| {
                if n == 0 {
                    x.ln()
                } else {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    sign * FACTORIALS[n - 1] as f64 / x.powi(n as i32)
                }
            })
            .with_zeros(vec![1.0]),
        FunctionSpec::from_expr("reciprocal", punctured, |x| x.recip()).with_exact(|x, n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * FACTORIALS[n] as f64 / x.powi(n as i32 + 1)
        }),
    ]
}

pub fn lookup(name: &str) -> Result<FunctionSpec> {
    builtin_corpus()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownName(name.to_string()))
}

/// Names of built-in entries that are strictly positive on their domain.
pub const POSITIVE_CORPUS: &[&str] = &[
    "const_one",
    "const_e",
    "exp",
    "exp_neg_half",
    "two_plus_sin",
    "lorentzian",
];

// ---------------------------------------------------------------------------
// Sampling

/// `n` seeded points of `domain`, each at least `margin` away from the
/// interval ends (unbounded ends clipped to [`SAMPLE_WINDOW`]) and from every
/// point of `avoid`.
pub fn sample_points(
    domain: &DomainSet,
    n: usize,
    seed: u64,
    margin: f64,
    avoid: &[f64],
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative margin {margin}")));
    }
    let mut segments: Vec<(f64, f64)> = domain
        .intervals()
        .iter()
        .map(|i| {
            (
                i.lo.max(-SAMPLE_WINDOW) + margin,
                i.hi.min(SAMPLE_WINDOW) - margin,
            )
        })
        .filter(|(a, b)| a < b)
        .collect();
    for &z in avoid {
        segments = segments
            .into_iter()
            .flat_map(|(a, b)| {
                let (lo, hi) = (z - margin, z + margin);
                let mut parts = Vec::with_capacity(2);
                if hi <= a || lo >= b {
                    parts.push((a, b));
                } else {
                    if a < lo {
                        parts.push((a, lo));
                    }
                    if hi < b {
                        parts.push((hi, b));
                    }
                }
                parts
            })
            .collect();
    }
    let total: f64 = segments.iter().map(|(a, b)| b - a).sum();
    if !(total > 0.0) {
        return Err(Error::DomainTooSmall { margin });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let mut u = rng.gen::<f64>() * total;
            for &(a, b) in &segments {
                if u < b - a {
                    return a + u;
                }
                u -= b - a;
            }
            segments.last().map(|s| s.1).unwrap_or(0.0)
        })
        .collect();
    Ok(points)
}

/// Samples points valid for every function in `fns`: inside the joint domain
/// and away from every known zero.
pub fn sample_common(fns: &[&FunctionSpec], n: usize, seed: u64, margin: f64) -> Result<Vec<f64>> {
    let mut domain = DomainSet::real_line();
    let mut avoid = Vec::new();
    for f in fns {
        domain = domain
            .intersect(f.domain())
            .ok_or_else(|| Error::Domain(format!("empty joint domain at `{}`", f.name())))?;
        avoid.extend_from_slice(f.zero_set_hint());
    }
    sample_points(&domain, n, seed, margin, &avoid)
}
