//! Operator families and the identity residuals checked against them.
//!
//! Every family here is pointwise: `D(f)(x) = F(x, f(x), f'(x), ..., f^(k)(x))`,
//! so [`OperatorSpec::pointwise`] is the single evaluation path and
//! [`apply`] only fetches the jet of `f` at `x` of the right order.

use std::fmt;
use std::sync::Arc;

use crate::corpus::{self, FunctionSpec, Interval, ScalarMap};
use crate::error::{Error, Result};
use crate::jet::{Jet, K_MAX};

/// Coefficient function `Omega -> R`.
#[derive(Clone)]
pub enum CoeffFn {
    Constant(f64),
    Callable {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for CoeffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffFn::Constant(v) => write!(f, "{v}"),
            CoeffFn::Callable { name, .. } => write!(f, "{name}"),
        }
    }
}

impl fmt::Display for CoeffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl CoeffFn {
    pub fn constant(v: f64) -> Self {
        CoeffFn::Constant(v)
    }

    pub fn from_callable(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoeffFn::Callable {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        match self {
            CoeffFn::Constant(v) => *v,
            CoeffFn::Callable { f, .. } => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoeffFn::Constant(v) => Some(*v),
            CoeffFn::Callable { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }
}

impl From<f64> for CoeffFn {
    fn from(v: f64) -> Self {
        CoeffFn::Constant(v)
    }
}

/// `c0 f ln|f| + c1 f' + c2 f'' + d00 f ln^2|f|` on `C^k`.
#[derive(Debug, Clone)]
pub struct Characterized {
    c0: CoeffFn,
    c1: CoeffFn,
    c2: CoeffFn,
    d00: CoeffFn,
    k: usize,
}

impl Characterized {
    /// Rejects `k = 0` with nonzero `c1` or `c2`, and `k = 1` with nonzero `c2`.
    pub fn new(
        c0: impl Into<CoeffFn>,
        c1: impl Into<CoeffFn>,
        c2: impl Into<CoeffFn>,
        d00: impl Into<CoeffFn>,
        k: usize,
    ) -> Result<Self> {
        let (c0, c1, c2, d00) = (c0.into(), c1.into(), c2.into(), d00.into());
        if k > K_MAX {
            return Err(Error::OrderTooHigh(k));
        }
        if k == 0 && !(c1.is_zero() && c2.is_zero()) {
            return Err(Error::InvalidOperator(
                "order k = 0 requires c1 = c2 = 0".into(),
            ));
        }
        if k == 1 && !c2.is_zero() {
            return Err(Error::InvalidOperator("order k = 1 requires c2 = 0".into()));
        }
        Ok(Characterized { c0, c1, c2, d00, k })
    }

    pub fn coefficients(&self) -> [&CoeffFn; 4] {
        [&self.c0, &self.c1, &self.c2, &self.d00]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn eval(&self, x: f64, jet: &Jet) -> Result<f64> {
        let v = jet.value();
        let mut out = 0.0;
        // 0 ln 0 = 0 and 0 ln^2 0 = 0
        if v != 0.0 {
            let l = v.abs().ln();
            out += self.c0.at(x) * v * l + self.d00.at(x) * v * l * l;
        }
        if self.k >= 1 {
            out += self.c1.at(x) * jet.get(1)?;
        }
        if self.k >= 2 {
            out += self.c2.at(x) * jet.get(2)?;
        }
        Ok(out)
    }
}

/// `f [ sum_i c_i (ln f)^(i) + sum_ij d_ij (ln f)^(i) (ln f)^(j) ]`, defined
/// for positive `f` only.
#[derive(Debug, Clone)]
pub struct LogPolynomial {
    c: Vec<CoeffFn>,
    d: Vec<Vec<CoeffFn>>,
}

impl LogPolynomial {
    pub fn new(c: Vec<CoeffFn>, d: Vec<Vec<CoeffFn>>) -> Result<Self> {
        let n = c.len();
        if n == 0 || n > K_MAX + 1 {
            return Err(Error::InvalidOperator(format!(
                "log-polynomial needs 1..={} linear coefficients",
                K_MAX + 1
            )));
        }
        if d.len() != n || d.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidOperator(format!(
                "quadratic coefficient matrix must be {n}x{n}"
            )));
        }
        Ok(LogPolynomial { c, d })
    }

    pub fn k(&self) -> usize {
        self.c.len() - 1
    }

    fn eval(&self, x: f64, jet: &Jet) -> Result<f64> {
        let v = jet.value();
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "log-polynomial operator applied to nonpositive value {v}"
            )));
        }
        let l = jet.ln()?;
        let l = l.derivs();
        let mut bracket = 0.0;
        for (i, ci) in self.c.iter().enumerate() {
            bracket += ci.at(x) * l[i];
        }
        for (i, row) in self.d.iter().enumerate() {
            for (j, dij) in row.iter().enumerate() {
                bracket += dij.at(x) * l[i] * l[j];
            }
        }
        Ok(v * bracket)
    }
}

/// The pair `(T, A)` of the second-order Leibniz rule.
#[derive(Debug, Clone)]
pub struct KmPair {
    pub t: OperatorSpec,
    pub a: OperatorSpec,
}

impl KmPair {
    /// `(f ln^2|f|, f ln|f|)`.
    pub fn logarithmic() -> Self {
        KmPair {
            t: OperatorSpec::Characterized(Characterized {
                c0: 0.0.into(),
                c1: 0.0.into(),
                c2: 0.0.into(),
                d00: 1.0.into(),
                k: 0,
            }),
            a: OperatorSpec::Characterized(Characterized {
                c0: 1.0.into(),
                c1: 0.0.into(),
                c2: 0.0.into(),
                d00: 0.0.into(),
                k: 0,
            }),
        }
    }

    /// `T = c^2/2 f'' + b f'` with `A = (c / sqrt 2) f'`.
    ///
    /// With the factor 2 in front of `A(f)A(g)`, `A = c f'` would need
    /// `T = c^2 f''`; halving the second-order part forces `A` to carry
    /// `1/sqrt 2`.
    pub fn diffusion(b: impl Into<CoeffFn>, c: impl Into<CoeffFn>) -> Self {
        let c = c.into();
        let (half_sq, a) = match &c {
            CoeffFn::Constant(v) => (
                CoeffFn::Constant(0.5 * v * v),
                CoeffFn::Constant(v * std::f64::consts::FRAC_1_SQRT_2),
            ),
            CoeffFn::Callable { name, f } => {
                let (f1, f2) = (f.clone(), f.clone());
                (
                    CoeffFn::from_callable(format!("{name}^2/2"), move |x| 0.5 * f1(x) * f1(x)),
                    CoeffFn::from_callable(format!("{name}/sqrt2"), move |x| {
                        f2(x) * std::f64::consts::FRAC_1_SQRT_2
                    }),
                )
            }
        };
        KmPair {
            t: OperatorSpec::linear(b, half_sq),
            a: OperatorSpec::linear(a, 0.0),
        }
    }
}

pub type PointwiseFn = Arc<dyn Fn(f64, &Jet) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub enum OperatorSpec {
    Characterized(Characterized),
    LogPolynomial(LogPolynomial),
    LinearDifferential {
        c1: CoeffFn,
        c2: CoeffFn,
    },
    SecondDerivativeOnly {
        c2: CoeffFn,
    },
    Composition {
        d: ScalarMap,
    },
    KmPair(Box<KmPair>),
    BlackBox {
        name: String,
        order: usize,
        f: PointwiseFn,
    },
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl OperatorSpec {
    pub fn characterized(
        c0: impl Into<CoeffFn>,
        c1: impl Into<CoeffFn>,
        c2: impl Into<CoeffFn>,
        d00: impl Into<CoeffFn>,
        k: usize,
    ) -> Result<Self> {
        Characterized::new(c0, c1, c2, d00, k).map(OperatorSpec::Characterized)
    }

    pub fn linear(c1: impl Into<CoeffFn>, c2: impl Into<CoeffFn>) -> Self {
        OperatorSpec::LinearDifferential {
            c1: c1.into(),
            c2: c2.into(),
        }
    }

    pub fn second_derivative(c2: impl Into<CoeffFn>) -> Self {
        OperatorSpec::SecondDerivativeOnly { c2: c2.into() }
    }

    pub fn composition(d: ScalarMap) -> Self {
        OperatorSpec::Composition { d }
    }

    pub fn pair(t: OperatorSpec, a: OperatorSpec) -> Self {
        OperatorSpec::KmPair(Box::new(KmPair { t, a }))
    }

    pub fn black_box(
        name: impl Into<String>,
        order: usize,
        f: impl Fn(f64, &Jet) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        OperatorSpec::BlackBox {
            name: name.into(),
            order,
            f: Arc::new(f),
        }
    }

    /// Jet order the operator consumes.
    pub fn order(&self) -> usize {
        match self {
            OperatorSpec::Characterized(c) => c.k,
            OperatorSpec::LogPolynomial(p) => p.k(),
            OperatorSpec::LinearDifferential { c2, .. } => {
                if c2.is_zero() {
                    1
                } else {
                    2
                }
            }
            OperatorSpec::SecondDerivativeOnly { .. } => 2,
            OperatorSpec::Composition { .. } => 0,
            OperatorSpec::KmPair(p) => p.t.order(),
            OperatorSpec::BlackBox { order, .. } => *order,
        }
    }

    /// True when every coefficient is a constant (the isotropic case).
    pub fn has_constant_coefficients(&self) -> bool {
        match self {
            OperatorSpec::Characterized(c) => c.coefficients().iter().all(|c| c.is_constant()),
            OperatorSpec::LogPolynomial(p) => {
                p.c.iter().all(CoeffFn::is_constant)
                    && p.d.iter().flatten().all(CoeffFn::is_constant)
            }
            OperatorSpec::LinearDifferential { c1, c2 } => c1.is_constant() && c2.is_constant(),
            OperatorSpec::SecondDerivativeOnly { c2 } => c2.is_constant(),
            OperatorSpec::Composition { .. } => true,
            OperatorSpec::KmPair(p) => {
                p.t.has_constant_coefficients() && p.a.has_constant_coefficients()
            }
            OperatorSpec::BlackBox { .. } => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            OperatorSpec::Characterized(c) => format!(
                "characterized(c0={}, c1={}, c2={}, d00={}, k={})",
                c.c0, c.c1, c.c2, c.d00, c.k
            ),
            OperatorSpec::LogPolynomial(p) => format!("log_polynomial(k={})", p.k()),
            OperatorSpec::LinearDifferential { c1, c2 } => {
                format!("linear(c1={c1}, c2={c2})")
            }
            OperatorSpec::SecondDerivativeOnly { c2 } => format!("second_derivative(c2={c2})"),
            OperatorSpec::Composition { d } => format!("composition({})", d.name()),
            OperatorSpec::KmPair(p) => format!("pair(T={}, A={})", p.t.describe(), p.a.describe()),
            OperatorSpec::BlackBox { name, .. } => format!("black_box({name})"),
        }
    }

    /// The pointwise form `F(x, jet)`. The jet must have at least
    /// [`OperatorSpec::order`] derivatives.
    pub fn pointwise(&self, x: f64, jet: &Jet) -> Result<f64> {
        if jet.order() < self.order() {
            return Err(Error::InsufficientOrder {
                needed: self.order(),
                got: jet.order(),
            });
        }
        let out = match self {
            OperatorSpec::Characterized(c) => c.eval(x, jet)?,
            OperatorSpec::LogPolynomial(p) => p.eval(x, jet)?,
            OperatorSpec::LinearDifferential { c1, c2 } => {
                let mut v = c1.at(x) * jet.get(1)?;
                if !c2.is_zero() {
                    v += c2.at(x) * jet.get(2)?;
                }
                v
            }
            OperatorSpec::SecondDerivativeOnly { c2 } => c2.at(x) * jet.get(2)?,
            OperatorSpec::Composition { d } => d.value(jet.value())?,
            OperatorSpec::KmPair(p) => p.t.pointwise(x, jet)?,
            OperatorSpec::BlackBox { f, .. } => f(x, jet)?,
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite("operator evaluation"))
        }
    }
}

/// `D(f)(x)`.
pub fn apply(op: &OperatorSpec, f: &FunctionSpec, x: f64) -> Result<f64> {
    let jet = f.jet_at(x, op.order())?;
    op.pointwise(x, &jet)
}

/// A signed residual together with the largest absolute term that entered it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn from_terms(terms: &[f64]) -> Self {
        Residual {
            value: terms.iter().sum(),
            scale: terms.iter().fold(0.0f64, |m, t| m.max(t.abs())),
        }
    }

    /// `|value| / max(1, scale)`.
    pub fn scaled(&self) -> f64 {
        self.value.abs() / self.scale.max(1.0)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.scaled() <= tol
    }
}

fn val(f: &FunctionSpec, x: f64) -> Result<f64> {
    f.value_at(x)
}

fn id2_terms(
    d: &OperatorSpec,
    f: &FunctionSpec,
    g: &FunctionSpec,
    h: &FunctionSpec,
    x: f64,
) -> Result<[f64; 7]> {
    let fg = corpus::product(f, g)?;
    let fh = corpus::product(f, h)?;
    let gh = corpus::product(g, h)?;
    let fgh = corpus::product(&fg, h)?;
    let (fv, gv, hv) = (val(f, x)?, val(g, x)?, val(h, x)?);
    Ok([
        apply(d, &fgh, x)?,
        -fv * apply(d, &gh, x)?,
        -gv * apply(d, &fh, x)?,
        -hv * apply(d, &fg, x)?,
        fv * gv * apply(d, h, x)?,
        fv * hv * apply(d, g, x)?,
        gv * hv * apply(d, f, x)?,
    ])
}

/// Seven-term residual
/// `D(fgh) - fD(gh) - gD(fh) - hD(fg) + fgD(h) + fhD(g) + ghD(f)` at `x`.
pub fn residual_id2(
    d: &OperatorSpec,
    f: &FunctionSpec,
    g: &FunctionSpec,
    h: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    Ok(Residual::from_terms(&id2_terms(d, f, g, h, x)?))
}

/// The trilinear form `A3(f, g, h)`; the same expression as [`residual_id2`].
pub fn trilinear_a3(
    d: &OperatorSpec,
    f: &FunctionSpec,
    g: &FunctionSpec,
    h: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    residual_id2(d, f, g, h, x)
}

/// `D(f^3) - 3f D(f^2) + 3f^2 D(f)` at `x`, evaluated through powers rather
/// than the three-function product.
pub fn residual_powers(d: &OperatorSpec, f: &FunctionSpec, x: f64) -> Result<Residual> {
    let fv = val(f, x)?;
    let f2 = corpus::power(f, 2);
    let f3 = corpus::power(f, 3);
    Ok(Residual::from_terms(&[
        apply(d, &f3, x)?,
        -3.0 * fv * apply(d, &f2, x)?,
        3.0 * fv * fv * apply(d, f, x)?,
    ]))
}

/// `T(fg) - fT(g) - gT(f)` at `x`.
pub fn residual_leibniz(
    t: &OperatorSpec,
    f: &FunctionSpec,
    g: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    let fg = corpus::product(f, g)?;
    Ok(Residual::from_terms(&[
        apply(t, &fg, x)?,
        -val(f, x)? * apply(t, g, x)?,
        -val(g, x)? * apply(t, f, x)?,
    ]))
}

/// `T(fg) - T(f)g - fT(g) - 2A(f)A(g)` at `x`.
pub fn residual_second_leibniz(
    pair: &KmPair,
    f: &FunctionSpec,
    g: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    let fg = corpus::product(f, g)?;
    Ok(Residual::from_terms(&[
        apply(&pair.t, &fg, x)?,
        -apply(&pair.t, f, x)? * val(g, x)?,
        -val(f, x)? * apply(&pair.t, g, x)?,
        -2.0 * apply(&pair.a, f, x)? * apply(&pair.a, g, x)?,
    ]))
}

/// Tolerance used when checking the second-order Leibniz precondition of
/// [`residual_reduction`].
pub const PAIR_PRECONDITION_TOL: f64 = 1e-9;

/// `id_2 residual of T` minus `2A(h)[A(fg) - fA(g) - gA(f)]`, using the
/// symmetric left-hand side. The pair must satisfy the second-order Leibniz
/// rule on `(f, g)` and `(fg, h)` at `x`; otherwise a precondition error is
/// returned.
pub fn residual_reduction(
    pair: &KmPair,
    f: &FunctionSpec,
    g: &FunctionSpec,
    h: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    let fg = corpus::product(f, g)?;
    for (a, b) in [(f, g), (&fg, h)] {
        let r = residual_second_leibniz(pair, a, b, x)?;
        if !r.within(PAIR_PRECONDITION_TOL) {
            return Err(Error::Precondition(format!(
                "pair violates the second-order Leibniz rule at x = {x} (scaled residual {:e})",
                r.scaled()
            )));
        }
    }
    let lhs = id2_terms(&pair.t, f, g, h, x)?;
    let ah = apply(&pair.a, h, x)?;
    let (fv, gv) = (val(f, x)?, val(g, x)?);
    let mut terms = lhs.to_vec();
    terms.extend([
        -2.0 * ah * apply(&pair.a, &fg, x)?,
        2.0 * ah * fv * apply(&pair.a, g, x)?,
        2.0 * ah * gv * apply(&pair.a, f, x)?,
    ]);
    Ok(Residual::from_terms(&terms))
}

/// `sum_{S subset hs} (-1)^(n-|S|) T(f + sum S)(x)` for an arbitrary map `T`.
pub fn difference_apply_with(
    map: impl Fn(&FunctionSpec) -> Result<f64>,
    hs: &[FunctionSpec],
    f: &FunctionSpec,
) -> Result<f64> {
    let n = hs.len();
    if n > 16 {
        return Err(Error::InvalidArgument(format!(
            "difference of order {n} is too large"
        )));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut arg = f.clone();
        for (i, h) in hs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                arg = corpus::sum(&arg, h)?;
            }
        }
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        total += sign * map(&arg)?;
    }
    Ok(total)
}

/// Higher-order difference `Delta_{h1..hn} T(f)(x)`.
pub fn difference_apply(
    t: &OperatorSpec,
    hs: &[FunctionSpec],
    f: &FunctionSpec,
    x: f64,
) -> Result<f64> {
    difference_apply_with(|arg| apply(t, arg, x), hs, f)
}

/// Ratio `Delta_{f,g,h} A3*(0) / A3(f, g, h)` where `A3*(l) = A3(l, l, l)`.
/// For a symmetric trilinear `A3` this measures the diagonalization constant.
pub fn diagonal_difference_ratio(
    d: &OperatorSpec,
    f: &FunctionSpec,
    g: &FunctionSpec,
    h: &FunctionSpec,
    x: f64,
) -> Result<f64> {
    let zero = corpus::constant_fn(0.0);
    let delta = difference_apply_with(
        |l| Ok(trilinear_a3(d, l, l, l, x)?.value),
        &[f.clone(), g.clone(), h.clone()],
        &zero,
    )?;
    let direct = trilinear_a3(d, f, g, h, x)?.value;
    if direct == 0.0 {
        return Err(Error::Precondition(
            "trilinear form vanishes at the chosen arguments".into(),
        ));
    }
    Ok(delta / direct)
}

/// `D(tau_s f)(x) - D(f)(x + s)` with `(tau_s f)(x) = f(x + s)`.
pub fn shift_commutator(
    d: &OperatorSpec,
    shift: f64,
    f: &FunctionSpec,
    x: f64,
) -> Result<Residual> {
    let shifted = corpus::shift(f, shift);
    Ok(Residual::from_terms(&[
        apply(d, &shifted, x)?,
        -apply(d, f, x + shift)?,
    ]))
}

/// `a b (ln|b| - ln|a|)`, the determinant of `[[a, b], [a ln|a|, b ln|b|]]`.
pub fn km_nondeg_det(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 || b == 0.0 {
        return Err(Error::InvalidArgument(
            "non-degeneracy determinant needs nonzero arguments".into(),
        ));
    }
    Ok(a * b * (b.abs().ln() - a.abs().ln()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationReport {
    pub max_diff: f64,
    pub samples: usize,
}

/// Max `|D(f1)(x) - D(f2)(x)|` over `points` in `j`, after checking that
/// `f1` and `f2` agree (jets up to the operator order) at every point.
pub fn localization_check(
    d: &OperatorSpec,
    f1: &FunctionSpec,
    f2: &FunctionSpec,
    j: Interval,
    points: &[f64],
) -> Result<LocalizationReport> {
    let k = d.order();
    let mut max_diff = 0.0f64;
    for &x in points {
        if !j.contains(x) {
            return Err(Error::InvalidArgument(format!(
                "sample point {x} outside ({}, {})",
                j.lo, j.hi
            )));
        }
        let (a, b) = (f1.jet_at(x, k)?, f2.jet_at(x, k)?);
        let agree = a
            .derivs()
            .iter()
            .zip(b.derivs())
            .all(|(p, q)| (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1.0));
        if !agree {
            return Err(Error::Precondition(format!(
                "`{}` and `{}` differ at x = {x}",
                f1.name(),
                f2.name()
            )));
        }
        let diff = (d.pointwise(x, &a)? - d.pointwise(x, &b)?).abs();
        max_diff = max_diff.max(diff);
    }
    Ok(LocalizationReport {
        max_diff,
        samples: points.len(),
    })
}
