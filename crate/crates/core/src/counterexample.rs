//! A nonlinear operator that satisfies the diagonal identity
//! `D(f^3) - 3f D(f^2) + 3f^2 D(f) = 0` but not the three-function identity.
//!
//! Start from a solution of `phi(3t) = 3 phi(2t) - 3 phi(t)` on `(1, inf)`
//! that is not a polynomial of degree at most two. In log coordinates
//! `psi(u) = phi(e^u)` the equation becomes the shift recurrence
//! `psi(u + ln 3) = 3 psi(u + ln 2) - 3 psi(u)`, so any seed on `[0, ln 3)`
//! extends uniquely to `[0, inf)`. The operator is `D(f) = d o f` with
//! `d(y) = y phi(ln y)` on `(e, inf)`.

use std::collections::HashMap;
use std::f64::consts::E;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aichinger::{fit_quadratic, QuadraticModel};
use crate::corpus::{constant_fn, DomainSet, FunctionSpec, ScalarMap};
use crate::error::{Error, Result};
use crate::operators::{residual_id2, OperatorSpec, Residual};

pub const LN2: f64 = std::f64::consts::LN_2;
pub const LN3: f64 = 1.098_612_288_668_109_8;
/// `ln 3 - ln 2`, the smaller backward shift of the recurrence.
pub const LN3_OVER_2: f64 = 0.405_465_108_108_164_4;

/// Arguments above this are refused (recursion depth grows like `u / ln 1.5`).
pub const MAX_ARGUMENT: f64 = 64.0;

/// Upper end of the random search box for violating triples.
pub const SEARCH_UPPER: f64 = 20.0;

/// Extension of a seed on `[0, ln 3)` by the log-coordinate recurrence,
/// memoized on the exact float argument.
pub struct PsiSolution {
    name: String,
    seed: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    memo: Mutex<HashMap<u64, f64>>,
}

impl fmt::Debug for PsiSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiSolution")
            .field("seed", &self.name)
            .finish_non_exhaustive()
    }
}

impl PsiSolution {
    pub fn with_seed(
        name: impl Into<String>,
        seed: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PsiSolution {
            name: name.into(),
            seed: Arc::new(seed),
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// Default seed `u^3`.
    pub fn cubic() -> Self {
        PsiSolution::with_seed("u^3", |u| u * u * u)
    }

    /// Seed `e^(2u) + e^u`, i.e. `phi(t) = t^2 + t`: an exact quadratic solution.
    pub fn quadratic_phi() -> Self {
        PsiSolution::with_seed("e^(2u)+e^u", |u| (2.0 * u).exp() + u.exp())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "cubic" => Ok(PsiSolution::cubic()),
            "quadratic_phi" => Ok(PsiSolution::quadratic_phi()),
            "square_log" => Ok(PsiSolution::with_seed("u^2", |u| u * u)),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    pub fn seed_name(&self) -> &str {
        &self.name
    }

    /// `psi(u)` for `u >= 0`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "psi needs a nonnegative argument, got {u}"
            )));
        }
        if u > MAX_ARGUMENT {
            return Err(Error::InvalidArgument(format!(
                "psi argument {u} exceeds {MAX_ARGUMENT}"
            )));
        }
        if u < LN3 {
            return Ok((self.seed)(u));
        }
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(&u.to_bits()) {
            return Ok(*v);
        }
        // lock released while recursing
        let v = 3.0 * self.psi(u - LN3_OVER_2)? - 3.0 * self.psi(u - LN3)?;
        self.memo
            .lock()
            .expect("memo poisoned")
            .insert(u.to_bits(), v);
        Ok(v)
    }

    /// `phi(t) = psi(ln t)` for `t >= 1`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(Error::InvalidArgument(format!("phi needs t >= 1, got {t}")));
        }
        self.psi(t.ln())
    }

    /// `psi(u + ln 3) - 3 psi(u + ln 2) + 3 psi(u)`.
    pub fn recurrence_residual(&self, u: f64) -> Result<Residual> {
        Ok(Residual::from_terms(&[
            self.psi(u + LN3)?,
            -3.0 * self.psi(u + LN2)?,
            3.0 * self.psi(u)?,
        ]))
    }
}

/// `d(y) = y phi(ln y) = y psi(ln ln y)` on `(e, inf)`.
pub fn build_d(sol: Arc<PsiSolution>) -> ScalarMap {
    let domain = DomainSet::interval(E, f64::INFINITY).expect("valid interval");
    ScalarMap::from_values(format!("d[{}]", sol.seed_name()), domain, move |y| {
        if !(y > E) {
            return Err(Error::OutOfDomain {
                name: "d".into(),
                x: y,
            });
        }
        Ok(y * sol.psi(y.ln().ln())?)
    })
}

/// The operator `D(f) = d o f` built on `sol`.
pub fn counterexample_operator(sol: Arc<PsiSolution>) -> OperatorSpec {
    OperatorSpec::composition(build_d(sol))
}

/// `d(y^3) - 3y d(y^2) + 3y^2 d(y)`; zero for every `y > e`.
pub fn scalar_powers_residual(d: &ScalarMap, y: f64) -> Result<Residual> {
    Ok(Residual::from_terms(&[
        d.value(y * y * y)?,
        -3.0 * y * d.value(y * y)?,
        3.0 * y * y * d.value(y)?,
    ]))
}

/// `D(f^3) - 3f D(f^2) + 3f^2 D(f)` at `x` for `D = d o f`; needs `f(x) > e`.
pub fn residual_powers_composition(d: &ScalarMap, f: &FunctionSpec, x: f64) -> Result<Residual> {
    let y = f.value_at(x)?;
    if !(y > E) {
        return Err(Error::Domain(format!(
            "range of `{}` at x = {x} is {y}, not above e",
            f.name()
        )));
    }
    scalar_powers_residual(d, y)
}

/// The seven-term residual of `D = d o f` at constant functions `a`, `b`, `c`.
pub fn constant_triple_residual(d: &ScalarMap, a: f64, b: f64, c: f64) -> Result<Residual> {
    let op = OperatorSpec::composition(d.clone());
    // constant functions: any evaluation point works
    residual_id2(&op, &constant_fn(a), &constant_fn(b), &constant_fn(c), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub residual: Residual,
    pub trial: usize,
}

/// First seeded triple in `(e, 20)^3` whose seven-term residual exceeds
/// `threshold` in absolute value.
pub fn find_violation_triple(
    d: &ScalarMap,
    seed: u64,
    trials: usize,
    threshold: f64,
) -> Result<Violation> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        // open interval: a draw landing exactly on e is nudged inside
        let mut draw = || rng.gen_range(E..SEARCH_UPPER).max(E + 1e-12);
        let (x, y, z) = (draw(), draw(), draw());
        let residual = constant_triple_residual(d, x, y, z)?;
        if residual.value.abs() > threshold {
            return Ok(Violation {
                x,
                y,
                z,
                residual,
                trial,
            });
        }
    }
    Err(Error::NoViolationFound { trials })
}

/// `phi(a+b+c) - phi(a+b) - phi(a+c) - phi(b+c) + phi(a) + phi(b) + phi(c)`.
pub fn cube_phi(sol: &PsiSolution, a: f64, b: f64, c: f64) -> Result<Residual> {
    for v in [a, b, c] {
        if !(v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cube_phi arguments must exceed 1, got {v}"
            )));
        }
    }
    Ok(Residual::from_terms(&[
        sol.phi(a + b + c)?,
        -sol.phi(a + b)?,
        -sol.phi(a + c)?,
        -sol.phi(b + c)?,
        sol.phi(a)?,
        sol.phi(b)?,
        sol.phi(c)?,
    ]))
}

/// Quadratic fit of `phi` on `count` evenly spaced points of `[lo, hi]`,
/// with `t` mapped affinely onto `[-1, 1]`.
pub fn phi_quadratic_fit(
    sol: &PsiSolution,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<QuadraticModel> {
    if !(lo >= 1.0 && hi > lo) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "bad fit window [{lo}, {hi}] with {count} points"
        )));
    }
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let samples = (0..count)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            Ok((vec![(t - mid) / half], sol.phi(t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_quadratic(&samples, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lookup;

    #[test]
    fn log_constants() {
        assert_eq!(LN3, 3f64.ln());
        assert!((LN3_OVER_2 - 1.5f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn psi_examples() {
        let s = PsiSolution::cubic();
        assert_eq!(s.psi(0.5).unwrap(), 0.125);
        let u = LN3 + 0.1;
        let want = 3.0 * (u - LN3_OVER_2).powi(3) - 3.0 * (u - LN3).powi(3);
        assert_eq!(s.psi(u).unwrap(), want);
        assert!(
            (s.psi(u).unwrap() - (3.0 * (LN2 + 0.1f64).powi(3) - 3.0 * 0.1f64.powi(3))).abs()
                < 1e-12
        );
        assert!(s.psi(-0.1).is_err());
        assert!(s.psi(65.0).is_err());
        assert!(s.psi(40.0).unwrap().is_finite());
    }

    #[test]
    fn quadratic_seed_reproduces_polynomial() {
        let s = PsiSolution::quadratic_phi();
        for t in [1.5, 3.7, 9.0, 40.0] {
            let phi = s.phi(t).unwrap();
            assert!((phi - (t * t + t)).abs() <= 1e-9 * (t * t), "{t}: {phi}");
        }
    }

    #[test]
    fn d_examples() {
        let sol = Arc::new(PsiSolution::cubic());
        let d = build_d(sol.clone());
        assert!(d.value(E).is_err());
        assert!(d.value(2.0).is_err());
        for y in [2.8, 3.5, 7.0, 15.0] {
            assert!(scalar_powers_residual(&d, y).unwrap().within(1e-9));
            assert!((d.value(y).unwrap() / y - sol.phi(y.ln()).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn powers_composition() {
        let d = build_d(Arc::new(PsiSolution::cubic()));
        let four = constant_fn(4.0);
        assert!(residual_powers_composition(&d, &four, 0.0)
            .unwrap()
            .within(1e-9));
        let f = crate::corpus::sum(&constant_fn(3.0), &lookup("square").unwrap()).unwrap();
        for x in [-1.5, 0.0, 0.7] {
            assert!(residual_powers_composition(&d, &f, x).unwrap().within(1e-9));
        }
        assert!(residual_powers_composition(&d, &constant_fn(2.0), 0.0).is_err());
    }

    #[test]
    fn violation_search() {
        let d = build_d(Arc::new(PsiSolution::cubic()));
        let v = find_violation_triple(&d, 1, 1000, 1e-6).unwrap();
        assert!(v.residual.value.abs() > 1e-6);
        assert!([v.x, v.y, v.z].iter().all(|c| *c > E && *c < SEARCH_UPPER));
        assert!(matches!(
            find_violation_triple(&d, 1, 50, f64::INFINITY),
            Err(Error::NoViolationFound { trials: 50 })
        ));
        let quad = build_d(Arc::new(PsiSolution::quadratic_phi()));
        assert!(matches!(
            find_violation_triple(&quad, 1, 1000, 1e-6),
            Err(Error::NoViolationFound { .. })
        ));
        let sq = build_d(Arc::new(PsiSolution::by_name("square_log").unwrap()));
        assert!(find_violation_triple(&sq, 1, 1000, 1e-6).is_ok());
    }

    #[test]
    fn violation_matches_phi_cube() {
        let sol = Arc::new(PsiSolution::cubic());
        let d = build_d(sol.clone());
        let v = find_violation_triple(&d, 3, 1000, 1e-6).unwrap();
        let c = cube_phi(&sol, v.x.ln(), v.y.ln(), v.z.ln()).unwrap();
        let scaled = v.x * v.y * v.z * c.value;
        assert!((scaled - v.residual.value).abs() <= 1e-8 * v.residual.scale);
    }

    #[test]
    fn cube_phi_of_quadratic_vanishes() {
        let s = PsiSolution::quadratic_phi();
        let r = cube_phi(&s, 1.2, 2.5, 3.1).unwrap();
        assert!(r.within(1e-12), "{r:?}");
        assert!(cube_phi(&s, 0.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn phi_is_not_quadratic() {
        let s = PsiSolution::cubic();
        assert!(phi_quadratic_fit(&s, 1.0, 10.0, 200).unwrap().residual > 0.01);
        let q = PsiSolution::quadratic_phi();
        assert!(phi_quadratic_fit(&q, 1.0, 10.0, 200).unwrap().residual < 1e-9);
    }

    #[test]
    fn concurrent_evaluation() {
        let sol = Arc::new(PsiSolution::cubic());
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let s = sol.clone();
                std::thread::spawn(move || s.psi(3.0 + i as f64 * 0.37).unwrap())
            })
            .collect();
        let got: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let fresh = PsiSolution::cubic();
        for (i, v) in got.iter().enumerate() {
            assert_eq!(*v, fresh.psi(3.0 + i as f64 * 0.37).unwrap());
        }
    }
}
