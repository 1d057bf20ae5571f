//! Truncated Taylor jets.
//!
//! A [`Jet`] of order `k` holds the raw derivative values
//! `(f(x), f'(x), ..., f^(k)(x))` at a single point. Products use the
//! general Leibniz rule with binomial weights, so entries never need
//! factorial rescaling. Every fallible operation checks that the result is
//! finite before handing it back.

use std::fmt;

use crate::error::{Error, Result};

/// Highest supported derivative order.
pub const K_MAX: usize = 8;

const BINOM: [[f64; K_MAX + 1]; K_MAX + 1] = binomial_table();

const fn binomial_table() -> [[f64; K_MAX + 1]; K_MAX + 1] {
    let mut t = [[0.0; K_MAX + 1]; K_MAX + 1];
    let mut n = 0;
    while n <= K_MAX {
        t[n][0] = 1.0;
        let mut i = 1;
        while i <= n {
            t[n][i] = t[n - 1][i - 1] + if i < n { t[n - 1][i] } else { 0.0 };
            i += 1;
        }
        n += 1;
    }
    t
}

/// Binomial coefficient `C(n, i)` for `i <= n <= K_MAX`.
pub fn binom(n: usize, i: usize) -> f64 {
    BINOM[n][i]
}

/// Exact factorials up to `K_MAX!`.
pub const FACTORIALS: [u64; K_MAX + 1] = [1, 1, 2, 6, 24, 120, 720, 5040, 40320];

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: usize,
    d: [f64; K_MAX + 1],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Jet").field(&self.derivs()).finish()
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > K_MAX {
        Err(Error::OrderTooHigh(k))
    } else {
        Ok(())
    }
}

impl Jet {
    fn zeros(order: usize) -> Self {
        Jet {
            order,
            d: [0.0; K_MAX + 1],
        }
    }

    /// Jet of the constant function `v`.
    pub fn constant(v: f64, k: usize) -> Result<Self> {
        check_order(k)?;
        let mut j = Jet::zeros(k);
        j.d[0] = v;
        j.checked("constant")
    }

    /// Jet of the identity function at `x0`.
    pub fn variable(x0: f64, k: usize) -> Result<Self> {
        check_order(k)?;
        let mut j = Jet::zeros(k);
        j.d[0] = x0;
        if k >= 1 {
            j.d[1] = 1.0;
        }
        j.checked("variable")
    }

    /// Builds a jet from raw derivative values; the order is `derivs.len() - 1`.
    pub fn from_derivs(derivs: &[f64]) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::InvalidArgument("empty derivative vector".into()));
        }
        let k = derivs.len() - 1;
        check_order(k)?;
        let mut j = Jet::zeros(k);
        j.d[..=k].copy_from_slice(derivs);
        j.checked("from_derivs")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn derivs(&self) -> &[f64] {
        &self.d[..=self.order]
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    /// The `i`-th derivative, or `InsufficientOrder` when `i > order`.
    pub fn get(&self, i: usize) -> Result<f64> {
        if i > self.order {
            Err(Error::InsufficientOrder {
                needed: i,
                got: self.order,
            })
        } else {
            Ok(self.d[i])
        }
    }

    /// Drops derivatives above `k`.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k > self.order {
            return Err(Error::InsufficientOrder {
                needed: k,
                got: self.order,
            });
        }
        let mut j = *self;
        j.order = k;
        for e in &mut j.d[k + 1..] {
            *e = 0.0;
        }
        Ok(j)
    }

    fn checked(self, op: &'static str) -> Result<Self> {
        if self.derivs().iter().all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::NonFinite(op))
        }
    }

    fn same_order(&self, other: &Jet) -> Result<usize> {
        if self.order == other.order {
            Ok(self.order)
        } else {
            Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            })
        }
    }

    pub fn add(&self, other: &Jet) -> Result<Self> {
        let k = self.same_order(other)?;
        let mut r = Jet::zeros(k);
        for n in 0..=k {
            r.d[n] = self.d[n] + other.d[n];
        }
        r.checked("add")
    }

    pub fn sub(&self, other: &Jet) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        let mut r = *self;
        for e in &mut r.d[..=r.order] {
            *e *= s;
        }
        r.checked("scale")
    }

    pub fn neg(&self) -> Self {
        let mut r = *self;
        for e in &mut r.d[..=r.order] {
            *e = -*e;
        }
        r
    }

    /// General Leibniz rule: `(ab)^(n) = sum_i C(n,i) a^(i) b^(n-i)`.
    pub fn mul(&self, other: &Jet) -> Result<Self> {
        let k = self.same_order(other)?;
        let mut r = Jet::zeros(k);
        for n in 0..=k {
            r.d[n] = (0..=n)
                .map(|i| BINOM[n][i] * self.d[i] * other.d[n - i])
                .sum();
        }
        r.checked("mul")
    }

    /// Inverse of [`Jet::mul`]: solves `a = q * b` for `q` entry by entry.
    pub fn div(&self, other: &Jet) -> Result<Self> {
        let k = self.same_order(other)?;
        let b0 = other.d[0];
        if b0 == 0.0 {
            return Err(Error::ZeroDivisor);
        }
        let mut q = Jet::zeros(k);
        for n in 0..=k {
            let known: f64 = (0..n).map(|i| BINOM[n][i] * q.d[i] * other.d[n - i]).sum();
            q.d[n] = (self.d[n] - known) / b0;
        }
        q.checked("div")
    }

    pub fn recip(&self) -> Result<Self> {
        Jet::constant(1.0, self.order)?.div(self)
    }

    /// Repeated multiplication; `powi(0)` is the constant one.
    pub fn powi(&self, n: u32) -> Result<Self> {
        let mut acc = Jet::constant(1.0, self.order)?;
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Jet of `exp(f)` from `(exp f)' = f' exp f`.
    pub fn exp(&self) -> Result<Self> {
        let k = self.order;
        let mut e = Jet::zeros(k);
        e.d[0] = self.d[0].exp();
        if !e.d[0].is_finite() {
            return Err(Error::NonFinite("exp"));
        }
        for n in 1..=k {
            e.d[n] = (0..n)
                .map(|i| BINOM[n - 1][i] * self.d[i + 1] * e.d[n - 1 - i])
                .sum();
        }
        e.checked("exp")
    }

    /// Jet of `ln f`; requires a positive value entry.
    pub fn ln(&self) -> Result<Self> {
        if !(self.d[0] > 0.0) {
            return Err(Error::Domain(format!(
                "ln of nonpositive value {}",
                self.d[0]
            )));
        }
        self.log_from(self.d[0].ln())
    }

    /// Jet of `ln |f|`; requires a nonzero value entry.
    pub fn ln_abs(&self) -> Result<Self> {
        if self.d[0] == 0.0 {
            return Err(Error::Domain("ln|f| at a zero of f".into()));
        }
        self.log_from(self.d[0].abs().ln())
    }

    // (ln f)' = f'/f, integrated with the given constant term.
    fn log_from(&self, value: f64) -> Result<Self> {
        let k = self.order;
        let mut r = Jet::zeros(k);
        r.d[0] = value;
        if k > 0 {
            let q = self.derivative().div(&self.truncate(k - 1)?)?;
            r.d[1..=k].copy_from_slice(q.derivs());
        }
        r.checked("ln")
    }

    /// Jet of `f'` (order drops by one). Order-zero jets map to themselves
    /// with a zero entry, which callers never rely on.
    fn derivative(&self) -> Self {
        let k = self.order.saturating_sub(1);
        let mut r = Jet::zeros(k);
        if self.order > 0 {
            r.d[..=k].copy_from_slice(&self.d[1..=self.order]);
        }
        r
    }

    /// Chain rule: given the derivatives `outer[n] = g^(n)(f(x))`, returns the
    /// jet of `g o f`. Expands `g` in powers of `f - f(x)`, whose jet has a
    /// zero value entry, so the sum truncates exactly at the jet order.
    pub fn compose(&self, outer: &[f64]) -> Result<Self> {
        let k = self.order;
        if outer.len() <= k {
            return Err(Error::InsufficientOrder {
                needed: k,
                got: outer.len().saturating_sub(1),
            });
        }
        let mut shifted = *self;
        shifted.d[0] = 0.0;
        let mut acc = Jet::constant(outer[0], k)?;
        let mut power = Jet::constant(1.0, k)?;
        for n in 1..=k {
            power = power.mul(&shifted)?;
            acc = acc.add(&power.scale(outer[n] / FACTORIALS[n] as f64)?)?;
        }
        acc.checked("compose")
    }

    pub fn sin(&self) -> Result<Self> {
        let (s, c) = self.d[0].sin_cos();
        let outer: Vec<f64> = (0..=self.order).map(|n| [s, c, -s, -c][n % 4]).collect();
        self.compose(&outer)
    }

    pub fn cos(&self) -> Result<Self> {
        let (s, c) = self.d[0].sin_cos();
        let outer: Vec<f64> = (0..=self.order).map(|n| [c, -s, -c, s][n % 4]).collect();
        self.compose(&outer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn jet(v: &[f64]) -> Jet {
        Jet::from_derivs(v).unwrap()
    }

    fn assert_jet_eq(a: &Jet, b: &[f64], tol: f64) {
        assert_eq!(a.derivs().len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.derivs().iter().zip(b) {
            assert_relative_eq!(*x, *y, epsilon = tol, max_relative = tol);
        }
    }

    #[test]
    fn constants_and_variables() {
        assert_eq!(Jet::constant(5.0, 2).unwrap().derivs(), &[5.0, 0.0, 0.0]);
        assert_eq!(Jet::constant(0.0, 0).unwrap().derivs(), &[0.0]);
        assert_eq!(
            Jet::constant(-1.0, 3).unwrap().derivs(),
            &[-1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(Jet::variable(2.0, 2).unwrap().derivs(), &[2.0, 1.0, 0.0]);
        assert_eq!(Jet::variable(0.0, 1).unwrap().derivs(), &[0.0, 1.0]);
        let e = std::f64::consts::E;
        assert_eq!(
            Jet::variable(e, 4).unwrap().derivs(),
            &[e, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(Jet::constant(1.0, 9), Err(Error::OrderTooHigh(9)));
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), 6.0);
        assert_eq!(binom(8, 3), 56.0);
        assert_eq!(binom(8, 8), 1.0);
    }

    #[test]
    fn product_rule() {
        // x^2 and x^3 at 2 multiply to x^5: 32, 5*16, 20*8
        let p = jet(&[4.0, 4.0, 2.0]).mul(&jet(&[8.0, 12.0, 12.0])).unwrap();
        assert_eq!(p.derivs(), &[32.0, 80.0, 160.0]);
        let a = jet(&[1.5, -2.0, 0.25, 3.0]);
        assert_eq!(a.mul(&Jet::constant(1.0, 3).unwrap()).unwrap(), a);
        let sq = jet(&[1.0, 1.0, 0.0]).mul(&jet(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(sq.derivs(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn second_row_is_second_order_leibniz() {
        let f = jet(&[0.7, -1.3, 2.9]);
        let g = jet(&[-0.4, 0.6, 1.7]);
        let p = f.mul(&g).unwrap();
        let expect = 2.9 * -0.4 + 2.0 * (-1.3 * 0.6) + 0.7 * 1.7;
        assert!((p.derivs()[2] - expect).abs() < 1e-15);
    }

    #[test]
    fn linear_ops() {
        assert_eq!(
            jet(&[1.0, 2.0, 3.0])
                .add(&jet(&[4.0, 5.0, 6.0]))
                .unwrap()
                .derivs(),
            &[5.0, 7.0, 9.0]
        );
        assert_eq!(
            jet(&[1.0, 2.0]).scale(-1.0).unwrap().derivs(),
            &[-1.0, -2.0]
        );
        let a = jet(&[0.3, -7.0, 1e3]);
        assert_eq!(a.neg().neg(), a);
        assert_eq!(
            jet(&[1.0]).add(&jet(&[1.0, 2.0])),
            Err(Error::OrderMismatch { left: 0, right: 1 })
        );
    }

    #[test]
    fn exp_and_ln() {
        assert_jet_eq(
            &jet(&[0.0, 1.0, 0.0]).exp().unwrap(),
            &[1.0, 1.0, 1.0],
            1e-15,
        );
        assert_eq!(
            Jet::constant(0.0, 3).unwrap().exp().unwrap(),
            Jet::constant(1.0, 3).unwrap()
        );
        assert_jet_eq(
            &jet(&[1.0, 1.0, 0.0]).ln().unwrap(),
            &[0.0, 1.0, -1.0],
            1e-15,
        );
        assert_jet_eq(
            &jet(&[-1.0, 0.0, 0.0]).ln_abs().unwrap(),
            &[0.0, 0.0, 0.0],
            0.0,
        );
        let e = std::f64::consts::E;
        assert_jet_eq(&jet(&[e, 0.0, 0.0]).ln().unwrap(), &[1.0, 0.0, 0.0], 1e-15);
        let a = jet(&[0.4, -1.1, 2.3, 0.5, -0.9]);
        let back = a.exp().unwrap().ln().unwrap();
        assert_jet_eq(&back, a.derivs(), 1e-12);
    }

    #[test]
    fn ln_domain_errors() {
        assert!(matches!(jet(&[0.0, 1.0]).ln(), Err(Error::Domain(_))));
        assert!(matches!(jet(&[-2.0, 1.0]).ln(), Err(Error::Domain(_))));
        assert!(matches!(jet(&[0.0, 1.0]).ln_abs(), Err(Error::Domain(_))));
    }

    #[test]
    fn ln_abs_agrees_with_ln_above_value_entry() {
        let a = jet(&[-2.5, 0.3, -1.2, 4.0]);
        let b = a.neg();
        let la = a.ln_abs().unwrap();
        let lb = b.ln().unwrap();
        for i in 0..=3 {
            assert_relative_eq!(la.derivs()[i], lb.derivs()[i], max_relative = 1e-15);
        }
    }

    #[test]
    fn exp_overflow_is_an_error() {
        assert_eq!(
            Jet::constant(800.0, 1).unwrap().exp(),
            Err(Error::NonFinite("exp"))
        );
    }

    #[test]
    fn division_and_powers() {
        assert_jet_eq(
            &jet(&[2.0, 1.0, 0.0]).powi(3).unwrap(),
            &[8.0, 12.0, 12.0],
            0.0,
        );
        let a = jet(&[1.2, -0.5, 3.0, 0.1]);
        let b = jet(&[-0.7, 2.0, 0.4, -1.0]);
        let q = a.mul(&b).unwrap().div(&b).unwrap();
        assert_jet_eq(&q, a.derivs(), 1e-13);
        assert_eq!(a.powi(0).unwrap(), Jet::constant(1.0, 3).unwrap());
        assert_eq!(a.div(&jet(&[0.0, 1.0, 0.0, 0.0])), Err(Error::ZeroDivisor));
    }

    #[test]
    fn trig_jets() {
        let s = Jet::variable(0.0, 4).unwrap().sin().unwrap();
        assert_jet_eq(&s, &[0.0, 1.0, 0.0, -1.0, 0.0], 1e-15);
        let c = Jet::variable(0.0, 4).unwrap().cos().unwrap();
        assert_jet_eq(&c, &[1.0, 0.0, -1.0, 0.0, 1.0], 1e-15);
    }

    #[test]
    fn compose_matches_product_chain() {
        // sin(x^2) at x=0.8 by hand: d1 = 2x cos, d2 = 2cos - 4x^2 sin
        let x = 0.8_f64;
        let u = Jet::variable(x, 2).unwrap().powi(2).unwrap();
        let r = u.sin().unwrap();
        let (s, c) = (x * x).sin_cos();
        assert_jet_eq(&r, &[s, 2.0 * x * c, 2.0 * c - 4.0 * x * x * s], 1e-14);
    }

    #[test]
    fn insufficient_order() {
        let a = jet(&[1.0, 2.0]);
        assert_eq!(
            a.get(2),
            Err(Error::InsufficientOrder { needed: 2, got: 1 })
        );
        assert!(a.compose(&[1.0]).is_err());
    }
}
