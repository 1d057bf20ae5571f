//! Exponential conjugation, the cube functional equation, quadratic fitting
//! of the induced symbol, and coefficient recovery for black-box operators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{self, FunctionSpec};
use crate::error::{Error, Result};
use crate::operators::{apply, OperatorSpec, Residual};

/// Conjugation is refused when `|f(x)|` exceeds this bound.
pub const EXP_GUARD: f64 = 300.0;

/// Jet dimension used for recovery probes (orders 0, 1, 2).
pub const PROBE_DIM: usize = 3;

/// `P(f)(x) = D(exp o f)(x) / exp(f(x))`.
pub fn conjugate_p(d: &OperatorSpec, f: &FunctionSpec, x: f64) -> Result<f64> {
    let fx = f.value_at(x)?;
    if fx.abs() > EXP_GUARD {
        return Err(Error::Domain(format!(
            "conjugation overflow guard: |f(x)| = {} > {EXP_GUARD}",
            fx.abs()
        )));
    }
    Ok(apply(d, &corpus::exp_of(f), x)? / fx.exp())
}

type SymbolFn = dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync;

/// A map `(x, v) -> G(x, v)` with `v` in `R^n`.
#[derive(Clone)]
pub struct SymbolG {
    n: usize,
    eval: Arc<SymbolFn>,
}

impl fmt::Debug for SymbolG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolG")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl SymbolG {
    pub fn new(
        n: usize,
        eval: impl Fn(f64, &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        SymbolG {
            n,
            eval: Arc::new(eval),
        }
    }

    /// The symbol of `P`: `G(x, v) = P(g)(x)` for any `g` whose jet at `x` is `v`.
    pub fn induced(d: &OperatorSpec, n: usize) -> Self {
        let d = d.clone();
        SymbolG::new(n, move |x, v| {
            conjugate_p(&d, &corpus::prescribe_jet(x, v)?, x)
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: f64, v: &[f64]) -> Result<f64> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        (self.eval)(x, v)
    }
}

fn vadd(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// `G(v1+v2+v3) - G(v2+v3) - G(v1+v3) - G(v1+v2) + G(v1) + G(v2) + G(v3)`.
pub fn cube_residual(g: &SymbolG, x: f64, v1: &[f64], v2: &[f64], v3: &[f64]) -> Result<Residual> {
    for v in [v1, v2, v3] {
        if v.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: v.len(),
            });
        }
    }
    let v12 = vadd(v1, v2);
    Ok(Residual::from_terms(&[
        g.eval(x, &vadd(&v12, v3))?,
        -g.eval(x, &vadd(v2, v3))?,
        -g.eval(x, &vadd(v1, v3))?,
        -g.eval(x, &v12)?,
        g.eval(x, v1)?,
        g.eval(x, v2)?,
        g.eval(x, v3)?,
    ]))
}

/// `constant + sum_i linear[i] v_i + sum_{i>=j} quadratic[i][j] v_i v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub constant: f64,
    pub linear: Vec<f64>,
    /// Lower triangular: row `i` holds entries `j = 0..=i`.
    pub quadratic: Vec<Vec<f64>>,
    /// Max absolute misfit over the fitted samples.
    pub residual: f64,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
}

impl QuadraticModel {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let mut out = self.constant;
        for (i, vi) in v.iter().enumerate() {
            out += self.linear[i] * vi;
            for j in 0..=i {
                out += self.quadratic[i][j] * vi * v[j];
            }
        }
        out
    }
}

fn monomials(v: &[f64]) -> Vec<f64> {
    let mut row = vec![1.0];
    row.extend_from_slice(v);
    for i in 0..v.len() {
        for j in 0..=i {
            row.push(v[i] * v[j]);
        }
    }
    row
}

/// Least-squares quadratic fit over the basis `{1, v_i, v_i v_j (i >= j)}`.
pub fn fit_quadratic(samples: &[(Vec<f64>, f64)], n: usize) -> Result<QuadraticModel> {
    let cols = 1 + n + n * (n + 1) / 2;
    if samples.len() < cols {
        return Err(Error::RankDeficient {
            rank: samples.len(),
            cols,
        });
    }
    let mut rows = Vec::with_capacity(samples.len() * cols);
    for (v, _) in samples {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        rows.extend(monomials(v));
    }
    let a = DMatrix::from_row_slice(samples.len(), cols, &rows);
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|(_, y)| *y));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
    let rank = svd.rank(eps);
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let coef = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let residual = (&a * &coef - &b).amax();

    let mut quadratic = vec![Vec::new(); n];
    let mut idx = 1 + n;
    for (i, row) in quadratic.iter_mut().enumerate() {
        for _ in 0..=i {
            row.push(coef[idx]);
            idx += 1;
        }
    }
    Ok(QuadraticModel {
        constant: coef[0],
        linear: coef.rows(1, n).iter().copied().collect(),
        quadratic,
        residual,
        condition: smax / smin,
    })
}

/// Seeded probes in the box `[-1, 1]^n`.
pub fn box_probes(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect()
}

/// Samples `G(x, .)` on seeded box probes and fits a quadratic model.
pub fn fit_symbol(g: &SymbolG, x: f64, count: usize, seed: u64) -> Result<QuadraticModel> {
    let samples = box_probes(g.dim(), count, seed)
        .into_iter()
        .map(|v| {
            let y = g.eval(x, &v)?;
            Ok((v, y))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_quadratic(&samples, g.dim())
}

/// Coefficients `(c0, c1, c2, d00)` of a characterized operator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub x: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub d00: f64,
    /// Max scaled misfit of the recovered model on the verification probes.
    pub verification_residual: f64,
}

impl Recovery {
    /// `G(x, v)` predicted by the recovered coefficients. The conjugated
    /// second derivative contributes `c2 (v2 + v1^2)`.
    pub fn predict(&self, v: &[f64]) -> f64 {
        let at = |i: usize| v.get(i).copied().unwrap_or(0.0);
        self.c0 * at(0)
            + self.c1 * at(1)
            + self.c2 * (at(2) + at(1) * at(1))
            + self.d00 * at(0) * at(0)
    }
}

pub const RECOVERY_TOL: f64 = 1e-8;
const VERIFICATION_PROBES: usize = 8;

/// Recovers `(c0, c1, c2, d00)` with [`RECOVERY_TOL`] and a fixed probe seed.
pub fn recover_coefficients(d: &OperatorSpec, x: f64) -> Result<Recovery> {
    recover_coefficients_with(d, x, RECOVERY_TOL, 0x5eed)
}

/// Canonical probes `e_i` and `2 e_i` split `G` along each axis into its
/// linear part `(4G(e_i) - G(2e_i))/2` and quadratic part
/// `(G(2e_i) - 2G(e_i))/2`. The result is checked against `G` on random box
/// probes; a misfit above `tol` (scaled by `max(1, |G|)`) or a probe at which
/// `D` is undefined means the operator is outside the family.
pub fn recover_coefficients_with(
    d: &OperatorSpec,
    x: f64,
    tol: f64,
    seed: u64,
) -> Result<Recovery> {
    let g = SymbolG::induced(d, PROBE_DIM);
    let not_in_family = |e: Error| Error::NotInFamily {
        x,
        reason: format!("operator undefined at a probe: {e}"),
    };
    let axis = |i: usize, s: f64| -> Result<f64> {
        let mut v = vec![0.0; PROBE_DIM];
        v[i] = s;
        g.eval(x, &v).map_err(not_in_family)
    };
    let mut lin = [0.0; PROBE_DIM];
    let mut quad = [0.0; PROBE_DIM];
    for i in 0..PROBE_DIM {
        let (g1, g2) = (axis(i, 1.0)?, axis(i, 2.0)?);
        lin[i] = (4.0 * g1 - g2) / 2.0;
        quad[i] = (g2 - 2.0 * g1) / 2.0;
    }
    let mut rec = Recovery {
        x,
        c0: lin[0],
        c1: lin[1],
        c2: lin[2],
        d00: quad[0],
        verification_residual: 0.0,
    };
    let g0 = g.eval(x, &[0.0; PROBE_DIM]).map_err(not_in_family)?;
    let mut worst = g0.abs();
    for v in box_probes(PROBE_DIM, VERIFICATION_PROBES, seed) {
        let actual = g.eval(x, &v).map_err(not_in_family)?;
        let misfit = (actual - rec.predict(&v)).abs() / actual.abs().max(1.0);
        worst = worst.max(misfit);
    }
    rec.verification_residual = worst;
    if worst > tol {
        return Err(Error::NotInFamily {
            x,
            reason: format!("verification misfit {worst:e} exceeds {tol:e}"),
        });
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{constant_fn, lookup};
    use crate::operators::CoeffFn;
    use approx::assert_relative_eq;

    fn char_op(c0: f64, c1: f64, c2: f64, d00: f64) -> OperatorSpec {
        OperatorSpec::characterized(c0, c1, c2, d00, 2).unwrap()
    }

    #[test]
    fn conjugation_examples() {
        let d = char_op(1.7, 0.0, 0.0, 0.0);
        assert_relative_eq!(
            conjugate_p(&d, &constant_fn(0.8), 0.1).unwrap(),
            1.7 * 0.8,
            max_relative = 1e-14
        );
        let any = char_op(1.0, -2.0, 0.5, 3.0);
        assert_eq!(conjugate_p(&any, &constant_fn(0.0), 0.3).unwrap(), 0.0);
        let x = lookup("identity").unwrap();
        assert_relative_eq!(
            conjugate_p(&OperatorSpec::second_derivative(1.0), &x, 0.9).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert!(conjugate_p(&any, &constant_fn(301.0), 0.0).is_err());
    }

    #[test]
    fn cube_equation_examples() {
        let sq = SymbolG::new(1, |_, v| Ok(v[0] * v[0]));
        assert_eq!(
            cube_residual(&sq, 0.0, &[1.0], &[1.0], &[1.0])
                .unwrap()
                .value,
            0.0
        );
        let cu = SymbolG::new(1, |_, v| Ok(v[0].powi(3)));
        assert_eq!(
            cube_residual(&cu, 0.0, &[1.0], &[1.0], &[1.0])
                .unwrap()
                .value,
            6.0
        );
        let affine = SymbolG::new(2, |_, v| Ok(4.0 + v[0] - v[1]));
        let z = [0.0, 0.0];
        assert_eq!(cube_residual(&affine, 0.0, &z, &z, &z).unwrap().value, 4.0);
        assert!(cube_residual(&affine, 0.0, &[1.0], &z, &z).is_err());
    }

    #[test]
    fn quadratic_fit_round_trip() {
        let samples: Vec<(Vec<f64>, f64)> = box_probes(2, 20, 3)
            .into_iter()
            .map(|v| {
                let y = 2.0 * v[0] + 3.0 * v[0] * v[1];
                (v, y)
            })
            .collect();
        let m = fit_quadratic(&samples, 2).unwrap();
        assert!(m.residual <= 1e-10);
        assert!(m.constant.abs() < 1e-10);
        assert!((m.linear[0] - 2.0).abs() < 1e-10 && m.linear[1].abs() < 1e-10);
        // lower triangle: v1 v0 sits in row 1, column 0
        assert!((m.quadratic[1][0] - 3.0).abs() < 1e-10);
        assert!(m.quadratic[0][0].abs() < 1e-10 && m.quadratic[1][1].abs() < 1e-10);
    }

    #[test]
    fn cubic_norm_is_not_quadratic() {
        let samples: Vec<(Vec<f64>, f64)> = box_probes(2, 50, 9)
            .into_iter()
            .map(|v| {
                let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
                (v, r.powi(3))
            })
            .collect();
        assert!(fit_quadratic(&samples, 2).unwrap().residual > 0.01);
    }

    #[test]
    fn zero_samples_and_rank_deficiency() {
        let samples: Vec<(Vec<f64>, f64)> =
            box_probes(1, 5, 1).into_iter().map(|v| (v, 0.0)).collect();
        let m = fit_quadratic(&samples, 1).unwrap();
        assert_eq!(m.residual, 0.0);
        assert_eq!(m.eval(&[0.4]), 0.0);
        let same = vec![(vec![0.5], 1.0); 6];
        assert!(matches!(
            fit_quadratic(&same, 1),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            fit_quadratic(&same[..2], 1),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn induced_symbol_of_characterized_is_quadratic() {
        let d = OperatorSpec::characterized(
            CoeffFn::from_callable("sin", f64::sin),
            -0.5,
            1.25,
            CoeffFn::from_callable("x^2", |x| x * x),
            2,
        )
        .unwrap();
        let g = SymbolG::induced(&d, 3);
        assert_eq!(g.eval(0.7, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let m = fit_symbol(&g, 0.7, 40, 5).unwrap();
        assert!(m.residual <= 1e-8, "{}", m.residual);
        // G = c0 v0 + c1 v1 + c2 (v2 + v1^2) + d00 v0^2
        assert!((m.quadratic[1][1] - 1.25).abs() < 1e-9);
        assert!((m.quadratic[0][0] - 0.49).abs() < 1e-9);
    }

    #[test]
    fn recovery_examples() {
        let r = recover_coefficients(&char_op(1.0, 2.0, 3.0, 4.0), 0.25).unwrap();
        for (got, want) in [(r.c0, 1.0), (r.c1, 2.0), (r.c2, 3.0), (r.d00, 4.0)] {
            assert!((got - want).abs() < 1e-8, "{r:?}");
        }
        let r = recover_coefficients(&OperatorSpec::second_derivative(5.0), -1.0).unwrap();
        for (got, want) in [(r.c0, 0.0), (r.c1, 0.0), (r.c2, 5.0), (r.d00, 0.0)] {
            assert!((got - want).abs() < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn recovery_rejects_cross_term() {
        // d01 ln|f| f' is outside the family
        let d = OperatorSpec::black_box("d01", 1, |_, j| {
            let v = j.value();
            Ok(if v == 0.0 {
                0.0
            } else {
                v.abs().ln() * j.get(1)?
            })
        });
        assert!(matches!(
            recover_coefficients(&d, 0.5),
            Err(Error::NotInFamily { .. })
        ));
    }
}
