use std::sync::Arc;

use leibniz_core::aichinger::{
    box_probes, cube_residual, fit_quadratic, fit_symbol, recover_coefficients, SymbolG, PROBE_DIM,
};
use leibniz_core::corpus::{lookup, sample_common, DEFAULT_MARGIN};
use leibniz_core::counterexample::{counterexample_operator, PsiSolution};
use leibniz_core::operators::{residual_id2, CoeffFn, OperatorSpec};
use leibniz_core::Error;

fn sample_operators() -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::characterized(0.0, 0.0, 1.0, 0.0, 2).unwrap(),
        OperatorSpec::characterized(1.5, -0.5, 0.25, 0.75, 2).unwrap(),
        OperatorSpec::characterized(-1.0, 2.0, 0.0, 0.0, 1).unwrap(),
        OperatorSpec::characterized(0.3, 0.0, 0.0, -0.4, 0).unwrap(),
        OperatorSpec::characterized(
            CoeffFn::from_callable("cos", f64::cos),
            CoeffFn::from_callable("x", |x| x),
            CoeffFn::from_callable("1+x^2", |x| 1.0 + x * x),
            CoeffFn::from_callable("sin", f64::sin),
            2,
        )
        .unwrap(),
    ]
}

#[test]
fn characterized_operators_satisfy_trilinear_identity() {
    let names = ["square_minus_one", "sin", "exp", "lorentzian", "cube"];
    for op in sample_operators() {
        for a in &names {
            for b in &names {
                let (f, g, h) = (
                    lookup(a).unwrap(),
                    lookup(b).unwrap(),
                    lookup("two_plus_sin").unwrap(),
                );
                for x in sample_common(&[&f, &g, &h], 8, 3, DEFAULT_MARGIN).unwrap() {
                    let r = residual_id2(&op, &f, &g, &h, x).unwrap();
                    assert!(
                        r.within(1e-9),
                        "{} on {a},{b} at {x}: {:e}",
                        op.describe(),
                        r.scaled()
                    );
                }
            }
        }
    }
}

#[test]
fn induced_symbols_are_quadratic() {
    for op in sample_operators() {
        let g = SymbolG::induced(&op, PROBE_DIM);
        let probes = box_probes(PROBE_DIM, 9, 17);
        for t in probes.chunks(3) {
            let r = cube_residual(&g, 0.4, &t[0], &t[1], &t[2]).unwrap();
            assert!(r.within(1e-9), "{}: {:e}", op.describe(), r.scaled());
        }
        let fit = fit_symbol(&g, 0.4, 40, 5).unwrap();
        assert!(
            fit.residual <= 1e-8,
            "{}: {:e}",
            op.describe(),
            fit.residual
        );
    }
}

#[test]
fn cubic_norm_is_not_quadratic() {
    let samples: Vec<_> = box_probes(3, 60, 2)
        .into_iter()
        .map(|v| {
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            (v, n * n * n)
        })
        .collect();
    assert!(fit_quadratic(&samples, 3).unwrap().residual > 0.01);
}

#[test]
fn recovery_round_trip() {
    let op = sample_operators().pop().unwrap();
    for i in 0..16 {
        let x = -1.5 + 0.2 * i as f64;
        let r = recover_coefficients(&op, x).unwrap();
        let want = [x.cos(), x, 1.0 + x * x, x.sin()];
        for (got, want) in [r.c0, r.c1, r.c2, r.d00].into_iter().zip(want) {
            assert!((got - want).abs() <= 1e-8, "x = {x}: {got} vs {want}");
        }
    }
}

#[test]
fn counterexample_is_rejected_by_recovery() {
    let op = counterexample_operator(Arc::new(PsiSolution::cubic()));
    assert!(matches!(
        recover_coefficients(&op, 0.5),
        Err(Error::NotInFamily { .. })
    ));
    let third = OperatorSpec::black_box("f'''", 3, |_, j| j.get(3));
    assert!(matches!(
        recover_coefficients(&third, 0.5),
        Err(Error::NotInFamily { .. })
    ));
}
