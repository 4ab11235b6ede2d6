//! Fundamental matrices, state-transition matrices and scalar solutions.

mod common;

use common::*;
use ltvr_core::analysis::analyze;
use ltvr_core::rce::{lti_primitive, IntrinsicKind};
use ltvr_core::solution::{match_boundary, ScalarKind};
use ltvr_core::timefn::linspace;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (bool, [f64; 9])> {
    (any::<bool>(), proptest::array::uniform9(-1.0..1.0f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn liouville_determinant((lti, p) in params()) {
        let an = RandomSystem::from_params(lti, p).analyze().unwrap();
        let d = liouville_dev(&an).unwrap();
        prop_assert!(d <= 1e-7, "liouville {d:e}");
    }

    #[test]
    fn transition_composition((lti, p) in params(), ts in proptest::array::uniform3(0.0..2.0f64)) {
        let an = RandomSystem::from_params(lti, p).analyze().unwrap();
        let d = composition_dev(&an, ts[0], ts[1], ts[2]).unwrap();
        prop_assert!(d <= 1e-7, "composition {d:e}");
    }

    #[test]
    fn columns_solve_the_system((lti, p) in params()) {
        let an = RandomSystem::from_params(lti, p).analyze().unwrap();
        for t in probes(&an, 10) {
            let r = an.fund.column_residual(&an.sys, t).unwrap();
            prop_assert!(r <= 1e-6, "t={t}: {r:e}");
        }
    }

    #[test]
    fn boundary_matching_on_real_constant_systems(p in proptest::array::uniform9(-1.0..1.0f64), y0 in -3.0..3.0f64, yd0 in -3.0..3.0f64) {
        let an = RandomSystem::from_params(true, p).analyze().unwrap();
        let prim = lti_primitive(&an.mf).unwrap();
        let y = match_boundary(y0, yd0, &an.mf, &prim, 0.5).unwrap();
        if prim.intrinsic == IntrinsicKind::Real && !prim.degenerate {
            prop_assert!(matches!(y.kind, ScalarKind::Cosh | ScalarKind::Sinh | ScalarKind::PureExponential));
        }
        prop_assert!((y.eval(0.5).unwrap() - y0).abs() <= 1e-9 * (1.0 + y0.abs()));
        prop_assert!((y.derivative(0.5).unwrap() - yd0).abs() <= 1e-6 * (1.0 + yd0.abs()));
    }
}

#[test]
fn fixture_columns_solve_their_systems() {
    for key in ["eq31", "eq33", "eq35", "eq40", "eq43", "eq47"] {
        let an = run_example(key);
        let (lo, hi) = an.sys.domain();
        let poles = an.spectrum.poles();
        for t in ltvr_core::spectral::regular_points(lo, hi, 40, &poles, 1e-3) {
            let r = an.fund.column_residual(&an.sys, t).unwrap();
            assert!(r <= 1e-6, "{key} t={t}: {r:e}");
        }
    }
}

#[test]
fn real_family_and_complex_primitives_agree() {
    let (sys, mut opts) = example("eq35");
    let a = analyze(&sys, &opts).unwrap().stm(0.0).unwrap();
    opts.prefer_real_family = true;
    let b = analyze(&sys, &opts).unwrap().stm(0.0).unwrap();
    for t in linspace(0.0, 2.0, 25) {
        let (x, y) = (a.eval(t).unwrap(), b.eval(t).unwrap());
        assert!(max_abs(&(x - y)) <= 1e-7);
        assert!(max_abs(&(x - eq35_phi(t))) <= 1e-8);
    }
}

#[test]
fn scalar_solutions_of_the_distinct_root_example() {
    let an = run_example("eq31");
    let prim = lti_primitive(&an.mf).unwrap();
    // x1 of the system from x(0) = (1, 0) is (e^t + 2 e^{4t}) / 3.
    let y = match_boundary(1.0, 3.0, &an.mf, &prim, 0.0).unwrap();
    for t in [0.0f64, 0.5, 1.7] {
        let expect = (t.exp() + 2.0 * (4.0 * t).exp()) / 3.0;
        assert!((y.eval(t).unwrap() - expect).abs() <= 1e-10 * expect);
    }
}

#[test]
fn singular_reference_of_the_singular_example() {
    let an = run_example("eq43");
    let err = an.stm(0.0).unwrap_err();
    assert!(matches!(err, ltvr_core::LtvError::SingularReference { .. }), "{err}");
    assert!(matches!(an.stm(4.0), Err(ltvr_core::LtvError::Domain { .. })));
}
