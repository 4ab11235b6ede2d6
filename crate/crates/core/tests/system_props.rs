//! Property tests of the system representation and its gauge actions.

mod common;

use common::*;
use ltvr_core::rce::integrate_rce;
use ltvr_core::spectral::dynamic_eigenvalues;
use ltvr_core::system::{FnMatrix, GaugeKind, GaugeMatrix, Ltv2System};
use ltvr_core::TimeFn;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (bool, [f64; 9])> {
    (any::<bool>(), proptest::array::uniform9(-1.0..1.0f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn modulation_gauge_keeps_the_spectrum((lti, p) in params()) {
        let sys = RandomSystem::from_params(lti, p).system();
        let mf = sys.modulation_form().unwrap();
        let a0 = sys.apply_gauge(&GaugeMatrix::m0(&mf)).unwrap();
        let mf0 = a0.modulation_form().unwrap();
        for t in [0.1, 0.9, 1.7] {
            prop_assert!(mf0.alpha.eval(t).unwrap().norm() < 1e-8);
            for (a, b) in [(&mf.sigma0, &mf0.sigma0), (&mf.omega01, &mf0.omega01), (&mf.omega02, &mf0.omega02)] {
                let (x, y) = (a.eval(t).unwrap(), b.eval(t).unwrap());
                prop_assert!((x - y).norm() < 1e-8 * (1.0 + x.norm()));
            }
        }
        // The same seeds give the same dynamic eigenvalues for A and A0.
        let seed = mf.omega02.eval(0.0).unwrap() / mf.omega01.eval(0.0).unwrap();
        let seeds = [seed.sqrt() + 0.5, -seed.sqrt() - 0.5];
        let spectrum = |m: &ltvr_core::system::ModulationForm| {
            let a = integrate_rce(m, seeds[0], 0.0, None).unwrap();
            let b = integrate_rce(m, seeds[1], 0.0, None).unwrap();
            dynamic_eigenvalues(m, &a, &b)
        };
        let (x, y) = (spectrum(&mf), spectrum(&mf0));
        for t in ltvr_core::timefn::linspace(0.05, 1.95, 12) {
            for (u, w) in [(&x.lambda1, &y.lambda1), (&x.lambda2, &y.lambda2)] {
                if let (Ok(a), Ok(b)) = (u.eval(t), w.eval(t)) {
                    if a.norm() < 1e3 {
                        prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()), "t={t}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn gauge_trace_identity((lti, p) in params(), g in proptest::array::uniform3(-0.4..0.4f64)) {
        let sys = RandomSystem::from_params(lti, p).system();
        let m = FnMatrix::parse([
            [&format!("1 + {}*sin(t)", g[0]), &format!("{}", g[1])],
            [&format!("{}*t", g[2]), "1"],
        ]).unwrap();
        let gauge = GaugeMatrix::new(m.clone(), GaugeKind::General);
        let am = sys.apply_gauge(&gauge).unwrap();
        let det = m.det();
        for t in [0.2, 1.0, 1.8] {
            let lhs = am.trace().eval(t).unwrap();
            let rhs = sys.trace().eval(t).unwrap() + det.derivative(t, None).unwrap() / det.eval(t).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-7 * (1.0 + lhs.norm()), "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn companion_modulation_parameters(a in proptest::array::uniform4(-1.0..1.0f64)) {
        let r0 = TimeFn::parse(&format!("{} + {}*t", a[0], a[1])).unwrap();
        let r1 = TimeFn::parse(&format!("{} + {}*sin(t)", a[2], a[3])).unwrap();
        let sys = Ltv2System::from_companion(&r0, &r1, &TimeFn::zero(), (0.0, 2.0)).unwrap();
        let mf = sys.modulation_form().unwrap();
        for t in [0.0, 0.7, 1.9] {
            let (r0v, r1v) = (a[0] + a[1] * t, a[2] + a[3] * t.sin());
            let r1d = a[3] * t.cos();
            prop_assert!((mf.eta.eval_re(t).unwrap() + r1v / 2.0).abs() < 1e-10);
            let w2 = -r0v + r1v * r1v / 4.0 + r1d / 2.0;
            prop_assert!((mf.omega02.eval_re(t).unwrap() - w2).abs() < 1e-8, "t={t}");
        }
    }
}

#[test]
fn frozen_eigenvalues_of_the_periodic_example() {
    let (sys, _) = example("eq47");
    for t in ltvr_core::timefn::linspace(0.0, 12.0, 50) {
        let (a, b) = sys.frozen_eigenvalues(t).unwrap();
        let s = 7f64.sqrt() / 4.0;
        assert!((a.re + 0.25).abs() < 1e-12 && (b.re + 0.25).abs() < 1e-12);
        assert!((a.im.abs() - s).abs() < 1e-12 && (b.im.abs() - s).abs() < 1e-12);
    }
}
