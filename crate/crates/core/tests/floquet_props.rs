//! Floquet decomposition of periodic systems.

mod common;

use std::f64::consts::PI;

use common::*;
use ltvr_core::analysis::{analyze, AnalysisOptions};
use ltvr_core::floquet::{classify_stability, Stability};
use ltvr_core::oracle::{rk_transition, OracleConfig};
use ltvr_core::timefn::{linspace, quad};
use nalgebra::Matrix2;
use proptest::prelude::*;

const T: f64 = 2.0 * PI;

fn eig2(m: &Matrix2<ltvr_core::C64>) -> [ltvr_core::C64; 2] {
    let half = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let disc = (half * half - m.determinant()).sqrt();
    [half + disc, half - disc]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn floquet_invariants(p in proptest::array::uniform9(-1.0..1.0f64)) {
        let sys = RandomSystem::periodic(p).system_on((0.0, 4.0 * PI), Some(T));
        let an = analyze(&sys, &AnalysisOptions::default()).unwrap();
        let fd = an.floquet(T).unwrap();
        let scale = 1.0 + max_abs(&fd.monodromy);

        // e^{RT} is the monodromy and its eigenvalues are e^{r_i T}.
        prop_assert!(max_abs(&(fd.exp_rt() - fd.monodromy)) <= 1e-6 * scale);
        let eig = eig2(&fd.monodromy);
        for m in fd.multipliers {
            let best = eig.iter().map(|e| (e - m).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best <= 1e-6 * scale, "multiplier {m} vs {eig:?}");
        }

        // Liouville over one period.
        let tr = sys.trace();
        let integral = quad::integrate(|t| tr.eval(t), 0.0, T, 1e-12).unwrap().value;
        let det = fd.monodromy.determinant();
        prop_assert!((det - integral.exp()).norm() <= 1e-7 * integral.exp().norm());

        // Shift property and periodic Q.
        let phi = an.stm(0.0).unwrap();
        for t in linspace(0.1, T - 0.1, 8) {
            let a = phi.eval_complex(t + T).unwrap();
            let b = phi.eval_complex(t).unwrap() * fd.monodromy;
            prop_assert!(max_abs(&(a - b)) <= 1e-6 * (1.0 + max_abs(&a)), "shift at t={t}");
            let dq = fd.q(t + T).unwrap() - fd.q(t).unwrap();
            prop_assert!(max_abs(&dq) <= 1e-6 * (1.0 + max_abs(&fd.q(t).unwrap())), "Q at t={t}");
        }

        // Periodic eigenvector matrix away from poles.
        let poles = an.spectrum.poles();
        for t in linspace(0.1, T - 0.1, 8) {
            if poles.iter().any(|q| (q - t).abs() < 0.05 || (q - t - T).abs() < 0.05) {
                continue;
            }
            let dv = an.eigvec.eval(t + T).unwrap() - an.eigvec.eval(t).unwrap();
            prop_assert!(max_abs(&dv) <= 1e-6 * (1.0 + max_abs(&an.eigvec.eval(t).unwrap())));
        }
    }
}

#[test]
fn unstable_example_with_stable_frozen_eigenvalues() {
    let an = run_example("eq47");
    let fd = an.floquet(T).unwrap();
    assert!((fd.exponents[0] - c(-1.0)).norm() < 1e-6);
    assert!((fd.exponents[1] - c(0.5)).norm() < 1e-6);
    assert_eq!(classify_stability(&fd), Stability::Unstable);
    let oracle = rk_transition(&an.sys, 0.0, T, &OracleConfig::default()).unwrap();
    assert!(max_abs(&(fd.monodromy - oracle)) < 1e-6);
    let expect = Matrix2::new(c((-T).exp()), c(0.0), c(0.0), c((T / 2.0).exp()));
    assert!(max_abs(&(fd.monodromy - expect)) < 1e-6);
    // p_i has a zero period mean; log singularities are split at the poles.
    let cuts = [0.0, PI / 2.0, 1.5 * PI, T];
    for p in &fd.periodic_exponents {
        let mut mean = c(0.0);
        for w in cuts.windows(2) {
            mean += quad::integrate(|t| p.eval(t), w[0] + 1e-12, w[1] - 1e-12, 1e-10).unwrap().value;
        }
        assert!(mean.norm() / T < 1e-6, "mean {mean}");
    }
}

#[test]
fn constant_system_as_periodic() {
    let an = run_example("eq31");
    let fd = an.floquet(0.7).unwrap();
    assert!((fd.exponents[0] - c(4.0)).norm() < 1e-10 && (fd.exponents[1] - c(1.0)).norm() < 1e-10);
    for t in [0.2, 0.9] {
        assert!(max_abs(&(fd.q(t).unwrap() - Matrix2::identity())) < 1e-10);
    }
}

#[test]
fn declared_period_that_does_not_fit() {
    let an = run_example("eq47");
    assert!(an.floquet(5.0 * PI).is_err());
    let an = run_example("eq40");
    assert!(matches!(an.floquet(1.0), Err(ltvr_core::LtvError::NotPeriodic { .. })));
}
