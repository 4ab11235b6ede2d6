use std::f64::consts::PI;

use super::*;
use crate::system::{FnMatrix, Ltv2System};

fn mf(m: [[&str; 2]; 2], lo: f64, hi: f64) -> ModulationForm {
    Ltv2System::homogeneous(FnMatrix::parse(m).unwrap(), (lo, hi), None)
        .unwrap()
        .modulation_form()
        .unwrap()
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn eq47() -> ModulationForm {
    mf(
        [
            ["-1 + 1.5*sin(t)^2", "-1 - 1.5*sin(t)*cos(t)"],
            ["1 - 1.5*sin(t)*cos(t)", "-1 + 1.5*cos(t)^2"],
        ],
        0.0,
        4.0 * PI,
    )
}

fn near_pole(t: f64, poles: &[f64], gap: f64) -> bool {
    poles.iter().any(|p| (p - t).abs() < gap)
}

#[test]
fn lti_primitive_cases() {
    let p = lti_primitive(&mf([["3", "1"], ["2", "2"]], 0.0, 2.0)).unwrap();
    assert_eq!(p.intrinsic, IntrinsicKind::Real);
    assert_eq!(p.v_i.as_const(), Some(c(1.5)));
    assert!(!p.degenerate);

    let p = lti_primitive(&mf([["1", "1"], ["-5", "-3"]], 0.0, 2.0)).unwrap();
    assert_eq!(p.intrinsic, IntrinsicKind::Imaginary);
    assert_eq!(p.v_im.as_ref().unwrap().as_const(), Some(c(1.0)));

    let p = lti_primitive(&mf([["1", "1"], ["-1", "3"]], 0.5, 3.0)).unwrap();
    assert!(p.degenerate);

    assert!(matches!(
        lti_primitive(&mf([["t", "1"], ["0", "0"]], 0.0, 1.0)),
        Err(LtvError::NotConstant { .. })
    ));
}

#[test]
fn integrated_stationary_and_tanh() {
    let m = mf([["3", "1"], ["2", "2"]], 0.0, 2.0);
    let v = integrate_rce(&m, c(1.5), 0.0, None).unwrap();
    for &t in &[0.0, 0.7, 2.0] {
        assert!((v.v.eval(t).unwrap().re - 1.5).abs() < 1e-12);
    }
    let v = integrate_rce(&m, c(0.0), 0.0, None).unwrap();
    for k in 0..=20 {
        let t = 0.1 * k as f64;
        assert!((v.v.eval(t).unwrap().re - 1.5 * (1.5 * t).tanh()).abs() < 1e-8);
    }
}

#[test]
fn integrated_repeated_root_case() {
    let m = mf([["1", "1"], ["-1", "3"]], 0.5, 3.0);
    let v = integrate_rce(&m, c(1.0), 1.0, None).unwrap();
    for &t in &[0.5, 1.3, 2.9] {
        assert!((v.v.eval(t).unwrap().re - 1.0 / t).abs() < 1e-8);
    }
}

#[test]
fn residual_examples() {
    let m = mf([["3", "1"], ["2", "2"]], 0.0, 2.0);
    assert!(rce_residual(&m, &TimeFn::constant(1.5), 1.0).unwrap() < 1e-10);
    assert!((rce_residual(&m, &TimeFn::zero(), 1.0).unwrap() - 2.25).abs() < 1e-12);
    let m = mf([["1", "1"], ["-1", "3"]], 0.5, 3.0);
    let v = TimeFn::parse("1/t").unwrap();
    assert!(rce_residual(&m, &v, 2.0).unwrap() < 1e-8);
}

#[test]
fn family_members_in_closed_form() {
    let prim = Arc::new(lti_primitive(&mf([["3", "1"], ["2", "2"]], 0.0, 2.0)).unwrap());
    let plus = family_member(&prim, 0.0, FamilyKind::PrimitivePlus).unwrap();
    assert_eq!(plus.k, Some(f64::NEG_INFINITY));
    assert!((plus.v.eval(1.0).unwrap().re - 1.5).abs() < 1e-14);
    let coth = family_member(&prim, 0.3, FamilyKind::Coth).unwrap();
    assert_eq!(coth.poles().len(), 1);
    assert!((coth.poles()[0] - 0.2).abs() < 1e-10);
    assert!(matches!(
        family_member(&prim, 0.0, FamilyKind::Tan),
        Err(LtvError::IncompatibleKind { .. })
    ));

    let prim = Arc::new(lti_primitive(&mf([["1", "1"], ["-5", "-3"]], 0.0, 2.0)).unwrap());
    let tan = family_member(&prim, 0.0, FamilyKind::Tan).unwrap();
    let cot = family_member(&prim, 0.0, FamilyKind::Cot).unwrap();
    for &t in &[0.3, 1.0, 1.9] {
        assert!((tan.v.eval(t).unwrap().re + t.tan()).abs() < 1e-12);
        assert!((cot.v.eval(t).unwrap().re - 1.0 / t.tan()).abs() < 1e-12);
    }
    assert!(tan.is_real());
    assert!(matches!(tan.v.eval(PI / 2.0), Err(LtvError::Pole { .. })));
}

#[test]
fn seeded_imaginary_pair_gives_tan_family() {
    let m = mf([["1 + 1/t", "1"], ["-1/t^4", "1 - 1/t"]], 0.5, 3.0);
    let j = C64::new(0.0, 1.0);
    let v1 = integrate_rce(&m, c(2.0) + j * 4.0, 0.5, None).unwrap();
    let v2 = integrate_rce(&m, c(2.0) - j * 4.0, 0.5, None).unwrap();
    let (prim, _) = decompose(&v1, &v2).unwrap();
    assert_eq!(prim.intrinsic, IntrinsicKind::Imaginary);
    for &t in &[0.5, 1.0, 2.5] {
        assert!((prim.v_r.eval(t).unwrap().re - 1.0 / t).abs() < 1e-8);
        assert!((prim.v_im.as_ref().unwrap().eval(t).unwrap().re - 1.0 / (t * t)).abs() < 1e-8);
        assert!((prim.phi.eval(t).unwrap().re - (2.0 - 1.0 / t)).abs() < 1e-8);
    }
    let tan = family_member(&prim, 2.0, FamilyKind::Tan).unwrap();
    for &t in &[0.55f64, 1.0, 2.5] {
        let expect = 1.0 / t - (-1.0 / t).tan() / (t * t);
        assert!((tan.v.eval(t).unwrap().re - expect).abs() < 1e-7, "t={t}");
    }
}

#[test]
fn decompose_lti_and_repeated() {
    let prim = Arc::new(lti_primitive(&mf([["3", "1"], ["2", "2"]], 0.0, 2.0)).unwrap());
    let a = family_member(&prim, 0.0, FamilyKind::PrimitivePlus).unwrap();
    let b = family_member(&prim, 0.0, FamilyKind::PrimitiveMinus).unwrap();
    let (p, g) = decompose(&a, &b).unwrap();
    assert!(Arc::ptr_eq(&p, &prim));
    assert!((g.p.eval(0.4).unwrap() - c(2.0 / 3.0)).norm() < 1e-14);
    assert!(g.q.eval(0.4).unwrap().norm() < 1e-14);

    let m = mf([["1", "1"], ["-1", "3"]], 0.5, 3.0);
    let v1 = integrate_rce(&m, c(1.0 / 3.0), 3.0, None).unwrap();
    let v2 = integrate_rce(&m, c(0.0), 0.5, None).unwrap();
    let (prim, g) = decompose(&v1, &v2).unwrap();
    for &t in &[0.5, 1.5, 3.0] {
        assert!((prim.v_r.eval(t).unwrap().re - 0.5 / t).abs() < 1e-8);
        assert!((prim.v_i.eval(t).unwrap().re - 0.5 / t).abs() < 1e-8);
        assert!((g.p.eval(t).unwrap().re - 2.0 * t).abs() < 1e-7);
        assert!((g.q.eval(t).unwrap().re - 1.0).abs() < 1e-8);
    }
    assert!(matches!(decompose(&v2, &v2), Err(LtvError::Degenerate { .. })));
}

#[test]
fn periodic_pair_of_the_unstable_example() {
    let m = eq47();
    let (v1, v2) = periodic_primitive(&m, PI).unwrap();
    assert!(v1.is_real() && v2.is_real());
    let alpha = |t: f64| m.alpha.eval_re(t).unwrap();
    for k in 0..200 {
        let t = 0.01 + k as f64 * 0.0627;
        if !near_pole(t, v1.poles(), 0.05) {
            let x = v1.v.eval(t).unwrap().re;
            assert!((x - alpha(t) - t.tan()).abs() < 1e-6 * (1.0 + x.abs()), "v1 t={t}");
        }
        if !near_pole(t, v2.poles(), 0.05) {
            let x = v2.v.eval(t).unwrap().re;
            assert!((x - alpha(t) + 1.0 / t.tan()).abs() < 1e-6 * (1.0 + x.abs()), "v2 t={t}");
        }
    }
    let (prim, _) = decompose(&v1, &v2).unwrap();
    for &t in &[0.4f64, 1.0, 2.0, 5.0] {
        let expect = 0.5 * (t.tan() + 1.0 / t.tan());
        assert!((prim.v_i.eval(t).unwrap().re - expect).abs() < 1e-6);
        let w1 = m.omega01.eval_re(t).unwrap();
        let vi = prim.v_i.eval_re(t).unwrap();
        let dvi = prim.v_i.fd_derivative(t, 1e-5).unwrap().re;
        let vr = prim.v_r.eval_re(t).unwrap();
        assert!((vr + dvi / (2.0 * w1 * vi)).abs() < 1e-6 * (1.0 + vr.abs()));
    }
}

#[test]
fn periodic_pair_constant_and_oscillator() {
    let m = mf([["3", "1"], ["2", "2"]], 0.0, 2.0);
    let (v1, v2) = periodic_primitive(&m, 1.0).unwrap();
    assert!((v1.v.eval(1.7).unwrap().re - 1.5).abs() < 1e-9);
    assert!((v2.v.eval(1.7).unwrap().re + 1.5).abs() < 1e-9);

    let m = mf([["0", "1"], ["-1", "0"]], 0.0, 7.0);
    let (v1, v2) = periodic_primitive(&m, 2.0 * PI).unwrap();
    let j = C64::new(0.0, 1.0);
    assert!((v1.v.eval(6.5).unwrap() - j).norm() < 1e-9);
    assert!((v2.v.eval(6.5).unwrap() + j).norm() < 1e-9);
}

#[test]
fn period_map_matches_direct_integration() {
    let m = eq47();
    let pi = period_map(&m, PI).unwrap();
    for &v0 in &[0.0, 1.0, 3.0, -3.0] {
        let direct = integrate_rce(&m, c(v0), 0.0, Some((0.0, PI))).unwrap();
        let mobius = (pi[0][0] * v0 + pi[0][1]) / (pi[1][0] * v0 + pi[1][1]);
        let s = direct.sample(PI).unwrap();
        let x = s.ratio().unwrap();
        assert!((x - mobius).norm() < 1e-7 * (1.0 + x.norm()), "v0={v0}");
    }
}

#[test]
fn complementary_closure_on_seeded_pair() {
    let m = mf([["t/(t+1)", "1"], ["-5/(4*(t+1)^2)", "1 + 1/(t+1)"]], 0.0, 2.0);
    let v1 = integrate_rce(&m, c(1.5), 0.0, None).unwrap();
    let v2 = integrate_rce(&m, c(-0.5), 0.0, None).unwrap();
    let (_, g) = decompose(&v1, &v2).unwrap();
    let other = &v1.v - &(&TimeFn::constant(2.0) / &g.p);
    for &t in &[0.2, 1.0, 1.8] {
        assert!(rce_residual(&m, &other, t).unwrap() < 1e-7);
        assert!((other.eval_re(t).unwrap() + 0.5 / (t + 1.0)).abs() < 1e-8);
    }
}
