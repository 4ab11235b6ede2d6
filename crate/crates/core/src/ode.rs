//! Dormand–Prince 5(4) integrator for small complex systems.

use crate::error::{LtvError, Result};
use crate::C64;

pub type State<const N: usize> = [C64; N];

#[derive(Debug, Clone, Copy)]
pub struct Dp5Config {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for Dp5Config {
    fn default() -> Self {
        Dp5Config { rtol: 1e-10, atol: 1e-10, h_max: 0.01, h_init: 1e-3, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (h * w);
        }
    }
    out
}

/// One step of size `h` (may be negative). Returns the fifth-order solution
/// and the embedded error estimate.
pub fn dp5_step<const N: usize, F>(f: &F, t: f64, y: &State<N>, h: f64) -> Result<(State<N>, State<N>)>
where
    F: Fn(f64, &State<N>) -> Result<State<N>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + C2 * h, &comb(y, h, &[(A21, &k1)]))?;
    let k3 = f(t + C3 * h, &comb(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &comb(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &comb(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(t + h, &comb(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y5 = comb(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y5)?;
    let mut err = [C64::new(0.0, 0.0); N];
    for i in 0..N {
        err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
    }
    Ok((y5, err))
}

/// Integrate from `t0` to `t1` (either direction). After every accepted step
/// `accept(t, y)` is called and returns the state to continue from, which lets
/// callers renormalize a linear flow.
pub fn integrate<const N: usize, F, A>(
    f: &F,
    t0: f64,
    y0: State<N>,
    t1: f64,
    cfg: &Dp5Config,
    mut accept: A,
) -> Result<State<N>>
where
    F: Fn(f64, &State<N>) -> Result<State<N>>,
    A: FnMut(f64, &State<N>) -> Result<State<N>>,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    if span == 0.0 {
        return Ok(y);
    }
    let mut h = cfg.h_init.min(cfg.h_max).min(span);
    let mut steps = 0usize;
    while dir * (t1 - t) > 0.0 {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(LtvError::Integration { t, reason: "step budget exhausted".into() });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        let hs = if last { remaining } else { h };
        let (y_new, err) = dp5_step(f, t, &y, dir * hs)?;
        let mut e = 0.0f64;
        let mut finite = true;
        for i in 0..N {
            let scale = cfg.atol + cfg.rtol * y[i].norm().max(y_new[i].norm());
            e = e.max(err[i].norm() / scale);
            finite &= y_new[i].re.is_finite() && y_new[i].im.is_finite();
        }
        if !finite || !e.is_finite() {
            h *= 0.25;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(LtvError::Integration { t, reason: "non-finite state".into() });
            }
            continue;
        }
        if e <= 1.0 {
            t = if last { t1 } else { t + dir * hs };
            y = accept(t, &y_new)?;
            let grow = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs * grow).min(cfg.h_max);
        } else {
            h = hs * (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(LtvError::Integration { t, reason: "step size underflow".into() });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &State<1>| Ok([-y[0]]);
        let y = integrate(&f, 0.0, [c(1.0)], 2.0, &Dp5Config::default(), |_, y| Ok(*y)).unwrap();
        assert!((y[0].re - (-2.0f64).exp()).abs() < 1e-11);
        let y = integrate(&f, 2.0, y, 0.0, &Dp5Config::default(), |_, y| Ok(*y)).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rotation_in_complex_plane() {
        let j = C64::new(0.0, 1.0);
        let f = move |_t: f64, y: &State<1>| Ok([j * y[0]]);
        let pi = std::f64::consts::PI;
        let y = integrate(&f, 0.0, [c(1.0)], pi, &Dp5Config::default(), |_, y| Ok(*y)).unwrap();
        assert!((y[0] + 1.0).norm() < 1e-10);
    }

    #[test]
    fn accept_hook_sees_every_step() {
        let f = |_t: f64, y: &State<2>| Ok([y[1], -y[0]]);
        let mut count = 0;
        let cfg = Dp5Config { h_max: 0.1, ..Default::default() };
        integrate(&f, 0.0, [c(1.0), c(0.0)], 1.0, &cfg, |_, y| {
            count += 1;
            Ok(*y)
        })
        .unwrap();
        assert!(count >= 10);
    }
}
