//! Adaptive Gauss–Kronrod (G7/K15) quadrature over real intervals.

use nalgebra::{Matrix2, Vector2};

use crate::error::{LtvError, Result};
use crate::C64;

/// Default absolute+relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default subdivision budget.
pub const DEFAULT_MAX_INTERVALS: usize = 1000;

/// Values that can be integrated: a vector space with a norm.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
    fn is_finite(self) -> bool {
        self.norm().is_finite()
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.norm()
    }
}

impl QuadValue for Vector2<C64> {
    fn zero() -> Self {
        Vector2::zeros()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self.map(|z| z * s)
    }
    fn norm(self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl QuadValue for Matrix2<C64> {
    fn zero() -> Self {
        Matrix2::zeros()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self.map(|z| z * s)
    }
    fn norm(self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn gk15<T: QuadValue>(f: &mut impl FnMut(f64) -> Result<T>, a: f64, b: f64) -> Result<(T, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        let s = f1.add(f2);
        kron = kron.add(s.scale(WGK[i]));
        if i % 2 == 1 {
            gauss = gauss.add(s.scale(WG[i / 2]));
        }
    }
    let kron = kron.scale(h);
    let gauss = gauss.scale(h);
    if !kron.is_finite() {
        return Err(LtvError::NonFinite { t: c, what: "integrand".into() });
    }
    let err = kron.add(gauss.scale(-1.0)).norm();
    Ok((kron, err))
}

/// Integrate `f` over `[a, b]` to absolute+relative tolerance `tol`.
pub fn integrate<T: QuadValue>(
    f: impl FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult<T>> {
    integrate_with_budget(f, a, b, tol, DEFAULT_MAX_INTERVALS)
}

pub fn integrate_with_budget<T: QuadValue>(
    mut f: impl FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<QuadResult<T>> {
    if !(tol > 0.0) {
        return Err(LtvError::Invalid(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(LtvError::Invalid("quadrature bounds must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: 0.0, evaluations: 0 });
    }
    if a > b {
        let r = integrate_with_budget(f, b, a, tol, max_intervals)?;
        return Ok(QuadResult { value: r.value.scale(-1.0), ..r });
    }

    let mut evals = 15;
    let (v, e) = gk15(&mut f, a, b)?;
    let mut segs = vec![Segment { a, b, value: v, error: e }];
    loop {
        let total = segs.iter().fold(T::zero(), |acc, s| acc.add(s.value));
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if err <= tol.max(tol * total.norm()) {
            return Ok(QuadResult { value: total, error: err, evaluations: evals });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if segs.len() + 2 > max_intervals || mid <= s.a || mid >= s.b {
            return Err(LtvError::Quadrature { a, b, tol, estimate: err });
        }
        let (v1, e1) = gk15(&mut f, s.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, s.b)?;
        evals += 30;
        segs.push(Segment { a: s.a, b: mid, value: v1, error: e1 });
        segs.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
}
