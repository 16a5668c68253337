//! Adaptive Gauss–Kronrod quadrature (7–15 pair) with worst-interval
//! refinement, plus a doubling-horizon driver for integrals over `[a, ∞)`
//! with decaying integrands.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_2,
    0.949_107_912_342_758_524_5,
    0.864_864_423_359_769_072_8,
    0.741_531_185_599_394_439_9,
    0.586_087_235_467_691_130_3,
    0.405_845_151_377_397_166_9,
    0.207_784_955_007_898_467_6,
    0.0,
];

// Kronrod weights.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_96,
    0.063_092_092_629_978_553_29,
    0.104_790_010_322_250_183_8,
    0.140_653_259_715_525_918_7,
    0.169_004_726_639_267_902_8,
    0.190_350_578_064_785_409_9,
    0.204_432_940_075_298_892_4,
    0.209_482_141_084_727_828_0,
];

// 7-point Gauss weights (for the embedded estimate).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_3,
    0.279_705_391_489_276_667_9,
    0.381_830_050_505_118_944_9,
    0.417_959_183_673_469_387_8,
];

#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One Gauss–Kronrod 7–15 panel; returns (integral, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for (j, wg) in WG.iter().enumerate().take(3) {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += wg * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    res_gauss += WG[3] * f_center;

    for j in 0..4 {
        let jtw = 2 * j;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half;
    let err = rescale_error((res_kronrod - res_gauss) * half, res_abs * half.abs(), res_asc * half.abs());
    (value, err)
}

/// Integrate `f` over `[a, b]`, splitting the interval with the largest
/// error estimate until the total estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::domain(format!("bad integration interval [{a}, {b}]")));
    }
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (v0, e0) = qk15(&f, a, b);
    let mut segs = vec![Seg { a, b, value: v0, err: e0 }];
    let mut subdivisions = 0;

    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(QuadResult { value: total, error: err, subdivisions });
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(Error::QuadratureNonConvergence { error: err, subdivisions });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a: sa, b: sb, .. } = segs.swap_remove(worst);
        let mid = 0.5 * (sa + sb);
        if mid <= sa || mid >= sb {
            // interval exhausted at machine precision
            let (v, e) = qk15(&f, sa, sb);
            segs.push(Seg { a: sa, b: sb, value: v, err: e });
            let total: f64 = segs.iter().map(|s| s.value).sum();
            let err: f64 = segs.iter().map(|s| s.err).sum();
            return Ok(QuadResult { value: total, error: err, subdivisions });
        }
        let (v1, e1) = qk15(&f, sa, mid);
        let (v2, e2) = qk15(&f, mid, sb);
        segs.push(Seg { a: sa, b: mid, value: v1, err: e1 });
        segs.push(Seg { a: mid, b: sb, value: v2, err: e2 });
        subdivisions += 1;
    }
}

/// Integrate `f` over `[a, ∞)` by doubling blocks until two consecutive
/// block contributions fall below the absolute tolerance.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut subdivisions = 0;
    let mut lo = a;
    let mut len = 1.0_f64.max(a.abs() * 0.5);
    let mut quiet_blocks = 0;
    for _ in 0..64 {
        let hi = lo + len;
        let r = integrate(&f, lo, hi, opts)?;
        total += r.value;
        err += r.error;
        subdivisions += r.subdivisions;
        if r.value.abs() < opts.abs_tol {
            quiet_blocks += 1;
            if quiet_blocks >= 2 {
                return Ok(QuadResult { value: total, error: err, subdivisions });
            }
        } else {
            quiet_blocks = 0;
        }
        lo = hi;
        len *= 2.0;
    }
    Err(Error::QuadratureNonConvergence { error: err, subdivisions })
}
