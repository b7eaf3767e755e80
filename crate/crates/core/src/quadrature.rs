//! Adaptive numerical integration on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integration interval [{a}, {b}] is not finite and ordered")]
    BadInterval { a: f64, b: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("tolerance not reached: estimate {estimate} with error {error}")]
    NotConverged { estimate: f64, error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

const SIMPSON_MAX_DEPTH: u32 = 48;

/// Adaptive Simpson rule with Richardson extrapolation, to absolute tolerance
/// `abs_tol` over `[a, b]`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Integral, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_interval(a, b)?;
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut error = 0.0;
    let value = simpson_step(&eval, a, b, fa, fm, fb, whole, abs_tol, SIMPSON_MAX_DEPTH, &mut error)?;
    Ok(Integral { value, error })
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    eval: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    error: &mut f64,
) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        *error += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadratureError::NotConverged {
            estimate: left + right,
            error: delta.abs(),
        });
    }
    let l = simpson_step(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, error)?;
    let r = simpson_step(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, error)?;
    Ok(l + r)
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for KRONROD_NODES[1], [3], [5], [7].
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBINTERVALS: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_segment<F>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&node, &weight)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let values = if node == 0.0 {
            let y = f(center);
            if !y.is_finite() {
                return Err(QuadratureError::NonFinite { x: center });
            }
            kronrod += weight * y;
            y
        } else {
            let (xl, xr) = (center - half * node, center + half * node);
            let (yl, yr) = (f(xl), f(xr));
            if !yl.is_finite() {
                return Err(QuadratureError::NonFinite { x: xl });
            }
            if !yr.is_finite() {
                return Err(QuadratureError::NonFinite { x: xr });
            }
            kronrod += weight * (yl + yr);
            yl + yr
        };
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * values;
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Globally adaptive Gauss–Kronrod (G7/K15) integration over `[a, b]`.
///
/// Stops once the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn gauss_kronrod<F>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_interval(a, b)?;
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let first = kronrod_segment(&f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(QuadratureError::NotConverged {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod_segment(&f, worst.a, mid)?;
        let right = kronrod_segment(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error })
}

fn check_interval(a: f64, b: f64) -> Result<(), QuadratureError> {
    if a.is_finite() && b.is_finite() && a <= b {
        Ok(())
    } else {
        Err(QuadratureError::BadInterval { a, b })
    }
}
