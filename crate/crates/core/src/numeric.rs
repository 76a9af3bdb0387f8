//! Small numerical toolbox: first-crossing bisection and adaptive quadrature.

/// Outcome of a bisection search for the first point where a predicate flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Upper end of the final bracket; the predicate holds here.
    pub at: f64,
    pub iterations: u32,
}

/// Default absolute tolerance for root brackets, in epochs.
pub const BISECTION_TOLERANCE: f64 = 1e-6;
pub const BISECTION_MAX_ITERATIONS: u32 = 200;

/// Finds the smallest `x` in `[lo, hi]` with `holds(x)`, assuming `holds` is
/// monotone (false then true). Returns `None` when `holds(hi)` is false.
pub fn bisect_first_true<F>(mut lo: f64, mut hi: f64, tol: f64, max_iter: u32, holds: F) -> Option<Crossing>
where
    F: Fn(f64) -> bool,
{
    if holds(lo) {
        return Some(Crossing { at: lo, iterations: 0 });
    }
    if !holds(hi) {
        return None;
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Some(Crossing { at: hi, iterations })
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth - 1) + adapt(f, mid, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, tol, 50)
}

/// Like [`integrate`], but splits `[a, b]` at the given interior points first.
/// Narrow peaks that a coarse first pass would miss must be bracketed this way.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut points: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let pieces = (points.len() - 1) as f64;
    points.windows(2).map(|w| adapt(&f, w[0], w[1], tol / pieces, 50)).sum()
}
