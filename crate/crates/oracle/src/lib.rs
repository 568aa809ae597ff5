//! Independent numerical oracles for cross-checking the closed forms.
//!
//! Globally adaptive 7/15-point Gauss-Kronrod quadrature on finite and
//! semi-infinite intervals, plus the two integrals the checks need: the
//! exponential integral from its definition and the ESR as
//! `int_1^inf (1 - F(x)) / x dx`. Shares no code with `esr-core`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Adaptive integral of `f` over `[a, b]`, refining the worst segment until
/// the summed `|K15 - G7|` estimate is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&f, a, b));
    loop {
        let (value, error) = totals(&heap);
        let done = error <= abs_tol.max(rel_tol * value.abs());
        if done || heap.len() >= MAX_SEGMENTS {
            return Quadrature {
                value,
                error,
                segments: heap.len(),
            };
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further; keep it and stop refining
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    // sort by magnitude so the total does not depend on heap layout
    let mut parts: Vec<(f64, f64)> = heap.iter().map(|s| (s.value, s.error)).collect();
    parts.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()));
    let value = parts.iter().map(|p| p.0).sum();
    let error = parts.iter().map(|p| p.1).sum();
    (value, error)
}

/// `int_a^inf f(x) dx` through `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, abs_tol, rel_tol)
}

/// `E1(x) = e^{-x} int_0^inf exp(-x (e^v - 1)) dv`, from the substitution
/// `t = x e^v` in `int_x^inf e^{-t}/t dt`.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0);
    let q = integrate_to_infinity(|v| (-x * v.exp_m1()).exp(), 0.0, 0.0, 1e-14);
    q.value * (-x).exp()
}

/// `int_1^inf (1 - F(x)) / x dx = int_0^inf (1 - F(e^u)) du`, given the
/// survival function `1 - F`.
pub fn esr_from_survival<F: Fn(f64) -> f64>(survival: F, rel_tol: f64) -> Quadrature {
    integrate_to_infinity(|u| survival(u.exp()), 0.0, 1e-300, rel_tol)
}

/// `E[exp(-s max(X_1..X_N))]` for IID `X ~ Exp(rate)`. The maximum is a sum
/// of independent exponentials with rates `j * rate`, `j = 1..=N`.
pub fn max_exp_laplace(rate: f64, n: usize, s: f64) -> f64 {
    (1..=n)
        .map(|j| {
            let r = j as f64 * rate;
            r / (r + s)
        })
        .product()
}

/// Which ratio the selection maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// `(1 + gamma_D) / (1 + gamma_E)`
    Exact,
    /// `gamma_D / gamma_E`
    Ratio,
}

/// `P[ratio_k > x]` for one source, `x >= 1`.
pub fn source_survival(sel: Selection, alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    match sel {
        // P[gamma_D > x (1 + gamma_E) - 1] = e^{-beta (x - 1)} E[e^{-beta x gamma_E}]
        Selection::Exact => (-beta * (x - 1.0)).exp() * max_exp_laplace(alpha, n, beta * x),
        Selection::Ratio => max_exp_laplace(alpha, n, beta * x),
    }
}

/// ESR of selection among sources with Bernoulli backhaul by quadrature.
/// Averaging the selection CDF over the active set gives
/// `1 - F(x) = 1 - prod_k (1 - delta_k P[ratio_k > x])`.
pub fn selection_esr(
    sel: Selection,
    alpha: &[f64],
    beta: &[f64],
    delta: &[f64],
    n: usize,
    rel_tol: f64,
) -> Quadrature {
    let survival = |x: f64| {
        let log_f: f64 = (0..alpha.len())
            .map(|k| (-delta[k] * source_survival(sel, alpha[k], beta[k], n, x)).ln_1p())
            .sum();
        -log_f.exp_m1()
    };
    esr_from_survival(survival, rel_tol)
}
