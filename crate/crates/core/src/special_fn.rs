//! Special functions: Laguerre functions, reduced Bessel functions and their
//! derivatives, Hermite–Weber functions, complex Gamma and Beta.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Highest derivative order of the reduced Bessel function in contract.
pub const MAX_BESSEL_DERIV: usize = 8;

/// Highest Hermite–Weber index evaluated by the recurrence.
pub const MAX_HERMITE_INDEX: usize = 60;

const RESCALE: f64 = 1e150;

// ---------------------------------------------------------------------------
// Laguerre

/// `L_n^{(alpha)}(x) e^{-x/2}` by the three-term recurrence, carrying a log
/// scale so that neither the polynomial nor the exponential overflows.
fn laguerre_scaled(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return (-0.5 * x).exp();
    }
    let mut cur = 1.0 + alpha - x;
    let mut log_scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    cur.signum() * (cur.abs().ln() + log_scale - 0.5 * x).exp()
}

/// Laguerre function `ℓ_n(x) = L_n^0(x) e^{-x/2}`, bounded by one on `[0, ∞)`.
pub fn laguerre_fn(n: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return invalid(format!("Laguerre function needs x >= 0, got {x}"));
    }
    Ok(laguerre_scaled(n, 0.0, x))
}

/// `ℓ_n^{(k)}(x)` for `k = 0..=kmax`.
///
/// Uses `d/dx L_n^{(a)} = -L_{n-1}^{(a+1)}` together with the Leibniz rule
/// against `e^{-x/2}`.
pub fn laguerre_fn_derivs(n: usize, x: f64, kmax: usize) -> Vec<f64> {
    // generalized pieces: (-1)^i L_{n-i}^{(i)}(x) e^{-x/2}
    let pieces: Vec<f64> = (0..=kmax)
        .map(|i| {
            if i > n {
                0.0
            } else {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * laguerre_scaled(n - i, i as f64, x)
            }
        })
        .collect();
    (0..=kmax)
        .map(|k| {
            let mut acc = 0.0;
            let mut binom = 1.0;
            for (i, piece) in pieces.iter().enumerate().take(k + 1) {
                acc += binom * piece * (-0.5f64).powi((k - i) as i32);
                binom = binom * (k - i) as f64 / (i + 1) as f64;
            }
            acc
        })
        .collect()
}

/// `ℓ_0(x), …, ℓ_nmax(x)` in one pass of the recurrence.
pub fn laguerre_fn_table(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    let mut log_scale = 0.0;
    let mut factor = (-0.5 * x).exp();
    let emit = |v: f64, log_scale: f64, factor: f64| {
        if v == 0.0 {
            0.0
        } else if factor > 1e-290 {
            v * factor
        } else {
            v.signum() * (v.abs().ln() + log_scale - 0.5 * x).exp()
        }
    };
    out.push(emit(prev, 0.0, factor));
    if nmax == 0 {
        return out;
    }
    out.push(emit(cur, 0.0, factor));
    for k in 1..nmax {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
            factor = (log_scale - 0.5 * x).exp();
        }
        out.push(emit(cur, log_scale, factor));
    }
    out
}

// ---------------------------------------------------------------------------
// Bessel

/// Order `alpha` of a reduced Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    /// `alpha = -1/2` is admitted: it is the `z = 1` centre of `N_2`, where
    /// the reduced Bessel function is `cos`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= -0.5) || !alpha.is_finite() {
            return invalid(format!("Bessel order must be >= -1/2, got {alpha}"));
        }
        Ok(Self(alpha))
    }

    /// The order `(n-2)/2` attached to the sphere of `ℝ^n`.
    pub fn for_sphere(n: usize) -> Result<Self> {
        Self::new((n as f64 - 2.0) / 2.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn series_switch(alpha: f64) -> f64 {
    10f64.max(2.0 * alpha)
}

/// Power series `Σ (-s²/4)^k / (k! (ν+1)_k)`.
fn reduced_bessel_series(nu: f64, s: f64) -> f64 {
    let q = -0.25 * s * s;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (nu + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > 0.5 * s {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Hankel expansion of `J_ν(x)`; `None` when the series never gets small
/// enough to be trusted.
fn bessel_j_hankel(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        }
        let mag = term.abs();
        if mag > last && k > 1 {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 {
            converged = true;
            break;
        }
        last = mag;
    }
    if !converged && last > 1e-16 {
        return None;
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    Some((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

/// Miller backward recurrence for `𝒥_{ν+m}`, `m = 0..=mmax`, normalized with
/// `Σ_k c_k J_{ν+2k}(x) = (x/2)^ν / Γ(ν+1)`.
fn reduced_bessel_miller(nu: f64, x: f64, mmax: usize) -> Vec<f64> {
    let start = mmax + (x + 12.0 * x.cbrt() + 30.0).ceil() as usize;
    let start = start + (start % 2);
    // c_0 = 1, c_k = (ν+2k)(ν+1)_{k-1}/k!
    let mut coef = Vec::with_capacity(start / 2 + 1);
    coef.push(1.0);
    let mut poch = 1.0; // (ν+1)_{k-1}/k!
    for k in 1..=start / 2 {
        let kf = k as f64;
        if k == 1 {
            poch = 1.0;
        } else {
            poch *= (nu + kf - 1.0) / kf;
        }
        coef.push((nu + 2.0 * kf) * poch);
    }
    let mut kept = vec![0.0; mmax + 1];
    let mut upper = 0.0;
    let mut cur = 1e-280;
    let mut norm = 0.0;
    let mut k = start;
    loop {
        if k <= mmax {
            kept[k] = cur;
        }
        if k % 2 == 0 {
            norm += coef[k / 2] * cur;
        }
        if k == 0 {
            break;
        }
        let order = nu + k as f64;
        let lower = 2.0 * order / x * cur - upper;
        upper = cur;
        cur = lower;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            norm *= 1e-250;
            for v in kept.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut factor = 1.0 / norm;
    let mut out = Vec::with_capacity(mmax + 1);
    for (m, val) in kept.iter().enumerate() {
        if m > 0 {
            factor *= (nu + m as f64) * 2.0 / x;
        }
        out.push(val * factor);
    }
    out
}

/// `𝒥_{α+m}(s)` for `m = 0..=mmax`.
pub fn reduced_bessel_family(alpha: BesselOrder, s: f64, mmax: usize) -> Result<Vec<f64>> {
    if !(s >= 0.0) || !s.is_finite() {
        return invalid(format!("reduced Bessel argument must be finite and >= 0, got {s}"));
    }
    let nu = alpha.value();
    if nu == -0.5 && mmax == 0 {
        return Ok(vec![s.cos()]);
    }
    if s <= series_switch(nu) {
        return Ok((0..=mmax)
            .map(|m| reduced_bessel_series(nu + m as f64, s))
            .collect());
    }
    let top = nu + mmax as f64;
    if s > 20.0 && s > top * top {
        let hankel: Option<Vec<f64>> = (0..=mmax)
            .map(|m| {
                let order = nu + m as f64;
                bessel_j_hankel(order, s).map(|j| {
                    j * (ln_gamma(order + 1.0) + order * (2.0 / s).ln()).exp()
                })
            })
            .collect();
        if let Some(vals) = hankel {
            return Ok(vals);
        }
    }
    Ok(reduced_bessel_miller(nu, s, mmax))
}

/// Symbolic expansion of `d^k/ds^k 𝒥_α(s)` as `Σ c s^p 𝒥_{α+m}(s)`, built
/// from `𝒥_α'(s) = -s/(2(α+1)) 𝒥_{α+1}(s)`.
fn bessel_derivative_terms(alpha: f64, k: usize) -> Vec<(f64, i32, usize)> {
    let mut terms = vec![(1.0, 0i32, 0usize)];
    for _ in 0..k {
        let mut next: Vec<(f64, i32, usize)> = Vec::new();
        let mut push = |c: f64, p: i32, m: usize| {
            if c == 0.0 {
                return;
            }
            if let Some(t) = next.iter_mut().find(|t| t.1 == p && t.2 == m) {
                t.0 += c;
            } else {
                next.push((c, p, m));
            }
        };
        for &(c, p, m) in &terms {
            if p > 0 {
                push(c * p as f64, p - 1, m);
            }
            push(-c / (2.0 * (alpha + m as f64 + 1.0)), p + 1, m + 1);
        }
        terms = next;
    }
    terms
}

/// `𝒥_α^{(k)}(s)` for `k = 0..=kmax`.
pub fn reduced_bessel_derivs(alpha: BesselOrder, s: f64, kmax: usize) -> Result<Vec<f64>> {
    if kmax > MAX_BESSEL_DERIV {
        return Err(Error::Unsupported(format!(
            "reduced Bessel derivative of order {kmax} (max {MAX_BESSEL_DERIV})"
        )));
    }
    let family = reduced_bessel_family(alpha, s, kmax)?;
    Ok((0..=kmax)
        .map(|k| {
            if k == 0 {
                return family[0];
            }
            bessel_derivative_terms(alpha.value(), k)
                .iter()
                .map(|&(c, p, m)| c * s.powi(p) * family[m])
                .sum()
        })
        .collect())
}

/// Reduced Bessel function `𝒥_α(s) = Γ(α+1)(s/2)^{-α} J_α(s)` or one of its
/// derivatives.
pub fn reduced_bessel(alpha: BesselOrder, s: f64, deriv_order: usize) -> Result<f64> {
    Ok(reduced_bessel_derivs(alpha, s, deriv_order)?[deriv_order])
}

/// `∫_{S^n} e^{i⟨x,y⟩} dσ_n(y) = 𝒥_{(n-2)/2}(‖x‖)` for the probability
/// measure on the unit sphere of `ℝ^n`.
pub fn sphere_plane_wave(n: usize, xnorm: f64) -> Result<f64> {
    if n < 2 {
        return invalid(format!("sphere of ℝ^{n} has no plane-wave identity here (n >= 2)"));
    }
    reduced_bessel(BesselOrder::for_sphere(n)?, xnorm, 0)
}

/// Reduced Bessel function with its derivative expansions precomputed, for
/// repeated evaluation in inner loops.
#[derive(Debug, Clone)]
pub struct ReducedBessel {
    order: BesselOrder,
    kmax: usize,
    terms: Vec<Vec<(f64, i32, usize)>>,
}

impl ReducedBessel {
    pub fn new(order: BesselOrder, kmax: usize) -> Result<Self> {
        if kmax > MAX_BESSEL_DERIV {
            return Err(Error::Unsupported(format!(
                "reduced Bessel derivative of order {kmax} (max {MAX_BESSEL_DERIV})"
            )));
        }
        let terms = (0..=kmax).map(|k| bessel_derivative_terms(order.value(), k)).collect();
        Ok(Self { order, kmax, terms })
    }

    pub fn order(&self) -> BesselOrder {
        self.order
    }

    /// Writes `𝒥_α^{(k)}(s)` into `out[k]` for `k < out.len() <= kmax + 1`.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) -> Result<()> {
        let kmax = out.len().saturating_sub(1).min(self.kmax);
        let family = reduced_bessel_family(self.order, s, kmax)?;
        for (k, o) in out.iter_mut().enumerate().take(kmax + 1) {
            *o = self.terms[k].iter().map(|&(c, p, m)| c * s.powi(p) * family[m]).sum();
        }
        Ok(())
    }
}

/// `ℓ_n^{(k)}(x)` for `k = 0..=3` without allocation.
pub fn laguerre_fn_jet(n: usize, x: f64, kmax: usize) -> [f64; 4] {
    let mut pieces = [0.0; 4];
    for (i, p) in pieces.iter_mut().enumerate().take(kmax.min(3) + 1) {
        if i <= n {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *p = sign * laguerre_scaled(n - i, i as f64, x);
        }
    }
    let [p0, p1, p2, p3] = pieces;
    [
        p0,
        p1 - 0.5 * p0,
        p2 - p1 + 0.25 * p0,
        p3 - 1.5 * p2 + 0.75 * p1 - 0.125 * p0,
    ]
}

// ---------------------------------------------------------------------------
// Hermite

/// Orthonormal Hermite function `h_l(x) = (2^l l! √π)^{-1/2} e^{-x²/2} H_l(x)`.
pub fn hermite_weber(l: usize, x: f64) -> Result<f64> {
    if l > MAX_HERMITE_INDEX {
        return Err(Error::Unsupported(format!(
            "Hermite index {l} exceeds {MAX_HERMITE_INDEX}"
        )));
    }
    let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if l == 0 {
        return Ok(h0);
    }
    let mut prev = h0;
    let mut cur = 2f64.sqrt() * x * h0;
    for k in 1..l {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// Gamma and Beta

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_lanczos(z: Complex64) -> Complex64 {
    // valid for Re z >= 1/2
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln sin(w)` without overflow for large `|Im w|` (branch irrelevant).
fn ln_sin(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im > 20.0 {
        -i * w + ((1.0 - (2.0 * i * w).exp()) * (0.5 * i)).ln()
    } else if w.im < -20.0 {
        i * w + ((1.0 - (-2.0 * i * w).exp()) / (2.0 * i)).ln()
    } else {
        w.sin().ln()
    }
}

fn is_pole(x: f64, y: f64) -> bool {
    y == 0.0 && x <= 0.0 && x == x.round()
}

/// Principal `ln Γ(z)` up to a multiple of `2πi` in the imaginary part.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if is_pole(z.re, z.im) {
        return Err(Error::Pole(format!("{z}")));
    }
    if z.re < 0.5 {
        let refl = ln_gamma_lanczos(1.0 - z);
        Ok(Complex64::new(PI.ln(), 0.0) - ln_sin(PI * z) - refl)
    } else {
        Ok(ln_gamma_lanczos(z))
    }
}

/// `Γ(x + iy)`.
pub fn complex_gamma(x: f64, y: f64) -> Result<Complex64> {
    Ok(ln_gamma_complex(Complex64::new(x, y))?.exp())
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma_lanczos(Complex64::new(x, 0.0)).re
}

/// `Γ(x)` for real `x` away from the poles.
pub fn gamma(x: f64) -> Result<f64> {
    let g = complex_gamma(x, 0.0)?;
    Ok(g.re)
}

/// `B(p, q) = Γ(p)Γ(q)/Γ(p+q)`.
pub fn beta_fn(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return invalid(format!("Beta function needs positive arguments, got ({p}, {q})"));
    }
    Ok((ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)).exp())
}

/// Observed range of `e^{-π|y|/2} |y|^{x-1/2} / |Γ(x+iy)|` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRatioReport {
    pub x_range: [f64; 2],
    pub y_max: f64,
    pub samples: usize,
    /// Bounds using `|y|` in the exponential.
    pub c_min: f64,
    pub c_max: f64,
    /// Bounds using signed `y` in the exponential, as printed; unbounded
    /// above for `y < 0`.
    pub signed_c_min: f64,
    pub signed_c_max: f64,
}

impl GammaRatioReport {
    /// Smallest `C` with `C^{-1} ≤ ratio ≤ C` on the sampled grid.
    pub fn two_sided_constant(&self) -> f64 {
        self.c_max.max(1.0 / self.c_min)
    }
}

/// `e^{-π|y|/2}|y|^{x-1/2}/|Γ(x+iy)|` evaluated in log space.
pub fn gamma_ratio(x: f64, y: f64) -> Result<f64> {
    let lg = ln_gamma_complex(Complex64::new(x, y))?;
    let ay = y.abs();
    Ok((-0.5 * PI * ay + (x - 0.5) * ay.ln() - lg.re).exp())
}

/// Samples the ratio on `nx` points of `[a, b]` and `ny` log-spaced values of
/// `|y| ∈ [1, y_max]`, both signs.
pub fn gamma_ratio_estimate_check(
    x_range: [f64; 2],
    y_max: f64,
    nx: usize,
    ny: usize,
) -> Result<GammaRatioReport> {
    let [a, b] = x_range;
    if !(a > 0.0 && a <= b) {
        return invalid(format!("need 0 < a <= b, got [{a}, {b}]"));
    }
    if !(y_max > 1.0) || nx == 0 || ny < 2 {
        return invalid("degenerate grid for the Gamma ratio check");
    }
    let mut report = GammaRatioReport {
        x_range,
        y_max,
        samples: 0,
        c_min: f64::INFINITY,
        c_max: 0.0,
        signed_c_min: f64::INFINITY,
        signed_c_max: 0.0,
    };
    for ix in 0..nx {
        let x = if nx == 1 { a } else { a + (b - a) * ix as f64 / (nx - 1) as f64 };
        for iy in 0..ny {
            let ay = y_max.powf(iy as f64 / (ny - 1) as f64);
            for y in [ay, -ay] {
                let ratio = gamma_ratio(x, y)?;
                let signed = ratio * (-0.5 * PI * (y - ay)).exp();
                report.c_min = report.c_min.min(ratio);
                report.c_max = report.c_max.max(ratio);
                report.signed_c_min = report.signed_c_min.min(signed);
                report.signed_c_max = report.signed_c_max.max(signed);
                report.samples += 1;
            }
        }
    }
    Ok(report)
}
