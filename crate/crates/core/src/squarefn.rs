//! The functional `Ŝ^j(φ)`, parameter scans, the `b^{g,j}` pieces of
//! `∂_s^h⟨μ_s, φ⟩`, and Bessel moment integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::group::Dimensions;
use crate::quadrature::{gauss_legendre, gauss_legendre_panels};
use crate::special_fn::{laguerre_fn_jet, ln_gamma, BesselOrder, ReducedBessel};
use crate::spherical::{pairing_jet, t_nodes, x_frequency, x_nodes, PairingConfig, SphericalParam};

// ---------------------------------------------------------------------------
// Ŝ^j

/// Integration window and tail control for [`shat`]; radii are in units of
/// the natural scale `‖Λ‖^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShatConfig {
    pub pairing: PairingConfig,
    pub s_min: f64,
    /// Smallest upper end before the stopping rule is consulted.
    pub s_max_min: f64,
    /// Upper end at which the search gives up.
    pub s_cap: f64,
    pub pieces_per_decade: usize,
    pub nodes_per_piece: usize,
    /// Stop once the last piece adds less than this fraction.
    pub last_piece_tol: f64,
    /// Accept when extrapolated tails are below this fraction of `Ŝ²`.
    pub tail_tol: f64,
}

impl Default for ShatConfig {
    fn default() -> Self {
        Self {
            pairing: PairingConfig::default(),
            s_min: 1e-3,
            s_max_min: 10.0,
            s_cap: 1e3,
            pieces_per_decade: 2,
            nodes_per_piece: 12,
            last_piece_tol: 5e-3,
            tail_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatResult {
    pub param: SphericalParam,
    pub j: usize,
    /// `Ŝ^j(φ)`, tails included.
    pub value: f64,
    /// `[s_min, s_max]` in absolute units.
    pub s_window: [f64; 2],
    /// Geometric extrapolation of `∫_0^{s_min}` and `∫_{s_max}^∞`.
    pub tail_small: f64,
    pub tail_large: f64,
    /// `tail_small + tail_large`, in units of `Ŝ²`.
    pub tail_bound: f64,
    /// `(upper edge, running ∫)` after each piece.
    pub partial_sums: Vec<(f64, f64)>,
    pub controlled: bool,
    pub diagnostic: Option<String>,
    pub evaluations: usize,
}

/// Geometric tail `a ρ/(1-ρ)` from consecutive piece integrals, `ρ = a/b`.
fn geometric_tail(a: f64, b: f64) -> Option<f64> {
    if b <= 0.0 {
        return if a <= 0.0 { Some(0.0) } else { None };
    }
    let rho = a / b;
    (rho < 1.0).then(|| a * rho / (1.0 - rho))
}

/// Computes `Ŝ^j(φ)` and reports the tails whether or not they are under
/// control.
pub fn shat_report(p: &SphericalParam, j: usize, cfg: &ShatConfig) -> Result<ShatResult> {
    if !(1..=3).contains(&j) {
        return invalid(format!("Ŝ^j needs 1 <= j <= 3, got {j}"));
    }
    if cfg.pieces_per_decade == 0 || cfg.nodes_per_piece == 0 || !(cfg.s_min > 0.0) {
        return invalid("degenerate Ŝ integration window");
    }
    let s0 = p.natural_scale();
    let ratio = 10f64.powf(1.0 / cfg.pieces_per_decade as f64);
    let base = gauss_legendre(cfg.nodes_per_piece, 0.0, ratio.ln())?;
    let mut pieces: Vec<f64> = Vec::new();
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut lo = cfg.s_min;
    let mut evaluations = 0;
    let mut diagnostic = None;
    loop {
        let mut piece = 0.0;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            let s = s0 * lo * x.exp();
            let d = pairing_jet(p, s, j, s, &cfg.pairing)?[j];
            evaluations += 1;
            // ds = s dx
            piece += w * d.norm_sqr() * s.powi(2 * j as i32);
        }
        pieces.push(piece);
        total += piece;
        lo *= ratio;
        partial.push((s0 * lo, total));
        if lo >= cfg.s_max_min * (1.0 - 1e-12) && piece <= cfg.last_piece_tol * total {
            break;
        }
        if lo >= cfg.s_cap {
            diagnostic = Some(format!(
                "integrand has not decayed by s = {:.3e} (natural units {:.1e}); last piece is {:.2}% of the running integral",
                s0 * lo,
                lo,
                100.0 * piece / total.max(f64::MIN_POSITIVE)
            ));
            break;
        }
    }
    let n = pieces.len();
    let tail_small = geometric_tail(pieces[0], pieces[1]);
    let tail_large = geometric_tail(pieces[n - 1], pieces[n - 2]);
    if tail_small.is_none() && diagnostic.is_none() {
        diagnostic = Some(format!("integrand does not decrease toward s = {:.3e}", s0 * cfg.s_min));
    }
    if tail_large.is_none() && diagnostic.is_none() {
        diagnostic = Some(format!("piece integrals grow toward s = {:.3e}", s0 * lo));
    }
    let ts = tail_small.unwrap_or(f64::INFINITY);
    let tl = tail_large.unwrap_or(f64::INFINITY);
    let integral = total + tail_small.unwrap_or(0.0) + tail_large.unwrap_or(0.0);
    let tail_bound = ts + tl;
    let controlled = diagnostic.is_none() && tail_bound < cfg.tail_tol * integral;
    if diagnostic.is_none() && !controlled {
        diagnostic = Some(format!("extrapolated tails are {:.2}% of Ŝ²", 100.0 * tail_bound / integral));
    }
    Ok(ShatResult {
        param: p.clone(),
        j,
        value: integral.sqrt(),
        s_window: [s0 * cfg.s_min, s0 * lo],
        tail_small: ts,
        tail_large: tl,
        tail_bound,
        partial_sums: partial,
        controlled,
        diagnostic,
        evaluations,
    })
}

/// `Ŝ^j(φ) = (∫_0^∞ |∂_s^j⟨μ_s, φ⟩|² s^{2j-1} ds)^{1/2}`; fails with
/// [`Error::Tail`] when the tails are not under control.
pub fn shat(p: &SphericalParam, j: usize, cfg: &ShatConfig) -> Result<ShatResult> {
    let r = shat_report(p, j, cfg)?;
    if !r.controlled {
        return Err(Error::Tail(r.diagnostic.unwrap_or_default()));
    }
    Ok(r)
}

/// Parameter grid for [`scan_shat`]: `λ = λ_max · shape`, `r = r_rel ·
/// √λ_max` (odd `v` only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub v: usize,
    pub lambda_max: Vec<f64>,
    pub shapes: Vec<Vec<f64>>,
    pub l_values: Vec<Vec<usize>>,
    #[serde(default)]
    pub r_rel: Vec<f64>,
}

impl ScanGrid {
    pub fn default_for(v: usize) -> Result<Self> {
        let dims = Dimensions::new(v)?;
        let vp = dims.vprime;
        let shapes: Vec<Vec<f64>> = match vp {
            1 => vec![vec![1.0]],
            2 => vec![vec![1.0, 0.5], vec![1.0, 0.1]],
            _ => vec![(0..vp).map(|i| 0.5f64.powi(i as i32)).collect()],
        };
        let l_values: Vec<Vec<usize>> = match vp {
            1 => vec![vec![0], vec![1], vec![3]],
            2 => vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 2]],
            _ => vec![vec![0; vp], vec![1; vp]],
        };
        Ok(Self {
            v,
            lambda_max: vec![1.0, 4.0, 16.0, 64.0, 256.0, 1024.0],
            shapes,
            l_values,
            r_rel: if dims.is_odd() { vec![0.5, 2.0] } else { Vec::new() },
        })
    }

    pub fn points(&self) -> Result<Vec<(usize, SphericalParam)>> {
        let dims = Dimensions::new(self.v)?;
        let rs: Vec<f64> = if dims.is_odd() {
            if self.r_rel.is_empty() {
                return invalid("odd v needs at least one r value");
            }
            self.r_rel.clone()
        } else {
            vec![0.0]
        };
        let mut out = Vec::new();
        for (rung, lm) in self.lambda_max.iter().enumerate() {
            for shape in &self.shapes {
                for l in &self.l_values {
                    for r in &rs {
                        let lambda = shape.iter().map(|x| lm * x).collect();
                        let r = if dims.is_odd() { r * lm.sqrt() } else { 0.0 };
                        out.push((rung, SphericalParam::new(dims, r, lambda, l.clone())?));
                    }
                }
            }
        }
        if out.is_empty() {
            return invalid("empty scan grid");
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub rung: usize,
    pub result: ShatResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub v: usize,
    pub j: usize,
    pub rows: Vec<ScanRow>,
    pub global_sup: f64,
    /// `(λ_max, sup over the rung)`.
    pub rung_sups: Vec<(f64, f64)>,
    /// `sup_{k+1} / sup_k`.
    pub stabilization_ratios: Vec<f64>,
    pub all_controlled: bool,
    /// Outermost two ratios within the band.
    pub stabilized: bool,
    pub band: [f64; 2],
    pub failures: Vec<String>,
    /// `1 ≤ j < (z-2)/2`.
    pub in_theorem_range: bool,
    /// `∫|𝒥_{(z-2)/2}|² s^{2j-1}` on a doubling ladder.
    pub majorant: MomentDichotomy,
    /// Set when the ladder fails to stabilize, a tail is uncontrolled, or
    /// the majorant moment diverges.
    pub divergence: Option<String>,
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        let vp = self.v / 2;
        let mut out = String::from("v,j,rung,r");
        for k in 1..=vp {
            out.push_str(&format!(",lambda_{k}"));
        }
        for k in 1..=vp {
            out.push_str(&format!(",l_{k}"));
        }
        out.push_str(",value,tail_small,tail_large,s_min,s_max,controlled\n");
        for row in &self.rows {
            let r = &row.result;
            out.push_str(&format!("{},{},{},{:e}", self.v, self.j, row.rung, r.param.r()));
            for x in r.param.lambda() {
                out.push_str(&format!(",{x:e}"));
            }
            for x in r.param.l() {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(
                ",{:.12e},{:e},{:e},{:e},{:e},{}\n",
                r.value, r.tail_small, r.tail_large, r.s_window[0], r.s_window[1], r.controlled
            ));
        }
        out
    }
}

/// Band for consecutive-rung sup ratios.
pub const STABILIZATION_BAND: [f64; 2] = [0.95, 1.05];

/// `Ŝ^j` over every grid point, with per-rung sups and their ratios.
pub fn scan_shat(grid: &ScanGrid, j: usize, cfg: &ShatConfig) -> Result<ScanReport> {
    let points = grid.points()?;
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (rung, p) in points {
        let result = shat_report(&p, j, cfg)?;
        if !result.controlled {
            failures.push(format!(
                "{}: {}",
                serde_json::to_string(&p).unwrap_or_default(),
                result.diagnostic.clone().unwrap_or_default()
            ));
        }
        rows.push(ScanRow { rung, result });
    }
    let rung_sups: Vec<(f64, f64)> = grid
        .lambda_max
        .iter()
        .enumerate()
        .map(|(k, lm)| {
            let sup = rows.iter().filter(|r| r.rung == k).map(|r| r.result.value).fold(0.0, f64::max);
            (*lm, sup)
        })
        .collect();
    let ratios: Vec<f64> = rung_sups.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let band = STABILIZATION_BAND;
    let outer = &ratios[ratios.len().saturating_sub(2)..];
    let stabilized = !outer.is_empty() && outer.iter().all(|r| *r >= band[0] && *r <= band[1]);
    let z = Dimensions::new(grid.v)?.z;
    let in_theorem_range = 2 * j + 2 < z;
    let alpha = (z as f64 - 2.0) / 2.0;
    let majorant = bessel_moment_dichotomy(alpha, 0, 2.0 * j as f64 - 1.0, 50.0, 4)?;
    let mut notes = Vec::new();
    if !failures.is_empty() {
        notes.push(format!("{} grid points with uncontrolled tails", failures.len()));
    }
    if !stabilized {
        notes.push(format!("rung sup ratios {ratios:?} leave [{}, {}]", band[0], band[1]));
    }
    if !majorant.converged {
        notes.push(format!(
            "majorant moment ∫|𝒥_{alpha}|² s^{} grows by {:.3e} per doubling of T",
            2 * j - 1,
            majorant.last_relative_change
        ));
    }
    Ok(ScanReport {
        v: grid.v,
        j,
        global_sup: rows.iter().map(|r| r.result.value).fold(0.0, f64::max),
        rows,
        rung_sups,
        stabilization_ratios: ratios,
        all_controlled: failures.is_empty(),
        stabilized,
        band,
        failures,
        in_theorem_range,
        majorant,
        divergence: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}

// ---------------------------------------------------------------------------
// b^{g,j}

/// Coefficient of `s^{2k-h} f^{(k)}(s²)` in `d^h/ds^h f(s²)`.
pub fn chain_coefficient(h: usize, k: usize) -> f64 {
    if k > h || 2 * k < h {
        return 0.0;
    }
    let fact = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
    fact(h) * 2f64.powi((2 * k - h) as i32) / (fact(h - k) * fact(2 * k - h))
}

/// `d(j, h)`: the power of `s` attached to `f^{(h'+j)}(s²)`.
pub fn chain_power(j: usize, h: usize) -> usize {
    if h % 2 == 0 {
        2 * j
    } else {
        2 * j + 1
    }
}

/// `h' = ⌈h/2⌉`.
fn half_up(h: usize) -> usize {
    h.div_ceil(2)
}

/// A term `(g, j) = ((h₁, h₂), (j₁, j₂))` with `h̃ = h - h₁ - h₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BIndex {
    pub h: usize,
    pub g: [usize; 2],
    pub j: [usize; 2],
}

impl BIndex {
    pub fn htilde(&self) -> usize {
        self.h - self.g[0] - self.g[1]
    }

    fn validate(&self, dims: Dimensions) -> Result<()> {
        if self.h > 3 {
            return Err(Error::Unsupported(format!("h = {} (max 3)", self.h)));
        }
        if self.g[0] + self.g[1] > self.h {
            return invalid(format!("h1 + h2 = {} exceeds h = {}", self.g[0] + self.g[1], self.h));
        }
        if !dims.is_odd() && self.htilde() != 0 {
            return invalid("h̃ must vanish when v is even");
        }
        for i in 0..2 {
            if 2 * self.j[i] > self.g[i] {
                return invalid(format!("j_{} = {} exceeds h_{}/2", i + 1, self.j[i], i + 1));
            }
        }
        Ok(())
    }

    /// `n = h'₁ + j₁`, the order of the `s'`-derivative in `čb`.
    pub fn laguerre_order(&self) -> usize {
        half_up(self.g[0]) + self.j[0]
    }

    /// `h'₂ + j₂`, the order of the Bessel derivative.
    pub fn bessel_order(&self) -> usize {
        half_up(self.g[1]) + self.j[1]
    }

    /// `d₁ + d₂`.
    pub fn s_power(&self) -> usize {
        chain_power(self.j[0], self.g[0]) + chain_power(self.j[1], self.g[1])
    }
}

/// The terms of `∂_s^h⟨μ_s, φ⟩ = Σ c · b^{g,j}(s)` with their coefficients
/// `c = 2 · multinomial(h; h̃, h₁, h₂) · A(h₁, k₁) · A(h₂, k₂)`; the 2 is the
/// density factor of `μ`.
pub fn b_expansion(dims: Dimensions, h: usize) -> Result<Vec<(f64, BIndex)>> {
    if h > 3 {
        return Err(Error::Unsupported(format!("h = {h} (max 3)")));
    }
    let fact = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
    let mut out = Vec::new();
    for h1 in 0..=h {
        for h2 in 0..=h - h1 {
            let ht = h - h1 - h2;
            if ht > 0 && !dims.is_odd() {
                continue;
            }
            let multi = fact(h) / (fact(ht) * fact(h1) * fact(h2));
            for j1 in 0..=h1 / 2 {
                for j2 in 0..=h2 / 2 {
                    let idx = BIndex { h, g: [h1, h2], j: [j1, j2] };
                    let c = 2.0
                        * multi
                        * chain_coefficient(h1, idx.laguerre_order())
                        * chain_coefficient(h2, idx.bessel_order());
                    out.push((c, idx));
                }
            }
        }
    }
    Ok(out)
}

/// `∂_{s'}^n Π_j ℓ_{l_j}(κ_j s')` at `s' = x`.
fn laguerre_product_deriv(p: &SphericalParam, kappa: &[f64], x: f64, n: usize) -> f64 {
    // Taylor coefficients in s', multiplied factor by factor
    let mut acc = [1.0, 0.0, 0.0, 0.0];
    for ((k, l), _) in kappa.iter().zip(p.l()).zip(0..) {
        let d = laguerre_fn_jet(*l, k * x, n);
        let mut f = [0.0; 4];
        let mut kp = 1.0;
        let mut fact = 1.0;
        for m in 0..=n {
            if m > 0 {
                kp *= k;
                fact *= m as f64;
            }
            f[m] = d[m] * kp / fact;
        }
        let mut next = [0.0; 4];
        for a in 0..=n {
            for b in 0..=n - a {
                next[a + b] += acc[a] * f[b];
            }
        }
        acc = next;
    }
    acc[n] * (1..=n).map(|x| x as f64).product::<f64>()
}

/// `čb^{h̃,n}(t, s) = ∫_{S^v} (i r t x_v)^{h̃} e^{i t s r x_v}
/// ∂_{s'}^n[Π_j ℓ_{l_j}(λ_j s' t² ‖pr_j X‖²/2)]_{s'=s²} dσ_v(X)`.
pub fn eval_check_b(
    p: &SphericalParam,
    t: f64,
    s: f64,
    htilde: usize,
    n: usize,
    cfg: &PairingConfig,
) -> Result<Complex64> {
    let dims = p.dims();
    if htilde > 0 && !dims.is_odd() {
        return invalid("h̃ > 0 needs odd v");
    }
    if n > 3 {
        return Err(Error::Unsupported(format!("s'-derivative of order {n} (max 3)")));
    }
    if !(t >= 0.0 && t <= 1.0) || !(s >= 0.0) {
        return invalid(format!("need t in [0, 1] and s >= 0, got ({t}, {s})"));
    }
    Ok(check_b_with_layout(p, t, s, htilde, n, s, cfg))
}

fn check_b_with_layout(
    p: &SphericalParam,
    t: f64,
    s: f64,
    htilde: usize,
    n: usize,
    layout_s: f64,
    cfg: &PairingConfig,
) -> Complex64 {
    let vp = p.dims().vprime;
    let c: Vec<f64> = p.lambda().iter().map(|lam| 0.5 * lam * layout_s * layout_s * t * t).collect();
    let xn = x_nodes(p, &c, t * layout_s * p.r(), cfg);
    let mut kappa = vec![0.0; vp];
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (xv, w)) in xn.xv.iter().zip(&xn.w).enumerate() {
        for j in 0..vp {
            kappa[j] = 0.5 * p.lambda()[j] * xn.rho[i * vp + j] * t * t;
        }
        let lag = laguerre_product_deriv(p, &kappa, s * s, n);
        let pre = Complex64::new(0.0, p.r() * t * xv).powu(htilde as u32);
        acc += pre * Complex64::from_polar(1.0, t * s * p.r() * xv) * (lag * w);
    }
    acc
}

/// `b^{g,j}(s) = s^{d₁+d₂} ∫_0^1 čb^{h̃,h'₁+j₁}(t,s) 𝒥^{(h'₂+j₂)}(s²√(1-t⁴)‖A‖)
/// (√(1-t⁴)‖A‖)^{h'₂+j₂} t^{v-1}(1-t⁴)^{(z-2)/2} dt`.
pub fn eval_b_gj(p: &SphericalParam, s: f64, index: BIndex, cfg: &PairingConfig) -> Result<Complex64> {
    let dims = p.dims();
    index.validate(dims)?;
    if !(s > 0.0) {
        return invalid(format!("radius must be positive, got {s}"));
    }
    let lam = p.lambda_norm();
    let kb = index.bessel_order();
    let bessel = ReducedBessel::new(BesselOrder::for_sphere(dims.z)?, kb)?;
    let (tn, un, wn) = t_nodes(dims, s * s * lam, x_frequency(p, s), cfg);
    let mut out = [0.0; 4];
    let mut acc = Complex64::new(0.0, 0.0);
    for ((t, u), w) in tn.iter().zip(&un).zip(&wn) {
        let cb = check_b_with_layout(p, *t, s, index.htilde(), index.laguerre_order(), s, cfg);
        let a = u * lam;
        bessel.eval_into(s * s * a, &mut out[..=kb])?;
        // t_nodes weights carry the factor 2 of μ
        acc += cb * (0.5 * w * out[kb] * a.powi(kb as i32));
    }
    Ok(acc * s.powi(index.s_power() as i32))
}

/// `Σ c · b^{g,j}(s)` over [`b_expansion`].
pub fn reconstruct_derivative(p: &SphericalParam, s: f64, h: usize, cfg: &PairingConfig) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, idx) in b_expansion(p.dims(), h)? {
        acc += eval_b_gj(p, s, idx, cfg)? * c;
    }
    Ok(acc)
}

/// `‖A‖^n t^{2n} s^{-h̃} Σ_{0≤i≤h̃} (‖A‖ s² t²)^i`.
pub fn check_b_majorant(p: &SphericalParam, t: f64, s: f64, htilde: usize, n: usize) -> f64 {
    let a = p.lambda_norm();
    let sum: f64 = (0..=htilde).map(|i| (a * s * s * t * t).powi(i as i32)).sum();
    a.powi(n as i32) * t.powi(2 * n as i32) * s.powi(-(htilde as i32)) * sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantReport {
    pub htilde: usize,
    pub n: usize,
    /// `max |čb| / majorant` on the fitting half of the grid.
    pub c_fit: f64,
    /// The same on the validation half.
    pub c_validation: f64,
    pub points: usize,
}

/// Ratios `|čb| / majorant` on a `(t, s)` grid; the constant is fitted on
/// the points with even linear index and checked on the others.
pub fn majorant_check(
    p: &SphericalParam,
    htilde: usize,
    n: usize,
    ts: &[f64],
    ss: &[f64],
    cfg: &PairingConfig,
) -> Result<MajorantReport> {
    let mut fit: f64 = 0.0;
    let mut val: f64 = 0.0;
    let mut k = 0;
    for t in ts {
        for s in ss {
            let ratio = eval_check_b(p, *t, *s, htilde, n, cfg)?.norm() / check_b_majorant(p, *t, *s, htilde, n);
            if k % 2 == 0 {
                fit = fit.max(ratio);
            } else {
                val = val.max(ratio);
            }
            k += 1;
        }
    }
    Ok(MajorantReport { htilde, n, c_fit: fit, c_validation: val, points: k })
}

// ---------------------------------------------------------------------------
// Bessel moments

/// `∫_0^T |𝒥_α^{(n)}(s)|² s^β ds` by composite Gauss–Legendre.
pub fn bessel_moment(alpha: f64, nderiv: usize, beta: f64, t_end: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid(format!("need α > 0, got {alpha}"));
    }
    if !(beta > -1.0) {
        return invalid(format!("need β > -1, got {beta}"));
    }
    if !(t_end >= 0.0) {
        return invalid(format!("need T >= 0, got {t_end}"));
    }
    if t_end == 0.0 {
        return Ok(0.0);
    }
    let bessel = ReducedBessel::new(BesselOrder::new(alpha)?, nderiv)?;
    let mut out = vec![0.0; nderiv + 1];
    // geometric panels near 0 for the s^β endpoint, then half-period panels
    let mut breaks = vec![0.0];
    let first = t_end.min(1.0);
    let mut b = first * 1e-6;
    while b < first {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(first);
    let mut x = first;
    while x < t_end {
        x = (x + PI / 2.0).min(t_end);
        breaks.push(x);
    }
    let rule = gauss_legendre_panels(&breaks, 12)?;
    let mut acc = 0.0;
    for (s, w) in rule.nodes.iter().zip(&rule.weights) {
        bessel.eval_into(*s, &mut out)?;
        acc += w * out[nderiv] * out[nderiv] * s.powf(beta);
    }
    Ok(acc)
}

/// Large-`s` tail `∫_T^∞ 𝒥_α(s)² s^β ds` from the Hankel modulus and phase
/// expansions; `None` when `β ≥ 2α` (divergent).
pub fn bessel_moment_tail(alpha: f64, beta: f64, t_end: f64) -> Option<f64> {
    let gamma = beta - 2.0 * alpha;
    if gamma >= 0.0 || !(t_end > 0.0) {
        return None;
    }
    let mu = 4.0 * alpha * alpha;
    let a1 = (mu - 1.0) / 8.0;
    let a2 = 3.0 * (mu - 1.0) * (mu - 9.0) / 128.0;
    let pref = (2.0 * ln_gamma(alpha + 1.0) + alpha * 4f64.ln()).exp() / PI;
    let t = t_end;
    let mean = t.powf(gamma) / (-gamma) + a1 * t.powf(gamma - 2.0) / (2.0 - gamma) + a2 * t.powf(gamma - 4.0) / (4.0 - gamma);
    let theta = t - (0.5 * alpha + 0.25) * PI + (mu - 1.0) / (8.0 * t);
    let osc = -0.5 * t.powf(gamma - 1.0) * (2.0 * theta).sin();
    Some(pref * (mean + osc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t_end: f64,
    pub raw: f64,
    pub tail: Option<f64>,
    pub corrected: Option<f64>,
}

/// Moments at `T, 2T, 4T, …` (raw and, for `n = 0`, tail-corrected).
pub fn bessel_moment_ladder(alpha: f64, nderiv: usize, beta: f64, t_ends: &[f64]) -> Result<Vec<MomentRow>> {
    t_ends
        .iter()
        .map(|t| {
            let raw = bessel_moment(alpha, nderiv, beta, *t)?;
            let tail = if nderiv == 0 { bessel_moment_tail(alpha, beta, *t) } else { None };
            Ok(MomentRow { t_end: *t, raw, tail, corrected: tail.map(|x| raw + x) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDichotomy {
    pub alpha: f64,
    pub nderiv: usize,
    pub beta: f64,
    pub rows: Vec<MomentRow>,
    /// Relative change of the best estimate over the last doubling.
    pub last_relative_change: f64,
    pub converged: bool,
}

/// Relative change under `T → 2T` below which a moment counts as converged.
pub const MOMENT_TOL: f64 = 1e-3;

/// Moments at `T₀ 2^k`, `k = 0..=doublings`; the tail-corrected value is
/// used when available.
pub fn bessel_moment_dichotomy(alpha: f64, nderiv: usize, beta: f64, t0: f64, doublings: usize) -> Result<MomentDichotomy> {
    if doublings == 0 {
        return invalid("need at least one doubling");
    }
    let ts: Vec<f64> = (0..=doublings).map(|k| t0 * 2f64.powi(k as i32)).collect();
    let rows = bessel_moment_ladder(alpha, nderiv, beta, &ts)?;
    let best = |r: &MomentRow| r.corrected.unwrap_or(r.raw);
    let n = rows.len();
    let change = (best(&rows[n - 1]) - best(&rows[n - 2])).abs() / best(&rows[n - 1]).abs();
    Ok(MomentDichotomy {
        alpha,
        nderiv,
        beta,
        rows,
        last_relative_change: change,
        converged: change < MOMENT_TOL,
    })
}
