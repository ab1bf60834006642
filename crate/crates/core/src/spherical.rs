//! Bounded spherical functions of `(N_v, O(v))`: parameters, `Θ`, the Haar
//! average `φ`, and the pairing `⟨μ_s, φ⟩` with its `s`-derivatives.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::group::{haar_orthogonal, orthogonal_act_unchecked, Dimensions, GroupElement};
use crate::quadrature::{gauss_legendre, KoranyiSphereRule};
use crate::special_fn::{beta_fn, laguerre_fn, laguerre_fn_jet, BesselOrder, ReducedBessel};

/// A point `(r, Λ, l)` of the parameter set of bounded spherical functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SphericalParamJson", into = "SphericalParamJson")]
pub struct SphericalParam {
    dims: Dimensions,
    r: f64,
    lambda: Vec<f64>,
    l: Vec<usize>,
}

/// JSON layout `{v, r, lambda, l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalParamJson {
    pub v: usize,
    pub r: f64,
    pub lambda: Vec<f64>,
    pub l: Vec<usize>,
}

impl TryFrom<SphericalParamJson> for SphericalParam {
    type Error = Error;
    fn try_from(j: SphericalParamJson) -> Result<Self> {
        SphericalParam::new(Dimensions::new(j.v)?, j.r, j.lambda, j.l)
    }
}

impl From<SphericalParam> for SphericalParamJson {
    fn from(p: SphericalParam) -> Self {
        Self { v: p.dims.v, r: p.r, lambda: p.lambda, l: p.l }
    }
}

impl SphericalParam {
    /// Accepts non-increasing positive `λ`; ties are outside the generic set
    /// and reported by [`SphericalParam::is_generic`].
    pub fn new(dims: Dimensions, r: f64, lambda: Vec<f64>, l: Vec<usize>) -> Result<Self> {
        if lambda.len() != dims.vprime {
            return Err(Error::DimensionMismatch { expected: dims.vprime, got: lambda.len() });
        }
        if l.len() != dims.vprime {
            return Err(Error::DimensionMismatch { expected: dims.vprime, got: l.len() });
        }
        if lambda.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return invalid(format!("λ must be positive and finite, got {lambda:?}"));
        }
        if lambda.windows(2).any(|w| w[1] > w[0]) {
            return invalid(format!("λ must be non-increasing, got {lambda:?}"));
        }
        if !r.is_finite() || r < 0.0 {
            return invalid(format!("r must be finite and >= 0, got {r}"));
        }
        if dims.is_odd() && r == 0.0 {
            return invalid("r must be positive when v is odd");
        }
        if !dims.is_odd() && r != 0.0 {
            return invalid("r must vanish when v is even");
        }
        Ok(Self { dims, r, lambda, l })
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn l(&self) -> &[usize] {
        &self.l
    }

    /// Strictly decreasing `λ`.
    pub fn is_generic(&self) -> bool {
        self.lambda.windows(2).all(|w| w[1] < w[0])
    }

    /// `‖D_2(Λ)‖ = (Σ λ_j²)^{1/2}`.
    pub fn lambda_norm(&self) -> f64 {
        self.lambda.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `(t r, t² Λ, l)`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return invalid(format!("scale must be positive, got {t}"));
        }
        Self::new(self.dims, t * self.r, self.lambda.iter().map(|x| t * t * x).collect(), self.l.clone())
    }

    /// `‖Λ‖^{-1/2}`, the radius at which `⟨μ_s, φ⟩` starts to move.
    pub fn natural_scale(&self) -> f64 {
        self.lambda_norm().powf(-0.5)
    }
}

/// z-coordinates of `D_2(Λ)`: `λ_j` at the pair `(2j-1, 2j)`.
pub fn d2_coords(dims: Dimensions, lambda: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != dims.vprime {
        return Err(Error::DimensionMismatch { expected: dims.vprime, got: lambda.len() });
    }
    let mut a = vec![0.0; dims.z];
    for (j, l) in lambda.iter().enumerate() {
        a[dims.pair_index(2 * j, 2 * j + 1)] = *l;
    }
    Ok(a)
}

/// `pr_j X = (x_{2j-1}, x_{2j})`, `j` one-based.
pub fn proj_pair(x: &[f64], j: usize) -> Result<[f64; 2]> {
    if j == 0 || 2 * j > x.len() {
        return invalid(format!("pair index {j} out of range for v = {}", x.len()));
    }
    Ok([x[2 * j - 2], x[2 * j - 1]])
}

/// `Θ^{r,Λ,l}(exp(X + A))` from coordinates.
pub fn theta_parts(p: &SphericalParam, x: &[f64], a: &[f64]) -> Complex64 {
    let dims = p.dims;
    let mut phase = 0.0;
    let mut modulus = 1.0;
    for (j, (lam, l)) in p.lambda.iter().zip(&p.l).enumerate() {
        phase += lam * a[dims.pair_index(2 * j, 2 * j + 1)];
        let rho = x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1];
        modulus *= laguerre_fn(*l, 0.5 * lam * rho).expect("nonnegative argument");
    }
    if dims.is_odd() {
        phase += p.r * x[dims.v - 1];
    }
    Complex64::from_polar(modulus, phase)
}

pub fn theta_eval(p: &SphericalParam, n: &GroupElement) -> Result<Complex64> {
    if n.dims() != p.dims {
        return Err(Error::DimensionMismatch { expected: p.dims.v, got: n.dims().v });
    }
    Ok(theta_parts(p, n.x(), n.a()))
}

/// Monte-Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub value: Complex64,
    pub std_error: f64,
}

/// Haar samples per independent RNG stream in [`phi_eval`].
pub const HAAR_CHUNK: usize = 1024;

/// `φ^{r,Λ,l}(n) = ∫_{O(v)} Θ(k.n) dk` by Monte-Carlo over Haar samples.
///
/// Chunk `c` of the samples uses stream `c` of a ChaCha generator seeded with
/// `seed`, so the estimate does not depend on how chunks are scheduled.
pub fn phi_eval(p: &SphericalParam, n: &GroupElement, n_haar: usize, seed: u64) -> Result<PhiEstimate> {
    if n_haar < 100 {
        return invalid(format!("need at least 100 Haar samples, got {n_haar}"));
    }
    if n.dims() != p.dims {
        return Err(Error::DimensionMismatch { expected: p.dims.v, got: n.dims().v });
    }
    let v = p.dims.v;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq = 0.0;
    let mut done = 0;
    let mut chunk = 0u64;
    while done < n_haar {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let take = HAAR_CHUNK.min(n_haar - done);
        for _ in 0..take {
            let k: DMatrix<f64> = haar_orthogonal(v, &mut rng);
            let kn = orthogonal_act_unchecked(&k, n);
            let th = theta_parts(p, kn.x(), kn.a());
            sum += th;
            sq += th.norm_sqr();
        }
        done += take;
        chunk += 1;
    }
    let nf = n_haar as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean.norm_sqr()).max(0.0) * nf / (nf - 1.0);
    Ok(PhiEstimate { value: mean, std_error: (var / nf).sqrt() })
}

// ---------------------------------------------------------------------------
// Truncated Taylor jets in s

/// Taylor coefficients `c_k` of `f(s + δ) = Σ c_k δ^k`, `k ≤ 3`.
type Jet = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn jet_mul(a: &Jet, b: &Jet, n: usize) -> Jet {
    let mut out = [ZERO; 4];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// Jet of `f(x0 + a1 δ + a2 δ²)` from the derivatives `f^{(k)}(x0)`.
fn jet_compose(f: &[f64; 4], a1: f64, a2: f64) -> [f64; 4] {
    [
        f[0],
        f[1] * a1,
        f[1] * a2 + 0.5 * f[2] * a1 * a1,
        f[2] * a1 * a2 + f[3] * a1 * a1 * a1 / 6.0,
    ]
}

fn real_jet(c: [f64; 4]) -> Jet {
    c.map(|x| Complex64::new(x, 0.0))
}

// ---------------------------------------------------------------------------
// Pairing ⟨μ_s, φ⟩

/// Quadrature knobs for [`pairing_mu_s_phi`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingConfig {
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Panels per half-period of the fastest oscillation.
    pub panels_per_half_period: f64,
    /// Laguerre arguments beyond `4l + cutoff` are treated as zero.
    pub laguerre_cutoff: f64,
    /// Split of `[0, 1]` between the `t` and `u = √(1-t⁴)` variables.
    pub t_split: f64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self { nodes_per_panel: 10, panels_per_half_period: 1.0, laguerre_cutoff: 80.0, t_split: 0.8 }
    }
}

/// Nodes of the law of `(x_v, ‖pr_1 X‖², …, ‖pr_{v'} X‖²)` for `X` uniform on
/// the sphere of `ℝ^v`; `rho` has stride `v'`.
#[derive(Debug, Clone, Default)]
pub(crate) struct XNodes {
    pub xv: Vec<f64>,
    pub rho: Vec<f64>,
    pub w: Vec<f64>,
}

/// Breakpoints in `y ∈ [0, 1]` resolving `ℓ_l(c y)`: uniform in `√(cy)` at
/// half the local period, stopping at `c y = 4l + cutoff`. Returns the
/// breakpoints and the last useful `y`.
fn laguerre_breaks(l: usize, c: f64, cfg: &PairingConfig) -> (Vec<f64>, f64) {
    let xc = 4.0 * l as f64 + cfg.laguerre_cutoff;
    if c <= 1e-12 {
        return (vec![0.0, 1.0], 1.0);
    }
    let ymax = (xc / c).min(1.0);
    let step = PI / (2.0 * (l as f64 + 0.5).sqrt()) / cfg.panels_per_half_period;
    let mut out = vec![0.0];
    let mut k = 1.0;
    loop {
        let y = (k * step).powi(2) / c;
        if y >= ymax {
            break;
        }
        out.push(y);
        k += 1.0;
    }
    out.push(ymax);
    (out, ymax)
}

fn panels_rule(mut breaks: Vec<f64>, lo: f64, hi: f64, npp: usize, max_width: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    if !(hi > lo) {
        return (nodes, weights);
    }
    breaks.retain(|b| *b > lo && *b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let base = gauss_legendre(npp, -1.0, 1.0).expect("npp > 0");
    for w in breaks.windows(2) {
        let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        for k in 0..pieces {
            let a = w[0] + k as f64 * h;
            for (x, wt) in base.nodes.iter().zip(&base.weights) {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * wt);
            }
        }
    }
    (nodes, weights)
}

/// Dirichlet(1,…,1) nodes for `k = c.len()` parts with Laguerre scales `c`,
/// appended to `out` with an outer weight and coordinate prefix.
fn dirichlet_nodes(
    ls: &[usize],
    c: &[f64],
    cfg: &PairingConfig,
    prefix: &mut Vec<f64>,
    scale: f64,
    weight: f64,
    emit: &mut dyn FnMut(&[f64], f64),
) {
    let k = c.len();
    if k == 1 {
        prefix.push(scale);
        emit(prefix, weight);
        prefix.pop();
        return;
    }
    // first part w ~ (k-1)(1-w)^{k-2}; the remaining parts share 1-w
    let (b1, ymax1) = laguerre_breaks(ls[0], c[0] * scale, cfg);
    let lrest = *ls[1..].iter().max().unwrap();
    let crest = c[1..].iter().cloned().fold(0.0, f64::max) * scale;
    let (b2, _) = laguerre_breaks(lrest, crest, cfg);
    let mut breaks = b1;
    breaks.extend(b2.iter().map(|y| 1.0 - y));
    // Σ ρ'_j = 1 forces some remaining factor past its cutoff unless
    // (1-w) · scale <= Σ_j (4 l_j + cutoff) / c_j
    let lo = 1.0 - reach(&ls[1..], &c[1..], cfg) / scale;
    let (nodes, weights) = panels_rule(breaks, lo.max(0.0), ymax1, cfg.nodes_per_panel, 0.25);
    for (w, wt) in nodes.iter().zip(&weights) {
        let dens = (k - 1) as f64 * (1.0 - w).powi(k as i32 - 2);
        prefix.push(scale * w);
        dirichlet_nodes(&ls[1..], &c[1..], cfg, prefix, scale * (1.0 - w), weight * wt * dens, emit);
        prefix.pop();
    }
}

/// `Σ_j (4 l_j + cutoff) / c_j`: the largest total scale at which the
/// Laguerre product is not negligible.
fn reach(ls: &[usize], c: &[f64], cfg: &PairingConfig) -> f64 {
    ls.iter()
        .zip(c)
        .map(|(l, cj)| if *cj <= 1e-12 { f64::INFINITY } else { (4.0 * *l as f64 + cfg.laguerre_cutoff) / cj })
        .sum()
}

/// Nodes for `X` uniform on the sphere of `ℝ^v` resolving the integrand at
/// Laguerre scales `c_j` (argument `c_j ρ_j`) and `x_v`-frequency `osc`.
pub(crate) fn x_nodes(p: &SphericalParam, c: &[f64], osc: f64, cfg: &PairingConfig) -> XNodes {
    let dims = p.dims;
    let mut out = XNodes::default();
    let mut prefix = Vec::with_capacity(dims.vprime);
    if !dims.is_odd() {
        let mut emit = |rho: &[f64], w: f64| {
            out.xv.push(0.0);
            out.rho.extend_from_slice(rho);
            out.w.push(w);
        };
        dirichlet_nodes(&p.l, c, cfg, &mut prefix, 1.0, 1.0, &mut emit);
        return out;
    }
    // x_v = ±u with density (1-u²)^{(v-3)/2} / B(1/2, (v-1)/2) on [-1, 1]
    let e = (dims.v as i32 - 3) / 2;
    let norm = beta_fn(0.5, (dims.v as f64 - 1.0) / 2.0).expect("positive");
    let lmax = *p.l.iter().max().unwrap();
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    let (yb, _) = laguerre_breaks(lmax, cmax, cfg);
    let mut breaks: Vec<f64> = yb.iter().map(|y| (1.0 - y).max(0.0).sqrt()).collect();
    if osc > 0.0 {
        let step = PI / osc / cfg.panels_per_half_period;
        let mut k = 1.0;
        while k * step < 1.0 {
            breaks.push(k * step);
            k += 1.0;
        }
    }
    let umin = (1.0 - reach(&p.l, c, cfg)).max(0.0).sqrt();
    let (nodes, weights) = panels_rule(breaks, umin, 1.0, cfg.nodes_per_panel, 0.25);
    for (u, wt) in nodes.iter().zip(&weights) {
        let one = 1.0 - u * u;
        let w = wt * one.powi(e) / norm;
        for sign in [1.0, -1.0] {
            let mut emit = |rho: &[f64], ww: f64| {
                out.xv.push(sign * u);
                out.rho.extend_from_slice(rho);
                out.w.push(ww);
            };
            dirichlet_nodes(&p.l, c, cfg, &mut prefix, one, w, &mut emit);
        }
    }
    out
}

/// Nodes `(t, u = √(1-t⁴), weight)` for the `t`-integral, where the weight
/// carries `2 t^{v-1}(1-t⁴)^{(z-2)/2}`; panels resolve the Bessel phase
/// `y u` and the `t`-frequency `omega`.
pub(crate) fn t_nodes(dims: Dimensions, y: f64, omega: f64, cfg: &PairingConfig) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let v = dims.v as f64;
    let z = dims.z;
    let e = (z as f64 - 2.0) / 2.0;
    let ts = cfg.t_split;
    let umax = (1.0 - ts.powi(4)).sqrt();
    let pph = cfg.panels_per_half_period;
    // local Bessel phase rate in t is 2 y t³ / u, at most 2 y ts³ / umax
    let rate_t = omega + 2.0 * y * ts.powi(3) / umax;
    let nt = ((ts * rate_t / PI) * pph).ceil().max(1.0) as usize + 1;
    let rate_u = y + omega * umax / (2.0 * ts.powi(3));
    let nu = ((umax * rate_u / PI) * pph).ceil().max(1.0) as usize + 1;
    let base = gauss_legendre(cfg.nodes_per_panel, -1.0, 1.0).expect("npp > 0");
    let mut ts_out = Vec::new();
    let mut us_out = Vec::new();
    let mut ws_out = Vec::new();
    let ht = ts / nt as f64;
    for k in 0..nt {
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            let t = ht * (k as f64 + 0.5 * (x + 1.0));
            let u2 = 1.0 - t.powi(4);
            ts_out.push(t);
            us_out.push(u2.sqrt());
            ws_out.push(0.5 * ht * w * 2.0 * t.powf(v - 1.0) * u2.powf(e));
        }
    }
    let hu = umax / nu as f64;
    for k in 0..nu {
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            let u = hu * (k as f64 + 0.5 * (x + 1.0));
            let one = 1.0 - u * u;
            ts_out.push(one.powf(0.25));
            us_out.push(u);
            ws_out.push(0.5 * hu * w * u.powi(z as i32 - 1) * one.powf((v - 4.0) / 4.0));
        }
    }
    (ts_out, us_out, ws_out)
}

/// Fastest `t`-frequency of the `X`-factor at radius `s`.
pub(crate) fn x_frequency(p: &SphericalParam, s: f64) -> f64 {
    let lag = p
        .lambda
        .iter()
        .zip(&p.l)
        .map(|(lam, l)| (2.0 * (*l as f64 + 0.5) * lam).sqrt())
        .fold(0.0, f64::max);
    s * (lag + p.r)
}

/// `∂_s^k ⟨μ_s, φ⟩` for `k = 0..=order` (`order ≤ 3`), with the quadrature
/// layout frozen at radius `layout_s`.
pub fn pairing_jet(
    p: &SphericalParam,
    s: f64,
    order: usize,
    layout_s: f64,
    cfg: &PairingConfig,
) -> Result<Vec<Complex64>> {
    if order > 3 {
        return Err(Error::Unsupported(format!("pairing derivative of order {order} (max 3)")));
    }
    if !(s >= 0.0) || !s.is_finite() || !(layout_s >= 0.0) {
        return invalid(format!("radius must be finite and >= 0, got {s}"));
    }
    let dims = p.dims;
    let n = order + 1;
    let lam_norm = p.lambda_norm();
    let bessel = ReducedBessel::new(BesselOrder::for_sphere(dims.z)?, order)?;
    let y_layout = layout_s * layout_s * lam_norm;
    let (tn, un, wn) = t_nodes(dims, y_layout, x_frequency(p, layout_s), cfg);
    let vp = dims.vprime;
    let mut total = [ZERO; 4];
    let mut c = vec![0.0; vp];
    let mut bess = [0.0; 4];
    for ((t, u), wt) in tn.iter().zip(&un).zip(&wn) {
        for (cj, lam) in c.iter_mut().zip(&p.lambda) {
            *cj = 0.5 * lam * layout_s * layout_s * t * t;
        }
        let xn = x_nodes(p, &c, t * layout_s * p.r, cfg);
        // Σ_X w · e^{i t s r x_v} Π_j ℓ_{l_j}(λ_j ρ_j t² s² / 2)
        let mut g = [ZERO; 4];
        for (i, (xv, wx)) in xn.xv.iter().zip(&xn.w).enumerate() {
            let omega = t * p.r * xv;
            let ph = Complex64::from_polar(1.0, omega * s);
            let iw = Complex64::new(0.0, omega);
            let mut jet: Jet = [ph, ph * iw, ph * iw * iw * 0.5, ph * iw * iw * iw / 6.0];
            for j in 0..vp {
                let kappa = 0.5 * p.lambda[j] * xn.rho[i * vp + j] * t * t;
                let f = laguerre_fn_jet(p.l[j], kappa * s * s, order);
                let lj = real_jet(jet_compose(&f, 2.0 * kappa * s, kappa));
                jet = jet_mul(&jet, &lj, n);
            }
            for k in 0..n {
                g[k] += jet[k] * *wx;
            }
        }
        let beta = u * lam_norm;
        bessel.eval_into(beta * s * s, &mut bess[..n])?;
        let bj = real_jet(jet_compose(&bess, 2.0 * beta * s, beta));
        let prod = jet_mul(&g, &bj, n);
        for k in 0..n {
            total[k] += prod[k] * *wt;
        }
    }
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(n);
    for (k, t) in total.iter().enumerate().take(n) {
        if k > 0 {
            fact *= k as f64;
        }
        let d = t * fact;
        if !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::NonFinite(format!("pairing derivative {k} at s = {s}")));
        }
        out.push(d);
    }
    Ok(out)
}

/// `⟨μ_s, φ^{r,Λ,l}⟩` against the raw measure `μ`.
pub fn pairing_mu_s_phi(p: &SphericalParam, s: f64, cfg: &PairingConfig) -> Result<Complex64> {
    if !(s > 0.0) {
        return invalid(format!("radius must be positive, got {s}"));
    }
    Ok(pairing_jet(p, s, 0, s, cfg)?[0])
}

/// The same pairing by direct quadrature of `Θ(s.n)` over a Korányi sphere
/// rule.
pub fn pairing_mu_s_phi_rule(p: &SphericalParam, s: f64, rule: &KoranyiSphereRule) -> Result<Complex64> {
    if rule.dims != p.dims {
        return Err(Error::DimensionMismatch { expected: p.dims.v, got: rule.dims.v });
    }
    let mut xs = vec![0.0; p.dims.v];
    let mut as_ = vec![0.0; p.dims.z];
    rule.integrate(|x, a| {
        for (o, xi) in xs.iter_mut().zip(x) {
            *o = s * xi;
        }
        for (o, ai) in as_.iter_mut().zip(a) {
            *o = s * s * ai;
        }
        theta_parts(p, &xs, &as_)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivMethod {
    Analytic,
    FiniteDiff,
}

/// Step of the finite-difference route, relative to `max(s, natural scale)`.
pub const FD_REL_STEP: f64 = 2e-2;

/// `∂_s^j ⟨μ_s, φ⟩`, `1 ≤ j ≤ 3`.
///
/// The finite-difference route applies the 5-point central stencil for the
/// `j`-th derivative at steps `h` and `h/2` and Richardson-combines them,
/// with the quadrature layout frozen at `s`.
pub fn pairing_derivative(
    p: &SphericalParam,
    s: f64,
    j: usize,
    method: DerivMethod,
    cfg: &PairingConfig,
) -> Result<Complex64> {
    if !(1..=3).contains(&j) {
        return invalid(format!("derivative order must be 1..=3, got {j}"));
    }
    if !(s > 0.0) {
        return invalid(format!("radius must be positive, got {s}"));
    }
    match method {
        DerivMethod::Analytic => Ok(pairing_jet(p, s, j, s, cfg)?[j]),
        DerivMethod::FiniteDiff => {
            let h = FD_REL_STEP * s.max(p.natural_scale()).min(s * 0.2);
            let f = |x: f64| pairing_jet(p, x, 0, s, cfg).map(|v| v[0]);
            let stencil = |h: f64| -> Result<Complex64> {
                let (m2, m1, z0, p1, p2) = (f(s - 2.0 * h)?, f(s - h)?, f(s)?, f(s + h)?, f(s + 2.0 * h)?);
                Ok(match j {
                    1 => (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h),
                    2 => (-(m2 + p2) + (m1 + p1) * 16.0 - z0 * 30.0) / (12.0 * h * h),
                    _ => (p2 - m2 + (m1 - p1) * 2.0) / (2.0 * h * h * h),
                })
            };
            let coarse = stencil(h)?;
            let fine = stencil(0.5 * h)?;
            // j = 1, 2 stencils are fourth order, j = 3 second order
            let order = if j == 3 { 2 } else { 4 };
            let k = 2f64.powi(order);
            Ok((fine * k - coarse) / (k - 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{haar_orthogonal_seeded, orthogonal_act};
    use crate::quadrature::{koranyi_sphere_mass, RadialNodes, SphereRule};
    use rand::Rng;

    fn param(v: usize, r: f64, lambda: &[f64], l: &[usize]) -> SphericalParam {
        SphericalParam::new(Dimensions::new(v).unwrap(), r, lambda.to_vec(), l.to_vec()).unwrap()
    }

    #[test]
    fn parameter_validation_and_json() {
        let d4 = Dimensions::new(4).unwrap();
        assert!(SphericalParam::new(d4, 0.0, vec![1.0, 2.0], vec![0, 0]).is_err());
        assert!(SphericalParam::new(d4, 0.5, vec![2.0, 1.0], vec![0, 0]).is_err());
        assert!(SphericalParam::new(d4, 0.0, vec![2.0, 0.0], vec![0, 0]).is_err());
        let d5 = Dimensions::new(5).unwrap();
        assert!(SphericalParam::new(d5, 0.0, vec![2.0, 1.0], vec![0, 0]).is_err());
        let tie = SphericalParam::new(d4, 0.0, vec![1.0, 1.0], vec![0, 0]).unwrap();
        assert!(!tie.is_generic());
        let p = param(5, 0.7, &[2.0, 1.0], &[3, 0]);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"v\":5"));
        let back: SphericalParam = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<SphericalParam>(r#"{"v":4,"r":0,"lambda":[1,2],"l":[0,0]}"#).is_err());
    }

    #[test]
    fn d2_and_projections() {
        let d5 = Dimensions::new(5).unwrap();
        let a = d2_coords(d5, &[3.0, 4.0]).unwrap();
        assert_eq!(a[d5.pair_index(0, 1)], 3.0);
        assert_eq!(a[d5.pair_index(2, 3)], 4.0);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 25.0).abs() < 1e-14);
        assert_eq!(a.iter().filter(|x| **x != 0.0).count(), 2);
        assert_eq!(proj_pair(&[1.0, 0.0, 0.0], 1).unwrap(), [1.0, 0.0]);
        assert!(proj_pair(&[1.0, 0.0, 0.0], 2).is_err());
        let x = [0.3, -0.2, 0.5, 0.1, 0.9];
        let parts: f64 = (1..=2).map(|j| proj_pair(&x, j).unwrap().iter().map(|t| t * t).sum::<f64>()).sum();
        assert!((parts + x[4] * x[4] - x.iter().map(|t| t * t).sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn theta_examples() {
        let p = param(4, 0.0, &[2.0, 1.0], &[1, 3]);
        let id = GroupElement::identity(p.dims());
        assert_eq!(theta_eval(&p, &id).unwrap(), Complex64::new(1.0, 0.0));
        let lam = 1.7;
        let p2 = param(2, 0.0, &[lam], &[0]);
        let n = GroupElement::new(p2.dims(), vec![0.4, -0.9], vec![0.35]).unwrap();
        let expect = Complex64::from_polar((-lam * 0.97 / 4.0).exp(), lam * 0.35);
        assert!((theta_eval(&p2, &n).unwrap() - expect).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p5 = param(5, 1.3, &[3.0, 0.5], &[2, 7]);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert!(theta_parts(&p5, &x, &a).norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn phi_identity_and_invariance() {
        let p = param(4, 0.0, &[2.0, 1.0], &[1, 0]);
        let id = GroupElement::identity(p.dims());
        let e = phi_eval(&p, &id, 200, 1).unwrap();
        assert!((e.value - 1.0).norm() < 1e-14 && e.std_error < 1e-7);
        assert!(phi_eval(&p, &id, 99, 1).is_err());
        let n = GroupElement::new(p.dims(), vec![0.5, 0.2, -0.4, 0.3], vec![0.3, -0.2, 0.5, 0.1, 0.0, 0.4]).unwrap();
        let k0 = haar_orthogonal_seeded(4, 9);
        let moved = orthogonal_act(&k0, &n).unwrap();
        let a = phi_eval(&p, &n, 20_000, 2).unwrap();
        let b = phi_eval(&p, &moved, 20_000, 3).unwrap();
        let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).norm() < 4.0 * sigma + 1e-12);
        assert!(a.value.norm() <= 1.0 + 3.0 * a.std_error);
        // chunking does not change the estimate
        assert_eq!(phi_eval(&p, &n, 3000, 4).unwrap(), phi_eval(&p, &n, 3000, 4).unwrap());
    }

    #[test]
    fn x_nodes_reproduce_sphere_moments() {
        // E[ρ_1] = 2/v, E[x_v²] = 1/v on the sphere of ℝ^v
        for v in 2..=7 {
            let vp = v / 2;
            let p = if v % 2 == 1 {
                param(v, 1.0, &vec![1.0; vp], &vec![0; vp])
            } else {
                param(v, 0.0, &vec![1.0; vp], &vec![0; vp])
            };
            let xn = x_nodes(&p, &vec![0.0; vp], 0.0, &PairingConfig::default());
            let m0: f64 = xn.w.iter().sum();
            let m1: f64 = xn.w.iter().enumerate().map(|(i, w)| w * xn.rho[i * vp]).sum();
            let m2: f64 = xn.w.iter().zip(&xn.xv).map(|(w, x)| w * x * x).sum();
            assert!((m0 - 1.0).abs() < 1e-13, "v={v}");
            assert!((m1 - 2.0 / v as f64).abs() < 1e-13, "v={v}");
            let expect = if v % 2 == 1 { 1.0 / v as f64 } else { 0.0 };
            assert!((m2 - expect).abs() < 1e-13, "v={v}");
        }
    }

    #[test]
    fn pairing_small_s_limit_and_bound() {
        for (v, r) in [(2usize, 0.0), (3, 0.8), (4, 0.0), (5, 1.1)] {
            let vp = v / 2;
            let lam: Vec<f64> = (0..vp).map(|j| 2.0 / (j + 1) as f64).collect();
            let p = param(v, r, &lam, &vec![1; vp]);
            let mass = koranyi_sphere_mass(p.dims());
            let cfg = PairingConfig::default();
            let near0 = pairing_mu_s_phi(&p, 1e-4, &cfg).unwrap();
            assert!((near0 - mass).norm() < 1e-7, "v={v}: {near0} vs {mass}");
            for i in 1..=20 {
                let s = 0.25 * i as f64;
                assert!(pairing_mu_s_phi(&p, s, &cfg).unwrap().norm() <= mass * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn pairing_matches_sphere_rule_on_heisenberg() {
        // v = 2: S^2 is a circle, z = 1 two points; direct tensor rule
        let p = param(2, 0.0, &[1.5], &[2]);
        let dims = p.dims();
        let rule = KoranyiSphereRule::new(
            dims,
            RadialNodes::new(dims, 400).unwrap(),
            SphereRule::product(2, &[], 8).unwrap(),
            SphereRule::zero_sphere(),
        )
        .unwrap();
        for s in [0.5, 1.0, 2.5] {
            let a = pairing_mu_s_phi(&p, s, &PairingConfig::default()).unwrap();
            let b = pairing_mu_s_phi_rule(&p, s, &rule).unwrap();
            assert!((a - b).norm() < 1e-9, "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn scale_covariance() {
        let p = param(5, 0.9, &[2.0, 0.7], &[1, 2]);
        let cfg = PairingConfig::default();
        for t in [0.5, 2.0] {
            let q = p.scaled(t).unwrap();
            for s in [0.4, 1.3] {
                let a = pairing_mu_s_phi(&q, s, &cfg).unwrap();
                let b = pairing_mu_s_phi(&p, s * t, &cfg).unwrap();
                assert!((a - b).norm() < 1e-8, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn chain_rule_example() {
        // g(s) = f(s²), f(u) = u²: jet composition gives g'' = 12 s²
        let f = [1.0, 2.0, 2.0, 0.0];
        let jet = jet_compose(&f, 2.0, 1.0);
        assert!((2.0 * jet[2] - 12.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_analytic_vs_finite_difference() {
        let cfg = PairingConfig::default();
        for (p, s) in [
            (param(4, 0.0, &[2.0, 1.0], &[0, 1]), 0.9),
            (param(5, 1.2, &[1.5, 0.4], &[1, 0]), 1.4),
            (param(2, 0.0, &[1.0], &[3]), 1.1),
        ] {
            for j in 1..=3 {
                let a = pairing_derivative(&p, s, j, DerivMethod::Analytic, &cfg).unwrap();
                let b = pairing_derivative(&p, s, j, DerivMethod::FiniteDiff, &cfg).unwrap();
                assert!((a - b).norm() <= 1e-5 * a.norm().max(1e-3), "v={} j={j}: {a} vs {b}", p.dims().v);
            }
        }
        let p = param(4, 0.0, &[1e-9, 5e-10], &[0, 0]);
        let d = pairing_derivative(&p, 1.0, 1, DerivMethod::Analytic, &cfg).unwrap();
        assert!(d.norm() < 1e-8);
        assert!(pairing_derivative(&p, 1.0, 4, DerivMethod::Analytic, &cfg).is_err());
    }
}
