//! Plancherel density, matrix elements of radial functions against
//! spherical functions, and a Plancherel identity check on `N_2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::group::Dimensions;
use crate::quadrature::{gauss_legendre, gauss_legendre_panels, Rule1D};
use crate::special_fn::{gamma, laguerre_fn, laguerre_fn_table, BesselOrder, ReducedBessel};
use crate::spherical::{x_nodes, PairingConfig, SphericalParam};

/// `η(Λ) = Π λ_i^{1 or 3} · Π_{j<k} (λ_j² - λ_k²)²` (cube for odd `v`).
pub fn eta_density(lambda: &[f64], v: usize) -> Result<f64> {
    let dims = Dimensions::new(v)?;
    if lambda.len() != dims.vprime {
        return Err(Error::DimensionMismatch { expected: dims.vprime, got: lambda.len() });
    }
    if lambda.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return invalid("λ must be finite and nonnegative");
    }
    let power = if dims.is_odd() { 3 } else { 1 };
    let mut out: f64 = lambda.iter().map(|x| x.powi(power)).product();
    for j in 0..lambda.len() {
        for k in j + 1..lambda.len() {
            out *= (lambda[j] * lambda[j] - lambda[k] * lambda[k]).powi(2);
        }
    }
    Ok(out)
}

/// A function `f(exp(X + A)) = u(‖X‖, ‖A‖)`, negligible outside the box
/// `[0, radius]²`.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    radius: f64,
    u: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("name", &self.name).field("radius", &self.radius).finish()
    }
}

impl RadialProfile {
    pub fn new(
        name: impl Into<String>,
        radius: f64,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return invalid(format!("decay radius must be positive, got {radius}"));
        }
        Ok(Self { name: name.into(), radius, u: Arc::new(u) })
    }

    /// `c · exp(-α ρ_x² - β ρ_a²)`.
    pub fn gaussian(spec: GaussianProfile) -> Result<Self> {
        let GaussianProfile { alpha, beta, amplitude } = spec;
        if !(alpha > 0.0 && beta > 0.0) {
            return invalid(format!("Gaussian widths must be positive, got ({alpha}, {beta})"));
        }
        // e^{-37} ≈ 1e-16
        let radius = (37.0 / alpha.min(beta)).sqrt();
        Self::new(spec.to_string(), radius, move |x, a| amplitude * (-alpha * x * x - beta * a * a).exp())
    }

    pub fn zero(radius: f64) -> Result<Self> {
        Self::new("zero", radius, |_, _| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, rho_x: f64, rho_a: f64) -> f64 {
        (self.u)(rho_x, rho_a)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let u = self.u.clone();
        Self { name: format!("{c}*{}", self.name), radius: self.radius, u: Arc::new(move |x, a| c * u(x, a)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl GaussianProfile {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, amplitude: 1.0 }
    }
}

impl fmt::Display for GaussianProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amplitude == 1.0 {
            write!(f, "gauss({}, {})", self.alpha, self.beta)
        } else {
            write!(f, "{}*gauss({}, {})", self.amplitude, self.alpha, self.beta)
        }
    }
}

/// `|S^{n-1}|`.
fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0).expect("positive argument")
}

/// Gauss–Legendre panels on `[0, hi]` of width at most `min(hi/8, π/freq)`.
fn oscillatory_rule(hi: f64, freq: f64, npp: usize) -> Result<Rule1D> {
    let width = (hi / 8.0).min(if freq > 0.0 { PI / freq } else { f64::INFINITY });
    let n = (hi / width).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|k| hi * k as f64 / n as f64).collect();
    gauss_legendre_panels(&breaks, npp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementConfig {
    pub nodes_per_panel: usize,
    /// Relative size of `u` on the edge of the box above which the
    /// truncation counts as too small.
    pub edge_tol: f64,
    pub pairing: PairingConfig,
}

impl Default for MatrixElementConfig {
    fn default() -> Self {
        Self { nodes_per_panel: 12, edge_tol: 1e-10, pairing: PairingConfig::default() }
    }
}

fn check_edge(f: &RadialProfile, tol: f64) -> Result<()> {
    let r = f.radius;
    let mut inner: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i in 0..=32 {
        let a = r * i as f64 / 32.0;
        for k in 0..=32 {
            inner = inner.max(f.eval(a, r * k as f64 / 32.0).abs());
        }
        edge = edge.max(f.eval(r, a).abs()).max(f.eval(a, r).abs());
    }
    if edge > tol * inner {
        return Err(Error::Tail(format!(
            "profile {} is {:.2e} of its maximum on the edge of [0, {r}]²",
            f.name,
            edge / inner
        )));
    }
    Ok(())
}

/// `∫_N f(n) Θ^{r,Λ,l}(n) dn` for a radial profile, as an iterated integral
/// in `(‖X‖, ‖A‖)`: the `X`-sphere average of `Θ` is taken with the pairing
/// nodes and the `A`-sphere average is `𝒥_{(z-2)/2}(‖D_2(Λ)‖ ‖A‖)`.
pub fn radial_matrix_element(f: &RadialProfile, p: &SphericalParam, cfg: &MatrixElementConfig) -> Result<Complex64> {
    check_edge(f, cfg.edge_tol)?;
    let dims = p.dims();
    let r = f.radius;
    let lam = p.lambda_norm();
    let lmax = *p.l().iter().max().unwrap_or(&0) as f64;
    let lam_max = p.lambda().iter().cloned().fold(0.0, f64::max);
    let fx = (2.0 * (lmax + 0.5) * lam_max).sqrt() + p.r();
    let rx = oscillatory_rule(r, fx, cfg.nodes_per_panel)?;
    let ra = oscillatory_rule(r, lam, cfg.nodes_per_panel)?;
    let bessel = ReducedBessel::new(BesselOrder::for_sphere(dims.z)?, 0)?;
    let mut jz = Vec::with_capacity(ra.len());
    let mut b = [0.0];
    for a in &ra.nodes {
        bessel.eval_into(lam * a, &mut b)?;
        jz.push(b[0] * a.powi(dims.z as i32 - 1));
    }
    let vp = dims.vprime;
    let mut c = vec![0.0; vp];
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, wx) in rx.nodes.iter().zip(&rx.weights) {
        for (cj, l) in c.iter_mut().zip(p.lambda()) {
            *cj = 0.5 * l * x * x;
        }
        let xn = x_nodes(p, &c, x * p.r(), &cfg.pairing);
        let mut g = Complex64::new(0.0, 0.0);
        for (i, (xv, w)) in xn.xv.iter().zip(&xn.w).enumerate() {
            let mut m = *w;
            for j in 0..vp {
                m *= laguerre_fn(p.l()[j], 0.5 * p.lambda()[j] * x * x * xn.rho[i * vp + j])?;
            }
            g += Complex64::from_polar(m, x * p.r() * xv);
        }
        let mut ua = 0.0;
        for ((a, wa), j) in ra.nodes.iter().zip(&ra.weights).zip(&jz) {
            ua += wa * f.eval(*x, *a) * j;
        }
        acc += g * (wx * x.powi(dims.v as i32 - 1) * ua);
    }
    Ok(acc * (sphere_area(dims.v) * sphere_area(dims.z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlancherelConfig {
    pub lambda_max: f64,
    pub l_max: usize,
    /// Width of the uniform λ-panels beyond `λ = lambda_geometric_end`.
    pub lambda_panel: f64,
    pub lambda_geometric_start: f64,
    pub lambda_geometric_end: f64,
    pub nodes_per_panel: usize,
    /// Gauss–Legendre nodes per axis for the Cartesian `‖f‖²`.
    pub lhs_nodes: usize,
    pub edge_tol: f64,
    /// Abort when the extrapolated tails exceed this fraction of the total.
    pub tail_tol: f64,
}

impl Default for PlancherelConfig {
    fn default() -> Self {
        Self {
            lambda_max: 16.0,
            l_max: 400,
            lambda_panel: 0.5,
            lambda_geometric_start: 1e-5,
            lambda_geometric_end: 0.5,
            nodes_per_panel: 8,
            lhs_nodes: 256,
            edge_tol: 1e-10,
            tail_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    pub name: String,
    pub lhs: f64,
    /// `∫ Σ_l |⟨f, φ^{λ,l}⟩|² λ dλ`, extrapolated tails included.
    pub rhs: f64,
    /// `|c · rhs - lhs| / lhs`.
    pub rel_err: f64,
    pub tails: TailBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    /// Contribution of `l = l_max`, as a fraction of the total.
    pub last_l_shell: f64,
    /// Contribution of the last λ-panel.
    pub last_lambda_panel: f64,
    /// Extrapolated `l > l_max` and `λ > λ_max` parts.
    pub l_tail: f64,
    pub lambda_tail: f64,
    /// Decay exponent of the `l`-shells near `l_max`.
    pub l_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub lambda_max: f64,
    pub l_max: usize,
    pub tail_bounds: Vec<TailBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelReport {
    pub fitted_constant: f64,
    pub profiles: Vec<ProfileResult>,
    pub truncation: Truncation,
}

/// `‖f‖²_{L²(N_2)}` by a Cartesian Gauss–Legendre product rule on the box.
pub fn l2_norm_sq_v2(f: &RadialProfile, nodes: usize) -> Result<f64> {
    let r = f.radius;
    let breaks: Vec<f64> = (0..=16).map(|k| -r + r * k as f64 / 8.0).collect();
    let rule = gauss_legendre_panels(&breaks, nodes.div_ceil(16))?;
    let mut acc = 0.0;
    for (x1, w1) in rule.nodes.iter().zip(&rule.weights) {
        for (x2, w2) in rule.nodes.iter().zip(&rule.weights) {
            let rx = x1.hypot(*x2);
            for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
                let u = f.eval(rx, a.abs());
                acc += w1 * w2 * wa * u * u;
            }
        }
    }
    Ok(acc)
}

/// `⟨f, φ^{λ,l}⟩` on `N_2` for `l = 0..=l_max` at once.
struct V2Elements {
    rx: Rule1D,
    ra: Rule1D,
    /// `u` on the `(ρ_x, ρ_a)` grid, row-major in `ρ_x`.
    table: Vec<f64>,
    l_max: usize,
}

impl V2Elements {
    fn new(f: &RadialProfile, lambda_max: f64, l_max: usize, npp: usize) -> Result<Self> {
        let r = f.radius;
        let rx = oscillatory_rule(r, (2.0 * (l_max as f64 + 0.5) * lambda_max).sqrt(), npp)?;
        let ra = oscillatory_rule(r, lambda_max, npp)?;
        let mut table = Vec::with_capacity(rx.len() * ra.len());
        for x in &rx.nodes {
            for a in &ra.nodes {
                table.push(f.eval(*x, *a));
            }
        }
        Ok(Self { rx, ra, table, l_max })
    }

    /// `4π ∫∫ u(ρ_x, ρ_a) ρ_x ℓ_l(λ ρ_x²/2) cos(λ ρ_a) dρ_a dρ_x`.
    fn eval(&self, lambda: f64, out: &mut [f64]) {
        let ca: Vec<f64> = self.ra.nodes.iter().zip(&self.ra.weights).map(|(a, w)| w * (lambda * a).cos()).collect();
        out.iter_mut().for_each(|x| *x = 0.0);
        let na = self.ra.len();
        for (i, (x, wx)) in self.rx.nodes.iter().zip(&self.rx.weights).enumerate() {
            let row = &self.table[i * na..(i + 1) * na];
            let ua: f64 = row.iter().zip(&ca).map(|(u, c)| u * c).sum();
            let pre = 4.0 * PI * wx * x * ua;
            if pre == 0.0 {
                continue;
            }
            for (o, l) in out.iter_mut().zip(laguerre_fn_table(self.l_max, 0.5 * lambda * x * x)) {
                *o += pre * l;
            }
        }
    }
}

fn lambda_breaks(cfg: &PlancherelConfig) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = cfg.lambda_geometric_start;
    while x < cfg.lambda_geometric_end {
        b.push(x);
        x *= 2.0;
    }
    let mut x = cfg.lambda_geometric_end;
    while x < cfg.lambda_max - 1e-12 {
        b.push(x);
        x += cfg.lambda_panel;
    }
    b.push(cfg.lambda_max);
    b
}

/// Right-hand side of the Plancherel identity for one profile on `N_2`.
pub fn plancherel_rhs_v2(f: &RadialProfile, cfg: &PlancherelConfig) -> Result<(f64, TailBounds)> {
    check_edge(f, cfg.edge_tol)?;
    if cfg.l_max < 8 || !(cfg.lambda_max > cfg.lambda_geometric_end) {
        return invalid("Plancherel truncation too small (need l_max >= 8, λ_max past the geometric panels)");
    }
    let el = V2Elements::new(f, cfg.lambda_max, cfg.l_max, cfg.nodes_per_panel)?;
    let breaks = lambda_breaks(cfg);
    let base = gauss_legendre(cfg.nodes_per_panel, 0.0, 1.0)?;
    let mut shells = vec![0.0; cfg.l_max + 1];
    let mut panels = Vec::with_capacity(breaks.len() - 1);
    let mut m = vec![0.0; cfg.l_max + 1];
    for w in breaks.windows(2) {
        let h = w[1] - w[0];
        let mut panel = 0.0;
        for (x, wx) in base.nodes.iter().zip(&base.weights) {
            let lam = w[0] + h * x;
            el.eval(lam, &mut m);
            for (s, v) in shells.iter_mut().zip(&m) {
                let c = h * wx * v * v * lam;
                *s += c;
                panel += c;
            }
        }
        panels.push(panel);
    }
    let body: f64 = shells.iter().sum();
    // shells decay like a power of l
    let l1 = 3 * cfg.l_max / 4;
    let l_decay = (shells[l1] / shells[cfg.l_max]).ln() / (cfg.l_max as f64 / l1 as f64).ln();
    if !(l_decay > 1.1) {
        return Err(Error::Tail(format!("l-shells decay like l^-{l_decay:.2}; the l-sum tail is not controlled")));
    }
    let lc = shells[cfg.l_max] * (cfg.l_max as f64).powf(l_decay);
    let l_tail = lc * (cfg.l_max as f64 + 0.5).powf(1.0 - l_decay) / (l_decay - 1.0);
    let n = panels.len();
    let rho = panels[n - 1] / panels[n - 2];
    let lambda_tail = if rho < 1.0 {
        panels[n - 1] * rho / (1.0 - rho)
    } else if panels[n - 1] <= 1e-12 * body {
        // roundoff floor
        panels[n - 1]
    } else {
        return Err(Error::Tail("λ-panels do not decrease toward λ_max".into()));
    };
    let total = body + l_tail + lambda_tail;
    let tails = TailBounds {
        last_l_shell: shells[cfg.l_max] / total,
        last_lambda_panel: panels[n - 1] / total,
        l_tail: l_tail / total,
        lambda_tail: lambda_tail / total,
        l_decay,
    };
    if tails.l_tail + tails.lambda_tail > cfg.tail_tol {
        return Err(Error::Tail(format!(
            "truncated part is {:.2}% of the total (l > {}: {:.2}%, λ > {}: {:.2}%)",
            100.0 * (tails.l_tail + tails.lambda_tail),
            cfg.l_max,
            100.0 * tails.l_tail,
            cfg.lambda_max,
            100.0 * tails.lambda_tail
        )));
    }
    Ok((total, tails))
}

/// Fits `c = ‖f₀‖² / RHS(f₀)` on the first profile and reports the residual
/// `|c · RHS(f) - ‖f‖²| / ‖f‖²` for every profile.
pub fn plancherel_check_v2(profiles: &[RadialProfile], cfg: &PlancherelConfig) -> Result<PlancherelReport> {
    if profiles.is_empty() {
        return invalid("need at least one profile");
    }
    let mut rows = Vec::with_capacity(profiles.len());
    for f in profiles {
        let lhs = l2_norm_sq_v2(f, cfg.lhs_nodes)?;
        let (rhs, tails) = plancherel_rhs_v2(f, cfg)?;
        rows.push((f.name().to_string(), lhs, rhs, tails));
    }
    let c = rows[0].1 / rows[0].2;
    let tail_bounds = rows.iter().map(|r| r.3).collect();
    let profiles = rows
        .into_iter()
        .map(|(name, lhs, rhs, tails)| ProfileResult { name, lhs, rhs, rel_err: (c * rhs - lhs).abs() / lhs, tails })
        .collect();
    Ok(PlancherelReport {
        fitted_constant: c,
        profiles,
        truncation: Truncation { lambda_max: cfg.lambda_max, l_max: cfg.l_max, tail_bounds },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherical::theta_parts;

    fn param(v: usize, r: f64, lambda: &[f64], l: &[usize]) -> SphericalParam {
        SphericalParam::new(Dimensions::new(v).unwrap(), r, lambda.to_vec(), l.to_vec()).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_density(&[3.0], 2).unwrap(), 3.0);
        assert_eq!(eta_density(&[2.0, 1.0], 4).unwrap(), 18.0);
        assert_eq!(eta_density(&[2.0, 1.0], 5).unwrap(), 72.0);
        assert_eq!(eta_density(&[0.0], 3).unwrap(), 0.0);
        assert!(eta_density(&[-1.0], 2).is_err());
        assert!(eta_density(&[1.0], 4).is_err());
        // second-order zero on the diagonal
        let lim = |e: f64| eta_density(&[1.0 + e, 1.0], 4).unwrap() / (e * e);
        assert!((lim(1e-4) / lim(1e-5) - 1.0).abs() < 1e-3 && lim(1e-5) > 1.0);
    }

    #[test]
    fn gaussian_matrix_element_closed_form() {
        let f = RadialProfile::gaussian(GaussianProfile::new(1.0, 1.0)).unwrap();
        let p = param(2, 0.0, &[1.0], &[0]);
        let got = radial_matrix_element(&f, &p, &MatrixElementConfig::default()).unwrap();
        let want = PI / 1.25 * PI.sqrt() * (-0.25f64).exp();
        assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-12, "{got} vs {want}");
        let z = RadialProfile::zero(3.0).unwrap();
        assert_eq!(radial_matrix_element(&z, &p, &MatrixElementConfig::default()).unwrap().norm(), 0.0);
        let wide = RadialProfile::new("wide", 2.0, |x, a| (-(x * x + a * a) / 10.0).exp()).unwrap();
        assert!(matches!(radial_matrix_element(&wide, &p, &MatrixElementConfig::default()), Err(Error::Tail(_))));
    }

    #[test]
    fn matrix_element_vs_cartesian_v2() {
        let f = RadialProfile::new("mixed", 7.0, |x, a| (1.0 + x * x) * (-x * x - 0.8 * a * a).exp() * (0.5 * x * a).cos()).unwrap();
        for (lam, l) in [(0.7, 0usize), (1.3, 2), (2.5, 5)] {
            let p = param(2, 0.0, &[lam], &[l]);
            let got = radial_matrix_element(&f, &p, &MatrixElementConfig::default()).unwrap();
            let rule = gauss_legendre_panels(&[-7.0, -3.5, 0.0, 3.5, 7.0], 30).unwrap();
            let mut want = Complex64::new(0.0, 0.0);
            for (x1, w1) in rule.nodes.iter().zip(&rule.weights) {
                for (x2, w2) in rule.nodes.iter().zip(&rule.weights) {
                    for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
                        let th = theta_parts(&p, &[*x1, *x2], &[*a]);
                        want += th * (w1 * w2 * wa * f.eval(x1.hypot(*x2), a.abs()));
                    }
                }
            }
            assert!((got - want).norm() < 1e-6 * want.norm().max(1e-3), "λ={lam} l={l}: {got} vs {want}");
            // real for real profiles on N_2
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_element_v3_gaussian() {
        // Θ = e^{i r x_3} e^{iλ a_12} ℓ_0(λ|pr X|²/2), u = e^{-|X|²-|A|²}
        let f = RadialProfile::gaussian(GaussianProfile::new(1.0, 1.0)).unwrap();
        let (r, lam) = (0.9, 1.4);
        let p = param(3, r, &[lam], &[0]);
        let got = radial_matrix_element(&f, &p, &MatrixElementConfig::default()).unwrap();
        let plane = PI / (1.0 + lam / 4.0);
        let line = PI.sqrt() * (-r * r / 4.0).exp();
        let center = PI.powf(1.5) * (-lam * lam / 4.0).exp();
        let want = plane * line * center;
        assert!((got.re - want).abs() < 1e-8 * want && got.im.abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn v2_fast_path_matches_general() {
        let f = RadialProfile::gaussian(GaussianProfile::new(0.5, 2.0)).unwrap();
        let el = V2Elements::new(&f, 4.0, 12, 12).unwrap();
        let mut m = vec![0.0; 13];
        el.eval(1.7, &mut m);
        for l in [0usize, 3, 12] {
            let p = param(2, 0.0, &[1.7], &[l]);
            let want = radial_matrix_element(&f, &p, &MatrixElementConfig::default()).unwrap().re;
            assert!((m[l] - want).abs() < 1e-9 * want.abs().max(1e-3), "l={l}: {} vs {want}", m[l]);
        }
    }

    #[test]
    fn plancherel_gaussians() {
        // For u = e^{-αρ_x² - βρ_a²}: ⟨f, φ^{λ,l}⟩ = π (α-λ/4)^l/(α+λ/4)^{l+1} · √(π/β) e^{-λ²/4β},
        // the l-sum is π²/(αλ) · (π/β) e^{-λ²/2β}, hence RHS = π³/(αβ) √(πβ/2) and
        // ‖f‖² = π/(2α) √(π/2β): c = 1/(2π²) for every (α, β).
        let cfg = PlancherelConfig::default();
        let specs = [GaussianProfile::new(1.0, 1.0), GaussianProfile::new(0.5, 2.0), GaussianProfile::new(2.0, 0.7)];
        let profiles: Vec<_> = specs.iter().map(|s| RadialProfile::gaussian(*s).unwrap()).collect();
        let rep = plancherel_check_v2(&profiles, &cfg).unwrap();
        let c = 1.0 / (2.0 * PI * PI);
        assert!((rep.fitted_constant / c - 1.0).abs() < 1e-3, "{}", rep.fitted_constant);
        for (row, s) in rep.profiles.iter().zip(&specs) {
            let lhs = PI / (2.0 * s.alpha) * (PI / (2.0 * s.beta)).sqrt();
            assert!((row.lhs / lhs - 1.0).abs() < 1e-10, "{} vs {lhs}", row.lhs);
            assert!(row.rel_err < 2e-3, "{row:?}");
            assert!(row.tails.last_l_shell < 1e-3 && row.tails.last_lambda_panel < 1e-3);
        }
        let one = plancherel_check_v2(&profiles[..1], &cfg).unwrap();
        assert!(one.profiles[0].rel_err < 1e-15);
        let doubled = plancherel_check_v2(&[profiles[0].scaled(2.0)], &cfg).unwrap();
        assert!((doubled.fitted_constant / rep.fitted_constant - 1.0).abs() < 1e-12);
    }
}
