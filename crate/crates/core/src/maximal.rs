//! Grid experiments on `N_2`: spherical and ball averages, the maximal
//! operators `ℳ` and `𝒜`, the square function `S¹`, and the analytic family
//! `A^α`, `B^α_{h,j}`.
//!
//! Convolutions act on the right: `(f * μ_t)(n) = ∫ f(n · (δ_t m)^{-1}) dμ(m)`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::group::{n2_dilate, n2_inv, n2_mul, Dimensions, Point3};
use crate::quadrature::{gauss_legendre, gauss_legendre_panels, KoranyiSphereRule, Rule1D};
use crate::special_fn::{complex_gamma, gamma, gamma_ratio_estimate_check};

/// Homogeneous dimension of `N_2`.
pub const Q: f64 = 4.0;

fn dims2() -> Dimensions {
    Dimensions::new(2).expect("v = 2")
}

// ---------------------------------------------------------------------------
// Grids

/// Cell-centred grid on `[-L, L]³` in coordinates `(x₁, x₂, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() || n < 2 {
            return invalid(format!("grid needs L > 0 and n >= 2, got L = {half_width}, n = {n}"));
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn point(&self, idx: usize) -> Point3 {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Half-width of the node hull.
    fn hull(&self) -> f64 {
        self.half_width - 0.5 * self.spacing()
    }
}

/// Values on a [`Grid`], row-major in `(x₁, x₂, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

/// JSON description written next to the binary layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub v: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub spacing: f64,
    pub layout: String,
    pub dtype: String,
    pub header_bytes: usize,
}

const HEADER_BYTES: usize = 24;

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point3) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.point(i))).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|x| f(*x)).collect())
    }

    pub fn abs(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|x| x.abs()).collect() }
    }

    /// Header `v: u64, L: f64, n: u64` (little endian), then the values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 8 * self.values.len());
        out.extend_from_slice(&2u64.to_le_bytes());
        out.extend_from_slice(&self.grid.half_width.to_le_bytes());
        out.extend_from_slice(&(self.grid.n as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return invalid("grid file shorter than its header");
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
        let v = u64::from_le_bytes(word(0));
        if v != 2 {
            return Err(Error::Unsupported(format!("grid fields exist for v = 2 only, file has v = {v}")));
        }
        let grid = Grid::new(f64::from_le_bytes(word(1)), u64::from_le_bytes(word(2)) as usize)?;
        if bytes.len() != HEADER_BYTES + 8 * grid.len() {
            return invalid(format!("grid file has {} bytes, expected {}", bytes.len(), HEADER_BYTES + 8 * grid.len()));
        }
        let values = (0..grid.len()).map(|i| f64::from_le_bytes(word(3 + i))).collect();
        Self::new(grid, values)
    }

    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar {
            v: 2,
            half_width: self.grid.half_width,
            n: self.grid.n,
            spacing: self.grid.spacing(),
            layout: "row-major (x1, x2, a); node i at -L + (i + 1/2) * spacing".into(),
            dtype: "f64 little-endian".into(),
            header_bytes: HEADER_BYTES,
        }
    }
}

/// Something that can be evaluated anywhere on `N_2`.
pub trait Sample {
    fn sample(&self, p: Point3) -> f64;
}

impl Sample for GridField {
    /// Trilinear interpolation; the field is extended by zero past the
    /// outermost nodes.
    fn sample(&self, p: Point3) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n as isize;
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let s = (p[d] + g.half_width) / h - 0.5;
            let f = s.floor();
            base[d] = f as isize;
            frac[d] = s - f;
        }
        let inside = base.iter().all(|b| *b >= 0 && *b + 1 < n);
        if inside {
            let (i, j, k) = (base[0] as usize, base[1] as usize, base[2] as usize);
            let nn = g.n;
            let at = |di: usize, dj: usize, dk: usize| self.values[((i + di) * nn + j + dj) * nn + k + dk];
            let [fx, fy, fz] = frac;
            let c00 = at(0, 0, 0) * (1.0 - fz) + at(0, 0, 1) * fz;
            let c01 = at(0, 1, 0) * (1.0 - fz) + at(0, 1, 1) * fz;
            let c10 = at(1, 0, 0) * (1.0 - fz) + at(1, 0, 1) * fz;
            let c11 = at(1, 1, 0) * (1.0 - fz) + at(1, 1, 1) * fz;
            let c0 = c00 * (1.0 - fy) + c01 * fy;
            let c1 = c10 * (1.0 - fy) + c11 * fy;
            return c0 * (1.0 - fx) + c1 * fx;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = [0isize; 3];
            for d in 0..3 {
                let up = (corner >> d) & 1 == 1;
                idx[d] = base[d] + up as isize;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
            }
            if w == 0.0 || idx.iter().any(|i| *i < 0 || *i >= n) {
                continue;
            }
            acc += w * self.values[g.index(idx[0] as usize, idx[1] as usize, idx[2] as usize)];
        }
        acc
    }
}

/// A closure as a field.
pub struct FnField<F: Fn(Point3) -> f64>(pub F);

impl<F: Fn(Point3) -> f64> Sample for FnField<F> {
    fn sample(&self, p: Point3) -> f64 {
        (self.0)(p)
    }
}

struct AbsField<'a>(&'a dyn Sample);

impl Sample for AbsField<'_> {
    fn sample(&self, p: Point3) -> f64 {
        self.0.sample(p).abs()
    }
}

/// Sum of `k` Gaussian bumps with centres in `[-L/2, L/2]³`, widths in
/// `[0.4, 0.8]` and amplitudes in `[0.5, 1.5]`.
pub fn random_bumps(grid: Grid, k: usize, seed: u64) -> Result<GridField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = 0.5 * grid.half_width;
    let bumps: Vec<(Point3, f64, f64)> = (0..k)
        .map(|_| {
            let centre = [rng.gen_range(-c..c), rng.gen_range(-c..c), rng.gen_range(-c..c)];
            (centre, rng.gen_range(0.4..0.8), rng.gen_range(0.5..1.5))
        })
        .collect();
    GridField::from_fn(grid, |p| {
        bumps
            .iter()
            .map(|(m, s, a)| {
                let d2: f64 = (0..3).map(|i| (p[i] - m[i]).powi(2)).sum();
                a * (-d2 / (s * s)).exp()
            })
            .sum()
    })
}

/// Grid points whose spheres and balls of radius up to `radius` stay inside
/// the node hull.
#[derive(Debug, Clone, PartialEq)]
pub struct Interior {
    grid: Grid,
    radius: f64,
    indices: Vec<usize>,
}

impl Interior {
    pub fn new(grid: Grid, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return invalid(format!("radius must be >= 0, got {radius}"));
        }
        let indices: Vec<usize> = (0..grid.len()).filter(|i| Self::fits(&grid, grid.point(*i), radius)).collect();
        if indices.is_empty() {
            return Err(Error::Margin(format!(
                "no grid point of [-{0}, {0}]³ keeps a radius-{radius} sphere inside the grid",
                grid.half_width
            )));
        }
        Ok(Self { grid, radius, indices })
    }

    /// `n · (δ_s m)^{-1}` with `‖m‖ = 1`, `s ≤ r`, moves `x` by at most `r`
    /// and `a` by at most `r² + r‖x‖/2`.
    pub fn fits(grid: &Grid, p: Point3, r: f64) -> bool {
        let hull = grid.hull() + 1e-12;
        let nx = p[0].hypot(p[1]);
        p[0].abs() + r <= hull && p[1].abs() + r <= hull && p[2].abs() + r * r + 0.5 * r * nx <= hull
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn check(&self, r: f64) -> Result<()> {
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::Margin(format!("radius {r} exceeds the interior margin {}", self.radius)));
        }
        Ok(())
    }

    fn collect(&self, mut f: impl FnMut(Point3) -> Result<f64>) -> Result<GridField> {
        let mut values = vec![0.0; self.grid.len()];
        for &i in &self.indices {
            values[i] = f(self.grid.point(i))?;
        }
        GridField::new(self.grid, values)
    }
}

/// Korányi sphere nodes of `N_2` with raw `μ` weights.
#[derive(Debug, Clone)]
pub struct SphereNodes {
    nodes: Vec<(Point3, f64)>,
    mass: f64,
}

impl SphereNodes {
    pub fn new(rule: &KoranyiSphereRule) -> Result<Self> {
        if rule.dims.v != 2 {
            return Err(Error::Unsupported(format!("grid experiments need v = 2, got v = {}", rule.dims.v)));
        }
        let mut nodes = Vec::with_capacity(rule.len());
        rule.for_each(|x, a, w| nodes.push(([x[0], x[1], a[0]], w)));
        let mass = nodes.iter().map(|(_, w)| w).sum();
        Ok(Self { nodes, mass })
    }

    /// `nt` radial nodes per piece and `circle` points on `S¹`.
    pub fn standard(nt: usize, circle: usize) -> Result<Self> {
        Self::new(&KoranyiSphereRule::standard(dims2(), nt, circle, 0)?)
    }

    /// `μ(S_1)` as summed by the rule, so constants average exactly.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(f * μ_t)(n)` with raw `μ`.
    pub fn mean_at(&self, f: &dyn Sample, n: Point3, t: f64) -> f64 {
        self.nodes.iter().map(|(m, w)| w * f.sample(n2_mul(n, n2_inv(n2_dilate(t, *m))))).sum()
    }
}

/// `|B_1| = μ(S_1)/Q`.
pub fn unit_ball_volume(sphere: &SphereNodes) -> f64 {
    sphere.mass / Q
}

// ---------------------------------------------------------------------------
// Kernels and averages

/// `m^α(r) = 2(1 - r²)_+^{α-1}/Γ(α)`; zero at the poles `α ∈ -ℕ` and for
/// `r ≥ 1`.
pub fn m_alpha(r: f64, alpha: Complex64) -> Complex64 {
    if is_gamma_pole(alpha) || !(r < 1.0) || r < 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let g = complex_gamma(alpha.re, alpha.im).expect("not a pole");
    2.0 * ((alpha - 1.0) * (1.0 - r * r).ln()).exp() / g
}

pub fn is_gamma_pole(alpha: Complex64) -> bool {
    alpha.im == 0.0 && alpha.re <= 0.0 && alpha.re.fract() == 0.0
}

/// Kernel `K(‖n‖)` with `K = 0` past `support`.
#[derive(Clone)]
pub struct RadialKernel {
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: f64,
    rule: Rule1D,
}

impl std::fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialKernel").field("support", &self.support).finish()
    }
}

impl RadialKernel {
    /// `nodes` Gauss–Legendre nodes on `[0, support]` in `ρ`.
    pub fn new(profile: impl Fn(f64) -> f64 + Send + Sync + 'static, support: f64, nodes: usize) -> Result<Self> {
        if !(support > 0.0) || !support.is_finite() {
            return invalid(format!("kernel support must be positive, got {support}"));
        }
        let rule = gauss_legendre(nodes, 0.0, support)?;
        Ok(Self { profile: Arc::new(profile), support, rule })
    }

    /// `|B_1|^{-1} 1_{B_1}`.
    pub fn unit_ball(sphere: &SphereNodes) -> Result<Self> {
        let vol = unit_ball_volume(sphere);
        Self::new(move |r| if r <= 1.0 { 1.0 / vol } else { 0.0 }, 1.0, 8)
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho > self.support {
            0.0
        } else {
            (self.profile)(rho)
        }
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// `‖K‖_{L¹} = μ(S_1) ∫ K(ρ) ρ^{Q-1} dρ`.
    pub fn l1_norm(&self, sphere: &SphereNodes) -> f64 {
        let s: f64 = self.rule.nodes.iter().zip(&self.rule.weights).map(|(r, w)| w * self.eval(*r).abs() * r.powi(3)).sum();
        sphere.mass * s
    }

    /// Checks monotonicity on 1000 samples of `[0, support]`.
    pub fn is_nonincreasing(&self) -> bool {
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let v = self.eval(self.support * k as f64 / 1000.0);
            if v > prev * (1.0 + 1e-12) + 1e-300 {
                return false;
            }
            prev = v;
        }
        true
    }

    /// `(f * K_t)(n)`, `K_t(m) = t^{-Q} K(‖δ_{1/t} m‖)`, in polar form.
    pub fn conv_at(&self, f: &dyn Sample, n: Point3, t: f64, sphere: &SphereNodes) -> f64 {
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(r, w)| w * self.eval(*r) * r.powi(3) * sphere.mean_at(f, n, t * r))
            .sum()
    }
}

pub fn conv_radial_kernel(
    f: &dyn Sample,
    kernel: &RadialKernel,
    t: f64,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<GridField> {
    if !(t > 0.0) {
        return invalid(format!("scale must be positive, got {t}"));
    }
    interior.check(t * kernel.support)?;
    interior.collect(|p| Ok(kernel.conv_at(f, p, t, sphere)))
}

/// `f * μ_t` with raw `μ`.
pub fn spherical_average(f: &dyn Sample, t: f64, sphere: &SphereNodes, interior: &Interior) -> Result<GridField> {
    if !(t >= 0.0) {
        return invalid(format!("radius must be >= 0, got {t}"));
    }
    interior.check(t)?;
    interior.collect(|p| Ok(sphere.mean_at(f, p, t)))
}

/// Geometric radii `r₀ ρ^k`, `k = 0..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiiLadder {
    pub r0: f64,
    pub ratio: f64,
    pub k_max: usize,
}

impl RadiiLadder {
    pub fn new(r0: f64, ratio: f64, k_max: usize) -> Result<Self> {
        if !(r0 > 0.0) || !(ratio > 1.0) {
            return invalid(format!("ladder needs r0 > 0 and ratio > 1, got ({r0}, {ratio})"));
        }
        Ok(Self { r0, ratio, k_max })
    }

    /// Ladder from `r0` to at least `r_max` with the given ratio.
    pub fn spanning(r0: f64, r_max: f64, ratio: f64) -> Result<Self> {
        let k = ((r_max / r0).ln() / ratio.ln()).ceil().max(0.0) as usize;
        let ratio = if k == 0 { ratio } else { (r_max / r0).powf(1.0 / k as f64) };
        Self::new(r0, ratio, k)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.k_max).map(|k| self.r0 * self.ratio.powi(k as i32)).collect()
    }

    pub fn max(&self) -> f64 {
        self.r0 * self.ratio.powi(self.k_max as i32)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.r0 * c, self.ratio, self.k_max)
    }
}

/// `ℳf(n) = max_r |B(n, r)|^{-1} ∫_{B(n,r)} |f|` over the ladder.
pub fn standard_maximal(
    f: &dyn Sample,
    ladder: &RadiiLadder,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<GridField> {
    interior.check(ladder.max())?;
    let ball = RadialKernel::unit_ball(sphere)?;
    let af = AbsField(f);
    let radii = ladder.radii();
    interior.collect(|p| Ok(radii.iter().map(|r| ball.conv_at(&af, p, *r, sphere)).fold(0.0, f64::max)))
}

/// `𝒜f(n) = max_t (|f| * μ_t)(n) / μ(S_1)` over the ladder.
pub fn spherical_maximal(
    f: &dyn Sample,
    ladder: &RadiiLadder,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<GridField> {
    interior.check(ladder.max())?;
    let af = AbsField(f);
    let radii = ladder.radii();
    interior.collect(|p| Ok(radii.iter().map(|t| sphere.mean_at(&af, p, *t)).fold(0.0, f64::max) / sphere.mass))
}

/// `F(s_k) = (f * μ_{s_k})(n)` on `s_k = k s_max / steps`.
fn radial_profile(f: &dyn Sample, p: Point3, s_max: f64, steps: usize, sphere: &SphereNodes) -> Vec<f64> {
    (0..=steps).map(|k| sphere.mean_at(f, p, s_max * k as f64 / steps as f64)).collect()
}

/// `(Σ_k |∂_s F(s_k)|² s_k Δs)^{1/2}` with central differences (one-sided at
/// `s_max`, half weight).
fn s1_from_profile(prof: &[f64], ds: f64) -> f64 {
    let k_max = prof.len() - 1;
    let mut acc = 0.0;
    for k in 1..=k_max {
        let (d, w) = if k < k_max {
            ((prof[k + 1] - prof[k - 1]) / (2.0 * ds), 1.0)
        } else {
            ((3.0 * prof[k] - 4.0 * prof[k - 1] + prof[k - 2]) / (2.0 * ds), 0.5)
        };
        acc += w * d * d * k as f64 * ds * ds;
    }
    acc.sqrt()
}

/// `S¹f` truncated to `s ≤ s_max` (raw `μ`).
pub fn grid_square_function_s1(
    f: &dyn Sample,
    s_max: f64,
    steps: usize,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<GridField> {
    if steps < 2 || !(s_max > 0.0) {
        return invalid("S¹ needs s_max > 0 and at least 2 steps");
    }
    interior.check(s_max)?;
    let ds = s_max / steps as f64;
    interior.collect(|p| Ok(s1_from_profile(&radial_profile(f, p, s_max, steps, sphere), ds)))
}

// ---------------------------------------------------------------------------
// Pointwise estimate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckConfig {
    /// Radii `s_k = k s_max / steps` serve as the ladder for `𝒜` and `ℳ`
    /// and as the grid for `S¹`.
    pub s_max: f64,
    pub steps: usize,
    pub eps: f64,
}

impl Default for BoundCheckConfig {
    fn default() -> Self {
        Self { s_max: 1.0, steps: 32, eps: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub points: usize,
    pub satisfied: usize,
    pub fraction: f64,
    /// Largest `lhs / rhs` (1 means equality).
    pub worst_ratio: f64,
    /// `Q|B_1|`.
    pub q_b1: f64,
    pub config: BoundCheckConfig,
}

/// Weights for `∫_0^{s_k} ρ³ g(ρ) dρ`, `g` piecewise linear on the s-grid,
/// accumulated up to each `k`.
fn cumulative_cubic_weights(ds: f64, steps: usize) -> Vec<Vec<f64>> {
    // ∫_{a}^{a+ds} ρ³ (g_a (a+ds-ρ) + g_b (ρ-a))/ds dρ, split into the two ends
    let moment = |a: f64| -> (f64, f64) {
        let b = a + ds;
        let i4 = (b.powi(4) - a.powi(4)) / 4.0;
        let i5 = (b.powi(5) - a.powi(5)) / 5.0;
        ((b * i4 - i5) / ds, (i5 - a * i4) / ds)
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut w = vec![0.0; steps + 1];
    out.push(w.clone());
    for k in 0..steps {
        let (lo, hi) = moment(k as f64 * ds);
        w[k] += lo;
        w[k + 1] += hi;
        out.push(w.clone());
    }
    out
}

/// The two sides of the pointwise estimate at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    /// `max_k (|f| * μ_{s_k})(n)`, raw `μ`.
    pub a_raw: f64,
    /// `max_k` of the ball averages of `|f|`.
    pub m: f64,
    pub s1: f64,
    /// `Q|B_1| m + (2Q)^{-1/2} s1`.
    pub bound: f64,
    /// Largest per-rung `lhs / rhs`.
    pub worst_ratio: f64,
    /// Every rung within the `1 + ε` slack.
    pub satisfied: bool,
}

struct BoundKernel<'a> {
    cfg: BoundCheckConfig,
    ds: f64,
    weights: Vec<Vec<f64>>,
    sphere: &'a SphereNodes,
}

impl<'a> BoundKernel<'a> {
    fn new(cfg: &BoundCheckConfig, sphere: &'a SphereNodes) -> Result<Self> {
        if cfg.steps < 2 || !(cfg.s_max > 0.0) || !(cfg.eps >= 0.0) {
            return invalid("bound check needs s_max > 0, eps >= 0 and at least 2 steps");
        }
        let ds = cfg.s_max / cfg.steps as f64;
        Ok(Self { cfg: *cfg, ds, weights: cumulative_cubic_weights(ds, cfg.steps), sphere })
    }

    /// Rung `k` compares `(|f| * μ_{s_k})(n)` with `Q|B_1|` times the ball
    /// average over `B(n, s_k)` plus `(2Q)^{-1/2} S¹|f|(n)`.
    fn at(&self, f: &dyn Sample, p: Point3) -> BoundPoint {
        let vol = unit_ball_volume(self.sphere);
        let q_b1 = Q * vol;
        let prof = radial_profile(&AbsField(f), p, self.cfg.s_max, self.cfg.steps, self.sphere);
        let s1 = s1_from_profile(&prof, self.ds);
        let tail = s1 / (2.0 * Q).sqrt();
        let mut out = BoundPoint { a_raw: 0.0, m: 0.0, s1, bound: 0.0, worst_ratio: 0.0, satisfied: true };
        for k in 1..=self.cfg.steps {
            let s = k as f64 * self.ds;
            let ball = self.weights[k].iter().zip(&prof).map(|(w, g)| w * g).sum::<f64>() / (s.powi(4) * vol);
            let (lhs, rhs) = (prof[k], q_b1 * ball + tail);
            if rhs > 0.0 {
                out.worst_ratio = out.worst_ratio.max(lhs / rhs);
            } else if lhs > 0.0 {
                out.worst_ratio = f64::INFINITY;
            }
            out.satisfied &= lhs <= (1.0 + self.cfg.eps) * rhs;
            out.a_raw = out.a_raw.max(lhs);
            out.m = out.m.max(ball);
        }
        out.bound = q_b1 * out.m + tail;
        out
    }
}

/// The estimate at one point, for profiles and spot checks.
pub fn bound_at(f: &dyn Sample, p: Point3, cfg: &BoundCheckConfig, sphere: &SphereNodes) -> Result<BoundPoint> {
    Ok(BoundKernel::new(cfg, sphere)?.at(f, p))
}

/// Checks `𝒜f ≤ (1 + ε)(Q|B_1| ℳf + (2Q)^{-1/2} S¹|f|)` with raw `μ` at every
/// interior point, rung by rung.
pub fn pointwise_bound_check(
    f: &dyn Sample,
    cfg: &BoundCheckConfig,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<BoundCheckReport> {
    let kernel = BoundKernel::new(cfg, sphere)?;
    interior.check(cfg.s_max)?;
    let mut satisfied = 0;
    let mut worst: f64 = 0.0;
    for &i in interior.indices() {
        let b = kernel.at(f, interior.grid.point(i));
        satisfied += b.satisfied as usize;
        worst = worst.max(b.worst_ratio);
    }
    let points = interior.len();
    Ok(BoundCheckReport {
        points,
        satisfied,
        fraction: satisfied as f64 / points as f64,
        worst_ratio: worst,
        q_b1: Q * unit_ball_volume(sphere),
        config: *cfg,
    })
}

// ---------------------------------------------------------------------------
// Analytic family

/// Real and imaginary parts on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: GridField,
    pub im: GridField,
}

impl ComplexField {
    pub fn modulus(&self) -> GridField {
        let v = self.re.values.iter().zip(&self.im.values).map(|(a, b)| a.hypot(*b)).collect();
        GridField { grid: self.re.grid, values: v }
    }

    fn collect(interior: &Interior, mut f: impl FnMut(Point3) -> Result<Complex64>) -> Result<Self> {
        let mut re = vec![0.0; interior.grid.len()];
        let mut im = vec![0.0; interior.grid.len()];
        for &i in interior.indices() {
            let z = f(interior.grid.point(i))?;
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(Self { re: GridField::new(interior.grid, re)?, im: GridField::new(interior.grid, im)? })
    }
}

/// Radial quadrature on `[0, 1]` for kernels `(1 - r²)^{β}`: Gauss–Legendre
/// in `u` with `r = 1 - (1-u)^p`, `p` large enough to smooth the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialQuad {
    pub nodes: usize,
    /// Step of the 5-point stencils for `∂_r`.
    pub fd_step: f64,
}

impl Default for RadialQuad {
    fn default() -> Self {
        Self { nodes: 32, fd_step: 1e-3 }
    }
}

impl RadialQuad {
    /// Nodes and weights in `r` for `∫_0^1 (1-r²)^{e} g(r) dr`, `Re e > -1`.
    fn rule(&self, e: f64) -> Result<Vec<(f64, f64)>> {
        let p = if e >= 2.0 { 1.0 } else { (3.0 / (e + 1.0)).ceil() };
        let base = gauss_legendre_panels(&[0.0, 0.5, 1.0], self.nodes.div_ceil(2))?;
        Ok(base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(u, w)| {
                let r = 1.0 - (1.0 - u).powf(p);
                (r, w * p * (1.0 - u).powf(p - 1.0))
            })
            .collect())
    }
}

/// `∂_r^j (f * μ_r)(n)` by 5-point stencils (one-sided near `r = 0`).
fn radial_derivative(f: &dyn Sample, p: Point3, r: f64, j: usize, h: f64, sphere: &SphereNodes) -> Result<f64> {
    let at = |s: f64| sphere.mean_at(f, p, s);
    match j {
        0 => Ok(at(r)),
        1 if r >= 2.0 * h => Ok((at(r - 2.0 * h) - 8.0 * at(r - h) + 8.0 * at(r + h) - at(r + 2.0 * h)) / (12.0 * h)),
        1 => Ok((-25.0 * at(r) + 48.0 * at(r + h) - 36.0 * at(r + 2.0 * h) + 16.0 * at(r + 3.0 * h) - 3.0 * at(r + 4.0 * h)) / (12.0 * h)),
        2 if r >= 2.0 * h => Ok((-at(r - 2.0 * h) + 16.0 * at(r - h) - 30.0 * at(r) + 16.0 * at(r + h) - at(r + 2.0 * h))
            / (12.0 * h * h)),
        2 => Ok((35.0 * at(r) - 104.0 * at(r + h) + 114.0 * at(r + 2.0 * h) - 56.0 * at(r + 3.0 * h) + 11.0 * at(r + 4.0 * h))
            / (12.0 * h * h)),
        _ => Err(Error::Unsupported(format!("radial derivative of order {j} (max 2)"))),
    }
}

/// `A^α f(n) = ∫_0^1 m^α(r) (f * μ_r)(n) r^{Q-1} dr`, `Re α > 0`.
pub fn a_alpha_apply(
    f: &dyn Sample,
    alpha: Complex64,
    quad: &RadialQuad,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<ComplexField> {
    if !(alpha.re > 0.0) {
        return invalid(format!("the integral form of A^α needs Re α > 0, got {alpha}"));
    }
    interior.check(1.0)?;
    let g = complex_gamma(alpha.re, alpha.im)?;
    let rule = quad.rule(alpha.re - 1.0)?;
    // m^α(r) = 2 (1-r²)^{α-1}/Γ(α) = 2 (1+r)^{α-1} (1-r)^{α-1}/Γ(α); the
    // substitution absorbs (1-r)^{α-1} into the weights below
    ComplexField::collect(interior, |p| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, w) in &rule {
            acc += kernel_power(*r, alpha - 1.0) * (w * sphere.mean_at(f, p, *r) * r.powi(3));
        }
        Ok(acc * 2.0 / g)
    })
}

/// `(1 - r²)^{e}` for complex `e`, with `r < 1`.
fn kernel_power(r: f64, e: Complex64) -> Complex64 {
    (e * (1.0 - r * r).ln()).exp()
}

/// `B^α_{h,j} f(n) = ∫_0^1 m^{α+h}(r) r^{Q-1-2h+j} ∂_r^j (f * μ_r)(n) dr`.
pub fn b_hj_apply(
    f: &dyn Sample,
    alpha: Complex64,
    h: usize,
    j: usize,
    quad: &RadialQuad,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<ComplexField> {
    if j > h {
        return invalid(format!("need j <= h, got j = {j}, h = {h}"));
    }
    if !((2 * h) as f64) .lt(&Q) {
        return invalid(format!("need h < Q/2 = {}, got h = {h}", Q / 2.0));
    }
    let e = alpha + h as f64 - 1.0;
    if !(e.re > -1.0) {
        return invalid(format!("need Re α > -h, got α = {alpha}, h = {h}"));
    }
    let hstep = quad.fd_step;
    interior.check(1.0 + 4.0 * hstep)?;
    let rule = quad.rule(e.re)?;
    let ah = alpha + h as f64;
    let inv_g = if is_gamma_pole(ah) { Complex64::new(0.0, 0.0) } else { 1.0 / complex_gamma(ah.re, ah.im)? };
    let power = Q as i32 - 1 - 2 * h as i32 + j as i32;
    ComplexField::collect(interior, |p| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, w) in &rule {
            let d = radial_derivative(f, p, *r, j, hstep, sphere)?;
            acc += kernel_power(*r, e) * (w * r.powi(power) * d);
        }
        Ok(acc * 2.0 * inv_g)
    })
}

/// `½ (B^α_{1,1} + (Q - 2) B^α_{1,0})`, equal to `A^α` by one integration
/// by parts, and to `f * μ` at `α = 0`.
pub fn a_alpha_via_b(
    f: &dyn Sample,
    alpha: Complex64,
    quad: &RadialQuad,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<ComplexField> {
    let b11 = b_hj_apply(f, alpha, 1, 1, quad, sphere, interior)?;
    let b10 = b_hj_apply(f, alpha, 1, 0, quad, sphere, interior)?;
    combine(&b11, &b10, 0.5, 0.5 * (Q - 2.0))
}

/// `c₁ X + c₀ Y`.
pub fn combine(x: &ComplexField, y: &ComplexField, c1: f64, c0: f64) -> Result<ComplexField> {
    let lin = |a: &GridField, b: &GridField| {
        GridField::new(a.grid, a.values.iter().zip(&b.values).map(|(u, v)| c1 * u + c0 * v).collect())
    };
    Ok(ComplexField { re: lin(&x.re, &y.re)?, im: lin(&x.im, &y.im)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub x: f64,
    pub y: f64,
    /// `|Γ(x)/Γ(x+iy)|`.
    pub gamma_factor: f64,
    /// `C` from the Gamma ratio band on `x ∈ [x, x]`, `|y| ≤ y_max`.
    pub c_estimate: f64,
    /// `|Γ(x)/Γ(x+iy)| e^{-2|y|}`.
    pub c_observed: f64,
    pub gamma_bound_holds: bool,
    pub points: usize,
    pub violations: usize,
    /// `max |A^{x+iy} f| / (factor · A^x|f|)`.
    pub max_ratio: f64,
}

/// `|A^{x+iy} f| ≤ |Γ(x)/Γ(x+iy)| A^x|f|` on the interior, and the size of the
/// Gamma factor against `C e^{2|y|}`.
pub fn kernel_domination_check(
    f: &dyn Sample,
    x: f64,
    y: f64,
    quad: &RadialQuad,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<DominationReport> {
    if !(x >= 1.0) {
        return invalid(format!("domination check needs x >= 1, got {x}"));
    }
    let factor = |yy: f64| -> Result<f64> { Ok(gamma(x)?.abs() / complex_gamma(x, yy)?.norm()) };
    let gf = factor(y)?;
    let lhs = a_alpha_apply(f, Complex64::new(x, y), quad, sphere, interior)?.modulus();
    let af = AbsField(f);
    let rhs = a_alpha_apply(&af, Complex64::new(x, 0.0), quad, sphere, interior)?.re;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &i in interior.indices() {
        let (l, r) = (lhs.values[i], gf * rhs.values[i]);
        if l > r * (1.0 + 1e-9) + 1e-300 {
            violations += 1;
        }
        if r > 0.0 {
            max_ratio = max_ratio.max(l / r);
        }
    }
    // |1/Γ(x+iy)| ≤ c_max e^{π|y|/2} |y|^{1/2-x} for |y| ≥ 1
    let ymax = y.abs().max(1.0);
    let band = gamma_ratio_estimate_check([x, x], ymax.max(1.0 + 1e-9), 1, 200)?;
    let mut c_est: f64 = 0.0;
    for k in 0..=400 {
        let yy = ymax * k as f64 / 400.0;
        let bound = if yy >= 1.0 {
            gamma(x)? * band.c_max * (std::f64::consts::FRAC_PI_2 * yy).exp() * yy.powf(0.5 - x)
        } else {
            factor(yy)?
        };
        c_est = c_est.max(bound * (-2.0 * yy).exp());
    }
    Ok(DominationReport {
        x,
        y,
        gamma_factor: gf,
        c_estimate: c_est,
        c_observed: gf * (-2.0 * y.abs()).exp(),
        gamma_bound_holds: gf <= c_est * (2.0 * y.abs()).exp() * (1.0 + 1e-12),
        points: interior.len(),
        violations,
        max_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreasingKernelReport {
    pub kernel_l1: f64,
    pub points: usize,
    pub satisfied: usize,
    /// `max sup_r |f * K_r| / (‖K‖₁ ℳf)`.
    pub max_ratio: f64,
    pub eps: f64,
}

/// `sup_r |f * K_r|(n) ≤ (1 + ε) ‖K‖_{L¹} ℳf(n)` over the ladder for a
/// nonincreasing kernel.
pub fn decreasing_kernel_maximal_check(
    kernel: &RadialKernel,
    f: &dyn Sample,
    ladder: &RadiiLadder,
    eps: f64,
    sphere: &SphereNodes,
    interior: &Interior,
) -> Result<DecreasingKernelReport> {
    if !kernel.is_nonincreasing() {
        return invalid("kernel profile is not nonincreasing");
    }
    interior.check(ladder.max() * kernel.support.max(1.0))?;
    let l1 = kernel.l1_norm(sphere);
    let m = standard_maximal(f, ladder, sphere, interior)?;
    let radii = ladder.radii();
    let mut satisfied = 0;
    let mut max_ratio: f64 = 0.0;
    for &i in interior.indices() {
        let p = interior.grid.point(i);
        let sup = radii.iter().map(|r| kernel.conv_at(f, p, *r, sphere).abs()).fold(0.0, f64::max);
        let bound = l1 * m.values[i];
        if sup <= (1.0 + eps) * bound {
            satisfied += 1;
        }
        if bound > 0.0 {
            max_ratio = max_ratio.max(sup / bound);
        }
    }
    Ok(DecreasingKernelReport { kernel_l1: l1, points: interior.len(), satisfied, max_ratio, eps })
}
