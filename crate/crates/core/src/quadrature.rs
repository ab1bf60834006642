//! Quadrature: Gauss–Legendre, rules on Euclidean spheres, the Korányi sphere
//! measure and polar coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::error::{invalid, Error, Result};
use crate::group::Dimensions;
use crate::special_fn::beta_fn;

/// Values that can be accumulated by a quadrature sum.
pub trait Accum: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn is_finite_value(&self) -> bool;
}

impl Accum for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Accum for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

// ---------------------------------------------------------------------------
// 1-D rules

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: [f64; 2],
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T: Accum, F: FnMut(f64) -> T>(&self, mut f: F) -> T {
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(*x) * *w;
        }
        acc
    }

    /// Concatenation of rules on abutting intervals.
    pub fn concat(parts: &[Rule1D]) -> Result<Rule1D> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("no panels".into()))?;
        let mut out = Rule1D {
            nodes: Vec::new(),
            weights: Vec::new(),
            interval: [first.interval[0], parts[parts.len() - 1].interval[1]],
        };
        for p in parts {
            out.nodes.extend_from_slice(&p.nodes);
            out.weights.extend_from_slice(&p.weights);
        }
        Ok(out)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule with `npts` nodes on `[lo, hi]`.
pub fn gauss_legendre(npts: usize, lo: f64, hi: f64) -> Result<Rule1D> {
    if npts == 0 {
        return invalid("Gauss–Legendre rule needs at least one node");
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return invalid(format!("bad interval [{lo}, {hi}]"));
    }
    let (x, w) = gauss_legendre_unit(npts);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Ok(Rule1D {
        nodes: x.iter().map(|t| mid + half * t).collect(),
        weights: w.iter().map(|t| half * t).collect(),
        interval: [lo, hi],
    })
}

/// Composite Gauss–Legendre rule with `npts` nodes per panel between
/// consecutive breakpoints.
pub fn gauss_legendre_panels(breaks: &[f64], npts: usize) -> Result<Rule1D> {
    if breaks.len() < 2 {
        return invalid("need at least two breakpoints");
    }
    let panels: Result<Vec<Rule1D>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_legendre(npts, w[0], w[1]))
        .collect();
    Rule1D::concat(&panels?)
}

// ---------------------------------------------------------------------------
// Sphere rules

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereKind {
    ProductAngle,
    MonteCarlo,
}

/// One polar level of a product rule: `(cos θ, sin θ, weight)`.
#[derive(Debug, Clone, PartialEq)]
struct AngleLevel {
    cos: Vec<f64>,
    sin: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Product {
        levels: Vec<AngleLevel>,
        azimuth: usize,
    },
    Points {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
}

/// Quadrature for the normalized surface measure `σ_n` on the unit sphere of
/// `ℝ^n`. Product rules are iterated lazily.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    ambient_n: usize,
    kind: SphereKind,
    seed: Option<u64>,
    rotation: Option<DMatrix<f64>>,
    storage: Storage,
}

/// Polar level with density `sin^power θ` on `[0, π]`: Gauss–Legendre in
/// `cos θ` for odd powers (polynomial weight), midpoint in `θ` for even
/// powers (trigonometric polynomial).
fn polar_level(power: usize, m: usize) -> AngleLevel {
    let (cos, sin, raw): (Vec<f64>, Vec<f64>, Vec<f64>) = if power % 2 == 1 {
        let (u, w) = gauss_legendre_unit(m);
        let e = ((power - 1) / 2) as i32;
        let sin: Vec<f64> = u.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let raw = u.iter().zip(&w).map(|(c, w)| w * (1.0 - c * c).powi(e)).collect();
        (u.iter().map(|c| -c).collect(), sin, raw)
    } else {
        let th: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * PI / m as f64).collect();
        let sin: Vec<f64> = th.iter().map(|t| t.sin()).collect();
        let raw = sin.iter().map(|s| s.powi(power as i32)).collect();
        (th.iter().map(|t| t.cos()).collect(), sin, raw)
    };
    let total: f64 = raw.iter().sum();
    AngleLevel { cos, sin, weights: raw.iter().map(|w| w / total).collect() }
}

/// Sum and Monte-Carlo standard error of a sphere integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

impl SphereRule {
    /// Product rule over the polar angles (weight `sin^k θ` folded in) and a
    /// trapezoid azimuth.
    ///
    /// `polar[k]` is the node count at level `k`, outermost first; there are
    /// `n - 2` levels.
    pub fn product(n: usize, polar: &[usize], azimuth: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("sphere rules need n >= 2, got {n}"));
        }
        if polar.len() != n - 2 {
            return Err(Error::DimensionMismatch { expected: n - 2, got: polar.len() });
        }
        if azimuth == 0 || polar.iter().any(|&m| m == 0) {
            return invalid("zero-size level in product rule");
        }
        let levels = polar
            .iter()
            .enumerate()
            .map(|(k, &m)| polar_level(n - 2 - k, m))
            .collect();
        Ok(Self {
            ambient_n: n,
            kind: SphereKind::ProductAngle,
            seed: None,
            rotation: None,
            storage: Storage::Product { levels, azimuth },
        })
    }

    /// Equal-weight rule on normalized Gaussian directions.
    pub fn monte_carlo(n: usize, npts: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return invalid(format!("sphere rules need n >= 2, got {n}"));
        }
        if npts == 0 {
            return invalid("Monte-Carlo sphere rule needs points");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n * npts);
        let mut buf = vec![0.0; n];
        for _ in 0..npts {
            loop {
                for b in buf.iter_mut() {
                    *b = StandardNormal.sample(&mut rng);
                }
                let norm = buf.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm > 1e-300 {
                    points.extend(buf.iter().map(|t| t / norm));
                    break;
                }
            }
        }
        Ok(Self {
            ambient_n: n,
            kind: SphereKind::MonteCarlo,
            seed: Some(seed),
            rotation: None,
            storage: Storage::Points { points, weights: vec![1.0 / npts as f64; npts] },
        })
    }

    /// The two-point sphere `{±1}` of `ℝ`, needed for `z = 1`.
    pub fn zero_sphere() -> Self {
        Self {
            ambient_n: 1,
            kind: SphereKind::ProductAngle,
            seed: None,
            rotation: None,
            storage: Storage::Points { points: vec![1.0, -1.0], weights: vec![0.5, 0.5] },
        }
    }

    /// Same rule with its polar axis `e_1` carried onto `axis`.
    pub fn aligned_with(mut self, axis: &[f64]) -> Result<Self> {
        if axis.len() != self.ambient_n {
            return Err(Error::DimensionMismatch { expected: self.ambient_n, got: axis.len() });
        }
        let norm = axis.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return invalid("alignment axis must be nonzero");
        }
        let n = self.ambient_n;
        let u = DVector::from_iterator(n, axis.iter().map(|t| t / norm));
        // Householder reflection sending e_1 to u
        let mut w = u.clone();
        w[0] -= 1.0;
        let wn = w.norm_squared();
        let h = if wn < 1e-30 {
            DMatrix::identity(n, n)
        } else {
            DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / wn)
        };
        self.rotation = Some(h);
        Ok(self)
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn kind(&self) -> SphereKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Product { levels, azimuth } => {
                levels.iter().map(|l| l.weights.len()).product::<usize>() * azimuth
            }
            Storage::Points { weights, .. } => weights.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(point, weight)` for every node.
    pub fn for_each<F: FnMut(&[f64], f64)>(&self, mut f: F) {
        let n = self.ambient_n;
        let mut rotated = vec![0.0; n];
        let mut emit = |p: &[f64], w: f64| match &self.rotation {
            None => f(p, w),
            Some(r) => {
                for (i, out) in rotated.iter_mut().enumerate() {
                    *out = (0..n).map(|k| r[(i, k)] * p[k]).sum();
                }
                f(&rotated, w)
            }
        };
        match &self.storage {
            Storage::Points { points, weights } => {
                for (p, w) in points.chunks(n).zip(weights) {
                    emit(p, *w);
                }
            }
            Storage::Product { levels, azimuth } => {
                let mut point = vec![0.0; n];
                let mut idx = vec![0usize; levels.len()];
                let naz = *azimuth;
                let daz = 2.0 * PI / naz as f64;
                let az: Vec<(f64, f64)> =
                    (0..naz).map(|k| ((k as f64 * daz).cos(), (k as f64 * daz).sin())).collect();
                loop {
                    let mut radius = 1.0;
                    let mut weight = 1.0 / naz as f64;
                    for (k, level) in levels.iter().enumerate() {
                        let i = idx[k];
                        point[k] = radius * level.cos[i];
                        radius *= level.sin[i];
                        weight *= level.weights[i];
                    }
                    for &(c, s) in &az {
                        point[n - 2] = radius * c;
                        point[n - 1] = radius * s;
                        emit(&point, weight);
                    }
                    // odometer over the polar levels
                    let mut k = levels.len();
                    loop {
                        if k == 0 {
                            return;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < levels[k].weights.len() {
                            break;
                        }
                        idx[k] = 0;
                    }
                    if levels.is_empty() {
                        return;
                    }
                }
            }
        }
    }

    pub fn integrate<T: Accum, F: FnMut(&[f64]) -> T>(&self, mut f: F) -> T {
        let mut acc = T::zero();
        self.for_each(|p, w| acc = acc + f(p) * w);
        acc
    }

    /// Real integral with a standard error for Monte-Carlo rules.
    pub fn integrate_with_error<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> SphereEstimate {
        let mut sum = 0.0;
        let mut sq = 0.0;
        self.for_each(|p, w| {
            let v = f(p);
            sum += w * v;
            sq += w * v * v;
        });
        let std_error = match self.kind {
            SphereKind::MonteCarlo => {
                let n = self.len() as f64;
                Some(((sq - sum * sum).max(0.0) / (n - 1.0).max(1.0)).sqrt())
            }
            SphereKind::ProductAngle => None,
        };
        SphereEstimate { value: sum, std_error }
    }

    /// Materialized serializable form.
    pub fn to_json_rule(&self) -> SphereRuleJson {
        let mut nodes = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        self.for_each(|p, w| {
            nodes.push(p.to_vec());
            weights.push(w);
        });
        SphereRuleJson { kind: self.kind, n: self.ambient_n, nodes, weights, seed: self.seed }
    }

    pub fn from_json_rule(rule: &SphereRuleJson) -> Result<Self> {
        if rule.nodes.len() != rule.weights.len() {
            return Err(Error::DimensionMismatch { expected: rule.nodes.len(), got: rule.weights.len() });
        }
        let mut points = Vec::with_capacity(rule.n * rule.nodes.len());
        for p in &rule.nodes {
            if p.len() != rule.n {
                return Err(Error::DimensionMismatch { expected: rule.n, got: p.len() });
            }
            points.extend_from_slice(p);
        }
        Ok(Self {
            ambient_n: rule.n,
            kind: rule.kind,
            seed: rule.seed,
            rotation: None,
            storage: Storage::Points { points, weights: rule.weights.clone() },
        })
    }
}

/// JSON layout of a sphere rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRuleJson {
    pub kind: SphereKind,
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
}

/// Ambient dimension above which `sphere_rule` switches to Monte-Carlo.
pub const PRODUCT_RULE_MAX_N: usize = 6;

/// Sphere rule of roughly `target_points` nodes for the sphere of `ℝ^n`.
///
/// `kind = None` picks a product rule up to `ℝ^6` and Monte-Carlo above.
pub fn sphere_rule(n: usize, target_points: usize, kind: Option<SphereKind>, seed: u64) -> Result<SphereRule> {
    if n < 2 {
        return invalid(format!("sphere rules need n >= 2, got {n}"));
    }
    let kind = kind.unwrap_or(if n <= PRODUCT_RULE_MAX_N {
        SphereKind::ProductAngle
    } else {
        SphereKind::MonteCarlo
    });
    match kind {
        SphereKind::MonteCarlo => SphereRule::monte_carlo(n, target_points.max(2), seed),
        SphereKind::ProductAngle => {
            // m polar nodes per level, 2m azimuth nodes
            let m = ((target_points.max(2) as f64 / 2.0).powf(1.0 / (n as f64 - 1.0))).round().max(1.0) as usize;
            SphereRule::product(n, &vec![m; n - 2], 2 * m)
        }
    }
}

// ---------------------------------------------------------------------------
// Korányi sphere

/// `t`-nodes of the Korányi sphere rule with the density
/// `2 t^{v-1}(1-t⁴)^{(z-2)/2}` folded into the weights; `u = √(1-t⁴)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialNodes {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialNodes {
    /// Gauss–Legendre in `t` when the exponent `(z-2)/2` is an integer;
    /// otherwise a split at `t = 4/5` with `t = (1-u²)^{1/4}` on the upper
    /// piece, which turns the endpoint factor into `u^{z-1}`.
    pub fn new(dims: Dimensions, npts: usize) -> Result<Self> {
        let v = dims.v as f64;
        let z = dims.z;
        let e = (z as f64 - 2.0) / 2.0;
        let mut out = RadialNodes { t: Vec::new(), u: Vec::new(), weights: Vec::new() };
        if z % 2 == 0 {
            let rule = gauss_legendre(npts, 0.0, 1.0)?;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let u2 = 1.0 - t.powi(4);
                out.t.push(*t);
                out.u.push(u2.sqrt());
                out.weights.push(2.0 * w * t.powf(v - 1.0) * u2.powf(e));
            }
        } else {
            let ts = 0.8f64;
            let lower = gauss_legendre(npts, 0.0, ts)?;
            for (t, w) in lower.nodes.iter().zip(&lower.weights) {
                let u2 = 1.0 - t.powi(4);
                out.t.push(*t);
                out.u.push(u2.sqrt());
                out.weights.push(2.0 * w * t.powf(v - 1.0) * u2.powf(e));
            }
            let umax = (1.0 - ts.powi(4)).sqrt();
            let upper = gauss_legendre(npts, 0.0, umax)?;
            for (u, w) in upper.nodes.iter().zip(&upper.weights) {
                let one = 1.0 - u * u;
                out.t.push(one.powf(0.25));
                out.u.push(*u);
                // 2 · ½ u^{z-1} (1-u²)^{(v-4)/4}
                out.weights.push(w * u.powi(z as i32 - 1) * one.powf((v - 4.0) / 4.0));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `μ(S_1) = ½ B(v/4, z/2)`.
pub fn koranyi_sphere_mass(dims: Dimensions) -> f64 {
    0.5 * beta_fn(dims.v as f64 / 4.0, dims.z as f64 / 2.0).expect("positive arguments")
}

/// Tensor rule for the Korányi sphere measure `μ` on `S_1`.
#[derive(Debug, Clone)]
pub struct KoranyiSphereRule {
    pub dims: Dimensions,
    pub t_rule: RadialNodes,
    pub x_rule: SphereRule,
    pub z_rule: SphereRule,
    /// Analytic mass `½ B(v/4, z/2)`.
    pub total_mass: f64,
}

impl KoranyiSphereRule {
    pub fn new(dims: Dimensions, t_rule: RadialNodes, x_rule: SphereRule, z_rule: SphereRule) -> Result<Self> {
        if x_rule.ambient_n() != dims.v {
            return Err(Error::DimensionMismatch { expected: dims.v, got: x_rule.ambient_n() });
        }
        if z_rule.ambient_n() != dims.z {
            return Err(Error::DimensionMismatch { expected: dims.z, got: z_rule.ambient_n() });
        }
        Ok(Self { dims, t_rule, x_rule, z_rule, total_mass: koranyi_sphere_mass(dims) })
    }

    /// Default rule: `nt` radial nodes, product/MC sphere rules of about
    /// `sphere_points` nodes each.
    pub fn standard(dims: Dimensions, nt: usize, sphere_points: usize, seed: u64) -> Result<Self> {
        let z_rule = if dims.z == 1 {
            SphereRule::zero_sphere()
        } else {
            sphere_rule(dims.z, sphere_points, None, seed.wrapping_add(1))?
        };
        Self::new(dims, RadialNodes::new(dims, nt)?, sphere_rule(dims.v, sphere_points, None, seed)?, z_rule)
    }

    pub fn len(&self) -> usize {
        self.t_rule.len() * self.x_rule.len() * self.z_rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(x, a, weight)` for every node `exp(tX + uZ)` of `S_1`.
    pub fn for_each<F: FnMut(&[f64], &[f64], f64)>(&self, mut f: F) {
        let mut x = vec![0.0; self.dims.v];
        let mut a = vec![0.0; self.dims.z];
        let zpts: Vec<(Vec<f64>, f64)> = {
            let mut v = Vec::with_capacity(self.z_rule.len());
            self.z_rule.for_each(|p, w| v.push((p.to_vec(), w)));
            v
        };
        for ((t, u), wt) in self.t_rule.t.iter().zip(&self.t_rule.u).zip(&self.t_rule.weights) {
            self.x_rule.for_each(|xp, wx| {
                for (xi, pi) in x.iter_mut().zip(xp) {
                    *xi = t * pi;
                }
                for (zp, wz) in &zpts {
                    for (ai, pi) in a.iter_mut().zip(zp) {
                        *ai = u * pi;
                    }
                    f(&x, &a, wt * wx * wz);
                }
            });
        }
    }

    /// Integral of `f(x, a)` against the raw measure `μ`.
    pub fn integrate<T: Accum, F: FnMut(&[f64], &[f64]) -> T>(&self, mut f: F) -> Result<T> {
        let mut acc = T::zero();
        self.for_each(|x, a, w| acc = acc + f(x, a) * w);
        if !acc.is_finite_value() {
            return Err(Error::NonFinite("Korányi sphere integral".into()));
        }
        Ok(acc)
    }

    /// Integral against the normalized measure `μ / μ(S_1)`.
    pub fn integrate_normalized<T: Accum, F: FnMut(&[f64], &[f64]) -> T>(&self, f: F) -> Result<T> {
        Ok(self.integrate(f)? * (1.0 / self.total_mass))
    }
}

/// `∫_{S_1} f dμ` with the raw measure.
pub fn koranyi_sphere_integrate<T: Accum, F: FnMut(&[f64], &[f64]) -> T>(
    rule: &KoranyiSphereRule,
    f: F,
) -> Result<T> {
    rule.integrate(f)
}

/// `∫_0^R ∫_{S_1} f(r.n) dμ(n) r^{Q-1} dr`.
///
/// With `σ` normalized on both spheres this is the integral against Haar
/// measure `dx da / (|S^{v-1}| |S^{z-1}|)`.
pub fn polar_integrate<F: FnMut(&[f64], &[f64]) -> f64>(
    mut f: F,
    r_rule: &Rule1D,
    sphere: &KoranyiSphereRule,
) -> Result<f64> {
    let q = sphere.dims.q as i32;
    let mut xs = vec![0.0; sphere.dims.v];
    let mut as_ = vec![0.0; sphere.dims.z];
    let mut total = 0.0;
    for (r, wr) in r_rule.nodes.iter().zip(&r_rule.weights) {
        let r2 = r * r;
        let mut inner = 0.0;
        sphere.for_each(|x, a, w| {
            for (o, xi) in xs.iter_mut().zip(x) {
                *o = r * xi;
            }
            for (o, ai) in as_.iter_mut().zip(a) {
                *o = r2 * ai;
            }
            inner += w * f(&xs, &as_);
        });
        total += wr * r.powi(q - 1) * inner;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("polar integral".into()));
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Plane waves

/// `∫_{S^{n-1}} e^{i⟨x, ξ⟩} dσ(ξ)` by quadrature against `𝒥_{(n-2)/2}(‖x‖)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveCheck {
    pub n: usize,
    pub xnorm: f64,
    pub kind: SphereKind,
    pub points: usize,
    pub quadrature: f64,
    /// Imaginary part of the quadrature, zero by symmetry.
    pub quadrature_im: f64,
    pub exact: f64,
    pub abs_err: f64,
    pub std_error: Option<f64>,
    /// Absolute tolerance for product rules, `3σ` for Monte Carlo.
    pub tolerance: f64,
    pub passed: bool,
}

/// Absolute tolerance of [`plane_wave_check`] on product rules.
pub const PLANE_WAVE_TOL: f64 = 1e-6;

/// Plane-wave check in a random direction. For `n ≤ 6` a product rule
/// aligned with `x` (with `⌈‖x‖⌉ + 24` nodes on the polar angle) is used; for
/// larger `n` a Monte-Carlo rule with `mc_points` points.
pub fn plane_wave_check(n: usize, xnorm: f64, mc_points: usize, seed: u64) -> Result<PlaneWaveCheck> {
    if !(xnorm >= 0.0) || !xnorm.is_finite() {
        return invalid(format!("‖x‖ must be finite and >= 0, got {xnorm}"));
    }
    let exact = crate::special_fn::sphere_plane_wave(n, xnorm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 1e-3 {
            break g.iter().map(|t| t / norm).collect();
        }
    };
    let rule = if n <= PRODUCT_RULE_MAX_N {
        let mut polar = vec![2; n - 2];
        let m = xnorm.ceil() as usize + 24;
        if let Some(first) = polar.first_mut() {
            *first = m;
        }
        let azimuth = if n == 2 { 2 * m } else { 4 };
        SphereRule::product(n, &polar, azimuth)?.aligned_with(&dir)?
    } else {
        SphereRule::monte_carlo(n, mc_points.max(2), seed.wrapping_add(1))?
    };
    let x: Vec<f64> = dir.iter().map(|d| xnorm * d).collect();
    let dot = |p: &[f64]| p.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    let est = rule.integrate_with_error(|p| dot(p).cos());
    let im = rule.integrate(|p| dot(p).sin());
    let abs_err = (est.value - exact).abs();
    let tolerance = match est.std_error {
        Some(se) => 3.0 * se,
        None => PLANE_WAVE_TOL,
    };
    Ok(PlaneWaveCheck {
        n,
        xnorm,
        kind: rule.kind(),
        points: rule.len(),
        quadrature: est.value,
        quadrature_im: im,
        exact,
        abs_err,
        std_error: est.std_error,
        tolerance,
        passed: abs_err <= tolerance,
    })
}
