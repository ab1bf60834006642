//! The free two-step nilpotent Lie algebra and group with `v` generators.
//!
//! Points are stored in exponential coordinates: a vector `x` in the span of
//! the generators `X_1..X_v` and a vector `a` in the center, expressed in the
//! basis `X_{i,j} = [X_i, X_j]`, `i < j`, ordered lexicographically.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `kᵀk = I` accepted by [`orthogonal_act`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Derived dimensions of `N_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Number of generators.
    pub v: usize,
    /// `floor(v / 2)`.
    pub vprime: usize,
    /// Dimension of the center, `v(v-1)/2`.
    pub z: usize,
    /// Homogeneous dimension `v + 2z = v²`.
    pub q: usize,
    /// Topological dimension `v + z`.
    pub topdim: usize,
}

impl Dimensions {
    pub fn new(v: usize) -> Result<Self> {
        if v < 2 {
            return invalid(format!("need at least two generators, got v = {v}"));
        }
        let z = v * (v - 1) / 2;
        Ok(Self {
            v,
            vprime: v / 2,
            z,
            q: v + 2 * z,
            topdim: v + z,
        })
    }

    pub fn is_odd(&self) -> bool {
        self.v % 2 == 1
    }

    /// Index of the center coordinate `X_{i,j}` (0-based, `i < j`).
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.v);
        i * self.v - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Inverse of [`Dimensions::pair_index`].
    pub fn pair_of(&self, idx: usize) -> (usize, usize) {
        let mut rem = idx;
        for i in 0..self.v {
            let row = self.v - i - 1;
            if rem < row {
                return (i, i + 1 + rem);
            }
            rem -= row;
        }
        panic!("center index {idx} out of range for v = {}", self.v)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.v {
            return Err(Error::DimensionMismatch {
                expected: self.v,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_a(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.z {
            return Err(Error::DimensionMismatch {
                expected: self.z,
                got: a.len(),
            });
        }
        Ok(())
    }
}

/// An element `X + A` of the Lie algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    dims: Dimensions,
    x: Vec<f64>,
    a: Vec<f64>,
}

impl AlgebraElement {
    pub fn new(dims: Dimensions, x: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        dims.check_x(&x)?;
        dims.check_a(&a)?;
        if x.iter().chain(a.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("algebra element coordinates".into()));
        }
        Ok(Self { dims, x, a })
    }

    pub fn zero(dims: Dimensions) -> Self {
        Self {
            dims,
            x: vec![0.0; dims.v],
            a: vec![0.0; dims.z],
        }
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Lie bracket; only the `V × V` part contributes in a two-step algebra.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.v,
                got: other.dims.v,
            });
        }
        let a = bracket(&self.x, &other.x, self.dims)?;
        Ok(Self {
            dims: self.dims,
            x: vec![0.0; self.dims.v],
            a,
        })
    }
}

/// A point `exp(X + A)` of `N_v` in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement(AlgebraElement);

impl GroupElement {
    pub fn new(dims: Dimensions, x: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        AlgebraElement::new(dims, x, a).map(Self)
    }

    pub fn exp(element: AlgebraElement) -> Self {
        Self(element)
    }

    pub fn log(&self) -> &AlgebraElement {
        &self.0
    }

    pub fn identity(dims: Dimensions) -> Self {
        Self(AlgebraElement::zero(dims))
    }

    pub fn dims(&self) -> Dimensions {
        self.0.dims
    }

    pub fn x(&self) -> &[f64] {
        &self.0.x
    }

    pub fn a(&self) -> &[f64] {
        &self.0.a
    }

    pub fn inverse(&self) -> Self {
        Self(AlgebraElement {
            dims: self.0.dims,
            x: self.0.x.iter().map(|c| -c).collect(),
            a: self.0.a.iter().map(|c| -c).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        multiply(self, other)
    }

    pub fn norm(&self) -> f64 {
        koranyi_norm(self)
    }
}

/// `[X, X']` in center coordinates: entry `(i,j)` is `x_i x'_j - x_j x'_i`.
pub fn bracket(x: &[f64], xp: &[f64], dims: Dimensions) -> Result<Vec<f64>> {
    dims.check_x(x)?;
    dims.check_x(xp)?;
    let mut out = Vec::with_capacity(dims.z);
    for i in 0..dims.v {
        for j in (i + 1)..dims.v {
            out.push(x[i] * xp[j] - x[j] * xp[i]);
        }
    }
    Ok(out)
}

/// Two-step Baker–Campbell–Hausdorff law:
/// `exp(X+A) exp(X'+A') = exp(X+X' + A+A' + ½[X,X'])`.
pub fn multiply(n: &GroupElement, m: &GroupElement) -> Result<GroupElement> {
    let dims = n.dims();
    if m.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims.v,
            got: m.dims().v,
        });
    }
    let br = bracket(n.x(), m.x(), dims)?;
    let x = n.x().iter().zip(m.x()).map(|(p, q)| p + q).collect();
    let a = n
        .a()
        .iter()
        .zip(m.a())
        .zip(&br)
        .map(|((p, q), b)| p + q + 0.5 * b)
        .collect();
    Ok(GroupElement(AlgebraElement { dims, x, a }))
}

/// `r.n = exp(rX + r²A)`.
pub fn dilate(r: f64, n: &GroupElement) -> Result<GroupElement> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("dilation factor must be positive, got {r}"));
    }
    let r2 = r * r;
    Ok(GroupElement(AlgebraElement {
        dims: n.dims(),
        x: n.x().iter().map(|c| r * c).collect(),
        a: n.a().iter().map(|c| r2 * c).collect(),
    }))
}

/// `(‖X‖⁴ + ‖A‖²)^{1/4}` with Euclidean coordinate norms.
pub fn koranyi_norm(n: &GroupElement) -> f64 {
    let x2: f64 = n.x().iter().map(|c| c * c).sum();
    let a2: f64 = n.a().iter().map(|c| c * c).sum();
    (x2 * x2 + a2).sqrt().sqrt()
}

/// A `v × v` antisymmetric matrix identified with a center vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    /// `M_ij = a_(i,j)`, `M_ji = -a_(i,j)` for `i < j`.
    pub fn from_coords(a: &[f64], dims: Dimensions) -> Result<Self> {
        dims.check_a(a)?;
        let mut m = DMatrix::zeros(dims.v, dims.v);
        for (idx, &val) in a.iter().enumerate() {
            let (i, j) = dims.pair_of(idx);
            m[(i, j)] = val;
            m[(j, i)] = -val;
        }
        Ok(Self(m))
    }

    /// Reads the strict upper triangle; the lower triangle is ignored.
    pub fn to_coords(&self) -> Vec<f64> {
        let v = self.0.nrows();
        let mut out = Vec::with_capacity(v * (v - 1) / 2);
        for i in 0..v {
            for j in (i + 1)..v {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn orthogonality_defect(k: &DMatrix<f64>) -> f64 {
    let g = k.transpose() * k;
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Action of `k ∈ O(v)`: `X ↦ kX`, `A ↦ k A kᵀ` on the skew-matrix picture.
pub fn orthogonal_act(k: &DMatrix<f64>, n: &GroupElement) -> Result<GroupElement> {
    let dims = n.dims();
    if k.nrows() != dims.v || k.ncols() != dims.v {
        return Err(Error::DimensionMismatch {
            expected: dims.v,
            got: k.nrows(),
        });
    }
    let defect = orthogonality_defect(k);
    if !(defect <= ORTHOGONALITY_TOL) {
        return Err(Error::NotOrthogonal(defect));
    }
    Ok(orthogonal_act_unchecked(k, n))
}

/// [`orthogonal_act`] without the orthogonality test, for hot loops over
/// matrices that are orthogonal by construction.
pub(crate) fn orthogonal_act_unchecked(k: &DMatrix<f64>, n: &GroupElement) -> GroupElement {
    let dims = n.dims();
    let v = dims.v;
    let mut x = vec![0.0; v];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = (0..v).map(|j| k[(i, j)] * n.x()[j]).sum();
    }
    // (k M kᵀ)_{pq} = Σ_{i<j} a_ij (k_pi k_qj - k_pj k_qi)
    let mut a = vec![0.0; dims.z];
    for (idx, &val) in n.a().iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        let (i, j) = dims.pair_of(idx);
        for p in 0..v {
            for q in (p + 1)..v {
                a[dims.pair_index(p, q)] += val * (k[(p, i)] * k[(q, j)] - k[(p, j)] * k[(q, i)]);
            }
        }
    }
    GroupElement(AlgebraElement { dims, x, a })
}

/// Haar-distributed sample of `O(v)`: QR of a Gaussian matrix with the signs
/// of `diag(R)` absorbed into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(v: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(v, v, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..v {
        if r[(j, j)] < 0.0 {
            for i in 0..v {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// [`haar_orthogonal`] driven by a fresh ChaCha stream for `seed`.
pub fn haar_orthogonal_seeded(v: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_orthogonal(v, &mut rng)
}

/// Largest error observed for one invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub v: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<InvariantCheck>,
    pub passed: bool,
}

fn max_coord_diff(n: &GroupElement, m: &GroupElement) -> f64 {
    n.x().iter().zip(m.x()).chain(n.a().iter().zip(m.a())).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn coord_scale(ns: &[&GroupElement]) -> f64 {
    ns.iter().flat_map(|n| n.x().iter().chain(n.a())).fold(1.0f64, |m, c| m.max(c.abs()))
}

/// Random-sample run of the group invariants: homogeneity of the norm,
/// associativity, inverses, `O(v)`-invariance of the norm, the `O(v)` action
/// being an automorphism, antisymmetry of the bracket and the skew-matrix
/// round trip. Coordinates are standard normal, dilations log-uniform in
/// `[1e-2, 1e2]`.
pub fn selfcheck(v: usize, samples: usize, seed: u64) -> Result<SelfCheckReport> {
    let dims = Dimensions::new(v)?;
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> GroupElement {
        let x = (0..dims.v).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let a = (0..dims.z).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        GroupElement(AlgebraElement { dims, x, a })
    };
    let mut err = [0.0f64; 7];
    for _ in 0..samples {
        let (n, m, p) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let r = 10f64.powf(rng.gen_range(-2.0..2.0));
        let nn = n.norm();
        err[0] = err[0].max((dilate(r, &n)?.norm() - r * nn).abs() / (r * nn));
        let left = multiply(&multiply(&n, &m)?, &p)?;
        let right = multiply(&n, &multiply(&m, &p)?)?;
        err[1] = err[1].max(max_coord_diff(&left, &right) / coord_scale(&[&left]));
        let id = GroupElement::identity(dims);
        let e1 = max_coord_diff(&multiply(&n, &n.inverse())?, &id);
        let e2 = max_coord_diff(&multiply(&n.inverse(), &n)?, &id);
        err[2] = err[2].max(e1.max(e2) / coord_scale(&[&n]));
        let k = haar_orthogonal(dims.v, &mut rng);
        let kn = orthogonal_act(&k, &n)?;
        err[3] = err[3].max((kn.norm() - nn).abs() / nn);
        let lhs = orthogonal_act(&k, &multiply(&n, &m)?)?;
        let rhs = multiply(&kn, &orthogonal_act(&k, &m)?)?;
        err[4] = err[4].max(max_coord_diff(&lhs, &rhs) / coord_scale(&[&lhs]));
        let b1 = bracket(n.x(), m.x(), dims)?;
        let b2 = bracket(m.x(), n.x(), dims)?;
        err[5] = err[5].max(b1.iter().zip(&b2).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max));
        let back = SkewMatrix::from_coords(n.a(), dims)?.to_coords();
        err[6] = err[6].max(back.iter().zip(n.a()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    let spec = [
        ("norm homogeneity", 1e-12),
        ("associativity", 1e-12),
        ("inverse", 1e-12),
        ("O(v) norm invariance", 1e-10),
        ("O(v) automorphism", 1e-10),
        ("bracket antisymmetry", 0.0),
        ("skew round trip", 0.0),
    ];
    let checks: Vec<InvariantCheck> = spec
        .iter()
        .zip(err)
        .map(|((name, tol), e)| InvariantCheck { name: name.to_string(), max_error: e, tolerance: *tol, passed: e <= *tol })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(SelfCheckReport { v, samples, seed, checks, passed })
}

/// Coordinates `(x1, x2, a)` of the Heisenberg group `N_2`, used by the grid
/// kernels where allocation per point would dominate.
pub type Point3 = [f64; 3];

/// Group law on `N_2`; agrees with [`multiply`] for `v = 2`.
#[inline]
pub fn n2_mul(n: Point3, m: Point3) -> Point3 {
    [
        n[0] + m[0],
        n[1] + m[1],
        n[2] + m[2] + 0.5 * (n[0] * m[1] - n[1] * m[0]),
    ]
}

#[inline]
pub fn n2_inv(n: Point3) -> Point3 {
    [-n[0], -n[1], -n[2]]
}

#[inline]
pub fn n2_dilate(r: f64, n: Point3) -> Point3 {
    [r * n[0], r * n[1], r * r * n[2]]
}

#[inline]
pub fn n2_norm(n: Point3) -> f64 {
    let x2 = n[0] * n[0] + n[1] * n[1];
    (x2 * x2 + n[2] * n[2]).sqrt().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_element(dims: Dimensions, rng: &mut ChaCha8Rng) -> GroupElement {
        let x = (0..dims.v).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = (0..dims.z).map(|_| rng.gen_range(-2.0..2.0)).collect();
        GroupElement::new(dims, x, a).unwrap()
    }

    fn close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
        a.x().iter().chain(a.a()).zip(b.x().iter().chain(b.a())).all(|(p, q)| {
            (p - q).abs() <= tol * (1.0 + p.abs().max(q.abs()))
        })
    }

    #[test]
    fn dimensions() {
        for v in 2..10 {
            let d = Dimensions::new(v).unwrap();
            assert_eq!(d.z, v * (v - 1) / 2);
            assert_eq!(d.q, v * v);
            assert_eq!(d.q, d.v + 2 * d.z);
            assert_eq!(d.vprime, if v % 2 == 0 { v / 2 } else { (v - 1) / 2 });
            for idx in 0..d.z {
                let (i, j) = d.pair_of(idx);
                assert!(i < j);
                assert_eq!(d.pair_index(i, j), idx);
            }
        }
        assert!(Dimensions::new(1).is_err());
    }

    #[test]
    fn bracket_examples() {
        let d = Dimensions::new(3).unwrap();
        assert_eq!(bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], d).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(bracket(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], d).unwrap(), vec![0.0; 3]);
        assert_eq!(bracket(&[2.0, 0.0, 1.0], &[0.0, 1.0, 0.0], d).unwrap(), vec![2.0, 0.0, -1.0]);
        assert!(bracket(&[1.0, 0.0], &[0.0, 1.0, 0.0], d).is_err());
    }

    #[test]
    fn bch_example() {
        let d = Dimensions::new(2).unwrap();
        let e1 = GroupElement::new(d, vec![1.0, 0.0], vec![0.0]).unwrap();
        let e2 = GroupElement::new(d, vec![0.0, 1.0], vec![0.0]).unwrap();
        let p = e1.mul(&e2).unwrap();
        assert_eq!(p.x(), &[1.0, 1.0]);
        assert_eq!(p.a(), &[0.5]);
        assert_eq!(e1.mul(&GroupElement::identity(d)).unwrap(), e1);
    }

    #[test]
    fn group_axioms_and_dilations() {
        let d = Dimensions::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = random_element(d, &mut rng);
            let m = random_element(d, &mut rng);
            let p = random_element(d, &mut rng);
            let lhs = n.mul(&m).unwrap().mul(&p).unwrap();
            let rhs = n.mul(&m.mul(&p).unwrap()).unwrap();
            assert!(close(&lhs, &rhs, 1e-12));
            assert!(close(&n.mul(&n.inverse()).unwrap(), &GroupElement::identity(d), 1e-12));

            let r = rng.gen_range(0.1..5.0);
            let s = rng.gen_range(0.1..5.0);
            let rs = dilate(r, &dilate(s, &n).unwrap()).unwrap();
            assert!(close(&rs, &dilate(r * s, &n).unwrap(), 1e-12));
            let hom = dilate(r, &n.mul(&m).unwrap()).unwrap();
            let split = dilate(r, &n).unwrap().mul(&dilate(r, &m).unwrap()).unwrap();
            assert!(close(&hom, &split, 1e-12));
            let nr = koranyi_norm(&dilate(r, &n).unwrap());
            assert!((nr - r * koranyi_norm(&n)).abs() <= 1e-12 * nr);
        }
        assert!(dilate(0.0, &GroupElement::identity(d)).is_err());
        assert!(dilate(-1.0, &GroupElement::identity(d)).is_err());
    }

    #[test]
    fn norm_examples() {
        let d = Dimensions::new(3).unwrap();
        let n = GroupElement::new(d, vec![0.0; 3], vec![4.0, 0.0, 0.0]).unwrap();
        assert!((koranyi_norm(&n) - 2.0).abs() < 1e-15);
        let n = GroupElement::new(d, vec![0.6, 0.8, 0.0], vec![0.0; 3]).unwrap();
        assert!((koranyi_norm(&n) - 1.0).abs() < 1e-15);
        let n = GroupElement::new(d, vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert!((koranyi_norm(&n) - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn skew_round_trip() {
        let d = Dimensions::new(5).unwrap();
        let a: Vec<f64> = (0..d.z).map(|i| i as f64 - 3.5).collect();
        let m = SkewMatrix::from_coords(&a, d).unwrap();
        assert_eq!(m.matrix().transpose(), -m.matrix().clone());
        assert_eq!(m.to_coords(), a);
        let fro = m.matrix().norm();
        let eu = a.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((fro - 2f64.sqrt() * eu).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_action() {
        let d = Dimensions::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let id = DMatrix::identity(4, 4);
        let n = random_element(d, &mut rng);
        assert_eq!(orthogonal_act(&id, &n).unwrap(), n);
        for _ in 0..100 {
            let k = haar_orthogonal(4, &mut rng);
            let n = random_element(d, &mut rng);
            let kn = orthogonal_act(&k, &n).unwrap();
            assert!((koranyi_norm(&kn) - koranyi_norm(&n)).abs() < 1e-10);
            // agrees with conjugation of the skew matrix
            let m = SkewMatrix::from_coords(n.a(), d).unwrap();
            let conj = &k * m.matrix() * k.transpose();
            let expect = SkewMatrix(conj).to_coords();
            for (p, q) in kn.a().iter().zip(&expect) {
                assert!((p - q).abs() < 1e-12);
            }
            // bracket equivariance
            let xp: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = GroupElement::new(d, vec![0.0; 4], bracket(n.x(), &xp, d).unwrap()).unwrap();
            let kb = orthogonal_act(&k, &b).unwrap();
            let kxp = orthogonal_act(&k, &GroupElement::new(d, xp, vec![0.0; d.z]).unwrap()).unwrap();
            let br = bracket(kn.x(), kxp.x(), d).unwrap();
            for (p, q) in kb.a().iter().zip(&br) {
                assert!((p - q).abs() < 1e-12);
            }
        }
        let mut bad = DMatrix::identity(4, 4);
        bad[(0, 1)] = 1e-6;
        assert!(matches!(orthogonal_act(&bad, &n), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn haar_samples() {
        let k = haar_orthogonal_seeded(5, 1);
        assert_eq!(k, haar_orthogonal_seeded(5, 1));
        let g = k.transpose() * &k;
        assert!((g - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
        for c in k.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        // E[k_11] = 0, Var[k_11] = 1/v
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples = 100_000;
        let mean = (0..samples).map(|_| haar_orthogonal(3, &mut rng)[(0, 0)]).sum::<f64>() / samples as f64;
        let sigma = (1.0 / 3.0f64).sqrt() / (samples as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn n2_helpers_match_general_law() {
        let d = Dimensions::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = random_element(d, &mut rng);
            let m = random_element(d, &mut rng);
            let p = n.mul(&m).unwrap();
            let q = n2_mul([n.x()[0], n.x()[1], n.a()[0]], [m.x()[0], m.x()[1], m.a()[0]]);
            assert!((p.x()[0] - q[0]).abs() < 1e-14 && (p.x()[1] - q[1]).abs() < 1e-14);
            assert!((p.a()[0] - q[2]).abs() < 1e-14);
            assert!((n2_norm(q) - p.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn selfcheck_passes_and_is_deterministic() {
        for v in [2, 3, 4, 5] {
            let rep = selfcheck(v, 200, 7).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        assert_eq!(selfcheck(4, 50, 3).unwrap(), selfcheck(4, 50, 3).unwrap());
        assert!(selfcheck(1, 10, 0).is_err());
    }
}
