//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The lines go straight to stderr, so they show in a plain `cargo test`.

use koranyi::group::{dilate, haar_orthogonal_seeded, koranyi_norm, multiply, orthogonal_act, Dimensions, GroupElement};
use koranyi::maximal::{
    a_alpha_apply, a_alpha_via_b, b_hj_apply, combine, pointwise_bound_check, random_bumps, spherical_average,
    BoundCheckConfig, ComplexField, FnField, Grid, Interior, RadialQuad, SphereNodes, Q,
};
use koranyi::plancherel::{plancherel_check_v2, GaussianProfile, PlancherelConfig, RadialProfile};
use koranyi::quadrature::{
    gauss_legendre, gauss_legendre_panels, koranyi_sphere_mass, plane_wave_check, polar_integrate, KoranyiSphereRule,
};
use koranyi::special_fn::{gamma_ratio, hermite_weber, laguerre_fn_table};
use koranyi::spherical::{pairing_derivative, pairing_mu_s_phi, DerivMethod, PairingConfig, SphericalParam};
use koranyi::squarefn::{bessel_moment_dichotomy, reconstruct_derivative, scan_shat, shat, ScanGrid, ShatConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

static SERIAL: Mutex<()> = Mutex::new(());

/// Criteria run one at a time so each runtime is measured on an idle CPU.
fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, title: &str, pass: bool, started: Instant, budget_s: u64, detail: String) {
    let elapsed = started.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_s);
    let ok = pass && in_time;
    let line = format!(
        "criterion {id:>2} {} | {title} | {detail} | {:.1} s of {budget_s} s\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    // straight to the handle, so the line shows without --nocapture
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
    assert!(in_time, "criterion {id} ({title}) exceeded {budget_s} s: {elapsed:?}");
}

fn dims(v: usize) -> Dimensions {
    Dimensions::new(v).unwrap()
}

fn random_element(d: Dimensions, rng: &mut ChaCha8Rng) -> GroupElement {
    let x = (0..d.v).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let a = (0..d.z).map(|_| rng.gen_range(-1.5..1.5)).collect();
    GroupElement::new(d, x, a).unwrap()
}

fn coord_err(a: &GroupElement, b: &GroupElement) -> f64 {
    a.x().iter().zip(b.x()).chain(a.a().iter().zip(b.a())).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_01_group_geometry() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut hom, mut assoc, mut inv, mut orth) = (0f64, 0f64, 0f64, 0f64);
    for v in 2..=5 {
        let d = dims(v);
        let k = haar_orthogonal_seeded(v, 7 + v as u64);
        for _ in 0..1000 {
            let (a, b, c) = (random_element(d, &mut rng), random_element(d, &mut rng), random_element(d, &mut rng));
            let r = rng.gen_range(0.1..5.0);
            hom = hom.max((koranyi_norm(&dilate(r, &a).unwrap()) - r * koranyi_norm(&a)).abs() / (r * koranyi_norm(&a)));
            let left = multiply(&multiply(&a, &b).unwrap(), &c).unwrap();
            let right = multiply(&a, &multiply(&b, &c).unwrap()).unwrap();
            assoc = assoc.max(coord_err(&left, &right));
            // BCH in exponential coordinates: x + x', a + a' + ½[x, x']
            let mut bch_a = a.a().to_vec();
            let mut idx = 0;
            for i in 0..v {
                for j in i + 1..v {
                    bch_a[idx] += b.a()[idx] + 0.5 * (a.x()[i] * b.x()[j] - a.x()[j] * b.x()[i]);
                    idx += 1;
                }
            }
            let bch_x: Vec<f64> = a.x().iter().zip(b.x()).map(|(p, q)| p + q).collect();
            assoc = assoc.max(coord_err(&multiply(&a, &b).unwrap(), &GroupElement::new(d, bch_x, bch_a).unwrap()));
            let id = multiply(&a, &a.inverse()).unwrap();
            inv = inv.max(coord_err(&id, &GroupElement::identity(d)));
            let moved = orthogonal_act(&k, &a).unwrap();
            orth = orth.max((koranyi_norm(&moved) - koranyi_norm(&a)).abs());
        }
    }
    let pass = hom <= 1e-12 && assoc <= 1e-12 && inv <= 1e-12 && orth <= 1e-10;
    report(1, "group and geometry", pass, t0, 5, format!("homogeneity {hom:.1e}, BCH/associativity {assoc:.1e}, inverse {inv:.1e}, O(v) {orth:.1e}"));
}

/// `J_n(x) = π^{-1} ∫_0^π cos(nτ - x sin τ) dτ`, trapezoid on the full period.
fn bessel_j_int(n: usize, x: f64) -> f64 {
    let m = 400;
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| (n as f64 * k as f64 * h - x * (k as f64 * h).sin()).cos()).sum::<f64>() * h / (2.0 * PI)
}

/// Sphere plane wave `∫ e^{i⟨x,ξ⟩} dσ` in closed form for the tested `n`.
fn plane_wave_oracle(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    match n {
        2 => bessel_j_int(0, x),
        3 => x.sin() / x,
        4 => 2.0 * bessel_j_int(1, x) / x,
        6 => 8.0 * bessel_j_int(2, x) / (x * x),
        _ => unreachable!(),
    }
}

#[test]
fn criterion_02_sphere_plane_wave() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut worst = 0f64;
    let mut pass = true;
    for n in [2, 3, 4, 6] {
        for x in [0.0, 1.0, 5.0, 10.0, 20.0] {
            let c = plane_wave_check(n, x, 20_000, 3).unwrap();
            let e = (c.quadrature - plane_wave_oracle(n, x)).abs();
            worst = worst.max(e);
            pass &= c.passed && e <= 1e-6 && c.quadrature_im.abs() <= 1e-6;
        }
    }
    // Monte-Carlo rule above the product-rule range, judged at 3σ
    let mc = plane_wave_check(7, 5.0, 200_000, 3).unwrap();
    let sigma = mc.std_error.unwrap();
    pass &= mc.passed && mc.abs_err <= 3.0 * sigma;
    report(2, "sphere plane-wave identity", pass, t0, 30, format!("max |quad - oracle| {worst:.1e}; n=7 MC err {:.1e} vs 3σ {:.1e}", mc.abs_err, 3.0 * sigma));
}

#[test]
fn criterion_03_sphere_mass() {
    let _serial = serial();
    let t0 = Instant::now();
    let gamma_3_4 = 1.225_416_702_465_177_6;
    // ½B(v/4, z/2) reduced by hand with Γ(s+1) = sΓ(s) and Γ(1/4)Γ(3/4) = π√2
    let oracle = [
        (2, PI / 2.0),
        (3, 4.0 * PI.sqrt() / 5.0 * gamma_3_4 * gamma_3_4 / (PI * 2f64.sqrt())),
        (4, 1.0 / 6.0),
        (5, 12_288.0 / 208_845.0),
    ];
    let mut worst = 0f64;
    for (v, exact) in oracle {
        let d = dims(v);
        let rule = KoranyiSphereRule::standard(d, 48, 64, 1).unwrap();
        let mass: f64 = rule.integrate(|_, _| 1.0f64).unwrap();
        worst = worst.max((mass / exact - 1.0).abs()).max((koranyi_sphere_mass(d) / exact - 1.0).abs());
    }
    report(3, "sphere mass", worst <= 1e-8, t0, 10, format!("max rel err {worst:.1e}"));
}

#[test]
fn criterion_04_polar_vs_cartesian() {
    let _serial = serial();
    let t0 = Instant::now();
    // e^{-α|x-c|² - β(a-d)²}, Lebesgue integral π^{3/2}/(α√β). With σ normalized
    // on both spheres, the polar form integrates against Lebesgue / (|S¹||S⁰|).
    let lebesgue_per_haar = 2.0 * PI * 2.0;
    let gaussians = [(1.0, 1.0, [0.0, 0.0], 0.0), (0.5, 2.0, [0.4, -0.3], 0.5), (2.0, 0.7, [-0.2, 0.1], -0.4)];
    let sphere = KoranyiSphereRule::standard(dims(2), 64, 128, 0).unwrap();
    let breaks: Vec<f64> = (0..=16).map(|k| 0.5 * k as f64).collect();
    let r_rule = gauss_legendre_panels(&breaks, 16).unwrap();
    let proposal = Normal::new(0.0, 1.5).unwrap();
    let q = |t: f64| (-t * t / (2.0 * 1.5 * 1.5)).exp() / (1.5 * (2.0 * PI).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let n = 2_000_000;
    let mut pass = true;
    let mut lines = Vec::new();
    for (alpha, beta, c, dd) in gaussians {
        let f = |x: &[f64], a: &[f64]| (-alpha * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) - beta * (a[0] - dd).powi(2)).exp();
        let polar = polar_integrate(f, &r_rule, &sphere).unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let (x1, x2, a) = (proposal.sample(&mut rng), proposal.sample(&mut rng), proposal.sample(&mut rng));
            let w = f(&[x1, x2], &[a]) / (q(x1) * q(x2) * q(a));
            s1 += w;
            s2 += w * w;
        }
        let mean = s1 / n as f64 / lebesgue_per_haar;
        let sigma = ((s2 / n as f64 - (s1 / n as f64).powi(2)) / n as f64).sqrt() / lebesgue_per_haar;
        let exact = PI.powf(1.5) / (alpha * beta.sqrt()) / lebesgue_per_haar;
        pass &= (polar - mean).abs() <= 3.0 * sigma && sigma / mean < 5e-3 && (polar / exact - 1.0).abs() < 1e-8;
        lines.push(format!("polar {polar:.6} MC {mean:.6}±{sigma:.1e}"));
    }
    report(4, "polar vs Cartesian Monte Carlo", pass, t0, 120, lines.join("; "));
}

#[test]
fn criterion_05_laguerre_bound() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut violations = 0;
    let mut worst = 0f64;
    for k in 0..10_000 {
        let x = 500.0 * k as f64 / 9_999.0;
        for l in laguerre_fn_table(200, x) {
            worst = worst.max(l.abs());
            if l.abs() > 1.0 + 1e-12 {
                violations += 1;
            }
        }
    }
    // explicit sum Σ C(n,k)(-x)^k/k! for small arguments
    let mut oracle_err = 0f64;
    for n in 0..=12 {
        for x in [0.0, 0.3, 1.7, 4.0] {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..=n {
                term *= -x * (n - k + 1) as f64 / (k * k) as f64;
                sum += term;
            }
            oracle_err = oracle_err.max((laguerre_fn_table(12, x)[n] - sum * (-x / 2.0).exp()).abs());
        }
    }
    report(5, "Laguerre bound", violations == 0 && oracle_err < 1e-10, t0, 5, format!("{violations} violations, max |ℓ_n| {worst:.15}, series oracle err {oracle_err:.1e}"));
}

fn random_param(v: usize, rng: &mut ChaCha8Rng) -> SphericalParam {
    let d = dims(v);
    let mut lambda: Vec<f64> = (0..d.vprime).map(|_| rng.gen_range(0.3..3.0)).collect();
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let l = (0..d.vprime).map(|_| rng.gen_range(0..=3)).collect();
    let r = if d.is_odd() { rng.gen_range(0.3..2.0) } else { 0.0 };
    SphericalParam::new(d, r, lambda, l).unwrap()
}

/// `⟨μ_s, Θ⟩` straight from the polar form of `μ`, for `v ∈ {4, 5}`:
/// `t` with density `2t^{v-1}(1-t⁴)^{(z-2)/2}`, the `ℝ^v` sphere through
/// `(|pr_1 x|², |pr_2 x|², x_5)`, and the `ℝ^z` plane wave as a 1-D integral.
fn pairing_oracle(p: &SphericalParam, s: f64) -> Complex64 {
    let d = p.dims();
    let lam = p.lambda();
    let lnorm = lam.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ell = |l: usize, x: f64| laguerre_fn_table(l, x)[l];
    let t_rule = gauss_legendre(80, 0.0, 1.0).unwrap();
    let u_rule = gauss_legendre(40, 0.0, 1.0).unwrap();
    let th_rule = gauss_legendre(60, 0.0, PI).unwrap();
    let m = 256;
    let z_wave = |c: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..m {
            let th = -PI / 2.0 + PI * k as f64 / m as f64;
            let w = th.cos().powi(d.z as i32 - 2);
            num += w * (c * th.sin()).cos();
            den += w;
        }
        num / den
    };
    let mut total = Complex64::new(0.0, 0.0);
    for (t, wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
        let u = (1.0 - t.powi(4)).sqrt();
        let density = 2.0 * t.powi(d.v as i32 - 1) * (1.0 - t.powi(4)).powi((d.z as i32 - 2) / 2);
        let zw = z_wave(s * s * u * lnorm);
        let rad = s * t;
        let mut inner = Complex64::new(0.0, 0.0);
        let modulus = |sin2: f64, uu: f64| {
            let rho1 = rad * rad * sin2 * uu;
            let rho2 = rad * rad * sin2 * (1.0 - uu);
            ell(p.l()[0], 0.5 * lam[0] * rho1) * ell(p.l()[1], 0.5 * lam[1] * rho2)
        };
        if d.v == 4 {
            for (uu, wu) in u_rule.nodes.iter().zip(&u_rule.weights) {
                inner += wu * modulus(1.0, *uu);
            }
        } else {
            for (th, wth) in th_rule.nodes.iter().zip(&th_rule.weights) {
                let sin2 = th.sin().powi(2);
                let phase = Complex64::from_polar(1.0, p.r() * rad * th.cos());
                let mut acc = 0.0;
                for (uu, wu) in u_rule.nodes.iter().zip(&u_rule.weights) {
                    acc += wu * modulus(sin2, *uu);
                }
                inner += phase * (wth * th.sin().powi(3) * 0.75 * acc);
            }
        }
        total += inner * (wt * density * zw);
    }
    total
}

#[test]
fn criterion_06_pairing_cross_oracle() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let cfg = PairingConfig::default();
    let mut worst = 0f64;
    for v in [4, 5] {
        let mass = koranyi_sphere_mass(dims(v));
        for _ in 0..10 {
            let p = random_param(v, &mut rng);
            let s = rng.gen_range(0.3..2.0);
            let a = pairing_mu_s_phi(&p, s, &cfg).unwrap();
            let b = pairing_oracle(&p, s);
            worst = worst.max((a - b).norm() / mass);
        }
    }
    report(6, "pairing vs direct polar quadrature", worst <= 1e-6, t0, 60, format!("max |Δ|/μ(S_1) {worst:.1e}"));
}

#[test]
fn criterion_07_derivative_consistency() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cfg = PairingConfig::default();
    let mut worst = 0f64;
    for k in 0..10 {
        let p = random_param(2 + k % 4, &mut rng);
        let s = rng.gen_range(0.4..2.0);
        for j in 1..=3 {
            let a = pairing_derivative(&p, s, j, DerivMethod::Analytic, &cfg).unwrap();
            let b = pairing_derivative(&p, s, j, DerivMethod::FiniteDiff, &cfg).unwrap();
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    report(7, "analytic vs finite-difference derivatives", worst <= 1e-5, t0, 120, format!("max rel err {worst:.1e}"));
}

#[test]
fn criterion_08_shat_scale_invariance() {
    let _serial = serial();
    let t0 = Instant::now();
    let cfg = ShatConfig::default();
    let params = [
        SphericalParam::new(dims(4), 0.0, vec![2.0, 1.0], vec![1, 0]).unwrap(),
        SphericalParam::new(dims(5), 1.2, vec![1.5, 0.5], vec![0, 2]).unwrap(),
    ];
    let mut worst = 0f64;
    for p in &params {
        for j in [1, 2] {
            let base = shat(p, j, &cfg).unwrap().value;
            for t in [0.5, 2.0, 8.0] {
                let scaled = shat(&p.scaled(t).unwrap(), j, &cfg).unwrap().value;
                worst = worst.max((scaled / base - 1.0).abs());
            }
        }
    }
    report(8, "Ŝ scale invariance", worst <= 1e-4, t0, 120, format!("max rel change {worst:.1e}"));
}

#[test]
fn criterion_09_shat_scan() {
    let _serial = serial();
    let t0 = Instant::now();
    let cfg = ShatConfig::default();
    let grid = ScanGrid::default_for(4).unwrap();
    let rep = scan_shat(&grid, 1, &cfg).unwrap();
    let finite = rep.rows.iter().all(|r| r.result.value.is_finite() && r.result.value > 0.0);
    let pass_j1 = finite && rep.all_controlled && rep.stabilized && rep.divergence.is_none() && rep.in_theorem_range;
    let small = ScanGrid { lambda_max: vec![1.0, 4.0], ..grid };
    let out = scan_shat(&small, 3, &cfg).unwrap();
    let diag = out.divergence.clone().unwrap_or_default();
    let pass_j3 = !out.in_theorem_range && out.divergence.is_some() && !out.majorant.converged;
    report(
        9,
        "Ŝ¹ scan at v = 4",
        pass_j1 && pass_j3,
        t0,
        900,
        format!("{} points, sup {:.6}, rung ratios {:?}; j=3 diagnostic: {diag}", rep.rows.len(), rep.global_sup, rep.stabilization_ratios),
    );
}

#[test]
fn criterion_10_bessel_moment_dichotomy() {
    let _serial = serial();
    let t0 = Instant::now();
    let b1 = bessel_moment_dichotomy(2.0, 0, 1.0, 50.0, 4).unwrap();
    let b39 = bessel_moment_dichotomy(2.0, 0, 3.9, 50.0, 4).unwrap();
    let b41 = bessel_moment_dichotomy(2.0, 0, 4.1, 50.0, 4).unwrap();
    // ∫ 𝒥_2² s ds = 64 ∫ J_2² s^{-3} ds = 64 Γ(3)Γ(1)/(2³ Γ(2)² Γ(4)) = 8/3
    let best = b1.rows.last().unwrap().corrected.unwrap();
    let closed = (best / (8.0 / 3.0) - 1.0).abs();
    let growing = b41.rows.windows(2).all(|w| w[1].raw > w[0].raw && (w[1].raw - w[0].raw) / w[1].raw > 1e-3);
    let pass = b1.converged && b39.converged && closed < 1e-3 && !b41.converged && growing;
    report(
        10,
        "Bessel moment dichotomy",
        pass,
        t0,
        30,
        format!(
            "β=1 change {:.1e} (closed form err {closed:.1e}), β=3.9 change {:.1e}, β=4.1 change {:.1e}",
            b1.last_relative_change, b39.last_relative_change, b41.last_relative_change
        ),
    );
}

#[test]
fn criterion_11_b_reconstruction() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let cfg = PairingConfig::default();
    let mut worst = 0f64;
    for k in 0..8 {
        let p = random_param(4 + k % 2, &mut rng);
        let s = rng.gen_range(0.4..2.0);
        for h in [1, 2] {
            let a = reconstruct_derivative(&p, s, h, &cfg).unwrap();
            let b = pairing_derivative(&p, s, h, DerivMethod::Analytic, &cfg).unwrap();
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    report(11, "b^{g,j} reconstruction", worst <= 1e-6, t0, 60, format!("max rel err {worst:.1e}"));
}

fn gaussian_field(p: [f64; 3]) -> f64 {
    (-(p[0] * p[0] + 0.7 * p[1] * p[1] + 0.8 * (p[2] - 0.2).powi(2))).exp()
}

fn max_rel(x: &ComplexField, y: &ComplexField, interior: &Interior) -> f64 {
    interior
        .indices()
        .iter()
        .map(|&i| {
            let d = Complex64::new(x.re.values()[i] - y.re.values()[i], x.im.values()[i] - y.im.values()[i]).norm();
            d / Complex64::new(y.re.values()[i], y.im.values()[i]).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_12_analytic_family() {
    let _serial = serial();
    let t0 = Instant::now();
    let grid = Grid::new(4.0, 12).unwrap();
    let sphere = SphereNodes::standard(8, 16).unwrap();
    let quad = RadialQuad::default();
    let interior = Interior::new(grid, 1.0 + 5.0 * quad.fd_step).unwrap();
    let f = FnField(gaussian_field);
    let one = Complex64::new(1.0, 0.0);
    let direct = a_alpha_apply(&f, one, &quad, &sphere, &interior).unwrap();
    let b11 = b_hj_apply(&f, one, 1, 1, &quad, &sphere, &interior).unwrap();
    let b10 = b_hj_apply(&f, one, 1, 0, &quad, &sphere, &interior).unwrap();
    let stated = combine(&b11, &b10, -0.5, -0.5 * Q).unwrap();
    let stated_err = max_rel(&stated, &direct, &interior);
    let corrected_err = max_rel(&combine(&b11, &b10, 0.5, 0.5 * (Q - 2.0)).unwrap(), &direct, &interior);
    let conv = spherical_average(&f, 1.0, &sphere, &interior).unwrap();
    let conv = ComplexField { re: conv.clone(), im: koranyi::maximal::GridField::constant(grid, 0.0).unwrap() };
    let zero = Complex64::new(0.0, 0.0);
    let stated_limit = {
        let b11 = b_hj_apply(&f, zero, 1, 1, &quad, &sphere, &interior).unwrap();
        let b10 = b_hj_apply(&f, zero, 1, 0, &quad, &sphere, &interior).unwrap();
        max_rel(&combine(&b11, &b10, -0.5, -0.5 * Q).unwrap(), &conv, &interior)
    };
    let limit_err = max_rel(&a_alpha_via_b(&f, zero, &quad, &sphere, &interior).unwrap(), &conv, &interior);
    report(
        12,
        "analytic family A^α = -½(B_{1,1} + Q·B_{1,0})",
        stated_err <= 1e-4 && stated_limit <= 1e-3,
        t0,
        120,
        format!(
            "identity as stated: rel err {stated_err:.2e}, α→0 {stated_limit:.2e}; with ½(B_{{1,1}} + (Q-2)B_{{1,0}}): {corrected_err:.1e}, α→0 {limit_err:.1e}"
        ),
    );
}

#[test]
fn criterion_13_pointwise_estimate() {
    let _serial = serial();
    let t0 = Instant::now();
    let grid = Grid::new(4.0, 64).unwrap();
    let sphere = SphereNodes::standard(8, 16).unwrap();
    let cfg = BoundCheckConfig::default();
    let interior = Interior::new(grid, cfg.s_max).unwrap();
    let mut worst_fraction = 1f64;
    let mut worst_ratio = 0f64;
    for seed in 1..=5 {
        let field = random_bumps(grid, 6, seed).unwrap();
        let rep = pointwise_bound_check(&field, &cfg, &sphere, &interior).unwrap();
        worst_fraction = worst_fraction.min(rep.fraction);
        worst_ratio = worst_ratio.max(rep.worst_ratio);
    }
    report(
        13,
        "pointwise maximal estimate on 64³",
        worst_fraction >= 0.99,
        t0,
        300,
        format!("{} interior points, min fraction {worst_fraction:.4}, worst ratio {worst_ratio:.4}", interior.len()),
    );
}

#[test]
fn criterion_14_plancherel() {
    let _serial = serial();
    let t0 = Instant::now();
    let specs = [GaussianProfile::new(1.0, 1.0), GaussianProfile::new(0.5, 2.0), GaussianProfile::new(2.0, 0.7)];
    let profiles: Vec<_> = specs.iter().map(|s| RadialProfile::gaussian(*s).unwrap()).collect();
    let rep = plancherel_check_v2(&profiles, &PlancherelConfig::default()).unwrap();
    let validation = rep.profiles[1..].iter().map(|p| p.rel_err).fold(0.0, f64::max);
    let tails = rep
        .profiles
        .iter()
        .map(|p| p.tails.last_l_shell.max(p.tails.last_lambda_panel))
        .fold(0.0, f64::max);
    // closed form for Gaussians: the constant is 1/(2π²)
    let c_err = (rep.fitted_constant * 2.0 * PI * PI - 1.0).abs();
    report(
        14,
        "Plancherel self-consistency on N_2",
        validation <= 0.02 && tails < 1e-3,
        t0,
        600,
        format!("fitted c {:.6e} (vs 1/2π² rel {c_err:.1e}), validation err {validation:.1e}, worst shell {tails:.1e}", rep.fitted_constant),
    );
}

#[test]
fn criterion_15_gamma_estimate() {
    let _serial = serial();
    let t0 = Instant::now();
    let limit = (2.0 * PI).powf(-0.5);
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    let mut trend_ok = true;
    let mut worst_far = 0f64;
    for ix in 0..=25 {
        let x = 0.5 + 0.1 * ix as f64;
        for iy in 0..=98 {
            let y = 1.0 + 0.5 * iy as f64;
            for sy in [y, -y] {
                let r = gamma_ratio(x, sy).unwrap();
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        // Stirling: the relative deviation decays like y^{-2}
        let dev = |y: f64| (gamma_ratio(x, y).unwrap() / limit - 1.0).abs();
        let (near, far) = (dev(10.0), dev(50.0));
        worst_far = worst_far.max(far);
        trend_ok &= far < 2e-3 && (far <= near / 10.0 || near < 1e-10);
    }
    // |Γ(1+iy)|² = πy/sinh πy, |Γ(½+iy)|² = π/cosh πy
    let mut oracle_err = 0f64;
    for y in [1.0, 3.5, 12.0, 40.0] {
        let r1 = (-PI * y / 2.0).exp() * y.sqrt() / (PI * y / (PI * y).sinh()).sqrt();
        let rh = (-PI * y / 2.0).exp() / (PI / (PI * y).cosh()).sqrt();
        oracle_err = oracle_err.max((gamma_ratio(1.0, y).unwrap() / r1 - 1.0).abs()).max((gamma_ratio(0.5, y).unwrap() / rh - 1.0).abs());
    }
    let pass = lo > 0.0 && hi.is_finite() && trend_ok && oracle_err < 1e-10;
    report(15, "Gamma ratio band and Stirling limit", pass, t0, 5, format!("band [{lo:.4}, {hi:.4}], limit {limit:.5}, max rel dev at |y|=50 {worst_far:.1e}, closed-form err {oracle_err:.1e}"));
}

#[test]
fn criterion_16_hermite_orthonormality() {
    let _serial = serial();
    let t0 = Instant::now();
    let breaks: Vec<f64> = (0..=48).map(|k| -12.0 + 0.5 * k as f64).collect();
    let rule = gauss_legendre_panels(&breaks, 16).unwrap();
    let table: Vec<Vec<f64>> = rule.nodes.iter().map(|x| (0..=10).map(|l| hermite_weber(l, *x).unwrap()).collect()).collect();
    let mut worst = 0f64;
    for l in 0..=10 {
        for m in 0..=10 {
            let ip: f64 = table.iter().zip(&rule.weights).map(|(h, w)| w * h[l] * h[m]).sum();
            worst = worst.max((ip - if l == m { 1.0 } else { 0.0 }).abs());
        }
    }
    report(16, "Hermite orthonormality", worst <= 1e-8, t0, 5, format!("max |⟨h_l,h_m⟩ - δ| {worst:.1e}"));
}
