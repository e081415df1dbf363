//! Independent reference values and worked examples.

use majda_znd::bench::{bench_convergence, bench_fixed_contour, FixedContourConfig};
use majda_znd::integrator::{integrate_adaptive, integrate_fixed_rk4};
use majda_znd::linalg::{adjoint_init, eigenvalues, inner, kato_init, limit_data, Mat2};
use majda_znd::model::{
    detect_square_wave, du_dz, normalization_constant, numerical_infinity, solve_profile_x, u_of_z, Convention,
    InfinityStrategy,
};
use majda_znd::stability::{
    exact_d, growth_exponent, stability_sweep, standard_profile, winding_number, Contour, SweepConfig,
};
use majda_znd::*;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// D(λ) for φ ≡ 1 with the inner integral in closed form and Simpson's rule outside.
fn exact_d_simpson(lambda: Complex64, q: f64, k: f64) -> Complex64 {
    let a = 1.0 - 2.0 * q;
    let sa = a.sqrt();
    let root = |y: f64| (a + 2.0 * q * (k * y).exp()).sqrt();
    let antider = |y: f64| {
        let r = root(y);
        let gap = 2.0 * q * (k * y).exp() / (r + sa);
        (gap / (r + sa)).ln() / (k * sa)
    };
    let inner = |y: f64| antider(0.0) - antider(y);
    let f = |y: f64| (-lambda * inner(y) + (k + lambda) * y).exp() / root(y);
    let length = 40.0 / (k + lambda.re);
    let n = 200_000;
    let h = length / n as f64;
    let mut sum = f(-length) + f(0.0);
    for i in 1..n {
        let y = -length + i as f64 * h;
        sum += f(y) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let psi = sum * h / 3.0;
    (2.0 * lambda + (2.0 - q - q * k * psi)) * (lambda / (k + lambda))
}

const FROZEN_EXACT: [(f64, f64, f64, f64); 3] = [
    (1.0, 0.0, 1.797_114_895_002_340_6, 0.0),
    (0.0, 2.0, -0.280_742_236_887_897_1, 3.931_243_940_953_734_3),
    (3.0, -5.0, 5.714_162_055_200_225, -9.980_138_338_098_136),
];

#[test]
fn exact_determinant_matches_independent_oracle() {
    for (lr, li, dr, di) in FROZEN_EXACT {
        let lambda = c(lr, li);
        let frozen = c(dr, di);
        let oracle = exact_d_simpson(lambda, 0.3, 1.0);
        assert!(rel(oracle, frozen) < 1e-9, "oracle {oracle} vs frozen {frozen}");
        let lib = exact_d(lambda, 0.3, 1.0).unwrap();
        assert!(rel(lib, frozen) < 1e-9, "library {lib} vs frozen {frozen}");
    }
}

#[test]
fn mu_x_matches_exact_determinant() {
    let profile = Profile::from_z_start(ModelParams::constant(0.3).unwrap(), 1e-8).unwrap();
    let tol = Tolerance::uniform(1e-10).unwrap();
    for (lr, li, dr, di) in FROZEN_EXACT {
        let d = evaluate_d(MethodId::MuX, c(lr, li), &profile, tol, Coordinates::Z).unwrap().value;
        assert!(rel(d, c(dr, di)) < 1e-6, "λ = {lr}+{li}i: {d}");
    }
}

#[test]
fn uncoupled_exact_determinant_is_two_lambda() {
    for lambda in [c(1.0, 0.0), c(0.5, 3.0), c(4.0, -1.0)] {
        let d = exact_d(lambda, 0.0, 1.0).unwrap();
        assert!(rel(d, 2.0 * lambda) < 1e-10);
    }
}

#[test]
fn high_frequency_growth_is_two_lambda() {
    let profile = Profile::from_z_start(ModelParams::constant(0.3).unwrap(), 1e-8).unwrap();
    let tol = Tolerance::uniform(1e-10).unwrap();
    let mut last = f64::INFINITY;
    for r in [10.0, 100.0, 1000.0] {
        let d = evaluate_d(MethodId::MuX, c(r, 0.0), &profile, tol, Coordinates::Z).unwrap().value;
        let miss = (d / (2.0 * r) - 1.0).norm();
        assert!(miss < last);
        last = miss;
    }
    assert!(last < 1e-2, "D/(2λ) − 1 = {last} at R = 1000");
}

#[test]
fn profile_pointwise_formulas() {
    let q = 0.3;
    assert!((u_of_z(0.0, q).unwrap() - 1.632_455_532_033_675_9).abs() < 1e-12);
    assert!((u_of_z(0.5, q).unwrap() - 1.836_660_026_534_075_5).abs() < 1e-12);
    assert!((du_dz(1.0, q).unwrap() - 0.3).abs() < 1e-14);
    assert!((du_dz(0.0, q).unwrap() - 0.474_341_649_025_256_8).abs() < 1e-12);
}

#[test]
fn ignition_examples() {
    let p = ModelParams::new(IgnitionKind::Arrhenius, 0.3, 10.0, 5f64.exp()).unwrap();
    assert!((p.phi(2.0) - 1.0).abs() < 1e-14);
    assert_eq!(p.phi(-1.0), 0.0);
    assert!((p.dphi(2.0).unwrap() - 2.5).abs() < 1e-13);
}

#[test]
fn prefactor_conventions() {
    let a0 = normalization_constant(IgnitionKind::Arrhenius, 0.3, 0.0, Convention::HalfReactionAtMinus2).unwrap();
    assert!((a0 - 2f64.ln() / 2.0).abs() < 1e-8, "{a0}");
    let b = normalization_constant(IgnitionKind::ModifiedArrhenius, 0.3, 40.0, Convention::PowerTenRule).unwrap();
    assert!((b / 1e21 - 1.0).abs() < 1e-12);
    let cc = normalization_constant(IgnitionKind::Arrhenius, 0.3, 10.0, Convention::ExpHalfRule).unwrap();
    assert!((cc - 148.413_159_102_576_6).abs() < 1e-9);
}

/// x(z) = −∫_z^1 dζ/(φ(ū(ζ))ζ) by composite Simpson in t = ln ζ.
fn position_simpson(prefactor: f64, energy: f64, q: f64, z: f64) -> f64 {
    let f = |t: f64| {
        let u = 1.0 + (1.0 - 2.0 * q + 2.0 * q * t.exp()).sqrt();
        1.0 / (prefactor * (-energy / u).exp())
    };
    let (a, b) = (z.ln(), 0.0);
    let n = 20_000;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    -sum * h / 3.0
}

#[test]
fn half_reaction_convention_places_midpoint() {
    let params = ModelParams::with_convention(IgnitionKind::Arrhenius, 0.3, 10.0, Convention::HalfReactionAtMinus2)
        .unwrap();
    let x_half = position_simpson(params.prefactor(), 10.0, 0.3, 0.5);
    assert!((x_half + 2.0).abs() < 1e-6, "x(1/2) = {x_half}");
    let profile = solve_profile_x(params, 10.0, Tolerance::uniform(1e-10).unwrap()).unwrap();
    let z = profile.z_at_x(-2.0).unwrap();
    assert!((z - 0.5).abs() < 1e-4, "z(−2) = {z}");
}

#[test]
fn endstate_truncation_for_constant_rate() {
    let params = ModelParams::constant(0.3).unwrap();
    let t = numerical_infinity(&params, 1e-3, InfinityStrategy::Endstate).unwrap();
    assert!((t.length - 1000f64.ln()).abs() < 1e-6, "M = {}", t.length);
    assert!((t.z_start - 1e-3).abs() < 1e-9);
}

#[test]
fn square_wave_ratio() {
    let arr = ModelParams::new(IgnitionKind::Arrhenius, 0.3, 40.0, 1.0).unwrap();
    let sq = detect_square_wave(&arr);
    assert!((sq.ratio - 1.0).abs() < 1e-12 && !sq.flag);
    let flat = ModelParams::new(IgnitionKind::ModifiedArrhenius, 0.3, 0.0, 1.0).unwrap();
    assert!((detect_square_wave(&flat).ratio - 1.0).abs() < 1e-12);

    // On [u⁻, 2] the modified temperature peaks at u⁻ > 1.5.
    let modified = ModelParams::new(IgnitionKind::ModifiedArrhenius, 0.3, 40.0, 1.0).unwrap();
    let t_minus = 1.0 - (0.4f64.sqrt() - 0.5).powi(2);
    let expected = (-40.0 / 0.75 + 40.0 / t_minus).exp();
    let sq = detect_square_wave(&modified);
    assert!((sq.ratio / expected - 1.0).abs() < 1e-9, "{} vs {expected}", sq.ratio);
    assert!(sq.flag);
}

#[test]
fn limit_eigen_data() {
    let params = ModelParams::constant(0.3).unwrap();
    let l = limit_data(c(1.0, 0.0), &params).unwrap();
    assert!((l.mu_grow - c(2.0, 0.0)).norm() < 1e-14);
    assert!((l.mu_decay - c(-1.581_138_830_084_19, 0.0)).norm() < 1e-12);
    let s = kato_init(c(1.0, 0.0), &params).unwrap();
    assert!((s[0].re + 0.083_772_233_983_162_07).abs() < 1e-12, "{}", s[0]);
    assert_eq!(s[1], c(1.0, 0.0));
    let v = adjoint_init(c(1.0, 0.0), &params).unwrap();
    assert!((v[1].re - 0.083_772_233_983_162_07).abs() < 1e-12);
    let (grow, decay) = eigenvalues(&l.matrix(c(1.0, 0.0)));
    assert!((grow + decay - l.matrix(c(1.0, 0.0)).trace()).norm() < 1e-12);
    assert!((grow * decay - l.matrix(c(1.0, 0.0)).det()).norm() < 1e-12);
}

#[test]
fn adjoint_initializer_annihilates_growing_mode() {
    let params = ModelParams::constant(0.3).unwrap();
    for lambda in [c(1.0, 0.0), c(0.3, 2.0), c(5.0, -7.0)] {
        let v = adjoint_init(lambda, &params).unwrap();
        let r = kato_init(lambda, &params).unwrap();
        let decay_vec = [c(1.0, 0.0), c(0.0, 0.0)];
        assert!(inner(&v, &r).norm() < 1e-12);
        assert!(inner(&v, &decay_vec).norm() > 0.5);
    }
}

/// exp(G) by scaling and squaring with a Taylor series.
fn expm(g: Mat2) -> Mat2 {
    let s = 10;
    let a = g.scale(c(0.5f64.powi(s), 0.0));
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for n in 1..20 {
        term = (term * a).scale(c(1.0 / n as f64, 0.0));
        sum = sum + term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

fn constant_system() -> (Mat2, [Complex64; 2]) {
    (Mat2::new(c(-1.0, 0.0), c(-0.3, 0.0), c(0.0, 0.0), c(2.0, 0.0)), [c(1.0, 0.0), c(1.0, 0.0)])
}

#[test]
fn adaptive_matches_matrix_exponential() {
    let (g, y0) = constant_system();
    let exact = expm(g).apply(&y0);
    let mut errors = Vec::new();
    for tol in [1e-6, 1e-7, 1e-8, 1e-9] {
        let (y, stats) = integrate_adaptive(|_, y| g.apply(y), 0.0, 1.0, y0, Tolerance::uniform(tol).unwrap()).unwrap();
        let err = (0..2).map(|i| (y[i] - exact[i]).norm()).fold(0.0, f64::max);
        assert!(err < 10.0 * tol, "tol {tol}: {err}");
        assert!(stats.accepted_steps >= 1);
        errors.push(err);
    }
    // Each tenfold tightening buys at least a factor of five overall.
    assert!(errors[3] * 5f64.powi(3) <= errors[0], "{errors:?}");
}

#[test]
fn fixed_rk4_cross_checks_adaptive() {
    let (g, y0) = constant_system();
    let (ya, _) = integrate_adaptive(|_, y| g.apply(y), 0.0, 1.0, y0, Tolerance::uniform(1e-12).unwrap()).unwrap();
    let (yf, stats) = integrate_fixed_rk4(|_, y| g.apply(y), 0.0, 1.0, y0, 200).unwrap();
    assert_eq!(stats.rhs_evaluations, 800);
    for i in 0..2 {
        assert!((ya[i] - yf[i]).norm() < 1e-6);
    }
    let (y, _) = integrate_fixed_rk4(|_, _: &[f64; 1]| [0.0], 0.0, 1.0, [3.5], 1).unwrap();
    assert_eq!(y, [3.5]);
}

#[test]
fn gamma_examples() {
    let modified = ModelParams::new(IgnitionKind::ModifiedArrhenius, 0.3, 25.0, 1.0).unwrap();
    assert_eq!(growth_exponent(&modified), 0.0);
    let arr = ModelParams::new(IgnitionKind::Arrhenius, 0.3, 40.0, 1.0).unwrap();
    let g = growth_exponent(&arr);
    assert!((g - 12.0 / (1.0 + 0.4f64.sqrt()).powi(2)).abs() < 1e-12);
    assert!((g - 4.503).abs() < 1e-3);
    assert_eq!(growth_exponent(&ModelParams::constant(0.3).unwrap()), 0.0);
}

#[test]
fn reduced_and_unreduced_windings_agree_off_origin() {
    let profile = Profile::from_z_start(ModelParams::constant(0.3).unwrap(), 1e-8).unwrap();
    let contour = Contour::new(10.0, 1e-4).unwrap();
    let tol = Tolerance::uniform(1e-10).unwrap();
    let reduced = winding_number(MethodId::MuX, &contour, &profile, tol, Coordinates::Z, true).unwrap();
    let unreduced = winding_number(MethodId::MuX, &contour, &profile, tol, Coordinates::Z, false).unwrap();
    assert_eq!(reduced.winding, 0);
    assert_eq!(unreduced.winding, 0);
}

#[test]
fn small_sweeps_are_stable() {
    let arr = SweepConfig::new(IgnitionKind::Arrhenius, Convention::ExpHalfRule, MethodId::MuX);
    let rows = stability_sweep(&[(0.0, 0.1), (0.0, 0.3), (0.0, 0.0)], &arr);
    for r in &rows {
        assert_eq!(r.winding, Some(0), "{r:?}");
    }
    let modified = SweepConfig::new(IgnitionKind::ModifiedArrhenius, Convention::PowerTenRule, MethodId::MuX);
    let rows = stability_sweep(&[(10.0, 0.3)], &modified);
    assert_eq!(rows[0].winding, Some(0), "{:?}", rows[0]);
    assert!(rows[0].radius >= 20.0);
}

#[test]
fn uncoupled_benchmark_cases() {
    let params = ModelParams::new(IgnitionKind::ModifiedArrhenius, 0.0, 0.0, 1.0).unwrap();
    let profile = standard_profile(params).unwrap();
    let adj = bench_convergence(MethodId::AdjointMuX, c(1.0, 0.0), &profile, Coordinates::Z).unwrap();
    assert!(adj.converged);
    assert_eq!(adj.achieved_tol, Some(1e-2));
    assert!(adj.points <= 5, "{adj:?}");
    let fwd = bench_convergence(MethodId::MuX, c(1.0, 0.0), &profile, Coordinates::Z).unwrap();
    assert!(!fwd.converged && fwd.note.is_some());
}

#[test]
fn benchmark_family_ordering() {
    let params =
        ModelParams::with_convention(IgnitionKind::ModifiedArrhenius, 0.3, 10.0, Convention::PowerTenRule).unwrap();
    let base = standard_profile(params).unwrap();
    let profile = solve_profile_x(params, base.truncation(), Tolerance::uniform(1e-12).unwrap()).unwrap();
    let fast = [MethodId::PolarAdjoint, MethodId::Polar, MethodId::MuX, MethodId::AdjointMuX];
    let slow = [MethodId::LeeStewartAdaptive, MethodId::ErpenbeckInhomogeneous, MethodId::ErpenbeckCentered];
    let all: Vec<MethodId> = fast.iter().chain(&slow).copied().collect();
    let cfg = FixedContourConfig { repeats: 1, ..FixedContourConfig::default() };
    let records = bench_fixed_contour(&all, &profile, &cfg).unwrap();
    let cost = |m: MethodId| records.iter().find(|r| r.method == m).unwrap().rhs_evaluations;
    let worst_fast = fast.iter().map(|&m| cost(m)).max().unwrap();
    let best_slow = slow.iter().map(|&m| cost(m)).min().unwrap();
    assert!(worst_fast < best_slow, "{worst_fast} vs {best_slow}");
}
