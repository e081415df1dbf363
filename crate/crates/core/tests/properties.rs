use std::sync::OnceLock;

use majda_znd::cli::{self, Cli, Table};
use majda_znd::integrator::{integrate_adaptive, integrate_fixed_rk4};
use majda_znd::linalg::{limit_data, pointwise_eigen, Mat2};
use majda_znd::model::{du_dz, solve_profile_x, u_of_z, Convention, ProfilePoint};
use majda_znd::stability::{winding_number, winding_with, Contour, StabilityError};
use majda_znd::bench::bench_convergence;
use majda_znd::evans::polar_norm_deviation;
use majda_znd::*;
use clap::Parser;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn modified_profile() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| {
        let params =
            ModelParams::with_convention(IgnitionKind::ModifiedArrhenius, 0.3, 10.0, Convention::PowerTenRule)
                .unwrap();
        let base = majda_znd::stability::standard_profile(params).unwrap();
        solve_profile_x(params, base.truncation(), Tolerance::uniform(1e-12).unwrap()).unwrap()
    })
}

fn flat_profile() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| {
        let params = ModelParams::new(IgnitionKind::Arrhenius, 0.3, 0.0, 1.0).unwrap();
        solve_profile_x(params, 12.0, Tolerance::uniform(1e-10).unwrap()).unwrap()
    })
}

fn applicable(profile: &Profile) -> Vec<MethodId> {
    MethodId::COMPARISON
        .iter()
        .copied()
        .filter(|&m| {
            !matches!(
                evaluate_d(m, c(1.0, 1.0), profile, Tolerance::uniform(1e-6).unwrap(), Coordinates::Z),
                Err(EvansError::NotSquareWave { .. })
            )
        })
        .collect()
}

/// Unrenormalized schemes start from exponentially small vectors and need a
/// negligible absolute floor; the others carry components that start at zero.
fn tol_for(m: MethodId, rel: f64) -> Tolerance {
    match m {
        MethodId::ErpenbeckHomogeneous | MethodId::NoMu => Tolerance::new(1e-300, rel).unwrap(),
        _ => Tolerance::uniform(rel).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn profile_stays_between_end_states(z1 in 0.0f64..=1.0, z2 in 0.0f64..=1.0, q in 0.0f64..0.499) {
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let u_minus = 1.0 + (1.0 - 2.0 * q).sqrt();
        let (a, b) = (u_of_z(lo, q).unwrap(), u_of_z(hi, q).unwrap());
        prop_assert!(a >= u_minus - 1e-15 && b <= 2.0 + 1e-15);
        prop_assert!(a <= b);
    }

    #[test]
    fn derivative_matches_central_difference(z in 0.01f64..0.99, q in 0.0f64..0.49) {
        let h = 1e-5;
        let fd = (u_of_z(z + h, q).unwrap() - u_of_z(z - h, q).unwrap()) / (2.0 * h);
        let exact = du_dz(z, q).unwrap();
        if exact.abs() > 0.0 {
            prop_assert!(((fd - exact) / exact).abs() < 1e-6);
        } else {
            prop_assert!(fd.abs() < 1e-9);
        }
    }

    #[test]
    fn constant_and_flat_arrhenius_coincide(u in 1.0f64..2.0, q in 0.0f64..0.49) {
        let a = ModelParams::constant(q).unwrap();
        let b = ModelParams::new(IgnitionKind::Arrhenius, q, 0.0, 1.0).unwrap();
        prop_assert_eq!(a.phi(u), b.phi(u));
        prop_assert_eq!(a.dphi(u).unwrap(), b.dphi(u).unwrap());
        let z = (u - 1.0) / 2.0 + 0.25;
        prop_assert_eq!(ProfilePoint::at(&a, z), ProfilePoint::at(&b, z));
    }

    #[test]
    fn flat_profile_is_exponential(x in -12.0f64..=0.0) {
        let z = flat_profile().z_at_x(x).unwrap();
        prop_assert!((z - x.exp()).abs() < 1e-8, "z({}) = {} vs {}", x, z, x.exp());
    }

    #[test]
    fn growing_limit_eigenvector(re in 1e-3f64..=10.0, im in -50.0f64..50.0, q in 0.05f64..0.49) {
        let params = ModelParams::constant(q).unwrap();
        let lambda = c(re, im);
        let l = limit_data(lambda, &params).unwrap();
        let g = l.matrix(lambda);
        let r = l.right_grow;
        let gr = g.apply(&r);
        let res = ((gr[0] - l.mu_grow * r[0]).norm_sqr() + (gr[1] - l.mu_grow * r[1]).norm_sqr()).sqrt();
        let scale = l.mu_grow.norm() * (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
        prop_assert!(res <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn pointwise_eigen_residuals(e in prop::array::uniform8(-10.0f64..10.0)) {
        let g = Mat2::new(c(e[0], e[1]), c(e[2], e[3]), c(e[4], e[5]), c(e[6], e[7]));
        let eig = pointwise_eigen(&g);
        for (mu, v) in [(eig.grow, eig.grow_vec), (eig.decay, eig.decay_vec)] {
            let gv = g.apply(&v);
            let res = ((gv[0] - mu * v[0]).norm_sqr() + (gv[1] - mu * v[1]).norm_sqr()).sqrt();
            prop_assert!(res < 1e-12 * g.norm().max(1.0), "residual {}", res);
        }
        prop_assert!(eig.grow.re >= eig.decay.re);
    }

    #[test]
    fn csv_cells_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let mut t = Table::new(&["value"]);
        t.rows = values.iter().map(|v| vec![format!("{v}")]).collect();
        let text = t.to_csv().unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
        prop_assert_eq!(back.len(), values.len());
        for (a, b) in back.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conjugate_symmetry(re in 0.0f64..8.0, im in 0.5f64..8.0) {
        let profile = modified_profile();
        let lambda = c(re, im);
        for m in applicable(profile) {
            let d = evaluate_d(m, lambda, profile, tol_for(m, 1e-10), Coordinates::Z).unwrap().value;
            let dc = evaluate_d(m, lambda.conj(), profile, tol_for(m, 1e-10), Coordinates::Z).unwrap().value;
            let err = (dc - d.conj()).norm() / d.norm();
            prop_assert!(err < 1e-10, "{}: {}", m, err);
        }
    }

    #[test]
    fn polar_norm_is_preserved(re in 0.0f64..10.0, im in -10.0f64..10.0) {
        let profile = modified_profile();
        for m in [MethodId::Polar, MethodId::PolarRadial, MethodId::PolarAdjoint, MethodId::PolarAdjointRadial] {
            for coords in [Coordinates::Z, Coordinates::X] {
                let dev = polar_norm_deviation(m, c(re, im), profile, Tolerance::uniform(1e-10).unwrap(), coords).unwrap();
                prop_assert!(dev <= 1e-6, "{} {:?}: {}", m, coords, dev);
            }
        }
    }
}

fn order_slope(errors: &[(f64, f64)]) -> f64 {
    let n = errors.len() as f64;
    let (sx, sy) = errors.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = errors.iter().map(|&(x, y)| (x.ln() - mx) * (y.ln() - my)).sum();
    let den: f64 = errors.iter().map(|&(x, _)| (x.ln() - mx).powi(2)).sum();
    -num / den
}

#[test]
fn fixed_rk4_is_fourth_order() {
    let e = 1f64.exp();
    let errors: Vec<(f64, f64)> = (2..8)
        .map(|p| {
            let n = 1usize << p;
            let (y, _) = integrate_fixed_rk4(|_, y: &[f64; 1]| [y[0]], 0.0, 1.0, [1.0], n).unwrap();
            (n as f64, (y[0] - e).abs())
        })
        .collect();
    let slope = order_slope(&errors);
    assert!((slope - 4.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn adaptive_pair_order() {
    // Error against accepted steps on a problem whose steps stay nearly uniform.
    let exact = (1f64).sin();
    let mut errors = Vec::new();
    for k in 4..10 {
        let tol = Tolerance::new(1e-300, 10f64.powi(-k)).unwrap();
        let (y, stats) =
            integrate_adaptive(|t, _: &[f64; 1]| [t.cos()], 0.0, 1.0, [0.0], tol).unwrap();
        errors.push((stats.accepted_steps as f64, (y[0] - exact).abs().max(1e-17)));
    }
    errors.dedup_by(|a, b| a.0 == b.0);
    let slope = order_slope(&errors);
    assert!(slope >= 4.5, "slope {slope} from {errors:?}");
}

#[test]
fn profile_replay_at_higher_accuracy() {
    let params = ModelParams::with_convention(IgnitionKind::Arrhenius, 0.3, 10.0, Convention::HalfReactionAtMinus2)
        .unwrap();
    let tol = 1e-8;
    let coarse = solve_profile_x(params, 10.0, Tolerance::uniform(tol).unwrap()).unwrap();
    let fine = solve_profile_x(params, 10.0, Tolerance::uniform(tol / 2.0).unwrap()).unwrap();
    let d = (coarse.z_at_x(-2.0).unwrap() - fine.z_at_x(-2.0).unwrap()).abs();
    assert!(d < tol, "{d}");
    let (_, zs) = coarse.table().unwrap().knots();
    assert!(zs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn winding_ignores_initial_mesh_density() {
    let profile = modified_profile();
    let tol = Tolerance::uniform(1e-8).unwrap();
    for radius in [4.0, 20.0] {
        for reduced in [true, false] {
            let coarse = Contour::new(radius, 1e-4).unwrap().with_points(20).unwrap();
            let dense = Contour::new(radius, 1e-4).unwrap().with_points(80).unwrap();
            let a = winding_number(MethodId::MuX, &coarse, profile, tol, Coordinates::Z, reduced).unwrap();
            let b = winding_number(MethodId::MuX, &dense, profile, tol, Coordinates::Z, reduced).unwrap();
            assert_eq!(a.winding, b.winding, "R = {radius}, reduced = {reduced}");
        }
    }
    // A function with zeros inside the contour.
    let f = |l: Complex64| -> Result<(Complex64, IntegrationStats), StabilityError> {
        Ok(((l - c(1.0, 2.0)) * (l - c(0.5, -1.0)) * (l - c(3.0, 0.0)), IntegrationStats::default()))
    };
    for n in [20, 80] {
        let contour = Contour::new(5.0, 1e-4).unwrap().with_points(n).unwrap();
        assert_eq!(winding_with(&contour, f).unwrap().winding, 3);
    }
}

#[test]
fn all_methods_share_winding_numbers() {
    for (kind, conv) in [
        (IgnitionKind::ModifiedArrhenius, Convention::PowerTenRule),
        (IgnitionKind::Arrhenius, Convention::ExpHalfRule),
    ] {
        for energy in [0.0, 10.0] {
            for q in [0.1, 0.3] {
                let params = ModelParams::with_convention(kind, q, energy, conv).unwrap();
                let base = majda_znd::stability::standard_profile(params).unwrap();
                let profile =
                    solve_profile_x(params, base.truncation(), Tolerance::uniform(1e-12).unwrap()).unwrap();
                // The backward schemes carry e^{−μ₂(λ)M}; keep it inside double range.
                let a = majda_znd::linalg::limit_data(c(1.0, 0.0), &params).unwrap().mu_decay.re.abs();
                let radius = f64::min(10.0, 600.0 / (a * profile.truncation()));
                let contour = Contour::new(radius, 1e-4).unwrap();
                let mut seen = Vec::new();
                for m in applicable(&profile) {
                    let w = winding_number(m, &contour, &profile, tol_for(m, 1e-8), Coordinates::Z, true).unwrap();
                    seen.push((m, w.winding));
                }
                assert!(seen.len() >= 14);
                assert!(seen.iter().all(|&(_, w)| w == seen[0].1), "{kind} E={energy} q={q}: {seen:?}");
            }
        }
    }
}

#[test]
fn adjoint_forward_ratio_is_continuous() {
    let profile = modified_profile();
    let contour = Contour::new(10.0, 1e-4).unwrap().with_points(200).unwrap();
    let tol = Tolerance::uniform(1e-10).unwrap();
    let ratios: Vec<Complex64> = contour
        .points()
        .iter()
        .map(|&l| {
            let a = evaluate_d(MethodId::AdjointMuX, l, profile, tol, Coordinates::Z).unwrap().value;
            let f = evaluate_d(MethodId::MuX, l, profile, tol, Coordinates::Z).unwrap().value;
            a / f
        })
        .collect();
    let smallest = ratios.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min);
    assert!(smallest > 1e-6, "ratio comes near zero: {smallest}");
    for w in ratios.windows(2) {
        assert!((w[1] / w[0] - 1.0).norm() < 0.5, "jump between {} and {}", w[0], w[1]);
    }
}

#[test]
fn halving_the_achieved_tolerance_is_stable() {
    let profile = modified_profile();
    for m in [MethodId::MuX, MethodId::AdjointMuX, MethodId::PolarRadial, MethodId::LeeStewartAdaptive] {
        for lambda in [c(1.0, 0.0), c(0.0, 10.0)] {
            let r = bench_convergence(m, lambda, profile, Coordinates::Z).unwrap();
            assert!(r.converged, "{m} {lambda}");
            let rel = r.achieved_tol.unwrap();
            let at = |relt: f64| {
                let tol = Tolerance::new(majda_znd::bench::SWEEP_ABS_TOL, relt).unwrap();
                evaluate_d(m, lambda, profile, tol, Coordinates::Z).unwrap().value
            };
            let (a, b) = (at(rel), at(rel / 2.0));
            assert!((a - b).norm() / b.norm() < 2e-6, "{m} {lambda}");
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let profile = modified_profile();
    let contour = Contour::new(20.0, 1e-4).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            winding_number(MethodId::MuX, &contour, profile, Tolerance::uniform(1e-8).unwrap(), Coordinates::Z, true)
                .unwrap()
        })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.winding, b.winding);
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.value.re.to_bits(), y.value.re.to_bits());
        assert_eq!(x.value.im.to_bits(), y.value.im.to_bits());
    }
}

fn temp_file(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("majda-znd-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn eval_csv_reproduces_in_memory_value() {
    let out = temp_file("eval.csv");
    let args = ["majda-znd", "eval", "--E", "10", "--ignition", "modified", "--lambda", "0.7,-3.1", "--out"];
    let cli = Cli::parse_from(args.iter().copied().chain([out.to_str().unwrap()]));
    cli::run(&cli).unwrap();
    let params =
        ModelParams::with_convention(IgnitionKind::ModifiedArrhenius, 0.3, 10.0, Convention::PowerTenRule).unwrap();
    let profile = majda_znd::stability::standard_profile(params).unwrap();
    let d = evaluate_d(MethodId::MuX, c(0.7, -3.1), &profile, Tolerance::uniform(1e-8).unwrap(), Coordinates::Z)
        .unwrap()
        .value;
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let rec = rdr.records().next().unwrap().unwrap();
    let re: f64 = rec[2].parse().unwrap();
    let im: f64 = rec[3].parse().unwrap();
    assert_eq!(re.to_bits(), d.re.to_bits());
    assert_eq!(im.to_bits(), d.im.to_bits());
}

#[test]
fn cli_examples() {
    let out = temp_file("verify.csv");
    let cli = Cli::parse_from(["majda-znd", "verify", "--q", "0.3", "--R", "10", "--out", out.to_str().unwrap()]);
    let summary = cli::run(&cli).unwrap();
    let worst: f64 = summary.split_whitespace().next().unwrap().trim_start_matches("max_rel_error=").parse().unwrap();
    assert!(worst <= 1e-3, "{summary}");
    assert_eq!(csv::Reader::from_path(&out).unwrap().records().count(), 55);

    let out = temp_file("profile.csv");
    let cli = Cli::parse_from([
        "majda-znd", "profile", "--E", "10", "--q", "0.3", "--ignition", "arrhenius", "--convention",
        "half-reaction", "--out", out.to_str().unwrap(),
    ]);
    cli::run(&cli).unwrap();
    let rows: Vec<(f64, f64)> = csv::Reader::from_path(&out)
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let i = rows.iter().position(|&(x, _)| x >= -2.0).unwrap();
    let ((x0, z0), (x1, z1)) = (rows[i - 1], rows[i]);
    let z = z0 + (z1 - z0) * (-2.0 - x0) / (x1 - x0);
    assert!((z - 0.5).abs() < 1e-4, "{z}");

    let out = temp_file("sweep.json");
    let cli = Cli::parse_from([
        "majda-znd", "sweep", "--grid", "E=0:10:10,q=0.1:0.4:0.3", "--ignition", "modified", "--format", "json",
        "--out", out.to_str().unwrap(),
    ]);
    cli::run(&cli).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["provenance"]["integrator"], majda_znd::integrator::ADAPTIVE_PAIR);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["winding"] == 0.0));

    let bad = Cli::parse_from(["majda-znd", "contour", "--R", "0"]);
    assert_eq!(cli::run(&bad).unwrap_err().exit_code(), 2);
}
