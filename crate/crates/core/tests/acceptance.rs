//! Acceptance suite: one PASS/FAIL line per criterion, each with a
//! wall-clock budget. Run with `cargo test --test acceptance`.

use std::f64::consts::{E, PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use logschro::calculus::{grigoryan_check, heat_kernel, log_identity_quadrature, pointwise_l, FieldCoefficients, Mass, QuadratureControl};
use logschro::forward::{make_source_basis, solve_schrodinger, ForwardOperator, PotentialField, SourceShape};
use logschro::gelfand::{
    analytic_angles, build_gelfand_data, compare_gelfand, default_time_grid, sup_norm_fit, weyl_fit, CompareTolerances,
    GelfandData, GelfandOptions,
};
use logschro::manifold::{build_model, Isometry, ModelKind, ObservationDescriptor, Point, SpectralModel};
use logschro::ucp::{isometry_gauge_check, recover_potential, solve_sources, ucp_nullspace_test, RecoveryOptions, UcpOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

fn two() -> Mass {
    Mass::new(2.0).unwrap()
}

fn circle(radius: f64, k: usize, resolution: Option<usize>) -> Arc<SpectralModel> {
    Arc::new(build_model(ModelKind::Circle { radius }, k, resolution.map(|n| vec![n])).unwrap())
}

fn half() -> ObservationDescriptor {
    ObservationDescriptor::AngularInterval { a: 0.0, b: PI }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn c1_log_identity() -> Check {
    let mut worst = 0.0_f64;
    for lambda in [1.0, E, 10.0, 1000.0] {
        let q = log_identity_quadrature(lambda).map_err(|e| e.to_string())?;
        worst = worst.max((q.value - lambda.ln()).abs());
    }
    Ok((worst <= 1e-8, format!("max |error| {worst:.2e}")))
}

fn c2_pointwise() -> Check {
    let m = circle(1.0, 16, None);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let coeffs: Vec<f64> = (0..m.basis_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = FieldCoefficients::new(m.clone(), coeffs).map_err(|e| e.to_string())?;
        let lu = u.apply_l(two());
        let points: Vec<Point> = (0..20).map(|_| Point::new(vec![rng.gen_range(0.0..TAU)])).collect();
        let oracle: Vec<f64> = points.iter().map(|p| lu.evaluate(p)).collect();
        let scale = oracle.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for (p, want) in points.iter().zip(&oracle) {
            let got = pointwise_l(&u, two(), p, QuadratureControl::default()).map_err(|e| e.to_string())?;
            worst = worst.max((got.value - want).abs() / scale);
        }
    }
    Ok((worst <= 1e-6, format!("max relative deviation {worst:.2e} over 1000 points")))
}

fn c3_forward() -> Check {
    let m = circle(1.0, 24, None);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f: Vec<f64> = (0..m.basis_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fc = FieldCoefficients::new(m.clone(), f.clone()).map_err(|e| e.to_string())?;
    let sol = solve_schrodinger(&m, two(), &PotentialField::zero(), &fc).map_err(|e| e.to_string())?;
    let block = m.block_of_index();
    let diag: Vec<f64> = f
        .iter()
        .zip(&block)
        .map(|(v, &k)| v / two().l_multiplier(m.eigenvalues()[k]))
        .collect();
    let diag_err = max_abs_diff(sol.field.coeffs(), &diag);

    let v = PotentialField::global("0.3cos", |p| 0.3 * p.coords[0].cos());
    let run = |k: usize| -> Result<Vec<f64>, String> {
        let m = circle(1.0, k, Some(512));
        let f = FieldCoefficients::from_samples(m.clone(), &m.sample(|p| p.coords[0].cos().exp()))
            .map_err(|e| e.to_string())?;
        let s = solve_schrodinger(&m, two(), &v, &f).map_err(|e| e.to_string())?;
        Ok(s.field.evaluate_at_nodes())
    };
    let conv = max_abs_diff(&run(32)?, &run(64)?);
    Ok((
        diag_err <= 1e-12 && conv <= 1e-8,
        format!("V=0 vs diagonal inverse {diag_err:.2e}; V=0.3cos K=32 vs K=64 {conv:.2e}"),
    ))
}

fn theta_oracle(t: f64, dx: f64) -> f64 {
    (-60..=60)
        .map(|j| {
            let d = dx + TAU * j as f64;
            (-d * d / (4.0 * t)).exp()
        })
        .sum::<f64>()
        / (4.0 * PI * t).sqrt()
}

fn c4_heat_kernel() -> Check {
    let m = circle(1.0, 40, None);
    let mut worst = 0.0_f64;
    let x = Point::new(vec![0.3]);
    for j in 0..20 {
        let t = 0.1 + 1.9 * j as f64 / 19.0;
        for i in 0..12 {
            let y = Point::new(vec![TAU * i as f64 / 12.0]);
            let got = heat_kernel(&m, two(), t, &x, &y).map_err(|e| e.to_string())?.value;
            let want = (-2.0 * t).exp() * theta_oracle(t, y.coords[0] - x.coords[0]);
            worst = worst.max((got - want).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Point, Point)> = (0..20)
        .map(|_| {
            (
                Point::new(vec![rng.gen_range(0.0..TAU)]),
                Point::new(vec![rng.gen_range(0.0..TAU)]),
            )
        })
        .collect();
    let times: Vec<f64> = (0..50).map(|i| 0.05 * 40f64.powf(i as f64 / 49.0)).collect();
    let g = grigoryan_check(&m, two(), &times, &pairs).map_err(|e| e.to_string())?;
    Ok((
        worst <= 1e-8 && g.violations == 0 && g.refined_violations == 0,
        format!(
            "theta oracle {worst:.2e}; Grigor'yan C={:.3} c={:.4}, {} + {} violations on {} + {} probes",
            g.fitted_c_prefactor, g.fitted_c_exponent, g.violations, g.refined_violations, g.probes, g.refined_probes
        ),
    ))
}

fn gelfand_circle(radius: f64, seed: u64) -> Result<(GelfandData, Vec<f64>), String> {
    let m = circle(radius, 5, None);
    let obs = m.restrict_to_observation(&half()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = make_source_basis(&m, &half(), 5, SourceShape::default(), &mut rng).map_err(|e| e.to_string())?;
    let data = build_gelfand_data(
        &m,
        two(),
        &PotentialField::zero(),
        &obs,
        &src,
        &default_time_grid(&m, two()),
        GelfandOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let angles = analytic_angles(&data, &m, &obs).map_err(|e| e.to_string())?;
    Ok((data, angles))
}

fn c5_gelfand() -> Check {
    let (data, angles) = gelfand_circle(1.0, 1)?;
    let want = [0.0, 1.0, 4.0, 9.0, 16.0];
    let eig_err = if data.eigenvalues.len() == 5 {
        data.eigenvalues
            .iter()
            .zip(want)
            .map(|(g, w)| (g - w).abs() / f64::max(w, 1.0))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mult_ok = data.multiplicities == vec![1, 2, 2, 2, 2];
    let angle = angles.iter().copied().fold(0.0, f64::max);
    Ok((
        eig_err <= 1e-6 && mult_ok && angle <= 1e-5,
        format!(
            "eigenvalue rel err {eig_err:.2e}; multiplicities {:?}; max angle {angle:.2e}",
            data.multiplicities
        ),
    ))
}

fn c6_discrimination() -> Check {
    let (a, _) = gelfand_circle(1.0, 1)?;
    let (b, _) = gelfand_circle(1.01, 1)?;
    let cmp = compare_gelfand(&a, &b, CompareTolerances::default()).map_err(|e| e.to_string())?;
    let expected = 1.0 - 1.0 / (1.01 * 1.01);
    let gap = cmp.rows.get(1).map_or(f64::NAN, |r| r.gap);
    Ok((
        !cmp.pass && cmp.first_failure == Some(1) && (gap - expected).abs() <= 1e-4,
        format!("first failure {:?}, gap {gap:.6} (expected {expected:.6})", cmp.first_failure),
    ))
}

fn ucp_sets(kind: &ModelKind, fraction: f64) -> ObservationDescriptor {
    match kind {
        ModelKind::Circle { .. } => ObservationDescriptor::AngularInterval { a: 0.0, b: TAU * fraction },
        ModelKind::FlatTorus { .. } => ObservationDescriptor::TorusBox {
            intervals: vec![[0.0, TAU], [0.0, TAU * fraction]],
        },
        ModelKind::Sphere2 { .. } => ObservationDescriptor::SphericalCap {
            center: [0.0, 0.0],
            radius: (1.0 - 2.0 * fraction).acos(),
        },
    }
}

fn c7_ucp() -> Check {
    let kinds = [
        ModelKind::Circle { radius: 1.0 },
        ModelKind::FlatTorus { edges: vec![TAU, TAU] },
        ModelKind::Sphere2 { radius: 1.0 },
    ];
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut worst_ratio = f64::INFINITY;
    for kind in &kinds {
        let multiplier = if matches!(kind, ModelKind::Sphere2 { .. }) { 1 } else { 2 };
        let opts = UcpOptions {
            node_multiplier: multiplier,
            ..UcpOptions::default()
        };
        for k in [8, 16, 32] {
            let m = build_model(kind.clone(), k, None).map_err(|e| e.to_string())?;
            for fraction in [0.75, 0.85, 0.95] {
                let r = ucp_nullspace_test(&m, two(), &ucp_sets(kind, fraction), opts).map_err(|e| e.to_string())?;
                cases += 1;
                worst_ratio = worst_ratio.min(r.sigma_min / r.sigma_max);
                if !(r.pass && r.null_dimension == 0 && r.sigma_min > r.solution_only_sigma_min) {
                    failures.push(format!("{} K={k} area {fraction}", kind.name()));
                }
            }
        }
    }
    // smaller sets, for the record only
    for (k, fraction) in [(16, 0.25), (32, 0.5)] {
        let m = build_model(kinds[0].clone(), k, None).map_err(|e| e.to_string())?;
        let r = ucp_nullspace_test(&m, two(), &ucp_sets(&kinds[0], fraction), UcpOptions::default())
            .map_err(|e| e.to_string())?;
        println!(
            "  info: circle K={k} area {fraction}: null dimension {}, sigma ratio {:.2e}",
            r.null_dimension,
            r.sigma_min / r.sigma_max
        );
    }
    Ok((
        failures.is_empty(),
        format!("{cases} cases, worst sigma ratio {worst_ratio:.2e}, failures {failures:?}"),
    ))
}

fn c8_recovery() -> Check {
    let v = PotentialField::global("0.3cos", |p| 0.3 * p.coords[0].cos());
    let mut errs = Vec::new();
    let mut uncovered = 0;
    for k in [16, 32, 48] {
        let m = circle(1.0, k, None);
        let obs = m.restrict_to_observation(&half()).map_err(|e| e.to_string())?;
        let op = ForwardOperator::new(m.clone(), two(), &v).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = SourceShape {
            radius: Some(PI / 5.0),
            jitter: 0.0,
        };
        let src = make_source_basis(&m, &half(), 6, shape, &mut rng).map_err(|e| e.to_string())?;
        let data = solve_sources(&op, &src).map_err(|e| e.to_string())?;
        let known = v.restricted_samples(&obs);
        let rec = recover_potential(&m, two(), &obs, &known, &data, RecoveryOptions::default())
            .map_err(|e| e.to_string())?;
        errs.push(rec.max_error(&v) / 0.3);
        uncovered = rec.uncovered;
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((
        errs[2] <= 1e-4 && monotone && uncovered == 0,
        format!("relative errors K=16/32/48: {:.2e} / {:.2e} / {:.2e}; uncovered {uncovered}", errs[0], errs[1], errs[2]),
    ))
}

fn c9_gauge() -> Check {
    let s = Arc::new(build_model(ModelKind::Sphere2 { radius: 1.0 }, 12, None).map_err(|e| e.to_string())?);
    let cap = ObservationDescriptor::SphericalCap {
        center: [0.0, 0.0],
        radius: PI / 3.0,
    };
    let obs = s.restrict_to_observation(&cap).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let src = make_source_basis(&s, &cap, 4, SourceShape::default(), &mut rng).map_err(|e| e.to_string())?;
    let zonal = PotentialField::global("zonal", |p| 0.5 * p.coords[0].cos().powi(2) - 0.2 * p.coords[0].cos());
    let rot = Isometry::SphereAxialRotation { angle: 0.9 };
    let r = isometry_gauge_check(&s, two(), &zonal, &obs, &rot, &src, 1e-10).map_err(|e| e.to_string())?;
    Ok((
        r.pass && r.record_deviation <= 1e-10,
        format!(
            "record deviation {:.2e}; intertwining A {:.2e}, L {:.2e}",
            r.record_deviation, r.intertwining_a, r.intertwining_l
        ),
    ))
}

fn c10_sanity() -> Check {
    let models = [
        (ModelKind::Circle { radius: 1.0 }, 48),
        (ModelKind::FlatTorus { edges: vec![TAU, TAU] }, 24),
        (ModelKind::Sphere2 { radius: 1.0 }, 16),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, k) in models {
        let m = build_model(kind.clone(), k, None).map_err(|e| e.to_string())?;
        let w = weyl_fit(&m);
        let s = sup_norm_fit(&m, two());
        ok &= w.pass && s.pass;
        detail.push(format!(
            "{} Weyl C={:.3} ({} viol), sup C={:.3} ({} viol)",
            kind.name(),
            w.constant,
            w.violations,
            s.constant,
            s.violations
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 10] = [
        ("log identity", 1, c1_log_identity),
        ("pointwise vs spectral L", 30, c2_pointwise),
        ("forward solver", 10, c3_forward),
        ("heat kernel", 10, c4_heat_kernel),
        ("Gel'fand extraction", 60, c5_gelfand),
        ("cross-model discrimination", 60, c6_discrimination),
        ("finite-rank UCP", 120, c7_ucp),
        ("potential recovery", 120, c8_recovery),
        ("gauge obstruction", 30, c9_gauge),
        ("spectral sanity", 10, c10_sanity),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(*budget);
        let (ok, detail) = match result {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({detail}; {:.2} s, budget {budget} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
