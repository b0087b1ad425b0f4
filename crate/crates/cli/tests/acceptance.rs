//! Acceptance suite: one line per criterion with its measured values,
//! runtime and verdict. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scatterlab_cli::run_with;
use scatterlab_core::eigencalc::{convergence_order, fd_dirichlet_eigs, GridDomain, RegionSpec};
use scatterlab_core::forward::{
    disk_farfield_series, far_field, minimum_truncation, optical_theorem_residual,
    reciprocity_residual, solve_exterior_dirichlet, AngleGrid, WaveParams,
};
use scatterlab_core::geometry::{min_enclosing_ball_of, BoundaryCurve};
use scatterlab_core::harness::{separation_sweep, SweepPlan};
use scatterlab_core::specfun::{bessel_j_seq, bessel_y_seq, gamma0, wronskian};
use scatterlab_core::supersolution::{
    decide_admissibility, liouville_convergence_order, verify_supersolution, Admissibility,
    FnField, SupersolutionCandidate,
};
use scatterlab_core::{uniqueness_threshold, Dimension};

type Outcome = Result<String, String>;

/// First zero of `J₀` from its power series, independent of the library.
fn gamma0_oracle() -> f64 {
    let j0 = |x: f64| {
        let q = -(x * x) / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for m in 1..60 {
            term *= q / (m * m) as f64;
            sum += term;
        }
        sum
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["scatterlab"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse::<f64>().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in output {text:?}"))
}

fn check(cond: bool, what: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what)
    }
}

fn closed_form_thresholds() -> Outcome {
    let query = |region: &[&str]| {
        let mut args = vec!["threshold", "--region"];
        args.extend_from_slice(region);
        let (code, out) = cli(&args);
        check(code == 0, format!("exit {code} for {region:?}")).map(|_| out)
    };
    let ball = query(&["ball", "3", "1"])?;
    let lambda_ball = field(&ball, "lambda1");
    check(lambda_ball == PI * PI, format!("ball lambda1 {lambda_ball}"))?;
    let disk = query(&["ball", "2", "1"])?;
    let g = gamma0_oracle();
    let lambda_disk = field(&disk, "lambda1");
    check((lambda_disk - g * g).abs() <= 1e-12, format!("disk lambda1 {lambda_disk}"))?;
    let rect = query(&["rect", "1", "1"])?;
    let k_rect = field(&rect, "k0");
    let expect = PI / 2.0 * 2f64.sqrt();
    check((k_rect - expect).abs() <= 1e-12, format!("rect k0 {k_rect}"))?;
    let interval = query(&["interval", "1"])?;
    let k_interval = field(&interval, "k0");
    check(k_interval == PI / 2.0, format!("interval k0 {k_interval}"))?;
    Ok(format!(
        "ball λ1 = {lambda_ball}, disk λ1 = {lambda_disk}, rect k0 = {k_rect}, interval k0 = {k_interval}"
    ))
}

fn special_functions() -> Outcome {
    let g = gamma0();
    check((g - 2.404825557695773).abs() <= 1e-12, format!("gamma0 {g}"))?;
    check((g - gamma0_oracle()).abs() <= 1e-12, format!("gamma0 vs series {g}"))?;
    let mut recurrence: f64 = 0.0;
    let mut wr: f64 = 0.0;
    for &x in &[0.1, 0.5, 1.0, 2.5, 7.0, 15.0, 24.9, 25.1, 40.0, 100.0, 200.0] {
        let nmax = 40;
        let j = bessel_j_seq(nmax, x);
        let y = bessel_y_seq(nmax, x).map_err(|e| e.to_string())?;
        for n in 1..nmax as usize {
            let c = 2.0 * n as f64 / x;
            for s in [&j, &y] {
                let scale = s[n - 1].abs() + s[n + 1].abs() + (c * s[n]).abs();
                recurrence = recurrence.max((s[n - 1] + s[n + 1] - c * s[n]).abs() / scale);
            }
        }
        for n in 0..nmax as usize {
            let w = j[n + 1] * y[n] - j[n] * y[n + 1];
            wr = wr.max((w / wronskian(x) - 1.0).abs());
        }
    }
    check(recurrence <= 1e-10, format!("recurrence defect {recurrence:e}"))?;
    check(wr <= 1e-10, format!("Wronskian defect {wr:e}"))?;
    Ok(format!(
        "γ0 = {g}, recurrence defect {recurrence:.1e}, Wronskian defect {wr:.1e}"
    ))
}

fn disk_oracle() -> Outcome {
    let disk = BoundaryCurve::unit_circle();
    let mut worst: f64 = 0.0;
    for k in [0.5, 1.0, 2.0, 5.0] {
        let wave = WaveParams::new(k, [1.0, 0.0]).map_err(|e| e.to_string())?;
        let density = solve_exterior_dirichlet(&disk, wave, 256).map_err(|e| e.to_string())?;
        let bie = far_field(&disk, &density, wave, AngleGrid::default()).map_err(|e| e.to_string())?;
        let series = disk_farfield_series(1.0, wave, AngleGrid::default(), minimum_truncation(k, 1.0))
            .map_err(|e| e.to_string())?;
        let rel = bie.relative_l2_distance(&series).map_err(|e| e.to_string())?;
        check(rel <= 1e-6, format!("k = {k}: relative L2 {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("max relative L2 distance {worst:.1e}"))
}

fn physical_invariants() -> Outcome {
    let curves = [
        ("disk", BoundaryCurve::unit_circle()),
        ("ellipse", BoundaryCurve::ellipse([0.2, -0.1], 1.2, 0.7).unwrap()),
        ("kite", BoundaryCurve::kite([0.0, 0.0], 1.0).unwrap()),
    ];
    let pairs: Vec<(f64, f64)> = (0..16)
        .map(|i| (0.37 * i as f64, 2.9 - 0.61 * i as f64))
        .collect();
    let mut summary = Vec::new();
    for (name, curve) in &curves {
        let recip = reciprocity_residual(curve, 1.0, &pairs, 128).map_err(|e| e.to_string())?;
        let wave = WaveParams::from_angle(1.0, 0.3).map_err(|e| e.to_string())?;
        let density = solve_exterior_dirichlet(curve, wave, 128).map_err(|e| e.to_string())?;
        let pattern = far_field(curve, &density, wave, AngleGrid::default()).map_err(|e| e.to_string())?;
        let optical = optical_theorem_residual(curve, &density, &pattern).map_err(|e| e.to_string())?;
        check(recip <= 1e-6, format!("{name}: reciprocity {recip:e}"))?;
        check(optical <= 1e-5, format!("{name}: optical theorem {optical:e}"))?;
        summary.push(format!("{name} recip {recip:.1e} optical {optical:.1e}"));
    }
    Ok(summary.join(", "))
}

fn fd_eigensolver() -> Outcome {
    let square = |h: f64| {
        let g = GridDomain::square(1.0, h).map_err(|e| e.to_string())?;
        fd_dirichlet_eigs(&g, 2).map_err(|e| e.to_string())
    };
    let fine = square(1.0 / 128.0)?;
    let (l1, l2) = (fine.eigenvalues[0], fine.eigenvalues[1]);
    let e1 = (l1 / (2.0 * PI * PI) - 1.0).abs();
    let e2 = (l2 / (5.0 * PI * PI) - 1.0).abs();
    check(e1 <= 5e-3, format!("λ1 = {l1}, relative error {e1:e}"))?;
    check(e2 <= 1e-2, format!("λ2 = {l2}, relative error {e2:e}"))?;
    let coarse = square(1.0 / 32.0)?;
    let medium = square(1.0 / 64.0)?;
    let order = convergence_order(coarse.eigenvalues[0], medium.eigenvalues[0], l1);
    check((order - 2.0).abs() <= 0.2, format!("order {order}"))?;
    let h = 1.0 / 64.0;
    let mut previous = f64::INFINITY;
    for cells in [40, 48, 56, 64] {
        let g = GridDomain::square(cells as f64 * h, h).map_err(|e| e.to_string())?;
        let lambda = fd_dirichlet_eigs(&g, 1).map_err(|e| e.to_string())?.eigenvalues[0];
        check(lambda < previous, format!("λ1 not decreasing at side {}", cells as f64 * h))?;
        previous = lambda;
    }
    Ok(format!(
        "λ1 err {e1:.1e}, λ2 err {e2:.1e}, order {order:.3}, nested squares decreasing"
    ))
}

fn supersolution_suite() -> Outcome {
    let regions = [
        RegionSpec::Ball { dim: Dimension::Two, radius: 1.0 },
        RegionSpec::Ball { dim: Dimension::Three, radius: 1.0 },
        RegionSpec::Rect { r: 1.0, h: 0.5 },
        RegionSpec::CylinderOverRect { r: 1.0, h: 1.0 },
        RegionSpec::Interval { h: 1.0 },
        RegionSpec::SlabOverInterval { h: 1.0 },
    ];
    for region in &regions {
        let c = SupersolutionCandidate::for_region(region).map_err(|e| e.to_string())?;
        for (scale, expect) in [(1.0, true), (0.9, true), (1.1, false)] {
            let report = verify_supersolution(&c, scale * c.k0, None).map_err(|e| e.to_string())?;
            check(report.pass == expect, format!("{region} at {scale} k0: pass = {}", report.pass))?;
            if !expect {
                check(
                    report.max_residual > 0.0 && c.eval(&report.witness_max).is_ok(),
                    format!("{region}: witness {:?}", report.witness_max),
                )?;
            }
        }
    }
    let k = 1.0;
    let dir = [0.6f64, 0.8];
    let u = FnField {
        value: move |x: [f64; 2]| (k * (x[0] * dir[0] + x[1] * dir[1])).cos(),
        laplacian: move |x: [f64; 2]| -k * k * (k * (x[0] * dir[0] + x[1] * dir[1])).cos(),
    };
    let mut orders = Vec::new();
    for (region, reach) in [
        (RegionSpec::SlabOverInterval { h: 1.0 }, 0.8),
        (RegionSpec::Ball { dim: Dimension::Two, radius: 1.0 }, 0.5),
    ] {
        let c = SupersolutionCandidate::for_region(&region).map_err(|e| e.to_string())?;
        let v = c.planar().ok_or("no planar view")?;
        let points: Vec<[f64; 2]> = (0..9)
            .flat_map(|i| (0..9).map(move |j| [reach * (i as f64 / 4.0 - 1.0), reach * (j as f64 / 4.0 - 1.0)]))
            .collect();
        let (p, q) = liouville_convergence_order(&u, &v, k, &points, 0.05).map_err(|e| e.to_string())?;
        check((p - 2.0).abs() <= 0.2 && (q - 2.0).abs() <= 0.2, format!("{region}: orders {p}, {q}"))?;
        orders.push(format!("{p:.3}/{q:.3}"));
    }
    Ok(format!(
        "6 candidates pass at k0 and 0.9 k0, fail at 1.1 k0; identity orders {}",
        orders.join(", ")
    ))
}

fn admissibility_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut tally = [0usize; 3];
    for case in 0..20 {
        let region = match case % 3 {
            0 => RegionSpec::Rect { r: rng.gen_range(0.5..2.0), h: rng.gen_range(0.5..2.0) },
            1 => RegionSpec::Interval { h: rng.gen_range(0.3..3.0) },
            _ => {
                let h = 1.0 / 16.0;
                let w = rng.gen_range(16..40) as f64 * h;
                let t = rng.gen_range(16..40) as f64 * h;
                let notch = rng.gen_bool(0.5);
                let g = GridDomain::from_predicate([0.0, 0.0], [w, t], h, |x, y| {
                    let inside = x > 1e-9 && x < w - 1e-9 && y > 1e-9 && y < t - 1e-9;
                    inside && !(notch && x > 0.5 * w && y > 0.5 * t)
                })
                .map_err(|e| e.to_string())?;
                RegionSpec::Grid(g)
            }
        };
        let k0 = uniqueness_threshold(&region).map_err(|e| e.to_string())?;
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let k = k0 * (1.0 + side * rng.gen_range(0.05..0.5));
        let decision = decide_admissibility(&region, k).map_err(|e| e.to_string())?;
        tally[case % 3] += 1;
        match decision {
            Admissibility::Admissible { candidate, .. } => {
                check(k <= k0, format!("case {case}: admissible at k = {k} > k0 = {k0}"))?;
                let report = verify_supersolution(&candidate, k, None).map_err(|e| e.to_string())?;
                check(report.pass, format!("case {case}: candidate fails at k = {k}"))?;
            }
            Admissibility::Inadmissible { residual, .. } => {
                check(k > k0 && residual > 0.0, format!("case {case}: inadmissible at k = {k}, k0 = {k0}"))?;
            }
            Admissibility::Indeterminate { error_band, .. } => {
                return Err(format!("case {case}: k = {k} inside band {error_band} of k0 = {k0}"));
            }
        }
    }
    Ok(format!(
        "20 cases agree ({} rect, {} interval, {} grid)",
        tally[0], tally[1], tally[2]
    ))
}

fn separation_experiment() -> Outcome {
    let disk = BoundaryCurve::unit_circle();
    let kite = BoundaryCurve::kite([0.0, 0.0], 1.0).unwrap();
    let (_, radius) = min_enclosing_ball_of(&[disk.clone(), kite.clone()]);
    let region = RegionSpec::Ball { dim: Dimension::Two, radius };
    let k0 = uniqueness_threshold(&region).map_err(|e| e.to_string())?;
    let plan = |a: &BoundaryCurve, b: &BoundaryCurve| SweepPlan {
        curve_a: a.clone(),
        curve_b: b.clone(),
        direction: [1.0, 0.0],
        ks: vec![0.9 * k0],
        n: 128,
        angles: AngleGrid::default(),
        region: region.clone(),
        output: None,
    };
    let distinct = separation_sweep(&plan(&disk, &kite)).map_err(|e| e.to_string())?;
    let same = separation_sweep(&plan(&kite, &kite)).map_err(|e| e.to_string())?;
    let (d, s) = (&distinct[0], &same[0]);
    check(d.failure.is_none() && s.failure.is_none(), "solver failure".into())?;
    check(d.below_threshold, format!("k = {} not below k0 = {k0}", d.k))?;
    check(d.delta >= 10.0 * d.error_floor, format!("δ = {} vs floor {}", d.delta, d.error_floor))?;
    check(s.delta <= s.error_floor, format!("identical δ = {} vs floor {}", s.delta, s.error_floor))?;
    Ok(format!(
        "k = {:.4}, δ(disk, kite) = {:.3e}, floor {:.1e}; identical δ = {:.1e}, floor {:.1e}",
        d.k, d.delta, d.error_floor, s.delta, s.error_floor
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("closed-form thresholds", closed_form_thresholds, Duration::from_secs(1)),
        ("special functions", special_functions, Duration::from_secs(1)),
        ("forward solver vs series oracle", disk_oracle, Duration::from_secs(10)),
        ("reciprocity and optical theorem", physical_invariants, Duration::from_secs(30)),
        ("finite-difference eigensolver", fd_eigensolver, Duration::from_secs(60)),
        ("supersolution suite", supersolution_suite, Duration::from_secs(30)),
        ("admissibility consistency", admissibility_consistency, Duration::from_secs(60)),
        ("separation experiment", separation_experiment, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, criterion, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = criterion();
        let elapsed = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(detail) if elapsed <= *budget => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; over the {budget:?} budget")),
            Err(reason) => ("FAIL", reason),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {} {verdict} [{name}] {:.2}s: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
