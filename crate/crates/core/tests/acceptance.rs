//! Acceptance gate. Each test checks one criterion at its stated tolerance
//! and prints a single PASS/FAIL line.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uavcover::config::{load_config, ExperimentConfig};
use uavcover::experiment::compute;
use uavcover::multiuav::{audit, plan_clustered, plan_uniform_split, MultiUavConfig};
use uavcover::optimize::{finite_difference_gradient, pso, GdConfig, PsoConfig};
use uavcover::placement::{
    default_high_shf_bracket, grad_total, place_pso, place_symmetric, worst_case_angle_high_shf,
    worst_case_angle_low_shf,
};
use uavcover::propagation::{LowShfConstants, RadioParams};
use uavcover::scenario::{
    generate_symmetric_users, generate_zoned_users, total_path_loss, Building, IndoorUser,
    UserHeight, UserZone,
};
use uavcover::{Bounds3, Point3};

// Written to the raw stderr handle so the line shows up even when the test
// harness captures output of passing tests.
fn report(n: u32, pass: bool, detail: String) {
    let _ = writeln!(
        std::io::stderr(),
        "acceptance criterion {n}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn load(name: &str) -> ExperimentConfig {
    load_config(&configs_dir().join(name))
        .unwrap()
        .unwrap_or_else(|d| panic!("{name}: {d}"))
        .config
}

#[test]
fn criterion_1_optimal_angle() {
    let theta = worst_case_angle_low_shf(&LowShfConstants::default()).unwrap();
    let c = theta.to_radians().cos();
    let pass = (theta - 48.654).abs() <= 0.005 && (c - 0.6606).abs() <= 0.0005;
    report(1, pass, format!("theta = {theta:.5} deg, cos = {c:.5}"));
}

#[test]
fn criterion_2_high_shf_angle() {
    let mut worst: f64 = 0.0;
    let mut seen = Vec::new();
    for f in [10.0, 15.0, 28.0] {
        let params = RadioParams::high_shf(f).unwrap();
        for z_b in (10..=50).step_by(5) {
            let b = Building::new(20.0, 50.0, z_b as f64, 5.0).unwrap();
            let t = worst_case_angle_high_shf(&b, &params, &default_high_shf_bracket()).unwrap();
            worst = worst.max((t - 15.0).abs());
            seen.push(t);
        }
    }
    let lo = seen.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = seen.iter().copied().fold(0.0, f64::max);
    report(
        2,
        worst <= 1.0,
        format!("{} cases, angles in [{lo:.4}, {hi:.4}] deg, max |theta - 15| = {worst:.4}", seen.len()),
    );
}

#[test]
fn criterion_3_symmetric_table() {
    let targets = [(200.0, 20.025, 7.8825e4), (250.0, 30.809, 9.9971e4), (300.0, 40.746, 1.2146e5)];
    let params = RadioParams::low_shf(2.0).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for (z_b, x_ref, l_ref) in targets {
        let b = Building::new(20.0, 50.0, z_b, 5.0).unwrap();
        let users = generate_symmetric_users(&b, 20, UserHeight::FloorLevels, 1).unwrap();
        let (gd, _) = place_symmetric(&b, &users, &params, &GdConfig::default()).unwrap();
        let (ps, _) = place_pso(&b, &users, &params, &PsoConfig::default()).unwrap();
        for (name, p) in [("gd", &gd), ("pso", &ps)] {
            let x = p.standoff(&b);
            let rel = p.total_path_loss / l_ref - 1.0;
            let ok = (x - x_ref).abs() <= 0.5 && rel.abs() <= 2e-3;
            pass &= ok;
            details.push(format!(
                "z_b={z_b} {name}: x={x:.3} (ref {x_ref}), L={:.1} ({:+.3}%)",
                p.total_path_loss,
                100.0 * rel
            ));
        }
        let agree = gd.position.distance(ps.position) <= 0.1
            && (gd.total_path_loss - ps.total_path_loss).abs() <= 10.0;
        pass &= agree;
        details.push(format!(
            "z_b={z_b} gd-pso: {:.4} m, {:.4} dB",
            gd.position.distance(ps.position),
            (gd.total_path_loss - ps.total_path_loss).abs()
        ));
    }
    report(3, pass, details.join("; "));
}

fn random_case(rng: &mut ChaCha8Rng) -> (Building, Vec<IndoorUser>, Point3) {
    let b = Building::new(
        rng.random_range(5.0..40.0),
        rng.random_range(10.0..60.0),
        rng.random_range(10.0..200.0),
        5.0,
    )
    .unwrap();
    let n = rng.random_range(1..=30);
    let users = (0..n)
        .map(|i| {
            IndoorUser::new(
                i + 1,
                Point3::new(
                    rng.random_range(0.0..b.x_b),
                    rng.random_range(0.0..b.y_b),
                    rng.random_range(0.0..b.z_b),
                ),
            )
        })
        .collect();
    let uav = Point3::new(
        b.x_b + rng.random_range(1.0..150.0),
        rng.random_range(-20.0..b.y_b + 20.0),
        rng.random_range(0.0..1.5 * b.z_b),
    );
    (b, users, uav)
}

#[test]
fn criterion_4_gradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for params in [RadioParams::low_shf(2.0).unwrap(), RadioParams::high_shf(15.0).unwrap()] {
        for _ in 0..100 {
            let (b, users, uav) = random_case(&mut rng);
            let g = grad_total(uav, &users, &params).unwrap().to_array();
            let fd = finite_difference_gradient(
                |p| total_path_loss(Point3::new(p[0], p[1], p[2]), &users, &params, &b).unwrap(),
                &uav.to_array(),
                1e-4,
            );
            let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..3 {
                // Components far below the gradient's magnitude are compared
                // against it rather than against themselves.
                let scale = fd[i].abs().max(1e-3 * norm).max(1e-6);
                worst = worst.max((g[i] - fd[i]).abs() / scale);
            }
            count += 1;
        }
    }
    report(
        4,
        worst < 1e-5,
        format!("{count} configurations, worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_5_symmetry_stationarity() {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut runs = 0;
    for params in [RadioParams::low_shf(2.0).unwrap(), RadioParams::high_shf(15.0).unwrap()] {
        for seed in 0..20 {
            let b = Building::new(
                rng.random_range(10.0..40.0),
                rng.random_range(20.0..60.0),
                5.0 * rng.random_range(4..50) as f64,
                5.0,
            )
            .unwrap();
            let users = generate_symmetric_users(&b, 4 * rng.random_range(1..6), UserHeight::FloorLevels, seed).unwrap();
            let x = b.x_b + rng.random_range(1.0..100.0);
            let g = grad_total(b.center_line(x), &users, &params).unwrap();
            worst = worst.max(g.d_dy.abs()).max(g.d_dz.abs());
            runs += 1;
        }
    }
    report(5, worst < 1e-8, format!("{runs} rosters, max |dL/dy|, |dL/dz| = {worst:.2e} dB/m"));
}

#[test]
fn criterion_6_trends() {
    let params = RadioParams::low_shf(2.0).unwrap();
    let gd = GdConfig::default();
    let standoff = |x_b: f64, z_b: f64| {
        let b = Building::new(x_b, 50.0, z_b, 5.0).unwrap();
        let users = generate_symmetric_users(&b, 20, UserHeight::FloorLevels, 1).unwrap();
        let (p, _) = place_symmetric(&b, &users, &params, &gd).unwrap();
        p.standoff(&b)
    };
    let heights: Vec<f64> = [200.0, 250.0, 300.0].iter().map(|&z| standoff(20.0, z)).collect();
    let widths: Vec<f64> = [10.0, 30.0, 50.0].iter().map(|&x| standoff(x, 250.0)).collect();
    let up = heights.windows(2).all(|w| w[1] > w[0]);
    let down = widths.windows(2).all(|w| w[1] < w[0]);
    report(
        6,
        up && down,
        format!("x_opt over z_b: {heights:.3?}; standoff over x_b: {widths:.3?}"),
    );
}

fn event_roster(building: &Building, seed: u64) -> Vec<IndoorUser> {
    let zones = [
        UserZone {
            z_min: 75.0,
            z_max: 100.0,
            count: 200,
        },
        UserZone {
            z_min: 0.0,
            z_max: 75.0,
            count: 200,
        },
    ];
    generate_zoned_users(building, &zones, seed).unwrap()
}

#[test]
fn criterion_7_multi_uav() {
    let b = Building::new(20.0, 50.0, 100.0, 5.0).unwrap();
    let cfg = MultiUavConfig::default();
    let mut clustered = Vec::new();
    let mut split = Vec::new();
    let mut audits_ok = true;
    for seed in 1..=10 {
        let users = event_roster(&b, seed);
        let c = plan_clustered(&users, &b, &cfg).unwrap();
        let u = plan_uniform_split(&users, &b, &cfg).unwrap();
        audits_ok &= audit(&c, &users, &b, &cfg).is_empty() && audit(&u, &users, &b, &cfg).is_empty();
        clustered.push(c.k);
        split.push(u.k);
    }
    let mut sorted = clustered.clone();
    sorted.sort();
    let median = 0.5 * (sorted[4] + sorted[5]) as f64;
    let in_range = clustered.iter().all(|k| (4..=7).contains(k));
    let wins = clustered.iter().zip(&split).filter(|(c, u)| u > c).count();
    let c_range = (*sorted.first().unwrap(), *sorted.last().unwrap());
    let u_range = (*split.iter().min().unwrap(), *split.iter().max().unwrap());
    let headline = (c_range.0..=c_range.1).contains(&5) && (u_range.0..=u_range.1).contains(&9);
    let pass = in_range && median == 5.0 && wins >= 9 && headline && audits_ok;
    report(
        7,
        pass,
        format!(
            "clustered k = {clustered:?} (median {median}), uniform split k = {split:?}, \
             split > clustered in {wins}/10, audits {}",
            if audits_ok { "clean" } else { "violated" }
        ),
    );
}

#[test]
fn criterion_8_pso_bowl() {
    let target = Point3::new(1.0, 2.0, 3.0);
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    let mut iterations = 0;
    for seed in 0..10 {
        let cfg = PsoConfig {
            bounds: Bounds3::new((0.0, 10.0), (0.0, 10.0), (0.0, 10.0)).unwrap(),
            max_iterations: 200,
            seed,
            ..PsoConfig::default()
        };
        let r = pso(|p| Ok(p.distance_squared(target)), &cfg).unwrap();
        worst = worst.max(r.best.distance(target));
        let costs: Vec<f64> = r.trace.objectives().collect();
        monotone &= costs.windows(2).all(|w| w[1] <= w[0]);
        iterations = iterations.max(r.trace.len() - 1);
    }
    report(
        8,
        worst <= 1e-2 && monotone && iterations <= 200,
        format!("10 seeds, {iterations} iterations, max distance {worst:.2e}, traces non-increasing: {monotone}"),
    );
}

fn csv_bytes(config: &ExperimentConfig) -> Vec<Vec<u8>> {
    compute(config, configs_dir())
        .unwrap()
        .iter()
        .map(|t| t.to_csv().unwrap())
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let mut table2 = load("table2.toml");
    table2.sweep.retain(|c| c.label.as_deref().is_some_and(|l| l.starts_with("sym_")));
    let multi = load("multi_uav.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for config in [&table2, &multi] {
        let first = csv_bytes(config);
        let second = csv_bytes(config);
        identical &= first == second;
        // Also through the file writer.
        let tables = compute(config, configs_dir()).unwrap();
        let a = uavcover::experiment::write_tables(&tables, &dir.path().join("a")).unwrap();
        let tables = compute(config, configs_dir()).unwrap();
        let b = uavcover::experiment::write_tables(&tables, &dir.path().join("b")).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            identical &= std::fs::read(pa).unwrap() == std::fs::read(pb).unwrap();
            files += 1;
        }
    }
    report(9, identical, format!("{files} CSV files compared across repeated runs"));
}
