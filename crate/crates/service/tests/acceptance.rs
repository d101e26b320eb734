//! Acceptance checks: one PASS/FAIL line per criterion. Exits non-zero if
//! any check fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use corebody::body_model::testbody::{L_ELBOW, L_KNEE, L_SHOULDER, R_SHOULDER};
use corebody::body_model::{
    generate_test_assets, generate_test_body, pose_mesh, regress_joints, rodrigues, shape_template, BodyMesh,
    BodyModelAssets, BodyPose, BodyShape, TestBodyParams,
};
use corebody::evaluation::{compute_rmse, RmseSample, SessionState};
use corebody::gateway::{
    compute_crop, synthesize_convergence_replay, write_poselog, BoundingBox, EstimatedFrame, DEFAULT_TARGET_DIAGONAL,
};
use corebody::guidance::{
    bind_markers, build_guidance_frame, color_for_distance, default_site_joints, project_vertex,
    satisfies_window_constraints, select_marker_vertices, CameraIntrinsics, GuidanceConfig, MarkerColor, MarkerSite,
    MarkerWindow, SiteMap, DEFAULT_HALF_WIDTH,
};
use corebody::session::{run_session, set_target, SessionConfig};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rest(assets: &BodyModelAssets) -> BodyMesh {
    pose_mesh(assets, &BodyShape::ZERO, &BodyPose::ZERO).unwrap()
}

fn projection_exactness() -> Check {
    let cam = CameraIntrinsics { f: 500.0, cx: 332.50, cy: 325.00, z_cam: 2.0 };
    let worked = [
        ([0.0, 0.0, 0.0], [332.5, 325.0]),
        ([0.2, -0.1, 0.5], [372.5, 305.0]),
        ([-1.0, 0.5, 0.0], [82.5, 450.0]),
    ];
    for (v, expect) in worked {
        let got = project_vertex(&Vector3::from(v), &cam).map_err(|e| e.to_string())?;
        ensure(got == expect, || format!("{v:?} -> {got:?}, expected {expect:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (x, y, z) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-1.5..5.0));
        let [px, py] = project_vertex(&Vector3::new(x, y, z), &cam).map_err(|e| e.to_string())?;
        let hx = 500.0 * x / (z + 2.0) + 332.50;
        let hy = 500.0 * y / (z + 2.0) + 325.00;
        worst = worst.max((px - hx).abs()).max((py - hy).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e} px"))?;
    Ok(format!("3 worked examples exact, 1000 random vertices max deviation {worst:e} px"))
}

fn marker_selection_oracle() -> Check {
    let assets = generate_test_assets(8, 1);
    let mesh = rest(&assets);
    let cam = CameraIntrinsics::default();
    let brute = |w: &MarkerWindow| -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for (k, v) in mesh.vertices.iter().enumerate() {
            let d = v.z + cam.z_cam;
            if d > 0.0 {
                let (x, y) = (cam.f * v.x / d + cam.cx, cam.f * v.y / d + cam.cy);
                if w.x_s < x && x < w.x_e && w.y_s < y && y < w.y_e {
                    s.insert(k);
                }
            }
        }
        s
    };

    let mut windows = Vec::new();
    let joints = default_site_joints();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for site in MarkerSite::ALL {
        let [jx, jy] = project_vertex(&mesh.joints[joints[site]], &cam).unwrap();
        let w = DEFAULT_HALF_WIDTH;
        windows.push(MarkerWindow { site, x_s: jx - w, y_s: jy - w, x_e: jx + w, y_e: jy + w });
    }
    for i in 0..50 {
        let (cx, cy) = (rng.random_range(80.0..600.0), rng.random_range(0.0..700.0));
        let (hw, hh) = (rng.random_range(2.0..120.0), rng.random_range(2.0..120.0));
        windows.push(MarkerWindow { site: MarkerSite::ALL[i % 10], x_s: cx - hw, y_s: cy - hh, x_e: cx + hw, y_e: cy + hh });
    }

    let mut selected = 0;
    let mut disagreements = 0;
    for w in &windows {
        let got: BTreeSet<usize> = select_marker_vertices(&mesh, w, &cam).into_iter().collect();
        let expect = brute(w);
        ensure(got == expect, || format!("{:?}: {} selected, oracle {}", w, got.len(), expect.len()))?;
        selected += got.len();
        for v in &mesh.vertices {
            let projected = project_vertex(v, &cam).is_ok_and(|p| w.contains(p));
            if projected != satisfies_window_constraints(v, w, &cam) {
                disagreements += 1;
            }
        }
    }
    ensure(disagreements == 0, || format!("constraint and projection forms disagree on {disagreements} vertex tests"))?;
    Ok(format!(
        "{} windows (10 site windows + 50 random), {selected} selections equal to oracle, forms agree on {} vertex tests",
        windows.len(),
        windows.len() * mesh.vertices.len()
    ))
}

fn max_diff(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

fn skinning_invariants() -> Check {
    let start = Instant::now();
    let mut pbs = TestBodyParams::new(8, 1);
    pbs.pose_blendshapes = true;
    let bodies = [generate_test_assets(8, 1), generate_test_body(&pbs)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut identity, mut equi, mut linear, mut rigid) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for assets in &bodies {
        for _ in 0..5 {
            let mut beta = [0.0; 10];
            beta.iter_mut().for_each(|b| *b = rng.random_range(-2.0..2.0));
            let shape = BodyShape::new(beta).unwrap();
            let shaped = shape_template(assets, &shape);
            let zero = pose_mesh(assets, &shape, &BodyPose::ZERO).unwrap();
            identity = identity.max(max_diff(&zero.vertices, &shaped));
            identity = identity.max(max_diff(&zero.joints, &regress_joints(assets, &shaped)));

            let mut theta = [0.0; 72];
            theta.iter_mut().skip(3).for_each(|x| *x = rng.random_range(-0.7..0.7));
            let pose = BodyPose::new(theta).unwrap();
            let root = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let base = pose_mesh(assets, &shape, &pose).unwrap();
            let turned = pose_mesh(assets, &shape, &pose.with_root(root)).unwrap();
            let r = rodrigues(&root);
            let p = base.root();
            let expect: Vec<_> = base.vertices.iter().map(|v| r * (v - p) + p).collect();
            equi = equi.max(max_diff(&turned.vertices, &expect));

            let rigid_mesh = pose_mesh(assets, &shape, &BodyPose::ZERO.with_root(root)).unwrap();
            let expect: Vec<_> = zero.vertices.iter().map(|v| r * (v - p) + p).collect();
            rigid = rigid.max(max_diff(&rigid_mesh.vertices, &expect));

            let s = rng.random_range(-0.5..0.5);
            let scaled = shape_template(assets, &BodyShape::new(beta.map(|b| b * s)).unwrap());
            let t = assets.template_vertices();
            for k in 0..t.len() {
                linear = linear.max(((scaled[k] - t[k]) - (shaped[k] - t[k]) * s).amax());
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(identity <= 1e-12, || format!("identity pose deviation {identity:e}"))?;
    ensure(equi <= 1e-9, || format!("root equivariance deviation {equi:e}"))?;
    ensure(linear <= 1e-12, || format!("shape linearity deviation {linear:e}"))?;
    ensure(rigid <= 1e-9, || format!("rigid global pose deviation {rigid:e}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "identity {identity:e}, root equivariance {equi:e}, shape linearity {linear:e}, rigid {rigid:e}, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn metric_exactness() -> Check {
    let assets = generate_test_assets(8, 1);
    let target = rest(&assets);
    let mask = assets.head_vertex_mask();
    let mut worst: f64 = 0.0;
    for d in [0.001, 0.05, 0.1, 0.3, 1.0] {
        let dir = Vector3::new(0.3, -0.5, 0.8).normalize();
        let moved = target.translated(&(dir * d));
        let r = compute_rmse(&moved, &target, mask).map_err(|e| e.to_string())?;
        worst = worst.max((r - d).abs());
    }
    ensure(worst <= 1e-12, || format!("uniform translation deviation {worst:e}"))?;

    let mut current = pose_mesh(&assets, &BodyShape::ZERO, &BodyPose::ZERO.with_joint(L_ELBOW, Vector3::new(0.0, -0.8, 0.0))).unwrap();
    let before = compute_rmse(&current, &target, mask).unwrap();
    for (v, head) in current.vertices.iter_mut().zip(mask) {
        if *head {
            *v += Vector3::new(0.4, -1.3, 2.2);
        }
    }
    let after = compute_rmse(&current, &target, mask).unwrap();
    ensure(before.to_bits() == after.to_bits(), || format!("head perturbation changed RMSE {before} -> {after}"))?;

    let mut s = SessionState::new(assets.n_rmse());
    for (t, value) in [(0.0, 2.0), (1.0, 1.0), (2.0, 1.0)] {
        s.update(RmseSample { t, value }).unwrap();
    }
    let m = s.finalize().unwrap();
    ensure(m.accuracy_r == 50.0 && m.t_min == 1.0, || format!("R = {}, t_min = {}", m.accuracy_r, m.t_min))?;
    Ok(format!("translation deviation {worst:e}, head perturbation delta 0, (R, t_min) = ({}, {})", m.accuracy_r, m.t_min))
}

fn color_thresholds() -> Check {
    let table = [
        (0.05, MarkerColor::GreenYellow),
        (0.1, MarkerColor::Yellow),
        (0.25, MarkerColor::Orange),
        (0.3, MarkerColor::Orange),
        (0.5, MarkerColor::Red),
        (0.7, MarkerColor::Red),
    ];
    let mut out = Vec::new();
    for (d, expect) in table {
        let got = color_for_distance(d).map_err(|e| e.to_string())?;
        ensure(got == expect, || format!("d_e = {d}: {} expected {}", got.name(), expect.name()))?;
        out.push(format!("{d}->{}", got.name()));
    }
    Ok(out.join(", "))
}

fn convergence_pose() -> BodyPose {
    BodyPose::ZERO
        .with_joint(L_SHOULDER, Vector3::new(0.0, 0.0, -1.0))
        .with_joint(R_SHOULDER, Vector3::new(0.0, 0.0, 1.0))
        .with_joint(L_ELBOW, Vector3::new(0.0, -0.6, 0.0))
        .with_joint(L_KNEE, Vector3::new(0.7, 0.0, 0.0))
}

fn run_cli(args: &[&str], sessions: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_corebody"))
        .args(args)
        .env("COREBODY_SESSIONS_DIR", sessions)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn end_to_end_determinism() -> Check {
    let assets = Arc::new(generate_test_assets(8, 1));
    let config = SessionConfig::default();
    let target_frame = EstimatedFrame::new(0.0, convergence_pose(), BodyShape::ZERO);
    let target = Arc::new(set_target(&assets, &config, &target_frame).map_err(|e| e.to_string())?);
    let frames = synthesize_convergence_replay(&BodyPose::ZERO, &convergence_pose(), &BodyShape::ZERO, 11, 0.1).unwrap();
    let mut last = None;
    let outcome = run_session(Arc::clone(&assets), &config, target, frames.iter().cloned().map(Ok), |f| last = Some(f.clone()))
        .map_err(|e| e.to_string())?;
    let last = last.ok_or("no frames")?;
    let all_green = last.guidance.markers.iter().all(|m| m.color == MarkerColor::GreenYellow);
    ensure(outcome.metrics.accuracy_r == 100.0, || format!("R = {}", outcome.metrics.accuracy_r))?;
    ensure(last.guidance.rmse == 0.0, || format!("final RMSE {}", last.guidance.rmse))?;
    ensure(all_green, || "final frame has non-green markers".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tpath = dir.path().join("target.poselog");
    let fpath = dir.path().join("frames.poselog");
    write_poselog([&target_frame], std::fs::File::create(&tpath).unwrap()).unwrap();
    write_poselog(&frames, std::fs::File::create(&fpath).unwrap()).unwrap();
    let (t, f) = (tpath.to_str().unwrap(), fpath.to_str().unwrap());
    let sessions = dir.path().join("sessions");
    let replayed = run_cli(&["replay", f, "--target", t], &sessions)?;
    let evaluated = run_cli(&["eval", t, f], &sessions)?;
    let on_disk = std::fs::read_to_string(sessions.join("session-0001/report.json")).map_err(|e| e.to_string())?;
    ensure(replayed == evaluated && evaluated == on_disk, || "replay and eval reports differ".into())?;
    let log = sessions.join("session-0001/session.poselog");
    let from_log = run_cli(&["eval", t, log.to_str().unwrap()], &sessions)?;
    ensure(from_log == evaluated, || "session log does not reproduce the report".into())?;
    Ok(format!(
        "replay/eval/session-log reports byte-identical ({} bytes); convergence R = 100, final RMSE 0, 10/10 green_yellow",
        evaluated.len()
    ))
}

/// Median wall time of one full guidance frame: mesh, align, markers, RMSE.
fn frame_time(assets: &BodyModelAssets) -> Duration {
    let target_pose = convergence_pose();
    let target = Arc::new(pose_mesh(assets, &BodyShape::ZERO, &target_pose).unwrap());
    let cam = CameraIntrinsics::default();
    let bindings = bind_markers(&target, &default_site_joints(), &cam, &SiteMap::splat(DEFAULT_HALF_WIDTH)).unwrap();
    let config = GuidanceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut times = Vec::new();
    for i in 0..45 {
        let mut theta = [0.0; 72];
        theta.iter_mut().for_each(|x| *x = rng.random_range(-0.4..0.4));
        let shape = BodyShape::new([0.3, -0.2, 0.1, 0.0, 0.5, 0.0, 0.0, -0.1, 0.0, 0.2]).unwrap();
        let pose = BodyPose::new(theta).unwrap();
        let start = Instant::now();
        let current = pose_mesh(assets, &shape, &pose).unwrap();
        let frame = build_guidance_frame(i as f64, &current, &target, &bindings, assets.head_vertex_mask(), &config).unwrap();
        let elapsed = start.elapsed();
        std::hint::black_box(frame);
        if i >= 5 {
            times.push(elapsed);
        }
    }
    times.sort();
    times[times.len() / 2]
}

fn performance_budget() -> Check {
    let full = generate_test_body(&TestBodyParams::smpl_sized(1));
    let small = generate_test_assets(8, 1);
    ensure(full.vertex_count() == 6890, || format!("full-size body has {} vertices", full.vertex_count()))?;
    let t_full = frame_time(&full);
    let t_small = frame_time(&small);
    let detail = format!(
        "median frame {:.2} ms at {} vertices (budget 50), {:.2} ms at {} vertices (budget 10)",
        t_full.as_secs_f64() * 1e3,
        full.vertex_count(),
        t_small.as_secs_f64() * 1e3,
        small.vertex_count()
    );
    ensure(t_full < Duration::from_millis(50) && t_small < Duration::from_millis(10), || detail.clone())?;
    Ok(detail)
}

fn normalization_math() -> Check {
    let c = compute_crop(&BoundingBox::new(0.0, 0.0, 300.0, 400.0), DEFAULT_TARGET_DIAGONAL).map_err(|e| e.to_string())?;
    ensure(c.scale == 0.3 && c.crop_center == [150.0, 200.0], || format!("{c:?}"))?;
    let u = compute_crop(&BoundingBox::new(10.0, 10.0, 100.0, 130.0), DEFAULT_TARGET_DIAGONAL).map_err(|e| e.to_string())?;
    ensure(u.scale == 1.0, || format!("{u:?}"))?;
    Ok(format!("(0,0,300,400) -> scale {}, center {:?}; diagonal-150 box -> scale {}", c.scale, c.crop_center, u.scale))
}

fn main() {
    let checks: [Criterion; 8] = [
        ("projection exactness", projection_exactness),
        ("marker selection oracle", marker_selection_oracle),
        ("skinning invariants", skinning_invariants),
        ("metric exactness", metric_exactness),
        ("color thresholds", color_thresholds),
        ("end-to-end determinism", end_to_end_determinism),
        ("performance budget", performance_budget),
        ("normalization math", normalization_math),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
