use depthpair::calibration::*;
use depthpair::dataset::FrameTuple;
use depthpair::geometry::*;
use depthpair::synthetic::{NoiseModel, Rig, Scene};
use depthpair::Error;
use nalgebra::{Matrix3, Point3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_transform(rng: &mut ChaCha8Rng, max_angle: f64, t_norm: f64) -> RigidTransform {
    let axis = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let dir = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
    RigidTransform::from_axis_angle(&axis, max_angle, dir * t_norm)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
    (0..n)
        .map(|_| Point3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5)))
        .collect()
}

fn rotation_error_deg(a: &RigidTransform, b: &RigidTransform) -> f64 {
    a.compose(&b.inverse()).rotation_angle().to_degrees()
}

#[test]
fn pure_translation() {
    let hq: Vec<_> = (0..6).map(|i| Point3::new(i as f64 * 0.1, (i * i) as f64 * 0.02, 1.0 + (i % 2) as f64 * 0.1)).collect();
    let lq: Vec<_> = hq.iter().map(|p| p + Vector3::new(0.1, 0.0, 0.0)).collect();
    let res = solve_extrinsic(&CorrespondenceSet::from_points(&hq, &lq).unwrap()).unwrap();
    assert!((res.transform.rotation() - Matrix3::identity()).abs().max() < 1e-12);
    assert!((res.transform.translation() - Vector3::new(0.1, 0.0, 0.0)).norm() < 1e-12);
    assert!(res.rms_residual_m < 1e-12);
}

#[test]
fn noisy_known_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.001).unwrap();
    let t0 = random_transform(&mut rng, 25f64.to_radians(), 0.3);
    let hq = random_points(&mut rng, 10);
    let lq: Vec<_> = hq
        .iter()
        .map(|p| t0.apply(p) + Vector3::from_fn(|_, _| noise.sample(&mut rng)))
        .collect();
    let res = solve_extrinsic(&CorrespondenceSet::from_points(&hq, &lq).unwrap()).unwrap();
    assert!(rotation_error_deg(&res.transform, &t0) < 0.5);
    assert!((res.transform.translation() - t0.translation()).norm() < 0.003);
    assert!(res.rms_residual_m <= 0.003);
    let rms = (res.residuals_m.iter().map(|r| r * r).sum::<f64>() / 10.0).sqrt();
    assert_eq!(rms, res.rms_residual_m);
}

#[test]
fn common_motion_conjugates_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.002).unwrap();
    for _ in 0..20 {
        let t0 = random_transform(&mut rng, 0.4, 0.5);
        let g = random_transform(&mut rng, 1.0, 0.7);
        let hq = random_points(&mut rng, 12);
        let lq: Vec<_> = hq.iter().map(|p| t0.apply(p) + Vector3::from_fn(|_, _| noise.sample(&mut rng))).collect();
        let t = solve_extrinsic(&CorrespondenceSet::from_points(&hq, &lq).unwrap()).unwrap().transform;
        let ghq: Vec<_> = hq.iter().map(|p| g.apply(p)).collect();
        let glq: Vec<_> = lq.iter().map(|p| g.apply(p)).collect();
        let tg = solve_extrinsic(&CorrespondenceSet::from_points(&ghq, &glq).unwrap()).unwrap().transform;
        let expected = g.compose(&t).compose(&g.inverse());
        assert!((tg.rotation() - expected.rotation()).abs().max() < 1e-12);
        assert!((tg.translation() - expected.translation()).abs().max() < 1e-12);
    }
}

proptest! {
    #[test]
    fn noise_free_recovery(seed in any::<u64>(), n in 3usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle = rng.random_range(0.0..std::f64::consts::PI * 0.95);
        let dist = rng.random_range(0.0..2.0);
        let t0 = random_transform(&mut rng, angle, dist);
        let hq = random_points(&mut rng, n);
        let lq: Vec<_> = hq.iter().map(|p| t0.apply(p)).collect();
        let res = solve_extrinsic(&CorrespondenceSet::from_points(&hq, &lq).unwrap()).unwrap();
        prop_assert!((res.transform.rotation() - t0.rotation()).norm() < 1e-9);
        prop_assert!((res.transform.translation() - t0.translation()).norm() < 1e-9);
    }
}

#[test]
fn degenerate_sets_rejected() {
    let line: Vec<_> = (0..5).map(|i| Point3::new(i as f64, 2.0 * i as f64, 1.0)).collect();
    assert!(matches!(CorrespondenceSet::from_points(&line, &line), Err(Error::Estimation(_))));
    let two = [Point3::new(0.0, 0.0, 1.0), Point3::new(1.0, 0.0, 1.0)];
    assert!(matches!(CorrespondenceSet::from_points(&two, &two), Err(Error::Estimation(_))));
}

fn plane_tuple(intr: &Intrinsics) -> FrameTuple {
    let (w, h) = intr.dims();
    let mut color = ColorFrame::filled(w, h, [0, 0, 0]);
    for v in 0..h {
        for u in 0..w {
            color.set(u, v, [(u % 251) as u8, (v % 251) as u8, ((u * v) % 251) as u8]);
        }
    }
    let depth = DepthFrame::from_fn(w, h, 0.001, |u, v| if (u + 3 * v) % 17 == 0 { f32::NAN } else { 1000.0 })
        .unwrap();
    FrameTuple::raw("p0", color.clone(), depth.clone(), color, depth).unwrap()
}

#[test]
fn identity_alignment_keeps_frames() {
    let intr = Intrinsics::new(600.0, 600.0, 320.0, 240.0, 0.001, 640, 480, CameraTag::Lq).unwrap();
    let t = plane_tuple(&intr);
    let a = align_tuple(&t, &RigidTransform::identity(), &intr, &intr).unwrap();
    assert!(a.state.aligned);
    for idx in 0..640 * 480 {
        if t.depth_hq.is_valid_at(idx) {
            assert_eq!(a.depth_hq.data()[idx], t.depth_hq.data()[idx]);
            assert_eq!(a.color_hq.data()[idx], t.color_hq.data()[idx]);
        }
    }
    assert!(a.depth_lq.bit_eq(&t.depth_lq));
    assert_eq!(a.color_lq, t.color_lq);
    assert!(align_tuple(&a, &RigidTransform::identity(), &intr, &intr).is_err());
}

#[test]
fn translation_shifts_fronto_parallel_plane() {
    let intr = Intrinsics::new(600.0, 600.0, 320.0, 240.0, 0.001, 640, 480, CameraTag::Lq).unwrap();
    let t = plane_tuple(&intr);
    let a = align_tuple(&t, &RigidTransform::from_translation(Vector3::new(0.05, 0.0, 0.0)), &intr, &intr).unwrap();
    let shift = (0.05f64 * intr.fx / 1.0).round() as usize;
    assert_eq!(shift, 30);
    for v in 0..480 {
        for u in 0..640 {
            let got = a.depth_hq.get(u, v);
            if u < shift {
                assert!(got.is_nan());
                continue;
            }
            let src = t.depth_hq.get(u - shift, v);
            if src.is_nan() {
                assert!(got.is_nan());
            } else {
                assert_eq!(got, src);
                assert_eq!(a.color_hq.get(u, v), t.color_hq.get(u - shift, v));
            }
        }
    }
}

#[test]
fn two_pose_render_aligns_within_two_units() {
    let rig = Rig::standard();
    let none = NoiseModel::none();
    let cap = rig.capture("s", &Scene::random(9), 1, &none, &none).unwrap();
    let a = align_tuple(&cap.tuple, &rig.extrinsic(), &rig.intr_lq, &rig.intr_hq).unwrap();
    let (mut sum, mut n) = (0.0, 0usize);
    for idx in 0..a.depth_lq.data().len() {
        if cap.truth.data()[idx] && a.depth_hq.is_valid_at(idx) && a.depth_lq.is_valid_at(idx) {
            sum += (a.depth_hq.data()[idx] - a.depth_lq.data()[idx]).abs() as f64;
            n += 1;
        }
    }
    assert!(n > 1000);
    let mean = sum / n as f64;
    assert!(mean < 2.0, "masked mean |D_HQ - D_LQ| = {mean}");
}

#[test]
fn rig_correspondences_recover_extrinsic() {
    let rig = Rig::standard();
    let corr = rig.correspondences(16, 0.0, 1).unwrap();
    let res = solve_extrinsic(&corr).unwrap();
    assert!((res.transform.rotation() - rig.extrinsic().rotation()).norm() < 1e-9);
    assert!((res.transform.translation() - rig.extrinsic().translation()).norm() < 1e-9);
}
