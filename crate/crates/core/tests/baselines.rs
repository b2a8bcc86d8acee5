use depthpair::baselines::{
    bilateral, gaussian_blur, joint_bilateral, rolling_guidance, BilateralParams, RollingGuidanceParams,
};
use depthpair::geometry::{DepthFrame, Mask};
use depthpair::metrics::masked_l1;
use depthpair::synthetic::{impulse_plane, ripple_step, step_edge};
use proptest::prelude::*;

/// Mean half-difference between horizontal neighbors on the same side of the step.
fn ripple_amplitude(f: &DepthFrame) -> f64 {
    let w = f.width();
    let (mut sum, mut n) = (0.0, 0);
    for v in 0..f.height() {
        for u in 0..w - 1 {
            if u + 1 == w / 2 {
                continue;
            }
            sum += (f.get(u, v) - f.get(u + 1, v)).abs() as f64 / 2.0;
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn impulse_is_suppressed() {
    let (noisy, clean) = impulse_plane(21, 21, 800.0, 30.0);
    let p = BilateralParams {
        sigma_range: 50.0,
        ..BilateralParams::default()
    };
    let out = bilateral(&noisy, &Mask::full(21, 21), &p).unwrap();
    let mut spike = Mask::empty(21, 21);
    spike.set(10, 10, true);
    let before = masked_l1(&noisy, &clean, &spike).unwrap().unwrap();
    let after = masked_l1(&out, &clean, &spike).unwrap().unwrap();
    assert!(after <= 0.5 * before, "{before} -> {after}");
}

#[test]
fn step_edge_stays_put() {
    let d = step_edge(40, 12, 500.0, 600.0);
    let p = BilateralParams {
        sigma_range: 10.0,
        ..BilateralParams::default()
    };
    let out = bilateral(&d, &Mask::full(40, 12), &p).unwrap();
    for v in 0..12 {
        for u in 0..40 {
            assert!((out.get(u, v) - d.get(u, v)).abs() < 1.0);
        }
    }
}

#[test]
fn rolling_guidance_removes_ripple_and_keeps_step() {
    let (rippled, step) = ripple_step(64, 24, 500.0, 600.0, 5.0);
    let out = rolling_guidance(&rippled, &Mask::full(64, 24), &RollingGuidanceParams::default()).unwrap();
    let before = ripple_amplitude(&rippled);
    let after = ripple_amplitude(&out);
    assert!((before - 5.0).abs() < 1e-9);
    assert!(after <= 0.2 * before, "{before} -> {after}");
    for v in 0..24 {
        for u in 0..64 {
            assert!((out.get(u, v) - step.get(u, v)).abs() < 2.0, "({u},{v})");
        }
    }
}

#[test]
fn single_iteration_with_self_guidance_is_bilateral() {
    let d = DepthFrame::from_fn(18, 14, 0.001, |u, v| 700.0 + ((u * 5 + v * 3) % 7) as f32 * 2.0).unwrap();
    let m = Mask::full(18, 14);
    let p = BilateralParams::default();
    assert!(joint_bilateral(&d, &d, &m, &p).unwrap().bit_eq(&bilateral(&d, &m, &p).unwrap()));
}

#[test]
fn blur_rejects_bad_sigma() {
    let d = step_edge(4, 4, 1.0, 2.0);
    assert!(gaussian_blur(&d, &Mask::full(4, 4), 0.0).is_err());
}

fn noisy_frame() -> impl Strategy<Value = (DepthFrame, Mask)> {
    (4usize..14, 4usize..14).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(prop::option::weighted(0.85, 300.0f32..900.0), w * h),
            prop::collection::vec(prop::bool::weighted(0.8), w * h),
        )
            .prop_map(move |(d, m)| {
                let data = d.into_iter().map(|x| x.unwrap_or(f32::NAN)).collect();
                (DepthFrame::new(w, h, 0.001, data).unwrap(), Mask::new(w, h, m).unwrap())
            })
    })
}

/// Each output must lie within the range of the usable inputs in its window.
fn check_convex(input: &DepthFrame, mask: &Mask, out: &DepthFrame, radius: usize) -> Result<(), TestCaseError> {
    let (w, h) = input.dims();
    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            prop_assert_eq!(out.is_valid_at(i), input.is_valid_at(i));
            if !mask.get(u, v) || !input.is_valid_at(i) {
                prop_assert_eq!(out.get(u, v).to_bits(), input.get(u, v).to_bits());
                continue;
            }
            let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
            for y in v.saturating_sub(radius)..(v + radius + 1).min(h) {
                for x in u.saturating_sub(radius)..(u + radius + 1).min(w) {
                    if mask.get(x, y) && input.is_valid_at(y * w + x) {
                        lo = lo.min(input.get(x, y));
                        hi = hi.max(input.get(x, y));
                    }
                }
            }
            let x = out.get(u, v);
            prop_assert!(x >= lo - 1e-3 && x <= hi + 1e-3, "{} outside [{}, {}]", x, lo, hi);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filters_are_convex_and_keep_validity((d, m) in noisy_frame()) {
        let p = BilateralParams { sigma_spatial: 2.0, sigma_range: 30.0, radius: 3 };
        let out = bilateral(&d, &m, &p).unwrap();
        check_convex(&d, &m, &out, p.radius)?;
        let rgf = rolling_guidance(&d, &m, &RollingGuidanceParams { bilateral: p, iterations: 3, initial_sigma: 1.0 }).unwrap();
        check_convex(&d, &m, &rgf, p.radius)?;
    }

    #[test]
    fn constant_frames_are_fixed_points(level in 200.0f32..2000.0, w in 3usize..12, h in 3usize..12) {
        let d = DepthFrame::from_fn(w, h, 0.001, |_, _| level).unwrap();
        let m = Mask::full(w, h);
        prop_assert!(bilateral(&d, &m, &BilateralParams::default()).unwrap().bit_eq(&d));
        prop_assert!(rolling_guidance(&d, &m, &RollingGuidanceParams::default()).unwrap().bit_eq(&d));
    }
}
