use depthpair::calibration::align_tuple;
use depthpair::geometry::{unproject, Mask, PointCloud};
use depthpair::masking::*;
use depthpair::synthetic::{NoiseModel, Rig, Scene};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn aligned_clouds(rig: &Rig, scene: &Scene, seed: u64) -> (PointCloud, PointCloud, Mask) {
    // Uniform outliers in both cameras, on top of the usual sensor noise.
    let hq_noise = NoiseModel {
        outliers: 0.005,
        ..NoiseModel::hq()
    };
    let cap = rig.capture("m", scene, seed, &NoiseModel::lq(), &hq_noise).unwrap();
    let t = align_tuple(&cap.tuple, &rig.extrinsic(), &rig.intr_lq, &rig.intr_hq).unwrap();
    let hq = unproject(&t.color_hq, &t.depth_hq, &rig.intr_lq).unwrap();
    let lq = unproject(&t.color_lq, &t.depth_lq, &rig.intr_lq).unwrap();
    (hq, lq, cap.truth)
}

#[test]
fn boxes_on_table_recovered() {
    let rig = Rig::standard();
    let params = rig.mask_params();
    for seed in [21, 22, 23] {
        let (hq, lq, truth) = aligned_clouds(&rig, &Scene::random(seed), seed);
        let out = mask_from_clouds(&hq, &lq, rig.intr_lq.dims(), &params).unwrap();
        let iou = out.mask.iou(&truth).unwrap();
        assert!(iou >= 0.95, "scene {seed}: IoU {iou}");
    }
}

#[test]
fn point_order_does_not_matter() {
    let rig = Rig::standard();
    let params = rig.mask_params();
    let (hq, lq, _) = aligned_clouds(&rig, &Scene::random(4), 4);
    let reference = mask_from_clouds(&hq, &lq, rig.intr_lq.dims(), &params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shuffle = |c: &PointCloud, rng: &mut ChaCha8Rng| {
        let mut idx: Vec<usize> = (0..c.len()).collect();
        idx.shuffle(rng);
        c.subset(&idx)
    };
    let (hq2, lq2) = (shuffle(&hq, &mut rng), shuffle(&lq, &mut rng));
    let permuted = mask_from_clouds(&hq2, &lq2, rig.intr_lq.dims(), &params).unwrap();
    assert_eq!(permuted, reference);
}

#[test]
fn empty_table_gives_empty_mask() {
    let rig = Rig::standard();
    let (hq, lq, truth) = aligned_clouds(&rig, &Scene::empty(), 8);
    assert!(truth.is_empty());
    let out = mask_from_clouds(&hq, &lq, rig.intr_lq.dims(), &rig.mask_params()).unwrap();
    assert!(out.is_empty(), "{} stray pixels", out.mask.count());
}

#[test]
fn intersection_semantics() {
    let full = Mask::full(12, 9);
    let empty = Mask::empty(12, 9);
    assert!(combine_masks(&full, &empty, true).unwrap().is_empty());
    assert_eq!(combine_masks(&full, &full, true).unwrap(), full);
}

#[test]
fn masks_require_anchors_and_valid_crop() {
    let mut p = MaskParams {
        anchors: vec![[0.0, 0.0, 1.0]],
        ..MaskParams::default()
    };
    assert!(p.validate().is_ok());
    p.crop_max[2] = p.crop_min[2];
    assert!(p.validate().is_err());
    assert!(MaskParams::default().validate().is_err());
}

fn mask_strategy() -> impl Strategy<Value = Mask> {
    (3usize..20, 3usize..20).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.4), w * h).prop_map(move |d| Mask::new(w, h, d).unwrap())
    })
}

proptest! {
    #[test]
    fn closing_only_adds_nearby_pixels(a in mask_strategy()) {
        let b = Mask::new(a.width(), a.height(), a.data().iter().rev().copied().collect()).unwrap();
        let both = a.and(&b).unwrap();
        let m = combine_masks(&a, &b, true).unwrap();
        let (w, h) = m.dims();
        for v in 0..h {
            for u in 0..w {
                if both.get(u, v) {
                    prop_assert!(m.get(u, v));
                }
                if m.get(u, v) && !both.get(u, v) {
                    // Closing never reaches beyond the 3×3 dilation of its input.
                    let near = (v.saturating_sub(1)..(v + 2).min(h))
                        .flat_map(|y| (u.saturating_sub(1)..(u + 2).min(w)).map(move |x| (x, y)))
                        .filter(|&(x, y)| both.get(x, y))
                        .count();
                    prop_assert!(near >= 1);
                }
            }
        }
        prop_assert_eq!(close3x3(&m), m.clone());
    }
}
