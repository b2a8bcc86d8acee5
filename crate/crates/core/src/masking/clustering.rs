use std::cmp::Ordering;
use std::collections::VecDeque;

use nalgebra::Point3;
use rayon::prelude::*;

use super::labels::{ClusterLabeling, NOISE};
use super::normals::Normals;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::spatial::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionGrowParams {
    /// Largest admissible angle between the normals of adjacent points (degrees).
    pub angle_thresh_deg: f64,
    /// Adjacency radius in meters.
    pub seed_radius_m: f64,
    /// Points whose surface variation exceeds this may join a cluster but do not
    /// extend it further. `None` lets every point extend its cluster.
    pub max_seed_curvature: Option<f64>,
}

impl Default for RegionGrowParams {
    fn default() -> Self {
        Self {
            angle_thresh_deg: 15.0,
            seed_radius_m: 0.01,
            max_seed_curvature: Some(0.05),
        }
    }
}

/// Partitions the cloud into smooth surfaces.
///
/// Seeds are taken in ascending point index. A neighbor within the seed radius
/// joins the growing cluster when the angle between its normal and the current
/// point's normal is below the threshold; thresholds of 180° or more disable
/// the normal test.
pub fn region_grow(
    cloud: &PointCloud,
    normals: &Normals,
    params: &RegionGrowParams,
) -> Result<ClusterLabeling> {
    if normals.len() != cloud.len() {
        return Err(Error::config(format!(
            "{} normals for {} points",
            normals.len(),
            cloud.len()
        )));
    }
    let points = cloud.points();
    let n = points.len();
    if n == 0 {
        return Ok(ClusterLabeling::all_noise(0));
    }
    let grid = VoxelGrid::new(points, params.seed_radius_m.max(1e-6));
    let check_angle = params.angle_thresh_deg < 180.0;
    let cos_thresh = params.angle_thresh_deg.to_radians().cos();

    let mut labels = vec![NOISE; n];
    let mut next = 0i32;
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for seed in 0..n {
        if labels[seed] != NOISE {
            continue;
        }
        labels[seed] = next;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            if p != seed {
                if let Some(max_curv) = params.max_seed_curvature {
                    if normals.curvature[p] > max_curv {
                        continue;
                    }
                }
            }
            nbrs.clear();
            grid.within(&points[p], params.seed_radius_m, &mut nbrs);
            for &q in &nbrs {
                if labels[q] != NOISE {
                    continue;
                }
                if check_angle && !(normals.vectors[p].dot(&normals.vectors[q]) > cos_thresh) {
                    continue;
                }
                labels[q] = next;
                queue.push_back(q);
            }
        }
        next += 1;
    }
    Ok(ClusterLabeling::from_raw(labels))
}

/// Relabels as noise the clusters recognized as the support surface.
///
/// With `reject_near` a cluster is the support when its centroid lies within
/// `dist_thresh` of some anchor; otherwise clusters farther than `dist_thresh`
/// from every anchor are rejected instead.
pub fn reject_surface_clusters(
    labeling: &ClusterLabeling,
    cloud: &PointCloud,
    anchors: &[Point3<f64>],
    dist_thresh: f64,
    reject_near: bool,
) -> Result<ClusterLabeling> {
    if anchors.is_empty() {
        return Err(Error::config("surface rejection needs at least one anchor point"));
    }
    let centroids = labeling.centroids(cloud.points());
    Ok(labeling.without(|c| {
        let near = anchors.iter().any(|a| (centroids[c] - a).norm() <= dist_thresh);
        near == reject_near
    }))
}

/// Density-based clustering with `eps` neighborhoods (inclusive, point itself
/// counted) and `min_pts` core threshold.
///
/// Core points are grouped by eps-connectivity. A border point joins the
/// cluster of its nearest core neighbor, ties broken by the neighbor's
/// coordinates, so the partition does not depend on input order.
pub fn dbscan(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Result<ClusterLabeling> {
    if !(eps > 0.0) || min_pts == 0 {
        return Err(Error::config(format!(
            "dbscan needs eps > 0 and min_pts >= 1 (eps = {eps}, min_pts = {min_pts})"
        )));
    }
    let n = points.len();
    let grid = VoxelGrid::new(points, eps);
    let neighbors: Vec<Vec<usize>> = points
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            grid.within(p, eps, &mut out);
            out
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut next = 0i32;
    let mut stack = Vec::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if core[q] && labels[q] == NOISE {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }

    for i in 0..n {
        if core[i] {
            continue;
        }
        let best = neighbors[i]
            .iter()
            .copied()
            .filter(|&q| core[q])
            .min_by(|&a, &b| {
                let da = (points[a] - points[i]).norm_squared();
                let db = (points[b] - points[i]).norm_squared();
                da.total_cmp(&db).then_with(|| lex_cmp(&points[a], &points[b]))
            });
        if let Some(q) = best {
            labels[i] = labels[q];
        }
    }
    Ok(ClusterLabeling::from_raw(labels))
}

fn lex_cmp(a: &Point3<f64>, b: &Point3<f64>) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Removes clusters smaller than `min_size`, then clusters whose centroid is
/// farther than `max_gap` from the centroid of the largest remaining cluster.
/// An all-noise result signals an empty mask.
pub fn filter_clusters(
    labeling: &ClusterLabeling,
    cloud: &PointCloud,
    min_size: usize,
    max_gap: f64,
) -> ClusterLabeling {
    let sizes = labeling.sizes();
    let sized = labeling.without(|c| sizes[c] < min_size);
    if sized.is_all_noise() {
        return sized;
    }
    let sizes = sized.sizes();
    // Ties go to the cluster holding the lowest point index.
    let largest = (0..sizes.len())
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .expect("non-empty");
    let centroids = sized.centroids(cloud.points());
    let anchor = centroids[largest];
    sized.without(|c| (centroids[c] - anchor).norm() > max_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraTag;
    use nalgebra::Vector3;

    fn cloud(points: Vec<Point3<f64>>) -> PointCloud {
        let n = points.len();
        PointCloud::new(points, vec![[0; 3]; n], vec![[0, 0]; n], CameraTag::Hq, (1, 1)).unwrap()
    }

    /// Reference DBSCAN: brute-force neighborhoods, core components by
    /// repeated relaxation, border points to the nearest core.
    fn brute_dbscan(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
        let n = points.len();
        let near = |i: usize, j: usize| (points[i] - points[j]).norm() <= eps;
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts)
            .collect();
        let mut comp: Vec<i64> = (0..n as i64).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if core[i] && core[j] && near(i, j) && comp[j] < comp[i] {
                        comp[i] = comp[j];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (0..n)
            .map(|i| {
                if core[i] {
                    comp[i] as i32
                } else {
                    (0..n)
                        .filter(|&j| core[j] && near(i, j))
                        .min_by(|&a, &b| {
                            (points[a] - points[i])
                                .norm()
                                .total_cmp(&(points[b] - points[i]).norm())
                                .then_with(|| lex_cmp(&points[a], &points[b]))
                        })
                        .map(|j| comp[j] as i32)
                        .unwrap_or(NOISE)
                }
            })
            .collect()
    }

    #[test]
    fn line_plus_isolated_point() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.1, 0.0, 0.0),
            Point3::new(0.2, 0.0, 0.0),
            Point3::new(5.0, 0.0, 0.0),
        ];
        let l = dbscan(&pts, 0.5, 2).unwrap();
        assert_eq!(l.labels(), &[0, 0, 0, NOISE]);
        assert_eq!(
            l,
            ClusterLabeling::from_raw(brute_dbscan(&pts, 0.5, 2)),
            "matches brute-force oracle"
        );
    }

    #[test]
    fn identical_points_one_cluster() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0); 5];
        let l = dbscan(&pts, 0.01, 1).unwrap();
        assert_eq!(l.count(), 1);
        assert!(l.labels().iter().all(|&x| x == 0));
    }

    #[test]
    fn sparse_points_all_noise() {
        let pts: Vec<_> = (0..6).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let l = dbscan(&pts, 0.5, 2).unwrap();
        assert!(l.is_all_noise());
    }

    #[test]
    fn random_blobs_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pts: Vec<_> = (0..150)
                .map(|_| Point3::new(rng.random::<f64>(), rng.random::<f64>(), 0.0))
                .collect();
            let got = dbscan(&pts, 0.08, 4).unwrap();
            assert_eq!(got, ClusterLabeling::from_raw(brute_dbscan(&pts, 0.08, 4)));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(dbscan(&[], 0.0, 2).is_err());
        assert!(dbscan(&[], 0.1, 0).is_err());
    }

    fn plane_and_wall() -> (PointCloud, Normals) {
        // Floor z = 1 (normal toward camera) and a wall x = 0.2 rising from it.
        let mut pts = Vec::new();
        let mut nrm = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push(Point3::new(i as f64 * 0.01, j as f64 * 0.01, 1.0));
                nrm.push(Vector3::new(0.0, 0.0, -1.0));
            }
        }
        for j in 0..20 {
            for k in 1..10 {
                pts.push(Point3::new(0.2, j as f64 * 0.01, 1.0 - k as f64 * 0.01));
                nrm.push(Vector3::new(-1.0, 0.0, 0.0));
            }
        }
        (cloud(pts), Normals::from_vectors(nrm))
    }

    #[test]
    fn plane_and_perpendicular_face_split() {
        let (c, n) = plane_and_wall();
        let params = RegionGrowParams {
            angle_thresh_deg: 15.0,
            seed_radius_m: 0.015,
            max_seed_curvature: None,
        };
        let l = region_grow(&c, &n, &params).unwrap();
        assert_eq!(l.count(), 2);
        assert!(l.labels()[..400].iter().all(|&x| x == 0));
        assert!(l.labels()[400..].iter().all(|&x| x == 1));
    }

    #[test]
    fn open_threshold_merges_everything() {
        let (c, n) = plane_and_wall();
        let params = RegionGrowParams {
            angle_thresh_deg: 180.0,
            seed_radius_m: 0.015,
            max_seed_curvature: None,
        };
        assert_eq!(region_grow(&c, &n, &params).unwrap().count(), 1);
    }

    #[test]
    fn single_plane_single_cluster() {
        let (c, n) = plane_and_wall();
        let floor = c.subset(&(0..400).collect::<Vec<_>>());
        let fnorm = Normals::from_vectors(n.vectors[..400].to_vec());
        let params = RegionGrowParams {
            seed_radius_m: 0.015,
            ..RegionGrowParams::default()
        };
        let l = region_grow(&floor, &fnorm, &params).unwrap();
        assert_eq!(l.count(), 1);
        assert_eq!(l.clustered().len(), 400);
    }

    #[test]
    fn surface_rejection_near_anchor() {
        let pts = vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.01, 0.0, 1.0),
            Point3::new(0.0, 0.0, 0.85),
            Point3::new(0.01, 0.0, 0.85),
        ];
        let c = cloud(pts);
        let l = ClusterLabeling::from_raw(vec![0, 0, 1, 1]);
        let anchor = [Point3::new(0.005, 0.0, 1.0)];
        let out = reject_surface_clusters(&l, &c, &anchor, 0.05, true).unwrap();
        assert_eq!(out.labels(), &[NOISE, NOISE, 0, 0]);

        let far = [Point3::new(5.0, 5.0, 5.0)];
        let out = reject_surface_clusters(&l, &c, &far, 0.05, true).unwrap();
        assert_eq!(out, l);

        let inverted = reject_surface_clusters(&l, &c, &anchor, 0.05, false).unwrap();
        assert_eq!(inverted.labels(), &[0, 0, NOISE, NOISE]);
        assert!(reject_surface_clusters(&l, &c, &[], 0.05, true).is_err());
    }

    #[test]
    fn satellite_and_small_clusters_removed() {
        let mut pts = Vec::new();
        let mut raw = Vec::new();
        for i in 0..50 {
            pts.push(Point3::new(i as f64 * 0.001, 0.0, 1.0));
            raw.push(0);
        }
        for i in 0..20 {
            pts.push(Point3::new(1.0 + i as f64 * 0.001, 0.0, 1.0));
            raw.push(1);
        }
        for i in 0..2 {
            pts.push(Point3::new(0.0, 0.1 + i as f64 * 0.001, 1.0));
            raw.push(2);
        }
        let c = cloud(pts);
        let l = ClusterLabeling::from_raw(raw);
        let out = filter_clusters(&l, &c, 10, 0.3);
        assert_eq!(out.count(), 1);
        assert_eq!(out.clustered(), (0..50).collect::<Vec<_>>());

        let single = ClusterLabeling::from_raw(vec![0; 72]);
        assert_eq!(filter_clusters(&single, &c, 10, 0.3), single);

        let none = filter_clusters(&l, &c, 1000, 0.3);
        assert!(none.is_all_noise());
    }
}
