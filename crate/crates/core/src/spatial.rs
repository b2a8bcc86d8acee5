//! Uniform voxel hash for radius and k-nearest-neighbor queries on 3-D points.

use std::collections::HashMap;

use nalgebra::Point3;

type Key = [i64; 3];

pub struct VoxelGrid<'a> {
    points: &'a [Point3<f64>],
    cell: f64,
    cells: HashMap<Key, Vec<u32>>,
    lo: Key,
    hi: Key,
}

impl<'a> VoxelGrid<'a> {
    /// `cell` is the voxel edge length; it only affects speed, never results.
    pub fn new(points: &'a [Point3<f64>], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "voxel size must be positive");
        let mut cells: HashMap<Key, Vec<u32>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let k = key(p, cell);
            for a in 0..3 {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
            cells.entry(k).or_default().push(i as u32);
        }
        Self {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    /// Voxel size suited to `k`-nearest queries: 1.5 times the median
    /// `k`-th neighbor distance of an evenly strided sample of the points.
    pub fn surface_cell_size(points: &[Point3<f64>], k: usize) -> f64 {
        let n = points.len();
        if n < 2 {
            return 1.0;
        }
        let k = k.clamp(1, n - 1);
        let stride = (n / 64).max(1);
        let mut kth: Vec<f64> = (0..n)
            .step_by(stride)
            .map(|i| {
                let mut d: Vec<f64> = points.iter().map(|p| (p - points[i]).norm_squared()).collect();
                *d.select_nth_unstable_by(k, f64::total_cmp).1
            })
            .collect();
        let mid = kth.len() / 2;
        let cell = 1.5 * kth.select_nth_unstable_by(mid, f64::total_cmp).1.sqrt();
        if cell > 0.0 && cell.is_finite() {
            cell
        } else {
            1.0
        }
    }

    pub fn points(&self) -> &'a [Point3<f64>] {
        self.points
    }

    /// Indices of all points within distance `r` (inclusive) of `q`, appended to `out`.
    pub fn within(&self, q: &Point3<f64>, r: f64, out: &mut Vec<usize>) {
        let r2 = r * r;
        let a = key(&Point3::from(q.coords.add_scalar(-r)), self.cell);
        let b = key(&Point3::from(q.coords.add_scalar(r)), self.cell);
        for x in a[0].max(self.lo[0])..=b[0].min(self.hi[0]) {
            for y in a[1].max(self.lo[1])..=b[1].min(self.hi[1]) {
                for z in a[2].max(self.lo[2])..=b[2].min(self.hi[2]) {
                    if let Some(bucket) = self.cells.get(&[x, y, z]) {
                        for &i in bucket {
                            let i = i as usize;
                            if (self.points[i] - q).norm_squared() <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
    }

    /// The `k` nearest points to `q` (including `q` itself if it is in the set),
    /// ordered by distance with ties broken by index.
    pub fn nearest(&self, q: &Point3<f64>, k: usize) -> Vec<usize> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let k = k.min(self.points.len());
        let c = key(q, self.cell);
        let max_ring = (0..3)
            .map(|a| (c[a] - self.lo[a]).abs().max((self.hi[a] - c[a]).abs()))
            .max()
            .unwrap_or(0);
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let mut cand: Vec<(f64, usize)> = Vec::new();
        let mut ring = 0i64;
        loop {
            self.visit_shell(c, ring, |i| cand.push(((self.points[i] - q).norm_squared(), i)));
            if cand.len() >= k {
                let kth = cand.select_nth_unstable_by(k - 1, cmp).1 .0;
                let reach = ring as f64 * self.cell;
                if kth < reach * reach || ring >= max_ring {
                    break;
                }
            } else if ring >= max_ring {
                break;
            }
            ring += 1;
        }
        if cand.len() > k {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_by(cmp);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    fn visit_shell(&self, c: Key, ring: i64, mut f: impl FnMut(usize)) {
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                for dz in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    if let Some(bucket) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        bucket.iter().for_each(|&i| f(i as usize));
                    }
                }
            }
        }
    }
}

#[inline]
fn key(p: &Point3<f64>, cell: f64) -> Key {
    [
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_within(points: &[Point3<f64>], q: &Point3<f64>, r: f64) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| (points[i] - q).norm_squared() <= r * r)
            .collect()
    }

    fn brute_nearest(points: &[Point3<f64>], q: &Point3<f64>, k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|(_, i)| i).collect()
    }

    fn pts() -> impl Strategy<Value = Vec<Point3<f64>>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.0..2.0f64), 1..120)
            .prop_map(|v| v.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect())
    }

    proptest! {
        #[test]
        fn within_matches_brute_force(points in pts(), r in 0.01..1.0f64, cell in 0.05..0.8f64) {
            let grid = VoxelGrid::new(&points, cell);
            for q in points.iter().take(10) {
                let mut got = Vec::new();
                grid.within(q, r, &mut got);
                got.sort_unstable();
                prop_assert_eq!(got, brute_within(&points, q, r));
            }
        }

        #[test]
        fn nearest_matches_brute_force(points in pts(), k in 1usize..20, cell in 0.05..0.8f64) {
            let grid = VoxelGrid::new(&points, cell);
            for q in points.iter().take(10) {
                prop_assert_eq!(grid.nearest(q, k), brute_nearest(&points, q, k));
            }
        }
    }
}
