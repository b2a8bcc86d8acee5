use nalgebra::Point3;

use crate::geometry::centroid;

pub const NOISE: i32 = -1;

/// Per-point cluster ids; `NOISE` marks rejected or unclustered points.
///
/// Ids are dense in `[0, count)` and numbered by the lowest point index of
/// each cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    labels: Vec<i32>,
    count: usize,
}

impl ClusterLabeling {
    /// Renumbers arbitrary non-negative ids densely in order of first appearance.
    pub fn from_raw(raw: Vec<i32>) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut labels = raw;
        for l in labels.iter_mut() {
            if *l < 0 {
                *l = NOISE;
                continue;
            }
            let next = remap.len() as i32;
            *l = *remap.entry(*l).or_insert(next);
        }
        Self {
            count: remap.len(),
            labels,
        }
    }

    pub fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![NOISE; n],
            count: 0,
        }
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_all_noise(&self) -> bool {
        self.count == 0
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, l)| **l == cluster as i32)
            .map(|(i, _)| i)
    }

    pub fn centroids(&self, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
        (0..self.count)
            .map(|c| centroid(self.members(c).map(|i| &points[i])).expect("clusters are non-empty"))
            .collect()
    }

    /// Marks every member of the clusters for which `drop` is true as noise.
    pub fn without(&self, mut drop: impl FnMut(usize) -> bool) -> Self {
        let keep: Vec<bool> = (0..self.count).map(|c| !drop(c)).collect();
        Self::from_raw(
            self.labels
                .iter()
                .map(|&l| if l >= 0 && keep[l as usize] { l } else { NOISE })
                .collect(),
        )
    }

    /// Indices of all points assigned to some cluster.
    pub fn clustered(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] >= 0).collect()
    }
}
