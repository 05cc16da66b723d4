//! Density-based clustering of mispredicted inputs, used to estimate faults
//! when no external cluster labels are available.
//!
//! A point is a core point when at least `min_pts` points (itself included)
//! lie within Euclidean distance `eps`. Clusters are the density-connected
//! components of core points plus the border points they reach; everything
//! else is noise. Clusters are numbered in the order their first core point
//! appears, and a border point reachable from several clusters joins the one
//! numbered first.

use std::collections::VecDeque;

use crate::data::NOISE;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dbscan {
    pub eps: f64,
    pub min_pts: usize,
}

impl Dbscan {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Value(format!("eps must be positive, got {eps}")));
        }
        if min_pts == 0 {
            return Err(Error::Value("min_pts must be at least 1".into()));
        }
        Ok(Self { eps, min_pts })
    }

    /// Cluster id per point, [`NOISE`] for unclustered points.
    pub fn fit(&self, points: &[Vec<f64>]) -> Result<Vec<i64>> {
        if let Some(w) = points.first().map(Vec::len) {
            if points.iter().any(|p| p.len() != w) {
                return Err(Error::Shape("points have different dimensions".into()));
            }
        }
        let eps2 = self.eps * self.eps;
        let neighbours = |i: usize| -> Vec<usize> {
            (0..points.len())
                .filter(|&j| squared_distance(&points[i], &points[j]) <= eps2)
                .collect()
        };
        let mut labels: Vec<Option<i64>> = vec![None; points.len()];
        let mut visited = vec![false; points.len()];
        let mut next_cluster = 0;
        for start in 0..points.len() {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let seeds = neighbours(start);
            if seeds.len() < self.min_pts {
                continue;
            }
            let cluster = next_cluster;
            next_cluster += 1;
            labels[start] = Some(cluster);
            let mut queue: VecDeque<usize> = seeds.into();
            while let Some(q) = queue.pop_front() {
                if labels[q].is_none() {
                    labels[q] = Some(cluster);
                }
                if visited[q] {
                    continue;
                }
                visited[q] = true;
                let reach = neighbours(q);
                if reach.len() >= self.min_pts {
                    queue.extend(reach.into_iter().filter(|&r| !visited[r] || labels[r].is_none()));
                }
            }
        }
        Ok(labels.into_iter().map(|l| l.unwrap_or(NOISE)).collect())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dbscan_cluster(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<Vec<i64>> {
    Dbscan::new(eps, min_pts)?.fit(points)
}
