use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes on `[0, 1]` containing the charge jumps `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if nodes.len() < 5 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidModel("mesh must start at 0, end at 1 and have at least 5 nodes".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("mesh nodes must be strictly increasing".into()));
        }
        for p in [a, b] {
            if nodes.binary_search_by(|x| x.partial_cmp(&p).unwrap()).is_err() {
                return Err(Error::InvalidModel(format!("mesh does not contain the node {p}")));
            }
        }
        Ok(Self { nodes })
    }

    /// `n` equal cells with `a` and `b` inserted.
    pub fn uniform(n: usize, a: f64, b: f64) -> Result<Self> {
        let mut x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        x.extend([a, b]);
        Self::from_nodes(dedup_sorted(x), a, b)
    }

    /// About `n` nodes with `layer_fraction` of them geometrically graded toward `0`, `a`, `b`, `1`
    /// from both sides. The first cell has width `ε/20`; each graded zone spans
    /// `min(30ε, 0.1 · shortest subinterval)`.
    pub fn graded(eps: f64, a: f64, b: f64, n: usize, layer_fraction: f64) -> Result<Self> {
        if !(eps > 0.0) || !(0.0 < a && a < b && b < 1.0) || !(0.0..1.0).contains(&layer_fraction) {
            return Err(Error::InvalidModel(format!("graded mesh needs eps > 0, 0 < a < b < 1, got eps = {eps}, a = {a}, b = {b}")));
        }
        let width = (30.0 * eps).min(0.1 * a.min(b - a).min(1.0 - b));
        let per_zone = ((layer_fraction * n as f64 / 6.0) as usize).max(2);
        let zone = graded_zone(0.05 * eps, width, per_zone);
        let outer = n.saturating_sub(6 * per_zone);
        let mut x = Vec::with_capacity(n + 8);
        for (p, r) in [(0.0, a), (a, b), (b, 1.0)] {
            let m = ((outer as f64 * (r - p)) as usize).max(10);
            x.extend(zone.iter().map(|g| p + g));
            x.extend(zone.iter().map(|g| r - g));
            let (lo, hi) = (p + width, r - width);
            x.extend((1..m - 1).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64));
        }
        Self::from_nodes(dedup_sorted(x), a, b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn smallest_cell(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Offsets `0 = g_0 < ... < g_n = width` with geometric spacing starting at `h0`.
fn graded_zone(h0: f64, width: f64, n: usize) -> Vec<f64> {
    let span = |q: f64| h0 * (q.powi(n as i32) - 1.0) / (q - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    for _ in 0..200 {
        let q = 0.5 * (lo + hi);
        if span(q) > width {
            hi = q;
        } else {
            lo = q;
        }
    }
    let q = 0.5 * (lo + hi);
    let mut g = Vec::with_capacity(n + 1);
    let mut s = 0.0;
    g.push(0.0);
    for i in 0..n {
        s += h0 * q.powi(i as i32);
        g.push(s);
    }
    let scale = width / s;
    g.iter_mut().for_each(|v| *v *= scale);
    g[n] = width;
    g
}

fn dedup_sorted(mut x: Vec<f64>) -> Vec<f64> {
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    x.dedup_by(|p, q| (*p - *q).abs() < 1e-15);
    x
}
