//! Combinatorial per-snapshot metrics: degrees, clustering, triangles,
//! and hop-count path statistics.

use std::collections::VecDeque;

use chrono::NaiveDate;
use thiserror::Error;

use crate::netbuild::Snapshot;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("graph is disconnected ({components} components); use the auto threshold or report per component")]
    Disconnected { components: usize },
}

/// All scalar metrics of one snapshot: one CSV row.
///
/// `None` marks a column left empty by the degenerate-input conventions:
/// `algebraic_connectivity` and `modularity` when n < 2 (and modularity
/// whenever the snapshot has no edges), `diameter`/`avg_path_length` when
/// the snapshot is disconnected.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub date: NaiveDate,
    pub n: usize,
    pub new_vertices: usize,
    pub d_km: f64,
    pub max_degree: usize,
    pub avg_degree: f64,
    pub avg_clustering: f64,
    pub triangles: u64,
    pub diameter: Option<u32>,
    pub avg_path_length: Option<f64>,
    pub spectral_radius: f64,
    pub algebraic_connectivity: Option<f64>,
    pub modularity: Option<f64>,
    pub communities: usize,
    pub largest_community: usize,
}

/// (max degree, average degree); (0, 0) for a single vertex.
pub fn degree_stats(s: &Snapshot) -> (usize, f64) {
    let n = s.n();
    if n == 0 {
        return (0, 0.0);
    }
    let max = s.degrees().iter().copied().max().unwrap_or(0);
    let sum: usize = s.degrees().iter().sum();
    (max, sum as f64 / n as f64)
}

/// Triangles each vertex participates in, via bitset intersections of
/// neighborhoods: edges among N(v) = ½ Σ_{u∈N(v)} |N(u) ∩ N(v)|.
pub fn triangles_per_vertex(s: &Snapshot) -> Vec<u64> {
    let n = s.n();
    let mut tri = vec![0u64; n];
    for v in 0..n {
        let row_v = s.adjacency_row(v);
        let mut closed = 0u64;
        for &u in s.neighbors(v) {
            let row_u = s.adjacency_row(u as usize);
            closed += row_v
                .iter()
                .zip(row_u)
                .map(|(a, b)| (a & b).count_ones() as u64)
                .sum::<u64>();
        }
        tri[v] = closed / 2;
    }
    tri
}

/// Per-vertex clustering coefficients and their average.
///
/// cc(v) is the number of edges among v's neighbors over C(deg(v), 2),
/// with cc(v) = 0 when deg(v) < 2. The average runs over all n vertices;
/// with `exclude_low_degree` it runs over vertices of degree ≥ 2 only
/// (0 if there are none).
pub fn clustering(s: &Snapshot, exclude_low_degree: bool) -> (Vec<f64>, f64) {
    let n = s.n();
    let tri = triangles_per_vertex(s);
    let mut per_vertex = vec![0.0; n];
    for v in 0..n {
        let d = s.degrees()[v];
        if d >= 2 {
            per_vertex[v] = tri[v] as f64 / ((d * (d - 1) / 2) as f64);
        }
    }
    let (sum, count) = if exclude_low_degree {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (v, cc) in per_vertex.iter().enumerate() {
            if s.degrees()[v] >= 2 {
                sum += cc;
                count += 1;
            }
        }
        (sum, count)
    } else {
        (per_vertex.iter().sum(), n)
    };
    let average = if count == 0 { 0.0 } else { sum / count as f64 };
    (per_vertex, average)
}

/// Total triangle count by degree-ordered neighbor intersection: edges
/// are oriented toward higher (degree, id) rank and each triangle is
/// counted once at its lowest-rank vertex, O(m^{3/2}) overall.
pub fn triangle_count(s: &Snapshot) -> u64 {
    let n = s.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| (s.degrees()[v as usize], v));
    let mut rank = vec![0u32; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v as usize] = r as u32;
    }

    let mut out: Vec<Vec<u32>> = vec![Vec::new(); n];
    for v in 0..n {
        for &u in s.neighbors(v) {
            if rank[u as usize] > rank[v] {
                out[v].push(u); // ascending by id, since neighbors are
            }
        }
    }

    let mut total = 0u64;
    for v in 0..n {
        for &u in &out[v] {
            total += sorted_common(&out[v], &out[u as usize]);
        }
    }
    total
}

fn sorted_common(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Hop-count diameter and average path length over ordered pairs,
/// Σ d(u,v) / (n(n-1)), by BFS from every source. (0, 0) for n ≤ 1;
/// disconnected snapshots are an error.
pub fn path_metrics(s: &Snapshot) -> Result<(u32, f64), MetricsError> {
    let n = s.n();
    if n <= 1 {
        return Ok((0, 0.0));
    }
    if !s.is_connected() {
        return Err(MetricsError::Disconnected {
            components: s.component_count(),
        });
    }
    let mut diameter = 0u32;
    let mut total = 0u64;
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        dist.fill(u32::MAX);
        dist[src] = 0;
        queue.push_back(src as u32);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize];
            for &u in s.neighbors(v as usize) {
                if dist[u as usize] == u32::MAX {
                    dist[u as usize] = dv + 1;
                    queue.push_back(u);
                }
            }
        }
        for &d in &dist {
            diameter = diameter.max(d);
            total += d as u64;
        }
    }
    let apl = total as f64 / (n as f64 * (n as f64 - 1.0));
    Ok((diameter, apl))
}
