//! Independent oracles for the property and acceptance suites.
//!
//! Everything here deliberately re-derives results through different
//! algorithms than the library: full-spectrum cyclic Jacobi against the
//! iterative eigensolvers, Floyd-Warshall against per-source BFS, cubic
//! triple enumeration against neighborhood intersection, exhaustive
//! partition search against Louvain, a sorted-threshold connectivity scan
//! and a Kruskal bottleneck against dense Prim, and a brute-force grid
//! refinement against Gauss-Newton.

#![allow(dead_code)]

use chrono::NaiveDate;
use geonet::geo::GeoPoint;
use geonet::netbuild::{DistanceMatrix, Snapshot};

// ---------------------------------------------------------------------------
// deterministic randomness (kept separate from the library's ChaCha streams)

/// 64-bit LCG (MMIX multiplier) with Box-Muller Gaussians; bit-for-bit
/// reproducible and trivially portable, so frozen test constants can be
/// re-derived outside Rust.
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Lcg {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.state
    }

    /// Uniform in (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_usize(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn next_gauss(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

// ---------------------------------------------------------------------------
// graph fixtures

pub fn test_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()
}

/// Snapshot with exactly the listed edges (distances 1 in, 10 out,
/// threshold 1).
pub fn snapshot_from_edges(n: usize, edges: &[(usize, usize)]) -> Snapshot {
    let mut rows = vec![vec![10.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b) in edges {
        rows[a][b] = 1.0;
        rows[b][a] = 1.0;
    }
    let d = DistanceMatrix::from_rows(&rows).unwrap();
    Snapshot::build(
        test_date(),
        (0..n).map(|i| format!("R{i}")).collect(),
        &d,
        Some(1.0),
    )
    .unwrap()
}

/// Seeded G(n, p)-style edge list.
pub fn random_edges(rng: &mut Lcg, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.next_f64() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Seeded random coordinates in an India-sized box.
pub fn random_points(rng: &mut Lcg, n: usize) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| {
            GeoPoint::new(rng.next_range(8.0, 34.0), rng.next_range(68.0, 92.0)).unwrap()
        })
        .collect()
}

pub fn adjacency_matrix(s: &Snapshot) -> Vec<Vec<bool>> {
    let n = s.n();
    let mut adj = vec![vec![false; n]; n];
    for v in 0..n {
        for &u in s.neighbors(v) {
            adj[v][u as usize] = true;
        }
    }
    adj
}

// ---------------------------------------------------------------------------
// connectivity-threshold oracles

/// Smallest pairwise distance at which the threshold graph is connected:
/// scan distinct distances ascending, testing connectivity by BFS.
pub fn threshold_scan_connectivity(d: &DistanceMatrix) -> f64 {
    let n = d.n();
    if n <= 1 {
        return 0.0;
    }
    let mut values = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(d.get(i, j));
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    for &t in &values {
        if bfs_connected(d, t) {
            return t;
        }
    }
    unreachable!("the largest distance always connects a finite matrix");
}

fn bfs_connected(d: &DistanceMatrix, threshold: f64) -> bool {
    let n = d.n();
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0usize);
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if u != v && !seen[u] && d.get(v, u) <= threshold {
                seen[u] = true;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    count == n
}

/// Bottleneck edge weight of a minimum spanning tree, via Kruskal with a
/// local disjoint-set (independent of the library's Prim and UnionFind).
pub fn kruskal_bottleneck(d: &DistanceMatrix) -> f64 {
    let n = d.n();
    if n <= 1 {
        return 0.0;
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((d.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut bottleneck = 0.0f64;
    let mut joined = 0;
    for (w, i, j) in edges {
        let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            bottleneck = bottleneck.max(w);
            joined += 1;
            if joined == n - 1 {
                break;
            }
        }
    }
    bottleneck
}

// ---------------------------------------------------------------------------
// dense full-spectrum oracle

/// All eigenvalues of a dense symmetric matrix by cyclic Jacobi
/// rotations, ascending.
pub fn jacobi_eigenvalues(mat: &[Vec<f64>]) -> Vec<f64> {
    let n = mat.len();
    let mut m: Vec<f64> = mat.iter().flatten().copied().collect();
    let frob = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= 1e-13 * (1.0 + frob) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn dense_adjacency_f64(s: &Snapshot) -> Vec<Vec<f64>> {
    let n = s.n();
    let mut a = vec![vec![0.0; n]; n];
    for v in 0..n {
        for &u in s.neighbors(v) {
            a[v][u as usize] = 1.0;
        }
    }
    a
}

pub fn dense_laplacian_f64(s: &Snapshot) -> Vec<Vec<f64>> {
    let n = s.n();
    let mut l = vec![vec![0.0; n]; n];
    for v in 0..n {
        l[v][v] = s.degrees()[v] as f64;
        for &u in s.neighbors(v) {
            l[v][u as usize] = -1.0;
        }
    }
    l
}

// ---------------------------------------------------------------------------
// path and triangle oracles

/// All-pairs hop distances by Floyd-Warshall; `u32::MAX` marks unreachable.
pub fn floyd_warshall(adj: &[Vec<bool>]) -> Vec<Vec<u32>> {
    let n = adj.len();
    const INF: u32 = u32::MAX;
    let mut dist = vec![vec![INF; n]; n];
    for i in 0..n {
        dist[i][i] = 0;
        for j in 0..n {
            if adj[i][j] {
                dist[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if dist[i][k] == INF {
                continue;
            }
            for j in 0..n {
                if dist[k][j] == INF {
                    continue;
                }
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    dist
}

/// (diameter, average path length) from a Floyd-Warshall table; None when
/// disconnected.
pub fn fw_path_metrics(adj: &[Vec<bool>]) -> Option<(u32, f64)> {
    let n = adj.len();
    if n <= 1 {
        return Some((0, 0.0));
    }
    let dist = floyd_warshall(adj);
    let mut diameter = 0u32;
    let mut total = 0u64;
    for (i, row) in dist.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            if d == u32::MAX {
                return None;
            }
            diameter = diameter.max(d);
            total += d as u64;
        }
    }
    Some((diameter, total as f64 / (n as f64 * (n as f64 - 1.0))))
}

/// Triangle count by cubic triple enumeration.
pub fn brute_triangles(adj: &[Vec<bool>]) -> u64 {
    let n = adj.len();
    let mut count = 0u64;
    for a in 0..n {
        for b in (a + 1)..n {
            if !adj[a][b] {
                continue;
            }
            for c in (b + 1)..n {
                if adj[a][c] && adj[b][c] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Triangles containing each vertex, by triple enumeration.
pub fn brute_triangles_per_vertex(adj: &[Vec<bool>]) -> Vec<u64> {
    let n = adj.len();
    let mut per = vec![0u64; n];
    for a in 0..n {
        for b in (a + 1)..n {
            if !adj[a][b] {
                continue;
            }
            for c in (b + 1)..n {
                if adj[a][c] && adj[b][c] {
                    per[a] += 1;
                    per[b] += 1;
                    per[c] += 1;
                }
            }
        }
    }
    per
}

// ---------------------------------------------------------------------------
// modularity oracles

/// Newman–Girvan Q computed straight from an adjacency matrix and labels,
/// sharing no code with the library.
pub fn direct_modularity(adj: &[Vec<bool>], labels: &[usize]) -> f64 {
    let n = adj.len();
    let mut m2 = 0.0f64; // 2m
    let mut degree = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                degree[i] += 1.0;
                m2 += 1.0;
            }
        }
    }
    let m = m2 / 2.0;
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut intra = vec![0.0; k];
    let mut dsum = vec![0.0; k];
    for i in 0..n {
        dsum[labels[i]] += degree[i];
        for j in (i + 1)..n {
            if adj[i][j] && labels[i] == labels[j] {
                intra[labels[i]] += 1.0;
            }
        }
    }
    (0..k)
        .map(|c| intra[c] / m - (dsum[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Exhaustive search over all set partitions (restricted growth strings);
/// returns the maximum Q. Feasible to n ≈ 12 (Bell(12) ≈ 4.2M).
pub fn exhaustive_best_modularity(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    assert!((1..=12).contains(&n), "exhaustive search needs 1 <= n <= 12");
    let mut labels = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    search_partitions(adj, &mut labels, 1, 1, &mut best);
    best
}

fn search_partitions(
    adj: &[Vec<bool>],
    labels: &mut Vec<usize>,
    pos: usize,
    used: usize,
    best: &mut f64,
) {
    if pos == labels.len() {
        let q = direct_modularity(adj, labels);
        if q > *best {
            *best = q;
        }
        return;
    }
    for label in 0..=used.min(labels.len() - 1) {
        labels[pos] = label;
        let next_used = used.max(label + 1);
        search_partitions(adj, labels, pos + 1, next_used, best);
    }
}

// ---------------------------------------------------------------------------
// brute-force fit oracle

pub fn tanh_curve(p: &[f64; 4], x: f64) -> f64 {
    p[0] * (p[1] * (x - p[2])).tanh() + p[3]
}

pub fn tanh_rss(p: &[f64; 4], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - tanh_curve(p, x);
            r * r
        })
        .sum()
}

/// Brute-force grid refinement: a 9⁴ lattice over the box, shrunk around
/// the best cell each round. Slow and simple on purpose.
pub fn grid_refine_tanh(
    xs: &[f64],
    ys: &[f64],
    mut lo: [f64; 4],
    mut hi: [f64; 4],
    rounds: usize,
) -> ([f64; 4], f64) {
    let mut best = lo;
    let mut best_rss = f64::INFINITY;
    for _ in 0..rounds {
        let step: Vec<f64> = (0..4).map(|k| (hi[k] - lo[k]) / 8.0).collect();
        for i0 in 0..9 {
            for i1 in 0..9 {
                for i2 in 0..9 {
                    for i3 in 0..9 {
                        let p = [
                            lo[0] + i0 as f64 * step[0],
                            lo[1] + i1 as f64 * step[1],
                            lo[2] + i2 as f64 * step[2],
                            lo[3] + i3 as f64 * step[3],
                        ];
                        let rss = tanh_rss(&p, xs, ys);
                        if rss < best_rss {
                            best_rss = rss;
                            best = p;
                        }
                    }
                }
            }
        }
        for k in 0..4 {
            lo[k] = (best[k] - step[k]).max(lo[k]);
            hi[k] = (best[k] + step[k]).min(hi[k]);
        }
    }
    (best, best_rss)
}
