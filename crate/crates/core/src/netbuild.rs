//! Per-day network construction: distance matrix, connectivity
//! parameter, thresholded adjacency, and the Laplacian view.

use chrono::NaiveDate;
use thiserror::Error;

use crate::dsu::UnionFind;
use crate::geo::{haversine_distance, GeoPoint};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("distance matrix rows must be square")]
    BadShape,
    #[error("distance entry ({i}, {j}): {problem}")]
    BadEntry {
        i: usize,
        j: usize,
        problem: &'static str,
    },
    #[error("{vertices} vertices but a {matrix_n}x{matrix_n} distance matrix")]
    SizeMismatch { vertices: usize, matrix_n: usize },
    #[error("threshold must be a non-negative number, got {0}")]
    BadThreshold(f64),
}

/// Dense symmetric matrix of pairwise distances in kilometers, zero on
/// the diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Pairwise haversine distances; only the upper triangle is computed,
    /// mirrored by symmetry.
    pub fn from_points(points: &[GeoPoint]) -> DistanceMatrix {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = haversine_distance(points[i], points[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    /// Validated construction from explicit rows, for tests and what-if
    /// inputs that bypass coordinates.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DistanceMatrix, NetError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(NetError::BadShape);
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(NetError::BadEntry {
                        i,
                        j,
                        problem: "must be finite and non-negative",
                    });
                }
                if i == j && v != 0.0 {
                    return Err(NetError::BadEntry {
                        i,
                        j,
                        problem: "diagonal must be zero",
                    });
                }
                if rows[j][i] != v {
                    return Err(NetError::BadEntry {
                        i,
                        j,
                        problem: "must equal its transpose entry",
                    });
                }
                data[i * n + j] = v;
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Submatrix over the first `k` indices. Timeline vertex sets are
    /// prefixes of the master ordering, so this is the per-day view.
    pub fn leading(&self, k: usize) -> DistanceMatrix {
        assert!(k <= self.n);
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k..(i + 1) * k].copy_from_slice(&self.data[i * self.n..i * self.n + k]);
        }
        DistanceMatrix { n: k, data }
    }
}

/// Smallest threshold at which the ≤-threshold graph on `d` is connected.
///
/// This equals the bottleneck (maximum) edge weight of a minimum spanning
/// tree of the complete weighted graph, computed here with dense Prim in
/// O(n²); Kruskal over the sorted O(n²) edge list would work as well but
/// pays for a large sort. Returns 0 for n ≤ 1.
pub fn connectivity_parameter(d: &DistanceMatrix) -> f64 {
    let n = d.n();
    if n <= 1 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = d.get(0, j);
    }
    let mut bottleneck = 0.0f64;
    for _ in 1..n {
        let mut pick = usize::MAX;
        let mut pick_w = f64::INFINITY;
        for (j, &w) in best.iter().enumerate() {
            if !in_tree[j] && w < pick_w {
                pick_w = w;
                pick = j;
            }
        }
        in_tree[pick] = true;
        bottleneck = bottleneck.max(pick_w);
        for j in 0..n {
            if !in_tree[j] {
                let w = d.get(pick, j);
                if w < best[j] {
                    best[j] = w;
                }
            }
        }
    }
    bottleneck
}

/// Dense symmetric boolean adjacency stored as row bitsets.
#[derive(Debug, Clone)]
pub struct AdjBits {
    words_per_row: usize,
    words: Vec<u64>,
}

impl AdjBits {
    fn new(n: usize) -> AdjBits {
        let words_per_row = n.div_ceil(64);
        AdjBits {
            words_per_row,
            words: vec![0; words_per_row * n],
        }
    }

    fn set_sym(&mut self, i: usize, j: usize) {
        self.words[i * self.words_per_row + j / 64] |= 1 << (j % 64);
        self.words[j * self.words_per_row + i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn has(&self, i: usize, j: usize) -> bool {
        self.words[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }
}

/// One day's thresholded network.
///
/// Adjacency is exposed both as a dense bit structure ([`Snapshot::adjacency_row`],
/// [`Snapshot::has_edge`]) and as sorted neighbor lists ([`Snapshot::neighbors`]);
/// metrics pick whichever is natural.
#[derive(Debug, Clone)]
pub struct Snapshot {
    date: NaiveDate,
    region_ids: Vec<String>,
    connectivity_param: f64,
    auto_threshold: bool,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<u32>>,
    adjacency: AdjBits,
    edge_count: usize,
    component_count: usize,
}

impl Snapshot {
    /// Build the day's network with edge rule `d_ij ≤ threshold`, `i ≠ j`.
    ///
    /// With `threshold` absent the connectivity parameter is derived from
    /// `d` and the graph is connected by construction. A supplied
    /// threshold (what-if mode) may leave it disconnected, which the
    /// snapshot records in [`Snapshot::component_count`].
    pub fn build(
        date: NaiveDate,
        region_ids: Vec<String>,
        d: &DistanceMatrix,
        threshold: Option<f64>,
    ) -> Result<Snapshot, NetError> {
        let n = region_ids.len();
        if n != d.n() {
            return Err(NetError::SizeMismatch {
                vertices: n,
                matrix_n: d.n(),
            });
        }
        if let Some(t) = threshold {
            if !t.is_finite() || t < 0.0 {
                return Err(NetError::BadThreshold(t));
            }
        }
        let auto_threshold = threshold.is_none();
        let connectivity_param = threshold.unwrap_or_else(|| connectivity_parameter(d));

        let mut adjacency = AdjBits::new(n);
        let mut neighbors = vec![Vec::new(); n];
        let mut dsu = UnionFind::new(n);
        let mut edge_count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if d.get(i, j) <= connectivity_param {
                    adjacency.set_sym(i, j);
                    neighbors[i].push(j as u32);
                    neighbors[j].push(i as u32);
                    dsu.union(i, j);
                    edge_count += 1;
                }
            }
        }
        let degrees = neighbors.iter().map(Vec::len).collect();
        let component_count = dsu.components();
        debug_assert!(!auto_threshold || n <= 1 || component_count == 1);

        Ok(Snapshot {
            date,
            region_ids,
            connectivity_param,
            auto_threshold,
            degrees,
            neighbors,
            adjacency,
            edge_count,
            component_count,
        })
    }

    pub fn n(&self) -> usize {
        self.region_ids.len()
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn region_ids(&self) -> &[String] {
        &self.region_ids
    }

    /// The day's threshold d(t): auto-derived unless one was supplied.
    pub fn connectivity_param(&self) -> f64 {
        self.connectivity_param
    }

    pub fn auto_threshold(&self) -> bool {
        self.auto_threshold
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Neighbor ids of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[v]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.has(i, j)
    }

    /// Bitset row of vertex `i` for fast neighborhood intersections.
    #[inline]
    pub fn adjacency_row(&self, i: usize) -> &[u64] {
        self.adjacency.row(i)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count <= 1
    }

    pub fn laplacian(&self) -> LaplacianView<'_> {
        LaplacianView { snap: self }
    }
}

/// Laplacian of a snapshot: degree on the diagonal, -1 per edge.
///
/// Entries are integers, so row sums are exactly zero.
pub struct LaplacianView<'a> {
    snap: &'a Snapshot,
}

impl LaplacianView<'_> {
    pub fn n(&self) -> usize {
        self.snap.n()
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        if i == j {
            self.snap.degrees[i] as i64
        } else if self.snap.has_edge(i, j) {
            -1
        } else {
            0
        }
    }

    pub fn row_sum(&self, i: usize) -> i64 {
        (0..self.n()).map(|j| self.entry(i, j)).sum()
    }

    /// Dense row-major copy for the eigensolvers.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            out[i * n + i] = self.snap.degrees[i] as f64;
            for &j in self.snap.neighbors(i) {
                out[i * n + j as usize] = -1.0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoPoint, EARTH_RADIUS_KM};
    use approx::assert_relative_eq;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("R{i}")).collect()
    }

    /// Pairwise distances 1 (A-B), 2 (B-C), 3 (A-C), as from collinear points.
    fn collinear() -> DistanceMatrix {
        DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 2.0],
            vec![3.0, 2.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn single_point_matrix_is_one_by_one_zero() {
        let d = DistanceMatrix::from_points(&[GeoPoint::new(28.7, 77.1).unwrap()]);
        assert_eq!(d.n(), 1);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn antipodes_fill_the_off_diagonal() {
        let d = DistanceMatrix::from_points(&[
            GeoPoint::new(0.0, 0.0).unwrap(),
            GeoPoint::new(0.0, 180.0).unwrap(),
        ]);
        assert_relative_eq!(d.get(0, 1), std::f64::consts::PI * EARTH_RADIUS_KM, epsilon = 1e-9);
        assert_eq!(d.get(0, 1), d.get(1, 0));
    }

    #[test]
    fn three_cities_match_pairwise_oracle() {
        // Delhi, Mumbai, Chennai; oracle values from an independent
        // haversine evaluation.
        let d = DistanceMatrix::from_points(&[
            GeoPoint::new(28.7041, 77.1025).unwrap(),
            GeoPoint::new(19.0760, 72.8777).unwrap(),
            GeoPoint::new(13.0827, 80.2707).unwrap(),
        ]);
        assert!((d.get(0, 1) - 1153.242884).abs() < 0.1);
        assert!((d.get(0, 2) - 1767.653853).abs() < 0.1);
        assert!((d.get(1, 2) - 1033.099939).abs() < 0.1);
    }

    #[test]
    fn from_rows_validates_invariants() {
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(NetError::BadEntry { .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![1.0]]),
            Err(NetError::BadEntry { .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_rows(&[vec![0.0, 1.0]]),
            Err(NetError::BadShape)
        ));
    }

    #[test]
    fn connectivity_parameter_conventions() {
        let single = DistanceMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(connectivity_parameter(&single), 0.0);

        let pair =
            DistanceMatrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(connectivity_parameter(&pair), 5.0);
    }

    #[test]
    fn collinear_bottleneck_is_two() {
        // Thresholds 1 leaves C isolated; 2 connects A-B-C; hand-checked.
        assert_eq!(connectivity_parameter(&collinear()), 2.0);
    }

    #[test]
    fn auto_snapshot_takes_the_minimal_connected_threshold() {
        let s = Snapshot::build(date(), ids(3), &collinear(), None).unwrap();
        assert_eq!(s.connectivity_param(), 2.0);
        assert!(s.has_edge(0, 1) && s.has_edge(1, 2) && !s.has_edge(0, 2));
        assert_eq!(s.degrees(), &[1, 2, 1]);
        assert_eq!(s.edge_count(), 2);
        assert!(s.is_connected());
    }

    #[test]
    fn generous_threshold_gives_complete_triangle() {
        let s = Snapshot::build(date(), ids(3), &collinear(), Some(3.0)).unwrap();
        assert_eq!(s.degrees(), &[2, 2, 2]);
        assert_eq!(s.edge_count(), 3);
    }

    #[test]
    fn tight_threshold_disconnects() {
        let s = Snapshot::build(date(), ids(3), &collinear(), Some(0.5)).unwrap();
        assert_eq!(s.edge_count(), 0);
        assert!(!s.is_connected());
        assert_eq!(s.component_count(), 3);
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let err = Snapshot::build(date(), ids(3), &collinear(), Some(-1.0)).unwrap_err();
        assert!(matches!(err, NetError::BadThreshold(_)));
    }

    #[test]
    fn laplacian_of_single_edge() {
        let pair = DistanceMatrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let s = Snapshot::build(date(), ids(2), &pair, None).unwrap();
        let l = s.laplacian();
        assert_eq!(
            [l.entry(0, 0), l.entry(0, 1), l.entry(1, 0), l.entry(1, 1)],
            [1, -1, -1, 1]
        );
    }

    #[test]
    fn laplacian_of_triangle_and_empty_graph() {
        let tri = Snapshot::build(date(), ids(3), &collinear(), Some(3.0)).unwrap();
        let l = tri.laplacian();
        for i in 0..3 {
            assert_eq!(l.entry(i, i), 2);
            assert_eq!(l.row_sum(i), 0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l.entry(i, j), -1);
                }
            }
        }

        let empty = Snapshot::build(date(), ids(3), &collinear(), Some(0.5)).unwrap();
        let l = empty.laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.entry(i, j), 0);
            }
        }
    }

    #[test]
    fn leading_submatrix_keeps_entries() {
        let d = collinear();
        let l = d.leading(2);
        assert_eq!(l.n(), 2);
        assert_eq!(l.get(0, 1), 1.0);
    }
}
