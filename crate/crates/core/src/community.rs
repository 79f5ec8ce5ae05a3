//! Louvain community detection and Newman–Girvan modularity.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netbuild::Snapshot;

/// A local move must improve Q by more than this to count; guards the
/// pass loop against floating-point livelock.
pub const MIN_GAIN: f64 = 1e-12;

/// Tolerated drift between the incrementally tracked Q and its direct
/// recomputation on the final partition.
const CONSISTENCY_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("modularity is undefined on a graph with no edges")]
    NoEdges,
    #[error("partition covers {partition} vertices but the snapshot has {snapshot}")]
    SizeMismatch { partition: usize, snapshot: usize },
    #[error("incremental modularity {incremental} drifted from direct recomputation {direct}")]
    Inconsistent { incremental: f64, direct: f64 },
}

/// A labeling of vertices into communities 0..k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    k: u32,
}

impl Partition {
    /// Normalize arbitrary labels to the contiguous range 0..k, numbered
    /// in order of first appearance.
    pub fn from_labels(raw: &[u32]) -> Partition {
        let mut map: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &l in raw {
            let next = map.len() as u32;
            labels.push(*map.entry(l).or_insert(next));
        }
        Partition {
            labels,
            k: map.len() as u32,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn community_count(&self) -> usize {
        self.k as usize
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Vertex indices grouped by community label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k as usize];
        for (v, &l) in self.labels.iter().enumerate() {
            groups[l as usize].push(v);
        }
        groups
    }
}

/// Size facts of a partition plus, when produced by [`louvain`], the
/// modularity of the partition. [`community_stats`] leaves `modularity`
/// empty: sizes need no edges to be well defined, Q does.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityStats {
    pub modularity: Option<f64>,
    pub community_count: usize,
    pub largest_size: usize,
    /// Ascending.
    pub size_distribution: Vec<usize>,
}

/// Count communities and sizes; modularity is left `None`.
pub fn community_stats(p: &Partition) -> CommunityStats {
    let mut sizes = vec![0usize; p.community_count()];
    for &l in p.labels() {
        sizes[l as usize] += 1;
    }
    sizes.sort_unstable();
    CommunityStats {
        modularity: None,
        community_count: sizes.len(),
        largest_size: sizes.last().copied().unwrap_or(0),
        size_distribution: sizes,
    }
}

/// Newman–Girvan modularity Q = Σ_c [ e_c/m − (d_c/2m)² ] at resolution 1,
/// the quantity the Louvain method optimizes.
pub fn modularity(s: &Snapshot, p: &Partition) -> Result<f64, CommunityError> {
    if p.len() != s.n() {
        return Err(CommunityError::SizeMismatch {
            partition: p.len(),
            snapshot: s.n(),
        });
    }
    if s.edge_count() == 0 {
        return Err(CommunityError::NoEdges);
    }
    let k = p.community_count();
    let mut intra = vec![0u64; k];
    let mut degree = vec![0u64; k];
    for v in 0..s.n() {
        let c = p.labels()[v] as usize;
        degree[c] += s.degrees()[v] as u64;
        for &u in s.neighbors(v) {
            let u = u as usize;
            if u > v && p.labels()[u] as usize == c {
                intra[c] += 1;
            }
        }
    }
    let m = s.edge_count() as f64;
    let two_m = 2.0 * m;
    Ok((0..k)
        .map(|c| intra[c] as f64 / m - (degree[c] as f64 / two_m).powi(2))
        .sum())
}

/// Two-phase Louvain: seeded-shuffle local moves to the neighbor
/// community with the largest positive ΔQ (ties broken toward the lowest
/// community label), then aggregation of communities into super-vertices,
/// repeated until a full level makes no move.
///
/// The returned modularity is tracked incrementally across moves and
/// checked against a from-scratch recomputation on the final partition;
/// the two agreeing is an internal invariant, not a tolerance of the
/// result.
pub fn louvain(s: &Snapshot, seed: u64) -> Result<(Partition, CommunityStats), CommunityError> {
    if s.edge_count() == 0 {
        return Err(CommunityError::NoEdges);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = WorkGraph::from_snapshot(s);
    let mut q = graph.singleton_modularity();
    // original vertex -> current work-graph node
    let mut assignment: Vec<u32> = (0..s.n() as u32).collect();

    loop {
        let node_count = graph.len();
        let mut labels: Vec<u32> = (0..node_count as u32).collect();
        let mut community_strength = graph.strength.clone();
        let mut level_moved = false;
        loop {
            let (moves, gain) = graph.local_move_pass(&mut labels, &mut community_strength, &mut rng);
            q += gain;
            if moves == 0 {
                break;
            }
            level_moved = true;
        }
        if !level_moved {
            break;
        }
        let (compact, k) = compact_labels(&labels);
        for slot in assignment.iter_mut() {
            *slot = compact[labels[*slot as usize] as usize];
        }
        graph = graph.aggregate(&compact, &labels, k);
    }

    let partition = Partition::from_labels(&assignment);
    let direct = modularity(s, &partition)?;
    if (q - direct).abs() > CONSISTENCY_EPS {
        return Err(CommunityError::Inconsistent {
            incremental: q,
            direct,
        });
    }
    let mut stats = community_stats(&partition);
    stats.modularity = Some(q);
    Ok((partition, stats))
}

/// Louvain over `restarts` seeds (`seed`, `seed+1`, …), keeping the
/// highest modularity; the earliest seed wins ties.
pub fn louvain_best_of(
    s: &Snapshot,
    seed: u64,
    restarts: u32,
) -> Result<(Partition, CommunityStats), CommunityError> {
    let mut best: Option<(Partition, CommunityStats)> = None;
    for i in 0..restarts.max(1) as u64 {
        let candidate = louvain(s, seed.wrapping_add(i))?;
        let better = match &best {
            None => true,
            Some((_, stats)) => {
                candidate.1.modularity.unwrap_or(f64::NEG_INFINITY)
                    > stats.modularity.unwrap_or(f64::NEG_INFINITY)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Map labels to 0..k by first appearance over node index order.
fn compact_labels(labels: &[u32]) -> (Vec<u32>, usize) {
    let mut map = vec![u32::MAX; labels.len()];
    let mut next = 0u32;
    for &l in labels {
        if map[l as usize] == u32::MAX {
            map[l as usize] = next;
            next += 1;
        }
    }
    (map, next as usize)
}

/// Weighted working graph for the aggregation levels.
///
/// Edge weights are stored in both endpoint adjacency lists; `self_w`
/// holds the double-counted intra weight of an aggregated node, so that
/// strength(i) = self_w(i) + Σ adjacent weights and Σ strength = 2m stays
/// invariant across levels.
struct WorkGraph {
    adj: Vec<Vec<(u32, f64)>>,
    self_w: Vec<f64>,
    strength: Vec<f64>,
    total: f64,
}

impl WorkGraph {
    fn from_snapshot(s: &Snapshot) -> WorkGraph {
        let n = s.n();
        let adj: Vec<Vec<(u32, f64)>> = (0..n)
            .map(|v| s.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        let strength: Vec<f64> = s.degrees().iter().map(|&d| d as f64).collect();
        let total = 2.0 * s.edge_count() as f64;
        WorkGraph {
            adj,
            self_w: vec![0.0; n],
            strength,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Q of the all-singletons partition of this graph, which equals the
    /// Q of the current flattened partition of the original snapshot.
    fn singleton_modularity(&self) -> f64 {
        let w = self.total;
        (0..self.len())
            .map(|i| self.self_w[i] / w - (self.strength[i] / w).powi(2))
            .sum()
    }

    /// One shuffled pass of local moves. Returns (moves, total ΔQ).
    fn local_move_pass(
        &self,
        labels: &mut [u32],
        community_strength: &mut [f64],
        rng: &mut ChaCha8Rng,
    ) -> (usize, f64) {
        let n = self.len();
        let w = self.total;
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(rng);

        let mut weight_to: Vec<f64> = vec![0.0; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut moves = 0usize;
        let mut gain_sum = 0.0;

        for &node in &order {
            let node = node as usize;
            let home = labels[node];
            let k_i = self.strength[node];
            community_strength[home as usize] -= k_i;

            touched.push(home);
            for &(u, weight) in &self.adj[node] {
                let c = labels[u as usize];
                if weight_to[c as usize] == 0.0 && c != home {
                    touched.push(c);
                }
                weight_to[c as usize] += weight;
            }

            // ΔQ of inserting the detached node into community c
            let gain_of = |c: u32| -> f64 {
                2.0 * weight_to[c as usize] / w
                    - 2.0 * k_i * community_strength[c as usize] / (w * w)
            };
            let mut best_label = home;
            let mut best_gain = gain_of(home);
            for &c in &touched {
                if c == home {
                    continue;
                }
                let g = gain_of(c);
                if g > best_gain || (g == best_gain && c < best_label) {
                    best_gain = g;
                    best_label = c;
                }
            }

            let home_gain = gain_of(home);
            if best_label != home && best_gain - home_gain > MIN_GAIN {
                labels[node] = best_label;
                community_strength[best_label as usize] += k_i;
                gain_sum += best_gain - home_gain;
                moves += 1;
            } else {
                community_strength[home as usize] += k_i;
            }

            for &c in &touched {
                weight_to[c as usize] = 0.0;
            }
            touched.clear();
        }
        (moves, gain_sum)
    }

    /// Collapse communities into super-vertices; intra weight (counted
    /// from both endpoints) lands on the self-loop.
    fn aggregate(&self, compact: &[u32], labels: &[u32], k: usize) -> WorkGraph {
        let mut self_w = vec![0.0; k];
        let mut maps: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); k];
        for v in 0..self.len() {
            let c = compact[labels[v] as usize] as usize;
            self_w[c] += self.self_w[v];
            for &(u, weight) in &self.adj[v] {
                let d = compact[labels[u as usize] as usize];
                if d as usize == c {
                    self_w[c] += weight;
                } else {
                    *maps[c].entry(d).or_insert(0.0) += weight;
                }
            }
        }
        let adj: Vec<Vec<(u32, f64)>> = maps
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        let strength: Vec<f64> = (0..k)
            .map(|c| self_w[c] + adj[c].iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        WorkGraph {
            adj,
            self_w,
            strength,
            total: self.total,
        }
    }
}
