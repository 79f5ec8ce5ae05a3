//! Daily geodesic threshold networks from time-stamped, geo-located
//! infection records.
//!
//! The pipeline ingests one record per region (coordinates plus the date
//! of the first report), builds a network per calendar day whose vertices
//! are the regions reported so far and whose edges join regions within a
//! distance threshold, and measures each snapshot: degree statistics,
//! clustering, triangles, path lengths, adjacency spectral radius,
//! Laplacian algebraic connectivity, and Louvain communities. Growth of
//! the vertex count over time can then be fitted with a cubic or a
//! hyperbolic-tangent model and projected forward.
//!
//! The default threshold for day `t` is the *connectivity parameter*
//! `d(t)`: the smallest distance at which the day's network is connected,
//! equivalently the bottleneck edge weight of a minimum spanning tree of
//! the complete distance graph.

pub mod cli;
pub mod community;
pub mod dsu;
pub mod geo;
pub mod growthfit;
pub mod ingest;
mod linalg;
pub mod metrics;
pub mod netbuild;
pub mod pipeline;
pub mod report;
pub mod spectral;
pub mod synth;
