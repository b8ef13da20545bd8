//! Grid message passing: a k-NN graph over non-empty grids, iterated rounds
//! of edge construction, message aggregation and gated node updates, then a
//! scatter back onto a dense bird's-eye-view tensor.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSet, GridSpec};
use crate::par;
use crate::tensor::Tensor;

/// Fixed neighborhood structure over grid nodes.
#[derive(Debug, Clone)]
pub struct GridGraph {
    /// [n, k] neighbor ids: row i lists the k nearest distinct nodes of i by
    /// cell-center distance, sorted by distance then id. No self loops.
    pub neighbors: Vec<Vec<usize>>,
    pub k: usize,
}

/// Exact k nearest neighbors by brute force over cell centers.
/// Ties break toward the lower node id, so the graph is deterministic.
pub fn build_knn_graph(grids: &GridSet, k: usize) -> Result<GridGraph> {
    let n = grids.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "knn graph needs at least 2 nodes, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "neighbor count {k} must be in [1, {})",
            n
        )));
    }
    let centers = grids.centers();
    let neighbors = par::map_range(n, |i| {
        let mut dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dx = centers[i].0 - centers[j].0;
                let dy = centers[i].1 - centers[j].1;
                (dx * dx + dy * dy, j)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        dist.truncate(k);
        dist.into_iter().map(|(_, j)| j).collect()
    });
    Ok(GridGraph { neighbors, k })
}

impl GridGraph {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Flat neighbor list (row-major [n * k]) for batched gathers.
    fn flat_neighbors(&self) -> Vec<usize> {
        self.neighbors.iter().flatten().copied().collect()
    }

    /// Each node id repeated k times, aligned with `flat_neighbors`.
    fn flat_selves(&self) -> Vec<usize> {
        (0..self.len()).flat_map(|i| std::iter::repeat(i).take(self.k)).collect()
    }
}

/// Learned pieces of the message passing rounds, shared across all nodes and
/// all rounds.
#[derive(Debug, Clone)]
pub struct GmpParams {
    /// Message map: [2L, L'] weight + [L'] bias applied to [h_i, e_ji].
    pub msg_weight: Tensor,
    pub msg_bias: Tensor,
    /// Gated update over (state L, input L'): three input maps [L', L],
    /// three state maps [L, L], three biases [L].
    pub wz: Tensor,
    pub uz: Tensor,
    pub bz: Tensor,
    pub wr: Tensor,
    pub ur: Tensor,
    pub br: Tensor,
    pub wc: Tensor,
    pub uc: Tensor,
    pub bc: Tensor,
    /// Output head: [L, L] weight + [L] bias.
    pub out_weight: Tensor,
    pub out_bias: Tensor,
}

impl GmpParams {
    pub fn init(l: usize, l_msg: usize, rng: &mut impl Rng) -> GmpParams {
        fn xavier(fan_in: usize, fan_out: usize) -> f64 {
            (6.0 / (fan_in + fan_out) as f64).sqrt()
        }
        let zeros = |c: usize| Tensor::param(&[c], vec![0.0; c]).unwrap();
        GmpParams {
            msg_weight: Tensor::param_uniform(&[2 * l, l_msg], xavier(2 * l, l_msg), rng),
            msg_bias: zeros(l_msg),
            wz: Tensor::param_uniform(&[l_msg, l], xavier(l_msg, l), rng),
            uz: Tensor::param_uniform(&[l, l], xavier(l, l), rng),
            bz: zeros(l),
            wr: Tensor::param_uniform(&[l_msg, l], xavier(l_msg, l), rng),
            ur: Tensor::param_uniform(&[l, l], xavier(l, l), rng),
            br: zeros(l),
            wc: Tensor::param_uniform(&[l_msg, l], xavier(l_msg, l), rng),
            uc: Tensor::param_uniform(&[l, l], xavier(l, l), rng),
            bc: zeros(l),
            out_weight: Tensor::param_uniform(&[l, l], xavier(l, l), rng),
            out_bias: zeros(l),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.uz.shape()[0]
    }

    pub fn message_dim(&self) -> usize {
        self.msg_weight.shape()[1]
    }
}

/// Edge features into each node: entry (i, k) holds h_neighbor - h_i,
/// the asymmetric difference encoding of the local neighborhood.
/// Shape [n * k, L], row-major by (node, neighbor slot).
pub fn edge_features(h: &Tensor, graph: &GridGraph) -> Result<Tensor> {
    let h_nbr = h.gather_rows(&graph.flat_neighbors())?;
    let h_self = h.gather_rows(&graph.flat_selves())?;
    h_nbr.sub(&h_self)
}

/// Messages aggregated per node: each neighbor contributes
/// phi([h_i, e_ji]); the elementwise max over a node's k messages wins.
pub fn aggregate_messages(
    h: &Tensor,
    edges: &Tensor,
    graph: &GridGraph,
    params: &GmpParams,
) -> Result<Tensor> {
    let h_self = h.gather_rows(&graph.flat_selves())?;
    let inputs = Tensor::concat(&[&h_self, edges], 1)?;
    let rows = inputs.shape()[0];
    let lp = params.message_dim();
    let mapped = inputs
        .matmul(&params.msg_weight)?
        .add(&params.msg_bias.broadcast_to(&[rows, lp])?)?;
    let valid = vec![graph.k; graph.len()];
    mapped.grouped_row_max(graph.k, &valid)
}

/// One gated update step applied row-wise with shared weights:
/// z and r gates, candidate through tanh, convex blend with the old state.
pub fn node_update(h: &Tensor, m: &Tensor, params: &GmpParams) -> Result<Tensor> {
    let n = h.shape()[0];
    let l = params.state_dim();
    let affine = |x: &Tensor, w: &Tensor, u: &Tensor, b: &Tensor, hh: &Tensor| -> Result<Tensor> {
        x.matmul(w)?
            .add(&hh.matmul(u)?)?
            .add(&b.broadcast_to(&[n, l])?)
    };
    let z = affine(m, &params.wz, &params.uz, &params.bz, h)?.sigmoid();
    let r = affine(m, &params.wr, &params.ur, &params.br, h)?.sigmoid();
    let gated = r.mul(h)?;
    let cand = m
        .matmul(&params.wc)?
        .add(&gated.matmul(&params.uc)?)?
        .add(&params.bc.broadcast_to(&[n, l])?)?
        .tanh();
    // h' = (1 - z) . h + z . cand
    let keep = z.neg().add_scalar(1.0).mul(h)?;
    keep.add(&z.mul(&cand)?)
}

/// Run the full message passing stack: `steps` rounds of edge features,
/// message aggregation and node updates, then the output head.
/// With zero steps this is just the output head over the initial features.
pub fn run_gmpnet(
    grids: &GridSet,
    graph: Option<&GridGraph>,
    params: &GmpParams,
    steps: usize,
) -> Result<Tensor> {
    let mut h = grids
        .features
        .clone()
        .ok_or_else(|| Error::Contract("gmpnet needs initialized grid features".into()))?;
    if steps > 0 {
        let graph = graph.ok_or_else(|| {
            Error::Contract("gmpnet with steps > 0 needs a neighbor graph".into())
        })?;
        for _ in 0..steps {
            let edges = edge_features(&h, graph)?;
            let m = aggregate_messages(&h, &edges, graph, params)?;
            h = node_update(&h, &m, params)?;
        }
    }
    let n = h.shape()[0];
    let l = params.state_dim();
    h.matmul(&params.out_weight)?
        .add(&params.out_bias.broadcast_to(&[n, l])?)
}

/// Scatter per-grid features [n, L] onto a dense [L, ny, nx] map at their
/// cell coordinates; empty cells stay zero.
pub fn scatter_to_bev(v: &Tensor, grids: &GridSet, spec: &GridSpec) -> Result<Tensor> {
    v.scatter_rows_to_map(&grids.cells, spec.ny(), spec.nx())
}
