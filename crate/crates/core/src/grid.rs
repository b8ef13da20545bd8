//! Pillar quantization: merged frames become per-grid point buffers plus one
//! feature vector per non-empty grid.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::MergedFrame;
use crate::tensor::Tensor;

/// Per-point feature width: x, y, z, reflectance, time lag.
pub const POINT_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Cell size (dx, dy) in meters; the ranges must divide evenly.
    pub cell: (f64, f64),
    /// Point cap per grid; overflow is dropped after a seeded shuffle.
    pub max_points_per_grid: usize,
    /// Grid cap per frame; overflow dropped by ascending point count.
    pub max_grids: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::Config(format!(
                "grid range is empty: x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.cell.0 <= 0.0 || self.cell.1 <= 0.0 {
            return Err(Error::Config("cell size must be positive".into()));
        }
        for (lo, hi, step, axis) in [
            (self.x_min, self.x_max, self.cell.0, "x"),
            (self.y_min, self.y_max, self.cell.1, "y"),
        ] {
            let cells = (hi - lo) / step;
            if (cells - cells.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{axis} range [{lo}, {hi}] does not divide evenly by {step}"
                )));
            }
        }
        if self.max_points_per_grid == 0 {
            return Err(Error::Config("max_points_per_grid must be >= 1".into()));
        }
        if self.max_grids == 0 {
            return Err(Error::Config("max_grids must be >= 1".into()));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell.0).round() as usize
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.cell.1).round() as usize
    }

    pub fn cell_center(&self, gx: usize, gy: usize) -> (f64, f64) {
        (
            self.x_min + (gx as f64 + 0.5) * self.cell.0,
            self.y_min + (gy as f64 + 0.5) * self.cell.1,
        )
    }

    fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if x < self.x_min || y < self.y_min {
            return None;
        }
        let gx = ((x - self.x_min) / self.cell.0).floor() as usize;
        let gy = ((y - self.y_min) / self.cell.1).floor() as usize;
        if gx >= self.nx() || gy >= self.ny() {
            return None;
        }
        Some((gx, gy))
    }
}

/// Non-empty pillars of one merged frame: cell coordinates, zero-padded point
/// buffers with valid counts, and (after the encoder runs) per-grid features.
#[derive(Debug, Clone)]
pub struct GridSet {
    pub spec: GridSpec,
    /// Unique (gx, gy) cells in lexicographic order.
    pub cells: Vec<(usize, usize)>,
    /// [n * max_points_per_grid, POINT_DIM] buffer, zero padded.
    pub buffers: Tensor,
    /// Valid rows per grid, each in [1, max_points_per_grid].
    pub valid: Vec<usize>,
    /// [n, L] node features once initialized.
    pub features: Option<Tensor>,
}

impl GridSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell centers in meters, aligned with `cells`.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .map(|&(gx, gy)| self.spec.cell_center(gx, gy))
            .collect()
    }

    /// Keep only the given grid indices (ascending), e.g. after sampling.
    pub fn select(&self, indices: &[usize]) -> Result<GridSet> {
        let cap = self.spec.max_points_per_grid;
        let mut cells = Vec::with_capacity(indices.len());
        let mut valid = Vec::with_capacity(indices.len());
        let mut data = Vec::with_capacity(indices.len() * cap * POINT_DIM);
        let src = self.buffers.data();
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Contract(format!(
                    "select: grid index {i} out of range ({} grids)",
                    self.len()
                )));
            }
            cells.push(self.cells[i]);
            valid.push(self.valid[i]);
            let row = i * cap * POINT_DIM;
            data.extend_from_slice(&src[row..row + cap * POINT_DIM]);
        }
        Ok(GridSet {
            spec: self.spec.clone(),
            cells,
            buffers: Tensor::from_vec(&[indices.len() * cap, POINT_DIM], data)?,
            valid,
            features: None,
        })
    }
}

/// Quantize a merged frame into non-empty pillar grids.
///
/// Points outside the range are dropped. Each grid keeps at most
/// `max_points_per_grid` points, chosen by a seeded shuffle; frames with more
/// than `max_grids` occupied cells keep the fullest ones (ties broken by
/// cell coordinate order).
pub fn voxelize(frame: &MergedFrame, spec: &GridSpec, seed: u64) -> Result<GridSet> {
    spec.validate()?;
    let mut bins: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, p) in frame.points.iter().enumerate() {
        if let Some(cell) = spec.cell_of(p[0], p[1]) {
            bins.entry(cell).or_default().push(i);
        }
    }
    let mut order: Vec<(usize, usize)> = bins.keys().cloned().collect();
    if order.len() > spec.max_grids {
        order.sort_by(|a, b| bins[b].len().cmp(&bins[a].len()).then(a.cmp(b)));
        order.truncate(spec.max_grids);
        order.sort();
    }

    let cap = spec.max_points_per_grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::with_capacity(order.len());
    let mut valid = Vec::with_capacity(order.len());
    let mut data = vec![0.0; order.len().max(1) * cap * POINT_DIM];
    for (gi, cell) in order.iter().enumerate() {
        let mut idx = bins[cell].clone();
        idx.shuffle(&mut rng);
        idx.truncate(cap);
        for (r, &pi) in idx.iter().enumerate() {
            let dst = (gi * cap + r) * POINT_DIM;
            data[dst..dst + POINT_DIM].copy_from_slice(&frame.points[pi]);
        }
        cells.push(*cell);
        valid.push(idx.len());
    }
    Ok(GridSet {
        spec: spec.clone(),
        cells,
        buffers: Tensor::from_vec(&[order.len().max(1) * cap, POINT_DIM], data)?,
        valid,
        features: None,
    })
}

/// Parameters of the per-grid encoder: one affine map applied per point
/// followed by a max over the grid's valid points.
#[derive(Debug, Clone)]
pub struct PointNetParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl PointNetParams {
    pub fn init(l: usize, rng: &mut impl Rng) -> PointNetParams {
        let scale = (6.0 / (POINT_DIM + l) as f64).sqrt();
        PointNetParams {
            weight: Tensor::param_uniform(&[POINT_DIM, l], scale, rng),
            bias: Tensor::param_uniform(&[l], 0.01, rng),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[1]
    }
}

/// Initial node features: per-point affine map, then a column-wise max over
/// each grid's valid rows (padding never participates).
pub fn pointnet_init(mut grids: GridSet, params: &PointNetParams) -> Result<GridSet> {
    if grids.features.is_some() {
        return Err(Error::Contract("grid features already initialized".into()));
    }
    if grids.is_empty() {
        return Err(Error::Contract("pointnet_init on an empty grid set".into()));
    }
    let l = params.out_dim();
    let rows = grids.len() * grids.spec.max_points_per_grid;
    let mapped = grids
        .buffers
        .matmul(&params.weight)?
        .add(&params.bias.broadcast_to(&[rows, l])?)?;
    let features = mapped.grouped_row_max(grids.spec.max_points_per_grid, &grids.valid)?;
    grids.features = Some(features);
    Ok(grids)
}

/// Farthest point sampling over cell centers: iteratively picks the grid
/// farthest from the chosen set. The first pick is seeded; the returned
/// indices are sorted ascending. Requesting at least as many grids as exist
/// returns the identity.
pub fn farthest_point_sample(grids: &GridSet, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Contract(
            "farthest_point_sample: n must be >= 1".into(),
        ));
    }
    let count = grids.len();
    if n >= count {
        return Ok((0..count).collect());
    }
    let centers = grids.centers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..count);
    let mut chosen = vec![first];
    let mut dist: Vec<f64> = centers
        .iter()
        .map(|&(x, y)| (x - centers[first].0).powi(2) + (y - centers[first].1).powi(2))
        .collect();
    while chosen.len() < n {
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in dist.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        chosen.push(best);
        let (bx, by) = centers[best];
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = (centers[i].0 - bx).powi(2) + (centers[i].1 - by).powi(2);
            if nd < *d {
                *d = nd;
            }
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec {
            x_min: -2.0,
            x_max: 2.0,
            y_min: -2.0,
            y_max: 2.0,
            cell: (1.0, 1.0),
            max_points_per_grid: 4,
            max_grids: 64,
        }
    }

    fn frame(points: Vec<[f64; 5]>) -> MergedFrame {
        MergedFrame {
            keyframe_index: 0,
            points,
            gt_boxes: vec![],
        }
    }

    #[test]
    fn single_point_single_grid() {
        let g = voxelize(&frame(vec![[0.5, 0.5, 0.1, 0.9, 0.0]]), &spec(), 0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.cells, vec![(2, 2)]);
        assert_eq!(g.valid, vec![1]);
        assert_eq!(&g.buffers.data()[..5], &[0.5, 0.5, 0.1, 0.9, 0.0]);
        assert!(g.buffers.data()[5..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_points_share_a_cell() {
        let g = voxelize(
            &frame(vec![[0.5, 0.5, 0.0, 0.5, 0.0], [0.7, 0.3, 0.0, 0.5, 0.0]]),
            &spec(),
            0,
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.valid, vec![2]);
    }

    #[test]
    fn out_of_range_points_are_dropped() {
        let g = voxelize(&frame(vec![[10.0, 0.0, 0.0, 0.5, 0.0]]), &spec(), 0).unwrap();
        assert_eq!(g.len(), 0);
    }

    #[test]
    fn non_dividing_range_is_config_error() {
        let mut s = spec();
        s.cell = (0.7, 1.0);
        let e = voxelize(&frame(vec![]), &s, 0).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn grid_cap_keeps_fullest_cells() {
        let mut s = spec();
        s.max_grids = 1;
        let g = voxelize(
            &frame(vec![
                [0.5, 0.5, 0.0, 0.5, 0.0],
                [-1.5, -1.5, 0.0, 0.5, 0.0],
                [-1.4, -1.5, 0.0, 0.5, 0.0],
            ]),
            &s,
            0,
        )
        .unwrap();
        assert_eq!(g.cells, vec![(0, 0)]); // two points beat one
        assert_eq!(g.valid, vec![2]);
    }

    #[test]
    fn pointnet_single_point_is_affine_map() {
        let g = voxelize(&frame(vec![[0.5, 0.5, 0.1, 0.9, 0.02]]), &spec(), 0).unwrap();
        let params = PointNetParams {
            weight: Tensor::param(
                &[5, 2],
                vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            )
            .unwrap(),
            bias: Tensor::param(&[2], vec![0.1, -0.1]).unwrap(),
        };
        let g = pointnet_init(g, &params).unwrap();
        let f = g.features.unwrap();
        // columns: x + z + 0.1 and y + r - 0.1
        assert!((f.data()[0] - 0.7).abs() < 1e-12);
        assert!((f.data()[1] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn pointnet_duplicated_points_change_nothing() {
        let pts = vec![[0.5, 0.5, 0.1, 0.9, 0.0], [0.2, 0.1, 0.3, 0.4, 0.0]];
        let mut doubled = pts.clone();
        doubled.extend_from_slice(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = PointNetParams::init(3, &mut rng);
        let a = pointnet_init(voxelize(&frame(pts), &spec(), 1).unwrap(), &params).unwrap();
        let b = pointnet_init(voxelize(&frame(doubled), &spec(), 2).unwrap(), &params).unwrap();
        let (fa, fb) = (a.features.unwrap(), b.features.unwrap());
        for (x, y) in fa.data().iter().zip(fb.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fps_identity_when_enough_requested() {
        let g = voxelize(
            &frame(vec![[0.5, 0.5, 0.0, 0.5, 0.0], [-1.5, -1.5, 0.0, 0.5, 0.0]]),
            &spec(),
            0,
        )
        .unwrap();
        assert_eq!(farthest_point_sample(&g, 5, 0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn fps_collinear_forced_choice() {
        // cells centered at x = -1.5, -0.5, 1.5 on one row: from either end,
        // the farthest point is the opposite end; from the middle, an end
        let g = voxelize(
            &frame(vec![
                [-1.5, 0.5, 0.0, 0.5, 0.0],
                [-0.5, 0.5, 0.0, 0.5, 0.0],
                [1.5, 0.5, 0.0, 0.5, 0.0],
            ]),
            &spec(),
            0,
        )
        .unwrap();
        for seed in 0..10 {
            let picked = farthest_point_sample(&g, 2, seed).unwrap();
            assert_eq!(picked.len(), 2);
            assert!(
                picked != vec![0, 1],
                "middle cell chosen over the far end (seed {seed})"
            );
        }
    }
}
