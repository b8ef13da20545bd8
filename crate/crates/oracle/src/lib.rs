//! Reference implementations used as test oracles.
//!
//! Everything in this crate is written as plainly as possible — nested
//! loops over flat `f64` slices, no shared code with the production crate.
//! Tests compare the optimized implementations in `pcvd-core` against these.
//! This crate must never depend on `pcvd-core`; the dependency graph is what
//! guarantees the two sides stay independent.

/// Central finite differences of `f` at `x`, one partial per entry.
///
/// `f` is re-evaluated 2·len(x) times with step `h`; the caller compares the
/// result against analytic gradients with `assert_close_grad`.
pub fn finite_difference_grad(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Relative/absolute comparison used by every gradient test:
/// |a - b| <= atol + rtol * max(|a|, |b|).
pub fn all_close(a: &[f64], b: &[f64], rtol: f64, atol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    for (i, (&x, &y)) in a.iter().zip(b.iter()).enumerate() {
        let tol = atol + rtol * x.abs().max(y.abs());
        if (x - y).abs() > tol {
            return Err(format!(
                "entry {i}: {x} vs {y} (|diff| = {} > tol {tol})",
                (x - y).abs()
            ));
        }
    }
    Ok(())
}

/// Six-nested-loop 2D convolution: x is [c_in, h, w], kernel [c_out, c_in, k, k],
/// zero padding, floor output extents. Returns (data, [c_out, oh, ow]).
#[allow(clippy::too_many_arguments)]
pub fn conv2d_naive(
    x: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    kernel: &[f64],
    c_out: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> (Vec<f64>, [usize; 3]) {
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut out = vec![0.0; c_out * oh * ow];
    for co in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
                for ci in 0..c_in {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let xv = x[ci * h * w + iy as usize * w + ix as usize];
                            let kv = kernel[co * c_in * k * k + ci * k * k + ky * k + kx];
                            acc += xv * kv;
                        }
                    }
                }
                out[co * oh * ow + oy * ow + ox] = acc;
            }
        }
    }
    (out, [c_out, oh, ow])
}

/// Triple-loop matrix product, a is [p, q], b is [q, s].
pub fn matmul_naive(a: &[f64], p: usize, q: usize, b: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * s];
    for i in 0..p {
        for j in 0..s {
            let mut acc = 0.0;
            for l in 0..q {
                acc += a[i * q + l] * b[l * s + j];
            }
            out[i * s + j] = acc;
        }
    }
    out
}

/// One GRU step evaluated scalar by scalar.
///
/// Layout: state `h` has `n` rows of `l` entries, input `m` has `n` rows of
/// `lp` entries. Weight matrices are row-major with input-dim rows:
/// wz/wr/wc are [lp, l], uz/ur/uc are [l, l], biases bz/br/bc are [l].
/// Update convention: h' = (1 - z) * h + z * tanh(wc·m + uc·(r*h) + bc).
#[allow(clippy::too_many_arguments)]
pub fn gru_step_scalar(
    h: &[f64],
    m: &[f64],
    n: usize,
    l: usize,
    lp: usize,
    wz: &[f64],
    uz: &[f64],
    bz: &[f64],
    wr: &[f64],
    ur: &[f64],
    br: &[f64],
    wc: &[f64],
    uc: &[f64],
    bc: &[f64],
) -> Vec<f64> {
    let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut out = vec![0.0; n * l];
    for row in 0..n {
        let mut z = vec![0.0; l];
        let mut r = vec![0.0; l];
        for j in 0..l {
            let mut zin = bz[j];
            let mut rin = br[j];
            for i in 0..lp {
                zin += m[row * lp + i] * wz[i * l + j];
                rin += m[row * lp + i] * wr[i * l + j];
            }
            for i in 0..l {
                zin += h[row * l + i] * uz[i * l + j];
                rin += h[row * l + i] * ur[i * l + j];
            }
            z[j] = sigmoid(zin);
            r[j] = sigmoid(rin);
        }
        for j in 0..l {
            let mut cin = bc[j];
            for i in 0..lp {
                cin += m[row * lp + i] * wc[i * l + j];
            }
            for i in 0..l {
                cin += r[i] * h[row * l + i] * uc[i * l + j];
            }
            let cand = cin.tanh();
            out[row * l + j] = (1.0 - z[j]) * h[row * l + j] + z[j] * cand;
        }
    }
    out
}

/// One convolutional GRU step evaluated literally, scalar by scalar.
///
/// All maps are [c, h, w]; the six kernels are [c, c, k, k] with zero padding
/// `k/2` and stride 1 (shape preserving). Gate equations:
///   z = sigmoid(wz*x + uz*hp), r = sigmoid(wr*x + ur*hp),
///   cand = tanh(w*x + u*(r.hp)), out = (1-z).hp + z.cand.
#[allow(clippy::too_many_arguments)]
pub fn conv_gru_step_scalar(
    x: &[f64],
    hp: &[f64],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    wz: &[f64],
    uz: &[f64],
    wr: &[f64],
    ur: &[f64],
    wc: &[f64],
    uc: &[f64],
) -> Vec<f64> {
    let pad = k / 2;
    let conv = |map: &[f64], kern: &[f64]| conv2d_naive(map, c, h, w, kern, c, k, 1, pad).0;
    let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());

    let zx = conv(x, wz);
    let zh = conv(hp, uz);
    let rx = conv(x, wr);
    let rh = conv(hp, ur);
    let n = c * h * w;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = sigmoid(zx[i] + zh[i]);
        r[i] = sigmoid(rx[i] + rh[i]);
    }
    let cx = conv(x, wc);
    let gated: Vec<f64> = (0..n).map(|i| r[i] * hp[i]).collect();
    let ch = conv(&gated, uc);
    (0..n)
        .map(|i| (1.0 - z[i]) * hp[i] + z[i] * (cx[i] + ch[i]).tanh())
        .collect()
}

/// Row-wise softmax computed directly (with max shift, independently coded).
pub fn softmax_rows_naive(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for c in 0..cols {
            out[r * cols + c] = exps[c] / sum;
        }
    }
    out
}

/// Dot-product self-attention evaluated one query at a time.
///
/// q, k: [l, d] embeddings, v: [l, dv]. Output row i is
/// sum_j softmax_j(q_i · k_j) v_j, the per-query form of the attention sum.
pub fn attention_per_query(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    l: usize,
    d: usize,
    dv: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; l * dv];
    for qi in 0..l {
        let mut scores = vec![0.0; l];
        for kj in 0..l {
            let mut dot = 0.0;
            for a in 0..d {
                dot += q[qi * d + a] * k[kj * d + a];
            }
            scores[kj] = dot;
        }
        let weights = softmax_rows_naive(&scores, 1, l);
        for kj in 0..l {
            for a in 0..dv {
                out[qi * dv + a] += weights[kj] * v[kj * dv + a];
            }
        }
    }
    out
}

/// Exact k nearest neighbors by sorting the full distance list per node.
/// Ties broken by ascending node id. Self excluded. Returns [n, k] ids.
pub fn knn_by_full_sort(coords: &[(f64, f64)], k: usize) -> Vec<Vec<usize>> {
    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dx = coords[i].0 - coords[j].0;
                let dy = coords[i].1 - coords[j].1;
                (dx * dx + dy * dy, j)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(dists.iter().take(k).map(|&(_, j)| j).collect());
    }
    out
}

/// Greedy score-ordered matching re-derived from scratch.
///
/// Predictions are (score, x, y); ground truths are (x, y). Returns, per
/// prediction (in the given order), the matched gt index or None. Highest
/// score first; each prediction takes the nearest unmatched gt within
/// `max_dist`, ties by lower gt index.
pub fn greedy_match_reference(
    preds: &[(f64, f64, f64)],
    gts: &[(f64, f64)],
    max_dist: f64,
) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].0.partial_cmp(&preds[a].0).unwrap().then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let mut result = vec![None; preds.len()];
    for &pi in &order {
        let (_, px, py) = preds[pi];
        let mut best: Option<(f64, usize)> = None;
        for (gi, &(gx, gy)) in gts.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let d = ((px - gx).powi(2) + (py - gy).powi(2)).sqrt();
            if d > max_dist {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bi)) => d < bd || (d == bd && gi < bi),
            };
            if better {
                best = Some((d, gi));
            }
        }
        if let Some((_, gi)) = best {
            taken[gi] = true;
            result[pi] = Some(gi);
        }
    }
    result
}

/// Hash-map binning of points into integer cells: the partition oracle.
/// Returns (cell -> point indices) as a sorted Vec for deterministic compare.
pub fn bin_points(
    points: &[(f64, f64)],
    x_min: f64,
    y_min: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
) -> Vec<((i64, i64), Vec<usize>)> {
    use std::collections::BTreeMap;
    let mut map: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let gx = ((x - x_min) / dx).floor() as i64;
        let gy = ((y - y_min) / dy).floor() as i64;
        if gx < 0 || gy < 0 || gx >= nx as i64 || gy >= ny as i64 {
            continue;
        }
        map.entry((gx, gy)).or_default().push(i);
    }
    map.into_iter().collect()
}

/// Per-point loop for the pillar feature encoder: affine map then max over
/// the valid rows only. points is [rows, d], weight [d, l], bias [l].
pub fn pointnet_per_point(
    points: &[f64],
    rows: usize,
    d: usize,
    valid: usize,
    weight: &[f64],
    bias: &[f64],
    l: usize,
) -> Vec<f64> {
    assert!(valid >= 1 && valid <= rows);
    let mut best = vec![f64::NEG_INFINITY; l];
    for r in 0..valid {
        for j in 0..l {
            let mut acc = bias[j];
            for a in 0..d {
                acc += points[r * d + a] * weight[a * l + j];
            }
            if acc > best[j] {
                best[j] = acc;
            }
        }
    }
    best
}

/// Bilinear kernel of the sampling tests: max(0, 1 - |a - b|).
pub fn bilinear_weight(a: f64, b: f64) -> f64 {
    (1.0 - (a - b).abs()).max(0.0)
}

/// Four-tap bilinear lookup on a [c, h, w] map with zero outside the grid.
pub fn bilinear_sample_naive(map: &[f64], c: usize, h: usize, w: usize, y: f64, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; c];
    let y0 = y.floor() as isize;
    let x0 = x.floor() as isize;
    for ty in [y0, y0 + 1] {
        for tx in [x0, x0 + 1] {
            let wy = bilinear_weight(y, ty as f64);
            let wx = bilinear_weight(x, tx as f64);
            if wy == 0.0 || wx == 0.0 {
                continue;
            }
            if ty < 0 || tx < 0 || ty >= h as isize || tx >= w as isize {
                continue;
            }
            for ch in 0..c {
                out[ch] += wy * wx * map[ch * h * w + ty as usize * w + tx as usize];
            }
        }
    }
    out
}
