//! Matrix, convolution, attention and sampling kernels.
//!
//! These are the flop-heavy operations; forward and backward loops fan out
//! over independent output slices through `crate::par`, which keeps results
//! bit-identical across thread counts.

use super::tape::{record_result, tape_of};
use super::Tensor;
use crate::error::{Error, Result};
use crate::par;

impl Tensor {
    /// Standard matrix product of [p, q] by [q, s].
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape().len() != 2 || other.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "matmul expects matrices, got {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let (p, q) = (self.shape()[0], self.shape()[1]);
        let (q2, s) = (other.shape()[0], other.shape()[1]);
        if q != q2 {
            return Err(Error::Dimension(format!(
                "matmul: inner extents differ, {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let a = self.data();
        let b = other.data();
        let mut data = vec![0.0; p * s];
        par::for_each_chunk(&mut data, s, |i, row| {
            for k in 0..q {
                let av = a[i * q + k];
                if av == 0.0 {
                    continue;
                }
                let brow = &b[k * s..(k + 1) * s];
                for (r, bv) in row.iter_mut().zip(brow) {
                    *r += av * bv;
                }
            }
        });
        let out = Tensor::raw(vec![p, s], data);
        if let Some((core, ids)) = tape_of(&[self, other])? {
            let (ia, ib) = (ids[0], ids[1]);
            let a_t = self.clone();
            let b_t = other.clone();
            record_result(
                &core,
                &out,
                Box::new(move |og, store| {
                    let a = a_t.data();
                    let b = b_t.data();
                    if let Some(id) = ia {
                        // dA = og · B^T
                        let buf = store.buf(id, p * q);
                        par::for_each_chunk(buf, q, |i, row| {
                            for (k, r) in row.iter_mut().enumerate() {
                                let mut acc = 0.0;
                                for j in 0..s {
                                    acc += og[i * s + j] * b[k * s + j];
                                }
                                *r += acc;
                            }
                        });
                    }
                    if let Some(id) = ib {
                        // dB = A^T · og
                        let buf = store.buf(id, q * s);
                        par::for_each_chunk(buf, s, |k, row| {
                            for i in 0..p {
                                let av = a[i * q + k];
                                if av == 0.0 {
                                    continue;
                                }
                                for (j, r) in row.iter_mut().enumerate() {
                                    *r += av * og[i * s + j];
                                }
                            }
                        });
                    }
                }),
            );
        }
        Ok(out)
    }

    /// 2D transpose.
    pub fn transpose2(&self) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "transpose2 expects a matrix, got {:?}",
                self.shape()
            )));
        }
        let (r, c) = (self.shape()[0], self.shape()[1]);
        let x = self.data();
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = x[i * c + j];
            }
        }
        let out = Tensor::raw(vec![c, r], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, r * c);
                        for i in 0..r {
                            for j in 0..c {
                                buf[i * c + j] += og[j * r + i];
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }

    /// Row-wise softmax with per-row max subtraction for stability.
    pub fn softmax_rows(&self) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "softmax_rows expects a matrix, got {:?}",
                self.shape()
            )));
        }
        let (n, m) = (self.shape()[0], self.shape()[1]);
        let x = self.data();
        let mut data = vec![0.0; n * m];
        par::for_each_chunk(&mut data, m, |r, row| {
            let src = &x[r * m..(r + 1) * m];
            let mx = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (o, &v) in row.iter_mut().zip(src) {
                *o = (v - mx).exp();
                sum += *o;
            }
            for o in row.iter_mut() {
                *o /= sum;
            }
        });
        let out = Tensor::raw(vec![n, m], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let y = out.clone();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let yd = y.data();
                        let buf = store.buf(id, n * m);
                        par::for_each_chunk(buf, m, |r, row| {
                            let yr = &yd[r * m..(r + 1) * m];
                            let ogr = &og[r * m..(r + 1) * m];
                            let dot: f64 = yr.iter().zip(ogr).map(|(a, b)| a * b).sum();
                            for j in 0..m {
                                row[j] += yr[j] * (ogr[j] - dot);
                            }
                        });
                    }),
                );
            }
        }
        Ok(out)
    }

    /// 2D convolution of a [c_in, h, w] map by a [c_out, c_in, k, k] kernel
    /// with zero padding. Output extents floor((e + 2 pad - k)/stride) + 1.
    pub fn conv2d(&self, kernel: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
        if self.shape().len() != 3 || kernel.shape().len() != 4 {
            return Err(Error::Dimension(format!(
                "conv2d expects [c,h,w] and [co,ci,k,k], got {:?} and {:?}",
                self.shape(),
                kernel.shape()
            )));
        }
        let (ci, h, w) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        let (co, kci, kh, kw) = (
            kernel.shape()[0],
            kernel.shape()[1],
            kernel.shape()[2],
            kernel.shape()[3],
        );
        if kci != ci || kh != kw {
            return Err(Error::Dimension(format!(
                "conv2d: kernel {:?} does not match input {:?}",
                kernel.shape(),
                self.shape()
            )));
        }
        let k = kh;
        if k % 2 == 0 {
            return Err(Error::Dimension(format!("conv2d: kernel size {k} must be odd")));
        }
        if stride == 0 {
            return Err(Error::Dimension("conv2d: stride must be >= 1".into()));
        }
        if h + 2 * pad < k || w + 2 * pad < k {
            return Err(Error::Dimension(format!(
                "conv2d: output extent < 1 for input {:?}, k {k}, pad {pad}",
                self.shape()
            )));
        }
        let oh = (h + 2 * pad - k) / stride + 1;
        let ow = (w + 2 * pad - k) / stride + 1;

        let x = self.data();
        let kd = kernel.data();
        let mut data = vec![0.0; co * oh * ow];
        par::for_each_chunk(&mut data, oh * ow, |o, plane| {
            conv_forward_plane(plane, x, kd, o, ci, h, w, k, stride, pad, oh, ow);
        });
        let out = Tensor::raw(vec![co, oh, ow], data);
        if let Some((core, ids)) = tape_of(&[self, kernel])? {
            let (ix, ik) = (ids[0], ids[1]);
            let x_t = self.clone();
            let k_t = kernel.clone();
            record_result(
                &core,
                &out,
                Box::new(move |og, store| {
                    let x = x_t.data();
                    let kd = k_t.data();
                    if let Some(id) = ik {
                        let buf = store.buf(id, co * ci * k * k);
                        par::for_each_chunk(buf, ci * k * k, |o, kplane| {
                            for c in 0..ci {
                                for ky in 0..k {
                                    for kx in 0..k {
                                        let mut acc = 0.0;
                                        for oy in 0..oh {
                                            let iy = (oy * stride + ky) as isize - pad as isize;
                                            if iy < 0 || iy >= h as isize {
                                                continue;
                                            }
                                            for ox in 0..ow {
                                                let ix2 =
                                                    (ox * stride + kx) as isize - pad as isize;
                                                if ix2 < 0 || ix2 >= w as isize {
                                                    continue;
                                                }
                                                acc += og[o * oh * ow + oy * ow + ox]
                                                    * x[c * h * w
                                                        + iy as usize * w
                                                        + ix2 as usize];
                                            }
                                        }
                                        kplane[c * k * k + ky * k + kx] += acc;
                                    }
                                }
                            }
                        });
                    }
                    if let Some(id) = ix {
                        let buf = store.buf(id, ci * h * w);
                        par::for_each_chunk(buf, h * w, |c, plane| {
                            for iy in 0..h {
                                for ix2 in 0..w {
                                    let mut acc = 0.0;
                                    for ky in 0..k {
                                        let oy_num = iy as isize + pad as isize - ky as isize;
                                        if oy_num < 0 || oy_num % stride as isize != 0 {
                                            continue;
                                        }
                                        let oy = (oy_num / stride as isize) as usize;
                                        if oy >= oh {
                                            continue;
                                        }
                                        for kx in 0..k {
                                            let ox_num =
                                                ix2 as isize + pad as isize - kx as isize;
                                            if ox_num < 0 || ox_num % stride as isize != 0 {
                                                continue;
                                            }
                                            let ox = (ox_num / stride as isize) as usize;
                                            if ox >= ow {
                                                continue;
                                            }
                                            for o in 0..co {
                                                acc += og[o * oh * ow + oy * ow + ox]
                                                    * kd[o * ci * k * k
                                                        + c * k * k
                                                        + ky * k
                                                        + kx];
                                            }
                                        }
                                    }
                                    plane[iy * w + ix2] += acc;
                                }
                            }
                        });
                    }
                }),
            );
        }
        Ok(out)
    }

    /// Nearest-neighbor upsampling by 2 in both spatial extents.
    pub fn upsample_nearest2(&self) -> Result<Tensor> {
        if self.shape().len() != 3 {
            return Err(Error::Dimension(format!(
                "upsample expects [c,h,w], got {:?}",
                self.shape()
            )));
        }
        let (c, h, w) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        let x = self.data();
        let (oh, ow) = (2 * h, 2 * w);
        let mut data = vec![0.0; c * oh * ow];
        for ch in 0..c {
            for y in 0..oh {
                for xx in 0..ow {
                    data[ch * oh * ow + y * ow + xx] = x[ch * h * w + (y / 2) * w + xx / 2];
                }
            }
        }
        let out = Tensor::raw(vec![c, oh, ow], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, c * h * w);
                        for ch in 0..c {
                            for y in 0..oh {
                                for xx in 0..ow {
                                    buf[ch * h * w + (y / 2) * w + xx / 2] +=
                                        og[ch * oh * ow + y * ow + xx];
                                }
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }

    /// Bilinear lookup of a [c, h, w] map at fractional (y, x) positions.
    ///
    /// `coords` is a [2, n] tensor (row 0 = y, row 1 = x). Each output column
    /// is the (up to) four-tap weighted sum with kernel max(0, 1 - |a - b|);
    /// taps outside the map contribute zero. Differentiable in both the map
    /// and the coordinates.
    pub fn bilinear_gather(&self, coords: &Tensor) -> Result<Tensor> {
        if self.shape().len() != 3 {
            return Err(Error::Dimension(format!(
                "bilinear_gather expects [c,h,w], got {:?}",
                self.shape()
            )));
        }
        if coords.shape().len() != 2 || coords.shape()[0] != 2 {
            return Err(Error::Dimension(format!(
                "bilinear_gather expects [2,n] coords, got {:?}",
                coords.shape()
            )));
        }
        let (c, h, w) = (self.shape()[0], self.shape()[1], self.shape()[2]);
        let n = coords.shape()[1];
        let map = self.data();
        let cd = coords.data();
        let mut data = vec![0.0; c * n];
        for j in 0..n {
            let (y, x) = (cd[j], cd[n + j]);
            for_each_tap(y, x, h, w, |ty, tx, wy, wx| {
                let wgt = wy * wx;
                for ch in 0..c {
                    data[ch * n + j] += wgt * map[ch * h * w + ty * w + tx];
                }
            });
        }
        let out = Tensor::raw(vec![c, n], data);
        if let Some((core, ids)) = tape_of(&[self, coords])? {
            let (im, ic) = (ids[0], ids[1]);
            let map_t = self.clone();
            let coords_t = coords.clone();
            record_result(
                &core,
                &out,
                Box::new(move |og, store| {
                    let map = map_t.data();
                    let cd = coords_t.data();
                    if let Some(id) = im {
                        let buf = store.buf(id, c * h * w);
                        for j in 0..n {
                            let (y, x) = (cd[j], cd[n + j]);
                            for_each_tap(y, x, h, w, |ty, tx, wy, wx| {
                                let wgt = wy * wx;
                                for ch in 0..c {
                                    buf[ch * h * w + ty * w + tx] += wgt * og[ch * n + j];
                                }
                            });
                        }
                    }
                    if let Some(id) = ic {
                        let buf = store.buf(id, 2 * n);
                        for j in 0..n {
                            let (y, x) = (cd[j], cd[n + j]);
                            let (mut dy, mut dx) = (0.0, 0.0);
                            for_each_tap_deriv(y, x, h, w, |ty, tx, wy, wx, gy, gx| {
                                let mut dot = 0.0;
                                for ch in 0..c {
                                    dot += og[ch * n + j] * map[ch * h * w + ty * w + tx];
                                }
                                dy += dot * gy * wx;
                                dx += dot * wy * gx;
                            });
                            buf[j] += dy;
                            buf[n + j] += dx;
                        }
                    }
                }),
            );
        }
        Ok(out)
    }

    /// Bilinear lookup at a single (y, x), returning the [c] column.
    pub fn bilinear_sample(&self, coords: &Tensor) -> Result<Tensor> {
        if coords.shape() != [2] {
            return Err(Error::Dimension(format!(
                "bilinear_sample expects [2] coords, got {:?}",
                coords.shape()
            )));
        }
        let c = self.shape()[0];
        let col = coords.reshape(&[2, 1])?;
        self.bilinear_gather(&col)?.reshape(&[c])
    }

    /// Convenience lookup at constant coordinates.
    pub fn bilinear_sample_at(&self, y: f64, x: f64) -> Result<Tensor> {
        let coords = Tensor::from_vec(&[2], vec![y, x])?;
        self.bilinear_sample(&coords)
    }

    /// Write rows of a [n, l] tensor onto a [l, h, w] map at the given
    /// integer cells; untouched cells stay zero. Cells must be unique.
    pub fn scatter_rows_to_map(
        &self,
        cells: &[(usize, usize)],
        h: usize,
        w: usize,
    ) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "scatter_rows_to_map expects a matrix, got {:?}",
                self.shape()
            )));
        }
        let (n, l) = (self.shape()[0], self.shape()[1]);
        if cells.len() != n {
            return Err(Error::Dimension(format!(
                "scatter_rows_to_map: {} cells for {n} rows",
                cells.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for &(gx, gy) in cells {
            if gx >= w || gy >= h {
                return Err(Error::Dimension(format!(
                    "scatter_rows_to_map: cell ({gx}, {gy}) outside {w}x{h}"
                )));
            }
            if !seen.insert((gx, gy)) {
                return Err(Error::Contract(format!(
                    "scatter_rows_to_map: duplicate cell ({gx}, {gy})"
                )));
            }
        }
        let x = self.data();
        let mut data = vec![0.0; l * h * w];
        for (i, &(gx, gy)) in cells.iter().enumerate() {
            for ch in 0..l {
                data[ch * h * w + gy * w + gx] = x[i * l + ch];
            }
        }
        let out = Tensor::raw(vec![l, h, w], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let cells = cells.to_vec();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, n * l);
                        for (i, &(gx, gy)) in cells.iter().enumerate() {
                            for ch in 0..l {
                                buf[i * l + ch] += og[ch * h * w + gy * w + gx];
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_forward_plane(
    plane: &mut [f64],
    x: &[f64],
    kd: &[f64],
    o: usize,
    ci: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) {
    for oy in 0..oh {
        for ox in 0..ow {
            let mut acc = 0.0;
            for c in 0..ci {
                for ky in 0..k {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let xrow = &x[c * h * w + iy as usize * w..];
                    let krow = &kd[o * ci * k * k + c * k * k + ky * k..];
                    for kx in 0..k {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        acc += xrow[ix as usize] * krow[kx];
                    }
                }
            }
            plane[oy * ow + ox] = acc;
        }
    }
}

/// Visit the in-bounds taps of the bilinear kernel around (y, x).
fn for_each_tap(y: f64, x: f64, h: usize, w: usize, mut f: impl FnMut(usize, usize, f64, f64)) {
    let y0 = y.floor() as isize;
    let x0 = x.floor() as isize;
    for ty in [y0, y0 + 1] {
        let wy = 1.0 - (y - ty as f64).abs();
        if wy <= 0.0 || ty < 0 || ty >= h as isize {
            continue;
        }
        for tx in [x0, x0 + 1] {
            let wx = 1.0 - (x - tx as f64).abs();
            if wx <= 0.0 || tx < 0 || tx >= w as isize {
                continue;
            }
            f(ty as usize, tx as usize, wy, wx);
        }
    }
}

/// Same visit with the kernel's subgradient (-sign of the offset) per axis.
fn for_each_tap_deriv(
    y: f64,
    x: f64,
    h: usize,
    w: usize,
    mut f: impl FnMut(usize, usize, f64, f64, f64, f64),
) {
    let y0 = y.floor() as isize;
    let x0 = x.floor() as isize;
    for ty in [y0, y0 + 1] {
        let dy = y - ty as f64;
        let wy = 1.0 - dy.abs();
        if wy <= 0.0 || ty < 0 || ty >= h as isize {
            continue;
        }
        let gy = if dy > 0.0 {
            -1.0
        } else if dy < 0.0 {
            1.0
        } else {
            0.0
        };
        for tx in [x0, x0 + 1] {
            let dx = x - tx as f64;
            let wx = 1.0 - dx.abs();
            if wx <= 0.0 || tx < 0 || tx >= w as isize {
                continue;
            }
            let gx = if dx > 0.0 {
                -1.0
            } else if dx < 0.0 {
                1.0
            } else {
                0.0
            };
            f(ty as usize, tx as usize, wy, wx, gy, gx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    #[test]
    fn matmul_identity_passthrough() {
        let i = Tensor::eye(2);
        let m = Tensor::from_vec(&[2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(i.matmul(&m).unwrap().data(), m.data());
    }

    #[test]
    fn matmul_zero_annihilates() {
        let a = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::zeros(&[2, 1]);
        assert_eq!(a.matmul(&b).unwrap().data(), &[0.0]);
    }

    #[test]
    fn matmul_shape_mismatch_reports_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("inner"), "{err}");
    }

    #[test]
    fn conv2d_scalar_scaling() {
        let x = Tensor::ones(&[1, 3, 3]);
        let k = Tensor::from_vec(&[1, 1, 1, 1], vec![2.0]).unwrap();
        let y = x.conv2d(&k, 1, 0).unwrap();
        assert_eq!(y.shape(), &[1, 3, 3]);
        assert!(y.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn conv2d_padding_preserves_shape() {
        let x = Tensor::ones(&[1, 5, 5]);
        let k = Tensor::ones(&[1, 1, 3, 3]);
        let y = x.conv2d(&k, 1, 1).unwrap();
        assert_eq!(y.shape(), &[1, 5, 5]);
        // center cell sees all nine taps, corner only four
        assert_eq!(y.data()[2 * 5 + 2], 9.0);
        assert_eq!(y.data()[0], 4.0);
    }

    #[test]
    fn conv2d_rejects_degenerate_output() {
        let x = Tensor::ones(&[1, 2, 2]);
        let k = Tensor::ones(&[1, 1, 3, 3]);
        assert!(matches!(x.conv2d(&k, 1, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn softmax_uniform_row() {
        let x = Tensor::zeros(&[1, 3]);
        let y = x.softmax_rows().unwrap();
        for &v in y.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_no_overflow_on_large_inputs() {
        let x = Tensor::from_vec(&[1, 2], vec![1000.0, 0.0]).unwrap();
        let y = x.softmax_rows().unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!(y.data()[1] >= 0.0 && y.data()[1] < 1e-300);
    }

    #[test]
    fn bilinear_integer_location_is_exact() {
        let mut data = vec![0.0; 2 * 4 * 5];
        for (i, v) in data.iter_mut().enumerate() {
            *v = i as f64;
        }
        let map = Tensor::from_vec(&[2, 4, 5], data.clone()).unwrap();
        let s = map.bilinear_sample_at(2.0, 3.0).unwrap();
        assert_eq!(s.data()[0], data[2 * 5 + 3]);
        assert_eq!(s.data()[1], data[4 * 5 + 2 * 5 + 3]);
    }

    #[test]
    fn bilinear_center_of_patch() {
        // 2x2 patch [[1,2],[3,4]] spanning rows 1..=2, cols 1..=2; the four
        // taps of (1.5, 1.5) each weigh 0.25: (1+2+3+4)/4 = 2.5
        let mut data = vec![0.0; 9];
        data[3 + 1] = 1.0;
        data[3 + 2] = 2.0;
        data[2 * 3 + 1] = 3.0;
        data[2 * 3 + 2] = 4.0;
        let map = Tensor::from_vec(&[1, 3, 3], data).unwrap();
        let s = map.bilinear_sample_at(1.5, 1.5).unwrap();
        assert!((s.data()[0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn bilinear_out_of_bounds_taps_vanish() {
        let map = Tensor::ones(&[1, 2, 2]);
        // halfway off the top edge: the two surviving taps sum to 0.5
        let s = map.bilinear_sample_at(-0.5, 0.5).unwrap();
        assert!((s.data()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn upsample_doubles_extents() {
        let x = Tensor::from_vec(&[1, 1, 2], vec![1.0, 2.0]).unwrap();
        let y = x.upsample_nearest2().unwrap();
        assert_eq!(y.shape(), &[1, 2, 4]);
        assert_eq!(y.data(), &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn scatter_then_gather_is_identity() {
        let tape = Tape::new();
        let v = Tensor::param(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        tape.watch(&v);
        let map = v.scatter_rows_to_map(&[(0, 0), (3, 2)], 4, 4).unwrap();
        assert_eq!(map.shape(), &[3, 4, 4]);
        assert_eq!(map.data()[0], 1.0); // channel 0 at (0,0)
        assert_eq!(map.data()[2 * 4 + 3], 4.0); // channel 0 at (3,2)
        let total = map.sum_all();
        assert!((total.item() - 21.0).abs() < 1e-12);
        total.backward().unwrap();
        assert_eq!(v.grad().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn scatter_rejects_duplicate_cells() {
        let v = Tensor::ones(&[2, 1]);
        assert!(matches!(
            v.scatter_rows_to_map(&[(1, 1), (1, 1)], 2, 2),
            Err(Error::Contract(_))
        ));
    }
}
