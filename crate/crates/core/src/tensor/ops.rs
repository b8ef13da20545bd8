//! Elementwise, shape, reduction and indexing operations.

use super::tape::{record_result, tape_of};
use super::Tensor;
use crate::error::{Error, Result};

fn same_shape(a: &Tensor, b: &Tensor, op: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{op}: shape {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

impl Tensor {
    /// Elementwise unary op with derivative `dfn(x, y)` where y = fwd(x).
    fn unary(
        &self,
        fwd: impl Fn(f64) -> f64,
        dfn: fn(f64, f64) -> f64,
    ) -> Tensor {
        let data: Vec<f64> = self.data().iter().map(|&v| fwd(v)).collect();
        let out = Tensor::raw(self.shape().to_vec(), data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let x = self.clone();
                let y = out.clone();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let xd = x.data();
                        let yd = y.data();
                        let buf = store.buf(id, og.len());
                        for i in 0..og.len() {
                            buf[i] += og[i] * dfn(xd[i], yd[i]);
                        }
                    }),
                );
            }
        }
        out
    }

    /// Elementwise binary op with per-entry gradient factors
    /// `da(a_i, b_i)` for the left operand and `db` for the right.
    fn binary(
        &self,
        other: &Tensor,
        op: &str,
        fwd: fn(f64, f64) -> f64,
        da: fn(f64, f64) -> f64,
        db: fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        same_shape(self, other, op)?;
        let data: Vec<f64> = self
            .data()
            .iter()
            .zip(other.data())
            .map(|(&a, &b)| fwd(a, b))
            .collect();
        let out = Tensor::raw(self.shape().to_vec(), data);
        if let Some((core, ids)) = tape_of(&[self, other])? {
            let (ia, ib) = (ids[0], ids[1]);
            let a = self.clone();
            let b = other.clone();
            record_result(
                &core,
                &out,
                Box::new(move |og, store| {
                    let ad = a.data();
                    let bd = b.data();
                    if let Some(i) = ia {
                        let buf = store.buf(i, og.len());
                        for j in 0..og.len() {
                            buf[j] += og[j] * da(ad[j], bd[j]);
                        }
                    }
                    if let Some(i) = ib {
                        let buf = store.buf(i, og.len());
                        for j in 0..og.len() {
                            buf[j] += og[j] * db(ad[j], bd[j]);
                        }
                    }
                }),
            );
        }
        Ok(out)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "add", |a, b| a + b, |_, _| 1.0, |_, _| 1.0)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "sub", |a, b| a - b, |_, _| 1.0, |_, _| -1.0)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, "mul", |a, b| a * b, |_, b| b, |a, _| a)
    }

    pub fn add_scalar(&self, v: f64) -> Tensor {
        self.unary(|x| x + v, |_, _| 1.0)
    }

    pub fn mul_scalar(&self, v: f64) -> Tensor {
        // capture-free derivative: recover the factor from y/x is unsafe at
        // x = 0, so route through a one-entry closure instead
        let data: Vec<f64> = self.data().iter().map(|&x| x * v).collect();
        let out = Tensor::raw(self.shape().to_vec(), data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, og.len());
                        for j in 0..og.len() {
                            buf[j] += og[j] * v;
                        }
                    }),
                );
            }
        }
        out
    }

    pub fn neg(&self) -> Tensor {
        self.mul_scalar(-1.0)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.unary(
            |x| {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            },
            |_, y| y * (1.0 - y),
        )
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(|x| x.tanh(), |_, y| 1.0 - y * y)
    }

    pub fn relu(&self) -> Tensor {
        self.unary(|x| x.max(0.0), |x, _| if x > 0.0 { 1.0 } else { 0.0 })
    }

    /// Natural log; callers clamp into (0, inf) first.
    pub fn ln(&self) -> Tensor {
        self.unary(|x| x.ln(), |x, _| 1.0 / x)
    }

    /// Elementwise power with a constant exponent.
    pub fn powf(&self, e: f64) -> Tensor {
        let data: Vec<f64> = self.data().iter().map(|&x| x.powf(e)).collect();
        let out = Tensor::raw(self.shape().to_vec(), data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let x = self.clone();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let xd = x.data();
                        let buf = store.buf(id, og.len());
                        for j in 0..og.len() {
                            buf[j] += og[j] * e * xd[j].powf(e - 1.0);
                        }
                    }),
                );
            }
        }
        out
    }

    pub fn abs(&self) -> Tensor {
        self.unary(|x| x.abs(), |x, _| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Clamp into [lo, hi]; gradient passes only strictly inside the range.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor {
        let data: Vec<f64> = self.data().iter().map(|&x| x.clamp(lo, hi)).collect();
        let out = Tensor::raw(self.shape().to_vec(), data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let x = self.clone();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let xd = x.data();
                        let buf = store.buf(id, og.len());
                        for j in 0..og.len() {
                            if xd[j] > lo && xd[j] < hi {
                                buf[j] += og[j];
                            }
                        }
                    }),
                );
            }
        }
        out
    }

    /// Sum of all entries as a scalar tensor.
    pub fn sum_all(&self) -> Tensor {
        let s: f64 = self.data().iter().sum();
        let out = Tensor::raw(vec![1], vec![s]);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let n = self.len();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, n);
                        for v in buf.iter_mut() {
                            *v += og[0];
                        }
                    }),
                );
            }
        }
        out
    }

    pub fn mean_all(&self) -> Tensor {
        let n = self.len() as f64;
        self.sum_all().mul_scalar(1.0 / n)
    }

    /// Same data reinterpreted under a new shape with equal element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != self.len() || shape.iter().any(|&e| e == 0) {
            return Err(Error::Dimension(format!(
                "reshape: {:?} -> {:?}",
                self.shape(),
                shape
            )));
        }
        let out = Tensor::raw(shape.to_vec(), self.data().to_vec());
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| store.add(id, og)),
                );
            }
        }
        Ok(out)
    }

    /// Right-aligned broadcast to `shape`: missing leading dims are added,
    /// size-1 dims expand. The backward pass sum-reduces over expanded axes.
    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor> {
        let src = self.shape();
        if src.len() > shape.len() {
            return Err(Error::Dimension(format!(
                "broadcast: {:?} has more dims than target {:?}",
                src, shape
            )));
        }
        let offset = shape.len() - src.len();
        for (d, &e) in src.iter().enumerate() {
            if e != shape[offset + d] && e != 1 {
                return Err(Error::Dimension(format!(
                    "broadcast: {:?} incompatible with target {:?}",
                    src, shape
                )));
            }
        }
        // strides into the source, 0 where the source extent is 1
        let mut strides = vec![0usize; shape.len()];
        let mut acc = 1;
        for d in (0..src.len()).rev() {
            if src[d] != 1 {
                strides[offset + d] = acc;
            }
            acc *= src[d];
        }
        let out_len: usize = shape.iter().product();
        let src_data = self.data();
        let mut data = vec![0.0; out_len];
        let mut coords = vec![0usize; shape.len()];
        for slot in data.iter_mut() {
            let idx: usize = coords.iter().zip(&strides).map(|(c, s)| c * s).sum();
            *slot = src_data[idx];
            for d in (0..shape.len()).rev() {
                coords[d] += 1;
                if coords[d] < shape[d] {
                    break;
                }
                coords[d] = 0;
            }
        }
        let out = Tensor::raw(shape.to_vec(), data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let shape = shape.to_vec();
                let n = self.len();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, n);
                        let mut coords = vec![0usize; shape.len()];
                        for &g in og.iter() {
                            let idx: usize =
                                coords.iter().zip(&strides).map(|(c, s)| c * s).sum();
                            buf[idx] += g;
                            for d in (0..shape.len()).rev() {
                                coords[d] += 1;
                                if coords[d] < shape[d] {
                                    break;
                                }
                                coords[d] = 0;
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }

    /// Concatenate along `axis`; all other extents must agree.
    pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Dimension("concat of zero tensors".into()));
        }
        let base = parts[0].shape();
        if axis >= base.len() {
            return Err(Error::Dimension(format!(
                "concat axis {axis} out of range for shape {base:?}"
            )));
        }
        let mut axis_total = 0;
        for p in parts {
            let s = p.shape();
            if s.len() != base.len()
                || s.iter()
                    .zip(base)
                    .enumerate()
                    .any(|(d, (a, b))| d != axis && a != b)
            {
                return Err(Error::Dimension(format!(
                    "concat: {:?} vs {:?} along axis {axis}",
                    s, base
                )));
            }
            axis_total += s[axis];
        }
        let mut shape = base.to_vec();
        shape[axis] = axis_total;
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut data = vec![0.0; outer * axis_total * inner];
        let mut offset = 0;
        for p in parts {
            let blk = p.shape()[axis] * inner;
            for o in 0..outer {
                let dst = o * axis_total * inner + offset * inner;
                let src = o * blk;
                data[dst..dst + blk].copy_from_slice(&p.data()[src..src + blk]);
            }
            offset += p.shape()[axis];
        }
        let out = Tensor::raw(shape, data);
        if let Some((core, ids)) = tape_of(parts)? {
            let sizes: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
            let lens: Vec<usize> = parts.iter().map(|p| p.len()).collect();
            record_result(
                &core,
                &out,
                Box::new(move |og, store| {
                    let mut offset = 0;
                    for (pi, (&sz, &plen)) in sizes.iter().zip(&lens).enumerate() {
                        if let Some(id) = ids[pi] {
                            let blk = sz * inner;
                            let buf = store.buf(id, plen);
                            for o in 0..outer {
                                let src = o * axis_total * inner + offset * inner;
                                let dst = o * blk;
                                for j in 0..blk {
                                    buf[dst + j] += og[src + j];
                                }
                            }
                        }
                        offset += sz;
                    }
                }),
            );
        }
        Ok(out)
    }

    /// Select rows of a [n, c] tensor by index; indices may repeat.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "gather_rows expects a matrix, got {:?}",
                self.shape()
            )));
        }
        let (n, c) = (self.shape()[0], self.shape()[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Dimension(format!(
                "gather_rows: index {bad} out of range for {n} rows"
            )));
        }
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(&self.data()[i * c..(i + 1) * c]);
        }
        let out = Tensor::raw(vec![indices.len(), c], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                let indices = indices.to_vec();
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, n * c);
                        for (k, &i) in indices.iter().enumerate() {
                            for j in 0..c {
                                buf[i * c + j] += og[k * c + j];
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }

    /// Column-wise max over fixed-size row groups with a per-group valid
    /// count: input [g*group, c] reduces to [g, c], taking the max over the
    /// first `valid[i]` rows of group i. The gradient routes to the first
    /// maximal row of each (group, column).
    pub fn grouped_row_max(&self, group: usize, valid: &[usize]) -> Result<Tensor> {
        if self.shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "grouped_row_max expects a matrix, got {:?}",
                self.shape()
            )));
        }
        let (rows, c) = (self.shape()[0], self.shape()[1]);
        if group == 0 || rows % group != 0 {
            return Err(Error::Dimension(format!(
                "grouped_row_max: {rows} rows not divisible by group {group}"
            )));
        }
        let g = rows / group;
        if valid.len() != g {
            return Err(Error::Dimension(format!(
                "grouped_row_max: {} valid counts for {g} groups",
                valid.len()
            )));
        }
        if let Some(&bad) = valid.iter().find(|&&v| v == 0 || v > group) {
            return Err(Error::Contract(format!(
                "grouped_row_max: valid count {bad} outside [1, {group}]"
            )));
        }
        let xd = self.data();
        let mut data = vec![0.0; g * c];
        let mut argmax = vec![0u32; g * c];
        for gi in 0..g {
            for col in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_row = 0;
                for r in 0..valid[gi] {
                    let v = xd[(gi * group + r) * c + col];
                    if v > best {
                        best = v;
                        best_row = gi * group + r;
                    }
                }
                data[gi * c + col] = best;
                argmax[gi * c + col] = best_row as u32;
            }
        }
        let out = Tensor::raw(vec![g, c], data);
        if let Ok(Some((core, ids))) = tape_of(&[self]) {
            if let Some(id) = ids[0] {
                record_result(
                    &core,
                    &out,
                    Box::new(move |og, store| {
                        let buf = store.buf(id, rows * c);
                        for gi in 0..g {
                            for col in 0..c {
                                let r = argmax[gi * c + col] as usize;
                                buf[r * c + col] += og[gi * c + col];
                            }
                        }
                    }),
                );
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    fn watched(shape: &[usize], data: Vec<f64>, tape: &Tape) -> Tensor {
        let p = Tensor::param(shape, data).unwrap();
        tape.watch(&p);
        p
    }

    #[test]
    fn add_sub_mul_values() {
        let a = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![3.0, -4.0]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, -2.0]);
        assert_eq!(a.sub(&b).unwrap().data(), &[-2.0, 6.0]);
        assert_eq!(a.mul(&b).unwrap().data(), &[3.0, -8.0]);
        assert!(a
            .add(&Tensor::from_vec(&[3], vec![0.0; 3]).unwrap())
            .is_err());
    }

    #[test]
    fn square_gradient_is_two_x() {
        let tape = Tape::new();
        let p = watched(&[3], vec![1.0, -2.0, 0.5], &tape);
        p.mul(&p).unwrap().sum_all().backward().unwrap();
        assert_eq!(p.grad().unwrap(), vec![2.0, -4.0, 1.0]);
    }

    #[test]
    fn broadcast_row_to_matrix() {
        let tape = Tape::new();
        let b = watched(&[3], vec![1.0, 2.0, 3.0], &tape);
        let m = b.broadcast_to(&[2, 3]).unwrap();
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        m.sum_all().backward().unwrap();
        // each source entry feeds two output rows
        assert_eq!(b.grad().unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn broadcast_channel_to_map() {
        let b = Tensor::from_vec(&[2, 1, 1], vec![5.0, 7.0]).unwrap();
        let m = b.broadcast_to(&[2, 2, 2]).unwrap();
        assert_eq!(m.data(), &[5.0, 5.0, 5.0, 5.0, 7.0, 7.0, 7.0, 7.0]);
    }

    #[test]
    fn concat_axis1_and_gradient_split() {
        let tape = Tape::new();
        let a = watched(&[2, 2], vec![1.0, 2.0, 3.0, 4.0], &tape);
        let b = watched(&[2, 1], vec![9.0, 8.0], &tape);
        let c = Tensor::concat(&[&a, &b], 1).unwrap();
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c.data(), &[1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        c.mul(&c).unwrap().sum_all().backward().unwrap();
        assert_eq!(a.grad().unwrap(), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(b.grad().unwrap(), vec![18.0, 16.0]);
    }

    #[test]
    fn grouped_max_respects_valid_counts() {
        // two groups of three rows, second group has one valid row
        let x = Tensor::from_vec(
            &[6, 2],
            vec![
                1.0, 0.0, //
                5.0, -1.0, //
                2.0, 9.0, //
                7.0, 7.0, //
                100.0, 100.0, // padded, must be ignored
                100.0, 100.0,
            ],
        )
        .unwrap();
        let m = x.grouped_row_max(3, &[3, 1]).unwrap();
        assert_eq!(m.shape(), &[2, 2]);
        assert_eq!(m.data(), &[5.0, 9.0, 7.0, 7.0]);
    }

    #[test]
    fn grouped_max_gradient_routes_to_first_max() {
        let tape = Tape::new();
        // tie between rows 0 and 1: gradient goes to row 0
        let x = watched(&[2, 1], vec![3.0, 3.0], &tape);
        x.grouped_row_max(2, &[2])
            .unwrap()
            .sum_all()
            .backward()
            .unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn gather_rows_accumulates_repeats() {
        let tape = Tape::new();
        let x = watched(&[2, 2], vec![1.0, 2.0, 3.0, 4.0], &tape);
        let g = x.gather_rows(&[0, 0, 1]).unwrap();
        assert_eq!(g.shape(), &[3, 2]);
        g.sum_all().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn clamp_blocks_gradient_outside_range() {
        let tape = Tape::new();
        let x = watched(&[3], vec![-2.0, 0.5, 2.0], &tape);
        x.clamp(0.0, 1.0).sum_all().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.0, 1.0, 0.0]);
    }
}
