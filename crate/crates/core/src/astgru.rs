//! Long-term aggregation over keyframe feature maps.
//!
//! A convolutional gated recurrent cell carries memory across keyframes.
//! Two attention stages feed it: a spatial stage that reweighs every BEV
//! position against all others before the memory update, and a temporal
//! stage that warps the previous memory toward the current input with
//! deformable sampling whose offsets are driven by a motion map (the
//! difference between memory and input, near zero for static content).
//! A bidirectional variant runs an independent cell over the reversed
//! sequence and concatenates both memories channelwise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// The six channel-preserving 3x3 kernels of the recurrent cell.
#[derive(Debug, Clone)]
pub struct ConvGruParams {
    pub wz: Tensor,
    pub uz: Tensor,
    pub wr: Tensor,
    pub ur: Tensor,
    pub wc: Tensor,
    pub uc: Tensor,
}

impl ConvGruParams {
    pub fn init(c: usize, rng: &mut impl Rng) -> ConvGruParams {
        let scale = (2.0 / (c * 9) as f64).sqrt();
        let shape = [c, c, 3, 3];
        ConvGruParams {
            wz: Tensor::param_uniform(&shape, scale, rng),
            uz: Tensor::param_uniform(&shape, scale, rng),
            wr: Tensor::param_uniform(&shape, scale, rng),
            ur: Tensor::param_uniform(&shape, scale, rng),
            wc: Tensor::param_uniform(&shape, scale, rng),
            uc: Tensor::param_uniform(&shape, scale, rng),
        }
    }

    pub fn channels(&self) -> usize {
        self.wz.shape()[0]
    }
}

/// Recurrent memory with its direction of travel through the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct MemoryState {
    pub map: Tensor,
    pub direction: Direction,
}

/// One recurrent update:
/// z = sig(wz*x + uz*h), r = sig(wr*x + ur*h),
/// cand = tanh(wc*x + uc*(r.h)), out = (1-z).h + z.cand.
pub fn conv_gru_step(x: &Tensor, h_prev: &Tensor, p: &ConvGruParams) -> Result<Tensor> {
    if x.shape() != h_prev.shape() {
        return Err(Error::Dimension(format!(
            "recurrent step: input {:?} vs memory {:?}",
            x.shape(),
            h_prev.shape()
        )));
    }
    let conv = |m: &Tensor, k: &Tensor| m.conv2d(k, 1, 1);
    let z = conv(x, &p.wz)?.add(&conv(h_prev, &p.uz)?)?.sigmoid();
    let r = conv(x, &p.wr)?.add(&conv(h_prev, &p.ur)?)?.sigmoid();
    let gated = r.mul(h_prev)?;
    let cand = conv(x, &p.wc)?.add(&conv(&gated, &p.uc)?)?.tanh();
    let keep = z.neg().add_scalar(1.0).mul(h_prev)?;
    keep.add(&z.mul(&cand)?)
}

/// Pointwise query/key/value embeddings (half the input channels) plus the
/// output head that projects back.
#[derive(Debug, Clone)]
pub struct StaParams {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub w_out: Tensor,
    pub b_out: Tensor,
}

impl StaParams {
    pub fn init(c: usize, rng: &mut impl Rng) -> Result<StaParams> {
        if c % 2 != 0 {
            return Err(Error::Config(format!(
                "spatial attention needs an even channel count, got {c}"
            )));
        }
        let cp = c / 2;
        let scale_in = (2.0 / c as f64).sqrt();
        let scale_out = (2.0 / cp as f64).sqrt();
        Ok(StaParams {
            wq: Tensor::param_uniform(&[c, cp], scale_in, rng),
            bq: Tensor::param(&[cp], vec![0.0; cp]).unwrap(),
            wk: Tensor::param_uniform(&[c, cp], scale_in, rng),
            bk: Tensor::param(&[cp], vec![0.0; cp]).unwrap(),
            wv: Tensor::param_uniform(&[c, cp], scale_in, rng),
            bv: Tensor::param(&[cp], vec![0.0; cp]).unwrap(),
            w_out: Tensor::param_uniform(&[cp, c], scale_out, rng),
            b_out: Tensor::param(&[c], vec![0.0; c]).unwrap(),
        })
    }
}

/// Spatial attention plus the [l, l] weight matrix it used (rows sum to 1).
pub fn spatial_attention_detailed(x: &Tensor, p: &StaParams) -> Result<(Tensor, Tensor)> {
    if x.shape().len() != 3 {
        return Err(Error::Dimension(format!(
            "spatial attention expects [c,h,w], got {:?}",
            x.shape()
        )));
    }
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let l = h * w;
    let cp = p.wq.shape()[1];
    let feat = x.reshape(&[c, l])?.transpose2()?; // [l, c]
    let embed = |w_: &Tensor, b: &Tensor| -> Result<Tensor> {
        feat.matmul(w_)?.add(&b.broadcast_to(&[l, cp])?)
    };
    let q = embed(&p.wq, &p.bq)?;
    let k = embed(&p.wk, &p.bk)?;
    let v = embed(&p.wv, &p.bv)?;
    let weights = q.matmul(&k.transpose2()?)?.softmax_rows()?;
    let attended = weights.matmul(&v)?; // [l, c']
    let out = attended
        .matmul(&p.w_out)?
        .add(&p.b_out.broadcast_to(&[l, c])?)?;
    let residual = out.transpose2()?.reshape(&[c, h, w])?.add(x)?;
    Ok((residual, weights))
}

/// Attend every position against all others and add the result back onto
/// the input (residual form).
pub fn spatial_attention(x: &Tensor, p: &StaParams) -> Result<Tensor> {
    spatial_attention_detailed(x, p).map(|(out, _)| out)
}

/// One deformable alignment layer: a 3x3 offset predictor (zero-initialized,
/// so training starts from plain convolution) and the 3x3 sampling kernel.
#[derive(Debug, Clone)]
pub struct TtaLayer {
    pub offset_kernel: Tensor,
    pub offset_bias: Tensor,
    pub weight: Tensor,
}

/// Temporal alignment stack. With `motion_map` the offset predictor sees
/// [memory, memory - input]; without it, memory alone.
#[derive(Debug, Clone)]
pub struct TtaParams {
    pub layers: Vec<TtaLayer>,
    pub motion_map: bool,
}

/// Offset channels per 3x3 kernel: a (dy, dx) pair for each of the 9 taps.
pub const OFFSET_CHANNELS: usize = 18;

impl TtaParams {
    pub fn init(c: usize, layers: usize, motion_map: bool, rng: &mut impl Rng) -> TtaParams {
        let in_c = if motion_map { 2 * c } else { c };
        let scale = (2.0 / (c * 9) as f64).sqrt();
        let layers = (0..layers)
            .map(|_| TtaLayer {
                offset_kernel: Tensor::param(
                    &[OFFSET_CHANNELS, in_c, 3, 3],
                    vec![0.0; OFFSET_CHANNELS * in_c * 9],
                )
                .unwrap(),
                offset_bias: Tensor::param(&[OFFSET_CHANNELS], vec![0.0; OFFSET_CHANNELS])
                    .unwrap(),
                weight: Tensor::param_uniform(&[c, c, 3, 3], scale, rng),
            })
            .collect();
        TtaParams { layers, motion_map }
    }
}

/// Deformable 3x3 convolution of `map` with per-position tap offsets.
/// `offsets` is [18, h, w]: channels (2m, 2m+1) hold the (dy, dx) shift of
/// tap m. Out-of-bounds samples contribute zero.
pub fn deform_conv3x3(map: &Tensor, offsets: &Tensor, weight: &Tensor) -> Result<Tensor> {
    let (c, h, w) = (map.shape()[0], map.shape()[1], map.shape()[2]);
    if offsets.shape() != [OFFSET_CHANNELS, h, w] {
        return Err(Error::Dimension(format!(
            "offsets {:?} do not match map {:?}",
            offsets.shape(),
            map.shape()
        )));
    }
    let l = h * w;
    let flat_offsets = offsets.reshape(&[OFFSET_CHANNELS, l])?;
    // base sampling grid, built once per call
    let mut base_y = Vec::with_capacity(l);
    let mut base_x = Vec::with_capacity(l);
    for yy in 0..h {
        for xx in 0..w {
            base_y.push(yy as f64);
            base_x.push(xx as f64);
        }
    }
    let weight_cols = weight.reshape(&[c * c, 9])?.transpose2()?; // [9, c*c]
    let mut acc: Option<Tensor> = None;
    for m in 0..9 {
        let py = (m / 3) as f64 - 1.0;
        let px = (m % 3) as f64 - 1.0;
        let tap_y = Tensor::from_vec(&[1, l], base_y.iter().map(|v| v + py).collect())?;
        let tap_x = Tensor::from_vec(&[1, l], base_x.iter().map(|v| v + px).collect())?;
        let dy = flat_offsets.gather_rows(&[2 * m])?.add(&tap_y)?;
        let dx = flat_offsets.gather_rows(&[2 * m + 1])?.add(&tap_x)?;
        let coords = Tensor::concat(&[&dy, &dx], 0)?;
        let sampled = map.bilinear_gather(&coords)?; // [c, l]
        let wm = weight_cols.gather_rows(&[m])?.reshape(&[c, c])?;
        let contrib = wm.matmul(&sampled)?;
        acc = Some(match acc {
            None => contrib,
            Some(a) => a.add(&contrib)?,
        });
    }
    acc.unwrap().reshape(&[c, h, w])
}

/// Align the previous memory toward the attended current input. Each layer
/// predicts per-tap offsets from the (optionally motion-augmented) memory and
/// resamples it; later layers refine the already-aligned memory.
pub fn temporal_attention(h_prev: &Tensor, x_att: &Tensor, p: &TtaParams) -> Result<Tensor> {
    if h_prev.shape() != x_att.shape() {
        return Err(Error::Dimension(format!(
            "temporal attention: memory {:?} vs input {:?}",
            h_prev.shape(),
            x_att.shape()
        )));
    }
    let mut h = h_prev.clone();
    for layer in &p.layers {
        let inp = if p.motion_map {
            let motion = h.sub(x_att)?;
            Tensor::concat(&[&h, &motion], 0)?
        } else {
            h.clone()
        };
        let shape = [OFFSET_CHANNELS, h.shape()[1], h.shape()[2]];
        let offsets = inp.conv2d(&layer.offset_kernel, 1, 1)?.add(
            &layer
                .offset_bias
                .reshape(&[OFFSET_CHANNELS, 1, 1])?
                .broadcast_to(&shape)?,
        )?;
        h = deform_conv3x3(&h, &offsets, &layer.weight)?;
    }
    Ok(h)
}

/// Everything one direction of the aggregator needs. `sta` and `tta` are
/// optional so the plain recurrent and single-attention variants share the
/// same driver.
#[derive(Debug, Clone)]
pub struct AstGruParams {
    pub sta: Option<StaParams>,
    pub tta: Option<TtaParams>,
    pub gru: ConvGruParams,
}

/// Run the aggregator over a keyframe sequence, producing one memory per
/// step. The first step starts from zero memory and skips the temporal
/// alignment (there is nothing to align yet).
pub fn ast_gru_forward(sequence: &[Tensor], p: &AstGruParams) -> Result<Vec<Tensor>> {
    if sequence.is_empty() {
        return Err(Error::Contract("aggregator needs at least one frame".into()));
    }
    let mut memories = Vec::with_capacity(sequence.len());
    let mut h: Option<Tensor> = None;
    for x in sequence {
        let x_att = match &p.sta {
            Some(sta) => spatial_attention(x, sta)?,
            None => x.clone(),
        };
        let h_prev = match (&h, &p.tta) {
            (Some(prev), Some(tta)) => temporal_attention(prev, &x_att, tta)?,
            (Some(prev), None) => prev.clone(),
            (None, _) => Tensor::zeros(x.shape()),
        };
        let next = conv_gru_step(&x_att, &h_prev, &p.gru)?;
        memories.push(next.clone());
        h = Some(next);
    }
    Ok(memories)
}

/// Bidirectional aggregation: the forward unit runs as usual; an independent
/// backward unit consumes the same attended inputs in reverse order; the two
/// memories are concatenated channelwise per step (2c channels out).
///
/// The spatial attention of `fwd` is shared by both directions; `bwd.sta`
/// is ignored.
pub fn bidirectional_forward(
    sequence: &[Tensor],
    fwd: &AstGruParams,
    bwd: &AstGruParams,
) -> Result<Vec<Tensor>> {
    if sequence.is_empty() {
        return Err(Error::Contract("aggregator needs at least one frame".into()));
    }
    let attended: Vec<Tensor> = sequence
        .iter()
        .map(|x| match &fwd.sta {
            Some(sta) => spatial_attention(x, sta),
            None => Ok(x.clone()),
        })
        .collect::<Result<_>>()?;

    let run = |inputs: &[Tensor], p: &AstGruParams| -> Result<Vec<Tensor>> {
        let mut memories = Vec::with_capacity(inputs.len());
        let mut h: Option<Tensor> = None;
        for x_att in inputs {
            let h_prev = match (&h, &p.tta) {
                (Some(prev), Some(tta)) => temporal_attention(prev, x_att, tta)?,
                (Some(prev), None) => prev.clone(),
                (None, _) => Tensor::zeros(x_att.shape()),
            };
            let next = conv_gru_step(x_att, &h_prev, &p.gru)?;
            memories.push(next.clone());
            h = Some(next);
        }
        Ok(memories)
    };

    let forward = run(&attended, fwd)?;
    let reversed: Vec<Tensor> = attended.iter().rev().cloned().collect();
    let mut backward = run(&reversed, bwd)?;
    backward.reverse();

    forward
        .iter()
        .zip(&backward)
        .map(|(f, b)| Tensor::concat(&[f, b], 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_map(shape: &[usize], seed: u64) -> Tensor {
        let mut r = rng(seed);
        use rand::Rng;
        let data = (0..shape.iter().product::<usize>())
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    fn const_kernel(c: usize, v: f64) -> Tensor {
        Tensor::param(&[c, c, 3, 3], vec![v; c * c * 9]).unwrap()
    }

    #[test]
    fn saturated_gates_hit_both_limits() {
        let c = 1;
        // wz strongly negative on a positive input: z ~ 0 keeps the memory
        let frozen = ConvGruParams {
            wz: const_kernel(c, -20.0),
            uz: const_kernel(c, 0.0),
            wr: const_kernel(c, 0.0),
            ur: const_kernel(c, 0.0),
            wc: const_kernel(c, 1.0),
            uc: const_kernel(c, 0.0),
        };
        let x = Tensor::ones(&[1, 3, 3]);
        let h = random_map(&[1, 3, 3], 3);
        let out = conv_gru_step(&x, &h, &frozen).unwrap();
        for (a, b) in out.data().iter().zip(h.data()) {
            assert!((a - b).abs() < 1e-6, "memory not preserved at z=0");
        }

        // wz strongly positive: z ~ 1 replaces the memory with the candidate
        let replace = ConvGruParams {
            wz: const_kernel(c, 20.0),
            uz: const_kernel(c, 0.0),
            wr: const_kernel(c, 0.0),
            ur: const_kernel(c, 0.0),
            wc: const_kernel(c, 0.0),
            uc: const_kernel(c, 0.0),
        };
        let out = conv_gru_step(&x, &h, &replace).unwrap();
        // candidate = tanh(0) = 0 everywhere
        for &v in out.data() {
            assert!(v.abs() < 1e-6, "memory not replaced at z=1");
        }
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let p = ConvGruParams::init(1, &mut rng(0));
        let x = Tensor::ones(&[1, 3, 3]);
        let h = Tensor::ones(&[1, 4, 4]);
        assert!(matches!(
            conv_gru_step(&x, &h, &p),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn zero_output_head_is_residual_passthrough() {
        let c = 4;
        let mut p = StaParams::init(c, &mut rng(1)).unwrap();
        p.w_out = Tensor::param(&[c / 2, c], vec![0.0; c / 2 * c]).unwrap();
        p.b_out = Tensor::param(&[c], vec![0.0; c]).unwrap();
        let x = random_map(&[c, 3, 3], 5);
        let y = spatial_attention(&x, &p).unwrap();
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn constant_input_gives_uniform_attention() {
        let c = 2;
        let p = StaParams::init(c, &mut rng(2)).unwrap();
        let x = Tensor::full(&[c, 2, 2], 0.7);
        let (_, weights) = spatial_attention_detailed(&x, &p).unwrap();
        let l = 4;
        for &v in weights.data() {
            assert!((v - 1.0 / l as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let c = 4;
        let p = StaParams::init(c, &mut rng(3)).unwrap();
        let x = random_map(&[c, 3, 4], 7);
        let (_, weights) = spatial_attention_detailed(&x, &p).unwrap();
        let l = 12;
        for row in 0..l {
            let s: f64 = weights.data()[row * l..(row + 1) * l].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_offsets_reduce_to_plain_convolution() {
        let c = 3;
        let mut r = rng(4);
        let p = TtaParams::init(c, 1, true, &mut r);
        let h = random_map(&[c, 5, 5], 8);
        let x = random_map(&[c, 5, 5], 9);
        let aligned = temporal_attention(&h, &x, &p).unwrap();
        let plain = h.conv2d(&p.layers[0].weight, 1, 1).unwrap();
        for (a, b) in aligned.data().iter().zip(plain.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn static_scene_zeroes_the_motion_map_and_stays_finite() {
        let c = 2;
        let mut r = rng(5);
        let mut p = TtaParams::init(c, 2, true, &mut r);
        // non-zero offset kernel so offsets actually depend on the input
        p.layers[0].offset_kernel = Tensor::param_uniform(
            &[OFFSET_CHANNELS, 2 * c, 3, 3],
            0.05,
            &mut r,
        );
        let h = random_map(&[c, 4, 4], 10);
        let out = temporal_attention(&h, &h, &p).unwrap();
        assert!(out.is_finite());
    }

    #[test]
    fn uniform_unit_offset_shifts_the_map() {
        // identity-like kernel: only the center tap (m = 4) passes channel 0
        let c = 1;
        let mut weight = vec![0.0; 9];
        weight[4] = 1.0;
        let layer = TtaLayer {
            offset_kernel: Tensor::param(&[OFFSET_CHANNELS, c, 3, 3], vec![0.0; OFFSET_CHANNELS * 9])
                .unwrap(),
            // dx = 1 for the center tap (channel 2*4+1)
            offset_bias: Tensor::param(&[OFFSET_CHANNELS], {
                let mut b = vec![0.0; OFFSET_CHANNELS];
                b[9] = 1.0;
                b
            })
            .unwrap(),
            weight: Tensor::param(&[c, c, 3, 3], weight).unwrap(),
        };
        let p = TtaParams {
            layers: vec![layer],
            motion_map: false,
        };
        let h = random_map(&[1, 4, 4], 11);
        let out = temporal_attention(&h, &h, &p).unwrap();
        // interior: out(y, x) = h(y, x+1)
        for y in 0..4 {
            for x in 0..3 {
                let got = out.data()[y * 4 + x];
                let want = h.data()[y * 4 + x + 1];
                assert!((got - want).abs() < 1e-12, "({y},{x})");
            }
        }
    }

    #[test]
    fn single_step_runs_from_zero_memory() {
        let c = 2;
        let mut r = rng(6);
        let p = AstGruParams {
            sta: None,
            tta: None,
            gru: ConvGruParams::init(c, &mut r),
        };
        let x = random_map(&[c, 4, 4], 12);
        let out = ast_gru_forward(std::slice::from_ref(&x), &p).unwrap();
        assert_eq!(out.len(), 1);
        let manual = conv_gru_step(&x, &Tensor::zeros(x.shape()), &p.gru).unwrap();
        assert_eq!(out[0].data(), manual.data());
    }

    #[test]
    fn empty_sequence_is_contract_error() {
        let p = AstGruParams {
            sta: None,
            tta: None,
            gru: ConvGruParams::init(1, &mut rng(0)),
        };
        assert!(matches!(
            ast_gru_forward(&[], &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn forward_composes_the_three_stages_in_order() {
        let c = 2;
        let mut r = rng(7);
        let p = AstGruParams {
            sta: Some(StaParams::init(c, &mut r).unwrap()),
            tta: Some(TtaParams::init(c, 2, true, &mut r)),
            gru: ConvGruParams::init(c, &mut r),
        };
        let x1 = random_map(&[c, 4, 4], 13);
        let x2 = random_map(&[c, 4, 4], 14);
        let out = ast_gru_forward(&[x1.clone(), x2.clone()], &p).unwrap();

        // hand-composed reference
        let a1 = spatial_attention(&x1, p.sta.as_ref().unwrap()).unwrap();
        let h1 = conv_gru_step(&a1, &Tensor::zeros(x1.shape()), &p.gru).unwrap();
        let a2 = spatial_attention(&x2, p.sta.as_ref().unwrap()).unwrap();
        let h1_aligned = temporal_attention(&h1, &a2, p.tta.as_ref().unwrap()).unwrap();
        let h2 = conv_gru_step(&a2, &h1_aligned, &p.gru).unwrap();
        assert_eq!(out[0].data(), h1.data());
        assert_eq!(out[1].data(), h2.data());
    }

    #[test]
    fn bidirectional_doubles_channels_and_reverses_cleanly() {
        let c = 2;
        let mut r = rng(8);
        let fwd = AstGruParams {
            sta: Some(StaParams::init(c, &mut r).unwrap()),
            tta: Some(TtaParams::init(c, 1, true, &mut r)),
            gru: ConvGruParams::init(c, &mut r),
        };
        let bwd = AstGruParams {
            sta: None,
            tta: Some(TtaParams::init(c, 1, true, &mut r)),
            gru: ConvGruParams::init(c, &mut r),
        };
        let seq: Vec<Tensor> = (0..3).map(|i| random_map(&[c, 4, 4], 20 + i)).collect();
        let out = bidirectional_forward(&seq, &fwd, &bwd).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].shape(), &[2 * c, 4, 4]);

        // time reversal: swap the directional cores, reverse the input,
        // reverse the output, swap the channel halves
        let fwd_swapped = AstGruParams {
            sta: fwd.sta.clone(),
            tta: bwd.tta.clone(),
            gru: bwd.gru.clone(),
        };
        let bwd_swapped = AstGruParams {
            sta: None,
            tta: fwd.tta.clone(),
            gru: fwd.gru.clone(),
        };
        let rev_seq: Vec<Tensor> = seq.iter().rev().cloned().collect();
        let swapped = bidirectional_forward(&rev_seq, &fwd_swapped, &bwd_swapped).unwrap();
        let n = c * 16;
        for t in 0..3 {
            let orig = out[t].data();
            let mirror = swapped[2 - t].data();
            for j in 0..n {
                assert!((orig[j] - mirror[n + j]).abs() < 1e-12);
                assert!((orig[n + j] - mirror[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_parameters_propagate_zero_memories() {
        let c = 1;
        let zero = ConvGruParams {
            wz: const_kernel(c, 0.0),
            uz: const_kernel(c, 0.0),
            wr: const_kernel(c, 0.0),
            ur: const_kernel(c, 0.0),
            wc: const_kernel(c, 0.0),
            uc: const_kernel(c, 0.0),
        };
        let p = AstGruParams {
            sta: None,
            tta: None,
            gru: zero,
        };
        let seq = vec![Tensor::zeros(&[1, 3, 3]); 3];
        let out = ast_gru_forward(&seq, &p).unwrap();
        for h in out {
            assert!(h.data().iter().all(|&v| v == 0.0));
        }
    }
}
