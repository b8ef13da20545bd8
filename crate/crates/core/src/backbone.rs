//! Small strided convolution backbone over the scattered BEV tensor.
//!
//! Blocks run sequentially; each block's output is upsampled back to the
//! first block's resolution and all of them are concatenated channelwise,
//! merging semantics from the different scales.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One convolution block: (stride, kernel size, channels) plus layer count.
/// The stride applies to the block's first convolution only.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockSpec {
    pub stride: usize,
    pub kernel: usize,
    pub channels: usize,
    pub layers: usize,
}

impl BlockSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.stride == 1 || self.stride == 2) {
            return Err(Error::Config(format!(
                "block stride must be 1 or 2, got {}",
                self.stride
            )));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "block kernel must be odd, got {}",
                self.kernel
            )));
        }
        if self.channels == 0 || self.layers == 0 {
            return Err(Error::Config("block needs channels and layers".into()));
        }
        Ok(())
    }
}

/// A feature map in the keyframe ego frame with its spatial resolution.
#[derive(Debug, Clone)]
pub struct BevFeatureMap {
    pub map: Tensor,
    /// Meters per cell at this map's resolution.
    pub cell: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct BackboneParams {
    pub specs: Vec<BlockSpec>,
    /// Per block, per layer: (kernel [co, ci, k, k], bias [co]).
    pub convs: Vec<Vec<(Tensor, Tensor)>>,
}

impl BackboneParams {
    pub fn init(in_channels: usize, specs: &[BlockSpec], rng: &mut impl Rng) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("backbone needs at least one block".into()));
        }
        let mut convs = Vec::with_capacity(specs.len());
        let mut ci = in_channels;
        for spec in specs {
            spec.validate()?;
            let mut layers = Vec::with_capacity(spec.layers);
            for _ in 0..spec.layers {
                let k = spec.kernel;
                let co = spec.channels;
                let scale = (2.0 / (ci * k * k) as f64).sqrt();
                layers.push((
                    Tensor::param_uniform(&[co, ci, k, k], scale, rng),
                    Tensor::param(&[co], vec![0.0; co]).unwrap(),
                ));
                ci = co;
            }
            convs.push(layers);
        }
        Ok(BackboneParams {
            specs: specs.to_vec(),
            convs,
        })
    }

    /// Total output channels after the concatenation.
    pub fn out_channels(&self) -> usize {
        self.specs.iter().map(|b| b.channels).sum()
    }

    /// Spatial downscale of the output relative to the input
    /// (the first block's stride; later blocks are upsampled back).
    pub fn out_stride(&self) -> usize {
        self.specs[0].stride
    }
}

/// Run the block stack and fuse the per-block outputs at the first block's
/// resolution. Input extents must divide evenly by the cumulative strides.
pub fn backbone_forward(bev: &Tensor, params: &BackboneParams) -> Result<Tensor> {
    if bev.shape().len() != 3 {
        return Err(Error::Dimension(format!(
            "backbone expects [c,h,w], got {:?}",
            bev.shape()
        )));
    }
    let (h, w) = (bev.shape()[1], bev.shape()[2]);
    let total_stride: usize = params.specs.iter().map(|b| b.stride).product();
    if h % total_stride != 0 || w % total_stride != 0 {
        return Err(Error::Config(format!(
            "input {h}x{w} not divisible by cumulative stride {total_stride}"
        )));
    }

    let mut x = bev.clone();
    let mut block_outputs = Vec::with_capacity(params.specs.len());
    for (spec, layers) in params.specs.iter().zip(&params.convs) {
        for (li, (kernel, bias)) in layers.iter().enumerate() {
            let stride = if li == 0 { spec.stride } else { 1 };
            let pad = spec.kernel / 2;
            let conv = x.conv2d(kernel, stride, pad)?;
            let shape = conv.shape().to_vec();
            let co = shape[0];
            x = conv
                .add(&bias.reshape(&[co, 1, 1])?.broadcast_to(&shape)?)?
                .relu();
        }
        block_outputs.push(x.clone());
    }

    // upsample every block output to the first block's resolution
    let mut fused = Vec::with_capacity(block_outputs.len());
    let mut factor = 1;
    for (bi, out) in block_outputs.into_iter().enumerate() {
        if bi > 0 {
            factor *= params.specs[bi].stride;
        }
        let mut up = out;
        let mut f = factor;
        while f > 1 {
            up = up.upsample_nearest2()?;
            f /= 2;
        }
        fused.push(up);
    }
    let refs: Vec<&Tensor> = fused.iter().collect();
    Tensor::concat(&refs, 0)
}
