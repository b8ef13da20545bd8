//! Anchor-free center head: class heatmaps plus an 8-channel regression map
//! (sub-cell offset, log size, yaw as sin/cos, velocity), with Gaussian
//! target splatting, a penalty-reduced focal loss, and peak decoding with
//! greedy oriented NMS.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::BevBox;
use crate::tensor::Tensor;

/// Regression channels: off_x, off_y, log length, log width, sin yaw,
/// cos yaw, vx, vy.
pub const REG_CHANNELS: usize = 8;

/// Mapping between map cells and world coordinates at the head's resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGeometry {
    pub x_min: f64,
    pub y_min: f64,
    pub cell: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub num_classes: usize,
}

impl HeadGeometry {
    fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        let fx = (x - self.x_min) / self.cell.0;
        let fy = (y - self.y_min) / self.cell.1;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let gx = fx.floor() as usize;
        let gy = fy.floor() as usize;
        if gx >= self.nx || gy >= self.ny {
            return None;
        }
        Some((gx, gy, fx - gx as f64, fy - gy as f64))
    }
}

#[derive(Debug, Clone)]
pub struct HeadParams {
    pub proj_w: Tensor,
    pub proj_b: Tensor,
    pub heat_conv_w: Tensor,
    pub heat_conv_b: Tensor,
    pub heat_out_w: Tensor,
    pub heat_out_b: Tensor,
    pub reg_conv_w: Tensor,
    pub reg_conv_b: Tensor,
    pub reg_out_w: Tensor,
    pub reg_out_b: Tensor,
}

impl HeadParams {
    pub fn init(c_in: usize, c_h: usize, num_classes: usize, rng: &mut impl Rng) -> HeadParams {
        let p_scale = (2.0 / c_in as f64).sqrt();
        let c_scale = (2.0 / (c_h * 9) as f64).sqrt();
        let o_scale = (2.0 / c_h as f64).sqrt();
        HeadParams {
            proj_w: Tensor::param_uniform(&[c_h, c_in, 1, 1], p_scale, rng),
            proj_b: Tensor::param(&[c_h], vec![0.0; c_h]).unwrap(),
            heat_conv_w: Tensor::param_uniform(&[c_h, c_h, 3, 3], c_scale, rng),
            heat_conv_b: Tensor::param(&[c_h], vec![0.0; c_h]).unwrap(),
            heat_out_w: Tensor::param_uniform(&[num_classes, c_h, 1, 1], o_scale, rng),
            // bias at logit(0.1): background-dominated maps start calm
            heat_out_b: Tensor::param(&[num_classes], vec![-2.197224577336219; num_classes])
                .unwrap(),
            reg_conv_w: Tensor::param_uniform(&[c_h, c_h, 3, 3], c_scale, rng),
            reg_conv_b: Tensor::param(&[c_h], vec![0.0; c_h]).unwrap(),
            reg_out_w: Tensor::param_uniform(&[REG_CHANNELS, c_h, 1, 1], o_scale, rng),
            reg_out_b: Tensor::param(&[REG_CHANNELS], vec![0.0; REG_CHANNELS]).unwrap(),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.proj_w.shape()[1]
    }

    pub fn num_classes(&self) -> usize {
        self.heat_out_w.shape()[0]
    }
}

fn conv_bias_relu(x: &Tensor, w: &Tensor, b: &Tensor, k: usize) -> Result<Tensor> {
    let y = x.conv2d(w, 1, k / 2)?;
    let shape = y.shape().to_vec();
    let c = shape[0];
    Ok(y.add(&b.reshape(&[c, 1, 1])?.broadcast_to(&shape)?)?.relu())
}

fn conv_bias(x: &Tensor, w: &Tensor, b: &Tensor, k: usize) -> Result<Tensor> {
    let y = x.conv2d(w, 1, k / 2)?;
    let shape = y.shape().to_vec();
    let c = shape[0];
    y.add(&b.reshape(&[c, 1, 1])?.broadcast_to(&shape)?)
}

/// Heatmap logits and regression maps from a memory/feature map.
/// The heatmap passes through sigmoid at loss/decode time, not here.
pub fn head_forward(input: &Tensor, params: &HeadParams) -> Result<(Tensor, Tensor)> {
    if input.shape().len() != 3 || input.shape()[0] != params.in_channels() {
        return Err(Error::Dimension(format!(
            "head expects [{}, h, w], got {:?}",
            params.in_channels(),
            input.shape()
        )));
    }
    let trunk = conv_bias_relu(input, &params.proj_w, &params.proj_b, 1)?;
    let heat = conv_bias_relu(&trunk, &params.heat_conv_w, &params.heat_conv_b, 3)?;
    let heat_logits = conv_bias(&heat, &params.heat_out_w, &params.heat_out_b, 1)?;
    let reg = conv_bias_relu(&trunk, &params.reg_conv_w, &params.reg_conv_b, 3)?;
    let reg_maps = conv_bias(&reg, &params.reg_out_w, &params.reg_out_b, 1)?;
    Ok((heat_logits, reg_maps))
}

/// Supervision targets for one frame.
#[derive(Debug, Clone)]
pub struct TargetMaps {
    /// [num_classes, ny, nx] in [0, 1], peak exactly 1 at each center cell.
    pub heatmap: Tensor,
    /// [REG_CHANNELS, ny, nx], defined at center cells.
    pub regression: Tensor,
    /// [REG_CHANNELS, ny, nx] indicator of supervised cells.
    pub mask: Tensor,
    pub num_objects: usize,
}

/// Splat radius so any box shifted by r cells still overlaps the original by
/// at least `min_overlap` (the usual three-case bound, in cell units).
fn gaussian_radius(height: f64, width: f64, min_overlap: f64) -> f64 {
    let a1 = 1.0;
    let b1 = height + width;
    let c1 = width * height * (1.0 - min_overlap) / (1.0 + min_overlap);
    let r1 = (b1 - (b1 * b1 - 4.0 * a1 * c1).max(0.0).sqrt()) / (2.0 * a1);

    let a2 = 4.0;
    let b2 = 2.0 * (height + width);
    let c2 = (1.0 - min_overlap) * width * height;
    let r2 = (b2 - (b2 * b2 - 4.0 * a2 * c2).max(0.0).sqrt()) / (2.0 * a2);

    let a3 = 4.0 * min_overlap;
    let b3 = -2.0 * min_overlap * (height + width);
    let c3 = (min_overlap - 1.0) * width * height;
    let r3 = (-b3 + (b3 * b3 - 4.0 * a3 * c3).max(0.0).sqrt()) / (2.0 * a3);

    r1.min(r2).min(r3)
}

/// Build heatmap/regression/mask targets from ground-truth boxes.
/// Boxes outside the map range are skipped. Overlapping Gaussians combine by
/// elementwise max, so peaks stay exactly 1.
pub fn make_targets(gt: &[BevBox], geo: &HeadGeometry) -> Result<TargetMaps> {
    let (nx, ny, nc) = (geo.nx, geo.ny, geo.num_classes);
    let mut heat = vec![0.0; nc * ny * nx];
    let mut reg = vec![0.0; REG_CHANNELS * ny * nx];
    let mut mask = vec![0.0; REG_CHANNELS * ny * nx];
    let mut count = 0usize;

    for b in gt {
        if b.class_id as usize >= nc {
            return Err(Error::Contract(format!(
                "box class {} outside the {nc}-class table",
                b.class_id
            )));
        }
        let Some((gx, gy, off_x, off_y)) = geo.cell_of(b.x, b.y) else {
            continue;
        };
        count += 1;
        let l_cells = b.length / geo.cell.0;
        let w_cells = b.width / geo.cell.1;
        let radius = gaussian_radius(w_cells, l_cells, 0.7).max(0.0).floor() as isize;
        let sigma = (2.0 * radius as f64 + 1.0) / 6.0;
        let c = b.class_id as usize;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (yy, xx) = (gy as isize + dy, gx as isize + dx);
                if yy < 0 || xx < 0 || yy >= ny as isize || xx >= nx as isize {
                    continue;
                }
                let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                let slot = &mut heat[c * ny * nx + yy as usize * nx + xx as usize];
                if g > *slot {
                    *slot = g;
                }
            }
        }
        let center = gy * nx + gx;
        let values = [
            off_x,
            off_y,
            (b.length / geo.cell.0).ln(),
            (b.width / geo.cell.1).ln(),
            b.yaw.sin(),
            b.yaw.cos(),
            b.vx,
            b.vy,
        ];
        for (ch, v) in values.iter().enumerate() {
            reg[ch * ny * nx + center] = *v;
            mask[ch * ny * nx + center] = 1.0;
        }
    }
    Ok(TargetMaps {
        heatmap: Tensor::from_vec(&[nc, ny, nx], heat)?,
        regression: Tensor::from_vec(&[REG_CHANNELS, ny, nx], reg)?,
        mask: Tensor::from_vec(&[REG_CHANNELS, ny, nx], mask)?,
        num_objects: count,
    })
}

/// Penalty-reduced focal loss on the heatmap (alpha = 2, beta = 4) plus L1 on
/// the masked regression cells, both normalized by object count (at least 1).
pub fn detection_loss(
    heat_logits: &Tensor,
    reg_pred: &Tensor,
    targets: &TargetMaps,
) -> Result<Tensor> {
    if heat_logits.shape() != targets.heatmap.shape() {
        return Err(Error::Dimension(format!(
            "heatmap {:?} vs targets {:?}",
            heat_logits.shape(),
            targets.heatmap.shape()
        )));
    }
    if reg_pred.shape() != targets.regression.shape() {
        return Err(Error::Dimension(format!(
            "regression {:?} vs targets {:?}",
            reg_pred.shape(),
            targets.regression.shape()
        )));
    }
    let n = targets.num_objects.max(1) as f64;
    let gt = &targets.heatmap;
    let pos_mask = Tensor::from_vec(
        gt.shape(),
        gt.data()
            .iter()
            .map(|&v| if v >= 1.0 { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let p = heat_logits.sigmoid().clamp(1e-12, 1.0 - 1e-12);
    let one_minus_p = p.neg().add_scalar(1.0);
    // positives: (1-p)^2 ln p at gt == 1
    let pos = pos_mask.mul(&one_minus_p.powf(2.0))?.mul(&p.ln())?;
    // negatives: (1-gt)^4 p^2 ln(1-p); the (1-gt)^4 factor kills gt == 1 cells
    let neg_weight = gt.neg().add_scalar(1.0).powf(4.0);
    let neg = neg_weight.mul(&p.powf(2.0))?.mul(&one_minus_p.ln())?;
    let heat_loss = pos.sum_all().add(&neg.sum_all())?.mul_scalar(-1.0 / n);

    let reg_loss = reg_pred
        .sub(&targets.regression)?
        .abs()
        .mul(&targets.mask)?
        .sum_all()
        .mul_scalar(1.0 / n);
    heat_loss.add(&reg_loss)
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc.abs() / 2.0
}

/// Clip `subject` (convex, ccw) by the half-plane left of (a -> b).
fn clip_edge(subject: &[(f64, f64)], a: (f64, f64), b: (f64, f64)) -> Vec<(f64, f64)> {
    let inside = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= -1e-12;
    let intersect = |p: (f64, f64), q: (f64, f64)| {
        let d1 = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let d2 = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
        let t = d1 / (d1 - d2);
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    let mut out = Vec::with_capacity(subject.len() + 1);
    for i in 0..subject.len() {
        let cur = subject[i];
        let prev = subject[(i + subject.len() - 1) % subject.len()];
        let cur_in = inside(cur);
        let prev_in = inside(prev);
        if cur_in {
            if !prev_in {
                out.push(intersect(prev, cur));
            }
            out.push(cur);
        } else if prev_in {
            out.push(intersect(prev, cur));
        }
    }
    out
}

/// Intersection-over-union of two oriented boxes via polygon clipping.
pub fn obb_iou(a: &BevBox, b: &BevBox) -> f64 {
    let pa = a.corners().to_vec();
    let pb = b.corners();
    let mut clipped = pa;
    for i in 0..4 {
        if clipped.is_empty() {
            break;
        }
        clipped = clip_edge(&clipped, pb[i], pb[(i + 1) % 4]);
    }
    let inter = polygon_area(&clipped);
    let union = a.length * a.width + b.length * b.width - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Greedy class-agnostic NMS: boxes ordered by descending score; a box
/// survives if its oriented IoU with every kept box stays below `iou`.
pub fn nms(mut boxes: Vec<BevBox>, iou: f64, max_out: usize) -> Vec<BevBox> {
    boxes.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    let mut kept: Vec<BevBox> = Vec::new();
    for b in boxes {
        if kept.len() >= max_out {
            break;
        }
        if kept.iter().all(|k| obb_iou(k, &b) < iou) {
            kept.push(b);
        }
    }
    kept
}

/// Decode probability + regression maps back into boxes: local 3x3 maxima of
/// the class heatmaps above `score_threshold` become candidates, regression
/// channels are inverted at the peak cell, then NMS caps the output.
///
/// `heat_probs` must already be probabilities (sigmoid applied by the caller).
pub fn decode_detections(
    heat_probs: &Tensor,
    reg: &Tensor,
    geo: &HeadGeometry,
    score_threshold: f64,
    nms_iou: f64,
    max_out: usize,
) -> Result<Vec<BevBox>> {
    let (nc, ny, nx) = (geo.num_classes, geo.ny, geo.nx);
    if heat_probs.shape() != [nc, ny, nx] {
        return Err(Error::Dimension(format!(
            "heatmap {:?} does not match geometry [{nc}, {ny}, {nx}]",
            heat_probs.shape()
        )));
    }
    if reg.shape() != [REG_CHANNELS, ny, nx] {
        return Err(Error::Dimension(format!(
            "regression {:?} does not match geometry",
            reg.shape()
        )));
    }
    let h = heat_probs.data();
    let r = reg.data();
    let plane = ny * nx;
    let mut candidates = Vec::new();
    for c in 0..nc {
        for y in 0..ny {
            for x in 0..nx {
                let v = h[c * plane + y * nx + x];
                if v < score_threshold {
                    continue;
                }
                let mut is_peak = true;
                'scan: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dy == 0 && dx == 0 {
                            continue;
                        }
                        let (yy, xx) = (y as i64 + dy, x as i64 + dx);
                        if yy < 0 || xx < 0 || yy >= ny as i64 || xx >= nx as i64 {
                            continue;
                        }
                        if h[c * plane + yy as usize * nx + xx as usize] > v {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if !is_peak {
                    continue;
                }
                let at = |ch: usize| r[ch * plane + y * nx + x];
                let cx = geo.x_min + (x as f64 + at(0)) * geo.cell.0;
                let cy = geo.y_min + (y as f64 + at(1)) * geo.cell.1;
                let length = at(2).exp() * geo.cell.0;
                let width = at(3).exp() * geo.cell.1;
                let yaw = at(4).atan2(at(5));
                candidates.push(BevBox::new(
                    cx,
                    cy,
                    length.max(1e-6),
                    width.max(1e-6),
                    yaw,
                    at(6),
                    at(7),
                    c as u32,
                    v,
                )?);
            }
        }
    }
    Ok(nms(candidates, nms_iou, max_out))
}

/// Line format: frame class score x y length width yaw vx vy.
pub fn write_detections(
    path: &std::path::Path,
    frames: &[(usize, Vec<BevBox>)],
) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (frame, boxes) in frames {
        for b in boxes {
            writeln!(
                f,
                "{} {} {} {} {} {} {} {} {} {}",
                frame, b.class_id, b.score, b.x, b.y, b.length, b.width, b.yaw, b.vx, b.vy
            )?;
        }
    }
    Ok(())
}

pub fn parse_detections(text: &str) -> Result<Vec<(usize, BevBox)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::Format(format!(
                "detections line {}: expected 10 fields, got {}",
                ln + 1,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::Format(format!("detections line {}: bad number", ln + 1)))
        };
        let frame: usize = fields[0]
            .parse()
            .map_err(|_| Error::Format(format!("detections line {}: bad frame", ln + 1)))?;
        let class: u32 = fields[1]
            .parse()
            .map_err(|_| Error::Format(format!("detections line {}: bad class", ln + 1)))?;
        out.push((
            frame,
            BevBox::new(
                num(3)?,
                num(4)?,
                num(5)?,
                num(6)?,
                num(7)?,
                num(8)?,
                num(9)?,
                class,
                num(2)?,
            )?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geo() -> HeadGeometry {
        HeadGeometry {
            x_min: -8.0,
            y_min: -8.0,
            cell: (1.0, 1.0),
            nx: 16,
            ny: 16,
            num_classes: 2,
        }
    }

    fn make_box(x: f64, y: f64, yaw: f64) -> BevBox {
        BevBox::new(x, y, 2.4, 1.2, yaw, 0.5, -0.2, 0, 1.0).unwrap()
    }

    #[test]
    fn centered_box_peaks_at_one_with_half_offsets() {
        let g = geo();
        // cell centers sit at half-integer world coordinates
        let b = make_box(0.5, 0.5, 0.3);
        let t = make_targets(&[b], &g).unwrap();
        assert_eq!(t.num_objects, 1);
        let (gx, gy) = (8, 8);
        let peak = t.heatmap.data()[gy * 16 + gx];
        assert_eq!(peak, 1.0);
        let plane = 256;
        assert!((t.regression.data()[gy * 16 + gx] - 0.5).abs() < 1e-12); // off_x
        assert!((t.regression.data()[plane + gy * 16 + gx] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_boxes_are_idempotent() {
        let g = geo();
        let b = make_box(1.3, -2.7, 1.1);
        let single = make_targets(&[b], &g).unwrap();
        let double = make_targets(&[b, b], &g).unwrap();
        assert_eq!(single.heatmap.data(), double.heatmap.data());
        assert_eq!(single.regression.data(), double.regression.data());
        assert_eq!(double.num_objects, 2);
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = geo();
        let b = make_box(1.37, -2.71, 0.77);
        let t = make_targets(&[b], &g).unwrap();
        let dets = decode_detections(&t.heatmap, &t.regression, &g, 0.5, 0.2, 10).unwrap();
        assert_eq!(dets.len(), 1);
        let d = &dets[0];
        assert!((d.x - b.x).abs() < 1e-9);
        assert!((d.y - b.y).abs() < 1e-9);
        assert!((d.length - b.length).abs() < 1e-9);
        assert!((d.width - b.width).abs() < 1e-9);
        assert!((d.yaw - b.yaw).abs() < 1e-9);
        assert!((d.vx - b.vx).abs() < 1e-9);
        assert!((d.vy - b.vy).abs() < 1e-9);
        assert!(d.score >= 0.999);
    }

    #[test]
    fn empty_heatmap_decodes_to_nothing() {
        let g = geo();
        let heat = Tensor::zeros(&[2, 16, 16]);
        let reg = Tensor::zeros(&[REG_CHANNELS, 16, 16]);
        let dets = decode_detections(&heat, &reg, &g, 0.1, 0.2, 10).unwrap();
        assert!(dets.is_empty());
    }

    #[test]
    fn nms_keeps_the_stronger_coincident_box() {
        let mut a = make_box(0.0, 0.0, 0.0);
        a.score = 0.9;
        let mut b = make_box(0.05, 0.0, 0.0);
        b.score = 0.8;
        let kept = nms(vec![b, a], 0.5, 10);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn iou_of_identical_and_disjoint_boxes() {
        let a = make_box(0.0, 0.0, 0.4);
        assert!((obb_iou(&a, &a) - 1.0).abs() < 1e-9);
        let far = make_box(10.0, 10.0, 0.4);
        assert_eq!(obb_iou(&a, &far), 0.0);
    }

    #[test]
    fn iou_half_overlap_axis_aligned() {
        let a = BevBox::new(0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0, 1.0).unwrap();
        let b = BevBox::new(1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0, 1.0).unwrap();
        // intersection 2, union 6
        assert!((obb_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_indicator_prediction_has_zero_loss() {
        let g = geo();
        let b = make_box(0.5, 0.5, 0.3);
        let t = make_targets(&[b], &g).unwrap();
        // drive the sigmoid to the targets' 0/1 indicator with large logits
        let logits = Tensor::from_vec(
            t.heatmap.shape(),
            t.heatmap
                .data()
                .iter()
                .map(|&v| if v >= 1.0 { 60.0 } else { -60.0 })
                .collect(),
        )
        .unwrap();
        let loss = detection_loss(&logits, &t.regression, &t).unwrap();
        assert!(loss.item().abs() <= 1e-6, "loss {}", loss.item());
    }

    #[test]
    fn empty_scene_loss_is_background_only() {
        let g = geo();
        let t = make_targets(&[], &g).unwrap();
        assert_eq!(t.num_objects, 0);
        let logits = Tensor::full(&[2, 16, 16], -60.0);
        let reg = Tensor::full(&[REG_CHANNELS, 16, 16], 5.0); // unmasked: ignored
        let loss = detection_loss(&logits, &reg, &t).unwrap();
        assert!(loss.item().abs() <= 1e-9);
    }

    #[test]
    fn zero_params_give_half_probabilities() {
        let c_in = 3;
        let c_h = 4;
        let zeros4 = |s: &[usize]| Tensor::param(s, vec![0.0; s.iter().product()]).unwrap();
        let params = HeadParams {
            proj_w: zeros4(&[c_h, c_in, 1, 1]),
            proj_b: zeros4(&[c_h]),
            heat_conv_w: zeros4(&[c_h, c_h, 3, 3]),
            heat_conv_b: zeros4(&[c_h]),
            heat_out_w: zeros4(&[2, c_h, 1, 1]),
            heat_out_b: zeros4(&[2]),
            reg_conv_w: zeros4(&[c_h, c_h, 3, 3]),
            reg_conv_b: zeros4(&[c_h]),
            reg_out_w: zeros4(&[REG_CHANNELS, c_h, 1, 1]),
            reg_out_b: zeros4(&[REG_CHANNELS]),
        };
        let x = Tensor::zeros(&[c_in, 8, 8]);
        let (heat, reg) = head_forward(&x, &params).unwrap();
        assert_eq!(heat.shape(), &[2, 8, 8]);
        assert_eq!(reg.shape(), &[REG_CHANNELS, 8, 8]);
        for &v in heat.sigmoid().data() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn head_shapes_and_channel_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = HeadParams::init(6, 8, 2, &mut rng);
        let x = Tensor::zeros(&[6, 8, 8]);
        let (heat, reg) = head_forward(&x, &params).unwrap();
        assert_eq!(heat.shape(), &[2, 8, 8]);
        assert_eq!(reg.shape(), &[8, 8, 8]);
        let bad = Tensor::zeros(&[5, 8, 8]);
        assert!(matches!(
            head_forward(&bad, &params),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn detections_file_round_trip() {
        let b = make_box(1.25, -3.5, 0.9);
        let dir = std::env::temp_dir().join("pcvd-head-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dets.txt");
        write_detections(&path, &[(4, vec![b])]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = parse_detections(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0, 4);
        assert_eq!(parsed[0].1, b);
    }
}
