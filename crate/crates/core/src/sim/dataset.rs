//! Dataset archive: `meta.json` plus one binary record stream per scene.
//!
//! Scene files are little-endian record streams. Each frame record:
//!   u64 timestamp index, f64 x, f64 y, f64 yaw (ego pose),
//!   u64 point count, u64 box count,
//!   points as 4 x f64 (x, y, z, r),
//!   boxes as 9 x f64 (x, y, length, width, yaw, vx, vy, class, score).
//! Boxes appear only on keyframe records, in that keyframe's ego frame.
//! Write -> read -> write round trips are byte-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BevBox, ClassSpec, PointFrame, Pose};
use crate::error::{Error, Result};

pub const DATASET_SCHEMA: &str = "pcvd-ds-1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneMeta {
    pub file: String,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetMeta {
    pub schema: String,
    pub sweep_hz: f64,
    pub sweeps_per_keyframe: usize,
    pub classes: Vec<ClassSpec>,
    pub scenes: Vec<SceneMeta>,
}

/// One scene: raw sweeps plus per-frame ground truth (empty off keyframes).
#[derive(Debug, Clone, PartialEq)]
pub struct SceneData {
    pub frames: Vec<PointFrame>,
    pub boxes: Vec<Vec<BevBox>>,
}

impl SceneData {
    /// Indices of the keyframes (the last sweep of each merge window).
    pub fn keyframe_indices(&self, sweeps_per_keyframe: usize) -> Vec<usize> {
        (0..self.frames.len())
            .filter(|i| (i + 1) % sweeps_per_keyframe == 0)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub scenes: Vec<SceneData>,
}

pub fn write_dataset(path: &Path, meta: &DatasetMeta, scenes: &[SceneData]) -> Result<()> {
    if meta.scenes.len() != scenes.len() {
        return Err(Error::Contract(format!(
            "meta lists {} scenes, got {}",
            meta.scenes.len(),
            scenes.len()
        )));
    }
    std::fs::create_dir_all(path)?;
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Format(format!("meta serialization: {e}")))?;
    std::fs::write(path.join("meta.json"), json)?;
    for (sm, scene) in meta.scenes.iter().zip(scenes) {
        let mut w = BufWriter::new(File::create(path.join(&sm.file))?);
        for (frame, boxes) in scene.frames.iter().zip(&scene.boxes) {
            w.write_all(&(frame.timestamp_index as u64).to_le_bytes())?;
            for v in [frame.ego_pose.x, frame.ego_pose.y, frame.ego_pose.yaw] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(frame.points.len() as u64).to_le_bytes())?;
            w.write_all(&(boxes.len() as u64).to_le_bytes())?;
            for p in &frame.points {
                for v in p {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            for b in boxes {
                for v in [
                    b.x,
                    b.y,
                    b.length,
                    b.width,
                    b.yaw,
                    b.vx,
                    b.vy,
                    b.class_id as f64,
                    b.score,
                ] {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: usize,
    file: String,
}

impl<R: Read> Cursor<R> {
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|_| {
            Error::Format(format!(
                "scene file {} truncated at byte offset {}",
                self.file, self.offset
            ))
        })?;
        self.offset += buf.len();
        Ok(())
    }

    fn at_eof(&mut self) -> Result<bool> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(true),
            Ok(_) => Err(Error::Format(format!(
                "scene file {}: trailing partial record at offset {}",
                self.file, self.offset
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let meta_path = path.join("meta.json");
    let meta_text = std::fs::read_to_string(&meta_path)?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format(format!("meta.json: {e}")))?;
    if meta.schema != DATASET_SCHEMA {
        return Err(Error::Format(format!(
            "dataset schema mismatch: expected {DATASET_SCHEMA}, found {}",
            meta.schema
        )));
    }
    let mut scenes = Vec::with_capacity(meta.scenes.len());
    for sm in &meta.scenes {
        let mut c = Cursor {
            inner: BufReader::new(File::open(path.join(&sm.file))?),
            offset: 0,
            file: sm.file.clone(),
        };
        let mut frames = Vec::with_capacity(sm.sweeps);
        let mut boxes = Vec::with_capacity(sm.sweeps);
        for _ in 0..sm.sweeps {
            let ts = c.u64()? as usize;
            let x = c.f64()?;
            let y = c.f64()?;
            let yaw = c.f64()?;
            let n_pts = c.u64()? as usize;
            let n_boxes = c.u64()? as usize;
            let mut pts = Vec::with_capacity(n_pts);
            for _ in 0..n_pts {
                pts.push([c.f64()?, c.f64()?, c.f64()?, c.f64()?]);
            }
            let mut bs = Vec::with_capacity(n_boxes);
            for _ in 0..n_boxes {
                let vals: [f64; 9] = [
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                    c.f64()?,
                ];
                bs.push(BevBox {
                    x: vals[0],
                    y: vals[1],
                    length: vals[2],
                    width: vals[3],
                    yaw: vals[4],
                    vx: vals[5],
                    vy: vals[6],
                    class_id: vals[7] as u32,
                    score: vals[8],
                });
            }
            frames.push(PointFrame {
                timestamp_index: ts,
                // stored poses are already normalized; rebuild without
                // re-normalizing so round trips stay bit-exact
                ego_pose: Pose { x, y, yaw },
                points: pts,
            });
            boxes.push(bs);
        }
        if !c.at_eof()? {
            return Err(Error::Format(format!(
                "scene file {}: trailing bytes after {} frames",
                sm.file, sm.sweeps
            )));
        }
        scenes.push(SceneData { frames, boxes });
    }
    Ok(Dataset { meta, scenes })
}
