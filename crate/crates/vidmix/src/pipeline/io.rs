//! File plumbing: manifest parsing, frame-directory IO, 8-bit conversion,
//! and atomic output writes (temp + rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::clip::{Clip, ClipShape};
use crate::error::{Error, Result};
use crate::pipeline::ClipManifestEntry;

/// One line of the output `labels.jsonl`: the generated sample, its soft
/// label, the pasted-source weight, and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub clip_id: String,
    pub weights: Vec<f64>,
    /// Label weight of the pasted (foreground) source; 1.0 when unmixed.
    pub lambda: f64,
    /// "12": sources[0] pasted onto sources[1]; "21": the reverse;
    /// "none": no mixing.
    pub direction: String,
    pub sources: Vec<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a manifest: a JSON array of entries.
pub fn load_manifest(path: &Path) -> Result<Vec<ClipManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let entries: Vec<ClipManifestEntry> =
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(entries)
}

/// The on-disk name of 0-based frame index `i`: `frame_000001.png` is i=0.
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{:06}.png", index + 1)
}

/// Loads the frames at the given 0-based indices from a frame directory into
/// an RGB clip with values in [0,1]. Repeated indices re-read the same file.
pub fn load_clip_frames(dir: &Path, indices: &[usize]) -> Result<Clip> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument(
            "no frame indices requested".to_string(),
        ));
    }
    let mut shape: Option<ClipShape> = None;
    let mut data: Vec<f32> = Vec::new();
    for &i in indices {
        let path = dir.join(frame_file_name(i));
        let img = image::open(&path)
            .map_err(|e| Error::File {
                path: path.clone(),
                message: format!("cannot decode frame: {e}"),
            })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let (h, w) = (h as usize, w as usize);
        match shape {
            None => {
                let s = ClipShape::new(indices.len(), 3, h, w)?;
                data.reserve(s.volume());
                shape = Some(s);
            }
            Some(s) => {
                if s.height != h || s.width != w {
                    return Err(Error::File {
                        path: path.clone(),
                        message: format!(
                            "frame is {h}x{w} but the clip started at {}x{}",
                            s.height, s.width
                        ),
                    });
                }
            }
        }
        // Planar per channel, frame-major.
        let raw = img.as_raw();
        for c in 0..3 {
            data.extend(raw[c..].iter().step_by(3).map(|&v| v as f32 / 255.0));
        }
    }
    Clip::new(shape.expect("at least one frame"), data)
}

/// 8-bit quantization of a normalized sample: scale by 255 and round half
/// to even, making output files bit-exact across platforms.
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8
}

/// Encodes one frame of a 3-channel clip as an RGB image.
fn frame_to_image(clip: &Clip, t: usize) -> Result<RgbImage> {
    let shape = clip.shape();
    if shape.channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "PNG output needs 3 channels, clip has {}",
            shape.channels
        )));
    }
    let frame = clip.frame(t);
    let plane = shape.plane_len();
    let mut img = RgbImage::new(shape.width as u32, shape.height as u32);
    for y in 0..shape.height {
        for x in 0..shape.width {
            let idx = y * shape.width + x;
            img.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([
                    quantize(frame[idx]),
                    quantize(frame[plane + idx]),
                    quantize(frame[2 * plane + idx]),
                ]),
            );
        }
    }
    Ok(img)
}

/// Writes a clip as a frame directory, atomically: frames land in a hidden
/// sibling temp directory which is renamed into place once complete.
pub fn write_clip_frames(out_root: &Path, name: &str, clip: &Clip) -> Result<()> {
    let target = out_root.join(name);
    let tmp = out_root.join(format!(".{name}.tmp"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    for t in 0..clip.shape().frames {
        let img = frame_to_image(clip, t)?;
        let path = tmp.join(frame_file_name(t));
        img.save(&path).map_err(|e| Error::File {
            path: path.clone(),
            message: format!("cannot encode frame: {e}"),
        })?;
    }
    if target.exists() {
        fs::remove_dir_all(&target).map_err(|e| io_err(&target, e))?;
    }
    fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
    Ok(())
}

/// Writes the per-sample records as JSON lines, atomically.
pub fn write_labels(out_root: &Path, records: &[SampleRecord]) -> Result<()> {
    let target = out_root.join("labels.jsonl");
    let tmp = out_root.join(".labels.jsonl.tmp");
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).map_err(|source| Error::Json {
            path: target.clone(),
            source,
        })?;
        buf.push(b'\n');
    }
    let mut file = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    file.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
    file.sync_all().map_err(|e| io_err(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
    Ok(())
}

/// Reads back a labels file, one record per line.
pub fn read_labels(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            serde_json::from_str(line).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// The output directory name of slot `i` (0-based): `sample_000001` is i=0.
pub fn sample_dir_name(slot: usize) -> String {
    format!("sample_{:06}", slot + 1)
}

/// Resolves a manifest entry's paths relative to the manifest's directory,
/// leaving absolute paths untouched.
pub fn resolve_entry_paths(entry: &ClipManifestEntry, manifest_dir: &Path) -> ClipManifestEntry {
    let resolve = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            manifest_dir.join(p)
        }
    };
    ClipManifestEntry {
        id: entry.id.clone(),
        frames_dir: resolve(&entry.frames_dir),
        frame_count: entry.frame_count,
        label: entry.label,
        mask_path: resolve(&entry.mask_path),
    }
}
