//! On-disk video layout: a directory holding `frame_NNN.frm` for
//! `t = 0..T` and `pair_NNN.pmap` for `t = 1..T`, where pair `t` is the
//! record of `(I1, I2) = (frame t, frame t-1)`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{decode_frame, encode_frame, read_pointmap_file, write_pointmap_file, FormatError, PairRecord};
use crate::geometry::ImageFrame;

/// Frames of one video plus one pair record per consecutive frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoData {
    pub frames: Vec<ImageFrame>,
    /// `pairs[t - 1]` relates frame `t` (reference) to frame `t - 1`.
    pub pairs: Vec<PairRecord>,
}

impl VideoData {
    pub fn new(frames: Vec<ImageFrame>, pairs: Vec<PairRecord>) -> Result<Self, FormatError> {
        if frames.len() < 2 {
            return Err(FormatError::Layout(format!("video needs at least 2 frames, got {}", frames.len())));
        }
        if pairs.len() != frames.len() - 1 {
            return Err(FormatError::MissingPair { t: pairs.len().min(frames.len() - 1) + 1 });
        }
        let dims = frames[0].dims();
        for (t, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(FormatError::Layout(format!("frame {t} is {:?}, frame 0 is {dims:?}", f.dims())));
            }
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.dims() != dims {
                return Err(FormatError::Layout(format!(
                    "pair {} is {:?}, frames are {dims:?}",
                    i + 1,
                    p.dims()
                )));
            }
        }
        Ok(Self { frames, pairs })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:03}.frm")
}

pub fn pair_file_name(t: usize) -> String {
    format!("pair_{t:03}.pmap")
}

/// Ordered file references of one video directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoEntry {
    pub frames: Vec<PathBuf>,
    pub pairs: Vec<PathBuf>,
}

impl VideoEntry {
    /// Scans `dir` for contiguous frames and their pair records.
    pub fn from_dir(dir: &Path) -> Result<Self, FormatError> {
        let mut frames = Vec::new();
        while dir.join(frame_file_name(frames.len())).is_file() {
            frames.push(dir.join(frame_file_name(frames.len())));
        }
        if frames.len() < 2 {
            return Err(FormatError::Layout(format!(
                "{} holds {} frames, need at least 2",
                dir.display(),
                frames.len()
            )));
        }
        let mut pairs = Vec::new();
        for t in 1..frames.len() {
            let p = dir.join(pair_file_name(t));
            if !p.is_file() {
                return Err(FormatError::MissingPair { t });
            }
            pairs.push(p);
        }
        Ok(Self { frames, pairs })
    }

    pub fn load(&self) -> Result<VideoData, FormatError> {
        let frames = self
            .frames
            .iter()
            .map(|p| decode_frame(&read(p)?).map_err(|e| e.at(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = self
            .pairs
            .iter()
            .map(|p| read_pointmap_file(&read(p)?).map_err(|e| e.at(p)))
            .collect::<Result<Vec<_>, _>>()?;
        VideoData::new(frames, pairs)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|e| FormatError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Writes a video directory, creating `dir` if needed.
pub fn write_video(dir: &Path, video: &VideoData) -> Result<(), FormatError> {
    let io = |path: &Path, e: std::io::Error| FormatError::Io { path: path.to_path_buf(), message: e.to_string() };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for (t, f) in video.frames.iter().enumerate() {
        let p = dir.join(frame_file_name(t));
        fs::write(&p, encode_frame(f)).map_err(|e| io(&p, e))?;
    }
    for (i, rec) in video.pairs.iter().enumerate() {
        let p = dir.join(pair_file_name(i + 1));
        fs::write(&p, write_pointmap_file(rec)?).map_err(|e| io(&p, e))?;
    }
    Ok(())
}
