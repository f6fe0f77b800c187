//! AVF: a 22-byte little-endian header followed by raw 8-bit RGB.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "AVF1"
//!      4     2  version (u16) = 1
//!      6     4  frames T (u32)
//!     10     4  height H (u32)
//!     14     4  width W (u32)
//!     18     4  fps (f32)
//!     22   T*H*W*3  frames, rows, pixels, interleaved R G B
//! ```

use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use aigvqa_core::video::quantize_sample;
use aigvqa_core::VideoTensor;

use super::{write_atomic, StoreError};

pub const AVF_MAGIC: [u8; 4] = *b"AVF1";
pub const AVF_VERSION: u16 = 1;
pub const AVF_HEADER_LEN: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvfHeader {
    pub frames: u32,
    pub height: u32,
    pub width: u32,
    pub fps: f32,
}

impl AvfHeader {
    pub fn frame_len(&self) -> Option<usize> {
        (self.height as usize).checked_mul(self.width as usize)?.checked_mul(3)
    }

    pub fn payload_len(&self) -> Option<usize> {
        self.frame_len()?.checked_mul(self.frames as usize)
    }

    pub fn to_bytes(&self) -> [u8; AVF_HEADER_LEN] {
        let mut out = [0u8; AVF_HEADER_LEN];
        out[0..4].copy_from_slice(&AVF_MAGIC);
        out[4..6].copy_from_slice(&AVF_VERSION.to_le_bytes());
        out[6..10].copy_from_slice(&self.frames.to_le_bytes());
        out[10..14].copy_from_slice(&self.height.to_le_bytes());
        out[14..18].copy_from_slice(&self.width.to_le_bytes());
        out[18..22].copy_from_slice(&self.fps.to_le_bytes());
        out
    }

    /// Validates magic and version; `bytes` must hold at least the header.
    pub fn parse(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 4 || bytes[0..4] != AVF_MAGIC {
            let mut magic = [0u8; 4];
            let n = bytes.len().min(4);
            magic[..n].copy_from_slice(&bytes[..n]);
            return Err(StoreError::BadMagic(magic));
        }
        if bytes.len() < AVF_HEADER_LEN {
            return Err(StoreError::TruncatedHeader(bytes.len()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != AVF_VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        let header = AvfHeader {
            frames: u32_at(6),
            height: u32_at(10),
            width: u32_at(14),
            fps: f32::from_le_bytes(bytes[18..22].try_into().unwrap()),
        };
        if header.payload_len().is_none() {
            return Err(StoreError::BadVideo(format!(
                "{}x{}x{} overflows",
                header.frames, header.height, header.width
            )));
        }
        Ok(header)
    }

    fn of(video: &VideoTensor) -> Result<Self, StoreError> {
        if !video.is_well_formed() {
            return Err(StoreError::BadVideo("sample count does not match the shape".into()));
        }
        let dim = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| StoreError::BadVideo(format!("{what} {v} exceeds u32")))
        };
        Ok(AvfHeader {
            frames: dim(video.frames, "frames")?,
            height: dim(video.height, "height")?,
            width: dim(video.width, "width")?,
            fps: video.fps as f32,
        })
    }
}

/// Quantizes every sample to 8 bits (round half up) behind the header.
pub fn encode_avf(video: &VideoTensor) -> Result<Vec<u8>, StoreError> {
    let header = AvfHeader::of(video)?;
    let mut out = Vec::with_capacity(AVF_HEADER_LEN + video.data.len());
    out.extend_from_slice(&header.to_bytes());
    out.extend(video.data.iter().map(|&v| quantize_sample(v)));
    Ok(out)
}

fn to_tensor(header: &AvfHeader, payload: &[u8]) -> VideoTensor {
    VideoTensor {
        frames: header.frames as usize,
        height: header.height as usize,
        width: header.width as usize,
        fps: f64::from(header.fps),
        data: payload.iter().map(|&b| f64::from(b) / 255.0).collect(),
    }
}

fn check_payload(header: &AvfHeader, found: usize) -> Result<(), StoreError> {
    let expected = header.payload_len().expect("validated by parse");
    match found.cmp(&expected) {
        std::cmp::Ordering::Less => Err(StoreError::TruncatedPayload { expected, found }),
        std::cmp::Ordering::Greater => Err(StoreError::TrailingBytes { expected }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

pub fn decode_avf(bytes: &[u8]) -> Result<VideoTensor, StoreError> {
    let header = AvfHeader::parse(bytes)?;
    let payload = &bytes[AVF_HEADER_LEN..];
    check_payload(&header, payload.len())?;
    Ok(to_tensor(&header, payload))
}

/// Header and untouched payload bytes. The header is validated before any
/// payload byte is read.
pub fn read_avf_raw(path: &Path) -> Result<(AvfHeader, Vec<u8>), StoreError> {
    let io_err = |e: io::Error| StoreError::io(path, e);
    let file = File::open(path).map_err(io_err)?;
    let mut head = Vec::with_capacity(AVF_HEADER_LEN);
    let mut reader = file.take(AVF_HEADER_LEN as u64);
    reader.read_to_end(&mut head).map_err(io_err)?;
    let header = AvfHeader::parse(&head)?;
    let expected = header.payload_len().expect("validated by parse");
    let file = reader.into_inner();
    let mut payload = Vec::with_capacity(expected);
    file.take(expected as u64 + 1)
        .read_to_end(&mut payload)
        .map_err(io_err)?;
    check_payload(&header, payload.len())?;
    Ok((header, payload))
}

pub fn read_avf(path: &Path) -> Result<VideoTensor, StoreError> {
    let (header, payload) = read_avf_raw(path)?;
    Ok(to_tensor(&header, &payload))
}

pub fn write_avf(video: &VideoTensor, path: &Path) -> Result<(), StoreError> {
    let bytes = encode_avf(video)?;
    write_atomic(path, &bytes).map_err(|e| StoreError::io(path, e))
}
