use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// `frames x height x width x 3` RGB samples in [0, 1], frame-major,
/// row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTensor {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub fps: f64,
    pub data: Vec<f64>,
}

impl VideoTensor {
    pub fn zeros(frames: usize, height: usize, width: usize, fps: f64) -> Self {
        VideoTensor {
            frames,
            height,
            width,
            fps,
            data: vec![0.0; frames * height * width * 3],
        }
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * 3
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize, c: usize) -> usize {
        ((t * self.height + y) * self.width + x) * 3 + c
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(t, y, x, c)]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.frame_len();
        &mut self.data[t * n..(t + 1) * n]
    }

    /// Rounds every sample to the nearest `k / 255` (halves round up).
    pub fn quantize(&mut self) {
        for v in &mut self.data {
            *v = f64::from(quantize_sample(*v)) / 255.0;
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.data.len() == self.frames * self.frame_len()
    }
}

/// Maps [0, 1] to 0..=255, rounding half up; out-of-range values clamp.
pub fn quantize_sample(v: f64) -> u8 {
    let scaled = libm::floor(v.clamp(0.0, 1.0) * 255.0 + 0.5);
    scaled as u8
}
