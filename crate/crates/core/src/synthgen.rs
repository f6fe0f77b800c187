//! Deterministic synthetic clips with controlled degradations and
//! closed-form ground truth.
//!
//! A clip is a fixed gradient background with a fine texture in its upper
//! left, a striped marker in the upper middle whose colour encodes a
//! concept, a bright bar sliding at constant speed along one lane, and two
//! soft-edged discs moving horizontally in opposite directions along a lane
//! at the bottom. Bar and discs wrap around the edges. The bar gives every
//! clip the same steady motion, so reordered frames show up even when the
//! discs stand still.
//! Degradations are applied in the order blur, noise, flicker, jitter, and
//! the result is quantized to 8-bit levels so that a clip survives a round
//! trip through an 8-bit file unchanged.
//!
//! Palette: concepts `0..32` are warm hues (red to yellow), `32..64` cool
//! hues (cyan to blue). Within a family `k % 4` picks the stripe
//! orientation and `(k % 32) / 4` the hue step. A prompt that does not match
//! its marker names a concept of the other family.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{mos_to_level, rng, Dimension, QualityLevel, VideoTensor};

pub const NUM_CONCEPTS: usize = 64;
pub const MAX_NOISE_SIGMA: f64 = 0.3;
pub const MAX_BLUR_RADIUS: u8 = 3;
pub const MAX_FLICKER: f64 = 0.5;
pub const MAX_JITTER: f64 = 0.5;
/// Pixels per frame.
pub const MAX_VELOCITY: f64 = 6.0;
/// Pixels per frame travelled by the bright bar, whatever the disc velocity.
const BAR_SPEED: f64 = 6.0;
const BAR_COLOR: [f64; 3] = [0.95, 0.95, 0.95];
const LANE_COLOR: [f64; 3] = [0.08, 0.08, 0.1];
const TEXTURE_AMPLITUDE: f64 = 0.12;
/// Radius reduction from an eighth of the height, and colour.
const DISCS: [(f64, [f64; 3]); 2] = [(1.0, [0.95, 0.85, 0.35]), (2.0, [0.1, 0.15, 0.45])];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub seed: u64,
    pub concept: u8,
    pub noise_sigma: f64,
    pub blur_radius: u8,
    pub flicker_amp: f64,
    pub jitter_rate: f64,
    pub velocity: f64,
    pub marker_contrast: f64,
    pub prompt_matches_marker: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub r#static: f64,
    pub temporal: f64,
    pub dynamic: f64,
    pub tv: f64,
}

impl GroundTruth {
    /// Scores in [`Dimension::ALL`] order.
    pub fn to_array(self) -> [f64; 4] {
        [self.r#static, self.temporal, self.dynamic, self.tv]
    }

    pub fn get(self, dim: Dimension) -> f64 {
        self.to_array()[dim.index()]
    }

    pub fn levels(self) -> [QualityLevel; 4] {
        self.to_array().map(|s| mos_to_level(s).unwrap_or(QualityLevel::Bad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub fps: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            frames: 8,
            height: 64,
            width: 64,
            fps: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("clip parameter {field} = {value} is out of range")]
    OutOfRangeSpec { field: &'static str, value: f64 },
    #[error("clip needs at least 2 frames and a 16x16 canvas")]
    CanvasTooSmall,
}

impl ClipSpec {
    pub fn ground_truth(&self) -> GroundTruth {
        let clamp = |v: f64| v.clamp(0.0, 100.0);
        let r#static = 100.0
            * (1.0
                - (self.noise_sigma / MAX_NOISE_SIGMA + f64::from(self.blur_radius) / f64::from(MAX_BLUR_RADIUS))
                    / 2.0);
        let temporal = 100.0 * (1.0 - (self.flicker_amp / MAX_FLICKER + self.jitter_rate / MAX_JITTER) / 2.0);
        let dynamic = 100.0 * self.velocity / MAX_VELOCITY;
        let tv = if self.prompt_matches_marker {
            100.0 * self.marker_contrast
        } else {
            100.0 * self.marker_contrast * 0.1
        };
        GroundTruth {
            r#static: clamp(r#static),
            temporal: clamp(temporal),
            dynamic: clamp(dynamic),
            tv: clamp(tv),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let checks: [(&'static str, f64, f64, f64); 7] = [
            ("concept", f64::from(self.concept), 0.0, (NUM_CONCEPTS - 1) as f64),
            ("noise_sigma", self.noise_sigma, 0.0, MAX_NOISE_SIGMA),
            (
                "blur_radius",
                f64::from(self.blur_radius),
                0.0,
                f64::from(MAX_BLUR_RADIUS),
            ),
            ("flicker_amp", self.flicker_amp, 0.0, MAX_FLICKER),
            ("jitter_rate", self.jitter_rate, 0.0, MAX_JITTER),
            ("velocity", self.velocity, 0.0, MAX_VELOCITY),
            ("marker_contrast", self.marker_contrast, 0.0, 1.0),
        ];
        for (field, value, lo, hi) in checks {
            if !(lo..=hi).contains(&value) {
                return Err(SynthError::OutOfRangeSpec { field, value });
            }
        }
        Ok(())
    }

    /// Concept named by the clip's prompt: the marker concept, or a concept
    /// of the other palette family chosen by the seed.
    pub fn prompt_concept(&self) -> usize {
        let k = usize::from(self.concept);
        if self.prompt_matches_marker {
            k
        } else {
            let other = if k < 32 { 32 } else { 0 };
            other + (k + (self.seed % 32) as usize) % 32
        }
    }

    /// Adjacent frame pairs swapped by jitter.
    pub fn jitter_swaps(&self, frames: usize) -> usize {
        let pairs = frames / 2;
        (libm::round(self.jitter_rate * frames as f64) as usize).min(pairs)
    }
}

/// Human-readable prompt for a synthetic concept.
pub fn concept_prompt(concept: usize) -> alloc::string::String {
    alloc::format!("concept {concept}")
}

/// Inverse of [`concept_prompt`] for concepts in range.
pub fn parse_concept_prompt(text: &str) -> Option<usize> {
    let k: usize = text.strip_prefix("concept ")?.parse().ok()?;
    (k < NUM_CONCEPTS && concept_prompt(k) == text).then_some(k)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = libm::fmod(h, 360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - libm::fabs(h % 2.0 - 1.0));
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Marker colour of concept `k`.
pub fn palette(k: usize) -> [f64; 3] {
    let family_base = if k % NUM_CONCEPTS < 32 { 0.0 } else { 180.0 };
    let step = ((k % 32) / 4) as f64;
    hsv_to_rgb(family_base + step * 7.5, 1.0, 1.0)
}

fn stripe_on(k: usize, y: usize, x: usize) -> bool {
    match k % 4 {
        0 => (y / 2).is_multiple_of(2),
        1 => (x / 2).is_multiple_of(2),
        2 => ((x + y) / 2).is_multiple_of(2),
        _ => ((x + 64 - y % 64) / 2).is_multiple_of(2),
    }
}

fn background(y: usize, x: usize, h: usize, w: usize, texture_width: usize) -> [f64; 3] {
    let fx = x as f64 / w as f64;
    let fy = y as f64 / h as f64;
    let mut px = [0.25 + 0.2 * fx, 0.3 + 0.15 * fy, 0.4 - 0.1 * fx];
    if x < texture_width && y < h / 2 {
        let fine = if (x + y).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coarse = if (x / 2 + y / 2).is_multiple_of(2) { 0.5 } else { -0.5 };
        let t = TEXTURE_AMPLITUDE * (fine + coarse) / 1.5;
        px.iter_mut().for_each(|c| *c += t);
    }
    px
}

fn torus_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = libm::fmod(libm::fabs(a - b), period);
    d.min(period - d)
}

fn box_blur(video: &mut VideoTensor, radius: usize) {
    if radius == 0 {
        return;
    }
    let (h, w) = (video.height, video.width);
    let n = (2 * radius + 1) as f64;
    for t in 0..video.frames {
        let frame = video.frame_mut(t);
        let mut tmp = vec![0.0; frame.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut s = 0.0;
                    for dx in 0..=2 * radius {
                        let xx = (x + dx).saturating_sub(radius).min(w - 1);
                        s += frame[(y * w + xx) * 3 + c];
                    }
                    tmp[(y * w + x) * 3 + c] = s / n;
                }
            }
        }
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut s = 0.0;
                    for dy in 0..=2 * radius {
                        let yy = (y + dy).saturating_sub(radius).min(h - 1);
                        s += tmp[(yy * w + x) * 3 + c];
                    }
                    frame[(y * w + x) * 3 + c] = s / n;
                }
            }
        }
    }
}

/// Renders the clip described by `spec` and returns it with its ground truth.
pub fn gen_clip(spec: &ClipSpec, config: &SynthConfig) -> Result<(VideoTensor, GroundTruth), SynthError> {
    spec.validate()?;
    let (t_n, h, w) = (config.frames, config.height, config.width);
    if t_n < 2 || h < 16 || w < 16 {
        return Err(SynthError::CanvasTooSmall);
    }
    let mut video = VideoTensor::zeros(t_n, h, w, config.fps);

    let starts = [w as f64 / 4.0, 3.0 * w as f64 / 4.0];
    let bar_start = w as f64 / 2.0;
    let lane = h - h / 8;
    let bar_rows = (h / 2)..(h - h / 4);
    let bar_half = (w / 8 + 6) as f64;

    let k = usize::from(spec.concept);
    let color = palette(k);
    let side = h.min(w) / 4;
    let (my, mx) = (h / 8, (w - side) / 2);

    for t in 0..t_n {
        let bar_x = bar_start + BAR_SPEED * t as f64;
        for y in 0..h {
            for x in 0..w {
                let mut px = background(y, x, h, w, mx);
                if bar_rows.contains(&y) {
                    px = LANE_COLOR;
                    let cover = (bar_half + 0.5 - torus_dist(x as f64 + 0.5, bar_x, w as f64)).clamp(0.0, 1.0);
                    for c in 0..3 {
                        px[c] = (1.0 - cover) * px[c] + cover * BAR_COLOR[c];
                    }
                }
                for (i, &(shrink, disc)) in DISCS.iter().enumerate() {
                    // The second disc travels against the first.
                    let sign = if i == 0 { 1.0 } else { -1.0 };
                    let radius = (h / 8) as f64 - shrink;
                    let cx = starts[i] + sign * spec.velocity * t as f64;
                    let dy = y as f64 + 0.5 - lane as f64;
                    let dx = torus_dist(x as f64 + 0.5, cx, w as f64);
                    let cover = (radius + 0.5 - libm::sqrt(dy * dy + dx * dx)).clamp(0.0, 1.0);
                    for c in 0..3 {
                        px[c] = (1.0 - cover) * px[c] + cover * disc[c];
                    }
                }
                let in_marker = (my..my + side).contains(&y) && (mx..mx + side).contains(&x);
                if in_marker && spec.marker_contrast > 0.0 && stripe_on(k, y - my, x - mx) {
                    let a = spec.marker_contrast;
                    for c in 0..3 {
                        px[c] = (1.0 - a) * px[c] + a * color[c];
                    }
                }
                let base = video.index(t, y, x, 0);
                video.data[base..base + 3].copy_from_slice(&px);
            }
        }
    }

    box_blur(&mut video, usize::from(spec.blur_radius));

    if spec.noise_sigma > 0.0 {
        let mut noise_rng = rng::substream(spec.seed, 2);
        let field: Vec<f64> = (0..video.frame_len())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut noise_rng);
                z * spec.noise_sigma
            })
            .collect();
        for t in 0..t_n {
            for (v, n) in video.frame_mut(t).iter_mut().zip(&field) {
                *v += n;
            }
        }
    }
    video.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));

    if spec.flicker_amp > 0.0 {
        let mut flicker_rng = rng::substream(spec.seed, 3);
        let phase = flicker_rng.random_bool(0.5);
        for t in 0..t_n {
            // Gain is constant within each frame pair, so jitter swaps leave it in place.
            let s = if ((t / 2) % 2 == 0) == phase { 1.0 } else { -1.0 };
            let gain = 1.0 + 0.5 * spec.flicker_amp * s;
            for v in video.frame_mut(t) {
                *v = (*v * gain).clamp(0.0, 1.0);
            }
        }
    }

    let swaps = spec.jitter_swaps(t_n);
    if swaps > 0 {
        let mut jitter_rng = rng::substream(spec.seed, 4);
        let mut pairs: Vec<usize> = (0..t_n / 2).collect();
        let (chosen, _) = pairs.partial_shuffle(&mut jitter_rng, swaps);
        let n = video.frame_len();
        for &p in chosen.iter() {
            let (a, b) = (2 * p * n, (2 * p + 1) * n);
            for i in 0..n {
                video.data.swap(a + i, b + i);
            }
        }
    }

    video.quantize();
    Ok((video, spec.ground_truth()))
}

/// `n` specs drawn uniformly over the parameter ranges; even indices get a
/// matching prompt.
pub fn draw_specs(n: usize, seed: u64) -> Vec<ClipSpec> {
    let mut rng = rng::substream(seed, 0);
    (0..n)
        .map(|i| ClipSpec {
            seed: rng.random(),
            concept: rng.random_range(0..NUM_CONCEPTS as u8),
            noise_sigma: rng.random_range(0.0..=MAX_NOISE_SIGMA),
            blur_radius: rng.random_range(0..=MAX_BLUR_RADIUS),
            flicker_amp: rng.random_range(0.0..=MAX_FLICKER),
            jitter_rate: rng.random_range(0.0..=MAX_JITTER),
            velocity: rng.random_range(0.0..=MAX_VELOCITY),
            marker_contrast: rng.random_range(0.0..=1.0),
            prompt_matches_marker: i % 2 == 0,
        })
        .collect()
}
