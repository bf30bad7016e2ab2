//! RGB observations with values in `[0, 1]`.

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CHANNELS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("pixel buffer has {got} values, expected {expected} for {height}x{width}x3")]
    BadLength {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },
    #[error("pixel value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("frame dimensions must be non-zero")]
    Empty,
    #[error("cannot resample {from}x{from} to {to_h}x{to_w}: sizes must be exact multiples")]
    BadResample { from: usize, to_h: usize, to_w: usize },
}

/// Row-major `height x width x 3` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Frame {
    /// All-black frame.
    pub fn new(height: usize, width: usize) -> Self {
        Self::filled(height, width, [0.0; 3])
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn from_data(height: usize, width: usize, data: Vec<f64>) -> Result<Self, FrameError> {
        if height == 0 || width == 0 {
            return Err(FrameError::Empty);
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(FrameError::BadLength {
                height,
                width,
                expected,
                got: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(FrameError::OutOfRange { index, value });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds a frame from arbitrary reals, clamping each to `[0, 1]`.
    /// NaN maps to 0.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width * CHANNELS, "pixel buffer length");
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Panics (debug) on out-of-range values; callers write palette colors.
    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [f64; 3]) {
        debug_assert!(rgb.iter().all(|v| (0.0..=1.0).contains(v)));
        let i = (row * self.width + col) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// 8-bit quantized RGB bytes, `round(v * 255)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }

    /// Binary PPM (`P6`) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_rgb8());
        out
    }

    /// Content hash over the exact pixel values. Used as the lookup key for
    /// externally computed embeddings.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.height as u64).to_le_bytes());
        h.update((self.width as u64).to_le_bytes());
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Average-pools to `side x side` and converts to luma (Rec. 601).
    pub fn to_gray(&self, side: usize) -> Result<Vec<f64>, FrameError> {
        if side == 0 || self.height % side != 0 || self.width % side != 0 {
            return Err(FrameError::BadResample {
                from: side,
                to_h: self.height,
                to_w: self.width,
            });
        }
        let fy = self.height / side;
        let fx = self.width / side;
        let norm = 1.0 / (fy * fx) as f64;
        let mut out = vec![0.0; side * side];
        for (r, row) in out.chunks_mut(side).enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for y in r * fy..(r + 1) * fy {
                    for x in c * fx..(c + 1) * fx {
                        let [red, green, blue] = self.pixel(y, x);
                        acc += 0.299 * red + 0.587 * green + 0.114 * blue;
                    }
                }
                *cell = (acc * norm).clamp(0.0, 1.0);
            }
        }
        Ok(out)
    }

    /// Nearest-neighbour upsampling of a `side x side` grayscale image to an
    /// RGB frame; values are clamped to `[0, 1]`.
    pub fn from_gray(
        gray: &[f64],
        side: usize,
        height: usize,
        width: usize,
    ) -> Result<Frame, FrameError> {
        if side == 0 || gray.len() != side * side || height % side != 0 || width % side != 0 {
            return Err(FrameError::BadResample {
                from: side,
                to_h: height,
                to_w: width,
            });
        }
        let fy = height / side;
        let fx = width / side;
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                let v = gray[(y / fy) * side + x / fx];
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                data.extend_from_slice(&[v, v, v]);
            }
        }
        Ok(Frame {
            height,
            width,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            Frame::from_data(1, 1, vec![0.0, 1.5, 0.0]),
            Err(FrameError::OutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            Frame::from_data(2, 1, vec![0.0; 3]),
            Err(FrameError::BadLength { .. })
        ));
    }

    #[test]
    fn ppm_header_and_quantization() {
        let f = Frame::filled(1, 2, [1.0, 0.5, 0.0]);
        let ppm = f.to_ppm();
        assert!(ppm.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(&ppm[ppm.len() - 6..], &[255, 128, 0, 255, 128, 0]);
    }

    #[test]
    fn gray_round_trip_is_idempotent() {
        let mut f = Frame::new(8, 8);
        f.set_pixel(0, 0, [1.0, 1.0, 1.0]);
        f.set_pixel(5, 6, [0.2, 0.9, 0.4]);
        let g = f.to_gray(4).unwrap();
        let up = Frame::from_gray(&g, 4, 8, 8).unwrap();
        for (a, b) in up.to_gray(4).unwrap().iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((g[0] - 0.25).abs() < 1e-12);
    }
}
