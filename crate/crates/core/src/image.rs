//! Dense RGB grids with pixel-center sampling.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Rgb<T> = [T; 3];

/// Row-major `width x height` RGB grid. Pixel `(col, row)` has its center at
/// `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch<T> {
    width: usize,
    height: usize,
    data: Vec<Rgb<T>>,
}

impl<T: Scalar> ImagePatch<T> {
    pub fn new(width: usize, height: usize, data: Vec<Rgb<T>>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::PatchShape {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb<T>) -> Self {
        assert!(width > 0 && height > 0, "empty patch");
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, c: Rgb<T>) -> Self {
        Self::from_fn(width, height, |_, _| c)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Rgb<T> {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn pixels(&self) -> &[Rgb<T>] {
        &self.data
    }

    /// Bilinear sample at a continuous image point. Neighbors outside the
    /// grid are clamped to the nearest edge pixel.
    pub fn sample_bilinear(&self, x: T, y: T) -> Rgb<T> {
        let half = T::lit(0.5);
        let fx = x - half;
        let fy = y - half;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let wx = fx - x0;
        let wy = fy - y0;
        let clamp = |v: T, n: usize| -> usize {
            let max = T::from_usize_lossy(n - 1);
            v.max(T::zero()).min(max).to_usize().unwrap_or(0)
        };
        let (c0, c1) = (clamp(x0, self.width), clamp(x0 + T::one(), self.width));
        let (r0, r1) = (clamp(y0, self.height), clamp(y0 + T::one(), self.height));
        let (p00, p10, p01, p11) = (
            self.get(c0, r0),
            self.get(c1, r0),
            self.get(c0, r1),
            self.get(c1, r1),
        );
        let one = T::one();
        std::array::from_fn(|ch| {
            (one - wy) * ((one - wx) * p00[ch] + wx * p10[ch])
                + wy * ((one - wx) * p01[ch] + wx * p11[ch])
        })
    }
}

/// Euclidean distance between two colors.
#[inline]
pub fn color_distance<T: Scalar>(a: &Rgb<T>, b: &Rgb<T>) -> T {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}
