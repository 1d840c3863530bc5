use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-pixel land/water grid, row-major, land = 1 and water = 0.
///
/// Pixels are addressed as `(x, y)` with `x` the column and `y` the row,
/// origin at the top-left.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub const LAND: u8 = 1;
    pub const WATER: u8 = 0;

    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "mask data has {} elements, expected {}",
                data.len(),
                width * height
            )));
        }
        if let Some(i) = data.iter().position(|&v| v > 1) {
            return Err(Error::InvalidRaster(format!(
                "mask value {} at index {i} is not 0 or 1",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Mask with every pixel set to `value` (0 or 1).
    ///
    /// # Panics
    /// If either dimension is zero or `value > 1`.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        assert!(value <= 1, "mask value must be 0 or 1");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self::filled(width, height, 1)
    }

    /// Builds a mask from a predicate over `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Internal constructor for data already known to be 0/1.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|&v| v <= 1));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.get(x, y) == 1
    }

    /// Number of foreground (land) pixels.
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    pub fn invert(&self) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| 1 - v).collect(),
        )
    }

    pub(crate) fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// Copy with a pixel overwritten; test and construction helper.
    pub fn with_pixel(mut self, x: usize, y: usize, value: bool) -> Self {
        let w = self.width;
        self.data[y * w + x] = u8::from(value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskOp {
    And,
    Or,
    /// Complement of `a`; `b` is ignored.
    Not,
    /// `a AND (NOT b)`.
    AndNot,
}

/// Pixelwise boolean combination of two masks.
///
/// `b` may be `None` only for [`MaskOp::Not`].
pub fn mask_logic(a: &BinaryMask, b: Option<&BinaryMask>, op: MaskOp) -> Result<BinaryMask> {
    if op == MaskOp::Not {
        return Ok(a.invert());
    }
    let b = b.ok_or_else(|| Error::InvalidParameter(format!("{op:?} needs two masks")))?;
    a.ensure_same_dims(b)?;
    let f: fn(u8, u8) -> u8 = match op {
        MaskOp::And => |x, y| x & y,
        MaskOp::Or => |x, y| x | y,
        MaskOp::AndNot => |x, y| x & (1 - y),
        MaskOp::Not => unreachable!(),
    };
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
    Ok(BinaryMask::from_raw(a.width, a.height, data))
}
