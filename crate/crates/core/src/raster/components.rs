use std::collections::VecDeque;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::Error;

/// Pixel adjacency used for component labelling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    /// Diagonal neighbours are connected; water channels often meet only at corners.
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParameter(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }
}

/// A maximal connected set of foreground pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// 1-based label matching the [`LabelGrid`].
    pub label: u32,
    pub pixel_count: usize,
    /// Inclusive `(min_x, min_y, max_x, max_y)`.
    pub bounding_box: (usize, usize, usize, usize),
}

/// Per-pixel component labels; `0` marks background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl LabelGrid {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

/// Labels connected runs of pixels for which `is_fg(index)` holds.
///
/// Labels are assigned in raster-scan order of each component's first pixel.
pub(crate) fn label_where(
    width: usize,
    height: usize,
    connectivity: Connectivity,
    is_fg: impl Fn(usize) -> bool,
) -> (Vec<Component>, LabelGrid) {
    let mut labels = vec![0u32; width * height];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    let offsets = connectivity.offsets();

    for start in 0..width * height {
        if labels[start] != 0 || !is_fg(start) {
            continue;
        }
        let label = components.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let (sx, sy) = (start % width, start / width);
        let mut bbox = (sx, sy, sx, sy);
        let mut count = 0usize;

        while let Some(idx) = queue.pop_front() {
            count += 1;
            let (x, y) = (idx % width, idx / width);
            bbox.0 = bbox.0.min(x);
            bbox.1 = bbox.1.min(y);
            bbox.2 = bbox.2.max(x);
            bbox.3 = bbox.3.max(y);
            for &(dx, dy) in offsets {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let n = ny as usize * width + nx as usize;
                if labels[n] == 0 && is_fg(n) {
                    labels[n] = label;
                    queue.push_back(n);
                }
            }
        }
        components.push(Component {
            label,
            pixel_count: count,
            bounding_box: bbox,
        });
    }
    (
        components,
        LabelGrid {
            width,
            height,
            labels,
        },
    )
}

/// Maximal connected components of the foreground (value 1) pixels.
pub fn connected_components(
    mask: &BinaryMask,
    connectivity: Connectivity,
) -> (Vec<Component>, LabelGrid) {
    let data = mask.as_slice();
    label_where(mask.width(), mask.height(), connectivity, |i| data[i] == 1)
}

/// Removes every foreground component with fewer than `min_px` pixels.
///
/// Components of exactly `min_px` pixels are kept.
pub fn filter_min_area(mask: &BinaryMask, min_px: usize, connectivity: Connectivity) -> BinaryMask {
    if min_px <= 1 {
        return mask.clone();
    }
    let (components, grid) = connected_components(mask, connectivity);
    let keep: Vec<bool> = std::iter::once(false)
        .chain(components.iter().map(|c| c.pixel_count >= min_px))
        .collect();
    let data = grid
        .labels
        .iter()
        .map(|&l| u8::from(keep[l as usize]))
        .collect();
    BinaryMask::from_raw(mask.width(), mask.height(), data)
}
