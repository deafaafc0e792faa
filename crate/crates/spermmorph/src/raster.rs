//! Raster data types, PNG mask decoding and connected-component analysis.
//!
//! Masks come as two PNGs: an 8-bit part-code image (codes 0–5) and a
//! 16-bit instance-ID image (0 = no instance). The two files must agree:
//! a pixel is background exactly when its instance ID is zero.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};

/// 2-D grayscale raster with intensities normalized to [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl ScalarImage {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), (width as usize) * (height as usize));
        Self {
            width,
            height,
            values,
        }
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![0.0; (width as usize) * (height as usize)])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.values[y as usize * self.width as usize + x as usize] = v;
    }

    /// Pixelwise `1 - v`, for dark-line inputs.
    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// Rotate 90 degrees counter-clockwise (exact pixel permutation).
    pub fn rotated90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = Self::zeros(h, w);
        for y in 0..h {
            for x in 0..w {
                // (x, y) -> (y, w-1-x)
                out.set(y, w - 1 - x, self.get(x, y));
            }
        }
        out
    }
}

/// The six part classes of the segmentation label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum PartLabel {
    Background = 0,
    Acrosome = 1,
    Vacuole = 2,
    Nucleus = 3,
    Midpiece = 4,
    Tail = 5,
}

impl PartLabel {
    pub const ALL: [PartLabel; 6] = [
        PartLabel::Background,
        PartLabel::Acrosome,
        PartLabel::Vacuole,
        PartLabel::Nucleus,
        PartLabel::Midpiece,
        PartLabel::Tail,
    ];

    /// The five foreground classes, in code order.
    pub const FOREGROUND: [PartLabel; 5] = [
        PartLabel::Acrosome,
        PartLabel::Vacuole,
        PartLabel::Nucleus,
        PartLabel::Midpiece,
        PartLabel::Tail,
    ];

    pub fn from_code(code: u8) -> Option<PartLabel> {
        PartLabel::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            PartLabel::Background => "background",
            PartLabel::Acrosome => "acrosome",
            PartLabel::Vacuole => "vacuole",
            PartLabel::Nucleus => "nucleus",
            PartLabel::Midpiece => "midpiece",
            PartLabel::Tail => "tail",
        }
    }
}

/// Per-pixel (instance ID, part label) raster.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePartMask {
    pub width: u32,
    pub height: u32,
    pub part: Vec<PartLabel>,
    pub instance: Vec<u16>,
}

impl InstancePartMask {
    /// Build from raw vectors, checking the background/instance invariant.
    pub fn new(width: u32, height: u32, part: Vec<PartLabel>, instance: Vec<u16>) -> Result<Self> {
        let n = (width as usize) * (height as usize);
        assert_eq!(part.len(), n);
        assert_eq!(instance.len(), n);
        for i in 0..n {
            let (x, y) = (i as u32 % width, i as u32 / width);
            if part[i] == PartLabel::Background && instance[i] != 0 {
                return Err(MorphError::BackgroundInstance {
                    instance: instance[i],
                    x,
                    y,
                });
            }
            if part[i] != PartLabel::Background && instance[i] == 0 {
                return Err(MorphError::LabeledWithoutInstance { x, y });
            }
        }
        Ok(Self {
            width,
            height,
            part,
            instance,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        let n = (width as usize) * (height as usize);
        Self {
            width,
            height,
            part: vec![PartLabel::Background; n],
            instance: vec![0; n],
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> (PartLabel, u16) {
        let i = y as usize * self.width as usize + x as usize;
        (self.part[i], self.instance[i])
    }

    /// Sorted list of instance IDs present in the mask.
    pub fn instances(&self) -> Vec<u16> {
        let mut ids: Vec<u16> = self.instance.iter().copied().filter(|&i| i != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn contains_instance(&self, id: u16) -> bool {
        id != 0 && self.instance.iter().any(|&i| i == id)
    }

    pub fn rotated90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let n = (w as usize) * (h as usize);
        let mut part = vec![PartLabel::Background; n];
        let mut instance = vec![0u16; n];
        for y in 0..h {
            for x in 0..w {
                let src = y as usize * w as usize + x as usize;
                let (nx, ny) = (y, w - 1 - x);
                let dst = ny as usize * h as usize + nx as usize;
                part[dst] = self.part[src];
                instance[dst] = self.instance[src];
            }
        }
        Self {
            width: h,
            height: w,
            part,
            instance,
        }
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), (width as usize) * (height as usize));
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; (width as usize) * (height as usize)])
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// `false` for out-of-bounds coordinates.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Chebyshev (square structuring element) dilation by `radius` pixels.
    pub fn dilated(&self, radius: u32) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as i64;
        let mut out = BinaryMask::empty(self.width, self.height);
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                if !self.get(x as u32, y as u32) {
                    continue;
                }
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && nx < self.width as i64 && ny < self.height as i64 {
                            out.set(nx as u32, ny as u32, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Union of two same-sized masks.
    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        BinaryMask::new(
            self.width,
            self.height,
            self.bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a || b)
                .collect(),
        )
    }
}

/// Physical pixel pitch in microns per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelScale {
    pub microns_per_pixel: f64,
}

impl PixelScale {
    pub fn new(microns_per_pixel: f64) -> Result<Self> {
        if !microns_per_pixel.is_finite() || microns_per_pixel <= 0.0 {
            return Err(MorphError::Other(format!(
                "microns_per_pixel must be finite and > 0, got {microns_per_pixel}"
            )));
        }
        Ok(Self { microns_per_pixel })
    }

    pub fn length_um(&self, px: f64) -> f64 {
        px * self.microns_per_pixel
    }

    pub fn area_um2(&self, px2: f64) -> f64 {
        px2 * self.microns_per_pixel * self.microns_per_pixel
    }
}

impl Default for PixelScale {
    fn default() -> Self {
        Self {
            microns_per_pixel: 1.0,
        }
    }
}

/// A connected component of a binary mask.
#[derive(Debug, Clone)]
pub struct Component {
    pub mask: BinaryMask,
    pub area: usize,
    /// Sub-pixel centroid (mean of member pixel coordinates).
    pub centroid: (f64, f64),
    /// Top-left-most member pixel, scan order (y, then x).
    pub anchor: (u32, u32),
}

/// Load an 8- or 16-bit single-channel PNG as a [0, 1] intensity raster.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| MorphError::from(e).with_path(path.display()))?;
    decode_gray(img).map_err(|e| e.with_path(path.display()))
}

fn decode_gray(img: DynamicImage) -> Result<ScalarImage> {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(MorphError::EmptyImage);
    }
    let values = match img {
        DynamicImage::ImageLuma8(buf) => {
            buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect()
        }
        DynamicImage::ImageLuma16(buf) => {
            buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
        }
        other => {
            return Err(MorphError::BadPixelFormat {
                expected: 8,
                got: format!("{:?}", other.color()),
            })
        }
    };
    Ok(ScalarImage::new(w, h, values))
}

/// Load a two-file mask: 8-bit part codes and 16-bit instance IDs.
pub fn load_mask(
    part_path: impl AsRef<Path>,
    instance_path: impl AsRef<Path>,
) -> Result<InstancePartMask> {
    let part_path = part_path.as_ref();
    let instance_path = instance_path.as_ref();

    let part_img = image::open(part_path)
        .map_err(|e| MorphError::from(e).with_path(part_path.display()))?;
    let inst_img = image::open(instance_path)
        .map_err(|e| MorphError::from(e).with_path(instance_path.display()))?;

    let part_buf = match part_img {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(MorphError::BadPixelFormat {
                expected: 8,
                got: format!("{:?}", other.color()),
            }
            .with_path(part_path.display()))
        }
    };
    let inst_buf = match inst_img {
        DynamicImage::ImageLuma16(buf) => buf,
        // 8-bit instance files are accepted and widened.
        DynamicImage::ImageLuma8(buf) => ImageBuffer::from_fn(buf.width(), buf.height(), |x, y| {
            Luma([buf.get_pixel(x, y).0[0] as u16])
        }),
        other => {
            return Err(MorphError::BadPixelFormat {
                expected: 16,
                got: format!("{:?}", other.color()),
            }
            .with_path(instance_path.display()))
        }
    };

    let (w, h) = (part_buf.width(), part_buf.height());
    if (inst_buf.width(), inst_buf.height()) != (w, h) {
        return Err(MorphError::DimensionMismatch(
            w,
            h,
            inst_buf.width(),
            inst_buf.height(),
        ));
    }

    let mut part = Vec::with_capacity((w as usize) * (h as usize));
    for (x, y, p) in part_buf.enumerate_pixels() {
        let code = p.0[0];
        let label = PartLabel::from_code(code)
            .ok_or(MorphError::InvalidPartCode { code, x, y })?;
        part.push(label);
    }
    let instance: Vec<u16> = inst_buf.pixels().map(|p| p.0[0]).collect();
    InstancePartMask::new(w, h, part, instance)
}

/// Write a mask back out as the two-PNG file pair read by [`load_mask`].
pub fn save_mask(
    mask: &InstancePartMask,
    part_path: impl AsRef<Path>,
    instance_path: impl AsRef<Path>,
) -> Result<()> {
    let part_buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(
        mask.width,
        mask.height,
        |x, y| Luma([mask.at(x, y).0.code()]),
    );
    let inst_buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(mask.width, mask.height, |x, y| Luma([mask.at(x, y).1]));
    part_buf.save(part_path.as_ref())?;
    inst_buf.save(instance_path.as_ref())?;
    Ok(())
}

/// Save a [0,1] raster as 8-bit grayscale PNG.
pub fn save_image(img: &ScalarImage, path: impl AsRef<Path>) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(img.width, img.height, |x, y| {
        Luma([(img.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8])
    });
    buf.save(path.as_ref())?;
    Ok(())
}

/// Select the pixels of one part of one instance.
pub fn instance_part_mask(
    mask: &InstancePartMask,
    instance: u16,
    part: PartLabel,
) -> Result<BinaryMask> {
    if !mask.contains_instance(instance) {
        return Err(MorphError::UnknownInstance(instance));
    }
    let bits = mask
        .part
        .iter()
        .zip(&mask.instance)
        .map(|(&p, &i)| p == part && i == instance)
        .collect();
    Ok(BinaryMask::new(mask.width, mask.height, bits))
}

/// 8-connected components, sorted by decreasing area, ties broken by the
/// top-left-most member pixel. Independent of pixel scan order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut visited = vec![false; mask.bits.len()];
    let mut components = Vec::new();

    for start in 0..mask.bits.len() {
        if !mask.bits[start] || visited[start] {
            continue;
        }
        let mut comp = BinaryMask::empty(mask.width, mask.height);
        let mut stack = vec![start];
        visited[start] = true;
        let mut area = 0usize;
        let mut sum = (0f64, 0f64);
        let mut anchor = (u32::MAX, u32::MAX);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % mask.width as usize) as i64, (i / mask.width as usize) as i64);
            comp.bits[i] = true;
            area += 1;
            sum.0 += x as f64;
            sum.1 += y as f64;
            // scan-order (y, x) minimum
            if ((y as u32), (x as u32)) < (anchor.1, anchor.0) {
                anchor = (x as u32, y as u32);
            }
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let ni = ny as usize * mask.width as usize + nx as usize;
                    if mask.bits[ni] && !visited[ni] {
                        visited[ni] = true;
                        stack.push(ni);
                    }
                }
            }
        }
        components.push(Component {
            mask: comp,
            centroid: (sum.0 / area as f64, sum.1 / area as f64),
            area,
            anchor,
        });
    }

    components.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then((a.anchor.1, a.anchor.0).cmp(&(b.anchor.1, b.anchor.0)))
    });
    components
}
