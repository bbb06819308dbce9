//! Binary occupancy masks and obstacle extraction.
//!
//! Masks are read from 8-bit binary PGM (`P5`, foreground where the value is
//! at least 128) or PBM (`P4` packed / `P1` plain, foreground where the bit is
//! 1).

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scene::{bbox_safety_radius, Obstacle, ObstacleKind};

pub const PGM_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("mask dimensions must be > 0, got {width}x{height}")));
        }
        Ok(BinaryMask { width, height, bits: vec![false; width * height] })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    /// Fills the half-open pixel rectangle `[x0, x1) x [y0, y1)`, clipped.
    pub fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.set(x, y, true);
            }
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut rd = PnmReader { bytes, pos: 0 };
        let magic = rd.token()?;
        match magic.as_str() {
            "P5" => {
                let w = rd.number()?;
                let h = rd.number()?;
                let maxval = rd.number()?;
                if maxval == 0 || maxval > 255 {
                    return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
                }
                rd.single_whitespace()?;
                let data = rd.rest();
                if data.len() < w * h {
                    return Err(Error::Parse(format!("PGM raster truncated: need {} bytes, have {}", w * h, data.len())));
                }
                let bits = data[..w * h].iter().map(|&v| v >= PGM_THRESHOLD).collect();
                BinaryMask::from_bits(w, h, bits)
            }
            "P4" => {
                let w = rd.number()?;
                let h = rd.number()?;
                rd.single_whitespace()?;
                let data = rd.rest();
                let row_bytes = w.div_ceil(8);
                if data.len() < row_bytes * h {
                    return Err(Error::Parse("PBM raster truncated".into()));
                }
                let mut bits = Vec::with_capacity(w * h);
                for y in 0..h {
                    let row = &data[y * row_bytes..(y + 1) * row_bytes];
                    for x in 0..w {
                        bits.push(row[x / 8] & (0x80 >> (x % 8)) != 0);
                    }
                }
                BinaryMask::from_bits(w, h, bits)
            }
            "P1" => {
                let w = rd.number()?;
                let h = rd.number()?;
                let mut bits = Vec::with_capacity(w * h);
                while bits.len() < w * h {
                    rd.skip_ws_and_comments();
                    match rd.bytes.get(rd.pos) {
                        Some(b'0') => bits.push(false),
                        Some(b'1') => bits.push(true),
                        Some(c) => return Err(Error::Parse(format!("unexpected byte {c:#x} in plain PBM"))),
                        None => return Err(Error::Parse("plain PBM raster truncated".into())),
                    }
                    rd.pos += 1;
                }
                BinaryMask::from_bits(w, h, bits)
            }
            other => Err(Error::Parse(format!("unsupported mask format `{other}` (expected P5, P4 or P1)"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        BinaryMask::parse(&std::fs::read(path)?)
    }

    /// Encodes as binary PGM with foreground 255 and background 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    /// Encodes as packed PBM.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        let row_bytes = self.width.div_ceil(8);
        for y in 0..self.height {
            let mut row = vec![0u8; row_bytes];
            for x in 0..self.width {
                if self.get(x, y) {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            out.extend(row);
        }
        out
    }
}

struct PnmReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|c| !c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("unexpected end of mask header".into()));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::Parse(format!("bad number `{t}` in mask header")))
    }

    fn single_whitespace(&mut self) -> Result<()> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Parse("missing whitespace before raster".into())),
        }
    }

    fn rest(&self) -> &[u8] {
        &self.bytes[self.pos..]
    }
}

/// Pixel bounding box of one connected component, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
    pub pixels: usize,
}

/// 8-connected foreground components, in order of their first pixel in
/// row-major scan.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Component { min_x: usize::MAX, min_y: usize::MAX, max_x: 0, max_y: 0, pixels: 0 };
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            comp.min_x = comp.min_x.min(x);
            comp.max_x = comp.max_x.max(x);
            comp.min_y = comp.min_y.min(y);
            comp.max_y = comp.max_y.max(y);
            comp.pixels += 1;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if mask.bits[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// One static obstacle per 8-connected component, centered on the bounding
/// box (pixel `x` covers `[x, x+1)`), with the box-diagonal safety radius.
pub fn extract_obstacles(mask: &BinaryMask, robot_radius: f64) -> Result<Vec<Obstacle>> {
    connected_components(mask)
        .into_iter()
        .enumerate()
        .map(|(id, c)| {
            let w = (c.max_x + 1 - c.min_x) as f64;
            let h = (c.max_y + 1 - c.min_y) as f64;
            Ok(Obstacle {
                id: id as u32,
                center: Vec2::new(c.min_x as f64 + w / 2.0, c.min_y as f64 + h / 2.0),
                radius: 0.5 * w.hypot(h),
                safety_radius: bbox_safety_radius(w, h, robot_radius)?,
                velocity: Vec2::ZERO,
                kind: ObstacleKind::Static,
            })
        })
        .collect()
}
