//! Grayscale PGM (P5) and PNG input/output.
//!
//! Inputs are restricted to 8-bit single-channel rasters. Label maps are
//! written as 8-bit paletted PNG when they hold at most 255 regions, where the
//! palette index is the label, and as 16-bit grayscale PNG otherwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, LabelMap};

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads an 8-bit grayscale image from a binary PGM or a PNG file.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray(&bytes)
}

/// Decodes an in-memory PGM (P5) or PNG buffer, choosing the format from its magic bytes.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(&PNG_MAGIC) {
        decode_png_gray(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary P5 is supported)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("neither PNG nor PGM".into()))
    }
}

/// Writes a grayscale image; `.pgm` paths get binary PGM, anything else PNG.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        encode_pgm(img)
    } else {
        encode_png_gray(img)?
    };
    write_file(path, &bytes)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn encode_png_gray(img: &GrayImage) -> Result<Vec<u8>> {
    encode_png(
        img.width(),
        img.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        None,
        img.pixels(),
    )
}

/// Writes a label map as PNG (paletted when `max_label <= 255`, else 16-bit gray).
pub fn save_label_png(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_label_png(map)?;
    write_file(path.as_ref(), &bytes)
}

pub fn encode_label_png(map: &LabelMap) -> Result<Vec<u8>> {
    let max = map.max_label();
    if max <= 255 {
        let data: Vec<u8> = map.labels().iter().map(|&l| l as u8).collect();
        encode_png(
            map.width(),
            map.height(),
            png::ColorType::Indexed,
            png::BitDepth::Eight,
            Some(label_palette()),
            &data,
        )
    } else if max <= u16::MAX as u32 {
        let mut data = Vec::with_capacity(map.labels().len() * 2);
        for &l in map.labels() {
            data.extend_from_slice(&(l as u16).to_be_bytes());
        }
        encode_png(
            map.width(),
            map.height(),
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            None,
            &data,
        )
    } else {
        Err(Error::InvalidParameter(format!(
            "label {max} does not fit in a 16-bit PNG"
        )))
    }
}

/// Reads a label map written by [`save_label_png`], or any 8/16-bit gray
/// PNG or P5 PGM whose pixel values are label ids.
pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_label_map(&bytes)
}

pub fn decode_label_map(bytes: &[u8]) -> Result<LabelMap> {
    if !bytes.starts_with(&PNG_MAGIC) {
        let img = decode_gray(bytes)?;
        let (w, h) = (img.width(), img.height());
        return LabelMap::new(w, h, img.into_pixels().into_iter().map(u32::from).collect());
    }
    let raw = decode_png_raw(bytes)?;
    let labels: Vec<u32> = match (raw.color, raw.depth) {
        (png::ColorType::Indexed, png::BitDepth::Eight)
        | (png::ColorType::Grayscale, png::BitDepth::Eight) => {
            raw.data.iter().map(|&v| v as u32).collect()
        }
        (png::ColorType::Grayscale, png::BitDepth::Sixteen) => raw
            .data
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
            .collect(),
        (c, d) => {
            return Err(Error::UnsupportedFormat(format!(
                "label PNG must be 8-bit indexed/gray or 16-bit gray, got {c:?} at {d:?}"
            )))
        }
    };
    LabelMap::new(raw.width, raw.height, labels)
}

/// Palette colour for each label; 0 is black, the rest are spread around the hue circle.
pub fn label_palette() -> Vec<u8> {
    let mut pal = Vec::with_capacity(256 * 3);
    pal.extend_from_slice(&[0, 0, 0]);
    for i in 1..256u32 {
        let hue = (i as f64 * 0.618_033_988_749_895).fract() * 6.0;
        let sector = hue.floor() as u32;
        let f = hue - sector as f64;
        let (v, lo) = (230.0, 60.0);
        let up = lo + (v - lo) * f;
        let down = v - (v - lo) * f;
        let (r, g, b) = match sector {
            0 => (v, up, lo),
            1 => (down, v, lo),
            2 => (lo, v, up),
            3 => (lo, down, v),
            4 => (up, lo, v),
            _ => (v, lo, down),
        };
        pal.extend_from_slice(&[r as u8, g as u8, b as u8]);
    }
    pal
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and '#' comments may separate header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Malformed("truncated PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed("PGM header value out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::Malformed(
                "missing whitespace after PGM header".into(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "PGM maxval {maxval} (only 255 is supported)"
        )));
    }
    let data = &bytes[pos..];
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("PGM dimensions overflow".into()))?;
    if data.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "PGM header declares {width}x{height} = {expected} pixels, file carries {} bytes",
            data.len()
        )));
    }
    GrayImage::new(width, height, data.to_vec())
}

struct RawPng {
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: Vec<u8>,
}

fn decode_png_raw(bytes: &[u8]) -> Result<RawPng> {
    let mut decoder = png::Decoder::new(BufReader::new(Cursor::new(bytes)));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Malformed("PNG too large".into()))?;
    let mut data = vec![0u8; size];
    let info = reader
        .next_frame(&mut data)
        .map_err(|e| Error::Png(e.to_string()))?;
    let line = info.line_size;
    let packed = info.width as usize * info.color_type.samples() * bytes_per_sample(info.bit_depth);
    // drop any row padding so the buffer is tightly packed
    let data = if line == packed {
        data.truncate(line * info.height as usize);
        data
    } else {
        data.chunks(line)
            .take(info.height as usize)
            .flat_map(|row| row[..packed.min(row.len())].iter().copied())
            .collect()
    };
    Ok(RawPng {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn bytes_per_sample(depth: png::BitDepth) -> usize {
    match depth {
        png::BitDepth::Sixteen => 2,
        _ => 1,
    }
}

fn decode_png_gray(bytes: &[u8]) -> Result<GrayImage> {
    let raw = decode_png_raw(bytes)?;
    match (raw.color, raw.depth) {
        (png::ColorType::Grayscale, png::BitDepth::Eight) => {
            GrayImage::new(raw.width, raw.height, raw.data)
        }
        (png::ColorType::Grayscale, d) => Err(Error::UnsupportedBitDepth(format!(
            "grayscale PNG at {d:?} (only 8-bit is supported)"
        ))),
        (c, _) => Err(Error::UnsupportedFormat(format!(
            "{c:?} PNG (only single-channel grayscale is accepted)"
        ))),
    }
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<Vec<u8>> {
    let (w, h) = (
        u32::try_from(width).map_err(|_| Error::InvalidParameter("width too large".into()))?,
        u32::try_from(height).map_err(|_| Error::InvalidParameter("height too large".into()))?,
    );
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        if let Some(p) = palette {
            enc.set_palette(p);
        }
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::Png(e.to_string()))?;
        writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
