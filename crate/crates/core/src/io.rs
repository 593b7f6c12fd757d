//! Image file formats: 8-bit binary PGM (P5) and the raw `HYPD` float format.
//!
//! `HYPD` layout, little endian: `b"HYPD"`, `u32 n`, `u32 0`, `u32 0`,
//! followed by `n*n` `f64` samples in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Image;

pub const RAW_MAGIC: &[u8; 4] = b"HYPD";

/// On-disk image encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Raw,
}

impl ImageFormat {
    /// Sniff the format from the leading bytes.
    pub fn detect(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(RAW_MAGIC) {
            Ok(ImageFormat::Raw)
        } else if bytes.starts_with(b"P5") {
            Ok(ImageFormat::Pgm)
        } else {
            Err(Error::Format("unrecognised image header (expected P5 or HYPD)".into()))
        }
    }
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn pgm_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = pgm_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad number in PGM header".into()))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    if pgm_token(bytes, &mut pos)? != b"P5" {
        return Err(Error::Format("not a binary PGM (P5) file".into()));
    }
    let w = pgm_number(bytes, &mut pos)?;
    let h = pgm_number(bytes, &mut pos)?;
    let maxval = pgm_number(bytes, &mut pos)?;
    if w != h {
        return Err(Error::Format(format!("image must be square, got {w}x{h}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("only 8-bit PGM is supported (maxval {maxval})")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| Error::Format("truncated PGM raster".into()))?;
    Image::new(w, raster.iter().map(|&b| b as f64).collect())
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let n = img.n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 16 || &bytes[..4] != RAW_MAGIC {
        return Err(Error::Format("missing HYPD header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != n * n * 8 {
        return Err(Error::Format(format!(
            "HYPD body holds {} bytes, expected {}",
            body.len(),
            n * n * 8
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(n, data)
}

pub fn encode_raw(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + img.data().len() * 8);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(img.n() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(Image, ImageFormat)> {
    let fmt = ImageFormat::detect(bytes)?;
    let img = match fmt {
        ImageFormat::Pgm => decode_pgm(bytes)?,
        ImageFormat::Raw => decode_raw(bytes)?,
    };
    Ok((img, fmt))
}

pub fn encode(img: &Image, fmt: ImageFormat) -> Vec<u8> {
    match fmt {
        ImageFormat::Pgm => encode_pgm(img),
        ImageFormat::Raw => encode_raw(img),
    }
}

pub fn read_image(path: &Path) -> Result<(Image, ImageFormat)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Write atomically: the file appears only once fully written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        w.write_all(bytes)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_image(path: &Path, img: &Image, fmt: ImageFormat) -> Result<()> {
    write_atomic(path, &encode(img, fmt))
}
