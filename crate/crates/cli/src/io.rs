//! EVS1 and CSV event files, PNG and PFM images.

use std::fs;
use std::path::Path;

use evdesnow_core::event::canonicalize;
use evdesnow_core::{Event, EventStream, IntensityImage, OcclusionMask, Polarity};

use crate::error::IoError;

pub const EVS1_MAGIC: u32 = 0x4556_5331;
pub const EVS1_VERSION: u32 = 1;
pub const EVS1_HEADER_LEN: usize = 24;
pub const EVS1_RECORD_LEN: usize = 16;

/// Serialises a stream as EVS1; records come out in canonical order.
pub fn encode_evs1(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(EVS1_HEADER_LEN + EVS1_RECORD_LEN * stream.len());
    out.extend_from_slice(&EVS1_MAGIC.to_le_bytes());
    out.extend_from_slice(&EVS1_VERSION.to_le_bytes());
    out.extend_from_slice(&stream.width().to_le_bytes());
    out.extend_from_slice(&stream.height().to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p.as_i8() as u8);
        out.extend_from_slice(&[0; 3]);
    }
    out
}

pub fn decode_evs1(bytes: &[u8]) -> Result<EventStream, IoError> {
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    if bytes.len() < 4 {
        return Err(IoError::TruncatedFile {
            expected: EVS1_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if word(0) != EVS1_MAGIC {
        return Err(IoError::BadMagic(word(0)));
    }
    if bytes.len() < EVS1_HEADER_LEN {
        return Err(IoError::TruncatedFile {
            expected: EVS1_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if word(4) != EVS1_VERSION {
        return Err(IoError::BadVersion(word(4)));
    }
    let (width, height) = (word(8), word(12));
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = count
        .checked_mul(EVS1_RECORD_LEN as u64)
        .and_then(|n| n.checked_add(EVS1_HEADER_LEN as u64))
        .ok_or_else(|| IoError::DecodeError(format!("event count {count} is implausible")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(IoError::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(IoError::DecodeError(format!(
            "{} trailing bytes after {count} records",
            found - expected
        )));
    }

    let mut events = Vec::with_capacity(count as usize);
    for (i, r) in bytes[EVS1_HEADER_LEN..].chunks_exact(EVS1_RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(r[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([r[8], r[9]]);
        let y = u16::from_le_bytes([r[10], r[11]]);
        let p = Polarity::from_i8(r[12] as i8).ok_or(IoError::CorruptRecord(i))?;
        if r[13..16] != [0; 3] || u32::from(x) >= width || u32::from(y) >= height {
            return Err(IoError::CorruptRecord(i));
        }
        events.push(Event::new(t, x, y, p));
    }
    canonicalize(width, height, events).map_err(|e| IoError::DecodeError(e.to_string()))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CsvRow {
    t_us: u64,
    x: u16,
    y: u16,
    p: i8,
}

pub fn encode_csv(stream: &EventStream) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in stream.events() {
        w.serialize(CsvRow {
            t_us: e.t,
            x: e.x,
            y: e.y,
            p: e.p.as_i8(),
        })
        .expect("writing to memory");
    }
    let mut out = w.into_inner().expect("writing to memory");
    if stream.is_empty() {
        out = b"t_us,x,y,p\n".to_vec();
    }
    out
}

/// Parses CSV events. CSV carries no sensor size: `geometry` is used when
/// given, otherwise the bounding box of the events.
pub fn decode_csv(bytes: &[u8], geometry: Option<(u32, u32)>) -> Result<EventStream, IoError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| IoError::DecodeError(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["t_us", "x", "y", "p"] {
        return Err(IoError::DecodeError(format!(
            "expected header t_us,x,y,p, found {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut events = Vec::new();
    for (i, row) in r.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|_| IoError::CorruptRecord(i))?;
        let p = Polarity::from_i8(row.p).ok_or(IoError::CorruptRecord(i))?;
        events.push(Event::new(row.t_us, row.x, row.y, p));
    }
    let (width, height) = geometry.unwrap_or_else(|| {
        let w = events.iter().map(|e| u32::from(e.x) + 1).max().unwrap_or(0);
        let h = events.iter().map(|e| u32::from(e.y) + 1).max().unwrap_or(0);
        (w, h)
    });
    canonicalize(width, height, events).map_err(|e| match e {
        evdesnow_core::Error::OutOfBounds { index, .. } => IoError::CorruptRecord(index),
        other => IoError::DecodeError(other.to_string()),
    })
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads EVS1, or CSV for `.csv` paths.
pub fn read_events(path: &Path, csv_geometry: Option<(u32, u32)>) -> Result<EventStream, IoError> {
    let bytes = fs::read(path).map_err(IoError::at(path))?;
    if extension(path) == "csv" {
        decode_csv(&bytes, csv_geometry)
    } else {
        decode_evs1(&bytes)
    }
}

/// Writes EVS1, or CSV for `.csv` paths.
pub fn write_events(stream: &EventStream, path: &Path) -> Result<(), IoError> {
    let bytes = if extension(path) == "csv" {
        encode_csv(stream)
    } else {
        encode_evs1(stream)
    };
    fs::write(path, bytes).map_err(IoError::at(path))
}

/// Little-endian PFM, rows stored bottom to top. `channels` is 1 or 3.
pub fn encode_pfm(width: usize, height: usize, channels: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(data.len(), width * height * channels);
    let tag = if channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{width} {height}\n-1.0\n").into_bytes();
    let row = width * channels;
    for y in (0..height).rev() {
        for v in &data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decoded PFM: samples top row first, interleaved when `channels` is 3.
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Pfm, IoError> {
    let bad = |m: &str| IoError::DecodeError(format!("PFM: {m}"));
    // header: three whitespace-separated lines
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("incomplete header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not text"))?);
    }
    // exactly one whitespace byte separates the scale from the samples
    pos += 1;
    let channels = match fields[0] {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(IoError::UnsupportedFormat(format!("PFM type {other:?}"))),
    };
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("scale"))?;
    if scale.is_nan() || scale >= 0.0 {
        return Err(IoError::UnsupportedFormat(
            "big-endian PFM (positive scale); only little-endian is supported".into(),
        ));
    }
    let n = width * height * channels;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != 4 * n {
        return Err(IoError::TruncatedFile {
            expected: (pos + 4 * n) as u64,
            found: bytes.len() as u64,
        });
    }
    let row = width * channels;
    let mut data = vec![0.0f32; n];
    for (k, chunk) in body.chunks_exact(4).enumerate() {
        let (file_row, col) = (k / row.max(1), k % row.max(1));
        let y = height - 1 - file_row;
        data[y * row + col] = f32::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(Pfm {
        width,
        height,
        channels,
        data,
    })
}

fn to_f32(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

fn quantize(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), IoError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| IoError::DecodeError(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = matches!(
        img.color(),
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16
    );
    let values = if gray {
        img.to_luma32f().into_raw().into_iter().map(f64::from).collect()
    } else {
        let rgb: Vec<f64> = img.to_rgb32f().into_raw().into_iter().map(f64::from).collect();
        IntensityImage::from_rgb(w, h, &rgb).expect("sizes agree").into_vec()
    };
    Ok((w, h, values))
}

fn encode_png(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>, IoError> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, quantize(values))
        .ok_or_else(|| IoError::DecodeError("image size overflow".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| IoError::DecodeError(e.to_string()))?;
    Ok(out.into_inner())
}

fn read_field(path: &Path) -> Result<(usize, usize, Vec<f64>), IoError> {
    let bytes = fs::read(path).map_err(IoError::at(path))?;
    match extension(path).as_str() {
        "png" => decode_png(&bytes),
        "pfm" => {
            let pfm = decode_pfm(&bytes)?;
            let values: Vec<f64> = pfm.data.iter().map(|&v| f64::from(v)).collect();
            let values = if pfm.channels == 3 {
                IntensityImage::from_rgb(pfm.width, pfm.height, &values)
                    .expect("sizes agree")
                    .into_vec()
            } else {
                values
            };
            Ok((pfm.width, pfm.height, values))
        }
        other => Err(IoError::UnsupportedFormat(format!(
            "{}: extension {other:?} (expected png or pfm)",
            path.display()
        ))),
    }
}

fn write_field(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<(), IoError> {
    let bytes = match extension(path).as_str() {
        "png" => encode_png(width, height, values)?,
        "pfm" => encode_pfm(width, height, 1, &to_f32(values)),
        other => {
            return Err(IoError::UnsupportedFormat(format!(
                "{}: extension {other:?} (expected png or pfm)",
                path.display()
            )))
        }
    };
    fs::write(path, bytes).map_err(IoError::at(path))
}

/// Reads a PNG (8 or 16 bit, colour reduced to luma) or PFM image.
pub fn read_image(path: &Path) -> Result<IntensityImage, IoError> {
    let (w, h, v) = read_field(path)?;
    Ok(IntensityImage::from_vec(w, h, v).expect("sizes agree"))
}

/// Writes 8-bit grayscale PNG or 32-bit PFM depending on the extension.
pub fn write_image(image: &IntensityImage, path: &Path) -> Result<(), IoError> {
    write_field(path, image.width(), image.height(), image.as_slice())
}

pub fn read_mask(path: &Path) -> Result<OcclusionMask, IoError> {
    let (w, h, v) = read_field(path)?;
    Ok(OcclusionMask::from_vec(w, h, v).expect("sizes agree"))
}

pub fn write_mask(mask: &OcclusionMask, path: &Path) -> Result<(), IoError> {
    write_field(path, mask.width(), mask.height(), mask.as_slice())
}

/// Writes `planes` equally sized single-channel planes stacked vertically,
/// first plane on top, as one PFM.
pub fn write_pfm_stack(path: &Path, width: usize, height: usize, planes: &[f64]) -> Result<(), IoError> {
    let n = planes.len() / (width * height).max(1);
    fs::write(path, encode_pfm(width, height * n, 1, &to_f32(planes))).map_err(IoError::at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let s = EventStream::new(640, 480, vec![Event::negative(7, 1, 2)]).unwrap();
        let b = encode_evs1(&s);
        assert_eq!(b.len(), 24 + 16);
        assert_eq!(&b[0..4], &[0x31, 0x53, 0x56, 0x45]);
        assert_eq!(&b[8..12], &640u32.to_le_bytes());
        assert_eq!(&b[16..24], &1u64.to_le_bytes());
        assert_eq!(b[24 + 12], 0xFF);
    }

    #[test]
    fn pfm_is_stored_bottom_up() {
        let b = encode_pfm(2, 2, 1, &[1.0, 2.0, 3.0, 4.0]);
        let body = &b[b.len() - 16..];
        assert_eq!(&body[0..4], &3.0f32.to_le_bytes());
        let back = decode_pfm(&b).unwrap();
        assert_eq!(back.data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn positive_pfm_scale_is_rejected() {
        let mut b = b"Pf\n1 1\n1.0\n".to_vec();
        b.extend_from_slice(&0.5f32.to_le_bytes());
        assert!(matches!(decode_pfm(&b), Err(IoError::UnsupportedFormat(_))));
    }

    #[test]
    fn csv_round_trip() {
        let s = EventStream::new(8, 8, vec![Event::negative(7, 1, 2), Event::positive(3, 7, 7)]).unwrap();
        let text = encode_csv(&s);
        assert!(text.starts_with(b"t_us,x,y,p\n"));
        assert_eq!(decode_csv(&text, Some((8, 8))).unwrap(), s);
        assert_eq!(decode_csv(&encode_csv(&EventStream::empty(8, 8)), Some((8, 8))).unwrap(), EventStream::empty(8, 8));
    }
}
