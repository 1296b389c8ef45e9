//! Uncompressed frame raster: `"FRM1"`, u32 LE height, u32 LE width, then
//! `H * W * 3` f32 LE intensities, row-major.

use super::FormatError;
use crate::geometry::ImageFrame;

pub const FRAME_MAGIC: [u8; 4] = *b"FRM1";

pub fn encode_frame(frame: &ImageFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + frame.data().len() * 4);
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&(frame.height() as u32).to_le_bytes());
    out.extend_from_slice(&(frame.width() as u32).to_le_bytes());
    for v in frame.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<ImageFrame, FormatError> {
    if bytes.len() < 12 {
        return Err(FormatError::Truncated { entry: "frame header".into(), offset: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != FRAME_MAGIC {
        return Err(FormatError::BadMagic { expected: FRAME_MAGIC, found: magic });
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(12))
        .ok_or(FormatError::Truncated { entry: "frame payload".into(), offset: 12 })?;
    let payload = &bytes[12..];
    if payload.len() < expected {
        return Err(FormatError::Truncated { entry: "frame payload".into(), offset: bytes.len() });
    }
    if payload.len() > expected {
        return Err(FormatError::TrailingBytes { offset: 12 + expected });
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    ImageFrame::new(height, width, data)
        .map_err(|e| FormatError::InvalidPayload { entry: "frame".into(), reason: e.to_string() })
}

/// Binary 8-bit PGM (`P5`) of a single-channel map in `[0, 1]`.
pub fn encode_pgm(height: usize, width: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip_and_layout() {
        let data: Vec<f64> = (0..8 * 9 * 3).map(|i| (i % 17) as f64 / 16.0).collect();
        let f = ImageFrame::new(8, 9, data).unwrap();
        let bytes = encode_frame(&f);
        assert_eq!(&bytes[..4], b"FRM1");
        assert_eq!(&bytes[4..8], &8u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &9u32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 8 * 9 * 12);
        assert_eq!(decode_frame(&bytes).unwrap(), f);
    }

    #[test]
    fn frame_errors() {
        let f = ImageFrame::filled(8, 8, [0.5; 3]).unwrap();
        let bytes = encode_frame(&f);
        assert!(matches!(decode_frame(&bytes[..100]), Err(FormatError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_frame(&bad), Err(FormatError::BadMagic { .. })));
        let mut over = bytes.clone();
        over.extend_from_slice(&2.0f32.to_le_bytes());
        assert!(matches!(decode_frame(&over), Err(FormatError::TrailingBytes { .. })));
        let mut out_of_range = bytes;
        out_of_range[12..16].copy_from_slice(&2.0f32.to_le_bytes());
        assert!(matches!(decode_frame(&out_of_range), Err(FormatError::InvalidPayload { .. })));
    }

    #[test]
    fn pgm_header_and_quantization() {
        let p = encode_pgm(1, 3, &[0.0, 0.5, 2.0]);
        assert_eq!(&p[..11], b"P5\n3 1\n255\n");
        assert_eq!(&p[11..], &[0, 128, 255]);
    }
}
