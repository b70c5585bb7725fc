//! `OWIQ` framed baseband IQ stream.
//!
//! ```text
//! magic        "OWIQ"
//! version      u16
//! flags        u16   bit0: 0 = int16 IQ, 1 = f32 IQ
//! slot_index   u64
//! sample_count u32
//! sample_count * (I, Q)
//! ```

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::emulator::IqSlot;
use crate::error::{Error, Result};

pub const IQ_MAGIC: [u8; 4] = *b"OWIQ";
pub const IQ_VERSION: u16 = 1;
pub const IQ_HEADER_LEN: usize = 4 + 2 + 2 + 8 + 4;

const FLAG_F32: u16 = 1;
const INT16_LIMIT: f64 = 32767.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    I16,
    F32,
}

impl SampleFormat {
    fn flags(self) -> u16 {
        match self {
            SampleFormat::I16 => 0,
            SampleFormat::F32 => FLAG_F32,
        }
    }

    fn bytes_per_value(self) -> usize {
        match self {
            SampleFormat::I16 => 2,
            SampleFormat::F32 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IqFrame {
    pub format: SampleFormat,
    pub slot: IqSlot,
}

/// Encodes one frame. int16 values are multiplied by `scale`, rounded and
/// clamped to +-32767; the number of clipped samples is returned.
pub fn write_frame<W: Write>(
    mut w: W,
    slot: &IqSlot,
    format: SampleFormat,
    scale: f64,
) -> Result<usize> {
    let count = u32::try_from(slot.samples.len()).map_err(|_| Error::invalid("slot too large"))?;
    let mut buf =
        Vec::with_capacity(IQ_HEADER_LEN + slot.samples.len() * 2 * format.bytes_per_value());
    buf.extend_from_slice(&IQ_MAGIC);
    buf.extend_from_slice(&IQ_VERSION.to_le_bytes());
    buf.extend_from_slice(&format.flags().to_le_bytes());
    buf.extend_from_slice(&slot.slot_index.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    let mut clipped = 0;
    match format {
        SampleFormat::F32 => {
            for s in &slot.samples {
                buf.extend_from_slice(&((s.re * scale) as f32).to_le_bytes());
                buf.extend_from_slice(&((s.im * scale) as f32).to_le_bytes());
            }
        }
        SampleFormat::I16 => {
            for s in &slot.samples {
                let (re, cr) = to_i16(s.re * scale);
                let (im, ci) = to_i16(s.im * scale);
                clipped += usize::from(cr || ci);
                buf.extend_from_slice(&re.to_le_bytes());
                buf.extend_from_slice(&im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(clipped)
}

fn to_i16(v: f64) -> (i16, bool) {
    let r = v.round();
    if r > INT16_LIMIT {
        (INT16_LIMIT as i16, true)
    } else if r < -INT16_LIMIT {
        (-INT16_LIMIT as i16, true)
    } else {
        (r as i16, false)
    }
}

/// Reads consecutive frames; a clean end of stream at a frame boundary ends iteration.
pub struct FrameReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    /// Fills `buf`; returns false on EOF before the first byte.
    fn fill(&mut self, buf: &mut [u8], at_boundary: bool) -> Result<bool> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => {
                    if got == 0 && at_boundary {
                        return Ok(false);
                    }
                    return Err(Error::Framing(format!(
                        "stream truncated at byte {} inside a frame",
                        self.offset + got as u64
                    )));
                }
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += got as u64;
        Ok(true)
    }

    pub fn next_frame(&mut self) -> Result<Option<IqFrame>> {
        let mut header = [0u8; IQ_HEADER_LEN];
        let start = self.offset;
        if !self.fill(&mut header, true)? {
            return Ok(None);
        }
        if header[..4] != IQ_MAGIC {
            return Err(Error::Framing(format!("bad frame magic at byte {start}")));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != IQ_VERSION {
            return Err(Error::Framing(format!(
                "unsupported frame version {version}"
            )));
        }
        let flags = u16::from_le_bytes([header[6], header[7]]);
        let format = if flags & FLAG_F32 != 0 {
            SampleFormat::F32
        } else {
            SampleFormat::I16
        };
        let slot_index = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let count = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
        let width = format.bytes_per_value();
        let mut payload = vec![0u8; count * 2 * width];
        self.fill(&mut payload, false)?;
        let samples = match format {
            SampleFormat::F32 => payload
                .chunks_exact(8)
                .map(|c| {
                    Complex64::new(
                        f64::from(f32::from_le_bytes(c[..4].try_into().unwrap())),
                        f64::from(f32::from_le_bytes(c[4..].try_into().unwrap())),
                    )
                })
                .collect(),
            SampleFormat::I16 => payload
                .chunks_exact(4)
                .map(|c| {
                    Complex64::new(
                        f64::from(i16::from_le_bytes([c[0], c[1]])),
                        f64::from(i16::from_le_bytes([c[2], c[3]])),
                    )
                })
                .collect(),
        };
        Ok(Some(IqFrame {
            format,
            slot: IqSlot::new(slot_index, samples),
        }))
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<IqFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}
