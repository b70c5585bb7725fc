//! `CIRT` binary timeline files.
//!
//! ```text
//! magic   "CIRT"
//! version u16
//! f_samp  f64   Hz
//! t_int   f64   s
//! count   u32   snapshots
//! taps    u32   per snapshot
//! count * taps * (f32 re, f32 im)
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::cir::{CirConfig, DiscreteCir};
use crate::error::{Error, Result};
use crate::scenario::CirTimeline;

pub const CIRT_MAGIC: [u8; 4] = *b"CIRT";
pub const CIRT_VERSION: u16 = 1;
pub const CIRT_HEADER_LEN: usize = 4 + 2 + 8 + 8 + 4 + 4;

pub fn encode_timeline<W: Write>(timeline: &CirTimeline, mut w: W) -> Result<()> {
    timeline.validate()?;
    let taps = timeline.config.l_max();
    let count = u32::try_from(timeline.snapshots.len())
        .map_err(|_| Error::invalid("too many snapshots"))?;
    w.write_all(&CIRT_MAGIC)?;
    w.write_all(&CIRT_VERSION.to_le_bytes())?;
    w.write_all(&timeline.config.f_samp.to_le_bytes())?;
    w.write_all(&timeline.t_int.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&(taps as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(taps * 8);
    for snap in &timeline.snapshots {
        buf.clear();
        for t in &snap.taps {
            buf.extend_from_slice(&(t.re as f32).to_le_bytes());
            buf.extend_from_slice(&(t.im as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeline(timeline: &CirTimeline, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    encode_timeline(timeline, BufWriter::new(file))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::format(
                self.bytes.len() as u64,
                format!("truncated while reading {what}"),
            )
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }
}

pub fn decode_timeline(bytes: &[u8]) -> Result<CirTimeline> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take::<4>("magic")? != CIRT_MAGIC {
        return Err(Error::format(0, "bad magic, expected CIRT"));
    }
    let version = u16::from_le_bytes(c.take("version")?);
    if version != CIRT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let f_samp = f64::from_le_bytes(c.take("f_samp")?);
    let t_int = f64::from_le_bytes(c.take("t_int")?);
    let count = u32::from_le_bytes(c.take("snapshot count")?) as usize;
    let taps = u32::from_le_bytes(c.take("taps per snapshot")?) as usize;
    let config =
        CirConfig::from_tap_count(f_samp, taps).map_err(|e| Error::format(6, e.to_string()))?;

    let expected = CIRT_HEADER_LEN as u64 + count as u64 * taps as u64 * 8;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::format(
            actual,
            format!("truncated payload: {count} snapshots need {expected} bytes"),
        ));
    }
    if actual > expected {
        return Err(Error::format(
            expected,
            format!("snapshot count {count} disagrees with file size {actual}"),
        ));
    }
    let payload = &bytes[CIRT_HEADER_LEN..];
    let snapshots = payload
        .chunks_exact(taps * 8)
        .enumerate()
        .map(|(i, chunk)| DiscreteCir {
            taps: chunk
                .chunks_exact(8)
                .map(|v| {
                    let re = f32::from_le_bytes(v[..4].try_into().unwrap());
                    let im = f32::from_le_bytes(v[4..].try_into().unwrap());
                    Complex64::new(f64::from(re), f64::from(im))
                })
                .collect(),
            f_samp,
            snapshot_time: i as f64 * t_int,
        })
        .collect();
    let timeline = CirTimeline {
        config,
        t_int,
        snapshots,
    };
    timeline
        .validate()
        .map_err(|e| Error::format(6, e.to_string()))?;
    Ok(timeline)
}

pub fn read_timeline(path: impl AsRef<Path>) -> Result<CirTimeline> {
    decode_timeline(&fs::read(path)?)
}
