//! CSV codecs: mobility traces, delay profiles and report tables.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::propagation::{DelayProfile, MobilityTrace, Path as PropPath};
use crate::scenario::{pdp_db, CirTimeline, ReportRow};

/// Interval assumed for a single-row trace.
pub const DEFAULT_TRACE_INTERVAL: f64 = 0.1;

fn csv_err(file: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        file: file.to_string(),
        line,
        message: e.to_string(),
    }
}

fn field(file: &str, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            file: file.to_string(),
            line,
            message: format!("column {name}: expected a finite number"),
        })
}

fn header_is(file: &str, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            file: file.to_string(),
            line: 1,
            message: format!(
                "expected header {}, got {}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

/// Parses a `t,x,y,z` trace; positions must be evenly spaced in time.
pub fn parse_trace<R: Read>(reader: R, file: &str) -> Result<MobilityTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    header_is(
        file,
        rdr.headers().map_err(|e| csv_err(file, e))?,
        &["t", "x", "y", "z"],
    )?;
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(file, e))?;
        times.push(field(file, &rec, 0, "t")?);
        positions.push(Vec3::new(
            field(file, &rec, 1, "x")?,
            field(file, &rec, 2, "y")?,
            field(file, &rec, 3, "z")?,
        ));
    }
    let interval = if times.len() >= 2 {
        let dt = times[1] - times[0];
        for (i, &t) in times.iter().enumerate() {
            let expected = times[0] + i as f64 * dt;
            if !(dt > 0.0) || (t - expected).abs() > 1e-6 * dt.max(1e-3) {
                return Err(Error::Parse {
                    file: file.to_string(),
                    line: i as u64 + 2,
                    message: format!("trace times must be evenly spaced (expected {expected})"),
                });
            }
        }
        dt
    } else {
        DEFAULT_TRACE_INTERVAL
    };
    MobilityTrace::new(interval, positions).map_err(|e| Error::Parse {
        file: file.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<MobilityTrace> {
    let path = path.as_ref();
    parse_trace(File::open(path)?, &path.display().to_string())
}

pub fn write_trace<W: Write>(trace: &MobilityTrace, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "x", "y", "z"]).map_err(csv_io)?;
    for (i, p) in trace.positions.iter().enumerate() {
        let t = i as f64 * trace.interval;
        wtr.write_record([t, p.x, p.y, p.z].map(|v| v.to_string()))
            .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads delay profiles from CSV.
///
/// Rows are `re,im,delay_s` for a single snapshot, or
/// `snapshot,re,im,delay_s` for several. A header row is optional in the
/// single-snapshot form. Snapshot times are `index * t_int`.
pub fn read_profiles<R: Read>(reader: R, file: &str, t_int: f64) -> Result<Vec<DelayProfile>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let mut records = rdr.records().peekable();
    let mut grouped = false;
    if let Some(Ok(first)) = records.peek() {
        let is_header = first.get(0).is_some_and(|s| s.parse::<f64>().is_err());
        if is_header {
            let cols: Vec<&str> = first.iter().collect();
            grouped = match cols.as_slice() {
                ["re", "im", "delay_s"] => false,
                ["snapshot", "re", "im", "delay_s"] => true,
                _ => {
                    return Err(Error::Parse {
                        file: file.to_string(),
                        line: 1,
                        message: "expected header re,im,delay_s or snapshot,re,im,delay_s".into(),
                    })
                }
            };
            records.next();
        }
    }
    let mut profiles: Vec<Vec<PropPath>> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(file, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let (snap, base) = if grouped {
            let s = rec
                .get(0)
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    file: file.to_string(),
                    line,
                    message: "snapshot must be a non-negative integer".into(),
                })?;
            (s, 1)
        } else {
            (0, 0)
        };
        let re = field(file, &rec, base, "re")?;
        let im = field(file, &rec, base + 1, "im")?;
        let delay = field(file, &rec, base + 2, "delay_s")?;
        if delay < 0.0 {
            return Err(Error::Parse {
                file: file.to_string(),
                line,
                message: "delay must be non-negative".into(),
            });
        }
        if profiles.len() <= snap {
            profiles.resize_with(snap + 1, Vec::new);
        }
        profiles[snap].push(PropPath {
            amplitude: Complex64::new(re, im),
            delay,
        });
    }
    if profiles.is_empty() {
        profiles.push(Vec::new());
    }
    profiles
        .into_iter()
        .enumerate()
        .map(|(i, paths)| DelayProfile::new(paths, i as f64 * t_int))
        .collect()
}

/// Writes profiles in the `snapshot,re,im,delay_s` form.
pub fn write_profiles<W: Write>(profiles: &[DelayProfile], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["snapshot", "re", "im", "delay_s"])
        .map_err(csv_io)?;
    for (i, p) in profiles.iter().enumerate() {
        for path in &p.paths {
            wtr.write_record([
                i.to_string(),
                path.amplitude.re.to_string(),
                path.amplitude.im.to_string(),
                path.delay.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "time_s",
        "path_gain_db",
        "strongest_tap",
        "rms_delay_spread_s",
        "retained_power_fraction",
    ])
    .map_err(csv_io)?;
    for r in rows {
        wtr.write_record([
            r.time.to_string(),
            r.path_gain_db.to_string(),
            r.strongest_tap_index
                .map(|k| k.to_string())
                .unwrap_or_default(),
            r.rms_delay_spread
                .map(|s| s.to_string())
                .unwrap_or_default(),
            r.retained_power_fraction.to_string(),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Dense time x tap matrix of `|h[k]|^2` in dB.
pub fn write_pdp_csv<W: Write>(timeline: &CirTimeline, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["time_s".to_string()];
    header.extend((0..timeline.config.l_max()).map(|k| format!("k{k}")));
    wtr.write_record(&header).map_err(csv_io)?;
    for cir in &timeline.snapshots {
        let mut row = vec![cir.snapshot_time.to_string()];
        row.extend(pdp_db(cir).iter().map(|v| v.to_string()));
        wtr.write_record(&row).map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_path_gain_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time_s", "path_gain_db"])
        .map_err(csv_io)?;
    for r in rows {
        wtr.write_record([r.time.to_string(), r.path_gain_db.to_string()])
            .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_roundtrip_and_interval() {
        let text = "t,x,y,z\n0,1,2,1.5\n0.1,2,2,1.5\n0.2,3,2,1.5\n";
        let trace = parse_trace(text.as_bytes(), "t.csv").unwrap();
        assert!((trace.interval - 0.1).abs() < 1e-12);
        assert_eq!(trace.positions.len(), 3);
        let mut out = Vec::new();
        write_trace(&trace, &mut out).unwrap();
        assert_eq!(parse_trace(&out[..], "t.csv").unwrap(), trace);
    }

    #[test]
    fn trace_errors() {
        assert!(matches!(
            parse_trace("t,x,y\n0,1,2\n".as_bytes(), "t.csv"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("t,x,y,z\n0,1,2,1\n0.1,1,2,z\n".as_bytes(), "t.csv"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_trace(
            "t,x,y,z\n0,1,2,1\n0.1,1,2,1\n0.5,1,2,1\n".as_bytes(),
            "t.csv"
        )
        .is_err());
        assert!(parse_trace("t,x,y,z\n0,1,2,0\n".as_bytes(), "t.csv").is_err());
        assert!(parse_trace("t,x,y,z\n".as_bytes(), "t.csv").is_err());
        let single = parse_trace("t,x,y,z\n0,1,2,1.5\n".as_bytes(), "t.csv").unwrap();
        assert_eq!(single.interval, DEFAULT_TRACE_INTERVAL);
    }

    #[test]
    fn profile_forms() {
        let plain = read_profiles("1,0,0\n0.5,-0.5,1e-7\n".as_bytes(), "p", 0.1).unwrap();
        assert_eq!(plain.len(), 1);
        assert_eq!(plain[0].paths.len(), 2);
        let headed = read_profiles("re,im,delay_s\n1,0,0\n".as_bytes(), "p", 0.1).unwrap();
        assert_eq!(headed[0].paths[0].amplitude, Complex64::new(1.0, 0.0));
        let grouped = read_profiles(
            "snapshot,re,im,delay_s\n0,1,0,0\n2,0,1,1e-6\n".as_bytes(),
            "p",
            0.1,
        )
        .unwrap();
        assert_eq!(grouped.len(), 3);
        assert!(grouped[1].paths.is_empty());
        assert_eq!(grouped[2].snapshot_time, 0.2);

        let mut out = Vec::new();
        write_profiles(&grouped, &mut out).unwrap();
        assert_eq!(read_profiles(&out[..], "p", 0.1).unwrap(), grouped);

        assert!(read_profiles("1,0,-1\n".as_bytes(), "p", 0.1).is_err());
        assert!(read_profiles("a,b,c\n".as_bytes(), "p", 0.1).is_err());
        assert!(read_profiles("1,0\n".as_bytes(), "p", 0.1).is_err());
    }
}
