//! Line-oriented scene description.
//!
//! ```text
//! # comment
//! material <name> <a> <b> <c> <d>
//! ground z <height> material <name>
//! wall <x1> <y1> <x2> <y2> <zmin> <zmax> material <name>
//! tx <x> <y> <z>
//! freq <Hz>
//! max_depth <n>
//! ```
//!
//! The built-in materials `vacuum`, `concrete`, `glass` and `metal` are always
//! available; a `material` record may define new ones or override them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::materials::MaterialSpec;
use crate::propagation::{Facet, FacetShape, Scene, DEFAULT_MAX_DEPTH};

enum PendingShape {
    Ground(f64),
    Wall([f64; 6]),
}

pub fn parse_scene(text: &str, file: &str) -> Result<Scene> {
    let err = |line: usize, message: String| Error::Parse {
        file: file.to_string(),
        line: line as u64,
        message,
    };
    let mut materials: HashMap<String, MaterialSpec> = MaterialSpec::builtins()
        .into_iter()
        .map(|m| (m.name.clone(), m))
        .collect();
    let mut pending: Vec<(usize, PendingShape, String)> = Vec::new();
    let mut tx = None;
    let mut freq = None;
    let mut max_depth = DEFAULT_MAX_DEPTH;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line_no, format!("expected a number, got {s:?}")))
        };
        let arity = |n: usize| -> Result<()> {
            if tokens.len() == n {
                Ok(())
            } else {
                Err(err(
                    line_no,
                    format!(
                        "{} record takes {} fields, got {}",
                        tokens[0],
                        n - 1,
                        tokens.len() - 1
                    ),
                ))
            }
        };
        match tokens[0] {
            "material" => {
                arity(6)?;
                let spec = MaterialSpec::new(
                    tokens[1],
                    num(tokens[2])?,
                    num(tokens[3])?,
                    num(tokens[4])?,
                    num(tokens[5])?,
                )
                .map_err(|e| err(line_no, e.to_string()))?;
                materials.insert(spec.name.clone(), spec);
            }
            "ground" => {
                arity(5)?;
                if tokens[1] != "z" || tokens[3] != "material" {
                    return Err(err(
                        line_no,
                        "expected `ground z <height> material <name>`".into(),
                    ));
                }
                pending.push((
                    line_no,
                    PendingShape::Ground(num(tokens[2])?),
                    tokens[4].to_string(),
                ));
            }
            "wall" => {
                arity(9)?;
                if tokens[7] != "material" {
                    return Err(err(
                        line_no,
                        "expected `material <name>` after wall corners".into(),
                    ));
                }
                let mut v = [0.0; 6];
                for (slot, tok) in v.iter_mut().zip(&tokens[1..7]) {
                    *slot = num(tok)?;
                }
                pending.push((line_no, PendingShape::Wall(v), tokens[8].to_string()));
            }
            "tx" => {
                arity(4)?;
                tx = Some(Vec3::new(num(tokens[1])?, num(tokens[2])?, num(tokens[3])?));
            }
            "freq" => {
                arity(2)?;
                freq = Some(num(tokens[1])?);
            }
            "max_depth" => {
                arity(2)?;
                max_depth = tokens[1]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad max_depth {:?}", tokens[1])))?;
            }
            other => return Err(err(line_no, format!("unknown record {other:?}"))),
        }
    }

    let facets = pending
        .into_iter()
        .map(|(line_no, shape, name)| {
            let material = materials
                .get(&name)
                .cloned()
                .ok_or_else(|| err(line_no, format!("unknown material {name:?}")))?;
            Ok(match shape {
                PendingShape::Ground(z) => Facet::ground(z, material),
                PendingShape::Wall([x1, y1, x2, y2, zmin, zmax]) => {
                    Facet::wall((x1, y1), (x2, y2), (zmin, zmax), material)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tx = tx.ok_or_else(|| err(0, "missing `tx` record".into()))?;
    let freq = freq.ok_or_else(|| err(0, "missing `freq` record".into()))?;
    let scene = Scene::new(facets, tx, freq, max_depth);
    scene.validate()?;
    Ok(scene)
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    parse_scene(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Serializes a scene; every material in use is written explicitly.
pub fn write_scene(scene: &Scene) -> String {
    let mut out = String::new();
    let mut seen: Vec<&str> = Vec::new();
    for f in &scene.facets {
        let m = &f.material;
        if !seen.contains(&m.name.as_str()) {
            seen.push(&m.name);
            let _ = writeln!(out, "material {} {} {} {} {}", m.name, m.a, m.b, m.c, m.d);
        }
    }
    let _ = writeln!(out, "freq {}", scene.carrier_freq);
    let _ = writeln!(out, "max_depth {}", scene.max_depth);
    let t = scene.tx_position;
    let _ = writeln!(out, "tx {} {} {}", t.x, t.y, t.z);
    for f in &scene.facets {
        match f.shape {
            FacetShape::Ground { z } => {
                let _ = writeln!(out, "ground z {} material {}", z, f.material.name);
            }
            FacetShape::Wall {
                x1,
                y1,
                x2,
                y2,
                zmin,
                zmax,
            } => {
                let _ = writeln!(
                    out,
                    "wall {x1} {y1} {x2} {y2} {zmin} {zmax} material {}",
                    f.material.name
                );
            }
        }
    }
    out
}
