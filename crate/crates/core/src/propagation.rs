//! Deterministic specular propagation: free-space line of sight plus
//! image-method reflections off planar facets.
//!
//! Every path is a straight-line route `tx -> P1 -> ... -> Pn -> rx` where each
//! `Pi` is a specular reflection point on a facet. Paths are found by
//! mirroring the transmitter across the facet sequence and back-projecting
//! from the receiver, so the result is exact for planar geometry and has no
//! ray-count dependence.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::materials::{evaluate_material, EmProperties, MaterialSpec};
use crate::par::Execution;

/// Propagation speed used for all delays, in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Hard cap on reflection depth.
pub const MAX_DEPTH_LIMIT: usize = 5;

/// Default reflection depth when a scene does not specify one.
pub const DEFAULT_MAX_DEPTH: usize = 3;

const GEOM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence.
    Te,
    /// Electric field parallel to the plane of incidence.
    Tm,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FacetShape {
    /// Infinite horizontal plane at height `z`.
    Ground { z: f64 },
    /// Vertical rectangle spanning `(x1, y1) -> (x2, y2)` horizontally and
    /// `zmin..zmax` vertically.
    Wall {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        zmin: f64,
        zmax: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub shape: FacetShape,
    pub material: MaterialSpec,
}

impl Facet {
    pub fn ground(z: f64, material: MaterialSpec) -> Self {
        Self {
            shape: FacetShape::Ground { z },
            material,
        }
    }

    pub fn wall(
        (x1, y1): (f64, f64),
        (x2, y2): (f64, f64),
        (zmin, zmax): (f64, f64),
        material: MaterialSpec,
    ) -> Self {
        Self {
            shape: FacetShape::Wall {
                x1,
                y1,
                x2,
                y2,
                zmin,
                zmax,
            },
            material,
        }
    }

    pub fn is_ground(&self) -> bool {
        matches!(self.shape, FacetShape::Ground { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub facets: Vec<Facet>,
    pub tx_position: Vec3,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    pub max_depth: usize,
}

impl Scene {
    pub fn new(facets: Vec<Facet>, tx_position: Vec3, carrier_freq: f64, max_depth: usize) -> Self {
        Self {
            facets,
            tx_position,
            carrier_freq,
            max_depth,
        }
    }

    /// Isotropic antennas at both ends; the gain is fixed at unity.
    pub fn antenna_gain(&self) -> f64 {
        1.0
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "carrier frequency must be positive, got {}",
                self.carrier_freq
            )));
        }
        if self.max_depth > MAX_DEPTH_LIMIT {
            return Err(Error::InvalidScene(format!(
                "max_depth {} exceeds {MAX_DEPTH_LIMIT}",
                self.max_depth
            )));
        }
        if self.facets.iter().filter(|f| f.is_ground()).count() > 1 {
            return Err(Error::InvalidScene("more than one ground plane".into()));
        }
        if !self.tx_position.is_finite() {
            return Err(Error::InvalidScene("non-finite tx position".into()));
        }
        for (i, f) in self.facets.iter().enumerate() {
            match f.shape {
                FacetShape::Ground { z } if !z.is_finite() => {
                    return Err(Error::InvalidScene(format!(
                        "facet {i}: non-finite ground height"
                    )));
                }
                FacetShape::Wall {
                    x1,
                    y1,
                    x2,
                    y2,
                    zmin,
                    zmax,
                } => {
                    let all = [x1, y1, x2, y2, zmin, zmax];
                    if all.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidScene(format!("facet {i}: non-finite corner")));
                    }
                    if (x2 - x1).hypot(y2 - y1) <= GEOM_TOL || zmax - zmin <= GEOM_TOL {
                        return Err(Error::InvalidScene(format!("facet {i}: degenerate wall")));
                    }
                }
                _ => {}
            }
        }
        let prepared = self.prepare()?;
        prepared.check_endpoint(self.tx_position, "tx")
    }

    fn prepare(&self) -> Result<PreparedScene> {
        let facets = self
            .facets
            .iter()
            .map(|f| {
                Ok(PlaneFacet {
                    plane: Plane::of(&f.shape),
                    props: evaluate_material(&f.material, self.carrier_freq)?,
                    polarization: if f.is_ground() {
                        Polarization::Tm
                    } else {
                        Polarization::Te
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedScene { facets })
    }
}

/// Receiver positions sampled at a fixed interval.
#[derive(Clone, Debug, PartialEq)]
pub struct MobilityTrace {
    /// Seconds between consecutive positions.
    pub interval: f64,
    pub positions: Vec<Vec3>,
}

impl MobilityTrace {
    pub fn new(interval: f64, positions: Vec<Vec3>) -> Result<Self> {
        let t = Self {
            interval,
            positions,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            return Err(Error::invalid(format!(
                "trace interval must be positive, got {}",
                self.interval
            )));
        }
        if self.positions.is_empty() {
            return Err(Error::invalid("trace has no positions"));
        }
        if let Some(i) = self
            .positions
            .iter()
            .position(|p| !p.is_finite() || p.z <= 0.0)
        {
            return Err(Error::invalid(format!(
                "trace position {i} must be finite with positive height"
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.positions.len() as f64 * self.interval
    }
}

/// One propagation path: complex voltage gain and delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub amplitude: Complex64,
    /// Delay in seconds.
    pub delay: f64,
}

/// The multipath delay profile of one snapshot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DelayProfile {
    pub paths: Vec<Path>,
    /// Seconds since scenario start.
    pub snapshot_time: f64,
}

impl DelayProfile {
    pub fn new(paths: Vec<Path>, snapshot_time: f64) -> Result<Self> {
        if let Some(i) = paths
            .iter()
            .position(|p| !(p.delay >= 0.0 && p.delay.is_finite()))
        {
            return Err(Error::invalid(format!("path {i} has an invalid delay")));
        }
        if paths
            .iter()
            .any(|p| !(p.amplitude.re.is_finite() && p.amplitude.im.is_finite()))
        {
            return Err(Error::invalid("non-finite path amplitude"));
        }
        Ok(Self {
            paths,
            snapshot_time,
        })
    }

    /// `|sum a_p|^2` (linear).
    pub fn coherent_gain(&self) -> f64 {
        self.paths
            .iter()
            .map(|p| p.amplitude)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// A traced path with its geometry, for inspection and testing.
#[derive(Clone, Debug, PartialEq)]
pub struct TracedPath {
    /// Indices into `Scene::facets`, in bounce order. Empty for line of sight.
    pub facets: Vec<usize>,
    /// Reflection points in bounce order.
    pub points: Vec<Vec3>,
    pub length: f64,
    pub amplitude: Complex64,
    pub delay: f64,
}

impl TracedPath {
    pub fn is_los(&self) -> bool {
        self.facets.is_empty()
    }
}

/// Fresnel reflection coefficient for a planar interface.
///
/// `incidence_angle` is measured from the surface normal. The TM branch uses
/// the sign convention under which both polarizations agree at normal
/// incidence, `(1 - sqrt(eta)) / (1 + sqrt(eta))`.
pub fn reflection_coefficient(
    props: &EmProperties,
    incidence_angle: f64,
    polarization: Polarization,
) -> Complex64 {
    let eta = props.complex_permittivity();
    let (sin_t, cos_t) = incidence_angle.sin_cos();
    let root = (eta - sin_t * sin_t).sqrt();
    match polarization {
        Polarization::Te => (cos_t - root) / (cos_t + root),
        Polarization::Tm => (root - eta * cos_t) / (root + eta * cos_t),
    }
}

#[derive(Clone, Copy, Debug)]
struct Plane {
    origin: Vec3,
    normal: Vec3,
    bounds: Bounds,
}

#[derive(Clone, Copy, Debug)]
enum Bounds {
    Unbounded,
    Rect {
        along: Vec3,
        length: f64,
        zmin: f64,
        zmax: f64,
    },
}

impl Plane {
    fn of(shape: &FacetShape) -> Plane {
        match *shape {
            FacetShape::Ground { z } => Plane {
                origin: Vec3::new(0.0, 0.0, z),
                normal: Vec3::new(0.0, 0.0, 1.0),
                bounds: Bounds::Unbounded,
            },
            FacetShape::Wall {
                x1,
                y1,
                x2,
                y2,
                zmin,
                zmax,
            } => {
                let length = (x2 - x1).hypot(y2 - y1);
                let along = Vec3::new((x2 - x1) / length, (y2 - y1) / length, 0.0);
                Plane {
                    origin: Vec3::new(x1, y1, zmin),
                    normal: Vec3::new(-along.y, along.x, 0.0),
                    bounds: Bounds::Rect {
                        along,
                        length,
                        zmin,
                        zmax,
                    },
                }
            }
        }
    }

    fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal)
    }

    fn mirror(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    fn contains(&self, p: Vec3, tol: f64) -> bool {
        match self.bounds {
            Bounds::Unbounded => true,
            Bounds::Rect {
                along,
                length,
                zmin,
                zmax,
            } => {
                let s = (p - self.origin).dot(along);
                s >= -tol && s <= length + tol && p.z >= zmin - tol && p.z <= zmax + tol
            }
        }
    }

    /// Point where segment `a -> b` crosses the plane strictly between its
    /// endpoints (more than `GEOM_TOL` meters from either end).
    fn crossing(&self, a: Vec3, b: Vec3) -> Option<Vec3> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if da * db >= 0.0 {
            return None;
        }
        let t = da / (da - db);
        let len = a.distance(b);
        if t * len <= GEOM_TOL || (1.0 - t) * len <= GEOM_TOL {
            return None;
        }
        Some(a + (b - a) * t)
    }
}

struct PlaneFacet {
    plane: Plane,
    props: EmProperties,
    polarization: Polarization,
}

struct PreparedScene {
    facets: Vec<PlaneFacet>,
}

impl PreparedScene {
    fn check_endpoint(&self, p: Vec3, what: &str) -> Result<()> {
        for (i, f) in self.facets.iter().enumerate() {
            let d = f.plane.signed_distance(p);
            match f.plane.bounds {
                Bounds::Unbounded if d <= GEOM_TOL => {
                    return Err(Error::InvalidScene(format!(
                        "{what} position is on or below ground facet {i}"
                    )));
                }
                Bounds::Rect { .. } if d.abs() <= GEOM_TOL && f.plane.contains(p, GEOM_TOL) => {
                    return Err(Error::InvalidScene(format!(
                        "{what} position lies on facet {i}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn segment_blocked(&self, a: Vec3, b: Vec3) -> bool {
        self.facets.iter().any(|f| {
            f.plane
                .crossing(a, b)
                .is_some_and(|x| f.plane.contains(x, GEOM_TOL))
        })
    }

    /// Back-projects one facet sequence into a specular path, if it exists.
    fn resolve(&self, tx: Vec3, rx: Vec3, seq: &[usize], images: &[Vec3]) -> Option<Vec<Vec3>> {
        let mut points = vec![Vec3::default(); seq.len()];
        let mut target = rx;
        for k in (0..seq.len()).rev() {
            let plane = &self.facets[seq[k]].plane;
            let p = plane.crossing(target, images[k])?;
            if !plane.contains(p, 1e-9) {
                return None;
            }
            points[k] = p;
            target = p;
        }
        let mut prev = tx;
        for &p in points.iter().chain(std::iter::once(&rx)) {
            if self.segment_blocked(prev, p) {
                return None;
            }
            prev = p;
        }
        Some(points)
    }
}

/// All unobstructed specular paths between the scene transmitter and `rx`.
pub fn trace_paths(scene: &Scene, rx: Vec3) -> Result<Vec<TracedPath>> {
    scene.validate()?;
    if !rx.is_finite() || rx.z <= 0.0 {
        return Err(Error::invalid(
            "rx position must be finite with positive height",
        ));
    }
    let tx = scene.tx_position;
    if tx.distance(rx) <= GEOM_TOL {
        return Err(Error::invalid("rx coincides with tx"));
    }
    let prepared = scene.prepare()?;
    prepared.check_endpoint(rx, "rx")?;

    let wavelength = scene.wavelength();
    let k0 = 2.0 * PI * scene.carrier_freq;
    let build = |facets: Vec<usize>, points: Vec<Vec3>| -> TracedPath {
        let mut length = 0.0;
        let mut gamma = Complex64::new(scene.antenna_gain(), 0.0);
        let mut prev = tx;
        for (&f, &p) in facets.iter().zip(&points) {
            let dir = (p - prev).normalized();
            let facet = &prepared.facets[f];
            let cos_t = dir.dot(facet.plane.normal).abs().min(1.0);
            gamma *= reflection_coefficient(&facet.props, cos_t.acos(), facet.polarization);
            length += prev.distance(p);
            prev = p;
        }
        length += prev.distance(rx);
        let delay = length / SPEED_OF_LIGHT;
        let amplitude = gamma * (wavelength / (4.0 * PI * length)) * Complex64::cis(-k0 * delay);
        TracedPath {
            facets,
            points,
            length,
            amplitude,
            delay,
        }
    };

    let mut paths = Vec::new();
    if !prepared.segment_blocked(tx, rx) {
        paths.push(build(Vec::new(), Vec::new()));
    }

    // Depth-first enumeration of facet sequences without immediate repeats.
    let mut seq: Vec<usize> = Vec::with_capacity(scene.max_depth);
    let mut images: Vec<Vec3> = Vec::with_capacity(scene.max_depth);
    fn descend(
        prepared: &PreparedScene,
        tx: Vec3,
        rx: Vec3,
        max_depth: usize,
        seq: &mut Vec<usize>,
        images: &mut Vec<Vec3>,
        found: &mut Vec<(Vec<usize>, Vec<Vec3>)>,
    ) {
        if seq.len() == max_depth {
            return;
        }
        for f in 0..prepared.facets.len() {
            if seq.last() == Some(&f) {
                continue;
            }
            let src = images.last().copied().unwrap_or(tx);
            let plane = &prepared.facets[f].plane;
            // A source on the plane has no reflection off it.
            if plane.signed_distance(src).abs() <= GEOM_TOL {
                continue;
            }
            seq.push(f);
            images.push(plane.mirror(src));
            if let Some(points) = prepared.resolve(tx, rx, seq, images) {
                found.push((seq.clone(), points));
            }
            descend(prepared, tx, rx, max_depth, seq, images, found);
            seq.pop();
            images.pop();
        }
    }
    let mut found = Vec::new();
    descend(
        &prepared,
        tx,
        rx,
        scene.max_depth,
        &mut seq,
        &mut images,
        &mut found,
    );
    paths.extend(found.into_iter().map(|(s, p)| build(s, p)));
    Ok(paths)
}

pub fn trace_snapshot(scene: &Scene, rx: Vec3) -> Result<DelayProfile> {
    let paths = trace_paths(scene, rx)?
        .into_iter()
        .map(|p| Path {
            amplitude: p.amplitude,
            delay: p.delay,
        })
        .collect();
    Ok(DelayProfile {
        paths,
        snapshot_time: 0.0,
    })
}

/// One delay profile per trace position, in trace order.
pub fn trace_timeline(
    scene: &Scene,
    trace: &MobilityTrace,
    exec: Execution,
) -> Result<Vec<DelayProfile>> {
    scene.validate()?;
    trace.validate()?;
    exec.try_map(&trace.positions, |i, &rx| {
        let mut profile = trace_snapshot(scene, rx).map_err(|e| e.at_snapshot(i))?;
        profile.snapshot_time = i as f64 * trace.interval;
        Ok(profile)
    })
}
