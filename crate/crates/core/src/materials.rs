//! ITU-R style frequency-dependent material properties.
//!
//! Relative permittivity and conductivity follow the power-law fit
//! `eps_r = a * f_GHz^b`, `sigma = c * f_GHz^d`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Vacuum permittivity in F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Power-law coefficients for one material class.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSpec {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MaterialSpec {
    pub fn new(name: impl Into<String>, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let name = name.into();
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(Error::invalid(format!(
                "material {name}: non-finite coefficient"
            )));
        }
        if a < 1.0 {
            return Err(Error::invalid(format!("material {name}: a = {a} < 1")));
        }
        if c < 0.0 {
            return Err(Error::invalid(format!("material {name}: c = {c} < 0")));
        }
        Ok(Self { name, a, b, c, d })
    }

    pub fn vacuum() -> Self {
        Self::builtin("vacuum", 1.0, 0.0, 0.0, 0.0)
    }

    pub fn concrete() -> Self {
        Self::builtin("concrete", 5.24, 0.0, 0.0462, 0.7822)
    }

    pub fn glass() -> Self {
        Self::builtin("glass", 6.31, 0.0, 0.0036, 1.3394)
    }

    pub fn metal() -> Self {
        Self::builtin("metal", 1.0, 0.0, 1e7, 0.0)
    }

    fn builtin(name: &str, a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            name: name.to_string(),
            a,
            b,
            c,
            d,
        }
    }

    /// The four built-in material classes.
    pub fn builtins() -> Vec<MaterialSpec> {
        vec![
            Self::vacuum(),
            Self::concrete(),
            Self::glass(),
            Self::metal(),
        ]
    }

    /// Looks up a built-in material by (case-insensitive) name.
    pub fn builtin_by_name(name: &str) -> Option<MaterialSpec> {
        Self::builtins()
            .into_iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
    }
}

/// Material properties evaluated at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmProperties {
    pub eps_r: f64,
    /// Conductivity in S/m.
    pub sigma_c: f64,
    /// Frequency in Hz.
    pub freq: f64,
}

impl EmProperties {
    /// Complex relative permittivity `eps_r - j sigma / (2 pi f eps0)`.
    pub fn complex_permittivity(&self) -> Complex64 {
        complex_permittivity(self)
    }
}

pub fn evaluate_material(spec: &MaterialSpec, freq_hz: f64) -> Result<EmProperties> {
    if !(freq_hz > 0.0) || !freq_hz.is_finite() {
        return Err(Error::invalid(format!(
            "frequency must be positive and finite, got {freq_hz}"
        )));
    }
    let f_ghz = freq_hz * 1e-9;
    Ok(EmProperties {
        eps_r: spec.a * f_ghz.powf(spec.b),
        sigma_c: spec.c * f_ghz.powf(spec.d),
        freq: freq_hz,
    })
}

pub fn complex_permittivity(props: &EmProperties) -> Complex64 {
    Complex64::new(
        props.eps_r,
        -props.sigma_c / (2.0 * PI * props.freq * EPSILON_0),
    )
}
