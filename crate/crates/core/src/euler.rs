//! Euler equations of gas dynamics: state conversions, physical flux and the
//! HLL numerical flux with Davis wave speed estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1.4;

/// Conserved variables `(ρ, ρv, E)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedState {
    pub rho: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// Primitive variables `(ρ, v, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub rho: f64,
    pub v: f64,
    pub p: f64,
}

impl ConservedState {
    pub fn new(rho: f64, momentum: f64, energy: f64) -> Self {
        ConservedState {
            rho,
            momentum,
            energy,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.momentum, self.energy]
    }

    pub fn from_array(u: [f64; 3]) -> Self {
        ConservedState::new(u[0], u[1], u[2])
    }
}

impl PrimitiveState {
    pub fn new(rho: f64, v: f64, p: f64) -> Self {
        PrimitiveState { rho, v, p }
    }

    pub fn to_conserved(self, gamma: f64) -> ConservedState {
        ConservedState {
            rho: self.rho,
            momentum: self.rho * self.v,
            energy: self.p / (gamma - 1.0) + 0.5 * self.rho * self.v * self.v,
        }
    }
}

pub fn conserved_to_primitive(u: ConservedState, gamma: f64) -> Result<PrimitiveState> {
    if !(u.rho > 0.0) {
        return Err(Error::NonPhysical {
            rho: u.rho,
            pressure: f64::NAN,
            context: String::new(),
        });
    }
    let v = u.momentum / u.rho;
    let p = (gamma - 1.0) * (u.energy - 0.5 * u.rho * v * v);
    if !(p > 0.0) {
        return Err(Error::NonPhysical {
            rho: u.rho,
            pressure: p,
            context: String::new(),
        });
    }
    Ok(PrimitiveState { rho: u.rho, v, p })
}

pub fn primitive_to_conserved(w: PrimitiveState, gamma: f64) -> ConservedState {
    w.to_conserved(gamma)
}

fn flux_of(w: PrimitiveState, energy: f64) -> [f64; 3] {
    let m = w.rho * w.v;
    [m, m * w.v + w.p, w.v * (energy + w.p)]
}

/// Physical flux `(ρv, ρv² + p, v(E + p))`.
pub fn euler_flux(u: ConservedState, gamma: f64) -> Result<[f64; 3]> {
    let w = conserved_to_primitive(u, gamma)?;
    Ok(flux_of(w, u.energy))
}

pub fn sound_speed(w: PrimitiveState, gamma: f64) -> f64 {
    (gamma * w.p / w.rho).sqrt()
}

/// Davis estimates `(a_l, a_r)` of the slowest and fastest signal speeds.
pub fn davis_speeds(left: PrimitiveState, right: PrimitiveState, gamma: f64) -> (f64, f64) {
    let (cl, cr) = (sound_speed(left, gamma), sound_speed(right, gamma));
    (
        (left.v - cl).min(right.v - cr),
        (left.v + cl).max(right.v + cr),
    )
}

pub fn hll_flux(ul: ConservedState, ur: ConservedState, gamma: f64) -> Result<[f64; 3]> {
    let wl = conserved_to_primitive(ul, gamma)?;
    let wr = conserved_to_primitive(ur, gamma)?;
    let (al, ar) = davis_speeds(wl, wr, gamma);
    let fl = flux_of(wl, ul.energy);
    if al >= 0.0 || ul == ur {
        return Ok(fl);
    }
    let fr = flux_of(wr, ur.energy);
    if ar <= 0.0 {
        return Ok(fr);
    }
    let (ul, ur) = (ul.to_array(), ur.to_array());
    let inv = 1.0 / (ar - al);
    Ok(std::array::from_fn(|i| {
        (ar * fl[i] - al * fr[i] + ar * al * (ur[i] - ul[i])) * inv
    }))
}
