//! Apparent soil properties from simulated or measured V and I records.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::constants::EPS0;
use crate::error::{param, Result};
use crate::soil::array::ElectrodeArray;

/// Rows whose current spectrum is below this fraction of its peak are
/// flagged invalid.
pub const DEFAULT_CURRENT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparentRow {
    pub freq: f64,
    /// Ω·m.
    pub rho_a: f64,
    /// Relative.
    pub eps_a: f64,
    pub valid: bool,
}

/// Spectral transfer `Z(f) = V(f)/I(f)` scaled by the geometric factor.
/// The apparent complex resistivity `ρ* = kZ` is read as a parallel
/// conductance and capacitance, `1/ρ* = 1/ρ_a + jωε0ε_a`. Rows cover the
/// positive DFT bins up to Nyquist.
pub fn apparent_from_vi(v: &[f64], i: &[f64], dt: f64, array: &ElectrodeArray, floor: f64) -> Result<Vec<ApparentRow>> {
    if v.len() != i.len() {
        return param(format!("voltage and current series differ in length ({} vs {})", v.len(), i.len()));
    }
    if v.len() < 2 {
        return param("series need at least two samples");
    }
    if !(dt > 0.0) {
        return param(format!("time step must be > 0, got {dt}"));
    }
    if i.iter().all(|&x| x == 0.0) {
        return param("current series is identically zero");
    }
    let k = array.geometric_factor()?;
    let n = v.len();
    let spectrum = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        buf
    };
    let (vs, is) = (spectrum(v), spectrum(i));
    let peak = is[1..=n / 2].iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok((1..=n / 2)
        .map(|b| {
            let freq = b as f64 / (n as f64 * dt);
            if is[b].norm() <= floor * peak || peak == 0.0 {
                return ApparentRow { freq, rho_a: f64::NAN, eps_a: f64::NAN, valid: false };
            }
            let y = is[b] / (k * vs[b]);
            ApparentRow { freq, rho_a: 1.0 / y.re, eps_a: y.im / (2.0 * PI * freq * EPS0), valid: true }
        })
        .collect())
}
