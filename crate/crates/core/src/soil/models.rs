//! Closed-form frequency-dependent soil models, as compared by Cavka,
//! Mora & Rachidi (2014).

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use crate::constants::EPS0;
use crate::error::{param, Error, Result};

/// High-frequency relative permittivity of the Messier model.
pub const MESSIER_EPS_INF: f64 = 8.0;
/// Alipio & Visacro (2014) mean-value constants: `h(σ0) = 1.26 σ0^−0.73`
/// with σ0 in mS/m, `γ = 0.54`, `ε'∞/ε0 = 12`.
pub const ALIPIO_H_COEFF: f64 = 1.26;
pub const ALIPIO_H_EXP: f64 = -0.73;
pub const ALIPIO_GAMMA: f64 = 0.54;
pub const ALIPIO_EPS_INF: f64 = 12.0;
/// Portela (1999) median constants: `α = 0.706`, `Δi = 11.71 mS/m`.
pub const PORTELA_ALPHA: f64 = 0.706;
pub const PORTELA_DELTA_I: f64 = 11.71e-3;

const ONE_MHZ: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SoilModel {
    Messier,
    AlipioVisacro,
    Portela,
}

impl SoilModel {
    pub const ALL: [SoilModel; 3] = [SoilModel::Messier, SoilModel::AlipioVisacro, SoilModel::Portela];

    pub fn name(self) -> &'static str {
        match self {
            SoilModel::Messier => "messier",
            SoilModel::AlipioVisacro => "alipio_visacro",
            SoilModel::Portela => "portela",
        }
    }

    /// Conductivity (S/m) and relative permittivity at `freq`.
    pub fn properties(self, rho0: f64, freq: f64) -> Result<SoilProperties> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return param(format!("rho0 must be > 0, got {rho0}"));
        }
        if !(freq > 0.0 && freq.is_finite()) {
            return param(format!("frequency must be > 0, got {freq}"));
        }
        let sigma0 = 1.0 / rho0;
        let omega = 2.0 * PI * freq;
        let (sigma, eps_r) = match self {
            SoilModel::Messier => {
                // σ = σ0(1 + sqrt(2ωε∞/σ0)), ε = ε∞(1 + sqrt(2σ0/(ωε∞)))
                let eps_inf = MESSIER_EPS_INF * EPS0;
                let root = (2.0 * omega * eps_inf * sigma0).sqrt();
                (sigma0 + root, MESSIER_EPS_INF + root / (omega * EPS0))
            }
            SoilModel::AlipioVisacro => {
                let ms = sigma0 * 1e3;
                let h = ALIPIO_H_COEFF * ms.powf(ALIPIO_H_EXP);
                let g = ALIPIO_GAMMA;
                let sigma = sigma0 + sigma0 * h * (freq / ONE_MHZ).powf(g);
                let eps = ALIPIO_EPS_INF
                    + (PI * g / 2.0).tan() * 1e-3 / (2.0 * PI * EPS0 * ONE_MHZ.powf(g)) * ms * h * freq.powf(g - 1.0);
                (sigma, eps)
            }
            SoilModel::Portela => {
                // σ + jωε = σ0 + Δi (cot(πα/2) + j) (f / 1 MHz)^α
                let a = PORTELA_ALPHA;
                let s = PORTELA_DELTA_I * (freq / ONE_MHZ).powf(a);
                (sigma0 + s / (PI * a / 2.0).tan(), s / (omega * EPS0))
            }
        };
        Ok(SoilProperties { freq, sigma, eps_r })
    }

    /// Samples the model on `n` log-spaced frequencies in `[f_lo, f_hi]`.
    pub fn sweep(self, rho0: f64, f_lo: f64, f_hi: f64, n: usize) -> Result<Vec<SoilProperties>> {
        if !(f_lo > 0.0 && f_hi > f_lo) || n < 2 {
            return param(format!("sweep needs 0 < f_lo < f_hi and n >= 2, got ({f_lo}, {f_hi}, {n})"));
        }
        let (a, b) = (f_lo.ln(), f_hi.ln());
        (0..n)
            .map(|i| {
                let f = if i == n - 1 { f_hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() };
                self.properties(rho0, f)
            })
            .collect()
    }
}

impl FromStr for SoilModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SoilModel::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::Parameter(format!("unknown soil model '{s}' (expected messier, alipio_visacro or portela)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilProperties {
    pub freq: f64,
    /// S/m.
    pub sigma: f64,
    pub eps_r: f64,
}

impl SoilProperties {
    /// `ε_r − jσ/(ωε0)`.
    pub fn complex_permittivity(&self) -> Complex64 {
        Complex64::new(self.eps_r, -self.sigma / (2.0 * PI * self.freq * EPS0))
    }
}
