//! Depth of investigation of surface arrays over a homogeneous half-space.
//!
//! A thin horizontal slab at depth `z` contributes to the measured
//! potential of an electrode pair `L` apart in proportion to
//! `F(L, z) = z/(L² + 4z²)^(3/2)`; the array's depth-of-investigation
//! characteristic is the signed sum over its four pairs.
//! Roy & Apparao (1971) take the depth at which it peaks; Barker (1989)
//! takes its median depth, using `∫₀^z F = ¼(1/L − 1/sqrt(L² + 4z²))`.

use std::str::FromStr;

use crate::error::{param, Error, Result};
use crate::soil::array::ElectrodeArray;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DoiMethod {
    RoyApparao,
    Barker,
}

impl DoiMethod {
    pub fn name(self) -> &'static str {
        match self {
            DoiMethod::RoyApparao => "roy_apparao",
            DoiMethod::Barker => "barker",
        }
    }
}

impl FromStr for DoiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roy_apparao" => Ok(DoiMethod::RoyApparao),
            "barker" => Ok(DoiMethod::Barker),
            _ => param(format!("unknown depth-of-investigation method '{s}' (expected roy_apparao or barker)")),
        }
    }
}

/// Depth-of-investigation characteristic at depth `z` (unnormalized).
pub fn characteristic(array: &ElectrodeArray, z: f64) -> f64 {
    array.pairs().iter().map(|&(l, s)| s * z / (l * l + 4.0 * z * z).powf(1.5)).sum()
}

fn cumulative(array: &ElectrodeArray, z: f64) -> f64 {
    array.pairs().iter().map(|&(l, s)| 0.25 * s * (1.0 / l - 1.0 / (l * l + 4.0 * z * z).sqrt())).sum()
}

/// Depth of investigation in meters, for Wenner and dipole-dipole arrays.
pub fn depth_of_investigation(array: &ElectrodeArray, method: DoiMethod) -> Result<f64> {
    array.check()?;
    if matches!(array, ElectrodeArray::General { .. }) {
        return param("depth of investigation is defined for wenner and dipole-dipole arrays");
    }
    let l_max = array.pairs().iter().map(|p| p.0).fold(0.0, f64::max);
    match method {
        DoiMethod::Barker => {
            let half = 0.5 * cumulative(array, f64::INFINITY);
            let (mut lo, mut hi) = (0.0, l_max);
            while cumulative(array, hi) < half {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cumulative(array, mid) < half {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        DoiMethod::RoyApparao => {
            // Coarse scan, then golden-section refinement around the peak.
            let n = 4000;
            let top = 2.0 * l_max;
            let at = |i: usize| top * i as f64 / n as f64;
            let best = (1..=n)
                .max_by(|&a, &b| characteristic(array, at(a)).total_cmp(&characteristic(array, at(b))))
                .expect("non-empty scan");
            let (mut a, mut b) = (at(best - 1), at((best + 1).min(n)));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if characteristic(array, c) > characteristic(array, d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            Ok(0.5 * (a + b))
        }
    }
}
