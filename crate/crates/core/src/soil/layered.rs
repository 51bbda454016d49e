//! Low-frequency apparent resistivity of a horizontally layered earth by
//! the image series.
//!
//! With every thickness a multiple of a common `h0`, the surface kernel
//! `T1(λ)/ρ1` (Koefoed's resistivity transform) is a rational function of
//! `u = exp(−2λh0)`. Expanding it as `1 + Σ c_m u^m` and using
//! `∫ u^m J0(λr) dλ = 1/sqrt(r² + (2mh0)²)` gives the surface potential of a
//! point current `I`:
//! `V(r) = ρ1 I/(2π) · [1/r + Σ c_m / sqrt(r² + (2mh0)²)]`.
//! For two layers `c_m = 2k^m`, the classical image series.

use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::soil::array::ElectrodeArray;

/// Terms are summed until this many consecutive ones are below the
/// relative tolerance.
const QUIET_RUN: usize = 8;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;
/// Largest thickness multiple of `h0` accepted when looking for a common
/// unit.
const MAX_MULTIPLE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// Ω·m.
    pub rho: f64,
    /// Meters; ignored for the bottom layer.
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredEarth {
    /// Top to bottom; the last layer extends to infinity.
    pub layers: Vec<Layer>,
}

impl LayeredEarth {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let e = LayeredEarth { layers };
        e.check()?;
        Ok(e)
    }

    pub fn homogeneous(rho: f64) -> Result<Self> {
        LayeredEarth::new(vec![Layer { rho, thickness: f64::INFINITY }])
    }

    pub fn check(&self) -> Result<()> {
        if self.layers.is_empty() {
            return param("layered earth needs at least one layer");
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.rho > 0.0 && l.rho.is_finite()) {
                return param(format!("layer {i}: resistivity must be > 0, got {}", l.rho));
            }
            if i + 1 < self.layers.len() && !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return param(format!("layer {i}: thickness must be > 0, got {}", l.thickness));
            }
        }
        Ok(())
    }

    /// Image-series coefficients `c_m` (from `m = 1`) and the unit `h0`.
    pub fn image_series(&self, tolerance: f64, max_terms: usize) -> Result<ImageSeries> {
        self.check()?;
        let upper = &self.layers[..self.layers.len() - 1];
        if upper.is_empty() {
            return Ok(ImageSeries { h0: 1.0, num: vec![1.0], den: vec![1.0], tolerance, max_terms });
        }
        let (h0, multiples) = common_unit(&upper.iter().map(|l| l.thickness).collect::<Vec<_>>())?;
        // T_i = N_i / D_i, built from the bottom up.
        let mut num = vec![self.layers.last().expect("non-empty").rho];
        let mut den = vec![1.0];
        for (l, &n) in upper.iter().zip(&multiples).rev() {
            let plus = binomial(n, 1.0);
            let minus = binomial(n, -1.0);
            let new_num = add(&mul(&num, &plus), &scale(&mul(&den, &minus), l.rho));
            let new_den = add(&mul(&den, &plus), &scale(&mul(&num, &minus), 1.0 / l.rho));
            let norm = new_den[0];
            num = scale(&new_num, 1.0 / norm);
            den = scale(&new_den, 1.0 / norm);
        }
        let num = scale(&num, 1.0 / self.layers[0].rho);
        Ok(ImageSeries { h0, num, den, tolerance, max_terms })
    }

    /// Surface potential per unit current at distance `r`, V/A.
    pub fn potential(&self, r: f64) -> Result<f64> {
        self.potentials(&[r]).map(|v| v[0])
    }

    fn potentials(&self, radii: &[f64]) -> Result<Vec<f64>> {
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return param("distances must be > 0");
        }
        let series = self.image_series(DEFAULT_TOLERANCE, DEFAULT_MAX_TERMS)?;
        let sums = series.sum(radii)?;
        let k = self.layers[0].rho / (2.0 * PI);
        Ok(radii.iter().zip(sums).map(|(r, s)| k * (1.0 / r + s)).collect())
    }

    /// Apparent resistivity measured by `array` on this earth.
    pub fn apparent_resistivity(&self, array: &ElectrodeArray) -> Result<f64> {
        let k = array.geometric_factor()?;
        let pairs = array.pairs();
        let v = self.potentials(&pairs.map(|p| p.0))?;
        Ok(k * pairs.iter().zip(v).map(|((_, s), v)| s * v).sum::<f64>())
    }
}

/// The expansion `N(u)/D(u) = 1 + Σ c_m u^m` of the surface kernel.
#[derive(Debug, Clone)]
pub struct ImageSeries {
    pub h0: f64,
    num: Vec<f64>,
    den: Vec<f64>,
    tolerance: f64,
    max_terms: usize,
}

impl ImageSeries {
    /// Coefficients `c_0..c_count` by power-series division.
    pub fn coefficients(&self, count: usize) -> Vec<f64> {
        let mut c = Vec::with_capacity(count + 1);
        for m in 0..=count {
            let a = self.num.get(m).copied().unwrap_or(0.0);
            let s: f64 = (1..self.den.len().min(m + 1)).map(|j| self.den[j] * c[m - j]).sum();
            c.push((a - s) / self.den[0]);
        }
        c
    }

    /// `Σ_{m≥1} c_m/sqrt(r² + (2mh0)²)` for every radius, stopping once
    /// `QUIET_RUN` consecutive terms are all below `tolerance` relative to
    /// the running total.
    fn sum(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
        let mut c: Vec<f64> = vec![self.num[0] / self.den[0]];
        let mut quiet = 0;
        for m in 1..=self.max_terms {
            let a = self.num.get(m).copied().unwrap_or(0.0);
            let s: f64 = (1..self.den.len().min(m + 1)).map(|j| self.den[j] * c[m - j]).sum();
            let cm = (a - s) / self.den[0];
            c.push(cm);
            let z = 2.0 * m as f64 * self.h0;
            let mut small = true;
            for (o, r) in out.iter_mut().zip(radii) {
                let t = cm / r.hypot(z);
                *o += t;
                if t.abs() > self.tolerance * o.abs() {
                    small = false;
                }
            }
            quiet = if small { quiet + 1 } else { 0 };
            if quiet >= QUIET_RUN.max(self.den.len()) {
                return Ok(out.iter().zip(radii).map(|(o, r)| o - 1.0 / r).collect());
            }
        }
        Err(Error::Computation(format!(
            "image series did not converge in {} terms (last coefficient {:.3e}, h0 = {} m)",
            self.max_terms,
            c.last().copied().unwrap_or(0.0),
            self.h0
        )))
    }
}

/// Largest `h0` with every thickness an integer multiple of it (to 1e-9).
fn common_unit(thicknesses: &[f64]) -> Result<(f64, Vec<usize>)> {
    let t_min = thicknesses.iter().copied().fold(f64::INFINITY, f64::min);
    for q in 1..=MAX_MULTIPLE {
        let h0 = t_min / q as f64;
        let multiples: Vec<f64> = thicknesses.iter().map(|t| t / h0).collect();
        if multiples.iter().all(|m| (m - m.round()).abs() < 1e-9 * m.max(1.0)) {
            let ns: Vec<usize> = multiples.iter().map(|m| m.round() as usize).collect();
            if ns.iter().sum::<usize>() <= 4 * MAX_MULTIPLE {
                return Ok((h0, ns));
            }
        }
    }
    Err(Error::Computation(format!(
        "layer thicknesses {thicknesses:?} have no common unit within 1/{MAX_MULTIPLE} of the thinnest layer"
    )))
}

/// `1 + sign·u^n`.
fn binomial(n: usize, sign: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    p[n] += sign;
    p
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len().max(b.len())).map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0)).collect()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layer(r1: f64, r2: f64, h: f64) -> LayeredEarth {
        LayeredEarth::new(vec![Layer { rho: r1, thickness: h }, Layer { rho: r2, thickness: f64::INFINITY }]).unwrap()
    }

    #[test]
    fn homogeneous_identity() {
        let e = LayeredEarth::homogeneous(372.58).unwrap();
        let arrays = [
            ElectrodeArray::Wenner { a: 1.0 },
            ElectrodeArray::DipoleDipole { a: 0.5, n: 3.0 },
            ElectrodeArray::General { a: [1.0, 1.0], b: [2.0, 1.0], m: [4.0, 3.0], n: [4.0, 4.0] },
        ];
        for a in arrays {
            assert!((e.apparent_resistivity(&a).unwrap() - 372.58).abs() < 1e-9);
        }
    }

    #[test]
    fn two_layer_coefficients_are_powers_of_reflection() {
        let e = two_layer(100.0, 300.0, 2.0);
        let k: f64 = (300.0 - 100.0) / (300.0 + 100.0);
        let s = e.image_series(1e-9, 1000).unwrap();
        let c = s.coefficients(12);
        assert!((c[0] - 1.0).abs() < 1e-15);
        for (m, cm) in c.iter().enumerate().skip(1) {
            assert!((cm - 2.0 * k.powi(m as i32)).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn series_matches_kernel_recursion() {
        // Evaluate T1/ρ1 directly from the transform recursion at a few λ and
        // compare to the truncated power series in u = exp(−2λh0).
        let layers = vec![
            Layer { rho: 200.0, thickness: 1.0 },
            Layer { rho: 400.0, thickness: 1.5 },
            Layer { rho: 800.0, thickness: f64::INFINITY },
        ];
        let e = LayeredEarth::new(layers.clone()).unwrap();
        let s = e.image_series(1e-9, 1000).unwrap();
        assert!((s.h0 - 0.5).abs() < 1e-15);
        let c = s.coefficients(400);
        for lambda in [0.05, 0.3, 1.0, 4.0] {
            let mut t = layers[2].rho;
            for l in layers[..2].iter().rev() {
                let th = (lambda * l.thickness).tanh();
                t = (t + l.rho * th) / (1.0 + t * th / l.rho);
            }
            let u: f64 = (-2.0 * lambda * s.h0).exp();
            let series: f64 = c.iter().enumerate().map(|(m, cm)| cm * u.powi(m as i32)).sum();
            assert!((series - t / layers[0].rho).abs() < 1e-9, "λ={lambda}");
        }
    }

    #[test]
    fn asymptotes_of_two_layers() {
        let e = two_layer(100.0, 400.0, 1.0);
        let near = e.apparent_resistivity(&ElectrodeArray::Wenner { a: 0.01 }).unwrap();
        let far = e.apparent_resistivity(&ElectrodeArray::Wenner { a: 1e4 }).unwrap();
        assert!((near / 100.0 - 1.0).abs() < 1e-3, "{near}");
        assert!((far / 400.0 - 1.0).abs() < 1e-2, "{far}");
    }

    #[test]
    fn scale_invariance() {
        let e = LayeredEarth::new(vec![
            Layer { rho: 200.0, thickness: 1.0 },
            Layer { rho: 400.0, thickness: 1.0 },
            Layer { rho: 800.0, thickness: f64::INFINITY },
        ])
        .unwrap();
        let a = ElectrodeArray::Wenner { a: 1.0 };
        let base = e.apparent_resistivity(&a).unwrap();
        let mut rho3 = e.clone();
        rho3.layers.iter_mut().for_each(|l| l.rho *= 3.0);
        assert!((rho3.apparent_resistivity(&a).unwrap() / base - 3.0).abs() < 1e-9);
        let mut long = e.clone();
        long.layers.iter_mut().for_each(|l| l.thickness *= 2.5);
        let b = long.apparent_resistivity(&ElectrodeArray::Wenner { a: 2.5 }).unwrap();
        assert!((b / base - 1.0).abs() < 1e-9);
    }

    #[test]
    fn incommensurate_or_divergent_settings_fail() {
        let e = LayeredEarth::new(vec![
            Layer { rho: 100.0, thickness: 1.0 },
            Layer { rho: 100.0, thickness: std::f64::consts::PI },
            Layer { rho: 50.0, thickness: f64::INFINITY },
        ])
        .unwrap();
        assert!(matches!(e.image_series(1e-9, 10), Err(Error::Computation(_))));
        let stiff = two_layer(1.0, 1e9, 1.0);
        let s = stiff.image_series(1e-9, 50).unwrap();
        assert!(matches!(s.sum(&[1.0]), Err(Error::Computation(_))));
        assert!(LayeredEarth::new(vec![]).is_err());
        assert!(two_layer(100.0, 200.0, 1.0).potential(0.0).is_err());
    }
}
