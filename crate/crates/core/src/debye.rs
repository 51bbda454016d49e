//! Multi-pole Debye media through the auxiliary differential equation
//! method.
//!
//! Each pole carries a polarization current `J_p` obeying
//! `τ_p dJ_p/dt + J_p = ε0 Δε_p dE/dt`, discretized with the trapezoidal
//! rule so that `J_p⁺ = k_p J_p + β_p (E⁺ − E)` with
//! `k_p = (τ_p − dt/2)/(τ_p + dt/2)` and `β_p = ε0 Δε_p/(τ_p + dt/2)`.
//! Substituting into Ampère's law gives the modified edge coefficients of
//! [`crate::grid::e_coefficients`] (with `beta_sum = Σ β_p`) and the explicit
//! correction `−cb · Σ ½(1 + k_p) J_p` applied after the main sweep.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::EPS0;
use crate::error::{param, Result};
use crate::grid::{Axis, FieldSet, MaterialMap, UpdateCoefficients, NO_DEBYE};

pub const MAX_POLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyePole {
    pub delta_eps: f64,
    /// Relaxation time, seconds.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebyeMedium {
    pub name: String,
    pub eps_inf: f64,
    /// Static conductivity, S/m.
    pub sigma0: f64,
    pub poles: Vec<DebyePole>,
}

impl DebyeMedium {
    pub fn new(name: impl Into<String>, eps_inf: f64, sigma0: f64, poles: Vec<DebyePole>) -> Result<Self> {
        let m = DebyeMedium { name: name.into(), eps_inf, sigma0, poles };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps_inf >= 1.0) {
            return param(format!("{}: eps_inf must be >= 1, got {}", self.name, self.eps_inf));
        }
        if !(self.sigma0 >= 0.0) {
            return param(format!("{}: sigma0 must be >= 0, got {}", self.name, self.sigma0));
        }
        if self.poles.len() > MAX_POLES {
            return param(format!("{}: at most {MAX_POLES} poles are supported, got {}", self.name, self.poles.len()));
        }
        for p in &self.poles {
            if !(p.delta_eps >= 0.0) || !(p.tau > 0.0) {
                return param(format!(
                    "{}: pole needs delta_eps >= 0 and tau > 0, got ({}, {})",
                    self.name, p.delta_eps, p.tau
                ));
            }
        }
        Ok(())
    }

    /// Static resistivity `1/σ0`, Ω·m.
    pub fn rho0(&self) -> f64 {
        1.0 / self.sigma0
    }

    /// Complex relative permittivity including the conduction term,
    /// `ε∞ + Σ Δε_p/(1 + jωτ_p) − jσ0/(ωε0)`.
    pub fn complex_permittivity(&self, freq: f64) -> Result<Complex64> {
        if !(freq > 0.0) {
            return param(format!("frequency must be > 0, got {freq}"));
        }
        Ok(self.eval(2.0 * std::f64::consts::PI * freq))
    }

    pub(crate) fn eval(&self, omega: f64) -> Complex64 {
        let j = Complex64::i();
        let mut eps = Complex64::new(self.eps_inf, 0.0);
        for p in &self.poles {
            eps += p.delta_eps / (1.0 + j * omega * p.tau);
        }
        eps - j * self.sigma0 / (omega * EPS0)
    }

    /// Discrete pole coefficients for time step `dt`.
    pub fn ade_poles(&self, dt: f64) -> Vec<AdePole> {
        self.poles.iter().map(|p| AdePole::new(p, dt)).collect()
    }

    /// `Σ β_p` entering the edge coefficients.
    pub fn beta_sum(&self, dt: f64) -> f64 {
        self.ade_poles(dt).iter().map(|p| p.beta).sum()
    }
}

/// Trapezoidal recursion coefficients of one pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdePole {
    pub k: f64,
    pub beta: f64,
    /// `½ (1 + k)`, the weight of the old current in Ampère's law.
    pub half_one_plus_k: f64,
}

impl AdePole {
    pub fn new(pole: &DebyePole, dt: f64) -> Self {
        let den = pole.tau + 0.5 * dt;
        let k = (pole.tau - 0.5 * dt) / den;
        AdePole { k, beta: EPS0 * pole.delta_eps / den, half_one_plus_k: 0.5 * (1.0 + k) }
    }
}

#[derive(Debug, Clone, Default)]
struct EdgeSet {
    idx: Vec<usize>,
    medium: Vec<u16>,
    /// True (undivided) `cb` of the edge.
    cb: Vec<f64>,
    e_prev: Vec<f64>,
    /// `MAX_POLES` currents per edge.
    j: Vec<f64>,
    scratch: Vec<f64>,
}

/// Polarization currents of every dispersive edge.
#[derive(Debug, Clone)]
pub struct AdeState {
    poles: Vec<Vec<AdePole>>,
    edges: [EdgeSet; 3],
}

impl AdeState {
    /// Collects every updated, non-forced edge tagged with a medium that has
    /// at least one pole.
    pub fn new(map: &MaterialMap, coeffs: &UpdateCoefficients, media: &[DebyeMedium], dt: f64) -> Self {
        let poles: Vec<Vec<AdePole>> = media.iter().map(|m| m.ade_poles(dt)).collect();
        let dims = map.dims;
        let mut edges: [EdgeSet; 3] = Default::default();
        for comp in Axis::ALL {
            let c = comp.index();
            let set = &mut edges[c];
            let bx = dims.e_update_box(comp);
            for i in bx[0].clone() {
                for j in bx[1].clone() {
                    for k in bx[2].clone() {
                        let idx = dims.idx(i, j, k);
                        let tag = map.debye[c][idx];
                        if tag == NO_DEBYE || map.forced[c][idx] || poles[tag as usize].is_empty() {
                            continue;
                        }
                        set.idx.push(idx);
                        set.medium.push(tag);
                        set.cb.push(coeffs.cb[c][idx] * coeffs.delta);
                    }
                }
            }
            let n = set.idx.len();
            set.e_prev = vec![0.0; n];
            set.j = vec![0.0; n * MAX_POLES];
            set.scratch = vec![0.0; n];
        }
        AdeState { poles, edges }
    }

    /// Number of dispersive edges.
    pub fn len(&self) -> usize {
        self.edges.iter().map(|e| e.idx.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `E^n` of the dispersive edges; call before the E sweep.
    pub fn save(&mut self, fields: &FieldSet) {
        for comp in Axis::ALL {
            let set = &mut self.edges[comp.index()];
            let e = fields.e(comp);
            set.e_prev.par_iter_mut().zip(&set.idx).for_each(|(p, &i)| *p = e[i]);
        }
    }

    /// Applies the polarization-current correction to the freshly swept E
    /// and advances every `J_p`.
    pub fn apply(&mut self, fields: &mut FieldSet) {
        let poles = &self.poles;
        for comp in Axis::ALL {
            let set = &mut self.edges[comp.index()];
            let e = fields.e(comp);
            let EdgeSet { idx, medium, cb, e_prev, j, scratch } = set;
            scratch.par_iter_mut().zip(j.par_chunks_mut(MAX_POLES)).enumerate().for_each(|(n, (out, jp))| {
                let pl = &poles[medium[n] as usize];
                let mut corr = 0.0;
                for (p, jv) in pl.iter().zip(jp.iter()) {
                    corr += p.half_one_plus_k * jv;
                }
                let e_new = e[idx[n]] - cb[n] * corr;
                let de = e_new - e_prev[n];
                for (p, jv) in pl.iter().zip(jp.iter_mut()) {
                    *jv = p.k * *jv + p.beta * de;
                }
                *out = e_new;
            });
            let e = fields.e_mut(comp);
            for (n, &i) in idx.iter().enumerate() {
                e[i] = scratch[n];
            }
        }
    }

    /// Stored polarization energy `Σ P_p²/(2 ε0 Δε_p) Δ³`, with `P_p`
    /// recovered from `τ_p J_p + P_p = ε0 Δε_p E`.
    pub fn polarization_energy(&self, fields: &FieldSet, media: &[DebyeMedium], delta: f64) -> f64 {
        let mut w = 0.0;
        for comp in Axis::ALL {
            let set = &self.edges[comp.index()];
            let e = fields.e(comp);
            for n in 0..set.idx.len() {
                let m = &media[set.medium[n] as usize];
                for (p, pole) in m.poles.iter().enumerate() {
                    if pole.delta_eps == 0.0 {
                        continue;
                    }
                    let gain = EPS0 * pole.delta_eps;
                    let pol = gain * e[set.idx[n]] - pole.tau * set.j[n * MAX_POLES + p];
                    w += pol * pol / (2.0 * gain);
                }
            }
        }
        w * delta.powi(3)
    }

    pub fn max_abs_current(&self) -> f64 {
        self.edges.iter().flat_map(|s| s.j.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> DebyeMedium {
        DebyeMedium::new(
            "deb",
            16.381,
            0.002684,
            vec![
                DebyePole { delta_eps: 92.103, tau: 7.404e-6 },
                DebyePole { delta_eps: 20.825, tau: 1.062e-6 },
                DebyePole { delta_eps: 374.768, tau: 2.162e-5 },
                DebyePole { delta_eps: 10.387, tau: 1.008e-8 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn dispersionless_limit() {
        let m = DebyeMedium::new("flat", 7.0, 0.0, vec![DebyePole { delta_eps: 0.0, tau: 1e-6 }]).unwrap();
        for f in [1.0, 1e3, 1e6, 1e9] {
            let e = m.complex_permittivity(f).unwrap();
            assert_eq!(e.re, 7.0);
            assert_eq!(e.im, 0.0);
        }
        let hi = table1().complex_permittivity(1e15).unwrap();
        assert!((hi.re - 16.381).abs() < 1e-3);
        assert!(m.complex_permittivity(0.0).is_err());
        assert!(m.complex_permittivity(-5.0).is_err());
    }

    #[test]
    fn table1_medium_at_1khz() {
        // Independent evaluation of the closed form, term by term.
        let f = 1e3;
        let w = 2.0 * std::f64::consts::PI * f;
        let terms = [(92.103, 7.404e-6), (20.825, 1.062e-6), (374.768, 2.162e-5), (10.387, 1.008e-8)];
        let mut re = 16.381;
        let mut im = -0.002684 / (w * 8.854187817e-12);
        for (de, tau) in terms {
            let wt: f64 = w * tau;
            re += de / (1.0 + wt * wt);
            im -= de * wt / (1.0 + wt * wt);
        }
        let got = table1().complex_permittivity(f).unwrap();
        assert!((got.re - re).abs() < 1e-9 * re.abs());
        assert!((got.im - im).abs() < 1e-9 * im.abs());
    }

    #[test]
    fn imaginary_part_is_negative() {
        let m = table1();
        let mut f = 1.0;
        while f < 1e10 {
            assert!(m.complex_permittivity(f).unwrap().im < 0.0);
            f *= 1.7;
        }
    }

    #[test]
    fn rejects_invalid_media() {
        assert!(DebyeMedium::new("a", 0.5, 0.0, vec![]).is_err());
        assert!(DebyeMedium::new("a", 2.0, -1.0, vec![]).is_err());
        assert!(DebyeMedium::new("a", 2.0, 0.0, vec![DebyePole { delta_eps: 1.0, tau: 0.0 }]).is_err());
        let five = vec![DebyePole { delta_eps: 1.0, tau: 1e-6 }; 5];
        assert!(DebyeMedium::new("a", 2.0, 0.0, five).is_err());
    }

    #[test]
    fn pole_recursion_matches_susceptibility_in_steady_state() {
        // Drive E = cos(ωt) and compare the polarization current phasor with
        // jω ε0 Δε E/(1 + jωτ).
        let dt = 1e-10;
        for (tau, periods) in [(2e-9, 40usize), (2e-8, 60), (1e-7, 200)] {
            let pole = DebyePole { delta_eps: 30.0, tau };
            let p = AdePole::new(&pole, dt);
            // ω ≈ 0.3/(20 dt), well inside the resolved band.
            let per = 400;
            let w = 2.0 * std::f64::consts::PI / (per as f64 * dt);
            let (mut j, mut e_old) = (0.0, 1.0);
            let total = per * periods;
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 1..=total {
                let e = (w * n as f64 * dt).cos();
                j = p.k * j + p.beta * (e - e_old);
                e_old = e;
                if n > total - per {
                    acc += j * Complex64::from_polar(1.0, -w * n as f64 * dt);
                }
            }
            let got = acc * (2.0 / per as f64);
            let jw = Complex64::new(0.0, w);
            let want = jw * EPS0 * pole.delta_eps / (1.0 + jw * tau);
            assert!((got - want).norm() < 0.02 * want.norm(), "tau {tau}: {got} vs {want}");
        }
    }

    #[test]
    fn pole_recursion_is_contractive() {
        for tau in [1e-12, 1e-9, 1e-6] {
            let p = AdePole::new(&DebyePole { delta_eps: 10.0, tau }, 1e-10);
            assert!(p.k.abs() < 1.0);
            assert!(p.beta > 0.0);
        }
    }
}
