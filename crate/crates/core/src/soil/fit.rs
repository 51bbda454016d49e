//! Debye parameter fitting by a particle swarm over relaxation times with a
//! non-negative least-squares inner solve (Kelley et al., 2007).
//!
//! For fixed relaxation times the model `ε∞ + Σ Δε_p/(1 + jωτ_p)` is linear
//! in `ε∞` and `Δε_p`, so the swarm only searches `log10 τ`. Rows are
//! weighted by `1/|ε(ω)|` so the least-squares objective is the relative
//! error that is reported.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::EPS0;
use crate::debye::{DebyeMedium, DebyePole, MAX_POLES};
use crate::error::{Error, Result};
use crate::soil::models::SoilModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilSample {
    pub freq: f64,
    /// Relative permittivity including the conduction term, `ε' − jσ/(ωε0)`.
    pub eps: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoilSampleSet {
    pub points: Vec<SoilSample>,
    /// DC conductivity of the samples when known. It is then held fixed in
    /// the fit; otherwise it is one of the non-negative unknowns.
    pub sigma_dc: Option<f64>,
}

impl SoilSampleSet {
    pub fn new(points: Vec<SoilSample>, sigma_dc: Option<f64>) -> Result<Self> {
        let set = SoilSampleSet { points, sigma_dc };
        set.check()?;
        Ok(set)
    }

    /// Log-spaced sweep of a closed-form soil model; the DC term is `1/rho0`.
    pub fn from_model(model: SoilModel, rho0: f64, f_lo: f64, f_hi: f64, n: usize) -> Result<Self> {
        let points = model
            .sweep(rho0, f_lo, f_hi, n)?
            .iter()
            .map(|p| SoilSample { freq: p.freq, eps: p.complex_permittivity() })
            .collect();
        SoilSampleSet::new(points, Some(1.0 / rho0))
    }

    /// Log-spaced samples of a Debye medium.
    pub fn from_medium(medium: &DebyeMedium, f_lo: f64, f_hi: f64, n: usize) -> Result<Self> {
        if !(f_lo > 0.0 && f_hi > f_lo) || n < 2 {
            return Err(Error::Parameter(format!("bad sweep ({f_lo}, {f_hi}, {n})")));
        }
        let (a, b) = (f_lo.ln(), f_hi.ln());
        let points = (0..n)
            .map(|i| {
                let freq = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
                Ok(SoilSample { freq, eps: medium.complex_permittivity(freq)? })
            })
            .collect::<Result<Vec<_>>>()?;
        SoilSampleSet::new(points, Some(medium.sigma0))
    }

    pub fn check(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Parameter("sample set is empty".into()));
        }
        for p in &self.points {
            if !(p.freq > 0.0 && p.freq.is_finite()) || !(p.eps.re.is_finite() && p.eps.im.is_finite()) {
                return Err(Error::Parameter(format!("sample at {} Hz is not finite and positive", p.freq)));
            }
        }
        if self.points.windows(2).any(|w| w[1].freq <= w[0].freq) {
            return Err(Error::Parameter("sample frequencies must be strictly increasing".into()));
        }
        if let Some(s) = self.sigma_dc {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Parameter(format!("DC conductivity must be >= 0, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Relaxation-time search bounds, seconds.
    pub tau_min: f64,
    pub tau_max: f64,
    pub seed: u64,
    /// Relative RMS residual above which the result carries a warning.
    pub residual_ceiling: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            particles: 40,
            iterations: 200,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            tau_min: 1e-9,
            tau_max: 1e-3,
            seed: 1,
            residual_ceiling: 0.02,
        }
    }
}

impl FitOptions {
    fn check(&self) -> Result<()> {
        if self.particles == 0 || self.iterations == 0 {
            return Err(Error::Parameter("swarm needs at least one particle and one iteration".into()));
        }
        if !(self.tau_min > 0.0 && self.tau_max > self.tau_min) {
            return Err(Error::Parameter(format!("bad tau bounds [{}, {}]", self.tau_min, self.tau_max)));
        }
        for (name, v) in [("inertia", self.inertia), ("cognitive", self.cognitive), ("social", self.social)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebyeFit {
    /// S/m.
    pub sigma0: f64,
    pub eps_inf: f64,
    /// Sorted by decreasing relaxation time.
    pub poles: Vec<DebyePole>,
    /// Relative RMS error `sqrt(mean(|ε_fit − ε|²/|ε|²))`.
    pub residual: f64,
    pub warning: Option<String>,
}

impl DebyeFit {
    pub fn medium(&self, name: &str) -> Result<DebyeMedium> {
        DebyeMedium::new(name, self.eps_inf.max(1.0), self.sigma0, self.poles.clone())
    }
}

/// Weighted real least-squares system for one set of relaxation times.
struct Problem<'a> {
    samples: &'a SoilSampleSet,
    weights: Vec<f64>,
    /// Target with the known DC term removed.
    target: Vec<Complex64>,
}

impl<'a> Problem<'a> {
    fn new(samples: &'a SoilSampleSet) -> Self {
        let weights = samples.points.iter().map(|p| 1.0 / p.eps.norm()).collect();
        let target = samples
            .points
            .iter()
            .map(|p| match samples.sigma_dc {
                Some(s) => p.eps + Complex64::new(0.0, s / (omega(p.freq) * EPS0)),
                None => p.eps,
            })
            .collect();
        Problem { samples, weights, target }
    }

    /// Columns: ε∞, one per pole, and the DC conductivity when unknown.
    fn solve(&self, taus: &[f64]) -> (DVector<f64>, f64) {
        let n = self.samples.points.len();
        let free_sigma = self.samples.sigma_dc.is_none();
        let cols = 1 + taus.len() + usize::from(free_sigma);
        let mut a = DMatrix::<f64>::zeros(2 * n, cols);
        let mut b = DVector::<f64>::zeros(2 * n);
        for (r, p) in self.samples.points.iter().enumerate() {
            let w = self.weights[r];
            let om = omega(p.freq);
            let mut col = |c: usize, v: Complex64| {
                a[(r, c)] = w * v.re;
                a[(n + r, c)] = w * v.im;
            };
            col(0, Complex64::new(1.0, 0.0));
            for (i, &tau) in taus.iter().enumerate() {
                col(1 + i, 1.0 / Complex64::new(1.0, om * tau));
            }
            if free_sigma {
                col(cols - 1, Complex64::new(0.0, -1.0 / (om * EPS0)));
            }
            b[r] = w * self.target[r].re;
            b[n + r] = w * self.target[r].im;
        }
        let x = nnls(&a, &b);
        let res = (&a * &x - &b).norm();
        (x, res)
    }
}

fn omega(f: f64) -> f64 {
    2.0 * PI * f
}

/// Fits `n_poles` Debye terms to the samples. Deterministic for a fixed
/// seed regardless of the number of worker threads.
pub fn fit_debye(samples: &SoilSampleSet, n_poles: usize, opts: &FitOptions) -> Result<DebyeFit> {
    samples.check()?;
    opts.check()?;
    if !(1..=MAX_POLES).contains(&n_poles) {
        return Err(Error::Parameter(format!("pole count must be 1..={MAX_POLES}, got {n_poles}")));
    }
    let needed = 2 * n_poles + 2;
    if samples.points.len() < needed {
        return Err(Error::Fit(format!(
            "{n_poles} poles need at least {needed} samples, got {}",
            samples.points.len()
        )));
    }
    if samples.points.iter().all(|p| p.eps.norm() == 0.0) {
        return Err(Error::Fit("all samples are zero".into()));
    }
    let problem = Problem::new(samples);
    let (lo, hi) = (opts.tau_min.log10(), opts.tau_max.log10());
    let best = swarm(n_poles, lo, hi, opts, |x| {
        let taus: Vec<f64> = x.iter().map(|v| 10f64.powf(*v)).collect();
        problem.solve(&taus).1
    });
    let taus: Vec<f64> = best.iter().map(|v| 10f64.powf(*v)).collect();
    let (x, _) = problem.solve(&taus);
    let sigma0 = samples.sigma_dc.unwrap_or_else(|| x[x.len() - 1]);
    let mut poles: Vec<DebyePole> =
        taus.iter().enumerate().map(|(i, &tau)| DebyePole { delta_eps: x[1 + i], tau }).collect();
    poles.sort_by(|a, b| b.tau.total_cmp(&a.tau));
    let eps_inf = x[0];
    let fitted = DebyeMedium { name: String::new(), eps_inf, sigma0, poles: poles.clone() };
    let residual = (samples
        .points
        .iter()
        .map(|p| ((fitted.eval(omega(p.freq)) - p.eps).norm() / p.eps.norm()).powi(2))
        .sum::<f64>()
        / samples.points.len() as f64)
        .sqrt();
    let warning = (residual > opts.residual_ceiling)
        .then(|| format!("relative RMS residual {residual:.4} exceeds {}", opts.residual_ceiling));
    Ok(DebyeFit { sigma0, eps_inf, poles, residual, warning })
}

/// Global-best particle swarm on the box `[lo, hi]^dim`. Each particle owns
/// a ChaCha stream derived from the seed; scores are computed in parallel
/// and reduced in index order.
fn swarm(dim: usize, lo: f64, hi: f64, opts: &FitOptions, cost: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
    let vmax = 0.2 * (hi - lo);
    let mut rngs: Vec<ChaCha8Rng> = (0..opts.particles)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(opts.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let mut pos: Vec<Vec<f64>> = rngs.iter_mut().map(|r| (0..dim).map(|_| r.gen_range(lo..=hi)).collect()).collect();
    let mut vel: Vec<Vec<f64>> =
        rngs.iter_mut().map(|r| (0..dim).map(|_| r.gen_range(-vmax..=vmax)).collect()).collect();
    let score = |pos: &[Vec<f64>]| -> Vec<f64> {
        pos.par_iter()
            .map(|x| {
                let c = cost(x);
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };
    let mut pbest = pos.clone();
    let mut pscore = score(&pos);
    let (mut g, mut gscore) = argmin(&pscore);
    let mut gbest = pbest[g].clone();
    for _ in 0..opts.iterations {
        for ((x, v), (r, pb)) in pos.iter_mut().zip(vel.iter_mut()).zip(rngs.iter_mut().zip(&pbest)) {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (r.gen(), r.gen());
                v[d] =
                    (opts.inertia * v[d] + opts.cognitive * r1 * (pb[d] - x[d]) + opts.social * r2 * (gbest[d] - x[d]))
                        .clamp(-vmax, vmax);
                x[d] = (x[d] + v[d]).clamp(lo, hi);
            }
        }
        let s = score(&pos);
        for (i, &si) in s.iter().enumerate() {
            if si < pscore[i] {
                pscore[i] = si;
                pbest[i].clone_from(&pos[i]);
            }
        }
        (g, gscore) = {
            let (gi, gs) = argmin(&pscore);
            if gs < gscore {
                (gi, gs)
            } else {
                (g, gscore)
            }
        };
        gbest.clone_from(&pbest[g]);
    }
    gbest
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, &x)| if x < bv { (i, x) } else { (bi, bv) })
}

/// Lawson–Hanson non-negative least squares, `min ‖Ax − b‖` with `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-12 * a.norm().max(1e-300) * b.norm().max(1e-300);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let at = a.transpose();
    for _outer in 0..3 * n + 10 {
        let w = &at * (b - a * &x);
        let Some((j, wj)) = (0..n).filter(|&j| !passive[j]).map(|j| (j, w[j])).fold(
            None,
            |acc: Option<(usize, f64)>, (j, wj)| match acc {
                Some((_, bw)) if bw >= wj => acc,
                _ => Some((j, wj)),
            },
        ) else {
            break;
        };
        if wj <= tol {
            break;
        }
        passive[j] = true;
        for _inner in 0..3 * n + 10 {
            let z = solve_subset(a, b, &passive);
            if passive.iter().enumerate().all(|(i, &p)| !p || z[i] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in 0..n {
                if passive[i] && z[i] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - z[i]));
                }
            }
            for i in 0..n {
                if passive[i] {
                    x[i] += alpha * (z[i] - x[i]);
                    if x[i] <= 1e-15 * x.amax().max(1.0) {
                        x[i] = 0.0;
                        passive[i] = false;
                    }
                }
            }
        }
    }
    x
}

/// Unconstrained least squares on the passive columns, zeros elsewhere.
fn solve_subset(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let mut z = DVector::<f64>::zeros(passive.len());
    if idx.is_empty() {
        return z;
    }
    let sub = a.select_columns(&idx);
    let svd = sub.svd(true, true);
    if let Ok(s) = svd.solve(b, 1e-14 * svd.singular_values.max()) {
        for (k, &i) in idx.iter().enumerate() {
            z[i] = s[k];
        }
    }
    z
}
