//! Convolutional PML on all six faces of the lattice.
//!
//! Inside a layer the spatial derivative `∂/∂u` is replaced by
//! `(1/κ)∂/∂u + ψ`, where `ψ` is a one-pole recursive convolution
//! `ψ⁺ = b ψ + c ∂F/∂u` (Roden & Gedney, 2000). Profiles are graded by
//! normalized depth `d ∈ [0, 1]` from the interior interface to the wall.

use std::ops::Range;

use rayon::prelude::*;

use crate::constants::{EPS0, ETA0};
use crate::error::{param, Error, Result};
use crate::grid::{curl_terms, curl_terms_h, Axis, Dims, FieldSet, UpdateCoefficients};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmlParams {
    /// Layer thickness, meters.
    pub depth_m: f64,
    pub kappa_max: f64,
    /// Multiplier on the polynomial-optimal σ_max.
    pub sigma_factor: f64,
    /// Complex-frequency shift at the interior interface, S/m.
    pub alpha_max: f64,
    pub poly_order: f64,
    pub alpha_order: f64,
}

impl CpmlParams {
    /// Checks the parameter invariants and returns the layer depth in cells.
    pub fn cells(&self, delta: f64) -> Result<usize> {
        if !(self.kappa_max >= 1.0) {
            return param(format!("kappa_max must be >= 1, got {}", self.kappa_max));
        }
        if !(self.sigma_factor > 0.0) {
            return param(format!("sigma factor must be > 0, got {}", self.sigma_factor));
        }
        if !(self.alpha_max >= 0.0) {
            return param(format!("alpha_max must be >= 0, got {}", self.alpha_max));
        }
        if !(self.poly_order >= 1.0) {
            return param(format!("grading order must be >= 1, got {}", self.poly_order));
        }
        if !(self.alpha_order >= 0.0) {
            return param(format!("alpha order must be >= 0, got {}", self.alpha_order));
        }
        let ratio = self.depth_m / delta;
        let n = ratio.round();
        if !ratio.is_finite() || (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Validation(format!(
                "absorbing layer depth {} m is not a multiple of the cell size {} m",
                self.depth_m, delta
            )));
        }
        if n < 4.0 {
            return Err(Error::Validation(format!("absorbing layer must be at least 4 cells deep, got {n}")));
        }
        Ok(n as usize)
    }

    /// σ_max = sigma_factor · 0.8 (m + 1) / (η0 Δ).
    pub fn sigma_max(&self, delta: f64) -> f64 {
        self.sigma_factor * 0.8 * (self.poly_order + 1.0) / (ETA0 * delta)
    }
}

/// Graded parameters and recursion coefficients at one depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub sigma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
}

impl ProfilePoint {
    pub const VACUUM: ProfilePoint = ProfilePoint { sigma: 0.0, kappa: 1.0, alpha: 0.0, b: 0.0, c: 0.0 };
}

/// Profile at normalized depth `d` (0 = interior interface, 1 = wall).
pub fn grade(params: &CpmlParams, delta: f64, dt: f64, d: f64) -> ProfilePoint {
    let d = d.clamp(0.0, 1.0);
    let m = params.poly_order;
    let sigma = params.sigma_max(delta) * d.powf(m);
    let kappa = 1.0 + (params.kappa_max - 1.0) * d.powf(m);
    let alpha = params.alpha_max * (1.0 - d).powf(params.alpha_order);
    let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
    let den = sigma * kappa + kappa * kappa * alpha;
    let c = if sigma == 0.0 || den == 0.0 { 0.0 } else { sigma / den * (b - 1.0) };
    ProfilePoint { sigma, kappa, alpha, b, c }
}

/// Normalized depth of lattice coordinate `pos` (cells) on an axis of `n`
/// cells with `npml`-cell layers at both ends; 0 in the interior.
pub fn depth(pos: f64, n: usize, npml: usize) -> f64 {
    let w = npml as f64;
    let hi = (n - npml) as f64;
    if pos < w {
        (w - pos) / w
    } else if pos > hi {
        (pos - hi) / w
    } else {
        0.0
    }
}

/// Per-axis coefficient tables at integer (E) and half-integer (H) nodes.
#[derive(Debug, Clone)]
pub struct CpmlTables {
    pub npml: usize,
    pub e: [Vec<ProfilePoint>; 3],
    pub h: [Vec<ProfilePoint>; 3],
}

impl CpmlTables {
    pub fn new(params: &CpmlParams, dims: Dims, delta: f64, dt: f64) -> Result<Self> {
        let npml = params.cells(delta)?;
        for a in Axis::ALL {
            if dims.cells(a) < 2 * npml + 2 {
                return Err(Error::Validation(format!(
                    "absorbing layers of {npml} cells leave no interior along {a:?}"
                )));
            }
        }
        let table = |a: Axis, half: f64| -> Vec<ProfilePoint> {
            let n = dims.cells(a);
            (0..=n)
                .map(|i| {
                    let d = depth(i as f64 + half, n, npml);
                    if d > 0.0 {
                        grade(params, delta, dt, d)
                    } else {
                        ProfilePoint::VACUUM
                    }
                })
                .collect()
        };
        Ok(CpmlTables {
            npml,
            e: [table(Axis::X, 0.0), table(Axis::Y, 0.0), table(Axis::Z, 0.0)],
            h: [table(Axis::X, 0.5), table(Axis::Y, 0.5), table(Axis::Z, 0.5)],
        })
    }

    /// `1/κ` tables in the layout expected by [`UpdateCoefficients::set_kappa`].
    pub fn inverse_kappa(&self) -> ([Vec<f64>; 3], [Vec<f64>; 3]) {
        let inv = |t: &Vec<ProfilePoint>| t.iter().map(|p| 1.0 / p.kappa).collect::<Vec<_>>();
        ([inv(&self.e[0]), inv(&self.e[1]), inv(&self.e[2])], [inv(&self.h[0]), inv(&self.h[1]), inv(&self.h[2])])
    }
}

/// One ψ accumulator block: a sub-box of a component's update range lying
/// in the layer on one side of one axis.
#[derive(Debug, Clone)]
struct PsiBlock {
    comp: Axis,
    src: Axis,
    axis: Axis,
    sign: f64,
    bx: [Range<usize>; 3],
    data: Vec<f64>,
}

/// Convolution memory for all E and H terms.
#[derive(Debug, Clone)]
pub struct CpmlState {
    e_blocks: Vec<PsiBlock>,
    h_blocks: Vec<PsiBlock>,
}

fn blocks_for(dims: Dims, npml: usize, h: bool) -> Vec<PsiBlock> {
    let mut out = Vec::new();
    for comp in Axis::ALL {
        let (bx, terms) =
            if h { (dims.h_update_box(comp), curl_terms_h(comp)) } else { (dims.e_update_box(comp), curl_terms(comp)) };
        for ((src, axis), sign) in [(terms.0, 1.0), (terms.1, -1.0)] {
            let a = axis.index();
            let n = dims.cells(axis);
            // Indices along `axis` with non-zero depth: E at integer
            // positions i, H at i + ½.
            let lo = 0..npml;
            let hi = if h { n - npml..n } else { n - npml + 1..n + 1 };
            for r in [lo, hi] {
                let start = r.start.max(bx[a].start);
                let end = r.end.min(bx[a].end);
                if start >= end {
                    continue;
                }
                let mut b = bx.clone();
                b[a] = start..end;
                let len = b.iter().map(|r| r.len()).product();
                out.push(PsiBlock { comp, src, axis, sign, bx: b, data: vec![0.0; len] });
            }
        }
    }
    out
}

impl CpmlState {
    pub fn new(dims: Dims, tables: &CpmlTables) -> Self {
        CpmlState { e_blocks: blocks_for(dims, tables.npml, false), h_blocks: blocks_for(dims, tables.npml, true) }
    }

    /// Largest absolute accumulator value (diagnostics).
    pub fn max_abs(&self) -> f64 {
        self.e_blocks.iter().chain(&self.h_blocks).flat_map(|b| b.data.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Number of stored accumulators.
    pub fn len(&self) -> usize {
        self.e_blocks.iter().chain(&self.h_blocks).map(|b| b.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Updates ψ for every E term and adds `cb·ψ` to the E fields. Call
    /// right after [`crate::grid::step_e`].
    pub fn apply_e(&mut self, fields: &mut FieldSet, coeffs: &UpdateCoefficients, tables: &CpmlTables) {
        let dims = fields.dims;
        for blk in &mut self.e_blocks {
            let (out, src) = split_e(fields, blk.comp, blk.src);
            apply_block(blk, out, src, &coeffs.cb[blk.comp.index()], &tables.e[blk.axis.index()], dims, false);
        }
    }

    /// Same as [`CpmlState::apply_e`] for H; call after [`crate::grid::step_h`].
    pub fn apply_h(&mut self, fields: &mut FieldSet, coeffs: &UpdateCoefficients, tables: &CpmlTables) {
        let dims = fields.dims;
        for blk in &mut self.h_blocks {
            let (out, src) = split_h(fields, blk.comp, blk.src);
            apply_block(blk, out, src, &coeffs.ch[blk.comp.index()], &tables.h[blk.axis.index()], dims, true);
        }
    }
}

fn split_e(f: &mut FieldSet, comp: Axis, src: Axis) -> (&mut [f64], &[f64]) {
    let FieldSet { ex, ey, ez, hx, hy, hz, .. } = f;
    let out: &mut [f64] = match comp {
        Axis::X => ex,
        Axis::Y => ey,
        Axis::Z => ez,
    };
    let s: &[f64] = match src {
        Axis::X => hx,
        Axis::Y => hy,
        Axis::Z => hz,
    };
    (out, s)
}

fn split_h(f: &mut FieldSet, comp: Axis, src: Axis) -> (&mut [f64], &[f64]) {
    let FieldSet { ex, ey, ez, hx, hy, hz, .. } = f;
    let out: &mut [f64] = match comp {
        Axis::X => hx,
        Axis::Y => hy,
        Axis::Z => hz,
    };
    let s: &[f64] = match src {
        Axis::X => ex,
        Axis::Y => ey,
        Axis::Z => ez,
    };
    (out, s)
}

fn apply_block(
    blk: &mut PsiBlock,
    out: &mut [f64],
    src: &[f64],
    coef: &[f64],
    table: &[ProfilePoint],
    dims: Dims,
    h: bool,
) {
    let si = dims.stride(Axis::X);
    let sj = dims.stride(Axis::Y);
    let s = dims.stride(blk.axis);
    let [bi, bj, bk] = blk.bx.clone();
    let plane = bj.len() * bk.len();
    let axis = blk.axis;
    let sign = blk.sign;
    out.par_chunks_mut(si).enumerate().skip(bi.start).take(bi.len()).zip(blk.data.par_chunks_mut(plane)).for_each(
        |((i, out_plane), psi_plane)| {
            for (jj, j) in bj.clone().enumerate() {
                let psi_row = &mut psi_plane[jj * bk.len()..(jj + 1) * bk.len()];
                for (kk, k) in bk.clone().enumerate() {
                    let idx = i * si + j * sj + k;
                    let diff = if h { src[idx + s] - src[idx] } else { src[idx] - src[idx - s] };
                    let p = match axis {
                        Axis::X => &table[i],
                        Axis::Y => &table[j],
                        Axis::Z => &table[k],
                    };
                    let psi = p.b * psi_row[kk] + p.c * diff;
                    psi_row[kk] = psi;
                    out_plane[j * sj + k] += coef[idx] * sign * psi;
                }
            }
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{step_e, step_h, MaterialMap};

    fn params() -> CpmlParams {
        CpmlParams {
            depth_m: 1.25,
            kappa_max: 1.0,
            sigma_factor: 1.0,
            alpha_max: 3e-6,
            poly_order: 3.0,
            alpha_order: 1.0,
        }
    }

    #[test]
    fn depth_must_be_cell_multiple() {
        assert_eq!(params().cells(0.125).unwrap(), 10);
        assert!(params().cells(0.3).is_err());
        let mut p = params();
        p.depth_m = 0.375;
        assert!(p.cells(0.125).is_err(), "3 cells is too thin");
        p.kappa_max = 0.5;
        assert!(p.cells(0.125).is_err());
    }

    #[test]
    fn grading_endpoints() {
        let p = params();
        let dt = 2e-10;
        let inner = grade(&p, 0.125, dt, 0.0);
        assert_eq!(inner.sigma, 0.0);
        assert_eq!(inner.c, 0.0);
        assert_eq!(inner.kappa, 1.0);
        let wall = grade(&p, 0.125, dt, 1.0);
        let sigma_opt = 0.8 * 4.0 / (ETA0 * 0.125);
        assert!((wall.sigma - sigma_opt).abs() < 1e-12 * sigma_opt);
        assert_eq!(wall.alpha, 0.0);
        // κ = 1 throughout when kappa_max = 1.
        for d in [0.1, 0.5, 0.9] {
            assert_eq!(grade(&p, 0.125, dt, d).kappa, 1.0);
        }
        let mut q = p;
        q.kappa_max = 5.0;
        q.sigma_factor = 2.0;
        let w = grade(&q, 0.125, dt, 1.0);
        assert!((w.kappa - 5.0).abs() < 1e-12);
        assert!((w.sigma - 2.0 * sigma_opt).abs() < 1e-12 * sigma_opt);
        let half = grade(&q, 0.125, dt, 0.5);
        assert!((half.sigma - 2.0 * sigma_opt * 0.125).abs() < 1e-12 * sigma_opt);
    }

    #[test]
    fn psi_decays_geometrically_with_zero_fields() {
        let dims = Dims::new(12, 12, 12);
        let delta = 0.1;
        let dt = crate::grid::courant_dt(delta, 0.9).unwrap();
        let mut p = params();
        p.depth_m = 0.4;
        let tables = CpmlTables::new(&p, dims, delta, dt).unwrap();
        let map = MaterialMap::vacuum(dims, delta);
        let coeffs = UpdateCoefficients::compile(&map, dt, &|_| 0.0, &[]);
        let mut state = CpmlState::new(dims, &tables);
        // Seed one accumulator and check it decays by b per step.
        let blk = &mut state.e_blocks[0];
        blk.data[0] = 1.0;
        let ax = blk.axis;
        let pos = match ax {
            Axis::X => blk.bx[0].start,
            Axis::Y => blk.bx[1].start,
            Axis::Z => blk.bx[2].start,
        };
        let b = tables.e[ax.index()][pos].b;
        let mut fields = FieldSet::zeros(dims);
        for n in 1..=5 {
            state.apply_e(&mut fields, &coeffs, &tables);
            let v = state.e_blocks[0].data[0];
            assert!((v - b.powi(n)).abs() < 1e-15, "step {n}: {v}");
        }
    }

    #[test]
    fn zero_domain_stays_zero() {
        let dims = Dims::new(12, 12, 12);
        let delta = 0.1;
        let dt = crate::grid::courant_dt(delta, 0.99).unwrap();
        let mut p = params();
        p.depth_m = 0.4;
        p.kappa_max = 3.0;
        let tables = CpmlTables::new(&p, dims, delta, dt).unwrap();
        let map = MaterialMap::vacuum(dims, delta);
        let mut coeffs = UpdateCoefficients::compile(&map, dt, &|_| 0.0, &[]);
        let (ke, kh) = tables.inverse_kappa();
        coeffs.set_kappa(ke, kh);
        let mut state = CpmlState::new(dims, &tables);
        let mut f = FieldSet::zeros(dims);
        for _ in 0..20 {
            step_h(&mut f, &coeffs);
            state.apply_h(&mut f, &coeffs, &tables);
            step_e(&mut f, &coeffs);
            state.apply_e(&mut f, &coeffs, &tables);
        }
        assert_eq!(f, FieldSet::zeros(dims));
        assert_eq!(state.max_abs(), 0.0);
    }

    #[test]
    fn degenerate_layer_matches_plain_update() {
        // σ = α = 0 and κ = 1: the layer is vacuum.
        let dims = Dims::new(12, 12, 12);
        let delta = 0.1;
        let dt = crate::grid::courant_dt(delta, 0.99).unwrap();
        let mut p = params();
        p.depth_m = 0.4;
        p.sigma_factor = 1e-300;
        p.alpha_max = 0.0;
        let tables = CpmlTables::new(&p, dims, delta, dt).unwrap();
        let map = MaterialMap::vacuum(dims, delta);
        let coeffs = UpdateCoefficients::compile(&map, dt, &|_| 0.0, &[]);
        let mut state = CpmlState::new(dims, &tables);
        let mut a = FieldSet::zeros(dims);
        a.ez[dims.idx(6, 6, 6)] = 1.0;
        let mut b = a.clone();
        for _ in 0..30 {
            step_h(&mut a, &coeffs);
            state.apply_h(&mut a, &coeffs, &tables);
            step_e(&mut a, &coeffs);
            state.apply_e(&mut a, &coeffs, &tables);
            step_h(&mut b, &coeffs);
            step_e(&mut b, &coeffs);
        }
        let diff = a.ez.iter().zip(&b.ez).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-12, "{diff}");
    }
}
