//! Yee lattice, material map and the leapfrog update kernels.
//!
//! All six field components share one padded storage shape of
//! `(nx + 1) × (ny + 1) × (nz + 1)` values with `k` contiguous. Component
//! positions in cell units:
//!
//! | component | position            | valid indices        |
//! |-----------|---------------------|----------------------|
//! | `Ex`      | `(i+½, j, k)`       | `i < nx`             |
//! | `Ey`      | `(i, j+½, k)`       | `j < ny`             |
//! | `Ez`      | `(i, j, k+½)`       | `k < nz`             |
//! | `Hx`      | `(i, j+½, k+½)`     | `j < ny`, `k < nz`   |
//! | `Hy`      | `(i+½, j, k+½)`     | `i < nx`, `k < nz`   |
//! | `Hz`      | `(i+½, j+½, k)`     | `i < nx`, `j < ny`   |
//!
//! Padding entries are never written and stay zero. Tangential electric
//! edges on the outer faces are not updated either, which makes the outer
//! wall a perfect electric conductor.

use std::ops::Range;

use rayon::prelude::*;

use crate::constants::{C0, EPS0, MU0};
use crate::error::{param, Error, Result};

/// Marker for "no dispersive medium" in [`MaterialMap::debye`].
pub const NO_DEBYE: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two remaining axes in cyclic order (`x → (y, z)`, `y → (z, x)`, `z → (x, y)`).
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

/// Cell counts of the lattice plus the derived storage strides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn cells(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
        }
    }

    /// Number of stored values per component.
    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => (self.ny + 1) * (self.nz + 1),
            Axis::Y => self.nz + 1,
            Axis::Z => 1,
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.ny + 1) + j) * (self.nz + 1) + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % (self.nz + 1);
        let rest = idx / (self.nz + 1);
        [rest / (self.ny + 1), rest % (self.ny + 1), k]
    }

    /// Index ranges of the E component along `axis` that the update touches
    /// (tangential edges on the outer wall are excluded).
    pub fn e_update_box(&self, comp: Axis) -> [Range<usize>; 3] {
        let mut b = [1..self.nx, 1..self.ny, 1..self.nz];
        b[comp.index()] = 0..self.cells(comp);
        b
    }

    /// Index ranges of the H component along `axis` that the update touches.
    pub fn h_update_box(&self, comp: Axis) -> [Range<usize>; 3] {
        let mut b = [0..self.nx, 0..self.ny, 0..self.nz];
        b[comp.index()] = 0..self.cells(comp) + 1;
        b
    }

    /// Whether `(i, j, k)` is a stored (non-padding) E edge of component `comp`.
    pub fn e_valid(&self, comp: Axis, c: [usize; 3]) -> bool {
        c[0] <= self.nx && c[1] <= self.ny && c[2] <= self.nz && c[comp.index()] < self.cells(comp)
    }

    /// Whether `(i, j, k)` is a stored H face of component `comp`.
    pub fn h_valid(&self, comp: Axis, c: [usize; 3]) -> bool {
        Axis::ALL.iter().all(|&a| if a == comp { c[a.index()] <= self.cells(a) } else { c[a.index()] < self.cells(a) })
    }
}

/// Spatial and temporal discretization of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell edge length, meters.
    pub delta: f64,
    /// Time step, seconds.
    pub dt: f64,
    pub n_steps: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize, delta: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if nx < 4 || ny < 4 || nz < 4 {
            return param(format!("grid needs at least 4 cells per axis, got {nx}x{ny}x{nz}"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return param(format!("cell size must be positive, got {delta}"));
        }
        if !(dt > 0.0) {
            return param(format!("time step must be positive, got {dt}"));
        }
        let limit = courant_dt(delta, 1.0)?;
        if dt > limit * (1.0 + 1e-12) {
            return param(format!("time step {dt:e} s exceeds the Courant limit {limit:e} s"));
        }
        Ok(GridSpec { nx, ny, nz, delta, dt, n_steps })
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.nx, self.ny, self.nz)
    }

    /// Courant number of this grid's time step.
    pub fn cfl(&self) -> f64 {
        self.dt * C0 * 3f64.sqrt() / self.delta
    }
}

/// Largest stable time step scaled by `cfl`: `cfl · Δ / (c √3)`.
pub fn courant_dt(delta: f64, cfl: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return param(format!("cell size must be positive, got {delta}"));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return param(format!("Courant number must lie in (0, 1], got {cfl}"));
    }
    Ok(cfl * delta / (C0 * 3f64.sqrt()))
}

/// The six staggered field arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub dims: Dims,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub ez: Vec<f64>,
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
    pub hz: Vec<f64>,
}

impl FieldSet {
    pub fn zeros(dims: Dims) -> Self {
        let n = dims.len();
        FieldSet {
            dims,
            ex: vec![0.0; n],
            ey: vec![0.0; n],
            ez: vec![0.0; n],
            hx: vec![0.0; n],
            hy: vec![0.0; n],
            hz: vec![0.0; n],
        }
    }

    pub fn e(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.ex,
            Axis::Y => &self.ey,
            Axis::Z => &self.ez,
        }
    }

    pub fn e_mut(&mut self, axis: Axis) -> &mut Vec<f64> {
        match axis {
            Axis::X => &mut self.ex,
            Axis::Y => &mut self.ey,
            Axis::Z => &mut self.ez,
        }
    }

    pub fn h(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.hx,
            Axis::Y => &self.hy,
            Axis::Z => &self.hz,
        }
    }

    pub fn h_mut(&mut self, axis: Axis) -> &mut Vec<f64> {
        match axis {
            Axis::X => &mut self.hx,
            Axis::Y => &mut self.hy,
            Axis::Z => &mut self.hz,
        }
    }

    pub fn all_finite(&self) -> bool {
        [&self.ex, &self.ey, &self.ez, &self.hx, &self.hy, &self.hz].iter().all(|a| a.par_iter().all(|v| v.is_finite()))
    }

    /// Discrete divergence of H for cell `(i, j, k)` times Δ (face-flux sum).
    pub fn div_h(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dims;
        (self.hx[d.idx(i + 1, j, k)] - self.hx[d.idx(i, j, k)])
            + (self.hy[d.idx(i, j + 1, k)] - self.hy[d.idx(i, j, k)])
            + (self.hz[d.idx(i, j, k + 1)] - self.hz[d.idx(i, j, k)])
    }

    /// Electric energy `½ Σ ε E² Δ³` using the painted permittivity.
    pub fn electric_energy(&self, map: &MaterialMap) -> f64 {
        let vol = map.delta.powi(3);
        let mut w = 0.0;
        for a in Axis::ALL {
            let e = self.e(a);
            let eps = &map.eps[a.index()];
            w += e.iter().zip(eps).map(|(v, p)| 0.5 * p * v * v).sum::<f64>();
        }
        w * vol
    }
}

/// Magnetic energy `½ Σ μ H_a · H_b Δ³`; with `H_a = H^{n−½}` and
/// `H_b = H^{n+½}` this is the magnetic part of the energy the Yee scheme
/// conserves exactly in lossless media.
pub fn magnetic_energy(a: &FieldSet, b: &FieldSet, map: &MaterialMap) -> f64 {
    let vol = map.delta.powi(3);
    let mut w = 0.0;
    for ax in Axis::ALL {
        let (ha, hb) = (a.h(ax), b.h(ax));
        let mu = &map.mu[ax.index()];
        w += ha.iter().zip(hb).zip(mu).map(|((x, y), m)| 0.5 * m * x * y).sum::<f64>();
    }
    w * vol
}

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn new(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut lo = a;
        let mut hi = b;
        for d in 0..3 {
            lo[d] = a[d].min(b[d]);
            hi[d] = a[d].max(b[d]);
        }
        Aabb { lo, hi }
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|d| self.hi[d] <= self.lo[d])
    }
}

/// Per-edge and per-face material description of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub dims: Dims,
    pub delta: f64,
    /// Permittivity per E edge, F/m (for dispersive edges this is ε∞·ε0).
    pub eps: [Vec<f64>; 3],
    /// Conductivity per E edge, S/m (σ0 for dispersive edges).
    pub sigma: [Vec<f64>; 3],
    /// Index into the run's Debye media, or [`NO_DEBYE`].
    pub debye: [Vec<u16>; 3],
    /// Permeability per H face, H/m.
    pub mu: [Vec<f64>; 3],
    /// Thin-wire multiplier applied to `eps` and `sigma` when compiling.
    pub e_scale: [Vec<f64>; 3],
    /// Thin-wire multiplier applied to `mu` when compiling.
    pub h_scale: [Vec<f64>; 3],
    /// E edges held at zero (wire conductors).
    pub forced: [Vec<bool>; 3],
}

impl MaterialMap {
    /// Vacuum everywhere.
    pub fn vacuum(dims: Dims, delta: f64) -> Self {
        let n = dims.len();
        let arr = |v: f64| [vec![v; n], vec![v; n], vec![v; n]];
        MaterialMap {
            dims,
            delta,
            eps: arr(EPS0),
            sigma: arr(0.0),
            debye: [vec![NO_DEBYE; n], vec![NO_DEBYE; n], vec![NO_DEBYE; n]],
            mu: arr(MU0),
            e_scale: arr(1.0),
            h_scale: arr(1.0),
            forced: [vec![false; n], vec![false; n], vec![false; n]],
        }
    }

    /// Position of E edge `c` of component `comp`, meters.
    pub fn e_position(&self, comp: Axis, c: [usize; 3]) -> [f64; 3] {
        let mut p = [c[0] as f64, c[1] as f64, c[2] as f64];
        p[comp.index()] += 0.5;
        p.map(|v| v * self.delta)
    }

    /// Assigns a medium to every E edge whose midpoint lies in `bounds`
    /// (closed box). Degenerate boxes paint nothing.
    pub fn paint_block(&mut self, bounds: &Aabb, eps_r: f64, sigma: f64, debye: Option<u16>) -> Result<()> {
        if !(eps_r >= 1.0) {
            return param(format!("relative permittivity must be >= 1, got {eps_r}"));
        }
        if !(sigma >= 0.0) {
            return param(format!("conductivity must be >= 0, got {sigma}"));
        }
        if bounds.is_degenerate() {
            return Ok(());
        }
        let tol = self.delta * 1e-6;
        let dims = self.dims;
        let delta = self.delta;
        let tag = debye.unwrap_or(NO_DEBYE);
        for comp in Axis::ALL {
            // Index range along each axis whose edge coordinate falls in the box.
            let mut ranges: [Range<usize>; 3] = [0..0, 0..0, 0..0];
            for a in Axis::ALL {
                let off = if a == comp { 0.5 } else { 0.0 };
                let count = dims.cells(a) + if a == comp { 0 } else { 1 };
                let lo = ((bounds.lo[a.index()] - tol) / delta - off).ceil().max(0.0) as usize;
                let hi = ((bounds.hi[a.index()] + tol) / delta - off).floor();
                let hi = if hi < 0.0 { 0 } else { (hi as usize + 1).min(count) };
                ranges[a.index()] = lo..hi.max(lo);
            }
            let c = comp.index();
            for i in ranges[0].clone() {
                for j in ranges[1].clone() {
                    for k in ranges[2].clone() {
                        let idx = dims.idx(i, j, k);
                        self.eps[c][idx] = eps_r * EPS0;
                        self.sigma[c][idx] = sigma;
                        self.debye[c][idx] = tag;
                    }
                }
            }
        }
        Ok(())
    }

    /// Copies ε and σ of the nearest interior edge into every edge lying in
    /// an absorbing layer `npml` cells deep; dispersion is not continued.
    pub fn continue_into_pml(&mut self, npml: usize) {
        if npml == 0 {
            return;
        }
        let dims = self.dims;
        for comp in Axis::ALL {
            let c = comp.index();
            // Interior index range per axis for this component.
            let interior: Vec<(usize, usize)> = Axis::ALL
                .iter()
                .map(|&a| {
                    let n = dims.cells(a);
                    if a == comp {
                        (npml, n - npml - 1)
                    } else {
                        (npml, n - npml)
                    }
                })
                .collect();
            let comp_max = dims.cells(comp);
            for i in 0..=dims.nx {
                for j in 0..=dims.ny {
                    for k in 0..=dims.nz {
                        let idx3 = [i, j, k];
                        if idx3[c] >= comp_max {
                            continue;
                        }
                        let mut src = idx3;
                        let mut inside = true;
                        for a in 0..3 {
                            let (lo, hi) = interior[a];
                            if src[a] < lo {
                                src[a] = lo;
                                inside = false;
                            } else if src[a] > hi {
                                src[a] = hi;
                                inside = false;
                            }
                        }
                        if inside {
                            continue;
                        }
                        let from = dims.idx(src[0], src[1], src[2]);
                        let to = dims.idx(i, j, k);
                        self.eps[c][to] = self.eps[c][from];
                        self.sigma[c][to] = self.sigma[c][from];
                        self.debye[c][to] = NO_DEBYE;
                    }
                }
            }
        }
    }

    /// Checks the painted-media invariants (ε ≥ ε0, σ ≥ 0, μ > 0).
    pub fn check(&self) -> Result<()> {
        for a in 0..3 {
            if self.eps[a].iter().any(|&e| !(e >= EPS0 * (1.0 - 1e-12))) {
                return Err(Error::Validation("permittivity below vacuum".into()));
            }
            if self.sigma[a].iter().any(|&s| !(s >= 0.0)) {
                return Err(Error::Validation("negative conductivity".into()));
            }
            if self.mu[a].iter().any(|&m| !(m > 0.0)) {
                return Err(Error::Validation("non-positive permeability".into()));
            }
        }
        Ok(())
    }
}

/// Semi-implicit E-update coefficients for an edge with permittivity `eps`,
/// conductivity `sigma`, and summed Debye pole gain `beta_sum` (see
/// [`crate::debye`]). Returns `(ca, cb)` with
/// `E⁺ = ca·E + cb·(∇×H − J)`.
pub fn e_coefficients(eps: f64, sigma: f64, beta_sum: f64, dt: f64) -> (f64, f64) {
    let a = eps / dt + 0.5 * beta_sum;
    let den = a + 0.5 * sigma;
    ((a - 0.5 * sigma) / den, 1.0 / den)
}

/// Compiled per-edge/per-face coefficients consumed by the kernels.
#[derive(Debug, Clone)]
pub struct UpdateCoefficients {
    pub dims: Dims,
    pub delta: f64,
    pub dt: f64,
    pub ca: [Vec<f64>; 3],
    /// `cb / Δ`, so the kernels work on raw differences.
    pub cb: [Vec<f64>; 3],
    /// `dt / (μ Δ)`.
    pub ch: [Vec<f64>; 3],
    /// `1/κ` per axis at integer nodes (E derivatives are taken there).
    pub ikappa_e: [Vec<f64>; 3],
    /// `1/κ` per axis at half-integer nodes.
    pub ikappa_h: [Vec<f64>; 3],
    // Row-expanded copies of the x and y tables so every kernel row can
    // zip plain slices: row_x[i] repeated nz+1 times, likewise for y.
    row_e: [Vec<f64>; 2],
    row_h: [Vec<f64>; 2],
}

impl UpdateCoefficients {
    /// Compiles a material map. `beta_sum` gives the Debye pole gain of a
    /// medium index; `extra` lists lumped additions `(axis, idx, Δε, Δσ)`.
    pub fn compile(
        map: &MaterialMap,
        dt: f64,
        beta_sum: &dyn Fn(u16) -> f64,
        extra: &[(Axis, usize, f64, f64)],
    ) -> Self {
        let dims = map.dims;
        let n = dims.len();
        let mut ca = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut cb = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut ch = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut add_eps = [vec![0.0; 0], vec![0.0; 0], vec![0.0; 0]];
        let mut add_sig = [vec![0.0; 0], vec![0.0; 0], vec![0.0; 0]];
        for &(ax, idx, de, ds) in extra {
            let a = ax.index();
            if add_eps[a].is_empty() {
                add_eps[a] = vec![0.0; n];
                add_sig[a] = vec![0.0; n];
            }
            add_eps[a][idx] += de;
            add_sig[a][idx] += ds;
        }
        for comp in Axis::ALL {
            let c = comp.index();
            let bx = dims.e_update_box(comp);
            for i in bx[0].clone() {
                for j in bx[1].clone() {
                    for k in bx[2].clone() {
                        let idx = dims.idx(i, j, k);
                        if map.forced[c][idx] {
                            continue;
                        }
                        let s = map.e_scale[c][idx];
                        let mut eps = map.eps[c][idx] * s;
                        let mut sig = map.sigma[c][idx] * s;
                        if !add_eps[c].is_empty() {
                            eps += add_eps[c][idx];
                            sig += add_sig[c][idx];
                        }
                        let tag = map.debye[c][idx];
                        let beta = if tag == NO_DEBYE { 0.0 } else { beta_sum(tag) };
                        let (a, b) = e_coefficients(eps, sig, beta, dt);
                        ca[c][idx] = a;
                        cb[c][idx] = b / map.delta;
                    }
                }
            }
            let bx = dims.h_update_box(comp);
            for i in bx[0].clone() {
                for j in bx[1].clone() {
                    for k in bx[2].clone() {
                        let idx = dims.idx(i, j, k);
                        let mu = map.mu[c][idx] * map.h_scale[c][idx];
                        ch[c][idx] = dt / (mu * map.delta);
                    }
                }
            }
        }
        let ones = |a: Axis| vec![1.0; dims.cells(a) + 1];
        let mut coeffs = UpdateCoefficients {
            dims,
            delta: map.delta,
            dt,
            ca,
            cb,
            ch,
            ikappa_e: [ones(Axis::X), ones(Axis::Y), ones(Axis::Z)],
            ikappa_h: [ones(Axis::X), ones(Axis::Y), ones(Axis::Z)],
            row_e: [Vec::new(), Vec::new()],
            row_h: [Vec::new(), Vec::new()],
        };
        coeffs.refresh_rows();
        coeffs
    }

    /// Installs stretched-coordinate `1/κ` profiles.
    pub fn set_kappa(&mut self, ikappa_e: [Vec<f64>; 3], ikappa_h: [Vec<f64>; 3]) {
        self.ikappa_e = ikappa_e;
        self.ikappa_h = ikappa_h;
        self.refresh_rows();
    }

    fn refresh_rows(&mut self) {
        let nk = self.dims.nz + 1;
        let expand = |v: &[f64]| v.iter().flat_map(|&x| std::iter::repeat_n(x, nk)).collect();
        self.row_e = [expand(&self.ikappa_e[0]), expand(&self.ikappa_e[1])];
        self.row_h = [expand(&self.ikappa_h[0]), expand(&self.ikappa_h[1])];
    }

    /// Slice of `1/κ` factors for a kernel row `(i, j, k0..k1)`.
    #[inline]
    fn kappa_row(&self, h: bool, axis: Axis, i: usize, j: usize, k: Range<usize>) -> &[f64] {
        let nk = self.dims.nz + 1;
        let (rows, z) = if h { (&self.row_h, &self.ikappa_h[2]) } else { (&self.row_e, &self.ikappa_e[2]) };
        match axis {
            Axis::X => &rows[0][i * nk + k.start..i * nk + k.end],
            Axis::Y => &rows[1][j * nk + k.start..j * nk + k.end],
            Axis::Z => &z[k],
        }
    }
}

/// One curl term of a component update: `sign · ∂(src)/∂axis`.
struct CurlTerm<'a> {
    src: &'a [f64],
    axis: Axis,
}

/// Source components of the two curl terms for each component:
/// E_a uses `+∂H_p/∂p_axis − ∂H_q/∂q_axis`, same pattern for H with E sources.
pub(crate) fn curl_terms(comp: Axis) -> ((Axis, Axis), (Axis, Axis)) {
    // (source component, derivative axis)
    match comp {
        Axis::X => ((Axis::Z, Axis::Y), (Axis::Y, Axis::Z)),
        Axis::Y => ((Axis::X, Axis::Z), (Axis::Z, Axis::X)),
        Axis::Z => ((Axis::Y, Axis::X), (Axis::X, Axis::Y)),
    }
}

/// Curl terms for the H update: H_a += ch(+∂E_p/∂p_axis − ∂E_q/∂q_axis).
pub(crate) fn curl_terms_h(comp: Axis) -> ((Axis, Axis), (Axis, Axis)) {
    match comp {
        Axis::X => ((Axis::Y, Axis::Z), (Axis::Z, Axis::Y)),
        Axis::Y => ((Axis::Z, Axis::X), (Axis::X, Axis::Z)),
        Axis::Z => ((Axis::X, Axis::Y), (Axis::Y, Axis::X)),
    }
}

fn update_component<'a>(
    out: &mut [f64],
    coeffs: &UpdateCoefficients,
    comp: Axis,
    p: CurlTerm<'a>,
    q: CurlTerm<'a>,
    h: bool,
) {
    let dims = coeffs.dims;
    let si = dims.stride(Axis::X);
    let sj = dims.stride(Axis::Y);
    let c = comp.index();
    let (bx, ca, cb) = if h {
        (dims.h_update_box(comp), None, &coeffs.ch[c])
    } else {
        (dims.e_update_box(comp), Some(&coeffs.ca[c]), &coeffs.cb[c])
    };
    let kr = bx[2].clone();
    out.par_chunks_mut(si).enumerate().skip(bx[0].start).take(bx[0].len()).for_each(|(i, plane)| {
        for j in bx[1].clone() {
            let base = i * si + j * sj;
            let row = &mut plane[j * sj + kr.start..j * sj + kr.end];
            let b0 = base + kr.start;
            let b1 = base + kr.end;
            let cbr = &cb[b0..b1];
            let fp = coeffs.kappa_row(h, p.axis, i, j, kr.clone());
            let fq = coeffs.kappa_row(h, q.axis, i, j, kr.clone());
            // E uses backward differences f[n] - f[n - s], H forward f[n + s] - f[n].
            let window = |src: &'a [f64], axis: Axis| -> (&'a [f64], &'a [f64]) {
                let s = dims.stride(axis);
                if h {
                    (&src[b0 + s..b1 + s], &src[b0..b1])
                } else {
                    (&src[b0..b1], &src[b0 - s..b1 - s])
                }
            };
            let (ph, pl) = window(p.src, p.axis);
            let (qh, ql) = window(q.src, q.axis);
            match ca {
                Some(ca) => {
                    let car = &ca[b0..b1];
                    for n in 0..row.len() {
                        let curl = (ph[n] - pl[n]) * fp[n] - (qh[n] - ql[n]) * fq[n];
                        row[n] = car[n] * row[n] + cbr[n] * curl;
                    }
                }
                None => {
                    for n in 0..row.len() {
                        let curl = (ph[n] - pl[n]) * fp[n] - (qh[n] - ql[n]) * fq[n];
                        row[n] += cbr[n] * curl;
                    }
                }
            }
        }
    });
}

/// Advances every E component from step n to n+1 using H at n+½.
/// Stretched-coordinate corrections, dispersion and sources are applied by
/// the caller afterwards.
pub fn step_e(fields: &mut FieldSet, coeffs: &UpdateCoefficients) {
    let FieldSet { ex, ey, ez, hx, hy, hz, .. } = fields;
    let h = |a: Axis| -> &[f64] {
        match a {
            Axis::X => hx,
            Axis::Y => hy,
            Axis::Z => hz,
        }
    };
    for (comp, out) in [(Axis::X, ex), (Axis::Y, ey), (Axis::Z, ez)] {
        let ((ps, pa), (qs, qa)) = curl_terms(comp);
        update_component(
            out,
            coeffs,
            comp,
            CurlTerm { src: h(ps), axis: pa },
            CurlTerm { src: h(qs), axis: qa },
            false,
        );
    }
}

/// Advances every H component from n−½ to n+½ using E at n.
pub fn step_h(fields: &mut FieldSet, coeffs: &UpdateCoefficients) {
    let FieldSet { ex, ey, ez, hx, hy, hz, .. } = fields;
    let e = |a: Axis| -> &[f64] {
        match a {
            Axis::X => ex,
            Axis::Y => ey,
            Axis::Z => ez,
        }
    };
    for (comp, out) in [(Axis::X, hx), (Axis::Y, hy), (Axis::Z, hz)] {
        let ((ps, pa), (qs, qa)) = curl_terms_h(comp);
        update_component(out, coeffs, comp, CurlTerm { src: e(ps), axis: pa }, CurlTerm { src: e(qs), axis: qa }, true);
    }
}

/// Discrete curl of H at E edge `(comp, i, j, k)` times Δ, without
/// stretching: the Ampère-loop circulation around the edge.
pub fn h_circulation(fields: &FieldSet, comp: Axis, c: [usize; 3]) -> f64 {
    let d = fields.dims;
    let idx = d.idx(c[0], c[1], c[2]);
    let ((ps, pa), (qs, qa)) = curl_terms(comp);
    let p = fields.h(ps);
    let q = fields.h(qs);
    (p[idx] - p[idx - d.stride(pa)]) - (q[idx] - q[idx - d.stride(qa)])
}
