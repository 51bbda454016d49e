//! Sub-cell conductors.
//!
//! A wire is a chain of E edges forced to zero. Its true radius is realized
//! by scaling the radial E edges around it (ε and σ by `m`) and the
//! circulating H faces (μ by `1/m`), with
//! `m = ln(Δ/r0)/ln(Δ/r)`, `r0` being the radius the bare chain of PEC
//! edges already behaves like (Railton et al., 2005; Taniguchi et al., 2008).
//! Inclined wires are rasterized to a staircase of unit edges
//! (Noda & Yokoyama, 2004, give `r0 ≈ 0.23Δ` for that case).

use crate::error::{param, Result};
use crate::grid::{curl_terms, Axis, Dims, MaterialMap};

/// Intrinsic radius of a bare edge chain in the staircase model, in cells.
pub const STAIRCASE_INTRINSIC_RADIUS: f64 = 0.23;
/// Intrinsic radius used by the grid-aligned model, in cells.
pub const THIN_INTRINSIC_RADIUS: f64 = 0.135;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WireModel {
    /// Grid-aligned wire with radius correction.
    Thin,
    /// Arbitrary direction, rasterized to unit edges.
    Staircase,
}

impl WireModel {
    pub fn name(self) -> &'static str {
        match self {
            WireModel::Thin => "thin",
            WireModel::Staircase => "staircase",
        }
    }

    /// Intrinsic radius in cells.
    pub fn intrinsic_radius(self) -> f64 {
        match self {
            WireModel::Thin => THIN_INTRINSIC_RADIUS,
            WireModel::Staircase => STAIRCASE_INTRINSIC_RADIUS,
        }
    }
}

/// A wire as written in a model file, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct WireSegment {
    pub model: WireModel,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub radius: f64,
    /// Marks an end that borders a source or probe gap.
    pub terminal: bool,
}

/// Lattice node index.
pub type Node = [usize; 3];

/// Unit E edge from `at` to `at + e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub axis: Axis,
    pub at: Node,
}

impl Edge {
    pub fn end(&self) -> Node {
        let mut n = self.at;
        n[self.axis.index()] += 1;
        n
    }
}

/// `ln(Δ/r0)/ln(Δ/r)`, snapped to exactly 1 when within 1e-9.
pub fn scale_factor(delta: f64, radius: f64, r0: f64) -> f64 {
    let m = (delta / r0).ln() / (delta / radius).ln();
    if (m - 1.0).abs() < 1e-9 {
        1.0
    } else {
        m
    }
}

/// Factor by which the Courant time step must shrink for wires of the
/// given `(model, radius)` to stay stable. Scaling ε by `m < 1` (or μ by
/// `1/m < 1`) speeds up waves on the affected edges; bounding the smallest
/// ε and μ scales bounds the norm of the discrete curl operator.
pub fn stability_factor(delta: f64, wires: impl IntoIterator<Item = (WireModel, f64)>) -> f64 {
    let (mut e_min, mut h_min) = (1.0f64, 1.0f64);
    for (model, r) in wires {
        if !(r > 0.0 && r < 0.5 * delta) {
            continue;
        }
        let m = scale_factor(delta, r, model.intrinsic_radius() * delta);
        e_min = e_min.min(m);
        h_min = h_min.min(1.0 / m);
    }
    (e_min * h_min).sqrt()
}

/// Unit-edge path between two nodes. Each step advances the axis whose next
/// half-step crossing of the straight segment comes first (ties: x, y, z),
/// so aligned segments give a straight run.
pub fn staircase_path(a: Node, b: Node) -> Vec<Edge> {
    let span: [usize; 3] = std::array::from_fn(|i| a[i].abs_diff(b[i]));
    let total: usize = span.iter().sum();
    let mut taken = [0usize; 3];
    let mut cur = a;
    let mut path = Vec::with_capacity(total);
    for _ in 0..total {
        let mut best: Option<(f64, usize)> = None;
        for ax in 0..3 {
            if taken[ax] == span[ax] {
                continue;
            }
            let t = (taken[ax] as f64 + 0.5) / span[ax] as f64;
            if best.is_none_or(|(bt, _)| t < bt - 1e-12) {
                best = Some((t, ax));
            }
        }
        let (_, ax) = best.expect("remaining steps");
        let axis = Axis::from_index(ax);
        let edge = if b[ax] > a[ax] {
            let e = Edge { axis, at: cur };
            cur[ax] += 1;
            e
        } else {
            cur[ax] -= 1;
            Edge { axis, at: cur }
        };
        taken[ax] += 1;
        path.push(edge);
    }
    path
}

fn check_radius(delta: f64, radius: f64) -> Result<()> {
    if !(radius > 0.0) || !(radius < 0.5 * delta) {
        return param(format!("wire radius must lie in (0, {}) for cell size {delta}, got {radius}", 0.5 * delta));
    }
    Ok(())
}

fn check_node(dims: Dims, n: Node) -> Result<()> {
    if n[0] > dims.nx || n[1] > dims.ny || n[2] > dims.nz {
        return param(format!("wire node {n:?} lies outside the grid"));
    }
    Ok(())
}

/// Embeds a wire between lattice nodes and returns its forced edges.
pub fn embed_wire(map: &mut MaterialMap, model: WireModel, a: Node, b: Node, radius: f64) -> Result<Vec<Edge>> {
    let dims = map.dims;
    check_radius(map.delta, radius)?;
    check_node(dims, a)?;
    check_node(dims, b)?;
    if a == b {
        return param("wire has zero length");
    }
    if model == WireModel::Thin {
        let differing = (0..3).filter(|&i| a[i] != b[i]).count();
        if differing != 1 {
            return param("thin wire must run along a single grid axis");
        }
    }
    let path = staircase_path(a, b);
    let m = scale_factor(map.delta, radius, model.intrinsic_radius() * map.delta);
    for e in &path {
        map.forced[e.axis.index()][dims.idx(e.at[0], e.at[1], e.at[2])] = true;
    }
    if m != 1.0 {
        for e in &path {
            scale_around(map, e, m);
        }
    }
    Ok(path)
}

/// Scales the radial E edges at both end nodes of `e` and the four H faces
/// circulating around it.
fn scale_around(map: &mut MaterialMap, e: &Edge, m: f64) {
    let dims = map.dims;
    let (b, c) = e.axis.others();
    for node in [e.at, e.end()] {
        for r in [b, c] {
            let ri = r.index();
            let mut lo = node;
            let candidates = if node[ri] > 0 {
                lo[ri] -= 1;
                [Some(node), Some(lo)]
            } else {
                [Some(node), None]
            };
            for n in candidates.into_iter().flatten() {
                if dims.e_valid(r, n) {
                    map.e_scale[ri][dims.idx(n[0], n[1], n[2])] = m;
                }
            }
        }
    }
    let ((ps, pa), (qs, qa)) = curl_terms(e.axis);
    for (src, deriv) in [(ps, pa), (qs, qa)] {
        let mut faces = vec![e.at];
        if e.at[deriv.index()] > 0 {
            let mut n = e.at;
            n[deriv.index()] -= 1;
            faces.push(n);
        }
        for n in faces {
            if dims.h_valid(src, n) {
                map.h_scale[src.index()][dims.idx(n[0], n[1], n[2])] = 1.0 / m;
            }
        }
    }
}
