//! Problem description in meters, and its resolution onto the lattice.

use std::collections::{HashMap, HashSet};

use crate::cpml::CpmlParams;
use crate::debye::{DebyeMedium, DebyePole, MAX_POLES};
use crate::engine::Scene;
use crate::error::{Error, Result};
use crate::excitation::{LumpedElement, LumpedKind, SourceEdge, SourceKind, Waveform};
use crate::grid::{courant_dt, Aabb, Axis, GridSpec};
use crate::probes::{DirectedEdge, ProbeKind, ProbeSpec};
use crate::wires::{embed_wire, stability_factor, staircase_path, Edge, Node, WireModel, WireSegment};

/// Default fraction of the Courant limit.
pub const DEFAULT_CFL: f64 = 0.99;

/// Relative tolerance, in cells, for snapping coordinates to grid lines.
const SNAP_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Volume {
    /// Extent along x, y, z, meters.
    pub size: [f64; 3],
    /// Cell size, meters.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Relative permittivity; ε∞ for dispersive blocks.
    pub eps_r: f64,
    /// Conductivity, S/m; σ0 for dispersive blocks.
    pub sigma: f64,
    pub debye: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebyeDef {
    pub name: String,
    pub poles: Vec<DebyePole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDef {
    pub kind: SourceKind,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub resistance: f64,
    pub waveform: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDef {
    pub kind: ProbeKind,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformDef {
    pub name: String,
    pub waveform: Waveform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumpedDef {
    pub kind: LumpedKind,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub volume: Volume,
    /// Simulated time, seconds.
    pub calctime: f64,
    /// Interval between probe records, seconds.
    pub output_interval: f64,
    pub cpml: Option<CpmlParams>,
    pub blocks: Vec<Block>,
    pub debye: Vec<DebyeDef>,
    pub wires: Vec<WireSegment>,
    pub sources: Vec<SourceDef>,
    pub probes: Vec<ProbeDef>,
    pub waveforms: Vec<WaveformDef>,
    pub lumped: Vec<LumpedDef>,
    pub cfl: f64,
}

/// The model element an issue refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Item {
    Volume,
    Timing,
    Cpml,
    Block(usize),
    Debye(usize),
    Wire(usize),
    Source(usize),
    Probe(usize),
    Waveform(usize),
    Lumped(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub item: Item,
    pub message: String,
}

/// Time step, run length, and record spacing derived from a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
}

impl Timing {
    /// Number of records a full run produces.
    pub fn n_records(&self) -> usize {
        self.n_steps / self.record_every + 1
    }
}

/// Nearest grid line of `v` (meters) if within tolerance and inside
/// `0..=n`.
pub fn snap(v: f64, delta: f64, n: usize) -> Option<usize> {
    let r = v / delta;
    let k = r.round();
    if !r.is_finite() || (r - k).abs() > SNAP_TOLERANCE || k < 0.0 || k > n as f64 {
        None
    } else {
        Some(k as usize)
    }
}

impl Model {
    /// An empty model over `volume` with no absorbing layers.
    pub fn new(volume: Volume, calctime: f64, output_interval: f64) -> Self {
        Model {
            volume,
            calctime,
            output_interval,
            cpml: None,
            blocks: Vec::new(),
            debye: Vec::new(),
            wires: Vec::new(),
            sources: Vec::new(),
            probes: Vec::new(),
            waveforms: Vec::new(),
            lumped: Vec::new(),
            cfl: DEFAULT_CFL,
        }
    }

    /// Cell counts, if the volume divides into whole cells.
    pub fn cells(&self) -> Option<[usize; 3]> {
        let d = self.volume.delta;
        if !(d > 0.0) {
            return None;
        }
        let mut n = [0; 3];
        for (n, size) in n.iter_mut().zip(self.volume.size) {
            let r = size / d;
            if !(r > 0.0) || (r - r.round()).abs() > SNAP_TOLERANCE {
                return None;
            }
            *n = r.round() as usize;
        }
        Some(n)
    }

    /// Largest step not above the Courant bound that divides the output
    /// interval, so records fall exactly on steps. The bound is tightened
    /// by [`stability_factor`] for wires thinner or thicker than the
    /// intrinsic radius.
    pub fn timing(&self) -> Result<Timing> {
        let shrink = stability_factor(self.volume.delta, self.wires.iter().map(|w| (w.model, w.radius)));
        let dt_max = courant_dt(self.volume.delta, self.cfl)? * shrink;
        if !(self.output_interval > 0.0) || !(self.calctime > 0.0) {
            return Err(Error::Validation("calctime and output interval must be > 0".into()));
        }
        let record_every = ((self.output_interval / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = self.output_interval / record_every as f64;
        let n_steps = ((self.calctime / dt) * (1.0 - 1e-9)).ceil() as usize;
        Ok(Timing { dt, n_steps, record_every })
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let n = self.cells().ok_or_else(|| Error::Validation("volume does not divide into whole cells".into()))?;
        let t = self.timing()?;
        GridSpec::new(n[0], n[1], n[2], self.volume.delta, t.dt, t.n_steps)
    }

    /// Every violated invariant, tagged with the element it concerns.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut push = |item: Item, message: String| out.push(Issue { item, message });
        let delta = self.volume.delta;
        let Some(n) = self.cells() else {
            push(Item::Volume, format!("volume {:?} does not divide into whole cells of {delta} m", self.volume.size));
            return out;
        };
        if n.iter().any(|&c| c < 4) {
            push(Item::Volume, "volume must span at least 4 cells along every axis".into());
            return out;
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            push(Item::Timing, format!("CFL number must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.calctime > 0.0) {
            push(Item::Timing, format!("calctime must be > 0, got {}", self.calctime));
        }
        if !(self.output_interval > 0.0) {
            push(Item::Timing, format!("output interval must be > 0, got {}", self.output_interval));
        }
        if let Some(p) = &self.cpml {
            match p.cells(delta) {
                Ok(np) => {
                    if n.iter().any(|&c| c < 2 * np + 2) {
                        push(Item::Cpml, format!("absorbing layers of {np} cells leave no interior"));
                    }
                }
                Err(e) => push(Item::Cpml, e.message()),
            }
        }

        let mut debye_names = HashSet::new();
        for (i, d) in self.debye.iter().enumerate() {
            if !debye_names.insert(d.name.as_str()) {
                push(Item::Debye(i), format!("debye medium '{}' is defined more than once", d.name));
            }
            if d.poles.is_empty() || d.poles.len() > MAX_POLES {
                push(Item::Debye(i), format!("debye medium '{}' needs 1 to {MAX_POLES} poles", d.name));
            }
            if let Err(e) = DebyeMedium::new(d.name.clone(), 1.0, 0.0, d.poles.clone()) {
                push(Item::Debye(i), e.message());
            }
        }
        let mut wave_names = HashSet::new();
        for (i, w) in self.waveforms.iter().enumerate() {
            if !wave_names.insert(w.name.as_str()) {
                push(Item::Waveform(i), format!("function '{}' is defined more than once", w.name));
            }
            if let Err(e) = w.waveform.check() {
                push(Item::Waveform(i), e.message());
            }
        }

        let inside = |p: &[f64; 3]| {
            (0..3).all(|a| p[a] >= -delta * SNAP_TOLERANCE && p[a] <= self.volume.size[a] + delta * SNAP_TOLERANCE)
        };
        for (i, b) in self.blocks.iter().enumerate() {
            if !inside(&b.lo) || !inside(&b.hi) {
                push(Item::Block(i), "block extends outside the volume".into());
            }
            if !(b.eps_r >= 1.0) {
                push(Item::Block(i), format!("relative permittivity must be >= 1, got {}", b.eps_r));
            }
            if !(b.sigma >= 0.0) {
                push(Item::Block(i), format!("conductivity must be >= 0, got {}", b.sigma));
            }
            if let Some(name) = &b.debye {
                if !debye_names.contains(name.as_str()) {
                    push(Item::Block(i), format!("undefined debye medium '{name}'"));
                }
            }
        }

        let node = |p: &[f64; 3]| -> Option<Node> {
            Some([snap(p[0], delta, n[0])?, snap(p[1], delta, n[1])?, snap(p[2], delta, n[2])?])
        };
        let mut wire_nodes: Vec<Option<(Node, Node)>> = Vec::new();
        for (i, w) in self.wires.iter().enumerate() {
            let (a, b) = (node(&w.start), node(&w.end));
            let (Some(a), Some(b)) = (a, b) else {
                push(Item::Wire(i), "wire end lies off the grid or outside the volume".into());
                wire_nodes.push(None);
                continue;
            };
            wire_nodes.push(Some((a, b)));
            if let Err(e) = check_wire(w, a, b, delta) {
                push(Item::Wire(i), e.message());
            }
        }

        let np = self.cpml.as_ref().and_then(|p| p.cells(delta).ok()).unwrap_or(0);
        let interior = |e: &Edge| edge_interior(e, n, np);
        let gap_issue = |s: Node, e: Node| -> Option<String> {
            let touching: Vec<usize> = wire_nodes
                .iter()
                .enumerate()
                .filter_map(|(i, w)| w.filter(|(a, b)| [s, e].iter().any(|g| g == a || g == b)).map(|_| i))
                .collect();
            if touching.is_empty() {
                return None;
            }
            let flagged = touching
                .iter()
                .any(|&i| self.wires[i].terminal && wire_nodes[i].is_some_and(|(_, b)| b == s || b == e));
            (!flagged).then(|| "gap adjoins wire ends but none of them is flagged as a terminal".to_string())
        };

        for (i, s) in self.sources.iter().enumerate() {
            if !wave_names.contains(s.waveform.as_str()) {
                push(Item::Source(i), format!("undefined function '{}'", s.waveform));
            }
            if !(s.resistance >= 0.0) {
                push(Item::Source(i), format!("internal resistance must be >= 0, got {}", s.resistance));
            }
            if matches!(s.kind, SourceKind::HardE | SourceKind::SoftE) && s.resistance != 0.0 {
                push(Item::Source(i), "field sources take no internal resistance".into());
            }
            match single_edge(node(&s.start), node(&s.end)) {
                Ok((e, _)) => {
                    if !interior(&e) {
                        push(Item::Source(i), "source lies in an absorbing layer or on the outer wall".into());
                    }
                    if let Some(m) = gap_issue(node(&s.start).unwrap(), node(&s.end).unwrap()) {
                        push(Item::Source(i), m);
                    }
                }
                Err(m) => push(Item::Source(i), format!("source {m}")),
            }
        }
        let mut probe_names = HashSet::new();
        for (i, p) in self.probes.iter().enumerate() {
            let name = self.probe_name(i);
            if !probe_names.insert(name.clone()) {
                push(Item::Probe(i), format!("probe name '{name}' is used more than once"));
            }
            let (a, b) = (node(&p.start), node(&p.end));
            let (Some(a), Some(b)) = (a, b) else {
                push(Item::Probe(i), "probe end lies off the grid or outside the volume".into());
                continue;
            };
            let path = match p.kind {
                ProbeKind::Current => match single_edge(Some(a), Some(b)) {
                    Ok((e, _)) => vec![e],
                    Err(m) => {
                        push(Item::Probe(i), format!("current probe {m}"));
                        continue;
                    }
                },
                ProbeKind::Voltage => {
                    if a == b || (0..3).filter(|&x| a[x] != b[x]).count() != 1 {
                        push(Item::Probe(i), "voltage path must be a straight run of grid edges".into());
                        continue;
                    }
                    staircase_path(a, b)
                }
            };
            if !path.iter().all(interior) {
                push(Item::Probe(i), "probe lies in an absorbing layer or on the outer wall".into());
            }
            if let Some(m) = gap_issue(a, b) {
                push(Item::Probe(i), m);
            }
        }
        for (i, l) in self.lumped.iter().enumerate() {
            if !(l.value > 0.0) {
                push(Item::Lumped(i), format!("lumped element value must be > 0, got {}", l.value));
            }
            match single_edge(node(&l.start), node(&l.end)) {
                Ok((e, _)) if !interior(&e) => {
                    push(Item::Lumped(i), "lumped element lies in an absorbing layer or on the outer wall".into())
                }
                Ok(_) => {}
                Err(m) => push(Item::Lumped(i), format!("lumped element {m}")),
            }
        }
        out
    }

    /// Name of probe `i`: the given one, or kind plus the running index of
    /// that kind.
    pub fn probe_name(&self, i: usize) -> String {
        let p = &self.probes[i];
        if let Some(n) = &p.name {
            return n.clone();
        }
        let k = self.probes[..i].iter().filter(|q| q.kind == p.kind).count();
        format!("{}{k}", p.kind.name())
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues.into_iter().map(|i| i.message).collect::<Vec<_>>().join("; ")))
        }
    }

    /// Resolves the model onto the lattice.
    pub fn build_scene(&self) -> Result<Scene> {
        self.validate()?;
        let grid = self.grid_spec()?;
        let timing = self.timing()?;
        let dims = grid.dims();
        let delta = grid.delta;
        let n = [dims.nx, dims.ny, dims.nz];
        let node = |p: &[f64; 3]| -> Node { [0, 1, 2].map(|a| snap(p[a], delta, n[a]).expect("validated")) };
        let mut scene = Scene::new(grid);
        scene.cpml = self.cpml;
        scene.record_every = timing.record_every;

        for b in &self.blocks {
            let tag = match &b.debye {
                Some(name) => {
                    let def = self.debye.iter().find(|d| &d.name == name).expect("validated");
                    let medium = DebyeMedium::new(name.clone(), b.eps_r, b.sigma, def.poles.clone())?;
                    let tag = u16::try_from(scene.media.len())
                        .ok()
                        .filter(|&t| t < crate::grid::NO_DEBYE)
                        .ok_or_else(|| Error::Validation("too many dispersive blocks".into()))?;
                    scene.media.push(medium);
                    Some(tag)
                }
                None => None,
            };
            scene.map.paint_block(&Aabb::new(b.lo, b.hi), b.eps_r, b.sigma, tag)?;
        }
        for w in &self.wires {
            embed_wire(&mut scene.map, w.model, node(&w.start), node(&w.end), w.radius)?;
        }

        let wave_index: HashMap<&str, usize> =
            self.waveforms.iter().enumerate().map(|(i, w)| (w.name.as_str(), i)).collect();
        scene.waveforms = self.waveforms.iter().map(|w| w.waveform.clone()).collect();
        for s in &self.sources {
            let (edge, dir) = single_edge(Some(node(&s.start)), Some(node(&s.end))).map_err(Error::Validation)?;
            scene.sources.push(SourceEdge {
                kind: s.kind,
                edge,
                dir,
                resistance: s.resistance,
                waveform: wave_index[s.waveform.as_str()],
            });
        }
        for l in &self.lumped {
            let (edge, _) = single_edge(Some(node(&l.start)), Some(node(&l.end))).map_err(Error::Validation)?;
            scene.lumped.push(LumpedElement { kind: l.kind, edge, value: l.value });
        }
        for (i, p) in self.probes.iter().enumerate() {
            let (a, b) = (node(&p.start), node(&p.end));
            let path = staircase_path(a, b)
                .into_iter()
                .map(|edge| {
                    let ax = edge.axis.index();
                    DirectedEdge { edge, dir: if b[ax] > a[ax] { 1.0 } else { -1.0 } }
                })
                .collect();
            scene.probes.push(ProbeSpec { kind: p.kind, name: self.probe_name(i), path });
        }
        scene.check()?;
        Ok(scene)
    }
}

fn check_wire(w: &WireSegment, a: Node, b: Node, delta: f64) -> Result<()> {
    if !(w.radius > 0.0) || !(w.radius < 0.5 * delta) {
        return Err(Error::Validation(format!("wire radius must lie in (0, {}) m, got {}", 0.5 * delta, w.radius)));
    }
    if a == b {
        return Err(Error::Validation("wire has zero length".into()));
    }
    if w.model == WireModel::Thin && (0..3).filter(|&i| a[i] != b[i]).count() != 1 {
        return Err(Error::Validation("thin wire must run along a single grid axis".into()));
    }
    Ok(())
}

/// The unit edge joining two nodes, with +1 when `a → b` runs along the
/// axis.
fn single_edge(a: Option<Node>, b: Option<Node>) -> std::result::Result<(Edge, f64), String> {
    let (Some(a), Some(b)) = (a, b) else {
        return Err("end lies off the grid or outside the volume".into());
    };
    let diff: Vec<usize> = (0..3).filter(|&i| a[i] != b[i]).collect();
    if diff.len() != 1 || a[diff[0]].abs_diff(b[diff[0]]) != 1 {
        return Err("must span exactly one grid edge".into());
    }
    let ax = diff[0];
    let axis = Axis::from_index(ax);
    Ok(if b[ax] > a[ax] { (Edge { axis, at: a }, 1.0) } else { (Edge { axis, at: b }, -1.0) })
}

fn edge_interior(e: &Edge, n: [usize; 3], npml: usize) -> bool {
    let lo = npml.max(1);
    (0..3).all(|a| {
        let v = e.at[a];
        if a == e.axis.index() {
            v >= npml && v < n[a] - npml
        } else {
            v >= lo && v <= n[a] - lo
        }
    })
}
