//! Time stepping.
//!
//! A [`Scene`] is a fully resolved problem on the lattice: painted media,
//! embedded wires, and sources and probes on grid edges. A [`Simulation`]
//! compiles it and runs the leapfrog loop. The state between steps is
//! `E^n` and `H^(n−½)`.

use crate::cpml::{CpmlParams, CpmlState, CpmlTables};
use crate::debye::{AdeState, DebyeMedium};
use crate::error::{param, Error, Result};
use crate::excitation::{LumpedElement, SourceEdge, SourceKind, Waveform};
use crate::grid::{step_e, step_h, Axis, Dims, FieldSet, GridSpec, MaterialMap, UpdateCoefficients, NO_DEBYE};
use crate::probes::{ProbeRecord, ProbeSpec};
use crate::wires::Edge;

/// Non-finite fields are looked for at every record and at this interval.
const FINITE_CHECK_INTERVAL: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: GridSpec,
    pub map: MaterialMap,
    /// Dispersive media, indexed by the tags stored in the map.
    pub media: Vec<DebyeMedium>,
    pub cpml: Option<CpmlParams>,
    pub waveforms: Vec<Waveform>,
    pub sources: Vec<SourceEdge>,
    pub lumped: Vec<LumpedElement>,
    pub probes: Vec<ProbeSpec>,
    /// Steps between records.
    pub record_every: usize,
}

impl Scene {
    /// A vacuum scene with no boundary layers, sources, or probes.
    pub fn new(grid: GridSpec) -> Self {
        Scene {
            map: MaterialMap::vacuum(grid.dims(), grid.delta),
            grid,
            media: Vec::new(),
            cpml: None,
            waveforms: Vec::new(),
            sources: Vec::new(),
            lumped: Vec::new(),
            probes: Vec::new(),
            record_every: 1,
        }
    }

    pub fn dims(&self) -> Dims {
        self.grid.dims()
    }

    /// Layer depth in cells, zero without absorbing layers.
    pub fn pml_cells(&self) -> Result<usize> {
        match &self.cpml {
            Some(p) => p.cells(self.grid.delta),
            None => Ok(0),
        }
    }

    /// Whether an edge lies strictly inside the region not covered by
    /// absorbing layers and off the outer wall.
    pub fn edge_is_interior(&self, e: &Edge) -> Result<bool> {
        let npml = self.pml_cells()?;
        let dims = self.dims();
        let lo = npml.max(1);
        Ok(Axis::ALL.iter().all(|&a| {
            let n = dims.cells(a);
            let v = e.at[a.index()];
            if a == e.axis {
                v >= npml && v < n - npml
            } else {
                v >= lo && v <= n - lo
            }
        }))
    }

    pub fn check(&self) -> Result<()> {
        let dims = self.dims();
        if self.map.dims != dims {
            return param("material map does not match the grid");
        }
        if self.record_every == 0 {
            return param("record interval must be at least one step");
        }
        self.map.check()?;
        for m in &self.media {
            m.check()?;
        }
        for tags in &self.map.debye {
            if tags.iter().any(|&t| t != NO_DEBYE && t as usize >= self.media.len()) {
                return param("material map refers to an undefined dispersive medium");
            }
        }
        for w in &self.waveforms {
            w.check()?;
        }
        for s in &self.sources {
            s.check()?;
            if s.waveform >= self.waveforms.len() {
                return param("source refers to an undefined waveform");
            }
            self.check_edge(&s.edge, "source")?;
            if self.map.forced[s.edge.axis.index()][dims.idx(s.edge.at[0], s.edge.at[1], s.edge.at[2])] {
                return Err(Error::Validation("source lies on a wire edge".into()));
            }
        }
        for l in &self.lumped {
            l.check()?;
            self.check_edge(&l.edge, "lumped element")?;
        }
        for p in &self.probes {
            if p.path.is_empty() {
                return param(format!("probe {} has an empty path", p.name));
            }
            for e in &p.path {
                self.check_edge(&e.edge, "probe")?;
            }
        }
        Ok(())
    }

    fn check_edge(&self, e: &Edge, what: &str) -> Result<()> {
        if !self.edge_is_interior(e)? {
            return Err(Error::Validation(format!(
                "{what} edge at {:?} lies in an absorbing layer or on the outer wall",
                e.at
            )));
        }
        Ok(())
    }
}

/// A source compiled to a storage index.
#[derive(Debug, Clone)]
struct Drive {
    src: SourceEdge,
    comp: Axis,
    idx: usize,
    /// Undivided update coefficient of the edge.
    cb: f64,
}

pub struct Simulation {
    scene: Scene,
    coeffs: UpdateCoefficients,
    fields: FieldSet,
    cpml: Option<(CpmlTables, CpmlState)>,
    ade: AdeState,
    drives: Vec<Drive>,
    step: usize,
    pool: rayon::ThreadPool,
}

impl Simulation {
    /// Compiles a scene. `threads = 0` uses every available core.
    pub fn new(mut scene: Scene, threads: usize) -> Result<Self> {
        scene.check()?;
        let grid = scene.grid;
        let dims = grid.dims();
        let npml = scene.pml_cells()?;
        if npml > 0 {
            scene.map.continue_into_pml(npml);
        }
        let mut extra: Vec<(Axis, usize, f64, f64)> = Vec::new();
        let delta = grid.delta;
        for l in &scene.lumped {
            let (de, ds) = l.edge_terms(delta);
            extra.push((l.edge.axis, edge_index(dims, &l.edge), de, ds));
        }
        for s in &scene.sources {
            let ds = s.shunt_sigma(delta);
            if ds > 0.0 {
                extra.push((s.edge.axis, edge_index(dims, &s.edge), 0.0, ds));
            }
        }
        let betas: Vec<f64> = scene.media.iter().map(|m| m.beta_sum(grid.dt)).collect();
        let mut coeffs = UpdateCoefficients::compile(&scene.map, grid.dt, &|t| betas[t as usize], &extra);
        let cpml = match &scene.cpml {
            Some(p) => {
                let tables = CpmlTables::new(p, dims, delta, grid.dt)?;
                let (ke, kh) = tables.inverse_kappa();
                coeffs.set_kappa(ke, kh);
                let state = CpmlState::new(dims, &tables);
                Some((tables, state))
            }
            None => None,
        };
        let ade = AdeState::new(&scene.map, &coeffs, &scene.media, grid.dt);
        let drives = scene
            .sources
            .iter()
            .map(|s| {
                let idx = edge_index(dims, &s.edge);
                Drive { src: s.clone(), comp: s.edge.axis, idx, cb: coeffs.cb[s.edge.axis.index()][idx] * delta }
            })
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Computation(format!("cannot start worker threads: {e}")))?;
        Ok(Simulation { fields: FieldSet::zeros(dims), scene, coeffs, cpml, ade, drives, step: 0, pool })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn fields(&self) -> &FieldSet {
        &self.fields
    }

    /// Direct field access, e.g. to set initial conditions.
    pub fn fields_mut(&mut self) -> &mut FieldSet {
        &mut self.fields
    }

    pub fn coefficients(&self) -> &UpdateCoefficients {
        &self.coeffs
    }

    pub fn ade(&self) -> &AdeState {
        &self.ade
    }

    /// Number of steps taken so far.
    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scene.grid.dt
    }

    /// Advances `E^n, H^(n−½)` to `E^(n+1), H^(n+½)`.
    pub fn step(&mut self) {
        let Simulation { coeffs, fields, cpml, ade, pool, .. } = self;
        pool.install(|| {
            step_h(fields, coeffs);
            if let Some((tables, state)) = cpml.as_mut() {
                state.apply_h(fields, coeffs, tables);
            }
            ade.save(fields);
            step_e(fields, coeffs);
            if let Some((tables, state)) = cpml.as_mut() {
                state.apply_e(fields, coeffs, tables);
            }
            ade.apply(fields);
        });
        self.apply_sources();
        self.step += 1;
    }

    fn apply_sources(&mut self) {
        let dt = self.scene.grid.dt;
        let delta = self.scene.grid.delta;
        let t_half = (self.step as f64 + 0.5) * dt;
        let t_full = (self.step as f64 + 1.0) * dt;
        for d in &self.drives {
            let w = &self.scene.waveforms[d.src.waveform];
            let e = &mut self.fields.e_mut(d.comp)[d.idx];
            match d.src.kind {
                SourceKind::HardE => *e = d.src.dir * w.sample(t_full),
                SourceKind::SoftE => *e += d.src.dir * w.sample(t_full),
                SourceKind::Voltage if d.src.resistance == 0.0 => *e = -d.src.dir * w.sample(t_full) / delta,
                SourceKind::Current | SourceKind::Voltage => {
                    *e -= d.cb * d.src.current_density(w.sample(t_half), delta);
                }
            }
        }
    }

    /// Probe values at the current step.
    pub fn record(&self) -> ProbeRecord {
        let delta = self.scene.grid.delta;
        ProbeRecord {
            step: self.step,
            time: self.time(),
            values: self.scene.probes.iter().map(|p| p.measure(&self.fields, delta)).collect(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.fields.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { step: self.step })
        }
    }

    /// Runs to `grid.n_steps`, handing every record to `on_record`. Records
    /// are taken at step 0 and every `record_every` steps after it.
    pub fn run(&mut self, mut on_record: impl FnMut(&ProbeRecord) -> Result<()>) -> Result<()> {
        let total = self.scene.grid.n_steps;
        let every = self.scene.record_every;
        loop {
            let n = self.step;
            if n.is_multiple_of(every) {
                self.check_finite()?;
                on_record(&self.record())?;
            } else if n.is_multiple_of(FINITE_CHECK_INTERVAL) {
                self.check_finite()?;
            }
            if n >= total {
                return Ok(());
            }
            self.step();
        }
    }
}

fn edge_index(dims: Dims, e: &Edge) -> usize {
    dims.idx(e.at[0], e.at[1], e.at[2])
}
