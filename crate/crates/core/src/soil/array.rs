//! Four-electrode surface arrays.

use std::f64::consts::PI;

use crate::error::{param, Result};

/// Surface point, meters.
pub type Point = [f64; 2];

/// Current enters at A and leaves at B; voltage is read as `φ(M) − φ(N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElectrodeArray {
    /// A, M, N, B equally spaced by `a`.
    Wenner {
        a: f64,
    },
    /// Current dipole B–A and potential dipole M–N of length `a`, with
    /// `n·a` between A and M, all on one line.
    DipoleDipole {
        a: f64,
        n: f64,
    },
    General {
        a: Point,
        b: Point,
        m: Point,
        n: Point,
    },
}

impl ElectrodeArray {
    pub fn check(&self) -> Result<()> {
        match *self {
            ElectrodeArray::Wenner { a } if !(a > 0.0 && a.is_finite()) => {
                param(format!("Wenner spacing must be > 0, got {a}"))
            }
            ElectrodeArray::DipoleDipole { a, n } if !(a > 0.0 && a.is_finite() && n >= 1.0 && n.is_finite()) => {
                param(format!("dipole-dipole needs a > 0 and n >= 1, got a = {a}, n = {n}"))
            }
            ElectrodeArray::General { .. } => {
                let e = self.electrodes();
                for (i, p) in e.iter().enumerate() {
                    if !(p[0].is_finite() && p[1].is_finite()) {
                        return param("electrode position is not finite");
                    }
                    if e[..i].iter().any(|q| dist(*p, *q) == 0.0) {
                        return param("electrode positions must be distinct");
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Positions of A, B, M, N.
    pub fn electrodes(&self) -> [Point; 4] {
        match *self {
            ElectrodeArray::Wenner { a } => [[0.0, 0.0], [3.0 * a, 0.0], [a, 0.0], [2.0 * a, 0.0]],
            ElectrodeArray::DipoleDipole { a, n } => [[a, 0.0], [0.0, 0.0], [(n + 1.0) * a, 0.0], [(n + 2.0) * a, 0.0]],
            ElectrodeArray::General { a, b, m, n } => [a, b, m, n],
        }
    }

    /// Signed electrode-pair distances `(r, sign)` whose `Σ sign/r` is the
    /// potential difference over a unit half-space, up to `ρI/2π`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        let [a, b, m, n] = self.electrodes();
        [(dist(a, m), 1.0), (dist(b, m), -1.0), (dist(a, n), -1.0), (dist(b, n), 1.0)]
    }

    /// Geometric factor `k` with `ρ_a = k·V/I`.
    pub fn geometric_factor(&self) -> Result<f64> {
        self.check()?;
        let g: f64 = self.pairs().iter().map(|(r, s)| s / r).sum();
        if g.abs() < 1e-12 * self.pairs().iter().map(|(r, _)| 1.0 / r).sum::<f64>() {
            return param("array has no sensitivity: its geometric factor is infinite");
        }
        Ok(2.0 * PI / g)
    }
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}
