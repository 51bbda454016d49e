//! Insulation breakdown on a voltage record.
//!
//! Two criteria, both integrated explicitly at the sampling rate:
//! the disruptive-effect integral `DE(t) = Σ max(|v| − v0, 0)^k dt`
//! (Shindo & Suzuki, 1985) against a critical value, and the
//! leader-progression law of Pigini et al. (1989),
//! `dℓ/dt = k_l |v| (|v|/(g − ℓ) − E0)`, with breakdown once the leader
//! bridges the gap.

use crate::error::{param, Result};

/// Leader velocity constant, m²/(V²·s) (Pigini et al., 1989).
pub const LEADER_K: f64 = 1.3e-6;
/// Leader inception gradient, V/m (Pigini et al., 1989).
pub const LEADER_E0: f64 = 520e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakdownModel {
    DisruptiveEffect {
        /// Onset voltage, V.
        v0: f64,
        k: f64,
        /// Critical integral, V^k·s.
        de_crit: f64,
    },
    LeaderProgression {
        /// Gap length, m.
        gap: f64,
        /// V/m.
        e0: f64,
        /// m²/(V²·s).
        k_l: f64,
    },
}

impl BreakdownModel {
    /// Leader progression with the default constants.
    pub fn leader(gap: f64) -> Self {
        BreakdownModel::LeaderProgression { gap, e0: LEADER_E0, k_l: LEADER_K }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            BreakdownModel::DisruptiveEffect { v0, k, de_crit } => {
                if !(v0 >= 0.0 && v0.is_finite())
                    || !(k >= 1.0 && k.is_finite())
                    || !(de_crit > 0.0 && de_crit.is_finite())
                {
                    return param(format!(
                        "disruptive effect needs v0 >= 0, k >= 1, de_crit > 0; got v0 = {v0}, k = {k}, de_crit = {de_crit}"
                    ));
                }
            }
            BreakdownModel::LeaderProgression { gap, e0, k_l } => {
                if !(gap > 0.0 && gap.is_finite()) || !(e0 > 0.0 && e0.is_finite()) || !(k_l > 0.0 && k_l.is_finite()) {
                    return param(format!(
                        "leader progression needs gap, e0, k_l > 0; got gap = {gap}, e0 = {e0}, k_l = {k_l}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Time of breakdown for samples `v[n]` at `t = n·dt`, or `None`. The
/// returned time is always one of the sample times.
pub fn evaluate_breakdown(v: &[f64], dt: f64, model: &BreakdownModel) -> Result<Option<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return param(format!("time step must be > 0, got {dt}"));
    }
    if v.is_empty() {
        return param("voltage series is empty");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return param("voltage series contains non-finite values");
    }
    model.check()?;
    let at = |n: usize| n as f64 * dt;
    match *model {
        BreakdownModel::DisruptiveEffect { v0, k, de_crit } => {
            let mut de = 0.0;
            for (n, x) in v.iter().enumerate() {
                let over = x.abs() - v0;
                if over > 0.0 {
                    de += over.powf(k) * dt;
                }
                if de >= de_crit {
                    return Ok(Some(at(n)));
                }
            }
            Ok(None)
        }
        BreakdownModel::LeaderProgression { gap, e0, k_l } => {
            let mut len = 0.0;
            for (n, x) in v.iter().enumerate() {
                if len >= gap {
                    return Ok(Some(at(n)));
                }
                let u = x.abs();
                let rate = k_l * u * (u / (gap - len) - e0);
                len += dt * rate.max(0.0);
            }
            Ok(None)
        }
    }
}
