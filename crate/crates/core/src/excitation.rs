//! Waveforms, sources, and lumped elements.

use crate::error::{param, Result};
use crate::wires::Edge;

/// One term of a Heidler (2002) lightning current function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeidlerTerm {
    /// Peak-scaling current, amperes.
    pub i0: f64,
    /// Front time constant, seconds.
    pub tau1: f64,
    /// Decay time constant, seconds.
    pub tau2: f64,
    pub n: f64,
}

impl HeidlerTerm {
    pub fn check(&self) -> Result<()> {
        if !self.i0.is_finite() || !(self.tau1 > 0.0) || !(self.tau2 > 0.0) || !(self.n >= 1.0) {
            return param(format!(
                "heidler term needs finite i0, tau1 > 0, tau2 > 0, n >= 1; got ({}, {}, {}, {})",
                self.i0, self.tau1, self.tau2, self.n
            ));
        }
        Ok(())
    }

    /// Peak correction factor `exp(−(τ1/τ2)(nτ2/τ1)^(1/n))`.
    pub fn eta(&self) -> f64 {
        (-(self.tau1 / self.tau2) * (self.n * self.tau2 / self.tau1).powf(1.0 / self.n)).exp()
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let x = t / self.tau1;
        // x^n/(1 + x^n) written to stay finite for large x.
        let rise = if x <= 1.0 {
            let xn = x.powf(self.n);
            xn / (1.0 + xn)
        } else {
            1.0 / (1.0 + x.powf(-self.n))
        };
        self.i0 / self.eta() * rise * (-t / self.tau2).exp()
    }
}

/// Sum of Heidler terms at time `t`; zero for `t ≤ 0`.
pub fn heidler_eval(terms: &[HeidlerTerm], t: f64) -> f64 {
    terms.iter().map(|h| h.eval(t)).sum()
}

/// Time and value of the maximum of a Heidler sum on `(0, t_max]`, found by
/// a coarse scan followed by golden-section refinement.
pub fn heidler_peak(terms: &[HeidlerTerm], t_max: f64) -> (f64, f64) {
    let n = 4000;
    let h = t_max / n as f64;
    let (mut best_i, mut best) = (1, f64::NEG_INFINITY);
    for i in 1..=n {
        let v = heidler_eval(terms, i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = ((best_i as f64 - 1.0) * h, ((best_i + 1) as f64 * h).min(t_max));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if heidler_eval(terms, c) >= heidler_eval(terms, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let t = 0.5 * (a + b);
    let v = heidler_eval(terms, t);
    if v >= best {
        (t, v)
    } else {
        (best_i as f64 * h, best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Heidler(Vec<HeidlerTerm>),
    /// Uniformly sampled values starting at t = 0, linearly interpolated and
    /// held after the last sample.
    Sampled {
        sample_dt: f64,
        values: Vec<f64>,
    },
}

impl Waveform {
    pub fn heidler(terms: Vec<HeidlerTerm>) -> Result<Self> {
        if terms.is_empty() {
            return param("heidler waveform needs at least one term");
        }
        for t in &terms {
            t.check()?;
        }
        Ok(Waveform::Heidler(terms))
    }

    pub fn sampled(sample_dt: f64, values: Vec<f64>) -> Result<Self> {
        let w = Waveform::Sampled { sample_dt, values };
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Waveform::Heidler(terms) => terms.iter().try_for_each(HeidlerTerm::check),
            Waveform::Sampled { sample_dt, values } => {
                if !(*sample_dt > 0.0) {
                    return param(format!("sample interval must be > 0, got {sample_dt}"));
                }
                if values.is_empty() {
                    return param("sampled waveform has no samples");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return param("sampled waveform contains a non-finite value");
                }
                Ok(())
            }
        }
    }

    /// Value at `t`; zero before t = 0.
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            Waveform::Heidler(terms) => heidler_eval(terms, t),
            Waveform::Sampled { sample_dt, values } => {
                if t < 0.0 || values.is_empty() {
                    return 0.0;
                }
                let pos = t / sample_dt;
                let i = pos.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let frac = pos - i as f64;
                if frac == 0.0 {
                    values[i]
                } else {
                    values[i] + frac * (values[i + 1] - values[i])
                }
            }
        }
    }
}

/// Free-standing form of [`Waveform::sample`] that rejects empty sample sets.
pub fn waveform_sample(w: &Waveform, t: f64) -> Result<f64> {
    w.check()?;
    Ok(w.sample(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    /// Impressed current, with an optional shunt resistance.
    Current,
    /// Voltage source; ideal when the internal resistance is zero, else
    /// converted to its Norton equivalent.
    Voltage,
    /// Assigns the edge field, V/m.
    HardE,
    /// Adds to the edge field, V/m.
    SoftE,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Current => "current",
            SourceKind::Voltage => "voltage",
            SourceKind::HardE => "hard_e",
            SourceKind::SoftE => "soft_e",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "current" => SourceKind::Current,
            "voltage" => SourceKind::Voltage,
            "hard_e" => SourceKind::HardE,
            "soft_e" => SourceKind::SoftE,
            _ => return None,
        })
    }
}

/// A source placed on one grid edge. `dir` is +1 when the source points
/// along the edge axis and −1 when it points against it.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEdge {
    pub kind: SourceKind,
    pub edge: Edge,
    pub dir: f64,
    /// Internal resistance, ohms; zero means ideal.
    pub resistance: f64,
    /// Index into the scene's waveform list.
    pub waveform: usize,
}

impl SourceEdge {
    pub fn check(&self) -> Result<()> {
        if !(self.resistance >= 0.0) {
            return param(format!("internal resistance must be >= 0, got {}", self.resistance));
        }
        if matches!(self.kind, SourceKind::HardE | SourceKind::SoftE) && self.resistance != 0.0 {
            return param("field sources take no internal resistance");
        }
        Ok(())
    }

    /// Extra edge conductance from the internal resistance, S/m.
    pub fn shunt_sigma(&self, delta: f64) -> f64 {
        match self.kind {
            SourceKind::Current | SourceKind::Voltage if self.resistance > 0.0 => 1.0 / (self.resistance * delta),
            _ => 0.0,
        }
    }

    /// Whether the source is evaluated at the E time level (assigned or
    /// added after the update) rather than as a current density at the
    /// half step.
    pub fn is_field_source(&self) -> bool {
        match self.kind {
            SourceKind::HardE | SourceKind::SoftE => true,
            SourceKind::Voltage => self.resistance == 0.0,
            SourceKind::Current => false,
        }
    }

    /// Impressed current density for a waveform value, A/m².
    pub fn current_density(&self, value: f64, delta: f64) -> f64 {
        match self.kind {
            SourceKind::Current => self.dir * value / (delta * delta),
            SourceKind::Voltage => self.dir * value / (self.resistance * delta * delta),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LumpedKind {
    Resistor,
    Capacitor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumpedElement {
    pub kind: LumpedKind,
    pub edge: Edge,
    /// Ohms or farads.
    pub value: f64,
}

impl LumpedElement {
    pub fn check(&self) -> Result<()> {
        if !(self.value > 0.0) || !self.value.is_finite() {
            return param(format!("lumped element value must be > 0, got {}", self.value));
        }
        Ok(())
    }

    /// Additions `(Δε, Δσ)` to the edge medium.
    pub fn edge_terms(&self, delta: f64) -> (f64, f64) {
        match self.kind {
            LumpedKind::Resistor => (0.0, 1.0 / (self.value * delta)),
            LumpedKind::Capacitor => (self.value / delta, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig8_term() -> HeidlerTerm {
        HeidlerTerm { i0: 1.0, tau1: 3.7e-7, tau2: 1.4e-5, n: 10.0 }
    }

    #[test]
    fn heidler_endpoints() {
        let h = [fig8_term()];
        assert_eq!(heidler_eval(&h, 0.0), 0.0);
        assert_eq!(heidler_eval(&h, -1.0), 0.0);
        assert!(heidler_eval(&h, 1e-2).abs() < 1e-200);
        assert!(heidler_eval(&h, 1e9).is_finite());
    }

    #[test]
    fn heidler_eta_is_a_fraction() {
        let e = fig8_term().eta();
        assert!(e > 0.0 && e <= 1.0);
        // Closed form evaluated independently.
        let expected = (-(3.7e-7f64 / 1.4e-5) * (10.0f64 * 1.4e-5 / 3.7e-7).powf(0.1)).exp();
        assert_eq!(e, expected);
    }

    #[test]
    fn heidler_peak_matches_scan() {
        let h = [fig8_term()];
        let (tp, vp) = heidler_peak(&h, 1e-5);
        let mut best: f64 = 0.0;
        for i in 1..200_000 {
            best = best.max(heidler_eval(&h, i as f64 * 5e-11));
        }
        assert!((vp - best).abs() <= 1e-9 * best);
        assert!(tp > 3.7e-7 && tp < 2e-6);
        assert!(vp > 0.9 && vp < 1.05);
    }

    #[test]
    fn sampled_interpolation() {
        let w = Waveform::sampled(1e-8, vec![0.0, 10.0]).unwrap();
        assert!((w.sample(5e-9) - 5.0).abs() < 1e-12);
        assert_eq!(w.sample(1e-8), 10.0);
        assert_eq!(w.sample(0.0), 0.0);
        assert_eq!(w.sample(1.0), 10.0);
        let w = Waveform::sampled(1.0, vec![1.0, 4.0, -2.0]).unwrap();
        assert_eq!(w.sample(1.0), 4.0);
        assert_eq!(w.sample(2.0), -2.0);
        assert!(Waveform::sampled(1.0, vec![]).is_err());
        let empty = Waveform::Sampled { sample_dt: 1.0, values: vec![] };
        assert!(waveform_sample(&empty, 0.5).is_err());
        assert!(Waveform::sampled(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn heidler_rejects_bad_terms() {
        let mut t = fig8_term();
        t.n = 0.5;
        assert!(Waveform::heidler(vec![t]).is_err());
        assert!(Waveform::heidler(vec![]).is_err());
    }
}
