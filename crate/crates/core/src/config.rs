//! JSON run configuration.
//!
//! Every physical quantity carries its unit in the field name. Unknown fields are
//! rejected so that a misspelt unit suffix is an error rather than a silent default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MIN_POINTS;
use crate::occupancy::{OccupancyMode, OccupancySpec, DEFAULT_TRANSITION_THRESHOLD};
use crate::potential::{PotentialSpec, WellSegment};

fn default_mass() -> f64 {
    0.067
}
fn default_eps_r() -> f64 {
    12.0
}
fn default_tau0() -> f64 {
    1.0
}
fn default_taup() -> f64 {
    1e6
}
fn default_subbands() -> usize {
    40
}
fn default_points() -> usize {
    1024
}
fn default_threshold() -> f64 {
    DEFAULT_TRANSITION_THRESHOLD
}
fn default_pitch() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub cavity_length_nm: f64,
    #[serde(default = "default_mass")]
    pub effective_mass: f64,
    #[serde(default = "default_eps_r")]
    pub eps_r: f64,
    #[serde(default, rename = "barrier_meV")]
    pub barrier_mev: f64,
    #[serde(default)]
    pub wells: Vec<WellSegment>,
}

impl StructureSpec {
    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec {
            barrier_mev: self.barrier_mev,
            wells: self.wells.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    OmegaC,
    Tau0,
    NQw,
    NSubbands,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::OmegaC => "omega_c",
            SweepVariable::Tau0 => "tau0",
            SweepVariable::NQw => "n_qw",
            SweepVariable::NSubbands => "n_subbands",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// A list of sample points, given either explicitly or as a range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
    #[serde(default)]
    pub scale: Scale,
}

impl AxisSpec {
    pub fn values(values: Vec<f64>) -> Self {
        Self {
            values: Some(values),
            ..Self::default()
        }
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self {
            values: None,
            range: Some(RangeSpec { start, stop, count }),
            scale: Scale::Linear,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let Some(r) = self.range else {
            return Vec::new();
        };
        if r.count == 1 {
            return vec![r.start];
        }
        let step = |k: usize| k as f64 / (r.count - 1) as f64;
        match self.scale {
            Scale::Linear => (0..r.count).map(|k| r.start + (r.stop - r.start) * step(k)).collect(),
            Scale::Log => {
                let (a, b) = (r.start.ln(), r.stop.ln());
                (0..r.count).map(|k| (a + (b - a) * step(k)).exp()).collect()
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        match (&self.values, &self.range) {
            (Some(_), Some(_)) => return Err(Error::config(path, "give either `values` or `range`, not both")),
            (None, None) => return Err(Error::config(path, "missing `values` or `range`")),
            (Some(v), None) => {
                if v.is_empty() {
                    return Err(Error::config(format!("{path}.values"), "must not be empty"));
                }
                for (i, x) in v.iter().enumerate() {
                    if !(x.is_finite() && *x > 0.0) {
                        return Err(Error::config(format!("{path}.values[{i}]"), "must be positive and finite"));
                    }
                }
            }
            (None, Some(r)) => {
                if r.count == 0 {
                    return Err(Error::config(format!("{path}.range.count"), "must be at least 1"));
                }
                for (name, v) in [("start", r.start), ("stop", r.stop)] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::config(format!("{path}.range.{name}"), "must be positive and finite"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    #[serde(flatten)]
    pub axis: AxisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// Transition used for the two-subband overlay: `"auto"` or an explicit `[l, j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TransitionChoice {
    Auto(Auto),
    Explicit([usize; 2]),
}

impl Default for TransitionChoice {
    fn default() -> Self {
        TransitionChoice::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiwellSpec {
    /// Spacer length per well.
    #[serde(default = "default_pitch")]
    pub pitch_nm: f64,
    /// Grid points per cell; defaults to the single-structure density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_cell: Option<usize>,
}

impl Default for MultiwellSpec {
    fn default() -> Self {
        Self {
            pitch_nm: default_pitch(),
            points_per_cell: None,
        }
    }
}

fn yes() -> bool {
    true
}

/// Switches for the two interaction channels. Turning both off makes `G` equal `G_NI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interactions {
    #[serde(default = "yes")]
    pub light_matter: bool,
    #[serde(default = "yes")]
    pub depolarization: bool,
}

impl Default for Interactions {
    fn default() -> Self {
        Self {
            light_matter: true,
            depolarization: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub structure: StructureSpec,
    pub occupancy: OccupancySpec,
    #[serde(default = "default_tau0")]
    pub tau0_ps: f64,
    #[serde(default = "default_taup")]
    pub taup_ps: f64,
    #[serde(default = "default_subbands")]
    pub n_subbands: usize,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default = "default_threshold")]
    pub transition_threshold: f64,
    pub sweep: SweepSpec,
    /// Cavity axis, in units of the reference transition, for sweeps whose outer
    /// variable is not `omega_c`. `n_subbands` sweeps use its first point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<AxisSpec>,
    /// `[l, j]` whose frequency sets the unit of the cavity axis; defaults to `[2, 1]`,
    /// or `[n_qw + 1, 1]` in multiwell runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_transition: Option<[usize; 2]>,
    #[serde(default)]
    pub dominant_transition: TransitionChoice,
    #[serde(default)]
    pub multiwell: MultiwellSpec,
    #[serde(default)]
    pub interactions: Interactions,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn reference(&self) -> (usize, usize) {
        self.reference_transition.map(|[l, j]| (l, j)).unwrap_or((2, 1))
    }

    /// The cavity axis: the sweep itself for `omega_c` sweeps, otherwise `cavity`.
    pub fn cavity_points(&self) -> Vec<f64> {
        match (self.sweep.variable, &self.cavity) {
            (SweepVariable::OmegaC, _) => self.sweep.axis.points(),
            (_, Some(c)) => c.points(),
            (_, None) => vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be positive and finite, got {v}")))
            }
        };
        let s = &self.structure;
        positive("structure.cavity_length_nm", s.cavity_length_nm)?;
        positive("structure.effective_mass", s.effective_mass)?;
        positive("structure.eps_r", s.eps_r)?;
        if !s.barrier_mev.is_finite() {
            return Err(Error::config("structure.barrier_meV", "must be finite"));
        }
        for (i, w) in s.wells.iter().enumerate() {
            positive(&format!("structure.wells[{i}].width_nm"), w.width_nm)?;
            if !w.depth_mev.is_finite() {
                return Err(Error::config(format!("structure.wells[{i}].V0_meV"), "must be finite"));
            }
            if !w.center_nm.is_finite() {
                return Err(Error::config(format!("structure.wells[{i}].center_nm"), "must be finite"));
            }
        }
        self.occupancy
            .validate()
            .map_err(|e| Error::config("occupancy", e.to_string()))?;
        if let OccupancyMode::ArealDensity { n_e_per_cm2 } = self.occupancy.mode {
            positive("occupancy.n_e_per_cm2", n_e_per_cm2)?;
        }
        positive("tau0_ps", self.tau0_ps)?;
        if !(self.taup_ps > 0.0) {
            return Err(Error::config("taup_ps", "must be positive"));
        }
        if self.n_points < MIN_POINTS {
            return Err(Error::config("n_points", format!("must be at least {MIN_POINTS}")));
        }
        if self.n_subbands < 2 || self.n_subbands > self.n_points {
            return Err(Error::config("n_subbands", "must lie between 2 and n_points"));
        }
        if !(self.transition_threshold >= 0.0 && self.transition_threshold.is_finite()) {
            return Err(Error::config("transition_threshold", "must be non-negative and finite"));
        }
        self.sweep.axis.validate("sweep")?;
        if let Some(c) = &self.cavity {
            c.validate("cavity")?;
        }
        match self.sweep.variable {
            SweepVariable::NQw | SweepVariable::NSubbands => {
                let pts = self.sweep.axis.points();
                for (i, v) in pts.iter().enumerate() {
                    if v.fract() != 0.0 || *v < 1.0 {
                        return Err(Error::config(format!("sweep.values[{i}]"), "must be a positive integer"));
                    }
                }
                if self.sweep.variable == SweepVariable::NSubbands {
                    if pts.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(Error::config("sweep.values", "subband counts must be ascending"));
                    }
                    if pts.iter().any(|v| *v < 2.0 || *v as usize > self.n_points) {
                        return Err(Error::config("sweep.values", "subband counts must lie between 2 and n_points"));
                    }
                }
                if self.sweep.variable == SweepVariable::NQw && s.wells.len() != 1 {
                    return Err(Error::config(
                        "structure.wells",
                        "multiwell runs replicate exactly one template well",
                    ));
                }
            }
            _ => {}
        }
        if let Some([l, j]) = self.reference_transition {
            if l <= j || j == 0 {
                return Err(Error::config("reference_transition", "needs l > j >= 1"));
            }
        }
        if let TransitionChoice::Explicit([l, j]) = self.dominant_transition {
            if l <= j || j == 0 {
                return Err(Error::config("dominant_transition", "needs l > j >= 1"));
            }
        }
        positive("multiwell.pitch_nm", self.multiwell.pitch_nm)?;
        if let Some(p) = self.multiwell.points_per_cell {
            if p < MIN_POINTS {
                return Err(Error::config("multiwell.points_per_cell", format!("must be at least {MIN_POINTS}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "structure": {
            "cavity_length_nm": 20.0,
            "barrier_meV": 100.0,
            "wells": [{"center_nm": 0.0, "width_nm": 5.0, "V0_meV": 100.0}]
        },
        "occupancy": {"mode": "pinned_level", "level": 2},
        "sweep": {"variable": "omega_c", "range": {"start": 0.1, "stop": 3.0, "count": 200}}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = SweepConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.n_points, 1024);
        assert_eq!(c.n_subbands, 40);
        assert_eq!(c.tau0_ps, 1.0);
        assert_eq!(c.taup_ps, 1e6);
        assert_eq!(c.structure.eps_r, 12.0);
        assert_eq!(c.dominant_transition, TransitionChoice::default());
        let p = c.cavity_points();
        assert_eq!(p.len(), 200);
        assert!((p[199] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_identity() {
        let c = SweepConfig::from_json(SAMPLE).unwrap();
        let again = SweepConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = SAMPLE.replace("\"V0_meV\"", "\"V0_eV\"");
        match SweepConfig::from_json(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "structure.wells[0].V0_eV"),
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("\"count\": 200", "\"count\": 0");
        match SweepConfig::from_json(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "sweep.range.count"),
            other => panic!("{other:?}"),
        }
        let bad = SAMPLE.replace("\"start\": 0.1", "\"start\": -1");
        assert!(matches!(SweepConfig::from_json(&bad), Err(Error::Config { .. })));
    }

    #[test]
    fn explicit_transition_choice_parses() {
        let text = SAMPLE.replace("\"sweep\"", "\"dominant_transition\": [3, 1], \"sweep\"");
        let c = SweepConfig::from_json(&text).unwrap();
        assert_eq!(c.dominant_transition, TransitionChoice::Explicit([3, 1]));
    }

    #[test]
    fn log_axis_hits_both_ends() {
        let a = AxisSpec {
            values: None,
            range: Some(RangeSpec {
                start: 0.01,
                stop: 100.0,
                count: 5,
            }),
            scale: Scale::Log,
        };
        let p = a.points();
        assert!((p[2] - 1.0).abs() < 1e-12 && (p[4] - 100.0).abs() < 1e-9);
    }
}
