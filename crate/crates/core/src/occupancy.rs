//! Zero-temperature Fermi sea: Fermi level, subband populations and the allowed
//! collective transitions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subbands::SubbandBasis;
use crate::units::{kinetic_prefactor, PER_CM2_IN_PER_NM2};

/// Default relative population threshold below which a transition is dropped.
pub const DEFAULT_TRANSITION_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OccupancyMode {
    /// Fix the total sheet density.
    ArealDensity { n_e_per_cm2: f64 },
    /// Pin `E_F` to the energy of subband `level` (1-based, at least 2).
    PinnedLevel { level: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancySpec {
    #[serde(flatten)]
    pub mode: OccupancyMode,
    /// Transverse area `S`.
    #[serde(default = "default_area")]
    pub area_nm2: f64,
    /// Degeneracy factor in the 2D density of states. The default of 1 reproduces the
    /// sheet densities quoted for the reference single-well structures.
    #[serde(default = "default_spin")]
    pub spin_degeneracy: f64,
}

fn default_area() -> f64 {
    1.0e6
}

fn default_spin() -> f64 {
    1.0
}

impl OccupancySpec {
    pub fn pinned(level: usize) -> Self {
        Self {
            mode: OccupancyMode::PinnedLevel { level },
            area_nm2: default_area(),
            spin_degeneracy: default_spin(),
        }
    }

    pub fn density(n_e_per_cm2: f64) -> Self {
        Self {
            mode: OccupancyMode::ArealDensity { n_e_per_cm2 },
            area_nm2: default_area(),
            spin_degeneracy: default_spin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            OccupancyMode::ArealDensity { n_e_per_cm2 } if !(n_e_per_cm2 > 0.0 && n_e_per_cm2.is_finite()) => {
                return Err(Error::InvalidOccupancy(format!(
                    "areal density must be positive, got {n_e_per_cm2}"
                )))
            }
            OccupancyMode::PinnedLevel { level } if level < 2 => {
                return Err(Error::InvalidOccupancy(format!(
                    "pinned level must be at least 2, got {level}"
                )))
            }
            _ => {}
        }
        if !(self.area_nm2 > 0.0 && self.area_nm2.is_finite()) {
            return Err(Error::InvalidOccupancy("area must be positive".into()));
        }
        if !(self.spin_degeneracy > 0.0 && self.spin_degeneracy.is_finite()) {
            return Err(Error::InvalidOccupancy("spin degeneracy must be positive".into()));
        }
        Ok(())
    }
}

/// Per-subband populations of the Fermi sea.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandPopulations {
    #[serde(rename = "fermi_meV")]
    pub fermi_mev: f64,
    /// Number of occupied subbands `j_F`.
    pub occupied: usize,
    /// Areal densities `n_j` in nm⁻².
    pub densities: Vec<f64>,
    /// Occupation numbers `N_j = n_j S`.
    pub occupations: Vec<f64>,
    pub area_nm2: f64,
    /// Total sheet density in nm⁻².
    pub total_density: f64,
    /// 2D density of states per subband, meV⁻¹ nm⁻².
    pub dos: f64,
}

impl SubbandPopulations {
    pub fn total_density_per_cm2(&self) -> f64 {
        self.total_density / PER_CM2_IN_PER_NM2
    }

    /// Total electron number `N_e`.
    pub fn total_electrons(&self) -> f64 {
        self.total_density * self.area_nm2
    }
}

/// `ρ₂D = g m*/(2πħ²)` in meV⁻¹ nm⁻².
pub fn density_of_states(effective_mass: f64, spin_degeneracy: f64) -> f64 {
    spin_degeneracy / (2.0 * PI * 2.0 * kinetic_prefactor(effective_mass))
}

pub fn fermi_level(basis: &SubbandBasis, spec: &OccupancySpec) -> Result<SubbandPopulations> {
    spec.validate()?;
    let energies = &basis.energies;
    let top = *energies.last().expect("non-empty basis");
    let dos = density_of_states(basis.effective_mass, spec.spin_degeneracy);

    let fermi = match spec.mode {
        OccupancyMode::PinnedLevel { level } => {
            if level > energies.len() {
                return Err(Error::InvalidOccupancy(format!(
                    "pinned level {level} exceeds the {} computed subbands",
                    energies.len()
                )));
            }
            energies[level - 1]
        }
        OccupancyMode::ArealDensity { n_e_per_cm2 } => {
            let n_e = n_e_per_cm2 * PER_CM2_IN_PER_NM2;
            // n_e = ρ Σ_{j<jF} (E_F − E_j) is linear on each segment [E_{jF-1}, E_{jF}]
            let mut level_sum = 0.0;
            let mut found = None;
            for (count, e) in energies.iter().enumerate() {
                level_sum += e;
                let candidate = (n_e / dos + level_sum) / (count + 1) as f64;
                if let Some(next) = energies.get(count + 1) {
                    if candidate <= *next {
                        found = Some(candidate);
                        break;
                    }
                } else {
                    return Err(Error::FermiAboveBasis {
                        fermi_mev: candidate,
                        top_mev: top,
                    });
                }
            }
            found.expect("loop returns or breaks")
        }
    };

    let densities: Vec<f64> = energies
        .iter()
        .map(|e| if *e < fermi { dos * (fermi - e) } else { 0.0 })
        .collect();
    let occupations = densities.iter().map(|n| n * spec.area_nm2).collect();
    let occupied = densities.iter().filter(|n| **n > 0.0).count();
    Ok(SubbandPopulations {
        fermi_mev: fermi,
        occupied,
        total_density: densities.iter().sum(),
        densities,
        occupations,
        area_nm2: spec.area_nm2,
        dos,
    })
}

/// A collective transition `ν = (l, j)` from occupied subband `lower` to `upper` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub upper: usize,
    pub lower: usize,
    /// `ħω_ν = E_l − E_j`, meV.
    #[serde(rename = "hw_meV")]
    pub hw_mev: f64,
    /// `N_ν = N_j − N_l`.
    pub occupation_difference: f64,
    /// `n_ν = N_ν / S`, nm⁻².
    pub density_difference: f64,
}

impl Transition {
    /// 1-based `(l, j)` labels.
    pub fn label(&self) -> (usize, usize) {
        (self.upper + 1, self.lower + 1)
    }
}

/// All pairs `l > j` with `j` occupied and `N_j − N_l > threshold · N_1`, ordered by `j` then `l`.
pub fn enumerate_transitions(
    populations: &SubbandPopulations,
    basis: &SubbandBasis,
    threshold: f64,
) -> Vec<Transition> {
    let occ = &populations.occupations;
    let dens = &populations.densities;
    let cutoff = threshold * occ.first().copied().unwrap_or(0.0);
    let mut out = Vec::new();
    for lower in 0..basis.len() {
        if occ[lower] <= 0.0 {
            continue;
        }
        for upper in lower + 1..basis.len() {
            let diff = occ[lower] - occ[upper];
            if diff > cutoff {
                out.push(Transition {
                    upper,
                    lower,
                    hw_mev: basis.energies[upper] - basis.energies[lower],
                    occupation_difference: diff,
                    density_difference: dens[lower] - dens[upper],
                });
            }
        }
    }
    out
}
