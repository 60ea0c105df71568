//! Piecewise-constant heterostructure potentials sampled on a [`Grid`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A square well of depth `depth_mev` below the barrier level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSegment {
    pub center_nm: f64,
    pub width_nm: f64,
    #[serde(rename = "V0_meV", alias = "depth_meV")]
    pub depth_mev: f64,
}

impl WellSegment {
    fn start(&self) -> f64 {
        self.center_nm - 0.5 * self.width_nm
    }

    fn end(&self) -> f64 {
        self.center_nm + 0.5 * self.width_nm
    }
}

/// Declarative description of a heterostructure: wells carved out of a uniform barrier.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default, rename = "barrier_meV")]
    pub barrier_mev: f64,
    #[serde(default)]
    pub wells: Vec<WellSegment>,
}

impl PotentialSpec {
    /// `n` identical wells at a fixed pitch, centered on the ring.
    pub fn equally_spaced(n: usize, pitch_nm: f64, well: WellSegment) -> Self {
        let length = n as f64 * pitch_nm;
        let wells = (0..n)
            .map(|k| WellSegment {
                center_nm: -0.5 * length + (k as f64 + 0.5) * pitch_nm,
                ..well
            })
            .collect();
        Self {
            barrier_mev: 0.0,
            wells,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let half = 0.5 * grid.length();
        if !self.barrier_mev.is_finite() {
            return Err(Error::InvalidPotential("barrier level is not finite".into()));
        }
        for (i, w) in self.wells.iter().enumerate() {
            if !(w.width_nm.is_finite() && w.width_nm > 0.0) {
                return Err(Error::InvalidPotential(format!(
                    "well {i}: width must be positive, got {}",
                    w.width_nm
                )));
            }
            if !(w.depth_mev.is_finite() && w.center_nm.is_finite()) {
                return Err(Error::InvalidPotential(format!("well {i}: non-finite field")));
            }
            if w.start() <= -half || w.end() >= half {
                return Err(Error::InvalidPotential(format!(
                    "well {i} [{:.4}, {:.4}] nm extends past the spacer edges ±{half} nm",
                    w.start(),
                    w.end()
                )));
            }
        }
        let mut sorted: Vec<_> = self.wells.iter().enumerate().collect();
        sorted.sort_by(|a, b| a.1.start().total_cmp(&b.1.start()));
        for pair in sorted.windows(2) {
            let ((i, a), (j, b)) = (pair[0], pair[1]);
            if a.end() > b.start() {
                return Err(Error::InvalidPotential(format!("wells {i} and {j} overlap")));
            }
        }
        Ok(())
    }
}

/// Sampled potential `V(z_k)` in meV, shifted so that its minimum is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub spec: PotentialSpec,
}

impl PotentialProfile {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds a constant to every sample, keeping the spec as is.
    pub fn shifted(&self, offset_mev: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + offset_mev).collect(),
            ..self.clone()
        }
    }
}

/// Samples `spec` on `grid`. Wells occupy the half-open intervals `[c - w/2, c + w/2)`.
pub fn build_potential(spec: &PotentialSpec, grid: Grid) -> Result<PotentialProfile> {
    spec.validate(&grid)?;
    let slack = 1e-9 * grid.dz();
    let mut values: Vec<f64> = grid
        .positions()
        .map(|z| {
            spec.wells
                .iter()
                .find(|w| z >= w.start() - slack && z < w.end() - slack)
                .map_or(spec.barrier_mev, |w| spec.barrier_mev - w.depth_mev)
        })
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    for v in &mut values {
        *v -= min;
    }
    Ok(PotentialProfile {
        grid,
        values,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well(center: f64, width: f64, depth: f64) -> WellSegment {
        WellSegment {
            center_nm: center,
            width_nm: width,
            depth_mev: depth,
        }
    }

    #[test]
    fn single_centered_well() {
        let grid = Grid::new(1024, 20.0).unwrap();
        let spec = PotentialSpec {
            barrier_mev: 0.0,
            wells: vec![well(0.0, 5.0, 100.0)],
        };
        let p = build_potential(&spec, grid).unwrap();
        let inside = p.values.iter().filter(|v| **v == 0.0).count();
        assert_eq!(inside, 256); // 5 nm / (20/1024 nm)
        for (z, v) in grid.positions().zip(&p.values) {
            let expected = if (-2.5..2.5).contains(&z) { 0.0 } else { 100.0 };
            assert_eq!(*v, expected, "z = {z}");
        }
    }

    #[test]
    fn no_wells_gives_flat_zero() {
        let grid = Grid::new(128, 20.0).unwrap();
        let spec = PotentialSpec {
            barrier_mev: 42.0,
            wells: vec![],
        };
        let p = build_potential(&spec, grid).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn five_wells_make_five_notches() {
        let grid = Grid::new(1280, 100.0).unwrap();
        let spec = PotentialSpec::equally_spaced(5, 20.0, well(0.0, 5.0, 100.0));
        let p = build_potential(&spec, grid).unwrap();
        let mut notches = 0;
        for k in 0..grid.n_points() {
            let prev = p.values[(k + grid.n_points() - 1) % grid.n_points()];
            if prev > 0.0 && p.values[k] == 0.0 {
                notches += 1;
            }
        }
        assert_eq!(notches, 5);
        assert_eq!(p.values.iter().filter(|v| **v == 0.0).count(), 5 * 64);
    }

    #[test]
    fn overlapping_wells_are_rejected() {
        let grid = Grid::new(256, 20.0).unwrap();
        let spec = PotentialSpec {
            barrier_mev: 0.0,
            wells: vec![well(0.0, 5.0, 100.0), well(4.0, 5.0, 100.0)],
        };
        assert!(matches!(
            build_potential(&spec, grid),
            Err(Error::InvalidPotential(_))
        ));
    }

    #[test]
    fn wells_must_stay_inside_the_spacer() {
        let grid = Grid::new(256, 20.0).unwrap();
        let spec = PotentialSpec {
            barrier_mev: 0.0,
            wells: vec![well(8.0, 5.0, 100.0)],
        };
        assert!(build_potential(&spec, grid).is_err());
    }
}
