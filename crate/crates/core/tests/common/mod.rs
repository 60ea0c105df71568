#![allow(dead_code)]

use cavcond::config::TransitionChoice;
use cavcond::harness::{Model, ModelSpec};
use cavcond::occupancy::OccupancySpec;
use cavcond::potential::{PotentialSpec, WellSegment};

pub const WELL: WellSegment = WellSegment {
    center_nm: 0.0,
    width_nm: 5.0,
    depth_mev: 100.0,
};

/// The single 5 nm well in a 20 nm spacer with `E_F = E_level`.
pub fn single_well(level: usize, n_points: usize, n_subbands: usize) -> ModelSpec {
    ModelSpec {
        potential: PotentialSpec {
            barrier_mev: 100.0,
            wells: vec![WELL],
        },
        cavity_length_nm: 20.0,
        effective_mass: 0.067,
        eps_r: 12.0,
        occupancy: OccupancySpec::pinned(level),
        n_points,
        n_subbands,
        transition_threshold: 1e-9,
        reference: (2, 1),
        dominant: TransitionChoice::default(),
        tau0_ps: 1.0,
        pin_above_barrier: false,
        interactions: Default::default(),
    }
}

pub fn config1() -> Model {
    Model::build(&single_well(2, 1024, 40)).unwrap()
}

pub fn config2() -> Model {
    Model::build(&single_well(4, 1024, 40)).unwrap()
}
