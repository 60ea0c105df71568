//! Physical constants in the crate's working unit system.
//!
//! Energies are in meV, lengths in nm, times in ps. Frequencies are carried as
//! `ħω` in meV and converted to rad/ps only where a product `τω` is formed.

/// Reduced Planck constant, meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// `ħ²/(2 m_e)` for the bare electron mass, meV·nm².
pub const HBAR2_OVER_2ME: f64 = 38.0998;

/// `e²/(4π ε₀)`, meV·nm.
pub const COULOMB_MEV_NM: f64 = 1439.96;

/// `e²/ħ` in siemens.
pub const E2_OVER_HBAR_SIEMENS: f64 = 2.434_134_807_664e-4;

/// One cm⁻² expressed in nm⁻².
pub const PER_CM2_IN_PER_NM2: f64 = 1.0e-14;

/// Kinetic prefactor `ħ²/(2 m*)` for an effective mass given in units of `m_e`.
pub fn kinetic_prefactor(effective_mass: f64) -> f64 {
    HBAR2_OVER_2ME / effective_mass
}

/// Converts an energy `ħω` (meV) into an angular frequency in rad/ps.
pub fn angular_frequency(hw_mev: f64) -> f64 {
    hw_mev / HBAR_MEV_PS
}
