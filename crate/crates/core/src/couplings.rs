//! Current matrix functions `ξ_ν(z)`, collective vacuum Rabi frequencies and the
//! depolarization-shift matrix.
//!
//! All frequencies are stored as energies `ħω` in meV. With `K = ħ²/(2m*)` and
//! `e²/(8ε₀ε_r) = π·1439.96/(2ε_r)` meV·nm the couplings read
//!
//! ```text
//! (ħΩ_ν)² = C n_ν ħω_c (∫ξ_ν)² / (L_c (ħω_ν)²)
//! ħΞ_ν^ν' = C √(n_ν n_ν') ∫ξ_ν ξ_ν' / (ħω_ν ħω_ν')
//! C       = (2K)² e²/(8ε₀ε_r)
//! ```
//!
//! where `n_ν = N_ν / S` is the areal population difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::occupancy::{SubbandPopulations, Transition};
use crate::subbands::SubbandBasis;
use crate::units::{kinetic_prefactor, COULOMB_MEV_NM};

/// Dielectric and geometric parameters entering the couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub cavity_length_nm: f64,
    pub area_nm2: f64,
    pub eps_r: f64,
    pub effective_mass: f64,
}

impl Geometry {
    /// `C = (ħ²/m*)² e²/(8ε₀ε_r)` in meV³·nm⁵.
    pub fn coupling_constant(&self) -> f64 {
        let two_k = 2.0 * kinetic_prefactor(self.effective_mass);
        two_k * two_k * std::f64::consts::PI * COULOMB_MEV_NM / (2.0 * self.eps_r)
    }
}

/// `ξ_ν(z) = φ_l′ φ_j − φ_l φ_j′` on the grid (nm⁻²).
pub fn xi(basis: &SubbandBasis, upper: usize, lower: usize) -> Vec<f64> {
    let grid = &basis.grid;
    let phi_l = &basis.wavefunctions[upper];
    let phi_j = &basis.wavefunctions[lower];
    let d_l = grid.derivative(phi_l);
    let d_j = grid.derivative(phi_j);
    (0..grid.n_points())
        .map(|k| d_l[k] * phi_j[k] - phi_l[k] * d_j[k])
        .collect()
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub transition: Transition,
    /// `ξ_ν` in nm⁻².
    pub xi: Vec<f64>,
    /// `ξ̃_ν = √(N_ν/N_e) ξ_ν`.
    pub xi_tilde: Vec<f64>,
    /// `∫ξ_ν dz` in nm⁻¹.
    pub xi_integral: f64,
    /// Signed `ħΩ_ν^res`, meV. The sign follows `∫ξ_ν`.
    pub rabi_res_mev: f64,
}

impl CatalogEntry {
    pub fn hw(&self) -> f64 {
        self.transition.hw_mev
    }

    /// `∫ξ̃_ν dz`.
    pub fn xi_tilde_integral(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.xi_tilde)
    }

    /// `ξ̃_ν` at the seam `z = ±L_c/2`.
    pub fn xi_tilde_at_lead(&self) -> f64 {
        self.xi_tilde[0]
    }
}

/// `ħΩ_ν` at cavity energy `hw_c` for a transition of energy `hw` and areal population
/// difference `density_difference`.
pub fn rabi(geometry: &Geometry, density_difference: f64, hw: f64, xi_integral: f64, hw_c: f64) -> f64 {
    let c = geometry.coupling_constant();
    (c * density_difference * hw_c / geometry.cavity_length_nm).sqrt() * xi_integral / hw
}

/// Every transition with its couplings, plus the depolarization matrix `ħΞ` (meV).
#[derive(Debug, Clone)]
pub struct TransitionCatalog {
    pub grid: Grid,
    pub geometry: Geometry,
    /// Total sheet density `n_e`, nm⁻².
    pub total_density: f64,
    pub entries: Vec<CatalogEntry>,
    pub depolarization: Vec<Vec<f64>>,
}

impl TransitionCatalog {
    pub fn build(
        basis: &SubbandBasis,
        populations: &SubbandPopulations,
        transitions: &[Transition],
        geometry: Geometry,
    ) -> Self {
        let grid = basis.grid;
        let total_density = populations.total_density;
        let entries: Vec<CatalogEntry> = transitions
            .par_iter()
            .map(|t| {
                let xi = xi(basis, t.upper, t.lower);
                let weight = (t.density_difference / total_density).sqrt();
                let xi_tilde = xi.iter().map(|v| weight * v).collect();
                let xi_integral = grid.integrate(&xi);
                let rabi_res_mev = rabi(&geometry, t.density_difference, t.hw_mev, xi_integral, t.hw_mev);
                CatalogEntry {
                    transition: *t,
                    xi,
                    xi_tilde,
                    xi_integral,
                    rabi_res_mev,
                }
            })
            .collect();
        let depolarization = depolarization_matrix(&grid, &geometry, &entries);
        Self {
            grid,
            geometry,
            total_density,
            entries,
            depolarization,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `ħΩ_ν` for every entry at cavity energy `hw_c`.
    pub fn rabi_at(&self, hw_c: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| rabi(&self.geometry, e.transition.density_difference, e.hw(), e.xi_integral, hw_c))
            .collect()
    }

    /// Position of transition `(l, j)` given as 1-based labels.
    pub fn find(&self, label: (usize, usize)) -> Option<usize> {
        self.entries.iter().position(|e| e.transition.label() == label)
    }

    /// Sub-catalog over the given entry positions, keeping the matching block of `Ξ`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        Self {
            grid: self.grid,
            geometry: self.geometry,
            total_density: self.total_density,
            entries: keep.iter().map(|i| self.entries[*i].clone()).collect(),
            depolarization: keep
                .iter()
                .map(|i| keep.iter().map(|j| self.depolarization[*i][*j]).collect())
                .collect(),
        }
    }

    /// CSV with header `l,j,hw_meV,N_nu,Omega_res_meV,Xi_diag_meV`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,j,hw_meV,N_nu,Omega_res_meV,Xi_diag_meV\n");
        for (i, e) in self.entries.iter().enumerate() {
            let (l, j) = e.transition.label();
            out.push_str(&format!(
                "{l},{j},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                e.hw(),
                e.transition.occupation_difference,
                e.rabi_res_mev,
                self.depolarization[i][i]
            ));
        }
        out
    }
}

/// `ħΞ_ν^ν'` for every pair of entries.
pub fn depolarization_matrix(grid: &Grid, geometry: &Geometry, entries: &[CatalogEntry]) -> Vec<Vec<f64>> {
    let c = geometry.coupling_constant();
    let n = entries.len();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let ea = &entries[a];
            (0..n)
                .map(|b| {
                    if b < a {
                        return 0.0;
                    }
                    let eb = &entries[b];
                    let overlap = grid.inner(&ea.xi, &eb.xi);
                    c * (ea.transition.density_difference * eb.transition.density_difference).sqrt() * overlap
                        / (ea.hw() * eb.hw())
                })
                .collect()
        })
        .collect();
    for a in 0..n {
        for b in 0..a {
            rows[a][b] = rows[b][a];
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy::{enumerate_transitions, fermi_level, OccupancySpec};
    use crate::potential::{build_potential, PotentialSpec, WellSegment};
    use crate::subbands::solve_subbands;

    fn well_basis(n: usize, n_sub: usize) -> SubbandBasis {
        let spec = PotentialSpec {
            barrier_mev: 0.0,
            wells: vec![WellSegment {
                center_nm: 0.0,
                width_nm: 5.0,
                depth_mev: 100.0,
            }],
        };
        let p = build_potential(&spec, Grid::new(n, 20.0).unwrap()).unwrap();
        solve_subbands(&p, 0.067, n_sub).unwrap()
    }

    fn geometry(area: f64) -> Geometry {
        Geometry {
            cavity_length_nm: 20.0,
            area_nm2: area,
            eps_r: 12.0,
            effective_mass: 0.067,
        }
    }

    fn catalog(basis: &SubbandBasis, level: usize, area: f64) -> TransitionCatalog {
        let mut occ = OccupancySpec::pinned(level);
        occ.area_nm2 = area;
        let pops = fermi_level(basis, &occ).unwrap();
        let ts = enumerate_transitions(&pops, basis, 1e-9);
        TransitionCatalog::build(basis, &pops, &ts, geometry(area))
    }

    #[test]
    fn xi_vanishes_on_the_diagonal() {
        let basis = well_basis(256, 4);
        assert!(xi(&basis, 2, 2).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn xi_derivative_identity_is_second_order() {
        // ∂ξ_ν = −(ħω_ν/K) φ_l φ_j; the V(z) terms cancel
        let err = |n: usize| {
            let basis = well_basis(n, 3);
            let x = xi(&basis, 2, 0);
            let dx = basis.grid.derivative(&x);
            let hw = basis.energies[2] - basis.energies[0];
            let k = kinetic_prefactor(0.067);
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * hw / k;
            dx.iter()
                .enumerate()
                .map(|(i, d)| (d + hw / k * basis.wavefunctions[2][i] * basis.wavefunctions[0][i]).abs())
                .sum::<f64>()
                * basis.grid.dz()
                / scale
        };
        let (e1, e2) = (err(512), err(1024));
        assert!(e2 < e1 / 3.0, "{e1} -> {e2}");
    }

    #[test]
    fn plane_wave_pair_gives_constant_xi() {
        let grid = Grid::new(512, 20.0).unwrap();
        let p = build_potential(&PotentialSpec::default(), grid).unwrap();
        let basis = solve_subbands(&p, 0.067, 3).unwrap();
        let x = xi(&basis, 2, 1);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let k = 2.0 * std::f64::consts::PI / 20.0;
        assert!((mean.abs() - 2.0 / 20.0 * (k * grid.dz()).sin() / grid.dz()).abs() < 1e-9);
        assert!(x.iter().all(|v| (v - mean).abs() < 1e-9 * mean.abs()));
    }

    #[test]
    fn rabi_vanishes_without_a_cavity_mode() {
        let basis = well_basis(256, 8);
        let cat = catalog(&basis, 2, 1e6);
        assert!(cat.rabi_at(0.0).iter().all(|r| *r == 0.0));
        let hw = cat.entries[1].hw();
        let at_res = cat.rabi_at(hw)[1];
        assert!((at_res - cat.entries[1].rabi_res_mev).abs() < 1e-12 * at_res.abs().max(1e-300));
        // Ω² is linear in ω_c
        let r1 = cat.rabi_at(10.0)[1];
        let r4 = cat.rabi_at(40.0)[1];
        assert!((r4 * r4 - 4.0 * r1 * r1).abs() <= 1e-12 * r4 * r4);
    }

    #[test]
    fn depolarization_is_symmetric_psd_and_bounds_rabi() {
        let basis = well_basis(512, 12);
        let cat = catalog(&basis, 4, 1e6);
        let n = cat.len();
        let xi = &cat.depolarization;
        for a in 0..n {
            for b in 0..n {
                assert_eq!(xi[a][b], xi[b][a]);
            }
            let e = &cat.entries[a];
            let lhs = xi[a][a] / e.hw();
            let rhs = (e.rabi_res_mev / e.hw()).powi(2);
            assert!(lhs + 1e-12 >= rhs, "{:?}: {lhs} < {rhs}", e.transition.label());
        }
        let m = faer::Mat::<f64>::from_fn(n, n, |a, b| xi[a][b]);
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let s = evd.S().column_vector();
        let largest = (0..n).map(|i| s[i]).fold(0.0f64, f64::max);
        assert!((0..n).all(|i| s[i] >= -1e-10 * largest));
    }

    #[test]
    fn couplings_do_not_depend_on_area() {
        let basis = well_basis(256, 8);
        let a = catalog(&basis, 2, 1e6);
        let b = catalog(&basis, 2, 2e6);
        for i in 0..a.len() {
            assert!((a.entries[i].rabi_res_mev - b.entries[i].rabi_res_mev).abs() <= 1e-12 * a.entries[i].rabi_res_mev.abs() + 1e-300);
            assert!((a.depolarization[i][i] - b.depolarization[i][i]).abs() <= 1e-12 * a.depolarization[i][i]);
        }
    }

    #[test]
    fn catalog_csv_has_one_row_per_transition() {
        let basis = well_basis(256, 6);
        let cat = catalog(&basis, 2, 1e6);
        let csv = cat.to_csv();
        assert!(csv.starts_with("l,j,hw_meV,N_nu,Omega_res_meV,Xi_diag_meV\n"));
        assert_eq!(csv.lines().count(), cat.len() + 1);
        assert!(csv.lines().nth(1).unwrap().starts_with("2,1,"));
    }
}
