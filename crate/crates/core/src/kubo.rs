//! Nonlocal response kernel and dark vertical conductance.
//!
//! Both kernels are sums of rank-1 terms
//!
//! ```text
//! χ(z, z′) = A Σ_m f_m/(ħ·ħω_m) Re[ξ_m*(z) ξ_m(z′)],   A = (e²/ħ) n_e (ħ²/m*)²/2
//! f_m      = τ_m/(1 + (τ_m ω_m)²) = Γ_m/(Γ_m² + ω_m²)
//! ```
//!
//! where `m` runs over transitions (noninteracting, `ξ_m = ξ̃_ν`, `Γ = 1/τ₀`) or over
//! polariton branches (`ξ_m = Σ_ν (x_ν+z_ν) ξ̃_ν`, `Γ_r = W_e/τ₀ + (1−W_e)/τ_p`).
//! The conductance is `G = −(S/L_c) ∫χ(L_c/2, z′) dz′`, the lead value being the grid
//! value at index 0. `χ` is in S/nm² and `G` in S.

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::TransitionCatalog;
use crate::grid::Grid;
use crate::polariton::{scattering_rate, PolaritonSpectrum, TwoLevelParams};
use crate::units::{kinetic_prefactor, E2_OVER_HBAR_SIEMENS, HBAR_MEV_PS};

/// Electronic and photonic scattering times, ps. `taup_ps` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringTimes {
    pub tau0_ps: f64,
    pub taup_ps: f64,
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `A = (e²/ħ)·n_e·(ħ²/m*)²/2` in S·meV²·nm².
pub fn kernel_prefactor(catalog: &TransitionCatalog) -> f64 {
    let two_k = 2.0 * kinetic_prefactor(catalog.geometry.effective_mass);
    E2_OVER_HBAR_SIEMENS * catalog.total_density * two_k * two_k / 2.0
}

/// `τ/(1+(τω)²)` written through the rate so that `Γ = 0` is harmless.
pub fn lorentz_factor(rate_per_ps: f64, hw_mev: f64) -> f64 {
    let omega = hw_mev / HBAR_MEV_PS;
    if rate_per_ps == 0.0 {
        return 0.0;
    }
    rate_per_ps / (rate_per_ps * rate_per_ps + omega * omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFlavor {
    Noninteracting,
    Interacting,
}

/// `χ(z, z′)` kept in factored form.
#[derive(Debug, Clone)]
pub struct ResponseKernel {
    pub grid: Grid,
    pub flavor: KernelFlavor,
    /// Weight of each rank-1 term, S·nm².
    pub weights: Vec<f64>,
    pub modes: Vec<Vec<c64>>,
}

impl ResponseKernel {
    pub fn rank_terms(&self) -> usize {
        self.weights.len()
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        compensated_sum(
            self.weights
                .iter()
                .zip(&self.modes)
                .map(|(w, m)| w * (m[a].conj() * m[b]).re),
        )
    }

    /// Row-major dense matrix in S/nm².
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.n_points();
        (0..n)
            .into_par_iter()
            .map(|a| (0..n).map(|b| self.at(a, b)).collect())
            .collect()
    }

    /// `∫χ(z_a, z′) dz′` in S/nm.
    pub fn row_integral(&self, a: usize) -> f64 {
        let dz = self.grid.dz();
        compensated_sum(self.weights.iter().zip(&self.modes).map(|(w, m)| {
            let integral: c64 = m.iter().sum::<c64>() * dz;
            w * (m[a].conj() * integral).re
        }))
    }

    /// Per-term contributions to `G = −(S/L_c)∫χ(L_c/2, z′)dz′`.
    pub fn conductance_terms(&self, area_nm2: f64, length_nm: f64) -> Vec<f64> {
        let dz = self.grid.dz();
        self.weights
            .iter()
            .zip(&self.modes)
            .map(|(w, m)| {
                let integral: c64 = m.iter().sum::<c64>() * dz;
                -area_nm2 / length_nm * w * (m[0].conj() * integral).re
            })
            .collect()
    }

    pub fn conductance(&self, area_nm2: f64, length_nm: f64) -> f64 {
        compensated_sum(self.conductance_terms(area_nm2, length_nm))
    }
}

pub fn chi_noninteracting(catalog: &TransitionCatalog, tau0_ps: f64) -> ResponseKernel {
    let a = kernel_prefactor(catalog);
    ResponseKernel {
        grid: catalog.grid,
        flavor: KernelFlavor::Noninteracting,
        weights: catalog
            .entries
            .iter()
            .map(|e| a * lorentz_factor(1.0 / tau0_ps, e.hw()) / (HBAR_MEV_PS * e.hw()))
            .collect(),
        modes: catalog
            .entries
            .iter()
            .map(|e| e.xi_tilde.iter().map(|v| c64::new(*v, 0.0)).collect())
            .collect(),
    }
}

/// `ξ̃_r^eff(z) = Σ_ν (x_{r,ν} + z_{r,ν}) ξ̃_ν(z)` for every branch.
pub fn xi_eff(spectrum: &PolaritonSpectrum, catalog: &TransitionCatalog) -> Vec<Vec<c64>> {
    let n = catalog.grid.n_points();
    spectrum
        .branches
        .par_iter()
        .map(|b| {
            let amps = b.matter_amplitudes();
            let mut out = vec![c64::new(0.0, 0.0); n];
            for (amp, entry) in amps.iter().zip(&catalog.entries) {
                if *amp == c64::new(0.0, 0.0) {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(&entry.xi_tilde) {
                    *o += amp * v;
                }
            }
            out
        })
        .collect()
}

pub fn chi_interacting(
    spectrum: &PolaritonSpectrum,
    catalog: &TransitionCatalog,
    times: ScatteringTimes,
) -> ResponseKernel {
    let a = kernel_prefactor(catalog);
    let weights = spectrum
        .branches
        .iter()
        .map(|b| {
            let rate = scattering_rate(b.electronic_weight, times.tau0_ps, times.taup_ps);
            let f = lorentz_factor(rate, b.hw_mev);
            // A zero-frequency branch is the bare photon at ω_c = 0 and has no matter part.
            if f == 0.0 || b.hw_mev <= 0.0 {
                0.0
            } else {
                a * f / (HBAR_MEV_PS * b.hw_mev)
            }
        })
        .collect();
    ResponseKernel {
        grid: catalog.grid,
        flavor: KernelFlavor::Interacting,
        weights,
        modes: xi_eff(spectrum, catalog),
    }
}

/// Per-transition contributions to `G_NI`, S.
pub fn noninteracting_contributions(catalog: &TransitionCatalog, tau0_ps: f64) -> Vec<f64> {
    let g = &catalog.geometry;
    chi_noninteracting(catalog, tau0_ps).conductance_terms(g.area_nm2, g.cavity_length_nm)
}

pub fn conductance_noninteracting(catalog: &TransitionCatalog, tau0_ps: f64) -> f64 {
    compensated_sum(noninteracting_contributions(catalog, tau0_ps))
}

/// Closed-form single-transition conductances at the two cavity extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConductances {
    pub g_ni_s: f64,
    pub g0_s: f64,
    pub g_inf_s: f64,
}

pub fn limit_conductances(params: TwoLevelParams, g_ni_s: f64, tau0_ps: f64) -> LimitConductances {
    let t2 = (tau0_ps * params.hw / HBAR_MEV_PS).powi(2);
    let xi = params.xi / params.hw;
    let om = (params.rabi_res / params.hw).powi(2);
    LimitConductances {
        g_ni_s,
        g0_s: g_ni_s * (1.0 + t2) / (1.0 + t2 * (1.0 + 4.0 * xi)),
        g_inf_s: g_ni_s * (1.0 + t2) / (1.0 + t2 * (1.0 + 4.0 * (xi - om))),
    }
}

/// The single-transition parameters of catalog entry `index`.
pub fn two_level_params(catalog: &TransitionCatalog, index: usize) -> TwoLevelParams {
    let e = &catalog.entries[index];
    TwoLevelParams {
        hw: e.hw(),
        rabi_res: e.rabi_res_mev,
        xi: catalog.depolarization[index][index],
    }
}

/// Entry with the largest `|G_NI|` contribution.
pub fn dominant_transition(catalog: &TransitionCatalog, tau0_ps: f64) -> Option<usize> {
    noninteracting_contributions(catalog, tau0_ps)
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
            Some((_, b)) if b >= g.abs() => best,
            _ => Some((i, g.abs())),
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConductanceResult {
    pub g_s: f64,
    pub g_ni_s: f64,
    /// Per-branch contributions `G_r`, ordered like the spectrum's branches.
    pub branch_contributions: Vec<f64>,
    pub limits: Option<LimitConductances>,
    pub n_subbands: usize,
    pub n_points: usize,
    pub tau0_ps: f64,
    pub taup_ps: f64,
    /// `G` and `G_NI` have opposite signs.
    pub sign_mismatch: bool,
}

pub fn conductance_interacting(
    spectrum: &PolaritonSpectrum,
    catalog: &TransitionCatalog,
    times: ScatteringTimes,
    n_subbands: usize,
) -> ConductanceResult {
    let g = &catalog.geometry;
    let terms = chi_interacting(spectrum, catalog, times).conductance_terms(g.area_nm2, g.cavity_length_nm);
    let g_s = compensated_sum(terms.iter().copied());
    let g_ni_s = conductance_noninteracting(catalog, times.tau0_ps);
    ConductanceResult {
        g_s,
        g_ni_s,
        branch_contributions: terms,
        limits: None,
        n_subbands,
        n_points: catalog.grid.n_points(),
        tau0_ps: times.tau0_ps,
        taup_ps: times.taup_ps,
        sign_mismatch: g_s * g_ni_s < 0.0,
    }
}

/// `δJ(z) = ∫χ(z, z′) E_z dz′` with `E_z = −δU/L_c`, in A/nm² for `δU` in volts.
pub fn current_profile(kernel: &ResponseKernel, delta_u_volts: f64) -> Vec<f64> {
    let field = -delta_u_volts / kernel.grid.length();
    (0..kernel.grid.n_points())
        .into_par_iter()
        .map(|k| kernel.row_integral(k) * field)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::Geometry;
    use crate::occupancy::{enumerate_transitions, fermi_level, OccupancySpec};
    use crate::polariton::{solve, HopfieldModel};
    use crate::potential::{build_potential, PotentialSpec, WellSegment};
    use crate::subbands::{solve_subbands, SubbandBasis};

    fn basis(n_sub: usize) -> SubbandBasis {
        let spec = PotentialSpec {
            barrier_mev: 0.0,
            wells: vec![WellSegment {
                center_nm: 0.0,
                width_nm: 5.0,
                depth_mev: 100.0,
            }],
        };
        let p = build_potential(&spec, Grid::new(256, 20.0).unwrap()).unwrap();
        solve_subbands(&p, 0.067, n_sub).unwrap()
    }

    fn catalog_of(basis: &SubbandBasis, level: usize) -> TransitionCatalog {
        let pops = fermi_level(basis, &OccupancySpec::pinned(level)).unwrap();
        let ts = enumerate_transitions(&pops, basis, 1e-9);
        let geometry = Geometry {
            cavity_length_nm: 20.0,
            area_nm2: 1e6,
            eps_r: 12.0,
            effective_mass: 0.067,
        };
        TransitionCatalog::build(basis, &pops, &ts, geometry)
    }

    #[test]
    fn static_photon_carries_no_current() {
        let cat = catalog_of(&basis(10), 2);
        let s = solve(&HopfieldModel::from_catalog(&cat), 0.0).unwrap();
        let times = ScatteringTimes {
            tau0_ps: 1.0,
            taup_ps: 1e6,
        };
        let r = conductance_interacting(&s, &cat, times, 10);
        assert!(r.g_s.is_finite());
        assert_eq!(r.branch_contributions[0], 0.0);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn single_transition_kernel_has_rank_one() {
        let cat = catalog_of(&basis(10), 2);
        let one = cat.restrict(&[cat.find((3, 1)).unwrap()]);
        let chi = chi_noninteracting(&one, 1.0).dense();
        let n = chi.len();
        let m = faer::Mat::<f64>::from_fn(n, n, |a, b| chi[a][b]);
        let s = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let s = s.S().column_vector();
        let vals: Vec<f64> = (0..n).map(|i| s[i].abs()).collect();
        let top = vals.iter().cloned().fold(0.0, f64::max);
        assert_eq!(vals.iter().filter(|v| **v > 1e-10 * top).count(), 1);
        for a in 0..n {
            for b in 0..n {
                assert!((chi[a][b] - chi[b][a]).abs() <= 1e-10 * top);
            }
        }
    }

    #[test]
    fn even_parity_transitions_carry_no_current() {
        let cat = catalog_of(&basis(10), 2);
        let g = noninteracting_contributions(&cat, 1.0);
        let bright = g[cat.find((3, 1)).unwrap()].abs();
        let dark = g[cat.find((2, 1)).unwrap()].abs();
        assert!(dark < 1e-8 * bright, "{dark} vs {bright}");
    }

    #[test]
    fn decoupled_polaritons_reproduce_noninteracting_conductance() {
        let cat = catalog_of(&basis(16), 2);
        let model = HopfieldModel::from_catalog(&cat).decoupled();
        let times = ScatteringTimes {
            tau0_ps: 1.0,
            taup_ps: f64::INFINITY,
        };
        let s = solve(&model, 0.37 * cat.entries[0].hw()).unwrap();
        let r = conductance_interacting(&s, &cat, times, 16);
        assert!((r.g_s - r.g_ni_s).abs() <= 1e-10 * r.g_ni_s.abs());
        for w in s.electronic_weights() {
            assert!(w.abs() < 1e-12 || (w - 1.0).abs() < 1e-12);
        }
        let total = compensated_sum(r.branch_contributions.iter().copied());
        assert!((total - r.g_s).abs() <= 1e-12 * r.g_s.abs());
    }

    #[test]
    fn recast_identity_for_one_transition() {
        let cat = catalog_of(&basis(10), 2);
        let one = cat.restrict(&[cat.find((3, 1)).unwrap()]);
        let p = two_level_params(&one, 0);
        let tau0 = 1.0;
        let g_ni = conductance_noninteracting(&one, tau0);
        let times = ScatteringTimes {
            tau0_ps: tau0,
            taup_ps: f64::INFINITY,
        };
        for f in [0.3, 1.0, 1.1, 3.0] {
            let s = solve(&HopfieldModel::from_catalog(&one), f * p.hw).unwrap();
            let g = conductance_interacting(&s, &one, times, 10).g_s;
            let t0 = (tau0 * p.hw / HBAR_MEV_PS).powi(2);
            let expect = g_ni
                * compensated_sum(s.branches.iter().map(|b| {
                    let tr = b.scattering_time(tau0, f64::INFINITY) * b.hw_mev / HBAR_MEV_PS;
                    (1.0 + t0) / (1.0 + tr * tr)
                }));
            assert!((g - expect).abs() <= 1e-8 * expect.abs(), "{g} vs {expect}");
        }
    }

    #[test]
    fn current_profile_is_periodic_and_conserves_charge() {
        let cat = catalog_of(&basis(12), 2);
        let kernel = chi_noninteracting(&cat, 1.0);
        let j = current_profile(&kernel, 1e-3);
        let dj = cat.grid.derivative(&j);
        let scale = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(cat.grid.integrate(&dj).abs() <= 1e-10 * scale);
        // The sampled well [−2.5, 2.5) is mirror symmetric about z = −dz/2.
        let n = j.len();
        for k in 0..n {
            assert!((j[k] - j[n - 1 - k]).abs() <= 1e-8 * scale);
        }
        let g = kernel.conductance(cat.geometry.area_nm2, cat.geometry.cavity_length_nm);
        assert!((cat.geometry.area_nm2 * j[0] / 1e-3 - g).abs() <= 1e-10 * g.abs());
    }

    #[test]
    fn limits_collapse_for_short_scattering_times() {
        let p = TwoLevelParams {
            hw: 90.0,
            rabi_res: 12.0,
            xi: 5.0,
        };
        let l = limit_conductances(p, 1.0, 1e-6);
        assert!((l.g0_s - 1.0).abs() < 1e-6 && (l.g_inf_s - 1.0).abs() < 1e-6);
        let l = limit_conductances(p, 1.0, 1e3);
        assert!((l.g0_s - 1.0 / (1.0 + 4.0 * 5.0 / 90.0)).abs() < 1e-6);
    }
}
