//! End-to-end runs: structure → basis → populations → catalog → polaritons →
//! conductance, evaluated over a sweep with ordered, deterministic output.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Interactions, SweepConfig, SweepVariable, TransitionChoice};
use crate::couplings::{Geometry, TransitionCatalog};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kubo::{
    conductance_interacting, conductance_noninteracting, dominant_transition, limit_conductances,
    two_level_params, LimitConductances, ScatteringTimes,
};
use crate::occupancy::{enumerate_transitions, fermi_level, OccupancyMode, OccupancySpec, SubbandPopulations};
use crate::polariton::{
    match_branches, solve, two_subband_solve, HopfieldModel, PolaritonSpectrum, TwoLevelParams,
};
use crate::potential::{build_potential, PotentialSpec};
use crate::subbands::{solve_subbands, SubbandBasis};

/// Everything needed to build a [`Model`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub potential: PotentialSpec,
    pub cavity_length_nm: f64,
    pub effective_mass: f64,
    pub eps_r: f64,
    pub occupancy: OccupancySpec,
    pub n_points: usize,
    pub n_subbands: usize,
    pub transition_threshold: f64,
    pub reference: (usize, usize),
    pub dominant: TransitionChoice,
    pub tau0_ps: f64,
    /// Pin `E_F` at the first subband above the barrier instead of using `occupancy.mode`.
    pub pin_above_barrier: bool,
    pub interactions: Interactions,
}

impl ModelSpec {
    pub fn from_config(config: &SweepConfig) -> Self {
        let s = &config.structure;
        Self {
            potential: s.potential(),
            cavity_length_nm: s.cavity_length_nm,
            effective_mass: s.effective_mass,
            eps_r: s.eps_r,
            occupancy: config.occupancy,
            n_points: config.n_points,
            n_subbands: config.n_subbands,
            transition_threshold: config.transition_threshold,
            reference: config.reference(),
            dominant: config.dominant_transition,
            tau0_ps: config.tau0_ps,
            pin_above_barrier: false,
            interactions: config.interactions,
        }
    }

    /// `n` copies of the single template well at the configured pitch, with `E_F`
    /// pinned at the first subband above the barrier.
    pub fn multiwell(config: &SweepConfig, n: usize) -> Self {
        let mut spec = Self::from_config(config);
        let pitch = config.multiwell.pitch_nm;
        let template = config.structure.wells[0];
        let per_cell = config
            .multiwell
            .points_per_cell
            .unwrap_or_else(|| (config.n_points as f64 * pitch / config.structure.cavity_length_nm).round() as usize);
        spec.potential = PotentialSpec {
            barrier_mev: config.structure.barrier_mev,
            wells: PotentialSpec::equally_spaced(n, pitch, template).wells,
        };
        spec.cavity_length_nm = n as f64 * pitch;
        spec.n_points = per_cell * n;
        spec.pin_above_barrier = true;
        spec.reference = config.reference_transition.map(|[l, j]| (l, j)).unwrap_or((n + 1, 1));
        spec
    }
}

/// A single-transition view used for the two-subband overlay.
#[derive(Debug, Clone)]
pub struct TwoSubband {
    pub label: (usize, usize),
    pub params: TwoLevelParams,
    pub catalog: TransitionCatalog,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub basis: SubbandBasis,
    pub populations: SubbandPopulations,
    pub catalog: TransitionCatalog,
    pub hopfield: HopfieldModel,
    /// `ħω` of the reference transition, the unit of the cavity axis.
    pub reference_hw: f64,
    pub two_subband: Option<TwoSubband>,
}

impl Model {
    pub fn build(spec: &ModelSpec) -> Result<Self> {
        let grid = Grid::new(spec.n_points, spec.cavity_length_nm)?;
        let potential = build_potential(&spec.potential, grid)?;
        let basis = solve_subbands(&potential, spec.effective_mass, spec.n_subbands)?;
        let mut occupancy = spec.occupancy;
        if spec.pin_above_barrier {
            let level = basis
                .first_above(potential.max())
                .ok_or_else(|| Error::InvalidOccupancy("no subband above the barrier; increase n_subbands".into()))?;
            occupancy.mode = OccupancyMode::PinnedLevel { level: level + 1 };
        }
        let populations = fermi_level(&basis, &occupancy)?;
        let transitions = enumerate_transitions(&populations, &basis, spec.transition_threshold);
        let geometry = Geometry {
            cavity_length_nm: spec.cavity_length_nm,
            area_nm2: occupancy.area_nm2,
            eps_r: spec.eps_r,
            effective_mass: spec.effective_mass,
        };
        let catalog = TransitionCatalog::build(&basis, &populations, &transitions, geometry);
        let (l, j) = spec.reference;
        if l > basis.len() || j == 0 || l <= j {
            return Err(Error::InvalidTransition(format!("reference transition ({l},{j}) is outside the basis")));
        }
        let reference_hw = basis.energies[l - 1] - basis.energies[j - 1];
        let dominant = match spec.dominant {
            TransitionChoice::Auto(_) => dominant_transition(&catalog, spec.tau0_ps),
            TransitionChoice::Explicit([l, j]) => Some(catalog.find((l, j)).ok_or_else(|| {
                Error::InvalidTransition(format!("transition ({l},{j}) is not an allowed transition"))
            })?),
        };
        let two_subband = dominant.map(|i| {
            let sub = catalog.restrict(&[i]);
            TwoSubband {
                label: catalog.entries[i].transition.label(),
                params: two_level_params(&sub, 0),
                catalog: sub,
            }
        });
        let mut model = Self {
            hopfield: HopfieldModel::from_catalog(&catalog),
            basis,
            populations,
            catalog,
            reference_hw,
            two_subband,
        };
        model.switch_off(!spec.interactions.light_matter, !spec.interactions.depolarization);
        Ok(model)
    }

    pub fn spectrum(&self, hw_c: f64) -> Result<PolaritonSpectrum> {
        solve(&self.hopfield, hw_c)
    }

    pub fn conductance(&self, hw_c: f64, times: ScatteringTimes) -> Result<f64> {
        let s = self.spectrum(hw_c)?;
        Ok(conductance_interacting(&s, &self.catalog, times, self.basis.len()).g_s)
    }

    /// Full-model conductance with the cavity frequency at zero.
    pub fn g0(&self, times: ScatteringTimes) -> Result<f64> {
        self.conductance(0.0, times)
    }

    /// Two-subband conductance at `hw_c` and its closed-form limits.
    pub fn two_subband_conductance(&self, hw_c: f64, times: ScatteringTimes) -> Option<Result<(f64, LimitConductances)>> {
        let t = self.two_subband.as_ref()?;
        Some((|| {
            let s = two_subband_solve(t.params, hw_c)?;
            let g = conductance_interacting(&s, &t.catalog, times, self.basis.len()).g_s;
            let g_ni = conductance_noninteracting(&t.catalog, times.tau0_ps);
            Ok((g, limit_conductances(t.params, g_ni, times.tau0_ps)))
        })())
    }

    /// Zero the Rabi couplings and/or the depolarization matrix, in the full model and
    /// in the two-subband overlay.
    pub fn switch_off(&mut self, light_matter: bool, depolarization: bool) {
        let n = self.hopfield.len();
        if light_matter {
            self.hopfield.rabi_res = vec![0.0; n];
        }
        if depolarization {
            self.hopfield.depolarization = vec![vec![0.0; n]; n];
        }
        if let Some(t) = &mut self.two_subband {
            if light_matter {
                t.params.rabi_res = 0.0;
            }
            if depolarization {
                t.params.xi = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSummary {
    #[serde(rename = "omega_I_meV")]
    pub hw_mev: f64,
    #[serde(rename = "W_e")]
    pub electronic_weight: f64,
    pub tau_ps: f64,
}

pub const FLAG_FAILED: u8 = 1;
pub const FLAG_SIGN: u8 = 2;

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    /// Value of the outer sweep variable (the cavity axis for `omega_c` sweeps).
    pub sweep_value: f64,
    pub omega_c_over_ref: f64,
    #[serde(rename = "omega_c_meV")]
    pub omega_c_mev: f64,
    #[serde(rename = "G_S")]
    pub g_s: f64,
    #[serde(rename = "G_NI_S")]
    pub g_ni_s: f64,
    #[serde(rename = "G_over_G0")]
    pub g_over_g0: f64,
    #[serde(rename = "G_2sb_over_G0")]
    pub g_2sb_over_g0: f64,
    pub n_branches: usize,
    pub min_we: f64,
    /// Bit 0: numerical failure at this point. Bit 1: `G` and `G_NI` differ in sign.
    pub flagged: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogRow {
    pub l: usize,
    pub j: usize,
    #[serde(rename = "hw_meV")]
    pub hw_mev: f64,
    #[serde(rename = "N_nu")]
    pub n_nu: f64,
    #[serde(rename = "Omega_res_meV")]
    pub rabi_res_mev: f64,
    #[serde(rename = "Xi_diag_meV")]
    pub xi_diag_mev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub label: String,
    #[serde(rename = "cavity_length_nm")]
    pub cavity_length_nm: f64,
    pub n_points: usize,
    pub n_subbands: usize,
    #[serde(rename = "fermi_meV")]
    pub fermi_mev: f64,
    pub n_e_per_cm2: f64,
    pub occupied_subbands: usize,
    #[serde(rename = "subband_energies_meV")]
    pub energies_mev: Vec<f64>,
    pub reference_transition: (usize, usize),
    #[serde(rename = "reference_hw_meV")]
    pub reference_hw_mev: f64,
    pub dominant_transition: Option<(usize, usize)>,
    #[serde(rename = "G0_S")]
    pub g0_s: f64,
    #[serde(rename = "G_NI_S")]
    pub g_ni_s: f64,
    pub limits: Option<LimitConductances>,
    pub n_transitions: usize,
    pub catalog: Vec<CatalogRow>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub setup_s: f64,
    pub sweep_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: SweepConfig,
    pub structures: Vec<StructureReport>,
    pub points: Vec<PointReport>,
    pub n_failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged_at: Option<usize>,
    pub timings: Timings,
    /// The CSV table written next to the report.
    #[serde(skip)]
    pub csv: String,
}

impl RunReport {
    pub fn all_failed(&self) -> bool {
        !self.points.is_empty() && self.n_failed == self.points.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::config("--workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn times(config: &SweepConfig, tau0_ps: f64) -> ScatteringTimes {
    ScatteringTimes {
        tau0_ps,
        taup_ps: config.taup_ps,
    }
}

fn structure_report(label: String, model: &Model, spec: &ModelSpec, times: ScatteringTimes) -> Result<StructureReport> {
    let g0_s = model.g0(times)?;
    let limits = model
        .two_subband_conductance(0.0, times)
        .transpose()?
        .map(|(_, l)| l);
    Ok(StructureReport {
        label,
        cavity_length_nm: spec.cavity_length_nm,
        n_points: model.basis.grid.n_points(),
        n_subbands: model.basis.len(),
        fermi_mev: model.populations.fermi_mev,
        n_e_per_cm2: model.populations.total_density_per_cm2(),
        occupied_subbands: model.populations.occupied,
        energies_mev: model.basis.energies.clone(),
        reference_transition: spec.reference,
        reference_hw_mev: model.reference_hw,
        dominant_transition: model.two_subband.as_ref().map(|t| t.label),
        g0_s,
        g_ni_s: conductance_noninteracting(&model.catalog, times.tau0_ps),
        limits,
        n_transitions: model.catalog.len(),
        catalog: catalog_rows(&model.catalog),
    })
}

pub fn catalog_rows(catalog: &TransitionCatalog) -> Vec<CatalogRow> {
    catalog
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (l, j) = e.transition.label();
            CatalogRow {
                l,
                j,
                hw_mev: e.hw(),
                n_nu: e.transition.occupation_difference,
                rabi_res_mev: e.rabi_res_mev,
                xi_diag_mev: catalog.depolarization[i][i],
            }
        })
        .collect()
}

/// Evaluate one cavity point given the model, `G₀` and scattering times.
fn evaluate_point(
    model: &Model,
    sweep_value: f64,
    omega_c_over_ref: f64,
    g0: f64,
    times: ScatteringTimes,
    keep_branches: bool,
) -> PointReport {
    let hw_c = omega_c_over_ref * model.reference_hw;
    let g_ni_s = conductance_noninteracting(&model.catalog, times.tau0_ps);
    let mut report = PointReport {
        sweep_value,
        omega_c_over_ref,
        omega_c_mev: hw_c,
        g_s: f64::NAN,
        g_ni_s,
        g_over_g0: f64::NAN,
        g_2sb_over_g0: f64::NAN,
        n_branches: 0,
        min_we: f64::NAN,
        flagged: 0,
        error: None,
        branches: Vec::new(),
    };
    match model.spectrum(hw_c) {
        Ok(s) => {
            let r = conductance_interacting(&s, &model.catalog, times, model.basis.len());
            report.g_s = r.g_s;
            report.g_over_g0 = r.g_s / g0;
            report.n_branches = s.branches.len();
            report.min_we = s.min_electronic_weight();
            if r.sign_mismatch {
                report.flagged |= FLAG_SIGN;
            }
            if keep_branches {
                report.branches = s
                    .branches
                    .iter()
                    .map(|b| BranchSummary {
                        hw_mev: b.hw_mev,
                        electronic_weight: b.electronic_weight,
                        tau_ps: b.scattering_time(times.tau0_ps, times.taup_ps),
                    })
                    .collect();
            }
        }
        Err(e) => {
            report.flagged |= FLAG_FAILED;
            report.error = Some(e.to_string());
        }
    }
    match model.two_subband_conductance(hw_c, times) {
        Some(Ok((g, limits))) => report.g_2sb_over_g0 = g / limits.g0_s,
        Some(Err(e)) => {
            report.flagged |= FLAG_FAILED;
            report.error.get_or_insert_with(|| e.to_string());
        }
        None => {}
    }
    report
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn finish(command: &str, config: &SweepConfig, structures: Vec<StructureReport>, points: Vec<PointReport>, csv: String, timings: Timings) -> RunReport {
    let n_failed = points.iter().filter(|p| p.flagged & FLAG_FAILED != 0).count();
    RunReport {
        command: command.into(),
        config: config.clone(),
        structures,
        points,
        n_failed,
        converged_at: None,
        timings,
        csv,
    }
}

fn expect_variable(config: &SweepConfig, variable: SweepVariable) -> Result<()> {
    if config.sweep.variable != variable {
        return Err(Error::config(
            "sweep.variable",
            format!("this command sweeps `{}`, config has `{}`", variable.name(), config.sweep.variable.name()),
        ));
    }
    Ok(())
}

/// `G`, `G_NI`, `G/G₀` and the two-subband overlay along the cavity axis.
pub fn run_cavity_sweep(config: &SweepConfig) -> Result<RunReport> {
    expect_variable(config, SweepVariable::OmegaC)?;
    let start = Instant::now();
    let spec = ModelSpec::from_config(config);
    let model = Model::build(&spec)?;
    let t = times(config, config.tau0_ps);
    let structure = structure_report("single".into(), &model, &spec, t)?;
    let g0 = structure.g0_s;
    let setup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let axis = config.cavity_points();
    let points: Vec<PointReport> = axis
        .par_iter()
        .map(|x| evaluate_point(&model, *x, *x, g0, t, true))
        .collect();
    let mut csv = String::from("omega_c_over_w21,G_S,G_NI_S,G_over_G0,G_2sb_over_G0,n_branches,min_We,flagged\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt(p.omega_c_over_ref),
            fmt(p.g_s),
            fmt(p.g_ni_s),
            fmt(p.g_over_g0),
            fmt(p.g_2sb_over_g0),
            p.n_branches,
            fmt(p.min_we),
            p.flagged
        );
    }
    let timings = Timings {
        setup_s,
        sweep_s: start.elapsed().as_secs_f64(),
    };
    Ok(finish("sweep-cavity", config, vec![structure], points, csv, timings))
}

/// One cavity curve per `τ₀`, each normalized by its own `G₀`.
pub fn run_tau_sweep(config: &SweepConfig) -> Result<RunReport> {
    expect_variable(config, SweepVariable::Tau0)?;
    let start = Instant::now();
    let spec = ModelSpec::from_config(config);
    let model = Model::build(&spec)?;
    let taus = config.sweep.axis.points();
    let structure = structure_report("single".into(), &model, &spec, times(config, config.tau0_ps))?;
    let g0s: Vec<f64> = taus
        .par_iter()
        .map(|tau| model.g0(times(config, *tau)))
        .collect::<Result<_>>()?;
    let setup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let axis = config.cavity_points();
    let grid: Vec<(usize, f64)> = (0..taus.len()).flat_map(|i| axis.iter().map(move |x| (i, *x))).collect();
    let points: Vec<PointReport> = grid
        .par_iter()
        .map(|(i, x)| evaluate_point(&model, taus[*i], *x, g0s[*i], times(config, taus[*i]), false))
        .collect();
    let mut csv = String::from("tau0_ps,omega_c_over_wref,G_S,G_NI_S,G_over_G0,log10_G_over_G0,G_2sb_over_G0,n_branches,min_We,flagged\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt(p.sweep_value),
            fmt(p.omega_c_over_ref),
            fmt(p.g_s),
            fmt(p.g_ni_s),
            fmt(p.g_over_g0),
            fmt(p.g_over_g0.log10()),
            fmt(p.g_2sb_over_g0),
            p.n_branches,
            fmt(p.min_we),
            p.flagged
        );
    }
    let timings = Timings {
        setup_s,
        sweep_s: start.elapsed().as_secs_f64(),
    };
    Ok(finish("sweep-tau", config, vec![structure], points, csv, timings))
}

/// Normalized cavity curves for equally spaced multiple wells.
pub fn run_multiwell(config: &SweepConfig) -> Result<RunReport> {
    expect_variable(config, SweepVariable::NQw)?;
    let start = Instant::now();
    let t = times(config, config.tau0_ps);
    let counts: Vec<usize> = config.sweep.axis.points().iter().map(|v| *v as usize).collect();
    let built: Vec<(ModelSpec, Model)> = counts
        .par_iter()
        .map(|n| {
            let spec = ModelSpec::multiwell(config, *n);
            Model::build(&spec).map(|m| (spec, m))
        })
        .collect::<Result<_>>()?;
    let structures: Vec<StructureReport> = counts
        .par_iter()
        .zip(&built)
        .map(|(n, (spec, model))| structure_report(format!("n_qw={n}"), model, spec, t))
        .collect::<Result<_>>()?;
    let setup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let axis = config.cavity_points();
    let grid: Vec<(usize, f64)> = (0..counts.len()).flat_map(|i| axis.iter().map(move |x| (i, *x))).collect();
    let points: Vec<PointReport> = grid
        .par_iter()
        .map(|(i, x)| evaluate_point(&built[*i].1, counts[*i] as f64, *x, structures[*i].g0_s, t, false))
        .collect();
    let mut csv = String::from("n_qw,omega_c_over_wref,G_S,G_NI_S,G_over_G0,G_2sb_over_G0,n_branches,min_We,flagged\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            p.sweep_value as usize,
            fmt(p.omega_c_over_ref),
            fmt(p.g_s),
            fmt(p.g_ni_s),
            fmt(p.g_over_g0),
            fmt(p.g_2sb_over_g0),
            p.n_branches,
            fmt(p.min_we),
            p.flagged
        );
    }
    let timings = Timings {
        setup_s,
        sweep_s: start.elapsed().as_secs_f64(),
    };
    Ok(finish("multiwell", config, structures, points, csv, timings))
}

/// Relative change below which successive subband counts count as converged.
pub const CONVERGENCE_TOL: f64 = 0.01;

/// `G` at a fixed cavity point for increasing subband counts, then once more on a
/// grid with twice the points at the largest count.
pub fn run_convergence(config: &SweepConfig) -> Result<RunReport> {
    expect_variable(config, SweepVariable::NSubbands)?;
    let start = Instant::now();
    let t = times(config, config.tau0_ps);
    let x = config.cavity_points()[0];
    let counts: Vec<usize> = config.sweep.axis.points().iter().map(|v| *v as usize).collect();
    let mut specs: Vec<ModelSpec> = counts
        .iter()
        .map(|n| ModelSpec {
            n_subbands: *n,
            ..ModelSpec::from_config(config)
        })
        .collect();
    let mut grid_check = specs.last().expect("validated non-empty").clone();
    grid_check.n_points *= 2;
    specs.push(grid_check);
    let rows: Vec<Result<(StructureReport, PointReport)>> = specs
        .par_iter()
        .map(|spec| {
            let model = Model::build(spec)?;
            let s = structure_report(format!("n_subbands={}", spec.n_subbands), &model, spec, t)?;
            let p = evaluate_point(&model, spec.n_subbands as f64, x, s.g0_s, t, false);
            Ok((s, p))
        })
        .collect();
    let setup_s = start.elapsed().as_secs_f64();
    let mut structures = Vec::new();
    let mut points = Vec::new();
    for r in rows {
        let (s, p) = r?;
        structures.push(s);
        points.push(p);
    }
    let mut csv = String::from("n_subbands,n_points,G_S,G_NI_S,G_over_G0,rel_change\n");
    let mut converged_at = None;
    for (i, p) in points.iter().enumerate() {
        let rel = if i == 0 {
            f64::NAN
        } else {
            ((p.g_s - points[i - 1].g_s) / points[i - 1].g_s).abs()
        };
        if i > 0 && i < counts.len() && converged_at.is_none() && rel < CONVERGENCE_TOL {
            converged_at = Some(counts[i - 1]);
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            structures[i].n_subbands,
            structures[i].n_points,
            fmt(p.g_s),
            fmt(p.g_ni_s),
            fmt(p.g_over_g0),
            fmt(rel)
        );
    }
    let mut report = finish("converge", config, structures, points, csv, Timings { setup_s, sweep_s: 0.0 });
    report.converged_at = converged_at;
    Ok(report)
}

/// Branch frequencies, weights and scattering times along the cavity axis, with
/// branches labelled consistently by eigenvector overlap.
pub fn run_spectrum(config: &SweepConfig) -> Result<RunReport> {
    expect_variable(config, SweepVariable::OmegaC)?;
    let start = Instant::now();
    let spec = ModelSpec::from_config(config);
    let model = Model::build(&spec)?;
    let t = times(config, config.tau0_ps);
    let structure = structure_report("single".into(), &model, &spec, t)?;
    let setup_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let axis = config.cavity_points();
    let spectra: Vec<Result<PolaritonSpectrum>> = axis
        .par_iter()
        .map(|x| model.spectrum(x * model.reference_hw))
        .collect();
    let mut csv = String::from("omega_c_meV,branch,omega_I_meV,W_e,tau_ps\n");
    let mut labels: Vec<usize> = Vec::new();
    let mut prev: Option<&PolaritonSpectrum> = None;
    let mut points = Vec::with_capacity(axis.len());
    for (x, s) in axis.iter().zip(&spectra) {
        let point = evaluate_point(&model, *x, *x, structure.g0_s, t, true);
        match s {
            Ok(s) => {
                labels = match prev {
                    Some(p) if p.branches.len() == s.branches.len() => {
                        match_branches(p, s).iter().map(|j| labels[*j]).collect()
                    }
                    _ => (0..s.branches.len()).collect(),
                };
                let mut rows: Vec<(usize, usize)> = labels.iter().copied().zip(0..).collect();
                rows.sort();
                for (label, i) in rows {
                    let b = &s.branches[i];
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        fmt(s.hw_c),
                        label,
                        fmt(b.hw_mev),
                        fmt(b.electronic_weight),
                        fmt(b.scattering_time(t.tau0_ps, t.taup_ps))
                    );
                }
                prev = Some(s);
            }
            Err(_) => prev = None,
        }
        points.push(point);
    }
    let timings = Timings {
        setup_s,
        sweep_s: start.elapsed().as_secs_f64(),
    };
    Ok(finish("spectrum", config, vec![structure], points, csv, timings))
}

/// `z_nm,V_meV,phi_1,...` for every grid point.
pub fn basis_csv(basis: &SubbandBasis) -> String {
    let mut out = String::from("z_nm,V_meV");
    for j in 1..=basis.len() {
        let _ = write!(out, ",phi_{j}");
    }
    out.push('\n');
    for k in 0..basis.grid.n_points() {
        let _ = write!(out, "{},{}", fmt(basis.grid.z(k)), fmt(basis.potential[k]));
        for phi in &basis.wavefunctions {
            let _ = write!(out, ",{}", fmt(phi[k]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(points: usize) -> SweepConfig {
        SweepConfig::from_json(&format!(
            r#"{{
                "structure": {{"cavity_length_nm": 20.0, "barrier_meV": 100.0,
                              "wells": [{{"center_nm": 0.0, "width_nm": 5.0, "V0_meV": 100.0}}]}},
                "occupancy": {{"mode": "pinned_level", "level": 2}},
                "n_points": 256, "n_subbands": 12,
                "sweep": {{"variable": "omega_c", "range": {{"start": 0.2, "stop": 2.0, "count": {points}}}}}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn cavity_sweep_emits_one_row_per_point_in_order() {
        let r = run_cavity_sweep(&config(7)).unwrap();
        assert_eq!(r.points.len(), 7);
        assert_eq!(r.csv.lines().count(), 8);
        assert!(r.points.windows(2).all(|w| w[0].omega_c_over_ref < w[1].omega_c_over_ref));
        assert_eq!(r.n_failed, 0);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let c = config(9);
        let a = with_workers(Some(1), || run_cavity_sweep(&c)).unwrap().unwrap();
        let b = with_workers(Some(4), || run_cavity_sweep(&c)).unwrap().unwrap();
        assert_eq!(a.csv, b.csv);
    }

    #[test]
    fn switching_off_couplings_restores_noninteracting_conductance() {
        let mut c = config(1);
        c.interactions = Interactions {
            light_matter: false,
            depolarization: false,
        };
        let model = Model::build(&ModelSpec::from_config(&c)).unwrap();
        let t = ScatteringTimes {
            tau0_ps: 1.0,
            taup_ps: 1e6,
        };
        let g = model.conductance(1.3 * model.reference_hw, t).unwrap();
        let g_ni = conductance_noninteracting(&model.catalog, 1.0);
        assert!((g - g_ni).abs() <= 1e-10 * g_ni.abs());
        let r = run_cavity_sweep(&c).unwrap();
        let p = &r.points[0];
        assert!((p.g_s - p.g_ni_s).abs() <= 1e-10 * p.g_ni_s.abs());
        assert!((p.g_2sb_over_g0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectrum_rows_cover_every_branch() {
        let r = run_spectrum(&config(5)).unwrap();
        let n = r.points[0].n_branches;
        assert_eq!(r.csv.lines().count(), 1 + 5 * n);
    }

    #[test]
    fn basis_dump_header() {
        let c = config(1);
        let model = Model::build(&ModelSpec::from_config(&c)).unwrap();
        let csv = basis_csv(&model.basis);
        assert!(csv.starts_with("z_nm,V_meV,phi_1,phi_2,"));
        assert_eq!(csv.lines().count(), 257);
    }
}
