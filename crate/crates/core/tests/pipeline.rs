mod common;

use cavcond::config::SweepConfig;
use cavcond::couplings::{Geometry, TransitionCatalog};
use cavcond::grid::Grid;
use cavcond::harness::{run_cavity_sweep, run_convergence, run_multiwell, run_tau_sweep, Model, ModelSpec};
use cavcond::kubo::{chi_noninteracting, conductance_noninteracting, ScatteringTimes};
use cavcond::occupancy::{enumerate_transitions, fermi_level, OccupancySpec};
use cavcond::potential::{build_potential, PotentialSpec};
use cavcond::subbands::solve_subbands;

use common::{config1, single_well};

fn sweep_config(extra: &str, sweep: &str) -> SweepConfig {
    SweepConfig::from_json(&format!(
        r#"{{
            "structure": {{"cavity_length_nm": 20.0, "barrier_meV": 100.0,
                          "wells": [{{"center_nm": 0.0, "width_nm": 5.0, "V0_meV": 100.0}}]}},
            "occupancy": {{"mode": "pinned_level", "level": 2}},
            {extra}
            "sweep": {sweep}
        }}"#
    ))
    .unwrap()
}

#[test]
fn pinned_fermi_level_gives_reference_density() {
    let m = config1();
    let n = m.populations.total_density_per_cm2();
    assert!((n / 1.1e12 - 1.0).abs() < 0.05, "{n:e}");
    // Feeding the density back reproduces the populations.
    let spec = ModelSpec {
        occupancy: OccupancySpec::density(n),
        ..single_well(2, 1024, 40)
    };
    let back = Model::build(&spec).unwrap();
    assert!((back.populations.fermi_mev - m.populations.fermi_mev).abs() < 1e-9);
    for (a, b) in back.populations.densities.iter().zip(&m.populations.densities) {
        assert!((a - b).abs() <= 1e-10 * m.populations.total_density);
    }
}

#[test]
fn single_transition_sum_is_its_own_term() {
    let m = config1();
    let i = m.catalog.find((3, 1)).unwrap();
    let one = m.catalog.restrict(&[i]);
    let all = cavcond::kubo::noninteracting_contributions(&m.catalog, 1.0);
    assert_eq!(conductance_noninteracting(&one, 1.0), all[i]);
}

#[test]
fn conductance_scales_with_area_over_length() {
    let m = config1();
    let g = conductance_noninteracting(&m.catalog, 1.0);
    let mut wide = m.catalog.clone();
    wide.geometry.area_nm2 *= 3.0;
    assert!((conductance_noninteracting(&wide, 1.0) / g - 3.0).abs() < 1e-12);
}

#[test]
fn wide_cavity_sweep_shows_two_resonant_features() {
    let c = sweep_config("", r#"{"variable": "omega_c", "range": {"start": 0.1, "stop": 4.5, "count": 221}}"#);
    let r = run_cavity_sweep(&c).unwrap();
    let g: Vec<f64> = r.points.iter().map(|p| p.g_over_g0).collect();
    let extrema: Vec<usize> = (1..g.len() - 1)
        .filter(|i| (g[*i] - g[i - 1]) * (g[i + 1] - g[*i]) < 0.0)
        .collect();
    assert!(extrema.len() >= 2, "{extrema:?}");
    let first = r.points[extrema[0]].omega_c_over_ref;
    let w31 = r.structures[0].energies_mev[2] - r.structures[0].energies_mev[0];
    assert!((first * r.structures[0].reference_hw_mev / w31 - 1.0).abs() < 0.1);
}

#[test]
fn two_subband_overlay_tracks_full_model_for_config_one() {
    let c = sweep_config(
        r#""dominant_transition": [3, 1],"#,
        r#"{"variable": "omega_c", "range": {"start": 0.1, "stop": 3.0, "count": 60}}"#,
    );
    let r = run_cavity_sweep(&c).unwrap();
    for p in &r.points {
        assert!((p.g_2sb_over_g0 / p.g_over_g0 - 1.0).abs() < 0.1, "{p:?}");
    }
    assert_eq!(r.structures[0].dominant_transition, Some((3, 1)));
}

#[test]
fn automatic_dominant_transition_is_the_brightest() {
    let m = config1();
    assert_eq!(m.two_subband.as_ref().unwrap().label, (3, 1));
}

#[test]
fn tau_sweep_switches_from_peak_to_dip() {
    let c = sweep_config(
        r#""cavity": {"values": [1.166]},"#,
        r#"{"variable": "tau0", "values": [0.0005, 1.0]}"#,
    );
    let r = run_tau_sweep(&c).unwrap();
    assert!(r.points[0].g_over_g0 > 1.0, "{}", r.points[0].g_over_g0);
    assert!(r.points[1].g_over_g0 < 1.0, "{}", r.points[1].g_over_g0);
    assert!(r.csv.lines().next().unwrap().contains("log10_G_over_G0"));
}

#[test]
fn equal_scattering_times_remove_time_mixing() {
    let m = config1();
    let s = m.spectrum(m.reference_hw).unwrap();
    for b in &s.branches {
        assert!((b.scattering_time(0.7, 0.7) - 0.7).abs() < 1e-12);
    }
}

#[test]
fn single_well_as_multiwell_is_bit_identical() {
    let c = sweep_config(
        r#""n_points": 256, "cavity": {"values": [0.5, 1.2]}, "multiwell": {"points_per_cell": 256},"#,
        r#"{"variable": "n_qw", "values": [1]}"#,
    );
    let multi = run_multiwell(&c).unwrap();
    let single = sweep_config(r#""n_points": 256,"#, r#"{"variable": "omega_c", "values": [0.5, 1.2]}"#);
    let single = run_cavity_sweep(&single).unwrap();
    for (a, b) in multi.points.iter().zip(&single.points) {
        assert_eq!(a.g_s.to_bits(), b.g_s.to_bits());
        assert_eq!(a.g_over_g0.to_bits(), b.g_over_g0.to_bits());
    }
}

#[test]
fn multiwell_excludes_degenerate_confined_pairs() {
    let c = sweep_config(
        r#""n_points": 256, "n_subbands": 30, "cavity": {"values": [1.0]}, "multiwell": {"points_per_cell": 256},"#,
        r#"{"variable": "n_qw", "values": [3]}"#,
    );
    let spec = ModelSpec::multiwell(&c, 3);
    let m = Model::build(&spec).unwrap();
    assert_eq!(m.populations.fermi_mev, m.basis.energies[3]);
    // The confined miniband is narrow, so its members are filled almost equally.
    let n = &m.populations.occupations;
    assert!((n[0] - n[2]).abs() / n[0] < 0.05);
    for e in &m.catalog.entries {
        assert!(e.transition.occupation_difference > 1e-9 * n[0]);
    }
    let r = run_multiwell(&c).unwrap();
    assert_eq!(r.n_failed, 0);
}

#[test]
fn convergence_in_subbands_and_grid() {
    let c = sweep_config(
        r#""cavity": {"values": [1.0]},"#,
        r#"{"variable": "n_subbands", "values": [10, 20, 30, 40, 60]}"#,
    );
    let r = run_convergence(&c).unwrap();
    assert!(r.converged_at.is_some_and(|n| n <= 60));
    let g: Vec<f64> = r.points.iter().map(|p| p.g_s).collect();
    assert!((g[4] / g[3] - 1.0).abs() < 0.01);
    // Last row doubles the grid at 60 subbands.
    assert_eq!(r.structures[5].n_points, 2048);
    assert!((g[5] / g[4] - 1.0).abs() < 0.01);
}

#[test]
fn csv_output_is_deterministic() {
    let c = sweep_config("", r#"{"variable": "omega_c", "range": {"start": 0.2, "stop": 2.0, "count": 12}}"#);
    let a = run_cavity_sweep(&c).unwrap();
    let b = run_cavity_sweep(&c).unwrap();
    assert_eq!(a.csv, b.csv);
}

#[test]
fn degenerate_rotation_leaves_noninteracting_kernel_unchanged() {
    let grid = Grid::new(256, 20.0).unwrap();
    let p = build_potential(&PotentialSpec::default(), grid).unwrap();
    let basis = solve_subbands(&p, 0.067, 6).unwrap();
    assert!((basis.energies[1] - basis.energies[2]).abs() < 1e-6);
    let mut rotated = basis.clone();
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    for k in 0..grid.n_points() {
        let (a, b) = (basis.wavefunctions[1][k], basis.wavefunctions[2][k]);
        rotated.wavefunctions[1][k] = c * a - s * b;
        rotated.wavefunctions[2][k] = s * a + c * b;
    }
    let geometry = Geometry {
        cavity_length_nm: 20.0,
        area_nm2: 1e6,
        eps_r: 12.0,
        effective_mass: 0.067,
    };
    let kernel = |b: &cavcond::subbands::SubbandBasis| {
        let pops = fermi_level(b, &OccupancySpec::pinned(2)).unwrap();
        let ts = enumerate_transitions(&pops, b, 1e-9);
        chi_noninteracting(&TransitionCatalog::build(b, &pops, &ts, geometry), 1.0).dense()
    };
    let (a, b) = (kernel(&basis), kernel(&rotated));
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn unstable_points_are_flagged_not_fatal() {
    let m = config1();
    let t = ScatteringTimes {
        tau0_ps: 1.0,
        taup_ps: 1e6,
    };
    assert!(m.conductance(1e-6 * m.reference_hw, t).unwrap().is_finite());
}
