//! Effective-mass Schrödinger solver with periodic boundary conditions.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialProfile;
use crate::units::kinetic_prefactor;

/// Eigenvalues closer than this (meV) are treated as one degenerate subspace.
pub const DEGENERACY_TOL_MEV: f64 = 1e-6;

/// Largest accepted `‖Hφ - Eφ‖ / ‖φ‖`, in meV.
pub const RESIDUAL_TOL_MEV: f64 = 1e-8;

/// Components smaller than this are skipped when fixing the sign of a wavefunction.
const SIGN_THRESHOLD: f64 = 1e-6;

/// Lowest eigenpairs of the vertical problem, orthonormal in the grid inner product.
#[derive(Debug, Clone)]
pub struct SubbandBasis {
    pub grid: Grid,
    pub effective_mass: f64,
    /// Ascending subband energies, meV.
    pub energies: Vec<f64>,
    /// `wavefunctions[j][k] = φ_j(z_k)` in nm^{-1/2}.
    pub wavefunctions: Vec<Vec<f64>>,
    /// Potential the basis was solved for, meV.
    pub potential: Vec<f64>,
}

impl SubbandBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Applies the discrete Hamiltonian to a grid function.
    pub fn apply_hamiltonian(&self, f: &[f64]) -> Vec<f64> {
        apply_hamiltonian(&self.potential, self.effective_mass, self.grid.dz(), f)
    }

    /// `‖Hφ_j - E_j φ_j‖ / ‖φ_j‖`.
    pub fn residual(&self, j: usize) -> f64 {
        let phi = &self.wavefunctions[j];
        let h_phi = self.apply_hamiltonian(phi);
        let num: f64 = h_phi
            .iter()
            .zip(phi)
            .map(|(h, p)| (h - self.energies[j] * p).powi(2))
            .sum();
        let den: f64 = phi.iter().map(|p| p * p).sum();
        (num / den).sqrt()
    }

    /// Index of the lowest subband lying at or above `level_mev`.
    pub fn first_above(&self, level_mev: f64) -> Option<usize> {
        self.energies.iter().position(|e| *e >= level_mev)
    }
}

fn apply_hamiltonian(potential: &[f64], effective_mass: f64, dz: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let hop = kinetic_prefactor(effective_mass) / (dz * dz);
    (0..n)
        .map(|k| {
            let lap = 2.0 * f[k] - f[(k + 1) % n] - f[(k + n - 1) % n];
            potential[k] * f[k] + hop * lap
        })
        .collect()
}

/// Solves for the `n_subbands` lowest states of
/// `-ħ²/(2m*) ∂²φ + V φ = E φ` on the periodic grid.
pub fn solve_subbands(
    potential: &PotentialProfile,
    effective_mass: f64,
    n_subbands: usize,
) -> Result<SubbandBasis> {
    let grid = potential.grid;
    let n = grid.n_points();
    if n_subbands == 0 || n_subbands > n {
        return Err(Error::TooManySubbands {
            requested: n_subbands,
            available: n,
        });
    }
    if !(effective_mass.is_finite() && effective_mass > 0.0) {
        return Err(Error::InvalidPotential(format!(
            "effective mass must be positive, got {effective_mass}"
        )));
    }
    if potential.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPotential("potential has non-finite samples".into()));
    }

    let dz = grid.dz();
    let hop = kinetic_prefactor(effective_mass) / (dz * dz);
    let mut h = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = potential.values[k] + 2.0 * hop;
        let next = (k + 1) % n;
        h[(k, next)] -= hop;
        h[(next, k)] -= hop;
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| s[*a].total_cmp(&s[*b]));

    // Extend the cut so that no degenerate subspace is split.
    let mut keep = n_subbands;
    while keep < n && (s[order[keep]] - s[order[keep - 1]]).abs() <= DEGENERACY_TOL_MEV {
        keep += 1;
    }

    let norm = dz.sqrt().recip();
    let mut energies = Vec::with_capacity(keep);
    let mut vectors = Vec::with_capacity(keep);
    for &idx in &order[..keep] {
        energies.push(s[idx]);
        vectors.push((0..n).map(|k| u[(k, idx)] * norm).collect::<Vec<f64>>());
    }

    for (e, v) in energies.iter_mut().zip(vectors.iter_mut()) {
        *e = refine_eigenpair(&potential.values, hop, *e, v, dz);
    }

    let mut start = 0;
    while start < keep {
        let mut end = start + 1;
        while end < keep && (energies[end] - energies[end - 1]).abs() <= DEGENERACY_TOL_MEV {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_subspace(&mut vectors[start..end], dz);
        }
        start = end;
    }
    for (e, v) in energies.iter_mut().zip(vectors.iter_mut()) {
        fix_sign(v);
        *e = rayleigh_quotient(&potential.values, effective_mass, dz, v);
    }

    energies.truncate(n_subbands);
    vectors.truncate(n_subbands);
    let basis = SubbandBasis {
        grid,
        effective_mass,
        energies,
        wavefunctions: vectors,
        potential: potential.values.clone(),
    };
    for j in 0..basis.len() {
        let residual = basis.residual(j);
        if !(residual <= RESIDUAL_TOL_MEV) {
            return Err(Error::Residual { index: j, residual });
        }
    }
    Ok(basis)
}

fn rayleigh_quotient(potential: &[f64], effective_mass: f64, dz: f64, v: &[f64]) -> f64 {
    let hv = apply_hamiltonian(potential, effective_mass, dz, v);
    let num: f64 = hv.iter().zip(v).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|a| a * a).sum();
    num / den
}

/// Two steps of shifted inverse iteration on the periodic tridiagonal Hamiltonian.
/// Brings the residual of a dense-solver eigenvector from `ε‖H‖` down to roundoff in `Hφ`.
fn refine_eigenpair(potential: &[f64], hop: f64, energy: f64, v: &mut [f64], dz: f64) -> f64 {
    let n = v.len();
    let mut shift = energy;
    for _ in 0..2 {
        let diag: Vec<f64> = potential.iter().map(|p| p + 2.0 * hop - shift).collect();
        let Some(mut x) = solve_periodic_tridiagonal(&diag, -hop, v) else {
            break;
        };
        let norm = (x.iter().map(|a| a * a).sum::<f64>() * dz).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        let dot: f64 = x.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        for a in &mut x {
            *a *= sign / norm;
        }
        v.copy_from_slice(&x);
        let hv: Vec<f64> = (0..n)
            .map(|k| {
                potential[k] * v[k] + hop * (2.0 * v[k] - v[(k + 1) % n] - v[(k + n - 1) % n])
            })
            .collect();
        shift = hv.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() * dz;
    }
    shift
}

/// Solves `A x = b` for the symmetric periodic tridiagonal matrix with diagonal `diag` and
/// constant off-diagonal (and corner) entry `off`, via Sherman-Morrison on top of a
/// partially pivoted tridiagonal LU.
fn solve_periodic_tridiagonal(diag: &[f64], off: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let gamma = if diag[0] == 0.0 { 1.0 } else { -diag[0] };
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= off * off / gamma;
    let lu = TridiagonalLu::factor(&d, off)?;
    let y = lu.solve(b);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let q = lu.solve(&u);
    // v = (1, 0, …, 0, off/γ)
    let vy = y[0] + off / gamma * y[n - 1];
    let vq = q[0] + off / gamma * q[n - 1];
    let denom = 1.0 + vq;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let factor = vy / denom;
    Some(y.iter().zip(&q).map(|(yi, qi)| yi - factor * qi).collect())
}

/// LU factorization with partial pivoting of a tridiagonal matrix (LAPACK `gttrf` layout).
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: f64) -> Option<Self> {
        let n = diag.len();
        let mut dl = vec![off; n - 1];
        let mut d = diag.to_vec();
        let mut du = vec![off; n - 1];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            // exactly singular: nudge so inverse iteration still amplifies the null direction
            d[n - 1] = f64::EPSILON * diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        Some(Self { dl, d, du, du2, swapped })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = temp - self.dl[i] * x[i];
            } else {
                x[i + 1] -= self.dl[i] * x[i];
            }
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

/// Replaces an orthonormal basis of a degenerate subspace with one that depends only on the
/// subspace itself: pivoted Gram-Schmidt on the projector columns `P e_k`, taking the grid
/// point with the largest remaining weight first.
fn canonicalize_subspace(vectors: &mut [Vec<f64>], dz: f64) {
    let m = vectors.len();
    let n = vectors[0].len();
    // rows r_k of the n×m coefficient matrix; P e_k = Σ_i r_k[i] v_i
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|k| vectors.iter().map(|v| v[k]).collect())
        .collect();
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(m);
    for _ in 0..m {
        let (best, _) = rows
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.iter().map(|x| x * x).sum::<f64>()))
            .fold((0usize, -1.0f64), |acc, cur| if cur.1 > acc.1 + 1e-12 * acc.1.abs() { cur } else { acc });
        let pivot = rows[best].clone();
        let len = pivot.iter().map(|x| x * x).sum::<f64>().sqrt();
        let q: Vec<f64> = pivot.iter().map(|x| x / len).collect();
        for r in &mut rows {
            let dot: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= dot * qi;
            }
        }
        directions.push(q);
    }
    let originals: Vec<Vec<f64>> = vectors.to_vec();
    for (v, q) in vectors.iter_mut().zip(&directions) {
        for k in 0..n {
            v[k] = originals.iter().zip(q).map(|(o, c)| c * o[k]).sum();
        }
    }
    // re-orthonormalize in the grid inner product
    for i in 0..m {
        for j in 0..i {
            let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum::<f64>() * dz;
            let (head, tail) = vectors.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= dot * b;
            }
        }
        let norm = (vectors[i].iter().map(|a| a * a).sum::<f64>() * dz).sqrt();
        for a in &mut vectors[i] {
            *a /= norm;
        }
    }
}

fn fix_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}
