//! Hopfield–Bogoliubov diagonalization of the cavity mode coupled to the collective
//! intersubband excitations.
//!
//! Vectors are laid out as `(w, x_1..x_N, y, z_1..z_N)` where `w, y` multiply the photon
//! annihilation/creation operators and `x_ν, z_ν` the bright-mode ones. The matrix is
//!
//! ```text
//!  ⎡  ω_c   −O      0    O   ⎤
//!  ⎢ −O†   W+D    −O†   −D   ⎥
//!  ⎢  0     O     −ω_c  −O   ⎥
//!  ⎣ −O†    D     −O†  −W−D  ⎦
//! ```
//!
//! with `O = (iΩ_ν)`, `W = diag(ω_ν)` and `D = 2Ξ`. Physical branches are the
//! eigenvectors with non-negative frequency and positive norm
//! `|w|² + Σ|x|² − |y|² − Σ|z|²`.

use faer::{c64, Mat, Side};
use serde::Serialize;

use crate::couplings::TransitionCatalog;
use crate::error::{Error, Result};

/// Eigenvalues closer than this (relative to the spectral scale) form one cluster.
const CLUSTER_TOL: f64 = 1e-9;
/// Allowed `|Im λ| / |Re λ|` before the spectrum is declared unstable.
const IMAG_TOL: f64 = 1e-6;

/// The parameters the Hopfield matrix depends on, all as energies in meV.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldModel {
    pub hw: Vec<f64>,
    /// Signed `ħΩ_ν^res`.
    pub rabi_res: Vec<f64>,
    /// `ħΞ`.
    pub depolarization: Vec<Vec<f64>>,
}

impl HopfieldModel {
    pub fn from_catalog(catalog: &TransitionCatalog) -> Self {
        Self {
            hw: catalog.entries.iter().map(|e| e.hw()).collect(),
            rabi_res: catalog.entries.iter().map(|e| e.rabi_res_mev).collect(),
            depolarization: catalog.depolarization.clone(),
        }
    }

    pub fn single(params: TwoLevelParams) -> Self {
        Self {
            hw: vec![params.hw],
            rabi_res: vec![params.rabi_res],
            depolarization: vec![vec![params.xi]],
        }
    }

    pub fn len(&self) -> usize {
        self.hw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hw.is_empty()
    }

    /// `ħΩ_ν` at cavity energy `hw_c`.
    pub fn rabi_at(&self, hw_c: f64) -> Vec<f64> {
        self.hw
            .iter()
            .zip(&self.rabi_res)
            .map(|(hw, r)| r * (hw_c / hw).sqrt())
            .collect()
    }

    /// Same transitions with the light–matter coupling and depolarization switched off.
    pub fn decoupled(&self) -> Self {
        let n = self.len();
        Self {
            hw: self.hw.clone(),
            rabi_res: vec![0.0; n],
            depolarization: vec![vec![0.0; n]; n],
        }
    }
}

#[derive(Debug, Clone)]
pub struct HopfieldMatrix {
    pub n_transitions: usize,
    pub hw_c: f64,
    pub data: Mat<c64>,
}

impl HopfieldMatrix {
    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    /// Diagonal of the indefinite metric, `+1` on `(w, x)` and `−1` on `(y, z)`.
    pub fn metric(&self) -> Vec<f64> {
        metric(self.n_transitions)
    }
}

fn metric(n: usize) -> Vec<f64> {
    let mut eta = vec![1.0; 2 * (n + 1)];
    eta[n + 1..].iter_mut().for_each(|v| *v = -1.0);
    eta
}

pub fn build_matrix(model: &HopfieldModel, hw_c: f64) -> HopfieldMatrix {
    let n = model.len();
    let dim = 2 * (n + 1);
    let (w, y) = (0, n + 1);
    let x = |i: usize| 1 + i;
    let z = |i: usize| n + 2 + i;
    let o: Vec<c64> = model.rabi_at(hw_c).iter().map(|r| c64::new(0.0, *r)).collect();
    let mut m = Mat::<c64>::zeros(dim, dim);
    m[(w, w)] = c64::new(hw_c, 0.0);
    m[(y, y)] = c64::new(-hw_c, 0.0);
    for a in 0..n {
        let od = o[a].conj();
        m[(w, x(a))] = -o[a];
        m[(w, z(a))] = o[a];
        m[(y, x(a))] = o[a];
        m[(y, z(a))] = -o[a];
        m[(x(a), w)] = -od;
        m[(x(a), y)] = -od;
        m[(z(a), w)] = -od;
        m[(z(a), y)] = -od;
        for b in 0..n {
            let d = c64::new(2.0 * model.depolarization[a][b], 0.0);
            let diag = if a == b { c64::new(model.hw[a], 0.0) } else { c64::new(0.0, 0.0) };
            m[(x(a), x(b))] = diag + d;
            m[(x(a), z(b))] = -d;
            m[(z(a), x(b))] = d;
            m[(z(a), z(b))] = -diag - d;
        }
    }
    HopfieldMatrix {
        n_transitions: n,
        hw_c,
        data: m,
    }
}

#[derive(Debug, Clone)]
pub struct PolaritonBranch {
    /// `ħω_r^I`, meV.
    pub hw_mev: f64,
    pub w: c64,
    pub x: Vec<c64>,
    pub y: c64,
    pub z: Vec<c64>,
    pub electronic_weight: f64,
}

impl PolaritonBranch {
    fn from_vector(hw_mev: f64, v: &[c64]) -> Self {
        let n = v.len() / 2 - 1;
        let mut branch = Self {
            hw_mev,
            w: v[0],
            x: v[1..=n].to_vec(),
            y: v[n + 1],
            z: v[n + 2..].to_vec(),
            electronic_weight: 0.0,
        };
        branch.electronic_weight = electronic_weight(&branch);
        branch
    }

    pub fn vector(&self) -> Vec<c64> {
        let mut v = Vec::with_capacity(2 * (self.x.len() + 1));
        v.push(self.w);
        v.extend_from_slice(&self.x);
        v.push(self.y);
        v.extend_from_slice(&self.z);
        v
    }

    /// `|w|² − |y|² + Σ(|x|² − |z|²)`.
    pub fn norm(&self) -> f64 {
        self.w.norm_sqr() - self.y.norm_sqr() + electronic_weight(self)
    }

    /// `x_ν + z_ν` per transition.
    pub fn matter_amplitudes(&self) -> Vec<c64> {
        self.x.iter().zip(&self.z).map(|(a, b)| a + b).collect()
    }

    pub fn scattering_time(&self, tau0_ps: f64, taup_ps: f64) -> f64 {
        scattering_time(self.electronic_weight, tau0_ps, taup_ps)
    }

    /// `|⟨self|η|other⟩|`.
    pub fn overlap(&self, other: &Self) -> f64 {
        let a = self.vector();
        let b = other.vector();
        let eta = metric(self.x.len());
        a.iter()
            .zip(&b)
            .zip(&eta)
            .map(|((p, q), s)| p.conj() * q * *s)
            .sum::<c64>()
            .norm()
    }
}

#[derive(Debug, Clone)]
pub struct PolaritonSpectrum {
    pub hw_c: f64,
    /// Sorted by ascending frequency.
    pub branches: Vec<PolaritonBranch>,
    /// Largest `|Im λ|/|Re λ|` met while selecting branches.
    pub max_imag_ratio: f64,
    /// Largest distance between an eigenvalue and the negative of its nearest partner,
    /// relative to the spectral scale.
    pub pairing_defect: f64,
}

impl PolaritonSpectrum {
    pub fn frequencies(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.hw_mev).collect()
    }

    pub fn electronic_weights(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.electronic_weight).collect()
    }

    pub fn min_electronic_weight(&self) -> f64 {
        self.electronic_weights().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// `Σ|x|² − Σ|z|²`.
pub fn electronic_weight(branch: &PolaritonBranch) -> f64 {
    branch.x.iter().map(|v| v.norm_sqr()).sum::<f64>() - branch.z.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// `1/τ_r = W_e/τ₀ + (1 − W_e)/τ_p`, in ps⁻¹. `τ_p` may be infinite.
pub fn scattering_rate(electronic_weight: f64, tau0_ps: f64, taup_ps: f64) -> f64 {
    electronic_weight / tau0_ps + (1.0 - electronic_weight) / taup_ps
}

pub fn scattering_time(electronic_weight: f64, tau0_ps: f64, taup_ps: f64) -> f64 {
    1.0 / scattering_rate(electronic_weight, tau0_ps, taup_ps)
}

/// Multiply by a unit phase so the largest-magnitude entry is real and positive.
fn fix_phase(v: &mut [c64]) {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|c| *c *= phase);
    v[best] = c64::new(v[best].norm(), 0.0);
}

fn eta_dot(eta: &[f64], a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).zip(eta).map(|((p, q), s)| p.conj() * q * *s).sum()
}

pub fn diagonalize(matrix: &HopfieldMatrix) -> Result<PolaritonSpectrum> {
    let dim = matrix.order();
    let eta = matrix.metric();
    let evd = matrix
        .data
        .eigen()
        .map_err(|e| Error::EigenSolver(format!("Hopfield eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let lambda: Vec<c64> = (0..dim).map(|i| s[i]).collect();
    let scale = lambda.iter().map(|l| l.norm()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);

    let pairing_defect = lambda
        .iter()
        .map(|a| lambda.iter().map(|b| (a + b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max)
        / scale;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|a, b| lambda[*a].re.total_cmp(&lambda[*b].re));

    let mut max_imag_ratio = 0.0f64;
    let mut smallest_norm = f64::INFINITY;
    let mut branches = Vec::new();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && (lambda[order[end]].re - lambda[order[end - 1]].re).abs() <= CLUSTER_TOL * scale {
            end += 1;
        }
        let cluster = &order[start..end];
        start = end;
        let re = cluster.iter().map(|i| lambda[*i].re).sum::<f64>() / cluster.len() as f64;
        if re < -CLUSTER_TOL * scale {
            continue;
        }
        for i in cluster {
            let l = lambda[*i];
            let floor = 1e-10 * scale;
            if l.im.abs() > IMAG_TOL * l.re.abs() + floor {
                return Err(Error::UnstableSpectrum { re: l.re, im: l.im });
            }
            if l.re.abs() > floor {
                max_imag_ratio = max_imag_ratio.max(l.im.abs() / l.re.abs());
            }
        }
        let re = re.max(0.0);
        let mut vectors: Vec<Vec<c64>> = cluster.iter().map(|i| (0..dim).map(|k| u[(k, *i)]).collect()).collect();
        orthonormalize(&mut vectors);
        let k = vectors.len();
        let gram = Mat::<c64>::from_fn(k, k, |a, b| eta_dot(&eta, &vectors[a], &vectors[b]));
        let g = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenSolver(format!("norm matrix eigendecomposition failed: {e:?}")))?;
        let gs = g.S().column_vector();
        let gu = g.U();
        for c in 0..k {
            let norm = gs[c].re;
            smallest_norm = smallest_norm.min(norm.abs());
            if norm <= 1e-8 {
                continue;
            }
            let inv = 1.0 / norm.sqrt();
            let mut v: Vec<c64> = (0..dim)
                .map(|row| (0..k).map(|a| vectors[a][row] * gu[(a, c)]).sum::<c64>() * inv)
                .collect();
            fix_phase(&mut v);
            branches.push(PolaritonBranch::from_vector(re, &v));
        }
    }

    let expected = matrix.n_transitions + 1;
    if branches.len() != expected {
        return Err(Error::BranchSelection {
            expected,
            found: branches.len(),
            condition: 1.0 / smallest_norm,
        });
    }
    branches.sort_by(|a, b| a.hw_mev.total_cmp(&b.hw_mev));
    Ok(PolaritonSpectrum {
        hw_c: matrix.hw_c,
        branches,
        max_imag_ratio,
        pairing_defect,
    })
}

/// Modified Gram–Schmidt in the Euclidean inner product.
fn orthonormalize(vectors: &mut [Vec<c64>]) {
    if vectors.len() < 2 {
        let n = vectors[0].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        vectors[0].iter_mut().for_each(|c| *c /= n);
        return;
    }
    for i in 0..vectors.len() {
        for j in 0..i {
            let (done, rest) = vectors.split_at_mut(i);
            let p: c64 = done[j].iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
            rest[0].iter_mut().zip(&done[j]).for_each(|(b, a)| *b -= p * a);
        }
        let n = vectors[i].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        vectors[i].iter_mut().for_each(|c| *c /= n);
    }
}

/// Build and diagonalize in one step.
pub fn solve(model: &HopfieldModel, hw_c: f64) -> Result<PolaritonSpectrum> {
    diagonalize(&build_matrix(model, hw_c))
}

/// A single transition, all energies in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelParams {
    pub hw: f64,
    pub rabi_res: f64,
    pub xi: f64,
}

impl TwoLevelParams {
    /// `ħω̃ = √(ħω(ħω + 4ħΞ))`.
    pub fn shifted_hw(&self) -> f64 {
        (self.hw * (self.hw + 4.0 * self.xi)).sqrt()
    }

    /// Lower-branch frequency as `ω_c → ∞`.
    pub fn high_cavity_limit(&self) -> f64 {
        let a = self.xi / self.hw - (self.rabi_res / self.hw).powi(2);
        self.hw * (1.0 + 4.0 * a).sqrt()
    }
}

/// Closed-form diagonalization of the 4×4 single-transition matrix.
///
/// With `P = w′+y′`, `Q = w′−y′`, `X = x+z`, `Y = x−z` (where `w = iw′`, `y = iy′`) the
/// eigenproblem reduces to `[[ω_c², −2Ωω_c], [−2Ωω, ω̃²]]·(P, Y) = λ²(P, Y)` together
/// with `λP = ω_cQ` and `λY = ωX`.
pub fn two_subband_solve(params: TwoLevelParams, hw_c: f64) -> Result<PolaritonSpectrum> {
    let TwoLevelParams { hw, rabi_res, xi } = params;
    let rabi = rabi_res * (hw_c / hw).sqrt();
    let wt2 = hw * (hw + 4.0 * xi);
    let wc2 = hw_c * hw_c;
    let disc = ((wc2 - wt2).powi(2) + 16.0 * rabi_res * rabi_res * wc2).sqrt();
    let s_plus = 0.5 * (wc2 + wt2 + disc);
    let s_minus = if s_plus > 0.0 {
        wc2 * (wt2 - 4.0 * rabi_res * rabi_res) / s_plus
    } else {
        0.0
    };
    if s_minus < 0.0 {
        return Err(Error::UnstableSpectrum {
            re: 0.0,
            im: (-s_minus).sqrt(),
        });
    }

    let mut branches = Vec::with_capacity(2);
    for s in [s_minus, s_plus] {
        let lambda = s.sqrt();
        let v = if hw_c == 0.0 && lambda == 0.0 {
            vec![c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)]
        } else {
            let row1 = (wc2 - s, -2.0 * rabi * hw_c);
            let row2 = (-2.0 * rabi * hw, wt2 - s);
            let (p, y) = if row1.0.hypot(row1.1) >= row2.0.hypot(row2.1) {
                (-row1.1, row1.0)
            } else {
                (-row2.1, row2.0)
            };
            let q = if lambda <= hw_c {
                lambda * p / hw_c
            } else {
                (hw_c * p - 2.0 * rabi * y) / lambda
            };
            let x = lambda * y / hw;
            let norm = p * q + x * y;
            if norm <= 0.0 {
                return Err(Error::BranchSelection {
                    expected: 2,
                    found: branches.len(),
                    condition: 1.0 / norm.abs(),
                });
            }
            let k = 0.5 / norm.sqrt();
            vec![
                c64::new(0.0, (p + q) * k),
                c64::new((x + y) * k, 0.0),
                c64::new(0.0, (p - q) * k),
                c64::new((x - y) * k, 0.0),
            ]
        };
        let mut v = v;
        fix_phase(&mut v);
        branches.push(PolaritonBranch::from_vector(lambda, &v));
    }
    Ok(PolaritonSpectrum {
        hw_c,
        branches,
        max_imag_ratio: 0.0,
        pairing_defect: 0.0,
    })
}

/// For each branch of `next`, the index of the branch of `prev` it continues, chosen by
/// largest `|⟨prev|η|next⟩|` (greedy over all pairs, strongest first).
pub fn match_branches(prev: &PolaritonSpectrum, next: &PolaritonSpectrum) -> Vec<usize> {
    let n = next.branches.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, b) in next.branches.iter().enumerate() {
        for (j, a) in prev.branches.iter().enumerate() {
            pairs.push((a.overlap(b), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![usize::MAX; n];
    let mut taken = vec![false; prev.branches.len()];
    for (_, i, j) in pairs {
        if assigned[i] == usize::MAX && !taken[j] {
            assigned[i] = j;
            taken[j] = true;
        }
    }
    assigned
}
