//! Uniform periodic grid on the cavity spacer `[-L_c/2, L_c/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`Grid::new`].
pub const MIN_POINTS: usize = 64;

/// Uniform ring discretization of the spacer.
///
/// The point `z = +L_c/2` is identified with `z = -L_c/2`, so the grid stores
/// `n_points` samples `z_k = -L_c/2 + k·dz` and index 0 is the lead (seam).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_points: usize,
    length_nm: f64,
}

impl Grid {
    pub fn new(n_points: usize, length_nm: f64) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum of {MIN_POINTS}"
            )));
        }
        if !(length_nm.is_finite() && length_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacer length must be positive and finite, got {length_nm}"
            )));
        }
        Ok(Self {
            n_points,
            length_nm,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length_nm
    }

    pub fn dz(&self) -> f64 {
        self.length_nm / self.n_points as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        -0.5 * self.length_nm + k as f64 * self.dz()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.z(k))
    }

    /// Central-difference derivative with periodic wrap.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        derivative(f, self.dz())
    }

    /// Periodic rectangle rule, which is the exact trapezoid rule on a ring.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dz()
    }

    /// `Σ_k f(z_k) g(z_k) dz`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.dz()
    }
}

/// Second-order central difference with periodic wrap: `(f[k+1] - f[k-1]) / (2 dz)`.
pub fn derivative(f: &[f64], dz: f64) -> Vec<f64> {
    let n = f.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = 0.5 / dz;
    (0..n)
        .map(|k| {
            let next = f[(k + 1) % n];
            let prev = f[(k + n - 1) % n];
            (next - prev) * scale
        })
        .collect()
}
