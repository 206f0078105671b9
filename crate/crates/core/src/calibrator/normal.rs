//! Dense normal equations for the 8-parameter least-squares problems.

use crate::error::{Error, Result};
use crate::sensor::ParamVector;

const N: usize = ParamVector::LEN;

/// Smallest acceptable pivot of the unit-diagonal (Jacobi-scaled) normal
/// matrix. Below this the system is treated as rank deficient.
pub(crate) const PIVOT_TOLERANCE: f64 = 1e-13;

/// Accumulates `AᵀA` and `Aᵀb` one residual row at a time.
#[derive(Debug, Clone)]
pub(crate) struct NormalEquations {
    pub ata: [[f64; N]; N],
    pub atb: [f64; N],
}

impl NormalEquations {
    pub fn new() -> Self {
        NormalEquations {
            ata: [[0.0; N]; N],
            atb: [0.0; N],
        }
    }

    /// Adds the residual `row·ζ − rhs`.
    pub fn add_row(&mut self, row: &[f64; N], rhs: f64) {
        for i in 0..N {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..N {
                self.ata[i][j] += row[i] * row[j];
            }
            self.atb[i] += row[i] * rhs;
        }
    }

    /// Adds `weight·(ζ_j − target)²`.
    pub fn add_diagonal(&mut self, j: usize, weight: f64, target: f64) {
        self.ata[j][j] += weight;
        self.atb[j] += weight * target;
    }

    pub fn solve(&self) -> Result<[f64; N]> {
        solve_spd(&self.ata, &self.atb)
    }
}

/// Solves `m·x = rhs` for symmetric positive-definite `m` by Cholesky
/// factorization of the Jacobi-scaled matrix.
pub(crate) fn solve_spd(m: &[[f64; N]; N], rhs: &[f64; N]) -> Result<[f64; N]> {
    let mut scale = [0.0; N];
    for i in 0..N {
        let d = m[i][i];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularSystem(format!(
                "parameter {} is unconstrained (diagonal {d})",
                i + 1
            )));
        }
        scale[i] = 1.0 / d.sqrt();
    }

    // lower-triangular factor of D^{-1/2} m D^{-1/2}
    let mut l = [[0.0; N]; N];
    for j in 0..N {
        let mut sum = m[j][j] * scale[j] * scale[j];
        for k in 0..j {
            sum -= l[j][k] * l[j][k];
        }
        if !(sum > PIVOT_TOLERANCE) {
            return Err(Error::SingularSystem(format!(
                "normal matrix is rank deficient (pivot {sum:.3e} at parameter {})",
                j + 1
            )));
        }
        let pivot = sum.sqrt();
        l[j][j] = pivot;
        for i in j + 1..N {
            let mut sum = m[i][j] * scale[i] * scale[j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            l[i][j] = sum / pivot;
        }
    }

    let mut y = [0.0; N];
    for i in 0..N {
        let mut sum = rhs[i] * scale[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut sum = y[i];
        for k in i + 1..N {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    for (xi, s) in x.iter_mut().zip(scale) {
        *xi *= s;
    }
    Ok(x)
}
