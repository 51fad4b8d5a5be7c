//! Frequency response `A(f)`, its inverse `B(f)` and the cross-spectrum `P(f) = B V B*`.
//!
//! Frequencies are in cycles/sample. Only `[0, 0.5]` is materialised on a
//! grid since `P(-f) = conj(P(f))`; single-point evaluators accept any `f`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::FrequencyGrid;
use crate::var::VarModel;

pub type ComplexMatrix = DMatrix<Complex64>;

const DET_TOL: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-8;

/// `A(f) = I - Σ_j A_j e^{-2πijf}`, evaluated by Horner's rule in `z = e^{-2πif}`.
pub fn ar_fourier(model: &VarModel, f: f64) -> ComplexMatrix {
    let k = model.k();
    let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f);
    let mut acc = ComplexMatrix::zeros(k, k);
    for a in model.coeffs().iter().rev() {
        acc = acc * z + a.map(Complex64::from);
        // acc now holds A_j + z A_{j+1} + ...
    }
    let mut out = ComplexMatrix::identity(k, k);
    if model.order() > 0 {
        out -= acc * z;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub frequency: f64,
    pub a_of_f: ComplexMatrix,
    /// `B(f) = A(f)⁻¹`.
    pub b_of_f: ComplexMatrix,
}

pub fn transfer_matrix(model: &VarModel, f: f64) -> Result<TransferMatrix> {
    let a = ar_fourier(model, f);
    let k = model.k();
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let singular = || Error::SingularFrequency { frequency: f };
    let lu = a.clone().lu();
    if lu.determinant().norm() < DET_TOL * scale.powi(k as i32) {
        return Err(singular());
    }
    let b = lu.try_inverse().ok_or_else(singular)?;
    let b_scale = b.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let defect = (&a * &b - ComplexMatrix::identity(k, k))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if !(defect <= INVERSE_TOL * b_scale) {
        return Err(singular());
    }
    Ok(TransferMatrix {
        frequency: f,
        a_of_f: a,
        b_of_f: b,
    })
}

/// `B V B*` with Hermitian symmetrisation.
pub(crate) fn sandwich(b: &ComplexMatrix, v: &DMatrix<f64>) -> ComplexMatrix {
    let v = v.map(Complex64::from);
    let p = b * v * b.adjoint();
    (&p + p.adjoint()).scale(0.5)
}

/// Cross-spectrum matrix at a single frequency (any real `f`).
pub fn cross_spectrum_at(model: &VarModel, f: f64) -> Result<ComplexMatrix> {
    let t = transfer_matrix(model, f)?;
    Ok(sandwich(&t.b_of_f, model.noise_cov()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    grid: FrequencyGrid,
    matrices: Vec<ComplexMatrix>,
}

impl CrossSpectrum {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// One Hermitian k×k matrix per grid point, in grid order.
    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn k(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    /// Power spectrum `p_ii(f)` of one channel (0-based).
    pub fn diagonal(&self, channel: usize) -> Result<Vec<f64>> {
        spectrum_diagonal(self, channel)
    }
}

pub fn cross_spectrum(model: &VarModel, grid: &FrequencyGrid) -> Result<CrossSpectrum> {
    let matrices = grid
        .points()
        .par_iter()
        .map(|&f| cross_spectrum_at(model, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossSpectrum {
        grid: grid.clone(),
        matrices,
    })
}

/// Real parts of `P_ii(f)` across the grid.
pub fn spectrum_diagonal(cs: &CrossSpectrum, channel: usize) -> Result<Vec<f64>> {
    if channel >= cs.k() {
        return Err(Error::Invalid(format!(
            "channel index {channel} out of range for {} channels",
            cs.k()
        )));
    }
    Ok(cs.matrices.iter().map(|p| p[(channel, channel)].re).collect())
}
