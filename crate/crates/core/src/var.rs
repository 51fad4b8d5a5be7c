//! Vector autoregressive models: estimation, order selection and residuals.
//!
//! A VAR(m) model is `y_n = Σ_{j=1..m} A_j y_{n-j} + v_n` with `v_n ~ N(0, V)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{is_psd, max_abs, symmetrize};
use crate::series::{default_names, MultivariateSeries};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    coeffs: Vec<DMatrix<f64>>,
    noise_cov: DMatrix<f64>,
    channel_names: Vec<String>,
    sampling_interval: f64,
}

impl VarModel {
    /// Validates shapes, symmetry and (numerical) positive semi-definiteness of `noise_cov`.
    pub fn new(
        coeffs: Vec<DMatrix<f64>>,
        noise_cov: DMatrix<f64>,
        channel_names: Vec<String>,
        sampling_interval: f64,
    ) -> Result<Self> {
        let k = noise_cov.nrows();
        if k == 0 || noise_cov.ncols() != k {
            return Err(Error::Invalid("noise covariance must be a non-empty square matrix".into()));
        }
        for a in &coeffs {
            if a.nrows() != k || a.ncols() != k {
                return Err(Error::DimensionMismatch {
                    what: "coefficient matrix",
                    expected: k,
                    found: a.nrows().max(a.ncols()),
                });
            }
        }
        if channel_names.len() != k {
            return Err(Error::DimensionMismatch {
                what: "channel names",
                expected: k,
                found: channel_names.len(),
            });
        }
        if coeffs.iter().chain(std::iter::once(&noise_cov)).any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::Invalid("model contains non-finite values".into()));
        }
        if !(sampling_interval.is_finite() && sampling_interval > 0.0) {
            return Err(Error::Invalid("sampling interval must be positive".into()));
        }
        let scale = max_abs(&noise_cov);
        if max_abs(&(&noise_cov - noise_cov.transpose())) > SYMMETRY_TOL * scale {
            return Err(Error::Invalid("noise covariance is not symmetric".into()));
        }
        if !is_psd(&noise_cov, PSD_TOL) {
            return Err(Error::Invalid("noise covariance is not positive semi-definite".into()));
        }
        Ok(Self {
            coeffs,
            noise_cov,
            channel_names,
            sampling_interval,
        })
    }

    /// Model with default channel names and unit sampling interval.
    pub fn from_parts(coeffs: Vec<DMatrix<f64>>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let names = default_names(noise_cov.nrows());
        Self::new(coeffs, noise_cov, names, 1.0)
    }

    pub fn k(&self) -> usize {
        self.noise_cov.nrows()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `A_1..A_m`; index 0 holds lag 1.
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k() {
            return Err(Error::DimensionMismatch {
                what: "channel names",
                expected: self.k(),
                found: names.len(),
            });
        }
        self.channel_names = names;
        Ok(self)
    }

    pub fn with_sampling_interval(mut self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Invalid("sampling interval must be positive".into()));
        }
        self.sampling_interval = dt;
        Ok(self)
    }

    /// Same dynamics, different noise covariance.
    pub fn with_noise_cov(&self, noise_cov: DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.coeffs.clone(),
            noise_cov,
            self.channel_names.clone(),
            self.sampling_interval,
        )
    }

    /// Same dynamics with the off-diagonal noise covariances zeroed.
    pub fn diagonalized(&self) -> Self {
        let mut v = DMatrix::zeros(self.k(), self.k());
        v.set_diagonal(&self.noise_cov.diagonal());
        Self {
            noise_cov: v,
            ..self.clone()
        }
    }

    /// The km×km companion matrix of the recursion.
    pub fn companion(&self) -> DMatrix<f64> {
        let (k, m) = (self.k(), self.order());
        let mut f = DMatrix::zeros(k * m, k * m);
        for (j, a) in self.coeffs.iter().enumerate() {
            f.view_mut((0, j * k), (k, k)).copy_from(a);
        }
        for i in k..k * m {
            f[(i, i - k)] = 1.0;
        }
        f
    }

    /// Spectral radius of the companion matrix; 0 for order 0.
    pub fn spectral_radius(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.companion()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// All roots of `det(I - Σ A_j z^j)` lie outside the unit disk.
    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// One-step prediction `Σ A_j y_{n-j}` for row `n` of `values` (requires `n ≥ m`).
    pub(crate) fn predict_row(&self, values: &DMatrix<f64>, n: usize) -> DVector<f64> {
        let mut pred = DVector::zeros(self.k());
        for (j, a) in self.coeffs.iter().enumerate() {
            let lagged = values.row(n - j - 1).transpose();
            pred.gemv(1.0, a, &lagged, 1.0);
        }
        pred
    }
}

/// Sample autocovariances `C_h = (1/N) Σ_{n>h} y_n y_{n-h}ᵀ` for `h = 0..=max_lag`.
///
/// The series is used as given; demean it first.
pub fn sample_autocovariance(series: &MultivariateSeries, max_lag: usize) -> Result<Vec<DMatrix<f64>>> {
    let y = series.values();
    let n = y.nrows();
    if max_lag >= n {
        return Err(Error::InsufficientData {
            need: max_lag + 1,
            have: n,
        });
    }
    let k = y.ncols();
    let cov = (0..=max_lag)
        .map(|h| {
            let lead = y.rows(h, n - h);
            let lag = y.rows(0, n - h);
            let mut c = DMatrix::zeros(k, k);
            c.gemm_tr(1.0 / n as f64, &lead, &lag, 0.0);
            c
        })
        .collect();
    Ok(cov)
}

struct Regression {
    coeffs: Vec<DMatrix<f64>>,
    noise_cov: DMatrix<f64>,
}

/// Least-squares regression of rows `start..N` on their `m` predecessors.
fn regress(series: &MultivariateSeries, m: usize, start: usize) -> Result<Regression> {
    let y = series.values();
    let (n, k) = (y.nrows(), y.ncols());
    let rows = n - start;
    let target = y.rows(start, rows).into_owned();

    if m == 0 {
        let mut v = DMatrix::zeros(k, k);
        v.gemm_tr(1.0 / rows as f64, &target, &target, 0.0);
        return Ok(Regression {
            coeffs: Vec::new(),
            noise_cov: symmetrize(&v),
        });
    }

    let width = k * m;
    let mut x = DMatrix::zeros(rows, width);
    for j in 0..m {
        x.view_mut((0, j * k), (rows, k))
            .copy_from(&y.rows(start - j - 1, rows));
    }
    let col_norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();

    let qr = x.clone().qr();
    let r = qr.r();
    let rank_tol = 1e-10;
    for (c, &norm) in col_norms.iter().enumerate() {
        if norm == 0.0 || r[(c, c)].abs() <= rank_tol * norm {
            return Err(Error::RankDeficient {
                lag: c / k + 1,
                channel: series.names()[c % k].clone(),
            });
        }
    }
    let mut qty = target.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, width).into_owned())
        .ok_or_else(|| Error::Singular("triangular factor of the regressors".into()))?;

    let coeffs: Vec<DMatrix<f64>> = (0..m)
        .map(|j| beta.rows(j * k, k).transpose())
        .collect();
    let resid = &target - &x * &beta;
    let mut v = DMatrix::zeros(k, k);
    v.gemm_tr(1.0 / rows as f64, &resid, &resid, 0.0);
    Ok(Regression {
        coeffs,
        noise_cov: symmetrize(&v),
    })
}

fn check_length(series: &MultivariateSeries, m: usize) -> Result<()> {
    let k = series.channels();
    let need = k * m + k + 1;
    if series.len() < need || series.len() <= m {
        return Err(Error::InsufficientData {
            need,
            have: series.len(),
        });
    }
    Ok(())
}

/// Ordinary least-squares VAR(m) fit over `n = m+1..N`.
///
/// The noise covariance uses divisor `N - m`. Order 0 is accepted and yields
/// `V = (1/N) Σ y_n y_nᵀ`.
pub fn fit_least_squares(series: &MultivariateSeries, order: usize) -> Result<VarModel> {
    check_length(series, order)?;
    let fit = regress(series, order, order)?;
    VarModel::new(
        fit.coeffs,
        fit.noise_cov,
        series.names().to_vec(),
        series.sampling_interval(),
    )
}

/// Solves the multivariate Yule-Walker equations `C_h = Σ_j A_j C_{h-j}`, `h = 1..m`.
///
/// The returned model has default channel names; use [`VarModel::with_names`].
pub fn fit_yule_walker(cov: &[DMatrix<f64>], order: usize) -> Result<VarModel> {
    if cov.len() < order + 1 {
        return Err(Error::InsufficientData {
            need: order + 1,
            have: cov.len(),
        });
    }
    let k = cov[0].nrows();
    if k == 0 || cov.iter().any(|c| c.nrows() != k || c.ncols() != k) {
        return Err(Error::Invalid("autocovariances must be k×k with k ≥ 1".into()));
    }
    ensure_nonsingular(&cov[0], "lag-0 autocovariance")?;
    // C_{-h} = C_hᵀ
    let lagged = |h: isize| -> DMatrix<f64> {
        if h >= 0 {
            cov[h as usize].clone()
        } else {
            cov[(-h) as usize].transpose()
        }
    };

    let m = order;
    let coeffs = if m == 0 {
        Vec::new()
    } else {
        // [A_1 … A_m] G = [C_1 … C_m], G block (j, h) = C_{h-j}; solve the transpose.
        let mut g_t = DMatrix::zeros(k * m, k * m);
        let mut rhs_t = DMatrix::zeros(k * m, k);
        for j in 0..m {
            for h in 0..m {
                let block = lagged(h as isize - j as isize);
                g_t.view_mut((h * k, j * k), (k, k)).copy_from(&block.transpose());
            }
            rhs_t.view_mut((j * k, 0), (k, k)).copy_from(&cov[j + 1].transpose());
        }
        ensure_nonsingular(&g_t, "block-Toeplitz Yule-Walker system")?;
        let sol = g_t
            .lu()
            .solve(&rhs_t)
            .ok_or_else(|| Error::Singular("block-Toeplitz Yule-Walker system".into()))?;
        (0..m).map(|j| sol.rows(j * k, k).transpose()).collect::<Vec<_>>()
    };

    let mut v = cov[0].clone();
    for (j, a) in coeffs.iter().enumerate() {
        v -= a * cov[j + 1].transpose();
    }
    VarModel::from_parts(coeffs, symmetrize(&v))
}

fn ensure_nonsingular(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= 1e-12 * max {
        return Err(Error::Singular(what.to_owned()));
    }
    Ok(())
}

/// AIC of every order `0..=max_order`, all scored on the common sample `n = max_order+1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AicTable {
    pub aic: Vec<f64>,
    pub best_order: usize,
    /// Rows in the common effective sample, `N - max_order`.
    pub effective_len: usize,
}

/// Chooses the VAR order minimising
/// `AIC(m) = (N - M) log det V̂_m + 2 (k² m + k(k+1)/2)`, ties going to the smaller order.
pub fn select_order_aic(series: &MultivariateSeries, max_order: usize) -> Result<AicTable> {
    check_length(series, max_order)?;
    let k = series.channels() as f64;
    let effective_len = series.len() - max_order;
    let aic = (0..=max_order)
        .into_par_iter()
        .map(|m| {
            let fit = regress(series, m, max_order)?;
            let log_det = log_det_spd(&fit.noise_cov).ok_or_else(|| {
                Error::Singular(format!("noise covariance of the order-{m} fit"))
            })?;
            Ok(effective_len as f64 * log_det + 2.0 * (k * k * m as f64 + k * (k + 1.0) / 2.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let best_order = argmin_first(&aic);
    Ok(AicTable {
        aic,
        best_order,
        effective_len,
    })
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    log_det.is_finite().then_some(log_det)
}

/// One-step prediction errors `e_n = y_n - Σ A_j y_{n-j}` for `n ≥ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    values: DMatrix<f64>,
    offset: usize,
}

impl ResidualSeries {
    /// Row `r` is the residual at time index `offset + r` (0-based), so `offset == m`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

pub fn residuals(model: &VarModel, series: &MultivariateSeries) -> Result<ResidualSeries> {
    if series.channels() != model.k() {
        return Err(Error::DimensionMismatch {
            what: "series channels",
            expected: model.k(),
            found: series.channels(),
        });
    }
    let m = model.order();
    if series.len() <= m {
        return Err(Error::InsufficientData {
            need: m + 1,
            have: series.len(),
        });
    }
    let y = series.values();
    let mut values = DMatrix::zeros(y.nrows() - m, model.k());
    for n in m..y.nrows() {
        let e = y.row(n).transpose() - model.predict_row(y, n);
        values.set_row(n - m, &e.transpose());
    }
    Ok(ResidualSeries { values, offset: m })
}

/// Noise correlation matrix with the `1/sqrt(N+2)` flagging threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCorrelation {
    pub matrix: DMatrix<f64>,
    pub threshold: f64,
}

impl NoiseCorrelation {
    /// Whether `|R_ij|` exceeds the threshold (never true on the diagonal).
    pub fn is_flagged(&self, i: usize, j: usize) -> bool {
        i != j && self.matrix[(i, j)].abs() > self.threshold
    }
}

/// `R_ij = τ_ij / sqrt(τ_ii τ_jj)`; `n_obs` is the series length used for the threshold.
pub fn noise_correlation(model: &VarModel, n_obs: usize) -> Result<NoiseCorrelation> {
    let v = model.noise_cov();
    let k = model.k();
    if let Some(i) = (0..k).find(|&i| v[(i, i)] <= 0.0) {
        return Err(Error::ZeroVariance {
            channel: model.channel_names()[i].clone(),
        });
    }
    let matrix = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            v[(i, j)] / (v[(i, i)] * v[(j, j)]).sqrt()
        }
    });
    Ok(NoiseCorrelation {
        matrix,
        threshold: 1.0 / ((n_obs + 2) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn scalar_series(values: &[f64]) -> MultivariateSeries {
        MultivariateSeries::from_matrix(DMatrix::from_column_slice(values.len(), 1, values)).unwrap()
    }

    /// Plain simulation loop, independent of the simulation module.
    fn simulate_var(coeffs: &[DMatrix<f64>], chol: &DMatrix<f64>, n: usize, seed: u64) -> MultivariateSeries {
        let k = chol.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 500;
        let mut y = DMatrix::zeros(n + burn, k);
        for t in 0..n + burn {
            let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
            let mut next = chol * z;
            for (j, a) in coeffs.iter().enumerate() {
                if t > j {
                    next += a * y.row(t - j - 1).transpose();
                }
            }
            y.set_row(t, &next.transpose());
        }
        MultivariateSeries::from_matrix(y.rows(burn, n).into_owned()).unwrap()
    }

    fn bivariate_truth() -> (DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.3, 0.4]);
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        (a, v)
    }

    #[test]
    fn autocovariance_by_hand() {
        let c = sample_autocovariance(&scalar_series(&[1.0, -1.0]), 1).unwrap();
        assert_eq!(c[0][(0, 0)], 1.0);
        assert_eq!(c[1][(0, 0)], -0.5);
        assert!(sample_autocovariance(&scalar_series(&[1.0, -1.0]), 2).is_err());
        let zeros = sample_autocovariance(&scalar_series(&[0.0; 5]), 3).unwrap();
        assert!(zeros.iter().all(|c| c[(0, 0)] == 0.0));
    }

    #[test]
    fn autocovariance_of_white_noise() {
        let chol = DMatrix::identity(2, 2);
        let s = simulate_var(&[], &chol, 100_000, 11);
        let c = sample_autocovariance(&s, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((c[0][(i, j)] - id).abs() < 0.02);
                assert!(c[1][(i, j)].abs() < 0.02);
            }
        }
    }

    #[test]
    fn least_squares_recovers_exact_recursion() {
        let values: Vec<f64> = (0..40).map(|n| 0.5f64.powi(n)).collect();
        let model = fit_least_squares(&scalar_series(&values), 1).unwrap();
        assert!((model.coeffs()[0][(0, 0)] - 0.5).abs() < 1e-10);
        assert!(model.noise_cov()[(0, 0)].abs() < 1e-10);
    }

    #[test]
    fn least_squares_recovers_deterministic_var2() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.6, 0.3, -0.4, 0.5]);
        let a2 = DMatrix::from_row_slice(2, 2, &[-0.2, 0.1, 0.25, -0.3]);
        let n = 60;
        let mut y = DMatrix::zeros(n, 2);
        y.set_row(0, &nalgebra::RowDVector::from_row_slice(&[1.0, -0.5]));
        y.set_row(1, &nalgebra::RowDVector::from_row_slice(&[0.3, 2.0]));
        for t in 2..n {
            let next = &a1 * y.row(t - 1).transpose() + &a2 * y.row(t - 2).transpose();
            y.set_row(t, &next.transpose());
        }
        let model = fit_least_squares(&MultivariateSeries::from_matrix(y).unwrap(), 2).unwrap();
        assert!((&model.coeffs()[0] - &a1).amax() < 1e-8);
        assert!((&model.coeffs()[1] - &a2).amax() < 1e-8);
    }

    #[test]
    fn least_squares_and_yule_walker_recover_simulated_var1() {
        let (a, v) = bivariate_truth();
        let chol = v.clone().cholesky().unwrap().l();
        let s = crate::series::demean(&simulate_var(std::slice::from_ref(&a), &chol, 10_000, 3));
        let ls = fit_least_squares(&s, 1).unwrap();
        assert!((&ls.coeffs()[0] - &a).amax() < 0.05);
        assert!((ls.noise_cov() - &v).amax() < 0.05);
        let yw = fit_yule_walker(&sample_autocovariance(&s, 1).unwrap(), 1).unwrap();
        assert!((&yw.coeffs()[0] - &ls.coeffs()[0]).amax() < 0.05);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = MultivariateSeries::from_matrix(DMatrix::from_element(4, 2, 1.0)).unwrap();
        assert!(matches!(fit_least_squares(&s, 2), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn collinear_channels_are_named() {
        let base: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let mut data = Vec::new();
        for v in &base {
            data.extend_from_slice(&[*v, 2.0 * v]);
        }
        let s = MultivariateSeries::new(
            vec!["u".into(), "w".into()],
            DMatrix::from_row_slice(50, 2, &data),
            1.0,
        )
        .unwrap();
        match fit_least_squares(&s, 1) {
            Err(Error::RankDeficient { lag, channel }) => {
                assert_eq!(lag, 1);
                assert_eq!(channel, "w");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn order_zero_fit_is_sample_covariance() {
        let s = crate::series::demean(&simulate_var(&[], &DMatrix::identity(2, 2), 200, 5));
        let model = fit_least_squares(&s, 0).unwrap();
        let c0 = &sample_autocovariance(&s, 0).unwrap()[0];
        assert_eq!(model.order(), 0);
        assert!((model.noise_cov() - c0).amax() < 1e-14);
    }

    #[test]
    fn scalar_yule_walker() {
        let cov = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 0.5)];
        let model = fit_yule_walker(&cov, 1).unwrap();
        assert!((model.coeffs()[0][(0, 0)] - 0.5).abs() < 1e-15);
        assert!((model.noise_cov()[(0, 0)] - 0.75).abs() < 1e-15);
        let zero = vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)];
        assert!(matches!(fit_yule_walker(&zero, 1), Err(Error::Singular(_))));
    }

    #[test]
    fn aic_selects_zero_for_white_noise() {
        let s = simulate_var(&[], &DMatrix::identity(1, 1), 2000, 21);
        let table = select_order_aic(&crate::series::demean(&s), 5).unwrap();
        assert_eq!(table.aic.len(), 6);
        assert_eq!(table.best_order, 0);
    }

    #[test]
    fn aic_selects_two_for_strong_ar2() {
        let a1 = DMatrix::from_element(1, 1, 1.2);
        let a2 = DMatrix::from_element(1, 1, -0.6);
        let s = simulate_var(&[a1, a2], &DMatrix::identity(1, 1), 2000, 8);
        let table = select_order_aic(&crate::series::demean(&s), 6).unwrap();
        assert_eq!(table.best_order, 2);
    }

    #[test]
    fn aic_with_max_order_zero() {
        let s = simulate_var(&[], &DMatrix::identity(2, 2), 100, 1);
        let table = select_order_aic(&s, 0).unwrap();
        assert_eq!(table.best_order, 0);
        assert_eq!(table.aic.len(), 1);
    }

    #[test]
    fn aic_ties_go_to_smaller_order() {
        assert_eq!(argmin_first(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin_first(&[1.0, 1.0]), 0);
    }

    #[test]
    fn residuals_of_zero_model_are_the_data() {
        let s = simulate_var(&[], &DMatrix::identity(2, 2), 30, 2);
        let model = VarModel::from_parts(vec![DMatrix::zeros(2, 2); 3], DMatrix::identity(2, 2)).unwrap();
        let e = residuals(&model, &s).unwrap();
        assert_eq!(e.offset(), 3);
        assert_eq!(e.values(), &s.values().rows(3, 27).into_owned());
    }

    #[test]
    fn residuals_of_exact_recursion_vanish() {
        let values: Vec<f64> = (0..30).map(|n| 0.5f64.powi(n)).collect();
        let model = VarModel::from_parts(vec![DMatrix::from_element(1, 1, 0.5)], DMatrix::identity(1, 1)).unwrap();
        let e = residuals(&model, &scalar_series(&values)).unwrap();
        assert!(e.values().amax() < 1e-10);
    }

    #[test]
    fn least_squares_residuals_satisfy_normal_equations() {
        let (a, v) = bivariate_truth();
        let chol = v.cholesky().unwrap().l();
        let s = crate::series::demean(&simulate_var(&[a], &chol, 3000, 9));
        let model = fit_least_squares(&s, 2).unwrap();
        let e = residuals(&model, &s).unwrap();
        let rows = e.len() as f64;
        let y = s.values();
        // Residuals are orthogonal to every lagged regressor.
        for lag in 1..=2 {
            let x = y.rows(2 - lag, e.len());
            let cross = x.transpose() * e.values();
            let scale = x.norm() * e.values().norm();
            assert!(cross.amax() < 1e-10 * scale);
        }
        // No intercept is fitted, so the mean is only statistically small.
        for col in e.values().column_iter() {
            let mean = col.sum() / rows;
            let sd = (col.map(|x| x * x).sum() / rows).sqrt();
            assert!(mean.abs() < 4.0 * sd / rows.sqrt());
        }
        let mut cov = DMatrix::zeros(2, 2);
        cov.gemm_tr(1.0 / rows, e.values(), e.values(), 0.0);
        let rel = (&cov - model.noise_cov()).amax() / model.noise_cov().amax();
        assert!(rel < 1e-10);
    }

    #[test]
    fn residual_dimension_mismatch() {
        let model = VarModel::from_parts(vec![], DMatrix::identity(3, 3)).unwrap();
        let s = simulate_var(&[], &DMatrix::identity(2, 2), 10, 1);
        assert!(matches!(residuals(&model, &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn correlation_examples() {
        let diag = VarModel::from_parts(vec![], DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 5.0]))).unwrap();
        assert_eq!(noise_correlation(&diag, 10).unwrap().matrix, DMatrix::identity(2, 2));

        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.84575, 0.84575, 1.0]);
        let corr = noise_correlation(&VarModel::from_parts(vec![], v).unwrap(), 998).unwrap();
        assert_eq!(corr.matrix[(1, 0)], 0.84575);
        assert!((corr.threshold - 0.0316).abs() < 5e-5);
        assert!(corr.is_flagged(1, 0));
        assert!(!corr.is_flagged(0, 0));

        let zero = VarModel::from_parts(vec![], DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(noise_correlation(&zero, 10), Err(Error::ZeroVariance { .. })));
    }

    #[test]
    fn stability_diagnostic() {
        let stable = VarModel::from_parts(vec![DMatrix::from_element(1, 1, 0.5)], DMatrix::identity(1, 1)).unwrap();
        assert!((stable.spectral_radius() - 0.5).abs() < 1e-12);
        assert!(stable.is_stable());
        let unit = VarModel::from_parts(vec![DMatrix::from_element(1, 1, 1.0)], DMatrix::identity(1, 1)).unwrap();
        assert!(!unit.is_stable());
    }

    #[test]
    fn rejects_non_psd_noise() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(VarModel::from_parts(vec![], v).is_err());
    }
}
