//! Counterfactual replay, seeded simulation and Monte Carlo variance studies.
//!
//! Replay re-runs the fitted recursion `y_n = Σ_j A_j y_{n-j} + e_n` driven by
//! a subset of the extracted residual channels, attributing the observed
//! variation to individual noise sources. The Monte Carlo harness simulates the
//! model under alternative noise covariances in which selected pairs of noises
//! are correlated, and summarises the per-channel sample variances.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, symmetric_sqrt, symmetrize};
use crate::series::MultivariateSeries;
use crate::var::{ResidualSeries, VarModel};

const PSD_TOL: f64 = 1e-10;

/// Covariance between noises `l` and `m` (1-based channel numbers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCovariance {
    pub l: usize,
    pub m: usize,
    pub cov: f64,
}

/// A noise covariance built from fixed base variances plus selected correlated pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseScenario {
    label: String,
    base_variances: Vec<f64>,
    pairs: Vec<PairCovariance>,
    covariance: DMatrix<f64>,
}

impl NoiseScenario {
    /// Rejects out-of-range or repeated pairs, covariances above `sqrt(τ_ll τ_mm)`,
    /// and assembled matrices that are not positive semi-definite.
    pub fn new(label: impl Into<String>, base_variances: Vec<f64>, pairs: Vec<PairCovariance>) -> Result<Self> {
        let label = label.into();
        let reject = |reason: String| Error::Scenario {
            label: label.clone(),
            reason,
        };
        let k = base_variances.len();
        if k == 0 {
            return Err(reject("no base variances".into()));
        }
        if let Some(v) = base_variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(reject(format!("base variance {v} is not a finite non-negative number")));
        }
        let mut covariance = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(base_variances.clone()));
        for pair in &pairs {
            let PairCovariance { l, m, cov } = *pair;
            if l == m || l == 0 || m == 0 || l > k || m > k {
                return Err(reject(format!("pair ({l}, {m}) is not a pair of distinct channels in 1..={k}")));
            }
            if !cov.is_finite() {
                return Err(reject(format!("pair ({l}, {m}) has a non-finite covariance")));
            }
            let (a, b) = (l - 1, m - 1);
            if covariance[(a, b)] != 0.0 {
                return Err(reject(format!("pair ({l}, {m}) is listed twice")));
            }
            let bound = (base_variances[a] * base_variances[b]).sqrt();
            if cov.abs() > bound {
                return Err(reject(format!(
                    "pair ({l}, {m}) covariance {cov} exceeds sqrt(var_{l} var_{m}) = {bound}"
                )));
            }
            covariance[(a, b)] = cov;
            covariance[(b, a)] = cov;
        }
        let min_eig = min_eigenvalue(&covariance);
        if min_eig < -PSD_TOL * covariance.trace() {
            let listed: Vec<String> = pairs.iter().map(|p| format!("({}, {})", p.l, p.m)).collect();
            return Err(reject(format!(
                "covariance with pairs {} is not positive semi-definite (min eigenvalue {min_eig})",
                listed.join(", ")
            )));
        }
        Ok(Self {
            label,
            base_variances,
            pairs,
            covariance,
        })
    }

    /// Independent noises with the model's own variances, labelled `(1,2,…,k)`.
    pub fn baseline(model: &VarModel) -> Self {
        let vars: Vec<f64> = model.noise_cov().diagonal().iter().copied().collect();
        let label = format!(
            "({})",
            (1..=vars.len()).map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::new(label, vars, Vec::new()).expect("diagonal of a PSD matrix is a valid scenario")
    }

    /// Baseline plus the model's fitted covariance between noises `l` and `m` (1-based),
    /// labelled `(l+m)` with the smaller index first.
    pub fn with_model_pair(model: &VarModel, l: usize, m: usize) -> Result<Self> {
        let k = model.k();
        if l == m || l == 0 || m == 0 || l > k || m > k {
            return Err(Error::Invalid(format!("pair ({l}, {m}) out of range for {k} channels")));
        }
        let (lo, hi) = (l.min(m), l.max(m));
        let vars: Vec<f64> = model.noise_cov().diagonal().iter().copied().collect();
        let cov = model.noise_cov()[(lo - 1, hi - 1)];
        Self::new(format!("({lo}+{hi})"), vars, vec![PairCovariance { l: lo, m: hi, cov }])
    }

    /// Scenario reproducing a full covariance matrix (every non-zero off-diagonal becomes a pair).
    pub fn from_covariance(label: impl Into<String>, cov: &DMatrix<f64>) -> Result<Self> {
        let k = cov.nrows();
        let vars = cov.diagonal().iter().copied().collect();
        let mut pairs = Vec::new();
        for lo in 0..k {
            for hi in lo + 1..k {
                let c = 0.5 * (cov[(lo, hi)] + cov[(hi, lo)]);
                if c != 0.0 {
                    pairs.push(PairCovariance { l: lo + 1, m: hi + 1, cov: c });
                }
            }
        }
        Self::new(label, vars, pairs)
    }

    /// The baseline followed by one scenario per noise pair, in `(1+2), (1+3), …` order.
    pub fn single_pair_family(model: &VarModel) -> Result<Vec<Self>> {
        let k = model.k();
        let mut out = vec![Self::baseline(model)];
        for lo in 1..=k {
            for hi in lo + 1..=k {
                out.push(Self::with_model_pair(model, lo, hi)?);
            }
        }
        Ok(out)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn k(&self) -> usize {
        self.base_variances.len()
    }

    pub fn base_variances(&self) -> &[f64] {
        &self.base_variances
    }

    pub fn pairs(&self) -> &[PairCovariance] {
        &self.pairs
    }

    pub fn is_baseline(&self) -> bool {
        self.pairs.iter().all(|p| p.cov == 0.0)
    }

    /// The assembled symmetric covariance.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// Samples discarded before the retained window: `10 m + 100`.
pub fn burn_in(order: usize) -> usize {
    10 * order + 100
}

/// Row-major VAR recursion from a zero state, discarding the burn-in.
fn run_recursion(model: &VarModel, factor: &DMatrix<f64>, length: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = model.k();
    let m = model.order();
    let burn = burn_in(m);
    let total = burn + length;
    let coeffs: Vec<Vec<f64>> = model
        .coeffs()
        .iter()
        .map(|a| a.transpose().as_slice().to_vec()) // row-major
        .collect();
    let factor_rm = factor.transpose().as_slice().to_vec();

    let mut y = vec![0.0; total * k];
    let mut z = vec![0.0; k];
    for t in 0..total {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for i in 0..k {
            let mut acc = 0.0;
            for c in 0..k {
                acc += factor_rm[i * k + c] * z[c];
            }
            for (j, a) in coeffs.iter().enumerate() {
                if t > j {
                    let lag = &y[(t - j - 1) * k..(t - j) * k];
                    acc += a[i * k..(i + 1) * k].iter().zip(lag).map(|(x, w)| x * w).sum::<f64>();
                }
            }
            y[t * k + i] = acc;
        }
    }
    y.split_off(burn * k)
}

fn check_scenario(model: &VarModel, scenario: &NoiseScenario) -> Result<()> {
    if scenario.k() != model.k() {
        return Err(Error::DimensionMismatch {
            what: "scenario channels",
            expected: model.k(),
            found: scenario.k(),
        });
    }
    Ok(())
}

/// One seeded realisation of length `length` under the scenario covariance.
///
/// Noise is `L z` with `L` the symmetric square root of the covariance and
/// `z` independent standard normals. Unstable models are simulated anyway.
pub fn simulate(model: &VarModel, scenario: &NoiseScenario, length: usize, seed: u64) -> Result<MultivariateSeries> {
    check_scenario(model, scenario)?;
    if length == 0 {
        return Err(Error::Invalid("simulation length must be positive".into()));
    }
    let factor = symmetric_sqrt(scenario.covariance());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = run_recursion(model, &factor, length, &mut rng);
    MultivariateSeries::new(
        model.channel_names().to_vec(),
        DMatrix::from_row_slice(length, model.k(), &data),
        model.sampling_interval(),
    )
}

/// Mean and spread of per-channel sample variances over a Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub label: String,
    pub mean_var: Vec<f64>,
    /// Standard deviation over replicates (divisor R - 1); 0 when R = 1.
    pub sd_var: Vec<f64>,
    pub replicates: usize,
    pub length: usize,
    pub seed: u64,
}

impl SimulationSummary {
    /// True when only one replicate was run and `sd_var` is a placeholder 0.
    pub fn sd_undefined(&self) -> bool {
        self.replicates < 2
    }

    /// Standard error of `mean_var[channel]`.
    pub fn standard_error(&self, channel: usize) -> f64 {
        self.sd_var[channel] / (self.replicates as f64).sqrt()
    }
}

/// Variance about the known zero process mean, per channel.
fn second_moments(data: &[f64], k: usize) -> Vec<f64> {
    let n = data.len() / k;
    let mut out = vec![0.0; k];
    for row in data.chunks_exact(k) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n as f64);
    out
}

/// Runs `replicates` simulations per scenario and summarises sample variances.
///
/// Replicate `r` of every scenario draws from the ChaCha stream `r` of `seed`
/// (common random numbers), so scenarios differ only through their
/// covariance. A baseline with no active pairs is prepended when the list has
/// none. Sample variances are taken about the zero process mean.
pub fn monte_carlo(
    model: &VarModel,
    scenarios: &[NoiseScenario],
    replicates: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<SimulationSummary>> {
    if replicates == 0 || length == 0 {
        return Err(Error::Invalid("replicates and length must be positive".into()));
    }
    for s in scenarios {
        check_scenario(model, s)?;
    }
    let mut all = Vec::with_capacity(scenarios.len() + 1);
    if !scenarios.iter().any(NoiseScenario::is_baseline) {
        let baseline = match scenarios.first() {
            Some(s) => NoiseScenario {
                label: NoiseScenario::baseline(model).label,
                base_variances: s.base_variances.clone(),
                pairs: Vec::new(),
                covariance: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.base_variances.clone())),
            },
            None => NoiseScenario::baseline(model),
        };
        all.push(baseline);
    }
    all.extend(scenarios.iter().cloned());

    let k = model.k();
    all.iter()
        .map(|scenario| {
            let factor = symmetric_sqrt(scenario.covariance());
            let variances: Vec<Vec<f64>> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r as u64);
                    second_moments(&run_recursion(model, &factor, length, &mut rng), k)
                })
                .collect();
            let reps = replicates as f64;
            let mut mean_var = vec![0.0; k];
            for v in &variances {
                for (m, x) in mean_var.iter_mut().zip(v) {
                    *m += x;
                }
            }
            mean_var.iter_mut().for_each(|m| *m /= reps);
            let mut sd_var = vec![0.0; k];
            if replicates > 1 {
                for v in &variances {
                    for ((s, x), m) in sd_var.iter_mut().zip(v).zip(&mean_var) {
                        *s += (x - m) * (x - m);
                    }
                }
                sd_var.iter_mut().for_each(|s| *s = (*s / (reps - 1.0)).sqrt());
            }
            Ok(SimulationSummary {
                label: scenario.label.clone(),
                mean_var,
                sd_var,
                replicates,
                length,
                seed,
            })
        })
        .collect()
}

/// `mean_var / baseline mean_var` per summary and channel, using the first
/// summary as the baseline (as returned by [`monte_carlo`]).
pub fn ratios_to_baseline(summaries: &[SimulationSummary]) -> Vec<Vec<f64>> {
    let Some(base) = summaries.first() else {
        return Vec::new();
    };
    summaries
        .iter()
        .map(|s| s.mean_var.iter().zip(&base.mean_var).map(|(a, b)| a / b).collect())
        .collect()
}

/// Stationary covariance of `y_n` when driven by noise covariance `noise_cov`.
///
/// Solves the discrete Lyapunov equation `Σ = F Σ Fᵀ + Q` for the companion
/// state by the doubling iteration and returns the leading k×k block.
pub fn stationary_covariance(model: &VarModel, noise_cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = model.k();
    if noise_cov.nrows() != k || noise_cov.ncols() != k {
        return Err(Error::DimensionMismatch {
            what: "noise covariance",
            expected: k,
            found: noise_cov.nrows(),
        });
    }
    let m = model.order();
    if m == 0 {
        return Ok(noise_cov.clone());
    }
    let radius = model.spectral_radius();
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let mut a = model.companion();
    let mut x = DMatrix::zeros(k * m, k * m);
    x.view_mut((0, 0), (k, k)).copy_from(noise_cov);
    for _ in 0..200 {
        let step = &a * &x * a.transpose();
        let done = step.amax() <= 1e-17 * x.amax();
        x += step;
        if done {
            return Ok(symmetrize(&x.view((0, 0), (k, k)).into_owned()));
        }
        a = &a * &a;
    }
    Err(Error::Singular("Lyapunov doubling iteration did not converge".into()))
}

fn check_replay_inputs(model: &VarModel, residuals: &ResidualSeries, series: &MultivariateSeries) -> Result<()> {
    let (k, m) = (model.k(), model.order());
    if series.channels() != k || residuals.values().ncols() != k {
        return Err(Error::DimensionMismatch {
            what: "replay channels",
            expected: k,
            found: if series.channels() != k {
                series.channels()
            } else {
                residuals.values().ncols()
            },
        });
    }
    if residuals.offset() != m || residuals.len() + m != series.len() {
        return Err(Error::DimensionMismatch {
            what: "residual rows",
            expected: series.len().saturating_sub(m),
            found: residuals.len(),
        });
    }
    Ok(())
}

/// Replays the recursion with only the residual channels flagged in `active`.
///
/// Samples before `start` (0-based, default `m`) are copied from `series` and
/// act as initial values; from `start` on,
/// `y^δ_n = Σ_j A_j y^δ_{n-j} + e^δ_n` where `e^δ_n` keeps the active residual
/// components and zeroes the rest.
pub fn replay(
    model: &VarModel,
    residuals: &ResidualSeries,
    series: &MultivariateSeries,
    active: &[bool],
    start: Option<usize>,
) -> Result<MultivariateSeries> {
    check_replay_inputs(model, residuals, series)?;
    let (k, m) = (model.k(), model.order());
    if active.len() != k {
        return Err(Error::DimensionMismatch {
            what: "active channel mask",
            expected: k,
            found: active.len(),
        });
    }
    let n = series.len();
    let start = start.unwrap_or(m);
    if start < m || start > n {
        return Err(Error::Invalid(format!("replay start {start} must lie in {m}..={n}")));
    }
    let y = series.values();
    let e = residuals.values();
    let mut out = y.clone();
    for t in start..n {
        let mut next = model.predict_row(&out, t);
        for (i, &on) in active.iter().enumerate() {
            if on {
                next[i] += e[(t - m, i)];
            }
        }
        out.set_row(t, &next.transpose());
    }
    MultivariateSeries::new(series.names().to_vec(), out, series.sampling_interval())
}

/// Replay driven by the residuals of one channel (0-based), over `n ≥ m`.
pub fn replay_channel(
    model: &VarModel,
    residuals: &ResidualSeries,
    series: &MultivariateSeries,
    channel: usize,
) -> Result<MultivariateSeries> {
    if channel >= model.k() {
        return Err(Error::Invalid(format!(
            "channel {} out of range for {} channels",
            channel + 1,
            model.k()
        )));
    }
    let mut active = vec![false; model.k()];
    active[channel] = true;
    replay(model, residuals, series, &active, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::random_stable_model;
    use crate::var::{fit_least_squares, residuals};
    use nalgebra::DVector;

    fn bivariate() -> VarModel {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.3, 0.4]);
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        VarModel::from_parts(vec![a], v).unwrap()
    }

    /// Independent oracle: vec(Σ) = (I - F⊗F)⁻¹ vec(Q).
    fn kronecker_lyapunov(model: &VarModel, q: &DMatrix<f64>) -> DMatrix<f64> {
        let f = model.companion();
        let n = f.nrows();
        let big = DMatrix::identity(n * n, n * n) - f.kronecker(&f);
        let mut full_q = DMatrix::zeros(n, n);
        full_q.view_mut((0, 0), (model.k(), model.k())).copy_from(q);
        let vec_q = DVector::from_column_slice(full_q.as_slice());
        let sol = big.lu().solve(&vec_q).unwrap();
        let sigma = DMatrix::from_column_slice(n, n, sol.as_slice());
        sigma.view((0, 0), (model.k(), model.k())).into_owned()
    }

    #[test]
    fn scenario_validation() {
        let ok = NoiseScenario::new("(1+2)", vec![1.0, 1.0], vec![PairCovariance { l: 1, m: 2, cov: 0.8 }]).unwrap();
        assert_eq!(ok.covariance()[(1, 0)], 0.8);
        assert!(!ok.is_baseline());

        let too_big = NoiseScenario::new("x", vec![1.0, 1.0], vec![PairCovariance { l: 1, m: 2, cov: 1.2 }]);
        match too_big {
            Err(Error::Scenario { reason, .. }) => assert!(reason.contains("(1, 2)")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(NoiseScenario::new("x", vec![1.0, 1.0], vec![PairCovariance { l: 1, m: 1, cov: 0.1 }]).is_err());
        assert!(NoiseScenario::new("x", vec![1.0, 1.0], vec![PairCovariance { l: 1, m: 3, cov: 0.1 }]).is_err());
        assert!(NoiseScenario::new("x", vec![-1.0, 1.0], vec![]).is_err());

        // Each pair is individually admissible but the three together are not PSD.
        let pairs = vec![
            PairCovariance { l: 1, m: 2, cov: 0.9 },
            PairCovariance { l: 1, m: 3, cov: 0.9 },
            PairCovariance { l: 2, m: 3, cov: -0.9 },
        ];
        assert!(matches!(NoiseScenario::new("bad", vec![1.0; 3], pairs), Err(Error::Scenario { .. })));
    }

    #[test]
    fn model_scenarios() {
        let model = bivariate();
        let family = NoiseScenario::single_pair_family(&model).unwrap();
        assert_eq!(family.len(), 2);
        assert_eq!(family[0].label(), "(1,2)");
        assert_eq!(family[1].label(), "(1+2)");
        assert_eq!(family[1].covariance(), model.noise_cov());
    }

    #[test]
    fn zero_variance_simulation_is_zero() {
        let model = bivariate();
        let s = NoiseScenario::new("zero", vec![0.0, 0.0], vec![]).unwrap();
        let y = simulate(&model, &s, 50, 1).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_variance() {
        let model = VarModel::from_parts(vec![], DMatrix::identity(2, 2)).unwrap();
        let y = simulate(&model, &NoiseScenario::baseline(&model), 100_000, 7).unwrap();
        for col in y.values().column_iter() {
            let var = col.map(|x| x * x).mean();
            assert!((0.97..=1.03).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn correlated_noise_streams() {
        let model = VarModel::from_parts(vec![], DMatrix::identity(2, 2)).unwrap();
        let s = NoiseScenario::new("(1+2)", vec![1.0, 1.0], vec![PairCovariance { l: 1, m: 2, cov: 0.8 }]).unwrap();
        let y = simulate(&model, &s, 100_000, 8).unwrap();
        let (a, b) = (y.values().column(0), y.values().column(1));
        let corr = a.dot(&b) / (a.norm() * b.norm());
        assert!((0.77..=0.83).contains(&corr), "correlation {corr}");
    }

    #[test]
    fn semi_definite_scenario_simulates() {
        let model = VarModel::from_parts(vec![], DMatrix::identity(2, 2)).unwrap();
        let s = NoiseScenario::new("one", vec![1.0, 0.0], vec![]).unwrap();
        let y = simulate(&model, &s, 1000, 3).unwrap();
        assert!(y.values().column(1).amax() < 1e-12);
        assert!(y.values().column(0).amax() > 0.5);
    }

    #[test]
    fn simulation_is_deterministic() {
        let model = bivariate();
        let s = NoiseScenario::baseline(&model);
        assert_eq!(simulate(&model, &s, 300, 42).unwrap(), simulate(&model, &s, 300, 42).unwrap());
        assert_ne!(simulate(&model, &s, 300, 42).unwrap(), simulate(&model, &s, 300, 43).unwrap());
    }

    #[test]
    fn monte_carlo_baseline_copy_is_identical() {
        let model = bivariate();
        let base = NoiseScenario::baseline(&model);
        let copy = NoiseScenario::new("copy", base.base_variances().to_vec(), vec![]).unwrap();
        let out = monte_carlo(&model, &[base, copy], 20, 200, 9).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].mean_var, out[1].mean_var);
        assert_eq!(out[0].sd_var, out[1].sd_var);
    }

    #[test]
    fn monte_carlo_prepends_baseline_and_handles_single_replicate() {
        let model = bivariate();
        let pair = NoiseScenario::with_model_pair(&model, 2, 1).unwrap();
        let out = monte_carlo(&model, &[pair], 1, 100, 5).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].label, "(1,2)");
        assert_eq!(out[1].label, "(1+2)");
        assert!(out.iter().all(|s| s.sd_undefined() && s.sd_var == vec![0.0, 0.0]));
        let ratios = ratios_to_baseline(&out);
        assert_eq!(ratios[0], vec![1.0, 1.0]);
    }

    #[test]
    fn stationary_covariance_examples() {
        let white = VarModel::from_parts(vec![], DMatrix::identity(2, 2)).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert_eq!(stationary_covariance(&white, &q).unwrap(), q);

        let ar1 = VarModel::from_parts(vec![DMatrix::from_element(1, 1, 0.5)], DMatrix::identity(1, 1)).unwrap();
        let var = stationary_covariance(&ar1, ar1.noise_cov()).unwrap()[(0, 0)];
        assert!((var - 4.0 / 3.0).abs() < 1e-14);

        let unit = VarModel::from_parts(vec![DMatrix::from_element(1, 1, 1.0)], DMatrix::identity(1, 1)).unwrap();
        assert!(matches!(stationary_covariance(&unit, unit.noise_cov()), Err(Error::Unstable { .. })));
    }

    #[test]
    fn doubling_matches_kronecker_oracle() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let model = random_stable_model(&mut rng, 3, 2, 0.95);
            let fast = stationary_covariance(&model, model.noise_cov()).unwrap();
            let slow = kronecker_lyapunov(&model, model.noise_cov());
            assert!((&fast - &slow).amax() <= 1e-10 * slow.amax());
        }
    }

    #[test]
    fn stationary_covariance_matches_long_simulation() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = random_stable_model(&mut rng, 3, 2, 0.6);
        let oracle = stationary_covariance(&model, model.noise_cov()).unwrap();
        let y = simulate(&model, &NoiseScenario::from_covariance("full", model.noise_cov()).unwrap(), 1_000_000, 77).unwrap();
        let n = y.len() as f64;
        let mut sample = DMatrix::zeros(3, 3);
        sample.gemm_tr(1.0 / n, y.values(), y.values(), 0.0);
        for i in 0..3 {
            assert!(((sample[(i, i)] - oracle[(i, i)]) / oracle[(i, i)]).abs() < 0.01);
        }
        assert!((&sample - &oracle).amax() < 0.01 * oracle.diagonal().amax());
    }

    fn fitted_case() -> (VarModel, MultivariateSeries, ResidualSeries) {
        let truth = bivariate();
        let y = simulate(&truth, &NoiseScenario::with_model_pair(&truth, 1, 2).unwrap(), 400, 21).unwrap();
        let model = fit_least_squares(&y, 2).unwrap();
        let e = residuals(&model, &y).unwrap();
        (model, y, e)
    }

    #[test]
    fn full_replay_reconstructs_series() {
        let (model, y, e) = fitted_case();
        let full = replay(&model, &e, &y, &[true, true], None).unwrap();
        let scale = y.values().amax();
        assert!((full.values() - y.values()).amax() <= 1e-9 * scale);
    }

    #[test]
    fn replay_superposition() {
        let (model, y, e) = fitted_case();
        let zero = replay(&model, &e, &y, &[false, false], None).unwrap();
        let full = replay(&model, &e, &y, &[true, true], None).unwrap();
        let mut sum = zero.values().clone();
        for ch in 0..2 {
            sum += replay_channel(&model, &e, &y, ch).unwrap().values() - zero.values();
        }
        assert!((sum - full.values()).amax() <= 1e-9 * y.values().amax());
    }

    #[test]
    fn replay_without_dynamics_is_masked_noise() {
        let (_, y, _) = fitted_case();
        let model = VarModel::from_parts(vec![DMatrix::zeros(2, 2)], DMatrix::identity(2, 2)).unwrap();
        let e = residuals(&model, &y).unwrap();
        let r = replay_channel(&model, &e, &y, 1).unwrap();
        assert_eq!(r.values().row(0), y.values().row(0));
        for t in 1..y.len() {
            assert_eq!(r.values()[(t, 0)], 0.0);
            assert_eq!(r.values()[(t, 1)], e.values()[(t - 1, 1)]);
        }
    }

    #[test]
    fn replay_window_and_errors() {
        let (model, y, e) = fitted_case();
        let late = replay(&model, &e, &y, &[true, false], Some(200)).unwrap();
        assert_eq!(late.values().rows(0, 200), y.values().rows(0, 200));
        assert!(replay(&model, &e, &y, &[true, false], Some(1)).is_err());
        assert!(replay_channel(&model, &e, &y, 2).is_err());
        let other = fit_least_squares(&y, 1).unwrap();
        assert!(replay(&other, &e, &y, &[true, true], None).is_err());
    }
}
