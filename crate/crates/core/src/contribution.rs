//! Power contribution decompositions of each channel's spectrum.
//!
//! With `B(f) = A(f)⁻¹` and noise covariance `V = [τ_lm]`, the power spectrum
//! of channel `i` expands as
//!
//! ```text
//! p_ii(f) = Σ_j |b_ij|² τ_jj + 2 Σ_{l>m} (α_il α_im + β_il β_im) τ_lm,   b = α + iβ.
//! ```
//!
//! The classical decomposition keeps only the `k` noise terms (it assumes a
//! diagonal `V`). The extended decomposition also keeps the `k(k-1)/2` pair
//! terms, which are real but may be negative, so the parts always add up to
//! `p_ii(f)` even when noises are correlated. Relative contributions divide by
//! `p_ii(f)`; in extended mode they can fall below 0 or exceed 1.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::FrequencyGrid;
use crate::spectral::{sandwich, transfer_matrix};
use crate::var::VarModel;

/// Term number `j` (1-based) of the correlated pair `(l, m)`, `1 ≤ m < l ≤ k`.
///
/// Pair terms follow the `k` single-noise terms: `j = j_l + m` where
/// `j_2 = k` and `j_l = j_{l-1} + l - 2`.
pub fn pair_index(l: usize, m: usize, k: usize) -> Result<usize> {
    if !(1 <= m && m < l && l <= k) {
        return Err(Error::Invalid(format!(
            "pair ({l}, {m}) requires 1 <= m < l <= {k}"
        )));
    }
    let mut offset = k;
    for row in 3..=l {
        offset += row - 2;
    }
    Ok(offset + m)
}

/// Bijection between correlated pairs and extended term positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndexMap {
    k: usize,
    /// `pairs[p] = (l, m)` (0-based, `m < l`) for term position `k + p`.
    pairs: Vec<(usize, usize)>,
}

impl PairIndexMap {
    pub fn new(k: usize) -> Self {
        let mut pairs = vec![(0, 0); k * k.saturating_sub(1) / 2];
        for l in 2..=k {
            for m in 1..l {
                let j = pair_index(l, m, k).expect("valid pair");
                pairs[j - k - 1] = (l - 1, m - 1);
            }
        }
        Self { k, pairs }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Total number of extended terms, `k(k+1)/2`.
    pub fn n_terms(&self) -> usize {
        self.k + self.pairs.len()
    }

    /// 0-based term position of the pair `{a, b}` (0-based channels, either order).
    pub fn position(&self, a: usize, b: usize) -> Option<usize> {
        let (l, m) = if a > b { (a, b) } else { (b, a) };
        if a == b || l >= self.k {
            return None;
        }
        pair_index(l + 1, m + 1, self.k).ok().map(|j| j - 1)
    }

    /// `(l, m)` with `m < l` (0-based) for a pair term position, `None` for single-noise terms.
    pub fn pair(&self, position: usize) -> Option<(usize, usize)> {
        position
            .checked_sub(self.k)
            .and_then(|p| self.pairs.get(p).copied())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classical,
    Extended,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Extended => "extended",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackKind {
    Absolute,
    Relative,
}

/// Per-frequency, per-target contributions.
///
/// Arrays are indexed `[target][frequency][term]`; terms follow the order of
/// [`ContributionDecomposition::term_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionDecomposition {
    mode: Mode,
    grid: FrequencyGrid,
    channel_names: Vec<String>,
    term_labels: Vec<String>,
    pair_map: PairIndexMap,
    total: Vec<Vec<f64>>,
    absolute: Vec<Vec<Vec<f64>>>,
    relative: Option<Vec<Vec<Vec<f64>>>>,
}

impl ContributionDecomposition {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// `name_l` for noise terms, `name_m+name_l` (lower channel first) for pair terms.
    pub fn term_labels(&self) -> &[String] {
        &self.term_labels
    }

    pub fn n_terms(&self) -> usize {
        self.term_labels.len()
    }

    pub fn pair_map(&self) -> &PairIndexMap {
        &self.pair_map
    }

    /// `p_ii(f)` per grid point.
    pub fn total(&self, target: usize) -> &[f64] {
        &self.total[target]
    }

    pub fn absolute(&self, target: usize) -> &[Vec<f64>] {
        &self.absolute[target]
    }

    /// Relative shares, present after [`Self::with_relative`].
    pub fn relative(&self, target: usize) -> Option<&[Vec<f64>]> {
        self.relative.as_ref().map(|r| r[target].as_slice())
    }

    /// Divides every absolute entry by `p_ii(f)`.
    pub fn with_relative(mut self) -> Result<Self> {
        let mut relative = Vec::with_capacity(self.k());
        for (i, (rows, totals)) in self.absolute.iter().zip(&self.total).enumerate() {
            let mut per_target = Vec::with_capacity(rows.len());
            for (idx, (row, &total)) in rows.iter().zip(totals).enumerate() {
                if !(total > 0.0) {
                    return Err(Error::ZeroPower {
                        channel: self.channel_names[i].clone(),
                        frequency: self.grid.points()[idx],
                    });
                }
                per_target.push(row.iter().map(|s| s / total).collect());
            }
            relative.push(per_target);
        }
        self.relative = Some(relative);
        Ok(self)
    }
}

fn term_labels(names: &[String], mode: Mode, pairs: &PairIndexMap) -> Vec<String> {
    let mut labels = names.to_vec();
    if mode == Mode::Extended {
        labels.extend(
            pairs
                .pairs()
                .iter()
                .map(|&(l, m)| format!("{}+{}", names[m], names[l])),
        );
    }
    labels
}

fn decompose(model: &VarModel, grid: &FrequencyGrid, mode: Mode) -> Result<ContributionDecomposition> {
    let k = model.k();
    let v = model.noise_cov();
    let pair_map = PairIndexMap::new(k);

    // [frequency] -> (totals[target], terms[target][term])
    let per_freq = grid
        .points()
        .par_iter()
        .map(|&f| {
            let b = transfer_matrix(model, f)?.b_of_f;
            let mut totals = Vec::with_capacity(k);
            let mut terms = Vec::with_capacity(k);
            let p = match mode {
                Mode::Extended => Some(sandwich(&b, v)),
                Mode::Classical => None,
            };
            for i in 0..k {
                let mut row: Vec<f64> = (0..k).map(|j| b[(i, j)].norm_sqr() * v[(j, j)]).collect();
                match &p {
                    Some(p) => {
                        row.extend(pair_map.pairs().iter().map(|&(l, m)| {
                            let (bl, bm) = (b[(i, l)], b[(i, m)]);
                            2.0 * (bl.re * bm.re + bl.im * bm.im) * v[(l, m)]
                        }));
                        totals.push(p[(i, i)].re);
                    }
                    None => totals.push(row.iter().sum()),
                }
                terms.push(row);
            }
            Ok((totals, terms))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = vec![Vec::with_capacity(grid.len()); k];
    let mut absolute = vec![Vec::with_capacity(grid.len()); k];
    for (totals, terms) in per_freq {
        for (i, (t, row)) in totals.into_iter().zip(terms).enumerate() {
            total[i].push(t);
            absolute[i].push(row);
        }
    }

    Ok(ContributionDecomposition {
        mode,
        grid: grid.clone(),
        channel_names: model.channel_names().to_vec(),
        term_labels: term_labels(model.channel_names(), mode, &pair_map),
        pair_map,
        total,
        absolute,
        relative: None,
    })
}

/// Absolute contributions `s_jl(f) = |b_jl(f)|² σ_l²`, off-diagonal noise covariances ignored.
pub fn akaike_absolute(model: &VarModel, grid: &FrequencyGrid) -> Result<ContributionDecomposition> {
    decompose(model, grid, Mode::Classical)
}

/// Classical relative contributions `r_jl = s_jl / p_jj`.
pub fn akaike_relative(model: &VarModel, grid: &FrequencyGrid) -> Result<ContributionDecomposition> {
    akaike_absolute(model, grid)?.with_relative()
}

/// Extended absolute contributions: `k` noise terms followed by `k(k-1)/2` signed pair terms.
pub fn extended_absolute(model: &VarModel, grid: &FrequencyGrid) -> Result<ContributionDecomposition> {
    decompose(model, grid, Mode::Extended)
}

pub fn extended_relative(model: &VarModel, grid: &FrequencyGrid) -> Result<ContributionDecomposition> {
    extended_absolute(model, grid)?.with_relative()
}

/// Running sums of one row of contributions.
pub fn prefix_sums(entries: &[f64]) -> Vec<f64> {
    entries
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Cumulative sums over terms for each frequency, ready for stacked-area plots.
pub fn cumulative_stack(
    dec: &ContributionDecomposition,
    target: usize,
    kind: StackKind,
) -> Result<Vec<Vec<f64>>> {
    if target >= dec.k() {
        return Err(Error::Invalid(format!("target {target} out of range")));
    }
    let rows = match kind {
        StackKind::Absolute => dec.absolute(target),
        StackKind::Relative => dec
            .relative(target)
            .ok_or_else(|| Error::Invalid("relative contributions were not computed".into()))?,
    };
    Ok(rows.iter().map(|row| prefix_sums(row)).collect())
}
