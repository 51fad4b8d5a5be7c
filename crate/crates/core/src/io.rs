//! File formats: model and scenario JSON, spectrum / decomposition / summary exports.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contribution::{cumulative_stack, ContributionDecomposition, StackKind};
use crate::error::{Error, Result};
use crate::simulation::{ratios_to_baseline, NoiseScenario, PairCovariance, SimulationSummary};
use crate::spectral::CrossSpectrum;
use crate::var::VarModel;

/// JSON form of a [`VarModel`]; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub k: usize,
    pub order: usize,
    pub coeffs: Vec<Vec<f64>>,
    pub noise_cov: Vec<f64>,
    pub channel_names: Vec<String>,
    pub sampling_interval: f64,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&VarModel> for ModelDocument {
    fn from(model: &VarModel) -> Self {
        Self {
            k: model.k(),
            order: model.order(),
            coeffs: model.coeffs().iter().map(row_major).collect(),
            noise_cov: row_major(model.noise_cov()),
            channel_names: model.channel_names().to_vec(),
            sampling_interval: model.sampling_interval(),
        }
    }
}

impl TryFrom<ModelDocument> for VarModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let k = doc.k;
        let square = |what: &'static str, data: &[f64]| -> Result<DMatrix<f64>> {
            if data.len() != k * k {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: k * k,
                    found: data.len(),
                });
            }
            Ok(DMatrix::from_row_slice(k, k, data))
        };
        if doc.coeffs.len() != doc.order {
            return Err(Error::DimensionMismatch {
                what: "coefficient lags",
                expected: doc.order,
                found: doc.coeffs.len(),
            });
        }
        let coeffs = doc
            .coeffs
            .iter()
            .map(|c| square("coefficient matrix", c))
            .collect::<Result<Vec<_>>>()?;
        let noise_cov = square("noise covariance", &doc.noise_cov)?;
        VarModel::new(coeffs, noise_cov, doc.channel_names, doc.sampling_interval)
    }
}

pub fn model_to_json(model: &VarModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("model serialises")
}

pub fn model_from_json(text: &str) -> Result<VarModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    doc.try_into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioDocument {
    label: String,
    base_variances: Vec<f64>,
    #[serde(default)]
    pairs: Vec<PairCovariance>,
}

/// Parses a JSON list of `{label, base_variances, pairs: [{l, m, cov}]}` (1-based `l`, `m`).
pub fn scenarios_from_json(text: &str) -> Result<Vec<NoiseScenario>> {
    let docs: Vec<ScenarioDocument> = serde_json::from_str(text)?;
    docs.into_iter()
        .map(|d| NoiseScenario::new(d.label, d.base_variances, d.pairs))
        .collect()
}

pub fn scenarios_to_json(scenarios: &[NoiseScenario]) -> String {
    let docs: Vec<ScenarioDocument> = scenarios
        .iter()
        .map(|s| ScenarioDocument {
            label: s.label().to_owned(),
            base_variances: s.base_variances().to_vec(),
            pairs: s.pairs().to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&docs).expect("scenarios serialise")
}

fn csv_string(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Columns `f`, then `p_{i}{j}_re`, `p_{i}{j}_im` for every entry in row-major order.
///
/// Channel numbers are 1-based; with ten or more channels they are separated
/// by an underscore (`p_{i}_{j}`) to stay unambiguous.
pub fn spectrum_csv(cs: &CrossSpectrum) -> String {
    let k = cs.k();
    let sep = if k >= 10 { "_" } else { "" };
    let mut header = vec!["f".to_owned()];
    for i in 1..=k {
        for j in 1..=k {
            header.push(format!("p_{i}{sep}{j}_re"));
            header.push(format!("p_{i}{sep}{j}_im"));
        }
    }
    let rows = cs.grid().points().iter().zip(cs.matrices()).map(|(f, p)| {
        let mut row = vec![num(*f)];
        for i in 0..k {
            for j in 0..k {
                row.push(num(p[(i, j)].re));
                row.push(num(p[(i, j)].im));
            }
        }
        row
    });
    csv_string(header, rows)
}

fn kind_rows(dec: &ContributionDecomposition, target: usize, kind: StackKind) -> Result<&[Vec<f64>]> {
    match kind {
        StackKind::Absolute => Ok(dec.absolute(target)),
        StackKind::Relative => dec
            .relative(target)
            .ok_or_else(|| Error::Invalid("relative contributions were not computed".into())),
    }
}

/// Columns `f`, `total`, then one column per term.
///
/// For absolute values `total` is `p_ii(f)`; for relative values it is the sum of
/// the shares (1 up to rounding).
pub fn decomposition_csv(dec: &ContributionDecomposition, target: usize, kind: StackKind) -> Result<String> {
    let rows = kind_rows(dec, target, kind)?;
    let mut header = vec!["f".to_owned(), "total".to_owned()];
    header.extend(dec.term_labels().iter().cloned());
    let body = dec
        .grid()
        .points()
        .iter()
        .zip(rows)
        .zip(dec.total(target))
        .map(|((f, row), p)| {
            let total = match kind {
                StackKind::Absolute => *p,
                StackKind::Relative => row.iter().sum(),
            };
            let mut out = vec![num(*f), num(total)];
            out.extend(row.iter().map(|v| num(*v)));
            out
        });
    Ok(csv_string(header, body))
}

/// Cumulative sums over terms: column `t` holds the sum of terms `1..=t`.
pub fn stack_csv(dec: &ContributionDecomposition, target: usize, kind: StackKind) -> Result<String> {
    let stacks = cumulative_stack(dec, target, kind)?;
    let mut header = vec!["f".to_owned()];
    header.extend(dec.term_labels().iter().cloned());
    let body = dec.grid().points().iter().zip(stacks).map(|(f, stack)| {
        let mut out = vec![num(*f)];
        out.extend(stack.into_iter().map(num));
        out
    });
    Ok(csv_string(header, body))
}

#[derive(Serialize)]
struct TermMeta<'a> {
    index: usize,
    label: &'a str,
    kind: &'static str,
    channels: Vec<usize>,
}

#[derive(Serialize)]
struct TargetDoc<'a> {
    channel: &'a str,
    total: &'a [f64],
    absolute: &'a [Vec<f64>],
    relative: Option<&'a [Vec<f64>]>,
}

#[derive(Serialize)]
struct DecompositionDoc<'a> {
    mode: &'static str,
    k: usize,
    n_terms: usize,
    channel_names: &'a [String],
    frequencies: &'a [f64],
    terms: Vec<TermMeta<'a>>,
    targets: Vec<TargetDoc<'a>>,
}

/// JSON mirror of the decomposition; term `index` and `channels` are 1-based.
pub fn decomposition_json(dec: &ContributionDecomposition) -> String {
    let k = dec.k();
    let terms = dec
        .term_labels()
        .iter()
        .enumerate()
        .map(|(pos, label)| match dec.pair_map().pair(pos) {
            Some((l, m)) => TermMeta {
                index: pos + 1,
                label,
                kind: "pair",
                channels: vec![m + 1, l + 1],
            },
            None => TermMeta {
                index: pos + 1,
                label,
                kind: "noise",
                channels: vec![pos + 1],
            },
        })
        .collect();
    let targets = (0..k)
        .map(|i| TargetDoc {
            channel: &dec.channel_names()[i],
            total: dec.total(i),
            absolute: dec.absolute(i),
            relative: dec.relative(i),
        })
        .collect();
    let doc = DecompositionDoc {
        mode: dec.mode().as_str(),
        k,
        n_terms: dec.n_terms(),
        channel_names: dec.channel_names(),
        frequencies: dec.grid().points(),
        terms,
        targets,
    };
    serde_json::to_string_pretty(&doc).expect("decomposition serialises")
}

/// Columns `scenario, channel, mean_var, sd_var, replicates, length, seed`,
/// then `ratio_to_baseline` (mean variance over the first summary's) and
/// `sd_defined` (false for single-replicate runs).
pub fn summary_csv(summaries: &[SimulationSummary], channel_names: &[String]) -> String {
    let header = [
        "scenario",
        "channel",
        "mean_var",
        "sd_var",
        "replicates",
        "length",
        "seed",
        "ratio_to_baseline",
        "sd_defined",
    ]
    .map(str::to_owned)
    .to_vec();
    let ratios = ratios_to_baseline(summaries);
    let mut rows = Vec::new();
    for (s, ratio) in summaries.iter().zip(&ratios) {
        for (c, name) in channel_names.iter().enumerate() {
            rows.push(vec![
                s.label.clone(),
                name.clone(),
                num(s.mean_var[c]),
                num(s.sd_var[c]),
                s.replicates.to_string(),
                s.length.to_string(),
                s.seed.to_string(),
                num(ratio[c]),
                (!s.sd_undefined()).to_string(),
            ]);
        }
    }
    csv_string(header, rows)
}
