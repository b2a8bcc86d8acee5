//! Masked depth error metrics and their aggregation over a split.
//!
//! Residuals are taken in stored depth units (millimeters for `d_scale = 0.001`).
//! A pixel counts when it is in the object mask and both depths are finite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{raster, Dataset, Split};
use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, Mask};

/// Half-open residual interval `[lo, hi)`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Bin {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && self.hi.is_none_or(|hi| r < hi)
    }

    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) => format!("[{},{})", self.lo, hi),
            None => format!("[{},inf)", self.lo),
        }
    }
}

pub fn default_bins() -> Vec<Bin> {
    vec![
        Bin { lo: 0.0, hi: Some(10.0) },
        Bin { lo: 10.0, hi: Some(20.0) },
        Bin { lo: 20.0, hi: None },
    ]
}

pub fn validate_bins(bins: &[Bin]) -> Result<()> {
    for (i, b) in bins.iter().enumerate() {
        if !(b.lo >= 0.0) || b.hi.is_some_and(|hi| !(hi > b.lo)) {
            return Err(Error::config(format!("bin {} is empty or negative", b.label())));
        }
        if let Some(next) = bins.get(i + 1) {
            if b.hi.is_none_or(|hi| hi > next.lo) {
                return Err(Error::config("bins must be disjoint and ascending"));
            }
        }
    }
    Ok(())
}

/// Which pixels the MSE averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MseDomain {
    /// Object mask combined with joint validity, like the L1 metrics.
    #[default]
    Mask,
    /// Every pixel where both depths are finite, object mask ignored.
    Full,
}

impl std::str::FromStr for MseDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask" => Ok(Self::Mask),
            "full" => Ok(Self::Full),
            other => Err(Error::config(format!("unknown MSE domain {other:?} (mask|full)"))),
        }
    }
}

fn check_shapes(pred: &DepthFrame, target: &DepthFrame, mask: &Mask) -> Result<()> {
    if pred.dims() != target.dims() || mask.dims() != target.dims() {
        return Err(Error::config(format!(
            "metric inputs differ in size: prediction {:?}, target {:?}, mask {:?}",
            pred.dims(),
            target.dims(),
            mask.dims()
        )));
    }
    Ok(())
}

/// Absolute residuals at the pixels of the combined mask, in row-major order.
pub fn residuals(pred: &DepthFrame, target: &DepthFrame, mask: &Mask) -> Result<Vec<f64>> {
    check_shapes(pred, target, mask)?;
    Ok(pred
        .data()
        .iter()
        .zip(target.data())
        .zip(mask.data())
        .filter(|((p, t), m)| **m && p.is_finite() && t.is_finite())
        .map(|((p, t), _)| (*p as f64 - *t as f64).abs())
        .collect())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean absolute residual; `None` when no pixel qualifies.
pub fn masked_l1(pred: &DepthFrame, target: &DepthFrame, mask: &Mask) -> Result<Option<f64>> {
    Ok(mean(residuals(pred, target, mask)?.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub bin: Bin,
    pub mean: Option<f64>,
    pub n_pixels: usize,
}

fn bin_stats(res: &[f64], bins: &[Bin]) -> Vec<BinStat> {
    bins.iter()
        .map(|&bin| {
            let inside: Vec<f64> = res.iter().copied().filter(|r| bin.contains(*r)).collect();
            BinStat {
                bin,
                mean: mean(inside.iter().copied()),
                n_pixels: inside.len(),
            }
        })
        .collect()
}

/// Mean absolute residual of the pixels whose residual falls in each bin.
pub fn binned_l1(
    pred: &DepthFrame,
    target: &DepthFrame,
    mask: &Mask,
    bins: &[Bin],
) -> Result<Vec<BinStat>> {
    validate_bins(bins)?;
    Ok(bin_stats(&residuals(pred, target, mask)?, bins))
}

/// Mean squared residual over the combined mask; `None` when no pixel qualifies.
pub fn masked_mse(pred: &DepthFrame, target: &DepthFrame, mask: &Mask) -> Result<Option<f64>> {
    Ok(mean(residuals(pred, target, mask)?.into_iter().map(|r| r * r)))
}

pub fn mse(
    pred: &DepthFrame,
    target: &DepthFrame,
    mask: &Mask,
    domain: MseDomain,
) -> Result<Option<f64>> {
    match domain {
        MseDomain::Mask => masked_mse(pred, target, mask),
        MseDomain::Full => masked_mse(pred, target, &Mask::full(mask.width(), mask.height())),
    }
}

/// Remaining noise in percent: `100 · result_mse / raw_mse`.
pub fn it_ot(result_mse: f64, raw_mse: f64) -> Result<f64> {
    if !(raw_mse > 0.0) {
        return Err(Error::config(format!("raw MSE must be positive, got {raw_mse}")));
    }
    Ok(100.0 * result_mse / raw_mse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub l1: Option<f64>,
    pub bins: Vec<BinStat>,
    pub mse: Option<f64>,
    pub n_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub mse_domain: MseDomain,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mse_domain: MseDomain::Mask,
        }
    }
}

pub fn pair_metrics(
    pred: &DepthFrame,
    target: &DepthFrame,
    mask: &Mask,
    bins: &[Bin],
    opts: &EvalOptions,
) -> Result<PairMetrics> {
    let res = residuals(pred, target, mask)?;
    Ok(PairMetrics {
        l1: mean(res.iter().copied()),
        bins: bin_stats(&res, bins),
        mse: mse(pred, target, mask, opts.mse_domain)?,
        n_pixels: res.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleMetrics {
    pub id: String,
    /// Input (LQ) against target.
    pub input: PairMetrics,
    /// Prediction against target.
    pub prediction: PairMetrics,
    pub it_ot: Option<f64>,
}

/// One evaluation case: LQ input, prediction, target and object mask.
pub struct EvalCase {
    pub id: String,
    pub input: DepthFrame,
    pub prediction: DepthFrame,
    pub target: DepthFrame,
    pub mask: Mask,
}

pub fn tuple_metrics(case: &EvalCase, bins: &[Bin], opts: &EvalOptions) -> Result<TupleMetrics> {
    let input = pair_metrics(&case.input, &case.target, &case.mask, bins, opts)?;
    let prediction = pair_metrics(&case.prediction, &case.target, &case.mask, bins, opts)?;
    let it_ot = match (prediction.mse, input.mse) {
        (Some(p), Some(r)) if r > 0.0 => Some(it_ot(p, r)?),
        _ => None,
    };
    Ok(TupleMetrics {
        id: case.id.clone(),
        input,
        prediction,
        it_ot,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = match n {
            0 => None,
            _ if n % 2 == 1 => Some(v[n / 2]),
            _ => Some((v[n / 2 - 1] + v[n / 2]) / 2.0),
        };
        Self {
            median,
            mean: mean(v.into_iter()),
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub l1: Summary,
    pub mse: Summary,
    /// Keyed by bin label.
    pub bins: BTreeMap<String, Summary>,
}

impl PairSummary {
    fn of<'a>(pairs: impl Iterator<Item = &'a PairMetrics> + Clone, bins: &[Bin]) -> Self {
        Self {
            l1: Summary::of(pairs.clone().filter_map(|p| p.l1)),
            mse: Summary::of(pairs.clone().filter_map(|p| p.mse)),
            bins: bins
                .iter()
                .enumerate()
                .map(|(i, b)| (b.label(), Summary::of(pairs.clone().filter_map(|p| p.bins[i].mean))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub input: PairSummary,
    pub prediction: PairSummary,
    pub it_ot: Summary,
    /// `it_ot` of the mean prediction MSE against the mean input MSE.
    pub it_ot_of_means: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: Option<Split>,
    pub bins: Vec<Bin>,
    pub mse_domain: MseDomain,
    pub tuples: Vec<TupleMetrics>,
    pub missing_predictions: Vec<String>,
    /// Tuples whose combined mask is empty; listed but not aggregated.
    pub excluded_empty: Vec<String>,
    pub aggregate: Aggregate,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per tuple; empty cells for undefined values.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "id".to_string(),
            "n_pixels".into(),
            "input_l1".into(),
            "prediction_l1".into(),
            "input_mse".into(),
            "prediction_mse".into(),
            "it_ot".into(),
        ];
        for side in ["input", "prediction"] {
            for b in &self.bins {
                header.push(format!("{side}_l1_{}", b.label()));
            }
        }
        let csv_err = |e: csv::Error| Error::config(format!("CSV encoding failed: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for t in &self.tuples {
            let mut row = vec![
                t.id.clone(),
                t.input.n_pixels.to_string(),
                cell(t.input.l1),
                cell(t.prediction.l1),
                cell(t.input.mse),
                cell(t.prediction.mse),
                cell(t.it_ot),
            ];
            for side in [&t.input, &t.prediction] {
                row.extend(side.bins.iter().map(|b| cell(b.mean)));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}

/// Per-tuple metrics plus median/mean aggregates. Cases without a
/// prediction are listed as missing.
pub fn evaluate_cases(
    cases: Vec<Result<EvalCase, String>>,
    split: Option<Split>,
    bins: &[Bin],
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    validate_bins(bins)?;
    let mut missing = Vec::new();
    let mut present = Vec::new();
    for c in cases {
        match c {
            Ok(case) => present.push(case),
            Err(id) => missing.push(id),
        }
    }
    let computed: Vec<TupleMetrics> = present
        .par_iter()
        .map(|c| tuple_metrics(c, bins, opts))
        .collect::<Result<_>>()?;
    let (tuples, empty): (Vec<_>, Vec<_>) =
        computed.into_iter().partition(|t| t.input.n_pixels > 0);
    let mean_of = |f: fn(&TupleMetrics) -> Option<f64>| Summary::of(tuples.iter().filter_map(f)).mean;
    let it_ot_of_means = match (mean_of(|t| t.prediction.mse), mean_of(|t| t.input.mse)) {
        (Some(p), Some(r)) if r > 0.0 => Some(it_ot(p, r)?),
        _ => None,
    };
    let aggregate = Aggregate {
        input: PairSummary::of(tuples.iter().map(|t| &t.input), bins),
        prediction: PairSummary::of(tuples.iter().map(|t| &t.prediction), bins),
        it_ot: Summary::of(tuples.iter().filter_map(|t| t.it_ot)),
        it_ot_of_means,
    };
    Ok(MetricsReport {
        split,
        bins: bins.to_vec(),
        mse_domain: opts.mse_domain,
        tuples,
        missing_predictions: missing,
        excluded_empty: empty.into_iter().map(|t| t.id).collect(),
        aggregate,
    })
}

/// Path of the prediction for tuple `id` inside a predictions directory.
pub fn prediction_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.dfd"))
}

/// Evaluates the masked tuples of a dataset (optionally one split) against
/// `<predictions>/<id>.dfd` files.
pub fn evaluate_split(
    dataset: &Dataset,
    split: Option<Split>,
    predictions: &Path,
    bins: &[Bin],
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    if split.is_some() && dataset.manifest.split.is_none() {
        return Err(Error::config("dataset has not been split yet"));
    }
    let ids: Vec<String> = dataset
        .manifest
        .tuples
        .iter()
        .filter(|e| e.state.masked && split.is_none_or(|s| e.split == Some(s)))
        .map(|e| e.id.clone())
        .collect();
    let cases = ids
        .par_iter()
        .map(|id| -> Result<Result<EvalCase, String>> {
            let path = prediction_path(predictions, id);
            if !path.exists() {
                return Ok(Err(id.clone()));
            }
            let prediction = raster::read_dfd(&path)?;
            let t = dataset.read_tuple(id)?;
            let mask = t.mask.expect("masked tuples carry a mask");
            Ok(Ok(EvalCase {
                id: id.clone(),
                input: t.depth_lq,
                prediction,
                target: t.depth_hq,
                mask,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_cases(cases, split, bins, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f32]) -> DepthFrame {
        DepthFrame::new(values.len(), 1, 0.001, values.to_vec()).unwrap()
    }

    #[test]
    fn hand_l1() {
        let target = row(&[100.0, 100.0, 100.0]);
        let pred = row(&[104.0, 88.0, 125.0]);
        let l1 = masked_l1(&pred, &target, &Mask::full(3, 1)).unwrap().unwrap();
        assert_eq!(l1, 41.0 / 3.0);
        assert!((l1 - 13.667).abs() < 5e-4);
    }

    #[test]
    fn hand_bins() {
        let target = row(&[100.0, 100.0, 100.0]);
        let pred = row(&[104.0, 88.0, 125.0]);
        let bins = binned_l1(&pred, &target, &Mask::full(3, 1), &default_bins()).unwrap();
        let means: Vec<_> = bins.iter().map(|b| b.mean).collect();
        assert_eq!(means, vec![Some(4.0), Some(12.0), Some(25.0)]);
    }

    #[test]
    fn zero_residuals_fill_first_bin() {
        let t = row(&[5.0, 6.0]);
        let bins = binned_l1(&t, &t, &Mask::full(2, 1), &default_bins()).unwrap();
        assert_eq!(bins[0].mean, Some(0.0));
        assert_eq!(bins[1].mean, None);
        assert_eq!(bins[2].mean, None);
    }

    #[test]
    fn hand_mse() {
        let target = row(&[10.0, 10.0]);
        let pred = row(&[13.0, 6.0]);
        assert_eq!(masked_mse(&pred, &target, &Mask::full(2, 1)).unwrap(), Some(12.5));
    }

    #[test]
    fn empty_mask_is_not_zero() {
        let t = row(&[1.0, 2.0]);
        assert_eq!(masked_l1(&t, &t, &Mask::empty(2, 1)).unwrap(), None);
        let nan = row(&[f32::NAN, f32::NAN]);
        assert_eq!(masked_l1(&nan, &t, &Mask::full(2, 1)).unwrap(), None);
    }

    #[test]
    fn shape_mismatch() {
        let a = row(&[1.0, 2.0]);
        let b = row(&[1.0, 2.0, 3.0]);
        assert!(matches!(masked_l1(&a, &b, &Mask::full(2, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn it_ot_values() {
        assert!((it_ot(103.74, 261.17).unwrap() - 39.72).abs() < 0.005);
        assert_eq!(it_ot(7.0, 7.0).unwrap(), 100.0);
        assert_eq!(it_ot(0.0, 3.0).unwrap(), 0.0);
        assert!(it_ot(1.0, 0.0).is_err());
        assert!(it_ot(1.0, -1.0).is_err());
    }

    #[test]
    fn full_domain_ignores_object_mask() {
        let target = row(&[10.0, 10.0, f32::NAN]);
        let pred = row(&[13.0, 6.0, 1.0]);
        let mut m = Mask::empty(3, 1);
        m.set(0, 0, true);
        assert_eq!(mse(&pred, &target, &m, MseDomain::Mask).unwrap(), Some(9.0));
        assert_eq!(mse(&pred, &target, &m, MseDomain::Full).unwrap(), Some(12.5));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(Summary::of([3.0, 1.0, 2.0]).median, Some(2.0));
        assert_eq!(Summary::of([4.0, 1.0, 2.0, 3.0]).median, Some(2.5));
        assert_eq!(Summary::of([]).median, None);
    }

    #[test]
    fn bins_must_be_ordered() {
        assert!(validate_bins(&default_bins()).is_ok());
        let bad = [Bin { lo: 10.0, hi: Some(20.0) }, Bin { lo: 0.0, hi: Some(10.0) }];
        assert!(validate_bins(&bad).is_err());
        assert!(validate_bins(&[Bin { lo: 0.0, hi: None }, Bin { lo: 5.0, hi: None }]).is_err());
    }
}
