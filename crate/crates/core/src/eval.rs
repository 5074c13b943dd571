//! Accuracy metrics and cross-validation protocols.
//!
//! Predictions are pooled across folds before any metric is computed.
//! Every report has an unfiltered block over all windows and a filtered
//! block restricted to windows where the label's speech/no-speech state
//! agrees with voice activity; correlation is reported only for the former.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::WindowRecord;
use crate::error::{Error, Result};
use crate::model::{train, FeatureSet, ModelParams, Sample, TrainConfig};

pub fn rmse(est: &[f64], lab: &[f64]) -> Result<f64> {
    if est.len() != lab.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: lab.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::Empty("rmse of no values"));
    }
    let sq: f64 = est.iter().zip(lab).map(|(e, l)| (e - l).powi(2)).sum();
    Ok((sq / est.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed, from the t statistic with n - 2 degrees of freedom.
    pub p_value: f64,
}

pub fn pearson(est: &[f64], lab: &[f64]) -> Result<Correlation> {
    if est.len() != lab.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: lab.len(),
        });
    }
    let n = est.len();
    if n < 3 {
        return Err(Error::Undefined("correlation needs at least three pairs"));
    }
    let nf = n as f64;
    let mx = est.iter().sum::<f64>() / nf;
    let my = lab.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in est.iter().zip(lab) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant sequence"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Correlation { r, p_value })
}

/// RMSE as a percentage of the mean label.
pub fn percent_error(rmse_value: f64, lab: &[f64]) -> Result<f64> {
    if lab.is_empty() {
        return Err(Error::Empty("percent error of no labels"));
    }
    let mean = lab.iter().sum::<f64>() / lab.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Undefined("percent error with a non-positive mean label"));
    }
    Ok(100.0 * rmse_value / mean)
}

/// Indices where a zero label meets no voice activity, or a non-zero label
/// meets some.
pub fn filter_agreement(labels: &[f64], vad: &[bool]) -> Result<Vec<usize>> {
    if labels.len() != vad.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: vad.len(),
        });
    }
    Ok(labels
        .iter()
        .zip(vad)
        .enumerate()
        .filter(|(_, (&l, &v))| (l == 0.0) != v)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: String,
}

/// One split per participant, each held out once.
pub fn loso_splits(participants: &[String]) -> Result<Vec<Split>> {
    let mut seen = HashSet::new();
    if let Some(dup) = participants.iter().find(|p| !seen.insert(p.as_str())) {
        return Err(Error::Data(format!("duplicate participant id `{dup}`")));
    }
    if participants.len() < 2 {
        return Err(Error::Data("leave-one-out needs at least two participants".into()));
    }
    Ok(participants
        .iter()
        .map(|test| Split {
            train: participants.iter().filter(|p| *p != test).cloned().collect(),
            test: test.clone(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train_paradigm: String,
    pub test_paradigm: String,
}

/// Train on each paradigm and test on the other.
pub fn cross_paradigm_splits(a: &str, a_rows: usize, b: &str, b_rows: usize) -> Result<[Fold; 2]> {
    if a == b {
        return Err(Error::Data(format!("both datasets carry paradigm `{a}`")));
    }
    if a_rows == 0 || b_rows == 0 {
        return Err(Error::Empty("cross-paradigm dataset"));
    }
    let fold = |x: &str, y: &str| Fold {
        train_paradigm: x.to_string(),
        test_paradigm: y.to_string(),
    };
    Ok([fold(a, b), fold(b, a)])
}

/// One estimate aligned with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub fold: String,
    pub condition: String,
    pub label: f64,
    pub estimate: f64,
    pub vad_active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dataset {
    Unfiltered,
    Filtered,
}

impl Dataset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Unfiltered => "unfiltered",
            Self::Filtered => "filtered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: Dataset,
    pub fold: String,
    /// A condition name, or `overall`.
    pub group: String,
    pub n: usize,
    pub rmse: f64,
    pub percent_error: Option<f64>,
    pub correlation: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub mode: String,
    pub folds: usize,
    pub rows: Vec<ReportRow>,
}

fn summarize_group(dataset: Dataset, fold: &str, group: &str, preds: &[&Prediction]) -> Option<ReportRow> {
    if preds.is_empty() {
        return None;
    }
    let est: Vec<f64> = preds.iter().map(|p| p.estimate).collect();
    let lab: Vec<f64> = preds.iter().map(|p| p.label).collect();
    let rmse = rmse(&est, &lab).ok()?;
    Some(ReportRow {
        dataset,
        fold: fold.to_string(),
        group: group.to_string(),
        n: preds.len(),
        rmse,
        percent_error: percent_error(rmse, &lab).ok(),
        correlation: match dataset {
            Dataset::Unfiltered => pearson(&est, &lab).ok(),
            Dataset::Filtered => None,
        },
    })
}

impl EvalReport {
    /// Pool predictions and compute rows per fold label, dataset and
    /// condition, plus an `overall` row for each.
    pub fn from_predictions(mode: &str, folds: usize, preds: &[Prediction]) -> Self {
        let mut by_fold: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
        for p in preds {
            by_fold.entry(p.fold.as_str()).or_default().push(p);
        }
        let mut rows = Vec::new();
        for dataset in [Dataset::Unfiltered, Dataset::Filtered] {
            for (fold, group) in &by_fold {
                let kept: Vec<&Prediction> = match dataset {
                    Dataset::Unfiltered => group.clone(),
                    Dataset::Filtered => {
                        let labels: Vec<f64> = group.iter().map(|p| p.label).collect();
                        let vad: Vec<bool> = group.iter().map(|p| p.vad_active).collect();
                        filter_agreement(&labels, &vad)
                            .expect("equal lengths")
                            .into_iter()
                            .map(|i| group[i])
                            .collect()
                    }
                };
                let mut conditions: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
                for p in &kept {
                    conditions.entry(p.condition.as_str()).or_default().push(p);
                }
                for (cond, members) in &conditions {
                    rows.extend(summarize_group(dataset, fold, cond, members));
                }
                rows.extend(summarize_group(dataset, fold, "overall", &kept));
            }
        }
        Self {
            mode: mode.to_string(),
            folds,
            rows,
        }
    }

    pub fn overall(&self, dataset: Dataset) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.group == "overall")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,dataset,fold,group,n,rmse,percent_error,pearson_r,p_value\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.mode,
                r.dataset.name(),
                r.fold,
                r.group,
                r.n,
                r.rmse,
                opt(r.percent_error),
                opt(r.correlation.map(|c| c.r)),
                opt(r.correlation.map(|c| c.p_value)),
            );
        }
        out
    }

    /// Aligned columns with significance stars: `*` p < 0.05, `**` p < 0.0001.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} evaluation, {} fold(s)\n", self.mode, self.folds);
        let _ = writeln!(
            out,
            "{:<11} {:<24} {:<10} {:>6} {:>12} {:>8} {:>9}",
            "dataset", "fold", "group", "n", "correlation", "rmse", "% error"
        );
        for r in &self.rows {
            let corr = r
                .correlation
                .map(|c| {
                    let stars = if c.p_value < 1e-4 {
                        "**"
                    } else if c.p_value < 0.05 {
                        "*"
                    } else {
                        ""
                    };
                    format!("{:.3}{stars}", c.r)
                })
                .unwrap_or_else(|| "-".into());
            let pe = r.percent_error.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<11} {:<24} {:<10} {:>6} {:>12} {:>8.3} {:>9}",
                r.dataset.name(),
                r.fold,
                r.group,
                r.n,
                corr,
                r.rmse,
                pe
            );
        }
        out
    }
}

/// Labelled windows with voice activity, as model inputs.
pub fn training_samples<'a>(rows: impl Iterator<Item = &'a WindowRecord>, set: FeatureSet) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for r in rows {
        if let (Some(label), true) = (r.label, r.vad_mean > 0.0) {
            if let Some(features) = r.select(set)? {
                out.push(Sample { features, label });
            }
        }
    }
    Ok(out)
}

/// Train on windows with voice activity and a label.
pub fn train_on<'a>(
    rows: impl Iterator<Item = &'a WindowRecord>,
    set: FeatureSet,
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    let samples = training_samples(rows, set)?;
    train(&samples, set, cfg).map(|(m, _)| m)
}

/// Estimates for labelled windows; silent windows score exactly zero.
pub fn predict<'a>(
    model: &ModelParams,
    rows: impl Iterator<Item = &'a WindowRecord>,
    fold: &str,
) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for r in rows {
        let Some(label) = r.label else { continue };
        let estimate = if r.vad_mean > 0.0 {
            match r.select(model.feature_set)? {
                Some(x) => model.forward_raw(&x)?,
                None => return Err(Error::Data(format!("window at {} s has voice activity but no features", r.start_s))),
            }
        } else {
            0.0
        };
        out.push(Prediction {
            fold: fold.to_string(),
            condition: r.condition.clone(),
            label,
            estimate,
            vad_active: r.vad_mean > 0.0,
        });
    }
    Ok(out)
}

fn participants_in_order(rows: &[WindowRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    rows.iter()
        .filter(|r| seen.insert(r.participant_id.as_str()))
        .map(|r| r.participant_id.clone())
        .collect()
}

/// Leave one participant out; test predictions are pooled under one fold.
pub fn run_loso(rows: &[WindowRecord], set: FeatureSet, cfg: &TrainConfig) -> Result<EvalReport> {
    let splits = loso_splits(&participants_in_order(rows))?;
    let per_split: Vec<Vec<Prediction>> = splits
        .par_iter()
        .map(|s| {
            let model = train_on(rows.iter().filter(|r| r.participant_id != s.test), set, cfg)?;
            predict(&model, rows.iter().filter(|r| r.participant_id == s.test), "pooled")
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Prediction> = per_split.into_iter().flatten().collect();
    Ok(EvalReport::from_predictions("loso", splits.len(), &preds))
}

/// Two folds, each paradigm training a model tested on the other.
pub fn run_cross(rows: &[WindowRecord], set: FeatureSet, cfg: &TrainConfig) -> Result<EvalReport> {
    let mut paradigms: Vec<&str> = Vec::new();
    for r in rows {
        if !paradigms.contains(&r.paradigm.as_str()) {
            paradigms.push(&r.paradigm);
        }
    }
    if paradigms.len() != 2 {
        return Err(Error::Data(format!(
            "cross-paradigm evaluation needs exactly two paradigms, found {}",
            paradigms.len()
        )));
    }
    let count = |p: &str| rows.iter().filter(|r| r.paradigm == p).count();
    let folds = cross_paradigm_splits(paradigms[0], count(paradigms[0]), paradigms[1], count(paradigms[1]))?;
    let per_fold: Vec<Vec<Prediction>> = folds
        .par_iter()
        .map(|f| {
            let model = train_on(rows.iter().filter(|r| r.paradigm == f.train_paradigm), set, cfg)?;
            let label = format!("{}->{}", f.train_paradigm, f.test_paradigm);
            predict(&model, rows.iter().filter(|r| r.paradigm == f.test_paradigm), &label)
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Prediction> = per_fold.into_iter().flatten().collect();
    Ok(EvalReport::from_predictions("cross", 2, &preds))
}

/// Train on one set of recordings and test on another, as in a deployment.
pub fn run_emulated(train_rows: &[WindowRecord], test_rows: &[WindowRecord], set: FeatureSet, cfg: &TrainConfig) -> Result<EvalReport> {
    let model = train_on(train_rows.iter(), set, cfg)?;
    let preds = predict(&model, test_rows.iter(), "test")?;
    Ok(EvalReport::from_predictions("emulated", 1, &preds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((rmse(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap().r - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&neg, &x).unwrap().r + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &x[..3]), Err(Error::Undefined(_))));
    }

    #[test]
    fn p_value_matches_known_t_quantile() {
        // r = 0.5 with n = 18 gives t = 0.5 * sqrt(16 / 0.75) = 2.3094,
        // whose two-tailed p with 16 df is 0.0346.
        let n = 18;
        let x: Vec<f64> = (0..n).map(f64::from).collect();
        // Build y with correlation exactly 0.5 against x.
        let mx = x.iter().sum::<f64>() / n as f64;
        let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
        let z: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let proj = z.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>() / dx.iter().map(|v| v * v).sum::<f64>();
        let zp: Vec<f64> = z.iter().zip(&dx).map(|(a, b)| a - proj * b).collect();
        let nx = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nz = zp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y: Vec<f64> = dx
            .iter()
            .zip(&zp)
            .map(|(a, b)| 0.5 * a / nx + (0.75f64).sqrt() * b / nz)
            .collect();
        let c = pearson(&x, &y).unwrap();
        assert!((c.r - 0.5).abs() < 1e-12);
        assert!((c.p_value - 0.0346).abs() < 5e-4, "{}", c.p_value);
    }

    #[test]
    fn percent_error_examples() {
        assert_eq!(percent_error(1.0, &[1.0, 3.0]).unwrap(), 50.0);
        assert_eq!(percent_error(0.0, &[2.0]).unwrap(), 0.0);
        assert!(percent_error(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn agreement_examples() {
        let f = |l: &[f64], v: &[bool]| filter_agreement(l, v).unwrap();
        assert_eq!(f(&[0.0, 2.0, 0.0, 3.0], &[false, true, true, false]), vec![0, 1]);
        assert_eq!(f(&[0.0, 1.0], &[false, true]), vec![0, 1]);
        assert!(f(&[0.0, 0.0], &[true, true]).is_empty());
    }

    #[test]
    fn split_examples() {
        let ids: Vec<String> = (0..30).map(|i| format!("P{i:02}")).collect();
        let splits = loso_splits(&ids).unwrap();
        assert_eq!(splits.len(), 30);
        assert!(splits.iter().all(|s| s.train.len() == 29 && !s.train.contains(&s.test)));
        assert_eq!(loso_splits(&ids[..2]).unwrap().len(), 2);
        assert!(loso_splits(&ids[..1]).is_err());
        assert!(loso_splits(&["a".into(), "b".into(), "a".into()]).is_err());

        let folds = cross_paradigm_splits("peer", 10, "supervisory", 12).unwrap();
        assert_eq!(folds[0].train_paradigm, "peer");
        assert_eq!(folds[1].train_paradigm, "supervisory");
        assert!(cross_paradigm_splits("peer", 10, "peer", 10).is_err());
        assert!(cross_paradigm_splits("peer", 10, "supervisory", 0).is_err());
    }

    #[test]
    fn report_omits_filtered_correlation() {
        let preds: Vec<Prediction> = (0..20)
            .map(|i| Prediction {
                fold: "f".into(),
                condition: if i % 2 == 0 { "UL".into() } else { "OL".into() },
                label: f64::from(i % 5),
                estimate: f64::from(i % 5) * 0.9 + 0.1,
                vad_active: i % 5 != 0 || i == 10,
            })
            .collect();
        let rep = EvalReport::from_predictions("test", 1, &preds);
        let unf = rep.overall(Dataset::Unfiltered).unwrap();
        let fil = rep.overall(Dataset::Filtered).unwrap();
        assert_eq!(unf.n, 20);
        assert_eq!(fil.n, 19);
        assert!(unf.correlation.is_some());
        assert!(fil.correlation.is_none());
        assert!(rep.rows.iter().any(|r| r.group == "UL"));
        assert!(rep.to_text().contains("overall"));
        assert_eq!(rep.to_csv().lines().count(), rep.rows.len() + 1);
    }

    proptest! {
        #[test]
        fn filter_matches_brute_force(pairs in proptest::collection::vec((0u8..3, any::<bool>()), 0..200)) {
            let labels: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let vad: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let kept = filter_agreement(&labels, &vad).unwrap();
            let mut brute = Vec::new();
            for i in 0..labels.len() {
                if (labels[i] == 0.0 && !vad[i]) || (labels[i] != 0.0 && vad[i]) {
                    brute.push(i);
                }
            }
            prop_assert_eq!(kept, brute);
        }
    }
}
