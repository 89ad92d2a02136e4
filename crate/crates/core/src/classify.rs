//! Maximum band depth (MBD) classification.
//!
//! Each class is summarised by a bootstrap confidence band of its mean
//! landscape. The depth of a landscape in a band is the fraction of grid
//! nodes where it lies inside the band (bounds inclusive); a landscape is
//! assigned to the class of greatest depth, ties going to the class listed
//! first.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{bootstrap_band, BandConfig, ConfidenceBand, Method};
use crate::error::{invalid_input, invalid_param, Result};
use crate::landscape::LandscapeGrid;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSamples {
    pub label: String,
    pub landscapes: Vec<LandscapeGrid>,
}

impl ClassSamples {
    pub fn new(label: impl Into<String>, landscapes: Vec<LandscapeGrid>) -> Self {
        Self {
            label: label.into(),
            landscapes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandModel {
    pub classes: Vec<String>,
    pub bands: Vec<ConfidenceBand>,
    pub config: BandConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Index into the model's class list.
    pub class: usize,
    pub label: String,
    pub depths: Vec<f64>,
    /// More than one class attains the maximal depth.
    pub tie: bool,
}

pub fn band_depth(l: &LandscapeGrid, band: &ConfidenceBand) -> Result<f64> {
    band.mean.check_compatible(l)?;
    let inside = l
        .values
        .iter()
        .zip(band.lower.iter().zip(&band.upper))
        .filter(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
        .count();
    Ok(inside as f64 / l.values.len() as f64)
}

/// Fit one band per class. All classes share the same bootstrap stream, so
/// the band of a class depends only on its own samples and the seed.
pub fn train(samples: &[ClassSamples], cfg: &BandConfig) -> Result<BandModel> {
    if samples.is_empty() {
        return invalid_input("training needs at least one class");
    }
    for c in samples {
        if c.landscapes.len() < 2 {
            return invalid_input(format!(
                "class '{}' has {} landscapes; at least 2 are needed",
                c.label,
                c.landscapes.len()
            ));
        }
        samples[0].landscapes[0].check_compatible(&c.landscapes[0])?;
    }
    let bands = samples
        .par_iter()
        .map(|c| bootstrap_band(&c.landscapes, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandModel {
        classes: samples.iter().map(|c| c.label.clone()).collect(),
        bands,
        config: *cfg,
    })
}

pub fn predict(model: &BandModel, l: &LandscapeGrid) -> Result<Prediction> {
    let depths = model
        .bands
        .iter()
        .map(|b| band_depth(l, b))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, &d) in depths.iter().enumerate() {
        if d > depths[best] {
            best = i;
        }
    }
    let tie = depths.iter().filter(|&&d| d == depths[best]).count() > 1;
    Ok(Prediction {
        class: best,
        label: model.classes[best].clone(),
        depths,
        tie,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub method: Method,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub config: CvConfig,
    pub labels: Vec<String>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the fold accuracies.
    pub sd_accuracy: f64,
    /// `confusion[true][predicted]` over all held-out predictions.
    pub confusion: Vec<Vec<usize>>,
}

impl CvReport {
    /// `mean ± sd` with two decimals.
    pub fn summary(&self) -> String {
        format!("{:.2} ± {:.2}", self.mean_accuracy, self.sd_accuracy)
    }
}

/// Stratified fold of every sample: `folds[class][sample]`.
pub fn assign_folds(samples: &[ClassSamples], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    samples
        .iter()
        .enumerate()
        .map(|(c, class)| {
            let n = class.landscapes.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(seed, "folds", c as u64));
            let mut fold = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                fold[i] = pos % folds;
            }
            fold
        })
        .collect()
}

/// Stratified `folds`-fold cross-validation of the MBD classifier.
pub fn cross_validate(samples: &[ClassSamples], folds: usize, cfg: &BandConfig) -> Result<CvReport> {
    cfg.validate()?;
    if folds < 2 {
        return invalid_param(format!("need at least 2 folds (got {folds})"));
    }
    if samples.is_empty() {
        return invalid_input("cross-validation needs at least one class");
    }
    for c in samples {
        let n = c.landscapes.len();
        // every training split must keep at least 2 samples of the class
        if n < folds || n - n.div_ceil(folds) < 2 {
            return invalid_input(format!(
                "class '{}' has {n} landscapes, too few for {folds}-fold cross-validation",
                c.label
            ));
        }
    }
    let assignment = assign_folds(samples, folds, cfg.seed);
    let k = samples.len();

    let per_fold = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_set: Vec<ClassSamples> = samples
                .iter()
                .zip(&assignment)
                .map(|(c, a)| {
                    let ls = c
                        .landscapes
                        .iter()
                        .zip(a)
                        .filter(|(_, &fa)| fa != f)
                        .map(|(l, _)| l.clone())
                        .collect();
                    ClassSamples::new(c.label.clone(), ls)
                })
                .collect();
            let fold_cfg = BandConfig {
                seed: rng::derive_seed(cfg.seed, "train", f as u64),
                ..*cfg
            };
            let model = train(&train_set, &fold_cfg)?;
            let mut confusion = vec![vec![0usize; k]; k];
            for (c, (class, a)) in samples.iter().zip(&assignment).enumerate() {
                for (l, _) in class.landscapes.iter().zip(a).filter(|(_, &fa)| fa == f) {
                    confusion[c][predict(&model, l)?.class] += 1;
                }
            }
            Ok(confusion)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = vec![vec![0usize; k]; k];
    let fold_accuracies: Vec<f64> = per_fold
        .iter()
        .map(|conf| {
            let mut total = 0;
            let mut correct = 0;
            for (i, row) in conf.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    confusion[i][j] += v;
                    total += v;
                    if i == j {
                        correct += v;
                    }
                }
            }
            correct as f64 / total as f64
        })
        .collect();
    let nf = folds as f64;
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / nf;
    let sd_accuracy = (fold_accuracies
        .iter()
        .map(|a| (a - mean_accuracy).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Ok(CvReport {
        config: CvConfig {
            folds,
            method: cfg.method,
            replicates: cfg.replicates,
            alpha: cfg.alpha,
            seed: cfg.seed,
        },
        labels: samples.iter().map(|c| c.label.clone()).collect(),
        fold_accuracies,
        mean_accuracy,
        sd_accuracy,
        confusion,
    })
}

pub fn write_report_json<W: Write>(mut w: W, report: &CvReport) -> crate::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Confusion matrix CSV; rows are true classes, columns predictions.
pub fn write_confusion_csv<W: Write>(mut w: W, report: &CvReport) -> crate::Result<()> {
    let mut buf = String::from("true\\predicted");
    for l in &report.labels {
        write!(buf, ",{l}").unwrap();
    }
    buf.push('\n');
    for (l, row) in report.labels.iter().zip(&report.confusion) {
        buf.push_str(l);
        for v in row {
            write!(buf, ",{v}").unwrap();
        }
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}
