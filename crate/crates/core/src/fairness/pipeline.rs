use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    label_with_model, score_table, synth_risk_adjust, synth_risk_flip, Advantaged, FairnessSpec,
    RatioReport, SyntheticResult,
};
use crate::error::{Error, Result};
use crate::models::{self, RiskScorer, ScorerKind, TrainConfig};
use crate::tabular::{Preprocessor, SplitSpec, Table};

/// Synthetic relabeling scheme used to build the second model's training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Relabel the advantaged group with first-model labels at a shifted
    /// threshold.
    RiskAdjust,
    /// Flip the lowest-scored true positives of the advantaged group.
    RiskFlip,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "risk_adjust" => Ok(Self::RiskAdjust),
            "2" | "risk_flip" => Ok(Self::RiskFlip),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm `{s}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RiskAdjust => "risk_adjust",
            Self::RiskFlip => "risk_flip",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spec: FairnessSpec,
    pub algorithm: Algorithm,
    pub first_model: ScorerKind,
    pub second_model: ScorerKind,
    pub first_config: TrainConfig,
    pub second_config: TrainConfig,
    /// Decision threshold for both models.
    pub threshold: f64,
    /// Three parts: first-model training, synthesis, held-out test.
    pub split: SplitSpec,
    /// Feature columns left out of both models.
    pub drop_columns: Vec<String>,
}

impl PipelineConfig {
    /// 40/40/20 split, threshold 0.5, default trainer settings.
    pub fn new(
        spec: FairnessSpec,
        algorithm: Algorithm,
        first_model: ScorerKind,
        second_model: ScorerKind,
        seed: u64,
    ) -> Self {
        Self {
            spec,
            algorithm,
            first_model,
            second_model,
            first_config: TrainConfig::for_kind(first_model).with_seed(seed),
            second_config: TrainConfig::for_kind(second_model).with_seed(seed.wrapping_add(1)),
            threshold: 0.5,
            split: SplitSpec {
                fractions: vec![0.4, 0.4, 0.2],
                seed,
            },
            drop_columns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.split.fractions.len() != 3 {
            return Err(Error::InvalidSplit(format!(
                "pipeline needs three parts, got {}",
                self.split.fractions.len()
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidArgument("threshold must be finite".into()));
        }
        self.first_config.validate()?;
        self.second_config.validate()
    }
}

/// Where a set of held-out labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Original,
    FirstModel,
    SecondModel,
}

impl LabelSource {
    pub const ALL: [LabelSource; 3] = [Self::Original, Self::FirstModel, Self::SecondModel];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::FirstModel => "first_model",
            Self::SecondModel => "second_model",
        }
    }
}

/// One cell of the held-out ratio table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub source: LabelSource,
    /// `P` or `notP`.
    pub group: String,
    /// `N` or `notN`.
    pub filter: String,
    pub rows: usize,
    pub positives: usize,
    /// `None` for an empty cell.
    pub ratio: Option<f64>,
}

/// Ratio gap inside the filter for one label source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub source: LabelSource,
    pub ratio_p: f64,
    pub ratio_not_p: f64,
    pub gap: f64,
    pub fair: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    /// Against the original held-out labels.
    pub auc: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSummary {
    pub rows: usize,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<usize>,
    pub advantaged: Option<Advantaged>,
    pub before: RatioReport,
    pub after: RatioReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub algorithm: Algorithm,
    pub first_model: ScorerKind,
    pub second_model: ScorerKind,
    pub threshold: f64,
    pub epsilon: f64,
    pub protected: String,
    pub filters: String,
    /// Rows in the training, synthesis and test parts.
    pub split_rows: [usize; 3],
    pub first_model_metrics: StageMetrics,
    pub second_model_metrics: StageMetrics,
    pub synthetic: SyntheticSummary,
    /// Twelve cells: source x group x filter.
    pub ratios: Vec<RatioCell>,
    pub gaps: Vec<GapSummary>,
}

impl PipelineReport {
    pub fn gap(&self, source: LabelSource) -> &GapSummary {
        self.gaps
            .iter()
            .find(|g| g.source == source)
            .expect("every source has a gap entry")
    }

    pub fn cell(&self, source: LabelSource, group: &str, filter: &str) -> Option<&RatioCell> {
        self.ratios
            .iter()
            .find(|c| c.source == source && c.group == group && c.filter == filter)
    }
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: PipelineReport,
    pub preprocessor: Preprocessor,
    pub first: RiskScorer,
    pub second: RiskScorer,
    pub synthetic: SyntheticResult,
}

fn labels_at(scores: &[f64], threshold: f64) -> Vec<f64> {
    scores
        .iter()
        .map(|s| if *s >= threshold { 1.0 } else { 0.0 })
        .collect()
}

fn stage_metrics(scores: &[f64], truth: &[f64], threshold: f64) -> Result<StageMetrics> {
    Ok(StageMetrics {
        auc: models::auc(scores, truth)?,
        accuracy: models::accuracy(scores, truth, threshold),
    })
}

/// Two-stage retraining: train the first model on part one, build a
/// synthetic fair training set from part two, train the second model on it,
/// and report both models on part three.
pub fn run_pipeline(data: &Table, cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    cfg.spec.validate(data.schema())?;
    data.schema().require_label()?;

    let parts = data.split(&cfg.split)?;
    let (d1, d2, d4) = (&parts[0], &parts[1], &parts[2]);

    let prep = Preprocessor::fit(d1, &cfg.drop_columns)?;
    let (x1, y1) = prep.apply(d1)?;
    let y1 = y1.ok_or_else(|| Error::Schema("table has no label column".into()))?;
    let first = models::train(cfg.first_model, &x1, &y1, &cfg.first_config)?;

    let synthetic = match cfg.algorithm {
        Algorithm::RiskAdjust => {
            let labeled = label_with_model(d2, &first, cfg.threshold, &prep)?;
            synth_risk_adjust(&labeled, &cfg.spec, cfg.threshold)?
        }
        Algorithm::RiskFlip => {
            let scored = score_table(d2, &first, &prep)?;
            synth_risk_flip(&scored, &cfg.spec)?
        }
    };

    let (x3, y3) = prep.apply(&synthetic.table)?;
    let y3 = y3.ok_or_else(|| Error::Schema("table has no label column".into()))?;
    let second = models::train(cfg.second_model, &x3, &y3, &cfg.second_config)?;

    let (x4, y4) = prep.apply(d4)?;
    let y4 = y4.ok_or_else(|| Error::Schema("table has no label column".into()))?;
    let first_scores = first.score_all(&x4)?;
    let second_scores = second.score_all(&x4)?;

    let sources = [
        (LabelSource::Original, y4.clone()),
        (
            LabelSource::FirstModel,
            labels_at(&first_scores, cfg.threshold),
        ),
        (
            LabelSource::SecondModel,
            labels_at(&second_scores, cfg.threshold),
        ),
    ];
    let (ratios, gaps) = ratio_table(d4, &cfg.spec, &sources)?;

    let report = PipelineReport {
        algorithm: cfg.algorithm,
        first_model: cfg.first_model,
        second_model: cfg.second_model,
        threshold: cfg.threshold,
        epsilon: cfg.spec.epsilon,
        protected: cfg.spec.protected.to_string(),
        filters: cfg.spec.filters.to_string(),
        split_rows: [d1.len(), d2.len(), d4.len()],
        first_model_metrics: stage_metrics(&first_scores, &y4, cfg.threshold)?,
        second_model_metrics: stage_metrics(&second_scores, &y4, cfg.threshold)?,
        synthetic: SyntheticSummary {
            rows: synthetic.table.len(),
            alpha: synthetic.alpha,
            delta: synthetic.delta,
            beta: synthetic.beta,
            advantaged: synthetic.advantaged,
            before: synthetic.before.clone(),
            after: synthetic.after.clone(),
        },
        ratios,
        gaps,
    };
    Ok(PipelineOutcome {
        report,
        preprocessor: prep,
        first,
        second,
        synthetic,
    })
}

/// Builds the source x group x filter cells for `table` under each labeling
/// in `sources` (one label per row of `table`).
pub fn ratio_table(
    table: &Table,
    spec: &FairnessSpec,
    sources: &[(LabelSource, Vec<f64>)],
) -> Result<(Vec<RatioCell>, Vec<GapSummary>)> {
    let in_filter = table.mask(&spec.filters)?;
    let protected = table.mask(&spec.protected)?;
    let not_protected = table.mask(&spec.protected.negate_single()?)?;

    let mut cells = Vec::with_capacity(sources.len() * 4);
    let mut gaps = Vec::with_capacity(sources.len());
    for (source, labels) in sources {
        if labels.len() != table.len() {
            return Err(Error::DimensionMismatch {
                expected: table.len(),
                got: labels.len(),
            });
        }
        let mut in_ratios = [None, None];
        for (gi, (group, gmask)) in [("P", &protected), ("notP", &not_protected)]
            .into_iter()
            .enumerate()
        {
            for (filter, want) in [("N", true), ("notN", false)] {
                let mut rows = 0;
                let mut positives = 0;
                for i in 0..table.len() {
                    if gmask[i] && in_filter[i] == want {
                        rows += 1;
                        if labels[i] == 1.0 {
                            positives += 1;
                        }
                    }
                }
                let ratio = (rows > 0).then(|| positives as f64 / rows as f64);
                if want {
                    in_ratios[gi] = ratio;
                }
                cells.push(RatioCell {
                    source: *source,
                    group: group.into(),
                    filter: filter.into(),
                    rows,
                    positives,
                    ratio,
                });
            }
        }
        let (Some(ratio_p), Some(ratio_not_p)) = (in_ratios[0], in_ratios[1]) else {
            return Err(Error::EmptyGroup(format!(
                "a filtered group is empty in the held-out part (`{}`)",
                spec.filters.and(&spec.protected)
            )));
        };
        let gap = (ratio_p - ratio_not_p).abs();
        gaps.push(GapSummary {
            source: *source,
            ratio_p,
            ratio_not_p,
            gap,
            fair: gap <= spec.epsilon,
        });
    }
    Ok((cells, gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_table, DemoConfig};
    use crate::tabular::{Clause, Comparator, FilterCondition};

    fn spec(epsilon: f64) -> FairnessSpec {
        FairnessSpec::new(
            FilterCondition::single(Clause::new("race", Comparator::Eq, "W")),
            FilterCondition::single(Clause::new("crime", Comparator::Eq, "assault")),
            epsilon,
        )
    }

    fn quick(algorithm: Algorithm, epsilon: f64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(
            spec(epsilon),
            algorithm,
            ScorerKind::Logistic,
            ScorerKind::Logistic,
            11,
        );
        cfg.first_config.iterations = 300;
        cfg.second_config.iterations = 300;
        cfg
    }

    fn data(bias: f64) -> Table {
        demo_table(&DemoConfig {
            rows: 2000,
            seed: 5,
            bias,
        })
        .unwrap()
    }

    #[test]
    fn report_has_twelve_cells() {
        let out = run_pipeline(&data(1.5), &quick(Algorithm::RiskFlip, 0.05)).unwrap();
        let r = &out.report;
        assert_eq!(r.ratios.len(), 12);
        assert_eq!(r.split_rows, [800, 800, 400]);
        for source in LabelSource::ALL {
            for group in ["P", "notP"] {
                for filter in ["N", "notN"] {
                    assert!(r.cell(source, group, filter).is_some());
                }
            }
        }
        let orig = r.cell(LabelSource::Original, "P", "N").unwrap();
        assert_eq!(r.gap(LabelSource::Original).ratio_p, orig.ratio.unwrap());
        let cells: usize = r
            .ratios
            .iter()
            .filter(|c| c.source == LabelSource::Original)
            .map(|c| c.rows)
            .sum();
        assert_eq!(cells, 400);
    }

    #[test]
    fn both_algorithms_make_training_set_fair() {
        for algo in [Algorithm::RiskAdjust, Algorithm::RiskFlip] {
            let out = run_pipeline(&data(1.5), &quick(algo, 0.05)).unwrap();
            let s = &out.report.synthetic;
            assert!(!s.before.fair, "{algo}");
            assert!(s.after.gap() <= 1.0 / s.after.count_p.min(s.after.count_not_p) as f64 + 1e-12);
            assert_eq!(s.rows, 800);
        }
    }

    #[test]
    fn second_model_narrows_gap() {
        let out = run_pipeline(&data(2.0), &quick(Algorithm::RiskFlip, 0.05)).unwrap();
        let r = &out.report;
        assert!(
            r.gap(LabelSource::SecondModel).gap < r.gap(LabelSource::FirstModel).gap,
            "{:?}",
            r.gaps
        );
    }

    #[test]
    fn epsilon_one_keeps_training_labels() {
        let table = data(1.5);
        let cfg = quick(Algorithm::RiskFlip, 1.0);
        let out = run_pipeline(&table, &cfg).unwrap();
        let d2 = &table.split(&cfg.split).unwrap()[1];
        assert_eq!(out.synthetic.table.labels().unwrap(), d2.labels().unwrap());

        let cfg = quick(Algorithm::RiskAdjust, 1.0);
        let out = run_pipeline(&table, &cfg).unwrap();
        let (x2, _) = out.preprocessor.apply(d2).unwrap();
        let a1 = labels_at(&out.first.score_all(&x2).unwrap(), 0.5);
        assert_eq!(out.synthetic.table.labels().unwrap(), a1);
    }

    #[test]
    fn unbiased_data_is_fair_everywhere() {
        let table = demo_table(&DemoConfig {
            rows: 6000,
            seed: 2,
            bias: 0.0,
        })
        .unwrap();
        let out = run_pipeline(&table, &quick(Algorithm::RiskFlip, 0.1)).unwrap();
        for g in &out.report.gaps {
            assert!(g.fair, "{g:?}");
        }
    }

    #[test]
    fn deterministic() {
        let cfg = quick(Algorithm::RiskAdjust, 0.05);
        let a = run_pipeline(&data(1.5), &cfg).unwrap();
        let b = run_pipeline(&data(1.5), &cfg).unwrap();
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = quick(Algorithm::RiskFlip, 0.05);
        cfg.split.fractions = vec![0.5, 0.5];
        assert!(run_pipeline(&data(1.0), &cfg).is_err());
        let mut cfg = quick(Algorithm::RiskFlip, 0.05);
        cfg.spec.protected = FilterCondition::single(Clause::new("crime", Comparator::Eq, "theft"));
        assert!(run_pipeline(&data(1.0), &cfg).is_err());
        assert_eq!("2".parse::<Algorithm>().unwrap(), Algorithm::RiskFlip);
        assert!("3".parse::<Algorithm>().is_err());
    }
}
