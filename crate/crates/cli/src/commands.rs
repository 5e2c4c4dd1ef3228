use std::path::PathBuf;

use serde_json::{json, Value as Json};

use luskin_core::demo::{demo_table, DemoConfig};
use luskin_core::fairness::{
    check_fair, ratio_table, run_pipeline, Algorithm, FairnessSpec, LabelSource, PipelineConfig,
};
use luskin_core::linalg::Matrix;
use luskin_core::models::{self, RiskScorer, ScorerKind, TrainConfig};
use luskin_core::parity::{
    distribution_distance, evaluate_thresholds, soft_histogram, train_equalized_distribution,
    tune_thresholds_pso, FairTrainConfig, GroupPartition, GroupScores, HistogramConfig, PsoConfig,
    ThresholdEvaluation,
};
use luskin_core::report::{emit_report, ratio_block, ReportDocument, TableBlock};
use luskin_core::tabular::{
    load_csv, Clause, ColumnRole, FilterCondition, LoadReport, PcaModel, Preprocessor, SplitSpec,
    Table,
};

use crate::args::{AuditArgs, DataArgs, FairnessArgs, RetrainArgs, TrainFairArgs, TuneArgs};
use crate::error::{CliError, Result};

/// Parity commands project features onto at most this many principal
/// components.
pub const PCA_COMPONENTS: usize = 20;

/// Exit status for a completed audit with an unfair verdict.
pub const EXIT_UNFAIR: i32 = 2;

/// A finished command: its report, a one-screen summary and the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ReportDocument,
    pub summary: String,
    pub exit_code: i32,
}

/// Input table plus where it came from.
pub struct Loaded {
    pub table: Table,
    pub load: Option<LoadReport>,
}

pub fn load_data(args: &DataArgs) -> Result<Loaded> {
    if args.demo {
        let table = demo_table(&DemoConfig {
            seed: args.seed,
            ..DemoConfig::default()
        })?;
        return Ok(Loaded { table, load: None });
    }
    let (Some(data), Some(schema)) = (&args.data, &args.schema) else {
        return Err(CliError::Usage(
            "--data and --schema are required without --demo".into(),
        ));
    };
    let schema = luskin_core::tabular::Schema::from_json_file(schema)?;
    let (table, load) = load_csv(data, &schema)?;
    Ok(Loaded {
        table,
        load: Some(load),
    })
}

pub fn parse_split(text: &str, seed: u64) -> Result<SplitSpec> {
    let fractions = text
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad split fraction `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if fractions.len() != 3 {
        return Err(CliError::Usage(format!(
            "--split needs three fractions, got {}",
            fractions.len()
        )));
    }
    Ok(SplitSpec::new(fractions, seed)?)
}

fn parse_filters(flat: &[String]) -> Result<FilterCondition> {
    let clauses = flat
        .chunks(3)
        .map(|c| match c {
            [col, op, val] => Ok(Clause::parse(col, op, val)?),
            _ => Err(CliError::Usage("--filter takes COL OP VAL".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterCondition::new(clauses))
}

fn demo_protected(data: &DataArgs, protected: &Option<String>) -> Result<String> {
    match (protected, data.demo) {
        (Some(p), _) => Ok(p.clone()),
        (None, true) => Ok("race=W".into()),
        (None, false) => Err(CliError::Usage("--protected COL=VAL is required".into())),
    }
}

fn fairness_spec(data: &DataArgs, args: &FairnessArgs) -> Result<FairnessSpec> {
    let protected = demo_protected(data, &args.protected)?;
    let mut filters = parse_filters(&args.filter)?;
    if data.demo && args.filter.is_empty() {
        filters = parse_filters(&["crime".into(), "=".into(), "assault".into()])?;
    }
    Ok(FairnessSpec::new(
        FilterCondition::single(Clause::parse_equality(&protected)?),
        filters,
        args.epsilon,
    ))
}

fn config_echo<T: serde::Serialize>(args: &T, spec: Option<&FairnessSpec>) -> Result<Json> {
    let mut cfg = serde_json::to_value(args)?;
    if let (Some(spec), Json::Object(map)) = (spec, &mut cfg) {
        map.insert(
            "protected_condition".into(),
            spec.protected.to_string().into(),
        );
        map.insert("filter_condition".into(), spec.filters.to_string().into());
    }
    Ok(cfg)
}

fn finish(
    report: ReportDocument,
    out: &Option<PathBuf>,
    summary: String,
    exit_code: i32,
) -> Result<Outcome> {
    if let Some(dir) = out {
        emit_report(&report, dir)?;
    }
    Ok(Outcome {
        report,
        summary,
        exit_code,
    })
}

pub fn cmd_audit(args: &AuditArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let spec = fairness_spec(&args.data, &args.fairness)?;
    let verdict = check_fair(&loaded.table, &spec)?;
    let labels = loaded.table.labels()?;
    let (cells, _) = ratio_table(&loaded.table, &spec, &[(LabelSource::Original, labels)])?;

    let mut block = TableBlock::new(["group", "filter", "rows", "positives", "ratio"]);
    for c in &cells {
        block.push(vec![
            c.group.clone().into(),
            c.filter.clone().into(),
            c.rows.into(),
            c.positives.into(),
            c.ratio.into(),
        ])?;
    }
    let mut report =
        ReportDocument::new("audit", config_echo(args, Some(&spec))?).with_metrics(json!({
            "load": loaded.load,
            "rows": loaded.table.len(),
            "verdict": verdict,
            "gap": verdict.gap(),
        }));
    report.add_table("ratios", block)?;

    let summary = format!(
        "ratio({}) = {:.4} over {} rows, ratio(not) = {:.4} over {} rows, gap {:.4}: {} at epsilon {}",
        spec.protected_condition(),
        verdict.ratio_p,
        verdict.count_p,
        verdict.ratio_not_p,
        verdict.count_not_p,
        verdict.gap(),
        if verdict.fair { "fair" } else { "unfair" },
        spec.epsilon
    );
    let code = if verdict.fair { 0 } else { EXIT_UNFAIR };
    finish(report, &args.data.out, summary, code)
}

fn pipeline_config(args: &RetrainArgs, spec: FairnessSpec) -> Result<PipelineConfig> {
    let algorithm: Algorithm = args.algo.parse()?;
    let first: ScorerKind = args.first_model.parse()?;
    let second: ScorerKind = args.second_model.parse()?;
    let mut cfg = PipelineConfig::new(spec, algorithm, first, second, args.data.seed);
    cfg.threshold = args.threshold;
    cfg.split = parse_split(&args.split, args.data.seed)?;
    Ok(cfg)
}

pub fn cmd_retrain(args: &RetrainArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let spec = fairness_spec(&args.data, &args.fairness)?;
    let cfg = pipeline_config(args, spec.clone())?;
    let outcome = run_pipeline(&loaded.table, &cfg)?;
    let r = &outcome.report;

    let mut gaps = TableBlock::new(["source", "ratio_p", "ratio_not_p", "gap", "fair"]);
    for g in &r.gaps {
        gaps.push(vec![
            g.source.as_str().into(),
            g.ratio_p.into(),
            g.ratio_not_p.into(),
            g.gap.into(),
            g.fair.into(),
        ])?;
    }
    let mut report =
        ReportDocument::new("retrain", config_echo(args, Some(&spec))?).with_metrics(json!({
            "load": loaded.load,
            "split_rows": r.split_rows,
            "model_accuracy": {
                "first_model": r.first_model_metrics,
                "second_model": r.second_model_metrics,
            },
            "synthetic": r.synthetic,
        }));
    report.add_table("ratios", ratio_block(r))?;
    report.add_table("gaps", gaps)?;

    if let Some(dir) = &args.data.out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        outcome.first.save(&dir.join("first_model.json"))?;
        outcome.second.save(&dir.join("second_model.json"))?;
        outcome
            .synthetic
            .table
            .write_csv(&dir.join("synthetic.csv"))?;
        let prep = serde_json::to_string_pretty(&outcome.preprocessor)? + "\n";
        let path = dir.join("preprocessor.json");
        std::fs::write(&path, prep).map_err(|source| CliError::Io { path, source })?;
    }

    let gap = |s| r.gap(s).gap;
    let summary = format!(
        "{} {}->{}: AUC first {:.4}, second {:.4}; filtered gap original {:.4}, first {:.4}, second {:.4}",
        cfg.algorithm,
        cfg.first_model,
        cfg.second_model,
        r.first_model_metrics.auc,
        r.second_model_metrics.auc,
        gap(LabelSource::Original),
        gap(LabelSource::FirstModel),
        gap(LabelSource::SecondModel),
    );
    finish(report, &args.data.out, summary, 0)
}

/// Train, validation and test features for the parity commands, with group
/// membership taken from the protected column (which is never a feature).
pub struct ParityData {
    pub x: [Matrix; 3],
    pub y: [Vec<f64>; 3],
    pub groups: [GroupPartition; 3],
    pub feature_dim: usize,
    pub pca_dim: Option<usize>,
}

pub fn parity_data(table: &Table, protected: &str, split: &SplitSpec) -> Result<ParityData> {
    let clause = Clause::parse_equality(protected)?;
    let reference = clause
        .values
        .first()
        .map(|v| v.to_string())
        .ok_or_else(|| CliError::Usage("--protected needs a value".into()))?;
    let column = table.schema().column(&clause.column)?;
    if column.role != ColumnRole::Protected {
        return Err(CliError::Usage(format!(
            "`{}` is not a protected column",
            column.name
        )));
    }
    let drops: Vec<String> = table
        .schema()
        .columns()
        .iter()
        .filter(|c| c.role == ColumnRole::Protected)
        .map(|c| c.name.clone())
        .collect();

    let parts = table.split(split)?;
    let prep = Preprocessor::fit(&parts[0], &drops)?;
    let mut xs = Vec::with_capacity(3);
    let mut ys = Vec::with_capacity(3);
    let mut groups = Vec::with_capacity(3);
    for part in &parts {
        let (x, y) = prep.apply(part)?;
        xs.push(x);
        ys.push(y.ok_or_else(|| CliError::Usage("dataset has no label column".into()))?);
        groups.push(GroupPartition::from_column(
            part,
            &clause.column,
            Some(&reference),
        )?);
    }
    let feature_dim = prep.output_dim();
    let mut pca_dim = None;
    if feature_dim > PCA_COMPONENTS {
        let pca = PcaModel::fit(&xs[0], PCA_COMPONENTS)?;
        xs = xs
            .iter()
            .map(|x| pca.apply(x))
            .collect::<luskin_core::Result<_>>()?;
        pca_dim = Some(PCA_COMPONENTS);
    }
    let [x0, x1, x2]: [Matrix; 3] = xs.try_into().expect("three parts");
    let [y0, y1, y2]: [Vec<f64>; 3] = ys.try_into().expect("three parts");
    let [g0, g1, g2]: [GroupPartition; 3] = groups.try_into().expect("three parts");
    Ok(ParityData {
        x: [x0, x1, x2],
        y: [y0, y1, y2],
        groups: [g0, g1, g2],
        feature_dim,
        pca_dim,
    })
}

fn push_rates(block: &mut TableBlock, stage: &str, eval: &ThresholdEvaluation) -> Result<()> {
    for g in &eval.groups {
        block.push(vec![
            stage.into(),
            g.group.clone().into(),
            g.threshold.into(),
            eval.accuracy.into(),
            g.accuracy.into(),
            g.tpr.into(),
            g.fpr.into(),
        ])?;
    }
    Ok(())
}

/// Summed absolute TPR and FPR gaps to the reference group.
pub fn rate_gaps(eval: &ThresholdEvaluation) -> (f64, f64) {
    let r = &eval.groups[0];
    eval.groups[1..].iter().fold((0.0, 0.0), |(t, f), g| {
        (t + (r.tpr - g.tpr).abs(), f + (r.fpr - g.fpr).abs())
    })
}

pub fn cmd_tune_thresholds(args: &TuneArgs) -> Result<Outcome> {
    let loaded = load_data(&args.data)?;
    let protected = demo_protected(&args.data, &args.protected)?;
    let split = parse_split(&args.split, args.data.seed)?;
    let data = parity_data(&loaded.table, &protected, &split)?;

    let kind: ScorerKind = args.model.parse()?;
    let cfg = TrainConfig::for_kind(kind).with_seed(args.data.seed);
    let model = models::train(kind, &data.x[0], &data.y[0], &cfg)?;
    let before = args.threshold.unwrap_or(kind.default_threshold());

    let groups_for = |i: usize| -> Result<Vec<GroupScores>> {
        let scores = model.score_all(&data.x[i])?;
        Ok(data.groups[i].group_scores(&scores, &data.y[i])?)
    };
    let validation = groups_for(1)?;
    let test = groups_for(2)?;
    let k = data.groups[0].k();

    let pso = PsoConfig {
        seed: args.data.seed,
        ..PsoConfig::default()
    };
    let (tuned, search) = tune_thresholds_pso(&validation, args.lambda, &pso)?;
    let test_before = evaluate_thresholds(&test, &vec![before; k], args.lambda)?;
    let test_after = evaluate_thresholds(&test, &tuned.thresholds, args.lambda)?;
    let val_before = evaluate_thresholds(&validation, &vec![before; k], args.lambda)?;

    let mut block = TableBlock::new([
        "stage",
        "group",
        "threshold",
        "accuracy",
        "group_accuracy",
        "tpr",
        "fpr",
    ]);
    push_rates(&mut block, "before", &test_before)?;
    push_rates(&mut block, "after", &test_after)?;

    let (tpr_before, fpr_before) = rate_gaps(&test_before);
    let (tpr_after, fpr_after) = rate_gaps(&test_after);
    let report = {
        let mut r =
            ReportDocument::new("tune-thresholds", config_echo(args, None)?).with_metrics(json!({
                "load": loaded.load,
                "model": kind,
                "feature_dim": data.feature_dim,
                "pca_dim": data.pca_dim,
                "thresholds": tuned,
                "validation_objective_before": val_before.objective,
                "validation_objective_after": search.value,
                "test": {
                    "accuracy_before": test_before.accuracy,
                    "accuracy_after": test_after.accuracy,
                    "accuracy_drop": test_before.accuracy - test_after.accuracy,
                    "tpr_gap_before": tpr_before,
                    "tpr_gap_after": tpr_after,
                    "fpr_gap_before": fpr_before,
                    "fpr_gap_after": fpr_after,
                },
            }));
        r.add_table("thresholds", block)?;
        r
    };
    let summary = format!(
        "{kind}: thresholds {:?}; test accuracy {:.4} -> {:.4}, TPR gap {:.4} -> {:.4}, FPR gap {:.4} -> {:.4}",
        tuned.thresholds,
        test_before.accuracy,
        test_after.accuracy,
        tpr_before,
        tpr_after,
        fpr_before,
        fpr_after
    );
    finish(report, &args.data.out, summary, 0)
}

pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|a| {
            let v: f64 = a
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad alpha `{a}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Usage(format!("alpha {v} outside [0, 1]")));
            }
            Ok(v)
        })
        .collect()
}

/// Held-out results of one equalized-distribution model.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub accuracy: f64,
    pub distance: f64,
    pub tpr_gap: f64,
    pub fpr_gap: f64,
}

pub fn cmd_train_fair(args: &TrainFairArgs) -> Result<Outcome> {
    let alphas = parse_alphas(&args.alpha)?;
    if args.bins == 0 {
        return Err(CliError::Usage("--bins must be >= 1".into()));
    }
    let loaded = load_data(&args.data)?;
    let protected = demo_protected(&args.data, &args.protected)?;
    let split = parse_split(&args.split, args.data.seed)?;
    let data = parity_data(&loaded.table, &protected, &split)?;

    let mut histogram = HistogramConfig::uniform(args.bins, 0.0, 1.0);
    if let Some(s) = args.sigma {
        histogram = histogram.with_sigma(s);
    }
    let base = FairTrainConfig {
        histogram: histogram.clone(),
        optimizer: TrainConfig {
            seed: args.data.seed,
            ..FairTrainConfig::default().optimizer
        },
        ..FairTrainConfig::default()
    };

    let mut sweep = TableBlock::new(["alpha", "accuracy", "distance", "tpr_gap", "fpr_gap"]);
    let mut hists = TableBlock::new(["alpha", "group", "class", "bin_center", "normalized_count"]);
    let mut results = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let cfg = base.clone().with_alpha(alpha);
        let model = train_equalized_distribution(&data.x[0], &data.y[0], &data.groups[0], &cfg)?;
        let result = evaluate_fair_model(&model, &data, &histogram, alpha, &mut hists)?;
        sweep.push(vec![
            alpha.into(),
            result.accuracy.into(),
            result.distance.into(),
            result.tpr_gap.into(),
            result.fpr_gap.into(),
        ])?;
        results.push(result);
    }

    let mut report =
        ReportDocument::new("train-fair", config_echo(args, None)?).with_metrics(json!({
            "load": loaded.load,
            "feature_dim": data.feature_dim,
            "pca_dim": data.pca_dim,
            "histogram": histogram,
            "results": results,
        }));
    report.add_table("alpha_sweep", sweep)?;
    report.add_table("histograms", hists)?;
    if alphas.iter().any(|a| (0.1..=0.2).contains(a)) {
        report.notes.push(
            "alpha in [0.1, 0.2] usually keeps accuracy near the unconstrained model while \
             pulling the group score distributions together"
                .into(),
        );
    }
    let lines: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "alpha {}: accuracy {:.4}, distance {:.5}, TPR gap {:.4}, FPR gap {:.4}",
                r.alpha, r.accuracy, r.distance, r.tpr_gap, r.fpr_gap
            )
        })
        .collect();
    finish(report, &args.data.out, lines.join("\n"), 0)
}

fn evaluate_fair_model(
    model: &RiskScorer,
    data: &ParityData,
    histogram: &HistogramConfig,
    alpha: f64,
    hists: &mut TableBlock,
) -> Result<AlphaResult> {
    let scores = model.score_all(&data.x[2])?;
    let groups = data.groups[2].group_scores(&scores, &data.y[2])?;
    let k = groups.len();
    let eval = evaluate_thresholds(&groups, &vec![0.5; k], 0.0)?;
    let (tpr_gap, fpr_gap) = rate_gaps(&eval);
    let distance = distribution_distance(&groups, histogram)?;
    for g in &groups {
        for class in [1u8, 0] {
            let h = soft_histogram(&g.class_scores(class as f64), histogram, true)?;
            for (c, n) in h.centers.iter().zip(&h.counts) {
                hists.push(vec![
                    alpha.into(),
                    g.name.clone().into(),
                    class.into(),
                    (*c).into(),
                    (*n).into(),
                ])?;
            }
        }
    }
    Ok(AlphaResult {
        alpha,
        accuracy: eval.accuracy,
        distance,
        tpr_gap,
        fpr_gap,
    })
}
