//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line per criterion
//! and fails if any of its criteria fail. Dataset-backed checks print `SKIP`
//! when the CSV is missing.
//!
//! Data locations default to `data/` in the workspace and can be overridden
//! with `LUSKIN_ADULT_CSV` and `LUSKIN_COMPAS_CSV` (schemas are looked up next
//! to the default files unless `LUSKIN_ADULT_SCHEMA` / `LUSKIN_COMPAS_SCHEMA`
//! are set). The optional SQF run needs `LUSKIN_SQF_CSV` and
//! `LUSKIN_SQF_SCHEMA`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command as Process;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use clap::Parser;
use serde_json::Value;

use luskin_cli::{run, Cli};
use luskin_core::report::ReportDocument;

const PROPERTY_BUDGET: Duration = Duration::from_secs(60);
const ADULT_BUDGET: Duration = Duration::from_secs(5 * 60);
const TUNING_BUDGET: Duration = Duration::from_secs(2 * 60);
const SWEEP_BUDGET: Duration = Duration::from_secs(10 * 60);

const ADULT_MIN_AUC: f64 = 0.87;
const ADULT_MAX_GAP: f64 = 0.06;
const LR_REDUCTION_MAX_SHARE: f64 = 0.5;
const TUNING_MAX_TPR_GAP: f64 = 0.08;
const TUNING_MAX_FPR_GAP: f64 = 0.06;
const LR_MAX_DROP: f64 = 0.04;
const SVM_MAX_DROP: f64 = 0.05;
const SWEEP_MAX_ACCURACY_LOSS: f64 = 0.03;
const SQF_MAX_GAP: f64 = 0.06;
const SQF_MIN_AUC: f64 = 0.79;

const TUNING_SEEDS: [u64; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

/// Timed runs go one at a time.
fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

struct Verdicts {
    failed: Vec<String>,
}

impl Verdicts {
    fn new() -> Self {
        Self { failed: Vec::new() }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name.to_string());
        }
    }

    fn finish(self) {
        assert!(self.failed.is_empty(), "failed: {}", self.failed.join(", "));
    }
}

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn dataset(name: &str) -> Option<(String, String)> {
    let upper = name.to_uppercase();
    let csv = std::env::var(format!("LUSKIN_{upper}_CSV"))
        .map(PathBuf::from)
        .unwrap_or_else(|_| workspace().join(format!("data/{name}.csv")));
    let schema = std::env::var(format!("LUSKIN_{upper}_SCHEMA"))
        .map(PathBuf::from)
        .unwrap_or_else(|_| workspace().join(format!("data/{name}.schema.json")));
    if !csv.exists() || !schema.exists() {
        println!("SKIP {name}: {} not found", csv.display());
        return None;
    }
    Some((
        csv.to_str().unwrap().to_string(),
        schema.to_str().unwrap().to_string(),
    ))
}

fn luskin(args: &[&str]) -> (ReportDocument, Duration) {
    let cli = Cli::try_parse_from(std::iter::once("luskin").chain(args.iter().copied()))
        .expect("valid arguments");
    let start = Instant::now();
    let outcome = run(&cli.command).expect("command succeeds");
    (outcome.report, start.elapsed())
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct RetrainRun {
    second_auc: f64,
    /// Filtered gap per label source.
    gaps: HashMap<String, f64>,
    elapsed: Duration,
}

fn adult_retrain(algo: &str, second: &str) -> Option<&'static RetrainRun> {
    static RUNS: OnceLock<Mutex<HashMap<String, &'static RetrainRun>>> = OnceLock::new();
    let (csv, schema) = dataset("adult")?;
    let key = format!("{algo}/{second}");
    let runs = RUNS.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = runs.lock().unwrap().get(&key) {
        return Some(r);
    }
    let (report, elapsed) = luskin(&[
        "retrain",
        "--data",
        &csv,
        "--schema",
        &schema,
        "--protected",
        "race=White",
        "--filter",
        "education_num",
        ">",
        "10",
        "--algo",
        algo,
        "--first-model",
        "lr",
        "--second-model",
        second,
        "--seed",
        "0",
    ]);
    let gaps = report.tables["gaps"]
        .rows
        .iter()
        .map(|row| (row[0].as_str().unwrap().to_string(), num(&row[3])))
        .collect();
    let run = Box::leak(Box::new(RetrainRun {
        second_auc: num(&report.metrics["model_accuracy"]["second_model"]["auc"]),
        gaps,
        elapsed,
    }));
    runs.lock().unwrap().insert(key, run);
    Some(run)
}

#[test]
fn property_suite_runs_within_budget() {
    let _guard = serial();
    let mut v = Verdicts::new();
    let out = Process::new(env!("CARGO"))
        .current_dir(workspace())
        .args(["test", "-q", "-p", "luskin-core", "--test", "properties"])
        .output()
        .expect("cargo runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let secs = stdout
        .lines()
        .find_map(|l| {
            l.split("finished in ")
                .nth(1)
                .and_then(|s| s.trim_end_matches('s').parse::<f64>().ok())
        })
        .unwrap_or(f64::INFINITY);
    v.check(
        "property suite passes",
        out.status.success(),
        stdout
            .lines()
            .find(|l| l.starts_with("test result"))
            .unwrap_or("no result")
            .to_string(),
    );
    v.check(
        "property suite runtime",
        secs < PROPERTY_BUDGET.as_secs_f64(),
        format!("{secs:.2} s < {} s", PROPERTY_BUDGET.as_secs()),
    );
    v.finish();
}

#[test]
fn adult_pipeline_reaches_auc_and_gap() {
    let _guard = serial();
    let Some(r) = adult_retrain("2", "mlp") else {
        return;
    };
    let mut v = Verdicts::new();
    v.check(
        "adult second-model AUC",
        r.second_auc >= ADULT_MIN_AUC,
        format!("{:.4} >= {ADULT_MIN_AUC}", r.second_auc),
    );
    let gap = r.gaps["second_model"];
    v.check(
        "adult educated-group gap",
        gap <= ADULT_MAX_GAP,
        format!("{gap:.4} <= {ADULT_MAX_GAP}"),
    );
    v.check(
        "adult pipeline runtime",
        r.elapsed <= ADULT_BUDGET,
        format!(
            "{:.1} s <= {} s",
            r.elapsed.as_secs_f64(),
            ADULT_BUDGET.as_secs()
        ),
    );
    v.finish();
}

#[test]
fn adult_lr_second_stage_reduces_less() {
    let _guard = serial();
    let mut v = Verdicts::new();
    let mut shares = Vec::new();
    for algo in ["1", "2"] {
        let (Some(lr), Some(mlp)) = (adult_retrain(algo, "lr"), adult_retrain(algo, "mlp")) else {
            return;
        };
        let base = lr.gaps["first_model"];
        let lr_cut = base - lr.gaps["second_model"];
        let mlp_cut = base - mlp.gaps["second_model"];
        let share = lr_cut / mlp_cut;
        println!(
            "  algorithm {algo}: first-model gap {base:.4}, LR second {:.4} (reduction {lr_cut:.4}), MLP second {:.4} (reduction {mlp_cut:.4}), share {share:.3}",
            lr.gaps["second_model"], mlp.gaps["second_model"]
        );
        shares.push(share);
    }
    let best = shares.iter().copied().fold(f64::INFINITY, f64::min);
    v.check(
        "adult LR second-stage reduction vs MLP",
        best <= LR_REDUCTION_MAX_SHARE,
        format!("best share {best:.3} <= {LR_REDUCTION_MAX_SHARE}"),
    );
    v.finish();
}

#[test]
fn compas_threshold_tuning() {
    let _guard = serial();
    let Some((csv, schema)) = dataset("compas") else {
        return;
    };
    let mut v = Verdicts::new();
    let mut slowest = Duration::ZERO;
    let mut per_model: HashMap<&str, (Vec<f64>, Vec<f64>, Vec<f64>)> = HashMap::new();
    for model in ["lr", "svm"] {
        let entry = per_model.entry(model).or_default();
        for seed in TUNING_SEEDS {
            let seed = seed.to_string();
            let (report, elapsed) = luskin(&[
                "tune-thresholds",
                "--data",
                &csv,
                "--schema",
                &schema,
                "--protected",
                "race=white",
                "--model",
                model,
                "--lambda",
                "1",
                "--seed",
                &seed,
            ]);
            slowest = slowest.max(elapsed);
            let t = &report.metrics["test"];
            let (drop, tpr, fpr) = (
                num(&t["accuracy_drop"]),
                num(&t["tpr_gap_after"]),
                num(&t["fpr_gap_after"]),
            );
            println!("  {model} seed {seed}: accuracy drop {drop:.4}, TPR gap {tpr:.4}, FPR gap {fpr:.4}");
            entry.0.push(drop);
            entry.1.push(tpr);
            entry.2.push(fpr);
        }
    }
    let (drops, tprs, fprs) = per_model["lr"].clone();
    let tpr = median(tprs);
    let fpr = median(fprs);
    let drop = median(drops);
    v.check(
        "compas LR TPR gap (median over splits)",
        tpr <= TUNING_MAX_TPR_GAP,
        format!("{tpr:.4} <= {TUNING_MAX_TPR_GAP}"),
    );
    v.check(
        "compas LR FPR gap (median over splits)",
        fpr <= TUNING_MAX_FPR_GAP,
        format!("{fpr:.4} <= {TUNING_MAX_FPR_GAP}"),
    );
    v.check(
        "compas LR accuracy drop (median over splits)",
        drop <= LR_MAX_DROP,
        format!("{drop:.4} <= {LR_MAX_DROP}"),
    );
    let svm_drop = median(per_model["svm"].0.clone());
    v.check(
        "compas SVM accuracy drop (median over splits)",
        svm_drop <= SVM_MAX_DROP,
        format!("{svm_drop:.4} <= {SVM_MAX_DROP}"),
    );
    v.check(
        "compas tuning runtime (slowest run)",
        slowest <= TUNING_BUDGET,
        format!(
            "{:.1} s <= {} s",
            slowest.as_secs_f64(),
            TUNING_BUDGET.as_secs()
        ),
    );
    v.finish();
}

#[test]
fn compas_alpha_sweep() {
    let _guard = serial();
    let Some((csv, schema)) = dataset("compas") else {
        return;
    };
    let mut v = Verdicts::new();
    let (report, elapsed) = luskin(&[
        "train-fair",
        "--data",
        &csv,
        "--schema",
        &schema,
        "--protected",
        "race=white",
        "--alpha",
        "0.01,0.1,0.2,1",
        "--seed",
        "0",
    ]);
    let results = report.metrics["results"].as_array().unwrap();
    let by_alpha: Vec<(f64, f64, f64)> = results
        .iter()
        .map(|r| (num(&r["alpha"]), num(&r["distance"]), num(&r["accuracy"])))
        .collect();
    for (a, d, acc) in &by_alpha {
        println!("  alpha {a}: distance {d:.5}, accuracy {acc:.4}");
    }
    let decreasing = by_alpha
        .windows(2)
        .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
    v.check(
        "compas distance strictly decreasing as alpha decreases",
        decreasing,
        format!(
            "{:?}",
            by_alpha
                .iter()
                .map(|r| format!("{:.5}", r.1))
                .collect::<Vec<_>>()
        ),
    );
    let acc = |alpha: f64| by_alpha.iter().find(|r| r.0 == alpha).unwrap().2;
    let loss = acc(1.0) - acc(0.2);
    v.check(
        "compas accuracy at alpha 0.2 vs alpha 1",
        loss <= SWEEP_MAX_ACCURACY_LOSS,
        format!("loss {loss:.4} <= {SWEEP_MAX_ACCURACY_LOSS}"),
    );
    v.check(
        "compas alpha sweep runtime",
        elapsed <= SWEEP_BUDGET,
        format!(
            "{:.1} s <= {} s",
            elapsed.as_secs_f64(),
            SWEEP_BUDGET.as_secs()
        ),
    );
    v.finish();
}

/// Optional: only runs when the SQF files are supplied. Protected group and
/// filter default to `race=W` and `crime = assault`.
#[test]
fn sqf_pipeline() {
    let (Ok(csv), Ok(schema)) = (
        std::env::var("LUSKIN_SQF_CSV"),
        std::env::var("LUSKIN_SQF_SCHEMA"),
    ) else {
        println!("SKIP sqf: LUSKIN_SQF_CSV / LUSKIN_SQF_SCHEMA not set");
        return;
    };
    let _guard = serial();
    let protected = std::env::var("LUSKIN_SQF_PROTECTED").unwrap_or_else(|_| "race=W".into());
    let filter = std::env::var("LUSKIN_SQF_FILTER").unwrap_or_else(|_| "crime = assault".into());
    let mut args = vec![
        "retrain",
        "--data",
        &csv,
        "--schema",
        &schema,
        "--protected",
        &protected,
        "--algo",
        "2",
        "--first-model",
        "lr",
        "--second-model",
        "mlp",
        "--filter",
    ];
    args.extend(filter.split_whitespace());
    let (report, _) = luskin(&args);
    let gap = report.tables["gaps"]
        .rows
        .iter()
        .find(|r| r[0] == "second_model")
        .map(|r| num(&r[3]))
        .unwrap();
    let auc = num(&report.metrics["model_accuracy"]["second_model"]["auc"]);
    let mut v = Verdicts::new();
    v.check(
        "sqf filtered gap",
        gap <= SQF_MAX_GAP,
        format!("{gap:.4} <= {SQF_MAX_GAP}"),
    );
    v.check(
        "sqf second-model AUC",
        auc >= SQF_MIN_AUC,
        format!("{auc:.4} >= {SQF_MIN_AUC}"),
    );
    v.finish();
}
