//! Synthetic biased dataset for smoke tests and `--demo` runs.
//!
//! Rows look like street-stop records: a protected `race` (`W` / `NW`) and
//! `sex`, an unprotected `crime` category, `age` and two numeric signals.
//! The label is drawn from a logistic model of the unprotected columns plus
//! a race term that is only active for `crime = assault`, so the filtered
//! ratio test on `crime = assault` is unfair while the unfiltered ratios
//! stay close.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::sigmoid;
use crate::tabular::{ColumnKind, ColumnRole, ColumnSchema, Schema, Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub rows: usize,
    pub seed: u64,
    /// Log-odds added for `race = W` inside `crime = assault`.
    pub bias: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            rows: 4000,
            seed: 7,
            bias: 1.5,
        }
    }
}

pub fn demo_schema() -> Schema {
    use ColumnKind::*;
    use ColumnRole::*;
    Schema::new(vec![
        ColumnSchema::new("race", Categorical, Protected),
        ColumnSchema::new("sex", Binary, Protected),
        ColumnSchema::new("age", Numeric, Unprotected),
        ColumnSchema::new("crime", Categorical, Unprotected),
        ColumnSchema::new("x1", Numeric, Unprotected),
        ColumnSchema::new("x2", Numeric, Unprotected),
        ColumnSchema::new("outcome", Binary, Label),
    ])
    .expect("demo schema is valid")
}

pub fn demo_table(cfg: &DemoConfig) -> Result<Table> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let ages = Normal::new(35.0, 10.0).expect("age normal");
    let mut rows = Vec::with_capacity(cfg.rows);
    for _ in 0..cfg.rows {
        let white = rng.gen_bool(0.5);
        let male = rng.gen_bool(0.7);
        let age: f64 = ages.sample(&mut rng);
        let age = age.clamp(16.0, 80.0).round();
        let u: f64 = rng.gen();
        let crime = if u < 0.3 {
            "assault"
        } else if u < 0.7 {
            "theft"
        } else {
            "other"
        };
        let x1: f64 = noise.sample(&mut rng);
        let x2: f64 = noise.sample(&mut rng);
        let assault = crime == "assault";
        let mut logit = -0.6 + 1.2 * x1 - 0.8 * x2 - 0.02 * (age - 35.0);
        if assault {
            logit += 0.4;
            if white {
                logit += cfg.bias;
            }
        }
        let y = if rng.gen::<f64>() < sigmoid(logit) {
            1.0
        } else {
            0.0
        };
        rows.push(vec![
            Value::Sym(if white { "W" } else { "NW" }.into()),
            Value::Num(if male { 1.0 } else { 0.0 }),
            Value::Num(age),
            Value::Sym(crime.into()),
            Value::Num(x1),
            Value::Num(x2),
            Value::Num(y),
        ]);
    }
    Table::new(demo_schema(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{check_fair, FairnessSpec};
    use crate::tabular::{Clause, Comparator, FilterCondition};

    fn spec() -> FairnessSpec {
        FairnessSpec::new(
            FilterCondition::single(Clause::new("race", Comparator::Eq, "W")),
            FilterCondition::single(Clause::new("crime", Comparator::Eq, "assault")),
            0.05,
        )
    }

    #[test]
    fn deterministic() {
        let cfg = DemoConfig::default();
        assert_eq!(demo_table(&cfg).unwrap(), demo_table(&cfg).unwrap());
        let other = DemoConfig {
            seed: 8,
            ..cfg.clone()
        };
        assert_ne!(demo_table(&cfg).unwrap(), demo_table(&other).unwrap());
    }

    #[test]
    fn bias_shows_only_under_filter() {
        let t = demo_table(&DemoConfig::default()).unwrap();
        assert!(!check_fair(&t, &spec()).unwrap().fair);
        let fair = demo_table(&DemoConfig {
            bias: 0.0,
            ..DemoConfig::default()
        })
        .unwrap();
        assert!(check_fair(&fair, &spec()).unwrap().fair);
    }
}
