use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_thresholds, GroupScores, ThresholdSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Added on both sides of the observed score range to form the bounds.
    pub margin: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 40,
            iterations: 200,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            margin: 0.01,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidArgument(
                "PSO needs at least 2 particles".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "PSO needs at least 1 iteration".into(),
            ));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("margin", self.margin),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "PSO {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub position: Vec<f64>,
    pub value: f64,
    /// Global-best value after initialization and after each iteration.
    pub history: Vec<f64>,
}

/// Maximizes `f` over the box `bounds` with a global-best particle swarm.
///
/// `starts` are placed as the first particles; the rest start uniformly at
/// random. Positions are clamped to the box and velocities to its width.
pub fn pso_maximize<F>(
    f: F,
    bounds: &[(f64, f64)],
    starts: &[Vec<f64>],
    cfg: &PsoConfig,
) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("empty search box".into()));
    }
    if let Some((lo, hi)) = bounds
        .iter()
        .find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(Error::InvalidArgument(format!("bad bounds [{lo}, {hi}]")));
    }
    let dim = bounds.len();
    if let Some(s) = starts.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: s.len(),
        });
    }
    let width: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(cfg.particles);
    let mut vel: Vec<Vec<f64>> = Vec::with_capacity(cfg.particles);
    for p in 0..cfg.particles {
        let x = match starts.get(p) {
            Some(s) => s
                .iter()
                .zip(bounds)
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
            None => bounds
                .iter()
                .map(|(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect(),
        };
        let v = width
            .iter()
            .map(|w| (rng.gen::<f64>() * 2.0 - 1.0) * 0.1 * w)
            .collect();
        pos.push(x);
        vel.push(v);
    }
    let mut best_pos = pos.clone();
    let mut best_val: Vec<f64> = pos.iter().map(|x| f(x)).collect();
    let mut g = 0;
    for p in 1..cfg.particles {
        if best_val[p] > best_val[g] {
            g = p;
        }
    }
    let mut global_pos = best_pos[g].clone();
    let mut global_val = best_val[g];
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(global_val);

    for _ in 0..cfg.iterations {
        for p in 0..cfg.particles {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = cfg.inertia * vel[p][d]
                    + cfg.cognitive * r1 * (best_pos[p][d] - pos[p][d])
                    + cfg.social * r2 * (global_pos[d] - pos[p][d]);
                vel[p][d] = v.clamp(-width[d], width[d]);
                pos[p][d] = (pos[p][d] + vel[p][d]).clamp(bounds[d].0, bounds[d].1);
            }
            let val = f(&pos[p]);
            if val > best_val[p] {
                best_val[p] = val;
                best_pos[p].clone_from(&pos[p]);
                if val > global_val {
                    global_val = val;
                    global_pos.clone_from(&pos[p]);
                }
            }
        }
        history.push(global_val);
    }
    Ok(PsoResult {
        position: global_pos,
        value: global_val,
        history,
    })
}

/// Most accurate single threshold shared by all groups, scanning every
/// midpoint between consecutive distinct scores (plus both ends).
fn best_shared_threshold(groups: &[GroupScores]) -> Result<f64> {
    let mut all: Vec<f64> = groups
        .iter()
        .flat_map(|g| g.scores.iter().copied())
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut candidates = Vec::with_capacity(all.len() + 1);
    candidates.push(all[0]);
    candidates.extend(all.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(all[all.len() - 1] + 1.0);
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for t in candidates {
        let v = evaluate_thresholds(groups, &vec![t; groups.len()], 0.0)?.accuracy;
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(best.1)
}

/// One representative threshold per piece of a group's piecewise-constant
/// confusion counts, with the TPR, FPR and correct count it yields.
struct Piece {
    threshold: f64,
    tpr: f64,
    fpr: f64,
    correct: usize,
}

fn pieces(g: &GroupScores, (lo, hi): (f64, f64)) -> Vec<Piece> {
    let mut rows: Vec<(f64, bool)> = g
        .scores
        .iter()
        .zip(&g.labels)
        .map(|(s, y)| (*s, *y == 1.0))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pos = rows.iter().filter(|r| r.1).count();
    let neg = rows.len() - pos;
    let piece = |threshold: f64, tp: usize, fp: usize| Piece {
        threshold,
        tpr: tp as f64 / pos as f64,
        fpr: fp as f64 / neg as f64,
        correct: tp + neg - fp,
    };
    // everything at or above the current cut is predicted positive
    let (mut tp, mut fp) = (pos, neg);
    let mut out = vec![piece(lo, tp, fp)];
    let mut i = 0;
    while i < rows.len() {
        let s = rows[i].0;
        while i < rows.len() && rows[i].0 == s {
            if rows[i].1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let t = if i < rows.len() {
            0.5 * (s + rows[i].0)
        } else {
            hi
        };
        out.push(piece(t, tp, fp));
    }
    out
}

/// Exact refinement of the swarm's best point. With the reference threshold
/// fixed, the objective splits into independent per-group terms, and each
/// group's term is constant between its own distinct scores, so scanning the
/// reference pieces and taking every other group's best piece finds the
/// maximum over the box. The result is appended to the history.
fn polish(
    groups: &[GroupScores],
    lambda: f64,
    bounds: (f64, f64),
    result: &mut PsoResult,
) -> Result<()> {
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let total = total as f64;
    let all: Vec<Vec<Piece>> = groups.iter().map(|g| pieces(g, bounds)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in &all[0] {
        let mut value = r.correct as f64 / total;
        let mut t = vec![r.threshold];
        for others in &all[1..] {
            let (v, p) = others
                .iter()
                .map(|p| {
                    let v = p.correct as f64 / total
                        - lambda * ((r.tpr - p.tpr).abs() + (r.fpr - p.fpr).abs());
                    (v, p)
                })
                .fold(None, |acc: Option<(f64, &Piece)>, (v, p)| match acc {
                    Some((bv, _)) if bv >= v => acc,
                    _ => Some((v, p)),
                })
                .expect("at least one piece");
            value += v;
            t.push(p.threshold);
        }
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, t));
        }
    }
    if let Some((_, t)) = best {
        let exact = evaluate_thresholds(groups, &t, lambda)?.objective;
        if exact > result.value {
            result.value = exact;
            result.position = t;
        }
    }
    result.history.push(result.value);
    Ok(())
}

/// Per-group thresholds maximizing `accuracy - lambda * unfairness` on the
/// given (validation) groups.
///
/// One particle starts at the most accurate shared threshold, so the result
/// is never worse than that starting point. The swarm's best point is then
/// refined by an exact scan over score pieces.
pub fn tune_thresholds_pso(
    groups: &[GroupScores],
    lambda: f64,
    cfg: &PsoConfig,
) -> Result<(ThresholdSet, PsoResult)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    // shape check
    evaluate_thresholds(groups, &vec![0.0; groups.len()], lambda)?;
    let (lo, hi) = groups
        .iter()
        .flat_map(|g| g.scores.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(*s), hi.max(*s))
        });
    let bounds = vec![(lo - cfg.margin, hi + cfg.margin); groups.len()];
    let shared = best_shared_threshold(groups)?;
    let start = vec![shared.clamp(lo - cfg.margin, hi + cfg.margin); groups.len()];
    let objective = |t: &[f64]| {
        evaluate_thresholds(groups, t, lambda)
            .map(|e| e.objective)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut result = pso_maximize(objective, &bounds, &[start], cfg)?;
    polish(
        groups,
        lambda,
        (lo - cfg.margin, hi + cfg.margin),
        &mut result,
    )?;
    let set = ThresholdSet {
        groups: groups.iter().map(|g| g.name.clone()).collect(),
        thresholds: result.position.clone(),
        lambda,
        objective: result.value,
    };
    Ok((set, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parity::equalized_odds_objective;

    #[test]
    fn finds_quadratic_peak() {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] + 0.2).powi(2);
        let r = pso_maximize(f, &[(-1.0, 1.0), (-1.0, 1.0)], &[], &PsoConfig::default()).unwrap();
        assert!((r.position[0] - 0.3).abs() < 1e-4);
        assert!((r.position[1] + 0.2).abs() < 1e-4);
    }

    #[test]
    fn history_is_monotone_and_seeded() {
        let f = |x: &[f64]| (5.0 * x[0]).sin() * (3.0 * x[1]).cos();
        let cfg = PsoConfig {
            iterations: 50,
            seed: 9,
            ..PsoConfig::default()
        };
        let a = pso_maximize(f, &[(0.0, 2.0), (0.0, 2.0)], &[], &cfg).unwrap();
        assert_eq!(a.history.len(), 51);
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        let b = pso_maximize(f, &[(0.0, 2.0), (0.0, 2.0)], &[], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_groups_match_single_threshold() {
        let scores = [0.1, 0.35, 0.4, 0.55, 0.6, 0.8, 0.9, 0.45];
        let labels = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let a = GroupScores::new("a", scores.to_vec(), labels.to_vec()).unwrap();
        let b = GroupScores::new("b", scores.to_vec(), labels.to_vec()).unwrap();
        let groups = [a, b];
        let (set, _) = tune_thresholds_pso(&groups, 1.0, &PsoConfig::default()).unwrap();
        let e = evaluate_thresholds(&groups, &set.thresholds, 1.0).unwrap();
        let single_best = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .map(|t| equalized_odds_objective(&groups, &[t, t], 0.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(e.unfairness.abs() < 1e-12);
        assert!((e.accuracy - single_best).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let f = |_: &[f64]| 0.0;
        let one = PsoConfig {
            particles: 1,
            ..PsoConfig::default()
        };
        assert!(pso_maximize(f, &[(0.0, 1.0)], &[], &one).is_err());
        assert!(pso_maximize(f, &[(1.0, 0.0)], &[], &PsoConfig::default()).is_err());
        assert!(pso_maximize(f, &[(0.0, f64::INFINITY)], &[], &PsoConfig::default()).is_err());
    }
}
