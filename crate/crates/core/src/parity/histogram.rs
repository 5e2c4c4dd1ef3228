use serde::{Deserialize, Serialize};

use super::GroupScores;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-(s - c)^2 / (2 sigma^2))`; differentiable.
    Gaussian,
    /// 1 on `[c - w/2, c + w/2)`, with the last bin closed on the right.
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub centers: Vec<f64>,
    pub bin_width: f64,
    pub sigma: f64,
    pub kernel: Kernel,
}

impl Default for HistogramConfig {
    /// 50 bins of width 0.02 centered at 0.01, 0.03, ..., 0.99; sigma 0.01.
    fn default() -> Self {
        Self::uniform(50, 0.0, 1.0)
    }
}

impl HistogramConfig {
    /// `bins` equal bins over `[lo, hi]` with sigma half the bin width.
    pub fn uniform(bins: usize, lo: f64, hi: f64) -> Self {
        let width = (hi - lo) / bins as f64;
        Self {
            centers: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
            bin_width: width,
            sigma: width / 2.0,
            kernel: Kernel::Gaussian,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidArgument("histogram has no bins".into()));
        }
        if self.centers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "bin centers must be strictly increasing".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bin width must be > 0, got {}",
                self.bin_width
            )));
        }
        Ok(())
    }

    /// Kernel weight of score `s` in bin `c`.
    pub(crate) fn weight(&self, s: f64, bin: usize) -> f64 {
        let c = self.centers[bin];
        match self.kernel {
            Kernel::Gaussian => (-(s - c).powi(2) / (2.0 * self.sigma * self.sigma)).exp(),
            Kernel::Rectangular => {
                let lo = c - self.bin_width / 2.0;
                let hi = c + self.bin_width / 2.0;
                let last = bin + 1 == self.centers.len();
                if s >= lo && (s < hi || (last && s == hi)) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<u8>,
}

impl ScoreHistogram {
    pub fn tagged(mut self, group: &str, class: u8) -> Self {
        self.group = Some(group.to_string());
        self.class = Some(class);
        self
    }
}

/// Kernel-smoothed counts `n_c = sum_i k(s_i, c)`, divided by the number of
/// scores when `normalize` is set.
pub fn soft_histogram(
    scores: &[f64],
    cfg: &HistogramConfig,
    normalize: bool,
) -> Result<ScoreHistogram> {
    cfg.validate()?;
    if normalize && scores.is_empty() {
        return Err(Error::EmptyGroup(
            "cannot normalize an empty histogram".into(),
        ));
    }
    let mut counts = vec![0.0; cfg.centers.len()];
    for &s in scores {
        for (b, n) in counts.iter_mut().enumerate() {
            *n += cfg.weight(s, b);
        }
    }
    if normalize {
        let len = scores.len() as f64;
        counts.iter_mut().for_each(|n| *n /= len);
    }
    Ok(ScoreHistogram {
        centers: cfg.centers.clone(),
        counts,
        normalized: normalize,
        group: None,
        class: None,
    })
}

/// Normalized histograms per group and class, in group order, positives
/// first.
pub(crate) fn class_histograms(
    groups: &[GroupScores],
    cfg: &HistogramConfig,
) -> Result<Vec<[ScoreHistogram; 2]>> {
    groups
        .iter()
        .map(|g| {
            let pos = soft_histogram(&g.class_scores(1.0), cfg, true)?.tagged(&g.name, 1);
            let neg = soft_histogram(&g.class_scores(0.0), cfg, true)?.tagged(&g.name, 0);
            Ok([pos, neg])
        })
        .collect()
}

/// `sum_k>0 (|h_0^+ - h_k^+|^2 + |h_0^- - h_k^-|^2)` over normalized soft
/// histograms of each group's positive and negative scores.
pub fn distribution_distance(groups: &[GroupScores], cfg: &HistogramConfig) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    let hists = class_histograms(groups, cfg)?;
    let reference = &hists[0];
    let mut total = 0.0;
    for h in &hists[1..] {
        for class in 0..2 {
            total += reference[class]
                .counts
                .iter()
                .zip(&h[class].counts)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
    }
    Ok(total)
}
