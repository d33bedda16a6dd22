// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mask::ChangePointMask;
use super::niw::{log_posterior, BlockScorer, NiwPrior};
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_CHAIN};
use crate::timeseries::RoiTimeSeries;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
    pub min_block_length: usize,
}

impl McmcConfig {
    /// 500 burn-in sweeps, 1500 recorded sweeps, blocks of at least `max(2, ⌈m/4⌉)`.
    pub fn default_for(roi_count: usize, seed: u64) -> Self {
        McmcConfig { burn_in: 500, samples: 1500, seed, min_block_length: roi_count.div_ceil(4).max(2) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("mcmc.samples must be at least 1".into()));
        }
        if self.min_block_length == 0 {
            return Err(Error::Config("mcmc.min_block_length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub map_mask: ChangePointMask,
    /// Fraction of recorded sweeps with each bit set; entry 0 is always 1.
    pub marginal_probability: Vec<f64>,
    pub map_log_posterior: f64,
}

/// Single-site Gibbs sampler over change-point masks.
///
/// Each sweep visits t = 2..T in order and redraws the bit from its exact
/// conditional. Only the blocks adjacent to t change, so the conditional needs
/// three block scores. States with a block shorter than `min_block_length` have
/// probability zero. The chain starts from [`greedy_start`].
pub fn sample_posterior(series: &RoiTimeSeries, prior: &NiwPrior, config: &McmcConfig) -> Result<PosteriorSummary> {
    config.validate()?;
    let t_len = series.len();
    let min_len = config.min_block_length;
    if t_len < 2 * min_len {
        return Err(Error::Config(format!(
            "series of length {t_len} is shorter than 2 x min_block_length = {}",
            2 * min_len
        )));
    }
    let scorer = BlockScorer::new(series, prior)?;
    let mut rng = stream(config.seed, &[TAG_CHAIN, 0]);

    let mut bits = greedy_start(&scorer, t_len, min_len)?;
    let mut current = (t_len - 1) as f64 * 0.5f64.ln();
    let mut start = 0;
    for end in (1..=t_len).filter(|&e| e == t_len || bits[e]) {
        current += scorer.score(start, end)?;
        start = end;
    }

    let mut counts = vec![0usize; t_len];
    let mut best: Option<(f64, Vec<bool>)> = None;

    for sweep in 0..config.burn_in + config.samples {
        for t in 1..t_len {
            let prev = (0..t).rev().find(|&i| bits[i]).unwrap_or(0);
            let next = (t + 1..t_len).find(|&i| bits[i]).unwrap_or(t_len);
            let merged = scorer.score(prev, next)?;
            let split = if t - prev >= min_len && next - t >= min_len {
                Some(scorer.score(prev, t)? + scorer.score(t, next)?)
            } else {
                None
            };
            let on = match split {
                Some(split) => {
                    let p_on = 1.0 / (1.0 + (merged - split).exp());
                    rng.random::<f64>() < p_on
                }
                None => false,
            };
            let before = if bits[t] { split.unwrap_or(merged) } else { merged };
            let after = if on { split.unwrap_or(merged) } else { merged };
            current += after - before;
            bits[t] = on;
        }
        if sweep >= config.burn_in {
            for (c, &b) in counts.iter_mut().zip(&bits) {
                *c += b as usize;
            }
            if best.as_ref().is_none_or(|(score, _)| current > *score) {
                best = Some((current, bits.clone()));
            }
        }
    }

    let (_, map_bits) = best.expect("at least one recorded sweep");
    let map_mask = ChangePointMask::new(map_bits)?;
    let map_log_posterior = log_posterior(&map_mask, series, prior)?;
    let marginal_probability = counts.iter().map(|&c| c as f64 / config.samples as f64).collect();
    Ok(PosteriorSummary { map_mask, marginal_probability, map_log_posterior })
}

/// Top-down binary segmentation: repeatedly inserts the single change point with
/// the largest evidence gain until no insertion helps. Starting single-site moves
/// from here avoids the fragmented local modes a single-block start falls into,
/// where any one merge lowers the score but merging all of them raises it.
fn greedy_start(scorer: &BlockScorer, t_len: usize, min_len: usize) -> Result<Vec<bool>> {
    let mut bits = vec![false; t_len];
    bits[0] = true;
    let mut bounds = vec![0, t_len];
    loop {
        let mut best: Option<(f64, usize)> = None;
        for w in bounds.windows(2) {
            let (s, e) = (w[0], w[1]);
            if e - s < 2 * min_len {
                continue;
            }
            let whole = scorer.score(s, e)?;
            for c in s + min_len..=e - min_len {
                let gain = scorer.score(s, c)? + scorer.score(c, e)? - whole;
                if gain > 0.0 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, c));
                }
            }
        }
        match best {
            Some((_, c)) => {
                bits[c] = true;
                let pos = bounds.partition_point(|&b| b < c);
                bounds.insert(pos, c);
            }
            None => return Ok(bits),
        }
    }
}
