//! Reference baselines: vote-score sampling and user-tag matrix factorization.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DatasetSplit, UserIndex};
use crate::diffusion::{rank_users, DiffusionError, Ranking};
use crate::ingest::PostCorpus;
use crate::sparse::SparseUserTagMatrix;

/// Sampling weight for users whose mean vote score is not positive.
pub const SCORE_WEIGHT_FLOOR: f64 = 1e-6;
pub const DEFAULT_SCORE_TRIALS: usize = 50;
pub const DEFAULT_FACTORS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("cannot factorize an empty matrix")]
    EmptyMatrix,
    #[error("latent dimension must be at least 1")]
    NoFactors,
    #[error("training diverged at epoch {epoch} (learning_rate={learning_rate}, l2={l2})")]
    Diverged { epoch: usize, learning_rate: f64, l2: f64 },
    #[error("model snapshot: {0}")]
    Snapshot(String),
}

/// Mean answer vote score per candidate and the derived sampling weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteScoreTable {
    pub user_ids: Vec<u64>,
    pub mean_scores: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VoteScoreTable {
    pub fn from_means(user_ids: Vec<u64>, mean_scores: Vec<f64>) -> Self {
        assert_eq!(user_ids.len(), mean_scores.len());
        let weights = mean_scores
            .iter()
            .map(|&m| if m > 0.0 { m } else { SCORE_WEIGHT_FLOOR })
            .collect();
        Self {
            user_ids,
            mean_scores,
            weights,
        }
    }

    /// Averages every training-period answer score of each candidate.
    pub fn from_training(split: &DatasetSplit, corpus: &PostCorpus, users: &UserIndex) -> Self {
        let mut sums = vec![0i64; users.len()];
        let mut counts = vec![0usize; users.len()];
        for a in corpus.answers.values() {
            let Some(i) = users.index_of(&a.owner_user_id) else {
                continue;
            };
            if corpus
                .questions
                .get(&a.question_id)
                .is_some_and(|q| split.in_training_period(q))
            {
                sums[i] += a.score;
                counts[i] += 1;
            }
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &n)| if n > 0 { s as f64 / n as f64 } else { 0.0 })
            .collect();
        Self::from_means(users.keys().to_vec(), means)
    }
}

/// Draws one ordering of `0..weights.len()` by repeatedly picking among the
/// remaining items with probability proportional to weight. Uses exponential
/// keys `ln(U)/w`, which yields the same distribution in one sort.
pub fn weighted_permutation<R: Rng>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let uniform = weights.iter().all(|&w| w <= 0.0);
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let w = if uniform { 1.0 } else { w.max(0.0) };
            let u: f64 = 1.0 - rng.random::<f64>();
            let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Result of the vote-score baseline: per-user mean rank over the trials and
/// the ranking ordered by it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRanking {
    pub average_ranks: Vec<f64>,
    pub ranking: Ranking,
}

pub fn score_baseline_rank(table: &VoteScoreTable, trials: usize, seed: u64) -> Result<ExpectedRanking, BaselineError> {
    if trials == 0 {
        return Err(BaselineError::NoTrials);
    }
    let n = table.user_ids.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rank_sums = vec![0.0; n];
    for _ in 0..trials {
        for (pos, user) in weighted_permutation(&table.weights, &mut rng).into_iter().enumerate() {
            rank_sums[user] += (pos + 1) as f64;
        }
    }
    let average_ranks: Vec<f64> = rank_sums.iter().map(|s| s / trials as f64).collect();
    let negated: Vec<f64> = average_ranks.iter().map(|r| -r).collect();
    Ok(ExpectedRanking {
        ranking: rank_users(&negated, &table.user_ids),
        average_ranks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfHyperParams {
    pub factors: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Unobserved entries sampled per observed entry each epoch.
    pub negative_ratio: f64,
    pub init_std: f64,
}

impl Default for MfHyperParams {
    fn default() -> Self {
        Self {
            factors: DEFAULT_FACTORS,
            learning_rate: 0.01,
            l2: 0.01,
            epochs: 100,
            negative_ratio: 1.0,
            init_std: 0.1,
        }
    }
}

/// Factorization `S ≈ P·Qᵀ` of a user-tag matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    pub rows: usize,
    pub cols: usize,
    pub params: MfHyperParams,
    pub seed: u64,
    /// Training targets are `S / value_scale`; predictions are mapped back.
    pub value_scale: f64,
    /// `rows × factors`, row-major.
    pub user_factors: Vec<f64>,
    /// `cols × factors`, row-major.
    pub tag_factors: Vec<f64>,
    /// Loss before training followed by the loss after each epoch.
    pub losses: Vec<f64>,
}

impl MfModel {
    pub fn user(&self, i: usize) -> &[f64] {
        let k = self.params.factors;
        &self.user_factors[i * k..(i + 1) * k]
    }

    pub fn tag(&self, t: usize) -> &[f64] {
        let k = self.params.factors;
        &self.tag_factors[t * k..(t + 1) * k]
    }

    /// Predicted activity of user `i` on tag `t`.
    pub fn predict(&self, i: usize, t: usize) -> f64 {
        dot(self.user(i), self.tag(t)) * self.value_scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_negatives(
    rng: &mut ChaCha8Rng,
    observed: &HashSet<(usize, usize)>,
    rows: usize,
    cols: usize,
    count: usize,
) -> Vec<(usize, usize, f64)> {
    let free = rows * cols - observed.len();
    let count = count.min(free);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let cell = (rng.random_range(0..rows), rng.random_range(0..cols));
        if !observed.contains(&cell) {
            out.push((cell.0, cell.1, 0.0));
        }
    }
    out
}

fn squared_error(user: &[f64], tag: &[f64], k: usize, samples: &[(usize, usize, f64)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let total: f64 = samples
        .iter()
        .map(|&(i, t, r)| {
            let e = r - dot(&user[i * k..(i + 1) * k], &tag[t * k..(t + 1) * k]);
            e * e
        })
        .sum();
    total / samples.len() as f64
}

/// Fits factors by SGD on squared error over the observed entries plus
/// uniformly drawn unobserved entries with target 0. Targets are divided by
/// the largest entry so step sizes behave the same across matrices.
pub fn train_tag_mf(matrix: &SparseUserTagMatrix, params: MfHyperParams, seed: u64) -> Result<MfModel, BaselineError> {
    if matrix.is_empty() {
        return Err(BaselineError::EmptyMatrix);
    }
    if params.factors == 0 {
        return Err(BaselineError::NoFactors);
    }
    let (rows, cols) = matrix.dims();
    let k = params.factors;
    let value_scale = matrix.triplets().map(|(_, _, v)| v).fold(0.0, f64::max);
    let observed: Vec<(usize, usize, f64)> = matrix.triplets().map(|(r, c, v)| (r, c, v / value_scale)).collect();
    let observed_cells: HashSet<(usize, usize)> = observed.iter().map(|&(r, c, _)| (r, c)).collect();
    let negatives_per_epoch = (params.negative_ratio * observed.len() as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, params.init_std).expect("init_std must be finite and non-negative");
    let mut user: Vec<f64> = (0..rows * k).map(|_| init.sample(&mut rng)).collect();
    let mut tag: Vec<f64> = (0..cols * k).map(|_| init.sample(&mut rng)).collect();

    // fixed evaluation sample so epoch losses are comparable
    let mut eval_set = observed.clone();
    eval_set.extend(sample_negatives(
        &mut rng,
        &observed_cells,
        rows,
        cols,
        negatives_per_epoch,
    ));
    let mut losses = vec![squared_error(&user, &tag, k, &eval_set)];

    let mut samples = Vec::with_capacity(observed.len() + negatives_per_epoch);
    let lr = params.learning_rate;
    for epoch in 1..=params.epochs {
        samples.clear();
        samples.extend_from_slice(&observed);
        samples.extend(sample_negatives(
            &mut rng,
            &observed_cells,
            rows,
            cols,
            negatives_per_epoch,
        ));
        samples.shuffle(&mut rng);
        for &(i, t, r) in &samples {
            let (p, q) = (&mut user[i * k..(i + 1) * k], &mut tag[t * k..(t + 1) * k]);
            let err = r - dot(p, q);
            for f in 0..k {
                let (pf, qf) = (p[f], q[f]);
                p[f] += lr * (err * qf - params.l2 * pf);
                q[f] += lr * (err * pf - params.l2 * qf);
            }
        }
        let loss = squared_error(&user, &tag, k, &eval_set);
        if !loss.is_finite() {
            return Err(BaselineError::Diverged {
                epoch,
                learning_rate: params.learning_rate,
                l2: params.l2,
            });
        }
        losses.push(loss);
    }

    Ok(MfModel {
        rows,
        cols,
        params,
        seed,
        value_scale,
        user_factors: user,
        tag_factors: tag,
        losses,
    })
}

/// `score_i = Σ_{τ∈tags} ⟨P_i, Q_τ⟩`.
pub fn mf_score(model: &MfModel, tags: &[usize]) -> Result<Vec<f64>, DiffusionError> {
    if tags.is_empty() {
        return Err(DiffusionError::NoKnownTags);
    }
    if let Some(&t) = tags.iter().find(|&&t| t >= model.cols) {
        return Err(DiffusionError::TagOutOfRange(t));
    }
    let k = model.params.factors;
    let mut summed = vec![0.0; k];
    for &t in tags {
        for (s, q) in summed.iter_mut().zip(model.tag(t)) {
            *s += q;
        }
    }
    Ok((0..model.rows)
        .map(|i| dot(model.user(i), &summed) * model.value_scale)
        .collect())
}

const MODEL_MAGIC: &[u8; 8] = b"TBGERMF\0";
const MODEL_VERSION: u8 = 1;

/// Writes a model snapshot: magic, version byte, then little-endian
/// `rows: u64, cols: u64, factors: u64, epochs: u64, learning_rate, l2,
/// negative_ratio, init_std, value_scale: f64, seed: u64`, the user factors,
/// then the tag factors (`f64` each). Loss history is not stored.
pub fn write_model<W: Write>(model: &MfModel, mut out: W) -> std::io::Result<()> {
    let p = &model.params;
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&[MODEL_VERSION])?;
    for n in [model.rows, model.cols, p.factors, p.epochs] {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for x in [p.learning_rate, p.l2, p.negative_ratio, p.init_std, model.value_scale] {
        out.write_all(&x.to_le_bytes())?;
    }
    out.write_all(&model.seed.to_le_bytes())?;
    for x in model.user_factors.iter().chain(&model.tag_factors) {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_model<R: Read>(mut input: R) -> Result<MfModel, BaselineError> {
    let snap = |e: std::io::Error| BaselineError::Snapshot(e.to_string());
    let mut magic = [0u8; 9];
    input.read_exact(&mut magic).map_err(snap)?;
    if &magic[..8] != MODEL_MAGIC || magic[8] != MODEL_VERSION {
        return Err(BaselineError::Snapshot("bad magic or version".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8], BaselineError> {
        input.read_exact(&mut word).map_err(snap)?;
        Ok(word)
    };
    let mut usizes = [0usize; 4];
    for n in usizes.iter_mut() {
        *n = u64::from_le_bytes(next(&mut input)?) as usize;
    }
    let mut floats = [0f64; 5];
    for x in floats.iter_mut() {
        *x = f64::from_le_bytes(next(&mut input)?);
    }
    let seed = u64::from_le_bytes(next(&mut input)?);
    let [rows, cols, factors, epochs] = usizes;
    let [learning_rate, l2, negative_ratio, init_std, value_scale] = floats;
    let mut read_vec = |n: usize| -> Result<Vec<f64>, BaselineError> {
        (0..n).map(|_| next(&mut input).map(f64::from_le_bytes)).collect()
    };
    let user_factors = read_vec(rows * factors)?;
    let tag_factors = read_vec(cols * factors)?;
    Ok(MfModel {
        rows,
        cols,
        params: MfHyperParams {
            factors,
            learning_rate,
            l2,
            epochs,
            negative_ratio,
            init_std,
        },
        seed,
        value_scale,
        user_factors,
        tag_factors,
        losses: Vec::new(),
    })
}
