//! Ranking metrics and the experiment driver.
//!
//! Test questions are walked in posting order and grouped into fixed-length
//! blocks starting at the first question of the partition. Every question in
//! a block is scored against the state at the block start: training answers
//! posted before it, discounted relative to it.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{
    build_windowed_activity, static_activity, temporal_activity, ActivityError, DEFAULT_WINDOW_SECONDS,
};
use crate::baselines::{
    mf_score, score_baseline_rank, train_tag_mf, BaselineError, MfHyperParams, MfModel, VoteScoreTable,
    DEFAULT_FACTORS, DEFAULT_SCORE_TRIALS,
};
use crate::corpus::{chrono_key, known_tag_indices, DatasetSplit, TrainingView};
use crate::diffusion::{rank_users, BipartiteGraph, DegreeMode, DiffusionError, Ranking};
use crate::ingest::{PostCorpus, Question, Timestamp};
use crate::sparse::SparseUserTagMatrix;

pub const DEFAULT_COLD_THRESHOLD: usize = 10;
pub const DEFAULT_MIN_ANSWERS: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no evaluated questions; metric undefined")]
    NoEvaluatedQuestions,
    #[error("K must be at least 1")]
    InvalidK,
    #[error("unknown method `{0}` (expected t-bger, score, tag-mf, t-tag-mf or all)")]
    UnknownMethod(String),
    #[error("question {0} is not in the corpus")]
    UnknownQuestion(u64),
    #[error("every hyperparameter setting diverged")]
    NoUsableHyperparameters,
    #[error(transparent)]
    Activity(#[from] ActivityError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "t-bger")]
    TBger,
    #[serde(rename = "score")]
    Score,
    #[serde(rename = "tag-mf")]
    TagMf,
    #[serde(rename = "t-tag-mf")]
    TTagMf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TBger, Method::Score, Method::TagMf, Method::TTagMf];

    pub fn name(self) -> &'static str {
        match self {
            Method::TBger => "t-bger",
            Method::Score => "score",
            Method::TagMf => "tag-mf",
            Method::TTagMf => "t-tag-mf",
        }
    }

    /// Parses a method name, or `all` for every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>, EvalError> {
        if s == "all" {
            Ok(Method::ALL.to_vec())
        } else {
            Ok(vec![s.parse()?])
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EvalError::UnknownMethod(s.to_string()))
    }
}

/// Grid and fixed settings for the factorization baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfSearch {
    pub factors: usize,
    pub epochs: usize,
    pub negative_ratio: f64,
    pub learning_rates: Vec<f64>,
    pub l2_weights: Vec<f64>,
}

impl Default for MfSearch {
    fn default() -> Self {
        Self {
            factors: DEFAULT_FACTORS,
            epochs: 100,
            negative_ratio: 1.0,
            learning_rates: vec![0.1, 0.01],
            l2_weights: vec![0.1, 0.01, 0.001],
        }
    }
}

impl MfSearch {
    pub fn grid(&self) -> Vec<MfHyperParams> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &l2 in &self.l2_weights {
                out.push(MfHyperParams {
                    factors: self.factors,
                    learning_rate,
                    l2,
                    epochs: self.epochs,
                    negative_ratio: self.negative_ratio,
                    ..MfHyperParams::default()
                });
            }
        }
        out
    }
}

/// Settings that influence evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub window_length: i64,
    pub min_answers: usize,
    pub cold_threshold: usize,
    pub degree_mode: DegreeMode,
    pub seed: u64,
    pub score_trials: usize,
    pub mf: MfSearch,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            window_length: DEFAULT_WINDOW_SECONDS,
            min_answers: DEFAULT_MIN_ANSWERS,
            cold_threshold: DEFAULT_COLD_THRESHOLD,
            degree_mode: DegreeMode::Weighted,
            seed: 0,
            score_trials: DEFAULT_SCORE_TRIALS,
            mf: MfSearch::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStatus {
    Evaluated,
    /// The accepted answerer is not a candidate and cannot be ranked.
    ExcludedNotCandidate,
    /// None of the question's tags occur in training; ranked by tie-break only.
    Unscorable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub question_id: u64,
    pub ground_truth_user: u64,
    /// 1-based rank of the ground truth; absent when excluded.
    pub rank: Option<usize>,
    pub status: QuestionStatus,
    pub block_start: Timestamp,
    /// Ground truth had fewer than the cold-start threshold of training answers.
    pub cold: bool,
}

impl QuestionResult {
    pub fn is_evaluated(&self) -> bool {
        self.status == QuestionStatus::Evaluated
    }
}

fn evaluated_ranks(results: &[QuestionResult]) -> Vec<usize> {
    results
        .iter()
        .filter(|r| r.is_evaluated())
        .filter_map(|r| r.rank)
        .collect()
}

/// Mean reciprocal rank over evaluated questions.
pub fn mrr(results: &[QuestionResult]) -> Result<f64, EvalError> {
    let ranks = evaluated_ranks(results);
    if ranks.is_empty() {
        return Err(EvalError::NoEvaluatedQuestions);
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of evaluated questions whose ground truth ranks in the top `k`.
pub fn precision_at_k(results: &[QuestionResult], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let ranks = evaluated_ranks(results);
    if ranks.is_empty() {
        return Err(EvalError::NoEvaluatedQuestions);
    }
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub questions: usize,
    pub mrr: f64,
    pub p_at_1: f64,
    pub p_at_3: f64,
}

impl MetricSummary {
    /// `None` when no question was evaluated.
    pub fn from_results(results: &[QuestionResult]) -> Option<Self> {
        Some(Self {
            questions: evaluated_ranks(results).len(),
            mrr: mrr(results).ok()?,
            p_at_1: precision_at_k(results, 1).ok()?,
            p_at_3: precision_at_k(results, 3).ok()?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub test_questions: usize,
    pub evaluated: usize,
    pub excluded_not_candidate: usize,
    pub unscorable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartReport {
    pub threshold: usize,
    pub questions: usize,
    pub metrics: Option<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub site: String,
    pub method: Method,
    pub fingerprint: String,
    pub config: EvalConfig,
    pub candidates: usize,
    pub tags: usize,
    pub training_records: usize,
    pub counts: ReportCounts,
    pub metrics: Option<MetricSummary>,
    pub cold_start: ColdStartReport,
    /// Factorization settings chosen on the validation partition.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected_hyperparameters: Option<MfHyperParams>,
    pub results: Vec<QuestionResult>,
}

impl EvalReport {
    fn assemble(
        site: &str,
        method: Method,
        config: &EvalConfig,
        view: &TrainingView,
        results: Vec<QuestionResult>,
        selected_hyperparameters: Option<MfHyperParams>,
    ) -> Self {
        let count = |s: QuestionStatus| results.iter().filter(|r| r.status == s).count();
        let counts = ReportCounts {
            test_questions: results.len(),
            evaluated: count(QuestionStatus::Evaluated),
            excluded_not_candidate: count(QuestionStatus::ExcludedNotCandidate),
            unscorable: count(QuestionStatus::Unscorable),
        };
        let cold: Vec<QuestionResult> = results.iter().filter(|r| r.cold).cloned().collect();
        Self {
            site: site.to_string(),
            method,
            fingerprint: String::new(),
            config: config.clone(),
            candidates: view.users.len(),
            tags: view.tags.len(),
            training_records: view.records.len(),
            counts,
            metrics: MetricSummary::from_results(&results),
            cold_start: ColdStartReport {
                threshold: config.cold_threshold,
                questions: cold.iter().filter(|r| r.is_evaluated()).count(),
                metrics: MetricSummary::from_results(&cold),
            },
            selected_hyperparameters,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Aligned plain-text summary.
    pub fn to_text(&self) -> String {
        let fmt_metrics = |m: &Option<MetricSummary>| match m {
            Some(m) => format!("{:>8.3} {:>8.3} {:>8.3} {:>6}", m.mrr, m.p_at_1, m.p_at_3, m.questions),
            None => format!("{:>8} {:>8} {:>8} {:>6}", "-", "-", "-", 0),
        };
        let mut s = String::new();
        s.push_str(&format!("site        {}\n", self.site));
        s.push_str(&format!("method      {}\n", self.method));
        s.push_str(&format!("fingerprint {}\n", self.fingerprint));
        s.push_str(&format!(
            "candidates  {}   tags {}   training records {}\n",
            self.candidates, self.tags, self.training_records
        ));
        s.push_str(&format!(
            "questions   {} test = {} evaluated + {} excluded (answerer not a candidate) + {} unscorable (no known tag)\n",
            self.counts.test_questions, self.counts.evaluated, self.counts.excluded_not_candidate, self.counts.unscorable
        ));
        if let Some(h) = &self.selected_hyperparameters {
            s.push_str(&format!(
                "mf          k={} lr={} l2={} epochs={}\n",
                h.factors, h.learning_rate, h.l2, h.epochs
            ));
        }
        s.push_str(&format!(
            "{:<12}{:>8} {:>8} {:>8} {:>6}\n",
            "", "MRR", "P@1", "P@3", "n"
        ));
        s.push_str(&format!("{:<12}{}\n", "all", fmt_metrics(&self.metrics)));
        s.push_str(&format!(
            "{:<12}{}\n",
            format!("cold (<{})", self.cold_start.threshold),
            fmt_metrics(&self.cold_start.metrics)
        ));
        s
    }

    /// Per-question CSV: `question_id,method,rank_q,t_q_block,status,cold`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "question_id,method,rank_q,t_q_block,status,cold")?;
        for r in &self.results {
            let status = serde_json::to_value(r.status).expect("status serializes");
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.question_id,
                self.method,
                r.rank.map(|x| x.to_string()).unwrap_or_default(),
                r.block_start,
                status.as_str().unwrap_or_default(),
                r.cold
            )?;
        }
        Ok(())
    }
}

/// Start of the block containing `time`, for blocks of `length` seconds
/// beginning at `anchor`.
pub fn block_start(time: Timestamp, anchor: Timestamp, length: i64) -> Timestamp {
    anchor + (time - anchor).div_euclid(length) * length
}

/// Scores for every candidate (in user-index order) for one question.
trait BlockScorer {
    /// Rebuilds internal state for a new block start.
    fn enter_block(&mut self, query_time: Timestamp) -> Result<(), EvalError>;
    /// `None` when the method needs tags and none are known.
    fn score(&self, tags: &[usize]) -> Result<Option<Vec<f64>>, EvalError>;
}

struct TBgerScorer<'a> {
    view: &'a TrainingView,
    config: &'a EvalConfig,
    graph: Option<BipartiteGraph>,
}

impl BlockScorer for TBgerScorer<'_> {
    fn enter_block(&mut self, t_q: Timestamp) -> Result<(), EvalError> {
        self.graph = Some(build_graph(self.view, self.config, t_q)?);
        Ok(())
    }

    fn score(&self, tags: &[usize]) -> Result<Option<Vec<f64>>, EvalError> {
        let graph = self.graph.as_ref().expect("enter_block runs first");
        match graph.score_question(tags) {
            Ok(s) => Ok(Some(s)),
            Err(DiffusionError::NoKnownTags) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// The discounted graph for query time `t_q`.
pub fn build_graph(view: &TrainingView, config: &EvalConfig, t_q: Timestamp) -> Result<BipartiteGraph, EvalError> {
    let records = view.records_before(t_q);
    let windowed = build_windowed_activity(records, (view.users.len(), view.tags.len()), config.window_length, t_q)?;
    let s = temporal_activity(&windowed, t_q)?;
    Ok(BipartiteGraph::from_temporal(&s, config.degree_mode))
}

struct ScoreScorer {
    scores: Vec<f64>,
}

impl BlockScorer for ScoreScorer {
    fn enter_block(&mut self, _: Timestamp) -> Result<(), EvalError> {
        Ok(())
    }

    fn score(&self, _: &[usize]) -> Result<Option<Vec<f64>>, EvalError> {
        Ok(Some(self.scores.clone()))
    }
}

struct MfScorer<'a> {
    view: &'a TrainingView,
    config: &'a EvalConfig,
    params: MfHyperParams,
    temporal: bool,
    /// Model and the number of records (or block start, when temporal) it was trained for.
    model: Option<(i64, Option<MfModel>)>,
}

impl MfScorer<'_> {
    fn matrix(&self, t_q: Timestamp) -> Result<SparseUserTagMatrix, EvalError> {
        let records = self.view.records_before(t_q);
        let dims = (self.view.users.len(), self.view.tags.len());
        if self.temporal {
            let windowed = build_windowed_activity(records, dims, self.config.window_length, t_q)?;
            Ok(temporal_activity(&windowed, t_q)?.matrix)
        } else {
            Ok(static_activity(records, dims)?)
        }
    }
}

impl BlockScorer for MfScorer<'_> {
    fn enter_block(&mut self, t_q: Timestamp) -> Result<(), EvalError> {
        // the undiscounted matrix only changes when new records enter
        let key = if self.temporal {
            t_q
        } else {
            self.view.records_before(t_q).len() as i64
        };
        if self.model.as_ref().is_some_and(|(k, _)| *k == key) {
            return Ok(());
        }
        let matrix = self.matrix(t_q)?;
        let model = if matrix.is_empty() {
            None
        } else {
            Some(train_tag_mf(&matrix, self.params, self.config.seed)?)
        };
        self.model = Some((key, model));
        Ok(())
    }

    fn score(&self, tags: &[usize]) -> Result<Option<Vec<f64>>, EvalError> {
        if tags.is_empty() {
            return Ok(None);
        }
        match &self.model {
            Some((_, Some(model))) => Ok(Some(mf_score(model, tags)?)),
            _ => Ok(Some(vec![0.0; self.view.users.len()])),
        }
    }
}

/// Scores and ranks every question of a partition.
fn evaluate_partition(
    corpus: &PostCorpus,
    question_ids: &[u64],
    view: &TrainingView,
    config: &EvalConfig,
    scorer: &mut dyn BlockScorer,
) -> Result<Vec<QuestionResult>, EvalError> {
    let mut questions: Vec<&Question> = question_ids
        .iter()
        .map(|id| corpus.questions.get(id).ok_or(EvalError::UnknownQuestion(*id)))
        .collect::<Result<_, _>>()?;
    questions.sort_by_key(|q| chrono_key(q));
    let Some(anchor) = questions.first().map(|q| q.creation_date) else {
        return Ok(Vec::new());
    };
    let user_ids = view.users.keys();
    let mut current_block = None;
    let mut results = Vec::with_capacity(questions.len());
    for q in questions {
        let ground_truth_user = corpus.accepted_answerer(q).ok_or(EvalError::UnknownQuestion(q.id))?;
        let block = block_start(q.creation_date, anchor, config.window_length);
        let cold = view.answer_counts.get(&ground_truth_user).copied().unwrap_or(0) < config.cold_threshold;
        if view.users.index_of(&ground_truth_user).is_none() {
            results.push(QuestionResult {
                question_id: q.id,
                ground_truth_user,
                rank: None,
                status: QuestionStatus::ExcludedNotCandidate,
                block_start: block,
                cold,
            });
            continue;
        }
        if current_block != Some(block) {
            scorer.enter_block(block)?;
            current_block = Some(block);
        }
        let tags = known_tag_indices(&view.tags, &q.tags);
        let (scores, status) = match scorer.score(&tags)? {
            Some(s) => (s, QuestionStatus::Evaluated),
            None => (vec![0.0; user_ids.len()], QuestionStatus::Unscorable),
        };
        let ranking = rank_users(&scores, user_ids);
        results.push(QuestionResult {
            question_id: q.id,
            ground_truth_user,
            rank: ranking.rank_of(ground_truth_user),
            status,
            block_start: block,
            cold,
        });
    }
    Ok(results)
}

/// Picks the factorization setting with the best validation MRR; ties keep
/// the earlier grid entry. Diverging settings are skipped.
fn select_mf_params(
    corpus: &PostCorpus,
    split: &DatasetSplit,
    view: &TrainingView,
    config: &EvalConfig,
    temporal: bool,
) -> Result<MfHyperParams, EvalError> {
    let grid = config.mf.grid();
    if split.validation.is_empty() {
        return grid.first().copied().ok_or(EvalError::NoUsableHyperparameters);
    }
    let mut best: Option<(f64, MfHyperParams)> = None;
    for params in grid {
        let mut scorer = MfScorer {
            view,
            config,
            params,
            temporal,
            model: None,
        };
        let results = match evaluate_partition(corpus, &split.validation, view, config, &mut scorer) {
            Ok(r) => r,
            Err(EvalError::Baseline(BaselineError::Diverged { .. })) => {
                log::info!("lr={} l2={} diverged; skipped", params.learning_rate, params.l2);
                continue;
            }
            Err(e) => return Err(e),
        };
        let score = mrr(&results).unwrap_or(0.0);
        log::debug!(
            "validation MRR {score:.4} for lr={} l2={}",
            params.learning_rate,
            params.l2
        );
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, params));
        }
    }
    best.map(|(_, p)| p).ok_or(EvalError::NoUsableHyperparameters)
}

/// Runs one method over the test partition.
pub fn run_experiment(
    corpus: &PostCorpus,
    split: &DatasetSplit,
    view: &TrainingView,
    method: Method,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let mut selected = None;
    let results = match method {
        Method::TBger => {
            let mut scorer = TBgerScorer {
                view,
                config,
                graph: None,
            };
            evaluate_partition(corpus, &split.test, view, config, &mut scorer)?
        }
        Method::Score => {
            let table = VoteScoreTable::from_training(split, corpus, &view.users);
            let expected = score_baseline_rank(&table, config.score_trials, config.seed)?;
            let mut scorer = ScoreScorer {
                scores: expected.average_ranks.iter().map(|r| -r).collect(),
            };
            evaluate_partition(corpus, &split.test, view, config, &mut scorer)?
        }
        Method::TagMf | Method::TTagMf => {
            let temporal = method == Method::TTagMf;
            let params = select_mf_params(corpus, split, view, config, temporal)?;
            selected = Some(params);
            let mut scorer = MfScorer {
                view,
                config,
                params,
                temporal,
                model: None,
            };
            evaluate_partition(corpus, &split.test, view, config, &mut scorer)?
        }
    };
    Ok(EvalReport::assemble(
        &corpus.site_name,
        method,
        config,
        view,
        results,
        selected,
    ))
}

/// Ranks all candidates for an ad-hoc set of tags at time `t_q` with t-BGER.
/// Returns the ranking and whether any tag was known.
pub fn recommend(
    view: &TrainingView,
    config: &EvalConfig,
    tags: &[String],
    t_q: Timestamp,
) -> Result<(Ranking, bool), EvalError> {
    let graph = build_graph(view, config, t_q)?;
    recommend_with_graph(view, &graph, tags)
}

pub fn recommend_with_graph(
    view: &TrainingView,
    graph: &BipartiteGraph,
    tags: &[String],
) -> Result<(Ranking, bool), EvalError> {
    let indices = known_tag_indices(&view.tags, tags);
    let (scores, known) = match graph.score_question(&indices) {
        Ok(s) => (s, true),
        Err(DiffusionError::NoKnownTags) => (vec![0.0; view.users.len()], false),
        Err(e) => return Err(e.into()),
    };
    Ok((rank_users(&scores, view.users.keys()), known))
}
