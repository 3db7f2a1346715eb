//! Chronological splitting, candidate filtering and dense index assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PostCorpus, Question, Timestamp};

/// Fewest evaluable questions a split accepts.
pub const MIN_EVALUABLE: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("split ratios must be non-negative and sum to 1, got {0}, {1}, {2}")]
    InvalidRatios(f64, f64, f64),
    #[error("need at least {MIN_EVALUABLE} questions with an accepted answer, found {0}")]
    TooFewEvaluable(usize),
    #[error("min_answers must be at least 1")]
    InvalidThreshold,
    #[error("no user has {0} or more training answers")]
    NoCandidates(usize),
    #[error("manifest references question {0} which is not in the corpus")]
    UnknownQuestion(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            validation: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, CorpusError> {
        let ok = [train, validation, test].iter().all(|r| r.is_finite() && *r >= 0.0)
            && ((train + validation + test) - 1.0).abs() < 1e-9;
        if ok {
            Ok(Self {
                train,
                validation,
                test,
            })
        } else {
            Err(CorpusError::InvalidRatios(train, validation, test))
        }
    }

    /// Partition sizes for `n` items: test and validation are rounded to the
    /// nearest count, training takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let test = ((self.test * n as f64).round() as usize).min(n);
        let validation = ((self.validation * n as f64).round() as usize).min(n - test);
        (n - test - validation, validation, test)
    }
}

/// Sort key placing questions in posting order, ties broken by id.
pub fn chrono_key(q: &Question) -> (Timestamp, u64) {
    (q.creation_date, q.id)
}

/// Train/validation/test partition of the evaluable questions, each list in
/// posting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub ratios: SplitRatios,
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
    /// Chronological key of the first question after the training partition.
    /// Every question (evaluable or not) ordered before it belongs to the
    /// training period.
    pub training_cutoff: (Timestamp, u64),
}

impl DatasetSplit {
    pub fn in_training_period(&self, q: &Question) -> bool {
        chrono_key(q) < self.training_cutoff
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

pub fn chronological_split(corpus: &PostCorpus, ratios: SplitRatios) -> Result<DatasetSplit, CorpusError> {
    let mut evaluable: Vec<&Question> = corpus.evaluable_questions().collect();
    if evaluable.len() < MIN_EVALUABLE {
        return Err(CorpusError::TooFewEvaluable(evaluable.len()));
    }
    evaluable.sort_by_key(|q| chrono_key(q));
    let (n_train, n_val, _) = ratios.sizes(evaluable.len());
    let ids: Vec<u64> = evaluable.iter().map(|q| q.id).collect();
    let training_cutoff = evaluable
        .get(n_train)
        .map(|q| chrono_key(q))
        .unwrap_or((Timestamp::MAX, u64::MAX));
    Ok(DatasetSplit {
        ratios,
        train: ids[..n_train].to_vec(),
        validation: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
        training_cutoff,
    })
}

/// Number of answers (any score) each user gave to training-period questions.
pub fn training_answer_counts(split: &DatasetSplit, corpus: &PostCorpus) -> BTreeMap<u64, usize> {
    let mut counts = BTreeMap::new();
    for a in corpus.answers.values() {
        if corpus
            .questions
            .get(&a.question_id)
            .is_some_and(|q| split.in_training_period(q))
        {
            *counts.entry(a.owner_user_id).or_insert(0) += 1;
        }
    }
    counts
}

/// Users with at least `min_answers` training-period answers.
pub fn select_candidates(
    split: &DatasetSplit,
    corpus: &PostCorpus,
    min_answers: usize,
) -> Result<BTreeSet<u64>, CorpusError> {
    if min_answers == 0 {
        return Err(CorpusError::InvalidThreshold);
    }
    let candidates: BTreeSet<u64> = training_answer_counts(split, corpus)
        .into_iter()
        .filter(|&(_, n)| n >= min_answers)
        .map(|(u, _)| u)
        .collect();
    if candidates.is_empty() {
        return Err(CorpusError::NoCandidates(min_answers));
    }
    Ok(candidates)
}

/// Bijection between external keys and dense indices `0..len`, assigned in
/// ascending key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseIndex<K: Eq + Hash> {
    keys: Vec<K>,
    positions: HashMap<K, usize>,
}

impl<K: Ord + Hash + Clone> DenseIndex<K> {
    pub fn from_keys(keys: impl IntoIterator<Item = K>) -> Self {
        let keys: Vec<K> = keys.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let positions = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Self { keys, positions }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of<Q>(&self, key: &Q) -> Option<usize>
    where
        K: std::borrow::Borrow<Q>,
        Q: Hash + Eq + ?Sized,
    {
        self.positions.get(key).copied()
    }

    pub fn key(&self, index: usize) -> &K {
        &self.keys[index]
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }
}

pub type UserIndex = DenseIndex<u64>;
pub type TagIndex = DenseIndex<String>;

/// Tags of every training-period question.
pub fn build_tag_index(split: &DatasetSplit, corpus: &PostCorpus) -> TagIndex {
    TagIndex::from_keys(
        corpus
            .questions
            .values()
            .filter(|q| split.in_training_period(q))
            .flat_map(|q| q.tags.iter().cloned()),
    )
}

/// Maps question tags to indices, dropping tags absent from the index.
pub fn known_tag_indices(tags: &TagIndex, question_tags: &[String]) -> Vec<usize> {
    question_tags.iter().filter_map(|t| tags.index_of(t.as_str())).collect()
}

/// A positively scored training-period answer by a candidate user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub answer_id: u64,
    pub answerer: usize,
    pub tags: Vec<usize>,
    pub answer_time: Timestamp,
    pub score: i64,
}

/// Training records in ascending `(answer_time, answer_id)` order.
pub fn training_records(
    split: &DatasetSplit,
    corpus: &PostCorpus,
    users: &UserIndex,
    tags: &TagIndex,
) -> Vec<TrainingRecord> {
    let mut out: Vec<TrainingRecord> = corpus
        .answers
        .values()
        .filter(|a| a.score > 0)
        .filter_map(|a| {
            let answerer = users.index_of(&a.owner_user_id)?;
            let q = corpus.questions.get(&a.question_id)?;
            if !split.in_training_period(q) || !q.has_tags() {
                return None;
            }
            Some(TrainingRecord {
                answer_id: a.id,
                answerer,
                tags: known_tag_indices(tags, &q.tags),
                answer_time: a.creation_date,
                score: a.score,
            })
        })
        .collect();
    out.sort_by_key(|r| (r.answer_time, r.answer_id));
    out
}

/// Everything the scoring methods need from one split, built from training
/// data only.
#[derive(Debug, Clone)]
pub struct TrainingView {
    pub min_answers: usize,
    pub users: UserIndex,
    pub tags: TagIndex,
    pub records: Vec<TrainingRecord>,
    pub answer_counts: BTreeMap<u64, usize>,
}

impl TrainingView {
    pub fn new(split: &DatasetSplit, corpus: &PostCorpus, candidates: &BTreeSet<u64>, min_answers: usize) -> Self {
        let users = UserIndex::from_keys(candidates.iter().copied());
        let tags = build_tag_index(split, corpus);
        let records = training_records(split, corpus, &users, &tags);
        Self {
            min_answers,
            users,
            tags,
            records,
            answer_counts: training_answer_counts(split, corpus),
        }
    }

    /// Records posted strictly before `t`.
    pub fn records_before(&self, t: Timestamp) -> &[TrainingRecord] {
        let end = self.records.partition_point(|r| r.answer_time < t);
        &self.records[..end]
    }
}

/// Serializable split plus candidate set, for replaying an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub site_name: String,
    pub split: DatasetSplit,
    pub min_answers: usize,
    pub candidates: Vec<u64>,
}

impl SplitManifest {
    pub fn new(site_name: &str, split: DatasetSplit, min_answers: usize, candidates: &BTreeSet<u64>) -> Self {
        Self {
            site_name: site_name.to_string(),
            split,
            min_answers,
            candidates: candidates.iter().copied().collect(),
        }
    }

    /// Checks that every listed question exists in `corpus`.
    pub fn validate(&self, corpus: &PostCorpus) -> Result<(), CorpusError> {
        let s = &self.split;
        for id in s.train.iter().chain(&s.validation).chain(&s.test) {
            if !corpus.questions.contains_key(id) {
                return Err(CorpusError::UnknownQuestion(*id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_corpus, PostType, RawPost};

    fn q(id: u64, t: Timestamp, accepted: Option<u64>, tags: &[&str]) -> RawPost {
        RawPost {
            id,
            post_type: PostType::Question,
            creation_date: t,
            score: 0,
            owner_user_id: None,
            tags: Some(tags.iter().map(|s| s.to_string()).collect()),
            accepted_answer_id: accepted,
            parent_id: None,
        }
    }

    fn a(id: u64, parent: u64, owner: u64, t: Timestamp, score: i64) -> RawPost {
        RawPost {
            id,
            post_type: PostType::Answer,
            creation_date: t,
            score,
            owner_user_id: Some(owner),
            tags: None,
            accepted_answer_id: None,
            parent_id: Some(parent),
        }
    }

    /// `n` evaluable questions at times 100, 200, ..., each answered (and
    /// accepted) by user `1000 + id % 3`.
    fn ladder(n: u64) -> PostCorpus {
        let mut posts = Vec::new();
        for i in 1..=n {
            posts.push(q(i, 100 * i as i64, Some(10_000 + i), &["t"]));
            posts.push(a(10_000 + i, i, 1000 + i % 3, 100 * i as i64 + 5, 1));
        }
        build_corpus("s", posts).0
    }

    #[test]
    fn ten_questions_split_seven_one_two() {
        let split = chronological_split(&ladder(10), SplitRatios::default()).unwrap();
        assert_eq!(split.train, (1..=7).collect::<Vec<_>>());
        assert_eq!(split.validation, vec![8]);
        assert_eq!(split.test, vec![9, 10]);
    }

    #[test]
    fn boundary_tie_goes_to_lower_id_first() {
        let mut posts = Vec::new();
        for i in 1..=10u64 {
            // questions 7 and 8 share a timestamp; 8 is listed first in the dump
            let t = if i == 7 { 800 } else { 100 * i as i64 };
            posts.push(q(i, t, Some(100 + i), &["t"]));
            posts.push(a(100 + i, i, 1, t + 1, 1));
        }
        posts.swap(12, 14);
        let corpus = build_corpus("s", posts).0;
        let split = chronological_split(&corpus, SplitRatios::default()).unwrap();
        assert_eq!(*split.train.last().unwrap(), 7);
        assert_eq!(split.validation, vec![8]);
    }

    #[test]
    fn too_few_evaluable_questions() {
        assert_eq!(
            chronological_split(&ladder(9), SplitRatios::default()),
            Err(CorpusError::TooFewEvaluable(9))
        );
    }

    #[test]
    fn ratio_validation() {
        assert!(SplitRatios::new(0.7, 0.1, 0.2).is_ok());
        assert!(SplitRatios::new(0.7, 0.2, 0.2).is_err());
        assert!(SplitRatios::new(1.1, -0.1, 0.0).is_err());
    }

    #[test]
    fn sizes_follow_test_rounding() {
        assert_eq!(SplitRatios::default().sizes(10), (7, 1, 2));
        assert_eq!(SplitRatios::default().sizes(4295).2, 859);
    }

    fn candidates_corpus(per_user: &[(u64, usize)]) -> (PostCorpus, DatasetSplit) {
        let mut posts = Vec::new();
        let mut next = 1u64;
        // 20 evaluable ladder questions; all user answers go to the first one
        for i in 1..=20u64 {
            posts.push(q(i, 100 * i as i64, Some(500 + i), &["t"]));
            posts.push(a(500 + i, i, 1, 100 * i as i64 + 1, 1));
        }
        for &(user, n) in per_user {
            for _ in 0..n {
                posts.push(a(10_000 + next, 1, user, 150, 0));
                next += 1;
            }
        }
        let corpus = build_corpus("s", posts).0;
        let split = chronological_split(&corpus, SplitRatios::default()).unwrap();
        (corpus, split)
    }

    #[test]
    fn candidate_threshold_is_inclusive() {
        let (corpus, split) = candidates_corpus(&[(7, 5), (8, 4)]);
        let c = select_candidates(&split, &corpus, 5).unwrap();
        assert!(c.contains(&7));
        assert!(!c.contains(&8));
        assert!(select_candidates(&split, &corpus, 0).is_err());
        assert_eq!(
            select_candidates(&split, &corpus, 1000),
            Err(CorpusError::NoCandidates(1000))
        );
    }

    #[test]
    fn records_require_positive_score_and_training_period() {
        let mut posts = Vec::new();
        for i in 1..=10u64 {
            posts.push(q(i, 100 * i as i64, Some(100 + i), &["x", "y", "z"]));
            posts.push(a(100 + i, i, 1, 100 * i as i64 + 1, 3));
        }
        posts.push(a(200, 1, 2, 101, 0));
        let corpus = build_corpus("s", posts).0;
        let split = chronological_split(&corpus, SplitRatios::default()).unwrap();
        let cands = select_candidates(&split, &corpus, 1).unwrap();
        let view = TrainingView::new(&split, &corpus, &cands, 1);
        assert_eq!(view.records.len(), 7);
        assert!(view.records.iter().all(|r| r.answerer == 0 && r.tags.len() == 3));
        assert_eq!(view.records_before(301).len(), 2);
    }

    #[test]
    fn test_only_tags_are_not_indexed() {
        let mut posts = Vec::new();
        for i in 1..=10u64 {
            let tag = if i >= 9 { "late" } else { "early" };
            posts.push(q(i, 100 * i as i64, Some(100 + i), &[tag]));
            posts.push(a(100 + i, i, 1, 100 * i as i64 + 1, 1));
        }
        let corpus = build_corpus("s", posts).0;
        let split = chronological_split(&corpus, SplitRatios::default()).unwrap();
        let tags = build_tag_index(&split, &corpus);
        assert_eq!(tags.keys(), &["early".to_string()]);
        assert_eq!(known_tag_indices(&tags, &["late".into(), "early".into()]), vec![0]);
    }

    #[test]
    fn dense_index_is_sorted_bijection() {
        let idx = UserIndex::from_keys([9, 3, 5, 3]);
        assert_eq!(idx.keys(), &[3, 5, 9]);
        assert_eq!(idx.index_of(&9), Some(2));
        assert_eq!(*idx.key(1), 5);
        assert_eq!(idx.index_of(&4), None);
    }
}
