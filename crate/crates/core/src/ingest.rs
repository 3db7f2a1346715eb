//! Stack Exchange `Posts.xml` ingestion.
//!
//! The dump is a flat `<posts>` element holding one self-closing `<row .../>`
//! per post. [`PostReader`] streams it with a fixed-size event buffer so the
//! resident size does not grow with the file, and [`build_corpus`] assembles
//! the surviving questions and answers into a referentially consistent
//! [`PostCorpus`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::NaiveDateTime;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// Most tags a question may carry on Stack Exchange.
pub const MAX_TAGS: usize = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus file line {line}: {source}")]
    CorpusLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("corpus file line {line}: {message}")]
    CorpusRecord { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostType {
    Question,
    Answer,
}

impl PostType {
    fn from_id(id: u32) -> Option<Self> {
        match id {
            1 => Some(PostType::Question),
            2 => Some(PostType::Answer),
            _ => None,
        }
    }
}

/// One `<row>` of the dump, restricted to the attributes this crate uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: u64,
    pub post_type: PostType,
    pub creation_date: Timestamp,
    pub score: i64,
    pub owner_user_id: Option<u64>,
    /// Questions only.
    pub tags: Option<Vec<String>>,
    /// Questions only.
    pub accepted_answer_id: Option<u64>,
    /// Answers only.
    pub parent_id: Option<u64>,
}

/// Why a `<row>` with an in-domain post type was not turned into a [`RawPost`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rejection {
    MissingAttribute,
    BadValue,
    TooManyTags,
}

/// Row-level counters accumulated while streaming.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub rows: u64,
    pub emitted: u64,
    pub skipped_post_type: u64,
    pub rejected_missing_attribute: u64,
    pub rejected_bad_value: u64,
    pub rejected_too_many_tags: u64,
}

impl ParseStats {
    pub fn rejected(&self) -> u64 {
        self.rejected_missing_attribute + self.rejected_bad_value + self.rejected_too_many_tags
    }
}

/// Streaming iterator over the question and answer rows of a `Posts.xml`.
///
/// Rows with any other `PostTypeId` are skipped. Rows missing one of the
/// required attributes (`Id`, `PostTypeId`, `CreationDate`, `Score`) or
/// carrying unparseable values are counted in [`ParseStats`] and skipped.
/// Malformed XML ends the stream with [`IngestError::Xml`].
pub struct PostReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    stats: ParseStats,
    done: bool,
}

impl<R: BufRead> PostReader<R> {
    pub fn new(input: R) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        Self {
            reader,
            buf: Vec::with_capacity(4096),
            stats: ParseStats::default(),
            done: false,
        }
    }

    pub fn stats(&self) -> &ParseStats {
        &self.stats
    }

    /// Capacity of the reusable event buffer. Grows only to fit the largest row.
    pub fn buffer_capacity(&self) -> usize {
        self.buf.capacity()
    }

    fn xml_error(&self, err: impl std::fmt::Display) -> IngestError {
        IngestError::Xml {
            offset: self.reader.error_position(),
            message: err.to_string(),
        }
    }

    fn handle_row(&mut self, row: &BytesStart<'_>) -> Result<Option<RawPost>, IngestError> {
        self.stats.rows += 1;
        match decode_row(row) {
            Ok(RowOutcome::Post(post)) => {
                self.stats.emitted += 1;
                Ok(Some(post))
            }
            Ok(RowOutcome::OtherType) => {
                self.stats.skipped_post_type += 1;
                Ok(None)
            }
            Err(RowError::Xml(msg)) => Err(IngestError::Xml {
                offset: self.reader.buffer_position(),
                message: msg,
            }),
            Err(RowError::Rejected(reason)) => {
                match reason {
                    Rejection::MissingAttribute => self.stats.rejected_missing_attribute += 1,
                    Rejection::BadValue => self.stats.rejected_bad_value += 1,
                    Rejection::TooManyTags => self.stats.rejected_too_many_tags += 1,
                }
                log::debug!("rejected row near byte {} ({reason:?})", self.reader.buffer_position());
                Ok(None)
            }
        }
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = Result<RawPost, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    return Some(Err(self.xml_error(e)));
                }
            };
            let row = match event {
                Event::Eof => {
                    self.done = true;
                    return None;
                }
                Event::Empty(e) | Event::Start(e) if e.name().as_ref() == b"row" => e.into_owned(),
                _ => continue,
            };
            match self.handle_row(&row) {
                Ok(Some(post)) => return Some(Ok(post)),
                Ok(None) => continue,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Parses every question and answer row of `input`.
pub fn parse_posts<R: BufRead>(input: R) -> Result<(Vec<RawPost>, ParseStats), IngestError> {
    let mut reader = PostReader::new(input);
    let posts = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((posts, reader.stats().clone()))
}

enum RowOutcome {
    Post(RawPost),
    OtherType,
}

enum RowError {
    Xml(String),
    Rejected(Rejection),
}

impl From<Rejection> for RowError {
    fn from(r: Rejection) -> Self {
        RowError::Rejected(r)
    }
}

fn attr(row: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>, RowError> {
    match row.try_get_attribute(name) {
        Ok(Some(a)) => a
            .unescape_value()
            .map(|v| Some(v.into_owned()))
            .map_err(|e| RowError::Xml(e.to_string())),
        Ok(None) => Ok(None),
        Err(e) => Err(RowError::Xml(e.to_string())),
    }
}

fn required(row: &BytesStart<'_>, name: &[u8]) -> Result<String, RowError> {
    attr(row, name)?.ok_or(RowError::Rejected(Rejection::MissingAttribute))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, Rejection> {
    s.trim().parse().map_err(|_| Rejection::BadValue)
}

fn optional_id(row: &BytesStart<'_>, name: &[u8]) -> Result<Option<u64>, RowError> {
    match attr(row, name)? {
        Some(v) if !v.trim().is_empty() => Ok(Some(parse_num(&v)?)),
        _ => Ok(None),
    }
}

fn decode_row(row: &BytesStart<'_>) -> Result<RowOutcome, RowError> {
    let post_type_id: u32 = parse_num(&required(row, b"PostTypeId")?)?;
    let Some(post_type) = PostType::from_id(post_type_id) else {
        return Ok(RowOutcome::OtherType);
    };
    let id: u64 = parse_num(&required(row, b"Id")?)?;
    let creation_date = parse_timestamp(&required(row, b"CreationDate")?).ok_or(Rejection::BadValue)?;
    let score: i64 = parse_num(&required(row, b"Score")?)?;
    let owner_user_id = optional_id(row, b"OwnerUserId")?;

    let post = match post_type {
        PostType::Question => {
            let tags = attr(row, b"Tags")?.map(|raw| split_tags(&raw));
            if tags.as_ref().is_some_and(|t| t.len() > MAX_TAGS) {
                return Err(Rejection::TooManyTags.into());
            }
            RawPost {
                id,
                post_type,
                creation_date,
                score,
                owner_user_id,
                tags: tags.filter(|t| !t.is_empty()),
                accepted_answer_id: optional_id(row, b"AcceptedAnswerId")?,
                parent_id: None,
            }
        }
        PostType::Answer => RawPost {
            id,
            post_type,
            creation_date,
            score,
            owner_user_id,
            tags: None,
            accepted_answer_id: None,
            parent_id: optional_id(row, b"ParentId")?,
        },
    };
    Ok(RowOutcome::Post(post))
}

/// Parses a dump timestamp such as `2011-04-12T10:00:00.123` (UTC, optional
/// trailing `Z`) into whole seconds since the epoch.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim().trim_end_matches('Z');
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f"))
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Formats a timestamp the way the dump writes it, without fractional seconds.
pub fn format_timestamp(ts: Timestamp) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%S").to_string())
        .unwrap_or_else(|| ts.to_string())
}

/// Splits an (already XML-unescaped) `Tags` attribute into normalized tags.
///
/// Accepts both the classic `<a><b>` form and the `|a|b|` form used by newer
/// dumps. Any HTML entities left after XML unescaping are decoded first.
/// Tags are trimmed, lowercased and deduplicated, keeping first occurrence.
pub fn split_tags(raw: &str) -> Vec<String> {
    let decoded = decode_entities(raw);
    let pieces: Vec<&str> = if decoded.contains('<') {
        decoded.split(['<', '>']).collect()
    } else {
        decoded.split('|').collect()
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for piece in pieces {
        let tag = piece.trim().to_lowercase();
        if !tag.is_empty() && seen.insert(tag.clone()) {
            out.push(tag);
        }
    }
    out
}

fn decode_entities(raw: &str) -> String {
    if !raw.contains('&') {
        return raw.to_string();
    }
    raw.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u64,
    pub creation_date: Timestamp,
    /// Empty for untagged questions, which stay in the corpus but are never
    /// split or scored.
    pub tags: Vec<String>,
    pub accepted_answer_id: Option<u64>,
    pub asker_id: Option<u64>,
}

impl Question {
    pub fn has_tags(&self) -> bool {
        !self.tags.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub id: u64,
    pub question_id: u64,
    pub owner_user_id: u64,
    pub creation_date: Timestamp,
    pub score: i64,
}

/// Questions and answers of one site, keyed by post id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostCorpus {
    pub site_name: String,
    pub questions: BTreeMap<u64, Question>,
    pub answers: BTreeMap<u64, Answer>,
}

/// Records dropped or repaired while assembling a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub questions: u64,
    pub answers: u64,
    pub untagged_questions: u64,
    pub dropped_orphan_answers: u64,
    pub dropped_ownerless_answers: u64,
    pub dropped_duplicate_ids: u64,
    pub dangling_accepted_answers: u64,
    /// Answers dated before their question (migrated posts) are moved to the
    /// question's creation time.
    pub clamped_answer_dates: u64,
}

impl PostCorpus {
    /// The owner of a question's accepted answer, when both exist.
    pub fn accepted_answerer(&self, question: &Question) -> Option<u64> {
        question
            .accepted_answer_id
            .and_then(|a| self.answers.get(&a))
            .map(|a| a.owner_user_id)
    }

    /// Questions that can serve as evaluation units: tagged, with an accepted
    /// answer whose owner is known.
    pub fn is_evaluable(&self, question: &Question) -> bool {
        question.has_tags() && self.accepted_answerer(question).is_some()
    }

    pub fn evaluable_questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.values().filter(|q| self.is_evaluable(q))
    }

    /// Answers grouped by question id, each list in ascending answer id.
    pub fn answers_by_question(&self) -> BTreeMap<u64, Vec<&Answer>> {
        let mut out: BTreeMap<u64, Vec<&Answer>> = BTreeMap::new();
        for a in self.answers.values() {
            out.entry(a.question_id).or_default().push(a);
        }
        out
    }

    /// Writes the corpus as newline-delimited JSON: one `site` header line,
    /// then questions, then answers, each in ascending id order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), IngestError> {
        let header = CorpusLine::Site {
            site_name: self.site_name.clone(),
        };
        writeln!(out, "{}", to_json(&header))?;
        for q in self.questions.values() {
            writeln!(out, "{}", to_json(&CorpusLine::Q(q.clone())))?;
        }
        for a in self.answers.values() {
            writeln!(out, "{}", to_json(&CorpusLine::A(a.clone())))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, IngestError> {
        let mut corpus = PostCorpus::default();
        let mut answer_lines = BTreeMap::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CorpusLine =
                serde_json::from_str(&line).map_err(|source| IngestError::CorpusLine { line: n + 1, source })?;
            match rec {
                CorpusLine::Site { site_name } => corpus.site_name = site_name,
                CorpusLine::Q(q) => {
                    corpus.questions.insert(q.id, q);
                }
                CorpusLine::A(a) => {
                    answer_lines.insert(a.id, n + 1);
                    corpus.answers.insert(a.id, a);
                }
            }
        }
        for a in corpus.answers.values() {
            if !corpus.questions.contains_key(&a.question_id) {
                return Err(IngestError::CorpusRecord {
                    line: answer_lines[&a.id],
                    message: format!("answer {} references missing question {}", a.id, a.question_id),
                });
            }
        }
        Ok(corpus)
    }
}

fn to_json(line: &CorpusLine) -> String {
    serde_json::to_string(line).expect("corpus records always serialize")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
enum CorpusLine {
    #[serde(rename = "site")]
    Site { site_name: String },
    #[serde(rename = "q")]
    Q(Question),
    #[serde(rename = "a")]
    A(Answer),
}

/// Assembles parsed rows into a corpus.
///
/// Answers without an owner or whose parent question is absent are dropped,
/// accepted-answer ids that no longer resolve are cleared, and duplicate post
/// ids keep their first occurrence. Every such event is counted.
pub fn build_corpus(site_name: &str, posts: impl IntoIterator<Item = RawPost>) -> (PostCorpus, CorpusStats) {
    let mut stats = CorpusStats::default();
    let mut questions = BTreeMap::new();
    let mut raw_answers = Vec::new();
    let mut seen_ids = BTreeSet::new();

    for post in posts {
        if !seen_ids.insert(post.id) {
            stats.dropped_duplicate_ids += 1;
            continue;
        }
        match post.post_type {
            PostType::Question => {
                let q = Question {
                    id: post.id,
                    creation_date: post.creation_date,
                    tags: post.tags.unwrap_or_default(),
                    accepted_answer_id: post.accepted_answer_id,
                    asker_id: post.owner_user_id,
                };
                questions.insert(q.id, q);
            }
            PostType::Answer => raw_answers.push(post),
        }
    }

    let mut answers = BTreeMap::new();
    for post in raw_answers {
        let Some(question) = post.parent_id.and_then(|p| questions.get(&p)) else {
            stats.dropped_orphan_answers += 1;
            continue;
        };
        let Some(owner) = post.owner_user_id else {
            stats.dropped_ownerless_answers += 1;
            continue;
        };
        let mut creation_date = post.creation_date;
        if creation_date < question.creation_date {
            creation_date = question.creation_date;
            stats.clamped_answer_dates += 1;
        }
        answers.insert(
            post.id,
            Answer {
                id: post.id,
                question_id: question.id,
                owner_user_id: owner,
                creation_date,
                score: post.score,
            },
        );
    }

    for q in questions.values_mut() {
        if let Some(acc) = q.accepted_answer_id {
            let resolves = answers.get(&acc).is_some_and(|a: &Answer| a.question_id == q.id);
            if !resolves {
                q.accepted_answer_id = None;
                stats.dangling_accepted_answers += 1;
            }
        }
        if !q.has_tags() {
            stats.untagged_questions += 1;
        }
    }

    stats.questions = questions.len() as u64;
    stats.answers = answers.len() as u64;
    let dropped = stats.dropped_orphan_answers + stats.dropped_ownerless_answers + stats.dangling_accepted_answers;
    if dropped > 0 {
        log::info!(
            "{site_name}: dropped {} orphan and {} ownerless answers, cleared {} dangling accepted answers",
            stats.dropped_orphan_answers,
            stats.dropped_ownerless_answers,
            stats.dangling_accepted_answers
        );
    }

    (
        PostCorpus {
            site_name: site_name.to_string(),
            questions,
            answers,
        },
        stats,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(xml: &str) -> (Vec<RawPost>, ParseStats) {
        parse_posts(xml.as_bytes()).unwrap()
    }

    #[test]
    fn question_row_maps_fields() {
        let xml = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="7" PostTypeId="1" CreationDate="2011-04-12T10:00:00" Score="5" Tags="&lt;ethics&gt;&lt;kant&gt;" />
</posts>"#;
        let (posts, stats) = parse(xml);
        assert_eq!(stats.emitted, 1);
        assert_eq!(
            posts[0],
            RawPost {
                id: 7,
                post_type: PostType::Question,
                creation_date: 1_302_602_400,
                score: 5,
                owner_user_id: None,
                tags: Some(vec!["ethics".into(), "kant".into()]),
                accepted_answer_id: None,
                parent_id: None,
            }
        );
    }

    #[test]
    fn other_post_types_are_skipped() {
        let xml = r#"<posts><row Id="3" PostTypeId="5" CreationDate="2011-04-12T10:00:00" Score="0" /></posts>"#;
        let (posts, stats) = parse(xml);
        assert!(posts.is_empty());
        assert_eq!(stats.skipped_post_type, 1);
    }

    #[test]
    fn missing_required_attribute_rejects_row_and_continues() {
        let xml = r#"<posts>
<row Id="1" PostTypeId="1" CreationDate="2011-04-12T10:00:00" Tags="&lt;a&gt;" />
<row Id="2" PostTypeId="1" CreationDate="2011-04-12T10:00:00" Score="1" Tags="&lt;a&gt;" />
<row Id="x" PostTypeId="2" CreationDate="2011-04-12T10:00:00" Score="1" ParentId="2" />
</posts>"#;
        let (posts, stats) = parse(xml);
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].id, 2);
        assert_eq!(stats.rejected_missing_attribute, 1);
        assert_eq!(stats.rejected_bad_value, 1);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let xml = "<posts>\n<row Id=\"1\" PostTypeId=\"1\" CreationDate=\"2011-04-12T10:00:00\" Score=\"1\" />\n<row Id=\"2\" </posts>";
        let err = parse_posts(xml.as_bytes()).unwrap_err();
        match err {
            IngestError::Xml { offset, .. } => assert!(offset > 70, "offset {offset}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tag_formats() {
        assert_eq!(split_tags("<ethics><kant>"), vec!["ethics", "kant"]);
        assert_eq!(split_tags("|ethics|kant|"), vec!["ethics", "kant"]);
        assert_eq!(
            split_tags("&lt;Ethics&gt;&lt;ethics&gt;&lt; kant &gt;"),
            vec!["ethics", "kant"]
        );
        assert!(split_tags("").is_empty());
    }

    #[test]
    fn more_than_five_tags_rejected() {
        let xml = r#"<posts><row Id="1" PostTypeId="1" CreationDate="2011-04-12T10:00:00" Score="1" Tags="&lt;a&gt;&lt;b&gt;&lt;c&gt;&lt;d&gt;&lt;e&gt;&lt;f&gt;" /></posts>"#;
        let (posts, stats) = parse(xml);
        assert!(posts.is_empty());
        assert_eq!(stats.rejected_too_many_tags, 1);
    }

    #[test]
    fn timestamps_drop_subseconds() {
        assert_eq!(parse_timestamp("1970-01-01T00:00:01.999"), Some(1));
        assert_eq!(parse_timestamp("1970-01-02T00:00:00Z"), Some(86_400));
        assert_eq!(parse_timestamp("yesterday"), None);
        assert_eq!(format_timestamp(1_302_602_400), "2011-04-12T10:00:00");
    }

    fn q(id: u64, t: Timestamp, accepted: Option<u64>) -> RawPost {
        RawPost {
            id,
            post_type: PostType::Question,
            creation_date: t,
            score: 0,
            owner_user_id: Some(99),
            tags: Some(vec!["a".into()]),
            accepted_answer_id: accepted,
            parent_id: None,
        }
    }

    fn a(id: u64, parent: u64, owner: Option<u64>, t: Timestamp) -> RawPost {
        RawPost {
            id,
            post_type: PostType::Answer,
            creation_date: t,
            score: 1,
            owner_user_id: owner,
            tags: None,
            accepted_answer_id: None,
            parent_id: Some(parent),
        }
    }

    #[test]
    fn corpus_keeps_referenced_answers() {
        let (corpus, stats) = build_corpus("s", vec![q(1, 10, Some(2)), a(2, 1, Some(5), 20), a(3, 1, Some(6), 30)]);
        assert_eq!(corpus.questions.len(), 1);
        assert_eq!(corpus.answers.len(), 2);
        assert_eq!(stats.dropped_orphan_answers, 0);
        assert_eq!(corpus.accepted_answerer(&corpus.questions[&1]), Some(5));
    }

    #[test]
    fn orphan_answer_dropped() {
        let (corpus, stats) = build_corpus("s", vec![q(1, 10, None), a(2, 42, Some(5), 20)]);
        assert!(corpus.answers.is_empty());
        assert_eq!(stats.dropped_orphan_answers, 1);
    }

    #[test]
    fn ownerless_accepted_answer_makes_question_unevaluable() {
        let (corpus, stats) = build_corpus("s", vec![q(1, 10, Some(2)), a(2, 1, None, 20)]);
        assert_eq!(stats.dropped_ownerless_answers, 1);
        assert_eq!(stats.dangling_accepted_answers, 1);
        assert!(!corpus.is_evaluable(&corpus.questions[&1]));
    }

    #[test]
    fn early_answer_dates_are_clamped() {
        let (corpus, stats) = build_corpus("s", vec![q(1, 100, None), a(2, 1, Some(5), 50)]);
        assert_eq!(corpus.answers[&2].creation_date, 100);
        assert_eq!(stats.clamped_answer_dates, 1);
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        let (corpus, stats) = build_corpus("s", Vec::new());
        assert!(corpus.questions.is_empty());
        assert_eq!(stats, CorpusStats::default());
    }

    #[test]
    fn jsonl_round_trip() {
        let (corpus, _) = build_corpus("s", vec![q(1, 10, Some(2)), a(2, 1, Some(5), 20), q(3, 11, None)]);
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"kind\":\"site\",\"site_name\":\"s\"}\n"));
        assert_eq!(PostCorpus::read_jsonl(&buf[..]).unwrap(), corpus);
    }
}
