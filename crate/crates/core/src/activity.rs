//! User-tag activity: per-window matrices and their hyperbolically discounted
//! aggregate at a query time.
//!
//! An answer to a question with `n` tags credits its author `1/n` on each tag.
//! Answers are bucketed into fixed-length windows counted backwards from the
//! query time `t_q`: ordinal 1 is the window ending at `t_q`, ordinal 2 the one
//! before it, and so on. The aggregate weights window `δ` by `1/(1+δ)`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::corpus::TrainingRecord;
use crate::ingest::{Timestamp, MAX_TAGS};
use crate::sparse::SparseUserTagMatrix;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_WINDOW_DAYS: i64 = 30;
pub const DEFAULT_WINDOW_SECONDS: i64 = DEFAULT_WINDOW_DAYS * SECONDS_PER_DAY;

#[derive(Debug, Error)]
pub enum ActivityError {
    #[error("a question must carry 1..={MAX_TAGS} tags, got {0}")]
    InvalidTagCount(usize),
    #[error("window ordinal must be at least 1, got {0}")]
    InvalidOrdinal(i64),
    #[error("window length must be positive, got {0}s")]
    InvalidWindowLength(i64),
    #[error("answer {answer_id} at {answer_time} is not before query time {query_time}")]
    RecordNotBeforeQuery {
        answer_id: u64,
        answer_time: Timestamp,
        query_time: Timestamp,
    },
    #[error("windows were built for query time {built}, asked for {requested}")]
    QueryTimeMismatch { built: Timestamp, requested: Timestamp },
    #[error("window {ordinal} has dims {found:?}, expected {expected:?}")]
    DimMismatch {
        ordinal: u32,
        found: (usize, usize),
        expected: (usize, usize),
    },
    #[error("record references user {user} or tag {tag} outside {rows}x{cols}")]
    IndexOutOfRange {
        user: usize,
        tag: usize,
        rows: usize,
        cols: usize,
    },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Activity credited to each tag of a question with `tag_count` tags.
pub fn activity_contribution(tag_count: usize) -> Result<f64, ActivityError> {
    if tag_count == 0 || tag_count > MAX_TAGS {
        return Err(ActivityError::InvalidTagCount(tag_count));
    }
    Ok(1.0 / tag_count as f64)
}

/// Hyperbolic kernel `1/(1+δ)` for window ordinal `δ ≥ 1`.
pub fn hyperbolic_discount(ordinal: i64) -> Result<f64, ActivityError> {
    if ordinal < 1 {
        return Err(ActivityError::InvalidOrdinal(ordinal));
    }
    Ok(1.0 / (1.0 + ordinal as f64))
}

/// Window ordinal of an event at `time` seen from `query_time`.
pub fn window_ordinal(time: Timestamp, query_time: Timestamp, window_length: i64) -> Result<u32, ActivityError> {
    if window_length <= 0 {
        return Err(ActivityError::InvalidWindowLength(window_length));
    }
    if time >= query_time {
        return Err(ActivityError::InvalidOrdinal(0));
    }
    let ordinal = (query_time - time) / window_length + 1;
    Ok(u32::try_from(ordinal).unwrap_or(u32::MAX))
}

/// One user-tag matrix per occupied window, ascending ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedActivity {
    pub rows: usize,
    pub cols: usize,
    pub window_length: i64,
    /// Time of the earliest record, or the query time when there are none.
    pub origin: Timestamp,
    pub query_time: Timestamp,
    pub windows: Vec<(u32, SparseUserTagMatrix)>,
}

impl WindowedActivity {
    /// Total number of windows, i.e. the largest ordinal present.
    pub fn window_count(&self) -> u32 {
        self.windows.last().map(|(d, _)| *d).unwrap_or(0)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

fn check_record(record: &TrainingRecord, rows: usize, cols: usize) -> Result<f64, ActivityError> {
    let share = activity_contribution(record.tags.len())?;
    if let Some(&tag) = record.tags.iter().find(|&&t| t >= cols) {
        return Err(ActivityError::IndexOutOfRange {
            user: record.answerer,
            tag,
            rows,
            cols,
        });
    }
    if record.answerer >= rows {
        return Err(ActivityError::IndexOutOfRange {
            user: record.answerer,
            tag: 0,
            rows,
            cols,
        });
    }
    Ok(share)
}

/// Buckets `records` into windows counted back from `query_time`. Entries
/// within a window are summed in record order.
pub fn build_windowed_activity(
    records: &[TrainingRecord],
    dims: (usize, usize),
    window_length: i64,
    query_time: Timestamp,
) -> Result<WindowedActivity, ActivityError> {
    let (rows, cols) = dims;
    if window_length <= 0 {
        return Err(ActivityError::InvalidWindowLength(window_length));
    }
    let mut buckets: BTreeMap<u32, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for r in records {
        if r.answer_time >= query_time {
            return Err(ActivityError::RecordNotBeforeQuery {
                answer_id: r.answer_id,
                answer_time: r.answer_time,
                query_time,
            });
        }
        let share = check_record(r, rows, cols)?;
        let ordinal = window_ordinal(r.answer_time, query_time, window_length)?;
        buckets
            .entry(ordinal)
            .or_default()
            .extend(r.tags.iter().map(|&t| (r.answerer, t, share)));
    }
    let windows = buckets
        .into_iter()
        .map(|(d, triplets)| (d, SparseUserTagMatrix::from_triplets(rows, cols, triplets)))
        .collect();
    Ok(WindowedActivity {
        rows,
        cols,
        window_length,
        origin: records.iter().map(|r| r.answer_time).min().unwrap_or(query_time),
        query_time,
        windows,
    })
}

/// Discounted activity `S(t̂)`, which doubles as the weighted user-tag
/// adjacency of the bipartite graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalActivityMatrix {
    pub matrix: SparseUserTagMatrix,
    pub query_time: Timestamp,
}

/// Sums `Φ(δ)·S_δ` over all windows. Each entry accumulates its terms in
/// ascending `δ`, so the result is bit-identical to a dense evaluation in the
/// same order.
pub fn temporal_activity(
    windowed: &WindowedActivity,
    query_time: Timestamp,
) -> Result<TemporalActivityMatrix, ActivityError> {
    if windowed.query_time != query_time {
        return Err(ActivityError::QueryTimeMismatch {
            built: windowed.query_time,
            requested: query_time,
        });
    }
    let expected = windowed.dims();
    let mut terms = Vec::with_capacity(windowed.windows.iter().map(|(_, m)| m.nnz()).sum());
    for (ordinal, window) in &windowed.windows {
        if window.dims() != expected {
            return Err(ActivityError::DimMismatch {
                ordinal: *ordinal,
                found: window.dims(),
                expected,
            });
        }
        let weight = hyperbolic_discount(*ordinal as i64)?;
        terms.extend(window.triplets().map(|(r, c, v)| (r, c, weight * v)));
    }
    Ok(TemporalActivityMatrix {
        matrix: SparseUserTagMatrix::from_triplets(expected.0, expected.1, terms),
        query_time,
    })
}

/// Undiscounted activity over all `records`.
pub fn static_activity(records: &[TrainingRecord], dims: (usize, usize)) -> Result<SparseUserTagMatrix, ActivityError> {
    let mut triplets = Vec::new();
    for r in records {
        let share = check_record(r, dims.0, dims.1)?;
        triplets.extend(r.tags.iter().map(|&t| (r.answerer, t, share)));
    }
    Ok(SparseUserTagMatrix::from_triplets(dims.0, dims.1, triplets))
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"TBGERWIN";
const SNAPSHOT_VERSION: u8 = 1;

/// Writes a windowed-activity snapshot.
///
/// Layout, all integers little-endian: magic `TBGERWIN`, version byte, then
/// `rows: u32, cols: u32, window_length: i64, origin: i64, query_time: i64,
/// window_count: u32, windows: u32`, then per window `ordinal: u32, nnz: u64`
/// followed by `nnz` triplets `(row: u32, col: u32, value: f64)`.
pub fn write_snapshot<W: Write>(windowed: &WindowedActivity, mut out: W) -> Result<(), ActivityError> {
    let to_u32 = |n: usize| u32::try_from(n).map_err(|_| ActivityError::Snapshot(format!("{n} does not fit in u32")));
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&[SNAPSHOT_VERSION])?;
    out.write_all(&to_u32(windowed.rows)?.to_le_bytes())?;
    out.write_all(&to_u32(windowed.cols)?.to_le_bytes())?;
    out.write_all(&windowed.window_length.to_le_bytes())?;
    out.write_all(&windowed.origin.to_le_bytes())?;
    out.write_all(&windowed.query_time.to_le_bytes())?;
    out.write_all(&windowed.window_count().to_le_bytes())?;
    out.write_all(&to_u32(windowed.windows.len())?.to_le_bytes())?;
    for (ordinal, m) in &windowed.windows {
        out.write_all(&ordinal.to_le_bytes())?;
        out.write_all(&(m.nnz() as u64).to_le_bytes())?;
        for (r, c, v) in m.triplets() {
            out.write_all(&to_u32(r)?.to_le_bytes())?;
            out.write_all(&to_u32(c)?.to_le_bytes())?;
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N], ActivityError> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<WindowedActivity, ActivityError> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(ActivityError::Snapshot("bad magic".into()));
    }
    let [version] = read_array::<1, _>(&mut input)?;
    if version != SNAPSHOT_VERSION {
        return Err(ActivityError::Snapshot(format!("unsupported version {version}")));
    }
    let u32_at = |input: &mut R| read_array::<4, _>(input).map(u32::from_le_bytes);
    let i64_at = |input: &mut R| read_array::<8, _>(input).map(i64::from_le_bytes);

    let rows = u32_at(&mut input)? as usize;
    let cols = u32_at(&mut input)? as usize;
    let window_length = i64_at(&mut input)?;
    let origin = i64_at(&mut input)?;
    let query_time = i64_at(&mut input)?;
    let window_count = u32_at(&mut input)?;
    let n_windows = u32_at(&mut input)?;
    let mut windows = Vec::with_capacity(n_windows as usize);
    for _ in 0..n_windows {
        let ordinal = u32_at(&mut input)?;
        let nnz = u64::from_le_bytes(read_array(&mut input)?);
        let mut triplets = Vec::new();
        for _ in 0..nnz {
            let r = u32_at(&mut input)? as usize;
            let c = u32_at(&mut input)? as usize;
            let v = f64::from_le_bytes(read_array(&mut input)?);
            if r >= rows || c >= cols || !(v > 0.0 && v.is_finite()) {
                return Err(ActivityError::Snapshot(format!("invalid entry ({r}, {c}, {v})")));
            }
            triplets.push((r, c, v));
        }
        windows.push((ordinal, SparseUserTagMatrix::from_triplets(rows, cols, triplets)));
    }
    let snapshot = WindowedActivity {
        rows,
        cols,
        window_length,
        origin,
        query_time,
        windows,
    };
    if snapshot.window_count() != window_count {
        return Err(ActivityError::Snapshot(format!(
            "header says {window_count} windows, data has {}",
            snapshot.window_count()
        )));
    }
    Ok(snapshot)
}
