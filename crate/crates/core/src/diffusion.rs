//! Two-step resource diffusion on the weighted user-tag bipartite graph.
//!
//! Resource placed on users flows to tags in proportion to edge weight over
//! user degree, then back to users in proportion to edge weight over tag
//! degree. The composed operator `W` (users × users) is column-stochastic
//! under weighted degrees. Production scoring never builds `W`: a question's
//! score vector is `W·v` where `v` sums the adjacency columns of its tags,
//! which costs two sparse passes.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::TemporalActivityMatrix;
use crate::sparse::SparseUserTagMatrix;

/// Largest user count [`BipartiteGraph::materialize_w`] accepts by default.
pub const DEFAULT_MATERIALIZE_CAP: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("resource vector has length {found}, graph side has {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("resource at position {0} is negative or not finite")]
    InvalidResource(usize),
    #[error("none of the question's tags are known to the graph")]
    NoKnownTags,
    #[error("tag index {0} out of range")]
    TagOutOfRange(usize),
    #[error("refusing to materialize W for {users} users (cap {cap})")]
    TooLarge { users: usize, cap: usize },
}

/// How node degrees are measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeMode {
    /// Sum of incident edge weights.
    #[default]
    Weighted,
    /// Number of incident edges.
    EdgeCount,
}

impl fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeMode::Weighted => "weighted",
            DegreeMode::EdgeCount => "edge-count",
        })
    }
}

impl FromStr for DegreeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted" => Ok(DegreeMode::Weighted),
            "edge-count" => Ok(DegreeMode::EdgeCount),
            other => Err(format!(
                "unknown degree mode `{other}` (expected weighted or edge-count)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    adjacency: SparseUserTagMatrix,
    user_degrees: Vec<f64>,
    tag_degrees: Vec<f64>,
    mode: DegreeMode,
}

impl BipartiteGraph {
    pub fn new(adjacency: SparseUserTagMatrix, mode: DegreeMode) -> Self {
        let (user_degrees, tag_degrees) = match mode {
            DegreeMode::Weighted => (adjacency.row_sums(), adjacency.col_sums()),
            DegreeMode::EdgeCount => (adjacency.row_counts(), adjacency.col_counts()),
        };
        Self {
            adjacency,
            user_degrees,
            tag_degrees,
            mode,
        }
    }

    pub fn from_temporal(s: &TemporalActivityMatrix, mode: DegreeMode) -> Self {
        Self::new(s.matrix.clone(), mode)
    }

    pub fn users(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn tags(&self) -> usize {
        self.adjacency.cols()
    }

    pub fn adjacency(&self) -> &SparseUserTagMatrix {
        &self.adjacency
    }

    pub fn user_degrees(&self) -> &[f64] {
        &self.user_degrees
    }

    pub fn tag_degrees(&self) -> &[f64] {
        &self.tag_degrees
    }

    pub fn mode(&self) -> DegreeMode {
        self.mode
    }

    /// Users → tags: `f(ν_τ) = Σ_i a_iτ f(u_i) / k(u_i)`. Zero-degree users
    /// contribute nothing.
    pub fn diffuse_to_tags(&self, user_resource: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        check_resource(user_resource, self.users())?;
        let mut out = vec![0.0; self.tags()];
        for (i, &f) in user_resource.iter().enumerate() {
            let k = self.user_degrees[i];
            if k <= 0.0 || f == 0.0 {
                continue;
            }
            for (tau, a) in self.adjacency.row(i) {
                out[tau] += a * f / k;
            }
        }
        Ok(out)
    }

    /// Tags → users: `f'(u_i) = Σ_τ a_iτ f(ν_τ) / k(ν_τ)`. Zero-degree tags
    /// contribute nothing.
    pub fn diffuse_to_users(&self, tag_resource: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        check_resource(tag_resource, self.tags())?;
        let per_degree: Vec<f64> = tag_resource
            .iter()
            .zip(&self.tag_degrees)
            .map(|(&g, &k)| if k > 0.0 { g / k } else { 0.0 })
            .collect();
        Ok((0..self.users())
            .map(|i| self.adjacency.row(i).map(|(tau, a)| a * per_degree[tau]).sum())
            .collect())
    }

    /// Full two-step diffusion `W·f`.
    pub fn diffuse(&self, user_resource: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        self.diffuse_to_users(&self.diffuse_to_tags(user_resource)?)
    }

    /// Sum over `tags` of the columns of `W·S(t̂)`, computed as `W·v` with
    /// `v_i = Σ_{τ∈tags} a_iτ`. Duplicate tags count once.
    pub fn score_question(&self, tags: &[usize]) -> Result<Vec<f64>, DiffusionError> {
        if tags.is_empty() {
            return Err(DiffusionError::NoKnownTags);
        }
        let mut wanted = vec![false; self.tags()];
        for &t in tags {
            *wanted.get_mut(t).ok_or(DiffusionError::TagOutOfRange(t))? = true;
        }
        let seed: Vec<f64> = (0..self.users())
            .map(|i| {
                self.adjacency
                    .row(i)
                    .filter(|&(tau, _)| wanted[tau])
                    .map(|(_, a)| a)
                    .sum()
            })
            .collect();
        self.diffuse(&seed)
    }

    /// Dense `W` with `w_iβ = (1/k(u_β)) Σ_τ a_iτ a_βτ / k(ν_τ)`.
    /// Diagnostic only; refuses graphs with more than `cap` users.
    pub fn materialize_w(&self, cap: usize) -> Result<DenseMatrix, DiffusionError> {
        let m = self.users();
        if m > cap {
            return Err(DiffusionError::TooLarge { users: m, cap });
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.tags()];
        for (i, tau, a) in self.adjacency.triplets() {
            columns[tau].push((i, a));
        }
        let mut w = DenseMatrix::zeros(m, m);
        for (tau, members) in columns.iter().enumerate() {
            let k_tag = self.tag_degrees[tau];
            if k_tag <= 0.0 {
                continue;
            }
            for &(i, a_i) in members {
                for &(beta, a_beta) in members {
                    *w.get_mut(i, beta) += a_i * a_beta / k_tag;
                }
            }
        }
        for beta in 0..m {
            let k_user = self.user_degrees[beta];
            for i in 0..m {
                let cell = w.get_mut(i, beta);
                *cell = if k_user > 0.0 { *cell / k_user } else { 0.0 };
            }
        }
        Ok(w)
    }
}

fn check_resource(v: &[f64], expected: usize) -> Result<(), DiffusionError> {
    if v.len() != expected {
        return Err(DiffusionError::LengthMismatch {
            found: v.len(),
            expected,
        });
    }
    match v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        Some(pos) => Err(DiffusionError::InvalidResource(pos)),
        None => Ok(()),
    }
}

/// Row-major dense matrix, used for the materialized diffusion operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }

    /// `self · rhs` for a sparse right-hand side.
    pub fn mul_sparse(&self, rhs: &SparseUserTagMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows(), "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols());
        for (k, c, v) in rhs.triplets() {
            for r in 0..self.rows {
                *out.get_mut(r, c) += self.get(r, k) * v;
            }
        }
        out
    }

    /// Writes the matrix as CSV with a header row of column labels.
    pub fn write_csv<W: Write>(&self, labels: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(out, "user,{}", labels.join(","))?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| format!("{:.12}", self.get(r, c))).collect();
            writeln!(
                out,
                "{},{}",
                labels.get(r).map(String::as_str).unwrap_or(""),
                row.join(",")
            )?;
        }
        Ok(())
    }
}

/// A candidate user and its score in a [`Ranking`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedUser {
    pub user_id: u64,
    pub score: f64,
}

/// Candidates in descending score, ties by ascending user id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub entries: Vec<RankedUser>,
}

impl Ranking {
    /// 1-based position of `user_id`, if ranked.
    pub fn rank_of(&self, user_id: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.user_id == user_id).map(|p| p + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedUser] {
        &self.entries[..k.min(self.entries.len())]
    }
}

/// Orders candidates by score. `user_ids[i]` is the external id of the user
/// whose score is `scores[i]`.
pub fn rank_users(scores: &[f64], user_ids: &[u64]) -> Ranking {
    assert_eq!(scores.len(), user_ids.len(), "one score per candidate");
    let mut entries: Vec<RankedUser> = user_ids
        .iter()
        .zip(scores)
        .map(|(&user_id, &score)| RankedUser { user_id, score })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.user_id.cmp(&b.user_id)));
    Ranking { entries }
}
