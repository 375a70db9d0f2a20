//! Subtopic grouping: affinity propagation over candidate vectors, the
//! indicative Topic-Type matrix, spectral co-clustering and the consistency
//! filter.

mod ap;
mod cocluster;

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::embedding::cosine;
use crate::error::{Error, Result};

pub use ap::{affinity_propagation, ApParams, ApResult};
pub use cocluster::{cocluster, default_k, kmeans};

/// Dense symmetric similarity matrix whose diagonal carries the AP
/// preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Clustering(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Clustering("similarity matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for k in i + 1..n {
                if (data[i * n + k] - data[k * n + i]).abs() > 1e-9 {
                    return Err(Error::Clustering(format!("similarity matrix not symmetric at ({i}, {k})")));
                }
            }
        }
        Ok(SimilarityMatrix { n, data })
    }

    fn pairwise(points: &[Vec<f64>], f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let n = points.len();
        if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
            return Err(Error::Clustering(format!(
                "dimension mismatch: {} vs {}",
                p.len(),
                points[0].len()
            )));
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in i + 1..n {
                let v = f(&points[i], &points[k]);
                data[i * n + k] = v;
                data[k * n + i] = v;
            }
        }
        Self::from_dense(n, data)
    }

    /// Pairwise cosine similarities; diagonal zero until a preference is set.
    pub fn cosine(points: &[Vec<f64>]) -> Result<Self> {
        Self::pairwise(points, cosine)
    }

    /// Negative squared Euclidean distances.
    pub fn neg_sq_euclidean(points: &[Vec<f64>]) -> Result<Self> {
        Self::pairwise(points, |a, b| -a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.n + k]
    }

    /// Median of the off-diagonal entries (0 for a single point).
    pub fn median_off_diagonal(&self) -> f64 {
        let mut v: Vec<f64> = (0..self.n)
            .flat_map(|i| (0..self.n).filter(move |&k| k != i).map(move |k| (i, k)))
            .map(|(i, k)| self.get(i, k))
            .collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    }

    pub fn with_preference(mut self, preference: f64) -> Self {
        for i in 0..self.n {
            self.data[i * self.n + i] = preference;
        }
        self
    }

    pub fn with_median_preference(self) -> Self {
        let p = self.median_off_diagonal();
        self.with_preference(p)
    }
}

/// Indicative matrix: rows are type clusters, columns are meaning clusters,
/// a cell is 1 when some candidate falls in both.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicTypeMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
    /// Per candidate: (type row, meaning column).
    placement: Vec<(usize, usize)>,
}

impl TopicTypeMatrix {
    /// Matrix from explicit 0/1 rows, without candidate provenance.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Clustering("matrix must have at least one row and column".into()));
        }
        if rows.iter().any(|r| r.len() != cols || r.iter().any(|&x| x > 1)) {
            return Err(Error::Clustering("ragged or non-binary matrix".into()));
        }
        Ok(TopicTypeMatrix {
            rows: rows.len(),
            cols,
            cells: rows.concat(),
            placement: Vec::new(),
        })
    }

    /// Matrix from per-candidate type and meaning labels.
    pub fn from_labels(type_labels: &[usize], meaning_labels: &[usize]) -> Result<Self> {
        if type_labels.len() != meaning_labels.len() || type_labels.is_empty() {
            return Err(Error::Clustering("label lists must be non-empty and equally long".into()));
        }
        let rows = type_labels.iter().max().expect("non-empty") + 1;
        let cols = meaning_labels.iter().max().expect("non-empty") + 1;
        let mut cells = vec![0u8; rows * cols];
        let placement: Vec<(usize, usize)> = type_labels.iter().copied().zip(meaning_labels.iter().copied()).collect();
        for &(r, c) in &placement {
            cells[r * cols + c] = 1;
        }
        Ok(TopicTypeMatrix {
            rows,
            cols,
            cells,
            placement,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.cols + j]
    }

    pub fn nonzeros(&self) -> usize {
        self.cells.iter().filter(|&&x| x == 1).count()
    }

    /// Candidate indices in meaning column `j`.
    pub fn column_members(&self, j: usize) -> Vec<usize> {
        (0..self.placement.len()).filter(|&c| self.placement[c].1 == j).collect()
    }

    pub fn cell_members(&self, i: usize, j: usize) -> Vec<usize> {
        (0..self.placement.len()).filter(|&c| self.placement[c] == (i, j)).collect()
    }

    pub fn placement(&self) -> &[(usize, usize)] {
        &self.placement
    }

    /// TSV rendering with `#` comment lines naming the candidates behind
    /// every row, column and filled cell.
    pub fn to_tsv(&self, names: &[&str]) -> String {
        let list = |idx: Vec<usize>| idx.iter().map(|&c| names.get(c).copied().unwrap_or("?")).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for j in 0..self.cols {
            let _ = writeln!(out, "# col {j}: {}", list(self.column_members(j)));
        }
        for i in 0..self.rows {
            let members = (0..self.placement.len()).filter(|&c| self.placement[c].0 == i).collect();
            let _ = writeln!(out, "# row {i}: {}", list(members));
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) == 1 && !self.placement.is_empty() {
                    let _ = writeln!(out, "# cell {i},{j}: {}", list(self.cell_members(i, j)));
                }
            }
        }
        let header: Vec<String> = (0..self.cols).map(|j| format!("c{j}")).collect();
        let _ = writeln!(out, "type\t{}", header.join("\t"));
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            let _ = writeln!(out, "r{i}\t{}", row.join("\t"));
        }
        out
    }
}

/// Builds the matrix by clustering meaning vectors into columns and type
/// vectors into rows. Returns the matrix with both clusterings.
pub fn build_topic_type_matrix(
    meaning: &[Vec<f64>],
    types: &[Vec<f64>],
    params: &ApParams,
) -> Result<(TopicTypeMatrix, ApResult, ApResult)> {
    if meaning.len() != types.len() || meaning.is_empty() {
        return Err(Error::Clustering(format!(
            "need one meaning and one type vector per candidate ({} vs {})",
            meaning.len(),
            types.len()
        )));
    }
    let m = affinity_propagation(&SimilarityMatrix::cosine(meaning)?.with_median_preference(), params)?;
    let t = affinity_propagation(&SimilarityMatrix::cosine(types)?.with_median_preference(), params)?;
    let matrix = TopicTypeMatrix::from_labels(&t.labels, &m.labels)?;
    Ok((matrix, m, t))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiclusterAssignment {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub k: usize,
}

/// Fraction of filled cells inside bicluster `cluster`. `None` when the
/// bicluster has no rows or no columns.
pub fn consistency(m: &TopicTypeMatrix, assignment: &BiclusterAssignment, cluster: usize) -> Result<Option<f64>> {
    if cluster >= assignment.k {
        return Err(Error::Clustering(format!("cluster {cluster} out of range (k = {})", assignment.k)));
    }
    let rows: Vec<usize> = (0..m.rows()).filter(|&i| assignment.row_labels[i] == cluster).collect();
    let cols: Vec<usize> = (0..m.cols()).filter(|&j| assignment.col_labels[j] == cluster).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(None);
    }
    let ones: usize = rows
        .iter()
        .map(|&i| cols.iter().filter(|&&j| m.get(i, j) == 1).count())
        .sum();
    Ok(Some(ones as f64 / (rows.len() * cols.len()) as f64))
}

/// Biclusters whose consistency strictly exceeds `threshold`, with scores.
pub fn retained_biclusters(
    m: &TopicTypeMatrix,
    assignment: &BiclusterAssignment,
    threshold: f64,
) -> Result<Vec<(usize, f64)>> {
    let mut kept = Vec::new();
    for c in 0..assignment.k {
        if let Some(score) = consistency(m, assignment, c)? {
            if score > threshold {
                kept.push((c, score));
            }
        }
    }
    Ok(kept)
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Clustering("labelings differ in length".into()));
    }
    let n = a.len();
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ra: HashMap<usize, usize> = HashMap::new();
    let mut rb: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sa: f64 = ra.values().map(|&v| choose2(v)).sum();
    let sb: f64 = rb.values().map(|&v| choose2(v)).sum();
    let expected = sa * sb / choose2(n).max(1.0);
    let max = (sa + sb) / 2.0;
    if (max - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
