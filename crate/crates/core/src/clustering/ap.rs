use crate::error::{Error, Result};

use super::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApParams {
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay unchanged to stop early.
    pub convergence_iter: usize,
    /// Largest message update still counted as settled.
    pub tolerance: f64,
}

impl Default for ApParams {
    fn default() -> Self {
        ApParams {
            damping: 0.9,
            max_iter: 500,
            convergence_iter: 15,
            tolerance: 1e-4,
        }
    }
}

impl ApParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::Config(format!("AP damping must be in [0.5, 1), got {}", self.damping)));
        }
        if self.max_iter == 0 || self.convergence_iter == 0 {
            return Err(Error::Config("AP iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    /// Exemplar point of every input point.
    pub exemplar_of: Vec<usize>,
    /// Cluster label per point; clusters numbered by ascending exemplar index.
    pub labels: Vec<usize>,
    /// Exemplar indices, ascending.
    pub exemplars: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl ApResult {
    pub fn n_clusters(&self) -> usize {
        self.exemplars.len()
    }

    fn from_exemplars(s: &SimilarityMatrix, mut exemplars: Vec<usize>, iterations: usize, converged: bool) -> Self {
        exemplars.sort_unstable();
        let n = s.len();
        let exemplar_of: Vec<usize> = (0..n)
            .map(|i| {
                if exemplars.binary_search(&i).is_ok() {
                    return i;
                }
                let mut best = exemplars[0];
                for &e in &exemplars[1..] {
                    if s.get(i, e) > s.get(i, best) {
                        best = e;
                    }
                }
                best
            })
            .collect();
        let labels = exemplar_of
            .iter()
            .map(|e| exemplars.binary_search(e).expect("exemplar"))
            .collect();
        ApResult {
            exemplar_of,
            labels,
            exemplars,
            iterations,
            converged,
        }
    }
}

/// Affinity propagation by responsibility/availability message passing.
/// The diagonal of `s` holds the preferences. Fully deterministic.
pub fn affinity_propagation(s: &SimilarityMatrix, params: &ApParams) -> Result<ApResult> {
    params.validate()?;
    let n = s.len();
    if n == 0 {
        return Err(Error::Clustering("affinity propagation on zero points".into()));
    }
    if n == 1 {
        return Ok(ApResult::from_exemplars(s, vec![0], 0, true));
    }
    if let Some(result) = degenerate(s) {
        return Ok(result);
    }

    let lam = params.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut last: Vec<bool> = vec![false; n];
    let mut stable = 0;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let (mut first, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[i * n + k] + s.get(i, k);
                if v > first {
                    second = first;
                    first = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == arg { second } else { first };
                let fresh = s.get(i, k) - competitor;
                let next = lam * r[i * n + k] + (1.0 - lam) * fresh;
                delta = delta.max((next - r[i * n + k]).abs());
                r[i * n + k] = next;
            }
        }
        for k in 0..n {
            let mut total = r[k * n + k];
            for i in 0..n {
                if i != k {
                    total += r[i * n + k].max(0.0);
                }
            }
            for i in 0..n {
                let fresh = if i == k {
                    total - r[k * n + k]
                } else {
                    (total - r[i * n + k].max(0.0)).min(0.0)
                };
                let next = lam * a[i * n + k] + (1.0 - lam) * fresh;
                delta = delta.max((next - a[i * n + k]).abs());
                a[i * n + k] = next;
            }
        }
        let current: Vec<bool> = (0..n).map(|k| a[k * n + k] + r[k * n + k] > 0.0).collect();
        if current == last {
            stable += 1;
        } else {
            stable = 1;
            last = current;
        }
        // A stable exemplar set alone is not enough: with heavy damping the
        // set can sit still during the slow start while messages still move.
        if stable >= params.convergence_iter && delta < params.tolerance && last.iter().any(|&e| e) {
            converged = true;
            break;
        }
    }

    let mut exemplars: Vec<usize> = (0..n).filter(|&k| last[k]).collect();
    if exemplars.is_empty() {
        let best = (0..n)
            .max_by(|&x, &y| (a[x * n + x] + r[x * n + x]).total_cmp(&(a[y * n + y] + r[y * n + y])).then(y.cmp(&x)))
            .expect("n > 0");
        exemplars.push(best);
    }
    // Re-pick each cluster's exemplar as the member with the largest total
    // similarity to the rest of the cluster, then reassign.
    let first = ApResult::from_exemplars(s, exemplars, iterations, converged);
    let refined: Vec<usize> = first
        .exemplars
        .iter()
        .enumerate()
        .map(|(c, &old)| {
            let members: Vec<usize> = (0..n).filter(|&i| first.labels[i] == c).collect();
            // ties keep the message-passing exemplar so the result does not
            // depend on point order
            let total = |m: usize| -> f64 { members.iter().filter(|&&o| o != m).map(|&o| s.get(o, m)).sum() };
            let mut best = old;
            let mut best_score = total(old);
            for &m in &members {
                let score = total(m);
                // summation order differs under permutation; ignore rounding
                if score > best_score + 1e-12 * best_score.abs().max(1.0) {
                    best_score = score;
                    best = m;
                }
            }
            best
        })
        .collect();
    Ok(ApResult::from_exemplars(s, refined, iterations, converged))
}

/// All similarities equal and all preferences equal: one cluster unless the
/// preference beats the similarity.
fn degenerate(s: &SimilarityMatrix) -> Option<ApResult> {
    let n = s.len();
    let off = s.get(0, 1);
    let pref = s.get(0, 0);
    for i in 0..n {
        if s.get(i, i) != pref {
            return None;
        }
        for k in 0..n {
            if i != k && s.get(i, k) != off {
                return None;
            }
        }
    }
    let exemplars = if pref > off { (0..n).collect() } else { vec![0] };
    Some(ApResult::from_exemplars(s, exemplars, 0, true))
}
