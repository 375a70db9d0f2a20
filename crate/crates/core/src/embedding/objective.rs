use std::collections::BTreeMap;

use crate::corpus::TermId;
use crate::error::{Error, Result};

use super::{Block, EmbeddingTable};

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramPair {
    pub center: TermId,
    pub context: TermId,
    pub negatives: Vec<TermId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocPair {
    pub word: TermId,
    pub doc: usize,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptPair {
    pub word: TermId,
    pub concept: usize,
    pub negatives: Vec<usize>,
}

/// A set of training pairs with their negatives already drawn.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub skipgram: Vec<SkipGramPair>,
    pub doc: Vec<DocPair>,
    pub concept: Vec<ConceptPair>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub local: f64,
    pub doc: f64,
    pub prox: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            local: 1.0,
            doc: 1.5,
            prox: 1.0,
        }
    }
}

/// Gradients keyed by (block, row). Only rows referenced by the batch appear.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    pub rows: BTreeMap<(Block, usize), Vec<f64>>,
}

impl SparseGrad {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, block: Block, row: usize) -> Option<&[f64]> {
        self.rows.get(&(block, row)).map(Vec::as_slice)
    }

    fn add(&mut self, block: Block, row: usize, alpha: f64, x: &[f64]) {
        let g = self
            .rows
            .entry((block, row))
            .or_insert_with(|| vec![0.0; x.len()]);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += alpha * xi;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Weighted logistic loss of one input row against a positive target and its
/// negatives. Returns the loss and, per target, the coefficient `c_k` such
/// that `∂loss/∂input = Σ c_k t_k` and `∂loss/∂t_k = c_k input`.
pub(crate) fn logistic_terms<'a>(
    input: &[f64],
    positive: &[f64],
    negatives: impl Iterator<Item = &'a [f64]>,
    weight: f64,
    coeffs: &mut Vec<f64>,
) -> f64 {
    coeffs.clear();
    let x = super::dot(input, positive);
    let mut loss = softplus(-x);
    coeffs.push(weight * (sigmoid(x) - 1.0));
    for neg in negatives {
        let x = super::dot(input, neg);
        loss += softplus(x);
        coeffs.push(weight * sigmoid(x));
    }
    weight * loss
}

fn fetch(table: &EmbeddingTable, block: Block, row: usize) -> Result<&[f64]> {
    table.row(block, row).ok_or_else(|| {
        Error::Embedding(format!(
            "{block:?} row {row} out of range ({} rows)",
            table.rows(block)
        ))
    })
}

struct Group<'a> {
    input: (Block, usize),
    target_block: Block,
    positive: usize,
    negatives: &'a [usize],
    weight: f64,
}

fn accumulate(table: &EmbeddingTable, g: Group<'_>, grad: &mut SparseGrad, coeffs: &mut Vec<f64>) -> Result<f64> {
    let input = fetch(table, g.input.0, g.input.1)?;
    let pos = fetch(table, g.target_block, g.positive)?;
    let negs = g
        .negatives
        .iter()
        .map(|&n| fetch(table, g.target_block, n))
        .collect::<Result<Vec<_>>>()?;
    let loss = logistic_terms(input, pos, negs.iter().copied(), g.weight, coeffs);
    let targets = std::iter::once(g.positive).chain(g.negatives.iter().copied());
    let mut grad_input = vec![0.0; input.len()];
    for (k, t) in targets.enumerate() {
        let trow = fetch(table, g.target_block, t)?;
        for (gi, ti) in grad_input.iter_mut().zip(trow) {
            *gi += coeffs[k] * ti;
        }
        grad.add(g.target_block, t, coeffs[k], input);
    }
    grad.add(g.input.0, g.input.1, 1.0, &grad_input);
    Ok(loss)
}

/// Negative-sampling loss of a batch and its gradient.
///
/// Each skip-gram pair contributes `-ln σ(u_c·v_o) - Σ ln σ(-u_c·v_n)`; document
/// and concept pairs use the same form with `u_d` / `u_e` targets, scaled by
/// their weights.
pub fn loss_and_grad(batch: &Batch, table: &EmbeddingTable, weights: LossWeights) -> Result<(f64, SparseGrad)> {
    let mut grad = SparseGrad::default();
    let mut coeffs = Vec::new();
    let mut loss = 0.0;
    if weights.local != 0.0 {
        for p in &batch.skipgram {
            let negatives: Vec<usize> = p.negatives.iter().map(|t| t.index()).collect();
            loss += accumulate(
                table,
                Group {
                    input: (Block::Word, p.center.index()),
                    target_block: Block::Context,
                    positive: p.context.index(),
                    negatives: &negatives,
                    weight: weights.local,
                },
                &mut grad,
                &mut coeffs,
            )?;
        }
    }
    if weights.doc != 0.0 {
        for p in &batch.doc {
            loss += accumulate(
                table,
                Group {
                    input: (Block::Word, p.word.index()),
                    target_block: Block::Doc,
                    positive: p.doc,
                    negatives: &p.negatives,
                    weight: weights.doc,
                },
                &mut grad,
                &mut coeffs,
            )?;
        }
    }
    if weights.prox != 0.0 {
        for p in &batch.concept {
            loss += accumulate(
                table,
                Group {
                    input: (Block::Word, p.word.index()),
                    target_block: Block::Concept,
                    positive: p.concept,
                    negatives: &p.negatives,
                    weight: weights.prox,
                },
                &mut grad,
                &mut coeffs,
            )?;
        }
    }
    Ok((loss, grad))
}
