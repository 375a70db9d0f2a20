//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line (written straight to stdout so it shows even when the
//! harness captures output).

mod common;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taxoforge::clustering::{
    adjusted_rand_index, affinity_propagation, cocluster, consistency, ApParams, BiclusterAssignment,
    SimilarityMatrix, TopicTypeMatrix,
};
use taxoforge::corpus::{Corpus, TermId};
use taxoforge::embedding::{
    cosine, loss_and_grad, train, Batch, Block, ConceptPair, DocPair, EmbeddingTable, LossWeights, SkipGramPair,
    TrainingConfig,
};
use taxoforge::eval::{relation_f1, sibling_distinctiveness, sibling_group_distinctiveness, AncestorPairSet};
use taxoforge::pipeline::{self, RunConfig};
use taxoforge::relation::{
    build_training_set, ConfidenceFilter, RelationClass, RelationDistribution, TrainingSetConfig,
};
use taxoforge::synthetic::{self, SyntheticConfig};
use taxoforge::taxonomy::{NodeId, Taxonomy};

type Outcome = Result<String, String>;

fn criterion(name: &str, check: impl FnOnce() -> Outcome) {
    let result = check();
    let line = match &result {
        Ok(detail) => format!("acceptance PASS {name}: {detail}\n"),
        Err(detail) => format!("acceptance FAIL {name}: {detail}\n"),
    };
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    if let Err(detail) = result {
        panic!("{name}: {detail}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn planted_run(backend: &str) -> Result<(f64, Duration, usize), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = common::synthetic_workspace(dir.path(), backend);
    let start = Instant::now();
    let cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
    let out = pipeline::run(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    out.taxonomy.validate().map_err(|e| e.to_string())?;
    let f1 = out
        .report
        .metrics
        .as_ref()
        .and_then(|m| m.f1)
        .ok_or("no relation F1 in the report")?
        .f1;
    Ok((f1, elapsed, out.taxonomy.len()))
}

#[test]
fn c01_planted_recovery_with_oracle() {
    criterion("planted taxonomy recovery (oracle scorer)", || {
        let (f1, elapsed, nodes) = planted_run("oracle")?;
        ensure(f1 >= 0.95, || format!("relation F1 {f1:.4} < 0.95"))?;
        ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
        Ok(format!("F1 {f1:.4}, {nodes} nodes, {:.1}s", elapsed.as_secs_f64()))
    });
}

#[test]
fn c02_planted_recovery_with_heuristic() {
    criterion("planted taxonomy recovery (heuristic scorer)", || {
        let (f1, elapsed, nodes) = planted_run("heuristic")?;
        ensure(f1 >= 0.8, || format!("relation F1 {f1:.4} < 0.8"))?;
        Ok(format!("F1 {f1:.4}, {nodes} nodes, {:.1}s", elapsed.as_secs_f64()))
    });
}

fn brute_f1(pred: &[(String, String)], gold: &[(String, String)]) -> (f64, f64, f64) {
    let mut hits = 0usize;
    for p in pred {
        for g in gold {
            if p == g {
                hits += 1;
            }
        }
    }
    let precision = if pred.is_empty() { 0.0 } else { hits as f64 / pred.len() as f64 };
    (precision, hits as f64 / gold.len() as f64, (2 * hits) as f64 / (pred.len() + gold.len()) as f64)
}

/// `1 - max Jaccard` against every sibling, as an exact fraction rounded once.
fn brute_sd(own: &[String], siblings: &[&[String]], k: usize) -> f64 {
    let top = |c: &[String]| c.iter().take(k).cloned().collect::<Vec<_>>();
    let a = top(own);
    let mut best: Option<(usize, usize)> = None; // (distinct, union) minimising distinct/union
    for sib in siblings {
        let b = top(sib);
        let inter = a.iter().filter(|x| b.contains(x)).count();
        let union = a.len() + b.len() - inter;
        let cand = if union == 0 { (1, 1) } else { (union - inter, union) };
        best = Some(match best {
            // cross-multiplied comparison keeps it exact
            Some(cur) if cur.0 * cand.1 <= cand.0 * cur.1 => cur,
            _ => cand,
        });
    }
    best.map_or(1.0, |(n, d)| n as f64 / d as f64)
}

#[test]
fn c03_metric_oracles() {
    criterion("metric oracles (relation F1, sibling distinctiveness)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let names: Vec<String> = (0..8).map(|i| format!("n{i}")).collect();
        for fixture in 0..1000 {
            let draw = |rng: &mut ChaCha8Rng, min: usize| {
                let n = rng.gen_range(min..15);
                let set: BTreeSet<(String, String)> = (0..n)
                    .map(|_| (names[rng.gen_range(0..8)].clone(), names[rng.gen_range(0..8)].clone()))
                    .filter(|(a, b)| a != b)
                    .collect();
                set.into_iter().collect::<Vec<_>>()
            };
            let pred = draw(&mut rng, 0);
            let mut gold = draw(&mut rng, 1);
            if gold.is_empty() {
                gold.push(("n0".into(), "n1".into()));
            }
            let got = relation_f1(
                &AncestorPairSet::from_pairs(pred.iter().cloned()),
                &AncestorPairSet::from_pairs(gold.iter().cloned()),
            )
            .map_err(|e| e.to_string())?;
            let want = brute_f1(&pred, &gold);
            ensure((got.precision, got.recall, got.f1) == want, || {
                format!("F1 fixture {fixture}: {got:?} vs brute force {want:?}")
            })?;
        }

        for fixture in 0..1000 {
            let mut tax = Taxonomy::new();
            tax.add_root("root").map_err(|e| e.to_string())?;
            let n = rng.gen_range(1..9);
            for i in 0..n {
                let parent = NodeId(rng.gen_range(0..tax.len()) as u32);
                tax.attach(parent, &format!("node{i}")).map_err(|e| e.to_string())?;
            }
            for _ in 0..rng.gen_range(0..30) {
                let id = NodeId(rng.gen_range(0..tax.len()) as u32);
                tax.add_cluster_term(id, &format!("t{}", rng.gen_range(0..25)));
            }
            let k = rng.gen_range(1..6);
            let scores = sibling_distinctiveness(&tax, k);
            for (id, (name, got)) in tax.preorder().into_iter().zip(&scores.per_node) {
                let group: Vec<NodeId> = match tax.parent(id) {
                    Some(p) => tax.children(p).to_vec(),
                    None => tax.roots().to_vec(),
                };
                let others: Vec<&[String]> = group
                    .iter()
                    .filter(|&&s| s != id)
                    .map(|&s| tax.node(s).cluster.as_slice())
                    .collect();
                let want = brute_sd(&tax.node(id).cluster, &others, k);
                ensure(*got == want, || format!("SD fixture {fixture} node {name}: {got} vs brute force {want}"))?;
            }
        }

        let p = |v: &[(&str, &str)]| AncestorPairSet::from_pairs(v.iter().map(|(a, b)| (a.to_string(), b.to_string())));
        let worked = relation_f1(
            &p(&[("food", "beef"), ("food", "bread"), ("beef", "stewed")]),
            &p(&[("food", "beef"), ("food", "bread"), ("food", "pork")]),
        )
        .map_err(|e| e.to_string())?;
        ensure(
            (worked.precision, worked.recall, worked.f1) == (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0),
            || format!("worked F1 example gave {worked:?}"),
        )?;
        let sd = sibling_group_distinctiveness(&[vec!["a", "b", "c", "d"], vec!["c", "d", "e", "f"]], 10);
        ensure(sd == vec![2.0 / 3.0; 2], || format!("worked SD example gave {sd:?}"))?;
        Ok("1000 + 1000 fixtures exact; worked examples 2/3 and 2/3".into())
    });
}

#[test]
fn c04_kl_confidence_filter() {
    criterion("KL confidence filter", || {
        let uniform = RelationDistribution::uniform();
        for delta in [1e-12, 1e-6, 0.01, 0.1, 0.5, 1.0, 5.0] {
            let f = ConfidenceFilter::new(delta).map_err(|e| e.to_string())?;
            ensure(!f.is_confident(&uniform), || format!("uniform confident at delta {delta}"))?;
        }
        let peaked = RelationDistribution::new([0.98, 0.01, 0.01]).map_err(|e| e.to_string())?;
        let kl = peaked.kl_from_uniform();
        ensure((1.95..=2.00).contains(&kl), || format!("KL {kl}"))?;
        ensure(ConfidenceFilter::default().delta == 0.5, || "default delta".into())?;
        ensure(ConfidenceFilter::default().is_confident(&peaked), || "peaked not confident".into())?;

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for draw in 0..10_000 {
            let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let z: f64 = raw.iter().sum::<f64>().max(1e-12);
            let d = RelationDistribution::new([raw[0] / z, raw[1] / z, 1.0 - raw[0] / z - raw[1] / z].map(|x| x.max(0.0)))
                .map_err(|e| e.to_string())?;
            let mut deltas = [rng.gen_range(1e-6..3.0), rng.gen_range(1e-6..3.0)];
            deltas.sort_by(f64::total_cmp);
            let lo = ConfidenceFilter::new(deltas[0]).map_err(|e| e.to_string())?;
            let hi = ConfidenceFilter::new(deltas[1]).map_err(|e| e.to_string())?;
            ensure(!hi.is_confident(&d) || lo.is_confident(&d), || {
                format!("draw {draw}: confident at {} but not at {}", deltas[1], deltas[0])
            })?;
        }
        Ok(format!("KL(0.98,0.01,0.01) = {kl:.4}; 10000 monotonicity draws"))
    });
}

#[test]
fn c05_consistency_score() {
    criterion("consistency score", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..100 {
            let (r, c) = (rng.gen_range(1..8), rng.gen_range(1..8));
            let rows: Vec<Vec<u8>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(0..2)).collect()).collect();
            let m = TopicTypeMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
            let k = rng.gen_range(1..4);
            let a = BiclusterAssignment {
                row_labels: (0..r).map(|_| rng.gen_range(0..k)).collect(),
                col_labels: (0..c).map(|_| rng.gen_range(0..k)).collect(),
                k,
            };
            for cluster in 0..k {
                let mut ones = 0usize;
                let mut cells = 0usize;
                for i in 0..r {
                    for j in 0..c {
                        if a.row_labels[i] == cluster && a.col_labels[j] == cluster {
                            cells += 1;
                            ones += rows[i][j] as usize;
                        }
                    }
                }
                let want = (cells > 0).then(|| ones as f64 / cells as f64);
                let got = consistency(&m, &a, cluster).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("case {case} cluster {cluster}: {got:?} vs {want:?}"))?;
            }
        }
        let m = TopicTypeMatrix::from_rows(&[vec![1, 1], vec![1, 0]]).map_err(|e| e.to_string())?;
        let one = BiclusterAssignment { row_labels: vec![0, 0], col_labels: vec![0, 0], k: 1 };
        let block = consistency(&m, &one, 0).map_err(|e| e.to_string())?;
        ensure(block == Some(0.75), || format!("[[1,1],[1,0]] gave {block:?}"))?;
        Ok("100 random matrices exact; [[1,1],[1,0]] = 0.75".into())
    });
}

fn lsig(x: f64) -> f64 {
    -(1.0 / (1.0 + (-x).exp())).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn reference_loss(batch: &Batch, t: &EmbeddingTable, w: LossWeights) -> f64 {
    let mut total = 0.0;
    for p in &batch.skipgram {
        let u = t.word(p.center);
        let mut l = lsig(dot(u, t.context(p.context)));
        for n in &p.negatives {
            l += lsig(-dot(u, t.context(*n)));
        }
        total += w.local * l;
    }
    for p in &batch.doc {
        let u = t.word(p.word);
        let mut l = lsig(dot(u, t.doc(p.doc)));
        for n in &p.negatives {
            l += lsig(-dot(u, t.doc(*n)));
        }
        total += w.doc * l;
    }
    for p in &batch.concept {
        let u = t.word(p.word);
        let mut l = lsig(dot(u, t.concept(p.concept).unwrap()));
        for n in &p.negatives {
            l += lsig(-dot(u, t.concept(*n).unwrap()));
        }
        total += w.prox * l;
    }
    total
}

#[test]
fn c06_gradient_checks() {
    criterion("gradient checks against central differences", || {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for config in 0..100 {
            let dim = rng.gen_range(1..=10);
            let (nw, nd, nc) = (rng.gen_range(2..8), rng.gen_range(2..5), rng.gen_range(2..5));
            let mut t = EmbeddingTable::init(nw, nd, nc, dim, config).map_err(|e| e.to_string())?;
            for block in [Block::Word, Block::Context, Block::Doc, Block::Concept] {
                for r in 0..t.rows(block) {
                    for x in t.row_mut(block, r).unwrap() {
                        *x = rng.gen_range(-1.0..1.0);
                    }
                }
            }
            let negs = |rng: &mut ChaCha8Rng, n: usize| (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..n)).collect::<Vec<_>>();
            let batch = Batch {
                skipgram: (0..rng.gen_range(1..3))
                    .map(|_| SkipGramPair {
                        center: TermId(rng.gen_range(0..nw) as u32),
                        context: TermId(rng.gen_range(0..nw) as u32),
                        negatives: negs(&mut rng, nw).into_iter().map(|i| TermId(i as u32)).collect(),
                    })
                    .collect(),
                doc: vec![DocPair { word: TermId(rng.gen_range(0..nw) as u32), doc: rng.gen_range(0..nd), negatives: negs(&mut rng, nd) }],
                concept: vec![ConceptPair {
                    word: TermId(rng.gen_range(0..nw) as u32),
                    concept: rng.gen_range(0..nc),
                    negatives: negs(&mut rng, nc),
                }],
            };
            for w in [
                LossWeights { local: 1.0, doc: 0.0, prox: 0.0 },
                LossWeights { local: 0.0, doc: 1.5, prox: 0.0 },
                LossWeights { local: 0.0, doc: 0.0, prox: 1.0 },
            ] {
                let (loss, grad) = loss_and_grad(&batch, &t, w).map_err(|e| e.to_string())?;
                let reference = reference_loss(&batch, &t, w);
                ensure((loss - reference).abs() <= 1e-9 * reference.abs().max(1.0), || {
                    format!("config {config}: loss {loss} vs {reference}")
                })?;
                for block in [Block::Word, Block::Context, Block::Doc, Block::Concept] {
                    for r in 0..t.rows(block) {
                        for k in 0..dim {
                            let mut plus = t.clone();
                            plus.row_mut(block, r).unwrap()[k] += h;
                            let mut minus = t.clone();
                            minus.row_mut(block, r).unwrap()[k] -= h;
                            let numeric = (reference_loss(&batch, &plus, w) - reference_loss(&batch, &minus, w)) / (2.0 * h);
                            let analytic = grad.get(block, r).map_or(0.0, |g| g[k]);
                            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                            worst = worst.max(rel);
                            ensure(rel < 1e-4, || {
                                format!("config {config} {w:?} {block:?}[{r}][{k}]: {analytic} vs {numeric}")
                            })?;
                        }
                    }
                }
            }
        }
        Ok(format!("100 configurations x 3 components, worst relative error {worst:.2e}"))
    });
}

#[test]
fn c07_concept_separation() {
    criterion("concept separation on the two-concept toy", || {
        let (text, names) = synthetic::two_concept_toy(1);
        let corpus = Corpus::ingest_str(&text, 1).map_err(|e| e.to_string())?;
        let seeds: Vec<Vec<TermId>> = names.iter().map(|n| vec![corpus.vocab().id(n).unwrap()]).collect();
        let cfg = TrainingConfig { epochs: 10, deterministic: true, seed: 1, ..Default::default() };
        let a = train(&corpus, seeds.clone(), &cfg).map_err(|e| e.to_string())?;
        let b = train(&corpus, seeds, &cfg).map_err(|e| e.to_string())?;
        ensure(a.table == b.table, || "deterministic training differs between runs".into())?;

        // theme membership follows the documents each word appears in
        let theme = |w: TermId| -> usize {
            let doc = corpus.sentence(corpus.index().postings(w)[0]).doc_id;
            doc as usize % 2
        };
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for (e, _) in names.iter().enumerate() {
            let concept = a.table.concept(e).unwrap();
            for (w, _, _) in corpus.vocab().iter() {
                let c = cosine(a.table.word(w), concept);
                if theme(w) == e { inside.push(c) } else { outside.push(c) }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let gap = mean(&inside) - mean(&outside);
        ensure(gap >= 0.2, || format!("in-cluster {:.3} vs out-of-cluster {:.3}", mean(&inside), mean(&outside)))?;
        Ok(format!("in {:.3}, out {:.3}, gap {gap:.3}", mean(&inside), mean(&outside)))
    });
}

fn three_blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]];
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..10 {
            // Box-Muller
            let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            pts.push(vec![center[0] + r * th.cos(), center[1] + r * th.sin()]);
            labels.push(c);
        }
    }
    (pts, labels)
}

#[test]
fn c08_affinity_propagation_blobs() {
    criterion("affinity propagation on three planted blobs", || {
        let mut aris = Vec::new();
        for seed in 0..5 {
            let (pts, truth) = three_blobs(seed);
            let s = SimilarityMatrix::neg_sq_euclidean(&pts).map_err(|e| e.to_string())?.with_median_preference();
            let ap = affinity_propagation(&s, &ApParams::default()).map_err(|e| e.to_string())?;
            let ari = adjusted_rand_index(&ap.labels, &truth).map_err(|e| e.to_string())?;
            ensure(ari >= 0.9, || format!("seed {seed}: ARI {ari:.3} with {} clusters", ap.n_clusters()))?;
            aris.push(ari);
        }
        Ok(format!("ARI over 5 draws of 30 points: {aris:.3?}"))
    });
}

/// Every block-diagonal matrix whose blocks are given by `rows` and `cols`
/// compositions.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 1..=n - (k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn expand(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat(b).take(s)).collect()
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

#[test]
fn c09_cocluster_block_recovery() {
    criterion("co-clustering recovers block-diagonal structure", || {
        let mut cases = 0;
        for r in 1..=6 {
            for c in 1..=6 {
                for k in 1..=r.min(c) {
                    for rs in compositions(r, k) {
                        for cs in compositions(c, k) {
                            let (rb, cb) = (expand(&rs), expand(&cs));
                            let rows: Vec<Vec<u8>> = rb.iter().map(|&i| cb.iter().map(|&j| u8::from(i == j)).collect()).collect();
                            let m = TopicTypeMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
                            let a = cocluster(&m, k, 7).map_err(|e| e.to_string())?;
                            let ok = same_partition(&a.row_labels, &rb)
                                && same_partition(&a.col_labels, &cb)
                                && (0..r).all(|i| (0..c).all(|j| (rb[i] == cb[j]) == (a.row_labels[i] == a.col_labels[j])));
                            ensure(ok, || format!("{r}x{c} blocks {rs:?}/{cs:?}: rows {:?} cols {:?}", a.row_labels, a.col_labels))?;
                            cases += 1;
                        }
                    }
                }
            }
        }
        Ok(format!("{cases} block-diagonal matrices up to 6x6"))
    });
}

#[test]
fn c10_permutation_equivariance() {
    criterion("permutation equivariance (AP and co-clustering)", || {
        let (pts, _) = three_blobs(11);
        let s = SimilarityMatrix::neg_sq_euclidean(&pts).map_err(|e| e.to_string())?.with_median_preference();
        let base = affinity_propagation(&s, &ApParams::default()).map_err(|e| e.to_string())?;
        let rows = vec![
            vec![1, 1, 0, 0, 0],
            vec![1, 1, 0, 0, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 0, 0, 1, 1],
        ];
        let block = cocluster(&TopicTypeMatrix::from_rows(&rows).map_err(|e| e.to_string())?, 3, 7).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for trial in 0..50 {
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            perm.shuffle(&mut rng);
            let moved: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
            let s2 = SimilarityMatrix::neg_sq_euclidean(&moved).map_err(|e| e.to_string())?.with_median_preference();
            let ap = affinity_propagation(&s2, &ApParams::default()).map_err(|e| e.to_string())?;
            for (new_i, &old_i) in perm.iter().enumerate() {
                ensure(perm[ap.exemplar_of[new_i]] == base.exemplar_of[old_i], || {
                    format!("AP trial {trial}: point {old_i} changed exemplar")
                })?;
            }

            let mut pr: Vec<usize> = (0..5).collect();
            let mut pc: Vec<usize> = (0..5).collect();
            pr.shuffle(&mut rng);
            pc.shuffle(&mut rng);
            let permuted: Vec<Vec<u8>> = pr.iter().map(|&i| pc.iter().map(|&j| rows[i][j]).collect()).collect();
            let a = cocluster(&TopicTypeMatrix::from_rows(&permuted).map_err(|e| e.to_string())?, 3, 7).map_err(|e| e.to_string())?;
            let back_rows: Vec<usize> = pr.iter().map(|&i| block.row_labels[i]).collect();
            let back_cols: Vec<usize> = pc.iter().map(|&j| block.col_labels[j]).collect();
            ensure(same_partition(&a.row_labels, &back_rows) && same_partition(&a.col_labels, &back_cols), || {
                format!("co-clustering trial {trial}: partition changed under permutation")
            })?;
        }
        Ok("50 permutations each".into())
    });
}

#[test]
fn c11_deterministic_exports() {
    criterion("byte-identical exports across runs", || {
        let mut exports = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let config = common::synthetic_workspace(dir.path(), "oracle");
            let cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
            pipeline::run(&cfg).map_err(|e| e.to_string())?;
            let out = dir.path().join("out");
            let read = |name: &str| fs::read(out.join(name)).map_err(|e| e.to_string());
            exports.push((read("taxonomy.json")?, read("embeddings.bin")?, read("metrics.txt")?));
        }
        ensure(exports[0].0 == exports[1].0, || "taxonomy.json differs".into())?;
        ensure(exports[0].1 == exports[1].1, || "embeddings.bin differs".into())?;
        ensure(exports[0].2 == exports[1].2, || "metrics.txt differs".into())?;
        Ok(format!("taxonomy.json ({} bytes), embeddings.bin and metrics.txt identical", exports[0].0.len()))
    });
}

#[test]
fn c12_augmentation_involution() {
    criterion("augmentation involution and label swap", || {
        let mut sets = 0;
        let mut samples = 0;
        for synth_seed in [7u64, 8, 9] {
            let data = synthetic::generate(&SyntheticConfig { seed: synth_seed, ..Default::default() });
            let corpus = Corpus::ingest_str(&data.text, 1).map_err(|e| e.to_string())?;
            let seeds = [
                Taxonomy::load(data.seed.as_bytes()).map_err(|e| e.to_string())?,
                Taxonomy::load(data.planted.as_bytes()).map_err(|e| e.to_string())?,
            ];
            for seed in &seeds {
                for set_seed in 0..4 {
                    let cfg = TrainingSetConfig { seed: set_seed, cap: 50, random_negatives: None };
                    let set = build_training_set(seed, &corpus, &cfg).map_err(|e| e.to_string())?;
                    ensure(set.samples.len() % 2 == 0, || "odd sample count".into())?;
                    let labels: HashSet<RelationClass> = set.samples.iter().map(|s| s.label).collect();
                    ensure(labels.contains(&RelationClass::Forward) && labels.contains(&RelationClass::Backward), || {
                        "training set lacks directional labels".into()
                    })?;
                    for pair in set.samples.chunks(2) {
                        let (s, r) = (&pair[0], &pair[1]);
                        ensure(s.reversed().reversed() == *s, || "reversal is not an involution".into())?;
                        ensure(s.reversed() == *r, || "sample not followed by its reversal".into())?;
                        ensure(r.statement.pos_a == s.statement.pos_b && r.statement.pos_b == s.statement.pos_a, || {
                            "positions not swapped".into()
                        })?;
                        ensure(r.statement.tokens == s.statement.tokens, || "tokens changed".into())?;
                        let expected = match s.label {
                            RelationClass::Forward => RelationClass::Backward,
                            RelationClass::Backward => RelationClass::Forward,
                            RelationClass::None => RelationClass::None,
                        };
                        ensure(r.label == expected, || format!("label {:?} reversed to {:?}", s.label, r.label))?;
                        samples += 2;
                    }
                    sets += 1;
                }
            }
        }
        Ok(format!("{sets} training sets, {samples} samples"))
    });
}
