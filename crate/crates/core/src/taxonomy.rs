//! Tree model of a topical taxonomy: concept nodes, their term clusters,
//! children and siblings.
//!
//! Internally the structure is a forest so several discovered roots can
//! coexist; serialization collapses a multi-root forest under a virtual root
//! named [`VIRTUAL_ROOT`].

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{TermId, Vocabulary};
use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};

pub const VIRTUAL_ROOT: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyNode {
    pub name: String,
    pub cluster: Vec<String>,
    pub depth: usize,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

impl TaxonomyNode {
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    nodes: Vec<TaxonomyNode>,
    roots: Vec<NodeId>,
    by_name: HashMap<String, NodeId>,
    owner: HashMap<String, NodeId>,
}

/// Serialized node: `{"name": str, "cluster": [str], "children": [node]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    #[serde(default)]
    pub cluster: Vec<String>,
    #[serde(default)]
    pub children: Vec<NodeRecord>,
}

fn canonical(name: &str) -> String {
    name.trim().to_lowercase()
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn node(&self, id: NodeId) -> &TaxonomyNode {
        &self.nodes[id.index()]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(&canonical(name)).copied()
    }

    pub fn require(&self, name: &str) -> Result<NodeId> {
        self.find(name).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    /// All children of `parent(id)`, `id` included. Roots are siblings of
    /// each other.
    pub fn siblings(&self, id: NodeId) -> &[NodeId] {
        match self.parent(id) {
            Some(p) => self.children(p),
            None => &self.roots,
        }
    }

    /// Which node's cluster holds `term`, if any.
    pub fn cluster_owner(&self, term: &str) -> Option<NodeId> {
        self.owner.get(term).copied()
    }

    /// Pre-order traversal from every root, roots in order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.children(id).iter().rev());
        }
        out
    }

    /// Direct parent → child edges in pre-order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.preorder()
            .into_iter()
            .flat_map(|p| self.children(p).iter().map(move |&c| (p, c)))
            .collect()
    }

    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    fn insert(&mut self, name: &str, parent: Option<NodeId>) -> Result<NodeId> {
        let name = canonical(name);
        if name.is_empty() || name == VIRTUAL_ROOT {
            return Err(Error::Taxonomy {
                path: name,
                message: "invalid node name".into(),
            });
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::DuplicateNode(name));
        }
        let depth = match parent {
            Some(p) => {
                if p.index() >= self.nodes.len() {
                    return Err(Error::UnknownNode(format!("#{}", p.0)));
                }
                self.nodes[p.index()].depth + 1
            }
            None => 0,
        };
        let id = NodeId(self.nodes.len() as u32);
        // a term moves out of whatever cluster held it
        if let Some(prev) = self.owner.insert(name.clone(), id) {
            self.nodes[prev.index()].cluster.retain(|t| t != &name);
        }
        self.nodes.push(TaxonomyNode {
            name: name.clone(),
            cluster: vec![name.clone()],
            depth,
            parent,
            children: Vec::new(),
        });
        self.by_name.insert(name, id);
        match parent {
            Some(p) => self.nodes[p.index()].children.push(id),
            None => self.roots.push(id),
        }
        Ok(id)
    }

    pub fn add_root(&mut self, name: &str) -> Result<NodeId> {
        self.insert(name, None)
    }

    /// Adds a new leaf under `parent`.
    pub fn attach(&mut self, parent: NodeId, child_name: &str) -> Result<NodeId> {
        if parent.index() >= self.nodes.len() {
            return Err(Error::UnknownNode(format!("#{}", parent.0)));
        }
        self.insert(child_name, Some(parent))
    }

    /// Moves the current roots under a new root node.
    pub fn reroot(&mut self, name: &str) -> Result<NodeId> {
        let old_roots = std::mem::take(&mut self.roots);
        let root = match self.insert(name, None) {
            Ok(r) => r,
            Err(e) => {
                self.roots = old_roots;
                return Err(e);
            }
        };
        self.roots = vec![root];
        for r in old_roots {
            self.nodes[r.index()].parent = Some(root);
            self.nodes[root.index()].children.push(r);
        }
        let order = self.preorder();
        for id in order {
            self.nodes[id.index()].depth = match self.parent(id) {
                Some(p) => self.nodes[p.index()].depth + 1,
                None => 0,
            };
        }
        Ok(root)
    }

    /// Appends `term` to the node's cluster unless another node owns it.
    /// Returns whether the term was added.
    pub fn add_cluster_term(&mut self, id: NodeId, term: &str) -> bool {
        let term = canonical(term);
        match self.owner.get(&term) {
            Some(_) => false,
            None => {
                self.owner.insert(term.clone(), id);
                self.nodes[id.index()].cluster.push(term);
                true
            }
        }
    }

    /// Moves `term` into the node's cluster, taking it from its current owner
    /// unless that owner is the node named `term`.
    pub fn claim_cluster_term(&mut self, id: NodeId, term: &str) -> bool {
        let term = canonical(term);
        match self.owner.get(&term).copied() {
            Some(prev) if prev == id => false,
            Some(prev) if self.nodes[prev.index()].name == term => false,
            Some(prev) => {
                self.nodes[prev.index()].cluster.retain(|t| t != &term);
                self.owner.insert(term.clone(), id);
                self.nodes[id.index()].cluster.push(term);
                true
            }
            None => self.add_cluster_term(id, &term),
        }
    }

    /// Replaces a node's cluster order. `terms` must be a permutation of the
    /// current cluster.
    pub fn reorder_cluster(&mut self, id: NodeId, terms: Vec<String>) -> Result<()> {
        let node = &mut self.nodes[id.index()];
        let mut a = node.cluster.clone();
        let mut b = terms.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::Taxonomy {
                path: node.name.clone(),
                message: "reordered cluster is not a permutation".into(),
            });
        }
        node.cluster = terms;
        Ok(())
    }

    /// Full traversal check of the forest and cluster invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, message: &str| Error::Taxonomy {
            path: path.to_string(),
            message: message.to_string(),
        };
        let order = self.preorder();
        if order.len() != self.nodes.len() {
            return Err(fail("", "nodes unreachable from the roots (cycle or orphan)"));
        }
        let mut seen_nodes = HashSet::new();
        for &id in &order {
            if !seen_nodes.insert(id) {
                return Err(fail(self.name(id), "node visited twice"));
            }
        }
        let mut seen_terms: HashSet<&str> = HashSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i as u32);
            for &c in &node.children {
                if self.nodes[c.index()].parent != Some(id) {
                    return Err(fail(&node.name, "child does not point back to parent"));
                }
                if self.nodes[c.index()].depth != node.depth + 1 {
                    return Err(fail(&self.nodes[c.index()].name, "inconsistent depth"));
                }
            }
            if !node.cluster.contains(&node.name) {
                return Err(fail(&node.name, "node name missing from its cluster"));
            }
            for t in &node.cluster {
                if !seen_terms.insert(t) {
                    return Err(fail(&node.name, &format!("cluster term `{t}` is not unique")));
                }
            }
        }
        Ok(())
    }

    fn path(&self, id: NodeId) -> String {
        let mut parts: Vec<&str> = self.ancestors(id).iter().rev().map(|&a| self.name(a)).collect();
        parts.push(self.name(id));
        parts.join("/")
    }

    fn from_records(records: Vec<NodeRecord>) -> Result<Taxonomy> {
        let mut tax = Taxonomy::new();
        let mut stack: Vec<(Option<NodeId>, NodeRecord, String)> = records
            .into_iter()
            .rev()
            .map(|r| (None, r, String::new()))
            .collect();
        while let Some((parent, record, parent_path)) = stack.pop() {
            let path = if parent_path.is_empty() {
                canonical(&record.name)
            } else {
                format!("{parent_path}/{}", canonical(&record.name))
            };
            let id = tax.insert(&record.name, parent).map_err(|e| match e {
                Error::DuplicateNode(n) => Error::Taxonomy {
                    path: path.clone(),
                    message: format!("duplicate node name `{n}`"),
                },
                Error::Taxonomy { message, .. } => Error::Taxonomy {
                    path: path.clone(),
                    message,
                },
                other => other,
            })?;
            let own = tax.name(id).to_string();
            let mut cluster = vec![own.clone()];
            for term in record.cluster.iter().map(|t| canonical(t)) {
                if term != own && !cluster.contains(&term) {
                    cluster.push(term);
                }
            }
            for term in cluster.into_iter().skip(1) {
                if !tax.add_cluster_term(id, &term) {
                    return Err(Error::Taxonomy {
                        path: path.clone(),
                        message: format!("cluster term `{term}` already belongs to another node"),
                    });
                }
            }
            for child in record.children.into_iter().rev() {
                stack.push((Some(id), child, path.clone()));
            }
        }
        tax.validate()?;
        Ok(tax)
    }

    /// Parses a seed or exported taxonomy. JSON (an object or an array of
    /// objects) is detected by its first character; anything else is read as
    /// an edge list of `parent<TAB>child` lines (a line with a single name
    /// declares an isolated node, `#` starts a comment).
    pub fn load(serialized: &[u8]) -> Result<Taxonomy> {
        let text = std::str::from_utf8(serialized).map_err(|e| Error::Parse {
            what: "taxonomy",
            line: 0,
            message: e.to_string(),
        })?;
        match text.trim_start().chars().next() {
            Some('{') => {
                let record: NodeRecord = serde_json::from_str(text)?;
                if record.name.trim() == VIRTUAL_ROOT {
                    Self::from_records(record.children)
                } else {
                    Self::from_records(vec![record])
                }
            }
            Some('[') => Self::from_records(serde_json::from_str(text)?),
            _ => Self::from_edge_list(text),
        }
    }

    /// Alias of [`Taxonomy::load`] for seed inputs.
    pub fn load_seed(serialized: &[u8]) -> Result<Taxonomy> {
        Self::load(serialized)
    }

    fn from_edge_list(text: &str) -> Result<Taxonomy> {
        let mut order: Vec<String> = Vec::new();
        let mut parent_of: HashMap<String, String> = HashMap::new();
        let mut children_of: HashMap<String, Vec<String>> = HashMap::new();
        fn note(name: &str, order: &mut Vec<String>) {
            if !order.iter().any(|n| n == name) {
                order.push(name.to_string());
            }
        }
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim_matches([' ', '\r']);
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            match fields.as_slice() {
                [single] => note(&canonical(single), &mut order),
                [p, c] if !p.is_empty() && !c.is_empty() => {
                    let (p, c) = (canonical(p), canonical(c));
                    if p == c {
                        return Err(Error::Taxonomy {
                            path: format!("{p}/{c}"),
                            message: "cycle detected (self edge)".into(),
                        });
                    }
                    if let Some(old) = parent_of.get(&c) {
                        if old != &p {
                            return Err(Error::Taxonomy {
                                path: c.clone(),
                                message: format!("node has two parents: `{old}` and `{p}`"),
                            });
                        }
                        continue;
                    }
                    note(&p, &mut order);
                    note(&c, &mut order);
                    parent_of.insert(c.clone(), p.clone());
                    children_of.entry(p).or_default().push(c);
                }
                _ => {
                    return Err(Error::Parse {
                        what: "taxonomy edge list",
                        line: lineno + 1,
                        message: format!("orphan or malformed edge `{line}`"),
                    })
                }
            }
        }
        if order.is_empty() {
            return Err(Error::Taxonomy {
                path: String::new(),
                message: "empty taxonomy".into(),
            });
        }
        let mut tax = Taxonomy::new();
        let mut stack: Vec<(Option<NodeId>, String)> = order
            .iter()
            .filter(|n| !parent_of.contains_key(*n))
            .rev()
            .map(|n| (None, n.clone()))
            .collect();
        while let Some((parent, name)) = stack.pop() {
            let id = tax.insert(&name, parent)?;
            if let Some(kids) = children_of.get(&name) {
                for k in kids.iter().rev() {
                    stack.push((Some(id), k.clone()));
                }
            }
        }
        if tax.len() != order.len() {
            let stuck: Vec<&str> = order
                .iter()
                .filter(|n| tax.find(n).is_none())
                .map(String::as_str)
                .collect();
            return Err(Error::Taxonomy {
                path: stuck.join("/"),
                message: "cycle detected".into(),
            });
        }
        Ok(tax)
    }

    fn record(&self, id: NodeId, cluster_of: &dyn Fn(NodeId) -> Vec<String>) -> NodeRecord {
        NodeRecord {
            name: self.name(id).to_string(),
            cluster: cluster_of(id),
            children: self
                .children(id)
                .iter()
                .map(|&c| self.record(c, cluster_of))
                .collect(),
        }
    }

    fn records_json(&self, cluster_of: &dyn Fn(NodeId) -> Vec<String>) -> Result<String> {
        let top = match self.roots.as_slice() {
            [single] => self.record(*single, cluster_of),
            roots => NodeRecord {
                name: VIRTUAL_ROOT.to_string(),
                cluster: Vec::new(),
                children: roots.iter().map(|&r| self.record(r, cluster_of)).collect(),
            },
        };
        let mut s = serde_json::to_string_pretty(&top)?;
        s.push('\n');
        Ok(s)
    }

    /// Structural JSON with clusters in stored order.
    pub fn to_json(&self) -> Result<String> {
        self.records_json(&|id| self.node(id).cluster.clone())
    }

    /// Topical export: each node lists its top-`k` cluster terms ranked by
    /// cosine to the concept vector (row `NodeId` of the concept table).
    pub fn export(&self, table: &EmbeddingTable, vocab: &Vocabulary, k: usize) -> Result<String> {
        let mut ranked: Vec<Vec<String>> = Vec::with_capacity(self.len());
        for id in self.ids() {
            let concept = table
                .concept(id.index())
                .ok_or_else(|| Error::MissingEmbedding(self.path(id)))?;
            let mut scored: Vec<(f64, TermId, &str)> = Vec::new();
            for term in &self.node(id).cluster {
                let tid = vocab
                    .id(term)
                    .ok_or_else(|| Error::MissingEmbedding(format!("{} (term `{term}`)", self.path(id))))?;
                scored.push((cosine(table.word(tid), concept), tid, term));
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            ranked.push(scored.into_iter().take(k).map(|(_, _, t)| t.to_string()).collect());
        }
        self.records_json(&|id| ranked[id.index()].clone())
    }
}
