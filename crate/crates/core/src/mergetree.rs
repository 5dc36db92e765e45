//! Out-of-order streaming calibrator.
//!
//! Samples live in the leaves of a leveled merge structure kept in score
//! order. Every node above the leaves either carries its single child's
//! summary unchanged (it was moved up) or the pooled merge of two adjacent
//! children. The root summary is the optimal quantized staircase for all
//! samples seen so far.
//!
//! Each level is a doubly linked list. A node arriving at a level is placed
//! with these rules:
//!
//! * between two siblings of one merged parent: the parent now merges the
//!   left sibling with the newcomer, and the displaced right sibling is
//!   scheduled to move up;
//! * a scheduled node next to a moved-up node joins it, turning it into a
//!   merged pair (left neighbour first);
//! * otherwise the scheduled node moves up as itself and the same rules
//!   apply one level higher.
//!
//! The placement never leaves two moved-up nodes adjacent, so every level
//! holds at most about two thirds of the nodes of the level below and the
//! depth stays logarithmic. An insertion changes at most a couple of nodes
//! per level; only those and their ancestors are re-merged.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::Bound;

use crate::block::{merge_blocks, needs_join, push_pooled, Block, Sample};
use crate::error::{Error, Result};
use crate::grid::QuantizationGrid;
use crate::map::CalibrationMap;

/// Pooled groups of one node: per-group score extent, mean and weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SetSummary {
    blocks: Vec<Block>,
}

impl SetSummary {
    pub fn from_block(block: Block) -> Self {
        SetSummary { blocks: vec![block] }
    }

    /// Builds a summary from blocks that are already ordered and fully pooled.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        let summary = SetSummary { blocks };
        if !summary.is_fully_pooled() {
            return Err(Error::Structural(
                "summary blocks must be score ordered and fully pooled".into(),
            ));
        }
        Ok(summary)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn group_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn score_min(&self) -> Option<f64> {
        self.blocks.first().map(Block::score_min)
    }

    pub fn score_max(&self) -> Option<f64> {
        self.blocks.last().map(Block::score_max)
    }

    /// No adjacent pair violates monotonicity or shares a level, and the
    /// extents are disjoint and increasing.
    pub fn is_fully_pooled(&self) -> bool {
        self.blocks.iter().all(|b| b.score_min() <= b.score_max())
            && self
                .blocks
                .windows(2)
                .all(|w| w[0].score_max() < w[1].score_min() && !needs_join(&w[0], &w[1]))
    }
}

/// Merges two adjacent summaries, pooling across the seam until neither
/// trigger fires. Costs one step per join plus one.
pub fn merge_summaries(
    left: &SetSummary,
    right: &SetSummary,
    grid: &QuantizationGrid,
) -> Result<SetSummary> {
    if let (Some(a), Some(b)) = (left.score_max(), right.score_min()) {
        if a >= b {
            return Err(Error::Structural(format!(
                "summaries overlap: left ends at {a}, right starts at {b}"
            )));
        }
    }
    let mut out = Vec::with_capacity(left.blocks.len() + right.blocks.len());
    out.extend_from_slice(&left.blocks);
    let mut rest = right.blocks.iter();
    while let Some(b) = rest.next() {
        if push_pooled(&mut out, *b, grid)? == 0 {
            // the remaining right blocks are already pooled against `b`
            out.extend(rest);
            break;
        }
    }
    Ok(SetSummary { blocks: out })
}

/// Index of a node inside one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Leaf,
    MovedUp,
    Merged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Children {
    Leaf,
    Single(NodeId),
    Pair([NodeId; 2]),
}

#[derive(Debug, Clone)]
struct Node {
    level: u32,
    parent: Option<NodeId>,
    prev: Option<NodeId>,
    next: Option<NodeId>,
    children: Children,
    summary: SetSummary,
}

/// Read-only view of one node.
#[derive(Debug, Clone, Copy)]
pub struct TreeNode<'a> {
    pub id: NodeId,
    pub level_index: u32,
    pub status: NodeStatus,
    pub summary: &'a SetSummary,
    pub children: &'a [NodeId],
}

/// Whether re-merging stops once a node's summary comes out unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    #[default]
    EarlyStop,
    /// Re-merge every ancestor of every changed node.
    Full,
}

/// Counters accumulated since construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub inserts: u64,
    /// Nodes whose summary was set or recomputed by the latest insertion.
    pub nodes_touched: u64,
    pub max_nodes_touched: u64,
    pub total_nodes_touched: u64,
    /// Number of levels, leaves included.
    pub depth: u32,
    /// Sum over all merges of `left groups + right groups - merged groups`.
    pub merge_work: u64,
}

/// Outcome of one insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertReport {
    pub nodes_touched: u64,
    pub depth: u32,
    /// True when the sample landed on an existing score.
    pub coalesced: bool,
}

#[derive(Debug, Clone, Copy)]
struct ScoreKey(f64);

impl PartialEq for ScoreKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScoreKey {}

impl PartialOrd for ScoreKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoreKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Summary of a successful [`MergeTree::audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    pub nodes: usize,
    pub leaves: usize,
    pub depth: u32,
    pub max_group_count: usize,
}

#[derive(Debug, Clone)]
pub struct MergeTree {
    grid: QuantizationGrid,
    nodes: Vec<Node>,
    leaves: BTreeMap<ScoreKey, NodeId>,
    root: Option<NodeId>,
    propagation: Propagation,
    stats: UpdateStats,
    samples: u64,
    // per-insertion scratch: nodes to re-merge, bucketed by level
    pending: Vec<Vec<NodeId>>,
}

impl MergeTree {
    pub fn new(grid: QuantizationGrid) -> Self {
        MergeTree::with_propagation(grid, Propagation::EarlyStop)
    }

    pub fn with_propagation(grid: QuantizationGrid, propagation: Propagation) -> Self {
        MergeTree {
            grid,
            nodes: Vec::new(),
            leaves: BTreeMap::new(),
            root: None,
            propagation,
            stats: UpdateStats::default(),
            samples: 0,
            pending: Vec::new(),
        }
    }

    pub fn grid(&self) -> &QuantizationGrid {
        &self.grid
    }

    /// Samples inserted so far, counting coalesced duplicates.
    pub fn len(&self) -> u64 {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn depth(&self) -> u32 {
        self.stats.depth
    }

    pub fn stats(&self) -> UpdateStats {
        self.stats
    }

    pub fn root_summary(&self) -> Option<&SetSummary> {
        self.root.map(|r| &self.nodes[r.0].summary)
    }

    pub fn root_map(&self) -> Result<CalibrationMap> {
        let root = self.root_summary().ok_or(Error::NoData)?;
        CalibrationMap::new(root.blocks.clone(), self.grid.clone())
    }

    pub fn node(&self, id: NodeId) -> TreeNode<'_> {
        let n = &self.nodes[id.0];
        let (status, children): (NodeStatus, &[NodeId]) = match &n.children {
            Children::Leaf => (NodeStatus::Leaf, &[]),
            Children::Single(c) => (NodeStatus::MovedUp, std::slice::from_ref(c)),
            Children::Pair(pair) => (NodeStatus::Merged, pair.as_slice()),
        };
        TreeNode {
            id,
            level_index: n.level,
            status,
            summary: &n.summary,
            children,
        }
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn nodes(&self) -> impl Iterator<Item = TreeNode<'_>> {
        (0..self.nodes.len()).map(move |i| self.node(NodeId(i)))
    }

    /// Inserts one sample at its score position and refreshes the root.
    pub fn insert(&mut self, sample: Sample) -> Result<InsertReport> {
        let block = Block::from_sample(&sample, &self.grid)?;
        let key = ScoreKey(sample.score());
        self.pending.clear();

        let (leaf, coalesced) = if let Some(&leaf) = self.leaves.get(&key) {
            let old = self.nodes[leaf.0].summary.blocks[0];
            let merged = merge_blocks(&old, &block, &self.grid)?;
            self.nodes[leaf.0].summary = SetSummary::from_block(merged);
            self.stats.merge_work += 1;
            (leaf, true)
        } else {
            let prev = self
                .leaves
                .range(..key)
                .next_back()
                .map(|(_, &id)| id);
            let next = self
                .leaves
                .range((Bound::Excluded(key), Bound::Unbounded))
                .next()
                .map(|(_, &id)| id);
            let leaf = self.alloc(Node {
                level: 1,
                parent: None,
                prev,
                next,
                children: Children::Leaf,
                summary: SetSummary::from_block(block),
            });
            if let Some(p) = prev {
                self.nodes[p.0].next = Some(leaf);
            }
            if let Some(n) = next {
                self.nodes[n.0].prev = Some(leaf);
            }
            self.leaves.insert(key, leaf);
            if self.root.is_none() {
                self.root = Some(leaf);
                self.stats.depth = 1;
            } else {
                self.place(leaf);
            }
            (leaf, false)
        };

        let touched = 1 + self.propagate(leaf)?;
        self.samples += 1;
        self.stats.inserts += 1;
        self.stats.nodes_touched = touched;
        self.stats.total_nodes_touched += touched;
        self.stats.max_nodes_touched = self.stats.max_nodes_touched.max(touched);
        Ok(InsertReport {
            nodes_touched: touched,
            depth: self.stats.depth,
            coalesced,
        })
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    fn is_single(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].children, Children::Single(_))
    }

    fn mark(&mut self, id: NodeId) {
        let level = self.nodes[id.0].level as usize;
        if self.pending.len() <= level {
            self.pending.resize_with(level + 1, Vec::new);
        }
        if !self.pending[level].contains(&id) {
            self.pending[level].push(id);
        }
    }

    /// Links a fresh parentless node `x` into the structure above its level.
    /// `x` is already linked to its neighbours on its own level.
    fn place(&mut self, mut x: NodeId) {
        loop {
            let level = self.nodes[x.0].level;
            let (l, r) = (self.nodes[x.0].prev, self.nodes[x.0].next);

            // A parentless neighbour is the old root: this level was the top.
            if let Some(old_root) = [l, r].into_iter().flatten().find(|&n| self.parent(n).is_none()) {
                let children = if l == Some(old_root) {
                    Children::Pair([old_root, x])
                } else {
                    Children::Pair([x, old_root])
                };
                let top = self.alloc(Node {
                    level: level + 1,
                    parent: None,
                    prev: None,
                    next: None,
                    children,
                    summary: SetSummary::default(),
                });
                self.nodes[x.0].parent = Some(top);
                self.nodes[old_root.0].parent = Some(top);
                self.root = Some(top);
                self.stats.depth = level + 1;
                self.mark(top);
                return;
            }

            // Falling between a merged pair: merge with the left sibling instead
            // and schedule the right one to move up.
            if let (Some(l), Some(r)) = (l, r) {
                let p = self.parent(l).expect("non-top nodes have parents");
                if self.parent(r) == Some(p) {
                    self.nodes[p.0].children = Children::Pair([l, x]);
                    self.nodes[x.0].parent = Some(p);
                    self.nodes[r.0].parent = None;
                    self.mark(p);
                    x = r;
                }
            }

            // `x` is scheduled to move up.
            let (l, r) = (self.nodes[x.0].prev, self.nodes[x.0].next);
            if let Some(l) = l {
                let p = self.parent(l).expect("non-top nodes have parents");
                if self.is_single(p) {
                    self.nodes[p.0].children = Children::Pair([l, x]);
                    self.nodes[x.0].parent = Some(p);
                    self.mark(p);
                    return;
                }
            }
            if let Some(r) = r {
                let p = self.parent(r).expect("non-top nodes have parents");
                if self.is_single(p) {
                    self.nodes[p.0].children = Children::Pair([x, r]);
                    self.nodes[x.0].parent = Some(p);
                    self.mark(p);
                    return;
                }
            }

            let up_prev = l.and_then(|l| self.parent(l));
            let up_next = r.and_then(|r| self.parent(r));
            let up = self.alloc(Node {
                level: level + 1,
                parent: None,
                prev: up_prev,
                next: up_next,
                children: Children::Single(x),
                summary: SetSummary::default(),
            });
            if let Some(p) = up_prev {
                self.nodes[p.0].next = Some(up);
            }
            if let Some(n) = up_next {
                self.nodes[n.0].prev = Some(up);
            }
            self.nodes[x.0].parent = Some(up);
            self.mark(up);
            x = up;
        }
    }

    /// Recomputes marked nodes bottom-up, following changes towards the root.
    /// Returns the number of nodes recomputed.
    fn propagate(&mut self, leaf: NodeId) -> Result<u64> {
        if let Some(p) = self.parent(leaf) {
            self.mark(p);
        }
        let mut touched = 0;
        let mut level = 0;
        while level < self.pending.len() {
            let batch = std::mem::take(&mut self.pending[level]);
            for id in batch {
                touched += 1;
                let summary = self.recompute(id)?;
                let changed = summary != self.nodes[id.0].summary;
                self.nodes[id.0].summary = summary;
                if changed || self.propagation == Propagation::Full {
                    if let Some(p) = self.parent(id) {
                        self.mark(p);
                    }
                }
            }
            level += 1;
        }
        Ok(touched)
    }

    fn recompute(&mut self, id: NodeId) -> Result<SetSummary> {
        match self.nodes[id.0].children {
            Children::Leaf => Ok(self.nodes[id.0].summary.clone()),
            Children::Single(c) => Ok(self.nodes[c.0].summary.clone()),
            Children::Pair([a, b]) => {
                let (left, right) = (&self.nodes[a.0].summary, &self.nodes[b.0].summary);
                let merged = merge_summaries(left, right, &self.grid)?;
                self.stats.merge_work +=
                    (left.group_count() + right.group_count() - merged.group_count()) as u64;
                Ok(merged)
            }
        }
    }

    /// Full structural and numerical check of every node. Recomputes each
    /// merged summary from its children and demands bit-identical equality.
    pub fn audit(&self) -> Result<AuditReport> {
        let fail = |why: String| Err(Error::Structural(why));
        let Some(root) = self.root else {
            if self.nodes.is_empty() {
                return Ok(AuditReport { nodes: 0, leaves: 0, depth: 0, max_group_count: 0 });
            }
            return fail("nodes exist but there is no root".into());
        };
        if self.parent(root).is_some() || self.nodes[root.0].level != self.stats.depth {
            return fail("root is not the parentless top node".into());
        }
        let bound = self.grid.level_count();
        let mut max_group_count = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            let s = &n.summary;
            if s.is_empty() || !s.is_fully_pooled() {
                return fail(format!("node {i} summary is empty or not fully pooled"));
            }
            max_group_count = max_group_count.max(s.group_count());
            if let Some(k) = bound {
                if s.group_count() > k {
                    return fail(format!("node {i} has {} groups on a {k}-level grid", s.group_count()));
                }
            }
            let kids: Vec<NodeId> = match n.children {
                Children::Leaf => {
                    if n.level != 1 {
                        return fail(format!("leaf {i} above level 1"));
                    }
                    vec![]
                }
                Children::Single(c) => {
                    if &self.nodes[c.0].summary != s {
                        return fail(format!("moved-up node {i} differs from its child"));
                    }
                    vec![c]
                }
                Children::Pair([a, b]) => {
                    let expect = merge_summaries(&self.nodes[a.0].summary, &self.nodes[b.0].summary, &self.grid)?;
                    if &expect != s {
                        return fail(format!("merged node {i} differs from the merge of its children"));
                    }
                    if self.nodes[a.0].next != Some(b) {
                        return fail(format!("children of node {i} are not adjacent"));
                    }
                    vec![a, b]
                }
            };
            for c in kids {
                if self.nodes[c.0].parent != Some(id) || self.nodes[c.0].level + 1 != n.level {
                    return fail(format!("node {i} and child {} disagree", c.0));
                }
            }
            if id != root && n.parent.is_none() {
                return fail(format!("node {i} is detached"));
            }
            if let Some(nx) = n.next {
                let m = &self.nodes[nx.0];
                if m.prev != Some(id) || m.level != n.level {
                    return fail(format!("level links broken at node {i}"));
                }
                if n.summary.score_max() >= m.summary.score_min() {
                    return fail(format!("nodes {i} and {} overlap in score", nx.0));
                }
                if matches!(n.children, Children::Single(_)) && matches!(m.children, Children::Single(_)) {
                    return fail(format!("adjacent moved-up nodes {i} and {}", nx.0));
                }
            }
        }
        // leaves, in key order, form the level-1 list
        let mut expected_prev = None;
        for &leaf in self.leaves.values() {
            if self.nodes[leaf.0].prev != expected_prev {
                return fail("leaf order does not match score order".into());
            }
            expected_prev = Some(leaf);
        }
        Ok(AuditReport {
            nodes: self.nodes.len(),
            leaves: self.leaves.len(),
            depth: self.stats.depth,
            max_group_count,
        })
    }
}
