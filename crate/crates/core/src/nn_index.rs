//! Removable nearest-neighbor index.
//!
//! The search engine consumes one primitive: "nearest open point to a query,
//! excluding the query itself". Points are closed monotonically with
//! [`NnIndex::remove`] and never come back. Query results are always
//! identical to a masked brute-force scan, ties broken by lowest index; the
//! space-partitioning structure only buys speed.
//!
//! The structure is a kd-tree with per-node bounding boxes; a subtree is
//! skipped when every point in it is closed (per-node open counts) or when
//! its box cannot beat the current best candidate. Small or
//! high-dimensional inputs (`n < 256` or `d > 32`) fall back to a plain
//! linear scan, where tree overhead dominates or pruning degrades.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, DbdError, Result};
use crate::metric::{dist_to_power, lp_dist_raw, PointSet};

const LEAF_SIZE: usize = 16;
const BRUTE_FORCE_N: usize = 256;
const BRUTE_FORCE_D: usize = 32;

// Subtree pruning guard: skip a box only when its lower bound beats the
// current best by more than accumulated rounding could account for, so
// exact-tie candidates are never lost.
const PRUNE_SLACK: f64 = 1e-12;

const NONE: u32 = u32::MAX;

/// Flat kd-tree node. Interior nodes carry a splitting plane; leaves own a
/// range of the reordered point array.
#[derive(Debug, Clone)]
struct KdNode {
    parent: u32,
    left: u32,
    right: u32,
    split_dim: u32,
    split_value: f64,
    /// Leaf payload: range into `KdTree::order`.
    start: u32,
    end: u32,
    open: u32,
    /// Leaf-only: bit per slot, set while the point is open.
    open_mask: u16,
}

impl KdNode {
    fn is_leaf(&self) -> bool {
        self.left == NONE
    }
}

#[derive(Debug)]
struct KdTree {
    nodes: Vec<KdNode>,
    /// Point indices, reordered so each leaf is a contiguous slice.
    order: Vec<u32>,
    /// Coordinates permuted into `order` so leaf scans walk memory
    /// sequentially.
    coords: Vec<f64>,
    /// Per-node bounding boxes, `2 * dim` values each: lows then highs.
    boxes: Vec<f64>,
    /// Leaf node owning each point.
    point_leaf: Vec<u32>,
    /// Position of each point in `order`.
    point_slot: Vec<u32>,
    dim: usize,
}

#[derive(Debug)]
enum Structure {
    Brute,
    Tree(KdTree),
}

/// Nearest-neighbor index over a [`PointSet`] with a monotone closed mask.
#[derive(Debug)]
pub struct NnIndex<'a> {
    points: &'a PointSet,
    p: f64,
    closed: Vec<bool>,
    open_total: usize,
    structure: Structure,
    /// Open count at the time the tree was last (re)built; once half the
    /// tree is dead weight it is rebuilt over the surviving points.
    built_open: usize,
    examined: Cell<u64>,
}

impl KdTree {
    /// Builds over a subset of point indices (`point_leaf` is sized for the
    /// full set; entries outside the subset are stale and never read).
    fn build(points: &PointSet, mut order: Vec<u32>) -> Self {
        let n = order.len();
        let dim = points.dim();
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 2),
            order: Vec::new(),
            coords: Vec::with_capacity(n * dim),
            boxes: Vec::with_capacity((2 * n / LEAF_SIZE + 2) * 2 * dim),
            point_leaf: vec![0; points.len()],
            point_slot: vec![0; points.len()],
            dim,
        };
        tree.build_rec(points, &mut order, 0, n, NONE);
        for &pt in &order {
            tree.coords.extend_from_slice(points.point(pt as usize));
        }
        tree.order = order;
        tree
    }

    /// Coordinates of the point at leaf position `slot`.
    #[inline]
    fn row(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    fn build_rec(
        &mut self,
        points: &PointSet,
        order: &mut [u32],
        offset: usize,
        len: usize,
        parent: u32,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        let dim = self.dim;
        // Exact bounding box of this subset.
        let box_at = self.boxes.len();
        self.boxes.extend(std::iter::repeat(f64::INFINITY).take(dim));
        self.boxes
            .extend(std::iter::repeat(f64::NEG_INFINITY).take(dim));
        for &pt in &order[offset..offset + len] {
            let row = points.point(pt as usize);
            for (j, &c) in row.iter().enumerate() {
                if c < self.boxes[box_at + j] {
                    self.boxes[box_at + j] = c;
                }
                if c > self.boxes[box_at + dim + j] {
                    self.boxes[box_at + dim + j] = c;
                }
            }
        }

        if len <= LEAF_SIZE {
            for (slot, &pt) in order[offset..offset + len].iter().enumerate() {
                self.point_leaf[pt as usize] = id;
                self.point_slot[pt as usize] = (offset + slot) as u32;
            }
            self.nodes.push(KdNode {
                parent,
                left: NONE,
                right: NONE,
                split_dim: 0,
                split_value: 0.0,
                start: offset as u32,
                end: (offset + len) as u32,
                open: len as u32,
                open_mask: if len == 16 { u16::MAX } else { (1u16 << len) - 1 },
            });
            return id;
        }

        // Split the widest box dimension at the median, ties by index so
        // the layout is deterministic.
        let mut split_dim = 0;
        let mut widest = f64::NEG_INFINITY;
        for j in 0..dim {
            let width = self.boxes[box_at + dim + j] - self.boxes[box_at + j];
            if width > widest {
                widest = width;
                split_dim = j;
            }
        }
        let mid = len / 2;
        order[offset..offset + len].select_nth_unstable_by(mid, |&a, &b| {
            let ca = points.point(a as usize)[split_dim];
            let cb = points.point(b as usize)[split_dim];
            ca.total_cmp(&cb).then(a.cmp(&b))
        });
        let split_value = points.point(order[offset + mid] as usize)[split_dim];

        self.nodes.push(KdNode {
            parent,
            left: NONE,
            right: NONE,
            split_dim: split_dim as u32,
            split_value,
            start: offset as u32,
            end: (offset + len) as u32,
            open: len as u32,
        });
        let left = self.build_rec(points, order, offset, mid, id);
        let right = self.build_rec(points, order, offset + mid, len - mid, id);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    /// Power-domain lower bound on the distance from `q` to any point in
    /// the node's box: `Σ_j max(lo_j − q_j, q_j − hi_j, 0)^p`.
    #[inline]
    fn box_min_power(&self, node_id: u32, q: &[f64], p: f64) -> f64 {
        let dim = self.dim;
        let box_at = node_id as usize * 2 * dim;
        let lows = &self.boxes[box_at..box_at + dim];
        let highs = &self.boxes[box_at + dim..box_at + 2 * dim];
        let mut sum = 0.0;
        if p == 2.0 {
            for j in 0..dim {
                let gap = (lows[j] - q[j]).max(q[j] - highs[j]).max(0.0);
                sum += gap * gap;
            }
        } else if p == 1.0 {
            for j in 0..dim {
                sum += (lows[j] - q[j]).max(q[j] - highs[j]).max(0.0);
            }
        } else {
            for j in 0..dim {
                let gap = (lows[j] - q[j]).max(q[j] - highs[j]).max(0.0);
                if gap > 0.0 {
                    sum += gap.powf(p);
                }
            }
        }
        sum
    }
}

/// Running best candidate: real distance, point index, and the pre-root
/// power sum used for box pruning.
#[derive(Clone, Copy)]
struct Best {
    dist: f64,
    idx: usize,
    power: f64,
}

impl<'a> NnIndex<'a> {
    /// Builds an index over all points, all open. Deterministic for a fixed
    /// input order.
    pub fn build(points: &'a PointSet, p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(invalid(format!("p must be finite and >= 1, got {p}")));
        }
        if points.is_empty() {
            return Err(invalid("cannot index an empty point set"));
        }
        let n = points.len();
        let structure = if n < BRUTE_FORCE_N || points.dim() > BRUTE_FORCE_D {
            Structure::Brute
        } else {
            Structure::Tree(KdTree::build(points, (0..n as u32).collect()))
        };
        Ok(Self {
            points,
            p,
            closed: vec![false; n],
            open_total: n,
            structure,
            built_open: n,
            examined: Cell::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn open_count(&self) -> usize {
        self.open_total
    }

    pub fn is_closed(&self, idx: usize) -> bool {
        self.closed[idx]
    }

    /// Total candidate points examined (distance evaluations) across all
    /// queries so far.
    pub fn points_examined(&self) -> u64 {
        self.examined.get()
    }

    /// The open point nearest to point `query_idx`, excluding `query_idx`
    /// itself, with its distance. `None` once every other point is closed.
    /// The query point may itself already be closed. Ties break to the
    /// lowest index.
    pub fn nearest(&self, query_idx: usize) -> Option<(usize, f64)> {
        if self.open_total == 0 {
            return None;
        }
        let q = self.points.point(query_idx);
        let mut best: Option<Best> = None;
        match &self.structure {
            Structure::Brute => {
                for pt in 0..self.points.len() {
                    if pt != query_idx && !self.closed[pt] {
                        self.consider(q, self.points.point(pt), pt, &mut best);
                    }
                }
            }
            Structure::Tree(tree) => {
                self.search_open(tree, 0, q, query_idx, &mut best);
            }
        }
        best.map(|b| (b.idx, b.dist))
    }

    /// Closes a point permanently. Double removal signals a bug in the
    /// calling search and is reported as a contract violation.
    pub fn remove(&mut self, idx: usize) -> Result<()> {
        if idx >= self.points.len() {
            return Err(invalid(format!("point index {idx} out of range")));
        }
        if self.closed[idx] {
            return Err(DbdError::ContractViolation(format!(
                "point {idx} removed twice"
            )));
        }
        self.closed[idx] = true;
        self.open_total -= 1;
        if let Structure::Tree(tree) = &mut self.structure {
            let mut at = tree.point_leaf[idx];
            loop {
                tree.nodes[at as usize].open -= 1;
                let parent = tree.nodes[at as usize].parent;
                if parent == NONE {
                    break;
                }
                at = parent;
            }
            if self.open_total > 0 && self.open_total * 2 <= self.built_open {
                let survivors: Vec<u32> = (0..self.points.len() as u32)
                    .filter(|&i| !self.closed[i as usize])
                    .collect();
                self.structure = Structure::Tree(KdTree::build(self.points, survivors));
                self.built_open = self.open_total;
            }
        }
        Ok(())
    }

    /// The `k` nearest points to `query_idx` over the full, un-removed point
    /// set (self excluded), ascending by distance, ties by lowest index.
    pub fn knn(&self, query_idx: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        let n = self.points.len();
        if k == 0 || k > n - 1 {
            return Err(invalid(format!(
                "k must satisfy 1 <= k <= n-1 (k={k}, n={n})"
            )));
        }
        let q = self.points.point(query_idx);
        let mut heap = KnnHeap::new(k, self.p);
        // The tree only covers open points after a removal-triggered
        // rebuild, and wide queries visit most leaves anyway; both cases
        // take the flat scan over the full point set.
        let scan = self.open_total < n || k.saturating_mul(48) >= n;
        match &self.structure {
            Structure::Tree(tree) if !scan => {
                self.search_knn(tree, 0, q, query_idx, &mut heap);
            }
            _ => {
                for pt in 0..n {
                    if pt != query_idx {
                        self.examined.set(self.examined.get() + 1);
                        let d = lp_dist_raw(q, self.points.point(pt), self.p);
                        heap.push(d, pt);
                    }
                }
            }
        }
        Ok(heap.into_sorted())
    }

    #[inline]
    fn consider(&self, q: &[f64], row: &[f64], pt: usize, best: &mut Option<Best>) {
        self.examined.set(self.examined.get() + 1);
        let dist = lp_dist_raw(q, row, self.p);
        let take = match best {
            None => true,
            Some(b) => dist < b.dist || (dist == b.dist && pt < b.idx),
        };
        if take {
            *best = Some(Best {
                dist,
                idx: pt,
                power: dist_to_power(dist, self.p),
            });
        }
    }

    fn search_open(
        &self,
        tree: &KdTree,
        node_id: u32,
        q: &[f64],
        query_idx: usize,
        best: &mut Option<Best>,
    ) {
        let node = &tree.nodes[node_id as usize];
        if node.open == 0 {
            return;
        }
        if node.is_leaf() {
            for slot in node.start as usize..node.end as usize {
                let pt = tree.order[slot] as usize;
                if pt != query_idx && !self.closed[pt] {
                    self.consider(q, tree.row(slot), pt, best);
                }
            }
            return;
        }
        let (first, second) = if q[node.split_dim as usize] <= node.split_value {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if tree.nodes[first as usize].open > 0 && !self.prunable(tree, first, q, best.as_ref()) {
            self.search_open(tree, first, q, query_idx, best);
        }
        if tree.nodes[second as usize].open > 0 && !self.prunable(tree, second, q, best.as_ref())
        {
            self.search_open(tree, second, q, query_idx, best);
        }
    }

    #[inline]
    fn prunable(&self, tree: &KdTree, node_id: u32, q: &[f64], best: Option<&Best>) -> bool {
        match best {
            None => false,
            Some(b) => {
                tree.box_min_power(node_id, q, self.p) * (1.0 - PRUNE_SLACK) > b.power
            }
        }
    }

    fn search_knn(
        &self,
        tree: &KdTree,
        node_id: u32,
        q: &[f64],
        query_idx: usize,
        heap: &mut KnnHeap,
    ) {
        let node = &tree.nodes[node_id as usize];
        if node.is_leaf() {
            for slot in node.start as usize..node.end as usize {
                let pt = tree.order[slot] as usize;
                if pt != query_idx {
                    self.examined.set(self.examined.get() + 1);
                    let d = lp_dist_raw(q, tree.row(slot), self.p);
                    heap.push(d, pt);
                }
            }
            return;
        }
        let (first, second) = if q[node.split_dim as usize] <= node.split_value {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        for child in [first, second] {
            let skip = match heap.worst_power_if_full() {
                None => false,
                Some(worst) => {
                    tree.box_min_power(child, q, self.p) * (1.0 - PRUNE_SLACK) > worst
                }
            };
            if !skip {
                self.search_knn(tree, child, q, query_idx, heap);
            }
        }
    }
}

/// Max-heap of the k best (distance, index) pairs seen so far.
struct KnnHeap {
    heap: BinaryHeap<HeapItem>,
    k: usize,
    p: f64,
    worst_power: f64,
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    idx: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnHeap {
    fn new(k: usize, p: f64) -> Self {
        Self {
            heap: BinaryHeap::with_capacity(k + 1),
            k,
            p,
            worst_power: f64::INFINITY,
        }
    }

    fn worst_power_if_full(&self) -> Option<f64> {
        if self.heap.len() == self.k {
            Some(self.worst_power)
        } else {
            None
        }
    }

    fn push(&mut self, dist: f64, idx: usize) {
        if self.heap.len() < self.k {
            self.heap.push(HeapItem { dist, idx });
        } else {
            let worst = self.heap.peek().unwrap();
            if dist < worst.dist || (dist == worst.dist && idx < worst.idx) {
                self.heap.pop();
                self.heap.push(HeapItem { dist, idx });
            } else {
                return;
            }
        }
        if self.heap.len() == self.k {
            self.worst_power = dist_to_power(self.heap.peek().unwrap().dist, self.p);
        }
    }

    fn into_sorted(self) -> Vec<(usize, f64)> {
        let mut items: Vec<(usize, f64)> = self
            .heap
            .into_iter()
            .map(|item| (item.idx, item.dist))
            .collect();
        items.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        items
    }
}

/// k-NN by direct scan over a point set, without building an index.
pub fn knn_scan(points: &PointSet, p: f64, query_idx: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = points.len();
    if k == 0 || k > n - 1 {
        return Err(invalid(format!(
            "k must satisfy 1 <= k <= n-1 (k={k}, n={n})"
        )));
    }
    if !p.is_finite() || p < 1.0 {
        return Err(invalid(format!("p must be finite and >= 1, got {p}")));
    }
    let q = points.point(query_idx);
    let mut heap = KnnHeap::new(k, p);
    for pt in 0..n {
        if pt != query_idx {
            heap.push(lp_dist_raw(q, points.point(pt), p), pt);
        }
    }
    Ok(heap.into_sorted())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(values: &[f64]) -> PointSet {
        PointSet::new(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn nearest_on_collinear_points() {
        let ps = one_d(&[0.0, 1.0, 2.0]);
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        // nearest(point at 1): points 0 and 2 tie at distance 1; lowest wins.
        assert_eq!(idx.nearest(1), Some((0, 1.0)));
    }

    #[test]
    fn nearest_respects_removal() {
        let ps = one_d(&[0.0, 1.0, 2.0]);
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        idx.remove(0).unwrap();
        assert_eq!(idx.nearest(1), Some((2, 1.0)));
    }

    #[test]
    fn nearest_exhaustion_returns_none() {
        let ps = one_d(&[0.0, 1.0, 2.0]);
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        idx.remove(0).unwrap();
        idx.remove(2).unwrap();
        assert_eq!(idx.nearest(1), None);
    }

    #[test]
    fn single_point_set_nearest_of_other() {
        let ps = PointSet::new(vec![vec![3.0, 4.0]]).unwrap();
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        // Only the query itself exists, so there is no other point.
        assert_eq!(idx.nearest(0), None);
    }

    #[test]
    fn double_removal_is_contract_violation() {
        let ps = one_d(&[0.0, 1.0]);
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        idx.remove(0).unwrap();
        let err = idx.remove(0).unwrap_err();
        assert!(matches!(err, DbdError::ContractViolation(_)));
    }

    #[test]
    fn remove_all_yields_none() {
        let ps = one_d(&[0.0, 1.0, 2.0]);
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        for i in 0..3 {
            idx.remove(i).unwrap();
        }
        assert_eq!(idx.nearest(0), None);
        assert_eq!(idx.open_count(), 0);
    }

    #[test]
    fn knn_sorted_ascending() {
        let ps = one_d(&[0.0, 1.0, 3.0, 6.0]);
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        assert_eq!(idx.knn(0, 2).unwrap(), vec![(1, 1.0), (2, 3.0)]);
    }

    #[test]
    fn knn_all_others() {
        let ps = one_d(&[0.0, 1.0, 3.0, 6.0]);
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        assert_eq!(
            idx.knn(0, 3).unwrap(),
            vec![(1, 1.0), (2, 3.0), (3, 6.0)]
        );
    }

    #[test]
    fn knn_rejects_out_of_range_k() {
        let ps = one_d(&[0.0, 1.0, 3.0]);
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        assert!(idx.knn(0, 0).is_err());
        assert!(idx.knn(0, 3).is_err());
    }

    #[test]
    fn knn_ignores_removals() {
        let ps = one_d(&[0.0, 1.0, 3.0, 6.0]);
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        idx.remove(1).unwrap();
        assert_eq!(idx.knn(0, 2).unwrap(), vec![(1, 1.0), (2, 3.0)]);
    }

    #[test]
    fn build_rejects_bad_p() {
        let ps = one_d(&[0.0]);
        assert!(NnIndex::build(&ps, 0.5).is_err());
    }

    #[test]
    fn knn_scan_matches_index_knn() {
        let ps = one_d(&[5.0, 1.0, 4.0, 2.0, 3.0]);
        let idx = NnIndex::build(&ps, 2.0).unwrap();
        for q in 0..5 {
            for k in 1..5 {
                assert_eq!(idx.knn(q, k).unwrap(), knn_scan(&ps, 2.0, q, k).unwrap());
            }
        }
    }

    #[test]
    fn tree_structure_used_above_threshold() {
        // 300 points in 2-d exercises the tree path; verify against scans.
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![next(), next()]).collect();
        let ps = PointSet::new(rows).unwrap();
        let mut idx = NnIndex::build(&ps, 2.0).unwrap();
        assert!(matches!(idx.structure, Structure::Tree(_)));
        for q in 0..30 {
            let brute = brute_nearest(&ps, &idx.closed, 2.0, q);
            assert_eq!(idx.nearest(q), brute);
        }
        for i in (0..300).step_by(3) {
            idx.remove(i).unwrap();
        }
        for q in 0..30 {
            let brute = brute_nearest(&ps, &idx.closed, 2.0, q);
            assert_eq!(idx.nearest(q), brute);
        }
        for q in [0, 7, 131, 299] {
            let got = idx.knn(q, 12).unwrap();
            let mut all: Vec<(usize, f64)> = (0..300)
                .filter(|&i| i != q)
                .map(|i| (i, lp_dist_raw(ps.point(q), ps.point(i), 2.0)))
                .collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            all.truncate(12);
            assert_eq!(got, all);
        }
    }

    fn brute_nearest(
        ps: &PointSet,
        closed: &[bool],
        p: f64,
        query: usize,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..ps.len() {
            if i == query || closed[i] {
                continue;
            }
            let d = lp_dist_raw(ps.point(query), ps.point(i), p);
            let take = match best {
                None => true,
                Some((bd, bi)) => d < bd || (d == bd && i < bi),
            };
            if take {
                best = Some((d, i));
            }
        }
        best.map(|(d, i)| (i, d))
    }
}
