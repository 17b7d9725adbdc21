//! Exact max-norm (Chebyshev) neighbour queries.
//!
//! [`NeighborIndex`] indexes a subset of the columns of a [`SampleMatrix`]
//! and answers the two statistics the kNN estimators need: the distance to
//! the k-th nearest other point, and the number of other points inside a
//! radius. Results are exact and agree with a brute-force scan.
//!
//! Three layouts share one interface: a sorted line for one dimension, a
//! uniform grid over two axes (box-assisted search) for low dimensions, and a
//! k-d tree otherwise or when the grid would be badly crowded.
//!
//! Points may carry non-negative integer-like weights (multiplicities). A
//! weighted index behaves like a point set in which point `i` is repeated
//! `w_i` times, except that a query at `i` excludes every copy of `i`. This is
//! how bootstrap resamples are evaluated without creating duplicate points.

use crate::data::SampleMatrix;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;
const NONE: usize = usize::MAX;
/// Highest dimension served by the grid layout.
const GRID_MAX_DIM: usize = 6;
/// Target mean number of points per grid cell.
const GRID_OCCUPANCY: f64 = 2.0;
const GRID_MAX_CELLS_PER_AXIS: usize = 1024;
/// Fall back to the tree when the mean occupancy of a point's own cell
/// exceeds this.
const GRID_CROWDING_LIMIT: f64 = 48.0;

/// Maximum absolute coordinate difference.
#[inline]
pub fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Whether `a` lies within `r` of `b` (strictly when `strict`), stopping
/// at the first coordinate that rules it out.
#[inline(always)]
fn within(a: &[f64], b: &[f64], r: f64, strict: bool) -> bool {
    if strict {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < r)
    } else {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= r)
    }
}

/// Max-norm distance if it is below `bound`, else `None`.
#[inline(always)]
fn distance_below(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut d: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        d = d.max((x - y).abs());
        if d >= bound {
            return None;
        }
    }
    Some(d)
}

/// Spatial layout selection. `Auto` picks by dimension and crowding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Auto,
    Line,
    Grid,
    Tree,
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    left: usize,
    right: usize,
    weight: f64,
    /// Split axis and value of an internal node; left holds values ≤ split,
    /// right values ≥ split.
    axis: usize,
    split: f64,
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// Storage position -> leaf node holding it.
    leaf_of: Vec<usize>,
    /// Per-node bounding boxes, `2 * dim` values each (lo then hi).
    bounds: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Grid {
    /// Cell boundaries per axis at empirical quantiles; cell `c` spans
    /// `[edges[c], edges[c + 1])`, the outer cells extend to infinity.
    edges: [Vec<f64>; 2],
    margin: [f64; 2],
    cells: [usize; 2],
    /// CSR offsets into the stored points, one entry per cell plus one.
    start: Vec<usize>,
    /// Prefix sums of the weights in storage order.
    prefix: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Kind {
    /// Prefix sums of the weights in sorted order.
    Line(Vec<f64>),
    Grid(Grid),
    Tree(Tree),
}

#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    /// Coordinates in storage order, row-major.
    coords: Vec<f64>,
    /// Weights in storage order.
    weights: Vec<f64>,
    /// Storage position -> original row.
    order: Vec<usize>,
    /// Original row -> storage position (NONE when the row has zero weight).
    position: Vec<usize>,
    total_weight: f64,
    kind: Kind,
}

impl NeighborIndex {
    /// Index every column of `points` with unit weights.
    pub fn new(points: &SampleMatrix) -> Self {
        let cols: Vec<usize> = (0..points.n_cols()).collect();
        Self::build(points, &cols, None, Layout::Auto)
    }

    /// Index a column subset (a marginal space) with unit weights.
    pub fn over_columns(points: &SampleMatrix, cols: &[usize]) -> Self {
        Self::build(points, cols, None, Layout::Auto)
    }

    /// Index a column subset with per-row multiplicities. Rows with zero
    /// weight are left out.
    pub fn weighted(points: &SampleMatrix, cols: &[usize], weights: &[f64]) -> Self {
        Self::build(points, cols, Some(weights), Layout::Auto)
    }

    /// Layout suited to k-th neighbour queries only: the sorted line in one
    /// dimension, the tree otherwise.
    pub fn for_knn(points: &SampleMatrix, cols: &[usize], weights: &[f64]) -> Self {
        let layout = if cols.len() == 1 { Layout::Line } else { Layout::Tree };
        Self::build(points, cols, Some(weights), layout)
    }

    /// As [`NeighborIndex::weighted`] with an explicit layout. `Line`
    /// requires one column; `Grid` requires at least two.
    pub fn with_layout(points: &SampleMatrix, cols: &[usize], weights: Option<&[f64]>, layout: Layout) -> Self {
        Self::build(points, cols, weights, layout)
    }

    fn build(points: &SampleMatrix, cols: &[usize], weights: Option<&[f64]>, layout: Layout) -> Self {
        let dim = cols.len();
        let n = points.n_rows();
        let active: Vec<usize> = (0..n).filter(|&i| weights.is_none_or(|w| w[i] > 0.0)).collect();
        let mut raw = vec![0.0; n * dim];
        for i in 0..n {
            let row = points.row(i);
            for (c, &col) in cols.iter().enumerate() {
                raw[i * dim + c] = row[col];
            }
        }
        let forced_grid = layout == Layout::Grid;
        let layout = match layout {
            Layout::Auto if dim == 1 => Layout::Line,
            Layout::Auto if (2..=GRID_MAX_DIM).contains(&dim) => Layout::Grid,
            Layout::Auto => Layout::Tree,
            other => other,
        };
        assert!(layout != Layout::Line || dim == 1, "line layout needs exactly one column");
        assert!(layout != Layout::Grid || dim >= 2, "grid layout needs at least two columns");

        let (order, kind) = match layout {
            Layout::Line => {
                let mut order = active;
                order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
                (order, Kind::Line(Vec::new()))
            }
            Layout::Grid => match grid_order(&raw, dim, &active, forced_grid) {
                Some((order, grid)) => (order, Kind::Grid(grid)),
                None => tree_order(&raw, dim, active),
            },
            _ => tree_order(&raw, dim, active),
        };

        let mut coords = Vec::with_capacity(order.len() * dim);
        let mut w = Vec::with_capacity(order.len());
        let mut position = vec![NONE; n];
        for (pos, &orig) in order.iter().enumerate() {
            coords.extend_from_slice(&raw[orig * dim..(orig + 1) * dim]);
            w.push(weights.map_or(1.0, |ws| ws[orig]));
            position[orig] = pos;
        }
        let mut index = NeighborIndex { dim, coords, weights: w, order, position, total_weight: 0.0, kind };
        index.total_weight = index.weights.iter().sum();
        match &mut index.kind {
            Kind::Line(prefix) => *prefix = prefix_sums(&index.weights),
            Kind::Tree(tree) => {
                if !tree.nodes.is_empty() {
                    fill_weights(tree, &index.weights, 0);
                }
                tree.leaf_of = vec![NONE; index.order.len()];
                for (id, node) in tree.nodes.iter().enumerate() {
                    if node.left == NONE {
                        tree.leaf_of[node.start..node.end].fill(id);
                    }
                }
            }
            Kind::Grid(grid) => {
                grid.prefix = prefix_sums(&index.weights);
            }
        }
        index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of indexed (positive-weight) points.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// The layout actually in use.
    pub fn layout(&self) -> Layout {
        match self.kind {
            Kind::Line(_) => Layout::Line,
            Kind::Grid(_) => Layout::Grid,
            Kind::Tree(_) => Layout::Tree,
        }
    }

    /// Coordinates of original row `row` in this index's subspace.
    pub fn point(&self, row: usize) -> &[f64] {
        let p = self.position[row];
        assert!(p != NONE, "row {row} is not indexed");
        self.at(p)
    }

    #[inline]
    fn at(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn weight(&self, row: usize) -> f64 {
        let p = self.position[row];
        if p == NONE {
            0.0
        } else {
            self.weights[p]
        }
    }

    /// Distance from row `query_row` to its k-th nearest other point, where
    /// each point counts with its weight.
    pub fn kth_distance(&self, query_row: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let available = self.total_weight - self.weight(query_row);
        if (k as f64) > available {
            return Err(Error::InvalidConfig(format!("k = {k} but only {available} other points are available")));
        }
        let pos = self.position[query_row];
        let q = self.point(query_row);
        let mut best = Nearest::new(k as f64);
        match &self.kind {
            Kind::Line(_) => return Ok(self.line_kth(pos, k as f64)),
            Kind::Grid(g) => self.grid_knn(g, q, pos, &mut best),
            Kind::Tree(t) => {
                // Seed the bound from the query's own leaf, then search the
                // rest of the tree top-down.
                let own = t.leaf_of[pos];
                self.scan_leaf(t, own, q, pos, &mut best);
                let mut off = vec![0.0; self.dim];
                self.knn_rec(t, 0, own, q, pos, &mut best, &mut off, 0.0);
            }
        }
        Ok(best.bound())
    }

    /// Weighted number of other points within `radius` of row `query_row`:
    /// distance `< radius` when `strict`, `<= radius` otherwise.
    pub fn count_within(&self, query_row: usize, radius: f64, strict: bool) -> f64 {
        let pos = self.position[query_row];
        let q = self.point(query_row);
        match &self.kind {
            Kind::Line(prefix) => self.line_count(prefix, pos, radius, strict),
            Kind::Grid(g) => self.grid_count(g, q, pos, radius, strict),
            Kind::Tree(t) => {
                if t.nodes.is_empty() {
                    0.0
                } else {
                    self.count_rec(t, 0, q, pos, radius, strict)
                }
            }
        }
    }

    fn line_kth(&self, pos: usize, k: f64) -> f64 {
        let q = self.coords[pos];
        let mut left = pos;
        let mut right = pos + 1;
        let mut acc = 0.0;
        loop {
            let dl = if left > 0 { (q - self.coords[left - 1]).abs() } else { f64::INFINITY };
            let dr = if right < self.coords.len() { (self.coords[right] - q).abs() } else { f64::INFINITY };
            let d = if dl <= dr {
                left -= 1;
                acc += self.weights[left];
                dl
            } else {
                acc += self.weights[right];
                right += 1;
                dr
            };
            if acc >= k {
                return d;
            }
        }
    }

    fn line_count(&self, prefix: &[f64], pos: usize, r: f64, strict: bool) -> f64 {
        let q = self.coords[pos];
        let inside = |x: f64| {
            let d = (x - q).abs();
            if strict {
                d < r
            } else {
                d <= r
            }
        };
        // Distance shrinks towards `pos` from the left and grows away from it
        // on the right, so both sides are monotone predicates.
        let first = self.coords[..pos].partition_point(|&x| !inside(x));
        let past = pos + 1 + self.coords[pos + 1..].partition_point(|&x| inside(x));
        (prefix[pos] - prefix[first]) + (prefix[past] - prefix[pos + 1])
    }

    #[inline]
    fn scan_cell(&self, g: &Grid, cell: usize, q: &[f64], excl: usize, best: &mut Nearest) {
        for p in g.start[cell]..g.start[cell + 1] {
            if p == excl {
                continue;
            }
            if let Some(d) = distance_below(q, self.at(p), best.bound()) {
                best.push(d, self.weights[p]);
            }
        }
    }

    fn grid_knn(&self, g: &Grid, q: &[f64], excl: usize, best: &mut Nearest) {
        let c = [g.cell_of(0, q[0]) as isize, g.cell_of(1, q[1]) as isize];
        let m = [g.cells[0] as isize, g.cells[1] as isize];
        let id = |i: isize, j: isize| (i as usize) * g.cells[1] + j as usize;
        let mut r: isize = 0;
        loop {
            if r == 0 {
                self.scan_cell(g, id(c[0], c[1]), q, excl, best);
            } else {
                let j_lo = (c[1] - r).max(0);
                let j_hi = (c[1] + r).min(m[1] - 1);
                for i in [c[0] - r, c[0] + r] {
                    if (0..m[0]).contains(&i) {
                        for j in j_lo..=j_hi {
                            self.scan_cell(g, id(i, j), q, excl, best);
                        }
                    }
                }
                let i_lo = (c[0] - r + 1).max(0);
                let i_hi = (c[0] + r - 1).min(m[0] - 1);
                for j in [c[1] - r, c[1] + r] {
                    if (0..m[1]).contains(&j) {
                        for i in i_lo..=i_hi {
                            self.scan_cell(g, id(i, j), q, excl, best);
                        }
                    }
                }
            }
            // Distance from q to the nearest point not yet scanned is at least
            // the distance to the edge of the scanned block of cells.
            let mut outside = f64::INFINITY;
            for a in 0..2 {
                if c[a] - r > 0 {
                    outside = outside.min(q[a] - g.edges[a][(c[a] - r) as usize]);
                }
                if c[a] + r < m[a] - 1 {
                    outside = outside.min(g.edges[a][(c[a] + r + 1) as usize] - q[a]);
                }
            }
            if outside == f64::INFINITY || best.bound() <= outside {
                return;
            }
            r += 1;
        }
    }

    fn grid_count(&self, g: &Grid, q: &[f64], excl: usize, r: f64, strict: bool) -> f64 {
        let span = |a: usize| (g.cell_of(a, q[a] - r - g.margin[a]), g.cell_of(a, q[a] + r + g.margin[a]));
        let (i0, i1) = span(0);
        let (j0, j1) = span(1);
        // With exactly two dimensions a cell lying well inside the query box
        // on both axes is counted whole. The margin keeps rounding in
        // |x - q| from ever mattering for those cells.
        let inside = |a: usize, c: usize| {
            let e = &g.edges[a];
            e[c] >= q[a] - r + g.margin[a] && e[c + 1] <= q[a] + r - g.margin[a]
        };
        let whole_cells = self.dim == 2 && r.is_finite();
        let mut c = 0.0;
        let scan = |from: usize, to: usize, c: &mut f64| {
            for p in from..to {
                if p != excl && within(q, self.at(p), r, strict) {
                    *c += self.weights[p];
                }
            }
        };
        for i in i0..=i1 {
            let row = i * g.cells[1];
            if whole_cells && inside(0, i) {
                let mut ja = j0;
                while ja <= j1 && !inside(1, ja) {
                    ja += 1;
                }
                let mut jb = ja;
                while jb <= j1 && inside(1, jb) {
                    jb += 1;
                }
                // cells [ja, jb) are whole
                if ja < jb {
                    let (from, to) = (g.start[row + ja], g.start[row + jb]);
                    c += g.prefix[to] - g.prefix[from];
                    if (from..to).contains(&excl) {
                        c -= self.weights[excl];
                    }
                }
                scan(g.start[row + j0], g.start[row + ja], &mut c);
                scan(g.start[row + jb], g.start[row + j1 + 1], &mut c);
            } else {
                scan(g.start[row + j0], g.start[row + j1 + 1], &mut c);
            }
        }
        c
    }

    #[inline]
    fn scan_leaf(&self, t: &Tree, node: usize, q: &[f64], excl: usize, heap: &mut Nearest) {
        let n = &t.nodes[node];
        for p in n.start..n.end {
            if p == excl {
                continue;
            }
            if let Some(d) = distance_below(q, self.at(p), heap.bound()) {
                heap.push(d, self.weights[p]);
            }
        }
    }

    /// Top-down search. `off[a]` is a lower bound on the distance along axis
    /// `a` from `q` to the node's region and `rd` their maximum.
    #[allow(clippy::too_many_arguments)]
    fn knn_rec(
        &self,
        t: &Tree,
        node: usize,
        skip: usize,
        q: &[f64],
        excl: usize,
        heap: &mut Nearest,
        off: &mut [f64],
        rd: f64,
    ) {
        let n = &t.nodes[node];
        if n.left == NONE {
            if node != skip {
                self.scan_leaf(t, node, q, excl, heap);
            }
            return;
        }
        let diff = q[n.axis] - n.split;
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.knn_rec(t, near, skip, q, excl, heap, off, rd);
        let gap = diff.abs();
        let rd_far = rd.max(gap);
        if rd_far < heap.bound() {
            let old = off[n.axis];
            off[n.axis] = gap;
            self.knn_rec(t, far, skip, q, excl, heap, off, rd_far);
            off[n.axis] = old;
        }
    }

    fn count_rec(&self, t: &Tree, node: usize, q: &[f64], excl: usize, r: f64, strict: bool) -> f64 {
        let n = &t.nodes[node];
        let lo_d = self.min_dist(t, node, q);
        let outside = if strict { lo_d >= r } else { lo_d > r };
        if outside {
            return 0.0;
        }
        let hi_d = self.max_dist(t, node, q);
        let inside = if strict { hi_d < r } else { hi_d <= r };
        if inside {
            let own = if (n.start..n.end).contains(&excl) { self.weights[excl] } else { 0.0 };
            return n.weight - own;
        }
        if n.left == NONE {
            let mut c = 0.0;
            for p in n.start..n.end {
                if p == excl {
                    continue;
                }
                if within(q, self.at(p), r, strict) {
                    c += self.weights[p];
                }
            }
            return c;
        }
        self.count_rec(t, n.left, q, excl, r, strict) + self.count_rec(t, n.right, q, excl, r, strict)
    }

    #[inline]
    fn min_dist(&self, t: &Tree, node: usize, q: &[f64]) -> f64 {
        let b = &t.bounds[node * 2 * self.dim..(node + 1) * 2 * self.dim];
        let (lo, hi) = b.split_at(self.dim);
        let mut d: f64 = 0.0;
        for j in 0..self.dim {
            let v = q[j];
            if v < lo[j] {
                d = d.max(lo[j] - v);
            } else if v > hi[j] {
                d = d.max(v - hi[j]);
            }
        }
        d
    }

    #[inline]
    fn max_dist(&self, t: &Tree, node: usize, q: &[f64]) -> f64 {
        let b = &t.bounds[node * 2 * self.dim..(node + 1) * 2 * self.dim];
        let (lo, hi) = b.split_at(self.dim);
        let mut d: f64 = 0.0;
        for j in 0..self.dim {
            d = d.max((q[j] - lo[j]).abs()).max((hi[j] - q[j]).abs());
        }
        d
    }
}

impl Grid {
    #[inline]
    fn cell_of(&self, axis: usize, x: f64) -> usize {
        let e = &self.edges[axis];
        e[1..e.len() - 1].partition_point(|&v| v <= x)
    }
}

/// Bucket the active points into a grid over the first two axes. `None` when
/// the grid would be crowded (strongly clustered data), unless `force`.
fn grid_order(raw: &[f64], dim: usize, active: &[usize], force: bool) -> Option<(Vec<usize>, Grid)> {
    let n = active.len();
    let per_axis = ((n as f64 / GRID_OCCUPANCY).sqrt().floor() as usize).clamp(1, GRID_MAX_CELLS_PER_AXIS);
    let mut edges: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut margin = [0.0f64; 2];
    for a in 0..2 {
        let mut v: Vec<f64> = active.iter().map(|&i| raw[i * dim + a]).collect();
        v.sort_unstable_by(f64::total_cmp);
        let mut e = vec![f64::NEG_INFINITY];
        for c in 1..per_axis {
            let x = v[c * n / per_axis];
            if x > *e.last().unwrap() {
                e.push(x);
            }
        }
        e.push(f64::INFINITY);
        let scale = v.first().map_or(0.0, |x: &f64| x.abs()).max(v.last().map_or(0.0, |x: &f64| x.abs()));
        margin[a] = 1e-12 * scale.max(f64::MIN_POSITIVE);
        edges[a] = e;
    }
    let cells = [edges[0].len() - 1, edges[1].len() - 1];
    let mut grid = Grid { edges, margin, cells, start: vec![0; cells[0] * cells[1] + 1], prefix: Vec::new() };
    let cell_ids: Vec<usize> =
        active.iter().map(|&i| grid.cell_of(0, raw[i * dim]) * cells[1] + grid.cell_of(1, raw[i * dim + 1])).collect();
    for &c in &cell_ids {
        grid.start[c + 1] += 1;
    }
    let crowding: f64 = grid.start.iter().map(|&c| (c * c) as f64).sum::<f64>() / n.max(1) as f64;
    if crowding > GRID_CROWDING_LIMIT && !force {
        return None;
    }
    for c in 0..cells[0] * cells[1] {
        grid.start[c + 1] += grid.start[c];
    }
    let mut fill = grid.start.clone();
    let mut order = vec![0; n];
    for (&row, &c) in active.iter().zip(&cell_ids) {
        order[fill[c]] = row;
        fill[c] += 1;
    }
    Some((order, grid))
}

fn prefix_sums(weights: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &w in weights {
        acc += w;
        prefix.push(acc);
    }
    prefix
}

fn tree_order(raw: &[f64], dim: usize, mut order: Vec<usize>) -> (Vec<usize>, Kind) {
    let mut tree = Tree { nodes: Vec::new(), leaf_of: Vec::new(), bounds: Vec::new() };
    if !order.is_empty() {
        let len = order.len();
        split(raw, dim, &mut order, 0, len, &mut tree);
    }
    (order, Kind::Tree(tree))
}

fn fill_weights(tree: &mut Tree, weights: &[f64], node: usize) -> f64 {
    let (left, right, start, end) = {
        let n = &tree.nodes[node];
        (n.left, n.right, n.start, n.end)
    };
    let w = if left == NONE {
        weights[start..end].iter().sum()
    } else {
        fill_weights(tree, weights, left) + fill_weights(tree, weights, right)
    };
    tree.nodes[node].weight = w;
    w
}

fn split(raw: &[f64], dim: usize, order: &mut [usize], start: usize, end: usize, tree: &mut Tree) -> usize {
    let id = tree.nodes.len();
    tree.nodes.push(Node { start, end, left: NONE, right: NONE, weight: 0.0, axis: 0, split: 0.0 });
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in &order[start..end] {
        for j in 0..dim {
            let v = raw[i * dim + j];
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    tree.bounds.extend_from_slice(&lo);
    tree.bounds.extend_from_slice(&hi);
    if end - start <= LEAF_SIZE {
        return id;
    }
    let axis = (0..dim).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
    if hi[axis] == lo[axis] {
        // All points coincide; keep them in one leaf.
        return id;
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| raw[a * dim + axis].total_cmp(&raw[b * dim + axis]));
    tree.nodes[id].axis = axis;
    tree.nodes[id].split = raw[order[mid] * dim + axis];
    let left = split(raw, dim, order, start, mid, tree);
    let right = split(raw, dim, order, mid, end, tree);
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    id
}

/// The nearest candidates seen so far, sorted by distance, trimmed so that
/// dropping the farthest would leave less than `target` weight.
struct Nearest {
    target: f64,
    items: Vec<(f64, f64)>,
    total: f64,
}

impl Nearest {
    fn new(target: f64) -> Self {
        Nearest { target, items: Vec::with_capacity(target as usize + 2), total: 0.0 }
    }

    #[inline]
    fn bound(&self) -> f64 {
        if self.total >= self.target {
            self.items[self.items.len() - 1].0
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    fn push(&mut self, d: f64, w: f64) {
        let mut i = self.items.len();
        while i > 0 && self.items[i - 1].0 > d {
            i -= 1;
        }
        self.items.insert(i, (d, w));
        self.total += w;
        while let Some(&(_, last)) = self.items.last() {
            if self.total - last >= self.target {
                self.total -= last;
                self.items.pop();
            } else {
                break;
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod brute {
    //! Naive O(N²) reference used by the tests.
    use super::max_norm;

    pub fn kth_distance(points: &[Vec<f64>], weights: &[f64], q: usize, k: usize) -> f64 {
        let mut d: Vec<(f64, f64)> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != q && weights[*i] > 0.0)
            .map(|(i, p)| (max_norm(&points[q], p), weights[i]))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (dist, w) in d {
            acc += w;
            if acc >= k as f64 {
                return dist;
            }
        }
        f64::INFINITY
    }

    pub fn count_within(points: &[Vec<f64>], weights: &[f64], q: usize, r: f64, strict: bool) -> f64 {
        points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != q)
            .filter(|(_, p)| {
                let d = max_norm(&points[q], p);
                if strict {
                    d < r
                } else {
                    d <= r
                }
            })
            .map(|(i, _)| weights[i])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> SampleMatrix {
        SampleMatrix::from_column(points).unwrap()
    }

    fn random_points(n: usize, d: usize, seed: u64) -> (SampleMatrix, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        (SampleMatrix::from_rows(&rows).unwrap(), rows)
    }

    #[test]
    fn line_examples() {
        let idx = NeighborIndex::new(&line(&[0.0, 1.0, 3.0]));
        assert_eq!(idx.kth_distance(0, 1).unwrap(), 1.0);
        assert_eq!(idx.kth_distance(0, 2).unwrap(), 3.0);
        assert_eq!(idx.count_within(0, 2.0, true), 1.0);
        assert_eq!(idx.count_within(0, 0.0, true), 0.0);
        assert_eq!(idx.count_within(0, 1.0, false), 1.0);
        assert_eq!(idx.count_within(0, 1.0, true), 0.0);
    }

    fn layouts_for(d: usize) -> Vec<Layout> {
        if d == 1 {
            vec![Layout::Line, Layout::Tree]
        } else {
            vec![Layout::Grid, Layout::Tree]
        }
    }

    #[test]
    fn every_layout_matches_brute_force() {
        for d in 1..=4 {
            let (m, rows) = random_points(300, d, 20 + d as u64);
            let cols: Vec<usize> = (0..d).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let w: Vec<f64> = (0..300).map(|_| rng.random_range(0..3) as f64).collect();
            let ones = vec![1.0; 300];
            for layout in layouts_for(d) {
                for weights in [&ones, &w] {
                    let idx = NeighborIndex::with_layout(&m, &cols, Some(weights), layout);
                    assert_eq!(idx.layout(), layout);
                    for q in 0..300 {
                        if weights[q] == 0.0 {
                            continue;
                        }
                        for k in [1, 4, 7] {
                            assert_eq!(
                                idx.kth_distance(q, k).unwrap(),
                                brute::kth_distance(&rows, weights, q, k),
                                "d={d} {layout:?} q={q} k={k}"
                            );
                        }
                        for r in [0.0, 0.03, 0.2, 2.0] {
                            for strict in [true, false] {
                                assert_eq!(
                                    idx.count_within(q, r, strict),
                                    brute::count_within(&rows, weights, q, r, strict),
                                    "d={d} {layout:?} q={q} r={r}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ties_and_duplicates_on_every_layout() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 4) as f64, (i % 3) as f64]).collect();
        let m = SampleMatrix::from_rows(&rows).unwrap();
        let ones = vec![1.0; 60];
        for layout in [Layout::Grid, Layout::Tree] {
            let idx = NeighborIndex::with_layout(&m, &[0, 1], None, layout);
            for q in 0..60 {
                for k in [1, 5, 20] {
                    assert_eq!(idx.kth_distance(q, k).unwrap(), brute::kth_distance(&rows, &ones, q, k));
                }
                for r in [0.0, 1.0, 1.5] {
                    assert_eq!(idx.count_within(q, r, true), brute::count_within(&rows, &ones, q, r, true));
                    assert_eq!(idx.count_within(q, r, false), brute::count_within(&rows, &ones, q, r, false));
                }
            }
        }
        let col: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0]]).collect();
        let idx = NeighborIndex::new(&SampleMatrix::from_rows(&col).unwrap());
        assert_eq!(idx.layout(), Layout::Line);
        for q in 0..60 {
            for k in [1, 14, 15, 16, 40] {
                assert_eq!(idx.kth_distance(q, k).unwrap(), brute::kth_distance(&col, &ones, q, k));
            }
            assert_eq!(idx.count_within(q, 1.0, true), brute::count_within(&col, &ones, q, 1.0, true));
            assert_eq!(idx.count_within(q, 1.0, false), brute::count_within(&col, &ones, q, 1.0, false));
        }
    }

    #[test]
    fn clustered_data_falls_back_to_tree() {
        let rows: Vec<Vec<f64>> =
            (0..2000).map(|i| vec![if i == 0 { 1e6 } else { (i % 2) as f64 * 1e-6 }, (i % 3) as f64 * 1e-6]).collect();
        let m = SampleMatrix::from_rows(&rows).unwrap();
        assert_eq!(NeighborIndex::new(&m).layout(), Layout::Tree);
        let (spread, _) = random_points(2000, 2, 30);
        assert_eq!(NeighborIndex::new(&spread).layout(), Layout::Grid);
        let (high, _) = random_points(100, 8, 31);
        assert_eq!(NeighborIndex::new(&high).layout(), Layout::Tree);
    }

    #[test]
    fn offset_coordinates_stay_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![1e6 + rng.random::<f64>() * 1e-3, -3e5 + rng.random::<f64>() * 1e-3, rng.random::<f64>()])
            .collect();
        let m = SampleMatrix::from_rows(&rows).unwrap();
        let idx = NeighborIndex::new(&m);
        let ones = vec![1.0; 400];
        for q in 0..400 {
            assert_eq!(idx.kth_distance(q, 4).unwrap(), brute::kth_distance(&rows, &ones, q, 4));
            let r = idx.kth_distance(q, 4).unwrap();
            assert_eq!(idx.count_within(q, r, true), brute::count_within(&rows, &ones, q, r, true));
        }
    }

    #[test]
    fn k_too_large() {
        let idx = NeighborIndex::new(&line(&[0.0, 1.0, 3.0]));
        assert!(matches!(idx.kth_distance(0, 3), Err(Error::InvalidConfig(_))));
        assert!(matches!(idx.kth_distance(0, 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn kth_distance_matches_brute_force_2d() {
        let (m, rows) = random_points(100, 2, 3);
        let idx = NeighborIndex::new(&m);
        let ones = vec![1.0; rows.len()];
        for q in 0..rows.len() {
            let expect = brute::kth_distance(&rows, &ones, q, 4);
            assert_eq!(idx.kth_distance(q, 4).unwrap(), expect);
        }
    }

    #[test]
    fn count_within_matches_brute_force() {
        let (m, rows) = random_points(100, 3, 4);
        let idx = NeighborIndex::new(&m);
        let ones = vec![1.0; rows.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let q = rng.random_range(0..rows.len());
            let r: f64 = rng.random::<f64>() * 0.6;
            let strict = rng.random::<bool>();
            assert_eq!(idx.count_within(q, r, strict), brute::count_within(&rows, &ones, q, r, strict));
        }
    }

    #[test]
    fn marginal_subspace_uses_only_selected_columns() {
        let (m, rows) = random_points(200, 3, 6);
        let idx = NeighborIndex::over_columns(&m, &[0, 2]);
        let sub: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[2]]).collect();
        let ones = vec![1.0; rows.len()];
        for q in (0..200).step_by(7) {
            assert_eq!(idx.kth_distance(q, 3).unwrap(), brute::kth_distance(&sub, &ones, q, 3));
            assert_eq!(idx.count_within(q, 0.1, true), brute::count_within(&sub, &ones, q, 0.1, true));
        }
    }

    #[test]
    fn weighted_queries_match_brute_force() {
        let (m, rows) = random_points(150, 2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w: Vec<f64> = (0..150).map(|_| rng.random_range(0..4) as f64).collect();
        let idx = NeighborIndex::weighted(&m, &[0, 1], &w);
        for q in 0..150 {
            if w[q] == 0.0 {
                continue;
            }
            for k in [1, 4, 9] {
                assert_eq!(idx.kth_distance(q, k).unwrap(), brute::kth_distance(&rows, &w, q, k));
            }
            let masked: Vec<f64> = w.clone();
            assert_eq!(idx.count_within(q, 0.15, true), brute::count_within(&rows, &masked, q, 0.15, true));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
            (1usize..=5)
                .prop_flat_map(|d| (prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 3..120), Just(d)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn agrees_with_brute_force((rows, d) in cloud(), k in 1usize..6, r in 0.0f64..8.0) {
                prop_assume!(k < rows.len());
                let m = SampleMatrix::from_rows(&rows).unwrap();
                let ones = vec![1.0; rows.len()];
                let cols: Vec<usize> = (0..d).collect();
                for layout in layouts_for(d) {
                    let idx = NeighborIndex::with_layout(&m, &cols, None, layout);
                    for q in 0..rows.len() {
                        prop_assert_eq!(idx.kth_distance(q, k).unwrap(), brute::kth_distance(&rows, &ones, q, k));
                        prop_assert_eq!(idx.count_within(q, r, true), brute::count_within(&rows, &ones, q, r, true));
                        prop_assert_eq!(idx.count_within(q, r, false), brute::count_within(&rows, &ones, q, r, false));
                    }
                }
            }

            #[test]
            fn monotone_in_radius_and_k((rows, _d) in cloud()) {
                let m = SampleMatrix::from_rows(&rows).unwrap();
                let idx = NeighborIndex::new(&m);
                let n = rows.len();
                let mut prev_d = 0.0;
                for k in 1..n {
                    let d = idx.kth_distance(0, k).unwrap();
                    prop_assert!(d >= prev_d);
                    prev_d = d;
                }
                let mut prev_c = 0.0;
                for step in 0..40 {
                    let c = idx.count_within(0, step as f64 * 0.5, true);
                    prop_assert!(c >= prev_c);
                    prev_c = c;
                }
            }
        }
    }
}
