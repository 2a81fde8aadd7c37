//! Exact k-nearest-neighbour search in the plane under the max norm.

const LEAF_SIZE: usize = 8;

/// Below this many points queries scan linearly.
pub const LINEAR_SCAN_BELOW: usize = 64;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

/// A static 2-d tree over borrowed coordinates.
#[derive(Debug)]
pub struct KdTree<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    order: Vec<usize>,
    root: Option<Node>,
}

#[inline]
fn coord(xs: &[f64], ys: &[f64], dim: usize, i: usize) -> f64 {
    if dim == 0 {
        xs[i]
    } else {
        ys[i]
    }
}

#[inline]
pub(crate) fn max_dist(xs: &[f64], ys: &[f64], i: usize, j: usize) -> f64 {
    (xs[i] - xs[j]).abs().max((ys[i] - ys[j]).abs())
}

impl<'a> KdTree<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let root = if xs.len() < LINEAR_SCAN_BELOW {
            None
        } else {
            let n = order.len();
            Some(build(xs, ys, &mut order, 0, n))
        };
        KdTree { xs, ys, order, root }
    }

    /// Distance from point `i` to its `k`-th nearest other point.
    pub fn kth_distance(&self, i: usize, k: usize) -> f64 {
        debug_assert!(k >= 1 && k < self.xs.len());
        let mut best = Best::new(k);
        match &self.root {
            None => {
                for j in 0..self.xs.len() {
                    if j != i {
                        best.offer(max_dist(self.xs, self.ys, i, j));
                    }
                }
            }
            Some(root) => self.search(root, i, &mut best),
        }
        best.worst()
    }

    fn search(&self, node: &Node, i: usize, best: &mut Best) {
        match node {
            Node::Leaf { start, end } => {
                for &j in &self.order[*start..*end] {
                    if j != i {
                        best.offer(max_dist(self.xs, self.ys, i, j));
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let q = coord(self.xs, self.ys, *dim, i);
                let diff = q - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, i, best);
                if diff.abs() <= best.worst() {
                    self.search(far, i, best);
                }
            }
        }
    }
}

fn build(xs: &[f64], ys: &[f64], order: &mut [usize], start: usize, end: usize) -> Node {
    let slice = &mut order[start..end];
    if slice.len() <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let spread = |dim: usize| {
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = coord(xs, ys, dim, i);
            (lo.min(v), hi.max(v))
        });
        hi - lo
    };
    let dim = if spread(0) >= spread(1) { 0 } else { 1 };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        coord(xs, ys, dim, a).total_cmp(&coord(xs, ys, dim, b))
    });
    let value = coord(xs, ys, dim, slice[mid]);
    // Points left of `mid` are <= value, points from `mid` on are >= value.
    Node::Split {
        dim,
        value,
        left: Box::new(build(xs, ys, order, start, start + mid)),
        right: Box::new(build(xs, ys, order, start + mid, end)),
    }
}

/// The k smallest distances seen so far, kept sorted.
struct Best {
    k: usize,
    dists: Vec<f64>,
}

impl Best {
    fn new(k: usize) -> Self {
        Best { k, dists: Vec::with_capacity(k + 1) }
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.dists.len() < self.k {
            f64::INFINITY
        } else {
            self.dists[self.k - 1]
        }
    }

    #[inline]
    fn offer(&mut self, d: f64) {
        if d >= self.worst() {
            return;
        }
        let pos = self.dists.partition_point(|&x| x <= d);
        self.dists.insert(pos, d);
        self.dists.truncate(self.k);
    }
}
