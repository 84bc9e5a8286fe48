use super::SampleSet;

const LEAF_SIZE: usize = 8;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static k-d tree over the raw coordinates of a [`SampleSet`].
///
/// Pruning uses the distance to the splitting plane, which lower-bounds the
/// r-norm distance for every `r >= 1`.
pub struct KdTree<'a> {
    data: &'a SampleSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn build(data: &'a SampleSet) -> Self {
        let mut tree = KdTree {
            data,
            order: (0..data.len()).collect(),
            nodes: Vec::with_capacity(2 * data.len() / LEAF_SIZE + 1),
        };
        tree.build_node(0, data.len());
        tree
    }

    pub fn data(&self) -> &'a SampleSet {
        self.data
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let data = self.data;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            data.point(a)[axis].total_cmp(&data.point(b)[axis])
        });
        let value = data.point(self.order[mid])[axis];
        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let d = self.data.dimension();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (j, &c) in self.data.point(i).iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        (0..d)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0)
    }

    /// k-th smallest distance from `query`, skipping `exclude`. Caller has
    /// already validated `k` and the query dimension.
    pub(crate) fn kth_distance(&self, query: &[f64], k: usize, exclude: Option<usize>) -> f64 {
        let mut best = Best::new(k);
        self.search(0, query, exclude, &mut best);
        best.worst()
    }

    fn search(&self, node: usize, query: &[f64], exclude: Option<usize>, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let norm = self.data.metric().norm;
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    best.offer(norm.distance(query, self.data.point(i)), i);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, exclude, best);
                if diff.abs() <= best.worst() {
                    self.search(far, query, exclude, best);
                }
            }
        }
    }
}

/// The k smallest (distance, index) pairs seen so far, sorted ascending.
/// Ties go to the lower index.
struct Best {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Best {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    fn offer(&mut self, dist: f64, index: usize) {
        let key = (dist, index);
        if self.items.len() == self.k {
            let last = self.items[self.k - 1];
            if !less(key, last) {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&it| less(it, key));
        self.items.insert(pos, key);
    }
}

fn less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}
