/// Max-segment tree over the last monad of nodes in canonical order.
///
/// Canonical order sorts by first monad, so "nodes starting at or before
/// monad m" is a prefix of positions. Within such a prefix the tree finds
/// every position whose last monad reaches some bound, pruning subtrees
/// that cannot. Results come out in ascending position order.
#[derive(Debug, Clone)]
pub(crate) struct ContainmentIndex {
    size: usize,
    tree: Vec<u32>,
}

impl ContainmentIndex {
    pub fn new(last_by_pos: &[u32]) -> Self {
        let size = last_by_pos.len().next_power_of_two().max(1);
        let mut tree = vec![0u32; 2 * size];
        tree[size..size + last_by_pos.len()].copy_from_slice(last_by_pos);
        for i in (1..size).rev() {
            tree[i] = tree[2 * i].max(tree[2 * i + 1]);
        }
        ContainmentIndex { size, tree }
    }

    /// Positions `p < end` with `last[p] >= min_last`, ascending.
    pub fn reaching(&self, end: usize, min_last: u32, out: &mut Vec<u32>) {
        if end == 0 {
            return;
        }
        self.walk(1, 0, self.size, end, min_last, out);
    }

    fn walk(&self, node: usize, lo: usize, hi: usize, end: usize, min_last: u32, out: &mut Vec<u32>) {
        if lo >= end || self.tree[node] < min_last {
            return;
        }
        if hi - lo == 1 {
            out.push(lo as u32);
            return;
        }
        let mid = (lo + hi) / 2;
        self.walk(2 * node, lo, mid, end, min_last, out);
        self.walk(2 * node + 1, mid, hi, end, min_last, out);
    }
}
