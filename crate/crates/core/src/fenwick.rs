//! Binary indexed tree over non-negative integer weights, used to pick a
//! site with probability proportional to its weight in `O(log n)`.

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Fenwick { tree: vec![0; len + 1], total: 0 }
    }

    pub fn from_weights(weights: impl ExactSizeIterator<Item = u64>) -> Self {
        let mut tree = vec![0u64; weights.len() + 1];
        let mut total = 0u64;
        for (i, w) in weights.enumerate() {
            tree[i + 1] = w;
            total += w;
        }
        let n = tree.len() - 1;
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Fenwick { tree, total }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Adds `delta` to the weight at `index`. The resulting weight must stay
    /// non-negative.
    pub fn add(&mut self, index: usize, delta: i64) {
        if delta == 0 {
            return;
        }
        self.total = self.total.wrapping_add_signed(delta);
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of weights at indices `< end`.
    #[cfg(test)]
    pub fn prefix(&self, end: usize) -> u64 {
        let mut i = end.min(self.len());
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    /// Requires `target < total()`.
    pub fn find(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.len();
        let mut pos = 0usize;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_respects_weights() {
        let f = Fenwick::from_weights([0u64, 3, 0, 2, 5].into_iter());
        assert_eq!(f.total(), 10);
        let picks: Vec<usize> = (0..10).map(|t| f.find(t)).collect();
        assert_eq!(picks, vec![1, 1, 1, 3, 3, 4, 4, 4, 4, 4]);
    }

    proptest! {
        #[test]
        fn matches_naive_prefix_sums(ws in proptest::collection::vec(0u64..50, 1..64),
                                     edits in proptest::collection::vec((0usize..64, 0u64..50), 0..40)) {
            let mut naive = ws.clone();
            let mut f = Fenwick::new(ws.len());
            for (i, &w) in ws.iter().enumerate() {
                f.add(i, w as i64);
            }
            for (i, w) in edits {
                let i = i % naive.len();
                f.add(i, w as i64 - naive[i] as i64);
                naive[i] = w;
            }
            prop_assert_eq!(f.total(), naive.iter().sum::<u64>());
            for end in 0..=naive.len() {
                prop_assert_eq!(f.prefix(end), naive[..end].iter().sum::<u64>());
            }
            let rebuilt = Fenwick::from_weights(naive.iter().copied());
            prop_assert_eq!(&rebuilt, &f);
            for t in 0..f.total() {
                let i = f.find(t);
                prop_assert!(naive[..i].iter().sum::<u64>() <= t);
                prop_assert!(naive[..=i].iter().sum::<u64>() > t);
            }
        }
    }
}
