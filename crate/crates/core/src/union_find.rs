//! Disjoint-set forest used for orbit partitions and globalization quotients.

/// Union-find over `0..len` with union by size and path compression.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self { parent: (0..len).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; returns false if they already coincided.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }

    /// Classes sorted by their least member, each listed in increasing order.
    ///
    /// The least member doubles as the canonical representative, so the output
    /// depends only on the partition and not on the union order.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = classes.len();
                classes.push(Vec::new());
            }
            classes[slot[r]].push(x);
        }
        classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_are_canonical() {
        let mut a = UnionFind::new(6);
        a.union(4, 1);
        a.union(5, 3);
        a.union(1, 0);
        let mut b = UnionFind::new(6);
        b.union(0, 1);
        b.union(3, 5);
        b.union(0, 4);
        assert_eq!(a.classes(), vec![vec![0, 1, 4], vec![2], vec![3, 5]]);
        assert_eq!(a.classes(), b.classes());
        assert!(!a.union(0, 4));
    }
}
