use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Binary Huffman code over the vocabulary, used by hierarchical softmax.
///
/// Internal nodes are numbered `0..len-1`; the root is the last one built.
/// Each leaf stores its path from the root as (internal node, code bit)
/// pairs. Bit `false` means the branch scored by `sigmoid(+x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    paths: Vec<Vec<(u32, bool)>>,
    internal: usize,
}

impl HuffmanTree {
    /// Builds the tree from leaf counts. Ties are broken by creation order
    /// so the code is a deterministic function of the counts.
    pub fn build(counts: &[u64]) -> Self {
        let n = counts.len();
        if n <= 1 {
            return HuffmanTree {
                paths: vec![Vec::new(); n],
                internal: 0,
            };
        }

        // Nodes 0..n are leaves, n.. are internal.
        let mut parent = vec![0usize; 2 * n - 1];
        let mut bit = vec![false; 2 * n - 1];
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| Reverse((c, i)))
            .collect();

        let mut next = n;
        while heap.len() > 1 {
            let Reverse((c0, a)) = heap.pop().unwrap();
            let Reverse((c1, b)) = heap.pop().unwrap();
            parent[a] = next;
            parent[b] = next;
            bit[a] = false;
            bit[b] = true;
            heap.push(Reverse((c0 + c1, next)));
            next += 1;
        }
        let root = next - 1;

        let paths = (0..n)
            .map(|leaf| {
                let mut path = Vec::new();
                let mut node = leaf;
                while node != root {
                    path.push(((parent[node] - n) as u32, bit[node]));
                    node = parent[node];
                }
                path.reverse();
                path
            })
            .collect();

        HuffmanTree {
            paths,
            internal: n - 1,
        }
    }

    pub fn num_internal(&self) -> usize {
        self.internal
    }

    pub fn num_leaves(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, leaf: u32) -> &[(u32, bool)] {
        &self.paths[leaf as usize]
    }
}
