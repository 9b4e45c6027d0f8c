/// A deterministic decision per `(node, bin)` cell; `None` marks terminal cells.
///
/// Entries are either action indices or successor node ids depending on the
/// producer: the learner emits action indices, the oracle emits successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyMap {
    nodes: usize,
    bins: usize,
    choices: Vec<Option<usize>>,
}

impl PolicyMap {
    pub fn new(nodes: usize, bins: usize) -> Self {
        Self {
            nodes,
            bins,
            choices: vec![None; nodes * bins],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn get(&self, node: usize, bin: usize) -> Option<usize> {
        self.choices[node * self.bins + bin]
    }

    pub fn set(&mut self, node: usize, bin: usize, choice: Option<usize>) {
        self.choices[node * self.bins + bin] = choice;
    }

    pub fn row(&self, node: usize) -> &[Option<usize>] {
        &self.choices[node * self.bins..(node + 1) * self.bins]
    }
}
