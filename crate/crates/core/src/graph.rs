//! Small digraph helpers shared by the chain, product and end-component code.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Adjacency-list digraph over nodes `0..n`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph { succ: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Adds `from -> to`; duplicate edges are ignored.
    pub fn add_edge(&mut self, from: usize, to: usize) {
        if !self.succ[from].contains(&to) {
            self.succ[from].push(to);
        }
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succ[node]
    }

    pub fn reversed(&self) -> Digraph {
        let mut rev = Digraph::new(self.len());
        for (from, tos) in self.succ.iter().enumerate() {
            for &to in tos {
                rev.succ[to].push(from);
            }
        }
        rev
    }

    /// Nodes reachable from any of `sources` (sources included).
    pub fn reachable_from(&self, sources: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(node) = queue.pop_front() {
            for &next in &self.succ[node] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Breadth-first distance from `sources`; `None` when unreachable.
    pub fn distances_from(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(node) = queue.pop_front() {
            let d = dist[node].unwrap_or(0);
            for &next in &self.succ[node] {
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Strongly connected components (iterative Tarjan).
    pub fn sccs(&self) -> Sccs {
        const UNVISITED: usize = usize::MAX;
        let n = self.len();
        let mut index = vec![UNVISITED; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut component = vec![0usize; n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut counter = 0usize;
        // (node, next successor position)
        let mut call: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if index[root] != UNVISITED {
                continue;
            }
            call.push((root, 0));
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (node, ref mut pos)) = call.last_mut() {
                if *pos < self.succ[node].len() {
                    let next = self.succ[node][*pos];
                    *pos += 1;
                    if index[next] == UNVISITED {
                        index[next] = counter;
                        low[next] = counter;
                        counter += 1;
                        stack.push(next);
                        on_stack[next] = true;
                        call.push((next, 0));
                    } else if on_stack[next] {
                        low[node] = low[node].min(index[next]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[node]);
                }
                if low[node] == index[node] {
                    let id = components.len();
                    let mut members = Vec::new();
                    while let Some(member) = stack.pop() {
                        on_stack[member] = false;
                        component[member] = id;
                        members.push(member);
                        if member == node {
                            break;
                        }
                    }
                    members.sort_unstable();
                    components.push(members);
                }
            }
        }
        Sccs { component, components }
    }
}

/// Result of an SCC decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sccs {
    /// Component id per node.
    pub component: Vec<usize>,
    /// Members of each component, sorted.
    pub components: Vec<Vec<usize>>,
}

impl Sccs {
    /// Components with no edge leaving them.
    pub fn bottom(&self, graph: &Digraph) -> Vec<usize> {
        (0..self.components.len())
            .filter(|&c| {
                self.components[c]
                    .iter()
                    .all(|&node| graph.successors(node).iter().all(|&next| self.component[next] == c))
            })
            .collect()
    }
}
