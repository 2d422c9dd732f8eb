//! Arena-allocated search tree.
//!
//! Decision nodes live in one vector; children are keyed by the pair
//! (action, sampled next state) and chained through sibling links. Chance
//! nodes are implicit. Per-action statistics sit in a flat vector at
//! `node * A + action`. Clearing keeps the allocations, so one tree serves
//! many consecutive searches.

use crate::erm::{ErmAccumulator, RiskParam};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub state: u32,
    pub depth: u32,
    pub visits: u64,
    pub edge_action: u32,
    pub first_child: u32,
    pub next_sibling: u32,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) stats: Vec<ErmAccumulator>,
    pub(crate) num_actions: usize,
    // Accumulator parameter per depth.
    betas: Vec<RiskParam>,
}

impl SearchTree {
    pub(crate) fn new(num_actions: usize) -> Self {
        Self { nodes: Vec::new(), stats: Vec::new(), num_actions, betas: Vec::new() }
    }

    pub(crate) fn reset(&mut self, root_state: usize, betas: Vec<RiskParam>) {
        self.nodes.clear();
        self.stats.clear();
        self.betas = betas;
        self.add_node(root_state, 0, NONE);
    }

    fn add_node(&mut self, state: usize, depth: usize, edge_action: u32) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            state: state as u32,
            depth: depth as u32,
            visits: 0,
            edge_action,
            first_child: NONE,
            next_sibling: NONE,
        });
        let acc = ErmAccumulator::new(self.betas[depth]);
        self.stats.extend(std::iter::repeat_n(acc, self.num_actions));
        id
    }

    /// Child of `parent` reached by `(action, state)`, created if absent.
    pub(crate) fn child(&mut self, parent: u32, action: usize, state: usize) -> u32 {
        let p = parent as usize;
        let mut cur = self.nodes[p].first_child;
        while cur != NONE {
            let n = &self.nodes[cur as usize];
            if n.edge_action as usize == action && n.state as usize == state {
                return cur;
            }
            cur = n.next_sibling;
        }
        let depth = self.nodes[p].depth as usize + 1;
        let id = self.add_node(state, depth, action as u32);
        self.nodes[id as usize].next_sibling = self.nodes[p].first_child;
        self.nodes[p].first_child = id;
        id
    }

    #[inline]
    pub(crate) fn stats_of(&self, node: u32) -> &[ErmAccumulator] {
        let i = node as usize * self.num_actions;
        &self.stats[i..i + self.num_actions]
    }

    #[inline]
    pub(crate) fn record(&mut self, node: u32, action: usize, x: f64) {
        self.nodes[node as usize].visits += 1;
        self.stats[node as usize * self.num_actions + action].push(x);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Option<DecisionNode<'_>> {
        (!self.nodes.is_empty()).then_some(DecisionNode { tree: self, id: 0 })
    }

    /// Every node, in creation order.
    pub fn nodes(&self) -> impl Iterator<Item = DecisionNode<'_>> {
        (0..self.nodes.len() as u32).map(move |id| DecisionNode { tree: self, id })
    }
}

/// Read-only view of one decision node.
#[derive(Clone, Copy)]
pub struct DecisionNode<'t> {
    tree: &'t SearchTree,
    id: u32,
}

impl<'t> DecisionNode<'t> {
    fn node(&self) -> &'t Node {
        &self.tree.nodes[self.id as usize]
    }

    pub fn state(&self) -> usize {
        self.node().state as usize
    }

    pub fn depth(&self) -> usize {
        self.node().depth as usize
    }

    /// `N(s_h)`.
    pub fn visits(&self) -> u64 {
        self.node().visits
    }

    pub fn num_actions(&self) -> usize {
        self.tree.num_actions
    }

    /// `N(s_h, a)`.
    pub fn action_visits(&self, action: usize) -> u64 {
        self.accumulator(action).count()
    }

    pub fn accumulator(&self, action: usize) -> &'t ErmAccumulator {
        &self.tree.stats_of(self.id)[action]
    }

    pub fn action_value(&self, action: usize) -> Option<f64> {
        self.accumulator(action).value().ok()
    }

    /// `(action, next state, child)` for every expanded child.
    pub fn children(&self) -> impl Iterator<Item = (usize, usize, DecisionNode<'t>)> + 't {
        let tree = self.tree;
        let mut cur = self.node().first_child;
        std::iter::from_fn(move || {
            if cur == NONE {
                return None;
            }
            let id = cur;
            let n = &tree.nodes[id as usize];
            cur = n.next_sibling;
            Some((n.edge_action as usize, n.state as usize, DecisionNode { tree, id }))
        })
    }
}

impl std::fmt::Debug for DecisionNode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecisionNode")
            .field("state", &self.state())
            .field("depth", &self.depth())
            .field("visits", &self.visits())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_are_deduplicated() {
        let b = RiskParam::new(1.0).unwrap();
        let mut t = SearchTree::new(2);
        t.reset(0, vec![b; 3]);
        let c1 = t.child(0, 1, 2);
        let c2 = t.child(0, 0, 2);
        assert_ne!(c1, c2);
        assert_eq!(t.child(0, 1, 2), c1);
        assert_eq!(t.len(), 3);
        let root = t.root().unwrap();
        let mut kids: Vec<_> = root.children().map(|(a, s, n)| (a, s, n.depth())).collect();
        kids.sort();
        assert_eq!(kids, vec![(0, 2, 1), (1, 2, 1)]);
        t.record(0, 1, 3.0);
        assert_eq!(t.root().unwrap().visits(), 1);
        assert_eq!(t.root().unwrap().action_value(1), Some(3.0));
        assert_eq!(t.root().unwrap().action_value(0), None);
        t.reset(1, vec![b; 3]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.root().unwrap().state(), 1);
    }
}
