//! Bisection history of a triangulation.
//!
//! Every triangle of the current mesh is a leaf of a binary forest. A node
//! stores its vertices with the refinement edge between local vertices 0 and 1
//! and the newest vertex at local position 2. Bisecting `[a, b, c]` at the
//! midpoint `m` of `(a, b)` produces the children `[c, a, m]` and `[b, c, m]`,
//! which keep the orientation of the parent and again carry their refinement
//! edge first.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestNode {
    pub vertices: [usize; 3],
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    /// Vertex created when this node was bisected.
    pub midpoint: Option<usize>,
}

impl ForestNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn refinement_edge(&self) -> (usize, usize) {
        (self.vertices[0], self.vertices[1])
    }
}

#[derive(Debug, Clone, Default)]
pub struct BisectionForest {
    nodes: Vec<Option<ForestNode>>,
    free: Vec<usize>,
}

impl BisectionForest {
    /// One root per triangle, in triangle order.
    pub fn from_roots(triangles: &[[usize; 3]]) -> Self {
        let nodes = triangles
            .iter()
            .map(|&vertices| {
                Some(ForestNode {
                    vertices,
                    parent: None,
                    children: None,
                    midpoint: None,
                })
            })
            .collect();
        BisectionForest {
            nodes,
            free: Vec::new(),
        }
    }

    pub fn node(&self, id: usize) -> Result<&ForestNode> {
        self.nodes
            .get(id)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Forest(format!("node {id} does not exist")))
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Live nodes with their ids.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &ForestNode)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    pub fn depth(&self, id: usize) -> Result<usize> {
        let mut depth = 0;
        let mut cur = self.node(id)?;
        while let Some(p) = cur.parent {
            depth += 1;
            cur = self.node(p)?;
        }
        Ok(depth)
    }

    fn insert(&mut self, node: ForestNode) -> usize {
        if let Some(id) = self.free.pop() {
            self.nodes[id] = Some(node);
            id
        } else {
            self.nodes.push(Some(node));
            self.nodes.len() - 1
        }
    }

    /// Bisects leaf `id` at vertex `midpoint`; returns the two children.
    pub fn bisect(&mut self, id: usize, midpoint: usize) -> Result<[usize; 2]> {
        let node = self.node(id)?.clone();
        if !node.is_leaf() {
            return Err(Error::Forest(format!("node {id} is already bisected")));
        }
        let [a, b, c] = node.vertices;
        let left = self.insert(ForestNode {
            vertices: [c, a, midpoint],
            parent: Some(id),
            children: None,
            midpoint: None,
        });
        let right = self.insert(ForestNode {
            vertices: [b, c, midpoint],
            parent: Some(id),
            children: None,
            midpoint: None,
        });
        let parent = self.nodes[id].as_mut().expect("checked above");
        parent.children = Some([left, right]);
        parent.midpoint = Some(midpoint);
        Ok([left, right])
    }

    /// Undoes the bisection of `id`; both children must be leaves.
    pub fn merge(&mut self, id: usize) -> Result<()> {
        let node = self.node(id)?;
        let [l, r] = node
            .children
            .ok_or_else(|| Error::Forest(format!("node {id} has no children to merge")))?;
        if !self.node(l)?.is_leaf() || !self.node(r)?.is_leaf() {
            return Err(Error::Forest(format!("children of node {id} are not leaves")));
        }
        self.nodes[l] = None;
        self.nodes[r] = None;
        self.free.push(r);
        self.free.push(l);
        let node = self.nodes[id].as_mut().expect("checked above");
        node.children = None;
        node.midpoint = None;
        Ok(())
    }

    /// Applies a vertex renumbering after vertex deletion. Every vertex still
    /// referenced by the forest must survive.
    pub fn renumber_vertices(&mut self, new_index: &[Option<usize>]) -> Result<()> {
        for node in self.nodes.iter_mut().flatten() {
            for v in node.vertices.iter_mut() {
                *v = new_index
                    .get(*v)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::Forest(format!("vertex {v} was deleted while in use")))?;
            }
            if let Some(m) = node.midpoint.as_mut() {
                *m = new_index
                    .get(*m)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::Forest(format!("midpoint {m} was deleted while in use")))?;
            }
        }
        Ok(())
    }
}
