use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::MultiGraph;

/// An irreducible (strongly connected) component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// A single vertex without a loop: the `[0]` component.
    pub is_zero: bool,
    /// No edge leaves the component.
    pub is_sink: bool,
}

/// Strongly connected components in block upper triangular order.
///
/// Component `a` precedes `b` whenever an edge runs from `a` into `b`; ties
/// are broken by the smallest vertex index in each component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    components: Vec<Component>,
    component_of: Vec<usize>,
    order: Vec<usize>,
    successors: Vec<BTreeSet<usize>>,
    reach: Vec<BTreeSet<usize>>,
}

struct Tarjan<'a> {
    graph: &'a MultiGraph,
    counter: usize,
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.counter);
        self.low[v] = self.counter;
        self.counter += 1;
        self.stack.push(v);
        self.on_stack[v] = true;

        for w in 0..self.graph.vertex_count() {
            if self.graph.count(v, w) == 0 {
                continue;
            }
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }

        if Some(self.low[v]) == self.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("tarjan stack underflow");
                self.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            self.found.push(comp);
        }
    }
}

impl ComponentDecomposition {
    pub fn new(graph: &MultiGraph) -> Self {
        let n = graph.vertex_count();
        let mut tarjan = Tarjan {
            graph,
            counter: 0,
            index: vec![None; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            found: Vec::new(),
        };
        for v in 0..n {
            if tarjan.index[v].is_none() {
                tarjan.visit(v);
            }
        }
        let raw = tarjan.found;

        let mut raw_of = vec![0; n];
        for (c, comp) in raw.iter().enumerate() {
            for &v in comp {
                raw_of[v] = c;
            }
        }
        let m = raw.len();
        let mut raw_succ = vec![BTreeSet::new(); m];
        let mut indegree = vec![0usize; m];
        for i in 0..n {
            for j in 0..n {
                if graph.count(i, j) > 0 && raw_of[i] != raw_of[j] && raw_succ[raw_of[i]].insert(raw_of[j]) {
                    indegree[raw_of[j]] += 1;
                }
            }
        }

        // Kahn's algorithm, always taking the ready component with the smallest vertex.
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m)
            .filter(|&c| indegree[c] == 0)
            .map(|c| Reverse((raw[c][0], c)))
            .collect();
        let mut topo = Vec::with_capacity(m);
        while let Some(Reverse((_, c))) = heap.pop() {
            topo.push(c);
            for &d in &raw_succ[c] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    heap.push(Reverse((raw[d][0], d)));
                }
            }
        }

        let mut position = vec![0; m];
        for (pos, &c) in topo.iter().enumerate() {
            position[c] = pos;
        }
        let mut component_of = vec![0; n];
        for v in 0..n {
            component_of[v] = position[raw_of[v]];
        }
        let successors: Vec<BTreeSet<usize>> = topo
            .iter()
            .map(|&c| raw_succ[c].iter().map(|&d| position[d]).collect())
            .collect();
        let components: Vec<Component> = topo
            .iter()
            .enumerate()
            .map(|(pos, &c)| {
                let vertices = raw[c].clone();
                let is_zero = vertices.len() == 1 && graph.count(vertices[0], vertices[0]) == 0;
                Component {
                    vertices,
                    is_zero,
                    is_sink: successors[pos].is_empty(),
                }
            })
            .collect();

        // Reflexive-transitive closure; successors always have larger positions.
        let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
        for c in (0..m).rev() {
            let mut set = BTreeSet::from([c]);
            for &d in &successors[c] {
                set.extend(reach[d].iter().copied());
            }
            reach[c] = set;
        }

        let order = components.iter().flat_map(|c| c.vertices.clone()).collect();

        Self {
            components,
            component_of,
            order,
            successors,
            reach,
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, c: usize) -> &Component {
        &self.components[c]
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// Vertex permutation making the adjacency block upper triangular.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Condensation edges out of component `c`.
    pub fn successors(&self, c: usize) -> &BTreeSet<usize> {
        &self.successors[c]
    }

    /// Components communicated by `c`, including `c` itself.
    pub fn reachable_from_component(&self, c: usize) -> &BTreeSet<usize> {
        &self.reach[c]
    }

    /// Components holding a vertex reachable from `v` by a path of length ≥ 0.
    pub fn reachable_from_vertex(&self, v: usize) -> &BTreeSet<usize> {
        &self.reach[self.component_of[v]]
    }

    pub fn communicates(&self, from: usize, to: usize) -> bool {
        self.reach[from].contains(&to)
    }

    /// Vertices of `H_s`, with the vertices of `G_s` first and the rest in block order.
    pub fn communicating_vertices(&self, s: usize) -> Vec<usize> {
        let mut out = self.components[s].vertices.clone();
        for &c in self.reach[s].iter().filter(|&&c| c != s) {
            out.extend_from_slice(&self.components[c].vertices);
        }
        out
    }

    /// The communicating graph `H_s` together with its vertex list in `graph`.
    pub fn communicating_graph(&self, graph: &MultiGraph, s: usize) -> (MultiGraph, Vec<usize>) {
        let vertices = self.communicating_vertices(s);
        (graph.induced(&vertices), vertices)
    }

    /// Vertices with no long paths ending there: unreachable from any nonzero component.
    pub fn ideal_vertices(&self) -> Vec<usize> {
        let mut hit = vec![false; self.components.len()];
        for (c, comp) in self.components.iter().enumerate() {
            if !comp.is_zero {
                for &d in &self.reach[c] {
                    hit[d] = true;
                }
            }
        }
        let mut out: Vec<usize> = (0..self.component_of.len())
            .filter(|&v| !hit[self.component_of[v]])
            .collect();
        out.sort_unstable();
        out
    }

    /// Adjacency conjugated by [`ComponentDecomposition::order`].
    pub fn permuted_adjacency(&self, graph: &MultiGraph) -> Vec<Vec<u64>> {
        self.order
            .iter()
            .map(|&i| self.order.iter().map(|&j| graph.count(i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(g: &MultiGraph, dec: &ComponentDecomposition) -> Vec<Vec<String>> {
        dec.components()
            .iter()
            .map(|c| c.vertices.iter().map(|&v| g.label(v).to_string()).collect())
            .collect()
    }

    #[test]
    fn two_vertex_example() {
        let g = MultiGraph::from_matrix(&["v", "w"], &[&[2, 1], &[0, 0]]).unwrap();
        let dec = ComponentDecomposition::new(&g);
        assert_eq!(names(&g, &dec), vec![vec!["v"], vec!["w"]]);
        assert!(!dec.component(0).is_zero && !dec.component(0).is_sink);
        assert!(dec.component(1).is_zero && dec.component(1).is_sink);
    }

    #[test]
    fn golden_ratio_example() {
        let g = MultiGraph::from_matrix(&["u", "w", "v"], &[&[2, 2, 0], &[2, 0, 1], &[0, 0, 2]])
            .unwrap();
        let dec = ComponentDecomposition::new(&g);
        assert_eq!(names(&g, &dec), vec![vec!["u", "w"], vec!["v"]]);
        assert!(dec.component(1).is_sink);
        let (h, _) = dec.communicating_graph(&g, 0);
        assert_eq!(h, g);
    }

    #[test]
    fn complete_graph_single_sink() {
        let g = MultiGraph::from_matrix(&["a", "b", "c"], &[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]])
            .unwrap();
        let dec = ComponentDecomposition::new(&g);
        assert_eq!(dec.len(), 1);
        assert!(dec.component(0).is_sink);
        assert!(!dec.component(0).is_zero);
    }

    #[test]
    fn reachability_examples() {
        // order (w, v)
        let g = MultiGraph::from_matrix(&["w", "v"], &[&[3, 1], &[0, 2]]).unwrap();
        let dec = ComponentDecomposition::new(&g);
        assert_eq!(dec.reachable_from_vertex(0).len(), 2);
        assert_eq!(
            dec.reachable_from_vertex(1).iter().copied().collect::<Vec<_>>(),
            vec![dec.component_of(1)]
        );

        let iso = MultiGraph::from_matrix(&["a", "b"], &[&[0, 0], &[0, 1]]).unwrap();
        let dec = ComponentDecomposition::new(&iso);
        assert_eq!(dec.reachable_from_vertex(0).len(), 1);

        let three = MultiGraph::from_matrix(
            &["v1", "v2", "v3"],
            &[&[2, 1, 1], &[0, 1, 0], &[0, 0, 3]],
        )
        .unwrap();
        let dec = ComponentDecomposition::new(&three);
        assert_eq!(dec.reachable_from_vertex(0).len(), 3);
    }

    #[test]
    fn communicating_graph_of_middle_component() {
        let g = MultiGraph::from_matrix(
            &["w", "u_2", "v", "u_1"],
            &[&[3, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 2, 1], &[0, 0, 0, 0]],
        )
        .unwrap();
        let dec = ComponentDecomposition::new(&g);
        let s = dec.component_of(2);
        let (h, verts) = dec.communicating_graph(&g, s);
        assert_eq!(verts, vec![2, 3]);
        assert_eq!(h.adjacency(), &[vec![2, 1], vec![0, 0]]);

        let sink = dec.component_of(3);
        let (h, _) = dec.communicating_graph(&g, sink);
        assert_eq!(h.vertex_count(), 1);
    }

    #[test]
    fn ideal_vertices_examples() {
        let chain = MultiGraph::from_matrix(&["a", "b", "c"], &[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]])
            .unwrap();
        assert_eq!(ComponentDecomposition::new(&chain).ideal_vertices(), vec![0, 1, 2]);

        let lp = MultiGraph::from_matrix(&["a"], &[&[1]]).unwrap();
        assert!(ComponentDecomposition::new(&lp).ideal_vertices().is_empty());

        let g = MultiGraph::from_matrix(
            &["w", "u_2", "u_1", "v"],
            &[&[3, 1, 0, 0], &[0, 0, 0, 1], &[0, 0, 0, 1], &[0, 0, 0, 2]],
        )
        .unwrap();
        assert_eq!(ComponentDecomposition::new(&g).ideal_vertices(), vec![2]);
    }
}
