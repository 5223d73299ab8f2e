use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ColumnRef, DatabaseSchema};

/// Columns that justify one join edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColumns {
    pub tables: (usize, usize),
    pub pairs: Vec<(ColumnRef, ColumnRef)>,
}

/// Undirected join graph over a database's tables.
///
/// `adjacency[i]` holds the tables joinable with table `i`. The graph is kept
/// symmetric and free of self-loops by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaGraph {
    pub db_id: String,
    adjacency: Vec<BTreeSet<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edge_columns: Vec<EdgeColumns>,
}

impl SchemaGraph {
    /// A graph with `table_count` isolated tables.
    pub fn new(db_id: impl Into<String>, table_count: usize) -> Self {
        Self {
            db_id: db_id.into(),
            adjacency: vec![BTreeSet::new(); table_count],
            edge_columns: Vec::new(),
        }
    }

    /// Builds a graph from a possibly one-sided adjacency list, adding the
    /// reverse of every listed edge and dropping self-loops.
    pub fn from_adjacency(
        db_id: impl Into<String>,
        table_count: usize,
        lists: &BTreeMap<usize, BTreeSet<usize>>,
    ) -> Result<Self> {
        let mut g = Self::new(db_id, table_count);
        for (&i, neighbors) in lists {
            g.check(i)?;
            for &j in neighbors {
                g.add_edge(i, j)?;
            }
        }
        Ok(g)
    }

    fn check(&self, table: usize) -> Result<()> {
        if table < self.adjacency.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "table",
                index: table,
                limit: self.adjacency.len(),
            })
        }
    }

    /// Adds an undirected edge. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a != b {
            self.adjacency[a].insert(b);
            self.adjacency[b].insert(a);
        }
        Ok(())
    }

    fn add_join(&mut self, from: ColumnRef, to: ColumnRef) {
        let (a, b) = (from.table_index, to.table_index);
        if a == b {
            return;
        }
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        let key = (a.min(b), a.max(b));
        let pair = if a < b { (from, to) } else { (to, from) };
        match self.edge_columns.iter_mut().find(|e| e.tables == key) {
            Some(e) => {
                if !e.pairs.contains(&pair) {
                    e.pairs.push(pair);
                }
            }
            None => self.edge_columns.push(EdgeColumns {
                tables: key,
                pairs: vec![pair],
            }),
        }
    }

    pub fn table_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, table: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.get(table).into_iter().flatten().copied()
    }

    pub fn adjacency(&self) -> &[BTreeSet<usize>] {
        &self.adjacency
    }

    pub fn edge_columns(&self) -> &[EdgeColumns] {
        &self.edge_columns
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(&b))
    }

    /// Edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.range(i + 1..).map(move |&j| (i, j)))
    }

    /// Adjacency as an ordered map, convenient for comparisons and display.
    pub fn to_map(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        self.adjacency.iter().cloned().enumerate().collect()
    }

    /// Connected-component id of every table (ids in first-seen order).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.adjacency.len()];
        let mut next = 0;
        for start in 0..self.adjacency.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Tables that connect all `terminals` through the full graph: the union
    /// of BFS shortest paths from the first terminal to each of the others.
    /// `None` when some terminal is unreachable. The returned set always
    /// passes [`is_connected_subset`].
    pub fn connecting_tables(
        &self,
        terminals: &BTreeSet<usize>,
    ) -> Result<Option<BTreeSet<usize>>> {
        for &t in terminals {
            self.check(t)?;
        }
        let Some(&root) = terminals.iter().next() else {
            return Ok(Some(BTreeSet::new()));
        };
        let mut parent = vec![usize::MAX; self.adjacency.len()];
        parent[root] = root;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        let mut out = BTreeSet::from([root]);
        for &t in terminals {
            if parent[t] == usize::MAX {
                return Ok(None);
            }
            let mut v = t;
            while out.insert(v) {
                v = parent[v];
            }
        }
        Ok(Some(out))
    }

    /// BFS path from `from` to `to` through the full graph.
    pub fn path(&self, from: usize, to: usize) -> Result<Option<Vec<usize>>> {
        self.check(from)?;
        self.check(to)?;
        let mut parent = vec![usize::MAX; self.adjacency.len()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &w in &self.adjacency[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent[to] == usize::MAX {
            return Ok(None);
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        Ok(Some(path))
    }

    /// Checks symmetry, bounds and absence of self-loops.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.adjacency.iter().enumerate() {
            for &j in n {
                self.check(j)?;
                if i == j || !self.adjacency[j].contains(&i) {
                    return Err(Error::InvalidInput(format!(
                        "graph `{}` is not a symmetric loop-free adjacency at ({i}, {j})",
                        self.db_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Renders `{0: {1, 2}, 1: {0, 3}, ...}`.
impl fmt::Display for SchemaGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, n) in self.adjacency.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let items: Vec<String> = n.iter().map(|j| j.to_string()).collect();
            write!(f, "{i}: {{{}}}", items.join(", "))?;
        }
        f.write_str("}")
    }
}

/// Derives a join graph from declared foreign keys.
///
/// With `name_heuristic`, two tables are also joined when they share an
/// identically named column (case-insensitive) that is a primary-key column in
/// at least one of them.
pub fn build_join_graph_from_keys(schema: &DatabaseSchema, name_heuristic: bool) -> SchemaGraph {
    let mut g = SchemaGraph::new(schema.db_id.clone(), schema.tables.len());
    for (t, table) in schema.tables.iter().enumerate() {
        for fk in &table.foreign_keys {
            g.add_join(ColumnRef::new(t, fk.column), fk.target);
        }
    }
    if name_heuristic {
        for (a, ta) in schema.tables.iter().enumerate() {
            for (b, tb) in schema.tables.iter().enumerate().skip(a + 1) {
                for (ca, col) in ta.columns.iter().enumerate() {
                    let Some(cb) = tb.column_index(&col.name) else {
                        continue;
                    };
                    if ta.is_primary_key(ca) || tb.is_primary_key(cb) {
                        g.add_join(ColumnRef::new(a, ca), ColumnRef::new(b, cb));
                    }
                }
            }
        }
    }
    g
}

/// True iff the subgraph induced by `tables` is connected: every member is
/// reachable from every other using only edges between members. The empty
/// set and singletons are connected.
pub fn is_connected_subset(graph: &SchemaGraph, tables: &BTreeSet<usize>) -> Result<bool> {
    for &t in tables {
        graph.check(t)?;
    }
    let Some(&start) = tables.iter().next() else {
        return Ok(true);
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for w in graph.neighbors(v) {
            if tables.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    Ok(seen.len() == tables.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{fixtures, parse_ddl};

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    fn activity_adjacency() -> BTreeMap<usize, BTreeSet<usize>> {
        BTreeMap::from([
            (0, set(&[1, 2])),
            (1, set(&[0, 3])),
            (2, set(&[0, 4])),
            (3, set(&[1])),
            (4, set(&[2])),
        ])
    }

    #[test]
    fn activity_from_keys() {
        let g = build_join_graph_from_keys(&fixtures::activity(), false);
        assert_eq!(g.to_map(), activity_adjacency());
        assert_eq!(
            g.to_string(),
            "{0: {1, 2}, 1: {0, 3}, 2: {0, 4}, 3: {1}, 4: {2}}"
        );
        assert_eq!(g.edge_columns().len(), 4);
    }

    #[test]
    fn activity_from_shared_names_only() {
        let mut s = fixtures::activity();
        for t in &mut s.tables {
            t.foreign_keys.clear();
        }
        assert_eq!(
            build_join_graph_from_keys(&s, true).to_map(),
            activity_adjacency()
        );
        assert!(build_join_graph_from_keys(&s, false)
            .edges()
            .next()
            .is_none());
    }

    #[test]
    fn single_table() {
        let s = parse_ddl("d", "CREATE TABLE t (a INT)").unwrap();
        let g = build_join_graph_from_keys(&s, true);
        assert_eq!(g.to_map(), BTreeMap::from([(0, BTreeSet::new())]));
    }

    #[test]
    fn heuristic_adds_shared_primary_key_edge() {
        let s = parse_ddl(
            "d",
            "CREATE TABLE A (a_id INT PRIMARY KEY);
             CREATE TABLE B (b_id INT PRIMARY KEY, a_id INT REFERENCES A(a_id));
             CREATE TABLE C (c_id INT PRIMARY KEY, b_id INT);",
        )
        .unwrap();
        let on: Vec<_> = build_join_graph_from_keys(&s, true).edges().collect();
        let off: Vec<_> = build_join_graph_from_keys(&s, false).edges().collect();
        assert_eq!(on, vec![(0, 1), (1, 2)]);
        assert_eq!(off, vec![(0, 1)]);
    }

    #[test]
    fn self_reference_is_not_a_loop() {
        let s = parse_ddl(
            "d",
            "CREATE TABLE e (id INT PRIMARY KEY, boss INT REFERENCES e(id))",
        )
        .unwrap();
        let g = build_join_graph_from_keys(&s, true);
        assert!(g.validate().is_ok());
        assert!(g.edges().next().is_none());
    }

    #[test]
    fn connected_subsets() {
        let g = build_join_graph_from_keys(&fixtures::activity(), false);
        assert!(is_connected_subset(&g, &set(&[3, 1, 0])).unwrap());
        assert!(is_connected_subset(&g, &set(&[2])).unwrap());
        assert!(is_connected_subset(&g, &set(&[])).unwrap());
        assert!(!is_connected_subset(&g, &set(&[3, 4])).unwrap());
        assert!(!is_connected_subset(&g, &set(&[3, 0])).unwrap());
        assert!(matches!(
            is_connected_subset(&g, &set(&[5])),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn connecting_tables_and_paths() {
        let g = build_join_graph_from_keys(&fixtures::activity(), false);
        assert_eq!(
            g.connecting_tables(&set(&[0, 3])).unwrap(),
            Some(set(&[0, 1, 3]))
        );
        assert_eq!(g.path(3, 0).unwrap(), Some(vec![3, 1, 0]));
        assert_eq!(g.path(4, 0).unwrap(), Some(vec![4, 2, 0]));
        let mut split = SchemaGraph::new("x", 3);
        split.add_edge(0, 1).unwrap();
        assert_eq!(split.connecting_tables(&set(&[0, 2])).unwrap(), None);
        assert_eq!(split.components(), vec![0, 0, 1]);
    }

    #[test]
    fn from_adjacency_symmetrizes() {
        let g = SchemaGraph::from_adjacency("x", 2, &BTreeMap::from([(0, set(&[1]))])).unwrap();
        assert_eq!(g.to_map(), BTreeMap::from([(0, set(&[1])), (1, set(&[0]))]));
        assert!(SchemaGraph::from_adjacency("x", 2, &BTreeMap::from([(0, set(&[2]))])).is_err());
    }
}
