//! Interned directed multigraph of RDF resources.
//!
//! Vertices and predicates get dense `u32` ids in first-seen order. Once
//! built, adjacency is frozen into a compressed sparse row layout: one
//! offsets array and a flat `(edge, target)` array, so a walk step is two
//! indexed loads.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{GraphError, ParseError};
use crate::ntriples::{escape_iri, Object, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

/// Bijective string table.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    strings: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = u32::try_from(self.strings.len()).expect("more than u32::MAX interned strings");
        let shared: Arc<str> = Arc::from(s);
        self.strings.push(shared.clone());
        self.ids.insert(shared, id);
        id
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub fn resolve(&self, id: u32) -> &str {
        &self.strings[id as usize]
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.strings.iter().map(|s| &**s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub vertices: usize,
    pub predicates: usize,
    pub adjacency_entries: usize,
    pub dropped_literals: usize,
}

/// Immutable walk-ready graph.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Interner,
    edges: Interner,
    offsets: Vec<usize>,
    targets: Vec<(EdgeId, NodeId)>,
    dropped_literals: usize,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_label_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Outgoing `(predicate, target)` pairs, sorted and duplicate-free.
    pub fn neighbors(&self, node: NodeId) -> &[(EdgeId, NodeId)] {
        let i = node.0 as usize;
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn node_iri(&self, node: NodeId) -> &str {
        self.nodes.resolve(node.0)
    }

    pub fn edge_iri(&self, edge: EdgeId) -> &str {
        self.edges.resolve(edge.0)
    }

    pub fn node_id(&self, iri: &str) -> Option<NodeId> {
        self.nodes.get(iri).map(NodeId)
    }

    pub fn edge_id(&self, iri: &str) -> Option<EdgeId> {
        self.edges.get(iri).map(EdgeId)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            vertices: self.nodes.len(),
            predicates: self.edges.len(),
            adjacency_entries: self.targets.len(),
            dropped_literals: self.dropped_literals,
        }
    }

    /// Builds a graph from a triple stream, dropping literal-valued statements.
    pub fn from_triples<I>(triples: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = Result<Triple, ParseError>>,
    {
        let mut builder = GraphBuilder::default();
        for triple in triples {
            builder.add(&triple?);
        }
        Ok(builder.finish())
    }

    /// Writes the versioned text snapshot.
    ///
    /// ```text
    /// kgvec-graph 1
    /// dropped_literals <n>
    /// nodes <n>
    /// <escaped IRI or blank key, one per line>
    /// edges <n>
    /// <escaped IRI, one per line>
    /// adjacency <n>
    /// <source> <edge> <target>
    /// ```
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}")?;
        writeln!(out, "dropped_literals {}", self.dropped_literals)?;
        writeln!(out, "nodes {}", self.nodes.len())?;
        for s in self.nodes.iter() {
            writeln!(out, "{}", escape_iri(s))?;
        }
        writeln!(out, "edges {}", self.edges.len())?;
        for s in self.edges.iter() {
            writeln!(out, "{}", escape_iri(s))?;
        }
        writeln!(out, "adjacency {}", self.targets.len())?;
        for node in self.nodes() {
            for (e, t) in self.neighbors(node) {
                writeln!(out, "{} {} {}", node.0, e.0, t.0)?;
            }
        }
        out.flush()
    }

    pub fn read_snapshot<R: BufRead>(input: R) -> Result<Graph, GraphError> {
        let mut lines = SnapshotLines { lines: input.lines(), line: 0 };
        let header = lines.next_line()?;
        if header != format!("{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}") {
            return Err(lines.error("unsupported snapshot header"));
        }
        let dropped_literals = lines.count("dropped_literals")?;
        let mut graph = Graph { dropped_literals, ..Graph::default() };
        lines.table("nodes", &mut graph.nodes)?;
        lines.table("edges", &mut graph.edges)?;

        let count = lines.count("adjacency")?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next_line()?;
            let ids: Vec<u32> = line
                .split(' ')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| lines.error("invalid id"))?;
            let [s, e, t] = ids[..] else { return Err(lines.error("expected 3 ids")) };
            let nodes = graph.nodes.len();
            if s as usize >= nodes || t as usize >= nodes || e as usize >= graph.edges.len() {
                return Err(lines.error("id out of range"));
            }
            entries.push((s, EdgeId(e), NodeId(t)));
        }
        graph.freeze(entries);
        Ok(graph)
    }

    fn freeze(&mut self, mut entries: Vec<(u32, EdgeId, NodeId)>) {
        entries.sort_unstable();
        entries.dedup();
        let n = self.nodes.len();
        let mut offsets = vec![0usize; n + 1];
        for &(s, _, _) in &entries {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        self.offsets = offsets;
        self.targets = entries.into_iter().map(|(_, e, t)| (e, t)).collect();
    }
}

const SNAPSHOT_MAGIC: &str = "kgvec-graph";
const SNAPSHOT_VERSION: u32 = 1;

struct SnapshotLines<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> SnapshotLines<R> {
    fn error(&self, message: &str) -> GraphError {
        GraphError::Snapshot { line: self.line, message: message.to_owned() }
    }

    fn next_line(&mut self) -> Result<String, GraphError> {
        self.line += 1;
        match self.lines.next() {
            Some(line) => Ok(line?),
            None => Err(self.error("unexpected end of snapshot")),
        }
    }

    fn count(&mut self, name: &str) -> Result<usize, GraphError> {
        let line = self.next_line()?;
        line.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(' '))
            .and_then(|count| count.parse().ok())
            .ok_or_else(|| self.error(&format!("expected '{name} <count>'")))
    }

    fn table(&mut self, name: &str, table: &mut Interner) -> Result<(), GraphError> {
        for _ in 0..self.count(name)? {
            let line = self.next_line()?;
            let s = unescape_token(&line).ok_or_else(|| self.error("invalid escape"))?;
            if table.get(&s).is_some() {
                return Err(self.error("duplicate table entry"));
            }
            table.intern(&s);
        }
        Ok(())
    }
}

/// Inverse of [`escape_iri`].
pub fn unescape_token(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let width = match chars.next()? {
            'u' => 4,
            'U' => 8,
            _ => return None,
        };
        let hex: String = chars.by_ref().take(width).collect();
        if hex.len() != width {
            return None;
        }
        out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
    }
    Some(out)
}

/// Single-writer accumulator for [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Interner,
    edges: Interner,
    entries: Vec<(u32, EdgeId, NodeId)>,
    dropped_literals: usize,
}

impl GraphBuilder {
    pub fn add(&mut self, triple: &Triple) {
        let subject = self.nodes.intern(&triple.subject.key());
        match &triple.object {
            Object::Literal(_) => self.dropped_literals += 1,
            Object::Resource(object) => {
                let edge = EdgeId(self.edges.intern(&triple.predicate));
                let target = NodeId(self.nodes.intern(&object.key()));
                self.entries.push((subject, edge, target));
            }
        }
    }

    pub fn finish(self) -> Graph {
        let mut graph = Graph {
            nodes: self.nodes,
            edges: self.edges,
            offsets: Vec::new(),
            targets: Vec::new(),
            dropped_literals: self.dropped_literals,
        };
        graph.freeze(self.entries);
        graph
    }
}
