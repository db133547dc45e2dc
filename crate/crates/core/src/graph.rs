//! Graph <-> edge bit string codec, structural features and random datasets.
//!
//! An `M`-node undirected simple graph is stored as the `N = M(M-1)/2` bits of
//! its upper-triangular adjacency, flattened row by row with 0-based nodes.

use std::collections::{HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::jacobi::{symmetric_eigenvalues, DEFAULT_TOLERANCE};
use crate::rng::{tags, StreamKey};
use crate::scalar::Real;

pub const MAX_NODES: usize = 64;

/// Number of edge slots of an `m`-node graph.
#[inline]
pub const fn edge_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Row-major upper-triangular rank of the pair `i < j`.
pub fn edge_index(i: usize, j: usize, m: usize) -> Result<usize> {
    if i >= j || j >= m {
        return Err(Error::InvalidEdge { i, j, m });
    }
    Ok(i * m - i * (i + 1) / 2 + (j - i - 1))
}

/// All pairs `(i, j)`, `i < j`, in bit order.
pub fn edge_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(edge_count(m));
    for i in 0..m {
        for j in (i + 1)..m {
            out.push((i, j));
        }
    }
    out
}

/// Node count `M` with `M(M-1)/2 == n_bits`, if one exists.
pub fn node_count_for_bits(n_bits: usize) -> Option<usize> {
    let m = ((1.0 + (1.0 + 8.0 * n_bits as f64).sqrt()) / 2.0).round() as usize;
    (m >= 2 && edge_count(m) == n_bits).then_some(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphBits {
    #[serde(rename = "m")]
    node_count: usize,
    bits: BitString,
}

impl GraphBits {
    pub fn empty(m: usize) -> Result<Self> {
        Self::new(m, BitString::zeros(edge_count(m)))
    }

    pub fn complete(m: usize) -> Result<Self> {
        let mut bits = BitString::zeros(edge_count(m));
        for k in 0..bits.len() {
            bits.set(k, true);
        }
        Self::new(m, bits)
    }

    pub fn new(m: usize, bits: BitString) -> Result<Self> {
        if !(2..=MAX_NODES).contains(&m) {
            return Err(Error::InvalidGraph(format!("node count {m} outside 2..={MAX_NODES}")));
        }
        if bits.len() != edge_count(m) {
            return Err(Error::LengthMismatch {
                expected: edge_count(m),
                got: bits.len(),
            });
        }
        Ok(GraphBits { node_count: m, bits })
    }

    /// Interprets a measured bit string as a graph, inferring `M` from its length.
    pub fn from_bits(bits: BitString) -> Result<Self> {
        let m = node_count_for_bits(bits.len()).ok_or_else(|| {
            Error::InvalidGraph(format!("{} bits is not M(M-1)/2 for any M >= 2", bits.len()))
        })?;
        Self::new(m, bits)
    }

    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(m)?;
        for &(a, b) in edges {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            g.bits.set(edge_index(i, j, m)?, true);
        }
        Ok(g)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn into_bits(self) -> BitString {
        self.bits
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        match edge_index(i, j, self.node_count) {
            Ok(k) => self.bits.get(k),
            Err(_) => false,
        }
    }

    pub fn edge_total(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let m = self.node_count;
        let mut adj = vec![Vec::new(); m];
        for (k, (i, j)) in edge_pairs(m).into_iter().enumerate() {
            if self.bits.get(k) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }

    /// Dense row-major adjacency matrix.
    pub fn adjacency_matrix<T: Real>(&self) -> Vec<T> {
        let m = self.node_count;
        let mut a = vec![T::zero(); m * m];
        for (k, (i, j)) in edge_pairs(m).into_iter().enumerate() {
            if self.bits.get(k) {
                a[i * m + j] = T::one();
                a[j * m + i] = T::one();
            }
        }
        a
    }
}

/// Encodes a symmetric 0/1 adjacency matrix with zero diagonal.
pub fn encode(adjacency: &[Vec<bool>]) -> Result<GraphBits> {
    let m = adjacency.len();
    for (i, row) in adjacency.iter().enumerate() {
        if row.len() != m {
            return Err(Error::InvalidAdjacency(format!("row {i} has length {} (want {m})", row.len())));
        }
        if row[i] {
            return Err(Error::InvalidAdjacency(format!("nonzero diagonal at node {i}")));
        }
        for j in 0..i {
            if row[j] != adjacency[j][i] {
                return Err(Error::InvalidAdjacency(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut g = GraphBits::empty(m)?;
    for (k, (i, j)) in edge_pairs(m).into_iter().enumerate() {
        if adjacency[i][j] {
            g.bits.set(k, true);
        }
    }
    Ok(g)
}

pub fn decode(g: &GraphBits) -> Vec<Vec<bool>> {
    let m = g.node_count;
    let mut a = vec![vec![false; m]; m];
    for (k, (i, j)) in edge_pairs(m).into_iter().enumerate() {
        if g.bits.get(k) {
            a[i][j] = true;
            a[j][i] = true;
        }
    }
    a
}

pub fn density(g: &GraphBits) -> f64 {
    g.bits.count_ones() as f64 / g.bits.len() as f64
}

pub fn degree_sequence(g: &GraphBits) -> Vec<usize> {
    let mut deg = vec![0; g.node_count];
    for (k, (i, j)) in edge_pairs(g.node_count).into_iter().enumerate() {
        if g.bits.get(k) {
            deg[i] += 1;
            deg[j] += 1;
        }
    }
    deg
}

/// Breadth-first 2-coloring of every connected component.
pub fn is_bipartite(g: &GraphBits) -> bool {
    let adj = g.neighbors();
    let mut color: Vec<Option<bool>> = vec![None; g.node_count];
    let mut queue = VecDeque::new();
    for start in 0..g.node_count {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(false);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].expect("colored before enqueue");
            for &v in &adj[u] {
                match color[v] {
                    None => {
                        color[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => return false,
                    Some(_) => {}
                }
            }
        }
    }
    true
}

/// Spectral bipartivity `sum cosh(l) / sum exp(l)` over adjacency eigenvalues `l`.
pub fn spectral_bipartivity<T: Real>(g: &GraphBits) -> Result<T> {
    let m = g.node_count;
    let eig = symmetric_eigenvalues(&g.adjacency_matrix::<T>(), m, DEFAULT_TOLERANCE)?;
    let num: T = eig.iter().map(|l| l.cosh()).sum();
    let den: T = eig.iter().map(|l| l.exp()).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphFamily {
    #[serde(rename = "ER")]
    ErdosRenyi,
    #[serde(rename = "BP")]
    Bipartite,
}

impl GraphFamily {
    pub fn label(self) -> &'static str {
        match self {
            GraphFamily::ErdosRenyi => "ER",
            GraphFamily::Bipartite => "BP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityClass {
    Sparse,
    Medium,
    Dense,
}

impl DensityClass {
    pub const ALL: [DensityClass; 3] = [DensityClass::Dense, DensityClass::Medium, DensityClass::Sparse];

    pub fn label(self) -> &'static str {
        match self {
            DensityClass::Sparse => "sparse",
            DensityClass::Medium => "medium",
            DensityClass::Dense => "dense",
        }
    }
}

/// Default per-edge probability for a family and density class.
///
/// ER values are the mean densities of the reference 8-node datasets. BP values
/// are the cross-pair probabilities giving the same mean densities at 8 nodes
/// under uniform side assignment with both sides nonempty.
pub fn default_edge_probability(family: GraphFamily, class: DensityClass) -> f64 {
    match (family, class) {
        (GraphFamily::ErdosRenyi, DensityClass::Dense) => 0.7618,
        (GraphFamily::ErdosRenyi, DensityClass::Medium) => 0.4420,
        (GraphFamily::ErdosRenyi, DensityClass::Sparse) => 0.2207,
        (GraphFamily::Bipartite, DensityClass::Dense) => 0.6171,
        (GraphFamily::Bipartite, DensityClass::Medium) => 0.5729,
        (GraphFamily::Bipartite, DensityClass::Sparse) => 0.4477,
    }
}

/// Default dataset size, following the reference dataset sizes where known.
pub fn default_sample_count(family: GraphFamily, class: DensityClass, m: usize) -> usize {
    use DensityClass::*;
    use GraphFamily::*;
    match (family, m, class) {
        (Bipartite, 8, Dense) => 261,
        (Bipartite, 8, Medium) => 271,
        (Bipartite, 8, Sparse) => 133,
        (ErdosRenyi, 8, _) => 200,
        (Bipartite, 10, Dense) => 498,
        (Bipartite, 10, Medium) => 500,
        (Bipartite, 10, Sparse) => 473,
        (ErdosRenyi, 10, _) => 500,
        (Bipartite, 14, Medium) => 999,
        (Bipartite, 14, _) => 995,
        (Bipartite, 18, Dense) => 995,
        (Bipartite, 18, Medium) => 998,
        (Bipartite, 18, Sparse) => 992,
        (ErdosRenyi, 14 | 18, _) => 1000,
        _ => 200,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub graph_family: GraphFamily,
    pub node_count: usize,
    pub density_class: DensityClass,
    pub edge_probability: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn preset(family: GraphFamily, m: usize, class: DensityClass, seed: u64) -> Self {
        DatasetSpec {
            graph_family: family,
            node_count: m,
            density_class: class,
            edge_probability: default_edge_probability(family, class),
            sample_count: default_sample_count(family, class, m),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 1 {
            return Err(Error::InvalidSpec("sample_count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::InvalidSpec(format!(
                "edge_probability {} outside [0, 1]",
                self.edge_probability
            )));
        }
        if !(2..=MAX_NODES).contains(&self.node_count) {
            return Err(Error::InvalidSpec(format!("node_count {} outside 2..=64", self.node_count)));
        }
        Ok(())
    }

    /// Number of distinct labeled graphs the generator can emit, when small.
    pub fn support_size(&self) -> Option<usize> {
        let p = self.edge_probability;
        match self.graph_family {
            GraphFamily::ErdosRenyi if p == 0.0 || p == 1.0 => Some(1),
            GraphFamily::Bipartite if p == 0.0 => Some(1),
            // complete bipartite graphs K_{L,R}: one per unordered nonempty bipartition
            GraphFamily::Bipartite if p == 1.0 && self.node_count < 63 => {
                Some((1usize << (self.node_count - 1)) - 1)
            }
            _ => None,
        }
    }

    /// Number of graphs the generators will produce: `sample_count` clipped to
    /// the support size of degenerate configurations.
    pub fn effective_count(&self) -> usize {
        match self.support_size() {
            Some(s) => self.sample_count.min(s),
            None => self.sample_count,
        }
    }
}

fn collect_unique<F>(spec: &DatasetSpec, mut draw: F) -> Result<Vec<GraphBits>>
where
    F: FnMut() -> GraphBits,
{
    let want = spec.effective_count();
    let cap = 100 * spec.sample_count;
    let mut seen = HashSet::with_capacity(want);
    let mut out = Vec::with_capacity(want);
    let mut attempts = 0;
    while out.len() < want {
        if attempts == cap {
            return Err(Error::AttemptCapExceeded {
                attempts,
                unique: out.len(),
                requested: want,
            });
        }
        attempts += 1;
        let g = draw();
        if seen.insert(g.bits.clone()) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Erdos-Renyi dataset of unique labeled graphs.
pub fn gen_er(spec: &DatasetSpec) -> Result<Vec<GraphBits>> {
    spec.validate()?;
    if spec.graph_family != GraphFamily::ErdosRenyi {
        return Err(Error::InvalidSpec("gen_er needs an ER spec".into()));
    }
    let m = spec.node_count;
    let mut rng = StreamKey::new(spec.seed).child(tags::DATASET).rng();
    collect_unique(spec, || {
        let bits = BitString::bernoulli(edge_count(m), spec.edge_probability, &mut rng);
        GraphBits { node_count: m, bits }
    })
}

/// One random bipartite graph: uniform side per node (both sides nonempty),
/// then each cross pair independently with probability `p`.
pub fn random_bipartite<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R) -> GraphBits {
    let side = loop {
        let side: Vec<bool> = (0..m).map(|_| rng.gen::<bool>()).collect();
        if side.iter().any(|&s| s) && side.iter().any(|&s| !s) {
            break side;
        }
    };
    let mut bits = BitString::zeros(edge_count(m));
    for (k, (i, j)) in edge_pairs(m).into_iter().enumerate() {
        if side[i] != side[j] && rng.gen::<f64>() < p {
            bits.set(k, true);
        }
    }
    GraphBits { node_count: m, bits }
}

pub fn gen_bipartite(spec: &DatasetSpec) -> Result<Vec<GraphBits>> {
    spec.validate()?;
    if spec.graph_family != GraphFamily::Bipartite {
        return Err(Error::InvalidSpec("gen_bipartite needs a BP spec".into()));
    }
    let m = spec.node_count;
    let mut rng = StreamKey::new(spec.seed).child(tags::DATASET).rng();
    collect_unique(spec, || random_bipartite(m, spec.edge_probability, &mut rng))
}

pub fn generate(spec: &DatasetSpec) -> Result<Vec<GraphBits>> {
    match spec.graph_family {
        GraphFamily::ErdosRenyi => gen_er(spec),
        GraphFamily::Bipartite => gen_bipartite(spec),
    }
}

/// Contents of a JSON-lines graph file.
#[derive(Debug, Clone)]
pub struct GraphFile {
    /// Parsed `#`-prefixed header line, if present.
    pub header: Option<serde_json::Value>,
    pub graphs: Vec<GraphBits>,
}

impl GraphFile {
    pub fn dataset_spec(&self) -> Option<DatasetSpec> {
        self.header
            .as_ref()
            .and_then(|h| serde_json::from_value(h.clone()).ok())
    }
}

pub fn write_graphs<P: AsRef<Path>, H: Serialize>(
    path: P,
    header: Option<&H>,
    graphs: &[GraphBits],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(h) = header {
        writeln!(w, "#{}", serde_json::to_string(h)?)?;
    }
    for g in graphs {
        writeln!(w, "{}", serde_json::to_string(g)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_graphs<P: AsRef<Path>>(path: P) -> Result<GraphFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut header = None;
    let mut graphs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(serde_json::from_str(rest)?);
            }
            continue;
        }
        let g: GraphBits = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        GraphBits::new(g.node_count, g.bits.clone())?;
        graphs.push(g);
    }
    Ok(GraphFile { header, graphs })
}
