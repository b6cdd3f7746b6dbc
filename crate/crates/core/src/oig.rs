//! One-inclusion graphs: the projection of a class onto n+1 inputs, with
//! edges between labelings at Hamming distance one.
//!
//! A transductive predictor falls out of an orientation: after training pins
//! every coordinate but the test one, at most two vertices remain consistent;
//! if they form an edge, the edge's probability assignment decides which
//! endpoint's label to emit. Charging few edges to each vertex (low weighted
//! out-degree) bounds the leave-one-out error, and through that the
//! information the loss pattern leaks.
//!
//! The module also houses the explicit randomized rule for the
//! point-function class (predict zero at a fresh point with probability
//! n/(n+1)) and the evaluator that converts a leave-one-out error oracle
//! into a transductive information budget.

use std::collections::HashMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::class::FiniteClass;
use crate::error::{Error, Result};
use crate::info::binary_entropy;
use crate::sample::{Example, Input, Label, LabeledSample};

/// Projection of a finite class onto a set of domain points. Vertices are
/// the distinct label vectors (sorted lexicographically, so vertex ids are
/// canonical); edges connect vectors differing in exactly one coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct OneInclusionGraph {
    /// Distinct domain points, sorted ascending; duplicates in the requested
    /// input list collapse here.
    inputs: Vec<usize>,
    vertices: Vec<Vec<Label>>,
    edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    /// Endpoint vertex ids, a < b.
    pub a: usize,
    pub b: usize,
    /// The one coordinate (position into `inputs`) where they differ.
    pub coord: usize,
}

impl OneInclusionGraph {
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn vertices(&self) -> &[Vec<Label>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Position of a domain point within this graph's input list.
    pub fn input_position(&self, x: usize) -> Option<usize> {
        self.inputs.binary_search(&x).ok()
    }
}

/// Build the one-inclusion graph of `class` over the given domain points.
pub fn build_graph(class: &FiniteClass, inputs: &[usize]) -> Result<OneInclusionGraph> {
    if inputs.is_empty() {
        return Err(Error::Empty("graph inputs"));
    }
    let mut points = inputs.to_vec();
    points.sort_unstable();
    points.dedup();
    for &x in &points {
        if x >= class.domain_size() {
            return Err(Error::IndexOutOfRange {
                what: "domain point",
                got: x,
                size: class.domain_size(),
            });
        }
    }
    let mut vertices: Vec<Vec<Label>> = (0..class.len())
        .map(|h| {
            let row = class.row(h).expect("index in range");
            points.iter().map(|&x| row[x]).collect()
        })
        .collect();
    vertices.sort();
    vertices.dedup();
    let mut edges = Vec::new();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let mut diff = None;
            let mut count = 0;
            for (c, (la, lb)) in vertices[a].iter().zip(&vertices[b]).enumerate() {
                if la != lb {
                    count += 1;
                    if count > 1 {
                        break;
                    }
                    diff = Some(c);
                }
            }
            if count == 1 {
                edges.push(Edge {
                    a,
                    b,
                    coord: diff.expect("count == 1 sets the coordinate"),
                });
            }
        }
    }
    Ok(OneInclusionGraph {
        inputs: points,
        vertices,
        edges,
    })
}

/// Per-edge weight split between the two endpoints: `f(e, v)` is the share
/// of edge e charged to endpoint v. Charging an edge to a vertex counts
/// toward that vertex's (weighted) out-degree.
#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityAssignment {
    /// weights[k] = (share charged to edge k's endpoint a, share to b);
    /// each pair sums to 1.
    weights: Vec<(f64, f64)>,
}

impl ProbabilityAssignment {
    pub fn new(graph: &OneInclusionGraph, weights: Vec<(f64, f64)>) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::LengthMismatch {
                what: "assignment weights",
                left: weights.len(),
                right: graph.edge_count(),
            });
        }
        for (k, &(fa, fb)) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&fa) || !(0.0..=1.0).contains(&fb) {
                return Err(Error::InvalidArgument(format!(
                    "edge {k} weights ({fa}, {fb}) outside [0, 1]"
                )));
            }
            if (fa + fb - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "edge {k} weights ({fa}, {fb}) do not sum to 1"
                )));
            }
        }
        Ok(ProbabilityAssignment { weights })
    }

    /// Share of edge `k` charged to vertex `v` (0 for non-endpoints).
    pub fn share(&self, graph: &OneInclusionGraph, k: usize, v: usize) -> f64 {
        let e = graph.edges[k];
        if v == e.a {
            self.weights[k].0
        } else if v == e.b {
            self.weights[k].1
        } else {
            0.0
        }
    }

    /// Weighted out-degree of every vertex.
    pub fn loads(&self, graph: &OneInclusionGraph) -> Vec<f64> {
        let mut loads = vec![0.0; graph.vertex_count()];
        for (k, e) in graph.edges.iter().enumerate() {
            loads[e.a] += self.weights[k].0;
            loads[e.b] += self.weights[k].1;
        }
        loads
    }

    pub fn max_load(&self, graph: &OneInclusionGraph) -> f64 {
        self.loads(graph).into_iter().fold(0.0, f64::max)
    }

    pub fn is_integral(&self) -> bool {
        self.weights.iter().all(|&(fa, _)| fa == 0.0 || fa == 1.0)
    }
}

/// Orient every edge (charge it fully to one endpoint) with out-degree at
/// most `d` everywhere. Starts greedy, then repeatedly discharges an
/// overloaded vertex by reversing a path to a vertex with spare capacity.
/// When no such path exists the reachable set certifies a subgraph denser
/// than d, and that infeasibility is reported instead.
pub fn orient_deterministic(
    graph: &OneInclusionGraph,
    d: usize,
) -> Result<ProbabilityAssignment> {
    let nv = graph.vertex_count();
    // charged_to[k]: endpoint of edge k currently charged.
    let mut charged_to: Vec<usize> = Vec::with_capacity(graph.edge_count());
    let mut load = vec![0usize; nv];
    for e in &graph.edges {
        let pick = if load[e.b] < load[e.a] { e.b } else { e.a };
        charged_to.push(pick);
        load[pick] += 1;
    }

    // incident[v] = edge ids touching v.
    let mut incident = vec![Vec::new(); nv];
    for (k, e) in graph.edges.iter().enumerate() {
        incident[e.a].push(k);
        incident[e.b].push(k);
    }
    let other = |k: usize, v: usize| {
        let e = graph.edges[k];
        if e.a == v {
            e.b
        } else {
            e.a
        }
    };

    loop {
        let Some(over) = (0..nv).find(|&v| load[v] > d) else {
            break;
        };
        // BFS along charged edges: charge can move from v to a neighbour w
        // over an edge currently charged to v.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nv]; // (from vertex, via edge)
        let mut visited = vec![false; nv];
        let mut queue = std::collections::VecDeque::from([over]);
        visited[over] = true;
        let mut target = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for &k in &incident[v] {
                if charged_to[k] != v {
                    continue;
                }
                let w = other(k, v);
                if visited[w] {
                    continue;
                }
                visited[w] = true;
                parent[w] = Some((v, k));
                if load[w] < d {
                    target = Some(w);
                    break 'bfs;
                }
                queue.push_back(w);
            }
        }
        let Some(mut w) = target else {
            // Every edge charged inside the reachable set stays inside it,
            // so that set alone already needs more than d per vertex.
            let members: Vec<usize> = (0..nv).filter(|&v| visited[v]).collect();
            let edge_count = graph
                .edges
                .iter()
                .filter(|e| visited[e.a] && visited[e.b])
                .count();
            return Err(Error::OrientationInfeasible {
                bound: d,
                edges: edge_count,
                vertices: members.len(),
            });
        };
        // Reverse the path: one unit of charge flows from `over` to `w`.
        load[w] += 1;
        while let Some((v, k)) = parent[w] {
            charged_to[k] = w;
            w = v;
        }
        load[over] -= 1;
    }

    let weights = charged_to
        .iter()
        .zip(&graph.edges)
        .map(|(&c, e)| if c == e.a { (1.0, 0.0) } else { (0.0, 1.0) })
        .collect();
    ProbabilityAssignment::new(graph, weights)
}

/// Feasibility test for max load p/q: integer max-flow on the scaled
/// network (source -> edge: q; edge -> endpoints: q; vertex -> sink: p).
/// All edges can be fully assigned iff the flow saturates q per edge.
fn load_feasible(graph: &OneInclusionGraph, p: u64, q: u64) -> Option<Vec<(f64, f64)>> {
    let ne = graph.edge_count();
    let nv = graph.vertex_count();
    let nodes = 2 + ne + nv;
    let source = 0usize;
    let sink = nodes - 1;
    let edge_node = |k: usize| 1 + k;
    let vertex_node = |v: usize| 1 + ne + v;

    // Adjacency with residual capacities.
    let mut cap: Vec<HashMap<usize, u64>> = vec![HashMap::new(); nodes];
    let add = |cap: &mut Vec<HashMap<usize, u64>>, u: usize, v: usize, c: u64| {
        *cap[u].entry(v).or_insert(0) += c;
        cap[v].entry(u).or_insert(0);
    };
    for (k, e) in graph.edges.iter().enumerate() {
        add(&mut cap, source, edge_node(k), q);
        add(&mut cap, edge_node(k), vertex_node(e.a), q);
        add(&mut cap, edge_node(k), vertex_node(e.b), q);
    }
    for v in 0..nv {
        add(&mut cap, vertex_node(v), sink, p);
    }

    // Edmonds-Karp with deterministic neighbour order.
    let mut flow = 0u64;
    let goal = q * ne as u64;
    loop {
        let mut parent: Vec<Option<usize>> = vec![None; nodes];
        parent[source] = Some(source);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let mut neighbours: Vec<usize> = cap[u]
                .iter()
                .filter(|&(_, &c)| c > 0)
                .map(|(&v, _)| v)
                .collect();
            neighbours.sort_unstable();
            for v in neighbours {
                if parent[v].is_none() {
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
            if parent[sink].is_some() {
                break;
            }
        }
        if parent[sink].is_none() {
            break;
        }
        // Bottleneck along the path.
        let mut bottleneck = u64::MAX;
        let mut v = sink;
        while v != source {
            let u = parent[v].expect("path reaches source");
            bottleneck = bottleneck.min(cap[u][&v]);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v].expect("path reaches source");
            *cap[u].get_mut(&v).expect("forward arc exists") -= bottleneck;
            *cap[v].get_mut(&u).expect("reverse arc exists") += bottleneck;
            v = u;
        }
        flow += bottleneck;
        if flow == goal {
            break;
        }
    }
    if flow < goal {
        return None;
    }
    // Recover shares from residuals: flow(edge -> vertex) = q - residual.
    let shares = graph
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let fa = (q - cap[edge_node(k)][&vertex_node(e.a)]) as f64 / q as f64;
            let fb = (q - cap[edge_node(k)][&vertex_node(e.b)]) as f64 / q as f64;
            (fa, fb)
        })
        .collect();
    Some(shares)
}

/// Fractional assignment minimizing the maximum weighted out-degree. The
/// optimum equals the densest-subgraph ratio, a fraction p/q with q bounded
/// by the vertex count, so scanning candidate fractions with an exact flow
/// feasibility test finds the true minimum.
pub fn orient_fractional(graph: &OneInclusionGraph) -> Result<ProbabilityAssignment> {
    if graph.edge_count() == 0 {
        return ProbabilityAssignment::new(graph, Vec::new());
    }
    let ne = graph.edge_count() as u64;
    let nv = graph.vertex_count() as u64;
    let mut candidates: Vec<(u64, u64)> = Vec::new();
    for q in 1..=nv {
        for p in 0..=(ne * q).min(ne * nv) {
            if p * nv >= q {
                // skip values below 1/|V|; any edge forces at least that
                candidates.push((p, q));
            }
        }
    }
    candidates.sort_by(|&(p1, q1), &(p2, q2)| (p1 * q2).cmp(&(p2 * q1)));
    candidates.dedup_by(|&mut (p1, q1), &mut (p2, q2)| p1 * q2 == p2 * q1);

    // Binary search the smallest feasible candidate load.
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (p, q) = candidates[mid];
        if load_feasible(graph, p, q).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (p, q) = candidates[lo];
    let shares = load_feasible(graph, p, q)
        .ok_or_else(|| Error::InvalidArgument("full edge mass is always assignable".into()))?;
    ProbabilityAssignment::new(graph, shares)
}

/// Label distribution as [P(0), P(1)].
pub type LabelDistribution = [f64; 2];

fn point_mass(label: Label) -> LabelDistribution {
    match label {
        Label::Zero => [1.0, 0.0],
        Label::One => [0.0, 1.0],
    }
}

/// Predict at `test_x` after training on `s`, routing through the graph and
/// its assignment: a unique consistent vertex forces the label; two
/// consistent vertices form an edge, and each endpoint's label is emitted
/// with the share charged to the *other* endpoint (the uncharged side is the
/// one the rule trusts).
pub fn oig_predict(
    graph: &OneInclusionGraph,
    assignment: &ProbabilityAssignment,
    s: &LabeledSample,
    test_x: &Input,
) -> Result<LabelDistribution> {
    let test_idx = test_x.as_index().ok_or_else(|| {
        Error::InvalidArgument("graph prediction needs domain-id inputs".into())
    })?;
    let test_pos = graph.input_position(test_idx).ok_or_else(|| {
        Error::InvalidArgument(format!("test point {test_idx} is outside the graph"))
    })?;
    let mut pinned: Vec<Option<Label>> = vec![None; graph.inputs.len()];
    for e in s {
        let idx = e.x.as_index().ok_or_else(|| {
            Error::InvalidArgument("graph prediction needs domain-id inputs".into())
        })?;
        let pos = graph.input_position(idx).ok_or_else(|| {
            Error::InvalidArgument(format!("training point {idx} is outside the graph"))
        })?;
        match pinned[pos] {
            Some(l) if l != e.y => {
                return Err(Error::Unrealizable(format!(
                    "training point {idx} carries both labels"
                )))
            }
            _ => pinned[pos] = Some(e.y),
        }
    }
    let consistent: Vec<usize> = (0..graph.vertex_count())
        .filter(|&v| {
            graph.vertices[v]
                .iter()
                .zip(&pinned)
                .all(|(l, p)| p.map_or(true, |pl| pl == *l))
        })
        .collect();
    match consistent.len() {
        0 => Err(Error::Unrealizable(
            "no vertex is consistent with the training sample".into(),
        )),
        1 => Ok(point_mass(graph.vertices[consistent[0]][test_pos])),
        2 => {
            let (a, b) = (consistent[0], consistent[1]);
            let k = graph
                .edges
                .iter()
                .position(|e| e.a == a && e.b == b && e.coord == test_pos)
                .ok_or_else(|| {
                    Error::InvalidArgument(
                        "two consistent vertices must form an edge at the test point; \
                         the sample does not cover the rest of the graph"
                            .into(),
                    )
                })?;
            let mut dist = [0.0, 0.0];
            // Emit a's label with the share charged to b, and vice versa.
            let la = graph.vertices[a][test_pos];
            let lb = graph.vertices[b][test_pos];
            dist[la.as_bit() as usize] += assignment.share(graph, k, b);
            dist[lb.as_bit() as usize] += assignment.share(graph, k, a);
            Ok(dist)
        }
        _ => Err(Error::InvalidArgument(
            "more than two consistent vertices; the training sample must pin \
             every graph input except the test point"
                .into(),
        )),
    }
}

/// One-shot transductive prediction for a class with orientation budget `d`:
/// build the graph over the training inputs plus the test point, orient it,
/// and route the prediction. The graph depends only on the *set* of points,
/// so every leave-one-out call over one (n+1)-tuple shares one orientation.
pub fn oig_transductive_predict(
    class: &FiniteClass,
    d: usize,
    s: &LabeledSample,
    test_x: &Input,
) -> Result<LabelDistribution> {
    let mut inputs: Vec<usize> = Vec::with_capacity(s.len() + 1);
    for e in s {
        inputs.push(e.x.as_index().ok_or_else(|| {
            Error::InvalidArgument("graph prediction needs domain-id inputs".into())
        })?);
    }
    inputs.push(test_x.as_index().ok_or_else(|| {
        Error::InvalidArgument("graph prediction needs domain-id inputs".into())
    })?);
    let graph = build_graph(class, &inputs)?;
    let assignment = orient_deterministic(&graph, d)?;
    oig_predict(&graph, &assignment, s, test_x)
}

/// The explicit randomized rule for the point-function class: once a
/// 1-label is seen the target is identified and predictions are forced;
/// otherwise a fresh point gets label 0 with probability n/(n+1).
pub fn singleton_predict(s: &LabeledSample, test_x: &Input) -> Result<LabelDistribution> {
    let mut one_at: Option<&Input> = None;
    for e in s {
        if e.y == Label::One {
            match one_at {
                Some(x) if *x != e.x => {
                    return Err(Error::Unrealizable(
                        "two distinct 1-labeled inputs do not fit a single point function"
                            .into(),
                    ))
                }
                _ => one_at = Some(&e.x),
            }
        }
    }
    if let Some(x_star) = one_at {
        if s.iter().any(|e| e.y == Label::Zero && e.x == *x_star) {
            return Err(Error::Unrealizable(
                "an input carries both labels".into(),
            ));
        }
        return Ok(point_mass(Label::from_bool(test_x == x_star)));
    }
    if s.contains_input(test_x) {
        return Ok(point_mass(Label::Zero));
    }
    let n = s.len() as f64;
    Ok([n / (n + 1.0), 1.0 / (n + 1.0)])
}

/// Per-index leave-one-out expected losses of a transductive predictor over
/// an (n+1)-point labeled sequence, plus their mean.
#[derive(Clone, Debug, Serialize)]
pub struct LooProfile {
    pub errors: Vec<f64>,
    pub average: f64,
}

pub fn loo_error<F>(mut predict: F, seq: &LabeledSample) -> Result<LooProfile>
where
    F: FnMut(&LabeledSample, &Input) -> Result<LabelDistribution>,
{
    if seq.is_empty() {
        return Err(Error::Empty("sequence"));
    }
    let mut errors = Vec::with_capacity(seq.len());
    for i in 0..seq.len() {
        let held_out = seq.get(i)?.clone();
        let train = seq.without(i)?;
        let dist = predict(&train, &held_out.x)?;
        errors.push(dist[held_out.y.flip().as_bit() as usize]);
    }
    let average = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(LooProfile { errors, average })
}

/// Information budget computed from a leave-one-out error oracle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LooEcmiBound {
    /// Total budget in nats (already scaled by n).
    pub value: f64,
    /// Zero when the subset enumeration was exhaustive.
    pub stderr: f64,
    pub exact: bool,
}

const LOO_BOUND_EXACT_LIMIT: usize = 16;
const LOO_BOUND_SAMPLES: usize = 2000;

/// Convert a leave-one-out error oracle into a transductive eCMI budget for
/// a 2n-point supersample draw:
///
///   n * [ h2(k) + k*log 2 - avg_J avg_j h2(P_e(J - j; j)) ],
///
/// where k averages P_e over the same (n+1)-subsets J. Exhaustive over J up
/// to 2n = 16; beyond that J is sampled and a delta-method standard error
/// accompanies the value.
pub fn loo_ecmi_bound<F>(mut oracle: F, z: &LabeledSample) -> Result<LooEcmiBound>
where
    F: FnMut(&LabeledSample, &Example) -> Result<f64>,
{
    if z.len() < 2 || z.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "the budget needs an even number of examples >= 2, got {}",
            z.len()
        )));
    }
    let two_n = z.len();
    let n = two_n / 2;

    // Per-subset statistics: mean error probability and mean h2(error).
    let eval_subset = |oracle: &mut F, subset: &[usize]| -> Result<(f64, f64)> {
        let mut err_sum = 0.0;
        let mut ent_sum = 0.0;
        for (slot, &j) in subset.iter().enumerate() {
            let mut train_positions: Vec<usize> = subset.to_vec();
            train_positions.remove(slot);
            let train = z.subsequence(&train_positions)?;
            let test = z.get(j)?;
            let p = oracle(&train, test)?;
            err_sum += p;
            ent_sum += binary_entropy(p);
        }
        let m = subset.len() as f64;
        Ok((err_sum / m, ent_sum / m))
    };

    let mut kappas = Vec::new();
    let mut entropies = Vec::new();
    let exact = two_n <= LOO_BOUND_EXACT_LIMIT;
    if exact {
        for subset in (0..two_n).combinations(n + 1) {
            let (k, h) = eval_subset(&mut oracle, &subset)?;
            kappas.push(k);
            entropies.push(h);
        }
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_5b5e7);
        let mut indices: Vec<usize> = (0..two_n).collect();
        for _ in 0..LOO_BOUND_SAMPLES {
            indices.shuffle(&mut rng);
            let mut subset: Vec<usize> = indices[..n + 1].to_vec();
            subset.sort_unstable();
            let (k, h) = eval_subset(&mut oracle, &subset)?;
            kappas.push(k);
            entropies.push(h);
        }
    }

    let m = kappas.len() as f64;
    let kappa = kappas.iter().sum::<f64>() / m;
    let entropy_term = entropies.iter().sum::<f64>() / m;
    let value = n as f64 * (binary_entropy(kappa) + kappa * 2f64.ln() - entropy_term);
    if exact {
        return Ok(LooEcmiBound {
            value,
            stderr: 0.0,
            exact,
        });
    }

    // Delta method through (kappa, entropy_term) |-> bound.
    let var_k = kappas.iter().map(|k| (k - kappa).powi(2)).sum::<f64>() / (m * (m - 1.0));
    let var_h = entropies
        .iter()
        .map(|h| (h - entropy_term).powi(2))
        .sum::<f64>()
        / (m * (m - 1.0));
    let cov = kappas
        .iter()
        .zip(&entropies)
        .map(|(k, h)| (k - kappa) * (h - entropy_term))
        .sum::<f64>()
        / (m * (m - 1.0));
    let dk = if kappa > 0.0 && kappa < 1.0 {
        ((1.0 - kappa) / kappa).ln() + 2f64.ln()
    } else {
        0.0
    };
    let dh = -1.0;
    let variance = (dk * dk * var_k + dh * dh * var_h + 2.0 * dk * dh * cov).max(0.0);
    Ok(LooEcmiBound {
        value,
        stderr: n as f64 * variance.sqrt(),
        exact,
    })
}
