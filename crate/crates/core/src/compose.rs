//! Score FSTs, composition with a decoder graph, and per-path occupancy
//! (gamma) matrices.

use std::collections::{HashMap, VecDeque};
use std::io::Read;

use crate::error::{Error, Result};
use crate::fst::{Edge, EdgeId, Label, Path, StateId, Wfst, EPSILON};

/// T×Q logits, row-major. Cluster index `q` (0-based) carries label `q + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    frames: usize,
    clusters: usize,
    values: Vec<f64>,
}

impl LogitMatrix {
    pub fn from_flat(frames: usize, clusters: usize, values: Vec<f64>) -> Result<Self> {
        if frames == 0 || clusters == 0 {
            return Err(Error::Dimension(format!(
                "logit matrix must be at least 1x1, got {frames}x{clusters}"
            )));
        }
        if values.len() != frames * clusters {
            return Err(Error::Dimension(format!(
                "{} values for a {frames}x{clusters} logit matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite logit at ({}, {})",
                i / clusters,
                i % clusters
            )));
        }
        Ok(LogitMatrix {
            frames,
            clusters,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let clusters = rows.first().map_or(0, Vec::len);
        if let Some(t) = rows.iter().position(|r| r.len() != clusters) {
            return Err(Error::Dimension(format!(
                "row {t} has {} columns, expected {clusters}",
                rows[t].len()
            )));
        }
        LogitMatrix::from_flat(rows.len(), clusters, rows.concat())
    }

    pub fn zeros(frames: usize, clusters: usize) -> Result<Self> {
        LogitMatrix::from_flat(frames, clusters, vec![0.0; frames * clusters])
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn get(&self, t: usize, q: usize) -> f64 {
        self.values[t * self.clusters + q]
    }

    pub fn set(&mut self, t: usize, q: usize, value: f64) {
        assert!(value.is_finite(), "logits must be finite");
        self.values[t * self.clusters + q] = value;
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.clusters..(t + 1) * self.clusters]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Read CSV: one row per frame, one decimal column per cluster.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(line, e.to_string())
            })?;
            let line = record
                .position()
                .map_or(rows.len() + 1, |p| p.line() as usize);
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(line, format!("bad logit {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                let first: &Vec<f64> = first;
                if first.len() != row.len() {
                    return Err(Error::parse(
                        line,
                        format!("{} columns, expected {}", row.len(), first.len()),
                    ));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::parse(1, "empty logit file"));
        }
        LogitMatrix::from_rows(&rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for t in 0..self.frames {
            let row: Vec<String> = self.row(t).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Occupancy of (frame, cluster) pairs along a path; the gradient of the
/// path log-weight with respect to the logits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaMatrix {
    frames: usize,
    clusters: usize,
    counts: Vec<u32>,
}

impl GammaMatrix {
    /// One-hot rows from a per-frame cluster label sequence.
    pub fn from_labels(labels: &[Label], clusters: usize) -> Result<Self> {
        let mut counts = vec![0u32; labels.len() * clusters];
        for (t, &label) in labels.iter().enumerate() {
            if label == EPSILON || label as usize > clusters {
                return Err(Error::Dimension(format!(
                    "label {label} at frame {t} outside clusters 1..={clusters}"
                )));
            }
            counts[t * clusters + label as usize - 1] += 1;
        }
        Ok(GammaMatrix {
            frames: labels.len(),
            clusters,
            counts,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn get(&self, t: usize, q: usize) -> u32 {
        self.counts[t * self.clusters + q]
    }

    pub fn row(&self, t: usize) -> &[u32] {
        &self.counts[t * self.clusters..(t + 1) * self.clusters]
    }

    /// Cluster index (0-based) occupied at frame `t`.
    pub fn cluster_at(&self, t: usize) -> Option<usize> {
        self.row(t).iter().position(|&c| c > 0)
    }

    /// Nonzero entries as flat row-major indices.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }
}

/// Sausage FST: states `0..=T`, one edge `t -> t+1` per cluster with
/// `ilabel = olabel = q + 1` and log-weight `z[t][q]`.
pub fn build_score_fst(z: &LogitMatrix) -> Wfst {
    let mut edges = Vec::with_capacity(z.frames * z.clusters);
    for t in 0..z.frames {
        for q in 0..z.clusters {
            let label = (q + 1) as Label;
            edges.push(Edge {
                src: t,
                dst: t + 1,
                ilabel: label,
                olabel: label,
                log_weight: z.get(t, q),
            });
        }
    }
    Wfst::new(z.frames + 1, 0, z.frames, edges).expect("score FST is well formed")
}

/// Identity transducer (`q -> q`, weight one) unrolled over `frames` frames.
/// A looping single-state identity would need edges leaving the final state.
pub fn identity_decoder(frames: usize, clusters: usize) -> Wfst {
    let mut edges = Vec::with_capacity(frames * clusters);
    for t in 0..frames {
        for q in 1..=clusters as Label {
            edges.push(Edge {
                src: t,
                dst: t + 1,
                ilabel: q,
                olabel: q,
                log_weight: 0.0,
            });
        }
    }
    Wfst::new(frames + 1, 0, frames, edges).expect("unrolled identity is well formed")
}

/// Transducer composition `a ∘ b`: input tape from `a`, output tape from `b`,
/// log-weights added. Result states are connected `(a, b)` pairs, numbered
/// in breadth-first discovery order from the initial pair.
///
/// Epsilons are supported on at most one side of the matched tape: output
/// epsilons of `a` advance `a` alone, input epsilons of `b` advance `b`
/// alone. Having both would need an epsilon filter and is rejected.
pub fn compose(a: &Wfst, b: &Wfst) -> Result<Wfst> {
    let a_eps = a.edges().iter().any(|e| e.olabel == EPSILON);
    let b_eps = b.edges().iter().any(|e| e.ilabel == EPSILON);
    if a_eps && b_eps {
        return Err(Error::UnsupportedComposition(
            "epsilons on both sides of the matched tape".into(),
        ));
    }

    let mut b_index: HashMap<(StateId, Label), Vec<EdgeId>> = HashMap::new();
    for (id, e) in b.edges().iter().enumerate() {
        b_index.entry((e.src, e.ilabel)).or_default().push(id);
    }

    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs: Vec<(StateId, StateId)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut edges = Vec::new();

    let start = (a.initial(), b.initial());
    ids.insert(start, 0);
    pairs.push(start);
    queue.push_back(0);

    let mut intern = |pair: (StateId, StateId),
                      pairs: &mut Vec<(StateId, StateId)>,
                      queue: &mut VecDeque<StateId>| {
        *ids.entry(pair).or_insert_with(|| {
            pairs.push(pair);
            queue.push_back(pairs.len() - 1);
            pairs.len() - 1
        })
    };

    while let Some(src) = queue.pop_front() {
        let (sa, sb) = pairs[src];
        for &ia in a.out_edges(sa) {
            let ea = a.edge(ia);
            if ea.olabel == EPSILON {
                let dst = intern((ea.dst, sb), &mut pairs, &mut queue);
                edges.push(Edge {
                    src,
                    dst,
                    ilabel: ea.ilabel,
                    olabel: EPSILON,
                    log_weight: ea.log_weight,
                });
                continue;
            }
            if let Some(matches) = b_index.get(&(sb, ea.olabel)) {
                for &ib in matches {
                    let eb = b.edge(ib);
                    let dst = intern((ea.dst, eb.dst), &mut pairs, &mut queue);
                    edges.push(Edge {
                        src,
                        dst,
                        ilabel: ea.ilabel,
                        olabel: eb.olabel,
                        log_weight: ea.log_weight + eb.log_weight,
                    });
                }
            }
        }
        if let Some(moves) = b_index.get(&(sb, EPSILON)) {
            for &ib in moves {
                let eb = b.edge(ib);
                let dst = intern((sa, eb.dst), &mut pairs, &mut queue);
                edges.push(Edge {
                    src,
                    dst,
                    ilabel: EPSILON,
                    olabel: eb.olabel,
                    log_weight: eb.log_weight,
                });
            }
        }
    }

    let Some(&final_state) = ids.get(&(a.final_state(), b.final_state())) else {
        return Ok(Wfst::empty());
    };
    let raw = Wfst::new(pairs.len(), 0, final_state, edges)?;
    Ok(connect(&raw))
}

/// Drop states that are unreachable or cannot reach the final state,
/// keeping relative state and edge order.
pub fn connect(fst: &Wfst) -> Wfst {
    let acc = fst.accessible();
    let coacc = fst.coaccessible();
    if !acc[fst.final_state()] {
        return Wfst::empty();
    }
    let mut remap = vec![usize::MAX; fst.num_states()];
    let mut next = 0;
    for s in 0..fst.num_states() {
        if acc[s] && coacc[s] {
            remap[s] = next;
            next += 1;
        }
    }
    let edges = fst
        .edges()
        .iter()
        .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
        .map(|e| Edge {
            src: remap[e.src],
            dst: remap[e.dst],
            ..*e
        })
        .collect();
    Wfst::new(next, remap[fst.initial()], remap[fst.final_state()], edges)
        .expect("connected sub-FST is well formed")
}

/// Non-epsilon input labels along a sequence of edges.
pub fn frame_labels(fst: &Wfst, edges: &[EdgeId]) -> Vec<Label> {
    edges
        .iter()
        .map(|&id| fst.edge(id).ilabel)
        .filter(|&l| l != EPSILON)
        .collect()
}

/// Gradient of a path's log-weight with respect to the `frames × clusters`
/// logits.
pub fn get_gammas(fst: &Wfst, path: &Path, frames: usize, clusters: usize) -> Result<GammaMatrix> {
    let labels = frame_labels(fst, path.edges());
    if labels.len() != frames {
        return Err(Error::Dimension(format!(
            "path has {} non-epsilon input labels but there are {frames} frames",
            labels.len()
        )));
    }
    GammaMatrix::from_labels(&labels, clusters)
}
