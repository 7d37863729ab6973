//! Weighted finite-state transducers over the probability semiring.
//!
//! Weights are stored as natural logs, so path weights are sums and a zero
//! weight is `-inf`. Every [`Wfst`] has exactly one final state with trivial
//! final weight and no outgoing edges.
//!
//! The text format is a restricted OpenFst-style listing:
//!
//! ```text
//! src dst ilabel olabel logweight
//! ...
//! final_state
//! ```
//!
//! The initial state is implicitly `0` and label `0` is epsilon on both tapes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

pub type StateId = usize;
pub type EdgeId = usize;
pub type Label = u32;

/// Reserved epsilon label on both tapes.
pub const EPSILON: Label = 0;

/// Default enumeration bound used by the exact oracles.
pub const DEFAULT_MAX_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: StateId,
    pub dst: StateId,
    pub ilabel: Label,
    pub olabel: Label,
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wfst {
    num_states: usize,
    initial: StateId,
    final_state: StateId,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
}

impl Wfst {
    /// Validate and build an FST. Outgoing edge lists keep edge-id order.
    pub fn new(
        num_states: usize,
        initial: StateId,
        final_state: StateId,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        if initial >= num_states || final_state >= num_states {
            return Err(Error::InvalidFst(format!(
                "initial {initial} / final {final_state} out of range for {num_states} states"
            )));
        }
        let mut out_edges = vec![Vec::new(); num_states];
        for (id, e) in edges.iter().enumerate() {
            if e.src >= num_states || e.dst >= num_states {
                return Err(Error::InvalidFst(format!(
                    "edge {id} references state outside 0..{num_states}"
                )));
            }
            if e.src == final_state {
                return Err(Error::InvalidFst(format!(
                    "edge {id} leaves the final state {final_state}"
                )));
            }
            if e.log_weight.is_nan() || e.log_weight == f64::INFINITY {
                return Err(Error::InvalidFst(format!(
                    "edge {id} has log-weight {}",
                    e.log_weight
                )));
            }
            out_edges[e.src].push(id);
        }
        Ok(Wfst {
            num_states,
            initial,
            final_state,
            edges,
            out_edges,
        })
    }

    /// An FST with no complete path.
    pub fn empty() -> Self {
        Wfst::new(2, 0, 1, Vec::new()).expect("two-state empty FST is valid")
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn final_state(&self) -> StateId {
        self.final_state
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, state: StateId) -> &[EdgeId] {
        &self.out_edges[state]
    }

    /// States in topological order (Kahn), or [`Error::Cyclic`].
    pub fn topological_order(&self) -> Result<Vec<StateId>> {
        let mut indegree = vec![0usize; self.num_states];
        for e in &self.edges {
            indegree[e.dst] += 1;
        }
        let mut stack: Vec<StateId> = (0..self.num_states)
            .rev()
            .filter(|&s| indegree[s] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.num_states);
        while let Some(s) = stack.pop() {
            order.push(s);
            for &id in self.out_edges[s].iter().rev() {
                let d = self.edges[id].dst;
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    stack.push(d);
                }
            }
        }
        if order.len() == self.num_states {
            Ok(order)
        } else {
            Err(Error::Cyclic)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// States reachable from the initial state.
    pub fn accessible(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(s) = stack.pop() {
            for &id in &self.out_edges[s] {
                let d = self.edges[id].dst;
                if !seen[d] {
                    seen[d] = true;
                    stack.push(d);
                }
            }
        }
        seen
    }

    /// States from which the final state is reachable.
    pub fn coaccessible(&self) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.num_states];
        for e in &self.edges {
            incoming[e.dst].push(e.src);
        }
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![self.final_state];
        seen[self.final_state] = true;
        while let Some(s) = stack.pop() {
            for &p in &incoming[s] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Number of complete paths, saturating at `u128::MAX`.
    pub fn count_paths(&self) -> Result<u128> {
        let order = self.topological_order()?;
        let mut count = vec![0u128; self.num_states];
        count[self.final_state] = 1;
        for &s in order.iter().rev() {
            if s == self.final_state {
                continue;
            }
            count[s] = self.out_edges[s].iter().fold(0u128, |acc, &id| {
                acc.saturating_add(count[self.edges[id].dst])
            });
        }
        Ok(count[self.initial])
    }

    /// Parse the arc-list text format.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut final_state: Option<(StateId, usize)> = None;
        let mut max_state = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.len() {
                1 => {
                    let s = parse_state(fields[0], lineno)?;
                    if let Some((prev, prev_line)) = final_state {
                        return Err(Error::parse(
                            lineno,
                            format!("multiple final states ({prev} on line {prev_line}, {s} here)"),
                        ));
                    }
                    final_state = Some((s, lineno));
                }
                5 => {
                    let src = parse_state(fields[0], lineno)?;
                    let dst = parse_state(fields[1], lineno)?;
                    let ilabel = parse_label(fields[2], lineno)?;
                    let olabel = parse_label(fields[3], lineno)?;
                    let log_weight: f64 = fields[4].parse().map_err(|_| {
                        Error::parse(lineno, format!("bad log-weight {:?}", fields[4]))
                    })?;
                    if log_weight.is_nan() || log_weight == f64::INFINITY {
                        return Err(Error::parse(
                            lineno,
                            format!("log-weight must be finite or -inf, got {}", fields[4]),
                        ));
                    }
                    max_state = max_state.max(src).max(dst);
                    edges.push((
                        lineno,
                        Edge {
                            src,
                            dst,
                            ilabel,
                            olabel,
                            log_weight,
                        },
                    ));
                }
                n => {
                    return Err(Error::parse(
                        lineno,
                        format!("expected 5 fields (arc) or 1 field (final), found {n}"),
                    ))
                }
            }
        }

        let (final_state, final_line) = final_state
            .ok_or_else(|| Error::parse(text.lines().count().max(1), "missing final state"))?;
        if final_state > max_state {
            return Err(Error::parse(
                final_line,
                format!("final state {final_state} is not referenced by any arc"),
            ));
        }
        if let Some((lineno, _)) = edges.iter().find(|(_, e)| e.src == final_state) {
            return Err(Error::parse(
                *lineno,
                format!("edge leaves the final state {final_state}"),
            ));
        }
        Wfst::new(
            max_state + 1,
            0,
            final_state,
            edges.into_iter().map(|(_, e)| e).collect(),
        )
    }

    pub fn read_text<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Wfst::parse_text(&text)
    }

    /// Serialize to the arc-list text format. Only valid when the initial
    /// state is `0`, which every FST built by this crate satisfies.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Wfst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(
                f,
                "{} {} {} {} {:?}",
                e.src, e.dst, e.ilabel, e.olabel, e.log_weight
            )?;
        }
        writeln!(f, "{}", self.final_state)
    }
}

fn parse_state(field: &str, lineno: usize) -> Result<StateId> {
    field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad state id {field:?}")))
}

fn parse_label(field: &str, lineno: usize) -> Result<Label> {
    field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad label {field:?}")))
}

/// A complete path: edge ids from the initial to the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    edges: Vec<EdgeId>,
    log_weight: f64,
}

impl Path {
    /// Check incidence and endpoints, summing log-weights in edge order.
    pub fn from_edges(fst: &Wfst, edges: Vec<EdgeId>) -> Result<Self> {
        let log_weight = path_log_weight_of(fst, &edges)?;
        Ok(Path { edges, log_weight })
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

fn path_log_weight_of(fst: &Wfst, edges: &[EdgeId]) -> Result<f64> {
    let mut state = fst.initial();
    let mut total = 0.0;
    for (k, &id) in edges.iter().enumerate() {
        let e = fst
            .edges
            .get(id)
            .ok_or_else(|| Error::InvalidPath(format!("edge id {id} out of range")))?;
        if e.src != state {
            return Err(Error::InvalidPath(format!(
                "edge {id} at position {k} starts at {} but the path is at state {state}",
                e.src
            )));
        }
        total += e.log_weight;
        state = e.dst;
    }
    if state != fst.final_state() {
        return Err(Error::InvalidPath(format!(
            "path ends at state {state}, not the final state {}",
            fst.final_state()
        )));
    }
    Ok(total)
}

/// Sum of edge log-weights along `path`, re-validated against `fst`.
pub fn path_log_weight(fst: &Wfst, path: &Path) -> Result<f64> {
    path_log_weight_of(fst, &path.edges)
}

/// Sequence of non-epsilon output labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordSequence(Vec<Label>);

impl WordSequence {
    pub fn new(tokens: Vec<Label>) -> Result<Self> {
        if tokens.contains(&EPSILON) {
            return Err(Error::InvalidArgument(
                "word sequence contains epsilon".into(),
            ));
        }
        Ok(WordSequence(tokens))
    }

    pub fn tokens(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse whitespace-separated label ids.
    pub fn parse_ids(text: &str) -> Result<Self> {
        let tokens = text
            .split_whitespace()
            .map(|t| {
                t.parse::<Label>()
                    .map_err(|_| Error::parse(1, format!("bad token id {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WordSequence::new(tokens)
    }
}

impl fmt::Display for WordSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        Ok(())
    }
}

/// Output projection of a path (epsilons dropped, repeats kept).
pub fn collapse_path(fst: &Wfst, path: &Path) -> Result<WordSequence> {
    path_log_weight(fst, path)?;
    Ok(collapse_edges(fst, path.edges()))
}

pub(crate) fn collapse_edges(fst: &Wfst, edges: &[EdgeId]) -> WordSequence {
    WordSequence(
        edges
            .iter()
            .map(|&id| fst.edge(id).olabel)
            .filter(|&l| l != EPSILON)
            .collect(),
    )
}

/// Every complete path, ordered lexicographically by edge-id sequence.
pub fn enumerate_paths(fst: &Wfst, max_paths: usize) -> Result<Vec<Path>> {
    let count = fst.count_paths()?;
    if count > max_paths as u128 {
        return Err(Error::PathOverflow(max_paths));
    }
    let live = fst.coaccessible();
    let mut paths = Vec::with_capacity(count as usize);
    if !live[fst.initial()] {
        return Ok(paths);
    }

    // Explicit DFS; out-edges are visited in ascending id order, and since the
    // final state has no out-edges no path is a prefix of another, so the
    // visitation order is lexicographic.
    let mut prefix: Vec<EdgeId> = Vec::new();
    let mut weights: Vec<f64> = vec![0.0];
    let mut cursor: Vec<(StateId, usize)> = vec![(fst.initial(), 0)];
    while let Some((state, next)) = cursor.last_mut() {
        if *state == fst.final_state() {
            paths.push(Path {
                edges: prefix.clone(),
                log_weight: *weights.last().unwrap(),
            });
            cursor.pop();
            prefix.pop();
            weights.pop();
            continue;
        }
        let outs = fst.out_edges(*state);
        if *next >= outs.len() {
            cursor.pop();
            prefix.pop();
            weights.pop();
            continue;
        }
        let id = outs[*next];
        *next += 1;
        let e = fst.edge(id);
        if live[e.dst] {
            let w = weights.last().unwrap() + e.log_weight;
            prefix.push(id);
            weights.push(w);
            cursor.push((e.dst, 0));
        }
    }
    Ok(paths)
}

/// Log of the total weight of a set of paths.
pub(crate) fn log_partition(paths: &[Path]) -> Result<f64> {
    let log_z = log_sum_exp(paths.iter().map(|p| p.log_weight));
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Degenerate("total path weight is zero".into()));
    }
    if !log_z.is_finite() {
        return Err(Error::Degenerate(format!("total log-weight is {log_z}")));
    }
    Ok(log_z)
}

/// Globally normalized distribution over output word sequences, by
/// enumeration with [`DEFAULT_MAX_PATHS`].
pub fn path_distribution(fst: &Wfst) -> Result<BTreeMap<WordSequence, f64>> {
    path_distribution_bounded(fst, DEFAULT_MAX_PATHS)
}

pub fn path_distribution_bounded(
    fst: &Wfst,
    max_paths: usize,
) -> Result<BTreeMap<WordSequence, f64>> {
    let paths = enumerate_paths(fst, max_paths)?;
    let log_z = log_partition(&paths)?;
    let mut dist = BTreeMap::new();
    for p in &paths {
        *dist.entry(collapse_edges(fst, &p.edges)).or_insert(0.0) += (p.log_weight - log_z).exp();
    }
    Ok(dist)
}

/// Vocabulary strings to label ids, from `token id` lines.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    to_id: HashMap<String, Label>,
    to_token: BTreeMap<Label, String>,
}

impl SymbolTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = SymbolTable::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(token), Some(id), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(lineno, "expected `token id`"));
            };
            let id: Label = id
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad id {id:?}")))?;
            if table.to_id.insert(token.to_string(), id).is_some() {
                return Err(Error::parse(lineno, format!("duplicate token {token:?}")));
            }
            table.to_token.insert(id, token.to_string());
        }
        Ok(table)
    }

    pub fn id(&self, token: &str) -> Option<Label> {
        self.to_id.get(token).copied()
    }

    pub fn token(&self, id: Label) -> Option<&str> {
        self.to_token.get(&id).map(String::as_str)
    }

    /// Map whitespace-separated tokens to a word sequence.
    pub fn encode(&self, text: &str) -> Result<WordSequence> {
        let tokens = text
            .split_whitespace()
            .map(|t| {
                self.id(t)
                    .ok_or_else(|| Error::parse(1, format!("unknown token {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WordSequence::new(tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(src: StateId, dst: StateId, ilabel: Label, olabel: Label, w: f64) -> Edge {
        Edge {
            src,
            dst,
            ilabel,
            olabel,
            log_weight: w,
        }
    }

    #[test]
    fn parses_single_edge() {
        let fst = Wfst::parse_text("0 1 1 1 0.0\n1").unwrap();
        assert_eq!(fst.num_states(), 2);
        assert_eq!(fst.num_edges(), 1);
        assert_eq!(fst.edge(0).log_weight, 0.0);
        assert_eq!(fst.final_state(), 1);
    }

    #[test]
    fn parses_parallel_edges() {
        let fst = Wfst::parse_text("0 1 1 2 -0.693147\n0 1 2 3 -1.203973\n1").unwrap();
        assert_eq!(fst.num_states(), 2);
        assert_eq!(fst.num_edges(), 2);
        assert!((fst.edge(0).log_weight.exp() - 0.5).abs() < 1e-6);
        assert!((fst.edge(1).log_weight.exp() - 0.3).abs() < 1e-6);
        assert_eq!(fst.edge(1).olabel, 3);
    }

    #[test]
    fn rejects_multiple_finals() {
        let err = Wfst::parse_text("0 1 1 1 0.0\n0 2 1 1 0.0\n1\n2").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("multiple final"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_lines_with_line_numbers() {
        let cases = [
            ("0 1 1 1\n1", 1),
            ("0 1 1 1 0.0\n0 1 x 1 0.0\n1", 2),
            ("0 1 1 1 nan\n1", 1),
            ("0 1 1 1 0.0\n1 2 1 1 0.0\n1", 2),
            ("0 1 1 1 0.0\n7", 2),
            ("0 1 1 1 0.0\n", 1),
        ];
        for (text, want) in cases {
            match Wfst::parse_text(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn accepts_negative_infinity_weights() {
        let fst = Wfst::parse_text("0 1 1 1 -inf\n0 1 2 2 0\n1").unwrap();
        assert_eq!(fst.edge(0).log_weight, f64::NEG_INFINITY);
        let dist = path_distribution(&fst).unwrap();
        assert_eq!(dist[&WordSequence(vec![2])], 1.0);
        assert_eq!(dist[&WordSequence(vec![1])], 0.0);
        let round = Wfst::parse_text(&fst.to_text()).unwrap();
        assert_eq!(round, fst);
    }

    #[test]
    fn path_weights() {
        let fst = Wfst::parse_text("0 1 1 1 0.0\n1").unwrap();
        let p = Path::from_edges(&fst, vec![0]).unwrap();
        assert_eq!(path_log_weight(&fst, &p).unwrap(), 0.0);

        let fst = Wfst::new(
            3,
            0,
            2,
            vec![edge(0, 1, 1, 1, 2f64.ln()), edge(1, 2, 1, 1, 3f64.ln())],
        )
        .unwrap();
        let p = Path::from_edges(&fst, vec![0, 1]).unwrap();
        assert!((path_log_weight(&fst, &p).unwrap() - 6f64.ln()).abs() < 1e-15);

        let single = Wfst::new(1, 0, 0, vec![]).unwrap();
        let p = Path::from_edges(&single, vec![]).unwrap();
        assert_eq!(path_log_weight(&single, &p).unwrap(), 0.0);
    }

    #[test]
    fn non_incident_path_is_rejected() {
        let fst = Wfst::new(3, 0, 2, vec![edge(0, 1, 1, 1, 0.0), edge(1, 2, 1, 1, 0.0)]).unwrap();
        assert!(matches!(
            Path::from_edges(&fst, vec![1, 0]),
            Err(Error::InvalidPath(_))
        ));
        assert!(matches!(
            Path::from_edges(&fst, vec![0]),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn collapse_drops_epsilons_only() {
        let chain = |olabels: &[Label]| {
            let edges = olabels
                .iter()
                .enumerate()
                .map(|(i, &o)| edge(i, i + 1, 1, o, 0.0))
                .collect();
            Wfst::new(olabels.len() + 1, 0, olabels.len(), edges).unwrap()
        };
        for (olabels, want) in [
            (vec![5, EPSILON, 7], vec![5, 7]),
            (vec![EPSILON, EPSILON], vec![]),
            (vec![3, 3], vec![3, 3]),
        ] {
            let fst = chain(&olabels);
            let path = Path::from_edges(&fst, (0..olabels.len()).collect()).unwrap();
            assert_eq!(collapse_path(&fst, &path).unwrap().tokens(), &want[..]);
        }
    }

    #[test]
    fn enumeration_counts_and_order() {
        let chain = Wfst::new(3, 0, 2, vec![edge(0, 1, 1, 1, 0.0), edge(1, 2, 1, 1, 0.0)]).unwrap();
        assert_eq!(enumerate_paths(&chain, 10).unwrap().len(), 1);

        let grid = Wfst::new(
            3,
            0,
            2,
            vec![
                edge(1, 2, 1, 1, 0.0),
                edge(0, 1, 1, 1, 0.0),
                edge(0, 1, 2, 2, 0.0),
                edge(1, 2, 2, 2, 0.0),
            ],
        )
        .unwrap();
        let paths = enumerate_paths(&grid, 10).unwrap();
        let seqs: Vec<Vec<EdgeId>> = paths.iter().map(|p| p.edges().to_vec()).collect();
        assert_eq!(seqs, vec![vec![1, 0], vec![1, 3], vec![2, 0], vec![2, 3]]);

        let diamond = Wfst::new(
            4,
            0,
            3,
            vec![
                edge(0, 1, 1, 1, 0.0),
                edge(0, 2, 1, 1, 0.0),
                edge(1, 3, 1, 1, 0.0),
                edge(2, 3, 1, 1, 0.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            enumerate_paths(&diamond, 1),
            Err(Error::PathOverflow(1))
        ));
    }

    #[test]
    fn enumeration_rejects_cycles() {
        let cyclic = Wfst::new(
            3,
            0,
            2,
            vec![
                edge(0, 1, 1, 1, 0.0),
                edge(1, 0, 1, 1, 0.0),
                edge(1, 2, 1, 1, 0.0),
            ],
        )
        .unwrap();
        assert!(!cyclic.is_acyclic());
        assert!(matches!(enumerate_paths(&cyclic, 10), Err(Error::Cyclic)));
    }

    #[test]
    fn distribution_examples() {
        let single = Wfst::parse_text("0 1 1 4 0.0\n1").unwrap();
        let dist = path_distribution(&single).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[&WordSequence(vec![4])], 1.0);

        let two = Wfst::new(
            2,
            0,
            1,
            vec![edge(0, 1, 1, 1, 2f64.ln()), edge(0, 1, 2, 2, 3f64.ln())],
        )
        .unwrap();
        let dist = path_distribution(&two).unwrap();
        assert!((dist[&WordSequence(vec![1])] - 0.4).abs() < 1e-15);
        assert!((dist[&WordSequence(vec![2])] - 0.6).abs() < 1e-15);

        let merged = Wfst::new(
            2,
            0,
            1,
            vec![
                edge(0, 1, 1, 5, 0.0),
                edge(0, 1, 2, 5, 0.0),
                edge(0, 1, 3, 6, 2f64.ln()),
            ],
        )
        .unwrap();
        let dist = path_distribution(&merged).unwrap();
        assert!((dist[&WordSequence(vec![5])] - 0.5).abs() < 1e-15);
        assert!((dist[&WordSequence(vec![6])] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_total_weight_is_degenerate() {
        let fst = Wfst::parse_text("0 1 1 1 -inf\n1").unwrap();
        assert!(matches!(path_distribution(&fst), Err(Error::Degenerate(_))));
        assert!(matches!(
            path_distribution(&Wfst::empty()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn symbol_table_round_trip() {
        let table = SymbolTable::parse("hello 1\nworld 2\n").unwrap();
        assert_eq!(table.encode("world hello").unwrap().tokens(), &[2, 1]);
        assert_eq!(table.token(2), Some("world"));
        assert!(table.encode("nope").is_err());
        assert!(SymbolTable::parse("a 1\na 2").is_err());
    }

    #[test]
    fn word_sequence_rejects_epsilon() {
        assert!(WordSequence::new(vec![1, 0]).is_err());
        assert_eq!(
            WordSequence::parse_ids(" 3 1 2 ").unwrap().tokens(),
            &[3, 1, 2]
        );
    }
}
