//! Backward filtering, forward sampling.
//!
//! [`backward`] computes the log of the total suffix weight β of every state.
//! Using β as a potential, an edge `i -> j` with weight `w` gets the weight
//! `w·β_j/β_i`, which makes every live state's outgoing weights sum to one
//! while leaving each complete path with its globally normalized probability.
//! Paths are then drawn ancestrally with one uniform draw per visited state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fst::{Edge, EdgeId, Path, StateId, Wfst};
use crate::logspace::log_sum_exp;

/// Per-state log suffix weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable {
    log_beta: Vec<f64>,
    initial: StateId,
}

impl BetaTable {
    pub fn log_beta(&self) -> &[f64] {
        &self.log_beta
    }

    pub fn get(&self, state: StateId) -> f64 {
        self.log_beta[state]
    }

    /// Log of the total weight of all complete paths.
    pub fn log_partition(&self) -> f64 {
        self.log_beta[self.initial]
    }
}

/// Suffix sums in reverse topological order. States with no route to the
/// final state get `-inf`.
pub fn backward(fst: &Wfst) -> Result<BetaTable> {
    let order = fst.topological_order()?;
    let mut log_beta = vec![f64::NEG_INFINITY; fst.num_states()];
    log_beta[fst.final_state()] = 0.0;
    for &s in order.iter().rev() {
        if s == fst.final_state() {
            continue;
        }
        let outs = fst.out_edges(s);
        log_beta[s] = log_sum_exp(outs.iter().map(|&id| {
            let e = fst.edge(id);
            e.log_weight + log_beta[e.dst]
        }));
    }
    Ok(BetaTable {
        log_beta,
        initial: fst.initial(),
    })
}

/// Prefix sums α: log of the total weight of partial paths from the initial
/// state to each state.
pub fn forward_scores(fst: &Wfst) -> Result<Vec<f64>> {
    let order = fst.topological_order()?;
    let mut log_alpha = vec![f64::NEG_INFINITY; fst.num_states()];
    log_alpha[fst.initial()] = 0.0;
    let mut incoming: Vec<Vec<EdgeId>> = vec![Vec::new(); fst.num_states()];
    for (id, e) in fst.edges().iter().enumerate() {
        incoming[e.dst].push(id);
    }
    for &s in &order {
        if s == fst.initial() {
            continue;
        }
        log_alpha[s] = log_sum_exp(incoming[s].iter().map(|&id| {
            let e = fst.edge(id);
            log_alpha[e.src] + e.log_weight
        }));
    }
    Ok(log_alpha)
}

/// Potential-reweighted edge log-weight; `-inf` for edges that can never be
/// taken.
#[inline]
fn reweighted(log_weight: f64, beta_src: f64, beta_dst: f64) -> f64 {
    if beta_src == f64::NEG_INFINITY || beta_dst == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    log_weight + beta_dst - beta_src
}

fn check_partition(beta: &BetaTable) -> Result<()> {
    let log_z = beta.log_partition();
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Degenerate(
            "no complete path with nonzero weight".into(),
        ));
    }
    if !log_z.is_finite() {
        return Err(Error::Degenerate(format!("log partition is {log_z}")));
    }
    Ok(())
}

/// An FST whose live states have outgoing weights summing to one. Edge ids
/// and topology match the source FST; edges that cannot be part of a
/// complete path carry `-inf`.
#[derive(Debug, Clone)]
pub struct StochasticFst {
    fst: Wfst,
}

impl StochasticFst {
    pub fn as_wfst(&self) -> &Wfst {
        &self.fst
    }

    pub fn into_wfst(self) -> Wfst {
        self.fst
    }

    /// Largest `|logsumexp(out-weights)|` over live non-final states.
    pub fn max_deviation(&self) -> f64 {
        stochastic_deviation(&self.fst)
    }
}

/// Materialize the reweighted FST.
pub fn reweight_stochastic(fst: &Wfst, beta: &BetaTable) -> Result<StochasticFst> {
    if beta.log_beta.len() != fst.num_states() {
        return Err(Error::Dimension(format!(
            "beta table has {} states, FST has {}",
            beta.log_beta.len(),
            fst.num_states()
        )));
    }
    check_partition(beta)?;
    let edges = fst
        .edges()
        .iter()
        .map(|e| Edge {
            log_weight: reweighted(e.log_weight, beta.get(e.src), beta.get(e.dst)),
            ..*e
        })
        .collect();
    let out = Wfst::new(fst.num_states(), fst.initial(), fst.final_state(), edges)?;
    Ok(StochasticFst { fst: out })
}

/// Largest deviation from local normalization over states reachable from the
/// initial state through nonzero-weight edges. A live non-final state with
/// no usable outgoing edge counts as an infinite deviation.
pub fn stochastic_deviation(fst: &Wfst) -> f64 {
    let mut seen = vec![false; fst.num_states()];
    let mut stack = vec![fst.initial()];
    seen[fst.initial()] = true;
    let mut worst: f64 = 0.0;
    while let Some(s) = stack.pop() {
        if s == fst.final_state() {
            continue;
        }
        let outs = fst.out_edges(s);
        let total = log_sum_exp(outs.iter().map(|&id| fst.edge(id).log_weight));
        worst = worst.max(total.abs());
        for &id in outs {
            let e = fst.edge(id);
            if e.log_weight > f64::NEG_INFINITY && !seen[e.dst] {
                seen[e.dst] = true;
                stack.push(e.dst);
            }
        }
    }
    worst
}

/// Inverse-CDF selection over `log_probs` in order with one uniform draw.
/// Returns the position within the slice.
fn select<R: Rng + ?Sized>(log_probs: impl Iterator<Item = f64>, rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_live = None;
    for (k, lp) in log_probs.enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        cumulative += lp.exp();
        last_live = Some(k);
        if u < cumulative {
            return Some(k);
        }
    }
    // Rounding can leave the cumulative sum a hair below one.
    last_live
}

fn walk<R, F>(fst: &Wfst, rng: &mut R, edge_log_prob: F) -> Result<Path>
where
    R: Rng + ?Sized,
    F: Fn(&Edge) -> f64,
{
    let mut state = fst.initial();
    let mut edges = Vec::new();
    while state != fst.final_state() {
        let outs = fst.out_edges(state);
        let k = select(outs.iter().map(|&id| edge_log_prob(fst.edge(id))), rng)
            .ok_or_else(|| Error::Internal(format!("sampler reached dead-end state {state}")))?;
        let id = outs[k];
        edges.push(id);
        state = fst.edge(id).dst;
        if edges.len() > fst.num_edges() {
            return Err(Error::Internal(
                "sampled walk longer than the edge count".into(),
            ));
        }
    }
    Path::from_edges(fst, edges)
}

/// Draw one path from a materialized stochastic FST. The returned path's log
/// weight is its log weight in the stochastic FST, i.e. its log probability.
pub fn sample_path<R: Rng + ?Sized>(sfst: &StochasticFst, rng: &mut R) -> Result<Path> {
    walk(&sfst.fst, rng, |e| e.log_weight)
}

/// Sampler that keeps only β and reweights the edges of each visited state
/// as it goes. Paths are reported with their original log-weights.
#[derive(Debug, Clone)]
pub struct PathSampler<'a> {
    fst: &'a Wfst,
    beta: BetaTable,
}

impl<'a> PathSampler<'a> {
    pub fn new(fst: &'a Wfst) -> Result<Self> {
        let beta = backward(fst)?;
        check_partition(&beta)?;
        Ok(PathSampler { fst, beta })
    }

    pub fn fst(&self) -> &'a Wfst {
        self.fst
    }

    pub fn beta(&self) -> &BetaTable {
        &self.beta
    }

    pub fn log_partition(&self) -> f64 {
        self.beta.log_partition()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Path> {
        let beta = &self.beta;
        walk(self.fst, rng, |e| {
            reweighted(e.log_weight, beta.get(e.src), beta.get(e.dst))
        })
    }
}

/// Draw `count` paths sequentially from one shared stream.
pub fn sample_paths<R: Rng + ?Sized>(fst: &Wfst, count: usize, rng: &mut R) -> Result<Vec<Path>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let sampler = PathSampler::new(fst)?;
    (0..count).map(|_| sampler.sample(rng)).collect()
}

/// Independent stream for sample `index` under a global seed. Streams are
/// ChaCha8 stream ids, so draws do not depend on scheduling.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw `count` paths, sample `i` using [`sample_stream`]`(seed, i)`.
pub fn sample_paths_seeded(fst: &Wfst, count: usize, seed: u64) -> Result<Vec<Path>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let sampler = PathSampler::new(fst)?;
    (0..count as u64)
        .map(|i| sampler.sample(&mut sample_stream(seed, i)))
        .collect()
}
