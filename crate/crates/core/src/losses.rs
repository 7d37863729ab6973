//! Hypothesis losses: word-level Levenshtein distance and frame-level
//! cluster mismatch count, plus the per-edge decomposition of the latter.

use std::fmt;

use crate::compose::GammaMatrix;
use crate::error::{Error, Result};
use crate::fst::{Label, Wfst, WordSequence, EPSILON};

/// Reference word sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceTranscript(pub WordSequence);

impl ReferenceTranscript {
    pub fn words(&self) -> &WordSequence {
        &self.0
    }

    /// Whitespace-separated label ids.
    pub fn parse(text: &str) -> Result<Self> {
        Ok(ReferenceTranscript(WordSequence::parse_ids(text)?))
    }
}

/// Time-aligned reference cluster label (1-based) for every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceAlignment {
    clusters: Vec<Label>,
}

impl ReferenceAlignment {
    pub fn new(clusters: Vec<Label>) -> Result<Self> {
        if let Some(t) = clusters.iter().position(|&c| c == EPSILON) {
            return Err(Error::InvalidArgument(format!(
                "alignment frame {t} has cluster 0"
            )));
        }
        Ok(ReferenceAlignment { clusters })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let clusters = text
            .split_whitespace()
            .map(|t| {
                t.parse::<Label>()
                    .map_err(|_| Error::parse(1, format!("bad cluster index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ReferenceAlignment::new(clusters)
    }

    pub fn clusters(&self) -> &[Label] {
        &self.clusters
    }

    pub fn frames(&self) -> usize {
        self.clusters.len()
    }
}

impl fmt::Display for ReferenceAlignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.clusters.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Levenshtein distance with unit substitution, insertion and deletion costs.
/// Uses two rows sized by the shorter input.
pub fn edit_distance<T: PartialEq>(hyp: &[T], reference: &[T]) -> usize {
    let (long, short) = if hyp.len() >= reference.len() {
        (hyp, reference)
    } else {
        (reference, hyp)
    };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, a) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Number of frames whose occupied cluster differs from the reference.
pub fn frame_error(gammas: &GammaMatrix, reference: &ReferenceAlignment) -> Result<usize> {
    if gammas.frames() != reference.frames() {
        return Err(Error::Dimension(format!(
            "path has {} frames, alignment has {}",
            gammas.frames(),
            reference.frames()
        )));
    }
    Ok((0..gammas.frames())
        .filter(|&t| gammas.cluster_at(t).map(|q| q as Label + 1) != Some(reference.clusters[t]))
        .count())
}

/// Frame-error count straight from a per-frame label sequence.
pub(crate) fn frame_error_labels(
    labels: &[Label],
    reference: &ReferenceAlignment,
) -> Result<usize> {
    if labels.len() != reference.frames() {
        return Err(Error::Dimension(format!(
            "path has {} frames, alignment has {}",
            labels.len(),
            reference.frames()
        )));
    }
    Ok(labels
        .iter()
        .zip(&reference.clusters)
        .filter(|(a, b)| a != b)
        .count())
}

/// Frame index of every state: the number of non-epsilon input labels on any
/// path from the initial state. `None` for unreachable states. Fails if a
/// state is reachable at two different depths.
pub fn frame_positions(fst: &Wfst) -> Result<Vec<Option<usize>>> {
    let order = fst.topological_order()?;
    let mut depth: Vec<Option<usize>> = vec![None; fst.num_states()];
    depth[fst.initial()] = Some(0);
    for &s in &order {
        let Some(d) = depth[s] else { continue };
        for &id in fst.out_edges(s) {
            let e = fst.edge(id);
            let next = d + usize::from(e.ilabel != EPSILON);
            match depth[e.dst] {
                None => depth[e.dst] = Some(next),
                Some(existing) if existing != next => {
                    return Err(Error::UnsupportedTopology(format!(
                        "state {} is reachable at frames {existing} and {next}",
                        e.dst
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(depth)
}

/// Per-edge frame-error contributions, indexed by edge id. An edge reading
/// cluster `q` at frame `t` costs 1 when `q` differs from the reference at
/// `t`; epsilon-input and unreachable edges cost 0.
pub fn edge_loss_annotation(fst: &Wfst, reference: &ReferenceAlignment) -> Result<Vec<f64>> {
    let depth = frame_positions(fst)?;
    fst.edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            if e.ilabel == EPSILON {
                return Ok(0.0);
            }
            let Some(t) = depth[e.src] else {
                return Ok(0.0);
            };
            let want = reference.clusters.get(t).ok_or_else(|| {
                Error::UnsupportedTopology(format!(
                    "edge {id} reads frame {t} but the alignment has {} frames",
                    reference.frames()
                ))
            })?;
            Ok(if e.ilabel == *want { 0.0 } else { 1.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{build_score_fst, get_gammas, LogitMatrix};
    use crate::fst::enumerate_paths;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(&[1, 2, 3], &[1, 2, 3]), 0);
        assert_eq!(edit_distance::<u32>(&[], &[1, 2]), 2);
        assert_eq!(edit_distance(b"kitten", b"sitting"), 3);
        assert_eq!(edit_distance(b"sitting", b"kitten"), 3);
        assert_eq!(edit_distance(b"flaw", b"lawn"), 2);
        assert_eq!(edit_distance::<u8>(&[], &[]), 0);
    }

    #[test]
    fn frame_error_examples() {
        let g = GammaMatrix::from_labels(&[1, 2, 1], 2).unwrap();
        let r = ReferenceAlignment::new(vec![1, 1, 1]).unwrap();
        assert_eq!(frame_error(&g, &r).unwrap(), 1);

        let g = GammaMatrix::from_labels(&[1, 1, 1], 2).unwrap();
        assert_eq!(frame_error(&g, &r).unwrap(), 0);

        let g = GammaMatrix::from_labels(&[2; 5], 2).unwrap();
        let r = ReferenceAlignment::new(vec![1; 5]).unwrap();
        assert_eq!(frame_error(&g, &r).unwrap(), 5);

        let short = ReferenceAlignment::new(vec![1; 4]).unwrap();
        assert!(matches!(frame_error(&g, &short), Err(Error::Dimension(_))));
    }

    #[test]
    fn alignment_rejects_epsilon() {
        assert!(ReferenceAlignment::new(vec![1, 0]).is_err());
        assert_eq!(ReferenceAlignment::parse("1 2 3").unwrap().frames(), 3);
    }

    #[test]
    fn sausage_annotation() {
        let s = build_score_fst(&LogitMatrix::zeros(1, 2).unwrap());
        let r = ReferenceAlignment::new(vec![1]).unwrap();
        assert_eq!(edge_loss_annotation(&s, &r).unwrap(), vec![0.0, 1.0]);

        let s = build_score_fst(&LogitMatrix::zeros(2, 2).unwrap());
        let r = ReferenceAlignment::new(vec![1, 2]).unwrap();
        let ann = edge_loss_annotation(&s, &r).unwrap();
        let best = enumerate_paths(&s, 10)
            .unwrap()
            .into_iter()
            .find(|p| p.edges() == [0, 3])
            .unwrap();
        assert_eq!(best.edges().iter().map(|&i| ann[i]).sum::<f64>(), 0.0);
    }

    #[test]
    fn annotation_sums_to_frame_error() {
        let z = LogitMatrix::from_rows(&[
            vec![0.1, -0.4, 0.9],
            vec![1.3, 0.0, -0.2],
            vec![0.5, 0.5, 0.5],
            vec![-1.0, 2.0, 0.3],
        ])
        .unwrap();
        let s = build_score_fst(&z);
        let r = ReferenceAlignment::new(vec![3, 1, 2, 2]).unwrap();
        let ann = edge_loss_annotation(&s, &r).unwrap();
        for p in enumerate_paths(&s, 1000).unwrap() {
            let g = get_gammas(&s, &p, 4, 3).unwrap();
            let sum: f64 = p.edges().iter().map(|&i| ann[i]).sum();
            assert_eq!(sum, frame_error(&g, &r).unwrap() as f64);
        }
    }

    #[test]
    fn non_synchronous_topology_is_rejected() {
        // State 2 is reached after one frame via 0->2 and after two via 0->1->2.
        let f = Wfst::parse_text("0 1 1 0 0\n1 2 1 0 0\n0 2 1 0 0\n2 3 1 0 0\n3").unwrap();
        let r = ReferenceAlignment::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(
            edge_loss_annotation(&f, &r),
            Err(Error::UnsupportedTopology(_))
        ));
    }
}
