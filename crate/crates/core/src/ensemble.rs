//! Hard majority voting over per-model prediction sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{ModelId, Prediction, PredictionSet};
use crate::rng::{fnv1a64, mix64};
use crate::{Label, SubtaskId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnsembleError {
    #[error("run {0} has no members")]
    NoMembers(u32),
    #[error("run {run}: model {model} listed twice")]
    DuplicateMember { run: u32, model: ModelId },
    #[error("run {run} has an even number of members ({size}) but tie policy error_on_tie; pick favor_negative, favor_positive or seeded_random")]
    EvenWithErrorOnTie { run: u32, size: usize },
    #[error("run {run}: expected predictions from models {expected:?}, got {got:?}")]
    MemberMismatch { run: u32, expected: Vec<ModelId>, got: Vec<ModelId> },
    #[error("model {model} predicts {found} but run {run} is for {expected}")]
    SubtaskMismatch { run: u32, model: ModelId, expected: SubtaskId, found: SubtaskId },
    #[error("model {model} covers a different comment set than model {reference} ({detail})")]
    KeyMismatch { model: ModelId, reference: ModelId, detail: String },
    #[error("tie on comment `{comment_id}` ({positives} of {members}) under error_on_tie")]
    TieEncountered { comment_id: String, positives: usize, members: usize },
}

/// How an exact half/half vote is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    ErrorOnTie,
    #[default]
    FavorNegative,
    FavorPositive,
    /// Per-comment pseudo-random bit from the seed and the comment id.
    SeededRandom(u64),
}

impl TiePolicy {
    fn resolve(&self, comment_id: &str) -> Option<Label> {
        match self {
            TiePolicy::ErrorOnTie => None,
            TiePolicy::FavorNegative => Some(Label::Negative),
            TiePolicy::FavorPositive => Some(Label::Positive),
            TiePolicy::SeededRandom(seed) => Some(Label::from(mix64(seed ^ fnv1a64(comment_id.as_bytes())) & 1 == 1)),
        }
    }
}

/// A named, validated set of members voting on one subtask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnsembleRun {
    run_id: u32,
    member_ids: Vec<ModelId>,
    tie_policy: TiePolicy,
    subtask: SubtaskId,
}

impl EnsembleRun {
    pub fn new(
        run_id: u32,
        member_ids: Vec<ModelId>,
        tie_policy: TiePolicy,
        subtask: SubtaskId,
    ) -> Result<Self, EnsembleError> {
        if member_ids.is_empty() {
            return Err(EnsembleError::NoMembers(run_id));
        }
        let mut seen = BTreeSet::new();
        for m in &member_ids {
            if !seen.insert(*m) {
                return Err(EnsembleError::DuplicateMember { run: run_id, model: *m });
            }
        }
        if member_ids.len().is_multiple_of(2) && tie_policy == TiePolicy::ErrorOnTie {
            return Err(EnsembleError::EvenWithErrorOnTie { run: run_id, size: member_ids.len() });
        }
        Ok(Self { run_id, member_ids, tie_policy, subtask })
    }

    pub fn run_id(&self) -> u32 {
        self.run_id
    }

    pub fn member_ids(&self) -> &[ModelId] {
        &self.member_ids
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    pub fn subtask(&self) -> SubtaskId {
        self.subtask
    }

    pub fn ensemble_model_id(&self) -> ModelId {
        ModelId::for_ensemble(self.run_id)
    }

    /// Members as `1,3,4,5,6`.
    pub fn members_label(&self) -> String {
        self.member_ids.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// The three submitted runs for one subtask: 5, 7 and 9 members.
pub fn submitted_runs_for(subtask: SubtaskId) -> Vec<EnsembleRun> {
    let compositions: [&[u32]; 3] = [&[1, 3, 4, 5, 6], &[1, 2, 3, 4, 5, 6, 8], &[1, 2, 3, 4, 5, 6, 7, 8, 9]];
    compositions
        .iter()
        .enumerate()
        .map(|(i, members)| {
            EnsembleRun::new(
                i as u32 + 1,
                members.iter().copied().map(ModelId).collect(),
                TiePolicy::ErrorOnTie,
                subtask,
            )
            .expect("odd, duplicate-free compositions")
        })
        .collect()
}

/// The three runs for each of the three subtasks, subtask-major.
pub fn submitted_runs() -> Vec<EnsembleRun> {
    SubtaskId::ALL.into_iter().flat_map(submitted_runs_for).collect()
}

/// Per-comment record of how the decision was reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoteTrace {
    pub comment_id: String,
    pub ballots: BTreeMap<ModelId, Label>,
    pub positive_count: usize,
    pub decision: Label,
    pub tie_broken: bool,
}

#[derive(Debug, Clone)]
pub struct VoteOutcome {
    pub predictions: PredictionSet,
    pub traces: Vec<VoteTrace>,
}

/// Majority vote: 1 when more than half the members say 1, 0 when fewer
/// than half do, the tie policy otherwise.
///
/// Inputs are matched to members by model id, so their order does not
/// matter. The output set gets the run's reserved ensemble id and the score
/// `positive_count / members`.
pub fn hard_vote(sets: &[PredictionSet], run: &EnsembleRun) -> Result<VoteOutcome, EnsembleError> {
    let mut by_model: BTreeMap<ModelId, &PredictionSet> = BTreeMap::new();
    for s in sets {
        by_model.insert(s.model_id(), s);
    }
    let expected: BTreeSet<ModelId> = run.member_ids.iter().copied().collect();
    let got: BTreeSet<ModelId> = sets.iter().map(PredictionSet::model_id).collect();
    if expected != got || sets.len() != run.member_ids.len() {
        let mut got: Vec<ModelId> = sets.iter().map(PredictionSet::model_id).collect();
        got.sort();
        return Err(EnsembleError::MemberMismatch { run: run.run_id, expected: expected.into_iter().collect(), got });
    }
    for s in sets {
        if s.subtask() != run.subtask {
            return Err(EnsembleError::SubtaskMismatch {
                run: run.run_id,
                model: s.model_id(),
                expected: run.subtask,
                found: s.subtask(),
            });
        }
    }

    let (&reference_id, reference) = by_model.iter().next().expect("non-empty run");
    for (&model, set) in &by_model {
        if set.len() != reference.len() || !set.ids().eq(reference.ids()) {
            let detail = match set.ids().zip(reference.ids()).find(|(a, b)| a != b) {
                Some((a, b)) => format!("first difference: `{a}` vs `{b}`"),
                None => format!("{} vs {} comments", set.len(), reference.len()),
            };
            return Err(EnsembleError::KeyMismatch { model, reference: reference_id, detail });
        }
    }

    let members = run.member_ids.len();
    let mut traces = Vec::with_capacity(reference.len());
    let mut output = Vec::with_capacity(reference.len());
    for id in reference.ids() {
        let ballots: BTreeMap<ModelId, Label> =
            by_model.iter().map(|(m, s)| (*m, s.get(id).expect("ids checked").label)).collect();
        let positive_count = ballots.values().filter(|l| l.is_positive()).count();
        let (decision, tie_broken) = match (2 * positive_count).cmp(&members) {
            std::cmp::Ordering::Greater => (Label::Positive, false),
            std::cmp::Ordering::Less => (Label::Negative, false),
            std::cmp::Ordering::Equal => match run.tie_policy.resolve(id) {
                Some(l) => (l, true),
                None => {
                    return Err(EnsembleError::TieEncountered {
                        comment_id: id.to_string(),
                        positives: positive_count,
                        members,
                    });
                }
            },
        };
        output.push((id.to_string(), Prediction::scored(decision, positive_count as f64 / members as f64)));
        traces.push(VoteTrace { comment_id: id.to_string(), ballots, positive_count, decision, tie_broken });
    }

    let provenance = format!("hard vote run {} over models {} ({:?})", run.run_id, run.members_label(), run.tie_policy);
    let predictions = PredictionSet::new(run.ensemble_model_id(), run.subtask, provenance, output)
        .expect("ids unique and scores in [0, 1]");
    Ok(VoteOutcome { predictions, traces })
}

/// Tab-separated trace table: one ballot column per member, in member order.
pub fn write_traces<W: Write>(run: &EnsembleRun, traces: &[VoteTrace], mut out: W) -> io::Result<()> {
    let mut buf = String::from("comment_id");
    for m in &run.member_ids {
        let _ = write!(buf, "\tmodel_{m}");
    }
    buf.push_str("\tpositive_count\tdecision\ttie_broken\n");
    for t in traces {
        buf.push_str(&t.comment_id);
        for m in &run.member_ids {
            let ballot = t.ballots.get(m).map(|l| l.to_string()).unwrap_or_default();
            let _ = write!(buf, "\t{ballot}");
        }
        let _ = writeln!(buf, "\t{}\t{}\t{}", t.positive_count, t.decision, u8::from(t.tie_broken));
    }
    out.write_all(buf.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ballot_sets(patterns: &[Vec<u8>]) -> Vec<PredictionSet> {
        // patterns[comment][member]
        let members = patterns[0].len();
        (0..members)
            .map(|m| {
                PredictionSet::new(
                    ModelId(m as u32 + 1),
                    SubtaskId::Toxic,
                    "test",
                    patterns
                        .iter()
                        .enumerate()
                        .map(|(c, p)| (format!("c{c:04}"), Prediction::hard(Label::from_u8(p[m]).unwrap()))),
                )
                .unwrap()
            })
            .collect()
    }

    fn run_of(n: usize, policy: TiePolicy) -> EnsembleRun {
        EnsembleRun::new(1, (1..=n as u32).map(ModelId).collect(), policy, SubtaskId::Toxic).unwrap()
    }

    fn decide(pattern: &[u8], policy: TiePolicy) -> VoteTrace {
        let out = hard_vote(&ballot_sets(&[pattern.to_vec()]), &run_of(pattern.len(), policy)).unwrap();
        out.traces.into_iter().next().unwrap()
    }

    #[test]
    fn strict_majority_and_unanimity() {
        let t = decide(&[1, 1, 1, 0, 0], TiePolicy::ErrorOnTie);
        assert_eq!((t.decision, t.positive_count, t.tie_broken), (Label::Positive, 3, false));
        assert_eq!(decide(&[0; 5], TiePolicy::ErrorOnTie).decision, Label::Negative);
    }

    #[test]
    fn ties_follow_policy() {
        let t = decide(&[1, 1, 0, 0], TiePolicy::FavorNegative);
        assert_eq!((t.decision, t.tie_broken), (Label::Negative, true));
        let t = decide(&[1, 1, 0, 0], TiePolicy::FavorPositive);
        assert_eq!((t.decision, t.tie_broken), (Label::Positive, true));
        let a = decide(&[1, 0], TiePolicy::SeededRandom(42));
        let b = decide(&[0, 1], TiePolicy::SeededRandom(42));
        assert!(a.tie_broken);
        assert_eq!(a.decision, b.decision);
    }

    #[test]
    fn error_on_tie_only_reachable_via_config_guard() {
        let err = EnsembleRun::new(1, vec![ModelId(1), ModelId(2)], TiePolicy::ErrorOnTie, SubtaskId::Toxic);
        assert!(matches!(err, Err(EnsembleError::EvenWithErrorOnTie { size: 2, .. })));
        assert!(matches!(
            EnsembleRun::new(1, vec![], TiePolicy::FavorNegative, SubtaskId::Toxic),
            Err(EnsembleError::NoMembers(1))
        ));
        assert!(matches!(
            EnsembleRun::new(1, vec![ModelId(1), ModelId(1), ModelId(2)], TiePolicy::ErrorOnTie, SubtaskId::Toxic),
            Err(EnsembleError::DuplicateMember { .. })
        ));
    }

    #[test]
    fn exhaustive_five_member_patterns() {
        let patterns: Vec<Vec<u8>> = (0u32..32).map(|bits| (0..5).map(|i| (bits >> i & 1) as u8).collect()).collect();
        let out = hard_vote(&ballot_sets(&patterns), &run_of(5, TiePolicy::ErrorOnTie)).unwrap();
        for (trace, pattern) in out.traces.iter().zip(&patterns) {
            let sum: u32 = pattern.iter().map(|&b| u32::from(b)).sum();
            assert_eq!(trace.decision.is_positive(), f64::from(sum) > 2.5, "{pattern:?}");
        }
    }

    #[test]
    fn mismatched_inputs() {
        let mut sets = ballot_sets(&[vec![1, 0, 1]]);
        let run = run_of(3, TiePolicy::ErrorOnTie);
        let other = ballot_sets(&[vec![1, 0, 1], vec![0, 0, 0]]);
        sets[2] = other[2].clone();
        assert!(matches!(hard_vote(&sets, &run), Err(EnsembleError::KeyMismatch { .. })));

        let sets = ballot_sets(&[vec![1, 0]]);
        assert!(matches!(hard_vote(&sets, &run), Err(EnsembleError::MemberMismatch { .. })));

        let sets = ballot_sets(&[vec![1, 0, 1]]);
        let engaging =
            EnsembleRun::new(1, run.member_ids().to_vec(), TiePolicy::ErrorOnTie, SubtaskId::Engaging).unwrap();
        assert!(matches!(hard_vote(&sets, &engaging), Err(EnsembleError::SubtaskMismatch { .. })));

        let run4 =
            EnsembleRun::new(1, (1..=4).map(ModelId).collect(), TiePolicy::FavorNegative, SubtaskId::Toxic).unwrap();
        let run4 = EnsembleRun { tie_policy: TiePolicy::ErrorOnTie, ..run4 };
        let err = hard_vote(&ballot_sets(&[vec![1, 1, 0, 0]]), &run4).unwrap_err();
        assert!(matches!(err, EnsembleError::TieEncountered { positives: 2, members: 4, .. }));
    }

    #[test]
    fn submitted_run_compositions() {
        let runs = submitted_runs();
        assert_eq!(runs.len(), 9);
        let toxic = submitted_runs_for(SubtaskId::Toxic);
        assert_eq!(toxic[0].members_label(), "1,3,4,5,6");
        assert_eq!(toxic[1].member_ids().len(), 7);
        assert_eq!(toxic[2].member_ids().len(), 9);
        assert!(!toxic[2].member_ids().contains(&ModelId(10)));
        assert!(runs.iter().all(|r| r.member_ids().len() % 2 == 1 && r.tie_policy() == TiePolicy::ErrorOnTie));
    }

    #[test]
    fn output_scores_and_trace_table() {
        let sets = ballot_sets(&[vec![1, 1, 0], vec![0, 0, 0]]);
        let run = run_of(3, TiePolicy::ErrorOnTie);
        let out = hard_vote(&sets, &run).unwrap();
        assert_eq!(out.predictions.model_id(), ModelId(1001));
        assert_eq!(out.predictions.get("c0000").unwrap().score, Some(2.0 / 3.0));
        let mut buf = Vec::new();
        write_traces(&run, &out.traces, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "comment_id\tmodel_1\tmodel_2\tmodel_3\tpositive_count\tdecision\ttie_broken\n\
             c0000\t1\t1\t0\t2\t1\t0\n\
             c0001\t0\t0\t0\t0\t0\t0\n"
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn patterns() -> impl Strategy<Value = Vec<Vec<u8>>> {
            (1usize..=8).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0u8..=1, n), 1..20))
        }

        fn policy() -> impl Strategy<Value = TiePolicy> {
            prop_oneof![
                Just(TiePolicy::FavorNegative),
                Just(TiePolicy::FavorPositive),
                any::<u64>().prop_map(TiePolicy::SeededRandom),
            ]
        }

        proptest! {
            #[test]
            fn permutation_invariance(p in patterns(), pol in policy(), seed in any::<u64>()) {
                let n = p[0].len();
                let run = run_of(n, pol);
                let sets = ballot_sets(&p);
                let mut shuffled = sets.clone();
                crate::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
                let a = hard_vote(&sets, &run).unwrap();
                let b = hard_vote(&shuffled, &run).unwrap();
                prop_assert_eq!(a.predictions, b.predictions);
                prop_assert_eq!(a.traces, b.traces);
            }

            #[test]
            fn monotone_unanimous_and_consistent(p in patterns(), pol in policy()) {
                let n = p[0].len();
                let run = run_of(n, pol);
                let base = hard_vote(&ballot_sets(&p), &run).unwrap();
                for (c, trace) in base.traces.iter().enumerate() {
                    prop_assert_eq!(trace.positive_count, p[c].iter().filter(|&&b| b == 1).count());
                    let score = base.predictions.get(&trace.comment_id).unwrap().score.unwrap();
                    prop_assert!((score - trace.positive_count as f64 / n as f64).abs() < 1e-12);
                    if n % 2 == 1 {
                        prop_assert!(!trace.tie_broken);
                    }
                    if p[c].iter().all(|&b| b == p[c][0]) {
                        prop_assert_eq!(trace.decision.as_u8(), p[c][0]);
                    }
                    // flip each 0 ballot to 1 in turn; a positive decision must stay positive
                    for m in 0..n {
                        if p[c][m] == 0 {
                            let mut flipped = p.clone();
                            flipped[c][m] = 1;
                            let out = hard_vote(&ballot_sets(&flipped), &run).unwrap();
                            if trace.decision == Label::Positive {
                                prop_assert_eq!(out.traces[c].decision, Label::Positive);
                            }
                        }
                    }
                }
            }
        }
    }
}
