//! End-to-end helpers: dataset to trained model to metrics.

use crate::domain::{build_vocabulary, temporal_split, DataSplits, EnrollmentDataset, GradeScheme, Semester, Vocabulary};
use crate::encode::{encode_split, EncodedSequence, ModelKind, Threshold};
use crate::error::Result;
use crate::eval::{
    grade_prediction_metrics, infer_all_targets, majority_baseline, prereq_metrics, goal_match_rates, GoalEvalSetup,
    GoalReport, GradeMetrics, PrereqMetrics,
};
use crate::inference::TOP_K;
use crate::net::Model;
use crate::synth::{generate, planted_recall, random_baseline_recall, SynthConfig, SynthDataset, SynthPlan};
use crate::train::{train, EpochStats, TrainConfig};

/// Courses with fewer enrollments are dropped from the vocabulary.
pub const DEFAULT_MIN_ENROLLMENTS: usize = 20;

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub vocab: Vocabulary,
    /// The input dataset restricted to vocabulary courses.
    pub dataset: EnrollmentDataset,
    pub splits: DataSplits,
}

#[derive(Debug, Clone)]
pub struct EncodedSplits {
    pub train: Vec<EncodedSequence>,
    pub val: Vec<EncodedSequence>,
    pub test: Vec<EncodedSequence>,
}

pub fn prepare(
    dataset: &EnrollmentDataset,
    min_enrollments: usize,
    scheme: GradeScheme,
    (train_end, val, test): (Semester, Semester, Semester),
) -> Result<PreparedData> {
    let (vocab, dataset) = build_vocabulary(dataset, min_enrollments, scheme)?;
    let splits = temporal_split(&dataset, train_end, val, test)?;
    Ok(PreparedData { vocab, dataset, splits })
}

/// Splits an already-restricted dataset with an existing vocabulary.
pub fn prepare_with_vocab(
    dataset: &EnrollmentDataset,
    vocab: &Vocabulary,
    (train_end, val, test): (Semester, Semester, Semester),
) -> Result<PreparedData> {
    let dataset = vocab.restrict(dataset);
    let splits = temporal_split(&dataset, train_end, val, test)?;
    Ok(PreparedData {
        vocab: vocab.clone(),
        dataset,
        splits,
    })
}

impl PreparedData {
    pub fn encode(&self, kind: ModelKind, threshold: Threshold) -> Result<EncodedSplits> {
        let enc = |s| encode_split(kind, s, &self.vocab, threshold);
        Ok(EncodedSplits {
            train: enc(&self.splits.train)?,
            val: enc(&self.splits.val)?,
            test: enc(&self.splits.test)?,
        })
    }
}

/// Everything measured on one synthetic run.
#[derive(Debug, Clone)]
pub struct SynthReport {
    pub data: SynthDataset,
    pub plan: SynthPlan,
    pub vocab: Vocabulary,
    pub model: Model,
    pub history: Vec<EpochStats>,
    pub grades: GradeMetrics,
    pub baseline: GradeMetrics,
    pub prereq: PrereqMetrics,
    pub planted_recall: f64,
    pub random_recall: f64,
    pub goal: GoalReport,
}

/// Generates data, trains one model, and evaluates grade prediction,
/// planted-prerequisite recovery and goal-based recommendation. The planted
/// graph doubles as the registrar list behind the department filter.
pub fn run_synthetic(
    synth: &SynthConfig,
    kind: ModelKind,
    threshold: Threshold,
    config: &TrainConfig,
) -> Result<SynthReport> {
    let data = generate(synth)?;
    let plan = synth.default_plan()?;
    let prepared = prepare(
        &data.dataset,
        DEFAULT_MIN_ENROLLMENTS,
        GradeScheme::Binary,
        (plan.train_end, plan.val, plan.test),
    )?;
    let encoded = prepared.encode(kind, threshold)?;
    let (model, history) = train(kind, &prepared.vocab, threshold, &encoded.train, &encoded.val, config)?;

    let grades = grade_prediction_metrics(&model, &encoded.test)?;
    let baseline = majority_baseline(&encoded.train, &encoded.test, prepared.vocab.scheme(), threshold)?;

    let dag: Vec<_> = data
        .dag
        .iter()
        .filter(|p| prepared.vocab.index_of_key(&p.target).is_some())
        .cloned()
        .collect();
    let recs = infer_all_targets(&model, &prepared.vocab, &dag, &data.dag)?;
    let prereq = prereq_metrics(&recs, &dag);
    let planted = planted_recall(&recs, &dag)?;
    let random = random_baseline_recall(&prepared.vocab, &dag, &data.dag, TOP_K, 2000, synth.seed ^ 0xba5e)?;

    let targets: Vec<_> = data
        .targets()
        .into_iter()
        .filter(|t| prepared.vocab.index_of_key(t).is_some())
        .collect();
    let goal = goal_match_rates(
        &model,
        &prepared.vocab,
        &prepared.dataset,
        &GoalEvalSetup {
            targets: &targets,
            target_semester: plan.goal_target,
            rec_semester: plan.goal_rec,
            goal: threshold,
            registrar: &data.dag,
        },
    )?;

    Ok(SynthReport {
        data,
        plan,
        vocab: prepared.vocab,
        model,
        history,
        grades,
        baseline,
        prereq,
        planted_recall: planted,
        random_recall: random,
        goal,
    })
}
