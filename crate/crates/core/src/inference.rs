//! Prerequisite inference and personalized goal-based recommendation on top
//! of a trained grade model.
//!
//! Both procedures probe the model with a one-hot "succeeded in candidate"
//! grade vector alongside the target course as next-semester co-enrollment,
//! and rank candidates by the predicted probability of reaching the goal in
//! the target.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::domain::{Course, CourseKey, EnrollmentDataset, SemesterRecords, Vocabulary};
use crate::encode::{
    above_categories, build_model_input, encode_history, encode_semester, probe_position, CoEnrollmentVector,
    GradeVector, MajorVector, StepInput, Threshold,
};
use crate::domain::{GradeScheme, Semester};
use crate::error::{Error, Result};
use crate::net::{group_softmax, lstm_step, output_logits, trace_sequence, HiddenState, Model};

/// Recommendation lists are cut to this length.
pub const TOP_K: usize = 10;

pub const PREREQ_CSV_HEADER: [&str; 4] = ["prerequisite_dept", "prerequisite_num", "target_dept", "target_num"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrereqPair {
    pub prerequisite: CourseKey,
    pub target: CourseKey,
}

impl PrereqPair {
    pub fn new(prerequisite: CourseKey, target: CourseKey) -> Self {
        PrereqPair { prerequisite, target }
    }
}

pub fn parse_prereq_csv<R: Read>(source: R) -> Result<Vec<PrereqPair>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(PREREQ_CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MalformedRow {
                line: 1,
                message: format!("missing column {name:?}"),
            })?;
    }
    let mut pairs = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| row.get(cols[i]).unwrap_or("");
        let num = |i: usize| {
            get(i).parse::<u32>().map_err(|_| Error::MalformedRow {
                line,
                message: format!("malformed course number {:?}", get(i)),
            })
        };
        pairs.push(PrereqPair::new(
            CourseKey::new(get(0), num(1)?),
            CourseKey::new(get(2), num(3)?),
        ));
    }
    Ok(pairs)
}

pub fn write_prereq_csv<W: Write>(out: W, pairs: &[PrereqPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::IoPlain(std::io::Error::other(e.to_string()));
    w.write_record(PREREQ_CSV_HEADER).map_err(io)?;
    for p in pairs {
        w.write_record([
            p.prerequisite.department.as_str(),
            &p.prerequisite.number.to_string(),
            p.target.department.as_str(),
            &p.target.number.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    PrereqInference,
    GoalRec,
}

/// Everything the candidate filters consult.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFilterContext {
    /// Registrar prerequisite list; drives the department filter.
    pub prereq_pairs: Vec<PrereqPair>,
    /// Courses offered in the recommendation semester (goal mode only).
    pub availability: Option<BTreeSet<CourseKey>>,
    /// Courses the student already took (goal mode only).
    pub student_history: BTreeSet<CourseKey>,
    pub target: CourseKey,
    pub threshold: Threshold,
}

impl CandidateFilterContext {
    pub fn for_prereqs(prereq_pairs: Vec<PrereqPair>, target: CourseKey, threshold: Threshold) -> Self {
        CandidateFilterContext {
            prereq_pairs,
            availability: None,
            student_history: BTreeSet::new(),
            target,
            threshold,
        }
    }

    /// Target's own department plus departments hosting prerequisites of the
    /// other courses in the target's department.
    pub fn candidate_departments(&self) -> BTreeSet<String> {
        let mut depts = BTreeSet::from([self.target.department.clone()]);
        for p in &self.prereq_pairs {
            if p.target.department == self.target.department && p.target != self.target {
                depts.insert(p.prerequisite.department.clone());
            }
        }
        depts
    }
}

/// Candidate course indices, ascending.
pub fn filter_candidates(
    vocab: &Vocabulary,
    ctx: &CandidateFilterContext,
    mode: FilterMode,
    predicted_ok: Option<&[bool]>,
) -> Result<Vec<usize>> {
    let target = vocab
        .index_of_key(&ctx.target)
        .ok_or_else(|| Error::UnknownCourse(ctx.target.to_string()))?;
    let target_level = vocab.course(target).level();
    let depts = ctx.candidate_departments();
    if mode == FilterMode::GoalRec && ctx.availability.is_none() {
        return Err(Error::InvalidRequest("goal recommendation needs semester availability".into()));
    }
    if let Some(ok) = predicted_ok {
        if ok.len() != vocab.n() {
            return Err(Error::DimensionMismatch {
                what: "predicted_ok",
                expected: vocab.n(),
                actual: ok.len(),
            });
        }
    }

    let keep = |i: usize, c: &Course| -> bool {
        if !depts.contains(&c.department) || c.level() > target_level {
            return false;
        }
        if mode == FilterMode::PrereqInference {
            return true;
        }
        let key = c.key();
        ctx.availability.as_ref().is_some_and(|a| a.contains(&key))
            && !ctx.student_history.contains(&key)
            && i != target
            && predicted_ok.map_or(true, |ok| ok[i])
    };
    Ok(vocab
        .courses()
        .iter()
        .enumerate()
        .filter(|(i, c)| keep(*i, c))
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRecommendation {
    pub course: Course,
    pub index: usize,
    pub probability: f64,
}

/// Sorts by probability descending, ties by ascending course index, and keeps `top_k`.
pub fn rank(mut scored: Vec<(usize, f64)>, vocab: &Vocabulary, top_k: usize) -> Vec<RankedRecommendation> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(top_k)
        .map(|(index, probability)| RankedRecommendation {
            course: vocab.course(index).clone(),
            index,
            probability,
        })
        .collect()
}

/// Probability mass of the letter categories at or above `goal`.
pub fn above_probability(letter_probs: &[f64], scheme: GradeScheme, goal: Threshold) -> f64 {
    above_categories(scheme, goal).iter().map(|&j| letter_probs[j]).sum()
}

/// Probe input: the candidate graded at the goal and the target as the next
/// semester's only co-enrollment.
pub fn probe_input(model: &Model, candidate: usize, target: usize, goal: Threshold, majors: &MajorVector) -> Result<StepInput> {
    let (n, m) = (model.dims.n, model.dims.m);
    let g = GradeVector::one_hot(n, m, candidate, probe_position(model.scheme, goal));
    build_model_input(model.kind, &g, &CoEnrollmentVector::one_hot(n, target), majors)
}

/// Predicted probability of reaching `goal` in `target` after one step from `state`.
pub fn success_probability(
    model: &Model,
    state: &HiddenState,
    probe: &StepInput,
    target: usize,
    goal: Threshold,
) -> Result<f64> {
    if target >= model.dims.n {
        return Err(Error::UnknownCourse(format!("index {target}")));
    }
    let next = lstm_step(&model.params.lstm, &probe.recurrent, state)?;
    let logits = output_logits(model, &next.h, probe.side.as_deref())?;
    let (letters, _) = group_softmax(&logits, model.dims.m, target);
    Ok(above_probability(&letters, model.scheme, goal))
}

fn check_goal(model: &Model, goal: Threshold) -> Result<()> {
    if model.scheme == GradeScheme::Binary && goal != model.threshold {
        return Err(Error::InvalidRequest(format!(
            "model was trained with threshold {} and cannot score goal {goal}",
            model.threshold
        )));
    }
    Ok(())
}

/// Scores `candidates` from `state` and returns the ranked top `top_k`.
pub fn score_candidates(
    model: &Model,
    vocab: &Vocabulary,
    state: &HiddenState,
    candidates: &[usize],
    target: usize,
    goal: Threshold,
    majors: &MajorVector,
    top_k: usize,
) -> Result<Vec<RankedRecommendation>> {
    let scored: Vec<Result<(usize, f64)>> = candidates
        .par_iter()
        .map(|&c| {
            let probe = probe_input(model, c, target, goal, majors)?;
            Ok((c, success_probability(model, state, &probe, target, goal)?))
        })
        .collect();
    Ok(rank(scored.into_iter().collect::<Result<_>>()?, vocab, top_k))
}

/// Population-level prerequisite candidates for `ctx.target`: one step from
/// the zero state, zero majors.
pub fn infer_prereqs(model: &Model, vocab: &Vocabulary, ctx: &CandidateFilterContext) -> Result<Vec<RankedRecommendation>> {
    check_goal(model, ctx.threshold)?;
    let candidates = filter_candidates(vocab, ctx, FilterMode::PrereqInference, None)?;
    let target = vocab.index_of_key(&ctx.target).expect("filtered target");
    score_candidates(
        model,
        vocab,
        &HiddenState::zeros(model.dims.hidden),
        &candidates,
        target,
        ctx.threshold,
        &MajorVector::zeros(model.dims.k),
        TOP_K,
    )
}

/// Personalized recommendation for the semester after `history`, preparing
/// for `ctx.target` in the semester after that.
pub fn recommend(
    model: &Model,
    vocab: &Vocabulary,
    history: &[SemesterRecords],
    ctx: &CandidateFilterContext,
) -> Result<Vec<RankedRecommendation>> {
    recommend_top(model, vocab, history, ctx, TOP_K)
}

pub fn recommend_top(
    model: &Model,
    vocab: &Vocabulary,
    history: &[SemesterRecords],
    ctx: &CandidateFilterContext,
    top_k: usize,
) -> Result<Vec<RankedRecommendation>> {
    check_goal(model, ctx.threshold)?;
    if history.is_empty() {
        return Err(Error::InvalidRequest("student has no enrollment history".into()));
    }
    if history.iter().flat_map(|s| s.courses()).any(|c| c.key() == ctx.target) {
        return Err(Error::InvalidRequest(format!("{} is already in the student's history", ctx.target)));
    }
    let target = vocab
        .index_of_key(&ctx.target)
        .ok_or_else(|| Error::UnknownCourse(ctx.target.to_string()))?;

    // History courses outside the vocabulary cannot be encoded; drop them.
    let known: Vec<SemesterRecords> = history
        .iter()
        .map(|s| SemesterRecords {
            semester: s.semester,
            majors: s.majors.clone(),
            records: s
                .records
                .iter()
                .filter(|r| vocab.course_index(&r.course).is_some())
                .cloned()
                .collect(),
        })
        .collect();
    let inputs = encode_history(model.kind, &known, vocab, model.threshold)?;
    let trace = trace_sequence(model, &inputs)?;
    let last = trace.last().expect("non-empty history");

    let predicted_ok: Vec<bool> = (0..vocab.n())
        .map(|i| above_probability(last.probs.letter_group(i), model.scheme, ctx.threshold) >= 0.5)
        .collect();
    let candidates = filter_candidates(vocab, ctx, FilterMode::GoalRec, Some(&predicted_ok))?;

    let majors = match (model.kind, known.last()) {
        (crate::net::ModelKind::Model3, Some(s)) => encode_semester(&[], &s.majors, vocab, model.threshold)?.majors,
        _ => MajorVector::zeros(vocab.k()),
    };
    score_candidates(model, vocab, &last.state, &candidates, target, ctx.threshold, &majors, top_k)
}

/// Courses with at least one enrollment in any semester sharing `semester`'s term.
pub fn availability(dataset: &EnrollmentDataset, semester: Semester) -> BTreeSet<CourseKey> {
    dataset
        .records()
        .filter(|r| r.semester.term == semester.term)
        .map(|r| r.course.key())
        .collect()
}

/// Groups prerequisite pairs by target.
pub fn pairs_by_target(pairs: &[PrereqPair]) -> BTreeMap<CourseKey, BTreeSet<CourseKey>> {
    let mut map: BTreeMap<CourseKey, BTreeSet<CourseKey>> = BTreeMap::new();
    for p in pairs {
        map.entry(p.target.clone()).or_default().insert(p.prerequisite.clone());
    }
    map
}
