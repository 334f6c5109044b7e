//! Grade-prediction, prerequisite-recovery, and goal-based recommendation metrics.
//! All rates are percentages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::domain::{CourseKey, EnrollmentDataset, Grade, GradeScheme, Semester, Vocabulary};
use crate::encode::{above_categories, EncodedSequence, MaskSelector, Threshold};
use crate::error::{Error, Result};
use crate::inference::{
    above_probability, availability, infer_prereqs, pairs_by_target, recommend, CandidateFilterContext,
    PrereqPair, RankedRecommendation,
};
use crate::net::{forward_sequence, Model};

/// A named metric value, printed one per line as `name,value`.
pub type MetricRecord = (String, f64);

pub fn format_records(records: &[MetricRecord]) -> String {
    records.iter().map(|(k, v)| format!("{k},{v}\n")).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.total() > 0).then(|| 100.0 * (self.tp + self.tn) as f64 / self.total() as f64)
    }

    /// F-score of the above-threshold class; zero when nothing is predicted correctly.
    pub fn fscore(&self) -> f64 {
        if self.tp == 0 {
            return 0.0;
        }
        let precision = self.tp as f64 / (self.tp + self.fp) as f64;
        let recall = self.tp as f64 / (self.tp + self.fn_) as f64;
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradeMetrics {
    pub letter_accuracy: Option<f64>,
    pub letter_fscore: Option<f64>,
    pub pnp_accuracy: Option<f64>,
    pub letter_entries: usize,
    pub pnp_entries: usize,
}

impl GradeMetrics {
    pub fn records(&self, prefix: &str) -> Vec<MetricRecord> {
        let mut out = Vec::new();
        let mut push = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                out.push((format!("{prefix}{name}"), v));
            }
        };
        push("letter_accuracy", self.letter_accuracy);
        push("letter_fscore", self.letter_fscore);
        push("pnp_accuracy", self.pnp_accuracy);
        out.push((format!("{prefix}letter_entries"), self.letter_entries as f64));
        out.push((format!("{prefix}pnp_entries"), self.pnp_entries as f64));
        out
    }
}

impl fmt::Display for GradeMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "None".to_string(), |v| format!("{v:.2}"));
        writeln!(f, "{:<16}{:>10}{:>10}{:>10}", "", "letter", "F-score", "pass")?;
        write!(
            f,
            "{:<16}{:>10}{:>10}{:>10}",
            "",
            show(self.letter_accuracy),
            show(self.letter_fscore),
            show(self.pnp_accuracy)
        )
    }
}

/// Counts of labeled entries, split into letter and Pass/NoPass populations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictionCounts {
    pub letter: Confusion,
    pub pnp_correct: usize,
    pub pnp_total: usize,
}

impl PredictionCounts {
    pub fn metrics(&self, with_fscore: bool) -> Result<GradeMetrics> {
        if self.letter.total() == 0 && self.pnp_total == 0 {
            return Err(Error::NoLabels);
        }
        Ok(GradeMetrics {
            letter_accuracy: self.letter.accuracy(),
            letter_fscore: (with_fscore && self.letter.total() > 0).then(|| self.letter.fscore()),
            pnp_accuracy: (self.pnp_total > 0).then(|| 100.0 * self.pnp_correct as f64 / self.pnp_total as f64),
            letter_entries: self.letter.total(),
            pnp_entries: self.pnp_total,
        })
    }
}

/// The observed class of every labeled entry: `(is_letter, positive)` where
/// positive means at-or-above threshold, or Pass.
fn labeled_entries<'a>(
    seqs: &'a [EncodedSequence],
    scheme: GradeScheme,
    threshold: Threshold,
) -> impl Iterator<Item = (usize, usize, usize, bool, bool)> + 'a {
    let above = above_categories(scheme, threshold);
    seqs.iter().enumerate().flat_map(move |(s, seq)| {
        let above = above.clone();
        seq.targets.iter().enumerate().flat_map(move |(t, target)| {
            let above = above.clone();
            target.mask.0.iter().enumerate().filter_map(move |(i, sel)| match sel {
                MaskSelector::None => None,
                MaskSelector::LetterGroup => {
                    let g = target.label.letter_group(i);
                    Some((s, t, i, true, above.iter().any(|&j| g[j] == 1.0)))
                }
                MaskSelector::PassNoPassGroup => Some((s, t, i, false, target.label.pnp_group(i)[0] == 1.0)),
            })
        })
    })
}

pub fn prediction_counts(model: &Model, seqs: &[EncodedSequence]) -> Result<PredictionCounts> {
    let preds: Vec<_> = seqs
        .iter()
        .map(|s| forward_sequence(model, &s.inputs))
        .collect::<Result<_>>()?;
    let mut counts = PredictionCounts::default();
    for (s, t, i, is_letter, positive) in labeled_entries(seqs, model.scheme, model.threshold) {
        let p = &preds[s][t];
        if is_letter {
            let predicted = above_probability(p.letter_group(i), model.scheme, model.threshold) >= 0.5;
            match (predicted, positive) {
                (true, true) => counts.letter.tp += 1,
                (true, false) => counts.letter.fp += 1,
                (false, true) => counts.letter.fn_ += 1,
                (false, false) => counts.letter.tn += 1,
            }
        } else {
            let g = p.pnp_group(i);
            let predicted = g[0] >= g[1];
            counts.pnp_total += 1;
            counts.pnp_correct += usize::from(predicted == positive);
        }
    }
    Ok(counts)
}

/// Letter-grade accuracy, or `None` when no letter labels exist.
pub fn letter_accuracy(model: &Model, seqs: &[EncodedSequence]) -> Result<Option<f64>> {
    Ok(prediction_counts(model, seqs)?.letter.accuracy())
}

/// Accuracy and F-score of the above-threshold class for letter grades, and
/// Pass/NoPass accuracy. The two populations have separate denominators.
pub fn grade_prediction_metrics(model: &Model, test: &[EncodedSequence]) -> Result<GradeMetrics> {
    prediction_counts(model, test)?.metrics(true)
}

/// Predicts the majority class of `train` for every labeled entry of `test`.
pub fn majority_baseline(
    train: &[EncodedSequence],
    test: &[EncodedSequence],
    scheme: GradeScheme,
    threshold: Threshold,
) -> Result<GradeMetrics> {
    let (mut letter_pos, mut letter_all, mut pass, mut pnp_all) = (0usize, 0usize, 0usize, 0usize);
    for (_, _, _, is_letter, positive) in labeled_entries(train, scheme, threshold) {
        if is_letter {
            letter_all += 1;
            letter_pos += usize::from(positive);
        } else {
            pnp_all += 1;
            pass += usize::from(positive);
        }
    }
    let letter_majority = 2 * letter_pos >= letter_all;
    let pnp_majority = 2 * pass >= pnp_all;

    let mut counts = PredictionCounts::default();
    for (_, _, _, is_letter, positive) in labeled_entries(test, scheme, threshold) {
        if is_letter {
            match (letter_majority, positive) {
                (true, true) => counts.letter.tp += 1,
                (true, false) => counts.letter.fp += 1,
                (false, true) => counts.letter.fn_ += 1,
                (false, false) => counts.letter.tn += 1,
            }
        } else {
            counts.pnp_total += 1;
            counts.pnp_correct += usize::from(pnp_majority == positive);
        }
    }
    counts.metrics(false)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrereqMetrics {
    pub pair_accuracy: f64,
    pub target_accuracy: f64,
    pub pairs: usize,
    pub targets: usize,
}

impl PrereqMetrics {
    pub fn records(&self) -> Vec<MetricRecord> {
        vec![
            ("prereq_pair_accuracy".into(), self.pair_accuracy),
            ("prereq_target_accuracy".into(), self.target_accuracy),
            ("prereq_pairs".into(), self.pairs as f64),
            ("prereq_targets".into(), self.targets as f64),
        ]
    }
}

/// Pair and target recovery given each target's ranked list.
pub fn prereq_metrics(
    recommendations: &BTreeMap<CourseKey, Vec<RankedRecommendation>>,
    pairs: &[PrereqPair],
) -> PrereqMetrics {
    let grouped = pairs_by_target(pairs);
    let (mut hit_pairs, mut total_pairs, mut hit_targets) = (0usize, 0usize, 0usize);
    for (target, prereqs) in &grouped {
        let recovered: BTreeSet<CourseKey> = recommendations
            .get(target)
            .map(|r| r.iter().map(|x| x.course.key()).collect())
            .unwrap_or_default();
        let hits = prereqs.iter().filter(|p| recovered.contains(p)).count();
        hit_pairs += hits;
        total_pairs += prereqs.len();
        hit_targets += usize::from(hits > 0);
    }
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    PrereqMetrics {
        pair_accuracy: pct(hit_pairs, total_pairs),
        target_accuracy: pct(hit_targets, grouped.len()),
        pairs: total_pairs,
        targets: grouped.len(),
    }
}

/// Runs prerequisite inference for every distinct target in `pairs`.
pub fn infer_all_targets(
    model: &Model,
    vocab: &Vocabulary,
    pairs: &[PrereqPair],
    registrar: &[PrereqPair],
) -> Result<BTreeMap<CourseKey, Vec<RankedRecommendation>>> {
    let mut out = BTreeMap::new();
    for target in pairs_by_target(pairs).into_keys() {
        let ctx = CandidateFilterContext::for_prereqs(registrar.to_vec(), target.clone(), model.threshold);
        out.insert(target, infer_prereqs(model, vocab, &ctx)?);
    }
    Ok(out)
}

/// Prerequisite recovery, using `pairs` both as ground truth and as the
/// registrar list behind the department filter.
pub fn prereq_accuracy(model: &Model, vocab: &Vocabulary, pairs: &[PrereqPair]) -> Result<PrereqMetrics> {
    let recs = infer_all_targets(model, vocab, pairs, pairs)?;
    Ok(prereq_metrics(&recs, pairs))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GoalMetrics {
    pub pos_rate: Option<f64>,
    pub neg_rate: Option<f64>,
    pub pos_students: usize,
    pub neg_students: usize,
    pub pos_hits: usize,
    pub neg_hits: usize,
}

impl GoalMetrics {
    fn finish(mut self) -> Self {
        let rate = |h: usize, n: usize| (n > 0).then(|| 100.0 * h as f64 / n as f64);
        self.pos_rate = rate(self.pos_hits, self.pos_students);
        self.neg_rate = rate(self.neg_hits, self.neg_students);
        self
    }

    fn merge(&mut self, other: &GoalMetrics) {
        self.pos_students += other.pos_students;
        self.neg_students += other.neg_students;
        self.pos_hits += other.pos_hits;
        self.neg_hits += other.neg_hits;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CourseGoalResult {
    pub target: CourseKey,
    /// `None` when no student qualified.
    pub metrics: Option<GoalMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalReport {
    pub per_course: Vec<CourseGoalResult>,
    pub summary: GoalMetrics,
}

impl GoalReport {
    pub fn records(&self) -> Vec<MetricRecord> {
        let mut out = Vec::new();
        let mut push = |prefix: String, m: &GoalMetrics| {
            if let Some(v) = m.pos_rate {
                out.push((format!("{prefix}pos_rate"), v));
            }
            if let Some(v) = m.neg_rate {
                out.push((format!("{prefix}neg_rate"), v));
            }
            out.push((format!("{prefix}pos_students"), m.pos_students as f64));
            out.push((format!("{prefix}neg_students"), m.neg_students as f64));
        };
        for c in &self.per_course {
            if let Some(m) = &c.metrics {
                push(format!("goal[{}].", c.target), m);
            }
        }
        push("goal.".into(), &self.summary);
        out
    }
}

impl fmt::Display for GoalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        writeln!(f, "{:<28}{:>10}{:>10}{:>8}{:>8}", "target", "pos", "pos-neg", "n_pos", "n_neg")?;
        for c in &self.per_course {
            match &c.metrics {
                Some(m) => writeln!(
                    f,
                    "{:<28}{:>10}{:>10}{:>8}{:>8}",
                    c.target.to_string(),
                    show(m.pos_rate),
                    show(m.neg_rate),
                    m.pos_students,
                    m.neg_students
                )?,
                None => writeln!(f, "{:<28}{:>10}", c.target.to_string(), "empty")?,
            }
        }
        let s = &self.summary;
        write!(
            f,
            "{:<28}{:>10}{:>10}{:>8}{:>8}",
            "summary",
            show(s.pos_rate),
            show(s.neg_rate),
            s.pos_students,
            s.neg_students
        )
    }
}

/// Parameters of a goal-based evaluation run.
#[derive(Debug, Clone)]
pub struct GoalEvalSetup<'a> {
    pub targets: &'a [CourseKey],
    pub target_semester: Semester,
    pub rec_semester: Semester,
    pub goal: Threshold,
    pub registrar: &'a [PrereqPair],
}

/// For each target, students who took it in `target_semester` with a letter
/// grade, at least two earlier semesters, no enrollment strictly between the
/// recommendation and target semesters, and no earlier attempt at the target.
/// A hit is any overlap between the top recommendations (as of
/// `rec_semester`) and the courses actually taken in `rec_semester`.
pub fn goal_match_rates(
    model: &Model,
    vocab: &Vocabulary,
    dataset: &EnrollmentDataset,
    setup: &GoalEvalSetup<'_>,
) -> Result<GoalReport> {
    let offered = availability(dataset, setup.rec_semester);
    let mut per_course = Vec::with_capacity(setup.targets.len());
    let mut summary = GoalMetrics::default();

    for target in setup.targets {
        let mut m = GoalMetrics::default();
        for student in &dataset.students {
            let Some(tpos) = student.position_of(setup.target_semester) else {
                continue;
            };
            let Some(record) = student.semesters[tpos].records.iter().find(|r| r.course.key() == *target) else {
                continue;
            };
            let Grade::Letter(letter) = record.grade else {
                continue;
            };
            let before = &student.semesters[..tpos];
            if before.len() < 2
                || before
                    .iter()
                    .any(|s| s.semester > setup.rec_semester && s.semester < setup.target_semester)
                || before.iter().flat_map(|s| s.courses()).any(|c| c.key() == *target)
            {
                continue;
            }
            let history: Vec<_> = before
                .iter()
                .filter(|s| s.semester < setup.rec_semester)
                .cloned()
                .collect();
            if history.is_empty() {
                continue;
            }
            let actual: BTreeSet<CourseKey> = before
                .iter()
                .filter(|s| s.semester == setup.rec_semester)
                .flat_map(|s| s.courses().map(|c| c.key()))
                .collect();
            let ctx = CandidateFilterContext {
                prereq_pairs: setup.registrar.to_vec(),
                availability: Some(offered.clone()),
                student_history: history.iter().flat_map(|s| s.courses().map(|c| c.key())).collect(),
                target: target.clone(),
                threshold: setup.goal,
            };
            let recs = recommend(model, vocab, &history, &ctx)?;
            let hit = recs.iter().any(|r| actual.contains(&r.course.key()));
            if letter.points_tenths() >= setup.goal.cut_tenths() {
                m.pos_students += 1;
                m.pos_hits += usize::from(hit);
            } else {
                m.neg_students += 1;
                m.neg_hits += usize::from(hit);
            }
        }
        summary.merge(&m);
        per_course.push(CourseGoalResult {
            target: target.clone(),
            metrics: (m.pos_students + m.neg_students > 0).then(|| m.finish()),
        });
    }
    Ok(GoalReport {
        per_course,
        summary: summary.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Course, GradeScheme};
    use crate::encode::{GradeVector, LossMask, StepInput, StepTarget};

    fn letter_seq(labels: &[bool]) -> EncodedSequence {
        let n = labels.len();
        let mut label = GradeVector::zeros(n, 2);
        for (i, above) in labels.iter().enumerate() {
            label.set(i, if *above { 0 } else { 1 });
        }
        EncodedSequence {
            inputs: vec![StepInput { recurrent: vec![0.0; 4 * n], side: None }],
            targets: vec![StepTarget {
                label,
                mask: LossMask(vec![MaskSelector::LetterGroup; n]),
            }],
        }
    }

    #[test]
    fn confusion_formulas() {
        let c = Confusion { tp: 1, fp: 1, fn_: 1, tn: 1 };
        assert_eq!(c.accuracy(), Some(50.0));
        assert!((c.fscore() - 50.0).abs() < 1e-12);
        assert_eq!(Confusion { tp: 0, fp: 3, fn_: 2, tn: 1 }.fscore(), 0.0);
    }

    #[test]
    fn majority_counts() {
        let s = [letter_seq(&[true, true, true, false])];
        let m = majority_baseline(&s, &s, GradeScheme::Binary, Threshold::B).unwrap();
        assert_eq!(m.letter_accuracy, Some(75.0));
        assert_eq!(m.letter_fscore, None);
        let same = [letter_seq(&[false, false])];
        let m = majority_baseline(&same, &same, GradeScheme::Binary, Threshold::B).unwrap();
        assert_eq!(m.letter_accuracy, Some(100.0));
        let empty: [EncodedSequence; 0] = [];
        assert!(matches!(
            majority_baseline(&s, &empty, GradeScheme::Binary, Threshold::B),
            Err(Error::NoLabels)
        ));
    }

    #[test]
    fn prereq_metric_formulas() {
        let k = |n| CourseKey::new("D", n);
        let pairs = vec![PrereqPair::new(k(1), k(100)), PrereqPair::new(k(2), k(100))];
        let rec = |n| RankedRecommendation {
            course: Course::new("D", n),
            index: 0,
            probability: 0.9,
        };
        let recs = BTreeMap::from([(k(100), vec![rec(1), rec(3)])]);
        let m = prereq_metrics(&recs, &pairs);
        assert_eq!((m.pair_accuracy, m.target_accuracy), (50.0, 100.0));

        let single = vec![PrereqPair::new(k(1), k(100))];
        let m = prereq_metrics(&recs, &single);
        assert_eq!((m.pair_accuracy, m.target_accuracy), (100.0, 100.0));
    }

    #[test]
    fn one_prereq_per_target_target_accuracy_bounds_pairs() {
        let k = |n| CourseKey::new("D", n);
        let rec = |n| RankedRecommendation {
            course: Course::new("D", n),
            index: 0,
            probability: 0.5,
        };
        let pairs: Vec<_> = (0..6).map(|t| PrereqPair::new(k(t), k(100 + t))).collect();
        let recs: BTreeMap<_, _> = (0..6).map(|t| (k(100 + t), vec![rec(if t % 2 == 0 { t } else { 50 })])).collect();
        let m = prereq_metrics(&recs, &pairs);
        assert!(m.target_accuracy >= m.pair_accuracy);
        assert_eq!(m.pair_accuracy, 50.0);
    }
}
