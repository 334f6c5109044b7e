//! Per-semester tensors: grade vectors, co-enrollment and major multi-hots,
//! and the two-level loss mask.
//!
//! Each course owns a slot of `m + 2` entries in a grade vector: `m` letter
//! categories followed by Pass and NoPass.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::domain::{
    EnrollmentRecord, Grade, GradeScheme, LetterGrade, SemesterRecords, SplitSequence, Vocabulary,
};
use crate::error::{Error, Result};

/// Grade goal. Letter grades binarize against its cut point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Threshold {
    A,
    B,
}

impl Threshold {
    pub fn cut_tenths(self) -> u8 {
        match self {
            Threshold::A => 40,
            Threshold::B => 30,
        }
    }

    pub fn cut_points(self) -> f64 {
        f64::from(self.cut_tenths()) / 10.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Threshold::A => "A",
            Threshold::B => "B",
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(Threshold::A),
            "B" | "b" => Ok(Threshold::B),
            other => Err(format!("unknown threshold {other:?} (expected A or B)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryGrade {
    AboveOrEqual,
    Below,
    Pass,
    NoPass,
}

pub fn binarize_grade(grade: Grade, threshold: Threshold) -> BinaryGrade {
    match grade {
        Grade::Letter(l) if l.points_tenths() >= threshold.cut_tenths() => BinaryGrade::AboveOrEqual,
        Grade::Letter(_) => BinaryGrade::Below,
        Grade::PassNoPass { passed: true } => BinaryGrade::Pass,
        Grade::PassNoPass { passed: false } => BinaryGrade::NoPass,
    }
}

/// Indices into the letter group that count as reaching `threshold`.
pub fn above_categories(scheme: GradeScheme, threshold: Threshold) -> Vec<usize> {
    match scheme {
        GradeScheme::Binary => vec![0],
        GradeScheme::Letters => LetterGrade::ALL
            .iter()
            .enumerate()
            .filter(|(_, l)| l.points_tenths() >= threshold.cut_tenths())
            .map(|(i, _)| i)
            .collect(),
    }
}

/// Letter-group position a probe sets to assert "at or above the threshold".
pub fn probe_position(scheme: GradeScheme, threshold: Threshold) -> usize {
    match scheme {
        GradeScheme::Binary => 0,
        GradeScheme::Letters => {
            let letter = match threshold {
                Threshold::A => LetterGrade::A,
                Threshold::B => LetterGrade::B,
            };
            LetterGrade::ALL.iter().position(|l| *l == letter).expect("letter in table")
        }
    }
}

/// Position of a grade inside its course slot.
pub fn slot_position(grade: Grade, scheme: GradeScheme, threshold: Threshold, m: usize) -> usize {
    match (scheme, grade) {
        (_, Grade::PassNoPass { passed: true }) => m,
        (_, Grade::PassNoPass { passed: false }) => m + 1,
        (GradeScheme::Binary, g) => match binarize_grade(g, threshold) {
            BinaryGrade::AboveOrEqual => 0,
            _ => 1,
        },
        (GradeScheme::Letters, Grade::Letter(l)) => LetterGrade::ALL
            .iter()
            .position(|x| *x == l)
            .expect("letter in table"),
    }
}

/// Dense `(m + 2) * n` vector of per-course grade slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeVector {
    pub values: Vec<f64>,
    n: usize,
    m: usize,
}

impl GradeVector {
    pub fn zeros(n: usize, m: usize) -> Self {
        GradeVector {
            values: vec![0.0; (m + 2) * n],
            n,
            m,
        }
    }

    pub fn from_values(values: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if values.len() != (m + 2) * n {
            return Err(Error::DimensionMismatch {
                what: "grade vector",
                expected: (m + 2) * n,
                actual: values.len(),
            });
        }
        Ok(GradeVector { values, n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn slot_width(&self) -> usize {
        self.m + 2
    }

    pub fn slot(&self, course: usize) -> &[f64] {
        let w = self.slot_width();
        &self.values[course * w..(course + 1) * w]
    }

    pub fn letter_group(&self, course: usize) -> &[f64] {
        &self.slot(course)[..self.m]
    }

    pub fn pnp_group(&self, course: usize) -> &[f64] {
        &self.slot(course)[self.m..]
    }

    pub fn set(&mut self, course: usize, position: usize) {
        let w = self.slot_width();
        self.values[course * w + position] = 1.0;
    }

    /// A vector with a single one-hot entry.
    pub fn one_hot(n: usize, m: usize, course: usize, position: usize) -> Self {
        let mut g = GradeVector::zeros(n, m);
        g.set(course, position);
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoEnrollmentVector(pub Vec<f64>);

impl CoEnrollmentVector {
    pub fn zeros(n: usize) -> Self {
        CoEnrollmentVector(vec![0.0; n])
    }

    pub fn one_hot(n: usize, course: usize) -> Self {
        let mut c = CoEnrollmentVector::zeros(n);
        c.0[course] = 1.0;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorVector(pub Vec<f64>);

impl MajorVector {
    pub fn zeros(k: usize) -> Self {
        MajorVector(vec![0.0; k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskSelector {
    None,
    LetterGroup,
    PassNoPassGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossMask(pub Vec<MaskSelector>);

impl LossMask {
    pub fn none(n: usize) -> Self {
        LossMask(vec![MaskSelector::None; n])
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|s| *s == MaskSelector::None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSemester {
    pub grades: GradeVector,
    pub courses: CoEnrollmentVector,
    pub majors: MajorVector,
    pub mask: LossMask,
}

/// Encodes one semester. Pass/NoPass enrollments count as co-enrollments too.
/// Majors unknown to the vocabulary are ignored.
pub fn encode_semester(
    records: &[EnrollmentRecord],
    majors: &BTreeSet<String>,
    vocab: &Vocabulary,
    threshold: Threshold,
) -> Result<EncodedSemester> {
    let (n, m, k) = (vocab.n(), vocab.m(), vocab.k());
    let mut grades = GradeVector::zeros(n, m);
    let mut courses = CoEnrollmentVector::zeros(n);
    let mut mask = LossMask::none(n);
    for r in records {
        let i = vocab
            .course_index(&r.course)
            .ok_or_else(|| Error::UnknownCourse(r.course.id.clone()))?;
        let pos = slot_position(r.grade, vocab.scheme(), threshold, m);
        grades.set(i, pos);
        courses.0[i] = 1.0;
        mask.0[i] = if pos < m {
            MaskSelector::LetterGroup
        } else {
            MaskSelector::PassNoPassGroup
        };
    }
    let mut major_vec = MajorVector::zeros(k);
    for name in majors {
        if let Some(j) = vocab.major_index(name) {
            major_vec.0[j] = 1.0;
        }
    }
    Ok(EncodedSemester {
        grades,
        courses,
        majors: major_vec,
        mask,
    })
}

/// Recovers the `(course index, slot position)` pairs of a label or input vector.
pub fn decode_grades(grades: &GradeVector) -> Vec<(usize, usize)> {
    (0..grades.n())
        .filter_map(|i| grades.slot(i).iter().position(|v| *v != 0.0).map(|p| (i, p)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Grades only.
    Model1,
    /// Grades plus next-semester co-enrollment, both into the recurrent layer.
    Model2,
    /// Grades plus majors into the recurrent layer; next-semester
    /// co-enrollment through a linear side branch into the output layer.
    Model3,
}

impl ModelKind {
    pub fn recurrent_input_dim(self, n: usize, m: usize, k: usize) -> usize {
        let g = (m + 2) * n;
        match self {
            ModelKind::Model1 => g,
            ModelKind::Model2 => g + n,
            ModelKind::Model3 => g + k,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::Model1 => 1,
            ModelKind::Model2 => 2,
            ModelKind::Model3 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ModelKind::Model1),
            2 => Some(ModelKind::Model2),
            3 => Some(ModelKind::Model3),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model{}", self.code())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().trim_start_matches("model").trim_start_matches("Model");
        t.parse::<u8>()
            .ok()
            .and_then(ModelKind::from_code)
            .ok_or_else(|| format!("unknown model kind {s:?} (expected 1, 2 or 3)"))
    }
}

/// Network input for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInput {
    pub recurrent: Vec<f64>,
    /// Model 3 co-enrollment routed to the output layer.
    pub side: Option<Vec<f64>>,
}

pub fn build_model_input(
    kind: ModelKind,
    grades: &GradeVector,
    next_courses: &CoEnrollmentVector,
    majors: &MajorVector,
) -> Result<StepInput> {
    let n = grades.n();
    if next_courses.0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "co-enrollment vector",
            expected: n,
            actual: next_courses.0.len(),
        });
    }
    let mut recurrent = grades.values.clone();
    let side = match kind {
        ModelKind::Model1 => None,
        ModelKind::Model2 => {
            recurrent.extend_from_slice(&next_courses.0);
            None
        }
        ModelKind::Model3 => {
            recurrent.extend_from_slice(&majors.0);
            Some(next_courses.0.clone())
        }
    };
    Ok(StepInput { recurrent, side })
}

/// Label and mask for the semester a step predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTarget {
    pub label: GradeVector,
    pub mask: LossMask,
}

impl StepTarget {
    pub fn masked(n: usize, m: usize) -> Self {
        StepTarget {
            label: GradeVector::zeros(n, m),
            mask: LossMask::none(n),
        }
    }
}

/// Step `t` consumes semester `t` (and the co-enrollment of `t + 1`) and
/// predicts semester `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub inputs: Vec<StepInput>,
    pub targets: Vec<StepTarget>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Appends fully masked steps until the sequence has `len` steps.
    pub fn pad_to(&mut self, len: usize, n: usize, m: usize) {
        let Some(template) = self.inputs.first() else {
            return;
        };
        let (rec_dim, side_dim) = (template.recurrent.len(), template.side.as_ref().map(Vec::len));
        while self.inputs.len() < len {
            self.inputs.push(StepInput {
                recurrent: vec![0.0; rec_dim],
                side: side_dim.map(|d| vec![0.0; d]),
            });
            self.targets.push(StepTarget::masked(n, m));
        }
    }

    pub fn labeled_entries(&self) -> usize {
        self.targets
            .iter()
            .map(|t| t.mask.0.iter().filter(|s| **s != MaskSelector::None).count())
            .sum()
    }
}

fn encode_all(semesters: &[SemesterRecords], vocab: &Vocabulary, threshold: Threshold) -> Result<Vec<EncodedSemester>> {
    semesters
        .iter()
        .map(|s| encode_semester(&s.records, &s.majors, vocab, threshold))
        .collect()
}

/// Encodes a split sequence. Targets before `first_label` are fully masked.
pub fn encode_sequence(
    kind: ModelKind,
    seq: &SplitSequence,
    vocab: &Vocabulary,
    threshold: Threshold,
) -> Result<EncodedSequence> {
    let encoded = encode_all(&seq.semesters, vocab, threshold)?;
    let mut out = EncodedSequence {
        inputs: Vec::new(),
        targets: Vec::new(),
    };
    for pair in encoded.windows(2).enumerate() {
        let (t, [cur, next]) = pair else { unreachable!() };
        out.inputs
            .push(build_model_input(kind, &cur.grades, &next.courses, &cur.majors)?);
        out.targets.push(if t + 1 >= seq.first_label {
            StepTarget {
                label: next.grades.clone(),
                mask: next.mask.clone(),
            }
        } else {
            StepTarget::masked(vocab.n(), vocab.m())
        });
    }
    Ok(out)
}

pub fn encode_split(
    kind: ModelKind,
    split: &[SplitSequence],
    vocab: &Vocabulary,
    threshold: Threshold,
) -> Result<Vec<EncodedSequence>> {
    let mut out = Vec::with_capacity(split.len());
    for seq in split {
        let e = encode_sequence(kind, seq, vocab, threshold)?;
        if !e.is_empty() {
            out.push(e);
        }
    }
    Ok(out)
}

/// Inputs for replaying a history whose next semester is unknown: every
/// semester becomes a step and the last step's co-enrollment is zero.
pub fn encode_history(
    kind: ModelKind,
    semesters: &[SemesterRecords],
    vocab: &Vocabulary,
    threshold: Threshold,
) -> Result<Vec<StepInput>> {
    let encoded = encode_all(semesters, vocab, threshold)?;
    let zero = CoEnrollmentVector::zeros(vocab.n());
    encoded
        .iter()
        .enumerate()
        .map(|(t, cur)| {
            let next = encoded.get(t + 1).map_or(&zero, |e| &e.courses);
            build_model_input(kind, &cur.grades, next, &cur.majors)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Course, Semester, Term};

    fn vocab3() -> Vocabulary {
        Vocabulary::new(
            (1..=3).map(|i| Course::new("D", i)),
            ["M1", "M2", "M3", "M4"].map(String::from),
            GradeScheme::Binary,
        )
        .unwrap()
    }

    fn rec(course: u32, grade: &str) -> EnrollmentRecord {
        EnrollmentRecord {
            student_id: "s".into(),
            semester: Semester::new(2014, Term::Fall),
            majors: BTreeSet::new(),
            course: Course::new("D", course),
            grade: grade.parse().unwrap(),
        }
    }

    #[test]
    fn binarization() {
        let g = |s: &str| s.parse::<Grade>().unwrap();
        assert_eq!(binarize_grade(g("A"), Threshold::B), BinaryGrade::AboveOrEqual);
        assert_eq!(binarize_grade(g("B-"), Threshold::B), BinaryGrade::Below);
        assert_eq!(binarize_grade(g("B"), Threshold::B), BinaryGrade::AboveOrEqual);
        assert_eq!(binarize_grade(g("A-"), Threshold::A), BinaryGrade::Below);
        assert_eq!(binarize_grade(g("P"), Threshold::A), BinaryGrade::Pass);
        assert_eq!(binarize_grade(g("NP"), Threshold::B), BinaryGrade::NoPass);
    }

    #[test]
    fn encodes_hand_layout() {
        let v = vocab3();
        let e = encode_semester(&[rec(2, "A"), rec(3, "P")], &BTreeSet::new(), &v, Threshold::B).unwrap();
        assert_eq!(
            e.grades.values,
            vec![0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0.]
        );
        assert_eq!(e.courses.0, vec![0., 1., 1.]);
        assert_eq!(
            e.mask.0,
            vec![MaskSelector::None, MaskSelector::LetterGroup, MaskSelector::PassNoPassGroup]
        );
        assert_eq!(decode_grades(&e.grades), vec![(1, 0), (2, 2)]);
    }

    #[test]
    fn empty_semester() {
        let v = vocab3();
        let e = encode_semester(&[], &BTreeSet::new(), &v, Threshold::A).unwrap();
        assert!(e.grades.values.iter().all(|x| *x == 0.0));
        assert!(e.courses.0.iter().all(|x| *x == 0.0));
        assert!(e.mask.is_empty());
    }

    #[test]
    fn unknown_course_rejected() {
        let v = vocab3();
        assert!(matches!(
            encode_semester(&[rec(9, "A")], &BTreeSet::new(), &v, Threshold::A),
            Err(Error::UnknownCourse(_))
        ));
    }

    #[test]
    fn model_input_lengths() {
        let v = vocab3();
        let g = GradeVector::zeros(3, 2);
        let c = CoEnrollmentVector::zeros(3);
        let mj = MajorVector::zeros(v.k());
        let one = build_model_input(ModelKind::Model1, &g, &c, &mj).unwrap();
        assert_eq!((one.recurrent.len(), one.side), (12, None));
        let two = build_model_input(ModelKind::Model2, &g, &c, &mj).unwrap();
        assert_eq!(two.recurrent.len(), 15);
        let three = build_model_input(ModelKind::Model3, &g, &c, &mj).unwrap();
        assert_eq!(three.recurrent.len(), 16);
        assert_eq!(three.side.unwrap().len(), 3);
        assert!(build_model_input(ModelKind::Model2, &g, &CoEnrollmentVector::zeros(2), &mj).is_err());
    }

    #[test]
    fn letters_scheme_positions() {
        let above = above_categories(GradeScheme::Letters, Threshold::A);
        assert_eq!(above, vec![0, 1]);
        let above_b = above_categories(GradeScheme::Letters, Threshold::B);
        assert_eq!(above_b.len(), 5);
        let pos = slot_position("B-".parse().unwrap(), GradeScheme::Letters, Threshold::B, 13);
        assert!(!above_b.contains(&pos));
    }

    #[test]
    fn sequence_masks_input_only_semesters() {
        let v = vocab3();
        let sem = |y, t, c: u32| SemesterRecords {
            semester: Semester::new(y, t),
            majors: BTreeSet::new(),
            records: vec![rec(c, "A")],
        };
        let seq = SplitSequence {
            student_id: "s".into(),
            semesters: vec![sem(2014, Term::Spring, 1), sem(2014, Term::Fall, 2), sem(2015, Term::Spring, 3)],
            first_label: 2,
        };
        let e = encode_sequence(ModelKind::Model2, &seq, &v, Threshold::B).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.targets[0].mask.is_empty());
        assert_eq!(e.targets[1].mask.0[2], MaskSelector::LetterGroup);
        // c of step 0 marks semester 1's course
        assert_eq!(&e.inputs[0].recurrent[12..], &[0., 1., 0.]);

        let h = encode_history(ModelKind::Model2, &seq.semesters, &v, Threshold::B).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(&h[2].recurrent[12..], &[0., 0., 0.]);
    }
}
