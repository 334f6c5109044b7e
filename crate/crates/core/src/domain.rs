//! Enrollment records, course catalog vocabulary, and temporal splits.
//!
//! The on-disk format is a headed CSV with one row per enrollment:
//!
//! ```text
//! Semester Year,STU ID,Major,Dept,Course Num,Grade
//! Spring 2014,x137905,Law,Law,178,B
//! ```
//!
//! `Major` may hold several majors separated by `;`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["Semester Year", "STU ID", "Major", "Dept", "Course Num", "Grade"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Spring,
    Summer,
    Fall,
}

impl Term {
    pub fn as_str(self) -> &'static str {
        match self {
            Term::Spring => "Spring",
            Term::Summer => "Summer",
            Term::Fall => "Fall",
        }
    }
}

impl FromStr for Term {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spring" => Ok(Term::Spring),
            "summer" => Ok(Term::Summer),
            "fall" => Ok(Term::Fall),
            other => Err(format!("unknown term {other:?}")),
        }
    }
}

/// Ordered by year, then Spring < Summer < Fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Semester {
    pub year: i32,
    pub term: Term,
}

impl Semester {
    pub const fn new(year: i32, term: Term) -> Self {
        Semester { year, term }
    }

    pub fn next(self) -> Semester {
        match self.term {
            Term::Spring => Semester::new(self.year, Term::Summer),
            Term::Summer => Semester::new(self.year, Term::Fall),
            Term::Fall => Semester::new(self.year + 1, Term::Spring),
        }
    }

    /// Next Spring or Fall semester, skipping Summer.
    pub fn next_regular(self) -> Semester {
        let next = self.next();
        if next.term == Term::Summer {
            next.next()
        } else {
            next
        }
    }
}

impl fmt::Display for Semester {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.term.as_str(), self.year)
    }
}

/// Accepts `"Spring 2014"` (the CSV form) and `"2014:Spring"` (the CLI form).
impl FromStr for Semester {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (year, term) = if let Some((year, term)) = s.split_once(':') {
            (year, term)
        } else if let Some((term, year)) = s.split_once(char::is_whitespace) {
            (year, term)
        } else {
            return Err(format!("malformed semester {s:?}"));
        };
        let year = year
            .trim()
            .parse::<i32>()
            .map_err(|_| format!("malformed semester year in {s:?}"))?;
        Ok(Semester::new(year, term.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Lower,
    Upper,
    Graduate,
}

impl Level {
    pub fn of(number: u32) -> Level {
        match number {
            0..=99 => Level::Lower,
            100..=199 => Level::Upper,
            _ => Level::Graduate,
        }
    }
}

/// A catalog course. `(department, number)` is its identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Course {
    pub id: String,
    pub department: String,
    pub number: u32,
    pub subject: String,
}

impl Course {
    pub fn new(department: impl Into<String>, number: u32) -> Self {
        let department = department.into();
        Course {
            id: format!("{department} {number}"),
            subject: department.clone(),
            department,
            number,
        }
    }

    pub fn level(&self) -> Level {
        Level::of(self.number)
    }

    pub fn key(&self) -> CourseKey {
        CourseKey {
            department: self.department.clone(),
            number: self.number,
        }
    }
}

impl fmt::Display for Course {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CourseKey {
    pub department: String,
    pub number: u32,
}

impl CourseKey {
    pub fn new(department: impl Into<String>, number: u32) -> Self {
        CourseKey {
            department: department.into(),
            number,
        }
    }
}

impl fmt::Display for CourseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.department, self.number)
    }
}

/// `"Computer Science 189"`: the last whitespace-separated token is the number.
impl FromStr for CourseKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (dept, num) = s
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| format!("malformed course {s:?}"))?;
        let number = num
            .parse()
            .map_err(|_| format!("malformed course number in {s:?}"))?;
        Ok(CourseKey::new(dept.trim(), number))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LetterGrade {
    APlus,
    A,
    AMinus,
    BPlus,
    B,
    BMinus,
    CPlus,
    C,
    CMinus,
    DPlus,
    D,
    DMinus,
    F,
}

impl LetterGrade {
    /// Every letter, best first.
    pub const ALL: [LetterGrade; 13] = [
        LetterGrade::APlus,
        LetterGrade::A,
        LetterGrade::AMinus,
        LetterGrade::BPlus,
        LetterGrade::B,
        LetterGrade::BMinus,
        LetterGrade::CPlus,
        LetterGrade::C,
        LetterGrade::CMinus,
        LetterGrade::DPlus,
        LetterGrade::D,
        LetterGrade::DMinus,
        LetterGrade::F,
    ];

    /// Grade points in tenths, so comparisons stay exact. A+ is capped at 4.0.
    pub fn points_tenths(self) -> u8 {
        match self {
            LetterGrade::APlus | LetterGrade::A => 40,
            LetterGrade::AMinus => 37,
            LetterGrade::BPlus => 33,
            LetterGrade::B => 30,
            LetterGrade::BMinus => 27,
            LetterGrade::CPlus => 23,
            LetterGrade::C => 20,
            LetterGrade::CMinus => 17,
            LetterGrade::DPlus => 13,
            LetterGrade::D => 10,
            LetterGrade::DMinus => 7,
            LetterGrade::F => 0,
        }
    }

    pub fn points(self) -> f64 {
        f64::from(self.points_tenths()) / 10.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LetterGrade::APlus => "A+",
            LetterGrade::A => "A",
            LetterGrade::AMinus => "A-",
            LetterGrade::BPlus => "B+",
            LetterGrade::B => "B",
            LetterGrade::BMinus => "B-",
            LetterGrade::CPlus => "C+",
            LetterGrade::C => "C",
            LetterGrade::CMinus => "C-",
            LetterGrade::DPlus => "D+",
            LetterGrade::D => "D",
            LetterGrade::DMinus => "D-",
            LetterGrade::F => "F",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    Letter(LetterGrade),
    PassNoPass { passed: bool },
}

impl Grade {
    pub fn letter_points(&self) -> Option<f64> {
        match self {
            Grade::Letter(l) => Some(l.points()),
            Grade::PassNoPass { .. } => None,
        }
    }

    pub fn passed(&self) -> Option<bool> {
        match self {
            Grade::Letter(_) => None,
            Grade::PassNoPass { passed } => Some(*passed),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Grade::Letter(l) => l.as_str(),
            Grade::PassNoPass { passed: true } => "P",
            Grade::PassNoPass { passed: false } => "NP",
        }
    }
}

impl FromStr for Grade {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let token = s.trim();
        if let Some(l) = LetterGrade::ALL.iter().find(|l| l.as_str() == token) {
            return Ok(Grade::Letter(*l));
        }
        match token.to_ascii_uppercase().as_str() {
            "P" | "PASS" => Ok(Grade::PassNoPass { passed: true }),
            "NP" | "NOPASS" | "NO PASS" | "NO-PASS" => Ok(Grade::PassNoPass { passed: false }),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnrollmentRecord {
    pub student_id: String,
    pub semester: Semester,
    pub majors: BTreeSet<String>,
    pub course: Course,
    pub grade: Grade,
}

/// One student's records for one semester.
#[derive(Debug, Clone, PartialEq)]
pub struct SemesterRecords {
    pub semester: Semester,
    pub majors: BTreeSet<String>,
    pub records: Vec<EnrollmentRecord>,
}

impl SemesterRecords {
    pub fn courses(&self) -> impl Iterator<Item = &Course> {
        self.records.iter().map(|r| &r.course)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentSequence {
    pub student_id: String,
    /// Strictly increasing by semester.
    pub semesters: Vec<SemesterRecords>,
}

impl StudentSequence {
    pub fn position_of(&self, semester: Semester) -> Option<usize> {
        self.semesters.iter().position(|s| s.semester == semester)
    }
}

/// Students ordered by id, each with a semester-ordered history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnrollmentDataset {
    pub students: Vec<StudentSequence>,
}

impl EnrollmentDataset {
    /// Groups arbitrary records into ordered student sequences. Within a
    /// semester records are ordered by course key.
    pub fn from_records(records: impl IntoIterator<Item = EnrollmentRecord>) -> Self {
        let mut grouped: BTreeMap<String, BTreeMap<Semester, Vec<EnrollmentRecord>>> = BTreeMap::new();
        for r in records {
            grouped
                .entry(r.student_id.clone())
                .or_default()
                .entry(r.semester)
                .or_default()
                .push(r);
        }
        let students = grouped
            .into_iter()
            .map(|(student_id, by_sem)| StudentSequence {
                student_id,
                semesters: by_sem
                    .into_iter()
                    .map(|(semester, mut records)| {
                        records.sort_by(|a, b| {
                            (&a.course.department, a.course.number)
                                .cmp(&(&b.course.department, b.course.number))
                        });
                        let majors = records
                            .iter()
                            .flat_map(|r| r.majors.iter().cloned())
                            .collect();
                        SemesterRecords {
                            semester,
                            majors,
                            records,
                        }
                    })
                    .collect(),
            })
            .collect();
        EnrollmentDataset { students }
    }

    pub fn records(&self) -> impl Iterator<Item = &EnrollmentRecord> {
        self.students
            .iter()
            .flat_map(|s| s.semesters.iter())
            .flat_map(|s| s.records.iter())
    }

    pub fn num_records(&self) -> usize {
        self.records().count()
    }

    pub fn student(&self, id: &str) -> Option<&StudentSequence> {
        self.students
            .binary_search_by(|s| s.student_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.students[i])
    }

    pub fn semesters(&self) -> BTreeSet<Semester> {
        self.records().map(|r| r.semester).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in self.records() {
            let majors = r.majors.iter().cloned().collect::<Vec<_>>().join(";");
            w.write_record([
                r.semester.to_string(),
                r.student_id.clone(),
                majors,
                r.course.department.clone(),
                r.course.number.to_string(),
                r.grade.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::IoPlain(e),
        other => Error::MalformedRow {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn parse_enrollment_csv<R: Read>(source: R) -> Result<EnrollmentDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    let mut columns = [usize::MAX; 6];
    for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MalformedRow {
                line: 1,
                message: format!("missing column {name:?}"),
            })?;
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(columns[i]).unwrap_or("");
        let malformed = |message: String| Error::MalformedRow { line, message };

        let semester: Semester = field(0).parse().map_err(malformed)?;
        let student_id = field(1).to_string();
        if student_id.is_empty() {
            return Err(malformed("empty student id".into()));
        }
        let majors = field(2)
            .split(';')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(String::from)
            .collect();
        let dept = field(3);
        if dept.is_empty() {
            return Err(malformed("empty department".into()));
        }
        let number = field(4)
            .parse::<u32>()
            .map_err(|_| malformed(format!("malformed course number {:?}", field(4))))?;
        let grade = field(5).parse::<Grade>().map_err(|_| Error::UnknownGrade {
            line,
            token: field(5).to_string(),
        })?;

        let course = Course::new(dept, number);
        if !seen.insert((student_id.clone(), semester, course.key())) {
            return Err(Error::DuplicateEnrollment {
                line,
                student: student_id,
                semester: semester.to_string(),
                course: course.id,
            });
        }
        records.push(EnrollmentRecord {
            student_id,
            semester,
            majors,
            course,
            grade,
        });
    }
    Ok(EnrollmentDataset::from_records(records))
}

/// How letter grades are laid out in the per-course letter group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradeScheme {
    /// Two categories: above-or-equal the threshold, below it.
    Binary,
    /// One category per letter token, best first.
    Letters,
}

impl GradeScheme {
    pub fn categories(self) -> Vec<String> {
        match self {
            GradeScheme::Binary => vec!["above".into(), "below".into()],
            GradeScheme::Letters => LetterGrade::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        }
    }
}

/// Dense, deterministic index maps over courses (by department, then number)
/// and majors (lexicographic).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    courses: Vec<Course>,
    course_index: HashMap<CourseKey, usize>,
    majors: Vec<String>,
    major_index: HashMap<String, usize>,
    scheme: GradeScheme,
    letter_categories: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary directly from course and major lists. Courses are
    /// re-sorted and de-duplicated.
    pub fn new(
        courses: impl IntoIterator<Item = Course>,
        majors: impl IntoIterator<Item = String>,
        scheme: GradeScheme,
    ) -> Result<Self> {
        let mut by_key: BTreeMap<CourseKey, Course> = BTreeMap::new();
        for c in courses {
            by_key.entry(c.key()).or_insert(c);
        }
        let majors: BTreeSet<String> = majors.into_iter().collect();
        if by_key.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        // Students with no declared major still need a non-empty major space.
        let majors: Vec<String> = if majors.is_empty() {
            vec![String::new()]
        } else {
            majors.into_iter().collect()
        };
        let courses: Vec<Course> = by_key.into_values().collect();
        Ok(Vocabulary {
            course_index: courses.iter().enumerate().map(|(i, c)| (c.key(), i)).collect(),
            major_index: majors.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect(),
            courses,
            majors,
            letter_categories: scheme.categories(),
            scheme,
        })
    }

    /// Number of courses.
    pub fn n(&self) -> usize {
        self.courses.len()
    }

    /// Number of letter-grade categories.
    pub fn m(&self) -> usize {
        self.letter_categories.len()
    }

    /// Number of majors.
    pub fn k(&self) -> usize {
        self.majors.len()
    }

    pub fn scheme(&self) -> GradeScheme {
        self.scheme
    }

    pub fn courses(&self) -> &[Course] {
        &self.courses
    }

    pub fn majors(&self) -> &[String] {
        &self.majors
    }

    pub fn letter_categories(&self) -> &[String] {
        &self.letter_categories
    }

    pub fn course(&self, index: usize) -> &Course {
        &self.courses[index]
    }

    pub fn course_index(&self, course: &Course) -> Option<usize> {
        self.index_of_key(&course.key())
    }

    pub fn index_of_key(&self, key: &CourseKey) -> Option<usize> {
        self.course_index.get(key).copied()
    }

    pub fn major_index(&self, major: &str) -> Option<usize> {
        self.major_index.get(major).copied()
    }

    /// Restricts a dataset to vocabulary courses, dropping semesters left empty.
    pub fn restrict(&self, dataset: &EnrollmentDataset) -> EnrollmentDataset {
        EnrollmentDataset::from_records(
            dataset
                .records()
                .filter(|r| self.course_index(&r.course).is_some())
                .cloned(),
        )
    }
}

/// Keeps courses with at least `min_enrollments` records and returns the
/// vocabulary together with the dataset restricted to it.
pub fn build_vocabulary(
    dataset: &EnrollmentDataset,
    min_enrollments: usize,
    scheme: GradeScheme,
) -> Result<(Vocabulary, EnrollmentDataset)> {
    if min_enrollments == 0 {
        return Err(Error::InvalidConfig("min_enrollments must be at least 1".into()));
    }
    let mut counts: HashMap<CourseKey, (usize, &Course)> = HashMap::new();
    for r in dataset.records() {
        counts.entry(r.course.key()).or_insert((0, &r.course)).0 += 1;
    }
    let kept = counts
        .into_values()
        .filter(|(count, _)| *count >= min_enrollments)
        .map(|(_, c)| c.clone());
    let majors = dataset.records().flat_map(|r| r.majors.iter().cloned());
    let vocab = Vocabulary::new(kept, majors, scheme)?;
    let filtered = vocab.restrict(dataset);
    Ok((vocab, filtered))
}

/// A student history prepared for training or evaluation. Semesters at
/// positions `first_label..` are prediction targets; earlier ones are inputs only.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSequence {
    pub student_id: String,
    pub semesters: Vec<SemesterRecords>,
    pub first_label: usize,
}

impl SplitSequence {
    pub fn label_semesters(&self) -> &[SemesterRecords] {
        &self.semesters[self.first_label..]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataSplits {
    pub train: Vec<SplitSequence>,
    pub val: Vec<SplitSequence>,
    pub test: Vec<SplitSequence>,
}

/// Training takes every student's history through `train_end`; validation and
/// test sequences end at their label semester with the full prior history as
/// input.
pub fn temporal_split(
    dataset: &EnrollmentDataset,
    train_end: Semester,
    val_semester: Semester,
    test_semester: Semester,
) -> Result<DataSplits> {
    if !(train_end < val_semester && val_semester < test_semester) {
        return Err(Error::InvalidSplit(format!(
            "expected {train_end} < {val_semester} < {test_semester}"
        )));
    }
    let present = dataset.semesters();
    for s in [val_semester, test_semester] {
        if !present.contains(&s) {
            return Err(Error::MissingSemester(s.to_string()));
        }
    }

    let mut splits = DataSplits::default();
    for student in &dataset.students {
        let upto = student
            .semesters
            .iter()
            .take_while(|s| s.semester <= train_end)
            .count();
        if upto >= 2 {
            splits.train.push(SplitSequence {
                student_id: student.student_id.clone(),
                semesters: student.semesters[..upto].to_vec(),
                first_label: 1,
            });
        }
        for (semester, out) in [(val_semester, &mut splits.val), (test_semester, &mut splits.test)] {
            if let Some(pos) = student.position_of(semester) {
                if pos >= 1 {
                    out.push(SplitSequence {
                        student_id: student.student_id.clone(),
                        semesters: student.semesters[..=pos].to_vec(),
                        first_label: pos,
                    });
                }
            }
        }
    }
    Ok(splits)
}
