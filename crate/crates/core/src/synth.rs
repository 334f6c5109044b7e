//! Synthetic enrollment data with a planted prerequisite graph.
//!
//! Each student has one major tied to a department, starts in one of the first
//! few semesters and stays until the last one. Every semester they draw a
//! handful of untaken courses, favouring their own department and courses
//! whose planted prerequisites they already passed. A course is passed with
//! probability `p_prepared` when all its planted prerequisites were passed
//! earlier and `p_unprepared` otherwise, shifted on the logit scale by a
//! per-student ability offset and, for courses without planted
//! prerequisites, by a per-course difficulty offset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact::write_atomic;
use crate::domain::{
    Course, CourseKey, EnrollmentDataset, EnrollmentRecord, Grade, LetterGrade, Level, Semester, Term, Vocabulary,
};
use crate::error::{Error, Result};
use crate::eval::prereq_metrics;
use crate::inference::{filter_candidates, write_prereq_csv, CandidateFilterContext, FilterMode, PrereqPair, RankedRecommendation};
use crate::encode::Threshold;
use crate::linalg::sigmoid;

pub const ENROLLMENTS_FILE: &str = "enrollments.csv";
pub const PREREQS_FILE: &str = "prereq_pairs.csv";

const DEPARTMENT_NAMES: [&str; 8] = [
    "Computer Science",
    "Mathematics",
    "Statistics",
    "Economics",
    "Physics",
    "Chemistry",
    "Biology",
    "History",
];

const PASS_LETTERS: [LetterGrade; 2] = [LetterGrade::APlus, LetterGrade::A];
const FAIL_LETTERS: [LetterGrade; 5] = [
    LetterGrade::BMinus,
    LetterGrade::CPlus,
    LetterGrade::C,
    LetterGrade::D,
    LetterGrade::F,
];

#[derive(Debug, Clone, PartialEq)]
pub enum DagSpec {
    /// Draw this many edges at random.
    Random { edges: usize },
    Explicit(Vec<PrereqPair>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_courses: usize,
    pub n_departments: usize,
    pub n_majors: usize,
    pub n_students: usize,
    pub n_semesters: usize,
    pub seed: u64,
    pub dag: DagSpec,
    pub p_prepared: f64,
    pub p_unprepared: f64,
    pub pnp_fraction: f64,
    pub courses_per_semester: usize,
    pub first_semester: Semester,
    /// Latest semester index at which a student may enter.
    pub max_start: usize,
    /// Half-width of the uniform per-student logit offset.
    pub ability_spread: f64,
    /// Half-width of the uniform logit offset subtracted from every success
    /// draw in a course without planted prerequisites.
    pub difficulty_spread: f64,
    /// Probability that a random edge crosses departments.
    pub cross_department: f64,
    /// Selection weight multiplier for own-department courses.
    pub own_department_weight: f64,
    /// Selection weight multiplier for courses whose prerequisites are met.
    pub ready_weight: f64,
    /// Selection weight multiplier for courses with unmet prerequisites.
    pub unready_weight: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_courses: 60,
            n_departments: 3,
            n_majors: 3,
            n_students: 2000,
            n_semesters: 8,
            seed: 0,
            dag: DagSpec::Random { edges: 20 },
            p_prepared: 0.85,
            p_unprepared: 0.35,
            pnp_fraction: 0.05,
            courses_per_semester: 4,
            first_semester: Semester::new(2013, Term::Fall),
            max_start: 3,
            ability_spread: 0.5,
            difficulty_spread: 3.0,
            cross_department: 0.35,
            own_department_weight: 3.0,
            ready_weight: 2.0,
            unready_weight: 0.25,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleSynth(msg));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_courses == 0 || self.n_students == 0 || self.n_majors == 0 {
            return bad("n_courses, n_students and n_majors must be positive".into());
        }
        if self.n_departments == 0 || self.n_departments > self.n_courses {
            return bad(format!("cannot spread {} courses over {} departments", self.n_courses, self.n_departments));
        }
        if self.n_courses.div_ceil(self.n_departments) > 98 {
            return bad("at most 98 courses per department".into());
        }
        if self.n_semesters < 2 {
            return bad("need at least two semesters".into());
        }
        if self.courses_per_semester == 0 || self.courses_per_semester > self.n_courses {
            return bad(format!(
                "courses_per_semester {} outside 1..={}",
                self.courses_per_semester, self.n_courses
            ));
        }
        if !prob(self.p_prepared) || !prob(self.p_unprepared) || !prob(self.pnp_fraction) || !prob(self.cross_department) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.p_prepared < self.p_unprepared {
            return bad("p_prepared must be at least p_unprepared".into());
        }
        if !(self.ability_spread >= 0.0 && self.difficulty_spread >= 0.0) {
            return bad("ability_spread and difficulty_spread must be non-negative".into());
        }
        for w in [self.own_department_weight, self.ready_weight, self.unready_weight] {
            if !(w > 0.0 && w.is_finite()) {
                return bad("selection weights must be positive".into());
            }
        }
        Ok(())
    }

    /// The regular (Fall/Spring) semesters covered by the data.
    pub fn semesters(&self) -> Vec<Semester> {
        std::iter::successors(Some(self.first_semester), |s| Some(s.next_regular()))
            .take(self.n_semesters)
            .collect()
    }

    /// Training end, validation and test semesters, plus the goal-evaluation
    /// target and recommendation semesters.
    pub fn default_plan(&self) -> Result<SynthPlan> {
        let s = self.semesters();
        let n = s.len();
        if n < 5 {
            return Err(Error::InfeasibleSynth("the default plan needs at least five semesters".into()));
        }
        Ok(SynthPlan {
            train_end: s[n - 4],
            val: s[n - 3],
            test: s[n - 1],
            goal_target: s[n - 2],
            goal_rec: s[n - 3],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthPlan {
    pub train_end: Semester,
    pub val: Semester,
    pub test: Semester,
    pub goal_target: Semester,
    pub goal_rec: Semester,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: EnrollmentDataset,
    /// Planted prerequisite graph; never part of the enrollment data.
    pub dag: Vec<PrereqPair>,
    pub catalog: Vec<Course>,
    pub majors: Vec<String>,
}

impl SynthDataset {
    /// Distinct targets of the planted graph.
    pub fn targets(&self) -> Vec<CourseKey> {
        self.dag.iter().map(|p| p.target.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Writes the enrollment CSV and the planted-pairs sidecar into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join(ENROLLMENTS_FILE), |w| self.dataset.write_csv(w))?;
        write_atomic(&dir.join(PREREQS_FILE), |w| write_prereq_csv(w, &self.dag))
    }
}

fn catalog(config: &SynthConfig) -> Vec<Course> {
    let d = config.n_departments;
    let mut courses = Vec::with_capacity(config.n_courses);
    for dept in 0..d {
        let name = DEPARTMENT_NAMES
            .get(dept)
            .map_or_else(|| format!("Department {}", dept + 1), |s| s.to_string());
        let count = config.n_courses / d + usize::from(dept < config.n_courses % d);
        let grad = ((count as f64 * 0.15).round() as usize).min(count - 1);
        let lower = ((count as f64 * 0.4).round() as usize).clamp(1, count - grad);
        let upper = count - lower - grad;
        for j in 0..lower {
            courses.push(Course::new(name.clone(), 1 + (j * 98 / lower) as u32));
        }
        for j in 0..upper {
            courses.push(Course::new(name.clone(), 100 + (j * 99 / upper.max(1)) as u32));
        }
        for j in 0..grad {
            courses.push(Course::new(name.clone(), 200 + 10 * j as u32));
        }
    }
    courses
}

fn major_names(config: &SynthConfig, catalog: &[Course]) -> Vec<String> {
    let depts: Vec<String> = catalog
        .iter()
        .map(|c| c.department.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    (0..config.n_majors)
        .map(|j| {
            let dept = &depts[j % depts.len()];
            if j < depts.len() {
                dept.clone()
            } else {
                format!("{dept} {}", j / depts.len() + 1)
            }
        })
        .collect()
}

/// Orders courses so that every planted edge points forward.
fn topo_key(c: &Course) -> (u32, &str) {
    (c.number, c.department.as_str())
}

fn random_dag(catalog: &[Course], edges: usize, cross: f64, rng: &mut ChaCha8Rng) -> Result<Vec<PrereqPair>> {
    let targets: Vec<usize> = (0..catalog.len())
        .filter(|&i| catalog[i].level() != Level::Lower)
        .collect();
    let feasible: usize = targets
        .iter()
        .map(|&t| catalog.iter().filter(|c| topo_key(c) < topo_key(&catalog[t])).count())
        .sum();
    if edges > feasible {
        return Err(Error::InfeasibleSynth(format!("cannot plant {edges} edges; at most {feasible} exist")));
    }
    let mut dag = BTreeSet::new();
    let mut attempts = 0usize;
    while dag.len() < edges {
        attempts += 1;
        if attempts > 1000 * (edges + 1) {
            return Err(Error::InfeasibleSynth("could not draw enough distinct edges".into()));
        }
        let t = &catalog[*targets.choose(rng).expect("targets checked non-empty")];
        let same_dept = !rng.gen_bool(cross);
        let pool: Vec<&Course> = catalog
            .iter()
            .filter(|c| topo_key(c) < topo_key(t) && (c.department == t.department) == same_dept)
            .collect();
        if let Some(p) = pool.choose(rng) {
            dag.insert(PrereqPair::new(p.key(), t.key()));
        }
    }
    Ok(dag.into_iter().collect())
}

fn check_dag(catalog: &[Course], dag: &[PrereqPair]) -> Result<()> {
    let by_key: BTreeMap<CourseKey, &Course> = catalog.iter().map(|c| (c.key(), c)).collect();
    let mut adjacency: BTreeMap<&CourseKey, Vec<&CourseKey>> = BTreeMap::new();
    for p in dag {
        let (Some(pre), Some(tgt)) = (by_key.get(&p.prerequisite), by_key.get(&p.target)) else {
            return Err(Error::InfeasibleSynth(format!("edge {} -> {} names an unknown course", p.prerequisite, p.target)));
        };
        if pre.level() > tgt.level() {
            return Err(Error::InfeasibleSynth(format!("edge {} -> {} goes down a level", p.prerequisite, p.target)));
        }
        adjacency.entry(&p.prerequisite).or_default().push(&p.target);
    }
    // Depth-first search for a back edge.
    fn visit<'a>(
        node: &'a CourseKey,
        adjacency: &BTreeMap<&'a CourseKey, Vec<&'a CourseKey>>,
        state: &mut BTreeMap<&'a CourseKey, bool>,
    ) -> bool {
        match state.get(node) {
            Some(true) => return true,
            Some(false) => return false,
            None => {}
        }
        state.insert(node, false);
        for next in adjacency.get(node).into_iter().flatten() {
            if !visit(next, adjacency, state) {
                return false;
            }
        }
        state.insert(node, true);
        true
    }
    let mut state = BTreeMap::new();
    for node in adjacency.keys() {
        if !visit(node, &adjacency, &mut state) {
            return Err(Error::InfeasibleSynth("planted prerequisites contain a cycle".into()));
        }
    }
    Ok(())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn uniform_offset(spread: f64, rng: &mut ChaCha8Rng) -> f64 {
    if spread > 0.0 {
        rng.gen_range(-spread..=spread)
    } else {
        0.0
    }
}

/// Deterministic synthetic dataset for `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let catalog = catalog(config);
    let majors = major_names(config, &catalog);
    let dag = match &config.dag {
        DagSpec::Random { edges } => random_dag(&catalog, *edges, config.cross_department, &mut rng)?,
        DagSpec::Explicit(pairs) => pairs.clone(),
    };
    check_dag(&catalog, &dag)?;

    let index: BTreeMap<CourseKey, usize> = catalog.iter().enumerate().map(|(i, c)| (c.key(), i)).collect();
    let mut prereqs: Vec<Vec<usize>> = vec![Vec::new(); catalog.len()];
    for p in &dag {
        prereqs[index[&p.target]].push(index[&p.prerequisite]);
    }
    let difficulty: Vec<f64> = prereqs
        .iter()
        .map(|p| if p.is_empty() { uniform_offset(config.difficulty_spread, &mut rng) } else { 0.0 })
        .collect();
    let depts: Vec<String> = catalog
        .iter()
        .map(|c| c.department.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let semesters = config.semesters();
    let max_start = config.max_start.min(semesters.len() - 2);
    let width = (config.n_students.max(1) as f64).log10() as usize + 1;
    let (lp, lu) = (logit(config.p_prepared), logit(config.p_unprepared));

    let mut records = Vec::new();
    for s in 0..config.n_students {
        let student_id = format!("s{:0width$}", s + 1);
        let major_idx = rng.gen_range(0..majors.len());
        let major = majors[major_idx].clone();
        let home = &depts[major_idx % depts.len()];
        let ability = uniform_offset(config.ability_spread, &mut rng);
        let start = rng.gen_range(0..=max_start);

        let mut taken = vec![false; catalog.len()];
        let mut passed = vec![false; catalog.len()];
        for &semester in &semesters[start..] {
            let ready: Vec<bool> = (0..catalog.len()).map(|c| prereqs[c].iter().all(|&p| passed[p])).collect();
            let pool: Vec<(usize, f64)> = (0..catalog.len())
                .filter(|&c| !taken[c])
                .map(|c| {
                    let mut w = 1.0;
                    if catalog[c].department == *home {
                        w *= config.own_department_weight;
                    }
                    if !prereqs[c].is_empty() {
                        w *= if ready[c] { config.ready_weight } else { config.unready_weight };
                    }
                    (c, w)
                })
                .collect();
            if pool.is_empty() {
                break;
            }
            let load = (config.courses_per_semester as i64 + rng.gen_range(-1..=1)).max(1) as usize;
            let chosen: Vec<usize> = pool
                .choose_multiple_weighted(&mut rng, load.min(pool.len()), |(_, w)| *w)
                .map_err(|e| Error::InfeasibleSynth(e.to_string()))?
                .map(|(c, _)| *c)
                .collect();

            let mut outcomes = Vec::with_capacity(chosen.len());
            for c in chosen {
                let base = if ready[c] { lp } else { lu };
                let success = rng.gen_bool(sigmoid(base + ability - difficulty[c]).clamp(0.0, 1.0));
                let grade = if rng.gen_bool(config.pnp_fraction) {
                    Grade::PassNoPass { passed: success }
                } else if success {
                    Grade::Letter(*PASS_LETTERS.choose(&mut rng).expect("non-empty"))
                } else {
                    Grade::Letter(*FAIL_LETTERS.choose(&mut rng).expect("non-empty"))
                };
                outcomes.push((c, success));
                records.push(EnrollmentRecord {
                    student_id: student_id.clone(),
                    semester,
                    majors: BTreeSet::from([major.clone()]),
                    course: catalog[c].clone(),
                    grade,
                });
            }
            for (c, success) in outcomes {
                taken[c] = true;
                passed[c] = success;
            }
        }
    }
    Ok(SynthDataset {
        dataset: EnrollmentDataset::from_records(records),
        dag,
        catalog,
        majors,
    })
}

/// Fraction of planted edges whose prerequisite appears in its target's list.
pub fn planted_recall(
    recommendations: &BTreeMap<CourseKey, Vec<RankedRecommendation>>,
    dag: &[PrereqPair],
) -> Result<f64> {
    if dag.is_empty() {
        return Err(Error::InvalidRequest("planted graph is empty".into()));
    }
    Ok(prereq_metrics(recommendations, dag).pair_accuracy / 100.0)
}

/// Monte-Carlo estimate of [`planted_recall`] when each target's top-`top_k`
/// is a uniform random draw from its filtered candidate set.
pub fn random_baseline_recall(
    vocab: &Vocabulary,
    dag: &[PrereqPair],
    registrar: &[PrereqPair],
    top_k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if dag.is_empty() || trials == 0 {
        return Err(Error::InvalidRequest("need a non-empty graph and at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools = BTreeMap::new();
    for p in dag {
        if !pools.contains_key(&p.target) {
            let ctx = CandidateFilterContext::for_prereqs(registrar.to_vec(), p.target.clone(), Threshold::B);
            let cands = filter_candidates(vocab, &ctx, FilterMode::PrereqInference, None)?;
            pools.insert(p.target.clone(), cands);
        }
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        let drawn: BTreeMap<&CourseKey, BTreeSet<CourseKey>> = pools
            .iter()
            .map(|(t, cands)| {
                let pick = cands.choose_multiple(&mut rng, top_k).map(|&i| vocab.course(i).key()).collect();
                (t, pick)
            })
            .collect();
        hits += dag.iter().filter(|p| drawn[&p.target].contains(&p.prerequisite)).count();
    }
    Ok(hits as f64 / (trials * dag.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_enrollment_csv;
    use crate::encode::{binarize_grade, BinaryGrade};

    fn small() -> SynthConfig {
        SynthConfig {
            n_students: 200,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_csv_bytes() {
        let write = || {
            let mut buf = Vec::new();
            generate(&small()).unwrap().dataset.write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(write(), write());
    }

    #[test]
    fn catalog_shape() {
        let c = catalog(&SynthConfig::default());
        assert_eq!(c.len(), 60);
        let keys: BTreeSet<_> = c.iter().map(Course::key).collect();
        assert_eq!(keys.len(), 60);
        let count = |l| c.iter().filter(|x| x.level() == l).count();
        assert_eq!((count(Level::Lower), count(Level::Upper), count(Level::Graduate)), (24, 27, 9));
    }

    #[test]
    fn degenerate_process_is_all_above() {
        let cfg = SynthConfig {
            dag: DagSpec::Explicit(Vec::new()),
            p_prepared: 1.0,
            p_unprepared: 1.0,
            ..small()
        };
        let data = generate(&cfg).unwrap();
        assert!(data.dataset.num_records() > 0);
        for r in data.dataset.records() {
            assert_ne!(binarize_grade(r.grade, Threshold::A), BinaryGrade::Below);
            assert_ne!(r.grade, Grade::PassNoPass { passed: false });
        }
    }

    #[test]
    fn difficulty_spares_planted_targets() {
        let cfg = SynthConfig {
            p_prepared: 0.5,
            p_unprepared: 0.5,
            ability_spread: 0.0,
            difficulty_spread: 4.0,
            ..small()
        };
        let data = generate(&cfg).unwrap();
        let targets: BTreeSet<_> = data.targets().into_iter().collect();
        let mut rates: BTreeMap<CourseKey, (usize, usize)> = BTreeMap::new();
        for r in data.dataset.records() {
            let e = rates.entry(r.course.key()).or_default();
            e.0 += usize::from(r.grade.passed().unwrap_or_else(|| binarize_grade(r.grade, Threshold::B) == BinaryGrade::AboveOrEqual));
            e.1 += 1;
        }
        let spread = |planted: bool| {
            let (lo, hi) = rates
                .iter()
                .filter(|(k, (_, n))| targets.contains(*k) == planted && *n >= 100)
                .map(|(_, (a, n))| *a as f64 / *n as f64)
                .fold((1.0f64, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
            hi - lo
        };
        assert!(spread(true) < 0.3, "planted targets {}", spread(true));
        assert!(spread(false) > 0.6, "other courses {}", spread(false));
    }

    #[test]
    fn dag_is_valid_and_hidden() {
        let data = generate(&small()).unwrap();
        assert_eq!(data.dag.len(), 20);
        check_dag(&data.catalog, &data.dag).unwrap();
        for p in &data.dag {
            assert!(topo_key(&Course::new(p.prerequisite.department.clone(), p.prerequisite.number))
                < topo_key(&Course::new(p.target.department.clone(), p.target.number)));
        }
        let mut buf = Vec::new();
        data.dataset.write_csv(&mut buf).unwrap();
        assert_eq!(parse_enrollment_csv(buf.as_slice()).unwrap(), data.dataset);
    }

    #[test]
    fn no_repeats_and_increasing_semesters() {
        let data = generate(&small()).unwrap();
        let last = *SynthConfig::default().semesters().last().unwrap();
        for s in &data.dataset.students {
            let courses: Vec<_> = s.semesters.iter().flat_map(|x| x.courses().map(Course::key)).collect();
            let distinct: BTreeSet<_> = courses.iter().collect();
            assert_eq!(courses.len(), distinct.len());
            assert!(s.semesters.windows(2).all(|w| w[0].semester < w[1].semester));
            assert!(s.semesters.len() >= 2);
            assert_eq!(s.semesters.last().unwrap().semester, last);
        }
    }

    #[test]
    fn rejects_infeasible() {
        let cfg = SynthConfig {
            courses_per_semester: 61,
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::InfeasibleSynth(_))));
        let cfg = SynthConfig {
            p_prepared: 0.2,
            p_unprepared: 0.5,
            ..SynthConfig::default()
        };
        assert!(generate(&cfg).is_err());
        let k = |n| CourseKey::new("Computer Science", n);
        let cyclic = SynthConfig {
            dag: DagSpec::Explicit(vec![PrereqPair::new(k(100), k(112)), PrereqPair::new(k(112), k(100))]),
            ..small()
        };
        assert!(generate(&cyclic).is_err());
    }

    #[test]
    fn recall_extremes() {
        let k = |n| CourseKey::new("D", n);
        let dag = vec![PrereqPair::new(k(1), k(100)), PrereqPair::new(k(2), k(100))];
        let rec = |n| RankedRecommendation {
            course: Course::new("D", n),
            index: 0,
            probability: 0.5,
        };
        let exact = BTreeMap::from([(k(100), vec![rec(1), rec(2)])]);
        assert_eq!(planted_recall(&exact, &dag).unwrap(), 1.0);
        let disjoint = BTreeMap::from([(k(100), vec![rec(3)])]);
        assert_eq!(planted_recall(&disjoint, &dag).unwrap(), 0.0);
        assert!(planted_recall(&exact, &[]).is_err());
    }

    #[test]
    fn random_baseline_matches_closed_form() {
        let courses: Vec<_> = (1..=40).map(|n| Course::new("D", n)).chain([Course::new("D", 150)]).collect();
        let vocab = Vocabulary::new(courses, ["D".to_string()], crate::domain::GradeScheme::Binary).unwrap();
        let dag = vec![PrereqPair::new(CourseKey::new("D", 1), CourseKey::new("D", 150))];
        let r = random_baseline_recall(&vocab, &dag, &dag, 10, 20_000, 3).unwrap();
        assert!((r - 10.0 / 41.0).abs() < 0.01, "{r}");
    }
}
