//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE` with flat `key = value` settings;
//! flags given on the command line take precedence.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::artifact::{load_model, save_model};
use crate::config::{parse_split, Config};
use crate::domain::{parse_enrollment_csv, CourseKey, EnrollmentDataset, GradeScheme, Semester};
use crate::encode::{ModelKind, Threshold};
use crate::error::{Error, Result};
use crate::eval::{
    format_records, goal_match_rates, grade_prediction_metrics, infer_all_targets, majority_baseline, prereq_metrics,
    GoalEvalSetup,
};
use crate::fixtures::{random_model, random_sequence};
use crate::inference::{availability, infer_prereqs, parse_prereq_csv, recommend, CandidateFilterContext, PrereqPair};
use crate::loss::finite_diff_check;
use crate::net::{Model, ModelDims};
use crate::pipeline::{prepare, prepare_with_vocab, DEFAULT_MIN_ENROLLMENTS};
use crate::synth::{generate, ENROLLMENTS_FILE, PREREQS_FILE};
use crate::train::train;

/// Tolerance for `gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "goalrec", version, about = "Grade prediction and goal-based course recommendation")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a planted prerequisite graph.
    Gen(GenArgs),
    /// Train a grade-prediction model.
    Train(TrainArgs),
    /// Grade-prediction accuracy and F-score against the majority baseline.
    EvalGrades(EvalGradesArgs),
    /// Prerequisite recovery against a list of known pairs.
    EvalPrereq(EvalPrereqArgs),
    /// Goal-based recommendation match rates.
    EvalGoal(EvalGoalArgs),
    /// Top prerequisite candidates for one course.
    InferPrereq(InferPrereqArgs),
    /// Preparation courses for one student's goal.
    Recommend(RecommendArgs),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    students: Option<usize>,
    #[arg(long)]
    courses: Option<usize>,
    #[arg(long)]
    departments: Option<usize>,
    #[arg(long)]
    majors: Option<usize>,
    #[arg(long)]
    semesters: Option<usize>,
    #[arg(long)]
    edges: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// "train_end,val,test", e.g. "2015:Fall,2016:Spring,2017:Spring".
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_enrollments: Option<usize>,
    /// binary or letters.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalGradesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct EvalPrereqArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Prerequisite pairs CSV; also the registrar list for the department filter.
    #[arg(long)]
    prereqs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalGoalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    prereqs: Option<PathBuf>,
    /// Semicolon-separated target courses; defaults to every target in the prerequisite list.
    #[arg(long)]
    targets: Option<String>,
    #[arg(long)]
    target_semester: Option<String>,
    #[arg(long)]
    rec_semester: Option<String>,
    #[arg(long)]
    goal: Option<String>,
}

#[derive(Debug, Args)]
struct InferPrereqArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    prereqs: Option<PathBuf>,
    #[arg(long)]
    goal: Option<String>,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    prereqs: Option<PathBuf>,
    #[arg(long)]
    student: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    goal: Option<String>,
    /// Semester to recommend for; defaults to the one after the student's last.
    #[arg(long)]
    semester: Option<String>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1, 2, 3 or all.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
}

/// Config file contents overlaid with the flags that were given.
fn settings(config: &Option<PathBuf>, flags: &[(&str, Option<String>)]) -> Result<Config> {
    let base = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut overrides = Config::default();
    for (k, v) in flags {
        if let Some(v) = v {
            overrides.set(k, v.clone());
        }
    }
    Ok(base.merged(&overrides))
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn required<T: std::str::FromStr>(cfg: &Config, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    cfg.get(key)?
        .ok_or_else(|| Error::Config(format!("missing required setting {key}")))
}

fn read_dataset(path: &Path) -> Result<EnrollmentDataset> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_enrollment_csv(BufReader::new(f))
}

fn read_prereqs(path: &Path) -> Result<Vec<PrereqPair>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_prereq_csv(BufReader::new(f))
}

fn optional_prereqs(cfg: &Config) -> Result<Vec<PrereqPair>> {
    match cfg.get::<PathBuf>("prereqs")? {
        Some(p) => read_prereqs(&p),
        None => Ok(Vec::new()),
    }
}

fn parse_scheme(text: &str) -> Result<GradeScheme> {
    match text.trim().to_ascii_lowercase().as_str() {
        "binary" => Ok(GradeScheme::Binary),
        "letters" | "letter" => Ok(GradeScheme::Letters),
        other => Err(Error::Config(format!("unknown grade scheme {other:?} (expected binary or letters)"))),
    }
}

fn goal_or_model(cfg: &Config, model: &Model) -> Result<Threshold> {
    Ok(cfg.get::<Threshold>("goal")?.unwrap_or(model.threshold))
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[
            ("out", p(&a.out)),
            ("seed", s(&a.seed)),
            ("n_students", s(&a.students)),
            ("n_courses", s(&a.courses)),
            ("n_departments", s(&a.departments)),
            ("n_majors", s(&a.majors)),
            ("n_semesters", s(&a.semesters)),
            ("dag_edges", s(&a.edges)),
        ],
    )?;
    let dir: PathBuf = required(&cfg, "out")?;
    let data = generate(&cfg.synth_config()?)?;
    data.write_to_dir(&dir)?;
    let records = [
        ("students".to_string(), data.dataset.students.len() as f64),
        ("records".to_string(), data.dataset.num_records() as f64),
        ("planted_edges".to_string(), data.dag.len() as f64),
    ];
    writeln!(out, "wrote {} and {} to {}", ENROLLMENTS_FILE, PREREQS_FILE, dir.display())?;
    write!(out, "{}", format_records(&records))?;
    Ok(())
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[
            ("model", a.model.clone()),
            ("threshold", a.threshold.clone()),
            ("data", p(&a.data)),
            ("split", a.split.clone()),
            ("out", p(&a.out)),
            ("min_enrollments", s(&a.min_enrollments)),
            ("scheme", a.scheme.clone()),
            ("epochs", s(&a.epochs)),
            ("batch_size", s(&a.batch_size)),
            ("learning_rate", s(&a.learning_rate)),
            ("hidden", s(&a.hidden)),
            ("dropout", s(&a.dropout)),
            ("seed", s(&a.seed)),
        ],
    )?;
    let kind: ModelKind = cfg.get("model")?.unwrap_or(ModelKind::Model2);
    let threshold: Threshold = cfg.get("threshold")?.unwrap_or(Threshold::B);
    let scheme = cfg.raw("scheme").map_or(Ok(GradeScheme::Binary), parse_scheme)?;
    let data_path: PathBuf = required(&cfg, "data")?;
    let split = parse_split(&required::<String>(&cfg, "split")?)?;
    let out_path: PathBuf = required(&cfg, "out")?;
    let min = cfg.get("min_enrollments")?.unwrap_or(DEFAULT_MIN_ENROLLMENTS);
    let train_cfg = cfg.train_config()?;

    let prepared = prepare(&read_dataset(&data_path)?, min, scheme, split)?;
    let encoded = prepared.encode(kind, threshold)?;
    let (model, history) = train(kind, &prepared.vocab, threshold, &encoded.train, &encoded.val, &train_cfg)?;
    for e in &history {
        let show = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        writeln!(
            out,
            "epoch {:>3}  train_loss {:.4}  val_loss {}  val_letter_accuracy {}",
            e.epoch,
            e.train_loss,
            show(e.val_loss),
            show(e.val_letter_accuracy)
        )?;
    }
    save_model(&model, &prepared.vocab, &out_path)?;
    writeln!(out, "saved {}", out_path.display())?;
    let records = [
        ("courses".to_string(), prepared.vocab.n() as f64),
        ("train_sequences".to_string(), encoded.train.len() as f64),
        ("val_sequences".to_string(), encoded.val.len() as f64),
        ("test_sequences".to_string(), encoded.test.len() as f64),
    ];
    write!(out, "{}", format_records(&records))?;
    Ok(())
}

fn cmd_eval_grades(a: &EvalGradesArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[("model_file", p(&a.model_file)), ("data", p(&a.data)), ("split", a.split.clone())],
    )?;
    let (model, vocab) = load_model(&required::<PathBuf>(&cfg, "model_file")?)?;
    let split = parse_split(&required::<String>(&cfg, "split")?)?;
    let prepared = prepare_with_vocab(&read_dataset(&required::<PathBuf>(&cfg, "data")?)?, &vocab, split)?;
    let encoded = prepared.encode(model.kind, model.threshold)?;
    let metrics = grade_prediction_metrics(&model, &encoded.test)?;
    let baseline = majority_baseline(&encoded.train, &encoded.test, vocab.scheme(), model.threshold)?;
    writeln!(out, "model\n{metrics}\nmajority baseline\n{baseline}")?;
    let mut records = metrics.records("model.");
    records.extend(baseline.records("baseline."));
    write!(out, "{}", format_records(&records))?;
    Ok(())
}

fn cmd_eval_prereq(a: &EvalPrereqArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(&a.config, &[("model_file", p(&a.model_file)), ("prereqs", p(&a.prereqs))])?;
    let (model, vocab) = load_model(&required::<PathBuf>(&cfg, "model_file")?)?;
    let all = read_prereqs(&required::<PathBuf>(&cfg, "prereqs")?)?;
    let pairs: Vec<_> = all.iter().filter(|p| vocab.index_of_key(&p.target).is_some()).cloned().collect();
    let recs = infer_all_targets(&model, &vocab, &pairs, &all)?;
    let m = prereq_metrics(&recs, &pairs);
    writeln!(
        out,
        "{:<16}{:>10}{:>10}\n{:<16}{:>10.2}{:>10.2}",
        "", "pairs", "targets", "", m.pair_accuracy, m.target_accuracy
    )?;
    write!(out, "{}", format_records(&m.records()))?;
    Ok(())
}

fn parse_targets(text: &str) -> Result<Vec<CourseKey>> {
    text.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.parse::<CourseKey>().map_err(|e| Error::Config(format!("target {t:?}: {e}"))))
        .collect()
}

fn cmd_eval_goal(a: &EvalGoalArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[
            ("model_file", p(&a.model_file)),
            ("data", p(&a.data)),
            ("prereqs", p(&a.prereqs)),
            ("targets", a.targets.clone()),
            ("target_semester", a.target_semester.clone()),
            ("rec_semester", a.rec_semester.clone()),
            ("goal", a.goal.clone()),
        ],
    )?;
    let (model, vocab) = load_model(&required::<PathBuf>(&cfg, "model_file")?)?;
    let dataset = vocab.restrict(&read_dataset(&required::<PathBuf>(&cfg, "data")?)?);
    let registrar = optional_prereqs(&cfg)?;
    let targets = match cfg.raw("targets") {
        Some(t) => parse_targets(t)?,
        None => crate::inference::pairs_by_target(&registrar).into_keys().collect(),
    };
    let targets: Vec<_> = targets.into_iter().filter(|t| vocab.index_of_key(t).is_some()).collect();
    if targets.is_empty() {
        return Err(Error::Config("no target courses in the model's vocabulary".into()));
    }
    let report = goal_match_rates(
        &model,
        &vocab,
        &dataset,
        &GoalEvalSetup {
            targets: &targets,
            target_semester: required(&cfg, "target_semester")?,
            rec_semester: required(&cfg, "rec_semester")?,
            goal: goal_or_model(&cfg, &model)?,
            registrar: &registrar,
        },
    )?;
    writeln!(out, "{report}")?;
    write!(out, "{}", format_records(&report.records()))?;
    Ok(())
}

fn print_ranked(out: &mut dyn Write, recs: &[crate::inference::RankedRecommendation]) -> Result<()> {
    for (rank, r) in recs.iter().enumerate() {
        writeln!(out, "{:>2}  {:<28}{:.6}", rank + 1, r.course.id, r.probability)?;
    }
    Ok(())
}

fn cmd_infer_prereq(a: &InferPrereqArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[
            ("model_file", p(&a.model_file)),
            ("target", a.target.clone()),
            ("prereqs", p(&a.prereqs)),
            ("goal", a.goal.clone()),
        ],
    )?;
    let (model, vocab) = load_model(&required::<PathBuf>(&cfg, "model_file")?)?;
    let target: CourseKey = required(&cfg, "target")?;
    let ctx = CandidateFilterContext::for_prereqs(optional_prereqs(&cfg)?, target, goal_or_model(&cfg, &model)?);
    print_ranked(out, &infer_prereqs(&model, &vocab, &ctx)?)
}

fn cmd_recommend(a: &RecommendArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = settings(
        &a.config,
        &[
            ("model_file", p(&a.model_file)),
            ("data", p(&a.data)),
            ("prereqs", p(&a.prereqs)),
            ("student", a.student.clone()),
            ("target", a.target.clone()),
            ("goal", a.goal.clone()),
            ("semester", a.semester.clone()),
        ],
    )?;
    let (model, vocab) = load_model(&required::<PathBuf>(&cfg, "model_file")?)?;
    let dataset = read_dataset(&required::<PathBuf>(&cfg, "data")?)?;
    let student_id: String = required(&cfg, "student")?;
    let student = dataset
        .student(&student_id)
        .ok_or_else(|| Error::InvalidRequest(format!("unknown student {student_id}")))?;
    let semester: Semester = match cfg.get("semester")? {
        Some(s) => s,
        None => student
            .semesters
            .last()
            .map(|s| s.semester.next_regular())
            .ok_or_else(|| Error::InvalidRequest(format!("student {student_id} has no history")))?,
    };
    let history: Vec<_> = student.semesters.iter().filter(|s| s.semester < semester).cloned().collect();
    let ctx = CandidateFilterContext {
        prereq_pairs: optional_prereqs(&cfg)?,
        availability: Some(availability(&dataset, semester)),
        student_history: history.iter().flat_map(|s| s.courses().map(|c| c.key())).collect(),
        target: required(&cfg, "target")?,
        threshold: goal_or_model(&cfg, &model)?,
    };
    writeln!(out, "recommendations for {student_id} in {semester}, preparing for {}", ctx.target)?;
    print_ranked(out, &recommend(&model, &vocab, &history, &ctx)?)
}

/// Max relative gradient error of a random tiny model of each requested kind,
/// on two random three-step sequences.
pub fn gradcheck(kinds: &[ModelKind], seed: u64) -> Result<Vec<(ModelKind, f64)>> {
    let dims = ModelDims {
        n: 3,
        m: 2,
        k: 2,
        hidden: 4,
        side: 4,
    };
    kinds
        .iter()
        .map(|&kind| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = random_model(kind, dims, 1.0, &mut rng)?;
            let batch = vec![random_sequence(kind, &dims, 3, &mut rng), random_sequence(kind, &dims, 3, &mut rng)];
            Ok((kind, finite_diff_check(&model, &batch, 1e-5)?))
        })
        .collect()
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<bool> {
    let cfg = settings(
        &a.config,
        &[("model", a.model.clone()), ("seed", s(&a.seed)), ("seeds", s(&a.seeds))],
    )?;
    let kinds = match cfg.raw("model").unwrap_or("all") {
        "all" => vec![ModelKind::Model1, ModelKind::Model2, ModelKind::Model3],
        k => vec![k.parse::<ModelKind>().map_err(Error::Config)?],
    };
    let first: u64 = cfg.get("seed")?.unwrap_or(0);
    let count: u64 = cfg.get("seeds")?.unwrap_or(1);
    let mut worst: f64 = 0.0;
    for seed in first..first + count {
        for (kind, err) in gradcheck(&kinds, seed)? {
            writeln!(out, "model{},seed{seed},{err:e}", kind.code())?;
            worst = worst.max(err);
        }
    }
    writeln!(out, "max_relative_error,{worst:e}")?;
    Ok(worst < GRADCHECK_TOLERANCE)
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Gen(a) => cmd_gen(a, out).map(|_| true),
        Command::Train(a) => cmd_train(a, out).map(|_| true),
        Command::EvalGrades(a) => cmd_eval_grades(a, out).map(|_| true),
        Command::EvalPrereq(a) => cmd_eval_prereq(a, out).map(|_| true),
        Command::EvalGoal(a) => cmd_eval_goal(a, out).map(|_| true),
        Command::InferPrereq(a) => cmd_infer_prereq(a, out).map(|_| true),
        Command::Recommend(a) => cmd_recommend(a, out).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
    }
}

/// Runs one invocation, writing results to `out` and diagnostics to standard
/// error. Returns the process exit code: 0 on success, 1 on failure, 2 on
/// usage errors.
pub fn run_with_output<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &mut buf));
    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
        eprintln!("error: {e}");
        return 1;
    }
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with_output(argv, &mut lock)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run_with_output(std::iter::once("goalrec").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["gen", "--bogus"]).0, 2);
    }

    #[test]
    fn missing_setting_fails() {
        assert_eq!(run_capture(&["gen"]).0, 1);
    }

    #[test]
    fn gradcheck_passes() {
        let (code, out) = run_capture(&["gradcheck", "--model", "all"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("max_relative_error"));
    }

    #[test]
    fn small_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let cfg = d.join("synth.cfg");
        std::fs::write(&cfg, "n_students = 300\nseed = 4\n").unwrap();
        let data = d.join("data");
        let (code, _) = run_capture(&["gen", "--config", cfg.to_str().unwrap(), "--out", data.to_str().unwrap()]);
        assert_eq!(code, 0);
        let csv = data.join(ENROLLMENTS_FILE);
        let pairs = data.join(PREREQS_FILE);
        let model = d.join("model.bin");
        let split = "2015:Fall,2016:Spring,2017:Spring";
        let (code, out) = run_capture(&[
            "train",
            "--model",
            "2",
            "--threshold",
            "B",
            "--data",
            csv.to_str().unwrap(),
            "--split",
            split,
            "--out",
            model.to_str().unwrap(),
            "--epochs",
            "2",
            "--hidden",
            "8",
        ]);
        assert_eq!(code, 0, "{out}");
        let m = model.to_str().unwrap();
        let (code, out) = run_capture(&["eval-grades", "--model-file", m, "--data", csv.to_str().unwrap(), "--split", split]);
        assert_eq!(code, 0);
        assert!(out.contains("model.letter_accuracy,"));
        let (code, out) = run_capture(&["eval-prereq", "--model-file", m, "--prereqs", pairs.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("prereq_pair_accuracy,"));

        let dataset = read_dataset(&csv).unwrap();
        let registrar = read_prereqs(&pairs).unwrap();
        let target = registrar[0].target.to_string();
        let (code, out) = run_capture(&["infer-prereq", "--model-file", m, "--target", &target, "--prereqs", pairs.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}");
        assert!(out.lines().count() <= 10 && out.lines().count() > 0);

        let (code, out) = run_capture(&[
            "eval-goal",
            "--model-file",
            m,
            "--data",
            csv.to_str().unwrap(),
            "--prereqs",
            pairs.to_str().unwrap(),
            "--target-semester",
            "2016:Fall",
            "--rec-semester",
            "2016:Spring",
        ]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("goal.pos_students,"));

        let student = dataset
            .students
            .iter()
            .find(|s| {
                s.semesters.len() >= 2 && !s.semesters.iter().flat_map(|x| x.courses()).any(|c| c.key() == registrar[0].target)
            })
            .unwrap();
        let (code, out) = run_capture(&[
            "recommend",
            "--model-file",
            m,
            "--data",
            csv.to_str().unwrap(),
            "--student",
            &student.student_id,
            "--target",
            &target,
            "--goal",
            "B",
        ]);
        assert_eq!(code, 0, "{out}");
        assert!(out.lines().count() <= 11);
        assert_eq!(
            run_capture(&["recommend", "--model-file", m, "--data", csv.to_str().unwrap(), "--student", &student.student_id, "--target", &target, "--goal", "A"]).0,
            1
        );
    }
}
