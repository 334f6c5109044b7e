//! Course grade prediction with LSTM sequence models, and goal-based course
//! recommendation built on top of them.
//!
//! A student's history is a sequence of semesters. Each semester is encoded
//! as a multi-hot grade vector, optionally with the next semester's
//! co-enrollments or the student's majors. The network predicts a grade
//! distribution for every course, and those predictions drive prerequisite
//! inference and personalized recommendations.
//!
//! ```no_run
//! use goalrec::prelude::*;
//!
//! let data = generate(&SynthConfig::default()).unwrap();
//! let plan = SynthConfig::default().default_plan().unwrap();
//! let prepared = prepare(&data.dataset, 20, GradeScheme::Binary, (plan.train_end, plan.val, plan.test)).unwrap();
//! let splits = prepared.encode(ModelKind::Model2, Threshold::B).unwrap();
//! let (model, _) = train(ModelKind::Model2, &prepared.vocab, Threshold::B, &splits.train, &splits.val, &TrainConfig::default()).unwrap();
//! println!("{}", grade_prediction_metrics(&model, &splits.test).unwrap());
//! ```

pub mod artifact;
pub mod cli;
pub mod config;
pub mod domain;
pub mod encode;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod inference;
pub mod linalg;
pub mod loss;
pub mod net;
pub mod pipeline;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::artifact::{load_model, save_model};
    pub use crate::domain::{
        build_vocabulary, parse_enrollment_csv, temporal_split, Course, CourseKey, EnrollmentDataset, Grade,
        GradeScheme, LetterGrade, Semester, Term, Vocabulary,
    };
    pub use crate::encode::{encode_split, EncodedSequence, ModelKind, Threshold};
    pub use crate::error::{Error, Result};
    pub use crate::eval::{
        goal_match_rates, grade_prediction_metrics, majority_baseline, prereq_accuracy, GoalEvalSetup, GradeMetrics,
    };
    pub use crate::inference::{
        infer_prereqs, recommend, CandidateFilterContext, PrereqPair, RankedRecommendation, TOP_K,
    };
    pub use crate::loss::{finite_diff_check, masked_loss};
    pub use crate::net::{forward_sequence, Model, ModelDims};
    pub use crate::pipeline::{prepare, run_synthetic};
    pub use crate::synth::{generate, planted_recall, SynthConfig};
    pub use crate::train::{train, TrainConfig};
}
