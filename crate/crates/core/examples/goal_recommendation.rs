//! Recommend next-semester courses for one student aiming at a target course.
//!
//! cargo run --release --example goal_recommendation -- [epochs]

use std::collections::BTreeSet;

use goalrec::inference::availability;
use goalrec::pipeline::DEFAULT_MIN_ENROLLMENTS;
use goalrec::prelude::*;

fn main() -> Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("epochs"));
    let synth_config = SynthConfig::default();
    let synth = generate(&synth_config)?;
    let plan = synth_config.default_plan()?;
    let data = prepare(
        &synth.dataset,
        DEFAULT_MIN_ENROLLMENTS,
        GradeScheme::Binary,
        (plan.train_end, plan.val, plan.test),
    )?;
    let enc = data.encode(ModelKind::Model2, Threshold::B)?;
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (model, _) = train(ModelKind::Model2, &data.vocab, Threshold::B, &enc.train, &enc.val, &config)?;

    let target = synth.targets().into_iter().find(|t| data.vocab.index_of_key(t).is_some()).expect("a target");
    let student = data
        .dataset
        .students
        .iter()
        .find(|s| {
            let before: Vec<_> = s.semesters.iter().filter(|x| x.semester < plan.goal_rec).collect();
            before.len() >= 2 && !before.iter().flat_map(|x| x.courses()).any(|c| c.key() == target)
        })
        .expect("a student");
    let history: Vec<_> = student.semesters.iter().filter(|s| s.semester < plan.goal_rec).cloned().collect();

    let ctx = CandidateFilterContext {
        prereq_pairs: synth.dag.clone(),
        availability: Some(availability(&data.dataset, plan.goal_rec)),
        student_history: history.iter().flat_map(|s| s.courses()).map(Course::key).collect::<BTreeSet<_>>(),
        target: target.clone(),
        threshold: Threshold::B,
    };
    println!("student {} aiming for {target} (goal B), recommending for {}", student.student_id, plan.goal_rec);
    for r in recommend(&model, &data.vocab, &history, &ctx)? {
        println!("  {:<24} {:.4}", r.course.id, r.probability);
    }
    Ok(())
}
