//! Recover planted prerequisites from a trained model.
//!
//! cargo run --release --example prerequisite_inference -- [epochs]

use goalrec::eval::infer_all_targets;
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

    let dag: Vec<PrereqPair> = synth
        .dag
        .iter()
        .filter(|p| data.vocab.index_of_key(&p.target).is_some())
        .cloned()
        .collect();
    let recs = infer_all_targets(&model, &data.vocab, &dag, &synth.dag)?;
    for (target, ranked) in &recs {
        let planted: Vec<_> = dag.iter().filter(|p| &p.target == target).map(|p| &p.prerequisite).collect();
        println!("{target}");
        for (rank, r) in ranked.iter().enumerate() {
            let mark = if planted.contains(&&r.course.key()) { "*" } else { " " };
            println!("  {mark} {:>2} {:<24} {:.4}", rank + 1, r.course.id, r.probability);
        }
    }
    println!("planted recall {:.3}", planted_recall(&recs, &dag)?);
    Ok(())
}
