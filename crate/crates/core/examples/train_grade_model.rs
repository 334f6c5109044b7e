//! Train a grade predictor on synthetic data and compare it with the majority
//! baseline.
//!
//! cargo run --release --example train_grade_model -- [model 1|2|3] [epochs]

use goalrec::pipeline::DEFAULT_MIN_ENROLLMENTS;
use goalrec::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ModelKind = args.next().map_or(ModelKind::Model2, |s| s.parse().expect("model kind"));
    let epochs: usize = args.next().map_or(20, |s| s.parse().expect("epochs"));

    let synth_config = SynthConfig::default();
    let synth = generate(&synth_config)?;
    let plan = synth_config.default_plan()?;
    let data = prepare(
        &synth.dataset,
        DEFAULT_MIN_ENROLLMENTS,
        GradeScheme::Binary,
        (plan.train_end, plan.val, plan.test),
    )?;
    let enc = data.encode(kind, Threshold::B)?;
    println!(
        "{kind}: {} courses, {} train / {} val / {} test sequences",
        data.vocab.n(),
        enc.train.len(),
        enc.val.len(),
        enc.test.len()
    );

    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (model, history) = train(kind, &data.vocab, Threshold::B, &enc.train, &enc.val, &config)?;
    for e in &history {
        println!(
            "epoch {:>3} loss {:.4} val_loss {:.4} val_acc {:.2}",
            e.epoch,
            e.train_loss,
            e.val_loss.unwrap_or(f64::NAN),
            e.val_letter_accuracy.unwrap_or(f64::NAN)
        );
    }
    println!("\nmodel\n{}", grade_prediction_metrics(&model, &enc.test)?);
    println!("majority\n{}", majority_baseline(&enc.train, &enc.test, data.vocab.scheme(), Threshold::B)?);
    Ok(())
}
