//! Full synthetic experiment: generate, train, and score grade prediction,
//! prerequisite recovery and goal-based recommendation.
//!
//! cargo run --release --example evaluate_pipeline -- [seed] [epochs]

use std::time::Instant;

use goalrec::eval::format_records;
use goalrec::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let epochs: usize = args.next().map_or(50, |s| s.parse().expect("epochs"));

    let synth = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let config = TrainConfig {
        seed,
        epochs,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let report = run_synthetic(&synth, ModelKind::Model2, Threshold::B, &config)?;

    for e in &report.history {
        println!(
            "epoch {:>3}  train_loss {:.4}  val_letter_accuracy {:.2}",
            e.epoch,
            e.train_loss,
            e.val_letter_accuracy.unwrap_or(f64::NAN)
        );
    }
    println!("\ngrade prediction (model)\n{}", report.grades);
    println!("grade prediction (majority baseline)\n{}", report.baseline);
    println!(
        "\nplanted recall {:.3}  random top-{} baseline {:.3}",
        report.planted_recall,
        TOP_K,
        report.random_recall
    );
    println!("\n{}", report.goal);

    let mut records = report.grades.records("model.");
    records.extend(report.baseline.records("baseline."));
    records.extend(report.prereq.records());
    records.push(("planted_recall".into(), report.planted_recall));
    records.push(("random_recall".into(), report.random_recall));
    records.extend(report.goal.records().into_iter().filter(|(k, _)| k.starts_with("goal.")));
    records.push(("seconds".into(), start.elapsed().as_secs_f64()));
    print!("\n{}", format_records(&records));
    Ok(())
}
