//! Generate a synthetic enrollment dataset and write it to a directory.
//!
//! cargo run --example generate_synthetic -- [out_dir] [seed]

use std::path::PathBuf;

use goalrec::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synth_out".into()));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let config = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let synth = generate(&config)?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    synth.write_to_dir(&dir)?;

    println!(
        "{} students, {} records, {} courses, {} planted edges -> {}",
        synth.dataset.students.len(),
        synth.dataset.num_records(),
        synth.catalog.len(),
        synth.dag.len(),
        dir.display()
    );
    for p in &synth.dag {
        println!("  {} -> {}", p.prerequisite, p.target);
    }
    Ok(())
}
