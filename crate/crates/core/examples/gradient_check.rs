//! Compare backpropagated gradients with central differences.

use goalrec::cli::{gradcheck, GRADCHECK_TOLERANCE};
use goalrec::prelude::*;

fn main() -> Result<()> {
    let kinds = [ModelKind::Model1, ModelKind::Model2, ModelKind::Model3];
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        for (kind, err) in gradcheck(&kinds, seed)? {
            println!("{kind} seed {seed}: {err:.3e}");
            worst = worst.max(err);
        }
    }
    println!("worst {worst:.3e} (tolerance {GRADCHECK_TOLERANCE:e})");
    Ok(())
}
