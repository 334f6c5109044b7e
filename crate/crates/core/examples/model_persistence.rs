//! Save a model, load it back and check the predictions agree.

use goalrec::fixtures::random_sequence;
use goalrec::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let rows = "Semester Year,STU ID,Major,Dept,Course Num,Grade
Fall 2014,s1,Math,Math,1,A
Fall 2014,s1,Math,Math,2,B
Spring 2015,s1,Math,Math,110,A
Fall 2014,s2,Stat,Stat,1,C
Spring 2015,s2,Stat,Math,110,P
";
    let (vocab, _) = build_vocabulary(&parse_enrollment_csv(rows.as_bytes())?, 1, GradeScheme::Binary)?;
    let model = Model::for_vocab(ModelKind::Model3, &vocab, Threshold::A, 8, 7)?;

    let dir = tempfile::tempdir().map_err(Error::IoPlain)?;
    let path = dir.path().join("model.bin");
    save_model(&model, &vocab, &path)?;
    let (loaded, loaded_vocab) = load_model(&path)?;
    assert_eq!(loaded_vocab, vocab);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seq = random_sequence(model.kind, &model.dims, 3, &mut rng);
    let a = forward_sequence(&model, &seq.inputs)?;
    let b = forward_sequence(&loaded, &seq.inputs)?;
    assert_eq!(a, b);
    let bytes = std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
    println!("{} parameters, {bytes} bytes, predictions identical", model.params.num_values());
    Ok(())
}
