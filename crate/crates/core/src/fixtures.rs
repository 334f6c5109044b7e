//! Random well-formed model inputs, for gradient checks and property tests.

use rand::Rng;

use crate::domain::GradeScheme;
use crate::encode::{
    build_model_input, CoEnrollmentVector, EncodedSequence, GradeVector, LossMask, MajorVector, MaskSelector,
    ModelKind, StepTarget, Threshold,
};
use crate::error::Result;
use crate::net::{Model, ModelDims};

/// A binary-scheme model with every parameter, biases included, uniform in
/// `[-scale, scale]`.
pub fn random_model<R: Rng>(kind: ModelKind, dims: ModelDims, scale: f64, rng: &mut R) -> Result<Model> {
    let mut model = Model::init(kind, dims, Threshold::B, GradeScheme::Binary, 0)?;
    model
        .params
        .for_each_mut(|_, values| values.iter_mut().for_each(|v| *v = rng.gen_range(-scale..=scale)));
    Ok(model)
}

/// A random semester: each course is taken with probability `p_take`, graded
/// with a letter four times out of five and Pass/NoPass otherwise.
pub fn random_semester<R: Rng>(n: usize, m: usize, p_take: f64, rng: &mut R) -> (GradeVector, LossMask) {
    let mut g = GradeVector::zeros(n, m);
    let mut mask = LossMask::none(n);
    for i in 0..n {
        if !rng.gen_bool(p_take) {
            continue;
        }
        if rng.gen_bool(0.8) {
            g.set(i, rng.gen_range(0..m));
            mask.0[i] = MaskSelector::LetterGroup;
        } else {
            g.set(i, m + rng.gen_range(0..2));
            mask.0[i] = MaskSelector::PassNoPassGroup;
        }
    }
    (g, mask)
}

fn courses_of(g: &GradeVector) -> CoEnrollmentVector {
    CoEnrollmentVector((0..g.n()).map(|i| if g.slot(i).iter().any(|v| *v != 0.0) { 1.0 } else { 0.0 }).collect())
}

/// A random labeled sequence of `steps` steps for a model of shape `dims`.
pub fn random_sequence<R: Rng>(kind: ModelKind, dims: &ModelDims, steps: usize, rng: &mut R) -> EncodedSequence {
    let semesters: Vec<_> = (0..=steps).map(|_| random_semester(dims.n, dims.m, 0.5, rng)).collect();
    let majors = MajorVector((0..dims.k).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect());
    let mut seq = EncodedSequence {
        inputs: Vec::with_capacity(steps),
        targets: Vec::with_capacity(steps),
    };
    for pair in semesters.windows(2) {
        let (g, _) = &pair[0];
        let (next_g, next_mask) = &pair[1];
        seq.inputs
            .push(build_model_input(kind, g, &courses_of(next_g), &majors).expect("dimensions agree"));
        seq.targets.push(StepTarget {
            label: next_g.clone(),
            mask: next_mask.clone(),
        });
    }
    seq
}
