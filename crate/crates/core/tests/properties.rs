use std::collections::{BTreeMap, BTreeSet};

use goalrec::domain::{EnrollmentRecord, Level};
use goalrec::encode::{decode_grades, encode_semester, slot_position, MaskSelector};
use goalrec::fixtures::{random_model, random_semester, random_sequence};
use goalrec::inference::rank;
use goalrec::loss::{gradients, logit_gradient};
use goalrec::net::trace_sequence;
use goalrec::prelude::*;
use goalrec::train::{clip_gradients, sgd_step};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRADES: [&str; 15] = [
    "A+", "A", "A-", "B+", "B", "B-", "C+", "C", "C-", "D+", "D", "D-", "F", "P", "NP",
];

fn kind_strategy() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::Model1), Just(ModelKind::Model2), Just(ModelKind::Model3)]
}

fn dims_strategy() -> impl Strategy<Value = ModelDims> {
    (1usize..6, 2usize..4, 1usize..4, 1usize..6, 1usize..5).prop_map(|(n, m, k, hidden, side)| ModelDims {
        n,
        m,
        k,
        hidden,
        side,
    })
}

/// Rows of (student, semester index, course index, grade index), unique per
/// (student, semester, course).
fn rows_strategy() -> impl Strategy<Value = Vec<(u8, u8, u8, usize)>> {
    prop::collection::btree_map((0u8..6, 0u8..5, 0u8..8), 0usize..GRADES.len(), 1..40)
        .prop_map(|m| m.into_iter().map(|((s, t, c), g)| (s, t, c, g)).collect())
}

fn semester_of(t: u8) -> Semester {
    let mut s = Semester::new(2014, Term::Fall);
    for _ in 0..t {
        s = s.next_regular();
    }
    s
}

fn course_of(c: u8) -> Course {
    let dept = ["Math", "Computer Science", "Statistics"][usize::from(c % 3)];
    Course::new(dept, u32::from(c) * 37 % 260)
}

fn csv_text(rows: &[(u8, u8, u8, usize)]) -> String {
    let mut text = String::from("Semester Year,STU ID,Major,Dept,Course Num,Grade\n");
    for &(s, t, c, g) in rows {
        let course = course_of(c);
        let major = if s % 2 == 0 { "Math" } else { "Math;Physics" };
        text.push_str(&format!(
            "{},x{s},{major},{},{},{}\n",
            semester_of(t),
            course.department,
            course.number,
            GRADES[g]
        ));
    }
    text
}

fn multiset(data: &EnrollmentDataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in data.records() {
        let key = format!(
            "{}|{}|{:?}|{}|{}",
            r.student_id,
            r.semester,
            r.majors,
            r.course.id,
            r.grade.as_str()
        );
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_preserves_records(rows in rows_strategy()) {
        let data = parse_enrollment_csv(csv_text(&rows).as_bytes()).unwrap();
        prop_assert_eq!(data.num_records(), rows.len());
        let mut out = Vec::new();
        data.write_csv(&mut out).unwrap();
        let again = parse_enrollment_csv(out.as_slice()).unwrap();
        prop_assert_eq!(multiset(&data), multiset(&again));
    }

    #[test]
    fn vocabulary_ignores_row_order(rows in rows_strategy(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = parse_enrollment_csv(csv_text(&rows).as_bytes()).unwrap();
        let b = parse_enrollment_csv(csv_text(&shuffled).as_bytes()).unwrap();
        let (va, _) = build_vocabulary(&a, 1, GradeScheme::Binary).unwrap();
        let (vb, _) = build_vocabulary(&b, 1, GradeScheme::Binary).unwrap();
        prop_assert_eq!(va, vb);
    }

    #[test]
    fn split_labels_are_disjoint(rows in rows_strategy()) {
        let data = parse_enrollment_csv(csv_text(&rows).as_bytes()).unwrap();
        let (train_end, val, test) = (semester_of(1), semester_of(2), semester_of(4));
        let Ok(splits) = temporal_split(&data, train_end, val, test) else {
            return Ok(());
        };
        let mut seen = BTreeSet::new();
        for seq in splits.train.iter().chain(&splits.val).chain(&splits.test) {
            for sem in seq.label_semesters() {
                for r in &sem.records {
                    prop_assert!(seen.insert((r.student_id.clone(), r.semester, r.course.key())));
                }
            }
        }
    }

    #[test]
    fn level_bands(number in 0u32..1000) {
        let expected = if number < 100 { Level::Lower } else if number < 200 { Level::Upper } else { Level::Graduate };
        prop_assert_eq!(Level::of(number), expected);
    }

    #[test]
    fn encode_then_decode_recovers_grades(
        picks in prop::collection::btree_map(0u8..8, 0usize..GRADES.len(), 0..8),
        letters in any::<bool>(),
        goal_a in any::<bool>(),
    ) {
        let scheme = if letters { GradeScheme::Letters } else { GradeScheme::Binary };
        let threshold = if goal_a { Threshold::A } else { Threshold::B };
        let vocab = Vocabulary::new((0..8).map(course_of), ["Math".to_string()], scheme).unwrap();
        let records: Vec<EnrollmentRecord> = picks
            .iter()
            .map(|(&c, &g)| EnrollmentRecord {
                student_id: "s".into(),
                semester: semester_of(0),
                majors: BTreeSet::from(["Math".to_string()]),
                course: course_of(c),
                grade: GRADES[g].parse().unwrap(),
            })
            .collect();
        let enc = encode_semester(&records, &BTreeSet::new(), &vocab, threshold).unwrap();

        let expected: BTreeSet<(usize, usize)> = records
            .iter()
            .map(|r| (vocab.course_index(&r.course).unwrap(), slot_position(r.grade, scheme, threshold, vocab.m())))
            .collect();
        let decoded: BTreeSet<(usize, usize)> = decode_grades(&enc.grades).into_iter().collect();
        prop_assert_eq!(decoded, expected);

        for i in 0..vocab.n() {
            let slot = enc.grades.slot(i);
            prop_assert!(slot.iter().filter(|v| **v == 1.0).count() <= 1);
            prop_assert!(slot.iter().all(|v| *v == 0.0 || *v == 1.0));
            let group = match enc.mask.0[i] {
                MaskSelector::None => None,
                MaskSelector::LetterGroup => Some(enc.grades.letter_group(i)),
                MaskSelector::PassNoPassGroup => Some(enc.grades.pnp_group(i)),
            };
            match group {
                None => prop_assert!(slot.iter().all(|v| *v == 0.0)),
                Some(g) => prop_assert_eq!(g.iter().sum::<f64>(), 1.0),
            }
            prop_assert_eq!(enc.courses.0[i] == 1.0, enc.mask.0[i] != MaskSelector::None);
        }
    }

    #[test]
    fn input_lengths(kind in kind_strategy(), dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(kind, &dims, 2, &mut rng);
        let g = (dims.m + 2) * dims.n;
        let expected = match kind {
            ModelKind::Model1 => g,
            ModelKind::Model2 => g + dims.n,
            ModelKind::Model3 => g + dims.k,
        };
        for input in &seq.inputs {
            prop_assert_eq!(input.recurrent.len(), expected);
            prop_assert_eq!(input.side.as_ref().map(Vec::len), (kind == ModelKind::Model3).then_some(dims.n));
        }
    }

    #[test]
    fn forward_groups_sum_to_one_and_state_is_bounded(
        kind in kind_strategy(),
        dims in dims_strategy(),
        steps in 1usize..6,
        scale in 0.1f64..4.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(kind, dims, scale, &mut rng).unwrap();
        let seq = random_sequence(kind, &dims, steps, &mut rng);
        let trace = trace_sequence(&model, &seq.inputs).unwrap();
        prop_assert_eq!(trace.len(), steps);
        for t in &trace {
            for i in 0..dims.n {
                prop_assert!((t.probs.letter_group(i).iter().sum::<f64>() - 1.0).abs() <= 1e-6);
                prop_assert!((t.probs.pnp_group(i).iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            }
            prop_assert!(t.state.h.iter().all(|h| h.abs() < 1.0));
            prop_assert!(t.state.c.iter().all(|c| c.is_finite()));
        }
    }

    #[test]
    fn predictions_are_causal(kind in kind_strategy(), dims in dims_strategy(), steps in 2usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(kind, dims, 1.0, &mut rng).unwrap();
        let seq = random_sequence(kind, &dims, steps, &mut rng);
        let full = forward_sequence(&model, &seq.inputs).unwrap();
        for t in 1..steps {
            let prefix = forward_sequence(&model, &seq.inputs[..t]).unwrap();
            prop_assert_eq!(&prefix[..], &full[..t]);
        }
    }

    #[test]
    fn masked_logits_get_zero_gradient(n in 1usize..8, m in 2usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (label, mask) = random_semester(n, m, 0.5, &mut rng);
        let logits: Vec<f64> = (0..n * (m + 2)).map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0)).collect();
        let probs = goalrec::net::softmax_groups(&logits, n, m);
        let target = goalrec::encode::StepTarget { label, mask: mask.clone() };
        let d = logit_gradient(&probs, &target).unwrap();
        for (i, sel) in mask.0.iter().enumerate() {
            let slot = &d[i * (m + 2)..(i + 1) * (m + 2)];
            match sel {
                MaskSelector::None => prop_assert!(slot.iter().all(|v| *v == 0.0)),
                MaskSelector::LetterGroup => prop_assert!(slot[m..].iter().all(|v| *v == 0.0)),
                MaskSelector::PassNoPassGroup => prop_assert!(slot[..m].iter().all(|v| *v == 0.0)),
            }
        }
    }

    #[test]
    fn padding_contributes_nothing(kind in kind_strategy(), dims in dims_strategy(), extra in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(kind, dims, 1.0, &mut rng).unwrap();
        let seq = random_sequence(kind, &dims, 2, &mut rng);
        let mut padded = seq.clone();
        padded.pad_to(2 + extra, dims.n, dims.m);
        for input in &mut padded.inputs[2..] {
            input.recurrent.iter_mut().for_each(|v| *v = rand::Rng::gen_range(&mut rng, 0.0..1.0));
        }
        let (la, ga) = gradients(&model, &[seq]).unwrap();
        let (lb, gb) = gradients(&model, &[padded]).unwrap();
        prop_assert_eq!(la, lb);
        prop_assert_eq!(ga, gb);
    }

    #[test]
    fn clipping_never_grows_and_zero_lr_is_identity(dims in dims_strategy(), clip in 0.01f64..10.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(ModelKind::Model2, dims, 1.0, &mut rng).unwrap();
        let seq = random_sequence(ModelKind::Model2, &dims, 3, &mut rng);
        let (_, mut grads) = gradients(&model, &[seq]).unwrap();
        let before = grads.squared_norm().sqrt();
        clip_gradients(&mut grads, clip);
        let after = grads.squared_norm().sqrt();
        prop_assert!(after <= before);
        prop_assert!(after <= clip * (1.0 + 1e-12));

        let mut stepped = model.clone();
        sgd_step(&mut stepped, &grads, 0.0, &TrainConfig::default());
        prop_assert_eq!(stepped.params, model.params);
    }

    #[test]
    fn ranking_is_order_independent(
        scores in prop::collection::vec(prop_oneof![Just(0.5f64), 0.0f64..1.0], 1..30),
        top_k in 1usize..12,
        seed in any::<u64>(),
    ) {
        let courses: Vec<Course> = (0..scores.len()).map(|i| Course::new("Math", i as u32)).collect();
        let vocab = Vocabulary::new(courses, ["Math".to_string()], GradeScheme::Binary).unwrap();
        let scored: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
        let mut shuffled = scored.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let a = rank(scored, &vocab, top_k);
        let b = rank(shuffled, &vocab, top_k);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), top_k.min(scores.len()));
        for w in a.windows(2) {
            prop_assert!(w[0].probability > w[1].probability
                || (w[0].probability == w[1].probability && w[0].index < w[1].index));
        }
    }
}
