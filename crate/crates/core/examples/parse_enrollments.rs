//! Parse a small enrollment table, build a vocabulary and inspect a student.

use goalrec::prelude::*;

const ROWS: &str = "Semester Year,STU ID,Major,Dept,Course Num,Grade
Spring 2014,x137905,Law,Law,178,B
Summer 2014,x137905,Law,Law,165,C
Fall 2014,x282243,Math,Math,140,D
Fall 2014,x282243,Math,Math,121,A
Spring 2015,x282243,Math,Math,185,P
";

fn main() -> Result<()> {
    let data = parse_enrollment_csv(ROWS.as_bytes())?;
    println!("{} records, {} students", data.num_records(), data.students.len());
    for s in &data.students {
        println!("{}", s.student_id);
        for sem in &s.semesters {
            let grades: Vec<String> = sem.records.iter().map(|r| format!("{} {}", r.course.id, r.grade.as_str())).collect();
            println!("  {:<12} {}", sem.semester.to_string(), grades.join(", "));
        }
    }

    let (vocab, restricted) = build_vocabulary(&data, 1, GradeScheme::Binary)?;
    println!("vocabulary: n={} m={} k={}", vocab.n(), vocab.m(), vocab.k());
    for (i, c) in vocab.courses().iter().enumerate() {
        println!("  {i:>2} {} ({:?})", c.id, c.level());
    }
    assert_eq!(restricted.num_records(), data.num_records());

    let mut out = Vec::new();
    data.write_csv(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
