use lcslab::gallery;
use lcslab::report::{Sampling, Verdict};

fn run(m: &gallery::ExampleManifest) {
    let s = Sampling::default();
    let t = std::time::Instant::now();
    let r = m.run(&s);
    let bad: Vec<_> = r.checks.iter().filter(|c| c.verdict != Verdict::Pass).collect();
    eprintln!("{}: {} rows in {:?}", m.name, r.checks.len(), t.elapsed());
    for c in &bad {
        eprintln!("  {} {:?} residual {:e} threshold {:e} {:?}", c.id, c.verdict, c.residual, c.threshold, c.note);
    }
    assert!(bad.is_empty(), "{} failing rows in {}", bad.len(), m.name);
}

#[test]
fn every_example_passes() {
    let mut failed = Vec::new();
    for m in gallery::all().unwrap() {
        if std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&m))).is_err() {
            failed.push(m.name.clone());
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}
