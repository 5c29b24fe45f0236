//! The `docrestore` binary: determinism, diagnostics and output contracts.

mod common;

use std::fs;
use std::path::Path;

use common::{ok, p, run, tree, SMALL};
use docrestore::metrics::MetricsReport;
use docrestore::pipeline::RestorationBundle;
use tempfile::TempDir;

fn corpus(dir: &Path, n: &str, seed: &str) {
    ok(&["synth", "--n", n, "--seed", seed, "--out", p(dir)], SMALL);
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let t = TempDir::new().unwrap();
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    corpus(&a, "4", "7");
    corpus(&b, "4", "7");
    corpus(&c, "4", "8");
    let ta = tree(&a);
    assert_eq!(ta.len(), 1 + 4 * 6);
    assert_eq!(ta, tree(&b));
    assert_ne!(ta, tree(&c));
}

#[test]
fn eval_of_ground_truth_against_itself_is_perfect() {
    let t = TempDir::new().unwrap();
    let gt = t.path().join("gt");
    fs::create_dir(&gt).unwrap();
    let src = t.path().join("corpus");
    corpus(&src, "3", "1");
    for i in 0..3 {
        fs::copy(src.join(format!("doc_00{i}/gt/text.pgm")), gt.join(format!("page{i}.pgm"))).unwrap();
    }
    let csv = t.path().join("report.csv");
    let out = ok(&["eval", "--pred-dir", p(&gt), "--gt-dir", p(&gt), "--out", p(&csv)], &[]);
    let rep = MetricsReport::read_csv(fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for r in rep.rows.iter().chain([&rep.average]) {
        assert_eq!((r.fm, r.fps, r.psnr, r.drd), (100.0, 100.0, 99.0, 0.0), "{r:?}");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("FM 100.0000"));
}

#[test]
fn eval_fails_when_a_mask_has_no_ground_truth() {
    let t = TempDir::new().unwrap();
    let src = t.path().join("corpus");
    corpus(&src, "2", "1");
    let (pred, gt) = (t.path().join("pred"), t.path().join("gt"));
    fs::create_dir(&pred).unwrap();
    fs::create_dir(&gt).unwrap();
    for name in ["a.pgm", "b.pgm"] {
        fs::copy(src.join("doc_000/gt/text.pgm"), pred.join(name)).unwrap();
    }
    fs::copy(src.join("doc_000/gt/text.pgm"), gt.join("a.pgm")).unwrap();
    let csv = t.path().join("report.csv");
    let out = run(&["eval", "--pred-dir", p(&pred), "--gt-dir", p(&gt), "--out", p(&csv)], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.pgm"));
    let rep = MetricsReport::read_csv(fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rep.rows.len(), 1);
}

/// Train all three networks on a tiny corpus and exercise every command twice.
#[test]
fn every_command_is_deterministic_and_restorations_overlay() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let src = d.join("corpus");
    corpus(&src, "3", "5");
    let manifest = src.join("manifest.json");
    let page = src.join("doc_000/degraded.ppm");
    for round in ["1", "2"] {
        let r = d.join(round);
        fs::create_dir(&r).unwrap();
        for task in ["text", "fg", "bg"] {
            let w = r.join(format!("{task}.w"));
            let csv = r.join(format!("{task}.csv"));
            ok(&["train", "--task", task, "--manifest", p(&manifest), "--out-weights", p(&w), "--loss-csv", p(&csv)], SMALL);
        }
        ok(&["gen-gt", "--in", p(&page), "--out", p(&r.join("gt"))], SMALL);
        ok(&["restore", "--method", "1", "--in", p(&page), "--weights", p(&r.join("text.w")), "--out", p(&r.join("m1"))], SMALL);
        let (fg, bg) = (r.join("fg.w"), r.join("bg.w"));
        ok(&["restore", "--method", "2", "--in", p(&page), "--weights", p(&fg), p(&bg), "--out", p(&r.join("m2"))], SMALL);
        let masks = r.join("masks");
        fs::create_dir(&masks).unwrap();
        ok(&["binarize", "--in", p(&page), "--weights", p(&r.join("text.w")), "--out", p(&masks.join("doc_000.pgm"))], SMALL);
        let gts = r.join("gts");
        fs::create_dir(&gts).unwrap();
        fs::copy(src.join("doc_000/gt/text.pgm"), gts.join("doc_000.pgm")).unwrap();
        let rep = r.join("report.csv");
        ok(&["eval", "--pred-dir", p(&masks), "--gt-dir", p(&gts), "--out", p(&rep)], &[]);
        for m in ["m1", "m2", "gt"] {
            let b = RestorationBundle::read(r.join(m)).unwrap();
            assert!(b.overlay_holds(), "{m} bundle violates the overlay invariant");
        }
    }
    assert_eq!(tree(&d.join("1")), tree(&d.join("2")));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let t = TempDir::new().unwrap();
    let cases: [(&[&str], &[&str], &str); 4] = [
        (&["synth", "--n", "1", "--out", p(t.path())], &["gmm.kk=3"], "unknown setting `gmm.kk`"),
        (&["synth", "--n", "1", "--out", p(t.path())], &["gamma=1.5"], "gamma"),
        (&["gen-gt", "--in", "/nonexistent.ppm", "--out", p(t.path())], &[], "/nonexistent.ppm"),
        (&["restore", "--method", "3", "--in", "x.ppm", "--weights", "w", "--out", p(t.path())], &[], "x.ppm"),
    ];
    for (args, settings, needle) in cases {
        let out = run(args, settings);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn config_file_then_overrides() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.conf");
    fs::write(&cfg, "# tuning\ngmm.k = 5\ngamma = 0.6\n").unwrap();
    let out = ok(&["settings", "--config", p(&cfg)], &["gamma=0.65"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gmm.k = 5\n"));
    assert!(text.contains("gamma = 0.65\n"));
    assert!(text.contains("patch.size = 256\n"));
    fs::write(&cfg, "gmm.k = 5\nbogus\n").unwrap();
    let out = run(&["settings", "--config", p(&cfg)], &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.conf:2"));
}
