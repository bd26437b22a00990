use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osstar_core::EngineRng;
use osstar_hmm::synthetic::random_lm;
use osstar_hmm::SyntheticConfig;
use rand::SeedableRng;

fn osstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osstar")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Four words that all type "228", and a random trigram model over them.
fn write_hmm_fixture(dir: &Path, seed: u64) -> (String, String) {
    let words: Vec<String> = ["act", "bat", "cat", "abu"].map(String::from).to_vec();
    let config = SyntheticConfig {
        order: 3,
        max_explicit: 4,
        seed,
        ..SyntheticConfig::default()
    };
    let mut rng = EngineRng::seed_from_u64(seed);
    let lm = random_lm(&words, &config, &mut rng).unwrap();
    let arpa = dir.join(format!("lm{seed}.arpa"));
    let vocab = dir.join("vocab.txt");
    fs::write(&arpa, lm.to_arpa()).unwrap();
    fs::write(&vocab, words.join("\n") + "\n").unwrap();
    (arpa.to_string_lossy().into_owned(), vocab.to_string_lossy().into_owned())
}

fn ngram_counts(summary: &str) -> Vec<usize> {
    summary
        .lines()
        .skip_while(|l| !l.trim_start().starts_with("order"))
        .skip(1)
        .map_while(|l| {
            let mut cols = l.split_whitespace();
            cols.next()?.parse::<usize>().ok()?;
            cols.next()?.parse().ok()
        })
        .collect()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = osstar(&["gm", "bench", "--grid", "4x4", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = osstar(&["gm", "sample", "--grid", "4by4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = osstar(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let out = osstar(&["gm", "optimize", "--model", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_writes_one_row_per_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let csv_s = csv.to_str().unwrap();
    stdout(&osstar(&[
        "gm", "bench", "--grid", "4x4", "--sigma", "0.1", "--policy", "iv", "--refinements", "40", "--seed", "1",
        "--metrics-out", csv_s,
    ]));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["refinement_index", "ar_hat", "z_hat_log", "q_mass_log", "tau_ref", "tau_samp", "tau_tot_est"]
    );
    let mass: Vec<f64> = reader.records().map(|r| r.unwrap()[3].parse().unwrap()).collect();
    assert_eq!(mass.len(), 40);
    assert!(mass.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn bench_splits_output_per_policy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    stdout(&osstar(&[
        "gm", "bench", "--grid", "3x3", "--refinements", "5", "--runs", "2", "--metrics-out", csv.to_str().unwrap(),
    ]));
    for label in ["i", "ii", "iii", "iv"] {
        for seed in [0, 1] {
            assert!(dir.path().join(format!("run-{label}-s{seed}.csv")).exists());
        }
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, args: &[&str]| {
        let path = dir.path().join(name);
        let mut full: Vec<&str> = args.to_vec();
        let p = path.to_str().unwrap().to_owned();
        full.extend(["--metrics-out", &p]);
        stdout(&osstar(&full));
        fs::read(&path).unwrap()
    };
    let bench = ["gm", "bench", "--grid", "4x4", "--policy", "ii", "--refinements", "10", "--seed", "7"];
    assert_eq!(run("a.csv", &bench), run("b.csv", &bench));
    let sample = ["gm", "sample", "--grid", "3x3", "--sigma", "0.6", "--seed", "3", "--samples", "50"];
    assert_eq!(run("c.csv", &sample), run("d.csv", &sample));

    let (arpa, vocab) = write_hmm_fixture(dir.path(), 2);
    let hmm = ["hmm", "sample", "--arpa", &arpa, "--vocab", &vocab, "--obs", "228 228 228 228", "--seed", "5"];
    assert_eq!(run("e.csv", &hmm), run("f.csv", &hmm));
}

#[test]
fn decoding_report_counts_fall_with_order() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let (arpa, vocab) = write_hmm_fixture(dir.path(), seed);
        let out = stdout(&osstar(&["hmm", "decode", "--arpa", &arpa, "--vocab", &vocab, "--obs", "228 228 228 228"]));
        assert!(out.contains("certificate"));
        let counts = ngram_counts(&out);
        assert_eq!(counts.len(), 3, "{out}");
        assert_eq!(counts[0], 16);
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {counts:?}");
    }
}

#[test]
fn decode_with_truncated_order() {
    let dir = tempfile::tempdir().unwrap();
    let (arpa, vocab) = write_hmm_fixture(dir.path(), 4);
    let out = stdout(&osstar(&["hmm", "decode", "--arpa", &arpa, "--vocab", &vocab, "--obs", "228 228", "--order", "2"]));
    assert_eq!(ngram_counts(&out).len(), 2);
    let out = osstar(&["hmm", "decode", "--arpa", &arpa, "--vocab", &vocab, "--obs", "228 9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_ising_round_trips_through_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    stdout(&osstar(&["gen", "ising", "--grid", "2x3", "--sigma", "0.4", "--seed", "8", "--out", model.to_str().unwrap()]));
    let a = stdout(&osstar(&["gm", "optimize", "--model", model.to_str().unwrap()]));
    let b = stdout(&osstar(&["gm", "optimize", "--grid", "2x3", "--sigma", "0.4", "--seed", "8"]));
    let argmax = |s: &str| s.lines().find(|l| l.starts_with("argmax")).unwrap().to_owned();
    assert_eq!(argmax(&a), argmax(&b));
}

#[test]
fn selftest_passes() {
    let out = stdout(&osstar(&["selftest"]));
    assert_eq!(out.lines().count(), 6);
    assert!(!out.contains("FAIL"), "{out}");
}
