use std::io::Write;
use std::process::{Command, Output, Stdio};

fn finitary(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_finitary"))
        .args(args)
        .env_remove("FINITARY_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn config(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("finitary-{}-{name}.cfg", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

fn lcg_symbols(a: u64, n: usize, mut state: u64) -> String {
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % a + 1).to_string()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn extract_prints_the_triple() {
    let o = finitary(&["extract", "--a", "2", "--t", "3", "--word", "1 1 2"], "");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "N=1 F=1 G=3\n");
    let o = finitary(&["extract", "--a", "2", "--t", "3"], "1 1 2\n");
    assert_eq!(stdout(&o), "N=1 F=1 G=3\n");
}

#[test]
fn extract_rejects_words_with_the_marker() {
    let o = finitary(&["extract", "--a", "2", "--t", "2", "--word", "2 1"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn verify_bounds_passes_for_a_skewed_coin() {
    let o = finitary(&["verify-bounds", "--q", "1/3,2/3", "--kmax", "20"], "");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "tail.20"), "3/1048576");
    assert_eq!(value(&text, "verdict"), "pass");
}

#[test]
fn verify_bounds_reports_fair_coin_violations_of_the_tight_constant() {
    let o = finitary(&["verify-bounds", "--q", "1/2,1/2", "--kmax", "6"], "");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "tight_constant_violations"), "2,3,4,5,6");
    assert_eq!(value(&text, "doubled_constant_violations"), "none");
}

#[test]
fn verify_bounds_runs_the_extractor_suite() {
    let o = finitary(&["verify-bounds", "--q", "1/2,1/2", "--a", "2", "--t", "3", "--p", "1/3,2/3", "--len", "5"], "");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "extractor.3"), "7\tpass");
}

#[test]
fn encode_exhausts_a_tiny_window() {
    let path = config("tiny", "a=2\nq=1/2,1/2\nt=2\nmax_window=1\n");
    let o = finitary(&["encode", "--config", path.to_str().unwrap()], "2 1 2 1 1 1 1 1 1\n");
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o), "\n");
    let o = finitary(&["encode", "--config", path.to_str().unwrap(), "--max-window", "1000"], "2 1 2 1 1 1 1 1 1\n");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn encode_reports_radii_and_is_reproducible() {
    let input = lcg_symbols(3, 3000, 11);
    let args = ["encode", "--a", "3", "--q", "1/2,1/2", "--t", "3", "--report"];
    let first = finitary(&args, &input);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let text = stdout(&first);
    let mut lines = text.lines();
    let symbols: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let reports: Vec<Vec<usize>> = lines
        .map(|l| l.split('\t').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert!(symbols.len() > 1000);
    assert_eq!(symbols.len(), reports.len());
    for (s, r) in symbols.iter().zip(&reports) {
        assert_eq!(s.parse::<usize>().unwrap(), r[1]);
        assert!((1..=2).contains(&r[1]));
        assert!(r[2] > 0);
    }
    assert!(reports.windows(2).all(|w| w[0][0] < w[1][0]));
    assert_eq!(stdout(&finitary(&args, &input)), text);
}

#[test]
fn encode_uses_the_selector_when_t_is_absent() {
    let input = lcg_symbols(3, 500, 5);
    let selected = finitary(&["encode", "--a", "3", "--q", "1/2,1/2", "--eps", "2/5"], &input);
    let explicit = finitary(&["encode", "--a", "3", "--q", "1/2,1/2", "--t", "6"], &input);
    assert_eq!(selected.status.code(), Some(0));
    assert_eq!(stdout(&selected), stdout(&explicit));
    let o = finitary(&["encode", "--a", "3", "--q", "1/2,1/2"], &input);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_one() {
    let o = finitary(&["encode", "--a", "2", "--q", "1/2,1/2", "--t", "2"], "1 3 1\n");
    assert_eq!(o.status.code(), Some(1));
    let path = config("bad", "a=1\nq=1\n");
    let o = finitary(&["encode", "--config", path.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a must be ≥ 2"));
    let path = config("sum", "q=1/2,1/3\n");
    let o = finitary(&["select-t", "--config", path.to_str().unwrap()], "");
    assert!(String::from_utf8_lossy(&o.stderr).contains("sum ≠ 1"));
    assert_eq!(finitary(&["bogus"], "").status.code(), Some(1));
    assert_eq!(finitary(&["select-t", "--q", "1/2,1/2", "--eps", "2/5", "--a", "x"], "").status.code(), Some(1));
}

#[test]
fn simulate_reads_bits() {
    let o = finitary(&["simulate", "--q", "1/3,2/3", "--bits", "0110"], "");
    assert_eq!(stdout(&o), "T\t3\nS\t2\n");
    let o = finitary(&["simulate", "--q", "1/2,1/2", "--len", "2"], "01 10 1\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "S"), "1 2");
    let o = finitary(&["simulate", "--q", "1/2,1/2", "--bits", "0"], "");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn select_t_matches_the_worked_example() {
    let o = finitary(&["select-t", "--q", "1/2,1/2", "--eps", "2/5", "--a", "3"], "");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "t"), "6");
}

#[test]
fn certify_t_verdicts_and_seed_fallback() {
    let args = ["certify-t", "--a", "3", "--q", "1/2,1/2", "--t", "6", "--trials", "300"];
    let o = finitary(&[&args[..], &["--seed", "4"]].concat(), "");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "seed"), "4");
    let from_env = Command::new(env!("CARGO_BIN_EXE_finitary"))
        .args(args)
        .env("FINITARY_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(from_env.stdout, o.stdout);
    let short = finitary(&["certify-t", "--a", "3", "--q", "1/2,1/2", "--t", "6", "--trials", "10"], "");
    assert_eq!(short.status.code(), Some(3));
    assert_eq!(value(&stdout(&short), "verdict"), "inconclusive");
    let zero_gap = finitary(&["certify-t", "--a", "2", "--q", "1/2,1/2", "--t", "3", "--trials", "400"], "");
    assert_eq!(zero_gap.status.code(), Some(3));
}

#[test]
fn analyze_accepts_balanced_and_rejects_constant_streams() {
    let balanced = lcg_symbols(2, 20_000, 3);
    let o = finitary(&["analyze", "--q", "1/2,1/2"], &balanced);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(value(&stdout(&o), "pairs.df"), "3");
    let constant = vec!["1"; 1000].join(" ");
    let o = finitary(&["analyze", "--q", "1/2,1/2"], &constant);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(finitary(&["analyze", "--q", "1/2,1/2"], "").status.code(), Some(1));
}

#[test]
fn tails_fits_a_geometric_sample() {
    let mut samples = Vec::new();
    for n in 0..11u32 {
        let count = if n == 10 { 2 } else { 1 << (10 - n) };
        samples.extend(std::iter::repeat_n(n.to_string(), count));
    }
    let o = finitary(&["tails"], &samples.join("\n"));
    assert_eq!(o.status.code(), Some(0));
    let ratio: f64 = value(&stdout(&o), "ratio").parse().unwrap();
    assert!((ratio - 0.5).abs() < 1e-9);
    assert_eq!(finitary(&["tails"], "1 2 3").status.code(), Some(1));
}
