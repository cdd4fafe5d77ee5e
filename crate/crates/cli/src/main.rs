mod config;

use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finitary_core::calibration::{
    certify_marker_length, chi_square, pair_counts, product_law, select_marker_length, symbol_counts,
    tail_fit, verify_extractor, verify_simu1, Verdict,
};
use finitary_core::dyadic::simulate;
use finitary_core::engine::{encode, EngineParams, DEFAULT_MAX_WINDOW};
use finitary_core::extractor::{extract, PatternConfig};
use finitary_core::{parse_rational, parse_rational_list, BitString, ProbabilityVector, Rational, SymbolWord};

use config::parse_config;

/// Finitary coding of i.i.d. processes: encoder, simulator, extractor and calibration tools.
#[derive(Debug, Parser)]
#[command(name = "finitary", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a symbol stream read from stdin.
    Encode,
    /// Simulate `--len` symbols of q from a bit string.
    Simulate,
    /// Print (N, F, G) for one pattern-free word.
    Extract,
    /// Choose the marker length for (q, eps, a).
    SelectT,
    /// Estimate extracted bits per block and compare with the simulation cost.
    CertifyT,
    /// Exact tail and mean checks of the simulation, optionally the extractor suite.
    VerifyBounds,
    /// Chi-square of an output stream (stdin) against q and q⊗q.
    Analyze,
    /// Exponential tail fit of non-negative integers read from stdin.
    Tails,
}

#[derive(Debug, Args)]
struct Flags {
    /// key=value file with a, q, eps, t, seed, max_window; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Target law, comma-separated rationals.
    #[arg(long, global = true)]
    q: Option<String>,
    /// Source law, comma-separated rationals (certify-t, verify-bounds).
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    t: Option<usize>,
    #[arg(long, global = true)]
    a: Option<usize>,
    #[arg(long, global = true, default_value_t = 20)]
    kmax: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    trials: usize,
    #[arg(long, global = true, env = "FINITARY_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_window: Option<usize>,
    /// Per-index "i<TAB>symbol<TAB>W" lines after the output.
    #[arg(long, global = true)]
    report: bool,
    /// Word for `extract` instead of stdin.
    #[arg(long, global = true)]
    word: Option<String>,
    /// Bits for `simulate` instead of stdin.
    #[arg(long, global = true)]
    bits: Option<String>,
    /// Horizon for `simulate`; longest word length for the extractor suite.
    #[arg(long, global = true)]
    len: Option<usize>,
}

enum Status {
    Ok,
    Exhausted,
    Failed,
}

type Outcome = Result<Status, String>;

struct Settings {
    flags: Flags,
    a: Option<usize>,
    q: Option<ProbabilityVector>,
    eps: Option<Rational>,
    t: Option<usize>,
    seed: u64,
    max_window: usize,
}

fn law(text: &str) -> Result<ProbabilityVector, String> {
    parse_rational_list(text)
        .and_then(ProbabilityVector::new)
        .map_err(|e| e.to_string())
}

impl Settings {
    fn load(flags: Flags) -> Result<Self, String> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Some(parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?)
            }
            None => None,
        };
        let q = match &flags.q {
            Some(text) => Some(law(text)?),
            None => file.as_ref().map(|c| c.q.clone()),
        };
        let eps = match &flags.eps {
            Some(text) => Some(parse_rational(text).map_err(|e| e.to_string())?),
            None => file.as_ref().and_then(|c| c.eps.clone()),
        };
        Ok(Settings {
            a: flags.a.or(file.as_ref().map(|c| c.a)),
            t: flags.t.or(file.as_ref().and_then(|c| c.t)),
            seed: flags.seed.or(file.as_ref().and_then(|c| c.seed)).unwrap_or(0),
            max_window: flags
                .max_window
                .or(file.as_ref().map(|c| c.max_window))
                .unwrap_or(DEFAULT_MAX_WINDOW),
            q,
            eps,
            flags,
        })
    }

    fn a(&self) -> Result<usize, String> {
        self.a.ok_or_else(|| "missing --a".to_string())
    }

    fn q(&self) -> Result<&ProbabilityVector, String> {
        self.q.as_ref().ok_or_else(|| "missing --q".to_string())
    }

    fn eps(&self) -> Result<&Rational, String> {
        self.eps.as_ref().ok_or_else(|| "missing --eps".to_string())
    }

    /// `--t`, or the selector's choice for `(q, eps, a)`.
    fn marker_len(&self, a: usize) -> Result<usize, String> {
        match self.t {
            Some(t) => Ok(t),
            None => select_marker_length(self.q()?, self.eps()?, a)
                .map(|s| s.t)
                .map_err(|e| e.to_string()),
        }
    }
}

fn read_stdin(input: &mut dyn Read) -> Result<String, String> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| format!("stdin: {e}"))?;
    Ok(text)
}

fn io_err(e: io::Error) -> String {
    format!("stdout: {e}")
}

fn run_encode(s: &Settings, input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let a = s.a()?;
    let q = s.q()?.clone();
    let t = s.marker_len(a)?;
    let cfg = PatternConfig::new(a, t).map_err(|e| e.to_string())?;
    let x = SymbolWord::parse(&read_stdin(input)?, a).map_err(|e| e.to_string())?;
    let params = EngineParams::new(cfg, q).with_max_window(s.max_window);
    let result = encode(&x, &params).map_err(|e| e.to_string())?;
    let symbols: Vec<String> = result.determined().map(|(_, v)| v.to_string()).collect();
    writeln!(out, "{}", symbols.join(" ")).map_err(io_err)?;
    if s.flags.report {
        for (i, v) in result.determined() {
            let w = result.report(i).map(|r| r.radius).unwrap_or_default();
            writeln!(out, "{i}\t{v}\t{w}").map_err(io_err)?;
        }
    }
    let undetermined = result.undetermined().len();
    if undetermined > 0 {
        eprintln!("{undetermined} of {} indices not determined by the input", x.len());
    }
    if !result.violations.is_empty() {
        eprintln!("schedule invariant violations: {:?}", result.violations);
        return Ok(Status::Failed);
    }
    if !result.capped.is_empty() {
        eprintln!(
            "window exhausted: {} indices hit max_window={}",
            result.capped.len(),
            s.max_window
        );
        return Ok(Status::Exhausted);
    }
    Ok(Status::Ok)
}

fn run_simulate(s: &Settings, input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let q = s.q()?;
    let text = match &s.flags.bits {
        Some(b) => b.clone(),
        None => read_stdin(input)?,
    };
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bits: BitString = compact.parse().map_err(|e: finitary_core::DistributionError| e.to_string())?;
    let (t, symbols) = simulate(q, s.flags.len.unwrap_or(1), &bits).map_err(|e| e.to_string())?;
    writeln!(out, "T\t{t}").map_err(io_err)?;
    writeln!(out, "S\t{}", SymbolWord::new(symbols, q.len()).map_err(|e| e.to_string())?).map_err(io_err)?;
    Ok(Status::Ok)
}

fn run_extract(s: &Settings, input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let a = s.a()?;
    let cfg = PatternConfig::new(a, s.marker_len(a)?).map_err(|e| e.to_string())?;
    let text = match &s.flags.word {
        Some(w) => w.clone(),
        None => read_stdin(input)?,
    };
    let word = SymbolWord::parse(&text, a).map_err(|e| e.to_string())?;
    let triple = extract(&word, &cfg).map_err(|e| e.to_string())?;
    writeln!(out, "{triple}").map_err(io_err)?;
    Ok(Status::Ok)
}

fn run_select(s: &Settings, out: &mut dyn Write) -> Outcome {
    let a = s.a()?;
    let sel = select_marker_length(s.q()?, s.eps()?, a).map_err(|e| e.to_string())?;
    write!(
        out,
        "t\t{}\ndelta\t{}\nu_min\t{}\nmargin_bits\t{}\n",
        sel.t, sel.delta, sel.u_min, sel.margin_bits
    )
    .map_err(io_err)?;
    Ok(Status::Ok)
}

fn run_certify(s: &Settings, out: &mut dyn Write) -> Outcome {
    let p = match (&s.flags.p, s.a) {
        (Some(text), _) => law(text)?,
        (None, Some(a)) => ProbabilityVector::uniform(a),
        (None, None) => return Err("missing --p or --a".to_string()),
    };
    if let Some(a) = s.a.filter(|&a| a != p.len()) {
        return Err(format!("--p has {} entries but a={a}", p.len()));
    }
    let t = s.marker_len(p.len())?;
    let r = certify_marker_length(&p, s.q()?, t, s.flags.trials, s.seed).map_err(|e| e.to_string())?;
    write!(
        out,
        "t\t{}\ntrials\t{}\nseed\t{}\nmean_bits\t{}\nstderr\t{}\nmean_block_length\t{}\nbound\t{}\nmargin\t{}\nverdict\t{}\n",
        r.t, r.trials, r.seed, r.mean_bits, r.stderr, r.mean_block_length, r.bound, r.margin, r.verdict
    )
    .map_err(io_err)?;
    Ok(if r.verdict == Verdict::Pass { Status::Ok } else { Status::Failed })
}

fn list(ks: &[usize]) -> String {
    if ks.is_empty() {
        return "none".to_string();
    }
    ks.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn run_verify(s: &Settings, out: &mut dyn Write) -> Outcome {
    let q = s.q()?;
    let rep = verify_simu1(q, s.flags.kmax);
    for (k, p) in rep.tail.tail.iter().enumerate() {
        writeln!(out, "tail.{k}\t{p}").map_err(io_err)?;
    }
    write!(
        out,
        "mean_lo\t{}\nmean_hi\t{}\nmean_bound\t{}\nmean_within_bound\t{}\ntight_constant_violations\t{}\ndoubled_constant_violations\t{}\n",
        rep.mean_lo,
        rep.mean_hi,
        rep.mean_bound,
        rep.mean_within_bound(),
        list(&rep.tail.tight_constant_violations),
        list(&rep.tail.doubled_constant_violations),
    )
    .map_err(io_err)?;
    let mut passed = rep.passed();
    if let (Some(a), Some(t)) = (s.a, s.t) {
        let mut laws = vec![ProbabilityVector::uniform(a)];
        if let Some(text) = &s.flags.p {
            laws.push(law(text)?);
        }
        let ext = verify_extractor(a, t, s.flags.len.unwrap_or(6), &laws).map_err(|e| e.to_string())?;
        for row in &ext.rows {
            writeln!(out, "extractor.{}\t{}\t{}", row.n, row.words, if row.passed() { "pass" } else { "fail" })
                .map_err(io_err)?;
        }
        passed &= ext.passed();
    }
    writeln!(out, "verdict\t{}", if passed { "pass" } else { "fail" }).map_err(io_err)?;
    Ok(if passed { Status::Ok } else { Status::Failed })
}

const SIGNIFICANCE: f64 = 1e-3;

fn run_analyze(s: &Settings, input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let q = s.q()?;
    let b = q.len();
    let y = SymbolWord::parse(&read_stdin(input)?, b).map_err(|e| e.to_string())?;
    let single = chi_square(&symbol_counts(&y, b), q).map_err(|e| e.to_string())?;
    let pairs = chi_square(&pair_counts(&y, b), &product_law(q)).map_err(|e| e.to_string())?;
    write!(
        out,
        "symbols\t{}\nsingle.statistic\t{}\nsingle.df\t{}\nsingle.p_value\t{}\npairs.statistic\t{}\npairs.df\t{}\npairs.p_value\t{}\n",
        y.len(),
        single.statistic,
        single.df,
        single.p_value,
        pairs.statistic,
        pairs.df,
        pairs.p_value
    )
    .map_err(io_err)?;
    let passed = single.p_value > SIGNIFICANCE && pairs.p_value > SIGNIFICANCE;
    writeln!(out, "verdict\t{}", if passed { "pass" } else { "fail" }).map_err(io_err)?;
    Ok(if passed { Status::Ok } else { Status::Failed })
}

fn run_tails(input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let samples = read_stdin(input)?
        .split_whitespace()
        .map(|tok| tok.parse::<u64>().map_err(|_| format!("not a non-negative integer: {tok:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = tail_fit(&samples).map_err(|e| e.to_string())?;
    write!(
        out,
        "samples\t{}\npoints\t{}\nslope\t{}\nintercept\t{}\nratio\t{}\nr_squared\t{}\n",
        samples.len(),
        fit.points,
        fit.slope,
        fit.intercept,
        fit.slope.exp(),
        fit.r_squared
    )
    .map_err(io_err)?;
    Ok(Status::Ok)
}

fn run(cli: Cli, input: &mut dyn Read, out: &mut dyn Write) -> Outcome {
    let s = Settings::load(cli.flags)?;
    match cli.command {
        Command::Encode => run_encode(&s, input, out),
        Command::Simulate => run_simulate(&s, input, out),
        Command::Extract => run_extract(&s, input, out),
        Command::SelectT => run_select(&s, out),
        Command::CertifyT => run_certify(&s, out),
        Command::VerifyBounds => run_verify(&s, out),
        Command::Analyze => run_analyze(&s, input, out),
        Command::Tails => run_tails(input, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let status = run(cli, &mut io::stdin().lock(), &mut out);
    let _ = out.flush();
    match status {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Exhausted) => ExitCode::from(2),
        Ok(Status::Failed) => ExitCode::from(3),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
