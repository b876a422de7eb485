//! Command-line surface: load or select protocols, run classification and
//! bound checks, execute parameter sweeps, emit deterministic tables.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 parse/unknown input,
//! 3 validity error, 4 resource cap exceeded.

mod document;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfsim_core::bounds::{case_rng, sweep_protocol_family};
use cfsim_core::{
    check_n1_bounds, check_probability_sum_bound, classify, defer_measurements, expand, gallery,
    min_sum_squares, random_protocol, Amp, ClassifyOptions, Error as CoreError, ExpandOptions,
    Protocol, RandomProtocolConfig,
};
use document::{load_protocol, DocError};

#[derive(Parser)]
#[command(name = "cfsim", version, about = "Counterfactual-computation protocol laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Args)]
struct Common {
    /// Algebraic comparison tolerance for validity checks.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Threshold below which a probability counts as zero in classification.
    #[arg(long = "zero-tol", default_value_t = 1e-9)]
    zero_tol: f64,
    /// Seed for randomized suites; recorded in output headers.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Hard cap on history-tree leaves.
    #[arg(long = "leaf-cap")]
    leaf_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for internal parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Gallery parameter override, e.g. --param N=4 (repeatable).
    #[arg(long = "param", value_parser = parse_param)]
    param: Vec<(String, f64)>,
}

impl Common {
    fn params(&self) -> BTreeMap<String, f64> {
        self.param.iter().cloned().collect()
    }

    fn expand_options(&self) -> ExpandOptions {
        let mut opts = ExpandOptions::default();
        if let Some(cap) = self.leaf_cap {
            opts.leaf_cap = cap;
        }
        opts
    }

    fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            zero_tol: self.zero_tol,
            expand: self.expand_options(),
            ..ClassifyOptions::default()
        }
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or("expected key=value")?;
    let value: f64 = value.parse().map_err(|e| format!("bad value for '{key}': {e}"))?;
    Ok((key.to_string(), value))
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand one variant's history tree and print every leaf.
    Run {
        /// Document path or gallery:<name>.
        input: String,
        #[arg(long, default_value_t = 0)]
        variant: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Classify the realizable outcome sequences of a protocol.
    Classify {
        /// Document path or gallery:<name>.
        input: String,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a protocol family over a parameter grid.
    Sweep {
        /// Family name: example1, example2, or karm.
        family: String,
        /// Grid: comma list "0.2,0.1" or inclusive range "start:stop:count".
        #[arg(long)]
        grid: String,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite over the gallery and/or random protocols.
    Verify {
        /// Scope: all, gallery, or random.
        #[arg(default_value = "all")]
        scope: String,
        #[arg(long, default_value_t = 200)]
        cases: u64,
        #[command(flatten)]
        common: Common,
    },
}

/// 12 significant digits, locale-independent; acceptance comparisons are
/// textual.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Validity(String),
    Invariant(String),
    ResourceCap(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validity(_) => 3,
            CliError::ResourceCap(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Validity(m)
            | CliError::Invariant(m)
            | CliError::ResourceCap(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::LeafCapExceeded { .. } => CliError::ResourceCap(e.to_string()),
            CoreError::InvariantViolation(_) => CliError::Invariant(e.to_string()),
            other => CliError::Validity(other.to_string()),
        }
    }
}

impl From<DocError> for CliError {
    fn from(e: DocError) -> CliError {
        match e {
            DocError::Parse(m) => CliError::Parse(m),
            DocError::Core(c) => c.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfsim: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.cmd {
        Cmd::Run { common, .. }
        | Cmd::Classify { common, .. }
        | Cmd::Sweep { common, .. }
        | Cmd::Verify { common, .. } => common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Parse(format!("--threads: {e}")))?;
    }
    match cli.cmd {
        Cmd::Run { input, variant, common } => cmd_run(&input, variant, &common),
        Cmd::Classify { input, common } => cmd_classify(&input, &common),
        Cmd::Sweep { family, grid, output, common } => cmd_sweep(&family, &grid, output, &common),
        Cmd::Verify { scope, cases, common } => cmd_verify(&scope, cases, &common),
    }
}

/// A table printed as CSV or aligned text.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    fn print(&self, format: Format) {
        let mut out = std::io::stdout().lock();
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.header.join(",")).unwrap();
                for row in &self.rows {
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
            }
            Format::Text => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(cell.len());
                    }
                }
                let fmt_row = |cells: &[String]| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:<w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                writeln!(out, "{}", fmt_row(&self.header)).unwrap();
                for row in &self.rows {
                    writeln!(out, "{}", fmt_row(row)).unwrap();
                }
                for line in &self.footer {
                    writeln!(out, "{line}").unwrap();
                }
            }
        }
    }
}

fn cmd_run(input: &str, variant: usize, common: &Common) -> Result<(), CliError> {
    let p = load_protocol(input, &common.params())?;
    let tree = expand(&p, variant, common.expand_options())?;
    let total = p.layout.total_dim();
    let mut header = vec![
        "history".to_string(),
        "halted".to_string(),
        "pruned".to_string(),
        "probability".to_string(),
    ];
    for i in 0..total {
        header.push(format!("re{i}"));
        header.push(format!("im{i}"));
    }
    let mut rows = Vec::new();
    for leaf in &tree.leaves {
        let mut row = vec![
            leaf.label_string(),
            leaf.halted.to_string(),
            leaf.pruned_zero.to_string(),
            fmt12(leaf.terminal.norm_sqr()),
        ];
        for a in leaf.terminal.amps() {
            row.push(fmt12(a.re));
            row.push(fmt12(a.im));
        }
        rows.push(row);
    }
    let footer = vec![format!(
        "histories: {}   sum |v_h|^2 = {}",
        tree.leaves.len(),
        fmt12(tree.normalization_check())
    )];
    Table { header, rows, footer }.print(common.format);
    Ok(())
}

fn render_record(m: &[(usize, String)]) -> String {
    m.iter().map(|(step, label)| format!("{step}:{label}")).collect::<Vec<_>>().join(";")
}

fn cmd_classify(input: &str, common: &Common) -> Result<(), CliError> {
    let p = load_protocol(input, &common.params())?;
    let report = classify(&p, &common.classify_options())?;
    let variants = report.p.len();
    let mut header = vec!["m".to_string(), "type".to_string(), "probability".to_string()];
    for r in 0..variants {
        header.push(format!("p_{r}"));
    }
    header.push("p_sum".to_string());
    header.push("margin".to_string());
    // margin of the p-sum bound, defined only for common-off two-variant
    // families
    let margin = if report.common_off && variants == 2 {
        fmt12(1.0 - report.p_sum())
    } else {
        "nan".to_string()
    };
    let mut rows = Vec::new();
    for o in &report.outcomes {
        let mut row =
            vec![render_record(&o.m), o.r.to_string(), fmt12(o.probability)];
        for &pr in &report.p {
            row.push(fmt12(pr));
        }
        row.push(fmt12(report.p_sum()));
        row.push(margin.clone());
        rows.push(row);
    }
    let footer = vec![format!(
        "insertions: {}   p_sum = {}   margin = {margin}",
        report.insertions,
        fmt12(report.p_sum())
    )];
    Table { header, rows, footer }.print(common.format);
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Parse(format!("bad grid '{spec}': {m}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count".into()));
        }
        let start: f64 = parts[0].parse().map_err(|e| bad(format!("{e}")))?;
        let stop: f64 = parts[1].parse().map_err(|e| bad(format!("{e}")))?;
        let count: usize = parts[2].parse().map_err(|e| bad(format!("{e}")))?;
        if count < 2 {
            return Err(bad("count must be at least 2".into()));
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    spec.split(',').map(|t| t.trim().parse().map_err(|e| bad(format!("{e}")))).collect()
}

fn cmd_sweep(
    family: &str,
    grid_spec: &str,
    output: Option<PathBuf>,
    common: &Common,
) -> Result<(), CliError> {
    let grid = parse_grid(grid_spec)?;
    let params = common.params();
    let opts = common.classify_options();
    let result = match family {
        "example1" => sweep_protocol_family(&grid, &opts, |n| {
            if n < 1.0 || n.fract() != 0.0 {
                return Err(CoreError::InvalidParameter(format!("N must be a positive integer, got {n}")));
            }
            gallery::example1(n as usize, None)
        }),
        "example2" => sweep_protocol_family(&grid, &opts, gallery::example2),
        "karm" => {
            let k = params.get("K").copied().unwrap_or(3.0) as usize;
            sweep_protocol_family(&grid, &opts, move |b| gallery::karm(k, b, None))
        }
        other => return Err(CliError::Parse(format!("unknown sweep family '{other}'"))),
    }?;

    let variants = result.points.first().map_or(0, |pt| pt.p.len());
    let mut text = format!(
        "# cfsim sweep family={family} grid={grid_spec} seed={} zero_tol={}\n",
        common.seed,
        fmt12(common.zero_tol)
    );
    text.push_str("param,insertions");
    for r in 0..variants {
        text.push_str(&format!(",p_{r}"));
    }
    text.push_str(",p_sum,n_margin\n");
    for pt in &result.points {
        text.push_str(&fmt12(pt.param));
        text.push_str(&format!(",{}", pt.insertions));
        for &pr in &pt.p {
            text.push_str(&format!(",{}", fmt12(pr)));
        }
        text.push_str(&format!(",{},{}\n", fmt12(pt.p_sum), fmt12(pt.n_margin)));
    }
    match output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Parse(format!("cannot write '{}': {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

struct VerifyLog {
    failures: usize,
}

impl VerifyLog {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("ok    {name}");
        } else {
            println!("FAIL  {name}: {detail}");
            self.failures += 1;
        }
    }
}

fn verify_protocol(
    log: &mut VerifyLog,
    name: &str,
    p: &Protocol,
    defer: bool,
    common: &Common,
) -> Result<(), CliError> {
    for r in 0..p.computer.variant_count() {
        let tree = expand(p, r, common.expand_options())?;
        let dev = (tree.normalization_check() - 1.0).abs();
        log.check(
            &format!("{name}: normalization variant {r}"),
            dev < common.tolerance,
            format!("deviation {dev:e}"),
        );
    }
    let report = classify(p, &common.classify_options())?;
    if report.common_off && report.p.len() == 2 {
        let check = check_probability_sum_bound(&report)?;
        log.check(
            &format!("{name}: p_0 + p_1 <= 1"),
            check.passed,
            format!("p_sum = {}", fmt12(check.lhs)),
        );
        if report.insertions == 1 {
            for check in check_n1_bounds(&report)? {
                log.check(
                    &format!("{name}: {}", check.name),
                    check.passed,
                    format!("lhs = {}", fmt12(check.lhs)),
                );
            }
        }
    }
    if defer {
        let deferred = defer_measurements(p)?;
        let final_step = *deferred.measurement_steps().last().unwrap();
        let mut ok = true;
        let mut detail = String::new();
        for r in 0..p.computer.variant_count() {
            let original = expand(p, r, common.expand_options())?;
            let shadow = expand(&deferred, r, common.expand_options())?;
            for record in original.maximal_outcomes() {
                let prob = original.outcome_probability(&record)?;
                let labels: Vec<String> = record.iter().map(|(_, l)| l.clone()).collect();
                let deferred_prob =
                    shadow.outcome_probability(&[(final_step, labels.join(","))])?;
                if (prob - deferred_prob).abs() >= common.tolerance {
                    ok = false;
                    detail = format!(
                        "variant {r} outcome {}: {} vs {}",
                        render_record(&record),
                        fmt12(prob),
                        fmt12(deferred_prob)
                    );
                }
            }
        }
        log.check(&format!("{name}: deferral equivalence"), ok, detail);
    }
    Ok(())
}

fn cmd_verify(scope: &str, cases: u64, common: &Common) -> Result<(), CliError> {
    if !matches!(scope, "all" | "gallery" | "random") {
        return Err(CliError::Parse(format!("unknown scope '{scope}'")));
    }
    let mut log = VerifyLog { failures: 0 };
    if scope != "random" {
        for entry in gallery::gallery_entries() {
            let mut params = BTreeMap::new();
            // deferral appends one pointer register per measurement; the
            // 16-round karm default would need gigabytes, so pin it short
            if entry.name == "karm" {
                params.insert("steps".to_string(), 4.0);
            }
            let p = (entry.build)(&params)?;
            verify_protocol(&mut log, entry.name, &p, true, common)?;
        }
    }
    if scope != "gallery" {
        let config = RandomProtocolConfig::default();
        for case in 0..cases {
            let mut rng = case_rng(common.seed, case);
            let p = random_protocol(&config, &mut rng)?;
            let report = classify(&p, &common.classify_options())?;
            let check = check_probability_sum_bound(&report)?;
            if !check.passed {
                log.check(
                    &format!("random case {case}: p_0 + p_1 <= 1"),
                    false,
                    format!("p_sum = {}", fmt12(check.lhs)),
                );
            }
        }
        log.check(&format!("random suite: {cases} protocols, p-sum bound"), true, String::new());

        let mut rng = case_rng(common.seed, u64::MAX);
        let mut violations = 0usize;
        for _ in 0..10_000 {
            use rand::Rng;
            let k = rng.gen_range(1..8usize);
            let xs: Vec<Amp> = (0..k)
                .map(|_| Amp::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let coherent: Amp = xs.iter().sum();
            let incoherent: f64 = xs.iter().map(|x| x.norm_sqr()).sum();
            if incoherent + 1e-12 < min_sum_squares(coherent.norm_sqr(), k)? {
                violations += 1;
            }
        }
        log.check(
            "random suite: 10^4 minimization-inequality tuples",
            violations == 0,
            format!("{violations} violations"),
        );
    }
    if log.failures > 0 {
        return Err(CliError::Invariant(format!("{} check(s) failed", log.failures)));
    }
    println!("all checks passed");
    Ok(())
}
