//! Command-line front end. [`run_cli`] is the whole program minus process
//! exit, so it can be driven from tests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::admissibility::{check, nagumo_bound, scan_k, KInterval, NagumoData};
use crate::config::{builtin, ProblemConfig};
use crate::error::{Error, Result};
use crate::grid::{solver_grid, GridFunction};
use crate::kernel::{kernel_table, GreenKernel, Regime, ShiftedOperator};
use crate::linear_bvp::{solve_linear, LinearRhs};
use crate::monotone::{run, verify_initial_bracket, BracketOrder, BracketReport, IterationTrace};
use crate::oracle::{fd_linear, fd_nonlinear_with, NewtonOptions};

#[derive(Debug, Parser)]
#[command(name = "mibvp", version, about = "Monotone iteration for four-point boundary value problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility report for k and the initial bracket
    Check(Common),
    /// Admissible k intervals and the margin table
    ScanK(Common),
    /// Run the monotone iteration
    Solve(Common),
    /// Green's kernel on a uniform grid
    GreensDump(Common),
    /// Compare the iteration against the finite-difference oracle
    OracleCompare(Common),
    /// Nagumo derivative bound
    Nagumo(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file, or `example1` / `example2` for a bundled one
    pub config: String,
    /// Shift k; overrides the file's value or range
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Solver grid size (table size for greens-dump)
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Stopping tolerance on the step moves
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Directory for output files; without it results go to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match dispatch(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<ProblemConfig> {
    load_with(common, true)
}

fn load_with(common: &Common, apply_grid: bool) -> Result<ProblemConfig> {
    let path = Path::new(&common.config);
    let mut cfg = if !path.exists() {
        builtin(&common.config)
            .ok_or_else(|| Error::Config(format!("cannot read {}: no such file", common.config)))?
    } else {
        ProblemConfig::load(path)?
    };
    if let Some(k) = common.k {
        cfg.k = crate::config::KSpec::Value(k);
    }
    if let (true, Some(n)) = (apply_grid, common.grid_n) {
        cfg.grid_n = n;
    }
    if let Some(t) = common.tol {
        cfg.tol = t;
    }
    if let Some(m) = common.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scalar_k(cfg: &ProblemConfig) -> Result<f64> {
    cfg.k_value().ok_or_else(|| Error::InvalidArgument("this command needs a single k; pass --k".into()))
}

/// Collected outputs of one command, written at the end.
struct Outputs<'a> {
    dir: Option<&'a Path>,
    files: Vec<(String, String)>,
}

impl<'a> Outputs<'a> {
    fn add(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn finish(self, command: &str, common: &Common, stdout: &mut dyn Write, primary: &str) -> Result<()> {
        match self.dir {
            None => {
                let body =
                    self.files.iter().find(|(n, _)| n == primary).map(|(_, b)| b.as_str()).unwrap_or("");
                stdout.write_all(body.as_bytes())?;
            }
            Some(dir) => {
                fs::create_dir_all(dir)?;
                for (name, body) in &self.files {
                    fs::write(dir.join(name), body)?;
                }
                fs::write(dir.join("meta.json"), meta(command, common))?;
                for (name, _) in &self.files {
                    writeln!(stdout, "{}", dir.join(name).display())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a str,
    k: Option<f64>,
    grid_n: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    unix_time: u64,
}

fn meta(command: &str, c: &Common) -> String {
    let unix_time =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let m = Meta {
        tool: "mibvp",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: &c.config,
        k: c.k,
        grid_n: c.grid_n,
        tol: c.tol,
        max_iter: c.max_iter,
        unix_time,
    };
    serde_json::to_string_pretty(&m).expect("meta serializes") + "\n"
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("result serializes") + "\n"
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Check(c) => cmd_check(c, stdout),
        Command::ScanK(c) => cmd_scan(c, stdout),
        Command::Solve(c) => cmd_solve(c, stdout),
        Command::GreensDump(c) => cmd_greens(c, stdout),
        Command::OracleCompare(c) => cmd_oracle(c, stdout),
        Command::Nagumo(c) => cmd_nagumo(c, stdout),
    }
}

#[derive(Serialize)]
struct CheckOutput {
    admissibility: crate::admissibility::AdmissibilityReport,
    lipschitz: crate::admissibility::LipschitzData,
    bracket: BracketReport,
}

fn cmd_check(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load(c)?;
    let k = scalar_k(&cfg)?;
    let problem = cfg.build()?;
    let lip = problem.lipschitz.clone().expect("build attaches Lipschitz data");
    let report = check(&problem.config, k, &lip)?;
    let nodes = solver_grid(&problem.config, cfg.grid_n)?;
    let bracket = verify_initial_bracket(&problem, k, &nodes, 1e-9)?;
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    let body = match c.format {
        Format::Json => json(&CheckOutput { admissibility: report, lipschitz: lip, bracket }),
        Format::Csv => {
            let mut s = String::from("group,condition,value,margin,pass\n");
            for (group, conds) in [("k", &report.conditions), ("bracket", &bracket.conditions)] {
                for cond in conds {
                    let _ = writeln!(s, "{group},{},{},{},{}", cond.id, cond.value, cond.margin, cond.pass);
                }
            }
            s
        }
    };
    let name = if c.format == Format::Json { "check.json" } else { "check.csv" };
    out.add(name, body);
    out.finish("check", c, stdout, name)?;
    Ok(0)
}

#[derive(Serialize)]
struct ScanOutput {
    regime: Regime,
    window: (f64, f64),
    steps: usize,
    intervals: Vec<KInterval>,
}

fn cmd_scan(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load(c)?;
    let problem = cfg.build()?;
    let lip = problem.lipschitz.clone().expect("build attaches Lipschitz data");
    let (lo, hi, steps) = cfg.k_window();
    let regime = match cfg.ordering {
        BracketOrder::Reverse => Regime::PositiveK,
        BracketOrder::Well => Regime::NegativeK,
    };
    let scan = scan_k(&problem.config, &lip, regime, lo, hi, steps)?;
    let summary = ScanOutput { regime, window: (lo, hi), steps, intervals: scan.intervals.clone() };
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    let intervals = match c.format {
        Format::Json => json(&summary),
        Format::Csv => {
            let mut s = String::from("lo,hi,lo_refined,hi_refined\n");
            for i in &summary.intervals {
                let _ = writeln!(s, "{},{},{},{}", i.lo, i.hi, i.lo_refined, i.hi_refined);
            }
            s
        }
    };
    let name = if c.format == Format::Json { "intervals.json" } else { "intervals.csv" };
    out.add(name, intervals);
    out.add("margins.csv", scan.margins_csv());
    out.finish("scan-k", c, stdout, name)?;
    Ok(0)
}

/// `x,value,series` rows, one series per iterate of each sequence.
pub fn plot_series(trace: &IterationTrace) -> String {
    let mut s = String::from("x,value,series\n");
    for (label, seq) in [("c", &trace.lower), ("d", &trace.upper)] {
        for (n, it) in seq.iter().enumerate() {
            for (x, v) in trace.nodes.iter().zip(&it.u) {
                let _ = writeln!(s, "{x},{v},{label}{n}");
            }
        }
    }
    s
}

fn cmd_solve(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load(c)?;
    let k = scalar_k(&cfg)?;
    let problem = cfg.build()?;
    let trace = run(&problem, k, &cfg.run_options())?;
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    out.add("summary.json", json(&trace.summary()));
    out.add("trace.csv", trace.to_csv());
    out.add("plot.csv", plot_series(&trace));
    let primary = if c.format == Format::Json { "summary.json" } else { "trace.csv" };
    out.finish("solve", c, stdout, primary)?;
    Ok(if trace.converged { 0 } else { 2 })
}

fn cmd_greens(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    // --grid-n sizes the table here, not the solver grid
    let cfg = load_with(c, false)?;
    let k = scalar_k(&cfg)?;
    let n = c.grid_n.unwrap_or(101);
    if n < 2 {
        return Err(Error::InvalidArgument("greens-dump needs --grid-n >= 2".into()));
    }
    let kernel = GreenKernel::new(&cfg.boundary, &ShiftedOperator::new(k)?)?;
    let table = kernel_table(&kernel, n);
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    let (name, body) = match c.format {
        Format::Csv => {
            let mut s = String::from("x,s,G,dG_dx,on_diagonal\n");
            for p in &table {
                let _ = writeln!(s, "{},{},{},{},{}", p.x, p.s, p.value, p.dvalue_dx, p.on_diagonal);
            }
            ("greens.csv", s)
        }
        Format::Json => ("greens.json", json(&table)),
    };
    out.add(name, body);
    out.finish("greens-dump", c, stdout, name)?;
    Ok(0)
}

#[derive(Serialize)]
struct Comparison {
    quantity: &'static str,
    sup_diff: f64,
}

fn cmd_oracle(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load(c)?;
    let k = scalar_k(&cfg)?;
    let problem = cfg.build()?;
    let trace = run(&problem, k, &cfg.run_options())?;
    let nodes = trace.nodes.clone();
    let newton = fd_nonlinear_with(&problem, &nodes, &NewtonOptions::default())?;
    let fd = &newton.solution.values;
    let diff = |u: &[f64]| u.iter().zip(fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    // the linear solvers on a fixed smooth source
    let op = ShiftedOperator::new(k)?;
    let g = GridFunction::from_fn(&nodes, |x| 1.0 + x)?;
    let (u, _) = solve_linear(&problem.config, &op, &LinearRhs::homogeneous(g.clone()))?;
    let u_fd = fd_linear(&problem.config, k, &g, 0.0)?;

    let rows = vec![
        Comparison { quantity: "lower_limit_vs_oracle", sup_diff: diff(&trace.last_lower().u) },
        Comparison { quantity: "upper_limit_vs_oracle", sup_diff: diff(&trace.last_upper().u) },
        Comparison { quantity: "lower_vs_upper", sup_diff: trace.last_lower().sup_diff(trace.last_upper()) },
        Comparison { quantity: "linear_kernel_vs_fd", sup_diff: u.sup_diff(&u_fd)? },
    ];
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    let (name, body) = match c.format {
        Format::Json => ("compare.json", json(&rows)),
        Format::Csv => {
            let mut s = String::from("quantity,sup_diff\n");
            for r in &rows {
                let _ = writeln!(s, "{},{}", r.quantity, r.sup_diff);
            }
            ("compare.csv", s)
        }
    };
    out.add(name, body);
    out.add("oracle.csv", {
        let mut s = String::from("x,u\n");
        for (x, v) in nodes.iter().zip(fd) {
            let _ = writeln!(s, "{x},{v}");
        }
        s
    });
    out.finish("oracle-compare", c, stdout, name)?;
    Ok(if trace.converged { 0 } else { 2 })
}

fn cmd_nagumo(c: &Common, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = load(c)?;
    let problem = cfg.build()?;
    let data: NagumoData = nagumo_bound(&problem)?;
    let mut out = Outputs { dir: c.out.as_deref(), files: Vec::new() };
    let (name, body) = match c.format {
        Format::Json => ("nagumo.json", json(&data)),
        Format::Csv => {
            let (verdict, value) = match data.verdict {
                crate::admissibility::NagumoVerdict::Bound { p } => ("bound", p),
                crate::admissibility::NagumoVerdict::Failure { integral } => ("failure", integral),
            };
            (
                "nagumo.csv",
                format!(
                    "phi,gamma,diameter,verdict,value\n\"{}\",{},{},{verdict},{value}\n",
                    data.phi, data.gamma, data.diameter
                ),
            )
        }
    };
    out.add(name, body);
    out.finish("nagumo", c, stdout, name)?;
    Ok(0)
}
