use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use czc_core::catalog::{self, CrossRow};
use czc_core::census::{self, CensusConfig, CensusReport, Mode, OrbitDataset, Verdict};
use czc_core::jump::{self, JumpCertificate, JumpParams, JumpRequest, Sides};
use czc_core::{ExactReal, IterateIndexTable, JumpError, OrbitModel, PrequantSpec};

const EXIT_REFUTED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "czc", version, about = "Conley-Zehnder index iteration and Reeb orbit census")]
#[command(after_help = "Exit codes: 0 success or certified, 1 refuted, 2 input error, 3 inconclusive.\n\
Spec files: {\"n\", \"c_B\", \"sign\": \"positive\"|\"negative\", \"betti\": [..2n+1], \"lacunary_base\"}.\n\
Orbit files: {\"n\", \"orbits\": [{\"name\", \"rotations\": [\"sqrt2/2\", ..], \"linear_even\", \"odd_linear\", \"torsion_order\"}]}.\n\
Both loaders also accept the combined {\"spec\", \"dataset\"} object printed by `czc catalog`.\n\
CZC_THREADS caps the worker threads of the search.")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Decimal digits shown next to exact values in tables; never used in decisions.
    #[arg(long, default_value_t = 6, global = true)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// betti_M(k) over a degree range. Output: [{"k", "betti"}].
    Betti {
        #[arg(long)]
        spec: PathBuf,
        /// Inclusive range `lo:hi`.
        #[arg(long, default_value = "0:20")]
        range: String,
    },
    /// Mean index, mean Euler characteristic and local Euler characteristics per orbit.
    /// Output: [{"orbit", "mean_index", "mean_chi", "local_chi": [..]}].
    Chi {
        #[arg(long)]
        orbits: PathBuf,
        /// Number of iterates to list.
        #[arg(long, default_value_t = 4)]
        iterates: i64,
    },
    /// Contractible iterates with index at most `--max-index`.
    /// Output: [{"orbit", "entries": [{"k", "mu", "contractible", "good"}]}].
    Indices {
        #[arg(long)]
        orbits: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_index: i64,
    },
    /// Common index jump search, or verification of given certificates with `--check`.
    /// Output: [{"side", "d", "k": [..]}]; with --check, {"passed", "violations"}.
    Jump(JumpArgs),
    /// Full census. Output mirrors the census report: mode, r, r_B, certificates, checks, verdict.
    Census(CensusArgs),
    /// Worked examples; emits {"spec", "dataset"} or, for `table`, [{"name", "r_B", "c_B"}].
    Catalog {
        #[command(subcommand)]
        which: CatalogCommand,
    },
    /// Resonance identity sum chi_hat / mu_hat against the mean Euler characteristic.
    /// Output: {"lhs", "rhs", "equal"}.
    Resonance {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        orbits: PathBuf,
    },
}

#[derive(Args)]
struct JumpArgs {
    #[arg(long)]
    orbits: PathBuf,
    /// Ambient `n`; certificates may use at most `n` orbits.
    #[arg(long = "n")]
    n_ambient: Option<usize>,
    #[arg(long, default_value = "1/2")]
    eta: String,
    #[arg(long)]
    ell0: u64,
    /// Modulus N dividing `d` and every `k_i`.
    #[arg(long = "N")]
    modulus: u64,
    #[arg(long, default_value_t = 100_000_000)]
    bound: u64,
    #[arg(long, value_enum, default_value_t = SidesArg::Both)]
    sides: SidesArg,
    /// Verify certificates from this file instead of searching.
    #[arg(long)]
    check: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SidesArg {
    Plus,
    Minus,
    Both,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    orbits: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long)]
    max_degree: Option<i64>,
    #[arg(long, default_value_t = 100_000_000)]
    bound: u64,
    #[arg(long = "N")]
    modulus: Option<u64>,
    #[arg(long)]
    eta: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    LowerBound,
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Irrational ellipsoid, e.g. --axes "1,sqrt2,sqrt3".
    Ellipsoid {
        #[arg(long)]
        axes: String,
    },
    /// Lens quotient, e.g. --p 3 --weights 1,1 --axes "1,sqrt2".
    Lens {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<i64>,
        #[arg(long)]
        axes: String,
    },
    /// The (r_B, c_B) table.
    Table,
    /// Spec for a named space with a known Betti profile, e.g. "S^5" or "S*S^3".
    Spec { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let out = Output { format: cli.format, precision: cli.precision };
    match &cli.command {
        Command::Betti { spec, range } => betti(&out, &load_spec(spec)?, range),
        Command::Chi { orbits, iterates } => chi(&out, &load_dataset(orbits, None)?, *iterates),
        Command::Indices { orbits, max_index } => indices(&out, &load_dataset(orbits, None)?, *max_index),
        Command::Jump(args) => run_jump(&out, args),
        Command::Census(args) => run_census(&out, args),
        Command::Catalog { which } => run_catalog(&out, which),
        Command::Resonance { spec, orbits } => {
            let spec = load_spec(spec)?;
            let data = load_dataset(orbits, Some(spec.n))?;
            let res = census::resonance_check(&data, &spec)?;
            out.emit(&res, || format!("lhs   {}\nrhs   {}\nequal {}\n", res.lhs, res.rhs, res.equal))?;
            Ok(if res.equal { 0 } else { EXIT_REFUTED })
        }
    }
}

struct Output {
    format: Format,
    precision: usize,
}

impl Output {
    fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> String) -> Result<()> {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
            Format::Table => print!("{}", table()),
        }
        Ok(())
    }

    fn real(&self, x: &ExactReal) -> String {
        format!("{x} (~{:.*})", self.precision, x.to_f64())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses `T` from the file, or from its `wrapper` field when present.
/// Direct parses keep serde's line and column in the diagnostic.
fn parse_file<T: serde::de::DeserializeOwned>(path: &Path, wrapper: &str, what: &str) -> Result<T> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match value.get(wrapper) {
        Some(inner) => T::deserialize(inner).with_context(|| format!("invalid {what} in field {wrapper:?} of {}", path.display())),
        None => serde_json::from_str(&text).with_context(|| format!("invalid {what} in {}", path.display())),
    }
}

/// Accepts a bare spec or the `spec` field of a catalog object.
fn load_spec(path: &Path) -> Result<PrequantSpec> {
    parse_file(path, "spec", "spec")
}

/// Accepts a dataset, the `dataset` field of a catalog object, or a bare orbit
/// array (then `n` comes from the caller or the largest elliptic rank).
fn load_dataset(path: &Path, n: Option<usize>) -> Result<OrbitDataset> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let data = if value.is_array() {
        let orbits: Vec<OrbitModel> = serde_json::from_str(&text).with_context(|| format!("invalid orbit list in {}", path.display()))?;
        let n = n.or_else(|| orbits.iter().map(|o| o.elliptic_rank()).max()).unwrap_or(0);
        OrbitDataset { n, orbits }
    } else {
        parse_file(path, "dataset", "orbit data")?
    };
    data.validate()?;
    Ok(data)
}

fn parse_axes(axes: &str) -> Result<Vec<ExactReal>> {
    axes.split(',')
        .map(|a| a.trim().parse::<ExactReal>().map_err(|e| anyhow!("axis {a:?}: {e}")))
        .collect()
}

fn parse_range(range: &str) -> Result<(i64, i64)> {
    let (lo, hi) = range.split_once(':').ok_or_else(|| anyhow!("range must look like lo:hi, got {range:?}"))?;
    let lo: i64 = lo.trim().parse().with_context(|| format!("range start {lo:?}"))?;
    let hi: i64 = hi.trim().parse().with_context(|| format!("range end {hi:?}"))?;
    if lo > hi {
        bail!("empty range {range:?}");
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct BettiRow {
    k: i64,
    betti: u64,
}

fn betti(out: &Output, spec: &PrequantSpec, range: &str) -> Result<u8> {
    let (lo, hi) = parse_range(range)?;
    let rows: Vec<BettiRow> = (lo..=hi).map(|k| BettiRow { k, betti: spec.betti_m(k) }).collect();
    out.emit(&rows, || {
        let mut t = String::from("k\tbetti_M\n");
        for r in &rows {
            t += &format!("{}\t{}\n", r.k, r.betti);
        }
        t
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct ChiRow {
    orbit: String,
    mean_index: String,
    mean_chi: ExactReal,
    local_chi: Vec<i64>,
}

fn chi(out: &Output, data: &OrbitDataset, iterates: i64) -> Result<u8> {
    let mut rows = Vec::new();
    for o in &data.orbits {
        rows.push(ChiRow {
            orbit: o.name.clone(),
            mean_index: o.mean_index_simple().to_string(),
            mean_chi: o.mean_chi()?,
            local_chi: (1..=iterates).map(|k| o.local_chi(k)).collect::<Result<_, _>>()?,
        });
    }
    out.emit(&rows, || {
        let mut t = String::from("orbit\tmean_index\tmean_chi\tlocal_chi\n");
        for r in &rows {
            t += &format!("{}\t{}\t{}\t{:?}\n", r.orbit, r.mean_index, out.real(&r.mean_chi), r.local_chi);
        }
        t
    })?;
    Ok(0)
}

fn indices(out: &Output, data: &OrbitDataset, max_index: i64) -> Result<u8> {
    let tables: Vec<IterateIndexTable> = data
        .orbits
        .iter()
        .map(|o| o.contractible_iterates(max_index, data.n))
        .collect::<Result<_, _>>()?;
    out.emit(&tables, || {
        let mut t = String::from("orbit\tk\tmu\tgood\n");
        for table in &tables {
            for e in &table.entries {
                t += &format!("{}\t{}\t{}\t{}\n", table.orbit, e.k, e.mu, e.good);
            }
        }
        t
    })?;
    Ok(0)
}

fn certificates_table(certs: &[JumpCertificate]) -> String {
    let mut t = String::from("side\td\tk\n");
    for c in certs {
        t += &format!("{:?}\t{}\t{:?}\n", c.side, c.d, c.k);
    }
    t
}

fn run_jump(out: &Output, args: &JumpArgs) -> Result<u8> {
    let data = load_dataset(&args.orbits, args.n_ambient)?;
    let eta: ExactReal = args.eta.parse().map_err(|e| anyhow!("--eta {:?}: {e}", args.eta))?;
    let params = JumpParams { eta, ell0: args.ell0, modulus: args.modulus, n_ambient: args.n_ambient.unwrap_or(data.n) };
    let orbits = data.collapsed()?;

    if let Some(path) = &args.check {
        let certs: Vec<JumpCertificate> = serde_json::from_str(&read_text(path)?)
            .with_context(|| format!("invalid certificates in {}", path.display()))?;
        let report = match certs.as_slice() {
            [one] => jump::verify_side(&orbits, one, &params)?,
            [plus, minus] => jump::verify_jump(&orbits, plus, minus, &params)?,
            _ => bail!("expected one or two certificates, got {}", certs.len()),
        };
        let passed = report.passed();
        #[derive(Serialize)]
        struct Checked<'a> {
            passed: bool,
            violations: &'a [jump::Violation],
        }
        out.emit(&Checked { passed, violations: &report.violations }, || {
            let mut t = format!("passed {passed}\n");
            for v in &report.violations {
                t += &format!("{v:?}\n");
            }
            t
        })?;
        return Ok(if passed { 0 } else { EXIT_REFUTED });
    }

    let sides = match args.sides {
        SidesArg::Plus => Sides::Plus,
        SidesArg::Minus => Sides::Minus,
        SidesArg::Both => Sides::Both,
    };
    let request = JumpRequest::new(orbits, params, sides, args.bound);
    match jump::find_jump(&request) {
        Ok((plus, minus)) => {
            let certs: Vec<JumpCertificate> = plus.into_iter().chain(minus).collect();
            out.emit(&certs, || certificates_table(&certs))?;
            Ok(0)
        }
        Err(JumpError::Exhausted { bound }) => {
            eprintln!("no certificate with d <= N * {bound}");
            Ok(EXIT_INCONCLUSIVE)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_census(out: &Output, args: &CensusArgs) -> Result<u8> {
    let spec = load_spec(&args.spec)?;
    let data = load_dataset(&args.orbits, Some(spec.n))?;
    let eta = match &args.eta {
        Some(text) => Some(text.parse::<ExactReal>().map_err(|e| anyhow!("--eta {text:?}: {e}"))?),
        None => None,
    };
    let config = CensusConfig {
        modulus: args.modulus,
        eta,
        search_bound: args.bound,
        max_degree: args.max_degree,
        mode: match args.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::LowerBound => Mode::LowerBound,
        },
    };
    let report = census::run_census(&data, &spec, &config)?;
    out.emit(&report, || census_table(&report))?;
    Ok(match &report.verdict {
        Verdict::Certified => 0,
        Verdict::Refuted { check, detail, degree } => {
            let at = degree.map(|d| format!(" at degree {d}")).unwrap_or_default();
            eprintln!("refuted by {check}{at}: {detail}");
            EXIT_REFUTED
        }
        Verdict::Inconclusive { reason } => {
            eprintln!("inconclusive: {reason}");
            EXIT_INCONCLUSIVE
        }
    })
}

fn census_table(report: &CensusReport) -> String {
    let mut t = format!("r = {}, r_B = {}\n", report.r, report.r_b);
    if let (Some(ell0), Some(modulus)) = (report.ell0, report.modulus) {
        t += &format!("ell0 = {ell0}, N = {modulus}, eta = {}\n", report.eta.as_deref().unwrap_or("-"));
    }
    if !report.certificates.is_empty() {
        t += &certificates_table(&report.certificates);
    }
    t += "check\tlhs\trhs\tpass\n";
    for c in &report.checks {
        t += &format!("{}\t{}\t{}\t{}\n", c.name, serde_json::to_string(&c.lhs).unwrap_or_default(), serde_json::to_string(&c.rhs).unwrap_or_default(), c.pass);
    }
    t += &match &report.verdict {
        Verdict::Certified => "verdict: certified\n".to_string(),
        Verdict::Refuted { check, detail, .. } => format!("verdict: refuted ({check}: {detail})\n"),
        Verdict::Inconclusive { reason } => format!("verdict: inconclusive ({reason})\n"),
    };
    t
}

#[derive(Serialize)]
struct CatalogEntry {
    spec: PrequantSpec,
    dataset: OrbitDataset,
}

fn run_catalog(out: &Output, which: &CatalogCommand) -> Result<u8> {
    let (spec, dataset) = match which {
        CatalogCommand::Table => {
            let rows = catalog::cross_table();
            out.emit(&rows, || table_rows(&rows))?;
            return Ok(0);
        }
        CatalogCommand::Spec { name } => {
            let spec = catalog::cross_spec(name)?;
            out.emit(&spec, || format!("n = {}, c_B = {}, r_B = {}, betti = {:?}\n", spec.n, spec.c_b, spec.r_b(), spec.betti))?;
            return Ok(0);
        }
        CatalogCommand::Ellipsoid { axes } => catalog::ellipsoid(&parse_axes(axes)?)?,
        CatalogCommand::Lens { p, weights, axes } => catalog::lens(*p, weights, &parse_axes(axes)?)?,
    };
    let entry = CatalogEntry { spec, dataset };
    out.emit(&entry, || {
        let mut t = format!("n = {}, c_B = {}, r_B = {}\norbit\trotations\tlinear\ttorsion\n", entry.spec.n, entry.spec.c_b, entry.spec.r_b());
        for o in &entry.dataset.orbits {
            let rotations: Vec<String> = o.rotations.iter().map(|r| out.real(r)).collect();
            t += &format!("{}\t{}\t{}\t{}\n", o.name, rotations.join(", "), o.linear_total(), o.torsion_order);
        }
        t
    })?;
    Ok(0)
}

fn table_rows(rows: &[CrossRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut t = format!("{:width$}  r_B       c_B\n", "M");
    for r in rows {
        t += &format!("{:width$}  {:8}  {}\n", r.name, r.r_b, r.c_b);
    }
    t
}
