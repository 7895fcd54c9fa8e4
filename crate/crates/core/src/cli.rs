//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::executor::{check_coalescing, spmv_ec, spmv_ec_traced};
use crate::extraction::{DeltaBits, ExtractionConfig};
use crate::format::{decode_ec_csr, delta_histogram, deserialize, read_ecsr, serialize, storage_report, write_ecsr, EcCsrMatrix, Precision};
use crate::matrix::{generate_uniform, spmv_oracle, CsrMatrix, Real};
use crate::mtx::{load_matrix_market, save_matrix_market};
use crate::pipeline::{build, prepare_blocks, PipelineConfig};
use crate::verify::{check_partition, relative_error};

#[derive(Debug, Parser)]
#[command(name = "blockspmv", version, about = "Block extraction, compressed block storage and emulated SpMV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a uniform random matrix in MatrixMarket format.
    Gen(GenArgs),
    /// Extract, balance and encode a MatrixMarket matrix into an ECSR file.
    Convert(ConvertArgs),
    /// Multiply an ECSR matrix by a vector.
    Spmv(SpmvArgs),
    /// Run the full pipeline on a matrix and check it against the reference.
    Verify(VerifyArgs),
    /// Column-gap distribution and extraction summary.
    Stats(StatsArgs),
    /// Time the emulated kernel against the CSR reference.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Fraction of zero entries in [0, 1].
    #[arg(long)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 32)]
    pub warp_size: usize,
    #[arg(long, default_value_t = 4)]
    pub vector_size: usize,
    /// Delta index width: 4, 8 or 16.
    #[arg(long, default_value_t = 8)]
    pub delta_bits: u32,
    #[arg(long)]
    pub clip_threshold: Option<usize>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    /// Value width recorded in the container and used for byte accounting.
    #[arg(long, default_value_t = 32)]
    pub value_bits: u32,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<PipelineConfig> {
        let extraction = ExtractionConfig::new(self.warp_size, self.vector_size, DeltaBits::from_bits(self.delta_bits)?)?
            .with_max_levels(self.max_levels);
        extraction.validate()?;
        Ok(PipelineConfig {
            extraction,
            clip_threshold: self.clip_threshold,
            precision: Precision::from_bits(self.value_bits)?,
        })
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Absolute index width of the CSR baseline in the report.
    #[arg(long, default_value_t = 32)]
    pub baseline_index_bits: u32,
    /// Also write the report as JSON.
    #[arg(long)]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ComputePrecision {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct SpmvArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Input vector, one decimal per line.
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ComputePrecision::F64)]
    pub precision: ComputePrecision,
    /// Print every memory access to stdout and check the coalesced layout.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let res = execute(cli.command, &mut out).and_then(|()| out.flush().map_err(Error::from));
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cmd: Command, out: &mut impl Write) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a, out),
        Command::Convert(a) => convert(a, out),
        Command::Spmv(a) => spmv(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn gen(a: GenArgs, out: &mut impl Write) -> Result<()> {
    let m = generate_uniform(a.rows, a.cols, a.sparsity, a.seed)?;
    save_matrix_market(&m, &a.out)?;
    writeln!(out, "rows={} cols={} nnz={}", m.num_rows(), m.num_cols(), m.nnz())?;
    Ok(())
}

fn convert(a: ConvertArgs, out: &mut impl Write) -> Result<()> {
    let cfg = a.pipeline.config()?;
    let m = load_matrix_market(&a.input)?;
    let ec = build(&m, &cfg)?;
    write_ecsr(&ec, &a.out)?;
    let report = storage_report(&ec, cfg.precision.bits(), a.baseline_index_bits);
    write!(out, "{}", report.to_key_value())?;
    if let Some(path) = a.report_json {
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.into()))?;
        fs::write(path, json)?;
    }
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{e}: {l:?}") })
        })
        .collect()
}

pub fn write_vector<T: Real>(path: &Path, y: &[T]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in y {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

fn spmv(a: SpmvArgs, out: &mut impl Write) -> Result<()> {
    let ec = read_ecsr(&a.matrix)?;
    let x = read_vector(&a.x)?;
    match a.precision {
        ComputePrecision::F64 => spmv_as(&ec, &x, &a, out),
        ComputePrecision::F32 => {
            let x: Vec<f32> = x.iter().map(|&v| v as f32).collect();
            spmv_as(&ec, &x, &a, out)
        }
    }
}

fn spmv_as<T: Real>(ec: &EcCsrMatrix, x: &[T], a: &SpmvArgs, out: &mut impl Write) -> Result<()> {
    if a.trace {
        let (y, trace) = spmv_ec_traced(ec, x)?;
        for r in &trace.records {
            writeln!(out, "{r}")?;
        }
        let report = check_coalescing(ec, &trace);
        writeln!(out, "warps={} steps={} violations={}", report.warps, report.steps, report.violations.len())?;
        write_vector(&a.out, &y)?;
        if !report.is_ok() {
            return Err(Error::Verification(report.violations.join("; ")));
        }
    } else {
        write_vector(&a.out, &spmv_ec(ec, x)?)?;
    }
    Ok(())
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Every check `verify` performs, with a failure message for each.
pub fn verify_matrix(m: &CsrMatrix, cfg: &PipelineConfig, seed: u64) -> Result<Vec<(&'static str, Option<String>)>> {
    let mut checks = Vec::new();
    let mut check = |name, ok: bool, msg: String| checks.push((name, (!ok).then_some(msg)));

    let sets = prepare_blocks(m, cfg)?;
    let p = check_partition(m, &sets);
    check("partition", p.is_ok(), format!("{p:?}"));

    let ec = build(m, cfg)?;
    let decoded = decode_ec_csr(&ec)?;
    check("round_trip", &decoded == m, "decoded matrix differs from the input".into());

    let bytes = serialize(&ec)?;
    let same = deserialize(&bytes).map(|back| back == ec && serialize(&back).ok() == Some(bytes.clone()));
    check("serialization", matches!(same, Ok(true)), format!("{same:?}"));

    let x = random_vector(m.num_cols(), seed);
    let (y, trace) = spmv_ec_traced(&ec, &x)?;
    let e64 = relative_error(m, &x, &y, &spmv_oracle(m, &x)?);
    check("oracle_f64", e64 <= 1e-12, format!("relative error {e64:e}"));

    let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let yf = spmv_ec(&ec, &xf)?;
    let e32 = relative_error(m, &xf, &yf, &spmv_oracle(m, &xf)?);
    check("oracle_f32", e32 <= 1e-5, format!("relative error {e32:e}"));

    let c = check_coalescing(&ec, &trace);
    check("coalescing", c.is_ok(), c.violations.join("; "));

    let max = ec.delta_bits.max_delta();
    let ok = ec.sets.iter().all(|s| s.delta_indices.iter().all(|&d| (d as usize) <= max));
    check("delta_bound", ok, format!("a delta exceeds {max}"));
    Ok(checks)
}

fn verify(a: VerifyArgs, out: &mut impl Write) -> Result<()> {
    let cfg = a.pipeline.config()?;
    let m = load_matrix_market(&a.input)?;
    let checks = verify_matrix(&m, &cfg, a.seed)?;
    let mut failed = Vec::new();
    for (name, fail) in &checks {
        match fail {
            None => writeln!(out, "{name}=ok")?,
            Some(msg) => {
                writeln!(out, "{name}=FAIL {msg}")?;
                failed.push(*name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn stats(a: StatsArgs, out: &mut impl Write) -> Result<()> {
    let cfg = a.pipeline.config()?;
    let m = load_matrix_market(&a.input)?;
    let h = delta_histogram(&m);
    writeln!(out, "rows={} cols={} nnz={} gaps={} max_gap={}", m.num_rows(), m.num_cols(), m.nnz(), h.total, h.max_gap())?;
    let mut gap = 1;
    while gap < h.max_gap() {
        writeln!(out, "gap<={gap} fraction={:.6}", h.fraction_at_most(gap))?;
        gap *= 2;
    }
    writeln!(out, "gap<={} fraction={:.6}", h.max_gap(), h.fraction_at_most(h.max_gap()))?;

    let sets = prepare_blocks(&m, &cfg)?;
    let nnz = m.nnz().max(1) as f64;
    for s in &sets {
        let real = s.real_nnz();
        writeln!(
            out,
            "granularity={} vector_size={} blocks={} nnz={} coverage={:.6}",
            s.granularity,
            s.vector_size,
            s.len(),
            real,
            real as f64 / nnz
        )?;
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut impl Write) -> Result<()> {
    let cfg = a.pipeline.config()?;
    let m = load_matrix_market(&a.input)?;
    let t = Instant::now();
    let ec = build(&m, &cfg)?;
    let build_time = t.elapsed();
    let x = random_vector(m.num_cols(), 0);
    let iters = a.iters.max(1);

    let t = Instant::now();
    let mut y = Vec::new();
    for _ in 0..iters {
        y = spmv_ec(&ec, &x)?;
    }
    let ec_time = t.elapsed() / iters as u32;
    let t = Instant::now();
    let mut r = Vec::new();
    for _ in 0..iters {
        r = spmv_oracle(&m, &x)?;
    }
    let csr_time = t.elapsed() / iters as u32;
    writeln!(out, "build_us={}", build_time.as_micros())?;
    writeln!(out, "spmv_ec_us={}", ec_time.as_micros())?;
    writeln!(out, "spmv_csr_us={}", csr_time.as_micros())?;
    writeln!(out, "relative_error={:e}", relative_error(&m, &x, &y, &r))?;
    Ok(())
}
