//! Command-line surface for the srtz library: search for superregular
//! matrices and pairs, verify and count them, and push files through the
//! erasure codec.
//!
//! Exit codes are a stable contract for scripting:
//!   0  success
//!   1  a requested verdict came back false, or a generation is undecodable
//!   2  usage error, unreadable or inconsistent input
//!   3  the search space is exhausted for the given field size

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use srtz::codec::{CodecError, CodedRow, EmissionOrder, GeneratorStack};
use srtz::galois::{default_poly, make_field, FieldElement, FieldSpec};
use srtz::regularity::{
    count_superregular, is_jointly_superregular, is_product_preserving, is_superregular,
    CountMethod, RegularityReport,
};
use srtz::search::{greedy_pair_search, greedy_search, SearchError};
use srtz::toeplitz::{MatrixFile, MatrixPair, ToeplitzSpec};
use srtz::wire::{read_all, Packet};

const EXIT_FALSE: i32 = 1;
const EXIT_NO_MATRIX: i32 = 3;

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run() -> Result<i32> {
    match Cli::parse().cmd {
        Command::Search(args) => cmd_search(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Count(args) => cmd_count(args),
        Command::FieldInfo(args) => cmd_field_info(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Recode(args) => cmd_recode(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

#[derive(Parser)]
#[command(name = "srtz", version, about = "Superregular Toeplitz matrices and rate-1/m erasure codes")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy search for the least superregular matrix or pair.
    Search(SearchArgs),
    /// Check superregularity (single, joint, product) of matrix files.
    Verify(VerifyArgs),
    /// Count superregular exponent tuples of one dimension.
    Count(CountArgs),
    /// Print field parameters, roots, and table sanity.
    FieldInfo(FieldInfoArgs),
    /// Split a file into generations and write coded packets.
    Encode(EncodeArgs),
    /// Reassemble a file from coded packets.
    Decode(DecodeArgs),
    /// Rewrite one branch of a packet stream through another matrix.
    Recode(RecodeArgs),
    /// Measure encode+decode throughput of coding matrices.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct SearchArgs {
    /// Field degree p of GF(2^p).
    #[arg(long, value_parser = parse_u32_flex)]
    p: u32,
    /// Reducing polynomial; defaults to a standard primitive one for p.
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
    /// Root the exponents refer to.
    #[arg(long, default_value = "2", value_parser = parse_u16_flex)]
    omega: u16,
    /// Matrix dimension.
    #[arg(long, value_parser = parse_usize_flex)]
    n: usize,
    /// Search for a jointly superregular pair instead of a single matrix.
    #[arg(long)]
    pair: bool,
    /// Additionally require the pair's product to be superregular.
    #[arg(long, requires = "pair")]
    product_preserving: bool,
    /// Give up instead of revising earlier levels when a level exhausts.
    #[arg(long)]
    no_backtracking: bool,
    /// Write the result as a matrix (or pair) file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Matrix file, or a two-element pair file.
    #[arg(long)]
    matrix: PathBuf,
    /// Second matrix file for joint checks.
    #[arg(long)]
    matrix_b: Option<PathBuf>,
    /// Check joint superregularity of the pair.
    #[arg(long)]
    joint: bool,
    /// Check that the pair's product is superregular.
    #[arg(long)]
    product: bool,
}

#[derive(clap::Args)]
struct CountArgs {
    #[arg(long, value_parser = parse_u32_flex)]
    p: u32,
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
    #[arg(long, default_value = "2", value_parser = parse_u16_flex)]
    omega: u16,
    /// Matrix dimension.
    #[arg(long, value_parser = parse_usize_flex)]
    n: usize,
    /// lemma (exact closed forms), corollary (single family), or bruteforce.
    #[arg(long, default_value = "lemma")]
    method: CountMethod,
    /// Permit the long scans needed for p >= 7.
    #[arg(long)]
    allow_long: bool,
}

#[derive(clap::Args)]
struct FieldInfoArgs {
    #[arg(long, value_parser = parse_u32_flex)]
    p: u32,
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Interleaved,
    Blockwise,
}

impl From<OrderArg> for EmissionOrder {
    fn from(o: OrderArg) -> EmissionOrder {
        match o {
            OrderArg::Interleaved => EmissionOrder::Interleaved,
            OrderArg::Blockwise => EmissionOrder::Blockwise,
        }
    }
}

#[derive(clap::Args)]
struct EncodeArgs {
    /// Matrix file for each coding branch; the identity branch is implicit.
    #[arg(long)]
    generator: Vec<PathBuf>,
    /// Generation size; needed only without --generator.
    #[arg(long, value_parser = parse_usize_flex)]
    k: Option<usize>,
    /// Field degree for an identity-only stack (default 8).
    #[arg(long, value_parser = parse_u32_flex)]
    p: Option<u32>,
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Payload bytes per packet.
    #[arg(long, default_value = "1600", value_parser = parse_u16_flex)]
    packet_size: u16,
    /// Row emission order.
    #[arg(long, value_enum, default_value_t = OrderArg::Interleaved)]
    order: OrderArg,
}

#[derive(clap::Args)]
struct DecodeArgs {
    /// Matrix file for each coding branch, matching the encoder.
    #[arg(long)]
    generator: Vec<PathBuf>,
    #[arg(long, value_parser = parse_usize_flex)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_u32_flex)]
    p: Option<u32>,
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Rows to drop before decoding, per generation: "branch:index,..."
    #[arg(long)]
    erase: Option<String>,
}

#[derive(clap::Args)]
struct RecodeArgs {
    /// Matrix file to recode through.
    #[arg(long)]
    matrix: PathBuf,
    /// Branch whose packets are rewritten.
    #[arg(long, default_value = "1", value_parser = parse_u8_flex)]
    branch: u8,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Matrix file currently generating the branch; with --emit-generator,
    /// the product matrix the rewritten branch now follows is written there.
    #[arg(long)]
    generator: Option<PathBuf>,
    #[arg(long, requires = "generator")]
    emit_generator: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Matrix file; give twice to compare two matrices.
    #[arg(long)]
    matrix: Vec<PathBuf>,
    #[arg(long, default_value = "1600", value_parser = parse_u16_flex)]
    packet_size: u16,
    /// Generations per measurement.
    #[arg(long, default_value = "64", value_parser = parse_u32_flex)]
    generations: u32,
    /// Generation size for the identity-only baseline.
    #[arg(long, value_parser = parse_usize_flex)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_u32_flex)]
    p: Option<u32>,
    #[arg(long, value_parser = parse_u32_flex)]
    poly: Option<u32>,
}

// ---------------------------------------------------------------------------
// Flag parsing helpers
// ---------------------------------------------------------------------------

/// Accepts decimal, 0x hex, and 0b binary forms.
fn parse_flex(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let (digits, radix) = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        (h, 16)
    } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        (b, 2)
    } else {
        (t, 10)
    };
    u64::from_str_radix(digits, radix).map_err(|e| format!("'{t}': {e}"))
}

fn parse_u32_flex(s: &str) -> Result<u32, String> {
    u32::try_from(parse_flex(s)?).map_err(|_| format!("'{s}' does not fit 32 bits"))
}

fn parse_u16_flex(s: &str) -> Result<u16, String> {
    u16::try_from(parse_flex(s)?).map_err(|_| format!("'{s}' does not fit 16 bits"))
}

fn parse_u8_flex(s: &str) -> Result<u8, String> {
    u8::try_from(parse_flex(s)?).map_err(|_| format!("'{s}' does not fit 8 bits"))
}

fn parse_usize_flex(s: &str) -> Result<usize, String> {
    usize::try_from(parse_flex(s)?).map_err(|_| format!("'{s}' does not fit usize"))
}

fn build_field(p: u32, poly: Option<u32>) -> Result<Arc<FieldSpec>> {
    let poly = match poly {
        Some(v) => v,
        None => default_poly(p).ok_or_else(|| anyhow!("no default polynomial for p = {p}"))?,
    };
    Ok(make_field(p, poly)?)
}

fn load_matrix(path: &Path) -> Result<ToeplitzSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.into_spec()?)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn print_report(label: &str, report: &RegularityReport) {
    println!("{label}: {}", report.verdict);
    if let Some(w) = &report.witness {
        println!("{label} witness: {w}");
    }
}

fn join_exponents(exps: &[u16]) -> String {
    exps.iter().map(u16::to_string).collect::<Vec<_>>().join(" ")
}

fn join_elements(col: &[FieldElement]) -> String {
    col.iter().map(|e| e.0.to_string()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_search(args: SearchArgs) -> Result<i32> {
    let field = build_field(args.p, args.poly)?;
    let omega = field.element(args.omega as u32)?;
    let backtracking = !args.no_backtracking;
    let start = Instant::now();
    if args.pair {
        match greedy_pair_search(&field, omega, args.n, args.product_preserving, backtracking) {
            Ok(pair) => {
                let elapsed = start.elapsed();
                println!("A exponents: {}", join_exponents(pair.a.exponents()));
                println!("A first column: {}", join_elements(&pair.a.first_column()));
                println!("B exponents: {}", join_exponents(pair.b.exponents()));
                println!("B first column: {}", join_elements(&pair.b.first_column()));
                println!("elapsed: {:.3} ms", elapsed.as_secs_f64() * 1e3);
                if let Some(path) = &args.out {
                    let files = [MatrixFile::from_spec(&pair.a), MatrixFile::from_spec(&pair.b)];
                    write_json(path, &files)?;
                }
                Ok(0)
            }
            Err(SearchError::InsufficientFieldSize) => {
                eprintln!(
                    "no {0}x{0} pair over GF(2^{1}): field too small",
                    args.n, args.p
                );
                Ok(EXIT_NO_MATRIX)
            }
            Err(e) => Err(e.into()),
        }
    } else {
        match greedy_search(&field, omega, args.n, backtracking) {
            Ok(spec) => {
                let elapsed = start.elapsed();
                println!("exponents: {}", join_exponents(spec.exponents()));
                println!("first column: {}", join_elements(&spec.first_column()));
                println!("elapsed: {:.3} ms", elapsed.as_secs_f64() * 1e3);
                if let Some(path) = &args.out {
                    write_json(path, &MatrixFile::from_spec(&spec))?;
                }
                Ok(0)
            }
            Err(SearchError::InsufficientFieldSize) => {
                eprintln!(
                    "no {0}x{0} matrix over GF(2^{1}): field too small",
                    args.n, args.p
                );
                Ok(EXIT_NO_MATRIX)
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.matrix)
        .with_context(|| format!("reading {}", args.matrix.display()))?;
    let (a, b) = if let Some(path_b) = &args.matrix_b {
        let file: MatrixFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", args.matrix.display()))?;
        (file.into_spec()?, Some(load_matrix(path_b)?))
    } else if let Ok(files) = serde_json::from_str::<Vec<MatrixFile>>(&text) {
        match <[MatrixFile; 2]>::try_from(files) {
            Ok([fa, fb]) => (fa.into_spec()?, Some(fb.into_spec()?)),
            Err(_) => bail!("a pair file must hold exactly two matrices"),
        }
    } else {
        let file: MatrixFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", args.matrix.display()))?;
        (file.into_spec()?, None)
    };

    match b {
        None => {
            if args.joint || args.product {
                bail!("--joint and --product need a second matrix");
            }
            let report = is_superregular(&a);
            print_report("superregular", &report);
            Ok(if report.verdict { 0 } else { EXIT_FALSE })
        }
        Some(b) => {
            let pair = MatrixPair::new(a, b)?;
            let mut all_true = true;
            if args.joint || !args.product {
                let report = is_jointly_superregular(&pair);
                print_report("joint", &report);
                all_true &= report.verdict;
            }
            if args.product {
                let report = is_product_preserving(&pair);
                print_report("product", &report);
                all_true &= report.verdict;
            }
            Ok(if all_true { 0 } else { EXIT_FALSE })
        }
    }
}

fn cmd_count(args: CountArgs) -> Result<i32> {
    if args.p >= 7 && !args.allow_long {
        bail!(
            "counting over GF(2^{}) scans {}^{} tuples; pass --allow-long to run it",
            args.p,
            (1u64 << args.p) - 1,
            args.n.saturating_sub(1)
        );
    }
    let field = build_field(args.p, args.poly)?;
    let omega = field.element(args.omega as u32)?;
    let count = count_superregular(&field, omega, args.n, args.method)?;
    println!("{count}");
    Ok(0)
}

fn cmd_field_info(args: FieldInfoArgs) -> Result<i32> {
    let field = build_field(args.p, args.poly)?;
    println!("p: {}", field.p());
    println!("poly: {:#x}", field.poly());
    println!("elements: {}", field.element_count());
    println!("multiplicative order: {}", field.order());
    let roots = field.primitive_roots();
    println!("roots: {}", join_elements(&roots));
    let mut sane = roots.len() == field.p() as usize;
    for v in 1..field.element_count() {
        let e = field.element(v).expect("nonzero value is an element");
        let back = field.pow(FieldElement(2), field.log(e)? as u64);
        sane &= back == e;
    }
    println!("tables: {}", if sane { "exp/log round trip ok" } else { "BROKEN" });
    Ok(if sane { 0 } else { EXIT_FALSE })
}

/// Stack shared by encode, decode, and bench: listed coding branches, or an
/// identity-only stack when none are given.
fn build_stack(
    generators: &[PathBuf],
    k: Option<usize>,
    p: Option<u32>,
    poly: Option<u32>,
    order: EmissionOrder,
) -> Result<GeneratorStack> {
    if generators.is_empty() {
        let k = k.ok_or_else(|| anyhow!("--k is required without --generator"))?;
        let field = build_field(p.unwrap_or(8), poly)?;
        return Ok(GeneratorStack::new(field, k, vec![], order)?);
    }
    let branches: Vec<ToeplitzSpec> = generators
        .iter()
        .map(|path| load_matrix(path))
        .collect::<Result<_>>()?;
    let field = branches[0].field().clone();
    let n = branches[0].n();
    if let Some(k) = k {
        if k != n {
            bail!("--k {} does not match the {1}x{1} generators", k, n);
        }
    }
    Ok(GeneratorStack::new(field, n, branches, order)?)
}

fn cmd_encode(args: EncodeArgs) -> Result<i32> {
    let stack = build_stack(&args.generator, args.k, args.p, args.poly, args.order.into())?;
    let field = stack.field().clone();
    let data = fs::read(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let k = stack.k();
    let l = args.packet_size as usize;
    if l == 0 {
        bail!("--packet-size must be positive");
    }
    let chunk = k * l;
    let generations = data.len().div_ceil(chunk);
    let pad = generations * chunk - data.len();
    let file = fs::File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    let mut out = BufWriter::new(file);
    for g in 0..generations {
        let base = g * chunk;
        let source: Vec<Vec<u8>> = (0..k)
            .map(|t| {
                let lo = (base + t * l).min(data.len());
                let hi = (base + (t + 1) * l).min(data.len());
                let mut row = data[lo..hi].to_vec();
                row.resize(l, 0);
                row
            })
            .collect();
        let last = g + 1 == generations;
        for row in stack.encode(&source, g as u32)? {
            let packet = Packet {
                p: field.p() as u8,
                poly: field.poly(),
                k: k as u16,
                generation: row.generation,
                branch: row.branch,
                index: row.index,
                pad: last.then_some(pad as u32),
                payload: row.payload,
            };
            packet.write_to(&mut out)?;
        }
    }
    out.flush()?;
    println!(
        "{} bytes -> {} generations, {} packets, {} pad bytes",
        data.len(),
        generations,
        generations * stack.emitted_rows(),
        pad
    );
    Ok(0)
}

fn parse_erasures(text: Option<&str>) -> Result<Vec<(u8, u16)>> {
    let Some(text) = text else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (branch, index) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| anyhow!("erasure '{part}' is not branch:index"))?;
        out.push((
            parse_u8_flex(branch).map_err(|e| anyhow!(e))?,
            parse_u16_flex(index).map_err(|e| anyhow!(e))?,
        ));
    }
    Ok(out)
}

fn cmd_decode(args: DecodeArgs) -> Result<i32> {
    let stack = build_stack(
        &args.generator,
        args.k,
        args.p,
        args.poly,
        EmissionOrder::Interleaved,
    )?;
    let field = stack.field().clone();
    let erasures = parse_erasures(args.erase.as_deref())?;
    let data = fs::read(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let packets = read_all(&mut data.as_slice())?;

    let mut generations: BTreeMap<u32, Vec<CodedRow>> = BTreeMap::new();
    let mut pads: BTreeMap<u32, u32> = BTreeMap::new();
    for packet in packets {
        if packet.p as u32 != field.p() || packet.poly != field.poly() {
            bail!(
                "packet field GF(2^{})/{:#x} does not match the generator",
                packet.p,
                packet.poly
            );
        }
        if packet.k as usize != stack.k() {
            bail!("packet k = {} does not match the generator", packet.k);
        }
        if let Some(pad) = packet.pad {
            pads.insert(packet.generation, pad);
        }
        let rows = generations.entry(packet.generation).or_default();
        if !erasures.contains(&(packet.branch, packet.index)) {
            rows.push(CodedRow {
                branch: packet.branch,
                index: packet.index,
                generation: packet.generation,
                payload: packet.payload,
            });
        }
    }

    let mut recovered = Vec::new();
    let mut last_generation = None;
    for (g, rows) in &generations {
        match stack.decode(rows) {
            Ok(source) => recovered.extend(source.into_iter().flatten()),
            Err(CodecError::Undecodable { rank, needed }) => {
                eprintln!("generation {g} undecodable: rank {rank} of {needed}");
                return Ok(EXIT_FALSE);
            }
            Err(e) => return Err(e.into()),
        }
        last_generation = Some(*g);
    }
    if let Some(g) = last_generation {
        if let Some(&pad) = pads.get(&g) {
            let keep = recovered.len().saturating_sub(pad as usize);
            recovered.truncate(keep);
        }
    }
    fs::write(&args.output, &recovered)
        .with_context(|| format!("writing {}", args.output.display()))?;
    println!("{} generations, {} bytes", generations.len(), recovered.len());
    Ok(0)
}

fn cmd_recode(args: RecodeArgs) -> Result<i32> {
    let r = load_matrix(&args.matrix)?;
    let r_dense = r.dense();
    let data = fs::read(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let packets = read_all(&mut data.as_slice())?;

    let mut branch_rows: BTreeMap<u32, Vec<CodedRow>> = BTreeMap::new();
    for packet in &packets {
        if packet.branch == args.branch {
            branch_rows.entry(packet.generation).or_default().push(CodedRow {
                branch: packet.branch,
                index: packet.index,
                generation: packet.generation,
                payload: packet.payload.clone(),
            });
        }
    }
    if branch_rows.is_empty() {
        bail!("input has no packets of branch {}", args.branch);
    }
    let mut rewritten: BTreeMap<(u32, u16), Vec<u8>> = BTreeMap::new();
    for (g, rows) in &branch_rows {
        for row in srtz::codec::recode(&r_dense, rows)? {
            rewritten.insert((*g, row.index), row.payload);
        }
    }

    let file = fs::File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    let mut out = BufWriter::new(file);
    for mut packet in packets {
        if packet.branch == args.branch {
            packet.payload = rewritten
                .get(&(packet.generation, packet.index))
                .expect("every branch packet was recoded")
                .clone();
        }
        packet.write_to(&mut out)?;
    }
    out.flush()?;
    println!(
        "recoded branch {} across {} generations",
        args.branch,
        branch_rows.len()
    );

    if let Some(out_path) = &args.emit_generator {
        let a = load_matrix(args.generator.as_ref().expect("clap enforces --generator"))?;
        if a.n() != r.n() {
            bail!("generator and recoding matrix sizes differ");
        }
        let field = a.field();
        if field.p() != r.field().p() || field.poly() != r.field().poly() {
            bail!("generator and recoding matrix fields differ");
        }
        let product = r_dense.multiply(&a.dense())?;
        let powers = field.omega_powers(a.omega())?;
        let exponents: Vec<u16> = (1..a.n())
            .map(|i| {
                powers.log_of(product.at(i, 0)).ok_or_else(|| {
                    anyhow!("product first column has a zero entry; no exponent form exists")
                })
            })
            .collect::<Result<_>>()?;
        let spec = ToeplitzSpec::new(field.clone(), a.omega(), exponents)?;
        write_json(out_path, &MatrixFile::from_spec(&spec))?;
        println!(
            "product generator: exponents {}",
            join_exponents(spec.exponents())
        );
    }
    Ok(0)
}

/// Deterministic filler so bench runs are repeatable.
fn bench_source(field: &FieldSpec, k: usize, l: usize) -> Vec<Vec<u8>> {
    let span = field.element_count() as usize;
    (0..k)
        .map(|t| (0..l).map(|j| ((t * 131 + j * 7 + 13) % span) as u8).collect())
        .collect()
}

/// Encode `generations` blocks and decode each from the coded branch alone
/// (the systematic rows erased), returning elapsed seconds.
fn bench_run(stack: &GeneratorStack, l: usize, generations: u32) -> Result<f64> {
    let source = bench_source(stack.field(), stack.k(), l);
    let coded_only = stack.m() > 1;
    let run = |count: u32| -> Result<f64> {
        let start = Instant::now();
        for g in 0..count {
            let rows = stack.encode(&source, g)?;
            let kept: Vec<CodedRow> = if coded_only {
                rows.into_iter().filter(|r| r.branch != 0).collect()
            } else {
                rows
            };
            let out = stack.decode(&kept)?;
            std::hint::black_box(&out);
        }
        Ok(start.elapsed().as_secs_f64())
    };
    run(1)?; // warmup
    run(generations)
}

fn subdiagonal_units(spec: &ToeplitzSpec) -> usize {
    let dense = spec.dense();
    let mut count = 0;
    for i in 0..dense.rows() {
        for j in 0..i {
            if dense.at(i, j).0 == 1 {
                count += 1;
            }
        }
    }
    count
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    if args.matrix.len() > 2 {
        bail!("bench compares at most two matrices");
    }
    let l = args.packet_size as usize;
    if l == 0 {
        bail!("--packet-size must be positive");
    }
    if args.matrix.is_empty() {
        let k = args.k.unwrap_or(10);
        let field = build_field(args.p.unwrap_or(8), args.poly)?;
        let stack = GeneratorStack::new(field, k, vec![], EmissionOrder::Interleaved)?;
        let secs = bench_run(&stack, l, args.generations)?;
        let bytes = args.generations as f64 * (k * l) as f64;
        println!(
            "identity baseline (k = {k}): {:.1} MB/s encode+decode",
            bytes / secs / 1e6
        );
        return Ok(0);
    }
    let mut rates = Vec::new();
    for path in &args.matrix {
        let spec = load_matrix(path)?;
        let k = spec.n();
        let units = subdiagonal_units(&spec);
        let stack = GeneratorStack::new(
            spec.field().clone(),
            k,
            vec![spec],
            EmissionOrder::Interleaved,
        )?;
        let secs = bench_run(&stack, l, args.generations)?;
        let bytes = args.generations as f64 * (k * l) as f64;
        let rate = bytes / secs / 1e6;
        println!(
            "{}: {:.1} MB/s encode+decode, {} multiply-free subdiagonal entries",
            path.display(),
            rate,
            units
        );
        rates.push(rate);
    }
    if let [first, second] = rates[..] {
        println!(
            "gain of {} over {}: {:+.1}%",
            args.matrix[0].display(),
            args.matrix[1].display(),
            (first / second - 1.0) * 100.0
        );
    }
    Ok(0)
}
