mod exit;
mod inputs;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tilting_core::blocks::{ExtendedCollection, DEFAULT_ROUND_CAP};
use tilting_core::certify::{
    audit_rules, certify_tilting, certify_two_tilting, cross_check, replay, Certificate,
    CertifyError, Verdict,
};
use tilting_core::collections::{default_max_steps, search_sorted_line_collections};
use tilting_core::io::CollectionFile;
use tilting_core::pipeline::{construct, PipelineError, Strategy};
use tilting_core::properties::{check_surface, DEFAULT_SEED};
use tilting_core::series::{series_reports, CheckStatus};
use tilting_core::toric::{SmoothToricSurface, SurfaceKind};

use exit::{Failure, Outcome};
use inputs::{default_catalog, digest, load_collection, load_fan};

#[derive(Parser)]
#[command(
    name = "tilting",
    version,
    about = "2-tilting bundles on toric weak del Pezzo surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Leave out version, timestamp and timing so reports are byte-stable.
    #[arg(long, global = true)]
    no_meta: bool,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for all random sampling.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory of named fan files.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    BlowupChain,
    Search,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a fan gives a (weak) del Pezzo surface.
    Classify {
        fan: String,
        /// Random divisors for the cohomology property check.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Build, sort, extend and certify a collection.
    Construct {
        fan: String,
        #[arg(long, value_enum, default_value = "blowup-chain")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1)]
        radius: i64,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ROUND_CAP)]
        rounds: usize,
        /// Sorting trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Extension log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Certify a collection file as (2-)tilting.
    Certify { collection: PathBuf },
    /// Hilbert series of the anticanonical ring, the module summands and Pi3.
    Series {
        collection: PathBuf,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
    },
    /// Search window-sorted full exceptional collections of line bundles.
    Search {
        fan: String,
        #[arg(long, default_value_t = 1)]
        radius: i64,
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// Blow up a torus-fixed point and print the new fan.
    Blowup {
        fan: String,
        /// Cone between ray `corner` and the next ray.
        #[arg(long)]
        corner: usize,
        #[arg(long)]
        name: Option<String>,
    },
}

struct Ctx {
    no_meta: bool,
    output: Option<PathBuf>,
    seed: u64,
    catalog: PathBuf,
    started: Instant,
}

impl Ctx {
    fn emit(&self, mut value: Value) -> Result<(), Failure> {
        if !self.no_meta {
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            value["meta"] = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "timestamp": now,
                "elapsed_ms": self.started.elapsed().as_millis() as u64,
            });
        }
        let mut text = serde_json::to_string_pretty(&value).expect("json");
        text.push('\n');
        match &self.output {
            Some(p) => fs::write(p, text)
                .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
            None => {
                std::io::stdout().write_all(text.as_bytes()).ok();
                Ok(())
            }
        }
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("json"));
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 10] = [
        "no", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    ];
    let w = WORDS.get(n).map_or(n.to_string(), |w| w.to_string());
    format!("{w} (-2)-curve{}", if n == 1 { "" } else { "s" })
}

fn verdict_line(s: &SmoothToricSurface) -> String {
    let v = s.classify();
    match v.kind {
        SurfaceKind::DelPezzo => format!("del-pezzo, degree {}", v.degree),
        SurfaceKind::WeakDelPezzo => format!(
            "weak-del-pezzo, degree {}, {}",
            v.degree,
            count_word(v.minus2curves.len())
        ),
        SurfaceKind::Rejected => format!("rejected: {}", v.reason.unwrap_or_default()),
    }
}

fn fan_json(s: &SmoothToricSurface) -> Value {
    json!({ "name": s.fan.name, "rays": s.fan.rays, "digest": digest(&s.fan.rays) })
}

fn cmd_classify(ctx: &Ctx, fan: &str, samples: usize) -> Result<(), Failure> {
    let s = load_fan(fan, &ctx.catalog)?;
    println!("{}", verdict_line(&s));
    let mut report = json!({
        "command": "classify",
        "fan": fan_json(&s),
        "selfint": s.selfint,
        "verdict": s.classify(),
    });
    let mut failure = None;
    if samples > 0 {
        let props = check_surface(&s, samples, ctx.seed, 5);
        if !props.failures.is_empty() {
            failure = Some(Failure::internal(format!(
                "{} property failure(s), first: {:?}",
                props.failures.len(),
                props.failures[0]
            )));
        }
        report["properties"] = serde_json::to_value(props).expect("json");
    }
    if ctx.output.is_some() || failure.is_some() {
        match failure {
            Some(f) => return Err(f.with_body(report)),
            None => ctx.emit(report)?,
        }
    }
    Ok(())
}

fn certificate_failure(e: CertifyError, cert: &Certificate) -> Failure {
    let msg = e.to_string();
    Failure::from(e).with_body(json!({ "error": msg, "certificate": cert }))
}

/// Certifies, replays, and for plain line-bundle collections runs the rule
/// audit and the honest twist check.
fn full_certification(ext: &ExtendedCollection) -> Result<(Certificate, Value), Failure> {
    let cert = certify_tilting(ext)?;
    if cert.verdict == Verdict::Incomplete {
        let blocking = cert.blocking.len();
        return Err(
            certificate_failure(CertifyError::NotTilting(cert.blocking.clone()), &cert).with_body(
                json!({ "error": format!("{blocking} blocking fact(s)"), "certificate": cert }),
            ),
        );
    }
    let two = certify_two_tilting(&cert).map_err(|e| certificate_failure(e, &cert))?;
    replay(ext, &two)?;
    let mut checks = json!({ "replay": "pass" });
    let lines = ext.log.is_empty() && ext.base.members.iter().all(|m| m.divisor().is_some());
    if lines {
        let audit = audit_rules(&ext.base)?;
        if !audit.discrepancies.is_empty() {
            return Err(Failure::internal(format!(
                "rule audit disagrees with cohomology: {:?}",
                audit.discrepancies[0]
            )));
        }
        let twist = cross_check(&two, &ext.base)?;
        checks["audit"] = serde_json::to_value(audit).expect("json");
        checks["twist_vanishing"] = json!({ "checked": twist.checked, "status": "pass" });
    }
    Ok((two, checks))
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    ctx: &Ctx,
    fan: &str,
    strategy: StrategyArg,
    radius: i64,
    max_steps: Option<usize>,
    rounds: usize,
    trace_path: Option<&Path>,
    log_path: Option<&Path>,
) -> Result<(), Failure> {
    let s = load_fan(fan, &ctx.catalog)?;
    let strategy = match strategy {
        StrategyArg::BlowupChain => Strategy::BlowupChain,
        StrategyArg::Search => Strategy::Search { radius },
    };
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(s.num_rays()));
    let out = match construct(&s, strategy, max_steps, rounds) {
        Ok(o) => o,
        Err(PipelineError::Incomplete(cert)) => {
            let msg = format!(
                "certification incomplete: {} blocking fact(s)",
                cert.blocking.len()
            );
            return Err(Failure {
                outcome: Outcome::Incomplete,
                message: msg.clone(),
                body: Some(json!({ "error": msg, "certificate": cert })),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let (cert, checks) = full_certification(&out.extended)?;
    if let Some(p) = trace_path {
        write_jsonl(p, &out.trace)?;
    }
    if let Some(p) = log_path {
        write_jsonl(p, &out.extended.log)?;
    }
    let collection = CollectionFile::from_collection(&out.extended);
    ctx.emit(json!({
        "command": "construct",
        "fan": fan_json(&s),
        "strategy": strategy,
        "max_steps": max_steps,
        "verdict": s.classify(),
        "initial": CollectionFile::from_collection(&out.initial.clone().into()),
        "trace": out.trace,
        "extensions": out.extended.log,
        "collection": collection,
        "collection_digest": digest(&collection),
        "contains_trivial": out.sorted.trivial_index,
        "certificate": cert,
        "checks": checks,
    }))
}

fn cmd_certify(ctx: &Ctx, path: &Path) -> Result<(), Failure> {
    let ext = load_collection(path, &ctx.catalog)?;
    let (cert, checks) = full_certification(&ext)?;
    ctx.emit(json!({
        "command": "certify",
        "input_digest": digest(&CollectionFile::from_collection(&ext)),
        "certificate": cert,
        "checks": checks,
    }))
}

fn cmd_series(ctx: &Ctx, path: &Path, n_max: usize) -> Result<(), Failure> {
    let ext = load_collection(path, &ctx.catalog)?;
    let (cert, _) = full_certification(&ext)?;
    let reports = series_reports(&ext, &cert, n_max)?;
    if let Some(r) = reports
        .iter()
        .find(|r| r.checks.growth_law == Some(CheckStatus::Fail))
    {
        return Err(Failure::internal(format!(
            "growth law fails for {}",
            r.label
        )));
    }
    ctx.emit(json!({
        "command": "series",
        "input_digest": digest(&CollectionFile::from_collection(&ext)),
        "certificate": cert.id,
        "n_max": n_max,
        "series": reports,
    }))
}

fn cmd_search(ctx: &Ctx, fan: &str, radius: i64, limit: usize) -> Result<(), Failure> {
    let s = load_fan(fan, &ctx.catalog)?;
    let found = search_sorted_line_collections(&s, radius, limit)?;
    let files: Vec<CollectionFile> = found
        .into_iter()
        .map(|c| CollectionFile::from_collection(&c.into()))
        .collect();
    ctx.emit(json!({
        "command": "search",
        "fan": fan_json(&s),
        "radius": radius,
        "limit": limit,
        "collections": files,
    }))
}

fn cmd_blowup(ctx: &Ctx, fan: &str, corner: usize, name: Option<String>) -> Result<(), Failure> {
    let s = load_fan(fan, &ctx.catalog)?;
    let b = s.blowup(corner)?;
    let name = name.unwrap_or_else(|| format!("{}-blowup{corner}", s.name()));
    // a plain fan file, so no meta block
    let out = json!({
        "name": name,
        "rays": b.surface.fan.rays,
        "exceptional_index": b.exceptional_index,
    });
    let mut text = serde_json::to_string_pretty(&out).expect("json");
    text.push('\n');
    match &ctx.output {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn repro_bundle(failure: &Failure, ctx: &Ctx) -> Option<PathBuf> {
    let args: Vec<String> = std::env::args().collect();
    let mut inputs = serde_json::Map::new();
    for a in &args[1..] {
        let p = Path::new(a);
        if p.is_file() {
            if let Ok(text) = fs::read_to_string(p) {
                inputs.insert(a.clone(), Value::String(text));
            }
        }
    }
    let bundle = json!({
        "args": args,
        "seed": ctx.seed,
        "error": failure.message,
        "inputs": inputs,
        "body": failure.body,
    });
    let dir = ctx
        .output
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf))
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join(format!("tilting-repro-{}.json", &digest(&bundle)[..12]));
    fs::write(&path, serde_json::to_string_pretty(&bundle).ok()?).ok()?;
    Some(path)
}

fn main() {
    let cli = Cli::parse();
    let ctx = Ctx {
        no_meta: cli.no_meta,
        output: cli.output,
        seed: cli.seed,
        catalog: cli.catalog.unwrap_or_else(default_catalog),
        started: Instant::now(),
    };
    let result = match cli.command {
        Command::Classify { fan, samples } => cmd_classify(&ctx, &fan, samples),
        Command::Construct {
            fan,
            strategy,
            radius,
            max_steps,
            rounds,
            trace,
            log,
        } => cmd_construct(
            &ctx,
            &fan,
            strategy,
            radius,
            max_steps,
            rounds,
            trace.as_deref(),
            log.as_deref(),
        ),
        Command::Certify { collection } => cmd_certify(&ctx, &collection),
        Command::Series { collection, n_max } => cmd_series(&ctx, &collection, n_max),
        Command::Search { fan, radius, limit } => cmd_search(&ctx, &fan, radius, limit),
        Command::Blowup { fan, corner, name } => cmd_blowup(&ctx, &fan, corner, name),
    };
    if let Err(f) = result {
        if let Some(body) = &f.body {
            let _ = ctx.emit(body.clone());
        }
        eprintln!("error: {}", f.message);
        if f.outcome == Outcome::Internal {
            if let Some(p) = repro_bundle(&f, &ctx) {
                eprintln!("repro bundle written to {}", p.display());
            }
        }
        std::process::exit(f.outcome as i32);
    }
}
