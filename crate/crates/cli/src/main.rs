//! `mechkit` command line: solve, check, compare and generate instances.
//!
//! Exit codes: 0 ok, 1 an axiom is violated, 2 invalid input, 3 a cap was hit.
//! JSON goes to stdout (or `--out`); human-readable text goes to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mechkit::axioms::{self, AxiomId, Caps, Verdict};
use mechkit::gen;
use mechkit::instance::{parse_instance, Family, Instance};
use mechkit::model::{Allocation, Error};
use mechkit::registry::{self, Handle, Outcome, Params};

#[derive(Parser)]
#[command(name = "mechkit", version, about = "Run and audit matching mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism on an instance.
    Solve(SolveArgs),
    /// Check axioms on an allocation, or on a mechanism's output and incentives.
    Check(CheckArgs),
    /// Compare several mechanisms agent by agent.
    Compare(CompareArgs),
    /// Generate a random instance.
    Gen(GenArgs),
}

#[derive(Args)]
struct Common {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Seed for randomized mechanisms.
    #[arg(long)]
    seed: Option<u64>,
    /// Mechanism parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mechanism: String,
    /// Include the mechanism trace in the output.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Mechanism to run first (and to probe for incentive properties).
    #[arg(long)]
    mechanism: Option<String>,
    /// Allocation JSON (a result document or a bare agent map).
    #[arg(long)]
    allocation: Option<PathBuf>,
    /// Comma list: IR, PE, NW, NJE, stability, NPR, scheme-respect,
    /// VR-compliance, max-HR, SP-grid, all, strategy-proofness, priority-improvements.
    #[arg(long, default_value = "all")]
    axioms: String,
    /// Exhaustive-search caps, e.g. agents=4,resources=4,tiers=2,units=8.
    #[arg(long)]
    caps: Option<String>,
    /// Include the mechanism trace in the output.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list of mechanisms; each may carry parameters as name:key=value;key=value.
    #[arg(long)]
    mechanism: String,
}

#[derive(Args)]
struct GenArgs {
    /// one-sided, two-sided, contracts, reserves or exchange.
    family: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator knob as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a),
        Command::Compare(a) => compare(a),
        Command::Gen(a) => generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::CapExceeded { .. }) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_instance(&text)?)
}

fn params(c: &Common) -> anyhow::Result<Params> {
    let mut p = Params::parse_pairs(c.params.iter().map(String::as_str))?;
    if let Some(s) = c.seed {
        p.set("seed", s);
    }
    Ok(p)
}

fn emit(out: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn result_doc(o: &Outcome, trace: bool) -> Value {
    let mut v = json!({ "allocation": o.allocation });
    if trace && !o.trace.is_null() {
        v["trace"] = o.trace.clone();
    }
    v
}

fn solve(a: SolveArgs) -> anyhow::Result<u8> {
    let inst = load(&a.common.instance)?;
    let o = registry::run(&a.mechanism, &inst, &params(&a.common)?)?;
    emit(a.common.out.as_deref(), &result_doc(&o, a.trace))?;
    Ok(0)
}

enum Probe {
    StrategyProofness,
    PriorityImprovements,
}

fn check(a: CheckArgs) -> anyhow::Result<u8> {
    let inst = load(&a.common.instance)?;
    let caps: Caps = match &a.caps {
        Some(s) => s.parse()?,
        None => Caps::default(),
    };
    let handle = a
        .mechanism
        .as_ref()
        .map(|m| -> anyhow::Result<Handle> { Ok(Handle { name: m.clone(), params: params(&a.common)? }) })
        .transpose()?;
    let mut probes = Vec::new();
    let mut rest = Vec::new();
    for item in a.axioms.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.to_ascii_lowercase().as_str() {
            "sp" | "strategy-proofness" => probes.push(Probe::StrategyProofness),
            "priority-improvements" => probes.push(Probe::PriorityImprovements),
            _ => rest.push(item),
        }
    }
    let specs: Vec<AxiomId> = if rest.is_empty() { Vec::new() } else { axioms::parse_specs(&rest.join(","), &inst)? };

    let mut doc = serde_json::Map::new();
    let (alloc, outcome) = match (&a.allocation, &handle) {
        (Some(path), _) => (Some(read_allocation(path)?), None),
        (None, Some(h)) if !specs.is_empty() => {
            let o = h.run(&inst)?;
            (Some(o.allocation.clone()), Some(o))
        }
        (None, None) => bail!(Error::Param("check needs --allocation or --mechanism".into())),
        _ => (None, None),
    };
    let mut report = BTreeMap::new();
    if let Some(alloc) = &alloc {
        for (k, v) in axioms::check_allocation(&inst, alloc, &specs)? {
            report.insert(k, v);
        }
    }
    for p in probes {
        let h = handle.as_ref().ok_or_else(|| Error::Param("incentive checks need --mechanism".into()))?;
        let (name, v) = match p {
            Probe::StrategyProofness => ("strategy-proofness", axioms::check_strategy_proofness(h, &inst, &caps)?),
            Probe::PriorityImprovements => ("priority-improvements", axioms::check_priority_improvements(h, &inst, &caps)?),
        };
        report.insert(name.to_string(), v);
    }
    let mut violated = false;
    for (name, v) in &report {
        match v {
            Verdict::Holds => eprintln!("{name}: holds"),
            Verdict::NotApplicable { reason } => eprintln!("{name}: not applicable ({reason})"),
            Verdict::Violated { witness } => {
                violated = true;
                eprintln!("{name}: violated: {}", witness.replay);
            }
        }
    }
    doc.insert("report".into(), serde_json::to_value(&report)?);
    if let Some(o) = &outcome {
        doc.insert("result".into(), result_doc(o, a.trace));
    }
    emit(a.common.out.as_deref(), &Value::Object(doc))?;
    Ok(if violated { 1 } else { 0 })
}

fn read_allocation(path: &Path) -> anyhow::Result<Allocation> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let body = v.get("allocation").cloned().unwrap_or(v);
    Ok(serde_json::from_value(body).map_err(Error::from)?)
}

/// `name:key=value;key=value` into a handle, layered over the shared parameters.
fn parse_handle(spec: &str, base: &Params) -> anyhow::Result<Handle> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut h = Handle { name: name.trim().to_string(), params: base.clone() };
    for (k, v) in Params::parse_pairs(rest.split(';').filter(|s| !s.trim().is_empty()))?.0 {
        h.params.set(&k, v);
    }
    Ok(h)
}

fn transplants(o: &Outcome) -> Option<u64> {
    o.trace.as_array()?.last()?.get("transplants")?.as_u64()
}

fn compare(a: CompareArgs) -> anyhow::Result<u8> {
    let inst = load(&a.common.instance)?;
    let base = params(&a.common)?;
    let specs: Vec<&str> = a.mechanism.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if specs.len() < 2 {
        bail!(Error::Param("compare needs at least two mechanisms".into()));
    }
    let mut labels = Vec::new();
    let mut outcomes = Vec::new();
    for s in &specs {
        let h = parse_handle(s, &base)?;
        outcomes.push(h.run(&inst)?);
        labels.push(s.to_string());
    }
    let agents = inst.agents();
    let mut per_agent = serde_json::Map::new();
    for name in &agents {
        let row: serde_json::Map<String, Value> = labels
            .iter()
            .zip(&outcomes)
            .map(|(l, o)| (l.clone(), serde_json::to_value(o.allocation.get(name)).unwrap()))
            .collect();
        per_agent.insert(name.clone(), Value::Object(row));
    }
    let mut pairs = Vec::new();
    for x in 0..labels.len() {
        for y in x + 1..labels.len() {
            let (ax, ay) = (&outcomes[x].allocation, &outcomes[y].allocation);
            let mut better_x = Vec::new();
            let mut better_y = Vec::new();
            let mut differ = Vec::new();
            for (i, name) in agents.iter().enumerate() {
                let (p, q) = (ax.get(name), ay.get(name));
                if p != q {
                    differ.push(name.clone());
                }
                if axioms::value(&inst, i, p) != axioms::value(&inst, i, q) {
                    if mechkit::model::strictly_better(axioms::value(&inst, i, p), axioms::value(&inst, i, q)) {
                        better_x.push(name.clone());
                    } else {
                        better_y.push(name.clone());
                    }
                }
            }
            let verdict = match (better_x.is_empty(), better_y.is_empty()) {
                (true, true) => "indifferent",
                (false, true) => "first-dominates",
                (true, false) => "second-dominates",
                (false, false) => "incomparable",
            };
            eprintln!("{} vs {}: {verdict}; {} agents differ", labels[x], labels[y], differ.len());
            let mut entry = json!({
                "first": labels[x],
                "second": labels[y],
                "pareto": verdict,
                "differ": differ,
                "better_in_first": better_x,
                "better_in_second": better_y,
            });
            if inst.family() == Family::Exchange {
                if let (Some(tx), Some(ty)) = (transplants(&outcomes[x]), transplants(&outcomes[y])) {
                    entry["transplant_delta"] = json!(ty as i64 - tx as i64);
                }
            }
            pairs.push(entry);
        }
    }
    let mut doc = json!({ "mechanisms": labels, "agents": per_agent, "pairs": pairs });
    if inst.family() == Family::Exchange {
        let t: serde_json::Map<String, Value> =
            labels.iter().zip(&outcomes).map(|(l, o)| (l.clone(), json!(transplants(o)))).collect();
        for (l, o) in labels.iter().zip(&outcomes) {
            eprintln!("{l}: {} transplants", transplants(o).unwrap_or(0));
        }
        doc["transplants"] = Value::Object(t);
    }
    emit(a.common.out.as_deref(), &doc)?;
    Ok(0)
}

fn generate(a: GenArgs) -> anyhow::Result<u8> {
    let family: Family = serde_json::from_value(Value::String(a.family.clone()))
        .map_err(|_| Error::Param(format!("unknown family '{}'", a.family)))?;
    let p = Params::parse_pairs(a.params.iter().map(String::as_str))?;
    let inst = gen::generate(family, &p, a.seed)?;
    let v: Value = serde_json::from_str(&inst.to_json())?;
    emit(a.out.as_deref(), &v)?;
    Ok(0)
}
