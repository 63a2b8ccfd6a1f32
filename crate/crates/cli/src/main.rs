use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use collspec::engine::{build_plan, PolicyConfig, ReplacementPlan};
use collspec::harness::{
    self, compare, fixture, ComparisonReport, RunReport, WorkloadSpec, DEFAULT_PROFILE_SCALE, FIXTURE_NAMES,
};
use collspec::ir::{apply_plan, IrGraph, TypeCatalog};
use collspec::profile;
use collspec::SiteId;

#[derive(Parser)]
#[command(name = "collspec", version, about = "Profile-guided collection specialization per allocation site")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a workload on baseline collections and write its profile.
    Profile {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = DEFAULT_PROFILE_SCALE)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the run report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Derive a replacement plan from a profile.
    Plan {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a workload on baseline collections and write the report.
    Baseline {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run a workload with the collections chosen by a plan.
    Optimize {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Allocated-bytes ratios of an optimized run against its baseline.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        optimized: PathBuf,
        /// Write the comparison as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Size-class histogram of a profile.
    Histogram {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rewrite the allocations of an IR graph according to a plan.
    IrRewrite {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile, plan, and measure in one go; writes every artifact to a directory.
    Pipeline {
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = DEFAULT_PROFILE_SCALE)]
        profile_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print a built-in workload spec, or list them.
    Fixture { name: Option<String> },
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long)]
    fixed_size_share: Option<f64>,
    #[arg(long = "entry-access-ratio")]
    entry_access_ratio: Option<f64>,
    #[arg(long)]
    fixed_entry_access_limit: Option<u64>,
    #[arg(long)]
    economic_min_size: Option<u64>,
    #[arg(long)]
    economic_min_size_share: Option<f64>,
    #[arg(long)]
    economic_size_cap: Option<u64>,
    /// Keep the original type at this site; repeatable.
    #[arg(long, value_name = "CTX")]
    exclude: Vec<String>,
}

impl PolicyArgs {
    fn config(&self) -> Result<PolicyConfig> {
        let d = PolicyConfig::default();
        let mut cfg = PolicyConfig {
            fixed_size_share: self.fixed_size_share.unwrap_or(d.fixed_size_share),
            entry_access_ratio_max: self.entry_access_ratio.unwrap_or(d.entry_access_ratio_max),
            fixed_entry_access_limit: self.fixed_entry_access_limit.unwrap_or(d.fixed_entry_access_limit),
            economic_min_size: self.economic_min_size.unwrap_or(d.economic_min_size),
            economic_min_size_share: self.economic_min_size_share.unwrap_or(d.economic_min_size_share),
            economic_size_cap: self.economic_size_cap.unwrap_or(d.economic_size_cap),
            excluded: d.excluded,
        };
        for ctx in &self.exclude {
            let site: SiteId = ctx.parse().with_context(|| format!("--exclude {ctx:?}"))?;
            cfg = cfg.exclude(site);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    let mut text = contents.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `fixture:<name>` or a path to a JSON spec.
fn load_spec(arg: &str) -> Result<WorkloadSpec> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        return fixture(name)
            .with_context(|| format!("unknown fixture {name:?}; available: {}", FIXTURE_NAMES.join(", ")));
    }
    let spec = WorkloadSpec::parse(&read(Path::new(arg))?).with_context(|| format!("parsing spec {arg}"))?;
    spec.validate()?;
    Ok(spec)
}

fn load_plan(path: &Path) -> Result<ReplacementPlan> {
    ReplacementPlan::parse(&read(path)?).with_context(|| format!("parsing plan {}", path.display()))
}

fn load_profile(path: &Path) -> Result<profile::ProfileStore> {
    profile::parse(&read(path)?).with_context(|| format!("parsing profile {}", path.display()))
}

fn load_report(path: &Path) -> Result<RunReport> {
    RunReport::parse(&read(path)?).with_context(|| format!("parsing report {}", path.display()))
}

fn print_plan(plan: &ReplacementPlan) {
    for (site, entry) in &plan.entries {
        println!("{}  {}  {}", site.ctx(), entry.kind, entry.decision);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Profile { spec, scale, out, report } => {
            let run = harness::run_instrumented(&load_spec(&spec)?, scale)?;
            write(&out, &profile::serialize(&run.profile))?;
            if let Some(path) = report {
                write(&path, &run.report.to_json())?;
            }
            print!("{}", run.report.to_text());
        }
        Command::Plan { profile, policy, out } => {
            let plan = build_plan(&load_profile(&profile)?, &policy.config()?)?;
            write(&out, &plan.serialize())?;
            print_plan(&plan);
        }
        Command::Baseline { spec, scale, report } => {
            let run = harness::run_instrumented(&load_spec(&spec)?, scale)?;
            write(&report, &run.report.to_json())?;
            print!("{}", run.report.to_text());
        }
        Command::Optimize { spec, plan, report, scale } => {
            let run = harness::run_with_plan(&load_spec(&spec)?, &load_plan(&plan)?, scale)?;
            write(&report, &run.report.to_json())?;
            print!("{}", run.report.to_text());
        }
        Command::Compare { baseline, optimized, out } => {
            let c: ComparisonReport = compare(&load_report(&baseline)?, &load_report(&optimized)?)?;
            if let Some(path) = out {
                write(&path, &c.to_json())?;
            }
            print!("{}", c.to_text());
        }
        Command::Histogram { profile, json } => {
            let h = harness::histogram(&load_profile(&profile)?);
            if json {
                println!("{}", h.to_json());
            } else {
                print!("{}", h.to_text());
            }
        }
        Command::IrRewrite { graph, plan, out } => {
            let g = IrGraph::parse(&read(&graph)?).with_context(|| format!("parsing graph {}", graph.display()))?;
            let rewritten = apply_plan(&g, &load_plan(&plan)?, &TypeCatalog::standard())?;
            let dump = rewritten.dump();
            match out {
                Some(path) => write(&path, &dump)?,
                None => print!("{dump}"),
            }
        }
        Command::Pipeline { spec, policy, profile_scale, scale, out_dir } => {
            let spec = load_spec(&spec)?;
            let out = harness::run_pipeline(&spec, &policy.config()?, profile_scale, scale)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let stem = out_dir.join(&spec.name);
            let file = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
            write(&file(profile::PROFILE_EXTENSION), &out.profile_document)?;
            write(&file(collspec::engine::PLAN_EXTENSION), &out.plan.serialize())?;
            write(&file("baseline.json"), &out.baseline.report.to_json())?;
            write(&file("optimized.json"), &out.optimized.report.to_json())?;
            write(&file("comparison.json"), &out.comparison.to_json())?;
            print!("{}", out.comparison.to_text());
            if !out.comparison.behavior_identical {
                bail!("optimized run diverged from the baseline");
            }
        }
        Command::Fixture { name: None } => {
            for name in FIXTURE_NAMES {
                println!("{name}");
            }
        }
        Command::Fixture { name: Some(name) } => {
            let spec = fixture(&name)
                .with_context(|| format!("unknown fixture {name:?}; available: {}", FIXTURE_NAMES.join(", ")))?;
            println!("{}", spec.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collspec: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
