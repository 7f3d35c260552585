mod spec;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cartesian_batch::buckets::{enumerate_subspaces, merge_buckets, subspace_condition, write_csv};
use cartesian_batch::validator::{
    check_equiv_theorem, exhaustive_validate, verify_qrs, EquivCheck,
};
use cartesian_batch::{BatchCode, BucketConfig, Mode, Query, Subspace, ValidateOptions};
use clap::{Parser, Subcommand, ValueEnum};

use crate::spec::Loaded;

/// Affine Cartesian codes as batch codes.
#[derive(Parser)]
#[command(name = "acbatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the code and buckets and print a summary.
    Build {
        spec: PathBuf,
        /// Write the bucket table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Produce recovery sets for exactly t points, given as `a,b,c` element indices.
    Query {
        spec: PathBuf,
        #[arg(required = true)]
        points: Vec<String>,
        /// Print the recovery sets as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Check every query of a mode against brute-force search.
    Validate {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Classes)]
        mode: ModeArg,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall time out of the report so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Merge buckets `tau` at a time.
    Merge {
        spec: PathBuf,
        #[arg(long)]
        tau: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compute the three equivalent subspace conditions.
    EquivCheck {
        spec: PathBuf,
        /// Check every subspace of F_q^mu instead of the one in the spec.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Classes,
    Sample,
}

/// Marks failures that mean "configuration invalid" rather than bad input.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { spec, csv } => build(&spec, csv.as_deref()),
        Command::Query { spec, points, json } => query(&spec, &points, json),
        Command::Validate {
            spec,
            mode,
            t,
            tau,
            seed,
            samples,
            out,
            no_timing,
        } => {
            let mode = match mode {
                ModeArg::Full => Mode::Full,
                ModeArg::Classes => Mode::BucketClasses,
                ModeArg::Sample => Mode::Sample { samples, seed },
            };
            validate(&spec, mode, t, tau, out.as_deref(), !no_timing)
        }
        Command::Merge { spec, tau, csv } => merge(&spec, tau, csv.as_deref()),
        Command::EquivCheck { spec, all } => equiv(&spec, all),
    }
}

fn save_csv(config: &BucketConfig, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_csv(config, &mut w)?;
    w.flush()?;
    Ok(())
}

/// The spec's code with buckets merged by its `tau`, or by `tau` if given.
fn configured(loaded: &Loaded, tau: Option<usize>) -> Result<(BatchCode, usize)> {
    let tau = tau.unwrap_or(loaded.tau());
    if tau == 0 {
        bail!("--tau must be at least 1");
    }
    let bc = if tau > 1 {
        loaded.batch.merged(tau)?
    } else {
        loaded.batch.clone()
    };
    Ok((bc, tau))
}

fn build(path: &Path, csv: Option<&Path>) -> Result<()> {
    let loaded = spec::load(path)?;
    let (bc, _) = configured(&loaded, None)?;
    let ok = subspace_condition(bc.config().subspace());
    println!(
        "n={} k={} m={} ν={} condition={}",
        bc.code().len(),
        bc.code().dimension(),
        bc.config().m(),
        bc.code().nu().count,
        if ok { "OK" } else { "FAIL" }
    );
    if let Some(csv) = csv {
        save_csv(bc.config(), csv)?;
    }
    if ok {
        Ok(())
    } else {
        Err(invalid("the subspace meets a coordinate plane"))
    }
}

fn fmt_point(p: &[cartesian_batch::FieldElement]) -> String {
    let parts: Vec<String> = p.iter().map(|a| a.to_string()).collect();
    format!("({})", parts.join(","))
}

fn query(path: &Path, points: &[String], json: bool) -> Result<()> {
    let loaded = spec::load(path)?;
    let t = loaded.t();
    if points.len() != t {
        bail!("expected exactly t={t} points, got {}", points.len());
    }
    let pts = points
        .iter()
        .map(|s| loaded.parse_point(s))
        .collect::<Result<Vec<_>>>()?;
    let (bc, tau) = configured(&loaded, None)?;
    bc.solver_precondition()
        .map_err(|e| invalid(e.to_string()))?;
    let q = Query::from_points(bc.domain(), &pts)?;
    let qrs = bc.solve(&q).map_err(|e| invalid(e.to_string()))?;
    let verdict = verify_qrs(bc.config(), &q, &qrs, tau);

    let mut out = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, &qrs)?;
        writeln!(out)?;
    } else {
        let d = bc.domain();
        for (s, set) in qrs.sets().iter().enumerate() {
            let members: Vec<String> = set.members.iter().map(|&j| fmt_point(d.point(j))).collect();
            let buckets: Vec<String> = set
                .members
                .iter()
                .map(|&j| bc.config().bucket_of(j).to_string())
                .collect();
            writeln!(
                out,
                "{s} {} direction={} members=[{}] buckets=[{}]",
                fmt_point(d.point(set.anchor)),
                set.direction,
                members.join(" "),
                buckets.join(",")
            )?;
        }
    }
    if verdict.is_ok() {
        writeln!(out, "verdict=OK")?;
        Ok(())
    } else {
        for v in &verdict.violations {
            writeln!(out, "violation: {v}")?;
        }
        writeln!(out, "verdict=FAIL")?;
        Err(invalid("recovery sets fail verification"))
    }
}

fn validate(
    path: &Path,
    mode: Mode,
    t: Option<usize>,
    tau: Option<usize>,
    out: Option<&Path>,
    timing: bool,
) -> Result<()> {
    let loaded = spec::load(path)?;
    let t = t.unwrap_or(loaded.t());
    if t == 0 {
        bail!("--t must be at least 1");
    }
    let (bc, tau) = configured(&loaded, tau)?;
    let opts = ValidateOptions {
        timing,
        ..ValidateOptions::default()
    };
    let report = exhaustive_validate(&bc, t, tau, mode, &opts);
    print!("{report}");
    if let Some(out) = out {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    if report.passed() {
        Ok(())
    } else if report.totals.failures > 0 {
        Err(invalid(format!(
            "{} failing queries",
            report.totals.failures
        )))
    } else {
        Err(invalid(format!(
            "{} searches truncated",
            report.totals.truncated
        )))
    }
}

fn merge(path: &Path, tau: usize, csv: Option<&Path>) -> Result<()> {
    let loaded = spec::load(path)?;
    let config = loaded.batch.config();
    let merged = merge_buckets(config, tau)?;
    println!(
        "m={} tau={} -> m={} tau={}",
        config.m(),
        config.tau(),
        merged.m(),
        merged.tau()
    );
    for (b, members) in merged.buckets().iter().enumerate() {
        let cosets: BTreeSet<usize> = members.iter().map(|&j| merged.coset_of(j)).collect();
        let labels: Vec<String> = cosets
            .iter()
            .map(|&c| merged.cosets()[c].to_string())
            .collect();
        println!(
            "bucket {b}: size={} cosets={}",
            members.len(),
            labels.join(" ")
        );
    }
    if let Some(csv) = csv {
        save_csv(&merged, csv)?;
    }
    Ok(())
}

fn print_equiv(out: &mut impl Write, v: &Subspace, c: &EquivCheck) -> io::Result<()> {
    writeln!(
        out,
        "V={:?} i={} ii={} iii={} agree={}",
        v.basis_values(),
        c.plane_condition,
        c.stars_separated,
        c.same_point_served,
        c.agree()
    )
}

fn equiv(path: &Path, all: bool) -> Result<()> {
    let loaded = spec::load(path)?;
    if !loaded.batch.domain().is_full_space() {
        bail!("equiv-check needs subsets covering the whole field");
    }
    let mu = loaded.mu();
    let subspaces = if all {
        enumerate_subspaces(&loaded.field, mu)
    } else {
        vec![loaded.batch.config().subspace().clone()]
    };
    let mut out = io::stdout().lock();
    let mut disagreements = 0;
    for v in &subspaces {
        let c = check_equiv_theorem(&loaded.field, mu, v);
        print_equiv(&mut out, v, &c)?;
        disagreements += usize::from(!c.agree());
    }
    if disagreements > 0 {
        Err(invalid(format!(
            "{disagreements} subspaces where the conditions disagree"
        )))
    } else {
        Ok(())
    }
}
