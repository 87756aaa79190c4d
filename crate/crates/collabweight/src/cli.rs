//! Command-line front end.
//!
//! Exit codes: 0 clean, 1 input rows were rejected (outputs are still
//! written), 2 usage or I/O error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use collabweight_core::{
    classify_gni, export_chord, normalize_rows, top_n, AnalysisSpec, ClassTable, Context, GroupBy,
    IncomeGroup, Normalization, OrgRegistry, PartialAggregate, TopOrder,
};
use serde::Serialize;

use crate::export::{write_chord_to, write_csv_to, CsvRow};
use crate::ingest::{load_classes, load_orgs, load_publications, LoadReport};
use crate::parallel::{aggregate_stream, DEFAULT_BATCH};
use crate::synth::{generate, random_small_corpus, write_corpus, SynthConfig};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "collabweight", version, about = "Fractionally weighted international collaboration statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load all three inputs and print their load reports as JSON.
    Validate(InputArgs),
    /// Income-by-income collaboration matrix.
    Matrix(MatrixArgs),
    /// Top-N rows by non-high-income or low-income share.
    Top(TopArgs),
    /// Print the income group for a GNI per capita figure (USD).
    Classify {
        #[arg(allow_negative_numbers = true)]
        gni: String,
    },
    /// Write a seeded synthetic corpus (pubs.jsonl, orgs.csv, classes.csv).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub pubs: PathBuf,
    #[arg(long)]
    pub orgs: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Inclusive publication year range.
    #[arg(long, default_value = "2010:2020", value_name = "MIN:MAX")]
    pub years: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Skip publications with more authors than this.
    #[arg(long)]
    pub max_authors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub perspective: Option<PerspectiveArg>,
    #[arg(long, value_enum, default_value = "income")]
    pub group_by: GroupByArg,
    #[arg(long, value_enum, default_value = "rows")]
    pub normalize: NormalizeArg,
    /// Also write chord JSON here.
    #[arg(long)]
    pub chord: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TopArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Defaults to `high` for country and institution grouping, `none` otherwise.
    #[arg(long, value_enum)]
    pub perspective: Option<PerspectiveArg>,
    #[arg(long, value_enum, default_value = "country")]
    pub group_by: GroupByArg,
    #[arg(long, value_enum, default_value = "non-high")]
    pub order: OrderArg,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub publications: usize,
    #[arg(long, default_value_t = 500)]
    pub orgs: usize,
    #[arg(long, default_value_t = 60)]
    pub countries: usize,
    #[arg(long, default_value_t = 2021)]
    pub seed: u64,
    /// Emit a small randomized corpus instead (used for oracle checks).
    #[arg(long)]
    pub small: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerspectiveArg {
    Low,
    LowerMiddle,
    UpperMiddle,
    High,
    None,
}

impl PerspectiveArg {
    pub fn income(self) -> Option<IncomeGroup> {
        match self {
            PerspectiveArg::Low => Some(IncomeGroup::Low),
            PerspectiveArg::LowerMiddle => Some(IncomeGroup::LowerMiddle),
            PerspectiveArg::UpperMiddle => Some(IncomeGroup::UpperMiddle),
            PerspectiveArg::High => Some(IncomeGroup::High),
            PerspectiveArg::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupByArg {
    Income,
    Country,
    Institution,
    For,
    Sdg,
    Funder,
}

impl From<GroupByArg> for GroupBy {
    fn from(g: GroupByArg) -> Self {
        match g {
            GroupByArg::Income => GroupBy::Income,
            GroupByArg::Country => GroupBy::Country,
            GroupByArg::Institution => GroupBy::Institution,
            GroupByArg::For => GroupBy::ForCode,
            GroupByArg::Sdg => GroupBy::SdgCode,
            GroupByArg::Funder => GroupBy::Funder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    NonHigh,
    LowShare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    Raw,
    Rows,
}

/// Usage or I/O failure; always exit 2.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

pub fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("--years expects MIN:MAX, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<i32>()
            .map_err(|_| format!("--years: '{v}' is not a year"))
    };
    let (lo, hi) = (parse(a)?, parse(b)?);
    if lo > hi {
        return Err(format!("--years: range {lo}:{hi} is inverted"));
    }
    Ok((lo, hi))
}

/// Run a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Matrix(args) => cmd_matrix(&args),
        Command::Top(args) => cmd_top(&args),
        Command::Classify { gni } => cmd_classify(&gni),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

struct Registries {
    registry: OrgRegistry,
    classes: ClassTable,
    orgs_report: LoadReport,
    classes_report: LoadReport,
}

fn load_registries(input: &InputArgs) -> Result<Registries, Failure> {
    let (registry, mut orgs_report) = load_orgs(&input.orgs)?;
    let (classes, classes_report) = load_classes(&input.classes)?;
    orgs_report.unknown_country_refs = registry
        .values()
        .filter(|o| !classes.contains_key(&o.country_code))
        .count() as u64;
    Ok(Registries {
        registry,
        classes,
        orgs_report,
        classes_report,
    })
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    orgs: &'a LoadReport,
    classes: &'a LoadReport,
    publications: &'a LoadReport,
}

pub fn cmd_validate(input: &InputArgs) -> Result<i32, Failure> {
    let regs = load_registries(input)?;
    let mut stream = load_publications(&input.pubs)?;
    let (mut unknown_org, mut unknown_country) = (0u64, 0u64);
    for p in stream.by_ref() {
        for id in p.authors.iter().flat_map(|a| &a.affiliations).filter_map(|a| a.org_id()) {
            match regs.registry.get(id) {
                None => unknown_org += 1,
                Some(org) if !regs.classes.contains_key(&org.country_code) => unknown_country += 1,
                Some(_) => {}
            }
        }
    }
    let mut pubs_report = stream.finish()?;
    pubs_report.unknown_org_refs = unknown_org;
    pubs_report.unknown_country_refs = unknown_country;

    let report = ValidateReport {
        orgs: &regs.orgs_report,
        classes: &regs.classes_report,
        publications: &pubs_report,
    };
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    let rejected = [&regs.orgs_report, &regs.classes_report, &pubs_report]
        .iter()
        .map(|r| r.records_rejected)
        .sum::<u64>();
    Ok(if rejected == 0 { EXIT_CLEAN } else { EXIT_FINDINGS })
}

struct RunOutcome {
    aggregate: PartialAggregate,
    rejected: u64,
}

fn run_aggregation(run: &RunArgs, spec: &AnalysisSpec) -> Result<RunOutcome, Failure> {
    if run.workers == 0 {
        return Err(Failure("--workers must be at least 1".into()));
    }
    let regs = load_registries(&run.input)?;
    let ctx = Context::new(&regs.registry, &regs.classes);
    let mut stream = load_publications(&run.input.pubs)?;
    let aggregate = aggregate_stream(&mut stream, spec, &ctx, run.workers, DEFAULT_BATCH);
    let pubs_report = stream.finish()?;
    let rejected = regs.orgs_report.records_rejected
        + regs.classes_report.records_rejected
        + pubs_report.records_rejected;
    let s = &aggregate.skips;
    eprintln!(
        "publications in range: {}; skipped: {} unknown org refs, {} unknown country refs, {} over author cap; rejected input rows: {}",
        s.publications, s.unknown_org, s.unknown_country, s.over_author_cap, rejected
    );
    Ok(RunOutcome { aggregate, rejected })
}

fn exit_for(rejected: u64) -> i32 {
    if rejected == 0 {
        EXIT_CLEAN
    } else {
        EXIT_FINDINGS
    }
}

pub fn cmd_matrix(args: &MatrixArgs) -> Result<i32, Failure> {
    let (lo, hi) = parse_years(&args.run.years)?;
    if args.group_by != GroupByArg::Income {
        return Err(Failure("matrix only supports --group-by income".into()));
    }
    let spec = AnalysisSpec::new(lo, hi, GroupBy::Income)?
        .with_perspective(args.perspective.and_then(PerspectiveArg::income))
        .with_max_authors(args.run.max_authors);
    let outcome = run_aggregation(&args.run, &spec)?;
    let table = &outcome.aggregate.table;
    let (rows, normalization) = match args.normalize {
        NormalizeArg::Raw => (CsvRow::from_table(table), Normalization::Raw),
        NormalizeArg::Rows => (CsvRow::from_proportions(&normalize_rows(table)), Normalization::Row),
    };
    write_csv_to(args.run.out.as_deref(), &rows)?;
    if let Some(path) = &args.chord {
        write_chord_to(path, &export_chord(table, normalization)?)?;
    }
    Ok(exit_for(outcome.rejected))
}

pub fn cmd_top(args: &TopArgs) -> Result<i32, Failure> {
    let (lo, hi) = parse_years(&args.run.years)?;
    if args.group_by == GroupByArg::Income {
        return Err(Failure("top needs --group-by country, institution, for, sdg or funder".into()));
    }
    if args.n == 0 {
        return Err(Failure("--n must be at least 1".into()));
    }
    let group_by = GroupBy::from(args.group_by);
    let perspective = match args.perspective {
        Some(p) => p.income(),
        None if matches!(group_by, GroupBy::Country | GroupBy::Institution) => Some(IncomeGroup::High),
        None => None,
    };
    let order = match args.order {
        OrderArg::NonHigh => TopOrder::NonHighCumulative,
        OrderArg::LowShare => TopOrder::LowIncomeShare,
    };
    let spec = AnalysisSpec::new(lo, hi, group_by)?
        .with_perspective(perspective)
        .with_max_authors(args.run.max_authors);
    let outcome = run_aggregation(&args.run, &spec)?;
    let top = top_n(&outcome.aggregate.table, args.n, order)?;
    write_csv_to(args.run.out.as_deref(), &CsvRow::from_top(&top))?;
    Ok(exit_for(outcome.rejected))
}

pub fn cmd_classify(gni: &str) -> Result<i32, Failure> {
    let value: f64 = gni
        .trim()
        .parse()
        .map_err(|_| Failure(format!("'{gni}' is not a number")))?;
    println!("{}", classify_gni(value)?);
    Ok(EXIT_CLEAN)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<i32, Failure> {
    let corpus = if args.small {
        random_small_corpus(args.seed)
    } else {
        generate(&SynthConfig {
            publications: args.publications,
            orgs: args.orgs,
            countries: args.countries,
            seed: args.seed,
            ..SynthConfig::default()
        })
    };
    let files = write_corpus(&corpus, &args.out_dir)?;
    eprintln!(
        "wrote {} publications to {}",
        corpus.publications.len(),
        files.pubs.display()
    );
    Ok(EXIT_CLEAN)
}
