use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use serpaudit_core::analyze::{
    group_means, make_pairs, run_cross_type_tests, run_figure2_tests, run_history_anova, time_control, Aggregation,
    Grouping, PairingSpec,
};
use serpaudit_core::annotate::{
    categorize_domains, consensus, import_labels, leaning_proportions, load_overrides, AnnotationCache, Annotator,
    CategoryMap, CoderKind, ConsensusMode, HttpAnnotator, Scope, StubAnnotator,
};
use serpaudit_core::crawler::{
    balance, build_history, load_profiles, load_url_lists, make_profiles, run_audit, save_profiles, success_filter,
    EngineClient, HttpEngineClient, HttpFetcher, PageFetcher, PlanFile, ProfileSpec, SuccessRule, SystemClock,
    WarmupSpec, CONFLICT_KEYWORDS, GENERAL_KEYWORDS,
};
use serpaudit_core::model::log::{read_json_log, read_serp_log_all, write_json_log, write_serp_log};
use serpaudit_core::model::{BotType, ComparisonRecord, HistoryKind, Location, Metric, QueryCategory, SerpRecord};
use serpaudit_core::report::{emit_chart, figure2_chart, leaning_chart, time_control_chart, Chart};
use serpaudit_core::simengine::{serve_blocking, EnginePersona, SimClient, SimEngine};
use serpaudit_core::stats::{MwuMode, DEFAULT_RESAMPLES};
use serpaudit_core::{validate, MetricConfig};

type DataResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "serpaudit", version, about = "Audit search engine personalization across locations, languages and histories")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Input log(s). Repeat for commands that take several.
    #[arg(long, global = true)]
    log: Vec<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Restrict analysis to one engine.
    #[arg(long, global = true)]
    engine: Option<String>,
    /// RBO persistence.
    #[arg(long, global = true, default_value_t = 0.7)]
    p: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    /// Bonferroni family size; defaults to 12 for fig2 and 36 for crosstype.
    #[arg(long, global = true)]
    family_size: Option<usize>,
    /// Expose simulator ground truth.
    #[arg(long, global = true)]
    allow_truth: bool,
    /// Plan or persona file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bot profiles.
    #[command(subcommand)]
    Profile(ProfileCmd),
    /// Browsing-history warm-up.
    #[command(subcommand)]
    Warmup(WarmupCmd),
    /// SERP collection.
    #[command(subcommand)]
    Audit(AuditCmd),
    /// Simulated search engine.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Success-rule filtering.
    #[command(subcommand)]
    Filter(FilterCmd),
    /// Equalize bots per location.
    Balance(BalanceArgs),
    /// Pairwise comparison records.
    #[command(subcommand)]
    Compare(CompareCmd),
    /// Significance tests.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Domain categorization.
    #[command(subcommand)]
    Categorize(CategorizeCmd),
    /// News leaning shares.
    #[command(subcommand)]
    Leaning(LeaningCmd),
    /// Charts with CSV twins.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Simulator acceptance checks.
    #[command(subcommand)]
    Validate(ValidateCmd),
}

#[derive(Subcommand)]
enum ProfileCmd {
    /// Write the default bot set for one type.
    Make {
        #[arg(long = "type", value_parser = parse_bot_type)]
        bot_type: BotType,
        #[arg(long)]
        per_location: Option<usize>,
        /// Comma-separated location codes.
        #[arg(long, value_delimiter = ',')]
        locations: Vec<String>,
    },
}

#[derive(Subcommand)]
enum WarmupCmd {
    /// Visit seeded history URLs for every non-stateless profile.
    Run {
        #[arg(long)]
        profiles: PathBuf,
        /// CSV with url,keyword,location,language.
        #[arg(long)]
        sources: PathBuf,
        /// Warm up against the simulator instead of the network.
        #[arg(long)]
        sim: bool,
    },
}

#[derive(Subcommand)]
enum AuditCmd {
    /// Run the plan given by --config, appending to --log.
    Run {
        /// Query the simulator described by this persona file.
        #[arg(long)]
        sim_persona: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Serve the simulator over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Subcommand)]
enum FilterCmd {
    /// Keep Ok records of cells meeting the success rule.
    Success {
        /// Profiles giving each bot's egress IP.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value_t = SuccessRule::default().min_urls)]
        min_urls: usize,
        #[arg(long, default_value_t = SuccessRule::default().min_ips)]
        min_ips: usize,
    },
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long, value_delimiter = ',')]
    locations: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupingArg {
    Same,
    Diff,
    Both,
}

#[derive(Subcommand)]
enum CompareCmd {
    /// Pairwise D for every (engine, query) over bots of one type.
    Pairs {
        #[arg(long, value_parser = parse_metric, default_value = "DRbo")]
        metric: Metric,
        #[arg(long = "type", value_parser = parse_bot_type)]
        bot_type: Option<BotType>,
        #[arg(long, value_enum, default_value = "both")]
        grouping: GroupingArg,
        /// Domain category map; compares category sequences instead of URLs.
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_categories: usize,
        /// Restrict to queries with lo..=hi words, e.g. 3..8.
        #[arg(long, value_parser = parse_range)]
        words: Option<(u32, u32)>,
    },
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Same vs Diff location and General vs Specific, per engine.
    Fig2 {
        #[arg(long, value_parser = parse_metric, default_value = "DRbo")]
        metric: Metric,
    },
    /// Type vs Type comparisons on the shared queries.
    Crosstype {
        #[arg(long, value_parser = parse_metric, default_value = "DRbo")]
        metric: Metric,
    },
    /// One-way ANOVA over history groups of Type 3 pairs.
    Anova {
        #[arg(long, value_parser = parse_metric, default_value = "DRbo")]
        metric: Metric,
        #[arg(long, value_enum, default_value = "same")]
        grouping: GroupingArg,
    },
}

#[derive(Subcommand)]
enum CategorizeCmd {
    /// Label every domain seen in --log.
    Run {
        /// Model endpoint; the offline stub when absent.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CoderArg {
    Human,
    Machine,
}

#[derive(Subcommand)]
enum LeaningCmd {
    /// Label shares among News results per engine and location.
    Aggregate {
        #[arg(long)]
        categories: PathBuf,
        /// CSV of url,coder_id,label,survey_id,attention_pass[,coder_kind].
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value = "human")]
        coders: CoderArg,
        #[arg(long, default_value_t = 2)]
        min_agree: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Metrics,
    Leaning,
    Time,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Write SVG and CSV for one figure into --out.
    Emit {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long = "type", value_parser = parse_bot_type, default_value = "Type2")]
        bot_type: BotType,
        /// Leaning figure: domain category map.
        #[arg(long)]
        categories: Option<PathBuf>,
        /// Leaning figure: coder labels.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ValidateCmd {
    /// Run the simulator scenarios; work files go under --out.
    E2e,
}

fn parse_bot_type(s: &str) -> Result<BotType, String> {
    match s {
        "1" => Ok(BotType::Type1),
        "2" => Ok(BotType::Type2),
        "3" => Ok(BotType::Type3),
        other => other.parse(),
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or("expected lo..hi")?;
    let lo = a.trim().parse::<u32>().map_err(|e| e.to_string())?;
    let hi = b.trim().trim_start_matches('=').parse::<u32>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

/// Argument problems found after parsing; reported like clap errors.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> DataResult<T> {
    Err(Box::new(Usage(msg.into())))
}

impl Global {
    fn one_log(&self) -> DataResult<&Path> {
        match self.log.as_slice() {
            [one] => Ok(one),
            [] => usage("--log is required"),
            _ => usage("exactly one --log expected"),
        }
    }

    fn out(&self) -> DataResult<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => usage("--out is required"),
        }
    }

    fn serps(&self) -> DataResult<Vec<SerpRecord>> {
        let mut r = read_serp_log_all(self.one_log()?)?;
        if let Some(e) = &self.engine {
            r.retain(|x| x.engine() == e);
        }
        Ok(r)
    }

    fn comparisons(&self) -> DataResult<Vec<ComparisonRecord>> {
        let mut r: Vec<ComparisonRecord> = read_json_log(self.one_log()?)?;
        if let Some(e) = &self.engine {
            r.retain(|x| &x.engine == e);
        }
        if r.is_empty() {
            return Err("no comparison records".into());
        }
        Ok(r)
    }
}

fn locations(codes: &[String]) -> DataResult<Vec<Location>> {
    if codes.is_empty() {
        return Ok(Location::defaults());
    }
    Ok(codes.iter().map(|c| Location::new(c.as_str())).collect::<Result<_, _>>()?)
}

fn grouping(g: GroupingArg) -> Option<Grouping> {
    match g {
        GroupingArg::Same => Some(Grouping::SameLocation),
        GroupingArg::Diff => Some(Grouping::DiffLocation),
        GroupingArg::Both => None,
    }
}

fn sim_engine(persona: &Path, g: &Global) -> DataResult<Arc<SimEngine>> {
    let plan_queries = match &g.config {
        Some(plan) => {
            let (file, base) = PlanFile::load(plan)?;
            file.into_plan(&base)?.queries
        }
        None => serpaudit_core::crawler::default_queries(),
    };
    Ok(Arc::new(SimEngine::new(EnginePersona::load(persona)?, &plan_queries)?))
}

fn print_comparisons(tests: &[serpaudit_core::analyze::Comparison]) {
    for t in tests {
        match (&t.result, &t.untestable) {
            (Some(r), _) => println!(
                "{}\t{}\tU={}\tp={:.4e}\tp_adj={:.4e}\t{}",
                t.engine,
                t.label,
                r.statistic,
                r.p_value,
                r.p_adjusted,
                r.stars.as_str()
            ),
            (None, why) => println!("{}\t{}\tuntestable: {}", t.engine, t.label, why.as_deref().unwrap_or("")),
        }
    }
}

fn run(cli: Cli) -> DataResult {
    let g = &cli.global;
    match cli.command {
        Command::Profile(ProfileCmd::Make { bot_type, per_location, locations: locs }) => {
            let mut spec = ProfileSpec::defaults(bot_type);
            if let Some(n) = per_location {
                spec.per_location = n;
            }
            if !locs.is_empty() {
                spec.locations = locations(&locs)?;
            }
            let profiles = make_profiles(&spec)?;
            save_profiles(&profiles, g.out()?)?;
            println!("{} profiles written to {}", profiles.len(), g.out()?.display());
        }
        Command::Warmup(WarmupCmd::Run { profiles, sources, sim }) => {
            let input = load_profiles(&profiles)?;
            let sim_client;
            let http = HttpFetcher::default();
            let fetcher: &dyn PageFetcher = if sim {
                let persona = match &g.config {
                    Some(p) => EnginePersona::load(p)?,
                    None => EnginePersona::neutral("sim", g.seed),
                };
                sim_client = SimClient::new(Arc::new(SimEngine::new(persona, &serpaudit_core::crawler::default_queries())?));
                &sim_client
            } else {
                &http
            };
            let spec = WarmupSpec { seed: g.seed, ..WarmupSpec::default() };
            let clock = SystemClock;
            let mut out = Vec::with_capacity(input.len());
            let mut visits = Vec::new();
            for p in input {
                if p.history_kind == HistoryKind::Stateless {
                    out.push(p);
                    continue;
                }
                let lists = load_url_lists(&CONFLICT_KEYWORDS, &GENERAL_KEYWORDS, &sources, &p.location, &p.language)?;
                let o = build_history(&p, &spec, lists.for_history(p.history_kind), fetcher, &clock)?;
                visits.extend(o.visits);
                out.push(o.profile);
            }
            let path = g.out()?;
            save_profiles(&out, path)?;
            let visit_log = path.with_extension("visits.jsonl");
            write_json_log(&visits, &visit_log)?;
            println!("{} profiles written; {} visits logged to {}", out.len(), visits.len(), visit_log.display());
        }
        Command::Audit(AuditCmd::Run { sim_persona }) => {
            let Some(plan_path) = &g.config else { return usage("--config <plan.toml> is required") };
            let (file, base) = PlanFile::load(plan_path)?;
            let plan = file.into_plan(&base)?;
            let log = g.one_log()?;
            let summary = match &sim_persona {
                Some(persona) => {
                    let client = SimClient::new(sim_engine(persona, g)?);
                    let mut plan = plan;
                    plan.engines = vec![client.name().to_string()];
                    run_audit(&plan, &[&client], log, &SystemClock)?
                }
                None => {
                    let clients = file
                        .engine_configs
                        .iter()
                        .filter(|c| plan.engines.contains(&c.name))
                        .map(|c| HttpEngineClient::new(c.clone()))
                        .collect::<Result<Vec<_>, _>>()?;
                    let refs: Vec<&dyn EngineClient> = clients.iter().map(|c| c as &dyn EngineClient).collect();
                    run_audit(&plan, &refs, log, &SystemClock)?
                }
            };
            println!("{} records ({} ok, {} failed) in {}", summary.records, summary.ok, summary.failed, summary.log_path.display());
            for (engine, why) in &summary.aborted_engines {
                eprintln!("engine {engine} aborted: {why}");
            }
        }
        Command::Sim(SimCmd::Serve { addr }) => {
            let persona = match &g.config {
                Some(p) => EnginePersona::load(p)?,
                None => EnginePersona::neutral("sim", g.seed),
            };
            let engine = Arc::new(SimEngine::new(persona, &serpaudit_core::crawler::default_queries())?);
            eprintln!("simulator listening on http://{addr}");
            serve_blocking(engine, g.allow_truth, addr)?;
        }
        Command::Filter(FilterCmd::Success { profiles, min_urls, min_ips }) => {
            let ips: BTreeMap<String, String> = match profiles {
                Some(p) => load_profiles(&p)?.into_iter().map(|p| (p.bot_id, p.ip_label)).collect(),
                None => BTreeMap::new(),
            };
            let outcome = success_filter(g.serps()?, &ips, SuccessRule { min_urls, min_ips });
            let out = g.out()?;
            write_serp_log(&outcome.kept, out)?;
            let excl = out.with_extension("excluded.jsonl");
            write_json_log(&outcome.excluded, &excl)?;
            println!("{} records kept; {} cells excluded (see {})", outcome.kept.len(), outcome.excluded.len(), excl.display());
        }
        Command::Balance(BalanceArgs { locations: locs }) => {
            let kept = balance(g.serps()?, &locations(&locs)?, g.seed)?;
            write_serp_log(&kept, g.out()?)?;
            println!("{} records after balancing", kept.len());
        }
        Command::Compare(CompareCmd::Pairs { metric, bot_type, grouping: gr, categories, max_categories, words }) => {
            let category_map = match &categories {
                Some(p) => Some(CategoryMap::load(p)?.categories()),
                None => None,
            };
            let spec = PairingSpec {
                grouping: grouping(gr),
                bot_type,
                metric,
                category_mode: categories.is_some(),
                max_distinct_categories: max_categories,
                word_count_range: words,
                config: MetricConfig::with_p(g.p)?,
                ..PairingSpec::default()
            };
            let pairs = make_pairs(&g.serps()?, &spec, category_map.as_ref())?;
            for n in &pairs.notes {
                eprintln!("note: {n}");
            }
            write_json_log(&pairs.records, g.out()?)?;
            println!("{} comparison records", pairs.records.len());
        }
        Command::Stats(cmd) => {
            let recs = g.comparisons()?;
            match cmd {
                StatsCmd::Fig2 { metric } => {
                    let tests = run_figure2_tests(&recs, metric, g.family_size.unwrap_or(12), MwuMode::Auto)?;
                    print_comparisons(&tests);
                    if let Some(out) = &g.out {
                        write_json_log(&tests, out)?;
                    }
                }
                StatsCmd::Crosstype { metric } => {
                    let tests = run_cross_type_tests(&recs, metric, g.family_size.unwrap_or(36), MwuMode::Auto)?;
                    print_comparisons(&tests);
                    if let Some(out) = &g.out {
                        write_json_log(&tests, out)?;
                    }
                }
                StatsCmd::Anova { metric, grouping: gr } => {
                    let res = run_history_anova(&recs, metric, grouping(gr))?;
                    for a in &res {
                        println!(
                            "{}\t{}\tF={:.4}\tp={:.4e}\tmeans={:?}\tn={:?}",
                            a.engine, a.category, a.result.statistic, a.result.p_value, a.group_means, a.group_sizes
                        );
                    }
                    if let Some(out) = &g.out {
                        write_json_log(&res, out)?;
                    }
                }
            }
        }
        Command::Categorize(CategorizeCmd::Run { endpoint, cache, overrides, concurrency }) => {
            let domains: Vec<String> =
                g.serps()?.iter().flat_map(|r| r.results().iter().map(|x| x.domain.clone())).collect::<BTreeSet<_>>().into_iter().collect();
            let overrides = match overrides {
                Some(p) => load_overrides(&p)?,
                None => BTreeMap::new(),
            };
            let cache = cache.map(AnnotationCache::open).transpose()?;
            let annotator: Box<dyn Annotator> = match endpoint {
                Some(url) => Box::new(HttpAnnotator::new(url)),
                None => Box::new(StubAnnotator::new()),
            };
            let map = categorize_domains(&domains, annotator.as_ref(), cache.as_ref(), &overrides, concurrency)?;
            map.save(g.out()?)?;
            println!("{} domains categorized", map.len());
        }
        Command::Leaning(LeaningCmd::Aggregate { categories, labels, coders, min_agree }) => {
            let report = leaning_report(&g.serps()?, &categories, &labels, coders, min_agree)?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            for c in &report.cells {
                println!("{}\t{}\t{:?}\tlabeled={}\tunresolved={}\t{:?}", c.engine, c.location, c.scope, c.labeled, c.unresolved, c.proportions);
            }
            if let Some(out) = &g.out {
                write_json_log(&report.cells, out)?;
            }
        }
        Command::Report(ReportCmd::Emit { figure, bot_type, categories, labels }) => {
            let out = g.out()?;
            let charts: Vec<(String, Chart)> = match figure {
                Figure::Fig2 | Figure::Fig3 | Figure::Metrics => {
                    let recs = g.comparisons()?;
                    let metrics = match figure {
                        Figure::Fig2 => vec![Metric::DRbo],
                        Figure::Fig3 => vec![Metric::DRboCategory],
                        _ => vec![Metric::EditDistance, Metric::SymDiff10, Metric::CommonTop3],
                    };
                    let mut charts = Vec::new();
                    for metric in metrics {
                        let subset: Vec<ComparisonRecord> =
                            recs.iter().filter(|r| r.metric == metric && r.bot_type == bot_type).cloned().collect();
                        if subset.is_empty() {
                            return Err(format!("no {metric} records for {bot_type}").into());
                        }
                        let means = group_means(&subset, Aggregation::Pooled, g.resamples, g.seed)?;
                        let tests = run_figure2_tests(&subset, metric, g.family_size.unwrap_or(12), MwuMode::Auto)?;
                        let title = format!("{bot_type} {metric}");
                        charts.push((format!("{}_{}", bot_type.as_str().to_lowercase(), metric.as_str().to_lowercase()), Chart::Bars(figure2_chart(&title, &means, bot_type, &tests))));
                    }
                    charts
                }
                Figure::Leaning => {
                    let (Some(c), Some(l)) = (categories, labels) else { return usage("--categories and --labels are required") };
                    let report = leaning_report(&g.serps()?, &c, &l, CoderArg::Human, 2)?;
                    vec![("leaning".into(), Chart::Stacked(leaning_chart("News leaning", &report)))]
                }
                Figure::Time => {
                    if g.log.len() < 2 {
                        return usage("time control needs one --log per epoch (at least two)");
                    }
                    let epochs = g.log.iter().map(read_serp_log_all).collect::<Result<Vec<_>, _>>()?;
                    let spec = PairingSpec { bot_type: Some(bot_type), config: MetricConfig::with_p(g.p)?, ..PairingSpec::default() };
                    let tc = time_control(&epochs, &spec, g.resamples, g.seed)?;
                    for t in &tc.trends {
                        println!("{}\tslope={:.6}\tmeans={:?}", t.key, t.slope, t.means);
                    }
                    QueryCategory::ALL
                        .iter()
                        .map(|&c| (format!("time_{}", c.as_str().to_lowercase()), Chart::Bars(time_control_chart(&format!("{bot_type} {c} over time"), &tc, bot_type, c))))
                        .collect()
                }
            };
            for (stem, chart) in charts {
                let e = emit_chart(&chart, out, &stem)?;
                for w in &e.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{} {}", e.svg.display(), e.csv.display());
            }
        }
        Command::Validate(ValidateCmd::E2e) => {
            let tmp;
            let dir = match &g.out {
                Some(d) => d.clone(),
                None => {
                    tmp = std::env::temp_dir().join(format!("serpaudit-e2e-{}-{}", std::process::id(), g.seed));
                    tmp.clone()
                }
            };
            let outcomes = validate::run_all(g.seed, &dir);
            for o in &outcomes {
                println!("{}", o.line());
            }
            if outcomes.iter().any(|o| !o.pass) {
                return Err("simulator acceptance failed".into());
            }
        }
    }
    Ok(())
}

fn leaning_report(
    serps: &[SerpRecord],
    categories: &Path,
    labels: &Path,
    coders: CoderArg,
    min_agree: usize,
) -> DataResult<serpaudit_core::annotate::LeaningReport> {
    let categories = CategoryMap::load(categories)?;
    let import = import_labels(labels)?;
    if import.dropped > 0 {
        eprintln!("{} label rows dropped by attention checks", import.dropped);
    }
    let kind = match coders {
        CoderArg::Human => CoderKind::Human,
        CoderArg::Machine => CoderKind::Machine,
    };
    let chosen: Vec<_> = import.labels.into_iter().filter(|l| l.coder_kind == kind).collect();
    let resolved = consensus(&chosen, min_agree, ConsensusMode::Exact);
    let scopes = [Scope::All, Scope::Top3];
    let mut report = leaning_proportions(serps, &categories, &resolved, scopes[0]);
    let top = leaning_proportions(serps, &categories, &resolved, scopes[1]);
    report.cells.extend(top.cells);
    report.notes.extend(top.notes);
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
