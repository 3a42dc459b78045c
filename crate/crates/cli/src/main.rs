//! `msbm` — minority-community block models from the command line.
//!
//! Subcommands: `theory` (closed-form spectrum and phase), `generate`
//! (sample a graph to an edge list), `detect` (community detection on an
//! edge list), `sweep` (phase-diagram grids), `plot` (SVG heatmaps of sweep
//! output).  Exit codes: 0 success, 2 invalid or infeasible parameters,
//! 3 I/O problems, 4 solver failures.

mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minority_sbm::detect::{self, DetectOptions, Method, MethodOutput};
use minority_sbm::graphgen::{self, SparseGraph};
use minority_sbm::mdl::DlConvention;
use minority_sbm::metrics;
use minority_sbm::sweep;
use minority_sbm::theory::{self, MinorityModel, Scenario};
use minority_sbm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "msbm",
    version,
    about = "Minority-community block models: theory, graphs, detection, sweeps, plots"
)]
struct Cli {
    /// Cap the number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form spectrum, SNRs, and detectability phase.
    Theory(TheoryArgs),
    /// Sample a graph and write an edge list plus JSON sidecar.
    Generate(GenerateArgs),
    /// Detect communities in an edge-list graph.
    Detect(DetectArgs),
    /// Run a (rho, delta) grid sweep and persist the results.
    Sweep(SweepArgs),
    /// Render sweep results to an SVG heatmap.
    Plot(PlotArgs),
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dl(s: &str) -> std::result::Result<DlConvention, String> {
    match s {
        "ordered" => Ok(DlConvention::Ordered),
        "unordered" => Ok(DlConvention::Unordered),
        other => Err(format!("unknown convention `{other}` (expected ordered or unordered)")),
    }
}

fn parse_field(s: &str) -> std::result::Result<plot::Field, String> {
    match s {
        "mean-q" => Ok(plot::Field::MeanQ),
        "mean-ami" => Ok(plot::Field::MeanAmi),
        other => Err(format!("unknown field `{other}` (expected mean-q or mean-ami)")),
    }
}

/// Model parameters shared by `theory` and `generate`.
#[derive(Args)]
struct ModelArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 3000)]
    n: u32,
    /// Number of minority communities.
    #[arg(long, default_value_t = 1)]
    qs: u32,
    /// Number of majority communities.
    #[arg(long, default_value_t = 1)]
    qb: u32,
    /// Minority fraction (all minority communities together).
    #[arg(long)]
    rho: f64,
    /// Probability contrast p_in - p_out.
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Target mean degree.
    #[arg(long, default_value_t = 5.0)]
    d: f64,
    /// consistent-pout or consistent-degree.
    #[arg(long, default_value = "consistent-pout", value_parser = parse_scenario)]
    scenario: Scenario,
}

impl ModelArgs {
    fn model(&self) -> Result<MinorityModel> {
        MinorityModel::new(self.n, self.qs, self.qb, self.rho, self.delta, self.d, self.scenario)
    }
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Emit `key,value` CSV instead of the text report.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge-list output path; a `.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Sample as an induced subgraph of a larger symmetric model.
    #[arg(long)]
    background: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Edge-list path (sidecar picked up automatically when present).
    #[arg(long)]
    graph: PathBuf,
    /// Detection method, e.g. bh+nec, bh+mdl, bp+mfe, bp+mdl, bp+nec.
    #[arg(long, default_value = "bh+nec", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest order scanned by the mdl and mfe rules.
    #[arg(long, default_value_t = 6)]
    q_max: u32,
    /// EM restarts per candidate order for belief propagation.
    #[arg(long, default_value_t = 5)]
    bp_restarts: usize,
    /// Description-length convention: ordered or unordered.
    #[arg(long, default_value = "ordered", value_parser = parse_dl)]
    dl_convention: DlConvention,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat TOML config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (results.csv, overlays.csv, manifest.json,
    /// probes/, checkpoint.json).
    #[arg(long, default_value = "sweep-out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    qs: Option<u32>,
    #[arg(long)]
    qb: Option<u32>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    rho_steps: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_max: Option<f64>,
    #[arg(long)]
    delta_steps: Option<u32>,
    /// Graphs per cell and method.
    #[arg(long)]
    replicates: Option<u32>,
    /// Comma-separated methods, e.g. bh+nec,bp+mfe.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    q_max: Option<u32>,
    #[arg(long)]
    bp_restarts: Option<u32>,
    /// Comma-separated rho:delta probe points, e.g. 0.25:0.0038,0.39:0.0038.
    #[arg(long)]
    probes: Option<String>,
    /// Annotation echoed into the manifest.
    #[arg(long)]
    note: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Path of a sweep's results.csv.
    #[arg(long)]
    results: PathBuf,
    /// Path of overlays.csv (default: next to results.csv when present).
    #[arg(long)]
    overlays: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Cell statistic: mean-q or mean-ami.
    #[arg(long, default_value = "mean-q", value_parser = parse_field)]
    field: plot::Field,
    /// Method to plot (default: first method in the file).
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

fn cmd_theory(args: &TheoryArgs) -> Result<()> {
    let model = args.model.model()?;
    let (lo, hi) = theory::feasible_delta_range(&model)?;
    let probs = theory::edge_probabilities(&model)?;
    let report = theory::closed_form_spectrum(&model)?;
    let degrees = theory::degree_report(&model, &probs);
    if args.csv {
        println!("quantity,value");
        println!("n,{}", model.n);
        println!("q_s,{}", model.q_s);
        println!("q_b,{}", model.q_b);
        println!("rho,{}", model.rho);
        println!("delta,{}", model.delta);
        println!("d,{}", model.d);
        println!("scenario,{}", model.scenario);
        println!("p_in,{}", probs.p_in);
        println!("p_out1,{}", probs.p_out1);
        println!("p_out2,{}", probs.p_out2);
        println!("feasible_delta_min,{lo}");
        println!("feasible_delta_max,{hi}");
        println!("d_minority,{}", degrees.d_minority);
        println!("d_majority,{}", degrees.d_majority);
        let lines = [
            ("lambda1", Some(report.lambda1)),
            ("lambda2", report.lambda2),
            ("lambda3", report.lambda3),
            ("lambda4", report.lambda4),
        ];
        for (name, line) in lines {
            if let Some((value, mult)) = line {
                println!("{name},{value}");
                println!("{name}_multiplicity,{mult}");
            }
        }
        for (name, snr) in [("snr", report.snr2), ("snr3", report.snr3), ("snr4", report.snr4)] {
            if let Some(v) = snr {
                println!("{name},{v}");
            }
        }
        println!("phase,{:?}", report.phase);
        return Ok(());
    }
    println!(
        "model           n={} q_s={} q_b={} rho={} delta={} d={} scenario={}",
        model.n, model.q_s, model.q_b, model.rho, model.delta, model.d, model.scenario
    );
    println!(
        "probabilities   p_in={:.8} p_out1={:.8} p_out2={:.8}",
        probs.p_in, probs.p_out1, probs.p_out2
    );
    println!("feasible delta  [{lo:.8}, {hi:.8}]");
    println!(
        "degrees         minority={:.4} majority={:.4} mean={:.4}",
        degrees.d_minority, degrees.d_majority, degrees.d_mean
    );
    let fmt_line = |line: Option<(f64, u32)>| match line {
        Some((v, m)) => format!("{v:.6} (x{m})"),
        None => "-".into(),
    };
    println!(
        "spectrum        lambda1={} lambda2={} lambda3={} lambda4={}",
        fmt_line(Some(report.lambda1)),
        fmt_line(report.lambda2),
        fmt_line(report.lambda3),
        fmt_line(report.lambda4)
    );
    println!(
        "snr             snr={} snr3={} snr4={}",
        fmt_opt(report.snr2),
        fmt_opt(report.snr3),
        fmt_opt(report.snr4)
    );
    println!("phase           {:?}", report.phase);
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let model = args.model.model()?;
    let graph = if args.background {
        graphgen::sample_via_background(&model, args.seed)?
    } else {
        graphgen::sample(&model, args.seed)?
    };
    graphgen::write_graph(&graph, Some(&model), Some(args.seed), &args.out)?;
    let n = graph.n();
    let edges = graph.num_edges();
    println!(
        "wrote n={n} edges={edges} mean_degree={:.4} to {} (sidecar {})",
        2.0 * edges as f64 / n as f64,
        args.out.display(),
        graphgen::sidecar_path(&args.out).display()
    );
    Ok(())
}

fn print_confusion(planted: &minority_sbm::Partition, detected: &minority_sbm::Partition) -> Result<()> {
    let confusion = metrics::confusion(planted, detected)?;
    println!("confusion (rows: planted, columns: detected, row-normalized):");
    for row in confusion.row_normalized() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("  [{}]", cells.join(" "));
    }
    Ok(())
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let graph: SparseGraph = graphgen::read_graph(&args.graph)?;
    let n = graph.n();
    if n == 0 {
        return Err(Error::InvalidParameter(format!(
            "{} contains no nodes",
            args.graph.display()
        )));
    }
    println!(
        "graph           n={n} edges={} mean_degree={:.4}",
        graph.num_edges(),
        2.0 * graph.num_edges() as f64 / n as f64
    );
    let opts = DetectOptions {
        q_max: args.q_max,
        bp_restarts: args.bp_restarts,
        dl_convention: args.dl_convention,
        ..DetectOptions::default()
    };
    let detection = detect::detect(&graph, args.method, args.seed, &opts)?;
    println!("method          {}", args.method);
    match &detection.output {
        MethodOutput::Bh(det) => {
            println!(
                "bethe hessian   eta={:.6} nonpositive: {} assortative + {} disassortative",
                det.eta, det.q_plus, det.q_minus
            );
            if let Some(reason) = &det.trivial_reason {
                println!("note            {reason}");
            }
        }
        MethodOutput::Mdl(trace) => {
            let terms: Vec<String> =
                trace.lengths.iter().map(|(q, l)| format!("q={q}: {l:.3}")).collect();
            println!("description len {}", terms.join("  "));
        }
        MethodOutput::Mfe(trace) => {
            let terms: Vec<String> =
                trace.evaluated.iter().map(|(q, f)| format!("q={q}: {f:.6}")).collect();
            println!("free energy     {}", terms.join("  "));
        }
    }
    println!("detected q      {}", detection.q());
    println!("community sizes {:?}", detection.partition.counts());
    if let Some(planted) = graph.planted() {
        let ami = metrics::ami(planted, &detection.partition)?;
        println!("planted q       {}", planted.q());
        println!("ami             {ami:.6}");
        print_confusion(planted, &detection.partition)?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => config::SweepDraft::from_file(path)?,
        None => config::SweepDraft::default(),
    };
    let flags = config::SweepDraft {
        n: args.n,
        qs: args.qs,
        qb: args.qb,
        d: args.d,
        scenario: args.scenario,
        rho_min: args.rho_min,
        rho_max: args.rho_max,
        rho_steps: args.rho_steps,
        delta_min: args.delta_min,
        delta_max: args.delta_max,
        delta_steps: args.delta_steps,
        replicates: args.replicates,
        methods: args.methods.as_deref().map(config::parse_methods).transpose()?,
        seed: args.seed,
        q_max: args.q_max,
        bp_restarts: args.bp_restarts,
        probes: args.probes.as_deref().map(config::parse_probes).transpose()?,
        note: args.note.clone(),
    };
    let spec = flags.over(file).into_spec()?;
    println!(
        "sweep           {}x{} grid, {} method(s), {} replicate(s), seed {}",
        spec.rho.steps,
        spec.delta.steps,
        spec.methods.len(),
        spec.replicates,
        spec.seed
    );
    let result = sweep::run_grid(&spec, &args.out)?;
    let valid = result.cells.iter().filter(|c| c.stats.valid).count();
    println!(
        "done            {} cells ({} valid), {} overlay points, {} probe file(s)",
        result.cells.len(),
        valid,
        result.overlays.len(),
        result.probes.len()
    );
    println!("results         {}", args.out.join("results.csv").display());
    if !result.warnings.is_empty() {
        eprintln!("{} warning(s):", result.warnings.len());
        for w in result.warnings.iter().take(10) {
            eprintln!("  {w}");
        }
        if result.warnings.len() > 10 {
            eprintln!("  ... and {} more", result.warnings.len() - 10);
        }
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let rows = plot::read_results(&args.results)?;
    let overlays_path = match &args.overlays {
        Some(p) => Some(p.clone()),
        None => {
            let sibling = args.results.with_file_name("overlays.csv");
            sibling.exists().then_some(sibling)
        }
    };
    let overlays = match overlays_path {
        Some(p) => plot::read_overlays(&p)?,
        None => Vec::new(),
    };
    let method = args.method.map(|m| m.to_string());
    let svg = plot::render(&rows, &overlays, args.field, method.as_deref())?;
    std::fs::write(&args.out, svg)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Infeasible(_) => 2,
        Error::Io(_) | Error::Json(_) => 3,
        Error::Solver(_) => 4,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Theory(args) => cmd_theory(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Only fails if a pool already exists, which cannot happen this
        // early; ignoring the error keeps --threads idempotent.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
