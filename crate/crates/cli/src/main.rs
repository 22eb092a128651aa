//! Transition-entropy scanning pipeline for gate-level netlists.
//!
//! The pipeline is decomposed into subcommands with file handoffs so that
//! externally produced waveforms (VCD dumps) can replace the built-in
//! simulator at any point:
//!
//! ```text
//! htdet simulate    .bench + stimulus -> .htdw waveform store
//! htdet import-vcd  .vcd              -> .htdw waveform store
//! htdet detect      .htdw             -> report.json (+ CSV sidecars)
//! htdet testgen     .htdw + report    -> constrained stimulus spec.json
//! htdet eval        .htdw x2 + report -> transition gain + metrics
//! ```
//!
//! Exit codes: 0 success, 2 usage error, 1 processing error (one-line
//! diagnostic on stderr). `HTDET_THREADS` caps internal parallelism.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use htdet_core::cluster::{self, ClusterParams, ClusterSpace};
use htdet_core::eval as eval_mod;
use htdet_core::infotheory;
use htdet_core::netlist::{parse_bench, Netlist};
use htdet_core::simulator::{simulate, StimulusSpec};
use htdet_core::store::{fnv1a64, WaveformStore};
use htdet_core::testgen::{self, HoldValue};
use htdet_core::waveform;

mod report;
use report::{DetectionReport, RunInfo, TestgenSection, ToolInfo, WireRow};

#[derive(Parser)]
#[command(name = "htdet", version, about = "Low-activity logic scanning for gate-level netlists")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Simulate a .bench netlist under a stimulus and write a waveform store
    Simulate(SimulateArgs),
    /// Import an IEEE-1364 VCD dump into a waveform store
    ImportVcd(ImportVcdArgs),
    /// Cluster per-wire transition entropy and report suspicious wires
    Detect(DetectArgs),
    /// Derive a constrained-random stimulus that targets the suspects
    Testgen(TestgenArgs),
    /// Compare suspect transition counts between two stores
    Eval(EvalArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Gate-level netlist in .bench format
    #[arg(long)]
    netlist: PathBuf,
    /// Simulation length in cycles (overrides the spec file)
    #[arg(long)]
    cycles: Option<u64>,
    /// Stimulus seed (overrides the spec file)
    #[arg(long)]
    seed: Option<u64>,
    /// Output waveform store (.htdw)
    #[arg(long)]
    out: PathBuf,
    /// Stimulus spec JSON; defaults to full-random on every input
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Also write a JSON debug dump of all waveforms (small runs only)
    #[arg(long)]
    debug_json: Option<PathBuf>,
}

#[derive(Args)]
struct ImportVcdArgs {
    /// VCD file with scalar variables
    #[arg(long)]
    vcd: PathBuf,
    /// Hierarchical name prefix to import (e.g. "top.dut")
    #[arg(long, default_value = "")]
    scope: String,
    /// Resampling period in VCD ticks
    #[arg(long)]
    sample_period: u64,
    /// Output waveform store (.htdw)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Waveform store produced by `simulate` or `import-vcd`
    #[arg(long)]
    waves: PathBuf,
    /// DBSCAN neighborhood radius (nats in entropy space)
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    /// DBSCAN minimum neighbor count (including the point itself)
    #[arg(long, default_value_t = 5)]
    minpts: usize,
    /// Output report JSON
    #[arg(long)]
    report: PathBuf,
    /// Ground-truth Trojan wires; embeds TPR/TNR/FPR in the report
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Clustering space: entropy, or raw transition probability (ablation)
    #[arg(long, value_enum, default_value_t = SpaceArg::Entropy)]
    space: SpaceArg,
    /// Netlist for wire roles, when the store lacks input provenance
    #[arg(long)]
    netlist: Option<PathBuf>,
    /// Also report deleted noise points at or below the suspect band
    #[arg(long)]
    include_low_noise: bool,
    /// Omit the timestamp for byte-identical reruns
    #[arg(long)]
    no_timestamp: bool,
    /// Skip the CSV sidecars next to the report
    #[arg(long)]
    no_csv: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Entropy,
    Probability,
}

impl From<SpaceArg> for ClusterSpace {
    fn from(v: SpaceArg) -> Self {
        match v {
            SpaceArg::Entropy => ClusterSpace::Entropy,
            SpaceArg::Probability => ClusterSpace::Probability,
        }
    }
}

#[derive(Args)]
struct TestgenArgs {
    /// Waveform store the suspects were detected on
    #[arg(long)]
    waves: PathBuf,
    /// Detection report (updated in place with the testgen section)
    #[arg(long)]
    report: PathBuf,
    /// Output stimulus spec JSON
    #[arg(long)]
    out: PathBuf,
    /// Hold value for inputs outside the cover
    #[arg(long, value_enum, default_value_t = HoldArg::Majority)]
    hold_value: HoldArg,
    /// Seed for the constrained campaign (default: the store's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Cycle count for the constrained campaign (default: the store's)
    #[arg(long)]
    cycles: Option<u64>,
    /// Netlist for input names, when the store lacks provenance
    #[arg(long)]
    netlist: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HoldArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Majority,
}

impl HoldArg {
    fn name(self) -> &'static str {
        match self {
            HoldArg::Zero => "0",
            HoldArg::One => "1",
            HoldArg::Majority => "majority",
        }
    }
}

impl From<HoldArg> for HoldValue {
    fn from(v: HoldArg) -> Self {
        match v {
            HoldArg::Zero => HoldValue::Zero,
            HoldArg::One => HoldValue::One,
            HoldArg::Majority => HoldValue::Majority,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Baseline (full-random) waveform store
    #[arg(long)]
    before: PathBuf,
    /// Constrained-random waveform store
    #[arg(long)]
    after: PathBuf,
    /// Detection report naming the suspects
    #[arg(long)]
    report: PathBuf,
    /// Ground-truth Trojan wires for TPR/TNR/FPR
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    init_thread_pool();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("HTDET_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Commands::Simulate(args) => cmd_simulate(args),
        Commands::ImportVcd(args) => cmd_import_vcd(args),
        Commands::Detect(args) => cmd_detect(args),
        Commands::Testgen(args) => cmd_testgen(args),
        Commands::Eval(args) => cmd_eval(args),
    }
}

fn load_netlist(path: &Path) -> Result<Netlist> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading netlist {}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "netlist".to_string());
    let netlist =
        parse_bench(&text, &name).with_context(|| format!("parsing {}", path.display()))?;
    Ok(netlist)
}

fn load_store(path: &Path) -> Result<WaveformStore> {
    WaveformStore::read_file(path)
        .with_context(|| format!("reading waveform store {}", path.display()))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let netlist = load_netlist(&args.netlist)?;
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading stimulus spec {}", path.display()))?;
            serde_json::from_str::<StimulusSpec>(&text)
                .with_context(|| format!("parsing stimulus spec {}", path.display()))?
        }
        None => StimulusSpec::full_random(0, 0),
    };
    if let Some(cycles) = args.cycles {
        spec.cycles = cycles;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if spec.cycles == 0 {
        bail!("no cycle count: pass --cycles or provide one in the spec file");
    }
    let store = simulate(&netlist, &spec).context("simulating")?;
    store
        .write_file(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.debug_json {
        fs::write(path, serde_json::to_string_pretty(&store.to_debug_json())? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "simulated {} for {} cycles (seed {}): {} wires -> {}",
        netlist.name,
        spec.cycles,
        spec.seed,
        store.num_wires(),
        args.out.display()
    );
    Ok(())
}

fn cmd_import_vcd(args: ImportVcdArgs) -> Result<()> {
    let file = fs::File::open(&args.vcd)
        .with_context(|| format!("opening VCD {}", args.vcd.display()))?;
    let source = args
        .vcd
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "vcd".to_string());
    let (store, import_report) = waveform::import_vcd(
        std::io::BufReader::new(file),
        &args.scope,
        args.sample_period,
        &source,
    )
    .context("importing VCD")?;
    store
        .write_file(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "imported {} signals x {} samples -> {}",
        store.num_wires(),
        store.cycles,
        args.out.display()
    );
    if !import_report.xz_warnings.is_empty() {
        for (wire, count) in &import_report.xz_warnings {
            eprintln!("warning: {} x/z samples mapped to 0 on {}", count, wire);
        }
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let store = load_store(&args.waves)?;
    let space: ClusterSpace = args.space.into();

    // the analysis universe: internal wires and outputs, never raw inputs
    let mut netlist_digest = None;
    let universe: Vec<String> = match &args.netlist {
        Some(path) => {
            let bytes =
                fs::read(path).with_context(|| format!("reading netlist {}", path.display()))?;
            netlist_digest = Some(format!("{:016x}", fnv1a64(&bytes)));
            let netlist = load_netlist(path)?;
            let names: Vec<String> = netlist
                .analysis_wires()
                .iter()
                .map(|&id| netlist.wire_name(id).to_string())
                .collect();
            for n in &names {
                if store.wire_index(n).is_none() {
                    bail!("netlist wire {:?} is missing from the waveform store", n);
                }
            }
            names
        }
        None => {
            if store.pi_names.is_empty() {
                eprintln!(
                    "warning: store carries no input provenance; analyzing every wire \
                     (pass --netlist to exclude primary inputs)"
                );
            }
            store.analysis_names()
        }
    };

    let records = infotheory::entropy_records::<f64>(&store, &universe)
        .context("computing entropy records")?;
    let params = ClusterParams {
        radius: args.radius,
        min_pts: args.minpts,
    };
    let clustering = cluster::dbscan(&records, &params, space);
    let suspects = cluster::select_suspects(&clustering, args.include_low_noise);
    let suspect_names: BTreeSet<&str> = suspects.wires.iter().map(|r| r.wire.as_str()).collect();
    let excluded: BTreeSet<&str> = suspects
        .symmetry_excluded
        .iter()
        .map(|s| s.as_str())
        .collect();

    let rows: Vec<WireRow> = (0..clustering.points.len())
        .map(|i| {
            let rec = &clustering.points[i];
            WireRow {
                wire: rec.wire.clone(),
                entropy: rec.entropy,
                p_transition: rec.p_transition,
                cluster: clustering.labels[i],
                role: clustering.roles[i],
                suspect: suspect_names.contains(rec.wire.as_str()),
                symmetry_excluded: excluded.contains(rec.wire.as_str()),
            }
        })
        .collect();

    let eval_metrics = match &args.labels {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading labels {}", path.display()))?;
            let labels = eval_mod::parse_labels(&text, &path.display().to_string())?;
            let known: BTreeSet<String> = store.wire_names().iter().cloned().collect();
            labels.resolve_against(&known)?;
            Some(eval_mod::score::<f64>(
                &suspects.names(),
                &labels,
                &universe,
            )?)
        }
        None => None,
    };

    let report = DetectionReport {
        tool: ToolInfo::default(),
        run: RunInfo {
            waves: args.waves.display().to_string(),
            netlist_name: store.netlist_name.clone(),
            netlist_digest,
            seed: store.seed,
            cycles: store.cycles,
            stimulus_digest: format!("{:016x}", store.stimulus_digest),
            space,
            radius: args.radius,
            min_pts: args.minpts,
            include_low_noise: args.include_low_noise,
            timestamp: if args.no_timestamp {
                None
            } else {
                Some(
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                )
            },
        },
        rows,
        suspects: suspects.names(),
        warnings: suspects.warnings.clone(),
        eval: eval_metrics,
        testgen: None,
    };

    fs::write(&args.report, report.to_json_bytes()?)
        .with_context(|| format!("writing {}", args.report.display()))?;
    if !args.no_csv {
        write_csv_sidecars(&args.report, &report)?;
    }

    println!(
        "{} wires analyzed, {} clusters, {} suspects -> {}",
        report.rows.len(),
        clustering.num_clusters,
        report.suspects.len(),
        args.report.display()
    );
    if let Some(m) = &report.eval {
        println!("{}", format_metrics(m));
    }
    for w in &report.warnings {
        eprintln!("warning: {:?}", w);
    }
    Ok(())
}

/// Whole-percent console rendering; full precision stays in the JSON.
fn format_metrics(m: &eval_mod::EvalMetrics<f64>) -> String {
    let pct = |v: Option<f64>| match v {
        Some(x) => format!("{:.0}%", x * 100.0),
        None => "n/a".to_string(),
    };
    format!(
        "TPR {} TNR {} FPR {} (tp {} fp {} tn {} fn {})",
        pct(m.tpr),
        pct(m.tnr),
        pct(m.fpr),
        m.tp,
        m.fp,
        m.tn,
        m.fneg
    )
}

fn write_csv_sidecars(report_path: &Path, report: &DetectionReport) -> Result<()> {
    let stem = report_path.with_extension("");
    let sorted_path = PathBuf::from(format!("{}.sorted.csv", stem.display()));
    let hist_path = PathBuf::from(format!("{}.hist.csv", stem.display()));

    let mut sorted = String::from("rank,wire,entropy,p_transition,cluster,role\n");
    for (rank, row) in report.rows.iter().enumerate() {
        let cluster = row
            .cluster
            .map(|c| c.to_string())
            .unwrap_or_else(|| "noise".to_string());
        sorted.push_str(&format!(
            "{},{},{},{},{},{:?}\n",
            rank, row.wire, row.entropy, row.p_transition, cluster, row.role
        ));
    }
    fs::write(&sorted_path, sorted)
        .with_context(|| format!("writing {}", sorted_path.display()))?;

    let value = |r: &WireRow| match report.run.space {
        ClusterSpace::Entropy => r.entropy,
        ClusterSpace::Probability => r.p_transition,
    };
    let top = match report.run.space {
        ClusterSpace::Entropy => std::f64::consts::LN_2,
        ClusterSpace::Probability => 1.0,
    };
    const BINS: usize = 64;
    let mut counts = [0usize; BINS];
    for row in &report.rows {
        let idx = ((value(row) / top) * BINS as f64).floor() as usize;
        counts[idx.min(BINS - 1)] += 1;
    }
    let mut hist = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in counts.iter().enumerate() {
        hist.push_str(&format!(
            "{},{},{}\n",
            top * i as f64 / BINS as f64,
            top * (i + 1) as f64 / BINS as f64,
            c
        ));
    }
    fs::write(&hist_path, hist).with_context(|| format!("writing {}", hist_path.display()))?;
    Ok(())
}

fn cmd_testgen(args: TestgenArgs) -> Result<()> {
    let store = load_store(&args.waves)?;
    let report_text = fs::read_to_string(&args.report)
        .with_context(|| format!("reading report {}", args.report.display()))?;
    let mut report: DetectionReport = serde_json::from_str(&report_text)
        .with_context(|| format!("parsing report {}", args.report.display()))?;

    if report.suspects.is_empty() {
        bail!("nothing to cover: the report has no suspects");
    }
    let pi_names: Vec<String> = if !store.pi_names.is_empty() {
        store.pi_names.clone()
    } else if let Some(path) = &args.netlist {
        load_netlist(path)?.input_names()
    } else {
        bail!(
            "store {} has no primary-input provenance; pass --netlist",
            args.waves.display()
        );
    };

    let list = testgen::build_correlation_list::<f64>(&store, &report.suspects, &pi_names)
        .context("building the strong correlation list")?;
    let selection = testgen::select_scpi(&list);
    let chosen: Vec<String> = selection.chosen.iter().map(|&j| pi_names[j].clone()).collect();
    let uncoverable: Vec<String> = list
        .uncoverable
        .iter()
        .map(|&i| list.suspects[i].clone())
        .collect();

    let seed = args.seed.unwrap_or(store.seed);
    let cycles = args.cycles.unwrap_or(store.cycles);
    let spec =
        testgen::make_constrained_spec(&chosen, &pi_names, &store, args.hold_value.into(), seed, cycles)
            .context("building the constrained stimulus")?;
    fs::write(&args.out, serde_json::to_string_pretty(&spec)? + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;

    // fold the outcome back into the report
    let mut mi_bytes = Vec::with_capacity(list.mi.len() * pi_names.len() * 8);
    for row in &list.mi {
        for v in row {
            mi_bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    report.testgen = Some(TestgenSection {
        mi_digest: format!("{:016x}", fnv1a64(&mi_bytes)),
        chosen_scpis: chosen.clone(),
        cover_size: chosen.len(),
        optimal: selection.optimal,
        uncoverable: uncoverable.clone(),
        hold_value: args.hold_value.name().to_string(),
        spec_path: args.out.display().to_string(),
    });
    fs::write(&args.report, report.to_json_bytes()?)
        .with_context(|| format!("updating {}", args.report.display()))?;

    println!(
        "cover: {} of {} inputs ({}): {}",
        chosen.len(),
        pi_names.len(),
        if selection.optimal { "exact" } else { "greedy" },
        chosen.join(", ")
    );
    if chosen.is_empty() {
        eprintln!("warning: empty cover; the spec is all-constant");
    }
    if !uncoverable.is_empty() {
        println!("uncoverable suspects: {}", uncoverable.join(", "));
    }
    println!("constrained stimulus -> {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let before = load_store(&args.before)?;
    let after = load_store(&args.after)?;
    let report_text = fs::read_to_string(&args.report)
        .with_context(|| format!("reading report {}", args.report.display()))?;
    let report: DetectionReport = serde_json::from_str(&report_text)
        .with_context(|| format!("parsing report {}", args.report.display()))?;

    let gain = testgen::transition_gain::<f64>(&before, &after, &report.suspects)
        .context("comparing transition counts")?;
    println!("          tr_max      tr_ave");
    println!("before    {:<10}  {:.2}", gain.before.tr_max, gain.before.tr_ave);
    println!("after     {:<10}  {:.2}", gain.after.tr_max, gain.after.tr_ave);

    if let Some(path) = &args.labels {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading labels {}", path.display()))?;
        let labels = eval_mod::parse_labels(&text, &path.display().to_string())?;
        let known: BTreeSet<String> = before.wire_names().iter().cloned().collect();
        labels.resolve_against(&known)?;
        let mut metrics = eval_mod::score::<f64>(&report.suspects, &labels, &report.universe())?;
        metrics.tr_max = Some(gain.after.tr_max);
        metrics.tr_ave = Some(gain.after.tr_ave);
        println!("{}", format_metrics(&metrics));
    }
    Ok(())
}
