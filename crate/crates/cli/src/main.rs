use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idcurate_core::eval::{self, ProbeSet, DEFAULT_IMPOSTOR_CAP};
use idcurate_core::pipeline::{read_clusters, DatasetStats, RunManifest};
use idcurate_core::tuning::{distractor_invariance, sweep};
use idcurate_core::{
    cluster_account, extract_disjoint_distractors, generate_synthetic, io, run_pipeline,
    CurationConfig, Error, PurificationScope, SyntheticSpec,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "idcurate",
    version,
    about = "Curate identity clusters from face embeddings"
)]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "warn",
          value_parser = ["off", "error", "warn", "info", "debug", "trace"])]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus.
    Gen(GenArgs),
    /// Cluster a single account and print its identity clusters.
    Cluster(ClusterArgs),
    /// Run clustering and purification over every account.
    Pipeline(PipelineArgs),
    /// Sweep (alpha, beta) over synthetic corpora.
    Tune(TuneArgs),
    /// Purity against distractor ratio, with and without purification.
    Invariance(InvarianceArgs),
    /// Sample distractors from accounts without accepted clusters.
    Distractors(DistractorArgs),
    /// Summarize a clusters.jsonl file.
    Stats(StatsArgs),
    /// Identification and verification against a distractor pool.
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
struct SpecArgs {
    #[arg(long, default_value_t = 100)]
    identities: usize,
    /// Faces per identity, `N` or `MIN-MAX`.
    #[arg(long, default_value = "5-10", value_parser = parse_per)]
    per: (usize, usize),
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    intra_spread: f64,
    #[arg(long, default_value_t = 10.0)]
    inter_separation: f64,
    /// Distractor faces per identity face.
    #[arg(long, default_value_t = 0.0)]
    distractor_ratio: f64,
    /// Distractor spread relative to the spread of identity centers.
    #[arg(long, default_value_t = 1.75)]
    background_scale: f64,
    #[arg(long, default_value_t = 5)]
    identities_per_account: usize,
    /// Photos per account showing two different identities.
    #[arg(long, default_value_t = 1)]
    multi_identity_photos: usize,
    /// Probability that a face shares a photo with another face of its identity.
    #[arg(long, default_value_t = 0.0)]
    same_identity_photo_rate: f64,
}

impl SpecArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_identities: self.identities,
            faces_per_identity: self.per,
            embedding_dim: self.dim,
            intra_spread: self.intra_spread,
            inter_separation: self.inter_separation,
            distractor_ratio: self.distractor_ratio,
            background_scale: self.background_scale,
            identities_per_account: self.identities_per_account,
            multi_identity_photos: self.multi_identity_photos,
            same_identity_photo_rate: self.same_identity_photo_rate,
            seed,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output directory (embeddings.emb1 + embeddings.jsonl), or a `.csv` file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key=value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Minimum identity size.
    #[arg(long)]
    z: Option<usize>,
    #[arg(long)]
    min_account_photos: Option<usize>,
    #[arg(long)]
    purification_scope: Option<PurificationScope>,
}

impl ConfigArgs {
    fn resolve(&self, base: CurationConfig) -> Result<CurationConfig, Error> {
        let mut c = match &self.config {
            Some(path) => CurationConfig::load(path)?,
            None => base,
        };
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.z {
            c.min_cluster_size = v;
        }
        if let Some(v) = self.min_account_photos {
            c.min_account_photos = v;
        }
        if let Some(v) = self.purification_scope {
            c.purification_scope = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// Corpus directory, `.emb1` file or `.csv` fixture.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    account: String,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Reuse journaled account results from a previous run in `--out`.
    #[arg(long)]
    resume: bool,
    /// Stop after this many accounts have been journaled.
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// `LO:HI`
    #[arg(long, default_value = "0.5:5", value_parser = parse_range)]
    alpha_range: (f64, f64),
    #[arg(long, default_value = "0.5:8", value_parser = parse_range)]
    beta_range: (f64, f64),
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for purity.csv, fraction_kept.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InvarianceArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value = "0,1,2,5,10", value_delimiter = ',')]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[command(flatten)]
    config: ConfigArgs,
    /// CSV output; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistractorArgs {
    /// Full corpus the pipeline ran on.
    #[arg(long)]
    corpus: PathBuf,
    /// clusters.jsonl from that run.
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    count: usize,
    /// Output `.emb1` path; a sidecar manifest is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    clusters: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled probes: corpus directory, `.emb1` with manifest, or `.csv`.
    #[arg(long)]
    probes: PathBuf,
    /// Distractor `.emb1`; the manifest is optional.
    #[arg(long)]
    distractors: PathBuf,
    #[arg(long)]
    max_scale: usize,
    #[arg(long, default_value_t = DEFAULT_IMPOSTOR_CAP)]
    impostor_cap: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write identification.csv and roc.csv to this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

fn parse_per(s: &str) -> Result<(usize, usize), String> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    match s.split_once('-') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::InvalidConfig("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    match cli.command {
        Command::Gen(args) => {
            let set = generate_synthetic(&args.spec.spec(seed))?;
            if args.out.extension().is_some_and(|e| e == "csv") {
                io::save_csv(&args.out, &set)?;
            } else {
                io::save_corpus(&args.out, &set)?;
            }
            log::info!("wrote {} faces to {}", set.len(), args.out.display());
        }
        Command::Cluster(args) => {
            let config = args.config.resolve(CurationConfig::default())?;
            let set = io::load_any(&args.input)?;
            let accounts = set.accounts();
            let rows = accounts.get(args.account.as_str()).ok_or_else(|| {
                Error::malformed(&args.input, format!("no account {:?}", args.account))
            })?;
            let result = cluster_account(&set, rows, &config)?;
            let clusters: Vec<_> = result
                .clusters
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "face_ids": c.members.iter().map(|&i| &set.record(i).face_id).collect::<Vec<_>>(),
                        "mean_pairwise_distance": c.mean_pairwise_distance,
                    })
                })
                .collect();
            print!(
                "{}",
                to_json(&json!({
                    "account_id": args.account,
                    "clusters": clusters,
                    "dropped_below_min_size": result.dropped_below_min_size,
                    "transitive_violations": result.transitive_violations,
                }))
            );
        }
        Command::Pipeline(args) => {
            let manifest = RunManifest {
                input: args.input,
                config: args.config.resolve(CurationConfig::default())?,
                workers,
                out_dir: args.out,
                resume: args.resume,
                stop_after: args.stop_after,
            };
            let output = run_pipeline(&manifest)?;
            let audit = &output.curation.audit;
            println!(
                "{} identities, {} of {} faces kept; outputs in {}",
                output.stats.identity_count,
                audit.faces_kept,
                audit.total_faces_in,
                manifest.out_dir.display()
            );
        }
        Command::Tune(args) => {
            let base = args.config.resolve(CurationConfig {
                min_account_photos: 0,
                ..Default::default()
            })?;
            let result = sweep(
                &args.spec.spec(seed),
                &base,
                args.alpha_range,
                args.beta_range,
                args.step,
                args.trials,
            )?;
            write_file(
                &args.out.join("purity.csv"),
                &result.surface_csv(&result.purity),
            )?;
            write_file(
                &args.out.join("fraction_kept.csv"),
                &result.surface_csv(&result.fraction_kept),
            )?;
            let (alpha, beta) = result.selected;
            let a = result.alphas.iter().position(|&x| x == alpha).unwrap_or(0);
            let b = result.betas.iter().position(|&x| x == beta).unwrap_or(0);
            let (purity, kept) = (result.purity[a][b], result.fraction_kept[a][b]);
            write_file(
                &args.out.join("summary.json"),
                &to_json(&json!({
                    "alpha": alpha,
                    "beta": beta,
                    "purity": purity,
                    "fraction_kept": kept,
                    "trials_per_cell": result.trials_per_cell,
                    "seed": seed,
                })),
            )?;
            println!(
                "selected alpha={alpha} beta={beta}: purity {purity:.4}, fraction kept {kept:.4}"
            );
        }
        Command::Invariance(args) => {
            let config = args.config.resolve(CurationConfig {
                min_account_photos: 0,
                ..Default::default()
            })?;
            let spec = args.spec.spec(seed);
            let with = distractor_invariance(&spec, &config, &args.ratios, args.trials, true)?;
            let without = distractor_invariance(&spec, &config, &args.ratios, args.trials, false)?;
            let mut csv = String::from("ratio,purity_with,kept_with,purity_without,kept_without\n");
            for (w, wo) in with.iter().zip(&without) {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    w.ratio, w.purity, w.fraction_kept, wo.purity, wo.fraction_kept
                );
            }
            match args.out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Distractors(args) => {
            let corpus = io::load_any(&args.corpus)?;
            let clustered = read_clusters(&args.clusters)?;
            let pool = extract_disjoint_distractors(&corpus, &clustered, args.count, seed)?;
            io::save_emb1(&args.out, &pool)?;
            log::info!("wrote {} distractors to {}", pool.len(), args.out.display());
        }
        Command::Stats(args) => {
            let sizes: Vec<usize> = read_clusters(&args.clusters)?
                .iter()
                .map(|c| c.face_ids.len())
                .collect();
            print!("{}", to_json(&DatasetStats::from_sizes(&sizes)));
        }
        Command::Eval(args) => {
            let probes = ProbeSet::new(io::load_any(&args.probes)?)
                .map_err(|e| Error::malformed(&args.probes, e.to_string()))?;
            let distractors = io::load_emb1_lenient(&args.distractors)?;
            let report = eval::evaluate(
                &probes,
                &distractors,
                args.max_scale,
                args.impostor_cap,
                seed,
            )?;
            write_file(&args.out, &to_json(&report))?;
            if let Some(dir) = &args.csv_dir {
                write_file(
                    &dir.join("identification.csv"),
                    &report.identification_csv(),
                )?;
                write_file(&dir.join("roc.csv"), &report.roc_csv())?;
            }
            for row in &report.identification {
                println!(
                    "scale {:>8}: rank-1 {:.4}  rank-10 {:.4}",
                    row.scale, row.rank_1, row.rank_10
                );
            }
        }
    }
    Ok(())
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
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
