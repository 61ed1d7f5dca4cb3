use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphmapper_core::io::{self, LoadedGraph};
use graphmapper_core::lens::{self, format_lens};
use graphmapper_core::mapper::run_mapper;
use graphmapper_core::theory::{run_batch, BatchConfig, Property};
use graphmapper_core::{
    export_dot, mpr_pool, Clustering, Colormap, Cover, LensVector, MapperConfig, MapperMode, MprConfig, PageRankConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "graphmapper",
    version,
    about = "Mapper summaries and Mapper pooling for graphs"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed for every randomized path.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a lens and write it in lens-file format.
    Lens {
        #[command(flatten)]
        lens: LensArgs,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        graph: PathBuf,
    },
    /// Overlap summary: clusters joined when they share nodes.
    Mapper(SummaryArgs),
    /// Structural summary: clusters joined by normalised cluster adjacency.
    Sdgm {
        #[command(flatten)]
        summary: SummaryArgs,
        /// Minimum normalised edge weight kept.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// Pool a graph with PageRank-based Mapper clusters.
    Pool {
        /// Number of intervals covering [0, 1].
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        overlap: f64,
        /// PageRank damping factor.
        #[arg(long, default_value_t = 0.85)]
        alpha: f64,
        /// Dense node feature matrix; a ones column is pooled when omitted.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Prefix for `.A.txt`, `.X.txt` and `.S.smat`; defaults to the graph path without extension.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
        graph: PathBuf,
    },
    /// Check a structural property on seeded random instances.
    Verify {
        /// Property to check: spectral, soft-cluster or permutation.
        #[arg(long, value_parser = parse_property)]
        prop: Property,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        max_n: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LensKind {
    Pagerank,
    Fiedler,
    Density,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ClusteringArg {
    Components,
    None,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ColormapArg {
    Auto,
    Viridis,
    Bivariate,
    ClassPalette,
    Rgb,
}

#[derive(Args, Debug)]
struct LensArgs {
    #[arg(long, value_enum, default_value_t = LensKind::Pagerank)]
    lens: LensKind,
    /// Lens file for `--lens file`; relative paths are also searched in MAPPER_LENS_PATH.
    #[arg(long)]
    lens_file: Option<PathBuf>,
    /// Min-max normalise the lens (pagerank and density are always normalised).
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    /// Length scale of the density lens.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Args, Debug)]
struct SummaryArgs {
    #[command(flatten)]
    lens: LensArgs,
    /// Intervals per lens axis; repeat once per axis.
    #[arg(long = "cover-n", required = true)]
    cover_n: Vec<usize>,
    /// Overlap fraction; one value for all axes or one per axis.
    #[arg(long = "cover-overlap", default_values_t = [0.2])]
    cover_overlap: Vec<f64>,
    /// Covered range `lo:hi` per axis; defaults to [0, 1] for normalised
    /// lenses and to the observed range otherwise.
    #[arg(long = "cover-range", value_parser = parse_range)]
    cover_range: Vec<(f64, f64)>,
    /// Class labels, `node class` per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ClusteringArg::Components)]
    clustering: ClusteringArg,
    #[arg(long, value_enum, default_value_t = ColormapArg::Auto)]
    colormap: ColormapArg,
    /// Prefix for `.summary.json` and `.dot`; defaults to the graph path without extension.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    graph: PathBuf,
}

fn parse_property(s: &str) -> std::result::Result<Property, String> {
    match s {
        "4.1" | "spectral" => Ok(Property::SpectralBipartition),
        "4.2" | "soft-cluster" => Ok(Property::SoftClusterEquivalence),
        "4.3" | "permutation" => Ok(Property::PermutationInvariance),
        _ => Err(format!(
            "unknown property `{s}`; use spectral, soft-cluster or permutation"
        )),
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    Ok((lo, hi))
}

/// Failure of a `verify` run, as opposed to bad input.
#[derive(Debug)]
struct VerificationFailed;

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("property violated")
    }
}

impl std::error::Error for VerificationFailed {}

fn load(path: &Path) -> Result<LoadedGraph> {
    io::load_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn compute_lens(g: &graphmapper_core::Graph, args: &LensArgs) -> Result<LensVector> {
    let pr = PageRankConfig {
        alpha: args.alpha,
        ..Default::default()
    };
    let lens = match args.lens {
        LensKind::Pagerank => lens::pagerank_lens(g, &pr)?,
        LensKind::Fiedler => lens::fiedler_lens(g)?,
        LensKind::Density => lens::density_lens(g, args.delta)?,
        LensKind::File => {
            let path = args.lens_file.as_ref().context("--lens file needs --lens-file")?;
            let lens = io::load_lens(path).with_context(|| format!("reading lens {}", path.display()))?;
            if lens.len() != g.num_nodes() {
                bail!("lens has {} rows, graph has {} nodes", lens.len(), g.num_nodes());
            }
            lens
        }
    };
    Ok(if args.normalize && !lens.is_normalized() {
        lens.normalize()
    } else {
        lens
    })
}

fn build_cover(lens: &LensVector, args: &SummaryArgs) -> Result<Cover> {
    let d = lens.dim();
    if args.cover_n.len() != d {
        bail!(
            "lens has {d} axes but {} --cover-n value(s) were given",
            args.cover_n.len()
        );
    }
    let overlaps = match args.cover_overlap.as_slice() {
        [g] => vec![*g; d],
        gs if gs.len() == d => gs.to_vec(),
        gs => bail!("expected 1 or {d} --cover-overlap values, got {}", gs.len()),
    };
    let ranges = match args.cover_range.as_slice() {
        [] if lens.is_normalized() => vec![(0.0, 1.0); d],
        [] => lens.column_ranges(),
        rs if rs.len() == d => rs.to_vec(),
        rs => bail!("expected {d} --cover-range values, got {}", rs.len()),
    };
    Ok(if d == 1 {
        Cover::interval(args.cover_n[0], overlaps[0], ranges[0].0, ranges[0].1)?
    } else {
        Cover::grid(&args.cover_n, &overlaps, &ranges)?
    })
}

fn prefix_for(graph: &Path, explicit: Option<&PathBuf>) -> PathBuf {
    explicit.cloned().unwrap_or_else(|| graph.with_extension(""))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn summarize(args: &SummaryArgs, mode: MapperMode) -> Result<()> {
    let loaded = load(&args.graph)?;
    let mut graph = loaded.graph.clone();
    if let Some(path) = &args.labels {
        let labels = io::load_labels(path, &loaded).with_context(|| format!("reading labels {}", path.display()))?;
        graph = graph.with_labels(labels)?;
    }
    let lens = compute_lens(&graph, &args.lens)?;
    let cover = build_cover(&lens, args)?;
    let cfg = MapperConfig {
        clustering: match args.clustering {
            ClusteringArg::Components => Clustering::Components,
            ClusteringArg::None => Clustering::None,
        },
        mode,
    };
    let sg = run_mapper(&graph, &lens, &cover, &cfg)?;
    let colormap = match args.colormap {
        ColormapArg::Auto => Colormap::for_summary(&sg),
        ColormapArg::Viridis => Colormap::Viridis,
        ColormapArg::Bivariate => Colormap::Bivariate,
        ColormapArg::ClassPalette => Colormap::ClassPalette,
        ColormapArg::Rgb => Colormap::Rgb,
    };
    let prefix = prefix_for(&args.graph, args.out_prefix.as_ref());
    write(&with_suffix(&prefix, ".summary.json"), &sg.to_json()?)?;
    write(&with_suffix(&prefix, ".dot"), &export_dot(&sg, colormap))?;
    println!("{} nodes, {} edges", sg.num_nodes(), sg.num_edges());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Lens { lens, out, graph } => {
            let loaded = load(&graph)?;
            let text = format_lens(&compute_lens(&loaded.graph, &lens)?);
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Mapper(args) => summarize(&args, MapperMode::Dgm)?,
        Command::Sdgm { summary, epsilon } => summarize(&summary, MapperMode::Sdgm { epsilon })?,
        Command::Pool {
            n,
            overlap,
            alpha,
            features,
            out_prefix,
            graph,
        } => {
            let loaded = load(&graph)?;
            let mut g = loaded.graph;
            if let Some(path) = features {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                g = g.with_features(io::parse_dense(&text)?)?;
            }
            let cfg = MprConfig {
                intervals: n,
                overlap,
                pagerank: PageRankConfig {
                    alpha,
                    ..Default::default()
                },
            };
            if !g.has_all_self_loops() {
                log::warn!("adding unit self-loops to nodes without one");
            }
            let pooled = mpr_pool(&g, &cfg)?;
            let prefix = prefix_for(&graph, out_prefix.as_ref());
            write(&with_suffix(&prefix, ".A.txt"), &io::format_dense(&pooled.adjacency))?;
            write(&with_suffix(&prefix, ".X.txt"), &io::format_dense(&pooled.features))?;
            write(&with_suffix(&prefix, ".S.smat"), &pooled.assignment.to_triplets())?;
            println!(
                "pooled {} nodes into {} clusters",
                g.num_nodes(),
                pooled.adjacency.nrows()
            );
        }
        Command::Verify { prop, instances, max_n } => {
            let defaults = BatchConfig::for_property(prop);
            let cfg = BatchConfig {
                instances: instances.unwrap_or(defaults.instances),
                max_nodes: max_n.unwrap_or(defaults.max_nodes),
                seed: cli.seed,
                ..defaults
            };
            let report = run_batch(prop, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.holds() {
                return Err(VerificationFailed.into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
