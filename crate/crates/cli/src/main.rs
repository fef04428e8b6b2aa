use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gravnet::community::{
    communities_geojson, detect_communities_with, partition_csv, read_partition_csv, track_communities, CommunityParams,
};
use gravnet::features::{step_expectation_features_with, FeatureMatrix};
use gravnet::gravity::{build_gravity_network, GravityNetwork};
use gravnet::pipeline::{generate_synthetic_with, ingest, run_pipeline, PipelineConfig, Scenario, SynthOptions};
use gravnet::raster::CoarseGrid;
use gravnet::regress::{split_harness, Dataset};
use gravnet::survey::{bin_households, join_to_nodes, joined_csv, load_survey_csv, read_joined_csv};
use gravnet::walk::{simulate_walks, WalkSet};
use gravnet::{Error, Result};

#[derive(Parser)]
#[command(name = "gravnet", version, about = "Gravity networks from nightlight rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Flags win over the config file.
#[derive(Args, Clone, Default)]
struct Settings {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set tau=2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Country preset (tanzania or malawi).
    #[arg(long)]
    preset: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Settings {
    fn load(&self) -> Result<PipelineConfig> {
        let mut all = match &self.config {
            Some(p) => PipelineConfig::read_settings(p)?,
            None => Vec::new(),
        };
        for o in &self.overrides {
            all.push(PipelineConfig::override_setting(o)?);
        }
        if let Some(p) = &self.preset {
            all.push(PipelineConfig::override_setting(&format!("preset={p}"))?);
        }
        if let Some(s) = self.seed {
            all.push(PipelineConfig::override_setting(&format!("seed={s}"))?);
        }
        PipelineConfig::from_settings(&all)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate rasters (or a point CSV) onto the coarse grid.
    Ingest {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Build the gravity network from a node table.
    BuildNet {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Simulate biased random walks.
    Walk {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Step-expectation features from a walk dump.
    Features {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        walks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Bin a survey and join clusters to nodes.
    Join {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        survey: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run the repeated-split harness for each configured model.
    Fit {
        #[arg(long)]
        joined: PathBuf,
        /// Directory receiving `fit_<model>.csv` and `predictions_<model>.csv`.
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Detect communities on a network.
    Communities {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        geojson: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Track communities between two partitions.
    Track {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional human-readable table.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run every stage from a config file.
    Run {
        /// Overrides `output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic scenario (rasters, survey, config).
    Synth {
        /// two-blobs, growth-merge or planted-linear.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Noise share of the planted target variance.
        #[arg(long, default_value_t = 0.3)]
        noise_share: f64,
    },
}

/// Writes through a `.partial` file so readers never see a half-written artifact.
fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    fs::write(&partial, contents).map_err(|source| Error::Io { path: partial.clone(), source })?;
    fs::rename(&partial, path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn network(nodes: &Path, edges: &Path) -> Result<(CoarseGrid, GravityNetwork)> {
    let grid = CoarseGrid::read_node_table(nodes)?;
    let net = GravityNetwork::read_edge_list(&grid, edges)?;
    Ok((grid, net))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { out, settings } => {
            let cfg = settings.load()?;
            let grid = ingest(&cfg, &cfg.rasters)?;
            write_file(&out, &grid.node_table_csv())?;
            println!("ingest: {} nodes", grid.node_count());
        }
        Command::BuildNet { nodes, out, settings } => {
            let cfg = settings.load()?;
            let grid = CoarseGrid::read_node_table(&nodes)?;
            let net = build_gravity_network(&grid, &cfg.gravity)?;
            write_file(&out, &net.edge_list_tsv())?;
            let rewired = net.edges().iter().filter(|e| e.rewired).count();
            println!("build-net: {} edges ({rewired} rewired)", net.edges().len());
        }
        Command::Walk { nodes, edges, out, settings } => {
            let cfg = settings.load()?;
            let params = cfg.walk_params()?;
            let (_, net) = network(&nodes, &edges)?;
            let walks = simulate_walks(&net, &params)?;
            write_file(&out, &walks.to_text(&params))?;
            println!("walk: {} walks of length {}", walks.iter().count(), walks.walk_length());
        }
        Command::Features { nodes, walks, out, settings } => {
            let cfg = settings.load()?;
            let grid = CoarseGrid::read_node_table(&nodes)?;
            let (_, walks): (_, WalkSet) = WalkSet::read(&walks)?;
            let f = step_expectation_features_with(&walks, &grid, &cfg.features)?;
            write_file(&out, &f.to_csv())?;
            println!("features: {} rows x {} columns", f.n_rows(), f.n_cols());
        }
        Command::Join { nodes, features, survey, out, settings } => {
            let cfg = settings.load()?;
            let grid = CoarseGrid::read_node_table(&nodes)?;
            let features = FeatureMatrix::read_csv(&features)?;
            let load = load_survey_csv(&survey)?;
            let clusters = bin_households(&load.samples, cfg.bin_precision)?;
            let joined = join_to_nodes(&clusters, &grid, &features, cfg.radius, cfg.target)?;
            write_file(&out, &joined_csv(features.columns(), &joined.samples))?;
            println!(
                "join: {} households ({} dropped), {} clusters, {} joined ({} dropped)",
                load.samples.len(),
                load.dropped,
                clusters.len(),
                joined.samples.len(),
                joined.dropped
            );
        }
        Command::Fit { joined, out_dir, settings } => {
            let cfg = settings.load()?;
            let opts = cfg.harness_options()?;
            let specs = cfg.model_specs()?;
            let (_, samples) = read_joined_csv(&joined)?;
            let data = Dataset::from_joined(&samples)?;
            for spec in specs {
                let report = split_harness(&data, &spec, &opts)?;
                write_file(&out_dir.join(format!("fit_{}.csv", report.model)), &report.to_csv())?;
                write_file(&out_dir.join(format!("predictions_{}.csv", report.model)), &report.predictions_csv())?;
                println!("fit {}: median test R2 {:.6}", report.model, report.median_test_r2);
            }
        }
        Command::Communities { nodes, edges, out, geojson, settings } => {
            let cfg = settings.load()?;
            let (grid, net) = network(&nodes, &edges)?;
            let part = detect_communities_with(
                &net,
                &CommunityParams {
                    resolution: cfg.resolution,
                    seed: cfg.seed.unwrap_or(0),
                    label: cfg.label.clone(),
                    ..CommunityParams::default()
                },
            )?;
            write_file(&out, &partition_csv(&part))?;
            if let Some(g) = geojson {
                write_file(&g, &communities_geojson(&grid, &part)?)?;
            }
            println!("communities: {} (modularity {:.6})", part.community_count(), part.modularity);
        }
        Command::Track { from, to, out, table, settings } => {
            let cfg = settings.load()?;
            let label = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let a = read_partition_csv(&from, &label(&from))?;
            let b = read_partition_csv(&to, &label(&to))?;
            let report = track_communities(&a, &b, cfg.overlap_threshold)?;
            write_file(&out, &report.to_csv())?;
            if let Some(t) = table {
                write_file(&t, &report.to_table())?;
            }
            print!("{}", report.to_table());
        }
        Command::Run { out_dir, settings } => {
            let mut cfg = settings.load()?;
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            let summary = run_pipeline(&cfg)?;
            print!("{}", summary.to_text());
            print!("{}", summary.to_json_line());
        }
        Command::Synth { scenario, seed, out_dir, noise_share } => {
            let opts = SynthOptions { noise_share, ..SynthOptions::default() };
            let bundle = generate_synthetic_with(Scenario::from_name(&scenario)?, seed, &opts)?;
            bundle.write(&out_dir)?;
            println!(
                "synth {}: {} rasters{} written to {}",
                scenario,
                bundle.rasters.len(),
                if bundle.survey.is_some() { " and a survey" } else { "" },
                out_dir.display()
            );
        }
    }
    Ok(())
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
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
