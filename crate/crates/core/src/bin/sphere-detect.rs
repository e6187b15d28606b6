use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sphere_detect::config::{ConfigOverrides, HarnessConfig};
use sphere_detect::geometry::{Point3, Sphere};
use sphere_detect::harness::{self, Axis, GradsimParams, SyntheticScanSpec};
use sphere_detect::io::write_candidates;
use sphere_detect::losses::SphereLossKind;

#[derive(Parser)]
#[command(
    name = "sphere-detect",
    version,
    about = "Sphere-based nodule detection harness"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    lambda_s: Option<f64>,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    w: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    tau_siou: Option<f64>,
    #[arg(long, global = true)]
    tau_dr: Option<f64>,
    /// Grid shape as D,H,W.
    #[arg(long, global = true, value_parser = parse_triple::<usize>)]
    grid_dims: Option<[usize; 3]>,
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            k: self.k,
            n: self.n,
            lambda_s: self.lambda_s,
            top_n: self.top_n,
            t: self.t,
            w: self.w,
            beta: self.beta,
            alpha: self.alpha,
            gamma: self.gamma,
            tau_siou: self.tau_siou,
            tau_dr: self.tau_dr,
            grid_dims: self.grid_dims,
            stride: self.stride,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Loss/gradient curves along a path and descent trajectories.
    Gradsim {
        /// Comma-separated loss kinds: box_iou, siou, sdiou, siou++.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "box_iou,siou,sdiou,siou++"
        )]
        kinds: Vec<SphereLossKind>,
        /// Start sphere as x,y,z,r.
        #[arg(long, value_parser = parse_sphere, default_value = "0,0,-8,1.5")]
        start: Sphere,
        /// Target sphere as x,y,z,r.
        #[arg(long, value_parser = parse_sphere, default_value = "0,0,0,1.5")]
        target: Sphere,
        #[arg(long, default_value = "z")]
        axis: Axis,
        #[arg(long, default_value_t = 801)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.01)]
        stop_tol: f64,
        /// Output directory for curve.csv and descent.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic annotations and oracle prediction grids.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Volume extent as D,H,W world voxels.
        #[arg(long, value_parser = parse_triple::<usize>, default_value = "96,96,96")]
        volume: [usize; 3],
        #[arg(long, default_value_t = 1)]
        min_nodules: usize,
        #[arg(long, default_value_t = 3)]
        max_nodules: usize,
        #[arg(long, default_value_t = 2.0)]
        min_radius: f64,
        #[arg(long, default_value_t = 8.0)]
        max_radius: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        clutter: usize,
    },
    /// Label-assignment summary for an annotation CSV.
    Assign {
        annotations: PathBuf,
        /// JSON object mapping scan id to a per-cell loss array.
        #[arg(long)]
        loss_map: Option<PathBuf>,
        /// Summary JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode grid files, merge per scan and run sphere NMS.
    Detect {
        /// Grid files or directories of `*.grid` files.
        #[arg(required = true)]
        grids: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// FROC curve of a candidate CSV against an annotation CSV.
    Froc {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_json: PathBuf,
    },
}

fn parse_numbers<T: std::str::FromStr>(s: &str, want: usize) -> Result<Vec<T>, String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| format!("bad number {p:?}"))
        })
        .collect::<Result<_, _>>()?;
    if parts.len() != want {
        return Err(format!(
            "expected {want} comma-separated values, got {}",
            parts.len()
        ));
    }
    Ok(parts)
}

fn parse_triple<T: std::str::FromStr + Copy>(s: &str) -> Result<[T; 3], String> {
    let v = parse_numbers::<T>(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_sphere(s: &str) -> Result<Sphere, String> {
    let v = parse_numbers::<f64>(s, 4)?;
    Sphere::new(Point3::new(v[0], v[1], v[2]), v[3]).map_err(|e| e.to_string())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = HarnessConfig::resolve(cli.config.as_deref(), &cli.overrides.to_overrides())
        .context("resolving configuration")?;
    eprintln!("effective config: {}", serde_json::to_string(&config)?);

    match cli.command {
        Command::Gradsim {
            kinds,
            start,
            target,
            axis,
            samples,
            rate,
            max_iters,
            stop_tol,
            out,
        } => {
            let params = GradsimParams {
                kinds,
                start,
                target,
                axis,
                samples,
                rate,
                max_iters,
                stop_tol,
            };
            let report = harness::run_gradsim(&params)?;
            harness::write_gradsim(&out, &report, axis)?;
            for t in &report.trajectories {
                println!(
                    "{}: {} iterations, final d_ab {}, converged {}",
                    t.kind,
                    t.steps.len() - 1,
                    t.final_distance(),
                    t.converged
                );
            }
        }
        Command::Synth {
            out,
            count,
            volume,
            min_nodules,
            max_nodules,
            min_radius,
            max_radius,
            noise,
            clutter,
        } => {
            let spec = SyntheticScanSpec {
                volume,
                nodules: [min_nodules, max_nodules],
                radius: [min_radius, max_radius],
                noise,
                clutter,
            };
            let scans = harness::synthesize(&spec, &config, count)?;
            let written = harness::write_synthetic(&out, &scans)?;
            println!(
                "wrote {} and {} grid files",
                written.annotations.display(),
                written.grids.len()
            );
        }
        Command::Assign {
            annotations,
            loss_map,
            out,
        } => {
            let summary = harness::run_assign(&annotations, loss_map.as_deref(), &config)?;
            let mut json = serde_json::to_vec_pretty(&summary)?;
            json.push(b'\n');
            match out {
                Some(path) => sphere_detect::io::write_atomic(&path, &json)?,
                None => print!("{}", String::from_utf8(json)?),
            }
        }
        Command::Detect { grids, out } => {
            let scans = harness::run_detect(&grids, &config)?;
            if scans.is_empty() {
                bail!("no grid files found");
            }
            write_candidates(&out, &scans)?;
            let total: usize = scans.values().map(Vec::len).sum();
            println!("{} candidates over {} scans", total, scans.len());
        }
        Command::Froc {
            candidates,
            annotations,
            out_csv,
            out_json,
        } => {
            let report = harness::run_froc(&candidates, &annotations, &config)?;
            harness::write_froc_report(&out_csv, &out_json, &report)?;
            for p in &report.points {
                println!("{:>6} FPs/scan: {:.4}", p.fps_per_scan, p.sensitivity);
            }
            println!("average: {:.4}", report.average);
        }
    }
    Ok(())
}
