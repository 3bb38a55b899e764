//! Command-line driver: affinity-dimension brackets, projected exponents,
//! structural certificates, the quad-family verification pipeline,
//! attractor rendering and box-counting, and report replay.
//!
//! Exit codes: 0 success (and, for `check`/`certify-example`, everything
//! certified); 1 a computation ran but a certificate or comparison failed;
//! 2 configuration/usage errors; 3 precondition failures; 4 budget
//! exhaustion. Diagnostics go to stderr, the report to stdout.

mod config;
mod report;

use affdim::attractor::{
    box_count, project_points, rasterize, sample_attractor, write_gray_image, DensityMode,
    ImageSpec, PointCloud, SampleMode,
};
use affdim::gallery::{certify_tensor_quad, TensorQuadInstance};
use affdim::linalg::Matrix;
use affdim::pressure::{affinity_dimension, kron_projected_bound, projected_exponent};
use affdim::structure::{irreducibility_check, proximality_check, strong_separation_certificate};
use affdim::wordspace::{VisitOptions, DEFAULT_BUDGET};
use affdim::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{load_config, IfsConfig};
use report::RunReport;
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "affdim",
    version,
    about = "Dimension invariants and structure certificates for affine iterated function systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Density {
    Log,
    Linear,
}

#[derive(Args, Debug, Clone)]
struct RunFlags {
    /// Seed for every randomised step; never wall-clock.
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
    /// Shard count for the parallel word enumeration (default: available
    /// parallelism). Reported, so runs can be reproduced bitwise.
    #[arg(long)]
    shards: Option<usize>,
    /// Cap on the number of enumerated words per walk.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

impl RunFlags {
    fn shards(&self) -> usize {
        self.shards.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }

    fn visit_options(&self) -> VisitOptions {
        VisitOptions {
            shards: self.shards(),
            budget: self.budget,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Bracket the affinity dimension via the level-envelope zero.
    Dim {
        config: PathBuf,
        #[arg(long, default_value_t = 6)]
        level: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Projected exponent under the configured projection, with the crude
    /// certified bound and, when Kronecker factors are supplied, the
    /// factorised bound.
    Projdim {
        config: PathBuf,
        #[arg(long, default_value_t = 6)]
        level: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run structure certificates (irreducibility and proximality per k,
    /// optionally the separation ball). Exit 0 only if all are CERTIFIED.
    Check {
        config: PathBuf,
        /// Exterior-power orders, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        retries: usize,
        #[arg(long, default_value_t = 1e-3)]
        margin: f64,
        /// Also certify separation on the ball with this radius.
        #[arg(long)]
        ball_radius: Option<f64>,
        /// Ball centre, comma separated (default: origin).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ball_center: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Full verification pipeline for the Kronecker quad family built from
    /// 2x2 factors A and B.
    CertifyExample {
        /// Inline JSON (nested rows or 4 flat entries) or a path to a JSON
        /// file with the same content.
        #[arg(long = "A")]
        a: String,
        #[arg(long = "B")]
        b: String,
        /// Four 4-vectors as inline JSON (default: the standard basis,
        /// for which the separation ball B(0, 3/2) certifies).
        #[arg(long)]
        translations: Option<String>,
        #[arg(long, default_value_t = 6)]
        level: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Sample the attractor, project to the plane, and write a grayscale
    /// density image (PGM by default, PNG by extension).
    Render {
        config: PathBuf,
        /// Image output path.
        #[arg(long, default_value = "attractor.pgm")]
        out: PathBuf,
        #[arg(long, default_value_t = 768)]
        width: usize,
        #[arg(long, default_value_t = 768)]
        height: usize,
        /// Chaos-game sample count (ignored if --depth is given).
        #[arg(long, default_value_t = 400_000)]
        points: usize,
        /// Use the full deterministic word tree of this depth instead.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Density::Log)]
        density: Density,
        /// Window "x0,y0,x1,y1" (default: fitted to the cloud).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bounds: Option<Vec<f64>>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Box-counting slope of the (projected) attractor samples.
    Boxdim {
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        points: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 11)]
        finest_level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Pretty-print a stored report; with --rerun, re-execute its echoed
    /// command and verify the reproducible part is bitwise identical.
    Report {
        file: PathBuf,
        #[arg(long)]
        rerun: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Shape(_) | Error::Domain(_) => 2,
        Error::Precondition(_) => 3,
        Error::Budget(_) => 4,
        _ => 1,
    }
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Report {
            file,
            rerun,
            format,
        } => match run_report_cmd(&file, rerun, format) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
        other => match execute(&other, argv) {
            Ok((report, ok)) => {
                emit(&report, display_format(&other), out_path(&other));
                if ok {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
    };
    std::process::exit(code);
}

fn display_format(cmd: &Cmd) -> Format {
    match cmd {
        Cmd::Dim { run, .. }
        | Cmd::Projdim { run, .. }
        | Cmd::Check { run, .. }
        | Cmd::CertifyExample { run, .. }
        | Cmd::Render { run, .. }
        | Cmd::Boxdim { run, .. } => run.format,
        Cmd::Report { format, .. } => *format,
    }
}

fn out_path(cmd: &Cmd) -> Option<&PathBuf> {
    match cmd {
        Cmd::Dim { out, .. }
        | Cmd::Projdim { out, .. }
        | Cmd::Check { out, .. }
        | Cmd::CertifyExample { out, .. }
        | Cmd::Boxdim { out, .. } => out.as_ref(),
        // for render, --out is the image path; the report goes to stdout
        Cmd::Render { .. } | Cmd::Report { .. } => None,
    }
}

fn emit(report: &RunReport, format: Format, out: Option<&PathBuf>) {
    let text = match format {
        Format::Table => report.table_string(),
        Format::Json => format!("{}\n", report.to_json_pretty()),
    };
    // tolerate early-closed pipes (e.g. `affdim ... | head`)
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
    if let Some(path) = out {
        if let Err(e) = std::fs::write(path, report.to_json_pretty()) {
            eprintln!("warning: could not write report to {}: {e}", path.display());
        }
    }
}

/// Run a compute command and return its report plus the success verdict
/// (certificate commands can run fine yet report failures).
fn execute(cmd: &Cmd, argv: Vec<String>) -> Result<(RunReport, bool), Error> {
    let started = Instant::now();
    let mut rep = RunReport::new(argv);
    let mut ok = true;
    match cmd {
        Cmd::Dim {
            config,
            level,
            tol,
            run,
            ..
        } => {
            let (cfg, digest) = load_config(config)?;
            rep.config_digest = Some(digest);
            fill_run(&mut rep, run);
            rep.tolerances.insert("bisection_tol".into(), *tol);
            let tuple = cfg.tuple()?;
            let bracket = affinity_dimension(&tuple, *level, *tol, &run.visit_options())?;
            rep.results = json!({
                "affinity_dimension": bracket,
                "semantics": "zero of the level envelope; a certified upper bound on the affinity dimension",
            });
        }
        Cmd::Projdim {
            config,
            level,
            tol,
            run,
            ..
        } => {
            let (cfg, digest) = load_config(config)?;
            rep.config_digest = Some(digest);
            fill_run(&mut rep, run);
            rep.tolerances.insert("bisection_tol".into(), *tol);
            let tuple = cfg.tuple()?;
            let Some(q) = cfg.projection_matrix()? else {
                return Err(Error::Shape(
                    "projdim needs a `projection` entry in the configuration".into(),
                ));
            };
            let opts = run.visit_options();
            let projected = projected_exponent(&tuple, &q, *level, *tol, &opts)?;
            let plain = affinity_dimension(&tuple, *level, *tol, &opts)?;
            let gap = plain.upper - projected.bracket.upper;
            let kron = match cfg.kron_tuples()? {
                Some((base_a, base_b, p)) => Some(kron_projected_bound(
                    &base_a, &base_b, &p, *level, *tol, &opts,
                )?),
                None => None,
            };
            rep.results = json!({
                "projected_exponent": projected,
                "affinity_dimension": plain,
                "gap_upper_minus_upper": gap,
                "kron_projected_bound": kron,
                "semantics": "the projected bracket is the empirical envelope zero; crude_upper = min(dimaff upper, rank Q) is certified",
            });
        }
        Cmd::Check {
            config,
            k,
            max_len,
            retries,
            margin,
            ball_radius,
            ball_center,
            run,
            ..
        } => {
            let (cfg, digest) = load_config(config)?;
            rep.config_digest = Some(digest);
            fill_run(&mut rep, run);
            rep.tolerances.insert("proximality_margin".into(), *margin);
            let tuple = cfg.tuple()?;
            let mut certificates = Vec::new();
            for &order in k {
                certificates.push(irreducibility_check(&tuple, order, *retries, run.seed)?);
                certificates.push(proximality_check(&tuple, order, *max_len, *margin)?);
            }
            if let Some(radius) = ball_radius {
                let ifs = cfg.ifs()?;
                let center = ball_center
                    .clone()
                    .unwrap_or_else(|| vec![0.0; cfg.dimension]);
                certificates.push(strong_separation_certificate(&ifs, &center, *radius)?);
            }
            ok = certificates.iter().all(|c| c.is_certified());
            rep.results = json!({
                "certificates": certificates,
                "all_certified": ok,
            });
        }
        Cmd::CertifyExample {
            a,
            b,
            translations,
            level,
            tol,
            run,
            ..
        } => {
            fill_run(&mut rep, run);
            rep.tolerances.insert("bisection_tol".into(), *tol);
            let a = parse_matrix2(a)?;
            let b = parse_matrix2(b)?;
            let translations = translations
                .as_deref()
                .map(parse_translations4)
                .transpose()?;
            let instance = TensorQuadInstance::new(a, b, translations)?;
            let report =
                certify_tensor_quad(&instance, *level, *tol, run.seed, &run.visit_options())?;
            ok = report.all_pass();
            rep.results = serde_json::to_value(&report).expect("report serialises");
        }
        Cmd::Render {
            config,
            out,
            width,
            height,
            points,
            depth,
            density,
            bounds,
            run,
        } => {
            let (cfg, digest) = load_config(config)?;
            rep.config_digest = Some(digest);
            fill_run(&mut rep, run);
            let cloud = sampled_cloud(&cfg, *points, *depth, run)?;
            let planar = planar_cloud(&cfg, cloud)?;
            let bounds = match bounds {
                Some(v) if v.len() == 4 => (v[0], v[1], v[2], v[3]),
                Some(_) => {
                    return Err(Error::Domain(
                        "--bounds needs exactly four values x0,y0,x1,y1".into(),
                    ))
                }
                None => ImageSpec::fit_bounds(&planar)?,
            };
            let spec = ImageSpec {
                width: *width,
                height: *height,
                bounds,
                density: match density {
                    Density::Log => DensityMode::Log,
                    Density::Linear => DensityMode::Linear,
                },
            };
            let pixels = rasterize(&planar, &spec)?;
            write_gray_image(*width, *height, &pixels, out)?;
            use sha2::Digest;
            rep.results = json!({
                "image": out.display().to_string(),
                "width": width,
                "height": height,
                "bounds": [bounds.0, bounds.1, bounds.2, bounds.3],
                "points": planar.len(),
                "pixels_sha256": hex::encode(sha2::Sha256::digest(&pixels)),
            });
        }
        Cmd::Boxdim {
            config,
            points,
            depth,
            finest_level,
            run,
            ..
        } => {
            let (cfg, digest) = load_config(config)?;
            rep.config_digest = Some(digest);
            fill_run(&mut rep, run);
            let cloud = sampled_cloud(&cfg, *points, *depth, run)?;
            let planar = planar_cloud(&cfg, cloud)?;
            let counts = box_count(&planar, *finest_level)?;
            rep.results = json!({
                "box_count": counts,
                "points": planar.len(),
                "note": "slope fitted over the retained window (counts <= points/100)",
            });
        }
        Cmd::Report { .. } => unreachable!("handled in main"),
    }
    rep.wall_ms = started.elapsed().as_millis();
    Ok((rep, ok))
}

fn fill_run(rep: &mut RunReport, run: &RunFlags) {
    rep.seed = run.seed;
    rep.shards = run.shards();
    rep.budget = run.budget;
}

fn sampled_cloud(
    cfg: &IfsConfig,
    points: usize,
    depth: Option<usize>,
    run: &RunFlags,
) -> Result<PointCloud<f64>, Error> {
    let ifs = cfg.ifs()?;
    let mode = match depth {
        Some(d) => SampleMode::Deterministic { depth: d },
        None => SampleMode::Chaos {
            count: points,
            seed: run.seed,
        },
    };
    sample_attractor(&ifs, mode, run.budget)
}

/// Reduce a sampled cloud to the plane: through the configured projection
/// when present, directly when the system is already two-dimensional.
fn planar_cloud(cfg: &IfsConfig, cloud: PointCloud<f64>) -> Result<PointCloud<f64>, Error> {
    match cfg.projection_matrix()? {
        Some(q) => project_points(&cloud, &q),
        None if cfg.dimension == 2 => Ok(cloud),
        None => Err(Error::Shape(
            "rendering/box-counting a higher-dimensional system needs a rank-2 `projection`".into(),
        )),
    }
}

/// Four 4-vectors from inline JSON.
fn parse_translations4(text: &str) -> Result<Vec<Vec<f64>>, Error> {
    let value: Vec<Vec<f64>> = serde_json::from_str(text)
        .map_err(|e| Error::Shape(format!("translations parse error: {e}")))?;
    if value.len() != 4 || value.iter().any(|v| v.len() != 4) {
        return Err(Error::Shape(
            "translations must be four vectors of four entries".into(),
        ));
    }
    Ok(value)
}

/// Accept a 2x2 matrix as inline JSON (nested `[[a,b],[c,d]]` or flat
/// `[a,b,c,d]`) or as a path to a file holding the same.
fn parse_matrix2(text: &str) -> Result<Matrix<f64>, Error> {
    let content = if text.trim_start().starts_with('[') {
        text.to_string()
    } else {
        std::fs::read_to_string(text)?
    };
    let value: serde_json::Value = serde_json::from_str(&content)
        .map_err(|e| Error::Shape(format!("matrix parse error: {e}")))?;
    let flat: Vec<f64> = match &value {
        serde_json::Value::Array(rows) if rows.iter().all(|r| r.is_array()) => rows
            .iter()
            .flat_map(|r| r.as_array().unwrap())
            .map(|x| x.as_f64().ok_or(()))
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Shape("matrix entries must be numbers".into()))?,
        serde_json::Value::Array(xs) => xs
            .iter()
            .map(|x| x.as_f64().ok_or(()))
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Shape("matrix entries must be numbers".into()))?,
        _ => return Err(Error::Shape("expected a JSON array".into())),
    };
    if flat.len() != 4 {
        return Err(Error::Shape(format!(
            "expected a 2x2 matrix (4 entries), got {}",
            flat.len()
        )));
    }
    Matrix::from_row_major(2, 2, flat)
}

fn run_report_cmd(file: &PathBuf, rerun: bool, format: Format) -> Result<i32, Error> {
    let bytes = std::fs::read(file)?;
    let stored: RunReport = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Shape(format!("report parse error: {e}")))?;
    emit(&stored, format, None);
    if !rerun {
        return Ok(0);
    }
    let mut argv = vec!["affdim".to_string()];
    argv.extend(stored.command.iter().cloned());
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::Shape(format!("stored command does not parse: {e}")))?;
    let (fresh, _) = match cli.cmd {
        Cmd::Report { .. } => {
            return Err(Error::Domain(
                "stored command is itself a report invocation".into(),
            ))
        }
        other => execute(&other, stored.command.clone())?,
    };
    let old = serde_json::to_string(&stored.reproducible_json()).expect("serialises");
    let new = serde_json::to_string(&fresh.reproducible_json()).expect("serialises");
    if old == new {
        eprintln!("rerun: reproducible outputs are bitwise identical");
        Ok(0)
    } else {
        eprintln!("rerun: outputs differ from the stored report");
        Ok(1)
    }
}
