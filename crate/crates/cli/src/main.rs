use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fempoint::bench::{bench_csv, bench_table, cmd_bench, BenchConfig};
use fempoint::field::ValueShape;
use fempoint::particles::{psys_run, random_seeds, Feature, FeatureKind, PsysConfig, PsysResult};
use fempoint::synth::{make_mesh, Builtin, Shape, SynthSpec};
use fempoint::trace::{rk2_trace, TraceConfig, TraceStatus};
use fempoint::{io, FemField, Mesh, Scheme};

/// Point location, streamlines and particle sampling on curved tetrahedral
/// meshes. Set FEMPOINT_LOG (error, warn, info, debug, trace) for logging.
#[derive(Parser)]
#[command(name = "fempoint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic curved mesh and write it as JSON.
    SynthMesh(SynthArgs),
    /// Interpolate a builtin function onto a mesh and write the field as JSON.
    Interp(InterpArgs),
    /// Trace an RK2 streamline through a vector field.
    Streamline(StreamArgs),
    /// Sample an isosurface of a scalar field with particles.
    ParticlesIso(IsoArgs),
    /// Sample ridge surfaces of a scalar field with particles.
    ParticlesRidge(RidgeArgs),
    /// Time streamlines under the naive and error-checked guided schemes.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Box,
    CylinderShell,
    SolidCylinder,
    SphereShell,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    shape: ShapeArg,
    /// Polynomial degree of the geometric map (1-3).
    #[arg(long, default_value_t = 3)]
    geom_degree: usize,
    /// Comma-separated divisions: box nx,ny,nz; cylinder-shell nr,ntheta,nz;
    /// solid-cylinder core,annulus,nz; sphere-shell half-face,radial.
    #[arg(long, value_delimiter = ',', required = true)]
    divisions: Vec<usize>,
    /// Box lower corner.
    #[arg(long, value_parser = parse_point, default_value = "0,0,0", allow_negative_numbers = true)]
    min: [f64; 3],
    /// Box upper corner.
    #[arg(long, value_parser = parse_point, default_value = "1,1,1", allow_negative_numbers = true)]
    max: [f64; 3],
    /// Inner radius (shells).
    #[arg(long, default_value_t = 1.0)]
    r_in: f64,
    /// Outer radius (shells) or radius (solid cylinder).
    #[arg(long, default_value_t = 2.0)]
    r_out: f64,
    /// Cylinder height, centred on z = 0.
    #[arg(long, default_value_t = 3.0)]
    height: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InterpArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// helix, superquadric or ridgefn.
    #[arg(long)]
    function: String,
    /// Field polynomial degree (1-6).
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Naive,
    Guided,
    Checked,
}

#[derive(Args)]
struct SchemeArgs {
    /// Position update scheme.
    #[arg(long, value_enum, default_value_t = SchemeArg::Checked)]
    scheme: SchemeArg,
    /// World-space error bound of the checked scheme.
    #[arg(long, default_value_t = 1e-5)]
    err_max: f64,
}

impl SchemeArgs {
    fn scheme(&self) -> Result<Scheme> {
        Ok(match self.scheme {
            SchemeArg::Naive => Scheme::Naive,
            SchemeArg::Guided => Scheme::Guided,
            SchemeArg::Checked => {
                if !(self.err_max >= 0.0) {
                    bail!("--err-max must be non-negative");
                }
                Scheme::GuidedChecked(self.err_max)
            }
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Vtk,
}

#[derive(Args)]
struct OutArgs {
    /// Output path; `.vtk` selects VTK, anything else CSV unless --format is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutArgs {
    fn format(&self) -> Format {
        self.format.unwrap_or(match self.out.extension().and_then(|e| e.to_str()) {
            Some("vtk") => Format::Vtk,
            _ => Format::Csv,
        })
    }
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Vector field JSON.
    #[arg(long)]
    field: PathBuf,
    /// Seed point x,y,z.
    #[arg(long, value_parser = parse_point, allow_negative_numbers = true)]
    seed: [f64; 3],
    /// Step size.
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    /// Maximum number of steps.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ParticleArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Scalar field JSON.
    #[arg(long)]
    field: PathBuf,
    /// Interaction radius.
    #[arg(long, default_value_t = 0.5)]
    rad: f64,
    /// Convergence threshold on motion, relative to the radius.
    #[arg(long, default_value_t = 0.005)]
    eps: f64,
    /// Number of random initial particles.
    #[arg(long, default_value_t = 300)]
    seeds: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Maximum population.
    #[arg(long, default_value_t = 20_000)]
    max_pop: usize,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed_rng: u64,
    /// Worker threads for particle updates.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct IsoArgs {
    /// Isovalue.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    iso: f64,
    #[command(flatten)]
    common: ParticleArgs,
}

#[derive(Args)]
struct RidgeArgs {
    /// Minimum ridge strength −λ₁.
    #[arg(long, default_value_t = 24.0)]
    strength: f64,
    /// Minimum eigenvalue gap λ₂ − λ₁ for a trusted ridge direction.
    #[arg(long, default_value_t = 0.1)]
    bias: f64,
    #[command(flatten)]
    common: ParticleArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Vector field JSON.
    #[arg(long)]
    field: PathBuf,
    /// Seed point x,y,z; repeat for several seeds.
    #[arg(long = "seed", value_parser = parse_point, required = true, allow_negative_numbers = true)]
    seeds: Vec<[f64; 3]>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.02, 0.002])]
    h_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-5, 1e-6])]
    err_list: Vec<f64>,
    /// Integration time per trace.
    #[arg(long, default_value_t = 3.0 * std::f64::consts::TAU)]
    duration: f64,
    /// Best-of-N repetitions.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

/// `x,y,z`
fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected x,y,z, got {} values", v.len()))
}

fn load_mesh(path: &Path) -> Result<Arc<Mesh>> {
    let m = io::read_mesh_json(path).with_context(|| format!("loading mesh {}", path.display()))?;
    log::info!("mesh {}: {} cells, geometry degree {}", path.display(), m.num_cells(), m.geom_degree());
    Ok(Arc::new(m))
}

fn load_field(mesh: Arc<Mesh>, path: &Path, want: ValueShape) -> Result<FemField> {
    let f = io::read_field_json(path, mesh).with_context(|| format!("loading field {}", path.display()))?;
    if f.shape() != want {
        bail!("{} holds a {} field; this command needs a {want} field", path.display(), f.shape());
    }
    Ok(f)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let d = &a.divisions;
    let want = if matches!(a.shape, ShapeArg::SphereShell) { 2 } else { 3 };
    if d.len() != want {
        bail!("--divisions needs {want} values for this shape, got {}", d.len());
    }
    let shape = match a.shape {
        ShapeArg::Box => Shape::Box {
            min: a.min,
            max: a.max,
            divisions: [d[0], d[1], d[2]],
        },
        ShapeArg::CylinderShell => Shape::CylinderShell {
            r_in: a.r_in,
            r_out: a.r_out,
            height: a.height,
            divisions: [d[0], d[1], d[2]],
        },
        ShapeArg::SolidCylinder => Shape::SolidCylinder {
            r: a.r_out,
            height: a.height,
            divisions: [d[0], d[1], d[2]],
        },
        ShapeArg::SphereShell => Shape::SphereShell {
            r_in: a.r_in,
            r_out: a.r_out,
            divisions: [d[0], d[1]],
        },
    };
    let mesh: Mesh = make_mesh(&SynthSpec {
        shape,
        geom_degree: a.geom_degree,
    })?;
    io::write_mesh_json(&mesh, &a.out)?;
    println!("wrote {} cells to {}", mesh.num_cells(), a.out.display());
    Ok(())
}

fn interp(a: &InterpArgs) -> Result<()> {
    let fun: Builtin = a.function.parse()?;
    let mesh = load_mesh(&a.mesh)?;
    let shape = if fun.components() == 3 {
        ValueShape::Vector3
    } else {
        ValueShape::Scalar
    };
    let field = FemField::interpolate(mesh, a.degree, shape, |x, o| fun.eval_into(x, o))?;
    io::write_field_json(&field, &a.out)?;
    println!("wrote degree-{} {} field to {}", a.degree, shape, a.out.display());
    Ok(())
}

fn streamline(a: &StreamArgs) -> Result<()> {
    if !(a.h > 0.0) || a.steps == 0 {
        bail!("--h must be positive and --steps at least 1");
    }
    let mesh = load_mesh(&a.mesh)?;
    let field = load_field(mesh, &a.field, ValueShape::Vector3)?;
    let cfg = TraceConfig::new(a.h, a.steps, a.scheme.scheme()?);
    let seed = a.seed;
    let r = rk2_trace(&field, seed, &cfg)?;
    match a.out.format() {
        Format::Csv => io::write_trace_csv(&r.points, &a.out.out)?,
        Format::Vtk => io::write_trace_vtk(&r.points, &a.out.out)?,
    }
    match r.status {
        TraceStatus::Completed => println!("{} steps inside the mesh", r.steps_inside),
        TraceStatus::LeftDomain(0) if r.points.is_empty() => bail!("seed {seed:?} is outside the mesh"),
        TraceStatus::LeftDomain(k) => println!("left the mesh at step {k} after {} steps", r.steps_inside),
    }
    Ok(())
}

fn particles(c: &ParticleArgs, kind: FeatureKind<f64>) -> Result<()> {
    let mesh = load_mesh(&c.mesh)?;
    let field = load_field(mesh.clone(), &c.field, ValueShape::Scalar)?;
    let feature = Feature::new(kind, &field)?;
    let cfg = PsysConfig {
        radius: c.rad,
        eps: c.eps,
        max_iters: c.max_iters,
        max_population: c.max_pop,
        scheme: c.scheme.scheme()?,
        rng_seed: c.seed_rng,
        threads: c.threads.max(1),
        ..PsysConfig::default()
    };
    let seeds = random_seeds(&mesh, c.seeds, c.seed_rng);
    let PsysResult { particles, stats } = psys_run(feature, &cfg, &seeds)?;
    match c.out.format() {
        Format::Csv => io::write_particles_csv(&particles, &c.out.out)?,
        Format::Vtk => io::write_particles_vtk(&particles, &c.out.out)?,
    }
    println!(
        "{} particles after {} iterations ({}converged; {} births, {} deaths)",
        particles.len(),
        stats.iterations,
        if stats.converged { "" } else { "not " },
        stats.births,
        stats.deaths
    );
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?;
    let field = load_field(mesh, &a.field, ValueShape::Vector3)?;
    if a.h_list.iter().any(|h| !(*h > 0.0)) {
        bail!("step sizes must be positive");
    }
    let cfg = BenchConfig {
        h_list: a.h_list.clone(),
        err_list: a.err_list.clone(),
        duration: a.duration,
        repetitions: a.reps,
    };
    let rows = cmd_bench(&field, &a.seeds, &cfg)?;
    std::fs::write(&a.out, bench_csv(&rows)).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", bench_table(&rows));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::SynthMesh(a) => synth(a),
        Command::Interp(a) => interp(a),
        Command::Streamline(a) => streamline(a),
        Command::ParticlesIso(a) => particles(&a.common, FeatureKind::Isosurface { iso: a.iso }),
        Command::ParticlesRidge(a) => particles(
            &a.common,
            FeatureKind::RidgeSurface {
                strength_threshold: a.strength,
                bias: a.bias,
            },
        ),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEMPOINT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
