use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use navfield::batch::run_batch;
use navfield::manifest::RunManifest;
use navfield::output;
use navfield::scene_file::{parse_points, IntegratorName, PotentialName, SceneFile, SimSettings};
use navfield_core::analysis::{epsilon_bounds, find_critical_points, SearchConfig, ShellConfig};
use navfield_core::field::value_gradient;
use navfield_core::transform::TransformConfig;
use navfield_core::{transform, validate, ExpansionMode, TransformError, Vec3};
use serde_json::Value;

const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "navfield", version, about = "Navigation-function analysis and simulation for 3-D scenes")]
struct Cli {
    /// Worker threads for batch runs (0 = one per core).
    #[arg(long, env = "NAVFIELD_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scene against the workspace rules.
    Validate(ValidateArgs),
    /// Integrate trajectories from every start of a scene.
    Simulate(SimulateArgs),
    /// Sample the potential on a grid or at listed points.
    Field(FieldArgs),
    /// Search for critical points and report the epsilon bounds.
    Critical(CriticalArgs),
    /// Expand obstacles for a spherical robot and write the new scene.
    Transform(TransformArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PotentialArg {
    Fhat,
    Phi,
    Psi,
}

impl From<PotentialArg> for PotentialName {
    fn from(p: PotentialArg) -> Self {
        match p {
            PotentialArg::Fhat => PotentialName::Fhat,
            PotentialArg::Phi => PotentialName::Phi,
            PotentialArg::Psi => PotentialName::Psi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Minimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(Args)]
struct FieldOverrides {
    /// Tuning parameter k.
    #[arg(long)]
    k: Option<u32>,
    /// Potential to use.
    #[arg(long, value_enum)]
    potential: Option<PotentialArg>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    field: FieldOverrides,
    /// Damping coefficient.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    /// File of `x y z` rows replacing the scene's starts.
    #[arg(long)]
    starts: Option<PathBuf>,
    /// Seed for sampled starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled starts.
    #[arg(long)]
    count: Option<usize>,
    /// Record every integration step.
    #[arg(long)]
    full_resolution: bool,
    /// Run even if the scene fails validation.
    #[arg(long)]
    skip_validation: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    field: FieldOverrides,
    /// File of `x y z` rows to evaluate.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    points: Option<PathBuf>,
    /// Grid as `x0:x1:nx,y0:y1:ny,z0:z1:nz`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    field: FieldOverrides,
    /// Number of search starts.
    #[arg(long, default_value_t = 500)]
    n_starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the JSON report; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Robot radius.
    #[arg(long)]
    radius: f64,
    #[arg(long, value_enum, default_value = "minimal")]
    mode: ModeArg,
    /// Seed for the failure-probability estimates.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Path of the transformed scene.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(String),
    Io(String),
}

type CmdResult = Result<u8, Failure>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn load_scene(path: &Path) -> Result<(SceneFile, Vec<u8>), Failure> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Input(format!("{}: not valid UTF-8", path.display())))?;
    let scene = SceneFile::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((scene, bytes))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn sidecar_manifest(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn apply_field(scene: &mut SceneFile, o: &FieldOverrides, m: &mut RunManifest) {
    if let Some(k) = o.k {
        scene.k = k;
        m.overrides.insert("k".into(), Value::from(k));
    }
    if let Some(p) = o.potential {
        scene.potential = p.into();
        m.overrides.insert("potential".into(), serde_json::to_value(scene.potential).unwrap());
    }
    m.effective.insert("k".into(), Value::from(scene.k));
    m.effective
        .insert("potential".into(), serde_json::to_value(scene.potential).unwrap());
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let (scene, _) = load_scene(&a.scene)?;
    let resolved = scene.resolve().map_err(|e| Failure::Input(e.to_string()))?;
    let report = validate(&resolved.workspace, resolved.spec.target);
    for e in &report.errors {
        println!("error: {e}");
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("{}", if report.is_valid() { "valid" } else { "invalid" });
    if let Some(out) = &a.out {
        write_file(out, &(serde_json::to_string_pretty(&output::validation_json(&report)).unwrap() + "\n"))?;
    }
    Ok(if report.is_valid() { 0 } else { EXIT_NEGATIVE })
}

fn cmd_simulate(a: &SimulateArgs, threads: Option<usize>) -> CmdResult {
    let (mut scene, bytes) = load_scene(&a.scene)?;
    let mut m = RunManifest::new("simulate", &a.scene, &bytes);
    apply_field(&mut scene, &a.field, &mut m);
    if let Some(c) = a.c {
        scene.damping_c = c;
        m.overrides.insert("c".into(), Value::from(c));
    }
    let mut sim = scene.sim.clone().unwrap_or_default();
    let mut set = |name: &str, v: Value| {
        m.overrides.insert(name.into(), v);
    };
    if let Some(dt) = a.dt {
        sim.dt = Some(dt);
        set("dt", dt.into());
    }
    if let Some(t) = a.t_max {
        sim.t_max = Some(t);
        set("t_max", t.into());
    }
    if let Some(i) = a.integrator {
        sim.integrator = Some(match i {
            IntegratorArg::Euler => IntegratorName::Euler,
            IntegratorArg::Rk4 => IntegratorName::Rk4,
        });
        set("integrator", serde_json::to_value(sim.integrator).unwrap());
    }
    if a.full_resolution {
        sim.sample_stride = Some(1);
        set("full_resolution", true.into());
    }
    if sim != SimSettings::default() {
        scene.sim = Some(sim);
    }
    if let Some(path) = &a.starts {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let pts = parse_points(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        scene.starts = pts.iter().map(|p| p.to_array()).collect();
        scene.start_sampling = None;
        m.overrides.insert("starts".into(), Value::from(path.display().to_string()));
    }
    if let Some(s) = scene.start_sampling.as_mut() {
        if let Some(seed) = a.seed {
            s.seed = seed;
            m.overrides.insert("seed".into(), Value::from(seed));
        }
        if let Some(n) = a.count {
            s.count = n;
            m.overrides.insert("count".into(), Value::from(n));
        }
        m.seed = Some(s.seed);
    }

    let resolved = scene.resolve().map_err(|e| Failure::Input(e.to_string()))?;
    if !a.skip_validation {
        let report = validate(&resolved.workspace, resolved.spec.target);
        if !report.is_valid() {
            return Err(Failure::Input(format!(
                "scene fails validation (use --skip-validation to run anyway): {}",
                report.errors.join("; ")
            )));
        }
    }
    if resolved.starts.is_empty() {
        return Err(Failure::Input("scene has no start positions".into()));
    }
    let cfg = resolved.sim;
    for (key, v) in [
        ("damping_c", Value::from(cfg.damping_c)),
        ("dt", cfg.dt.into()),
        ("t_max", cfg.t_max.into()),
        ("conv_pos_tol", cfg.conv_pos_tol.into()),
        ("conv_speed_tol", cfg.conv_speed_tol.into()),
        ("grad_tol", cfg.grad_tol.into()),
        ("stall_steps", cfg.stall_steps.into()),
        ("sample_stride", cfg.sample_stride.into()),
        ("starts", resolved.starts.len().into()),
    ] {
        m.effective.insert(key.into(), v);
    }

    let (results, summary) = run_batch(&resolved.spec, &resolved.workspace, &cfg, &resolved.starts, threads)
        .map_err(|e| Failure::Io(e.to_string()))?;

    let traj_dir = a.out.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(io_err(&traj_dir))?;
    for (i, r) in results.iter().enumerate() {
        if let Ok(t) = r {
            let path = traj_dir.join(format!("traj_{i:04}.tsv"));
            let f = fs::File::create(&path).map_err(io_err(&path))?;
            let mut w = BufWriter::new(f);
            output::write_trajectory(&mut w, t)
                .and_then(|_| w.flush())
                .map_err(io_err(&path))?;
        }
    }
    let summary_json = output::summary_json(&results, &summary);
    write_file(
        &a.out.join("summary.json"),
        &(serde_json::to_string_pretty(&summary_json).unwrap() + "\n"),
    )?;
    write_file(&a.out.join("manifest.json"), &m.to_json())?;

    println!(
        "{} starts: {} converged, {} local minimum, {} timeout, {} collision, {} invalid; max speed {:.4}, max accel {:.4}",
        summary.total,
        summary.converged,
        summary.local_minimum,
        summary.timeout,
        summary.collision,
        summary.invalid_start,
        summary.max_speed,
        summary.max_accel
    );
    Ok(if summary.all_converged() { 0 } else { EXIT_NEGATIVE })
}

fn parse_axis(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("axis `{s}` must be start:end:count"));
    };
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad count `{n}`"))?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(format!("axis `{s}` is empty or not finite"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn parse_grid(s: &str) -> Result<Vec<Vec3>, String> {
    let axes: Vec<Vec<f64>> = s.split(',').map(parse_axis).collect::<Result<_, _>>()?;
    let [xs, ys, zs] = &axes[..] else {
        return Err("grid needs three axes separated by commas".into());
    };
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in zs {
        for &y in ys {
            for &x in xs {
                out.push(Vec3::new(x, y, z));
            }
        }
    }
    Ok(out)
}

fn cmd_field(a: &FieldArgs) -> CmdResult {
    let (mut scene, bytes) = load_scene(&a.scene)?;
    let mut m = RunManifest::new("field", &a.scene, &bytes);
    apply_field(&mut scene, &a.field, &mut m);
    let points = match (&a.points, &a.grid) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            m.overrides.insert("points".into(), Value::from(path.display().to_string()));
            parse_points(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        (None, Some(g)) => {
            m.overrides.insert("grid".into(), Value::from(g.as_str()));
            parse_grid(g).map_err(Failure::Input)?
        }
        (None, None) => return Err(Failure::Input("give --points or --grid".into())),
    };
    let resolved = scene.resolve().map_err(|e| Failure::Input(e.to_string()))?;
    let mut text = Vec::new();
    writeln!(text, "# {}", output::FIELD_COLUMNS).unwrap();
    for &x in &points {
        output::write_field_row(&mut text, x, value_gradient(&resolved.spec, &resolved.workspace, x)).unwrap();
    }
    match &a.out {
        Some(out) => {
            write_file(out, std::str::from_utf8(&text).unwrap())?;
            write_file(&sidecar_manifest(out), &m.to_json())?;
        }
        None => io::stdout()
            .write_all(&text)
            .map_err(|e| Failure::Io(format!("stdout: {e}")))?,
    }
    Ok(0)
}

fn cmd_critical(a: &CriticalArgs) -> CmdResult {
    let (mut scene, bytes) = load_scene(&a.scene)?;
    let mut m = RunManifest::new("critical", &a.scene, &bytes);
    apply_field(&mut scene, &a.field, &mut m);
    m.seed = Some(a.seed);
    m.effective.insert("n_starts".into(), Value::from(a.n_starts));
    let resolved = scene.resolve().map_err(|e| Failure::Input(e.to_string()))?;
    let (ws, spec) = (&resolved.workspace, &resolved.spec);
    if !ws.is_free(spec.target) {
        return Err(Failure::Input("target is not in free space".into()));
    }
    let cfg = SearchConfig {
        n_starts: a.n_starts,
        seed: a.seed,
        ..SearchConfig::default()
    };
    let report = find_critical_points(spec, ws, &cfg);
    let overlaps = validate(ws, spec.target).overlapping_pairs();
    let shell = ShellConfig {
        seed: a.seed,
        ..ShellConfig::default()
    };
    let eps = epsilon_bounds(spec, ws, &overlaps, &shell);
    if let Err(e) = &eps {
        eprintln!("epsilon bounds unavailable: {e}");
    }
    let json = output::critical_json(&report, eps.as_ref().ok());
    let text = serde_json::to_string_pretty(&json).unwrap() + "\n";
    match &a.out {
        Some(out) => {
            write_file(out, &text)?;
            write_file(&sidecar_manifest(out), &m.to_json())?;
        }
        None => print!("{text}"),
    }
    use navfield_core::CriticalClass::*;
    eprintln!(
        "{} critical points: {} minima ({} spurious), {} saddles, {} maxima, {} degenerate",
        report.points.len(),
        report.count(Minimum),
        report.spurious_minima(),
        report.count(Saddle),
        report.count(Maximum),
        report.count(Degenerate)
    );
    Ok(if report.spurious_minima() == 0 { 0 } else { EXIT_NEGATIVE })
}

fn cmd_transform(a: &TransformArgs) -> CmdResult {
    let (scene, bytes) = load_scene(&a.scene)?;
    let mut m = RunManifest::new("transform", &a.scene, &bytes);
    let mode = match a.mode {
        ModeArg::Full => ExpansionMode::FullEnclosure,
        ModeArg::Minimal => ExpansionMode::MinimalEvolute,
    };
    m.seed = Some(a.seed);
    m.overrides.insert("radius".into(), Value::from(a.radius));
    m.overrides.insert("mode".into(), Value::from(mode.name()));
    let resolved = scene.resolve().map_err(|e| Failure::Input(e.to_string()))?;
    let cfg = TransformConfig {
        seed: a.seed,
        ..TransformConfig::default()
    };
    let result = match transform(&resolved.workspace, resolved.spec.target, a.radius, mode, &cfg) {
        Ok(r) => r,
        Err(e @ (TransformError::CloseCylinders(..) | TransformError::Cluster(..))) => {
            println!("error: {e}");
            return Ok(EXIT_NEGATIVE);
        }
        Err(e) => return Err(Failure::Input(e.to_string())),
    };
    let mut out_scene = scene.clone();
    out_scene.set_workspace(&result.workspace);
    if let Some(s) = out_scene.start_sampling.as_mut() {
        // keep sampled starts at the same distance from the center
        s.radius_fraction *= scene.outer_radius / out_scene.outer_radius;
    }
    write_file(&a.out, &out_scene.to_json())?;
    m.effective.insert("p_fail_surface".into(), Value::from(result.p_fail_surface));
    m.effective.insert("p_fail_volume".into(), Value::from(result.p_fail_volume));
    m.effective.insert("joint_radii".into(), Value::from(result.joint_radii.clone()));
    write_file(&sidecar_manifest(&a.out), &m.to_json())?;

    for n in &result.notes {
        println!("note: {n}");
    }
    for w in &result.warnings {
        println!("error: {w}");
    }
    let starts = resolved.starts.clone();
    for (s, j) in result.joint_shell_starts(&starts) {
        println!(
            "warning: start {s} lies in the extra growth of joint {j}; route it through an intermediate target"
        );
    }
    println!(
        "failure probability bounds: surface {:.6}, volume {:.6}",
        result.p_fail_surface, result.p_fail_volume
    );
    Ok(if result.validation.is_valid() { 0 } else { EXIT_NEGATIVE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Simulate(a) => cmd_simulate(a, cli.threads),
        Command::Field(a) => cmd_field(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Transform(a) => cmd_transform(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("navfield: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("navfield: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
