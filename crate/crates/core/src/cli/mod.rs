//! Command-line front end: `render`, `train`, `analyze`, `checkgrad` and
//! `selftest`. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backward::{train_step, TrainState, View};
use crate::binning::{bin_and_sort_with, preprocess};
use crate::exec::{bank_conflicts, hybrid_savings, occlusion_curve, pixel_update_trace, tile_sweep_with, LANES};
use crate::gradcheck::{check_gradients, exact_config, GradCheckOptions};
use crate::io::{self, CameraSet, RunConfig};
use crate::model::{Camera, Gaussian3D};
use crate::raster::{render, Hybrid, RenderConfig};
use crate::scenes;

#[derive(Debug, Parser)]
#[command(
    name = "gsraster",
    version,
    about = "Tile-based Gaussian splatting renderer and trainer"
)]
struct Cli {
    /// Seed for every random choice (synthetic scenes, split sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render every camera of a camera set.
    Render(RenderArgs),
    /// Fit a scene to the images referenced by a camera set.
    Train(TrainArgs),
    /// Workload reports.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Compare analytic gradients with central finite differences.
    Checkgrad(CheckgradArgs),
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Debug, Args)]
struct RenderOverrides {
    /// Tile size as W or WxH.
    #[arg(long, value_parser = parse_tile)]
    tile: Option<(usize, usize)>,
    /// Depth chunks per tile list.
    #[arg(long)]
    z_tiles: Option<usize>,
    /// off | fraction:F | occlusion:THETA
    #[arg(long)]
    hybrid: Option<String>,
    /// Early-termination transmittance.
    #[arg(long)]
    termination: Option<f64>,
    /// Background as R,G,B.
    #[arg(long, value_parser = parse_rgb)]
    background: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    /// Output directory; defaults to `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Image format.
    #[arg(long, value_enum, default_value_t = ImageFormat::Ppm)]
    format: ImageFormat,
    #[command(flatten)]
    overrides: RenderOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ImageFormat {
    Ppm,
    Png,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Camera set whose entries carry `image_path` targets.
    #[arg(long)]
    cameras: PathBuf,
    /// Output directory; defaults to `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Base Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// l1 | l2
    #[arg(long)]
    loss: Option<String>,
    /// approx | exact
    #[arg(long)]
    reciprocal: Option<String>,
    /// Density control every N steps (0 disables).
    #[arg(long)]
    densify_every: Option<u64>,
    #[arg(long, value_parser = parse_rgb)]
    background: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SceneClass {
    Random,
    Outdoor,
    Small,
    Indoor,
    Foreground,
}

#[derive(Debug, Args)]
struct SceneSource {
    /// PLY scene; needs --cameras. Without it a synthetic scene is generated.
    #[arg(long, requires = "cameras")]
    scene: Option<PathBuf>,
    #[arg(long)]
    cameras: Option<PathBuf>,
    /// Camera id to use from the camera set (default: first).
    #[arg(long)]
    camera_id: Option<u64>,
    #[arg(long, value_enum, default_value_t = SceneClass::Random)]
    synthetic: SceneClass,
    /// Synthetic Gaussian count.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Synthetic image size (square).
    #[arg(long, default_value_t = 256)]
    size: usize,
}

#[derive(Debug, Subcommand)]
enum Analysis {
    /// Gaussian invocations per tile size.
    TileSweep {
        #[command(flatten)]
        src: SceneSource,
        #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64, 128])]
        sizes: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Occluded-pixel fraction against blending progress.
    Occlusion {
        #[command(flatten)]
        src: SceneSource,
        #[arg(long, default_value_t = 10)]
        chunks: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 16)]
        tile: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Pixel-buffer bank conflicts, skewed against unskewed layout.
    Banks {
        #[command(flatten)]
        src: SceneSource,
        #[arg(long, default_value_t = 16)]
        tile: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Alpha evaluations saved by the pixel-centric tail.
    Hybrid {
        #[command(flatten)]
        src: SceneSource,
        /// off | fraction:F | occlusion:THETA, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["fraction:0.1".to_string(), "fraction:0.25".into(), "fraction:0.5".into(), "occlusion:0.9".into()])]
        modes: Vec<String>,
        #[arg(long, default_value_t = 16)]
        tile: usize,
        #[arg(long, default_value_t = 4)]
        z_tiles: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CheckgradArgs {
    /// Gaussians in the generated scene.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Image size (square).
    #[arg(long, default_value_t = 16)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// l1 | l2
    #[arg(long, default_value = "l2")]
    loss: String,
    /// approx | exact
    #[arg(long, default_value = "exact")]
    reciprocal: String,
    #[arg(long, value_parser = parse_rgb, default_value = "0.2,0.4,0.6")]
    background: [f64; 3],
    /// Print every row, not only failures.
    #[arg(long)]
    verbose: bool,
}

fn parse_tile(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad tile size '{s}'"));
    match parts.as_slice() {
        [a] => num(a).map(|v| (v, v)),
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(format!("bad tile size '{s}'")),
    }
}

fn parse_rgb(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad colour '{s}'"))?;
    <[f64; 3]>::try_from(v).map_err(|_| format!("colour '{s}' needs three components"))
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, S>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send)) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let threads = cli.threads.or(cfg.threads);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    pool.install(|| match cli.cmd {
        Command::Render(a) => cmd_render(a, &cfg, out),
        Command::Train(a) => cmd_train(a, &cfg, seed, out),
        Command::Analyze { what } => cmd_analyze(what, &cfg, seed, out),
        Command::Checkgrad(a) => cmd_checkgrad(a, seed, out),
        Command::Selftest => cmd_selftest(seed, out),
    })
}

fn render_config(cfg: &RunConfig, o: &RenderOverrides) -> Result<RenderConfig> {
    let mut r = cfg.render_config()?;
    if let Some(t) = o.tile {
        r.tile = t;
    }
    if let Some(k) = o.z_tiles {
        r.z_tiles = k;
    }
    if let Some(h) = &o.hybrid {
        r.hybrid = io::parse_hybrid(h)?;
    }
    if let Some(t) = o.termination {
        r.termination = t;
    }
    if let Some(b) = o.background {
        r.background = b;
    }
    r.validate()?;
    Ok(r)
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let Some(dir) = flag.or_else(|| cfg.output.dir.clone()) else {
        bail!("no output directory: pass --out or set output.dir");
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_camera_set(path: &Path) -> Result<CameraSet> {
    io::load_cameras(path).with_context(|| format!("reading {}", path.display()))
}

fn load_ply(path: &Path) -> Result<Vec<Gaussian3D<f32>>> {
    io::load_scene(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_render(a: RenderArgs, cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32> {
    let rcfg = render_config(cfg, &a.overrides)?;
    let scene = load_ply(&a.scene)?;
    let cams = load_camera_set(&a.cameras)?;
    let out_path = out_dir(a.out, cfg)?;
    let ext = match a.format {
        ImageFormat::Ppm => "ppm",
        ImageFormat::Png => "png",
    };
    for entry in &cams.cameras {
        let cam: Camera<f32> = entry.camera()?;
        let r = render(&scene, &cam, &rcfg)?;
        let img = out_path.join(format!("view_{:04}.{ext}", entry.id));
        io::save_image(&r.image, &img).with_context(|| format!("writing {}", img.display()))?;
        fs::write(
            out_path.join(format!("view_{:04}.stats.txt", entry.id)),
            r.stats.to_kv(),
        )?;
        writeln!(
            out,
            "{} visible={} invocations={}",
            img.display(),
            r.stats.visible,
            r.stats.invocations
        )?;
    }
    Ok(0)
}

fn cmd_train(a: TrainArgs, cfg: &RunConfig, seed: u64, out: &mut (dyn Write + Send)) -> Result<i32> {
    let mut tcfg = cfg.train_config()?;
    if let Some(l) = &a.loss {
        tcfg.loss = io::parse_loss(l)?;
    }
    if let Some(r) = &a.reciprocal {
        tcfg.recip = io::parse_recip(r)?;
    }
    if let Some(lr) = a.lr {
        tcfg.adam.lr = lr;
    }
    if let Some(d) = a.densify_every {
        tcfg.densify_every = d;
    }
    if let Some(b) = a.background {
        tcfg.background = b;
    }
    tcfg.densify.seed = seed;
    tcfg.validate()?;
    let iterations = a.iterations.or(cfg.train.iterations).unwrap_or(100);

    let mut scene = load_ply(&a.scene)?;
    let cams = load_camera_set(&a.cameras)?;
    let base = a.cameras.parent().unwrap_or(Path::new("."));
    let mut views = Vec::new();
    for e in &cams.cameras {
        let Some(p) = &e.image_path else {
            bail!("camera {} has no image_path", e.id);
        };
        let path = base.join(p);
        let target = io::load_image(&path).with_context(|| format!("reading {}", path.display()))?;
        views.push(View {
            camera: e.camera::<f32>()?,
            target: target.cast(),
        });
    }
    if views.is_empty() {
        bail!("camera set has no views");
    }

    let dir = out_dir(a.out, cfg)?;
    let mut state = TrainState::new(&scene, tcfg.adam);
    let mut log = String::from("step,loss,gaussians\n");
    let mut timings = crate::backward::StageTimings::default();
    let mut last = None;
    for _ in 0..iterations {
        let st = train_step(&mut scene, &views, &tcfg, &mut state)?;
        log.push_str(&format!("{},{:.9e},{}\n", st.step, st.loss, st.gaussians));
        timings.add(&st.timings);
        if let Some(d) = &st.densify {
            writeln!(
                out,
                "step {}: cloned {} split {} pruned {}",
                st.step, d.cloned, d.split, d.pruned
            )?;
        }
        last = Some(st);
    }
    let final_loss = crate::backward::scene_loss(&scene, &views, &tcfg)?;
    io::save_scene(&scene, dir.join("scene.ply"))?;
    fs::write(dir.join("loss.csv"), log)?;
    let mut stats = last.map(|s| s.to_kv()).unwrap_or_default();
    stats.push_str(&format!("final_loss = {:.9e}\n", final_loss));
    fs::write(dir.join("train_stats.txt"), &stats)?;
    fs::write(dir.join("timings.txt"), timings.to_kv())?;
    writeln!(
        out,
        "{iterations} steps, final loss {final_loss:.6e}, {} gaussians",
        scene.len()
    )?;
    Ok(0)
}

fn source_scene(src: &SceneSource, seed: u64) -> Result<(Vec<Gaussian3D<f32>>, Camera<f32>)> {
    if let Some(p) = &src.scene {
        let scene = load_ply(p)?;
        let cams = load_camera_set(src.cameras.as_deref().expect("clap enforces --cameras"))?;
        let entry = match src.camera_id {
            Some(id) => cams.cameras.iter().find(|c| c.id == id),
            None => cams.cameras.first(),
        };
        let Some(entry) = entry else { bail!("camera not found") };
        return Ok((scene, entry.camera()?));
    }
    let s = match src.synthetic {
        SceneClass::Random => scenes::random_scene(src.n, src.size, src.size, seed),
        SceneClass::Outdoor => scenes::outdoor_scene(src.n, src.size, seed),
        SceneClass::Small => scenes::small_splat_scene(src.n, src.size, seed),
        SceneClass::Indoor => scenes::indoor_scene(src.n, src.size, seed),
        SceneClass::Foreground => scenes::opaque_foreground_scene(src.n, src.size, seed),
    }
    .cast::<f32>();
    Ok((s.gaussians, s.camera))
}

fn write_csv(path: &Option<PathBuf>, text: String) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_analyze(what: Analysis, cfg: &RunConfig, seed: u64, out: &mut (dyn Write + Send)) -> Result<i32> {
    let rbase = cfg.render_config()?;
    match what {
        Analysis::TileSweep { src, sizes, csv } => {
            if sizes.is_empty() || sizes.contains(&0) {
                bail!("--sizes must list positive tile sizes");
            }
            let (scene, cam) = source_scene(&src, seed)?;
            let p = preprocess(&scene, &cam)?;
            let rows = tile_sweep_with(&p.splats, &sizes, (cam.width, cam.height), rbase.footprint);
            writeln!(out, "{:>6} {:>12} {:>10}", "tile", "invocations", "reduction")?;
            let mut c = String::from("tile,invocations,reduction_percent\n");
            for r in &rows {
                writeln!(out, "{:>6} {:>12} {:>9.2}%", r.tile, r.invocations, r.reduction)?;
                c.push_str(&format!("{},{},{:.4}\n", r.tile, r.invocations, r.reduction));
            }
            write_csv(&csv, c)?;
        }
        Analysis::Occlusion {
            src,
            chunks,
            eps,
            tile,
            csv,
        } => {
            let (scene, cam) = source_scene(&src, seed)?;
            let p = preprocess(&scene, &cam)?;
            let b = bin_and_sort_with(&p.splats, (tile, tile), (cam.width, cam.height), rbase.footprint);
            let curve = occlusion_curve(&p.splats, &b, chunks, eps);
            writeln!(out, "{:>10} {:>10}", "progress", "occluded")?;
            let mut c = String::from("progress,occluded\n");
            for (x, y) in &curve {
                writeln!(out, "{:>10.3} {:>10.4}", x, y)?;
                c.push_str(&format!("{x:.6},{y:.6}\n"));
            }
            write_csv(&csv, c)?;
        }
        Analysis::Banks { src, tile, csv } => {
            let (scene, cam) = source_scene(&src, seed)?;
            let p = preprocess(&scene, &cam)?;
            let b = bin_and_sort_with(&p.splats, (tile, tile), (cam.width, cam.height), rbase.footprint);
            let steps = pixel_update_trace(&p.splats, &b, LANES);
            let (mut s, mut u, mut writes) = (0, 0, 0);
            for g in &steps {
                let r = bank_conflicts(g, LANES);
                s += r.skewed;
                u += r.unskewed;
                writes += g.len();
            }
            writeln!(out, "{:>10} {:>10} {:>10}", "layout", "steps", "conflicts")?;
            writeln!(out, "{:>10} {:>10} {:>10}", "skewed", steps.len(), s)?;
            writeln!(out, "{:>10} {:>10} {:>10}", "unskewed", steps.len(), u)?;
            writeln!(out, "pixel writes: {writes}")?;
            write_csv(
                &csv,
                format!(
                    "layout,steps,conflicts\nskewed,{},{s}\nunskewed,{},{u}\n",
                    steps.len(),
                    steps.len()
                ),
            )?;
        }
        Analysis::Hybrid {
            src,
            modes,
            tile,
            z_tiles,
            csv,
        } => {
            let (scene, cam) = source_scene(&src, seed)?;
            let base = RenderConfig {
                tile: (tile, tile),
                z_tiles,
                hybrid: Hybrid::Off,
                ..rbase
            };
            let pure = render(&scene, &cam, &base)?;
            writeln!(
                out,
                "{:>16} {:>12} {:>12} {:>8} {:>10}",
                "mode", "evaluations", "saved", "percent", "max_diff"
            )?;
            writeln!(
                out,
                "{:>16} {:>12} {:>12} {:>8} {:>10}",
                "off", pure.stats.evals.performed, 0, "0.00%", "0"
            )?;
            let mut c = String::from("mode,evaluations,saved,percent,max_diff\n");
            c.push_str(&format!("off,{},0,0,0\n", pure.stats.evals.performed));
            for m in &modes {
                let h = render(
                    &scene,
                    &cam,
                    &RenderConfig {
                        hybrid: io::parse_hybrid(m)?,
                        ..base.clone()
                    },
                )?;
                let sv = hybrid_savings(&pure.stats, &h.stats)?;
                let diff = pure.image.max_abs_diff(&h.image);
                writeln!(
                    out,
                    "{:>16} {:>12} {:>12} {:>7.2}% {:>10.2e}",
                    m, sv.hybrid_evals, sv.saved, sv.percent, diff
                )?;
                c.push_str(&format!(
                    "{m},{},{},{:.4},{diff:e}\n",
                    sv.hybrid_evals, sv.saved, sv.percent
                ));
            }
            write_csv(&csv, c)?;
        }
    }
    Ok(0)
}

fn cmd_checkgrad(a: CheckgradArgs, seed: u64, out: &mut (dyn Write + Send)) -> Result<i32> {
    if a.n == 0 || a.size == 0 {
        bail!("--n and --size must be positive");
    }
    let sc = scenes::gradcheck_scene(a.n, a.size, a.degree, seed);
    let other = scenes::gradcheck_scene(a.n, a.size, a.degree, seed.wrapping_add(1));
    let target = render(&other.gaussians, &other.camera, &RenderConfig::default())?.image;
    let base = crate::backward::TrainConfig {
        loss: io::parse_loss(&a.loss)?,
        background: a.background,
        ..Default::default()
    };
    let mut cfg = exact_config(&base);
    cfg.recip = io::parse_recip(&a.reciprocal)?;
    let opts = GradCheckOptions::default();
    let views = [View {
        camera: sc.camera.clone(),
        target,
    }];
    let rep = check_gradients(&sc.gaussians, &views, &cfg, &opts)?;
    if a.verbose {
        write!(out, "{}", rep.table())?;
    } else {
        let failed = crate::gradcheck::GradCheckReport {
            loss: rep.loss,
            rows: rep.failures().cloned().collect(),
        };
        if !failed.rows.is_empty() {
            write!(out, "{}", failed.table())?;
        }
    }
    let fails = rep.failures().count();
    writeln!(
        out,
        "{} parameters, {} failed, max rel-err {:.3e} over gradients above {:e} (tolerance {:e} rel / {:e} abs)",
        rep.rows.len(),
        fails,
        rep.max_rel_err(opts.abs_tol),
        opts.abs_tol,
        opts.rel_tol,
        opts.abs_tol
    )?;
    Ok(if fails == 0 { 0 } else { 1 })
}

fn cmd_selftest(seed: u64, out: &mut (dyn Write + Send)) -> Result<i32> {
    let checks = crate::selftest::run(seed);
    for c in &checks {
        writeln!(
            out,
            "{} {}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(": {}", c.detail)
            }
        )?;
    }
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}
