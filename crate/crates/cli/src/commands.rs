//! One function per subcommand.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use spoofsim_core::detector::DetectorParams;
use spoofsim_core::eval::{
    count_injected, count_removed, injection_success, max_iou, removal_percentage_per_azimuth,
    removal_success, success_rate, EvalReport,
};
use spoofsim_core::geometry::assign_azimuth_bins;
use spoofsim_core::injection::{apply_injection_detailed, merge_into_scene};
use spoofsim_core::io::{
    read_cloud, read_detections, write_cloud, write_detections, DetectionRecord,
};
use spoofsim_core::profiles::{LidarProfile, ProfileRegistry};
use spoofsim_core::removal::apply_removal;
use spoofsim_core::rng::{derive_seed, label};
use spoofsim_core::scenario::{distance_sweep, ObjectModel, SyntheticScan, KITTI_GROUND_Z};
use spoofsim_core::PointCloud;

use crate::config::{Attack, AttackConfig, InjectionConfig, RemovalConfig};
use crate::sweep::{write_rows, Axis, DetectorChoice, Sweep, SweepOutcome};
use crate::{
    AttackArgs, Cli, Command, CountArgs, EvalArgs, Io, Mode, Preset, ScenarioArgs, SceneArgs,
    SweepArgs, SynthArgs,
};

/// Column order of the scenario index written next to the clouds.
pub const SCENARIO_HEADER: [&str; 3] = ["stem", "distance_m", "object_points"];
/// Column order of the per-scenario evaluation CSV.
pub const EVAL_HEADER: [&str; 3] = ["stem", "max_iou", "success"];
/// Column order of the per-azimuth removal CSV.
pub const COUNT_HEADER: [&str; 4] = [
    "bin",
    "azimuth_start_deg",
    "azimuth_end_deg",
    "removed_fraction",
];

pub const DEFAULT_PROFILE: &str = "VLP-16";

pub fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Result<()> {
    let registry = match &cli.profiles {
        Some(path) => ProfileRegistry::builtin()
            .with_overrides_file(path)
            .with_context(|| format!("cannot load profiles from {}", path.display()))?,
        None => ProfileRegistry::builtin(),
    };
    match &cli.command {
        Command::Profiles { name, toml } => profiles(&registry, name.as_deref(), *toml, io),
        Command::Attack(a) => attack(&registry, a, io),
        Command::Scenario(a) => scenario(a, io),
        Command::Eval(a) => eval(a, io),
        Command::Sweep(a) => sweep(&registry, a, io),
        Command::Count(a) => count(a, io),
        Command::Synth(a) => synth(a, io),
    }
}

pub fn profile_row(p: &LidarProfile) -> String {
    let channels = p.channels.map_or("-".to_string(), |c| c.to_string());
    let firing = match &p.firing_interval {
        Some(d) => serde_json::to_string(d).expect("serializable"),
        None => "-".to_string(),
    };
    let generation = match p.generation {
        spoofsim_core::profiles::Generation::First => "first",
        spoofsim_core::profiles::Generation::New => "new",
    };
    format!(
        "{:<8} {:<5} mot={} max_range={} vfov={} hfov={} channels={} rand={} fingerprint={} az_res={} simultaneous={} firing_interval_us={}",
        p.name,
        generation,
        p.mot,
        p.max_range,
        p.vertical_fov,
        p.horizontal_fov,
        channels,
        p.rand_model,
        p.fingerprint,
        p.azimuth_resolution,
        p.simultaneous_firing,
        firing
    )
}

fn profiles(
    registry: &ProfileRegistry,
    name: Option<&str>,
    toml: bool,
    io: &mut Io<'_>,
) -> Result<()> {
    if toml {
        let registry = match name {
            Some(n) => ProfileRegistry::from_profiles(vec![registry.lookup(n)?.clone()])?,
            None => registry.clone(),
        };
        write!(io.out, "{}", registry.to_toml())?;
        return Ok(());
    }
    match name {
        Some(n) => writeln!(io.out, "{}", profile_row(registry.lookup(n)?))?,
        None => {
            for p in registry.iter() {
                writeln!(io.out, "{}", profile_row(p))?;
            }
        }
    }
    Ok(())
}

fn attack(registry: &ProfileRegistry, args: &AttackArgs, io: &mut Io<'_>) -> Result<()> {
    let mut cfg = AttackConfig::load(&args.config)?;
    if let Some(p) = &args.profile {
        cfg.profile = p.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate(registry)?;
    let profile = registry.lookup(&cfg.profile)?;
    let input =
        read_cloud(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    let seed = derive_seed(cfg.seed, &[label("attack")]);

    match cfg.attack()? {
        Attack::Injection(inj) => {
            let pattern = match &inj.pattern {
                Some(path) => {
                    read_cloud(path).with_context(|| format!("cannot read {}", path.display()))?
                }
                None => input.clone(),
            };
            let pattern_points = pattern.len();
            let spec = inj.to_spec(pattern, profile, seed)?;
            let result = apply_injection_detailed(&spec)?;
            let out = if inj.pattern.is_some() {
                merge_into_scene(&input, &result.cloud, inj.merge_policy())?
            } else {
                result.cloud.clone()
            };
            write_cloud(&out, &args.out)
                .with_context(|| format!("cannot write {}", args.out.display()))?;
            io.field("attack", "injection")?;
            io.field("profile", &profile.name)?;
            io.field("seed", cfg.seed)?;
            io.field("rand_model", spec.rand_model)?;
            io.field("pattern_points", pattern_points)?;
            io.field("injected", result.cloud.len())?;
            io.field("dropped", result.dropped)?;
            io.field("inter_offset_m", format!("{:.6}", result.inter))?;
            io.field("points_out", out.len())?;
        }
        Attack::Removal(rem) => {
            let cloud = assign_azimuth_bins(&input, rem.resolution(profile))?;
            let spec = rem.to_spec(None, seed)?;
            let outcome = apply_removal(&cloud, &spec, profile)?;
            write_cloud(&outcome.surviving, &args.out)
                .with_context(|| format!("cannot write {}", args.out.display()))?;
            let fraction = if outcome.hit_count == 0 {
                0.0
            } else {
                outcome.removed_count as f64 / outcome.hit_count as f64
            };
            io.field("attack", spec.kind.name())?;
            io.field("profile", &profile.name)?;
            io.field("seed", cfg.seed)?;
            io.field("points_in", input.len())?;
            io.field("hit", outcome.hit_count)?;
            io.field("removed", outcome.removed_count)?;
            io.field("noise", outcome.noise_count)?;
            io.field("injected", 0)?;
            io.field("removed_fraction", format!("{fraction:.4}"))?;
        }
    }
    Ok(())
}

fn load_scene(scene: &SceneArgs) -> Result<(PointCloud, ObjectModel)> {
    let background = match &scene.background {
        Some(path) => {
            read_cloud(path).with_context(|| format!("cannot read {}", path.display()))?
        }
        None => SyntheticScan::roof_64(0.2).generate()?,
    };
    let model = match &scene.model {
        Some(path) => ObjectModel::load(path)
            .with_context(|| format!("cannot load model {}", path.display()))?,
        None => ObjectModel::sedan(KITTI_GROUND_Z),
    };
    Ok((background, model))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn scenario(args: &ScenarioArgs, io: &mut Io<'_>) -> Result<()> {
    let (background, model) = load_scene(&args.scene)?;
    let scenarios = distance_sweep(
        &background,
        &model,
        args.d_min,
        args.d_max,
        args.step,
        args.scene.nose_offset,
    )?;
    create_dir(&args.out)?;
    let mut index = csv::Writer::from_path(args.out.join("scenarios.csv"))?;
    index.write_record(SCENARIO_HEADER)?;
    for (k, s) in scenarios.iter().enumerate() {
        let stem = format!("scene_{k:03}");
        write_cloud(
            &s.cloud,
            &args.out.join(format!("{stem}.{}", args.format.extension())),
        )?;
        let gt = DetectionRecord {
            bbox: s.gt_box,
            score: 1.0,
            label: "gt".into(),
        };
        write_detections(&[gt], &args.out.join(format!("{stem}.json")))?;
        index.write_record([
            stem,
            s.distance.to_string(),
            s.object_points.len().to_string(),
        ])?;
    }
    index.flush()?;
    io.field("scenarios", scenarios.len())?;
    io.field("out", args.out.display())?;
    Ok(())
}

/// Files in `dir` keyed by stem, keeping only the given extensions.
fn stems(dir: &Path, extensions: &[&str]) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if !path.is_file() || !extensions.contains(&ext.as_str()) {
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            bail!(
                "{} and {} share the stem {stem}",
                prev.display(),
                path.display()
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct EvalSummary<'a> {
    mode: &'a str,
    stems: Vec<&'a str>,
    #[serde(flatten)]
    report: EvalReport,
}

fn eval(args: &EvalArgs, io: &mut Io<'_>) -> Result<()> {
    let clouds = stems(&args.clouds, &["bin", "pcd"])?;
    let dets = stems(&args.detections, &["json"])?;
    let gts = stems(&args.gt, &["json"])?;
    let names: Vec<&String> = clouds.keys().collect();
    if names != dets.keys().collect::<Vec<_>>() || names != gts.keys().collect::<Vec<_>>() {
        let all: std::collections::BTreeSet<&String> =
            clouds.keys().chain(dets.keys()).chain(gts.keys()).collect();
        let odd: Vec<&str> = all
            .into_iter()
            .filter(|s| !(clouds.contains_key(*s) && dets.contains_key(*s) && gts.contains_key(*s)))
            .map(|s| s.as_str())
            .collect();
        bail!(
            "stems do not match across clouds, detections and gt: {}",
            odd.join(", ")
        );
    }
    if names.is_empty() {
        bail!("no scenarios found in {}", args.clouds.display());
    }

    let mut rows = Vec::with_capacity(names.len());
    for stem in &names {
        let detections =
            read_detections(&dets[*stem]).with_context(|| dets[*stem].display().to_string())?;
        let gt = read_detections(&gts[*stem]).with_context(|| gts[*stem].display().to_string())?;
        let [gt] = gt.as_slice() else {
            bail!(
                "{}: expected exactly one ground-truth box",
                gts[*stem].display()
            );
        };
        let ok = match args.mode {
            Mode::Injection => injection_success(&detections, &gt.bbox),
            Mode::Removal => removal_success(&detections, &gt.bbox),
        };
        rows.push((stem.as_str(), max_iou(&detections, &gt.bbox), ok));
    }
    let report = success_rate(&rows.iter().map(|r| r.2).collect::<Vec<_>>())?;

    let mut csv_buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_buf);
        w.write_record(EVAL_HEADER)?;
        for (stem, iou, ok) in &rows {
            w.write_record([stem.to_string(), iou.to_string(), ok.to_string()])?;
        }
        w.flush()?;
    }
    match &args.out {
        Some(path) => std::fs::write(path, &csv_buf)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => io.out.write_all(&csv_buf)?,
    }
    if let Some(path) = &args.report {
        let summary = EvalSummary {
            mode: match args.mode {
                Mode::Injection => "injection",
                Mode::Removal => "removal",
            },
            stems: rows.iter().map(|r| r.0).collect(),
            report: report.clone(),
        };
        let text = serde_json::to_string_pretty(&summary)? + "\n";
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    writeln!(
        io.err,
        "success_rate: {} ({}/{})",
        report.success_rate, report.successes, report.trials
    )?;
    Ok(())
}

/// Builds the sweep a `sweep` invocation describes.
pub fn build_sweep(registry: &ProfileRegistry, args: &SweepArgs) -> Result<Sweep> {
    let mut base = match &args.config {
        Some(path) => AttackConfig::load(path)?,
        None => AttackConfig {
            profile: DEFAULT_PROFILE.to_string(),
            seed: 0,
            injection: (args.axis != Axis::Frequency).then(InjectionConfig::default),
            removal: (args.axis == Axis::Frequency).then(|| RemovalConfig::hfr(1e6, 1.0)),
        },
    };
    if let Some(p) = &args.profile {
        base.profile = p.clone();
    }
    if let Some(s) = args.seed {
        base.seed = s;
    }
    base.validate(registry)?;
    let (background, model) = load_scene(&args.scene)?;
    Ok(Sweep {
        axis: args.axis,
        values: args.values.clone(),
        seed: base.seed,
        base,
        registry: registry.clone(),
        background,
        model,
        distances: args.distances.clone(),
        nose_offset: args.scene.nose_offset,
        trials: args.trials,
    })
}

fn sweep(registry: &ProfileRegistry, args: &SweepArgs, io: &mut Io<'_>) -> Result<()> {
    let plan = build_sweep(registry, args)?;
    let detector = match &args.external_dir {
        Some(dir) => DetectorChoice::External(dir.clone()),
        None => DetectorChoice::Oracle(DetectorParams {
            cluster_radius: args.detector.cluster_radius,
            min_points: args.detector.min_points,
            max_points: args.detector.max_points,
            ground_z: args.detector.ground_z,
        }),
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match plan.run(&detector, jobs)? {
        SweepOutcome::Rows(rows) => match &args.out {
            Some(path) => {
                let f = File::create(path)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                write_rows(&rows, f)?;
            }
            None => write_rows(&rows, &mut *io.out)?,
        },
        SweepOutcome::AwaitingDetections { exported, dir } => {
            writeln!(
                io.err,
                "wrote {exported} clouds to {}; put detections in {} and rerun",
                dir.join("clouds").display(),
                dir.join("detections").display()
            )?;
        }
    }
    Ok(())
}

fn count(args: &CountArgs, io: &mut Io<'_>) -> Result<()> {
    if !(0.0..=255.0).contains(&args.threshold) {
        bail!("threshold must be in [0, 255], got {}", args.threshold);
    }
    if !(args.bin_deg > 0.0 && args.bin_deg <= 360.0) {
        bail!("bin width must be in (0, 360], got {}", args.bin_deg);
    }
    if !(args.match_tol > 0.0) {
        bail!("match tolerance must be positive, got {}", args.match_tol);
    }
    let benign = read_cloud(&args.benign)
        .with_context(|| format!("cannot read {}", args.benign.display()))?;
    let attacked = read_cloud(&args.attacked)
        .with_context(|| format!("cannot read {}", args.attacked.display()))?;
    io.field(
        "injected",
        count_injected(&benign, &attacked, args.threshold),
    )?;
    io.field(
        "removed",
        count_removed(&benign, &attacked, args.threshold, args.match_tol),
    )?;
    if let Some(path) = &args.out {
        let table = removal_percentage_per_azimuth(
            &benign,
            &attacked,
            args.bin_deg,
            args.threshold,
            args.match_tol,
        );
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(COUNT_HEADER)?;
        for (bin, fraction) in table {
            let start = bin as f64 * args.bin_deg;
            w.write_record([
                bin.to_string(),
                start.to_string(),
                (start + args.bin_deg).min(360.0).to_string(),
                fraction.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn synth(args: &SynthArgs, io: &mut Io<'_>) -> Result<()> {
    let scan = match args.preset {
        Preset::Roof64 => SyntheticScan::roof_64(args.az_step),
        Preset::Backdrop => SyntheticScan::uniform_backdrop(
            (-20.0, 10.0),
            0.5,
            (-40.0, 40.0),
            args.az_step,
            args.range,
        ),
    };
    let cloud = scan.generate()?;
    write_cloud(&cloud, &args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    io.field("points", cloud.len())?;
    Ok(())
}
