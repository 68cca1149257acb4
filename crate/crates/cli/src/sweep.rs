//! Parameter sweeps: one attack, one axis varied, many seeded trials per cell.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use spoofsim_core::detector::{detect, DetectorParams};
use spoofsim_core::eval::{injection_success, removal_success, OrientedBox};
use spoofsim_core::geometry::{assign_azimuth_bins, AzimuthSpan};
use spoofsim_core::injection::{apply_injection, merge_into_scene, InjectionSpec, MergePolicy};
use spoofsim_core::io::{read_detections, write_bin, write_detections, DetectionRecord};
use spoofsim_core::profiles::{LidarProfile, ProfileRegistry, RandModel};
use spoofsim_core::removal::{apply_removal, RemovalKind, RemovalSpec};
use spoofsim_core::rng::{derive_seed, label};
use spoofsim_core::scenario::{place_object, ObjectModel};
use spoofsim_core::PointCloud;

use crate::config::{Attack, AttackConfig};

pub const DEFAULT_TRIALS: usize = 100;

/// Column order of the sweep CSV.
pub const SWEEP_HEADER: [&str; 8] = [
    "axis",
    "value",
    "scenario",
    "distance_m",
    "object_points",
    "trials",
    "successes",
    "success_rate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    RandModel,
    DownsampleN,
    Frequency,
    Distance,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::RandModel => "rand_model",
            Axis::DownsampleN => "downsample_n",
            Axis::Frequency => "frequency",
            Axis::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorChoice {
    Oracle(DetectorParams),
    /// Directory handshake: clouds are written out, detections read back.
    External(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<String>,
    pub base: AttackConfig,
    pub registry: ProfileRegistry,
    /// Benign scene without the object.
    pub background: PointCloud,
    pub model: ObjectModel,
    /// Scenario distances; ignored on the distance axis.
    pub distances: Vec<f64>,
    pub nose_offset: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub scenario: usize,
    pub distance_m: f64,
    pub object_points: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Rows(Vec<SweepRow>),
    /// External mode wrote its clouds and is waiting for detections.
    AwaitingDetections {
        exported: usize,
        dir: PathBuf,
    },
}

enum Prepared {
    Injection {
        scene: PointCloud,
        spec: InjectionSpec,
        merge: MergePolicy,
    },
    Removal {
        cloud: PointCloud,
        spec: RemovalSpec,
        profile: LidarProfile,
    },
}

struct Cell {
    value: String,
    scenario: usize,
    distance: f64,
    object_points: usize,
    gt: OrientedBox,
    attack: Prepared,
}

impl Cell {
    fn is_injection(&self) -> bool {
        matches!(self.attack, Prepared::Injection { .. })
    }

    fn attacked(&self, seed: u64) -> Result<PointCloud> {
        Ok(match &self.attack {
            Prepared::Injection { scene, spec, merge } => {
                let spec = InjectionSpec {
                    seed,
                    ..spec.clone()
                };
                merge_into_scene(scene, &apply_injection(&spec)?, *merge)?
            }
            Prepared::Removal {
                cloud,
                spec,
                profile,
            } => {
                let spec = RemovalSpec {
                    seed,
                    ..spec.clone()
                };
                apply_removal(cloud, &spec, profile)?.surviving
            }
        })
    }

    fn success(&self, detections: &[DetectionRecord]) -> bool {
        if self.is_injection() {
            injection_success(detections, &self.gt)
        } else {
            removal_success(detections, &self.gt)
        }
    }
}

/// `none`, `gaussian:<sigma>`, `uniform:<half_width>` or a profile name.
pub fn parse_rand_model(value: &str, registry: &ProfileRegistry) -> Result<RandModel> {
    let lower = value.trim().to_ascii_lowercase();
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .with_context(|| format!("bad number in rand model {value:?}"))
    };
    let model = if lower == "none" {
        RandModel::None
    } else if let Some(s) = lower.strip_prefix("gaussian:") {
        RandModel::Gaussian { sigma: num(s)? }
    } else if let Some(s) = lower.strip_prefix("uniform:") {
        RandModel::Uniform {
            half_width: num(s)?,
        }
    } else {
        registry.lookup(value.trim())?.rand_model
    };
    model.validate()?;
    Ok(model)
}

fn stem(cell: usize, trial: usize) -> String {
    format!("c{cell:03}_t{trial:04}")
}

impl Sweep {
    fn scenario_distances(&self) -> Result<Vec<(usize, String, usize, f64)>> {
        if self.values.is_empty() {
            bail!("sweep needs at least one value");
        }
        let mut out = Vec::new();
        for (vi, value) in self.values.iter().enumerate() {
            if self.axis == Axis::Distance {
                let d: f64 = value
                    .trim()
                    .parse()
                    .with_context(|| format!("bad distance {value:?}"))?;
                out.push((vi, value.clone(), 0, d));
            } else {
                if self.distances.is_empty() {
                    bail!("sweep needs at least one scenario distance");
                }
                for (si, &d) in self.distances.iter().enumerate() {
                    out.push((vi, value.clone(), si, d));
                }
            }
        }
        Ok(out)
    }

    fn prepare(&self, value: &str, distance: f64, scenario: usize) -> Result<Cell> {
        let profile = self.registry.lookup(&self.base.profile)?.clone();
        let s = place_object(&self.background, &self.model, distance, self.nose_offset)?;
        let attack = match self.base.attack()? {
            Attack::Injection(inj) => {
                let mut inj = inj.clone();
                match self.axis {
                    Axis::RandModel => {
                        inj.rand_model = Some(parse_rand_model(value, &self.registry)?)
                    }
                    Axis::DownsampleN => {
                        inj.downsample_n = if value.trim().eq_ignore_ascii_case("all") {
                            Some(s.object_points.len())
                        } else {
                            Some(
                                value
                                    .trim()
                                    .parse()
                                    .with_context(|| format!("bad point count {value:?}"))?,
                            )
                        }
                    }
                    Axis::Frequency => bail!("the frequency axis needs a removal attack"),
                    Axis::Distance => {}
                }
                let spec = inj.to_spec(s.object_cloud(), &profile, self.seed)?;
                Prepared::Injection {
                    scene: self.background.clone(),
                    spec,
                    merge: inj.merge_policy(),
                }
            }
            Attack::Removal(rem) => {
                let target = AzimuthSpan::covering(&s.object_cloud());
                let mut spec = rem.to_spec(target, self.seed)?;
                match self.axis {
                    Axis::Frequency => {
                        let f: f64 = value
                            .trim()
                            .parse()
                            .with_context(|| format!("bad frequency {value:?}"))?;
                        spec.kind = RemovalKind::Hfr { frequency_hz: f };
                    }
                    Axis::RandModel | Axis::DownsampleN => {
                        bail!("the {} axis needs an injection attack", self.axis.name())
                    }
                    Axis::Distance => {}
                }
                Prepared::Removal {
                    cloud: assign_azimuth_bins(&s.cloud, rem.resolution(&profile))?,
                    spec,
                    profile,
                }
            }
        };
        Ok(Cell {
            value: value.to_string(),
            scenario,
            distance,
            object_points: s.object_points.len(),
            gt: s.gt_box,
            attack,
        })
    }

    fn trial_seed(&self, cell: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[label("sweep"), cell as u64, trial as u64])
    }

    /// Runs every (cell, trial) pair with at most `jobs` workers. Output does
    /// not depend on `jobs`.
    pub fn run(&self, detector: &DetectorChoice, jobs: usize) -> Result<SweepOutcome> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .context("cannot start worker pool")?;
        pool.install(|| self.run_in_pool(detector))
    }

    fn run_in_pool(&self, detector: &DetectorChoice) -> Result<SweepOutcome> {
        let cells: Vec<Cell> = self
            .scenario_distances()?
            .into_par_iter()
            .map(|(_, value, si, d)| self.prepare(&value, d, si))
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..self.trials).map(move |t| (c, t)))
            .collect();

        let outcomes: Vec<bool> = match detector {
            DetectorChoice::Oracle(params) => {
                params.validate()?;
                jobs.par_iter()
                    .map(|&(c, t)| {
                        let cloud = cells[c].attacked(self.trial_seed(c, t))?;
                        Ok(cells[c].success(&detect(&cloud, params)?))
                    })
                    .collect::<Result<_>>()?
            }
            DetectorChoice::External(dir) => {
                let det_dir = dir.join("detections");
                let present = jobs
                    .iter()
                    .filter(|&&(c, t)| det_dir.join(format!("{}.json", stem(c, t))).is_file())
                    .count();
                if present == 0 {
                    self.export(dir, &cells, &jobs)?;
                    return Ok(SweepOutcome::AwaitingDetections {
                        exported: jobs.len(),
                        dir: dir.clone(),
                    });
                }
                if present < jobs.len() {
                    bail!(
                        "{}: detections for {} of {} clouds are missing",
                        det_dir.display(),
                        jobs.len() - present,
                        jobs.len()
                    );
                }
                jobs.par_iter()
                    .map(|&(c, t)| {
                        let path = det_dir.join(format!("{}.json", stem(c, t)));
                        let dets =
                            read_detections(&path).with_context(|| path.display().to_string())?;
                        Ok(cells[c].success(&dets))
                    })
                    .collect::<Result<_>>()?
            }
        };

        let rows = cells
            .iter()
            .zip(outcomes.chunks(self.trials))
            .map(|(cell, o)| {
                let successes = o.iter().filter(|&&s| s).count();
                SweepRow {
                    axis: self.axis.name().to_string(),
                    value: cell.value.clone(),
                    scenario: cell.scenario,
                    distance_m: cell.distance,
                    object_points: cell.object_points,
                    trials: o.len(),
                    successes,
                    success_rate: successes as f64 / o.len() as f64,
                }
            })
            .collect();
        Ok(SweepOutcome::Rows(rows))
    }

    fn export(&self, dir: &Path, cells: &[Cell], jobs: &[(usize, usize)]) -> Result<()> {
        for sub in ["clouds", "gt", "detections"] {
            std::fs::create_dir_all(dir.join(sub))
                .with_context(|| format!("cannot create {}", dir.join(sub).display()))?;
        }
        jobs.par_iter().try_for_each(|&(c, t)| -> Result<()> {
            let name = stem(c, t);
            let cloud = cells[c].attacked(self.trial_seed(c, t))?;
            write_bin(&cloud, &dir.join("clouds").join(format!("{name}.bin")))?;
            let gt = DetectionRecord {
                bbox: cells[c].gt,
                score: 1.0,
                label: "gt".into(),
            };
            write_detections(&[gt], &dir.join("gt").join(format!("{name}.json")))?;
            Ok(())
        })?;
        let mut w = csv::Writer::from_path(dir.join("manifest.csv"))?;
        w.write_record(["stem", "axis", "value", "scenario", "distance_m", "trial"])?;
        for &(c, t) in jobs {
            let cell = &cells[c];
            w.write_record([
                stem(c, t),
                self.axis.name().to_string(),
                cell.value.clone(),
                cell.scenario.to_string(),
                cell.distance.to_string(),
                t.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_rows<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            r.value.clone(),
            r.scenario.to_string(),
            r.distance_m.to_string(),
            r.object_points.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            r.success_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
