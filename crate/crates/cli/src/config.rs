//! The declarative attack-config file.
//!
//! ```toml
//! profile = "VLP-16"
//! seed = 7
//!
//! [removal]
//! kind = "hfr"
//! frequency_hz = 1e6
//! span = [350.0, 20.0]
//! probability = 1.0
//! ```
//!
//! Exactly one of `[injection]` and `[removal]` must be present.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use spoofsim_core::geometry::AzimuthSpan;
use spoofsim_core::injection::{
    AltitudeSigmaTable, InjectionSpec, MergePolicy, DEFAULT_INNER_SIGMA, DEFAULT_INTER_SIGMA,
    SPOOFED_INTENSITY,
};
use spoofsim_core::io::read_removal_profile;
use spoofsim_core::profiles::{LidarProfile, ProfileRegistry, RandModel};
use spoofsim_core::removal::{
    build_removal_profile, ProbabilityTable, RemovalKind, RemovalShape, RemovalSpec,
    DEFAULT_HFR_FREQUENCY_HZ, FINGERPRINT_HIT_CEILING,
};
use spoofsim_core::PointCloud;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub profile: String,
    #[serde(default)]
    pub seed: u64,
    pub injection: Option<InjectionConfig>,
    pub removal: Option<RemovalConfig>,
}

/// The attack a config describes, once validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attack<'a> {
    Injection(&'a InjectionConfig),
    Removal(&'a RemovalConfig),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    /// Pattern cloud. Without one, the input cloud itself is the pattern.
    pub pattern: Option<PathBuf>,
    /// Defaults to the fingerprint ceiling on fingerprinting sensors.
    pub downsample_n: Option<usize>,
    #[serde(default = "inner_sigma")]
    pub inner_sigma: f64,
    pub inner_sigma_by_altitude: Option<Vec<(f64, f64)>>,
    #[serde(default = "inter_sigma")]
    pub inter_sigma: f64,
    /// Defaults to the profile's own timing randomization.
    pub rand_model: Option<RandModel>,
    #[serde(default = "spoofed_intensity")]
    pub spoofed_intensity: f64,
    #[serde(default)]
    pub merge: MergeMode,
    #[serde(default = "merge_resolution")]
    pub merge_resolution_deg: f64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            pattern: None,
            downsample_n: None,
            inner_sigma: DEFAULT_INNER_SIGMA,
            inner_sigma_by_altitude: None,
            inter_sigma: DEFAULT_INTER_SIGMA,
            rand_model: None,
            spoofed_intensity: SPOOFED_INTENSITY,
            merge: MergeMode::Append,
            merge_resolution_deg: merge_resolution(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    #[default]
    Append,
    Replace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemovalKindName {
    Pra,
    Hfr,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemovalConfig {
    pub kind: RemovalKindName,
    pub frequency_hz: Option<f64>,
    /// `[start_deg, width_deg]`. Defaults to the caller's target span.
    pub span: Option<[f64; 2]>,
    /// Constant hit probability over the span.
    pub probability: Option<f64>,
    /// Plateau-shaped probability over the span.
    pub plateau: Option<PlateauConfig>,
    /// CSV removal profile.
    pub profile_csv: Option<PathBuf>,
    #[serde(default)]
    pub allow_inapplicable: bool,
    /// Defaults to the profile's azimuth resolution.
    pub azimuth_resolution: Option<f64>,
}

impl RemovalConfig {
    pub fn hfr(frequency_hz: f64, probability: f64) -> Self {
        RemovalConfig {
            kind: RemovalKindName::Hfr,
            frequency_hz: Some(frequency_hz),
            span: None,
            probability: Some(probability),
            plateau: None,
            profile_csv: None,
            allow_inapplicable: false,
            azimuth_resolution: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub p_center: f64,
    pub plateau_deg: f64,
    pub falloff_deg: f64,
}

fn inner_sigma() -> f64 {
    DEFAULT_INNER_SIGMA
}

fn inter_sigma() -> f64 {
    DEFAULT_INTER_SIGMA
}

fn spoofed_intensity() -> f64 {
    SPOOFED_INTENSITY
}

fn merge_resolution() -> f64 {
    0.1
}

impl AttackConfig {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: AttackConfig = toml::from_str(text).context("invalid attack config")?;
        if let Some(dir) = base {
            if let Some(inj) = &mut cfg.injection {
                inj.pattern = inj.pattern.take().map(|p| dir.join(p));
            }
            if let Some(rem) = &mut cfg.removal {
                rem.profile_csv = rem.profile_csv.take().map(|p| dir.join(p));
            }
        }
        Ok(cfg)
    }

    /// Reads a config; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text, path.parent()).with_context(|| format!("in {}", path.display()))
    }

    pub fn attack(&self) -> Result<Attack<'_>> {
        match (&self.injection, &self.removal) {
            (Some(i), None) => Ok(Attack::Injection(i)),
            (None, Some(r)) => Ok(Attack::Removal(r)),
            (None, None) => bail!("attack config has neither [injection] nor [removal]"),
            (Some(_), Some(_)) => bail!("attack config has both [injection] and [removal]"),
        }
    }

    pub fn validate(&self, registry: &ProfileRegistry) -> Result<()> {
        registry.lookup(&self.profile)?;
        self.attack()?;
        Ok(())
    }
}

impl InjectionConfig {
    pub fn merge_policy(&self) -> MergePolicy {
        match self.merge {
            MergeMode::Append => MergePolicy::Append,
            MergeMode::Replace => MergePolicy::Replace {
                resolution_deg: self.merge_resolution_deg,
            },
        }
    }

    pub fn to_spec(
        &self,
        pattern: PointCloud,
        profile: &LidarProfile,
        seed: u64,
    ) -> Result<InjectionSpec> {
        let downsample_n = match self.downsample_n {
            Some(n) => Some(n),
            None if profile.fingerprint => {
                Some((FINGERPRINT_HIT_CEILING as usize).min(pattern.len()))
            }
            None => None,
        };
        let inner_sigma_by_altitude = match &self.inner_sigma_by_altitude {
            Some(rows) => Some(AltitudeSigmaTable::new(rows.clone())?),
            None => None,
        };
        let spec = InjectionSpec {
            pattern,
            downsample_n,
            inner_sigma: self.inner_sigma,
            inner_sigma_by_altitude,
            inter_sigma: self.inter_sigma,
            rand_model: self.rand_model.unwrap_or(profile.rand_model),
            spoofed_intensity: self.spoofed_intensity,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RemovalConfig {
    pub fn resolution(&self, profile: &LidarProfile) -> f64 {
        self.azimuth_resolution
            .unwrap_or(profile.azimuth_resolution)
    }

    /// Builds the spec, using `target` when the config names no span.
    pub fn to_spec(&self, target: Option<AzimuthSpan>, seed: u64) -> Result<RemovalSpec> {
        let kind = match (self.kind, self.frequency_hz) {
            (RemovalKindName::Pra, None) => RemovalKind::Pra,
            (RemovalKindName::Pra, Some(_)) => bail!("frequency_hz applies to hfr only"),
            (RemovalKindName::Hfr, f) => RemovalKind::Hfr {
                frequency_hz: f.unwrap_or(DEFAULT_HFR_FREQUENCY_HZ),
            },
        };
        let span = match self.span {
            Some([start, width]) => AzimuthSpan::new(start, width)?,
            None => target.unwrap_or(AzimuthSpan::FULL),
        };
        let sources = [
            self.probability.is_some(),
            self.plateau.is_some(),
            self.profile_csv.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() > 1 {
            bail!("give at most one of probability, plateau and profile_csv");
        }
        let table = if let Some(p) = self.probability {
            ProbabilityTable::constant(p)?
        } else if let Some(pl) = self.plateau {
            let shape = RemovalShape::Plateau {
                p_center: pl.p_center,
                plateau_deg: pl.plateau_deg,
                falloff_deg: pl.falloff_deg,
            };
            build_removal_profile(&shape, span.width_deg)?
        } else if let Some(path) = &self.profile_csv {
            read_removal_profile(path).map_err(|e| anyhow!("{}: {e}", path.display()))?
        } else {
            build_removal_profile(
                &RemovalShape::default_for_span(span.width_deg),
                span.width_deg,
            )?
        };
        let mut spec = RemovalSpec::new(kind, table, span, seed);
        spec.allow_inapplicable = self.allow_inapplicable;
        Ok(spec)
    }
}
