//! LiDAR sensing and security parameters.
//!
//! The nine built-in sensors cover three first-generation rotating units and
//! six newer units with timing randomization or pulse fingerprinting. Ranges
//! come from the vendors' data sheets; the randomization error models are the
//! meter-level fits measured on the physical sensors.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_AZIMUTH_RESOLUTION;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a round-trip timing difference to a range offset: `dt * c / 2`.
pub fn interval_to_distance(dt_seconds: f64) -> Result<f64> {
    if !(dt_seconds >= 0.0) || !dt_seconds.is_finite() {
        return Err(Error::invalid(format!(
            "timing difference must be finite and non-negative, got {dt_seconds}"
        )));
    }
    Ok(dt_seconds * SPEED_OF_LIGHT / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generation {
    First,
    New,
}

/// Per-point range error caused by timing randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RandModel {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    Uniform {
        half_width: f64,
    },
}

impl RandModel {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            RandModel::None => 0.0,
            RandModel::Gaussian { sigma } => sigma,
            RandModel::Uniform { half_width } => half_width,
        };
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "randomization parameter must be >= 0, got {v}"
            )))
        }
    }

    pub fn is_randomized(&self) -> bool {
        !matches!(self, RandModel::None)
    }
}

impl std::fmt::Display for RandModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RandModel::None => write!(f, "none"),
            RandModel::Gaussian { sigma } => write!(f, "N(0,{sigma})"),
            RandModel::Uniform { half_width } => write!(f, "U(-{half_width},{half_width})"),
        }
    }
}

/// Draws one range error from `model`, in meters.
pub fn sample_delta_rand<R: Rng + ?Sized>(model: &RandModel, rng: &mut R) -> f64 {
    match *model {
        RandModel::None => 0.0,
        RandModel::Gaussian { sigma } => {
            if sigma == 0.0 {
                return 0.0;
            }
            Normal::new(0.0, sigma)
                .expect("validated sigma")
                .sample(rng)
        }
        RandModel::Uniform { half_width } => {
            if half_width == 0.0 {
                return 0.0;
            }
            Uniform::new_inclusive(-half_width, half_width)
                .expect("validated half width")
                .sample(rng)
        }
    }
}

/// Measured distribution of the interval between consecutive laser firings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FiringIntervalDist {
    Uniform { min_us: f64, max_us: f64 },
    Gaussian { mean_us: f64, std_us: f64 },
}

impl FiringIntervalDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FiringIntervalDist::Uniform { min_us, max_us } => min_us > 0.0 && max_us > min_us,
            FiringIntervalDist::Gaussian { mean_us, std_us } => mean_us > 0.0 && std_us > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "invalid firing interval distribution {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarProfile {
    pub name: String,
    pub generation: Generation,
    /// Minimum operational threshold: returns closer than this are discarded.
    pub mot: f64,
    pub max_range: f64,
    pub vertical_fov: f64,
    pub horizontal_fov: f64,
    /// Vertical channel count; `None` for non-channelized scanners.
    #[serde(default)]
    pub channels: Option<u32>,
    #[serde(default)]
    pub rand_model: RandModel,
    #[serde(default)]
    pub fingerprint: bool,
    #[serde(default = "default_resolution")]
    pub azimuth_resolution: f64,
    /// Lasers fired at once. Documentation only.
    #[serde(default = "one")]
    pub simultaneous_firing: u32,
    #[serde(default)]
    pub firing_interval: Option<FiringIntervalDist>,
}

fn default_resolution() -> f64 {
    DEFAULT_AZIMUTH_RESOLUTION
}

fn one() -> u32 {
    1
}

impl LidarProfile {
    pub fn validate(&self) -> Result<()> {
        let name = &self.name;
        if name.trim().is_empty() {
            return Err(Error::validation("profile name is empty"));
        }
        if !(self.mot >= 0.0 && self.max_range > self.mot && self.max_range.is_finite()) {
            return Err(Error::validation(format!(
                "{name}: need max_range > mot >= 0, got mot {} max_range {}",
                self.mot, self.max_range
            )));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov <= 360.0) {
            return Err(Error::validation(format!(
                "{name}: horizontal_fov must be in (0, 360]"
            )));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov <= 180.0) {
            return Err(Error::validation(format!(
                "{name}: vertical_fov must be in (0, 180]"
            )));
        }
        if !(self.azimuth_resolution > 0.0 && self.azimuth_resolution.is_finite()) {
            return Err(Error::validation(format!(
                "{name}: azimuth_resolution must be positive"
            )));
        }
        self.rand_model.validate()?;
        if let Some(d) = &self.firing_interval {
            d.validate()?;
        }
        Ok(())
    }

    pub fn has_timing_randomization(&self) -> bool {
        self.rand_model.is_randomized()
    }
}

#[allow(clippy::too_many_arguments)]
fn profile(
    name: &str,
    generation: Generation,
    mot: f64,
    max_range: f64,
    vertical_fov: f64,
    horizontal_fov: f64,
    channels: Option<u32>,
    simultaneous_firing: u32,
    rand_model: RandModel,
    firing_interval: Option<FiringIntervalDist>,
) -> LidarProfile {
    LidarProfile {
        name: name.to_string(),
        generation,
        mot,
        max_range,
        vertical_fov,
        horizontal_fov,
        channels,
        rand_model,
        fingerprint: false,
        azimuth_resolution: DEFAULT_AZIMUTH_RESOLUTION,
        simultaneous_firing,
        firing_interval,
    }
}

/// The nine studied sensors, in data-sheet order.
pub fn builtin_profile_list() -> Vec<LidarProfile> {
    use FiringIntervalDist as F;
    use Generation::{First, New};
    use RandModel as R;

    let mut xt32 = profile(
        "XT32",
        New,
        0.0,
        120.0,
        31.0,
        360.0,
        Some(32),
        1,
        R::None,
        None,
    );
    xt32.fingerprint = true;

    vec![
        profile(
            "VLP-16",
            First,
            1.0,
            100.0,
            30.0,
            360.0,
            Some(16),
            1,
            R::None,
            None,
        ),
        profile(
            "VLP-32c",
            First,
            1.0,
            200.0,
            40.0,
            360.0,
            Some(32),
            2,
            R::None,
            None,
        ),
        profile(
            "VLS-128",
            First,
            0.5,
            300.0,
            40.0,
            360.0,
            Some(128),
            8,
            R::None,
            None,
        ),
        profile(
            "Pixell",
            New,
            0.1,
            56.0,
            16.0,
            180.0,
            Some(8),
            3,
            R::Uniform { half_width: 191.0 },
            Some(F::Uniform {
                min_us: 4.5,
                max_us: 5.8,
            }),
        ),
        profile(
            "OS1-32",
            New,
            0.3,
            120.0,
            45.0,
            360.0,
            Some(32),
            32,
            R::Uniform { half_width: 58.0 },
            Some(F::Uniform {
                min_us: 1.4,
                max_us: 1.8,
            }),
        ),
        profile(
            "L515",
            New,
            0.25,
            9.0,
            55.0,
            70.0,
            None,
            1,
            R::Gaussian { sigma: 7.5 },
            Some(F::Gaussian {
                mean_us: 51.0,
                std_us: 0.025,
            }),
        ),
        profile(
            "Horizon",
            New,
            0.5,
            260.0,
            25.1,
            81.7,
            None,
            1,
            R::Uniform { half_width: 45.0 },
            Some(F::Uniform {
                min_us: 4.0,
                max_us: 4.3,
            }),
        ),
        xt32,
        profile(
            "Helios",
            New,
            0.2,
            150.0,
            70.0,
            360.0,
            Some(32),
            1,
            R::Gaussian { sigma: 1.5 },
            Some(F::Gaussian {
                mean_us: 1.6,
                std_us: 0.005,
            }),
        ),
    ]
}

/// Immutable, ordered name → profile lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRegistry {
    profiles: Vec<LidarProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[serde(default, rename = "profile")]
    profiles: Vec<LidarProfile>,
}

impl ProfileRegistry {
    pub fn builtin() -> Self {
        ProfileRegistry {
            profiles: builtin_profile_list(),
        }
    }

    /// A registry holding exactly `profiles`, each validated.
    pub fn from_profiles(profiles: Vec<LidarProfile>) -> Result<Self> {
        for p in &profiles {
            p.validate()?;
        }
        Ok(ProfileRegistry { profiles })
    }

    pub fn get(&self, name: &str) -> Option<&LidarProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&LidarProfile> {
        self.get(name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown LiDAR profile '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.name.as_str())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LidarProfile> {
        self.profiles.iter()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Parses a profile document: a TOML file with one `[[profile]]` table
    /// per sensor.
    pub fn parse_profiles(text: &str) -> Result<Vec<LidarProfile>> {
        let file: ProfileFile =
            toml::from_str(text).map_err(|e| Error::format(format!("profile config: {e}")))?;
        for p in &file.profiles {
            p.validate()?;
        }
        Ok(file.profiles)
    }

    /// Returns a registry where profiles from `text` replace built-ins with
    /// the same name and new names are appended.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let mut profiles = self.profiles.clone();
        for p in Self::parse_profiles(text)? {
            match profiles.iter_mut().find(|q| q.name == p.name) {
                Some(slot) => *slot = p,
                None => profiles.push(p),
            }
        }
        Ok(ProfileRegistry { profiles })
    }

    pub fn with_overrides_file(&self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        self.with_overrides(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ProfileFile {
            profiles: self.profiles.clone(),
        })
        .expect("profiles serialize")
    }
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
