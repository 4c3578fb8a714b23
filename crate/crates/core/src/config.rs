//! TOML experiment configuration. Every key carries its unit as a suffix
//! (`_hz`, `_s`, `_w`, `_db`, `_m`, ...); unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Dataset, SweepConfig};
use crate::perf::{Baseline, ComponentTable, LayerSpec, OpConvention, TimingParams};
use crate::photonic::DeviceParams;
use crate::resources::REFERENCE_WEIGHT_COUNT;

/// Bundled 3x3 convolution layers of VGG16 (same padding).
pub const VGG16_LAYERS_CSV: &str = include_str!("../data/vgg16_conv3x3.csv");

/// Randomized Winograd-vs-direct equivalence suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvCheckConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub max_channels: usize,
    pub max_extent: usize,
    pub max_filters: usize,
}

impl Default for ConvCheckConfig {
    fn default() -> Self {
        ConvCheckConfig {
            trials: 1000,
            tolerance: 1e-10,
            max_channels: 4,
            max_extent: 32,
            max_filters: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub cell_edge_m: f64,
    /// Weight count used for the memristor-area comparison.
    pub reference_weight_count: usize,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        ResourceConfig {
            cell_edge_m: 50e-6,
            reference_weight_count: REFERENCE_WEIGHT_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Dataset CSV; the bundled digits when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Layer table CSV; ignored when `layers` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers_csv: Option<PathBuf>,
    /// Inline layers; the bundled VGG16 table when neither this nor
    /// `layers_csv` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSpec>>,
    pub convention: OpConvention,
    pub device: DeviceParams,
    pub timing: TimingParams,
    /// Component power table; estimated from device and timing when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<ComponentTable>,
    pub baselines: Vec<Baseline>,
    pub noise: SweepConfig,
    pub conv_check: ConvCheckConfig,
    pub resources: ResourceConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            out_dir: PathBuf::from("out"),
            dataset: None,
            layers_csv: None,
            layers: None,
            convention: OpConvention::Paper,
            device: DeviceParams::default(),
            timing: TimingParams::default(),
            power: None,
            baselines: Vec::new(),
            noise: SweepConfig::default(),
            conv_check: ConvCheckConfig::default(),
            resources: ResourceConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; relative paths inside resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.timing.validate()?;
        for b in &self.baselines {
            b.validate()?;
        }
        self.noise.validate()?;
        if let Some(layers) = &self.layers {
            if layers.is_empty() {
                return Err(Error::Config("layers list is empty".into()));
            }
            for l in layers {
                l.validate()?;
            }
        }
        let cc = &self.conv_check;
        if cc.max_channels == 0 || cc.max_filters == 0 || cc.max_extent < 3 || !(cc.tolerance > 0.0) {
            return Err(Error::Config(
                "conv_check: bounds must be positive, max_extent >= 3 and tolerance > 0".into(),
            ));
        }
        if !(self.resources.cell_edge_m > 0.0) || self.resources.reference_weight_count == 0 {
            return Err(Error::Config(
                "resources: cell_edge_m and reference_weight_count must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            None => Ok(Dataset::digits()),
            Some(p) => Dataset::load(&self.resolve(p)),
        }
    }

    pub fn load_layers(&self) -> Result<Vec<LayerSpec>> {
        let layers = match (&self.layers, &self.layers_csv) {
            (Some(l), _) => l.clone(),
            (None, Some(p)) => {
                let path = self.resolve(p);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                parse_layers_csv(&text, &path.display().to_string())?
            }
            (None, None) => parse_layers_csv(VGG16_LAYERS_CSV, "<bundled VGG16 layers>")?,
        };
        if layers.is_empty() {
            return Err(Error::Config("no layers configured".into()));
        }
        for l in &layers {
            l.validate()?;
        }
        Ok(layers)
    }
}

/// Layer table with header
/// `name,height,width,channels,filters,r,m,same_padding` (last three optional).
pub fn parse_layers_csv(text: &str, origin: &str) -> Result<Vec<LayerSpec>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Config(format!("{origin}: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = Config::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(Config::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("sede = 3").is_err());
        assert!(Config::parse("[device]\nwavelength = 1.5e-6").is_err());
        assert!(Config::parse("[timing]\nclock_hz = \"fast\"").is_err());
    }

    #[test]
    fn overrides_apply() {
        let cfg = Config::parse("seed = 9\n[device]\nmemristor_bits = 4\n[noise]\nrepeats = 2").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.device.memristor_bits, 4);
        assert_eq!(cfg.device.dac_bits, 8);
        assert_eq!(cfg.noise.repeats, 2);
    }

    #[test]
    fn baseline_requires_note() {
        let ok = "[[baselines]]\nname = \"fpga\"\nspeed_gops = 100.0\npower_w = 10.0\nsource_note = \"vendor sheet\"";
        assert_eq!(Config::parse(ok).unwrap().baselines.len(), 1);
        let missing = "[[baselines]]\nname = \"fpga\"\nspeed_gops = 100.0\npower_w = 10.0";
        assert!(Config::parse(missing).is_err());
        let blank = format!("{}\nsource_note = \"\"", missing);
        assert!(Config::parse(&blank).is_err());
    }

    #[test]
    fn bundled_vgg_layers() {
        let layers = Config::default().load_layers().unwrap();
        assert_eq!(layers.len(), 13);
        assert_eq!(layers[0].name, "conv1_1");
        assert!(layers.iter().all(|l| l.same_padding && l.m == 4 && l.r == 3));
        assert_eq!(layers[12].channels, 512);
    }

    #[test]
    fn empty_layer_list_rejected() {
        assert!(Config::parse("layers = []").is_err());
        let cfg = Config::parse(
            "[[layers]]\nname = \"a\"\nheight = 8\nwidth = 8\nchannels = 3\nfilters = 8",
        )
        .unwrap();
        assert_eq!(cfg.load_layers().unwrap()[0].m, 4);
    }

    #[test]
    fn example_config_parses() {
        let cfg = Config::parse(include_str!("../config/example.toml")).unwrap();
        assert_eq!(cfg.timing, TimingParams::default());
        assert_eq!(cfg.noise, SweepConfig::default());
        assert_eq!(cfg.device, DeviceParams::default());
    }

    #[test]
    fn missing_dataset_names_path() {
        let cfg = Config::parse("dataset = \"/nonexistent/d.csv\"").unwrap();
        let err = cfg.load_dataset().unwrap_err();
        assert!(err.to_string().contains("/nonexistent/d.csv"));
    }
}
