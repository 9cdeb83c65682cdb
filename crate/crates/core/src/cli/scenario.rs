//! Scenario files.
//!
//! A scenario is TOML: flat `key = value` pairs grouped under dotted section
//! names (`device.r_lrs = 10e3` or a `[device]` table). Every section is
//! optional; missing values take the built-in defaults. [`Scenario::to_toml`]
//! writes the fully resolved form, which reloads to an identical scenario.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{NodeModel, VariationSpec};
use crate::array::{format_bit_matrix, parse_bit_matrix, DEFAULT_READ_REF};
use crate::device::{calibrate_access_resistance, DeviceParams, DEFAULT_LRS_CURRENT};
use crate::sense::{logic_config, Composition, CurrentLevels, Gate, LogicOp, SenseConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// What the sense amplifiers do: a two-row logic operation or a
/// single-row memory read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Logic(LogicOp),
    Read,
}

impl FromStr for Operation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("READ") {
            Ok(Operation::Read)
        } else {
            s.parse().map(Operation::Logic)
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Logic(op) => write!(f, "{op}"),
            Operation::Read => f.write_str("READ"),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    r_lrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_hrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_on_access: Option<f64>,
    /// Accessed-LRS current to calibrate `r_on_access` against when it is
    /// not given explicitly.
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_current: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leak_unaccessed_lrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leak_unaccessed_hrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_bl_precharge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_write_set: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_write_reset: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bits: Option<Vec<String>>,
    /// Bit-matrix file, relative to the scenario file.
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_b: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SenseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_ref1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_ref2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    invert_a: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    invert_b: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<Gate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    invert_out: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    read_ref: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BnnSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filters: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    array_cols: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    device: DeviceSection,
    #[serde(default)]
    array: ArraySection,
    #[serde(default)]
    sense: SenseSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    variation: Option<VariationSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<NodeModel>,
    #[serde(default)]
    bnn: BnnSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnnFiles {
    pub input: Option<PathBuf>,
    pub filters: Option<PathBuf>,
    pub array_cols: usize,
}

/// Fully resolved simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub device: DeviceParams,
    pub bits: Vec<Vec<bool>>,
    pub row_a: usize,
    pub row_b: usize,
    pub op: Operation,
    pub sense: SenseConfig,
    pub read_ref: f64,
    pub variation: VariationSpec,
    pub node: NodeModel,
    pub bnn: BnnFiles,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

pub const DEFAULT_ARRAY_COLS: usize = 64;

impl Default for Scenario {
    fn default() -> Self {
        Scenario::from_toml("", Path::new(".")).expect("empty scenario resolves")
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Resolves scenario text; relative file references are taken from
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };

        let defaults = DeviceParams::default();
        let d = &file.device;
        let r_lrs = d.r_lrs.unwrap_or(defaults.r_lrs);
        let v_bl = d.v_bl_precharge.unwrap_or(defaults.v_bl_precharge);
        let r_on_access = match (d.r_on_access, d.calibration_current) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "device.r_on_access and device.calibration_current are mutually exclusive",
                ))
            }
            (Some(r), None) => r,
            (None, target) => {
                calibrate_access_resistance(target.unwrap_or(DEFAULT_LRS_CURRENT), v_bl, r_lrs)?
            }
        };
        let device = DeviceParams {
            r_lrs,
            r_hrs: d.r_hrs.unwrap_or(defaults.r_hrs),
            r_on_access,
            leak_unaccessed_lrs: d
                .leak_unaccessed_lrs
                .unwrap_or(defaults.leak_unaccessed_lrs),
            leak_unaccessed_hrs: d
                .leak_unaccessed_hrs
                .unwrap_or(defaults.leak_unaccessed_hrs),
            v_bl_precharge: v_bl,
            v_write_set: d.v_write_set.unwrap_or(defaults.v_write_set),
            v_write_reset: d.v_write_reset.unwrap_or(defaults.v_write_reset),
        };
        device.validate()?;

        let a = &file.array;
        let bits = match (&a.bits, &a.file) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "array.bits and array.file are mutually exclusive",
                ))
            }
            (Some(rows), None) => parse_bit_matrix(&rows.join("\n"), Path::new("<array.bits>"))?,
            (None, Some(p)) => {
                let p = resolve(p);
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                parse_bit_matrix(&text, &p)?
            }
            (None, None) => {
                let rows = a.rows.unwrap_or(3);
                let cols = a.cols.unwrap_or(3);
                if rows == 0 || cols == 0 {
                    return Err(config_err("array.rows and array.cols must be >= 1"));
                }
                vec![vec![false; cols]; rows]
            }
        };
        if let Some(rows) = a.rows.filter(|&r| r != bits.len()) {
            return Err(config_err(format!(
                "array.rows = {rows} but the bit matrix has {} rows",
                bits.len()
            )));
        }
        if let Some(cols) = a.cols.filter(|&c| c != bits[0].len()) {
            return Err(config_err(format!(
                "array.cols = {cols} but the bit matrix has {} columns",
                bits[0].len()
            )));
        }
        let row_a = a.row_a.unwrap_or(0);
        let row_b = a.row_b.unwrap_or(1);

        let s = &file.sense;
        let op: Operation = s.op.as_deref().unwrap_or("XOR").parse()?;
        let read_ref = s.read_ref.unwrap_or(DEFAULT_READ_REF);
        let sense = match op {
            Operation::Logic(logic) => {
                if bits.len() < 2 {
                    return Err(config_err(format!(
                        "{logic} needs two accessed rows, the array has {}",
                        bits.len()
                    )));
                }
                if row_a == row_b || row_a >= bits.len() || row_b >= bits.len() {
                    return Err(config_err(format!(
                        "array.row_a = {row_a}, array.row_b = {row_b} must be distinct rows of a \
                         {}-row array",
                        bits.len()
                    )));
                }
                let levels = CurrentLevels::for_column(&device, bits.len() - 2, false)?;
                let mut cfg = logic_config(logic, &levels)?;
                match (s.i_ref1, s.i_ref2) {
                    (Some(r1), Some(r2)) => {
                        cfg.i_ref1 = r1;
                        cfg.i_ref2 = r2;
                    }
                    (None, None) => {}
                    _ => {
                        return Err(config_err(
                            "set both sense.i_ref1 and sense.i_ref2, or neither",
                        ))
                    }
                }
                cfg.offset1 = s.offset1.unwrap_or(0.0);
                cfg.offset2 = s.offset2.unwrap_or(0.0);
                cfg.composition = Composition {
                    invert_a: s.invert_a.unwrap_or(cfg.composition.invert_a),
                    invert_b: s.invert_b.unwrap_or(cfg.composition.invert_b),
                    gate: s.gate.unwrap_or(cfg.composition.gate),
                    invert_out: s.invert_out.unwrap_or(cfg.composition.invert_out),
                };
                cfg
            }
            Operation::Read => SenseConfig {
                i_ref1: read_ref,
                i_ref2: read_ref,
                offset1: 0.0,
                offset2: 0.0,
                composition: Composition::PLAIN_AND,
            },
        };
        sense.validate()?;

        let variation = file.variation.unwrap_or_default();
        variation.validate()?;
        let node = file.node.unwrap_or_default();
        node.validate()?;

        let bnn = BnnFiles {
            input: file.bnn.input.as_deref().map(resolve),
            filters: file.bnn.filters.as_deref().map(resolve),
            array_cols: file.bnn.array_cols.unwrap_or(DEFAULT_ARRAY_COLS),
        };
        if bnn.array_cols == 0 {
            return Err(config_err("bnn.array_cols must be >= 1"));
        }

        Ok(Scenario {
            device,
            bits,
            row_a,
            row_b,
            op,
            sense,
            read_ref,
            variation,
            node,
            bnn,
            out_dir: file.output.dir.unwrap_or_else(|| PathBuf::from("out")),
            format: file.output.format.unwrap_or_default(),
        })
    }

    pub fn rows(&self) -> usize {
        self.bits.len()
    }

    pub fn cols(&self) -> usize {
        self.bits[0].len()
    }

    /// Fully explicit TOML for this scenario. File paths are written as
    /// resolved.
    pub fn to_toml(&self) -> String {
        let d = &self.device;
        let s = &self.sense;
        let file = ScenarioFile {
            device: DeviceSection {
                r_lrs: Some(d.r_lrs),
                r_hrs: Some(d.r_hrs),
                r_on_access: Some(d.r_on_access),
                calibration_current: None,
                leak_unaccessed_lrs: Some(d.leak_unaccessed_lrs),
                leak_unaccessed_hrs: Some(d.leak_unaccessed_hrs),
                v_bl_precharge: Some(d.v_bl_precharge),
                v_write_set: Some(d.v_write_set),
                v_write_reset: Some(d.v_write_reset),
            },
            array: ArraySection {
                rows: Some(self.rows()),
                cols: Some(self.cols()),
                bits: Some(
                    format_bit_matrix(&self.bits)
                        .lines()
                        .map(str::to_string)
                        .collect(),
                ),
                file: None,
                row_a: Some(self.row_a),
                row_b: Some(self.row_b),
            },
            sense: match self.op {
                Operation::Logic(op) => SenseSection {
                    op: Some(op.to_string()),
                    i_ref1: Some(s.i_ref1),
                    i_ref2: Some(s.i_ref2),
                    offset1: Some(s.offset1),
                    offset2: Some(s.offset2),
                    invert_a: Some(s.composition.invert_a),
                    invert_b: Some(s.composition.invert_b),
                    gate: Some(s.composition.gate),
                    invert_out: Some(s.composition.invert_out),
                    read_ref: Some(self.read_ref),
                },
                Operation::Read => SenseSection {
                    op: Some("READ".into()),
                    read_ref: Some(self.read_ref),
                    ..SenseSection::default()
                },
            },
            variation: Some(self.variation),
            node: Some(self.node),
            bnn: BnnSection {
                input: self.bnn.input.clone(),
                filters: self.bnn.filters.clone(),
                array_cols: Some(self.bnn.array_cols),
            },
            output: OutputSection {
                dir: Some(self.out_dir.clone()),
                format: Some(self.format),
            },
        };
        toml::to_string(&file).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_uses_defaults() {
        let s = Scenario::default();
        assert_eq!(s.device, DeviceParams::default());
        assert_eq!((s.rows(), s.cols()), (3, 3));
        assert_eq!(s.op, Operation::Logic(LogicOp::Xor));
        assert_eq!(s.variation, VariationSpec::default());
    }

    #[test]
    fn dotted_keys_and_tables_agree() {
        let dotted = "device.r_hrs = 1e9\nsense.op = \"XNOR\"\narray.bits = [\"10\", \"11\"]\n";
        let tables =
            "[device]\nr_hrs = 1e9\n[sense]\nop = \"XNOR\"\n[array]\nbits = [\"10\", \"11\"]\n";
        let a = Scenario::from_toml(dotted, Path::new(".")).unwrap();
        let b = Scenario::from_toml(tables, Path::new(".")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.device.r_hrs, 1e9);
        assert!(a.sense.composition.invert_out);
    }

    #[test]
    fn resolved_form_round_trips() {
        let text =
            "array.bits = [\"110\", \"100\", \"000\"]\nsense.i_ref1 = 4e-6\nsense.i_ref2 = 12e-6\n\
                    variation.seed = 9\n";
        let s = Scenario::from_toml(text, Path::new(".")).unwrap();
        let again = Scenario::from_toml(&s.to_toml(), Path::new(".")).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "array.bits = [\"101\"]\nsense.op = \"XOR\"\n",
            "sense.op = \"MAJ\"\n",
            "device.r_lrs = -1.0\n",
            "device.unknown = 1\n",
            "sense.i_ref1 = 4e-6\n",
            "array.rows = 4\narray.bits = [\"1\", \"0\"]\n",
            "array.row_a = 1\narray.row_b = 1\n",
            "device.calibration_current = 1e-5\n",
            "variation.n_trials = 0\n",
            "not toml at all [",
        ];
        for text in bad {
            assert!(Scenario::from_toml(text, Path::new(".")).is_err(), "{text}");
        }
    }

    #[test]
    fn single_row_read_is_allowed() {
        let s = Scenario::from_toml(
            "array.bits = [\"101\"]\nsense.op = \"READ\"\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(s.op, Operation::Read);
    }
}
