//! Two-comparator sense amplifier.
//!
//! The sense-line current is mirrored into two current comparators, each
//! with its own reference. Their outputs pass through optional inverters and
//! a two-input gate, with an optional output inverter. With references
//! straddling the `00|01` and `01|11` gaps and the second comparator
//! inverted into an AND gate, the output is the XOR of the accessed pair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::{Error, Result};

/// XOR preset references used for the 3x3 demonstration array.
pub const DEFAULT_I_REF1: f64 = 4e-6;
pub const DEFAULT_I_REF2: f64 = 12e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gate {
    And,
    Or,
    Nand,
    Nor,
}

impl Gate {
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Gate::And => a && b,
            Gate::Or => a || b,
            Gate::Nand => !(a && b),
            Gate::Nor => !(a || b),
        }
    }
}

/// Inversions and gate that combine the two comparator bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    #[serde(default)]
    pub invert_a: bool,
    #[serde(default)]
    pub invert_b: bool,
    pub gate: Gate,
    #[serde(default)]
    pub invert_out: bool,
}

impl Composition {
    pub const PLAIN_AND: Composition = Composition {
        invert_a: false,
        invert_b: false,
        gate: Gate::And,
        invert_out: false,
    };

    pub fn apply(&self, a: bool, b: bool) -> bool {
        self.gate.eval(a ^ self.invert_a, b ^ self.invert_b) ^ self.invert_out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseConfig {
    pub i_ref1: f64,
    pub i_ref2: f64,
    #[serde(default)]
    pub offset1: f64,
    #[serde(default)]
    pub offset2: f64,
    pub composition: Composition,
}

impl SenseConfig {
    pub fn xor(i_ref1: f64, i_ref2: f64) -> Self {
        SenseConfig {
            i_ref1,
            i_ref2,
            offset1: 0.0,
            offset2: 0.0,
            composition: LogicOp::Xor.composition(),
        }
    }

    pub fn xnor(i_ref1: f64, i_ref2: f64) -> Self {
        SenseConfig {
            composition: LogicOp::Xnor.composition(),
            ..Self::xor(i_ref1, i_ref2)
        }
    }

    /// XOR with the 4 uA / 12 uA references of the 3x3 demonstration.
    pub fn default_xor() -> Self {
        Self::xor(DEFAULT_I_REF1, DEFAULT_I_REF2)
    }

    pub fn default_xnor() -> Self {
        Self::xnor(DEFAULT_I_REF1, DEFAULT_I_REF2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_ref1 > 0.0 && self.i_ref2 > 0.0) {
            return Err(Error::invalid(format!(
                "reference currents must be positive (got {}, {})",
                self.i_ref1, self.i_ref2
            )));
        }
        if !(self.i_ref1.is_finite()
            && self.i_ref2.is_finite()
            && self.offset1.is_finite()
            && self.offset2.is_finite())
        {
            return Err(Error::invalid("sense configuration must be finite"));
        }
        Ok(())
    }

    /// Effective decision thresholds including comparator offsets.
    pub fn thresholds(&self) -> (f64, f64) {
        (self.i_ref1 + self.offset1, self.i_ref2 + self.offset2)
    }

    pub fn sense(&self, i_sl: f64) -> bool {
        sense(i_sl, self)
    }
}

/// Nominal sense-line currents of the three distinguishable accessed pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentLevels {
    pub i00: f64,
    pub i01: f64,
    pub i11: f64,
}

impl CurrentLevels {
    pub fn new(i00: f64, i01: f64, i11: f64) -> Result<Self> {
        let levels = CurrentLevels { i00, i01, i11 };
        levels.validate()?;
        Ok(levels)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i00 < self.i01 && self.i01 < self.i11) || !self.i11.is_finite() {
            return Err(Error::NoValidReference(format!(
                "current levels must satisfy i00 < i01 < i11 (got {:e}, {:e}, {:e})",
                self.i00, self.i01, self.i11
            )));
        }
        Ok(())
    }

    /// Levels of a column with two accessed cells and `unaccessed` other
    /// cells, all of them storing `fill`.
    pub fn for_column(params: &DeviceParams, unaccessed: usize, fill: bool) -> Result<Self> {
        let leak = unaccessed as f64 * params.leakage_for(fill);
        let lrs = params.accessed_current(true);
        let hrs = params.accessed_current(false);
        Self::new(2.0 * hrs + leak, lrs + hrs + leak, 2.0 * lrs + leak)
    }

    /// Current for the accessed pair `(a, b)`.
    pub fn for_pair(&self, a: bool, b: bool) -> f64 {
        match (a, b) {
            (false, false) => self.i00,
            (true, true) => self.i11,
            _ => self.i01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LogicOp {
    Xor,
    Xnor,
    And,
    Nand,
    Or,
    Nor,
}

impl LogicOp {
    pub const ALL: [LogicOp; 6] = [
        LogicOp::Xor,
        LogicOp::Xnor,
        LogicOp::And,
        LogicOp::Nand,
        LogicOp::Or,
        LogicOp::Nor,
    ];

    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            LogicOp::Xor => a ^ b,
            LogicOp::Xnor => !(a ^ b),
            LogicOp::And => a && b,
            LogicOp::Nand => !(a && b),
            LogicOp::Or => a || b,
            LogicOp::Nor => !(a || b),
        }
    }

    pub fn composition(self) -> Composition {
        let inverted = matches!(self, LogicOp::Xnor | LogicOp::Nand | LogicOp::Nor);
        let invert_b = matches!(self, LogicOp::Xor | LogicOp::Xnor);
        Composition {
            invert_a: false,
            invert_b,
            gate: Gate::And,
            invert_out: inverted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogicOp::Xor => "XOR",
            LogicOp::Xnor => "XNOR",
            LogicOp::And => "AND",
            LogicOp::Nand => "NAND",
            LogicOp::Or => "OR",
            LogicOp::Nor => "NOR",
        }
    }
}

impl fmt::Display for LogicOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LogicOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LogicOp::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown logic operation {s:?}")))
    }
}

/// Sensed output for each accessed pair, indexed `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable(pub [bool; 4]);

impl TruthTable {
    pub fn of_op(op: LogicOp) -> Self {
        TruthTable(PAIRS.map(|(a, b)| op.eval(a, b)))
    }

    pub fn get(&self, a: bool, b: bool) -> bool {
        self.0[(a as usize) << 1 | b as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = (bool, bool, bool)> + '_ {
        PAIRS.iter().zip(self.0).map(|(&(a, b), out)| (a, b, out))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("a,b,out\n");
        for (a, b, out) in self.rows() {
            s.push_str(&format!("{},{},{}\n", a as u8, b as u8, out as u8));
        }
        s
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b, out) in self.rows() {
            writeln!(f, "{}{} -> {}", a as u8, b as u8, out as u8)?;
        }
        Ok(())
    }
}

pub const PAIRS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

/// Current comparator: 1 iff the sense-line current exceeds the reference
/// plus offset. Ties resolve to 0.
pub fn comparator(i_sl: f64, i_ref: f64, offset: f64) -> bool {
    i_sl > i_ref + offset
}

pub fn sense(i_sl: f64, cfg: &SenseConfig) -> bool {
    let a = comparator(i_sl, cfg.i_ref1, cfg.offset1);
    let b = comparator(i_sl, cfg.i_ref2, cfg.offset2);
    cfg.composition.apply(a, b)
}

/// Places one reference inside each gap of `levels`.
///
/// `leak_span` is the worst-case extra current leakage can add to a level;
/// each reference sits at `placement` of the way from the leak-raised lower
/// level to the next level up.
pub fn choose_references(
    levels: &CurrentLevels,
    placement: f64,
    leak_span: f64,
) -> Result<(f64, f64)> {
    levels.validate()?;
    if !(placement > 0.0 && placement < 1.0) {
        return Err(Error::invalid(format!(
            "placement must lie in (0, 1), got {placement}"
        )));
    }
    if !(leak_span >= 0.0) {
        return Err(Error::invalid("leak span must be >= 0"));
    }
    let place = |lo: f64, hi: f64, gap: &str| {
        let floor = lo + leak_span;
        if floor >= hi {
            return Err(Error::NoValidReference(format!(
                "leakage span {leak_span:e} A closes the {gap} gap"
            )));
        }
        Ok(floor + placement * (hi - floor))
    };
    let r1 = place(levels.i00, levels.i01, "00|01")?;
    let r2 = place(levels.i01, levels.i11, "01|11")?;
    Ok((r1, r2))
}

/// Sense configuration realising `op` on the accessed pair.
pub fn logic_config(op: LogicOp, levels: &CurrentLevels) -> Result<SenseConfig> {
    let (low, high) = choose_references(levels, 0.5, 0.0)?;
    let (i_ref1, i_ref2) = match op {
        LogicOp::Xor | LogicOp::Xnor => (low, high),
        LogicOp::And | LogicOp::Nand => (high, high),
        LogicOp::Or | LogicOp::Nor => (low, low),
    };
    Ok(SenseConfig {
        i_ref1,
        i_ref2,
        offset1: 0.0,
        offset2: 0.0,
        composition: op.composition(),
    })
}

pub fn truth_table(cfg: &SenseConfig, levels: &CurrentLevels) -> TruthTable {
    TruthTable(PAIRS.map(|(a, b)| sense(levels.for_pair(a, b), cfg)))
}
