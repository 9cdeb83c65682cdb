use std::fmt;

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::sense::{choose_references, CurrentLevels, SenseConfig};
use crate::{Error, Result};

/// Maximum rows a column may have before leakage breaks classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowLimit {
    Bounded(usize),
    /// No leakage, so no limit.
    Unlimited,
}

impl RowLimit {
    pub fn rows(self) -> Option<usize> {
        match self {
            RowLimit::Bounded(n) => Some(n),
            RowLimit::Unlimited => None,
        }
    }

    pub fn allows(self, rows: usize) -> bool {
        match self {
            RowLimit::Bounded(n) => rows <= n,
            RowLimit::Unlimited => true,
        }
    }
}

impl fmt::Display for RowLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLimit::Bounded(n) => write!(f, "{n}"),
            RowLimit::Unlimited => f.write_str("unlimited"),
        }
    }
}

/// Largest column height for which every accessed pair still lands on the
/// correct side of both XOR references with `margin` to spare.
///
/// A level that must stay below a threshold is checked against all
/// unaccessed cells leaking at the larger per-state constant; one that must
/// stay above is checked with the smaller constant. Leakage only adds
/// current, so the above-threshold side binds at two rows.
pub fn max_rows(params: &DeviceParams, cfg: &SenseConfig, margin: f64) -> Result<RowLimit> {
    params.validate()?;
    cfg.validate()?;
    if !(margin >= 0.0) {
        return Err(Error::invalid(format!("margin must be >= 0, got {margin}")));
    }
    let lrs = params.accessed_current(true);
    let hrs = params.accessed_current(false);
    let (i00, i01, i11) = (2.0 * hrs, lrs + hrs, 2.0 * lrs);
    let (t1, t2) = cfg.thresholds();

    // (level, threshold, must_stay_below)
    let boundaries = [
        ("00", i00, t1, true),
        ("01", i01, t1, false),
        ("11", i11, t1, false),
        ("00", i00, t2, true),
        ("01", i01, t2, true),
        ("11", i11, t2, false),
    ];

    let leak = params.max_leakage();
    let mut limit = RowLimit::Unlimited;
    for (name, level, threshold, below) in boundaries {
        if below {
            let headroom = threshold - margin - level;
            if headroom < 0.0 {
                return Err(Error::NoValidReference(format!(
                    "'{name}' level {level:e} A does not clear threshold {threshold:e} A \
                     by margin {margin:e} A"
                )));
            }
            if leak > 0.0 {
                let n = 2 + (headroom / leak).floor() as usize;
                limit = match limit {
                    RowLimit::Bounded(m) if m <= n => limit,
                    _ => RowLimit::Bounded(n),
                };
            }
        } else if !(level - margin > threshold) {
            return Err(Error::NoValidReference(format!(
                "'{name}' level {level:e} A does not exceed threshold {threshold:e} A \
                 by margin {margin:e} A"
            )));
        }
    }
    Ok(limit)
}

/// Which resistance a ratio sweep moves; the other stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    Lrs,
    Hrs,
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vary::Lrs => "lrs",
            Vary::Hrs => "hrs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub r_lrs: f64,
    pub r_hrs: f64,
    pub i_ref1: f64,
    pub i_ref2: f64,
    pub max_rows: RowLimit,
}

/// Row limit as a function of the HRS/LRS ratio.
///
/// Each point rescales one resistance (and its leakage), re-derives the
/// nominal levels and mid-gap references, then evaluates [`max_rows`].
pub fn sweep_on_off_ratio(
    ratios: &[f64],
    params: &DeviceParams,
    vary: Vary,
    margin: f64,
) -> Result<Vec<SweepPoint>> {
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::invalid(format!("ratios must be positive, got {r}")));
    }
    if ratios.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("ratios must be sorted ascending"));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let p = match vary {
                Vary::Lrs => params.with_r_lrs(params.r_hrs / ratio)?,
                Vary::Hrs => params.with_r_hrs(params.r_lrs * ratio)?,
            };
            p.validate()?;
            let levels = CurrentLevels::for_column(&p, 0, false)?;
            let (i_ref1, i_ref2) = choose_references(&levels, 0.5, 0.0)?;
            let max_rows = max_rows(&p, &SenseConfig::xor(i_ref1, i_ref2), margin)?;
            Ok(SweepPoint {
                ratio,
                r_lrs: p.r_lrs,
                r_hrs: p.r_hrs,
                i_ref1,
                i_ref2,
                max_rows,
            })
        })
        .collect()
}
