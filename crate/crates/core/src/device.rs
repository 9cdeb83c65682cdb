//! Single-cell conduction model.
//!
//! An accessed cell is a resistor in series with the access transistor's
//! on-resistance, driven by the bit-line precharge. An unaccessed cell
//! contributes a state-dependent subthreshold leakage that is held as a
//! calibrated constant per state.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_R_LRS: f64 = 10e3;
pub const DEFAULT_R_HRS: f64 = 3e9;
pub const DEFAULT_LEAK_LRS: f64 = 774e-12;
pub const DEFAULT_LEAK_HRS: f64 = 28e-12;
pub const DEFAULT_V_BL: f64 = 0.1;
pub const DEFAULT_V_SET: f64 = 0.4;
pub const DEFAULT_V_RESET: f64 = -0.15;
/// Accessed-LRS current the access resistance is calibrated against.
pub const DEFAULT_LRS_CURRENT: f64 = 7.87e-6;

/// Electrical constants of one cell plus its access device and bias levels.
///
/// All values are SI (ohms, amps, volts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub r_lrs: f64,
    pub r_hrs: f64,
    /// Series on-resistance of the access transistor.
    pub r_on_access: f64,
    pub leak_unaccessed_lrs: f64,
    pub leak_unaccessed_hrs: f64,
    pub v_bl_precharge: f64,
    pub v_write_set: f64,
    pub v_write_reset: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        let r_on_access =
            calibrate_access_resistance(DEFAULT_LRS_CURRENT, DEFAULT_V_BL, DEFAULT_R_LRS)
                .expect("default calibration is feasible");
        DeviceParams {
            r_lrs: DEFAULT_R_LRS,
            r_hrs: DEFAULT_R_HRS,
            r_on_access,
            leak_unaccessed_lrs: DEFAULT_LEAK_LRS,
            leak_unaccessed_hrs: DEFAULT_LEAK_HRS,
            v_bl_precharge: DEFAULT_V_BL,
            v_write_set: DEFAULT_V_SET,
            v_write_reset: DEFAULT_V_RESET,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("r_lrs", self.r_lrs),
            ("r_hrs", self.r_hrs),
            ("r_on_access", self.r_on_access),
            ("leak_unaccessed_lrs", self.leak_unaccessed_lrs),
            ("leak_unaccessed_hrs", self.leak_unaccessed_hrs),
            ("v_bl_precharge", self.v_bl_precharge),
            ("v_write_set", self.v_write_set),
            ("v_write_reset", self.v_write_reset),
        ];
        if let Some((name, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite")));
        }
        if !(self.r_lrs > 0.0 && self.r_hrs > self.r_lrs) {
            return Err(Error::invalid(format!(
                "resistances must satisfy r_hrs > r_lrs > 0 (got r_lrs={}, r_hrs={})",
                self.r_lrs, self.r_hrs
            )));
        }
        if self.r_on_access < 0.0 {
            return Err(Error::invalid("r_on_access must be >= 0"));
        }
        if !(self.leak_unaccessed_hrs >= 0.0 && self.leak_unaccessed_lrs > self.leak_unaccessed_hrs)
            && !(self.leak_unaccessed_lrs == 0.0 && self.leak_unaccessed_hrs == 0.0)
        {
            return Err(Error::invalid(format!(
                "leakage must satisfy leak_lrs > leak_hrs >= 0 (got {}, {})",
                self.leak_unaccessed_lrs, self.leak_unaccessed_hrs
            )));
        }
        if !(self.v_write_set > self.v_bl_precharge
            && self.v_bl_precharge >= 0.0
            && self.v_write_reset < 0.0)
        {
            return Err(Error::invalid(format!(
                "bias levels must satisfy v_write_set > v_bl_precharge >= 0 > v_write_reset \
                 (got {}, {}, {})",
                self.v_write_set, self.v_bl_precharge, self.v_write_reset
            )));
        }
        Ok(())
    }

    pub fn resistance_for(&self, bit: bool) -> f64 {
        if bit {
            self.r_lrs
        } else {
            self.r_hrs
        }
    }

    pub fn leakage_for(&self, bit: bool) -> f64 {
        if bit {
            self.leak_unaccessed_lrs
        } else {
            self.leak_unaccessed_hrs
        }
    }

    /// Largest per-row leakage an unaccessed cell can add.
    pub fn max_leakage(&self) -> f64 {
        self.leak_unaccessed_lrs.max(self.leak_unaccessed_hrs)
    }

    pub fn min_leakage(&self) -> f64 {
        self.leak_unaccessed_lrs.min(self.leak_unaccessed_hrs)
    }

    /// Nominal accessed current of a cell storing `bit`.
    pub fn accessed_current(&self, bit: bool) -> f64 {
        self.v_bl_precharge / (self.resistance_for(bit) + self.r_on_access)
    }

    pub fn on_off_ratio(&self) -> f64 {
        self.r_hrs / self.r_lrs
    }

    /// Copy with `r_lrs` replaced and the LRS leakage rescaled to match.
    pub fn with_r_lrs(&self, r_lrs: f64) -> Result<Self> {
        let leak = rescale_leakage(
            self.leak_unaccessed_lrs,
            self.r_lrs,
            r_lrs,
            self.v_bl_precharge,
        )?;
        Ok(DeviceParams {
            r_lrs,
            leak_unaccessed_lrs: leak,
            ..*self
        })
    }

    /// Copy with `r_hrs` replaced and the HRS leakage rescaled to match.
    pub fn with_r_hrs(&self, r_hrs: f64) -> Result<Self> {
        let leak = rescale_leakage(
            self.leak_unaccessed_hrs,
            self.r_hrs,
            r_hrs,
            self.v_bl_precharge,
        )?;
        Ok(DeviceParams {
            r_hrs,
            leak_unaccessed_hrs: leak,
            ..*self
        })
    }
}

/// One crossbar cell. `bit == true` is the low-resistance (set) state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    bit: bool,
    resistance: f64,
}

impl CellRecord {
    /// Cell at the nominal resistance for `bit`.
    pub fn nominal(bit: bool, params: &DeviceParams) -> Self {
        CellRecord {
            bit,
            resistance: params.resistance_for(bit),
        }
    }

    /// Cell with an explicit (e.g. variation-sampled) resistance.
    pub fn with_resistance(bit: bool, resistance: f64) -> Result<Self> {
        if !(resistance > 0.0 && resistance.is_finite()) {
            return Err(Error::invalid(format!(
                "cell resistance must be positive and finite, got {resistance}"
            )));
        }
        Ok(CellRecord { bit, resistance })
    }

    pub fn bit(&self) -> bool {
        self.bit
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }
}

/// Current a cell contributes to its sense line.
///
/// Accessed cells conduct `v_bl / (R_cell + R_on)`; unaccessed cells leak the
/// calibrated per-state constant regardless of the access resistance.
pub fn cell_current(cell: &CellRecord, params: &DeviceParams, accessed: bool) -> Result<f64> {
    if !(cell.resistance > 0.0) {
        return Err(Error::invalid(format!(
            "cell resistance must be positive, got {}",
            cell.resistance
        )));
    }
    if accessed {
        if params.r_on_access < 0.0 {
            return Err(Error::invalid("r_on_access must be >= 0"));
        }
        Ok((params.v_bl_precharge / (cell.resistance + params.r_on_access)).max(0.0))
    } else {
        Ok(params.leakage_for(cell.bit).max(0.0))
    }
}

/// Access-device resistance that makes an accessed LRS cell conduct
/// exactly `target_current` at bit-line bias `v_bl`.
pub fn calibrate_access_resistance(target_current: f64, v_bl: f64, r_lrs: f64) -> Result<f64> {
    if !(target_current > 0.0 && target_current.is_finite()) {
        return Err(Error::invalid(format!(
            "calibration target must be positive, got {target_current}"
        )));
    }
    let total = v_bl / target_current;
    if !(total > r_lrs) {
        return Err(Error::InfeasibleCalibration {
            total_ohms: total,
            r_lrs,
        });
    }
    Ok(total - r_lrs)
}

/// Leakage of an unaccessed cell after its resistance moves from `r_old`
/// to `r_new`.
///
/// The calibrated leakage is read as `v_bl / (r_old + r_off)` through an
/// effective off-state series resistance `r_off`; that `r_off` is held fixed
/// while the cell resistance changes.
pub fn rescale_leakage(leak: f64, r_old: f64, r_new: f64, v_bl: f64) -> Result<f64> {
    if !(r_new > 0.0 && r_old > 0.0) {
        return Err(Error::invalid("resistances must be positive"));
    }
    if leak == 0.0 {
        return Ok(0.0);
    }
    let r_off = v_bl / leak - r_old;
    if !(r_off >= 0.0) {
        return Err(Error::invalid(format!(
            "leakage {leak} A exceeds the ohmic bound v_bl / r = {} A",
            v_bl / r_old
        )));
    }
    Ok(leak * (r_old + r_off) / (r_new + r_off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn r_on_oracle() -> f64 {
        0.1 / 7.87e-6 - 10_000.0
    }

    #[test]
    fn calibration_matches_hand_value() {
        let r = calibrate_access_resistance(7.87e-6, 0.1, 10e3).unwrap();
        assert_relative_eq!(r, r_on_oracle(), max_relative = 1e-12);
        assert!((r - 2706.48).abs() < 0.01);
    }

    #[test]
    fn calibration_half_current_doubles_total() {
        let r = calibrate_access_resistance(5e-6, 0.1, 10e3).unwrap();
        assert_relative_eq!(r, 10e3, max_relative = 1e-12);
    }

    #[test]
    fn calibration_without_series_resistance_is_infeasible() {
        let err = calibrate_access_resistance(10e-6, 0.1, 10e3).unwrap_err();
        assert!(matches!(err, Error::InfeasibleCalibration { .. }));
        assert!(calibrate_access_resistance(0.0, 0.1, 10e3).is_err());
    }

    #[test]
    fn accessed_lrs_reproduces_calibration_target() {
        let p = DeviceParams::default();
        let cell = CellRecord::nominal(true, &p);
        let i = cell_current(&cell, &p, true).unwrap();
        assert_relative_eq!(i, 7.87e-6, max_relative = 1e-15);
    }

    #[test]
    fn accessed_hrs_current() {
        let p = DeviceParams::default();
        let i = cell_current(&CellRecord::nominal(false, &p), &p, true).unwrap();
        let oracle = 0.1 / (3e9 + r_on_oracle());
        assert_relative_eq!(i, oracle, max_relative = 1e-12);
        assert!((i - 33.33e-12).abs() < 0.01e-12);
    }

    #[test]
    fn unaccessed_is_calibrated_constant() {
        let p = DeviceParams::default();
        let hrs = CellRecord::nominal(false, &p);
        let lrs = CellRecord::nominal(true, &p);
        assert_eq!(cell_current(&hrs, &p, false).unwrap(), 28e-12);
        assert_eq!(cell_current(&lrs, &p, false).unwrap(), 774e-12);

        let other = DeviceParams {
            r_on_access: 1e6,
            ..p
        };
        assert_eq!(cell_current(&lrs, &other, false).unwrap(), 774e-12);
    }

    #[test]
    fn zero_bias_zero_current() {
        let p = DeviceParams {
            v_bl_precharge: 0.0,
            ..DeviceParams::default()
        };
        for bit in [false, true] {
            let c = CellRecord::nominal(bit, &p);
            assert_eq!(cell_current(&c, &p, true).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_non_positive_resistance() {
        assert!(CellRecord::with_resistance(true, 0.0).is_err());
        assert!(CellRecord::with_resistance(true, -5.0).is_err());
        assert!(CellRecord::with_resistance(true, f64::NAN).is_err());
        let bad = CellRecord {
            bit: true,
            resistance: -1.0,
        };
        assert!(cell_current(&bad, &DeviceParams::default(), true).is_err());
    }

    #[test]
    fn defaults_validate() {
        DeviceParams::default().validate().unwrap();
        let swapped = DeviceParams {
            r_lrs: 3e9,
            r_hrs: 10e3,
            ..DeviceParams::default()
        };
        assert!(swapped.validate().is_err());
        let read_writes = DeviceParams {
            v_bl_precharge: 0.5,
            ..DeviceParams::default()
        };
        assert!(read_writes.validate().is_err());
    }

    #[test]
    fn leakage_rescale_identity_and_direction() {
        let l = rescale_leakage(774e-12, 10e3, 10e3, 0.1).unwrap();
        assert_relative_eq!(l, 774e-12, max_relative = 1e-12);
        let up = rescale_leakage(774e-12, 10e3, 1e6, 0.1).unwrap();
        let down = rescale_leakage(774e-12, 10e3, 1e3, 0.1).unwrap();
        assert!(up < 774e-12 && down > 774e-12);
        // off-resistance oracle: 0.1 / 774 pA - 10 kOhm
        let r_off = 0.1 / 774e-12 - 10e3;
        assert_relative_eq!(up, 0.1 / (1e6 + r_off), max_relative = 1e-12);
    }

    #[test]
    fn swept_params_keep_leak_ordering() {
        let p = DeviceParams::default();
        for ratio in [2.0, 10.0, 1e3, 1e6] {
            p.with_r_lrs(p.r_hrs / ratio).unwrap().validate().unwrap();
            p.with_r_hrs(p.r_lrs * ratio).unwrap().validate().unwrap();
        }
    }
}
