//! Robustness analysis: sense margins, leakage-limited array height and
//! Monte Carlo variation of the column currents and sense-amplifier nodes.

mod monte_carlo;
mod scaling;

pub use monte_carlo::{
    histogram, monte_carlo, Clusters, HistogramBin, McReport, McSetup, McSummary, SeriesStats,
    VariationSpec,
};
pub use scaling::{max_rows, sweep_on_off_ratio, RowLimit, SweepPoint, Vary};

use serde::{Deserialize, Serialize};

use crate::sense::{CurrentLevels, SenseConfig};
use crate::{Error, Result};

/// `(low, high)`: distance from each reference to the nearer of the two
/// levels it separates.
pub fn sense_margin(levels: &CurrentLevels, cfg: &SenseConfig) -> (f64, f64) {
    let low = (cfg.i_ref1 - levels.i00).min(levels.i01 - cfg.i_ref1);
    let high = (cfg.i_ref2 - levels.i01).min(levels.i11 - cfg.i_ref2);
    (low, high)
}

/// Resistive-load view of a current sense amplifier's internal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeModel {
    pub v_dd: f64,
    pub r_load: f64,
}

impl Default for NodeModel {
    fn default() -> Self {
        NodeModel {
            v_dd: 0.8,
            r_load: 40e3,
        }
    }
}

impl NodeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_dd > 0.0 && self.r_load > 0.0) {
            return Err(Error::invalid(format!(
                "v_dd and r_load must be positive (got {}, {})",
                self.v_dd, self.r_load
            )));
        }
        Ok(())
    }

    pub fn node_voltage(&self, i: f64) -> f64 {
        (self.v_dd - i * self.r_load).clamp(0.0, self.v_dd)
    }
}

/// `(v_ncell, v_nref)`. The cell node sits below the reference node exactly
/// when the cell current wins the comparison.
pub fn node_voltages(i_sl: f64, i_ref: f64, v_dd: f64, r_load: f64) -> Result<(f64, f64)> {
    let node = NodeModel { v_dd, r_load };
    node.validate()?;
    Ok((node.node_voltage(i_sl), node.node_voltage(i_ref)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::sense::comparator;
    use approx::assert_relative_eq;

    #[test]
    fn default_margins() {
        let levels = CurrentLevels::for_column(&DeviceParams::default(), 1, false).unwrap();
        let (low, high) = sense_margin(&levels, &SenseConfig::default_xor());
        assert_relative_eq!(low, (4e-6 - levels.i00).min(levels.i01 - 4e-6));
        assert_relative_eq!(high, (12e-6 - levels.i01).min(levels.i11 - 12e-6));
        assert!((low - 3.87e-6).abs() < 0.01e-6);
        assert!((high - 3.74e-6).abs() < 0.01e-6);
    }

    #[test]
    fn midpoint_margins_are_half_gaps() {
        let levels = CurrentLevels::new(1.0, 3.0, 7.0).unwrap();
        let (low, high) = sense_margin(&levels, &SenseConfig::xor(2.0, 5.0));
        assert_eq!((low, high), (1.0, 2.0));
        let (low, _) = sense_margin(&levels, &SenseConfig::xor(1.0, 5.0));
        assert_eq!(low, 0.0);
    }

    #[test]
    fn node_voltage_examples() {
        let (vc, vr) = node_voltages(7.87e-6, 4e-6, 0.8, 40e3).unwrap();
        assert_relative_eq!(vc, 0.8 - 7.87e-6 * 40e3, max_relative = 1e-12);
        assert!((vc - 0.485).abs() < 1e-3);
        assert_relative_eq!(vr, 0.64, max_relative = 1e-12);
        assert!(vc < vr && comparator(7.87e-6, 4e-6, 0.0));

        let (vc, _) = node_voltages(0.0, 1e-6, 0.8, 40e3).unwrap();
        assert_eq!(vc, 0.8);
        let (vc, vr) = node_voltages(3e-6, 3e-6, 0.8, 40e3).unwrap();
        assert_eq!(vc, vr);
        assert!(node_voltages(1e-6, 1e-6, 0.0, 40e3).is_err());
    }

    #[test]
    fn node_voltage_clamps() {
        let (vc, _) = node_voltages(1.0, 0.0, 0.8, 40e3).unwrap();
        assert_eq!(vc, 0.0);
    }
}
