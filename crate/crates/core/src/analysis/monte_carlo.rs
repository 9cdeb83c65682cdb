//! Seeded Monte Carlo over cell resistance and comparator threshold
//! variation.
//!
//! Each trial draws its own ChaCha stream selected by the trial index, so a
//! report depends only on the seed and not on how trials are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NodeModel;
use crate::array::{ArrayState, BiasVector};
use crate::device::{CellRecord, DeviceParams};
use crate::sense::SenseConfig;
use crate::{Error, Result};

/// Gaussian tails are cut at this many standard deviations.
const TRUNCATE_SIGMA: f64 = 4.0;
const MIN_RESISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationSpec {
    /// Resistance spread expressed as 3 sigma / mean.
    pub r_sigma_fraction: f64,
    /// Threshold-voltage sigma of each comparator (V).
    pub vth_sigma: f64,
    /// Transconductance mapping a threshold shift onto a current offset (A/V).
    pub gm_eff: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            r_sigma_fraction: 0.10,
            vth_sigma: 25e-3,
            gm_eff: 20e-6,
            n_trials: 5000,
            seed: 42,
        }
    }
}

impl VariationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_sigma_fraction", self.r_sigma_fraction),
            ("vth_sigma", self.vth_sigma),
            ("gm_eff", self.gm_eff),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials must be >= 1"));
        }
        Ok(())
    }

    pub fn offset_sigma(&self) -> f64 {
        self.gm_eff * self.vth_sigma
    }
}

/// Array under test: `bits` is the stored matrix and `row_a`, `row_b` are
/// the two accessed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSetup {
    pub bits: Vec<Vec<bool>>,
    pub row_a: usize,
    pub row_b: usize,
    pub node: NodeModel,
}

impl McSetup {
    /// 3x3 array with columns `11`, `10`, `00` over an HRS row.
    pub fn three_by_three() -> Self {
        McSetup {
            bits: vec![
                vec![true, true, false],
                vec![true, false, false],
                vec![false, false, false],
            ],
            row_a: 0,
            row_b: 1,
            node: NodeModel::default(),
        }
    }

    pub fn rows(&self) -> usize {
        self.bits.len()
    }

    pub fn cols(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    /// Column used as the sample source for each cluster (`00`, `01`, `11`).
    fn cluster_columns(&self) -> Result<[usize; 3]> {
        let (a, b) = (&self.bits[self.row_a], &self.bits[self.row_b]);
        let find = |want: u8| {
            (0..self.cols())
                .find(|&c| a[c] as u8 + b[c] as u8 == want)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "no column has {want} set cell(s) in the accessed pair"
                    ))
                })
        };
        Ok([find(0)?, find(1)?, find(2)?])
    }
}

/// One sequence per accessed-pair class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Clusters {
    pub c00: Vec<f64>,
    pub c01: Vec<f64>,
    pub c11: Vec<f64>,
}

impl Clusters {
    pub fn named(&self) -> [(&'static str, &[f64]); 3] {
        [("00", &self.c00), ("01", &self.c01), ("11", &self.c11)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub seed: u64,
    pub n_trials: usize,
    /// Sense-line currents per cluster (A).
    pub currents: Clusters,
    /// Cell-side node voltage of the sense amplifier per cluster (V).
    pub v_ncell: Clusters,
    /// Reference-side node voltages of column 0's two comparators (V).
    pub v_nref1: Vec<f64>,
    pub v_nref2: Vec<f64>,
    /// Column evaluations whose output differs from the nominal output.
    pub failure_count: u64,
    pub evaluations: u64,
    pub failure_rate: f64,
}

struct Trial {
    currents: [f64; 3],
    v_ncell: [f64; 3],
    v_nref: [f64; 2],
    failures: u64,
}

fn truncated_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= TRUNCATE_SIGMA {
            return z;
        }
    }
}

pub fn monte_carlo(
    setup: &McSetup,
    spec: &VariationSpec,
    params: &DeviceParams,
    cfg: &SenseConfig,
) -> Result<McReport> {
    spec.validate()?;
    params.validate()?;
    cfg.validate()?;
    setup.node.validate()?;
    let nominal = ArrayState::from_bits(&setup.bits, params)?;
    let bias = BiasVector::compute(setup.rows(), setup.cols(), setup.row_a, setup.row_b, params)?;
    let clusters = setup.cluster_columns()?;
    let expected: Vec<bool> = nominal
        .column_currents(&bias, params)?
        .into_iter()
        .map(|i| cfg.sense(i))
        .collect();

    let r_frac = spec.r_sigma_fraction / 3.0;
    let off_sigma = spec.offset_sigma();

    let run_trial = |trial: usize| -> Result<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(trial as u64);

        let mut array = nominal.clone();
        for row in 0..setup.rows() {
            for col in 0..setup.cols() {
                let bit = array.cell(row, col)?.bit();
                let mean = params.resistance_for(bit);
                let r = (mean + mean * r_frac * truncated_normal(&mut rng)).max(MIN_RESISTANCE);
                array.set_cell(row, col, CellRecord::with_resistance(bit, r)?)?;
            }
        }
        let offsets: Vec<(f64, f64)> = (0..setup.cols())
            .map(|_| {
                let o1 = off_sigma * rng.sample::<f64, _>(StandardNormal);
                let o2 = off_sigma * rng.sample::<f64, _>(StandardNormal);
                (o1, o2)
            })
            .collect();

        let currents = array.column_currents(&bias, params)?;
        let mut failures = 0;
        for (col, &i) in currents.iter().enumerate() {
            let sa = SenseConfig {
                offset1: cfg.offset1 + offsets[col].0,
                offset2: cfg.offset2 + offsets[col].1,
                ..*cfg
            };
            if sa.sense(i) != expected[col] {
                failures += 1;
            }
        }
        let cluster_i = clusters.map(|c| currents[c]);
        let (t1, t2) = (
            cfg.i_ref1 + cfg.offset1 + offsets[0].0,
            cfg.i_ref2 + cfg.offset2 + offsets[0].1,
        );
        Ok(Trial {
            currents: cluster_i,
            v_ncell: cluster_i.map(|i| setup.node.node_voltage(i)),
            v_nref: [setup.node.node_voltage(t1), setup.node.node_voltage(t2)],
            failures,
        })
    };

    let trials: Vec<Trial> = (0..spec.n_trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<_>>()?;

    let mut report = McReport {
        seed: spec.seed,
        n_trials: spec.n_trials,
        currents: Clusters::default(),
        v_ncell: Clusters::default(),
        v_nref1: Vec::with_capacity(spec.n_trials),
        v_nref2: Vec::with_capacity(spec.n_trials),
        failure_count: 0,
        evaluations: (spec.n_trials * setup.cols()) as u64,
        failure_rate: 0.0,
    };
    for t in trials {
        for (dst, src) in [
            (&mut report.currents, t.currents),
            (&mut report.v_ncell, t.v_ncell),
        ] {
            dst.c00.push(src[0]);
            dst.c01.push(src[1]);
            dst.c11.push(src[2]);
        }
        report.v_nref1.push(t.v_nref[0]);
        report.v_nref2.push(t.v_nref[1]);
        report.failure_count += t.failures;
    }
    report.failure_rate = report.failure_count as f64 / report.evaluations as f64;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesStats {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SeriesStats {
            mean,
            std: var.sqrt(),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub seed: u64,
    pub n_trials: usize,
    pub failure_count: u64,
    pub evaluations: u64,
    pub failure_rate: f64,
    pub series: BTreeMap<String, SeriesStats>,
}

impl McReport {
    /// Every exported series by name, in a fixed order.
    pub fn series(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (name, s) in self.currents.named() {
            out.push((format!("i_{name}"), s));
        }
        for (name, s) in self.v_ncell.named() {
            out.push((format!("v_ncell_{name}"), s));
        }
        out.push(("v_nref1".to_string(), &self.v_nref1[..]));
        out.push(("v_nref2".to_string(), &self.v_nref2[..]));
        out
    }

    pub fn summary(&self) -> McSummary {
        McSummary {
            seed: self.seed,
            n_trials: self.n_trials,
            failure_count: self.failure_count,
            evaluations: self.evaluations,
            failure_rate: self.failure_rate,
            series: self
                .series()
                .into_iter()
                .map(|(name, s)| (name, SeriesStats::of(s)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over the sample range. A zero-width range puts
/// every sample in the first bin.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::invalid("bin count must be >= 1"));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let stats = SeriesStats::of(samples);
    let width = (stats.max - stats.min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: stats.min + b as f64 * width,
            hi: if b + 1 == bins {
                stats.max
            } else {
                stats.min + (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for &x in samples {
        let idx = if width > 0.0 {
            (((x - stats.min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[idx].count += 1;
    }
    Ok(out)
}
