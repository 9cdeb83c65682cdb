//! Throughput model of XNOR convolution against a 64-op-per-cycle CPU.

use serde::{Deserialize, Serialize};

/// XNOR operations per cycle of the CPU baseline.
pub const CPU_BASELINE_OPS: u64 = 64;

/// Fraction of full-precision operations XOR-Net removes for the
/// reference layer.
pub const XORNET_REDUCTION: f64 = 0.3984;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    /// Channels.
    pub c: u64,
    /// Filter area (width x height).
    pub n_w: u64,
    /// Input area (width x height).
    pub n_i: u64,
    /// XNOR operations per clock cycle.
    pub n_o: u64,
    pub latency_cycles: u64,
}

impl ConvSpec {
    /// Reference layer: c = 256, N_W = 14^2, N_I = 3^2, CPU width.
    ///
    /// N_W and N_I are taken as published even though a 14x14 filter over a
    /// 3x3 input is the reverse of the usual ResNet layer.
    pub const REFERENCE_LAYER: ConvSpec = ConvSpec {
        c: 256,
        n_w: 196,
        n_i: 9,
        n_o: CPU_BASELINE_OPS,
        latency_cycles: 1,
    };

    pub fn is_valid(&self) -> bool {
        self.c > 0 && self.n_w > 0 && self.n_i > 0 && self.n_o > 0 && self.latency_cycles > 0
    }

    fn binary_ops(&self) -> f64 {
        (self.c * self.n_w * self.n_i) as f64
    }
}

/// `c N_W N_I / (c N_W N_I / n_o + N_I)` for a possibly fractional `n_o`.
pub fn speedup_at(spec: &ConvSpec, n_o: f64) -> f64 {
    let ops = spec.binary_ops();
    ops / (ops / n_o + spec.n_i as f64)
}

pub fn speedup(spec: &ConvSpec) -> f64 {
    speedup_at(spec, spec.n_o as f64)
}

/// Speedup of an `n_o`-wide design needing `latency_cycles` per XNOR,
/// relative to the same layer at `baseline_n_o` single-cycle ops.
pub fn relative_speedup(n_o: u64, latency_cycles: u64, spec: &ConvSpec, baseline_n_o: u64) -> f64 {
    speedup_at(spec, n_o as f64 / latency_cycles as f64) / speedup_at(spec, baseline_n_o as f64)
}

/// Speedup with the full-precision `N_I` term cut by `reduction`.
pub fn xornet_adjusted_speedup_with(spec: &ConvSpec, reduction: f64) -> f64 {
    let ops = spec.binary_ops();
    ops / (ops / spec.n_o as f64 + spec.n_i as f64 * (1.0 - reduction))
}

pub fn xornet_adjusted_speedup(spec: &ConvSpec) -> f64 {
    xornet_adjusted_speedup_with(spec, XORNET_REDUCTION)
}

/// Published in-memory XOR designs and their latency in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceDesign {
    pub name: &'static str,
    pub technology: &'static str,
    pub additional_transistors: Option<u32>,
    pub latency_cycles: u64,
}

pub const REFERENCE_DESIGNS: [ReferenceDesign; 6] = [
    ReferenceDesign {
        name: "Pinatubo",
        technology: "CMOS",
        additional_transistors: Some(7),
        latency_cycles: 3,
    },
    ReferenceDesign {
        name: "FELIX",
        technology: "Crossbar",
        additional_transistors: None,
        latency_cycles: 3,
    },
    ReferenceDesign {
        name: "CMOS Memristive",
        technology: "CMOS",
        additional_transistors: Some(16),
        latency_cycles: 2,
    },
    ReferenceDesign {
        name: "XORiM",
        technology: "CMOS",
        additional_transistors: Some(12),
        latency_cycles: 3,
    },
    ReferenceDesign {
        name: "SiXOR",
        technology: "Memristor",
        additional_transistors: None,
        latency_cycles: 1,
    },
    ReferenceDesign {
        name: "This design",
        technology: "CMOS",
        additional_transistors: Some(13),
        latency_cycles: 1,
    },
];
