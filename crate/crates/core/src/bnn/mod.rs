//! Binary convolution (XNOR + popcount) executed on the simulated array,
//! a direct software oracle for it, and the XNOR-convolution speedup model.

mod conv;
mod speedup;
mod tensor;

pub use conv::{xnor_conv2d_oracle, xnor_conv2d_sim, ConvOutput};
pub use speedup::{
    relative_speedup, speedup, speedup_at, xornet_adjusted_speedup, xornet_adjusted_speedup_with,
    ConvSpec, ReferenceDesign, CPU_BASELINE_OPS, REFERENCE_DESIGNS, XORNET_REDUCTION,
};
pub use tensor::{
    binarize, binarize_filter, binarize_input, parse_tensors, Binarized, BinaryTensor, KMap,
    RealTensor, ScaleFactors,
};

/// `dot(a, b)` of two ±1 vectors from the popcount of their bitwise XNOR.
pub fn popcount_dot(matches: u32, len: u32) -> i64 {
    2 * matches as i64 - len as i64
}
