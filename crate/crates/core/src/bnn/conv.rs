use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::popcount_dot;
use super::tensor::{BinaryTensor, ScaleFactors};
use crate::array::ArrayState;
use crate::device::DeviceParams;
use crate::sense::{logic_config, CurrentLevels, LogicOp};
use crate::{Error, Result};

/// Valid, stride-1 convolution result laid out `(y, x, filter)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvOutput {
    pub out_h: usize,
    pub out_w: usize,
    pub n_filters: usize,
    /// Integer ±1 dot products before scaling.
    pub raw: Vec<i64>,
    pub values: Vec<f64>,
    /// Array compute cycles; zero for the oracle.
    pub compute_cycles: u64,
    /// Single-cell write operations used to load operands; zero for the oracle.
    pub write_ops: u64,
}

impl ConvOutput {
    fn index(&self, y: usize, x: usize, f: usize) -> usize {
        (y * self.out_w + x) * self.n_filters + f
    }

    pub fn raw_at(&self, y: usize, x: usize, f: usize) -> i64 {
        self.raw[self.index(y, x, f)]
    }

    pub fn value_at(&self, y: usize, x: usize, f: usize) -> f64 {
        self.values[self.index(y, x, f)]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("y,x,filter,raw,value\n");
        for y in 0..self.out_h {
            for x in 0..self.out_w {
                for f in 0..self.n_filters {
                    s.push_str(&format!(
                        "{y},{x},{f},{},{}\n",
                        self.raw_at(y, x, f),
                        self.value_at(y, x, f)
                    ));
                }
            }
        }
        s
    }
}

struct Geometry {
    kh: usize,
    kw: usize,
    out_h: usize,
    out_w: usize,
}

fn check_shapes(
    input: &BinaryTensor,
    filters: &[BinaryTensor],
    scales: &ScaleFactors,
) -> Result<Geometry> {
    let first = filters
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no filters".into()))?;
    let (kh, kw) = (first.h, first.w);
    if filters.iter().any(|f| (f.h, f.w, f.c) != (kh, kw, first.c)) {
        return Err(Error::DimensionMismatch("filters differ in shape".into()));
    }
    if first.c != input.c || kh > input.h || kw > input.w || kh == 0 || kw == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{kh}x{kw}x{} filter does not fit a {}x{}x{} input",
            first.c, input.h, input.w, input.c
        )));
    }
    let (out_h, out_w) = (input.h - kh + 1, input.w - kw + 1);
    if scales.alpha.len() != filters.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} alpha values for {} filters",
            scales.alpha.len(),
            filters.len()
        )));
    }
    if (scales.k_map.h, scales.k_map.w) != (out_h, out_w) {
        return Err(Error::DimensionMismatch(format!(
            "K map is {}x{}, output is {out_h}x{out_w}",
            scales.k_map.h, scales.k_map.w
        )));
    }
    Ok(Geometry {
        kh,
        kw,
        out_h,
        out_w,
    })
}

fn assemble(
    g: &Geometry,
    n_filters: usize,
    per_filter: Vec<Vec<i64>>,
    scales: &ScaleFactors,
) -> (Vec<i64>, Vec<f64>) {
    let mut raw = vec![0; g.out_h * g.out_w * n_filters];
    let mut values = vec![0.0; raw.len()];
    for (f, dots) in per_filter.into_iter().enumerate() {
        for (pos, dot) in dots.into_iter().enumerate() {
            let (y, x) = (pos / g.out_w, pos % g.out_w);
            let i = pos * n_filters + f;
            raw[i] = dot;
            values[i] = dot as f64 * scales.alpha[f] * scales.k_map.at(y, x);
        }
    }
    (raw, values)
}

/// Binary convolution evaluated on a two-row array.
///
/// For each filter and output position, the flattened filter goes into row 0
/// and the input patch into row 1, `array_cols` bits at a time. Each chunk
/// costs one XNOR compute cycle; the popcount of the sensed bits gives the
/// match count. Filters run on independent arrays in parallel.
pub fn xnor_conv2d_sim(
    input: &BinaryTensor,
    filters: &[BinaryTensor],
    scales: &ScaleFactors,
    array_cols: usize,
    params: &DeviceParams,
) -> Result<ConvOutput> {
    if array_cols == 0 {
        return Err(Error::invalid("array_cols must be >= 1"));
    }
    let g = check_shapes(input, filters, scales)?;
    let levels = CurrentLevels::for_column(params, 0, false)?;
    let xnor = logic_config(LogicOp::Xnor, &levels)?;

    let per_filter: Vec<(Vec<i64>, u64, u64)> = filters
        .par_iter()
        .map(|filter| {
            let mut array = ArrayState::new(2, array_cols, params)?;
            let weights = filter.patch(0, 0, g.kh, g.kw);
            let mut writes = 0u64;
            let mut dots = Vec::with_capacity(g.out_h * g.out_w);
            for y in 0..g.out_h {
                for x in 0..g.out_w {
                    let patch = input.patch(y, x, g.kh, g.kw);
                    let mut matches = 0u32;
                    for (w_chunk, p_chunk) in
                        weights.chunks(array_cols).zip(patch.chunks(array_cols))
                    {
                        array.write_row(0, w_chunk, params)?;
                        array.write_row(1, p_chunk, params)?;
                        writes += 2 * w_chunk.len() as u64;
                        let sensed = array.compute_cycle(0, 1, &xnor, params)?;
                        matches += sensed[..w_chunk.len()].iter().filter(|&&b| b).count() as u32;
                    }
                    dots.push(popcount_dot(matches, weights.len() as u32));
                }
            }
            Ok((dots, array.cycles(), writes))
        })
        .collect::<Result<_>>()?;

    let compute_cycles = per_filter.iter().map(|t| t.1).sum();
    let write_ops = per_filter.iter().map(|t| t.2).sum();
    let dots = per_filter.into_iter().map(|t| t.0).collect();
    let (raw, values) = assemble(&g, filters.len(), dots, scales);
    Ok(ConvOutput {
        out_h: g.out_h,
        out_w: g.out_w,
        n_filters: filters.len(),
        raw,
        values,
        compute_cycles,
        write_ops,
    })
}

/// Same contract as [`xnor_conv2d_sim`], by direct ±1 multiply-accumulate.
pub fn xnor_conv2d_oracle(
    input: &BinaryTensor,
    filters: &[BinaryTensor],
    scales: &ScaleFactors,
) -> Result<ConvOutput> {
    let g = check_shapes(input, filters, scales)?;
    let pm = |b: bool| if b { 1i64 } else { -1 };
    let dots = filters
        .iter()
        .map(|f| {
            let mut out = Vec::with_capacity(g.out_h * g.out_w);
            for y in 0..g.out_h {
                for x in 0..g.out_w {
                    let mut acc = 0i64;
                    for dy in 0..g.kh {
                        for dx in 0..g.kw {
                            for ch in 0..input.c {
                                acc += pm(f.get(dy, dx, ch)) * pm(input.get(y + dy, x + dx, ch));
                            }
                        }
                    }
                    out.push(acc);
                }
            }
            out
        })
        .collect();
    let (raw, values) = assemble(&g, filters.len(), dots, scales);
    Ok(ConvOutput {
        out_h: g.out_h,
        out_w: g.out_w,
        n_filters: filters.len(),
        raw,
        values,
        compute_cycles: 0,
        write_ops: 0,
    })
}
