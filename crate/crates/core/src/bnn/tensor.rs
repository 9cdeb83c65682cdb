use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense `(height, width, channels)` tensor, channel index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTensor {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl RealTensor {
    pub fn new(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tensor dims must be positive, got {h}x{w}x{c}"
            )));
        }
        if data.len() != h * w * c {
            return Err(Error::DimensionMismatch(format!(
                "{h}x{w}x{c} tensor needs {} values, got {}",
                h * w * c,
                data.len()
            )));
        }
        Ok(RealTensor { h, w, c, data })
    }

    pub fn at(&self, y: usize, x: usize, ch: usize) -> f64 {
        self.data[(y * self.w + x) * self.c + ch]
    }
}

/// Sign tensor packed one bit per element; bit 1 encodes +1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTensor {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    words: Vec<u64>,
}

impl BinaryTensor {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        BinaryTensor {
            h,
            w,
            c,
            words: vec![0; (h * w * c).div_ceil(64)],
        }
    }

    pub fn from_bits(h: usize, w: usize, c: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != h * w * c {
            return Err(Error::DimensionMismatch(format!(
                "{h}x{w}x{c} tensor needs {} bits, got {}",
                h * w * c,
                bits.len()
            )));
        }
        let mut t = Self::zeros(h, w, c);
        for (i, &b) in bits.iter().enumerate() {
            t.set_index(i, b);
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, y: usize, x: usize, ch: usize) -> usize {
        (y * self.w + x) * self.c + ch
    }

    pub fn get(&self, y: usize, x: usize, ch: usize) -> bool {
        let i = self.index(y, x, ch);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, y: usize, x: usize, ch: usize, bit: bool) {
        let i = self.index(y, x, ch);
        self.set_index(i, bit);
    }

    fn set_index(&mut self, i: usize, bit: bool) {
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len())
            .map(|i| self.words[i / 64] >> (i % 64) & 1 == 1)
            .collect()
    }

    /// Window of size `kh x kw` at `(y, x)`, flattened in `(dy, dx, ch)` order.
    pub fn patch(&self, y: usize, x: usize, kh: usize, kw: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(kh * kw * self.c);
        for dy in 0..kh {
            for dx in 0..kw {
                for ch in 0..self.c {
                    out.push(self.get(y + dy, x + dx, ch));
                }
            }
        }
        out
    }

    pub fn complement(&self) -> Self {
        let bits: Vec<bool> = self.bits().into_iter().map(|b| !b).collect();
        Self::from_bits(self.h, self.w, self.c, &bits).expect("same dims")
    }
}

/// Per-output-position input magnitude map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMap {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl KMap {
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    pub fn ones(h: usize, w: usize) -> Self {
        KMap {
            h,
            w,
            data: vec![1.0; h * w],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactors {
    /// Mean absolute weight of each filter.
    pub alpha: Vec<f64>,
    pub k_map: KMap,
}

/// Binarized layer operands.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarized {
    pub input: BinaryTensor,
    pub filters: Vec<BinaryTensor>,
    pub scales: ScaleFactors,
}

fn sign_bits(t: &RealTensor) -> BinaryTensor {
    let bits: Vec<bool> = t.data.iter().map(|&v| v >= 0.0).collect();
    BinaryTensor::from_bits(t.h, t.w, t.c, &bits).expect("dims from a valid tensor")
}

/// Sign bits (zero maps to +1) and the filter's mean absolute value.
pub fn binarize_filter(filter: &RealTensor) -> (BinaryTensor, f64) {
    let alpha = filter.data.iter().map(|v| v.abs()).sum::<f64>() / filter.data.len() as f64;
    (sign_bits(filter), alpha)
}

/// Sign bits of the input and the `K` map: the channel-mean absolute input
/// averaged over every `kh x kw` window (valid positions only).
pub fn binarize_input(input: &RealTensor, kh: usize, kw: usize) -> Result<(BinaryTensor, KMap)> {
    if kh == 0 || kw == 0 || kh > input.h || kw > input.w {
        return Err(Error::DimensionMismatch(format!(
            "{kh}x{kw} window does not fit a {}x{} input",
            input.h, input.w
        )));
    }
    let a: Vec<f64> = (0..input.h * input.w)
        .map(|p| {
            input.data[p * input.c..(p + 1) * input.c]
                .iter()
                .map(|v| v.abs())
                .sum::<f64>()
                / input.c as f64
        })
        .collect();
    let (oh, ow) = (input.h - kh + 1, input.w - kw + 1);
    let mut data = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            let mut sum = 0.0;
            for dy in 0..kh {
                for dx in 0..kw {
                    sum += a[(y + dy) * input.w + x + dx];
                }
            }
            data.push(sum / (kh * kw) as f64);
        }
    }
    Ok((sign_bits(input), KMap { h: oh, w: ow, data }))
}

pub fn binarize(input: &RealTensor, filters: &[RealTensor]) -> Result<Binarized> {
    let first = filters
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no filters".into()))?;
    for f in filters {
        if (f.h, f.w, f.c) != (first.h, first.w, first.c) {
            return Err(Error::DimensionMismatch("filters differ in shape".into()));
        }
    }
    if first.c != input.c {
        return Err(Error::DimensionMismatch(format!(
            "filters have {} channels, input has {}",
            first.c, input.c
        )));
    }
    let (input_bits, k_map) = binarize_input(input, first.h, first.w)?;
    let (filter_bits, alpha): (Vec<_>, Vec<_>) = filters.iter().map(binarize_filter).unzip();
    Ok(Binarized {
        input: input_bits,
        filters: filter_bits,
        scales: ScaleFactors { alpha, k_map },
    })
}

/// Parses a dimensioned tensor file.
///
/// The first non-comment line is a header: `h w c` for one tensor or
/// `n h w c` for a stack of `n`. The remaining tokens (whitespace or comma
/// separated) are the values in `(tensor, y, x, channel)` order.
pub fn parse_tensors(text: &str, path: &Path) -> Result<Vec<RealTensor>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut header: Option<Vec<usize>> = None;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty());
        if header.is_none() {
            let dims = tokens
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(idx + 1, format!("bad header: {e}")))?;
            if !(dims.len() == 3 || dims.len() == 4) {
                return Err(err(idx + 1, "header must be `h w c` or `n h w c`".into()));
            }
            header = Some(dims);
            continue;
        }
        for t in tokens {
            let v = t
                .parse::<f64>()
                .map_err(|e| err(idx + 1, format!("bad value {t:?}: {e}")))?;
            values.push(v);
        }
    }
    let dims = header.ok_or_else(|| err(0, "missing header".into()))?;
    let (n, h, w, c) = match dims[..] {
        [h, w, c] => (1, h, w, c),
        [n, h, w, c] => (n, h, w, c),
        _ => unreachable!(),
    };
    let per = h * w * c;
    if values.len() != n * per || per == 0 || n == 0 {
        return Err(err(
            0,
            format!("header promises {} values, found {}", n * per, values.len()),
        ));
    }
    values
        .chunks(per)
        .map(|chunk| RealTensor::new(h, w, c, chunk.to_vec()))
        .collect()
}
