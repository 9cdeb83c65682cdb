//! Crossbar state and access modes.
//!
//! Memory mode asserts one word line: a write drives the target bit line to
//! the set or reset level, a read precharges every bit line and senses one
//! cell. Compute mode asserts two word lines with precharged bit lines, so
//! each sense line carries the sum of both accessed cells plus the leakage
//! of every unaccessed cell in that column.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{cell_current, CellRecord, DeviceParams};
use crate::sense::SenseConfig;
use crate::{Error, Result};

/// Default single-cell read reference.
pub const DEFAULT_READ_REF: f64 = 2e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiasMode {
    MemoryWrite,
    MemoryRead,
    Compute,
}

/// Word-line and bit-line levels applied for one access. Sense lines are
/// held at 0 V in every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub wl_asserted: Vec<bool>,
    pub v_bl: Vec<f64>,
    pub mode: BiasMode,
}

impl BiasVector {
    fn precharged(rows: usize, cols: usize, params: &DeviceParams, mode: BiasMode) -> Self {
        BiasVector {
            wl_asserted: vec![false; rows],
            v_bl: vec![params.v_bl_precharge; cols],
            mode,
        }
    }

    pub fn compute(
        rows: usize,
        cols: usize,
        row_a: usize,
        row_b: usize,
        params: &DeviceParams,
    ) -> Result<Self> {
        if row_a == row_b {
            return Err(Error::InvalidBias(format!(
                "compute mode needs two distinct rows, got {row_a} twice"
            )));
        }
        let mut bias = Self::precharged(rows, cols, params, BiasMode::Compute);
        for r in [row_a, row_b] {
            check_bounds(r, 0, rows, cols)?;
            bias.wl_asserted[r] = true;
        }
        Ok(bias)
    }

    pub fn read(rows: usize, cols: usize, row: usize, params: &DeviceParams) -> Result<Self> {
        check_bounds(row, 0, rows, cols)?;
        let mut bias = Self::precharged(rows, cols, params, BiasMode::MemoryRead);
        bias.wl_asserted[row] = true;
        Ok(bias)
    }

    pub fn write(
        rows: usize,
        cols: usize,
        row: usize,
        col: usize,
        bit: bool,
        params: &DeviceParams,
    ) -> Result<Self> {
        check_bounds(row, col, rows, cols)?;
        let mut bias = Self::precharged(rows, cols, params, BiasMode::MemoryWrite);
        bias.wl_asserted[row] = true;
        bias.v_bl[col] = if bit {
            params.v_write_set
        } else {
            params.v_write_reset
        };
        Ok(bias)
    }

    pub fn asserted_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.wl_asserted
            .iter()
            .enumerate()
            .filter_map(|(r, &on)| on.then_some(r))
    }

    pub fn validate(&self, rows: usize, cols: usize, params: &DeviceParams) -> Result<()> {
        if self.wl_asserted.len() != rows || self.v_bl.len() != cols {
            return Err(Error::InvalidBias(format!(
                "bias is {}x{} but the array is {rows}x{cols}",
                self.wl_asserted.len(),
                self.v_bl.len()
            )));
        }
        let asserted = self.asserted_rows().count();
        let expected = match self.mode {
            BiasMode::Compute => 2,
            BiasMode::MemoryRead | BiasMode::MemoryWrite => 1,
        };
        if asserted != expected {
            return Err(Error::InvalidBias(format!(
                "{:?} asserts {asserted} word lines, expected {expected}",
                self.mode
            )));
        }
        if self.mode != BiasMode::MemoryWrite
            && self.v_bl.iter().any(|&v| v != params.v_bl_precharge)
        {
            return Err(Error::InvalidBias(format!(
                "{:?} requires every bit line at the precharge level",
                self.mode
            )));
        }
        Ok(())
    }
}

fn check_bounds(row: usize, col: usize, rows: usize, cols: usize) -> Result<()> {
    if row >= rows || col >= cols {
        return Err(Error::OutOfBounds {
            row,
            col,
            rows,
            cols,
        });
    }
    Ok(())
}

/// Row-major crossbar contents plus a compute-cycle counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayState {
    rows: usize,
    cols: usize,
    cells: Vec<CellRecord>,
    cycles: u64,
}

impl ArrayState {
    /// Array with every cell in the high-resistance (`0`) state.
    pub fn new(rows: usize, cols: usize, params: &DeviceParams) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "array must have at least one row and column, got {rows}x{cols}"
            )));
        }
        Ok(ArrayState {
            rows,
            cols,
            cells: vec![CellRecord::nominal(false, params); rows * cols],
            cycles: 0,
        })
    }

    pub fn from_bits(bits: &[Vec<bool>], params: &DeviceParams) -> Result<Self> {
        let cols = bits.first().map_or(0, Vec::len);
        if let Some(r) = bits.iter().position(|row| row.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {r} has {} bits, expected {cols}",
                bits[r].len()
            )));
        }
        let mut array = Self::new(bits.len(), cols, params)?;
        for (cell, &bit) in array.cells.iter_mut().zip(bits.iter().flatten()) {
            *cell = CellRecord::nominal(bit, params);
        }
        Ok(array)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Compute cycles issued against this array.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<&CellRecord> {
        check_bounds(row, col, self.rows, self.cols)?;
        Ok(&self.cells[row * self.cols + col])
    }

    /// Replaces a cell directly, bypassing the write path (used to inject
    /// sampled resistances).
    pub fn set_cell(&mut self, row: usize, col: usize, cell: CellRecord) -> Result<()> {
        check_bounds(row, col, self.rows, self.cols)?;
        self.cells[row * self.cols + col] = cell;
        Ok(())
    }

    pub fn bits(&self) -> Vec<Vec<bool>> {
        self.cells
            .chunks(self.cols)
            .map(|row| row.iter().map(CellRecord::bit).collect())
            .collect()
    }

    pub fn row_bits(&self, row: usize) -> Result<Vec<bool>> {
        check_bounds(row, 0, self.rows, self.cols)?;
        let start = row * self.cols;
        Ok(self.cells[start..start + self.cols]
            .iter()
            .map(CellRecord::bit)
            .collect())
    }

    /// Applies a write bias. A cell switches only when its word line is
    /// asserted and its bit line reaches a write threshold.
    pub fn apply_write_bias(&mut self, bias: &BiasVector, params: &DeviceParams) -> Result<()> {
        if bias.mode != BiasMode::MemoryWrite {
            return Err(Error::InvalidBias(format!(
                "{:?} bias cannot change cell state",
                bias.mode
            )));
        }
        bias.validate(self.rows, self.cols, params)?;
        let rows: Vec<usize> = bias.asserted_rows().collect();
        for row in rows {
            for (col, &v) in bias.v_bl.iter().enumerate() {
                let next = if v >= params.v_write_set {
                    Some(true)
                } else if v <= params.v_write_reset {
                    Some(false)
                } else {
                    None
                };
                if let Some(bit) = next {
                    self.cells[row * self.cols + col] = CellRecord::nominal(bit, params);
                }
            }
        }
        Ok(())
    }

    pub fn write_bit(
        &mut self,
        row: usize,
        col: usize,
        bit: bool,
        params: &DeviceParams,
    ) -> Result<()> {
        let bias = BiasVector::write(self.rows, self.cols, row, col, bit, params)?;
        self.apply_write_bias(&bias, params)
    }

    /// Writes a whole row, one cell at a time.
    pub fn write_row(&mut self, row: usize, bits: &[bool], params: &DeviceParams) -> Result<()> {
        if bits.len() > self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} bits do not fit in {} columns",
                bits.len(),
                self.cols
            )));
        }
        for (col, &bit) in bits.iter().enumerate() {
            self.write_bit(row, col, bit, params)?;
        }
        Ok(())
    }

    /// Sum of every cell's contribution to the sense line of `col`.
    pub fn column_current(
        &self,
        bias: &BiasVector,
        col: usize,
        params: &DeviceParams,
    ) -> Result<f64> {
        bias.validate(self.rows, self.cols, params)?;
        check_bounds(0, col, self.rows, self.cols)?;
        self.column_current_unchecked(&bias.wl_asserted, col, params)
    }

    fn column_current_unchecked(
        &self,
        wl_asserted: &[bool],
        col: usize,
        params: &DeviceParams,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (row, &on) in wl_asserted.iter().enumerate() {
            total += cell_current(&self.cells[row * self.cols + col], params, on)?;
        }
        Ok(total)
    }

    pub fn column_currents(&self, bias: &BiasVector, params: &DeviceParams) -> Result<Vec<f64>> {
        bias.validate(self.rows, self.cols, params)?;
        (0..self.cols)
            .map(|col| self.column_current_unchecked(&bias.wl_asserted, col, params))
            .collect()
    }

    /// Reads one cell against `read_ref`. The reference must separate the
    /// worst-case HRS column from the best-case LRS column.
    pub fn read_bit(
        &self,
        row: usize,
        col: usize,
        params: &DeviceParams,
        read_ref: f64,
    ) -> Result<bool> {
        check_bounds(row, col, self.rows, self.cols)?;
        let others = (self.rows - 1) as f64;
        let low = params.accessed_current(false) + others * params.max_leakage();
        let high = params.accessed_current(true) + others * params.min_leakage();
        if !(read_ref > low && read_ref < high) {
            return Err(Error::AmbiguousReference {
                read_ref,
                low,
                high,
            });
        }
        let bias = BiasVector::read(self.rows, self.cols, row, params)?;
        Ok(self.column_current(&bias, col, params)? > read_ref)
    }

    /// One compute access: asserts `row_a` and `row_b`, senses every column
    /// once and advances the cycle counter by one.
    pub fn compute_cycle(
        &mut self,
        row_a: usize,
        row_b: usize,
        cfg: &SenseConfig,
        params: &DeviceParams,
    ) -> Result<Vec<bool>> {
        let bias = BiasVector::compute(self.rows, self.cols, row_a, row_b, params)?;
        let out = self
            .column_currents(&bias, params)?
            .into_iter()
            .map(|i| cfg.sense(i))
            .collect();
        self.cycles += 1;
        Ok(out)
    }
}

/// Parses rows of `0`/`1` characters. Blank lines and `#` comments are
/// skipped.
pub fn parse_bit_matrix(text: &str, path: &Path) -> Result<Vec<Vec<bool>>> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let row = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(parse_err(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(format!(
                    "row has {} bits, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "bit matrix is empty".into(),
        });
    }
    Ok(rows)
}

pub fn format_bit_matrix(bits: &[Vec<bool>]) -> String {
    let mut out = String::new();
    for row in bits {
        for &b in row {
            out.push(if b { '1' } else { '0' });
        }
        let _ = writeln!(out);
    }
    out
}
