use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::scenario::{Operation, OutputFormat, Scenario};
use crate::analysis::{
    histogram, max_rows, monte_carlo, sense_margin, sweep_on_off_ratio, McSetup, SweepPoint, Vary,
};
use crate::array::{ArrayState, BiasVector};
use crate::bnn::{
    binarize, parse_tensors, relative_speedup, speedup, xnor_conv2d_oracle, xnor_conv2d_sim,
    xornet_adjusted_speedup, ConvSpec, CPU_BASELINE_OPS,
};
use crate::report::{csv, human_current, write_file};
use crate::sense::{truth_table, CurrentLevels};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "cimxor",
    version,
    about = "Single-cycle in-memory XOR/XNOR crossbar simulator",
    long_about = "Single-cycle in-memory XOR/XNOR crossbar simulator.\n\n\
        sim     - SL currents and logic outputs of a compute cycle\n\
        scale   - maximum rows versus HRS/LRS ratio\n\
        mc      - Monte Carlo current and node-voltage histograms\n\
        bnn     - XNOR convolution on the array against a software oracle\n\
        speedup - XNOR-convolution speedup versus array width and latency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Scenario file (TOML key/value with dotted section names).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides variation.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Table format (overrides output.format).
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    Lrs,
    Hrs,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute cycle (or memory read) on the scenario array.
    Sim {
        #[command(flatten)]
        common: Common,
    },
    /// Leakage-limited maximum rows versus on/off ratio.
    Scale {
        #[command(flatten)]
        common: Common,
        /// HRS/LRS ratios, ascending.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// Which resistance the sweep moves.
        #[arg(long, value_enum, default_value = "both")]
        vary: VaryArg,
        /// Required margin on each comparator decision (A).
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Monte Carlo variation analysis.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Histogram bins per series.
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Overrides variation.n_trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Binary convolution on the array, checked against the oracle.
    Bnn {
        #[command(flatten)]
        common: Common,
        /// Input tensor file (`h w c` header).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Filter stack file (`n h w c` header).
        #[arg(long)]
        filters: Option<PathBuf>,
        /// Columns available per compute cycle.
        #[arg(long)]
        array_cols: Option<usize>,
    },
    /// XNOR-convolution speedup model.
    Speedup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = ConvSpec::REFERENCE_LAYER.c)]
        c: u64,
        #[arg(long = "n-w", default_value_t = ConvSpec::REFERENCE_LAYER.n_w)]
        n_w: u64,
        #[arg(long = "n-i", default_value_t = ConvSpec::REFERENCE_LAYER.n_i)]
        n_i: u64,
        /// XNOR operations per cycle (array widths).
        #[arg(
            long = "no",
            value_delimiter = ',',
            default_value = "64,128,256,512,1024,2048,4096"
        )]
        n_o: Vec<u64>,
        /// Cycles per XNOR operation.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        latency: Vec<u64>,
    },
}

struct Context {
    scenario: Scenario,
    scenario_path: Option<PathBuf>,
    out: PathBuf,
    format: OutputFormat,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let mut scenario = match &common.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        if let Some(seed) = common.seed {
            scenario.variation.seed = seed;
        }
        Ok(Context {
            out: common
                .out
                .clone()
                .unwrap_or_else(|| scenario.out_dir.clone()),
            format: common.format.unwrap_or(scenario.format),
            scenario_path: common.scenario.clone(),
            scenario,
        })
    }

    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}.{ext}"))
    }

    /// Writes a table as CSV or as a JSON array of records.
    fn write_table<T: Serialize>(
        &self,
        stem: &str,
        csv_text: String,
        records: &T,
    ) -> Result<PathBuf> {
        let (path, text) = match self.format {
            OutputFormat::Csv => (self.path(stem, "csv"), csv_text),
            OutputFormat::Json => (self.path(stem, "json"), to_json(records)),
        };
        write_file(&path, &text)?;
        Ok(path)
    }

    fn write_manifest(&self, command: &str, extra: serde_json::Value) -> Result<()> {
        let manifest = json!({
            "tool": "cimxor",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "scenario_file": self.scenario_path.as_ref().map(|p| p.display().to_string()),
            "seed": self.scenario.variation.seed,
            "format": self.format.to_string(),
            "options": extra,
            "device": self.scenario.device,
            "sense": self.scenario.sense,
            "resolved_scenario": self.scenario.to_toml(),
        });
        write_file(&self.path("manifest", "json"), &to_json(&manifest))
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Runs one parsed invocation, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Sim { common } => cmd_sim(&common),
        Command::Scale {
            common,
            ratios,
            vary,
            margin,
        } => cmd_scale(&common, ratios, vary, margin),
        Command::Mc {
            common,
            bins,
            trials,
        } => cmd_mc(&common, bins, trials),
        Command::Bnn {
            common,
            input,
            filters,
            array_cols,
        } => cmd_bnn(&common, input, filters, array_cols),
        Command::Speedup {
            common,
            c,
            n_w,
            n_i,
            n_o,
            latency,
        } => cmd_speedup(&common, c, n_w, n_i, &n_o, &latency),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Serialize)]
struct ColumnRecord {
    col: usize,
    bit_a: u8,
    bit_b: u8,
    i_sl_a: f64,
    i_sl: String,
    output: u8,
}

#[derive(Serialize)]
struct ReadRecord {
    row: usize,
    col: usize,
    i_sl_a: f64,
    i_sl: String,
    bit: u8,
}

pub fn cmd_sim(common: &Common) -> Result<()> {
    let ctx = Context::new(common)?;
    let sc = &ctx.scenario;
    let params = &sc.device;
    let mut array = ArrayState::from_bits(&sc.bits, params)?;

    match sc.op {
        Operation::Logic(op) => {
            let bias = BiasVector::compute(sc.rows(), sc.cols(), sc.row_a, sc.row_b, params)?;
            let currents = array.column_currents(&bias, params)?;
            let outputs = array.compute_cycle(sc.row_a, sc.row_b, &sc.sense, params)?;
            let records: Vec<ColumnRecord> = (0..sc.cols())
                .map(|col| ColumnRecord {
                    col,
                    bit_a: sc.bits[sc.row_a][col] as u8,
                    bit_b: sc.bits[sc.row_b][col] as u8,
                    i_sl_a: currents[col],
                    i_sl: human_current(currents[col]),
                    output: outputs[col] as u8,
                })
                .collect();
            let text = csv(
                &["col", "bit_a", "bit_b", "i_sl_a", "i_sl", "output"],
                records.iter().map(|r| {
                    vec![
                        r.col.to_string(),
                        r.bit_a.to_string(),
                        r.bit_b.to_string(),
                        r.i_sl_a.to_string(),
                        r.i_sl.clone(),
                        r.output.to_string(),
                    ]
                }),
            );
            let levels = CurrentLevels::for_column(params, sc.rows() - 2, false)?;
            let table = truth_table(&sc.sense, &levels);
            let (low, high) = sense_margin(&levels, &sc.sense);

            let path = ctx.write_table("sim_columns", text, &records)?;
            let tt_records: Vec<_> = table
                .rows()
                .map(|(a, b, out)| json!({"a": a as u8, "b": b as u8, "out": out as u8}))
                .collect();
            ctx.write_table("truth_table", table.to_csv(), &tt_records)?;
            ctx.write_manifest(
                "sim",
                json!({"op": op.to_string(), "compute_cycles": array.cycles()}),
            )?;

            println!(
                "{op} on rows {} and {} ({} cycle):",
                sc.row_a,
                sc.row_b,
                array.cycles()
            );
            for r in &records {
                println!(
                    "  col {}: {}{}  I_SL = {:>12}  -> {}",
                    r.col, r.bit_a, r.bit_b, r.i_sl, r.output
                );
            }
            println!("truth table at nominal levels:");
            print!("{table}");
            println!(
                "sense margins: low {}, high {}",
                human_current(low),
                human_current(high)
            );
            println!("wrote {}", path.display());
        }
        Operation::Read => {
            let mut records = Vec::new();
            for row in 0..sc.rows() {
                let bias = BiasVector::read(sc.rows(), sc.cols(), row, params)?;
                let currents = array.column_currents(&bias, params)?;
                for (col, &i) in currents.iter().enumerate() {
                    records.push(ReadRecord {
                        row,
                        col,
                        i_sl_a: i,
                        i_sl: human_current(i),
                        bit: array.read_bit(row, col, params, sc.read_ref)? as u8,
                    });
                }
            }
            let text = csv(
                &["row", "col", "i_sl_a", "i_sl", "bit"],
                records.iter().map(|r| {
                    vec![
                        r.row.to_string(),
                        r.col.to_string(),
                        r.i_sl_a.to_string(),
                        r.i_sl.clone(),
                        r.bit.to_string(),
                    ]
                }),
            );
            let path = ctx.write_table("read_bits", text, &records)?;
            ctx.write_manifest("sim", json!({"op": "READ", "read_ref": sc.read_ref}))?;
            for row in records.chunks(sc.cols()) {
                let bits: String = row
                    .iter()
                    .map(|r| if r.bit == 1 { '1' } else { '0' })
                    .collect();
                println!("{bits}");
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn default_ratios() -> Vec<f64> {
    (2..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
}

#[derive(Serialize)]
struct ScaleRecord {
    vary: Vary,
    #[serde(flatten)]
    point: SweepPoint,
}

pub fn cmd_scale(
    common: &Common,
    ratios: Option<Vec<f64>>,
    vary: VaryArg,
    margin: f64,
) -> Result<()> {
    let ctx = Context::new(common)?;
    let params = &ctx.scenario.device;
    let ratios = ratios.unwrap_or_else(default_ratios);
    let which: &[Vary] = match vary {
        VaryArg::Lrs => &[Vary::Lrs],
        VaryArg::Hrs => &[Vary::Hrs],
        VaryArg::Both => &[Vary::Lrs, Vary::Hrs],
    };
    let mut records = Vec::new();
    for &v in which {
        for point in sweep_on_off_ratio(&ratios, params, v, margin)? {
            records.push(ScaleRecord { vary: v, point });
        }
    }
    let nominal = match ctx.scenario.op {
        Operation::Logic(_) => Some(max_rows(params, &ctx.scenario.sense, margin)?),
        Operation::Read => None,
    };

    let text = csv(
        &[
            "vary", "ratio", "r_lrs", "r_hrs", "i_ref1", "i_ref2", "max_rows",
        ],
        records.iter().map(|r| {
            vec![
                r.vary.to_string(),
                r.point.ratio.to_string(),
                r.point.r_lrs.to_string(),
                r.point.r_hrs.to_string(),
                r.point.i_ref1.to_string(),
                r.point.i_ref2.to_string(),
                r.point.max_rows.to_string(),
            ]
        }),
    );
    let path = ctx.write_table("scale", text, &records)?;
    ctx.write_manifest(
        "scale",
        json!({
            "ratios": ratios,
            "vary": which.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "margin": margin,
            "nominal_max_rows": nominal.map(|n| n.to_string()),
        }),
    )?;
    if let Some(n) = nominal {
        println!(
            "max rows at scenario references ({} / {}): {n}",
            human_current(ctx.scenario.sense.i_ref1),
            human_current(ctx.scenario.sense.i_ref2)
        );
    }
    for r in &records {
        println!(
            "  vary {} ratio {:>10.3e}: max rows {}",
            r.vary, r.point.ratio, r.point.max_rows
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_mc(common: &Common, bins: usize, trials: Option<usize>) -> Result<()> {
    let mut ctx = Context::new(common)?;
    if let Some(n) = trials {
        ctx.scenario.variation.n_trials = n;
        ctx.scenario.variation.validate()?;
    }
    if bins == 0 {
        return Err(Error::Config("--bins must be >= 1".into()));
    }
    let sc = &ctx.scenario;
    if !matches!(sc.op, Operation::Logic(_)) {
        return Err(Error::Config("mc needs a logic operation, not READ".into()));
    }
    let setup = McSetup {
        bits: sc.bits.clone(),
        row_a: sc.row_a,
        row_b: sc.row_b,
        node: sc.node,
    };
    let report = monte_carlo(&setup, &sc.variation, &sc.device, &sc.sense)?;
    let series = report.series();

    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    let mut header = vec!["trial"];
    header.extend(&names);
    let samples_csv = csv(
        &header,
        (0..report.n_trials).map(|t| {
            std::iter::once(t.to_string())
                .chain(series.iter().map(|(_, s)| s[t].to_string()))
                .collect::<Vec<_>>()
        }),
    );
    let sample_records: serde_json::Map<String, serde_json::Value> =
        series.iter().map(|(n, s)| (n.clone(), json!(s))).collect();
    ctx.write_table("mc_samples", samples_csv, &sample_records)?;

    let mut hist_rows = Vec::new();
    let mut hist_records = Vec::new();
    for (name, s) in &series {
        for (b, bin) in histogram(s, bins)?.into_iter().enumerate() {
            hist_rows.push(vec![
                name.clone(),
                b.to_string(),
                bin.lo.to_string(),
                bin.hi.to_string(),
                bin.count.to_string(),
            ]);
            hist_records.push(json!({"series": name, "bin": b, "lo": bin.lo, "hi": bin.hi,
                                     "count": bin.count}));
        }
    }
    ctx.write_table(
        "mc_histogram",
        csv(&["series", "bin", "lo", "hi", "count"], hist_rows),
        &hist_records,
    )?;

    let summary = report.summary();
    write_file(&ctx.path("mc_summary", "json"), &to_json(&summary))?;
    ctx.write_manifest(
        "mc",
        json!({"bins": bins, "variation": sc.variation, "node": sc.node}),
    )?;

    println!(
        "{} trials, seed {}: {} failures in {} column evaluations (rate {})",
        report.n_trials, report.seed, report.failure_count, report.evaluations, report.failure_rate
    );
    for (name, stats) in &summary.series {
        let fmt = |v: f64| {
            if name.starts_with("i_") {
                human_current(v)
            } else {
                format!("{v:.4} V")
            }
        };
        println!(
            "  {name:<10} mean {:>12}  sigma {:>12}  [{}, {}]",
            fmt(stats.mean),
            fmt(stats.std),
            fmt(stats.min),
            fmt(stats.max)
        );
    }
    println!("wrote {}", ctx.out.display());
    Ok(())
}

fn read_tensors(path: &Path) -> Result<Vec<crate::bnn::RealTensor>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tensors(&text, path)
}

#[derive(Serialize)]
struct BnnRecord {
    y: usize,
    x: usize,
    filter: usize,
    raw_sim: i64,
    raw_oracle: i64,
    value_sim: f64,
    value_oracle: f64,
}

pub fn cmd_bnn(
    common: &Common,
    input: Option<PathBuf>,
    filters: Option<PathBuf>,
    array_cols: Option<usize>,
) -> Result<()> {
    let ctx = Context::new(common)?;
    let sc = &ctx.scenario;
    let input_path = input
        .or_else(|| sc.bnn.input.clone())
        .ok_or_else(|| Error::Config("no input tensor (--input or bnn.input)".into()))?;
    let filter_path = filters
        .or_else(|| sc.bnn.filters.clone())
        .ok_or_else(|| Error::Config("no filter tensor (--filters or bnn.filters)".into()))?;
    let array_cols = array_cols.unwrap_or(sc.bnn.array_cols);

    let inputs = read_tensors(&input_path)?;
    if inputs.len() != 1 {
        return Err(Error::Config(format!(
            "{} holds {} tensors, expected one input",
            input_path.display(),
            inputs.len()
        )));
    }
    let filters = read_tensors(&filter_path)?;
    let layer = binarize(&inputs[0], &filters)?;
    let sim = xnor_conv2d_sim(
        &layer.input,
        &layer.filters,
        &layer.scales,
        array_cols,
        &sc.device,
    )?;
    let oracle = xnor_conv2d_oracle(&layer.input, &layer.filters, &layer.scales)?;

    let mut records = Vec::new();
    for y in 0..sim.out_h {
        for x in 0..sim.out_w {
            for f in 0..sim.n_filters {
                records.push(BnnRecord {
                    y,
                    x,
                    filter: f,
                    raw_sim: sim.raw_at(y, x, f),
                    raw_oracle: oracle.raw_at(y, x, f),
                    value_sim: sim.value_at(y, x, f),
                    value_oracle: oracle.value_at(y, x, f),
                });
            }
        }
    }
    let mismatches = records.iter().filter(|r| r.raw_sim != r.raw_oracle).count();
    let text = csv(
        &[
            "y",
            "x",
            "filter",
            "raw_sim",
            "raw_oracle",
            "value_sim",
            "value_oracle",
        ],
        records.iter().map(|r| {
            vec![
                r.y.to_string(),
                r.x.to_string(),
                r.filter.to_string(),
                r.raw_sim.to_string(),
                r.raw_oracle.to_string(),
                r.value_sim.to_string(),
                r.value_oracle.to_string(),
            ]
        }),
    );
    let path = ctx.write_table("bnn_output", text, &records)?;
    ctx.write_manifest(
        "bnn",
        json!({
            "input": input_path.display().to_string(),
            "filters": filter_path.display().to_string(),
            "array_cols": array_cols,
            "compute_cycles": sim.compute_cycles,
            "write_ops": sim.write_ops,
            "mismatches": mismatches,
        }),
    )?;

    println!(
        "{}x{} output x {} filters: {} compute cycles, {} cell writes, {} mismatches vs oracle",
        sim.out_h, sim.out_w, sim.n_filters, sim.compute_cycles, sim.write_ops, mismatches
    );
    println!("wrote {}", path.display());
    if mismatches > 0 {
        return Err(Error::NoValidReference(format!(
            "array output disagrees with the oracle at {mismatches} positions"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpeedupRecord {
    n_o: u64,
    latency_cycles: u64,
    n_o_effective: f64,
    speedup: f64,
    relative_speedup: f64,
    xornet_adjusted_speedup: f64,
}

pub fn cmd_speedup(
    common: &Common,
    c: u64,
    n_w: u64,
    n_i: u64,
    n_o: &[u64],
    latency: &[u64],
) -> Result<()> {
    let ctx = Context::new(common)?;
    let base = ConvSpec {
        c,
        n_w,
        n_i,
        n_o: CPU_BASELINE_OPS,
        latency_cycles: 1,
    };
    if !base.is_valid() || n_o.contains(&0) || latency.contains(&0) || n_o.is_empty() {
        return Err(Error::Config(
            "c, n-w, n-i, every --no and every --latency must be positive".into(),
        ));
    }
    let mut records = Vec::new();
    for &lat in latency {
        for &width in n_o {
            let eff = width as f64 / lat as f64;
            let spec = ConvSpec {
                n_o: width,
                latency_cycles: lat,
                ..base
            };
            records.push(SpeedupRecord {
                n_o: width,
                latency_cycles: lat,
                n_o_effective: eff,
                speedup: crate::bnn::speedup_at(&spec, eff),
                relative_speedup: relative_speedup(width, lat, &base, CPU_BASELINE_OPS),
                xornet_adjusted_speedup: xornet_adjusted_speedup(&spec),
            });
        }
    }
    let text = csv(
        &[
            "n_o",
            "latency_cycles",
            "n_o_effective",
            "speedup",
            "relative_speedup",
            "xornet_adjusted_speedup",
        ],
        records.iter().map(|r| {
            vec![
                r.n_o.to_string(),
                r.latency_cycles.to_string(),
                r.n_o_effective.to_string(),
                r.speedup.to_string(),
                r.relative_speedup.to_string(),
                r.xornet_adjusted_speedup.to_string(),
            ]
        }),
    );
    let path = ctx.write_table("speedup", text, &records)?;
    ctx.write_manifest(
        "speedup",
        json!({"c": c, "n_w": n_w, "n_i": n_i, "n_o": n_o, "latency": latency,
               "baseline_speedup": speedup(&base)}),
    )?;
    println!(
        "CPU baseline (n_o = {CPU_BASELINE_OPS}): S = {:.6}",
        speedup(&base)
    );
    for r in &records {
        println!(
            "  n_o {:>6} latency {}: S = {:>12.4}  relative {:>10.4}",
            r.n_o, r.latency_cycles, r.speedup, r.relative_speedup
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
