//! `sdosc` — analysis front end for the discontinuous SD oscillator.
//!
//! Exit codes: 0 success, 1 verify failure, 2 usage error, 3 domain error,
//! 4 numerical failure.

mod config;
mod emit;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::RunConfig;
use emit::{
    curve_csv, cycle_out, emit_portrait_svg, num, trajectory_csv, write_atomic, PortraitSpec,
};
use sdosc_core::bifurcation::{
    classify_global, diagram_slice, trace_double_cycle, trace_grazing, CurveKind, CurveSample,
    DoubleCycleKind, GlobalRegionLabel,
};
use sdosc_core::integrate::{flow, EventSpec, IntegratorCtrl, TimeDirection};
use sdosc_core::melnikov::{
    classify_region_d, melnikov, melnikov_deriv, melnikov_zeros, trace_melnikov_curve, RegionD,
};
use sdosc_core::model::{equilibrium_report, Chart, EquilibriumClass, Params, PhasePoint};
use sdosc_core::poincare::{find_cycles, ScanCtrl};
use sdosc_core::{battery, Error as CoreError};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sdosc", version, about = "Discontinuous SD-oscillator analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one orbit and write it as CSV.
    Simulate(SimulateArgs),
    /// Detect and classify all limit cycles at one parameter point (JSON).
    Cycles(CyclesArgs),
    /// Melnikov values, zeros and the (a, b) region label (JSON).
    Melnikov(MelnikovArgs),
    /// Trace one bifurcation curve over an `a` grid (CSV).
    Trace(TraceArgs),
    /// Classify a parameter point against the traced slice (JSON).
    Classify(ClassifyArgs),
    /// Trace the whole fixed-delta slice: four curves plus P, Q, a0 (CSV bundle).
    Slice(SliceArgs),
    /// Render an SVG phase portrait.
    Portrait(PortraitArgs),
    /// Run the acceptance battery; nonzero exit when any criterion fails.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Plain-text key/value config supplying defaults for missing flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ParamArgs {
    fn load_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }

    fn resolve(&self) -> Result<Params> {
        let cfg = self.load_config()?;
        let a = self.a.or(cfg.get_f64("a")?).ok_or_else(|| anyhow!("missing --a"))?;
        let b = self.b.or(cfg.get_f64("b")?).ok_or_else(|| anyhow!("missing --b"))?;
        let delta =
            self.delta.or(cfg.get_f64("delta")?).ok_or_else(|| anyhow!("missing --delta"))?;
        Params::new(a, b, delta).map_err(CliError::from_core)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ChartArg {
    Sd,
    Lienard,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, allow_hyphen_values = true)]
    y0: f64,
    #[arg(long, value_enum, default_value = "lienard")]
    chart: ChartArg,
    #[arg(long, value_enum, default_value = "forward")]
    direction: DirectionArg,
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    /// Stop at the first crossing of the positive x-axis.
    #[arg(long)]
    stop_at_positive_axis: bool,
    /// Output directory; the trajectory goes to `<out>/trajectory.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CyclesArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Optional output directory for `cycles.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MelnikovArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    /// Evaluate M and its derivatives at this level.
    #[arg(long)]
    h: Option<f64>,
    /// Optional output directory for `melnikov.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CurveArg {
    Hopf,
    Grazing,
    Dl1,
    Dl2,
    B1,
    B2,
    B3,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, value_enum)]
    curve: CurveArg,
    #[arg(long)]
    delta: Option<f64>,
    /// Single grid point; alternative to --a-min/--a-max/--points.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long, default_value_t = 60)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Output directory; the curve goes to `<out>/<curve>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Optional output directory for `classify.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1.02)]
    a_min: f64,
    #[arg(long, default_value_t = 5.0)]
    a_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Window as x_min,x_max,y_min,y_max (SD chart); defaults to a frame
    /// around the equilibrium and detected cycles.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64, f64, f64)>,
    /// Orbit seeds as x:y pairs, e.g. --seed-point -1:0 --seed-point 2:1
    #[arg(long = "seed-point", value_parser = parse_seed_point)]
    seed_points: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 40.0)]
    t_max: f64,
    /// Skip the nullcline y = F(x).
    #[arg(long)]
    no_nullcline: bool,
    /// Skip cycle detection (draw orbits only).
    #[arg(long)]
    no_cycles: bool,
    /// Output directory; the drawing goes to `<out>/portrait.svg`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if parts.len() != 4 {
        return Err(format!("expected x_min,x_max,y_min,y_max, got {s:?}"));
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

fn parse_seed_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (x, y) = s.split_once(':').ok_or_else(|| format!("expected x:y, got {s:?}"))?;
    Ok((
        x.parse::<f64>().map_err(|e| e.to_string())?,
        y.parse::<f64>().map_err(|e| e.to_string())?,
    ))
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for the randomized batteries (0 is the canonical run).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a single criterion (1..=11) instead of all.
    #[arg(long)]
    criterion: Option<usize>,
    /// Optional output directory for `verify.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain-text key/value config (`seed = ...`).
    #[arg(long)]
    config: Option<PathBuf>,
}

/// anyhow error carrying the process exit code.
#[derive(Debug)]
struct CliError;

impl CliError {
    fn from_core(e: CoreError) -> anyhow::Error {
        let code = match e {
            CoreError::Domain(_) | CoreError::NonFinite(_) => 3,
            _ => 4,
        };
        anyhow!(e.to_string()).context(ExitWith(code))
    }
}

#[derive(Debug, Clone, Copy)]
struct ExitWith(u8);

impl std::fmt::Display for ExitWith {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit code {}", self.0)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let code = err.downcast_ref::<ExitWith>().map(|e| e.0).unwrap_or(4);
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Simulate(args) => simulate(args),
        Cmd::Cycles(args) => cycles(args),
        Cmd::Melnikov(args) => melnikov_cmd(args),
        Cmd::Trace(args) => trace(args),
        Cmd::Classify(args) => classify(args),
        Cmd::Slice(args) => slice(args),
        Cmd::Portrait(args) => portrait(args),
        Cmd::Verify(args) => verify(args),
    }
}

fn effective_config(params: &Params, extra: &[(&str, String)]) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.set("a", num(params.a()));
    cfg.set("b", num(params.b()));
    cfg.set("delta", num(params.delta()));
    for (k, v) in extra {
        cfg.set(k, v);
    }
    cfg
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    let params = args.params.resolve()?;
    let chart = match args.chart {
        ChartArg::Sd => Chart::Sd,
        ChartArg::Lienard => Chart::Lienard,
    };
    let start = PhasePoint { x: args.x0, y: args.y0, chart };
    let ctrl = IntegratorCtrl { t_max: args.t_max, ..IntegratorCtrl::for_params(&params) };
    let stop: Vec<EventSpec> =
        if args.stop_at_positive_axis { vec![EventSpec::terminal_positive_x_axis()] } else { vec![] };
    let direction = match args.direction {
        DirectionArg::Forward => TimeDirection::Forward,
        DirectionArg::Backward => TimeDirection::Backward,
    };
    let tr = flow(&start, &params, &stop, &ctrl, direction).map_err(CliError::from_core)?;
    write_atomic(&args.out.join("trajectory.csv"), &trajectory_csv(&tr))?;
    let cfg = effective_config(
        &params,
        &[
            ("x0", num(args.x0)),
            ("y0", num(args.y0)),
            ("t_max", num(args.t_max)),
        ],
    );
    write_atomic(&args.out.join("run.config"), &cfg.serialize())?;
    println!(
        "{} samples, outcome {:?}, written to {}",
        tr.samples.len(),
        tr.outcome,
        args.out.join("trajectory.csv").display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct CyclesReport {
    a: f64,
    b: f64,
    delta: f64,
    equilibrium: &'static str,
    cycles: Vec<emit::CycleOut>,
}

fn cycles(args: CyclesArgs) -> Result<u8> {
    let params = args.params.resolve()?;
    let ctrl = IntegratorCtrl::for_params(&params);
    let found =
        find_cycles(&params, &ctrl, &ScanCtrl::default()).map_err(CliError::from_core)?;
    let report = CyclesReport {
        a: params.a(),
        b: params.b(),
        delta: params.delta(),
        equilibrium: match equilibrium_report(&params).classification {
            EquilibriumClass::Source => "source",
            EquilibriumClass::Sink => "sink",
            EquilibriumClass::WeakFocusStableOrder1 => "weak_focus_stable_order1",
        },
        cycles: found.iter().map(cycle_out).collect(),
    };
    emit_json(&report, args.out.as_deref(), "cycles.json")
}

#[derive(Serialize)]
struct MelnikovReport {
    a: f64,
    b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[serde(rename = "M1", skip_serializing_if = "Option::is_none")]
    m1: Option<f64>,
    #[serde(rename = "M2", skip_serializing_if = "Option::is_none")]
    m2: Option<f64>,
    #[serde(rename = "M3", skip_serializing_if = "Option::is_none")]
    m3: Option<f64>,
    #[serde(rename = "M_at_0")]
    m_at_0: f64,
    #[serde(rename = "M1_at_0")]
    m1_at_0: f64,
    zeros: Vec<ZeroOut>,
    total_with_multiplicity: u32,
    region: String,
}

#[derive(Serialize)]
struct ZeroOut {
    h: f64,
    multiplicity: u8,
}

fn region_name(r: RegionD) -> &'static str {
    match r {
        RegionD::D1 => "D1",
        RegionD::D2 => "D2",
        RegionD::D3 => "D3",
        RegionD::D4 => "D4",
        RegionD::D5 => "D5",
        RegionD::D6 => "D6",
        RegionD::D7 => "D7",
        RegionD::D8 => "D8",
        RegionD::OnB1 => "b1",
        RegionD::OnB2 => "b2",
        RegionD::OnB3 => "b3",
        RegionD::OnFiveQuarters => "-5/4(a+1)^2",
        RegionD::OnThreeHalves => "-3/2(a+1)^2",
        RegionD::PointA => "A",
        RegionD::PointB => "B",
        RegionD::PointC => "C",
        RegionD::BelowThreeHalves => "below -3/2(a+1)^2",
    }
}

fn melnikov_cmd(args: MelnikovArgs) -> Result<u8> {
    let (a, b) = (args.a, args.b);
    let (m, m1, m2, m3) = match args.h {
        Some(h) => (
            Some(melnikov(h, a, b).map_err(CliError::from_core)?),
            Some(melnikov_deriv(h, a, b, 1).map_err(CliError::from_core)?),
            (h > 0.0).then(|| melnikov_deriv(h, a, b, 2)).transpose().map_err(CliError::from_core)?,
            (h > 0.0).then(|| melnikov_deriv(h, a, b, 3)).transpose().map_err(CliError::from_core)?,
        ),
        None => (None, None, None, None),
    };
    let in_region = a > 1.0 && b < -(a + 1.0) * (a + 1.0);
    let (zeros, total, region) = if in_region {
        let zr = melnikov_zeros(a, b).map_err(CliError::from_core)?;
        let label = classify_region_d(a, b).map_err(CliError::from_core)?;
        (
            zr.zeros.iter().map(|z| ZeroOut { h: z.h, multiplicity: z.multiplicity }).collect(),
            zr.total_with_multiplicity,
            region_name(label).to_owned(),
        )
    } else {
        (vec![], 0, "outside b < -(a+1)^2".to_owned())
    };
    let report = MelnikovReport {
        a,
        b,
        h: args.h,
        m,
        m1,
        m2,
        m3,
        m_at_0: sdosc_core::melnikov::m_at_zero(a, b),
        m1_at_0: sdosc_core::melnikov::m1_at_zero(a, b),
        zeros,
        total_with_multiplicity: total,
        region,
    };
    emit_json(&report, args.out.as_deref(), "melnikov.json")
}

fn geometric_grid(a_min: f64, a_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| a_min * (a_max / a_min).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn trace(args: TraceArgs) -> Result<u8> {
    let grid = match (args.a, args.a_min, args.a_max) {
        (Some(a), None, None) => vec![a],
        (None, Some(lo), Some(hi)) => geometric_grid(lo, hi, args.points),
        (None, None, None) => geometric_grid(1.02, 5.0, args.points),
        _ => anyhow::bail!("give either --a or --a-min/--a-max"),
    };
    let need_delta = || args.delta.ok_or_else(|| anyhow!("--delta required for this curve"));
    let samples: Vec<CurveSample> = match args.curve {
        CurveArg::Hopf => grid
            .iter()
            .map(|&a| CurveSample {
                a,
                b: -(a + 1.0) * (a + 1.0),
                delta: args.delta.unwrap_or(f64::NAN),
                kind: CurveKind::Hopf,
                residual: 0.0,
                valid: a > 1.0,
            })
            .collect(),
        CurveArg::Grazing => trace_grazing(&grid, need_delta()?, args.tol),
        CurveArg::Dl1 => trace_double_cycle(DoubleCycleKind::Dl1, &grid, need_delta()?, args.tol),
        CurveArg::Dl2 => trace_double_cycle(DoubleCycleKind::Dl2, &grid, need_delta()?, args.tol),
        CurveArg::B1 => trace_melnikov_curve(CurveKind::B1, &grid, args.tol),
        CurveArg::B2 => trace_melnikov_curve(CurveKind::B2, &grid, args.tol),
        CurveArg::B3 => trace_melnikov_curve(CurveKind::B3, &grid, args.tol),
    };
    let csv = curve_csv(&samples);
    match &args.out {
        Some(dir) => {
            let name = format!("{}.csv", emit::curve_kind_name(samples[0].kind));
            write_atomic(&dir.join(&name), &csv)?;
            println!("{} samples written to {}", samples.len(), dir.join(name).display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn label_name(l: GlobalRegionLabel) -> &'static str {
    match l {
        GlobalRegionLabel::I => "I",
        GlobalRegionLabel::II => "II",
        GlobalRegionLabel::III => "III",
        GlobalRegionLabel::IV => "IV",
        GlobalRegionLabel::V => "V",
        GlobalRegionLabel::H => "H",
        GlobalRegionLabel::G1 => "G1",
        GlobalRegionLabel::G2 => "G2",
        GlobalRegionLabel::DL11 => "DL11",
        GlobalRegionLabel::DL12 => "DL12",
        GlobalRegionLabel::DL2 => "DL2",
        GlobalRegionLabel::P => "P",
        GlobalRegionLabel::Q => "Q",
    }
}

#[derive(Serialize)]
struct ClassifyReport {
    a: f64,
    b: f64,
    delta: f64,
    label: &'static str,
}

fn classify(args: ClassifyArgs) -> Result<u8> {
    let params = args.params.resolve()?;
    let (a, delta) = (params.a(), params.delta());
    // a tight local slice is enough to compare b against the four curves
    let grid = [0.985 * a, a, 1.015 * a];
    let sl = diagram_slice(delta, &grid, 1e-6).map_err(CliError::from_core)?;
    let label =
        classify_global(a, params.b(), delta, &sl).map_err(CliError::from_core)?;
    let report =
        ClassifyReport { a, b: params.b(), delta, label: label_name(label) };
    emit_json(&report, args.out.as_deref(), "classify.json")
}

#[derive(Serialize)]
struct SliceReport {
    delta: f64,
    a0_estimate: f64,
    p_points: Vec<[f64; 2]>,
    q_point: Option<[f64; 2]>,
}

fn slice(args: SliceArgs) -> Result<u8> {
    let grid = geometric_grid(args.a_min, args.a_max, args.points);
    // the four curves are independent; trace them on worker threads
    let (hopf, grazing, dl1, dl2) = std::thread::scope(|s| {
        let g1 = s.spawn(|| trace_grazing(&grid, args.delta, args.tol));
        let d1 = s.spawn(|| trace_double_cycle(DoubleCycleKind::Dl1, &grid, args.delta, args.tol));
        let d2 = s.spawn(|| trace_double_cycle(DoubleCycleKind::Dl2, &grid, args.delta, args.tol));
        let hopf: Vec<CurveSample> = grid
            .iter()
            .map(|&a| CurveSample {
                a,
                b: -(a + 1.0) * (a + 1.0),
                delta: args.delta,
                kind: CurveKind::Hopf,
                residual: 0.0,
                valid: a > 1.0,
            })
            .collect();
        (hopf, g1.join().unwrap(), d1.join().unwrap(), d2.join().unwrap())
    });
    let a0 = match (
        dl1.iter().rev().find(|s| s.valid).map(|s| s.a),
        dl1.iter().find(|s| !s.valid).map(|s| s.a),
    ) {
        (Some(lo), Some(hi)) if hi > lo => 0.5 * (lo + hi),
        (Some(lo), _) => lo,
        _ => f64::NAN,
    };
    let sl = sdosc_core::bifurcation::assemble_slice(args.delta, hopf, grazing, dl1, dl2, a0);
    for (name, data) in [
        ("hopf.csv", curve_csv(&sl.hopf)),
        ("grazing.csv", curve_csv(&sl.grazing)),
        ("dl1.csv", curve_csv(&sl.dl1)),
        ("dl2.csv", curve_csv(&sl.dl2)),
    ] {
        write_atomic(&args.out.join(name), &data)?;
    }
    let report = SliceReport {
        delta: sl.delta,
        a0_estimate: sl.a0_estimate,
        p_points: sl.p_points.iter().map(|&(a, b)| [a, b]).collect(),
        q_point: sl.q_point.map(|(a, b)| [a, b]),
    };
    write_atomic(&args.out.join("slice.json"), &serde_json::to_string_pretty(&report)?)?;
    println!("slice written to {}", args.out.display());
    Ok(0)
}

fn portrait(args: PortraitArgs) -> Result<u8> {
    let params = args.params.resolve()?;
    let ctrl = IntegratorCtrl { t_max: args.t_max, ..IntegratorCtrl::for_params(&params) };
    let cycles = if args.no_cycles {
        vec![]
    } else {
        find_cycles(&params, &ctrl, &ScanCtrl::default()).map_err(CliError::from_core)?
    };
    let trajectories: Vec<_> = args
        .seed_points
        .iter()
        .filter_map(|&(x, y)| {
            flow(&PhasePoint::sd(x, y), &params, &[], &ctrl, TimeDirection::Forward).ok()
        })
        .collect();
    let window = match args.window {
        Some(w) => w,
        None => {
            let a1 = params.a() + 1.0;
            let reach = a1 + f64::max(1.0, -params.b()).sqrt();
            let r = cycles
                .iter()
                .map(|c| c.max_x())
                .fold(1.6 * a1, f64::max)
                .max(reach * 0.8);
            (-0.6 * r, 1.25 * r, -1.1 * r, 1.1 * r)
        }
    };
    let spec = PortraitSpec {
        window,
        nullcline: !args.no_nullcline,
        switching_line: true,
        equilibrium_marker: true,
    };
    let svg = emit_portrait_svg(&spec, &params, &cycles, &trajectories)?;
    write_atomic(&args.out.join("portrait.svg"), &svg)?;
    println!("portrait written to {}", args.out.join("portrait.svg").display());
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    passed: bool,
    criteria: Vec<CriterionOut>,
}

#[derive(Serialize)]
struct CriterionOut {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn verify(args: VerifyArgs) -> Result<u8> {
    let seed = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            cfg.get("seed").map(|s| s.parse::<u64>()).transpose()?.unwrap_or(args.seed)
        }
        None => args.seed,
    };
    let results = match args.criterion {
        Some(id) => {
            anyhow::ensure!((1..=11).contains(&id), "criterion id must be in 1..=11");
            vec![battery::run_criterion(id, seed)]
        }
        None => battery::run_all(seed),
    };
    let mut all = true;
    for r in &results {
        println!(
            "criterion {:2} {:38} {}{}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            if r.detail.is_empty() { String::new() } else { format!("  [{}]", r.detail) }
        );
        all &= r.passed;
    }
    let report = VerifyReport {
        seed,
        passed: all,
        criteria: results
            .into_iter()
            .map(|r| CriterionOut { id: r.id, name: r.name, passed: r.passed, detail: r.detail })
            .collect(),
    };
    if let Some(dir) = &args.out {
        write_atomic(&dir.join("verify.json"), &serde_json::to_string_pretty(&report)?)?;
    }
    println!("verify: {}", if all { "PASS" } else { "FAIL" });
    Ok(if all { 0 } else { 1 })
}

fn emit_json<T: Serialize>(report: &T, out: Option<&Path>, name: &str) -> Result<u8> {
    let json = serde_json::to_string_pretty(report).context("serializing report")?;
    println!("{json}");
    if let Some(dir) = out {
        write_atomic(&dir.join(name), &json)?;
    }
    Ok(0)
}
