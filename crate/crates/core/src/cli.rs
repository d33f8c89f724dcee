//! Run configuration, subcommand dispatch and result emission.
//!
//! A configuration is a flat JSON object. Required keys: `r`, `theta`,
//! `delta`, `epsilon`, `n_eff`. Optional keys and defaults:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `gamma` | 1 | damping rate |
//! | `mu` | 1 | dipole moment |
//! | `e0_min`, `e0_max` | 0, 20 | sweep range of `|E0|` (of `|E_T|` for `resonant-sweep`) |
//! | `points` | 400 | sweep points |
//! | `spacing` | `"linear"` | `"linear"` or `"log"` |
//! | `depth` | 2 | continued-fraction depth |
//! | `tol` | 1e-10 | integrator tolerance |
//! | `settle_tol` | 1e-9 | stroboscopic settling threshold |
//! | `max_periods` | 5000 | settling budget |
//! | `n_max` | 8 | harmonics extracted by `oracle` |
//! | `e_in` | 0 | input field for `oracle`, a number or `[re, im]` |
//! | `compare_points` | 24 | matched points for `compare` |
//! | `output` | stdout | output path |
//! | `format` | `"csv"` | `"csv"` or `"json"` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bloch::{extract_harmonics, settle, SettleOptions};
use crate::compare::{compare_point, Comparison};
use crate::error::{Error, Result};
use crate::fold;
use crate::params::{Model, ModelParams};
use crate::resonant;
use crate::sideband::MAX_DEPTH;
use crate::sweep::{self, classify_branches, hysteresis, ClassifiedCurve, Direction, HysteresisReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub e0_min: f64,
    pub e0_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        sweep::grid(self.e0_min, self.e0_max, self.points, self.spacing == Spacing::Log)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub depth: usize,
    pub tol: f64,
    pub settle_tol: f64,
    pub max_periods: usize,
    pub n_max: usize,
}

impl SolverConfig {
    pub fn settle_options(&self) -> SettleOptions {
        SettleOptions { tol: self.tol, settle_tol: self.settle_tol, max_periods: self.max_periods, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub e_in: Complex64,
    pub compare_points: usize,
}

const REQUIRED: [&str; 5] = ["r", "theta", "delta", "epsilon", "n_eff"];
const KNOWN: [&str; 20] = [
    "gamma", "r", "theta", "delta", "epsilon", "n_eff", "mu", "e0_min", "e0_max", "points", "spacing", "depth",
    "tol", "settle_tol", "max_periods", "n_max", "e_in", "compare_points", "output", "format",
];

fn cfg_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

struct Keys<'a>(&'a Map<String, Value>);

impl Keys<'_> {
    fn f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.0.get(key) {
            None => default.ok_or_else(|| cfg_err(key, "missing required key")),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| cfg_err(key, format!("expected a finite number, got {v}"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| cfg_err(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| cfg_err(key, format!("expected a string, got {v}"))),
        }
    }

    fn complex(&self, key: &str) -> Result<Complex64> {
        match self.0.get(key) {
            None => Ok(Complex64::new(0.0, 0.0)),
            Some(Value::Number(n)) => {
                Ok(Complex64::new(n.as_f64().ok_or_else(|| cfg_err(key, "not representable"))?, 0.0))
            }
            Some(Value::Array(a)) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(cfg_err(key, "expected [re, im] numbers")),
            },
            Some(v) => Err(cfg_err(key, format!("expected a number or [re, im], got {v}"))),
        }
    }
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| cfg_err("<document>", e.to_string()))?;
    let map = value.as_object().ok_or_else(|| cfg_err("<document>", "expected a JSON object"))?;
    if let Some(k) = map.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(cfg_err(k, "unknown key"));
    }
    let keys = Keys(map);
    for k in REQUIRED {
        if !map.contains_key(k) {
            return Err(cfg_err(k, "missing required key"));
        }
    }
    let model = ModelParams {
        gamma: keys.f64("gamma", Some(1.0))?,
        r: keys.f64("r", None)?,
        theta: keys.f64("theta", None)?,
        delta: keys.f64("delta", None)?,
        epsilon: keys.f64("epsilon", None)?,
        n_eff: keys.f64("n_eff", None)?,
        mu: keys.f64("mu", Some(1.0))?,
    };
    let model = model.validated().map_err(|e| match e {
        Error::InvalidParam { field, reason } => cfg_err(field, reason),
        other => other,
    })?;

    let spacing = match keys.str("spacing")? {
        None | Some("linear") => Spacing::Linear,
        Some("log") => Spacing::Log,
        Some(other) => return Err(cfg_err("spacing", format!("expected \"linear\" or \"log\", got {other:?}"))),
    };
    let sweep = SweepConfig {
        e0_min: keys.f64("e0_min", Some(0.0))?,
        e0_max: keys.f64("e0_max", Some(20.0))?,
        points: keys.usize("points", 400)?,
        spacing,
    };
    if sweep.e0_min < 0.0 {
        return Err(cfg_err("e0_min", "must be >= 0"));
    }
    if !(sweep.e0_min < sweep.e0_max) {
        return Err(cfg_err("e0_max", "must exceed e0_min"));
    }
    if sweep.points < 3 {
        return Err(cfg_err("points", "need at least 3 points"));
    }
    if spacing == Spacing::Log && sweep.e0_min <= 0.0 {
        return Err(cfg_err("e0_min", "log spacing needs e0_min > 0"));
    }

    let solver = SolverConfig {
        depth: keys.usize("depth", 2)?,
        tol: keys.f64("tol", Some(1e-10))?,
        settle_tol: keys.f64("settle_tol", Some(1e-9))?,
        max_periods: keys.usize("max_periods", 5000)?,
        n_max: keys.usize("n_max", 8)?,
    };
    if solver.depth == 0 || solver.depth > MAX_DEPTH {
        return Err(cfg_err("depth", format!("must be in 1..={MAX_DEPTH}")));
    }
    for (k, v) in [("tol", solver.tol), ("settle_tol", solver.settle_tol)] {
        if v <= 0.0 {
            return Err(cfg_err(k, "must be positive"));
        }
    }
    if solver.max_periods == 0 {
        return Err(cfg_err("max_periods", "must be positive"));
    }
    if solver.n_max == 0 {
        return Err(cfg_err("n_max", "must be at least 1"));
    }

    let format = match keys.str("format")? {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => return Err(cfg_err("format", format!("expected \"csv\" or \"json\", got {other:?}"))),
    };
    let output = OutputConfig { path: keys.str("output")?.map(PathBuf::from), format };
    let compare_points = keys.usize("compare_points", 24)?;
    if compare_points == 0 {
        return Err(cfg_err("compare_points", "must be positive"));
    }
    Ok(RunConfig { model, sweep, solver, output, e_in: keys.complex("e_in")?, compare_points })
}

/// Subcommands of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    ResonantSweep,
    SidebandSweep,
    Oracle,
    Compare,
}

impl std::str::FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resonant-sweep" => Ok(Self::ResonantSweep),
            "sideband-sweep" => Ok(Self::SidebandSweep),
            "oracle" => Ok(Self::Oracle),
            "compare" => Ok(Self::Compare),
            other => Err(cfg_err("<subcommand>", format!("unknown subcommand {other:?}"))),
        }
    }
}

/// Flags that are not part of the configuration file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunFlags {
    pub hysteresis: bool,
}

/// Process exit code for a run result: 0 success, 1 configuration error,
/// 2 numerical failure.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_validation() || matches!(e, Error::Regime(_)) => 1,
        Err(_) => 2,
    }
}

/// Runs a subcommand and writes its output to the configured destination.
/// Nothing is written unless the computation succeeds; a failed file write
/// removes the partial file.
pub fn run_subcommand(cmd: Subcommand, config: &RunConfig, flags: RunFlags) -> Result<()> {
    let text = render(cmd, config, flags)?;
    match &config.output.path {
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(cfg_err("output", format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
        Some(path) => write_atomic(path, &text),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        let _ = std::fs::remove_file(path);
        cfg_err("output", format!("cannot write {}: {e}", path.display()))
    })
}

/// Produces the output text of a subcommand.
pub fn render(cmd: Subcommand, config: &RunConfig, flags: RunFlags) -> Result<String> {
    let model = Model::new(config.model)?;
    match cmd {
        Subcommand::ResonantSweep => render_resonant(config, &model),
        Subcommand::SidebandSweep => render_sideband(config, &model, flags),
        Subcommand::Oracle => render_oracle(config, &model),
        Subcommand::Compare => render_compare(config, &model),
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(config: &RunConfig) -> String {
    format!("# config: {}\n", serde_json::to_string(config).expect("config serializes"))
}

fn csv_line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn render_resonant(config: &RunConfig, model: &Model) -> Result<String> {
    let radii = config.sweep.grid();
    let pts = resonant::response_curve(model, &radii)?;
    let folds = resonant::folds(model, &radii)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.e_t.norm()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.e_in.norm()).collect();
    let signs = fold::slope_signs(&xs, &ys);
    match config.output.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("e_t_abs,e_in_abs,e_t_re,e_t_im,e_in_re,e_in_im,s0,sm_re,sm_im,slope_sign,stable\n");
            for (p, s) in pts.iter().zip(&signs) {
                csv_line(
                    &mut out,
                    &[
                        num(p.e_t.norm()),
                        num(p.e_in.norm()),
                        num(p.e_t.re),
                        num(p.e_t.im),
                        num(p.e_in.re),
                        num(p.e_in.im),
                        num(p.s0_eq),
                        num(p.sm_eq.re),
                        num(p.sm_eq.im),
                        s.to_string(),
                        p.stable.to_string(),
                    ],
                );
            }
            for f in &folds {
                let _ = writeln!(out, "# fold,{},{},{}", kind_name(f.kind), num(f.e_t_abs), num(f.e_in_star));
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = pts
                .iter()
                .zip(&signs)
                .map(|(p, s)| {
                    json!({
                        "e_t_abs": p.e_t.norm(), "e_in_abs": p.e_in.norm(),
                        "e_t_re": p.e_t.re, "e_t_im": p.e_t.im,
                        "e_in_re": p.e_in.re, "e_in_im": p.e_in.im,
                        "s0": p.s0_eq, "sm_re": p.sm_eq.re, "sm_im": p.sm_eq.im,
                        "slope_sign": s, "stable": p.stable,
                        "eigen_real_parts": p.eigen_real_parts,
                    })
                })
                .collect();
            to_json(json!({ "config": config, "rows": rows, "folds": folds }))
        }
    }
}

fn kind_name(kind: fold::FoldKind) -> &'static str {
    match kind {
        fold::FoldKind::LowerFold => "lower-fold",
        fold::FoldKind::UpperFold => "upper-fold",
    }
}

fn to_json(v: Value) -> Result<String> {
    serde_json::to_string_pretty(&v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Numerical(e.to_string()))
}

fn classified_sweep(config: &RunConfig, model: &Model) -> Result<ClassifiedCurve> {
    let curve = sweep::sweep(&config.sweep.grid(), model, config.solver.depth)?;
    classify_branches(curve)
}

fn render_sideband(config: &RunConfig, model: &Model, flags: RunFlags) -> Result<String> {
    let cc = classified_sweep(config, model)?;
    let reports: Vec<HysteresisReport> = if flags.hysteresis {
        vec![hysteresis(&cc, Direction::Up)?, hysteresis(&cc, Direction::Down)?]
    } else {
        Vec::new()
    };
    match config.output.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str(
                "e0_abs,e_in_abs,e0_re,e0_im,ep1_abs,em1_abs,a0_re,a0_im,a1_re,a1_im,am1_re,am1_im,slope_sign,stable\n",
            );
            for (i, p) in cc.curve.points.iter().enumerate() {
                csv_line(
                    &mut out,
                    &[
                        num(p.e0.norm()),
                        num(p.e_in.norm()),
                        num(p.e0.re),
                        num(p.e0.im),
                        num(p.mode_p1.norm()),
                        num(p.mode_m1.norm()),
                        num(p.a0.re),
                        num(p.a0.im),
                        num(p.a1.re),
                        num(p.a1.im),
                        num(p.am1.re),
                        num(p.am1.im),
                        cc.slope_signs[i].to_string(),
                        cc.stable[i].to_string(),
                    ],
                );
            }
            for g in &cc.curve.gaps {
                let _ = writeln!(out, "# gap,{}", num(*g));
            }
            for tp in &cc.turning_points {
                let _ = writeln!(
                    out,
                    "# turning_point,{},{},{},{},{}",
                    kind_name(tp.kind),
                    num(tp.e_in_star),
                    num(tp.e0_star),
                    tp.index_interval.0,
                    tp.index_interval.1
                );
            }
            for r in &reports {
                let dir = match r.direction {
                    Direction::Up => "up",
                    Direction::Down => "down",
                };
                for j in &r.jumps {
                    let vals: Vec<String> = j.before.iter().chain(&j.after).map(|v| num(*v)).collect();
                    let _ = writeln!(
                        out,
                        "# jump,{dir},{},{},{},{}",
                        num(j.e_in_at_jump),
                        num(j.e0_before),
                        num(j.e0_after),
                        vals.join(",")
                    );
                }
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = cc
                .curve
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    json!({
                        "e0_abs": p.e0.norm(), "e_in_abs": p.e_in.norm(),
                        "e0_re": p.e0.re, "e0_im": p.e0.im,
                        "ep1_abs": p.mode_p1.norm(), "em1_abs": p.mode_m1.norm(),
                        "a0_re": p.a0.re, "a0_im": p.a0.im,
                        "a1_re": p.a1.re, "a1_im": p.a1.im,
                        "am1_re": p.am1.re, "am1_im": p.am1.im,
                        "slope_sign": cc.slope_signs[i], "stable": cc.stable[i],
                    })
                })
                .collect();
            to_json(json!({
                "config": config,
                "rows": rows,
                "gaps": cc.curve.gaps,
                "turning_points": cc.turning_points,
                "hysteresis": reports,
            }))
        }
    }
}

fn render_oracle(config: &RunConfig, model: &Model) -> Result<String> {
    let traj = settle(config.e_in, model, &config.solver.settle_options())?;
    let h = extract_harmonics(&traj, model, config.solver.n_max)?;
    match config.output.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("t,s0,sm_re,sm_im,et_re,et_im\n");
            for ((t, s), e) in traj.times.iter().zip(&traj.states).zip(&traj.fields_total) {
                csv_line(&mut out, &[num(*t), num(s.s0), num(s.sm.re), num(s.sm.im), num(e.re), num(e.im)]);
            }
            for n in h.harmonics() {
                let (a, b, m) = (h.a(n), h.b(n), h.mode(n));
                let _ = writeln!(
                    out,
                    "# harmonic,{n},{},{},{},{},{},{}",
                    num(a.re),
                    num(a.im),
                    num(b.re),
                    num(b.im),
                    num(m.re),
                    num(m.im)
                );
            }
            Ok(out)
        }
        Format::Json => {
            let harmonics: Vec<Value> = h
                .harmonics()
                .map(|n| json!({ "n": n, "a": h.a(n), "b": h.b(n), "mode": h.mode(n) }))
                .collect();
            to_json(json!({ "config": config, "trajectory": traj, "harmonics": harmonics, "e_in": h.e_in }))
        }
    }
}

/// Indices of up to `count` stable sweep points with weak sidebands, spread
/// evenly over the stable segments and kept two samples away from folds.
pub fn comparison_indices(cc: &ClassifiedCurve, count: usize, max_ratio: f64) -> Vec<usize> {
    let last = cc.curve.len().saturating_sub(1);
    let eligible: Vec<usize> = cc
        .segments
        .iter()
        .filter(|s| s.stable)
        .flat_map(|s| {
            let lo = if s.start == 0 { 0 } else { s.start + 2 };
            let hi = if s.end == last { s.end } else { s.end.saturating_sub(2) };
            lo..=hi
        })
        .filter(|&i| cc.curve.points[i].e0.norm() > 0.0 && cc.curve.points[i].sideband_ratio() < max_ratio)
        .collect();
    if eligible.len() <= count {
        return eligible;
    }
    let mut picked: Vec<usize> = (0..count)
        .map(|k| eligible[(k * (eligible.len() - 1)) / (count - 1).max(1)])
        .collect();
    picked.dedup();
    picked
}

fn render_compare(config: &RunConfig, model: &Model) -> Result<String> {
    let cc = classified_sweep(config, model)?;
    let idx = comparison_indices(&cc, config.compare_points, 0.05);
    let opts = config.solver.settle_options();
    let rows: Vec<Comparison> = idx
        .par_iter()
        .map(|&i| compare_point(&cc.curve.points[i], model, &opts, config.solver.n_max))
        .collect::<Result<_>>()?;
    match config.output.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("e0_abs,e_in_abs,sideband_ratio,oracle_ratio,err_a0,err_a1,err_am1,tolerance,pass\n");
            for c in &rows {
                csv_line(
                    &mut out,
                    &[
                        num(c.e0.norm()),
                        num(c.e_in.norm()),
                        num(c.sideband_ratio),
                        num(c.oracle_ratio),
                        num(c.rel_err[0]),
                        num(c.rel_err[1]),
                        num(c.rel_err[2]),
                        num(c.tolerance),
                        c.passes().to_string(),
                    ],
                );
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|c| {
                    json!({
                        "e0_abs": c.e0.norm(), "e_in_abs": c.e_in.norm(),
                        "sideband_ratio": c.sideband_ratio, "oracle_ratio": c.oracle_ratio, "rel_err": c.rel_err,
                        "tolerance": c.tolerance, "pass": c.passes(),
                    })
                })
                .collect();
            to_json(json!({ "config": config, "rows": rows }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"r": 0.5, "theta": 3.14159, "delta": 0, "epsilon": 2, "n_eff": 101}"#;

    fn key_of(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.model.gamma, 1.0);
        assert_eq!(c.model.mu, 1.0);
        assert_eq!(c.solver.depth, 2);
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.solver.settle_tol, 1e-9);
        assert_eq!(c.solver.max_periods, 5000);
        assert_eq!(c.sweep.points, 400);
        assert_eq!(c.sweep.spacing, Spacing::Linear);
        assert_eq!((c.sweep.e0_min, c.sweep.e0_max), (0.0, 20.0));
        assert_eq!(c.output.format, Format::Csv);
        assert_eq!(c.output.path, None);
        assert_eq!(c.e_in, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(r#"{"theta": 0, "delta": 0, "epsilon": 2, "n_eff": 1}"#), "r");
        assert_eq!(key_of(&BASE.replace("101", "-1")), "n_eff");
        assert_eq!(key_of(&BASE.replace("\"r\": 0.5", "\"r\": \"big\"")), "r");
        assert_eq!(key_of(&BASE.replace('}', r#", "colour": 1}"#)), "colour");
        assert_eq!(key_of(&BASE.replace('}', r#", "points": 2}"#)), "points");
        assert_eq!(key_of(&BASE.replace('}', r#", "depth": 0}"#)), "depth");
        assert_eq!(key_of(&BASE.replace('}', r#", "tol": -1}"#)), "tol");
        assert_eq!(key_of(&BASE.replace('}', r#", "e0_min": 5, "e0_max": 1}"#)), "e0_max");
        assert_eq!(key_of(&BASE.replace('}', r#", "spacing": "log"}"#)), "e0_min");
        assert_eq!(key_of(&BASE.replace('}', r#", "format": "xml"}"#)), "format");
        assert_eq!(key_of("[1, 2]"), "<document>");
        assert_eq!(key_of("{"), "<document>");
    }

    #[test]
    fn complex_input_field() {
        let c = parse_config(&BASE.replace('}', r#", "e_in": [1.5, -0.5]}"#)).unwrap();
        assert_eq!(c.e_in, Complex64::new(1.5, -0.5));
        let c = parse_config(&BASE.replace('}', r#", "e_in": 2}"#)).unwrap();
        assert_eq!(c.e_in, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(())), 0);
        assert_eq!(exit_code(&Err(cfg_err("r", "bad"))), 1);
        assert_eq!(exit_code(&Err(Error::Settle { periods: 1, residual: 1.0 })), 2);
    }

    #[test]
    fn comparison_points_avoid_folds() {
        let cfg = parse_config(BASE).unwrap();
        let model = Model::new(cfg.model).unwrap();
        let cc = classified_sweep(&cfg, &model).unwrap();
        let idx = comparison_indices(&cc, 24, 0.05);
        assert_eq!(idx.len(), 24);
        for &i in &idx {
            assert!(cc.stable[i]);
            for tp in &cc.turning_points {
                assert!(i + 2 <= tp.index_interval.0 || i >= tp.index_interval.1 + 2);
            }
        }
    }
}
