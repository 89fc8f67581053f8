//! Canned experiments and mesh-refinement convergence studies.
//!
//! Experiments preload the reference parameter sets (viscosity, target
//! state, control gain, initial state, boundary tags) and emit one CSV of
//! observables per run, a final-state checkpoint, and a plain-text summary
//! with fitted decay rates next to the theoretical bound. The convergence
//! study runs the stabilized problem on a ladder of structured meshes
//! against a finer reference mesh with the same time step and reports
//! errors and rates at the evaluation time.

use crate::assembly::{Field, PhysicsParams};
use crate::error::{Error, Result};
use crate::io::write_checkpoint;
use crate::linalg::SolverConfig;
use crate::mesh::{build_structured_mesh, BoundaryTag, Side};
use crate::observables::{
    control_error, control_error_max, cross_mesh_error, decay_rate_fit, StabilityBounds,
    TimeSeries,
};
use crate::stepper::{
    all_sides, run, ControlMode, ForcedProblem, InitialField, InitialProjection, RunConfig,
};
use crate::transport::ConvectConfig;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Built-in experiment identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentId {
    Ex51,
    Ex52,
    Ex53Case1,
    Ex53Case2,
    Ex54,
    Custom,
}

impl ExperimentId {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ex51" => Ok(ExperimentId::Ex51),
            "ex52" => Ok(ExperimentId::Ex52),
            "ex53_case1" => Ok(ExperimentId::Ex53Case1),
            "ex53_case2" => Ok(ExperimentId::Ex53Case2),
            "ex54" => Ok(ExperimentId::Ex54),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(Error::InvalidArgument(format!(
                "unknown experiment '{other}' (expected ex51|ex52|ex53-case1|ex53-case2|ex54|custom)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Ex51 => "ex51",
            ExperimentId::Ex52 => "ex52",
            ExperimentId::Ex53Case1 => "ex53_case1",
            ExperimentId::Ex53Case2 => "ex53_case2",
            ExperimentId::Ex54 => "ex54",
            ExperimentId::Custom => "custom",
        }
    }
}

/// Parameters for a custom experiment built from the command line.
#[derive(Clone, Debug)]
pub struct CustomParams {
    pub physics: PhysicsParams,
    pub initial: InitialField,
    pub tags: [(Side, BoundaryTag); 4],
    pub forcing: Option<ForcedProblem>,
}

/// A resolved experiment invocation.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    /// Mesh subdivisions per side.
    pub n: usize,
    pub k: Option<f64>,
    pub t_final: Option<f64>,
    /// Restrict to a single control mode; `None` runs the experiment's
    /// default comparison set.
    pub mode: Option<ControlMode>,
    pub solver: Option<SolverConfig>,
    pub out_dir: PathBuf,
    /// Required when `id` is `Custom`.
    pub custom: Option<CustomParams>,
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            id,
            n: 32,
            k: None,
            t_final: None,
            mode: None,
            solver: None,
            out_dir: out_dir.into(),
            custom: None,
        }
    }
}

struct Preset {
    physics: PhysicsParams,
    initial: InitialField,
    forcing: Option<ForcedProblem>,
    t_final: f64,
    k: f64,
    /// (label, mode, tag rule) triples in emission order.
    runs: Vec<(&'static str, ControlMode, [(Side, BoundaryTag); 4])>,
}

fn preset(id: ExperimentId, custom: Option<&CustomParams>) -> Result<Preset> {
    use BoundaryTag::*;
    use ControlMode::*;
    let mixed = |gamma_n: [(Side, BoundaryTag); 4]| gamma_n;
    match id {
        ExperimentId::Ex51 => Ok(Preset {
            physics: PhysicsParams::new(1.0, 3.0, 1.0)?,
            initial: InitialField::PolyWell { offset: -3.0 },
            forcing: Option::None,
            t_final: 20.0,
            k: 1e-3,
            runs: vec![
                ("controlled", NonlinearFeedback, all_sides(NeumannControl)),
                ("uncontrolled", None, all_sides(NeumannZero)),
            ],
        }),
        ExperimentId::Ex52 => Ok(Preset {
            physics: PhysicsParams::new(0.05, 0.0, 1.0)?,
            initial: InitialField::SineProduct,
            forcing: Option::None,
            t_final: 20.0,
            k: 1e-3,
            runs: vec![
                ("controlled", NonlinearFeedback, all_sides(NeumannControl)),
                ("uncontrolled", None, all_sides(NeumannZero)),
            ],
        }),
        ExperimentId::Ex53Case1 => Ok(Preset {
            physics: PhysicsParams::new(0.01, 5.0, 10.0)?,
            initial: InitialField::CosineProduct { offset: -5.0 },
            forcing: Option::None,
            t_final: 10.0,
            k: 1e-3,
            runs: vec![
                (
                    "controlled",
                    NonlinearFeedback,
                    mixed([
                        (Side::Right, DirichletZero),
                        (Side::Left, NeumannControl),
                        (Side::Top, NeumannControl),
                        (Side::Bottom, NeumannControl),
                    ]),
                ),
                (
                    "uncontrolled",
                    None,
                    mixed([
                        (Side::Right, DirichletZero),
                        (Side::Left, NeumannZero),
                        (Side::Top, NeumannZero),
                        (Side::Bottom, NeumannZero),
                    ]),
                ),
            ],
        }),
        ExperimentId::Ex53Case2 => Ok(Preset {
            physics: PhysicsParams::new(0.01, 5.0, 10.0)?,
            initial: InitialField::CosineProduct { offset: -5.0 },
            forcing: Option::None,
            t_final: 10.0,
            k: 1e-3,
            runs: vec![
                (
                    "controlled",
                    NonlinearFeedback,
                    mixed([
                        (Side::Right, DirichletZero),
                        (Side::Left, NeumannControl),
                        (Side::Top, NeumannZero),
                        (Side::Bottom, NeumannZero),
                    ]),
                ),
                (
                    "uncontrolled",
                    None,
                    mixed([
                        (Side::Right, DirichletZero),
                        (Side::Left, NeumannZero),
                        (Side::Top, NeumannZero),
                        (Side::Bottom, NeumannZero),
                    ]),
                ),
            ],
        }),
        ExperimentId::Ex54 => Ok(Preset {
            physics: PhysicsParams::new(0.1, 0.0, 10.0)?,
            initial: InitialField::SineProductPlusLinear { slope: 0.2 },
            forcing: Some(ForcedProblem::LinearInX { slope: -0.2 }),
            t_final: 10.0,
            k: 1e-3,
            runs: vec![
                ("linear", LinearFeedback, all_sides(NeumannControl)),
                ("uncontrolled", None, all_sides(NeumannControl)),
            ],
        }),
        ExperimentId::Custom => {
            let c = custom.ok_or_else(|| {
                Error::InvalidArgument("custom experiment needs explicit parameters".into())
            })?;
            Ok(Preset {
                physics: c.physics,
                initial: c.initial,
                forcing: c.forcing,
                t_final: 10.0,
                k: 1e-3,
                runs: vec![
                    ("controlled", NonlinearFeedback, c.tags),
                    ("uncontrolled", None, c.tags),
                ],
            })
        }
    }
}

/// One completed run of an experiment.
pub struct RunOutput {
    pub label: String,
    pub mode: ControlMode,
    pub config: RunConfig,
    pub series: TimeSeries,
    pub final_state: Field,
    pub csv_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    pub summary_path: PathBuf,
}

/// Resolve the spec into concrete run configurations (label, config).
pub fn resolve_runs(spec: &ExperimentSpec) -> Result<Vec<(String, RunConfig)>> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("mesh subdivision must be >= 1".into()));
    }
    let p = preset(spec.id, spec.custom.as_ref())?;
    let k = spec.k.unwrap_or(p.k);
    let t_final = spec.t_final.unwrap_or(p.t_final);
    let mut out = Vec::new();
    for (label, mode, tags) in &p.runs {
        if let Some(only) = spec.mode {
            if only != *mode {
                continue;
            }
        }
        let cfg = RunConfig {
            k,
            t_final,
            physics: p.physics,
            mode: *mode,
            initial: p.initial,
            init_projection: InitialProjection::Interpolate,
            forcing: p.forcing,
            tags: *tags,
            solver: spec.solver,
            convect: ConvectConfig::default(),
        };
        cfg.validate()?;
        out.push((label.to_string(), cfg));
    }
    if let Some(only) = spec.mode {
        if out.is_empty() {
            // The requested mode is not part of the default set; run it
            // with the experiment's controlled tag rule.
            let tags = p.runs[0].2;
            let cfg = RunConfig {
                k,
                t_final,
                physics: p.physics,
                mode: only,
                initial: p.initial,
                init_projection: InitialProjection::Interpolate,
                forcing: p.forcing,
                tags,
                solver: spec.solver,
                convect: ConvectConfig::default(),
            };
            cfg.validate()?;
            out.push((only.name().to_string(), cfg));
        }
    }
    Ok(out)
}

/// Run the experiment and emit one observables CSV and one final-state
/// checkpoint per run, plus a summary file.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    std::fs::create_dir_all(&spec.out_dir)?;
    let mesh = build_structured_mesh(spec.n)?;
    let configs = resolve_runs(spec)?;
    let mut runs = Vec::new();
    for (label, cfg) in configs {
        let (series, final_state) = run(&cfg, &mesh)?;
        let stem = format!("{}_{}_n{}", spec.id.name(), label, spec.n);
        let csv_path = spec.out_dir.join(format!("{stem}.csv"));
        let mut provenance = vec![
            format!("experiment = {}", spec.id.name()),
            format!("run = {label}"),
            format!("n = {}", spec.n),
        ];
        provenance.extend(cfg.provenance());
        let mut file = std::fs::File::create(&csv_path)?;
        series.write_csv(&mut file, &provenance)?;
        let checkpoint_path = spec.out_dir.join(format!("{stem}.field"));
        write_checkpoint(&checkpoint_path, &final_state)?;
        runs.push(RunOutput {
            label,
            mode: cfg.mode,
            config: cfg,
            series,
            final_state,
            csv_path,
            checkpoint_path,
        });
    }
    let summary_path = spec.out_dir.join(format!("{}_summary.txt", spec.id.name()));
    std::fs::write(&summary_path, summarize(spec, &runs)?)?;
    Ok(ExperimentOutput { runs, summary_path })
}

fn summarize(spec: &ExperimentSpec, runs: &[RunOutput]) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "experiment = {}", spec.id.name()).unwrap();
    writeln!(out, "n = {}", spec.n).unwrap();
    writeln!(out, "runs = {}", runs.len()).unwrap();
    for r in runs {
        writeln!(out).unwrap();
        writeln!(out, "[{}]", r.label).unwrap();
        for line in r.config.provenance() {
            writeln!(out, "{line}").unwrap();
        }
        let bounds = StabilityBounds::for_polygon(
            &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            &r.config.physics,
        )?;
        writeln!(out, "c_f = {}", bounds.c_f).unwrap();
        writeln!(out, "alpha_max = {}", bounds.alpha_max).unwrap();
        writeln!(out, "c_lyp = {}", bounds.c_lyp).unwrap();
        writeln!(out, "steps = {}", r.series.n_steps()).unwrap();
        let first = r.series.first().unwrap();
        let last = r.series.last().unwrap();
        writeln!(out, "initial_l2 = {:.16e}", first.l2).unwrap();
        writeln!(out, "final_t = {}", last.t).unwrap();
        writeln!(out, "final_l2 = {:.16e}", last.l2).unwrap();
        writeln!(out, "final_h1semi = {:.16e}", last.h1_semi).unwrap();
        writeln!(out, "final_ctrl_l2 = {:.16e}", last.ctrl_l2).unwrap();
        let window = (0.1 * last.t, 0.9 * last.t);
        match decay_rate_fit(&r.series, window) {
            Ok(rate) => writeln!(
                out,
                "fitted_decay_rate[{},{}] = {:.6}",
                window.0, window.1, rate
            )
            .unwrap(),
            Err(_) => writeln!(out, "fitted_decay_rate[{},{}] = undefined", window.0, window.1)
                .unwrap(),
        }
        match r.series.first_time_below(0.1 * first.l2) {
            Some(t) => writeln!(out, "first_t_below_tenth = {t}").unwrap(),
            Option::None => writeln!(out, "first_t_below_tenth = never").unwrap(),
        }
    }
    Ok(out)
}

/// Configuration of a refinement study (the stabilized reference problem
/// run on every level and on a finer reference mesh with the same k).
#[derive(Clone, Debug)]
pub struct ConvergenceSpec {
    pub levels: Vec<usize>,
    pub reference: usize,
    pub k: f64,
    /// Errors are evaluated at this time; also the final time of the runs.
    pub t_eval: f64,
    pub out_dir: PathBuf,
    pub solver: Option<SolverConfig>,
}

impl ConvergenceSpec {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ConvergenceSpec {
            levels: vec![8, 16, 32],
            reference: 128,
            k: 1e-4,
            t_eval: 1.0,
            out_dir: out_dir.into(),
            solver: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("no refinement levels given".into()));
        }
        if self.levels.contains(&0) {
            return Err(Error::InvalidArgument("levels must be >= 1".into()));
        }
        let max = *self.levels.iter().max().unwrap();
        if self.reference <= max {
            return Err(Error::InvalidArgument(format!(
                "reference level {} must be strictly finer than the finest study level {max}",
                self.reference
            )));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(Error::InvalidArgument(format!("bad time step {}", self.k)));
        }
        if self.t_eval < self.k {
            return Err(Error::InvalidArgument(
                "evaluation time is shorter than one step".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LevelRow {
    pub n: usize,
    /// Grid spacing 1/n.
    pub h: f64,
    pub l2_err: f64,
    pub l2_rate: Option<f64>,
    pub h1_err: f64,
    pub h1_rate: Option<f64>,
    pub ctrl_err: f64,
    pub ctrl_rate: Option<f64>,
    pub ctrl_max_err: f64,
    pub ctrl_max_rate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    pub reference: usize,
    pub k: f64,
    pub t_eval: f64,
    pub physics: PhysicsParams,
}

impl ConvergenceReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# errors against the n={} reference at t = {}, k = {}, nu = {}, w_d = {}, c0 = {}",
            self.reference, self.t_eval, self.k, self.physics.nu, self.physics.w_d, self.physics.c0
        )
        .unwrap();
        writeln!(
            out,
            "{:>6} {:>13} {:>6} {:>13} {:>6} {:>13} {:>6} {:>13} {:>6}",
            "h", "l2_err", "rate", "h1_err", "rate", "ctrl_err", "rate", "ctrl_max", "rate"
        )
        .unwrap();
        let fr = |r: Option<f64>| match r {
            Some(v) if v.is_finite() => format!("{v:.2}"),
            _ => "undef".to_string(),
        };
        for row in &self.rows {
            writeln!(
                out,
                "{:>6} {:>13.4e} {:>6} {:>13.4e} {:>6} {:>13.4e} {:>6} {:>13.4e} {:>6}",
                format!("1/{}", row.n),
                row.l2_err,
                fr(row.l2_rate),
                row.h1_err,
                fr(row.h1_rate),
                row.ctrl_err,
                fr(row.ctrl_rate),
                row.ctrl_max_err,
                fr(row.ctrl_max_rate),
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# reference = {}, t_eval = {}, k = {}, nu = {}, w_d = {}, c0 = {}",
            self.reference, self.t_eval, self.k, self.physics.nu, self.physics.w_d, self.physics.c0
        )
        .unwrap();
        writeln!(out, "n,h,l2_err,l2_rate,h1_err,h1_rate,ctrl_err,ctrl_rate,ctrl_max_err,ctrl_max_rate").unwrap();
        let fr = |r: Option<f64>| match r {
            Some(v) if v.is_finite() => format!("{v:.16e}"),
            _ => String::new(),
        };
        for row in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{},{:.16e},{},{:.16e},{}",
                row.n,
                row.h,
                row.l2_err,
                fr(row.l2_rate),
                row.h1_err,
                fr(row.h1_rate),
                row.ctrl_err,
                fr(row.ctrl_rate),
                row.ctrl_max_err,
                fr(row.ctrl_max_rate),
            )
            .unwrap();
        }
        out
    }
}

fn rate_between(err_coarse: f64, h_coarse: f64, err_fine: f64, h_fine: f64) -> Option<f64> {
    if !(err_coarse > 0.0 && err_fine > 0.0) {
        return None;
    }
    let dh = (h_coarse / h_fine).log2();
    if dh == 0.0 {
        return None;
    }
    Some((err_coarse / err_fine).log2() / dh)
}

/// Reference-problem configuration used by the study (nonlinear feedback,
/// controlled on the whole boundary).
fn study_config(k: f64, t_eval: f64, solver: Option<SolverConfig>) -> RunConfig {
    RunConfig {
        k,
        t_final: t_eval,
        physics: PhysicsParams::new(1.0, 3.0, 1.0).expect("reference parameters"),
        mode: ControlMode::NonlinearFeedback,
        initial: InitialField::PolyWell { offset: -3.0 },
        init_projection: InitialProjection::Interpolate,
        forcing: None,
        tags: all_sides(BoundaryTag::NeumannControl),
        solver,
        convect: ConvectConfig::default(),
    }
}

/// Run the refinement study. Levels and the reference run concurrently;
/// per-level time series are written as they complete, then errors and
/// rates are computed against the reference. On a failed run, the partial
/// outputs stay on disk and the error names the level.
pub fn run_convergence(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)?;
    let cfg = study_config(spec.k, spec.t_eval, spec.solver);

    let mut jobs: Vec<usize> = spec.levels.clone();
    jobs.push(spec.reference);
    let mut results: Vec<Option<Result<(TimeSeries, Field)>>> = Vec::new();
    results.resize_with(jobs.len(), || None);

    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &n in &jobs {
            let cfg = cfg.clone();
            handles.push(scope.spawn(move || -> Result<(TimeSeries, Field)> {
                let mesh = build_structured_mesh(n)?;
                run(&cfg, &mesh)
            }));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("level run panicked"));
        }
    });

    // Emit per-run series before touching errors, so failures still leave
    // a partial record behind.
    let mut fields: Vec<Option<Field>> = Vec::new();
    let mut first_failure: Option<Error> = None;
    for (&n, slot) in jobs.iter().zip(results) {
        let name = if n == spec.reference {
            format!("reference_n{n}.csv")
        } else {
            format!("level_n{n}.csv")
        };
        match slot.unwrap() {
            Ok((series, field)) => {
                let mut provenance = vec![format!("study_level_n = {n}")];
                provenance.extend(cfg.provenance());
                let mut file = std::fs::File::create(spec.out_dir.join(name))?;
                series.write_csv(&mut file, &provenance)?;
                fields.push(Some(field));
            }
            Err(e) => {
                if first_failure.is_none() {
                    first_failure = Some(Error::LevelFailed {
                        level: n,
                        source: Box::new(e),
                    });
                }
                fields.push(None);
            }
        }
    }
    if let Some(e) = first_failure {
        return Err(e);
    }
    let reference = fields.pop().unwrap().unwrap();

    let mut rows: Vec<LevelRow> = Vec::new();
    for (&n, field) in spec.levels.iter().zip(fields) {
        let field = field.unwrap();
        let (l2, h1) = cross_mesh_error(&field, &reference)?;
        let ctrl = control_error(&field, &reference, &cfg.physics, cfg.mode)?;
        let ctrl_max = control_error_max(&field, &reference, &cfg.physics, cfg.mode)?;
        let h = 1.0 / n as f64;
        let rate = |prev: Option<&LevelRow>, pick: fn(&LevelRow) -> f64, err: f64| {
            prev.and_then(|p| rate_between(pick(p), p.h, err, h))
        };
        let prev = rows.last();
        let row = LevelRow {
            n,
            h,
            l2_err: l2,
            l2_rate: rate(prev, |r| r.l2_err, l2),
            h1_err: h1,
            h1_rate: rate(prev, |r| r.h1_err, h1),
            ctrl_err: ctrl,
            ctrl_rate: rate(prev, |r| r.ctrl_err, ctrl),
            ctrl_max_err: ctrl_max,
            ctrl_max_rate: rate(prev, |r| r.ctrl_max_err, ctrl_max),
        };
        rows.push(row);
    }
    let report = ConvergenceReport {
        rows,
        reference: spec.reference,
        k: spec.k,
        t_eval: spec.t_eval,
        physics: cfg.physics,
    };
    std::fs::write(spec.out_dir.join("convergence_report.txt"), report.to_table())?;
    std::fs::write(spec.out_dir.join("convergence.csv"), report.to_csv())?;
    Ok(report)
}

/// Parse a tag rule of the form
/// `left=control,right=dirichlet,top=zero,bottom=control`.
pub fn parse_tag_rule(s: &str) -> Result<[(Side, BoundaryTag); 4]> {
    let mut out: Vec<(Side, BoundaryTag)> = Vec::new();
    for part in s.split(',') {
        let (side, tag) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("bad tag assignment '{part}'")))?;
        let side = match side.trim() {
            "left" => Side::Left,
            "right" => Side::Right,
            "top" => Side::Top,
            "bottom" => Side::Bottom,
            other => {
                return Err(Error::InvalidArgument(format!("unknown side '{other}'")));
            }
        };
        let tag = match tag.trim() {
            "control" => BoundaryTag::NeumannControl,
            "zero" => BoundaryTag::NeumannZero,
            "dirichlet" => BoundaryTag::DirichletZero,
            other => {
                return Err(Error::InvalidArgument(format!("unknown tag '{other}'")));
            }
        };
        out.push((side, tag));
    }
    out.try_into()
        .map_err(|_| Error::InvalidArgument("tag rule must assign exactly four sides".into()))
}

/// Parse an initial-state id such as `poly-well:-3`, `sine-product`,
/// `cosine-product:-5`, `sine-linear:0.2`, or `constant:1.5`.
pub fn parse_initial(s: &str) -> Result<InitialField> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| Error::InvalidArgument(format!("initial state '{name}' needs a parameter")))?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad parameter in '{s}'")))
    };
    match name {
        "poly-well" => Ok(InitialField::PolyWell { offset: num(arg)? }),
        "sine-product" => Ok(InitialField::SineProduct),
        "cosine-product" => Ok(InitialField::CosineProduct { offset: num(arg)? }),
        "sine-linear" => Ok(InitialField::SineProductPlusLinear { slope: num(arg)? }),
        "constant" => Ok(InitialField::Constant { value: num(arg)? }),
        other => Err(Error::InvalidArgument(format!(
            "unknown initial state '{other}'"
        ))),
    }
}
