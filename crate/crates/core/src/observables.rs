//! Norms, Lyapunov energy, control traces, theoretical stability
//! constants, decay-rate fits and cross-mesh error measurement.

use crate::assembly::{assemble_mass, assemble_stiffness, edge_quad, Field, PhysicsParams};
use crate::error::{Error, Result};
use crate::linalg::SparseOperator;
use crate::mesh::BoundaryTag;
use crate::stepper::ControlMode;
use std::io::Write;

/// Constants derived from the domain and the physical parameters.
#[derive(Clone, Copy, Debug)]
pub struct StabilityBounds {
    /// Friedrichs constant of the domain.
    pub c_f: f64,
    /// Certified decay-rate bound for the state norm.
    pub alpha_max: f64,
    /// Lyapunov decay rate, 2·alpha_max.
    pub c_lyp: f64,
}

impl StabilityBounds {
    pub fn new(c_f: f64, params: &PhysicsParams) -> Self {
        let alpha_max = params.nu.min(params.c0 + params.w_d) / c_f;
        StabilityBounds {
            c_f,
            alpha_max,
            c_lyp: 2.0 * alpha_max,
        }
    }

    /// Bounds for a polygonal domain given by its vertices.
    pub fn for_polygon(vertices: &[(f64, f64)], params: &PhysicsParams) -> Result<Self> {
        Ok(Self::new(friedrichs_constant(vertices)?, params))
    }
}

/// Friedrichs constant of a polygon: max of sup |x|² and sup |x| over the
/// boundary. On a polygon the supremum of |x| is attained at a vertex.
pub fn friedrichs_constant(vertices: &[(f64, f64)]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    let r_sq = vertices
        .iter()
        .map(|&(x, y)| x * x + y * y)
        .fold(0.0, f64::max);
    Ok(r_sq.max(r_sq.sqrt()))
}

/// One recorded time step.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub t: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub ctrl_l2: f64,
    /// Lyapunov energy V = ½ ‖W‖².
    pub energy: f64,
}

/// Observables per time step, `t` strictly increasing.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn push(&mut self, t: f64, l2: f64, h1_semi: f64, ctrl_l2: f64) {
        if let Some(last) = self.samples.last() {
            assert!(t > last.t, "time samples must be strictly increasing");
        }
        self.samples.push(Sample {
            t,
            l2,
            h1_semi,
            ctrl_l2,
            energy: 0.5 * l2 * l2,
        });
    }

    /// Number of advanced steps (samples after the initial state).
    pub fn n_steps(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Earliest recorded time with the state norm strictly below
    /// `threshold`, if any.
    pub fn first_time_below(&self, threshold: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.l2 < threshold).map(|s| s.t)
    }

    /// Write the CSV format: `#`-prefixed provenance lines, the exact
    /// header, then one row per sample with 17 significant digits.
    pub fn write_csv(&self, out: &mut impl Write, provenance: &[String]) -> std::io::Result<()> {
        for line in provenance {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "t,l2,h1semi,ctrl_l2,energy")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.l2, s.h1_semi, s.ctrl_l2, s.energy
            )?;
        }
        Ok(())
    }
}

/// Pointwise feedback law applied to a state value.
pub fn feedback_value(w: f64, params: &PhysicsParams, mode: ControlMode) -> f64 {
    match mode {
        ControlMode::NonlinearFeedback => {
            -(2.0 * (params.c0 + params.w_d) * w + 2.0 / (9.0 * params.c0) * w * w * w) / params.nu
        }
        ControlMode::LinearFeedback => -params.c0 * w / params.nu,
        ControlMode::None => 0.0,
    }
}

/// Nodal control values on the control boundary: pairs of node index and
/// v₂ at that node. Nodes not on a control edge are excluded. `None` mode
/// yields an empty trace.
pub fn control_trace(w: &Field, params: &PhysicsParams, mode: ControlMode) -> Vec<(usize, f64)> {
    if mode == ControlMode::None {
        return Vec::new();
    }
    w.mesh()
        .boundary_nodes_with_tag(BoundaryTag::NeumannControl)
        .into_iter()
        .map(|i| (i, feedback_value(w.values()[i], params, mode)))
        .collect()
}

/// (L² norm, H¹ seminorm, boundary L² norm) of a field from the assembled
/// mass, stiffness and boundary-mass operators.
pub fn norms(
    w: &Field,
    mass: &SparseOperator,
    stiffness: &SparseOperator,
    boundary_mass: &SparseOperator,
) -> Result<(f64, f64, f64)> {
    for op in [mass, stiffness, boundary_mass] {
        if op.dim() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                found: op.dim(),
            });
        }
    }
    let q = |op: &SparseOperator| op.quadratic_form(w.values()).max(0.0).sqrt();
    Ok((q(mass), q(stiffness), q(boundary_mass)))
}

/// Least-squares slope of −log ‖W(t)‖ over the samples inside the window.
pub fn decay_rate_fit(series: &TimeSeries, window: (f64, f64)) -> Result<f64> {
    let samples: Vec<&Sample> = series
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .collect();
    if samples.len() < 2 {
        return Err(Error::UndefinedFit(format!(
            "need at least 2 samples in [{}, {}], found {}",
            window.0,
            window.1,
            samples.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.l2 <= 0.0) {
        return Err(Error::UndefinedFit(format!(
            "nonpositive norm {} at t = {}",
            s.l2, s.t
        )));
    }
    let n = samples.len() as f64;
    let tbar = samples.iter().map(|s| s.t).sum::<f64>() / n;
    let ybar = samples.iter().map(|s| -s.l2.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &samples {
        let dt = s.t - tbar;
        num += dt * (-s.l2.ln() - ybar);
        den += dt * dt;
    }
    if den == 0.0 {
        return Err(Error::UndefinedFit("zero time spread in window".into()));
    }
    Ok(num / den)
}

/// L² and H¹-seminorm differences between a coarse-mesh field and a field
/// on a strictly finer reference mesh. The coarse field is sampled at the
/// reference nodes and the difference is measured with the reference mass
/// and stiffness operators.
pub fn cross_mesh_error(coarse: &Field, reference: &Field) -> Result<(f64, f64)> {
    if reference.mesh().h() >= coarse.mesh().h() {
        return Err(Error::InvalidArgument(
            "reference mesh must be strictly finer than the coarse mesh".into(),
        ));
    }
    let rm = reference.mesh();
    let mut diff = vec![0.0; rm.n_nodes()];
    for (i, &p) in rm.nodes.iter().enumerate() {
        diff[i] = coarse.eval(p)? - reference.values()[i];
    }
    let mass = assemble_mass(rm);
    let stiffness = assemble_stiffness(rm);
    let l2 = mass.quadratic_form(&diff).max(0.0).sqrt();
    let h1 = stiffness.quadratic_form(&diff).max(0.0).sqrt();
    Ok((l2, h1))
}

/// L²(∂Ω) norm of the difference between the control traces of a coarse
/// and a reference solution, both evaluated through the feedback law at
/// the reference boundary quadrature points (control-tagged edges).
pub fn control_error(
    coarse: &Field,
    reference: &Field,
    params: &PhysicsParams,
    mode: ControlMode,
) -> Result<f64> {
    if reference.mesh().h() >= coarse.mesh().h() {
        return Err(Error::InvalidArgument(
            "reference mesh must be strictly finer than the coarse mesh".into(),
        ));
    }
    let rm = reference.mesh();
    let rule = edge_quad();
    let mut acc = 0.0;
    for edge in &rm.boundary_edges {
        if edge.tag != BoundaryTag::NeumannControl {
            continue;
        }
        let len = edge.length(rm);
        let (xa, ya) = rm.nodes[edge.a];
        let (xb, yb) = rm.nodes[edge.b];
        let wa = reference.values()[edge.a];
        let wb = reference.values()[edge.b];
        for (s, q) in rule {
            let p = (xa + s * (xb - xa), ya + s * (yb - ya));
            let w_ref = wa + s * (wb - wa);
            let w_coarse = coarse.eval(p)?;
            let d = feedback_value(w_coarse, params, mode) - feedback_value(w_ref, params, mode);
            acc += q * len * d * d;
        }
    }
    Ok(acc.sqrt())
}

/// Max-over-reference-boundary-nodes variant of [`control_error`],
/// reported alongside the L² version in convergence studies.
pub fn control_error_max(
    coarse: &Field,
    reference: &Field,
    params: &PhysicsParams,
    mode: ControlMode,
) -> Result<f64> {
    let rm = reference.mesh();
    let mut worst: f64 = 0.0;
    for i in rm.boundary_nodes_with_tag(BoundaryTag::NeumannControl) {
        let p = rm.nodes[i];
        let d = feedback_value(coarse.eval(p)?, params, mode)
            - feedback_value(reference.values()[i], params, mode);
        worst = worst.max(d.abs());
    }
    Ok(worst)
}
