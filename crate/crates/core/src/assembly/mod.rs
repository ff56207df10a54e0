//! Discrete states, boundary/source specifications, nonlinear residuals of
//! the backward-Euler/TPFA discretization, and the per-scheme linear-system
//! assemblies.

mod systems;

pub use systems::{
    assemble_flow_subsystem, assemble_ls_mono, assemble_newton_mono,
    assemble_transport_subsystem, LParams, Linearization,
};

use std::sync::Arc;

use thiserror::Error;

use crate::constitutive::ConstitutiveSet;
use crate::grid::{Side, StructuredGrid};
use crate::linalg::SparseMatrix;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("non-finite value in field {field} at cell {cell}")]
    NonFinite { field: &'static str, cell: usize },
    #[error("field {field} has length {len}, expected {expected}")]
    DimensionMismatch { field: &'static str, len: usize, expected: usize },
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("L-scheme parameters must be positive, got L1={l1}, L2={l2}, L3={l3}")]
    NonPositiveL { l1: f64, l2: f64, l3: f64 },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Cell fields of one time level or one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
    pub conc: Vec<f64>,
    pub time: f64,
}

impl DiscreteState {
    pub fn new(psi: Vec<f64>, theta: Vec<f64>, conc: Vec<f64>, time: f64) -> Self {
        DiscreteState { psi, theta, conc, time }
    }

    pub fn num_cells(&self) -> usize {
        self.psi.len()
    }

    pub fn validate(&self, n: usize) -> Result<(), AssemblyError> {
        for (field, v) in [("psi", &self.psi), ("theta", &self.theta), ("conc", &self.conc)] {
            if v.len() != n {
                return Err(AssemblyError::DimensionMismatch { field, len: v.len(), expected: n });
            }
            if let Some(cell) = v.iter().position(|x| !x.is_finite()) {
                return Err(AssemblyError::NonFinite { field, cell });
            }
        }
        Ok(())
    }

    /// Concatenated (psi, theta, conc) vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.num_cells());
        v.extend_from_slice(&self.psi);
        v.extend_from_slice(&self.theta);
        v.extend_from_slice(&self.conc);
        v
    }

    pub fn from_vec(v: &[f64], n: usize, time: f64) -> Self {
        debug_assert_eq!(v.len(), 3 * n);
        DiscreteState {
            psi: v[..n].to_vec(),
            theta: v[n..2 * n].to_vec(),
            conc: v[2 * n..].to_vec(),
            time,
        }
    }
}

/// Boundary value function of (x, y, t).
pub type BoundaryFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SideCondition {
    Dirichlet { psi: BoundaryFn, conc: BoundaryFn },
    NeumannZero,
}

impl std::fmt::Debug for SideCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SideCondition::Dirichlet { .. } => f.write_str("Dirichlet"),
            SideCondition::NeumannZero => f.write_str("NeumannZero"),
        }
    }
}

/// One condition per side of the unit square.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub left: SideCondition,
    pub right: SideCondition,
    pub bottom: SideCondition,
    pub top: SideCondition,
}

impl BoundarySpec {
    pub fn side(&self, s: Side) -> &SideCondition {
        match s {
            Side::Left => &self.left,
            Side::Right => &self.right,
            Side::Bottom => &self.bottom,
            Side::Top => &self.top,
        }
    }

    /// Dirichlet data on every side.
    pub fn dirichlet_everywhere(
        psi: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        conc: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let psi: BoundaryFn = Arc::new(psi);
        let conc: BoundaryFn = Arc::new(conc);
        let side = SideCondition::Dirichlet { psi: psi.clone(), conc: conc.clone() };
        BoundarySpec {
            left: side.clone(),
            right: side.clone(),
            bottom: side.clone(),
            top: side,
        }
    }

    pub fn neumann_everywhere() -> Self {
        BoundarySpec {
            left: SideCondition::NeumannZero,
            right: SideCondition::NeumannZero,
            bottom: SideCondition::NeumannZero,
            top: SideCondition::NeumannZero,
        }
    }
}

/// External sink/source densities of the flow and transport equations.
#[derive(Clone)]
pub struct SourceSpec {
    pub s1: BoundaryFn,
    pub s2: BoundaryFn,
}

impl std::fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SourceSpec")
    }
}

impl SourceSpec {
    pub fn new(
        s1: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        s2: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SourceSpec { s1: Arc::new(s1), s2: Arc::new(s2) }
    }

    pub fn zero() -> Self {
        SourceSpec::new(|_, _, _| 0.0, |_, _, _| 0.0)
    }
}

/// How face conductivity is averaged from the two cell values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KAveraging {
    #[default]
    Arithmetic,
    Upstream,
}

/// One complete problem definition: geometry, model functions, boundary and
/// source data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: StructuredGrid,
    pub model: ConstitutiveSet,
    pub bc: BoundarySpec,
    pub src: SourceSpec,
    pub k_avg: KAveraging,
}

impl Problem {
    pub fn new(grid: StructuredGrid, model: ConstitutiveSet, bc: BoundarySpec, src: SourceSpec) -> Self {
        Problem { grid, model, bc, src, k_avg: KAveraging::Arithmetic }
    }

    pub fn num_cells(&self) -> usize {
        self.grid.num_cells()
    }
}

/// Unknown block of a linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Psi,
    Theta,
    Conc,
}

/// Block ordering and sizes of an assembled system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLayout {
    pub blocks: Vec<(Field, usize)>,
}

impl UnknownLayout {
    pub fn total(&self) -> usize {
        self.blocks.iter().map(|&(_, n)| n).sum()
    }

    pub fn offset(&self, field: Field) -> Option<usize> {
        let mut off = 0;
        for &(f, n) in &self.blocks {
            if f == field {
                return Some(off);
            }
            off += n;
        }
        None
    }
}

/// Matrix and right-hand side of one linearized iteration.
#[derive(Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub layout: UnknownLayout,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

/// Water fluxes through every face, signed outward for the owner cell
/// (interior) or the adjacent cell (boundary).
#[derive(Debug, Clone)]
pub struct WaterFlux {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

/// TPFA water flux -T K (dPsi + dz) on every face, with the face K averaged
/// from the adjacent cell values and Dirichlet data entering through
/// half-cell transmissibilities. Boundary faces average the cell K with a
/// ghost value at the previous time level (`theta_bnd`); the half-weight
/// keeps the face-K derivatives telescoping across boundary rows, which the
/// Newton matrix needs on fine meshes, at an O(dt) consistency cost.
pub fn water_flux(psi: &[f64], theta: &[f64], theta_bnd: &[f64], t: f64, p: &Problem) -> WaterFlux {
    let g = &p.grid;
    let m = &p.model;
    let mut interior = Vec::with_capacity(g.interior_faces.len());
    for f in &g.interior_faces {
        let dz = g.dz_interior(f);
        let dpot = psi[f.neighbor] - psi[f.owner] + dz;
        let k = match p.k_avg {
            KAveraging::Arithmetic => 0.5 * (m.k(theta[f.owner]) + m.k(theta[f.neighbor])),
            KAveraging::Upstream => {
                // dpot <= 0 drives flow owner -> neighbor: owner is upstream
                if dpot <= 0.0 {
                    m.k(theta[f.owner])
                } else {
                    m.k(theta[f.neighbor])
                }
            }
        };
        interior.push(-f.trans * k * dpot);
    }
    let mut boundary = Vec::with_capacity(g.boundary_faces.len());
    for f in &g.boundary_faces {
        match p.bc.side(f.side) {
            SideCondition::NeumannZero => boundary.push(0.0),
            SideCondition::Dirichlet { psi: psi_b, .. } => {
                let (x, y) = f.midpoint;
                let pb = psi_b(x, y, t);
                let dz = g.dz_boundary(f);
                let k = m.k(theta[f.cell]); let _ = theta_bnd;
                boundary.push(-f.trans * k * (pb - psi[f.cell] + dz));
            }
        }
    }
    WaterFlux { interior, boundary }
}

/// Per-cell mass-balance and closure residuals of the fully implicit system.
#[derive(Debug, Clone)]
pub struct FlowResidual {
    pub mass: Vec<f64>,
    pub closure: Vec<f64>,
}

/// Nonlinear flow residuals at `new`, given the previous time level `old`.
///
/// mass: |cell| (theta - theta_old) + dt * sum(outward water flux) - dt |cell| S1
/// closure: |cell| [dt psi + dt pcap(theta, c) - tau(theta)(theta - theta_old)
///                  - dt gamma Phi((theta - theta_old)/dt)]
pub fn residual_flow(
    new: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
) -> Result<FlowResidual, AssemblyError> {
    let n = p.num_cells();
    new.validate(n)?;
    old.validate(n)?;
    if dt <= 0.0 {
        return Err(AssemblyError::NonPositiveDt(dt));
    }
    let g = &p.grid;
    let m = &p.model;
    let vol = g.cell_volume();
    let t = new.time;
    let flux = water_flux(&new.psi, &new.theta, &old.theta, t, p);

    let mut mass = vec![0.0; n];
    let mut closure = vec![0.0; n];
    for i in 0..n {
        let dtheta = new.theta[i] - old.theta[i];
        let (x, y) = g.cell_centers[i];
        mass[i] = vol * dtheta - dt * vol * (p.src.s1)(x, y, t);
        closure[i] = vol
            * (dt * new.psi[i] + dt * m.pcap(new.theta[i], new.conc[i])
                - m.tau(new.theta[i]) * dtheta
                - dt * m.gamma * m.phi(dtheta / dt));
    }
    for (f, q) in g.interior_faces.iter().zip(&flux.interior) {
        mass[f.owner] += dt * q;
        mass[f.neighbor] -= dt * q;
    }
    for (f, q) in g.boundary_faces.iter().zip(&flux.boundary) {
        mass[f.cell] += dt * q;
    }
    for i in 0..n {
        if !mass[i].is_finite() {
            return Err(AssemblyError::NonFinite { field: "mass residual", cell: i });
        }
        if !closure[i].is_finite() {
            return Err(AssemblyError::NonFinite { field: "closure residual", cell: i });
        }
    }
    Ok(FlowResidual { mass, closure })
}

/// Nonlinear transport residual at `new`:
/// |cell| [theta (c - c_old) + c (theta - theta_old)] + dt sum(F_c)
/// + dt |cell| R(c) - dt |cell| S2, with F_c = -T D dc + c_upwind q_w.
pub fn residual_transport(
    new: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
) -> Result<Vec<f64>, AssemblyError> {
    let n = p.num_cells();
    new.validate(n)?;
    old.validate(n)?;
    if dt <= 0.0 {
        return Err(AssemblyError::NonPositiveDt(dt));
    }
    let g = &p.grid;
    let m = &p.model;
    let vol = g.cell_volume();
    let t = new.time;
    let flux = water_flux(&new.psi, &new.theta, &old.theta, t, p);

    let mut res = vec![0.0; n];
    for i in 0..n {
        let (x, y) = g.cell_centers[i];
        res[i] = vol
            * (new.theta[i] * (new.conc[i] - old.conc[i])
                + new.conc[i] * (new.theta[i] - old.theta[i]))
            + dt * vol * m.reaction(new.conc[i])
            - dt * vol * (p.src.s2)(x, y, t);
    }
    for (f, &q) in g.interior_faces.iter().zip(&flux.interior) {
        let dc = new.conc[f.neighbor] - new.conc[f.owner];
        let c_up = if q >= 0.0 { new.conc[f.owner] } else { new.conc[f.neighbor] };
        let fc = -f.trans * m.diffusion * dc + c_up * q;
        res[f.owner] += dt * fc;
        res[f.neighbor] -= dt * fc;
    }
    for (f, &q) in g.boundary_faces.iter().zip(&flux.boundary) {
        match p.bc.side(f.side) {
            SideCondition::NeumannZero => {}
            SideCondition::Dirichlet { conc: conc_b, .. } => {
                let (x, y) = f.midpoint;
                let cb = conc_b(x, y, t);
                let dc = cb - new.conc[f.cell];
                // the advective flux carries the boundary trace itself; an
                // upwinded interior value is inconsistent on outflow faces
                res[f.cell] += dt * (-f.trans * m.diffusion * dc + cb * q);
            }
        }
    }
    for (i, r) in res.iter().enumerate() {
        if !r.is_finite() {
            return Err(AssemblyError::NonFinite { field: "transport residual", cell: i });
        }
    }
    Ok(res)
}
