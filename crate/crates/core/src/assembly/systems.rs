//! Per-iteration linear systems of the five solver schemes.
//!
//! Sign convention: every equation is written as LHS(x') = RHS with x' the
//! new iterate; frozen quantities are evaluated at the supplied linearization
//! point. The regularized hysteresis term is always lagged and therefore
//! contributes only to the right-hand side.

use super::{
    AssemblyError, DiscreteState, Field, KAveraging, LinearSystem, Problem, SideCondition,
    UnknownLayout,
};
use crate::linalg::SparseMatrix;

/// Stabilization parameters of the L-scheme rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LParams {
    pub fn uniform(l: f64) -> Self {
        LParams { l1: l, l2: l, l3: l }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if self.l1 <= 0.0 || self.l2 <= 0.0 || self.l3 <= 0.0 {
            return Err(AssemblyError::NonPositiveL { l1: self.l1, l2: self.l2, l3: self.l3 });
        }
        Ok(())
    }
}

/// Linearization applied within one scheme iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linearization {
    Newton,
    LScheme(LParams),
}

impl Linearization {
    fn validate(&self) -> Result<(), AssemblyError> {
        match self {
            Linearization::Newton => Ok(()),
            Linearization::LScheme(l) => l.validate(),
        }
    }
}

struct Builder {
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Builder { triplets: Vec::with_capacity(12 * n), rhs: vec![0.0; n] }
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.triplets.push((row, col, v));
        }
    }

    fn finish(self, layout: UnknownLayout) -> Result<LinearSystem, AssemblyError> {
        let matrix = SparseMatrix::from_triplets(self.rhs.len(), &self.triplets)?;
        Ok(LinearSystem { matrix, rhs: self.rhs, layout })
    }
}

/// Weights of dK/dtheta at the two cells of a face for the chosen averaging.
fn dk_weights(p: &Problem, theta_o: f64, theta_b: f64, dpot: f64) -> (f64, f64) {
    match p.k_avg {
        KAveraging::Arithmetic => {
            (0.5 * p.model.dk_dtheta(theta_o), 0.5 * p.model.dk_dtheta(theta_b))
        }
        KAveraging::Upstream => {
            if dpot <= 0.0 {
                (p.model.dk_dtheta(theta_o), 0.0)
            } else {
                (0.0, p.model.dk_dtheta(theta_b))
            }
        }
    }
}

fn face_k(p: &Problem, theta_o: f64, theta_b: f64, dpot: f64) -> f64 {
    match p.k_avg {
        KAveraging::Arithmetic => 0.5 * (p.model.k(theta_o) + p.model.k(theta_b)),
        KAveraging::Upstream => {
            if dpot <= 0.0 {
                p.model.k(theta_o)
            } else {
                p.model.k(theta_b)
            }
        }
    }
}

/// Flow pair: mass-balance rows 0..n and closure rows n..2n.
///
/// Newton follows the full lagging pattern: K and dK at the iterate, the
/// capillary pressure expanded in theta (and c when `conc_col` is given),
/// tau and its derivative at the iterate. The L-scheme freezes every
/// coefficient and adds L1 (psi) and L2 (theta) stabilization. The
/// hysteresis argument is (theta_phi - theta_old)/dt in both cases.
#[allow(clippy::too_many_arguments)]
fn flow_rows(
    b: &mut Builder,
    psi_off: usize,
    theta_off: usize,
    conc_col: Option<usize>,
    psi_it: &[f64],
    theta_it: &[f64],
    conc_fr: &[f64],
    theta_phi: &[f64],
    old: &DiscreteState,
    dt: f64,
    t: f64,
    p: &Problem,
    lin: &Linearization,
) {
    let g = &p.grid;
    let m = &p.model;
    let n = g.num_cells();
    let vol = g.cell_volume();
    let newton = matches!(lin, Linearization::Newton);

    // cell-local terms
    for i in 0..n {
        let mass_row = i;
        let clo_row = n + i;
        let (x, y) = g.cell_centers[i];

        // mass: V theta' + dt * fluxes = V theta_old + dt V S1  (+ L1 V (psi' - psi^j))
        b.add(mass_row, theta_off + i, vol);
        b.rhs[mass_row] += vol * old.theta[i] + dt * vol * (p.src.s1)(x, y, t);

        // closure: dt V psi' + ... = 0, hysteresis lagged on the RHS
        let phi = m.phi((theta_phi[i] - old.theta[i]) / dt);
        let pcap = m.pcap(theta_it[i], conc_fr[i]);
        let tau = m.tau(theta_it[i]);
        b.add(clo_row, psi_off + i, dt * vol);
        match lin {
            Linearization::Newton => {
                let dp_dt = m.dpcap_dtheta(theta_it[i], conc_fr[i]);
                let dtau = m.dtau_dtheta(theta_it[i]);
                let theta_coeff = vol * (dt * dp_dt - tau - dtau * (theta_it[i] - old.theta[i]));
                b.add(clo_row, theta_off + i, theta_coeff);
                b.rhs[clo_row] += vol
                    * (-dt * pcap + dt * dp_dt * theta_it[i]
                        - tau * old.theta[i]
                        - dtau * (theta_it[i] - old.theta[i]) * theta_it[i]
                        + dt * m.gamma * phi);
                if let Some(c_off) = conc_col {
                    let dp_dc = m.dpcap_dc(theta_it[i], conc_fr[i]);
                    b.add(clo_row, c_off + i, vol * dt * dp_dc);
                    b.rhs[clo_row] += vol * dt * dp_dc * conc_fr[i];
                }
            }
            Linearization::LScheme(l) => {
                b.add(clo_row, theta_off + i, vol * (-tau - l.l2));
                b.rhs[clo_row] +=
                    vol * (-dt * pcap - tau * old.theta[i] - l.l2 * theta_it[i]);
                // Hysteresis: the branch of the regularized sign is lagged.
                // On the saturated branches the term is the printed constant;
                // inside the band the value gamma (theta' - theta_old)/delta
                // must be implicit, since its gain gamma/delta far exceeds
                // any practical L2 and a fully lagged value oscillates.
                let xi = (theta_phi[i] - old.theta[i]) / dt;
                if xi.abs() >= m.delta {
                    b.rhs[clo_row] += vol * dt * m.gamma * xi.signum();
                } else {
                    let g = m.gamma / m.delta;
                    b.add(clo_row, theta_off + i, -vol * g);
                    b.rhs[clo_row] -= vol * g * old.theta[i];
                }
                b.add(mass_row, psi_off + i, l.l1 * vol);
                b.rhs[mass_row] += l.l1 * vol * psi_it[i];
            }
        }
    }

    // TPFA fluxes of the mass rows
    for f in &g.interior_faces {
        let (o, bb) = (f.owner, f.neighbor);
        let dz = g.dz_interior(f);
        let dpot_it = psi_it[bb] - psi_it[o] + dz;
        let k = face_k(p, theta_it[o], theta_it[bb], dpot_it);
        for (row, sign) in [(o, 1.0), (bb, -1.0)] {
            // -T k (psi'_b - psi'_o + dz)
            b.add(row, psi_off + bb, -sign * dt * f.trans * k);
            b.add(row, psi_off + o, sign * dt * f.trans * k);
            b.rhs[row] += sign * dt * f.trans * k * dz;
            if newton {
                // -T (dpot at iterate) dK (theta' - theta^j)
                let (wo, wb) = dk_weights(p, theta_it[o], theta_it[bb], dpot_it);
                let co = -sign * dt * f.trans * dpot_it * wo;
                let cb = -sign * dt * f.trans * dpot_it * wb;
                b.add(row, theta_off + o, co);
                b.add(row, theta_off + bb, cb);
                b.rhs[row] += co * theta_it[o] + cb * theta_it[bb];
            }
        }
    }
    for f in &g.boundary_faces {
        match p.bc.side(f.side) {
            SideCondition::NeumannZero => {}
            SideCondition::Dirichlet { psi: psi_b, .. } => {
                let i = f.cell;
                let (x, y) = f.midpoint;
                let pb = psi_b(x, y, t);
                let dz = g.dz_boundary(f);
                let k = m.k(theta_it[i]);
                // -T k (pb - psi'_i + dz)
                b.add(i, psi_off + i, dt * f.trans * k);
                b.rhs[i] += dt * f.trans * k * (pb + dz);
                if newton {
                    let dpot_it = pb - psi_it[i] + dz;
                    let c = -dt * f.trans * dpot_it * m.dk_dtheta(theta_it[i]);
                    b.add(i, theta_off + i, c);
                    b.rhs[i] += c * theta_it[i];
                }
            }
        }
    }
}

/// Transport row block.
///
/// `theta_storage` multiplies the c increment (the iterate for monolithic
/// schemes, the fresh flow result for split ones). When `theta_col` is given
/// the cross term c_cross (theta' - theta_old) couples to the theta unknowns;
/// otherwise theta_storage is known and the term moves to the RHS.
#[allow(clippy::too_many_arguments)]
fn transport_rows(
    b: &mut Builder,
    row_off: usize,
    conc_off: usize,
    theta_col: Option<usize>,
    c_lin: &[f64],
    c_cross: &[f64],
    theta_storage: &[f64],
    flux: &super::WaterFlux,
    old: &DiscreteState,
    dt: f64,
    t: f64,
    p: &Problem,
    lin: &Linearization,
) {
    let g = &p.grid;
    let m = &p.model;
    let n = g.num_cells();
    let vol = g.cell_volume();

    for i in 0..n {
        let row = row_off + i;
        let (x, y) = g.cell_centers[i];
        // storage: V [theta_storage (c' - c_old) + c_cross (theta - theta_old)]
        b.add(row, conc_off + i, vol * theta_storage[i]);
        b.rhs[row] += vol * theta_storage[i] * old.conc[i];
        match theta_col {
            Some(t_off) => {
                b.add(row, t_off + i, vol * c_cross[i]);
                b.rhs[row] += vol * c_cross[i] * old.theta[i];
            }
            None => {
                b.rhs[row] -= vol * c_cross[i] * (theta_storage[i] - old.theta[i]);
            }
        }
        // reaction and stabilization
        let r = m.reaction(c_lin[i]);
        match lin {
            Linearization::Newton => {
                let dr = m.dreaction_dc(c_lin[i]);
                b.add(row, conc_off + i, dt * vol * dr);
                b.rhs[row] += dt * vol * (dr * c_lin[i] - r);
            }
            Linearization::LScheme(l) => {
                b.add(row, conc_off + i, vol * l.l3);
                b.rhs[row] += vol * (l.l3 * c_lin[i] - dt * r);
            }
        }
        b.rhs[row] += dt * vol * (p.src.s2)(x, y, t);
    }

    let d = m.diffusion;
    for (f, &q) in g.interior_faces.iter().zip(&flux.interior) {
        let (o, bb) = (f.owner, f.neighbor);
        let up = if q >= 0.0 { o } else { bb };
        for (cell, sign) in [(o, 1.0), (bb, -1.0)] {
            let row = row_off + cell;
            // -T D (c'_b - c'_o)
            b.add(row, conc_off + bb, -sign * dt * f.trans * d);
            b.add(row, conc_off + o, sign * dt * f.trans * d);
            // q c'_up
            b.add(row, conc_off + up, sign * dt * q);
        }
    }
    for (f, &q) in g.boundary_faces.iter().zip(&flux.boundary) {
        match p.bc.side(f.side) {
            SideCondition::NeumannZero => {}
            SideCondition::Dirichlet { conc: conc_b, .. } => {
                let i = f.cell;
                let row = row_off + i;
                let (x, y) = f.midpoint;
                let cb = conc_b(x, y, t);
                // -T D (cb - c'_i) + q cb (boundary trace carried by the flux)
                b.add(row, conc_off + i, dt * f.trans * d);
                b.rhs[row] += dt * f.trans * d * cb;
                b.rhs[row] -= dt * q * cb;
            }
        }
    }
}

fn mono_layout(n: usize) -> UnknownLayout {
    UnknownLayout { blocks: vec![(Field::Psi, n), (Field::Theta, n), (Field::Conc, n)] }
}

/// Monolithic Newton iteration: all three equations at once, with the
/// transport storage coefficients and water flux lagged at the iterate and
/// the reaction Newton-linearized.
pub fn assemble_newton_mono(
    it: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
) -> Result<LinearSystem, AssemblyError> {
    assemble_mono(it, old, dt, p, &Linearization::Newton)
}

/// Monolithic L-scheme iteration with stabilization L1, L2, L3 and every
/// nonlinear coefficient frozen at the iterate; no derivatives appear.
pub fn assemble_ls_mono(
    it: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
    l: LParams,
) -> Result<LinearSystem, AssemblyError> {
    assemble_mono(it, old, dt, p, &Linearization::LScheme(l))
}

fn assemble_mono(
    it: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
    lin: &Linearization,
) -> Result<LinearSystem, AssemblyError> {
    let n = p.num_cells();
    it.validate(n)?;
    old.validate(n)?;
    if dt <= 0.0 {
        return Err(AssemblyError::NonPositiveDt(dt));
    }
    lin.validate()?;

    let t = it.time;
    let mut b = Builder::new(3 * n);
    let (psi_off, theta_off, conc_off) = (0, n, 2 * n);
    let conc_col = matches!(lin, Linearization::Newton).then_some(conc_off);
    flow_rows(
        &mut b, psi_off, theta_off, conc_col, &it.psi, &it.theta, &it.conc, &it.theta, old, dt, t,
        p, lin,
    );
    let flux = super::water_flux(&it.psi, &it.theta, &old.theta, t, p);
    transport_rows(
        &mut b,
        2 * n,
        conc_off,
        Some(theta_off),
        &it.conc,
        &it.conc,
        &it.theta,
        &flux,
        old,
        dt,
        t,
        p,
        lin,
    );
    b.finish(mono_layout(n))
}

/// One linearized step of the flow pair in (psi, theta) with the
/// concentration frozen at `conc_frozen` and the hysteresis argument frozen
/// at `theta_phi` (the outer iterate for the nonlinear splitting, the
/// current iterate otherwise). Newton mode omits the capillary-pressure
/// cross term in c.
pub fn assemble_flow_subsystem(
    it: &DiscreteState,
    old: &DiscreteState,
    dt: f64,
    p: &Problem,
    conc_frozen: &[f64],
    theta_phi: &[f64],
    lin: &Linearization,
) -> Result<LinearSystem, AssemblyError> {
    let n = p.num_cells();
    it.validate(n)?;
    old.validate(n)?;
    if dt <= 0.0 {
        return Err(AssemblyError::NonPositiveDt(dt));
    }
    lin.validate()?;
    if conc_frozen.len() != n {
        return Err(AssemblyError::DimensionMismatch {
            field: "conc_frozen",
            len: conc_frozen.len(),
            expected: n,
        });
    }
    if theta_phi.len() != n {
        return Err(AssemblyError::DimensionMismatch {
            field: "theta_phi",
            len: theta_phi.len(),
            expected: n,
        });
    }

    let mut b = Builder::new(2 * n);
    flow_rows(
        &mut b, 0, n, None, &it.psi, &it.theta, conc_frozen, theta_phi, old, dt, it.time, p, lin,
    );
    b.finish(UnknownLayout { blocks: vec![(Field::Psi, n), (Field::Theta, n)] })
}

/// One linearized transport solve after a flow (half-)step. Storage and
/// water flux use the fresh flow fields (psi_new, theta_new); the reaction
/// and the L3 stabilization are linearized at `c_lin`, and the storage cross
/// term is frozen at `c_cross` (the coupling iterate).
#[allow(clippy::too_many_arguments)]
pub fn assemble_transport_subsystem(
    c_lin: &[f64],
    c_cross: &[f64],
    psi_new: &[f64],
    theta_new: &[f64],
    old: &DiscreteState,
    dt: f64,
    t: f64,
    p: &Problem,
    lin: &Linearization,
) -> Result<LinearSystem, AssemblyError> {
    let n = p.num_cells();
    old.validate(n)?;
    if dt <= 0.0 {
        return Err(AssemblyError::NonPositiveDt(dt));
    }
    lin.validate()?;
    for (field, v) in [
        ("c_lin", c_lin),
        ("c_cross", c_cross),
        ("psi_new", psi_new),
        ("theta_new", theta_new),
    ] {
        if v.len() != n {
            return Err(AssemblyError::DimensionMismatch { field, len: v.len(), expected: n });
        }
        if let Some(cell) = v.iter().position(|x| !x.is_finite()) {
            return Err(AssemblyError::NonFinite { field, cell });
        }
    }

    let mut b = Builder::new(n);
    let flux = super::water_flux(psi_new, theta_new, &old.theta, t, p);
    transport_rows(
        &mut b, 0, 0, None, c_lin, c_cross, theta_new, &flux, old, dt, t, p, lin,
    );
    b.finish(UnknownLayout { blocks: vec![(Field::Conc, n)] })
}
