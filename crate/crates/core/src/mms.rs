//! Manufactured solutions, source terms and boundary data for the
//! verification examples, discrete error norms and convergence orders, and
//! the physical van Genuchten test case driven by boundary conditions.

use thiserror::Error;

use crate::assembly::{BoundarySpec, DiscreteState, Problem, SideCondition, SourceSpec};
use crate::constitutive::{
    pcap_poly, phi_delta, ConstitutiveSet, TauKind, VanGenuchtenParams, VgPcapForm,
};
use crate::grid::{Side, StructuredGrid};

#[derive(Debug, Error, PartialEq)]
pub enum MmsError {
    #[error("unknown example id {0}, expected 1..=4")]
    InvalidExample(u8),
    #[error("error norms must be positive, got {0}")]
    NonPositiveError(f64),
    #[error("trajectory has {got} states, expected {expected}")]
    IncompleteTrajectory { got: usize, expected: usize },
}

/// Final time of the manufactured examples.
pub const FINAL_TIME: f64 = 3.0;

fn t1(x: f64, y: f64) -> f64 {
    x * y
}

fn t2(x: f64, y: f64) -> f64 {
    x * y + 2.0
}

/// Manufactured water content: cosine approach to a plateau of 1/2 between
/// t1(x,y) = xy and t2(x,y) = xy + 2, then cosine release. Values stay in
/// [1/2, 3/2].
pub fn theta_m(x: f64, y: f64, t: f64) -> f64 {
    let (a, b) = (t1(x, y), t2(x, y));
    if t < a {
        1.0 - 0.5 * ((a - t) * (a - t)).cos()
    } else if t <= b {
        0.5
    } else {
        1.0 - 0.5 * ((t - b) * (t - b)).cos()
    }
}

/// Analytic time derivative of theta_m: -(t1-t) sin((t1-t)^2) before the
/// plateau, zero on it, (t-t2) sin((t-t2)^2) after.
pub fn theta_m_dt(x: f64, y: f64, t: f64) -> f64 {
    let (a, b) = (t1(x, y), t2(x, y));
    if t < a {
        let s = a - t;
        -s * (s * s).sin()
    } else if t <= b {
        0.0
    } else {
        let s = t - b;
        s * (s * s).sin()
    }
}

/// Manufactured concentration x(x-1) y(y-1) t; zero on the boundary and at
/// t = 0.
pub fn c_m(x: f64, y: f64, t: f64) -> f64 {
    x * (x - 1.0) * y * (y - 1.0) * t
}

fn c_m_dt(x: f64, y: f64) -> f64 {
    x * (x - 1.0) * y * (y - 1.0)
}

/// Parameters of one manufactured example (the capillary pressure and
/// conductivity are the polynomial test model).
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    pub tau: TauKind,
    pub gamma: f64,
    pub delta: f64,
    /// Evaluate p_cap inside psi_m at (theta_m, c_m); the alternative uses
    /// c = 0 as in the shorthand p_cap(theta_m).
    pub pcap_with_conc: bool,
    /// Spatial finite-difference step of the source terms.
    pub fd_step: f64,
}

/// The L parameter the reference runs use for example `id` (1..=5).
pub fn paper_l(id: u8) -> f64 {
    match id {
        3 => 1.0,
        5 => 0.5,
        _ => 0.1,
    }
}

impl ManufacturedCase {
    /// The four verification setups: (1) gamma=0, tau=1; (2) gamma=0,
    /// tau=1+theta^2; (3) gamma=1, delta=5e-3, tau=0; (4) gamma=1,
    /// delta=5e-3, tau=1+theta^2.
    pub fn example(id: u8) -> Result<Self, MmsError> {
        let (tau, gamma) = match id {
            1 => (TauKind::One, 0.0),
            2 => (TauKind::OnePlusThetaSq, 0.0),
            3 => (TauKind::Zero, 1.0),
            4 => (TauKind::OnePlusThetaSq, 1.0),
            _ => return Err(MmsError::InvalidExample(id)),
        };
        Ok(ManufacturedCase {
            tau,
            gamma,
            delta: 5e-3,
            pcap_with_conc: true,
            fd_step: 4e-4,
        })
    }

    pub fn model(&self) -> ConstitutiveSet {
        ConstitutiveSet::polynomial(self.tau, self.gamma, self.delta)
            .expect("example constants are valid")
    }

    /// Manufactured pressure head, built from the closure relation with the
    /// analytic time derivative of theta_m.
    pub fn psi_m(&self, x: f64, y: f64, t: f64) -> f64 {
        let th = theta_m(x, y, t);
        let dth = theta_m_dt(x, y, t);
        let c = if self.pcap_with_conc { c_m(x, y, t) } else { 0.0 };
        -pcap_poly(th, c) + self.tau.value(th) * dth + self.gamma * phi_delta(dth, self.delta)
    }

    /// Smoothness region of the piecewise fields: which theta branch and
    /// which branch of the regularized sign the point is in.
    fn region(&self, x: f64, y: f64, t: f64) -> u8 {
        let (a, b) = (t1(x, y), t2(x, y));
        let tb = if t < a {
            0
        } else if t <= b {
            1
        } else {
            2
        };
        let dth = theta_m_dt(x, y, t);
        let db = if dth < -self.delta {
            0
        } else if dth <= self.delta {
            1
        } else {
            2
        };
        tb * 3 + db
    }

    /// First and second derivative of a 1D restriction, five-point central
    /// when the stencil stays in one smoothness region, one-sided away from
    /// a nearby branch interface otherwise.
    fn fd_1d(&self, f: &dyn Fn(f64) -> f64, s: f64, same_region: (bool, bool)) -> (f64, f64) {
        let h = self.fd_step;
        match same_region {
            (true, true) | (false, false) => {
                let (fp2, fp, f0, fm, fm2) =
                    (f(s + 2.0 * h), f(s + h), f(s), f(s - h), f(s - 2.0 * h));
                (
                    (-fp2 + 8.0 * fp - 8.0 * fm + fm2) / (12.0 * h),
                    (-fp2 + 16.0 * fp - 30.0 * f0 + 16.0 * fm - fm2) / (12.0 * h * h),
                )
            }
            (true, false) => {
                // interface ahead: backward stencil
                let (f0, f1, f2, f3) = (f(s), f(s - h), f(s - 2.0 * h), f(s - 3.0 * h));
                (
                    (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h),
                    (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h),
                )
            }
            (false, true) => {
                let (f0, f1, f2, f3) = (f(s), f(s + h), f(s + 2.0 * h), f(s + 3.0 * h));
                (
                    (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h),
                    (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h),
                )
            }
        }
    }

    fn probes_x(&self, x: f64, y: f64, t: f64) -> (bool, bool) {
        let r0 = self.region(x, y, t);
        let d = 4.5 * self.fd_step;
        (self.region(x - d, y, t) == r0, self.region(x + d, y, t) == r0)
    }

    fn probes_y(&self, x: f64, y: f64, t: f64) -> (bool, bool) {
        let r0 = self.region(x, y, t);
        let d = 4.5 * self.fd_step;
        (self.region(x, y - d, t) == r0, self.region(x, y + d, t) == r0)
    }

    /// Source densities (S1, S2) that make (theta_m, psi_m, c_m) an exact
    /// solution: analytic time derivatives, spatial divergence terms by
    /// interface-aware finite differences on the closed forms.
    pub fn sources(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let th = theta_m(x, y, t);
        let dth = theta_m_dt(x, y, t);
        let k = 1.0 + th * th;

        let px = self.probes_x(x, y, t);
        let py = self.probes_y(x, y, t);
        let (dpsi_dx, d2psi_dx) = self.fd_1d(&|s| self.psi_m(s, y, t), x, px);
        let (dpsi_dy, d2psi_dy) = self.fd_1d(&|s| self.psi_m(x, s, t), y, py);
        let (dk_dx, _) = self.fd_1d(
            &|s| {
                let tt = theta_m(s, y, t);
                1.0 + tt * tt
            },
            x,
            px,
        );
        let (dk_dy, _) = self.fd_1d(
            &|s| {
                let tt = theta_m(x, s, t);
                1.0 + tt * tt
            },
            y,
            py,
        );

        // div(K grad(psi + z)) with z = y
        let div_flow = dk_dx * dpsi_dx + k * d2psi_dx + dk_dy * (dpsi_dy + 1.0) + k * d2psi_dy;
        let s1 = dth - div_flow;

        // transport: conc derivatives are analytic
        let c = c_m(x, y, t);
        let ct = c_m_dt(x, y);
        let cx = (2.0 * x - 1.0) * y * (y - 1.0) * t;
        let cy = x * (x - 1.0) * (2.0 * y - 1.0) * t;
        let cxx = 2.0 * y * (y - 1.0) * t;
        let cyy = 2.0 * x * (x - 1.0) * t;
        let ux = -k * dpsi_dx;
        let uy = -k * (dpsi_dy + 1.0);
        let dux_dx = -(dk_dx * dpsi_dx + k * d2psi_dx);
        let duy_dy = -(dk_dy * (dpsi_dy + 1.0) + k * d2psi_dy);
        let s2 = dth * c + th * ct - (cxx + cyy) + dux_dx * c + ux * cx + duy_dy * c + uy * cy
            + c / (c + 1.0);
        (s1, s2)
    }

    /// Dirichlet data on a side: psi_m restricted to it and zero
    /// concentration. `along` is y on the vertical sides, x on the others.
    pub fn boundary_values(&self, side: Side, along: f64, t: f64) -> (f64, f64) {
        let (x, y) = match side {
            Side::Left => (0.0, along),
            Side::Right => (1.0, along),
            Side::Bottom => (along, 0.0),
            Side::Top => (along, 1.0),
        };
        (self.psi_m(x, y, t), 0.0)
    }

    /// Full problem definition on an nx-by-ny grid.
    pub fn problem(&self, grid: StructuredGrid) -> Problem {
        let case = *self;
        let bc = BoundarySpec {
            left: dirichlet_side(case, Side::Left),
            right: dirichlet_side(case, Side::Right),
            bottom: dirichlet_side(case, Side::Bottom),
            top: dirichlet_side(case, Side::Top),
        };
        let c1 = case;
        let src = SourceSpec::new(
            move |x, y, t| c1.sources(x, y, t).0,
            move |x, y, t| c1.sources(x, y, t).1,
        );
        Problem::new(grid, case.model(), bc, src)
    }

    /// Exact fields sampled at the cell centers at time t.
    pub fn state_at(&self, grid: &StructuredGrid, t: f64) -> DiscreteState {
        let psi = grid.cell_centers.iter().map(|&(x, y)| self.psi_m(x, y, t)).collect();
        let theta = grid.cell_centers.iter().map(|&(x, y)| theta_m(x, y, t)).collect();
        let conc = grid.cell_centers.iter().map(|&(x, y)| c_m(x, y, t)).collect();
        DiscreteState::new(psi, theta, conc, t)
    }

    /// Initial state: theta(x,y,0) = 1 - cos(t1^2)/2, c = 0, psi from the
    /// closure relation.
    pub fn initial_state(&self, grid: &StructuredGrid) -> DiscreteState {
        self.state_at(grid, 0.0)
    }
}

fn dirichlet_side(case: ManufacturedCase, _side: Side) -> SideCondition {
    SideCondition::Dirichlet {
        psi: std::sync::Arc::new(move |x, y, t| case.psi_m(x, y, t)),
        conc: std::sync::Arc::new(|_, _, _| 0.0),
    }
}

/// Space-time discrete L2 error norms of a trajectory against the
/// manufactured fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub e_psi: f64,
    pub e_theta: f64,
    pub e_conc: f64,
}

pub fn error_norms(
    trajectory: &[DiscreteState],
    case: &ManufacturedCase,
    grid: &StructuredGrid,
    dt: f64,
    t_end: f64,
) -> Result<ErrorReport, MmsError> {
    let expected = (t_end / dt).round() as usize + 1;
    if trajectory.len() != expected {
        return Err(MmsError::IncompleteTrajectory { got: trajectory.len(), expected });
    }
    let vol = grid.cell_volume();
    let (mut sp, mut st, mut sc) = (0.0, 0.0, 0.0);
    for state in trajectory.iter().skip(1) {
        let t = state.time;
        for (i, &(x, y)) in grid.cell_centers.iter().enumerate() {
            let dp = case.psi_m(x, y, t) - state.psi[i];
            let dth = theta_m(x, y, t) - state.theta[i];
            let dc = c_m(x, y, t) - state.conc[i];
            sp += vol * dp * dp;
            st += vol * dth * dth;
            sc += vol * dc * dc;
        }
    }
    Ok(ErrorReport {
        e_psi: (dt * sp).sqrt(),
        e_theta: (dt * st).sqrt(),
        e_conc: (dt * sc).sqrt(),
    })
}

/// Estimated order of convergence under simultaneous halving of dx and dt.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64, MmsError> {
    if !(e_coarse > 0.0) || !e_coarse.is_finite() {
        return Err(MmsError::NonPositiveError(e_coarse));
    }
    if !(e_fine > 0.0) || !e_fine.is_finite() {
        return Err(MmsError::NonPositiveError(e_fine));
    }
    Ok((e_coarse / e_fine).ln() / 2f64.ln())
}

/// Final time of the physical test case.
pub const FINAL_TIME_PHYSICAL: f64 = 4.0;

/// The boundary-driven van Genuchten case: hysteresis and dynamic effects
/// on, Dirichlet data on the left side only, no manufactured solution.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalCase {
    pub pcap_form: VgPcapForm,
}

impl PhysicalCase {
    pub fn new(pcap_form: VgPcapForm) -> Self {
        PhysicalCase { pcap_form }
    }

    pub fn params(&self) -> VanGenuchtenParams {
        VanGenuchtenParams::physical_case()
    }

    pub fn model(&self) -> ConstitutiveSet {
        ConstitutiveSet::van_genuchten(
            self.params(),
            self.pcap_form,
            TauKind::OnePlusThetaSq,
            1.0,
            5e-3,
        )
        .expect("physical parameters are valid")
    }

    /// Left-side pressure: 1 plus a ramp to 0.5, a plateau, a ramp down and
    /// a final drop to -0.4 on t in [3, 4].
    pub fn boundary_psi(t: f64) -> f64 {
        1.0 + if t < 1.0 {
            0.5 * t
        } else if t < 2.0 {
            0.5
        } else if t < 3.0 {
            0.5 * (3.0 - t)
        } else {
            -0.4
        }
    }

    pub fn problem(&self, grid: StructuredGrid) -> Problem {
        let bc = BoundarySpec {
            left: SideCondition::Dirichlet {
                psi: std::sync::Arc::new(|_, _, t| Self::boundary_psi(t)),
                conc: std::sync::Arc::new(|_, _, _| 2.0),
            },
            right: SideCondition::NeumannZero,
            bottom: SideCondition::NeumannZero,
            top: SideCondition::NeumannZero,
        };
        Problem::new(grid, self.model(), bc, SourceSpec::zero())
    }

    /// theta = x, c = 1; the initial pressure guess closes the system with
    /// a vanishing rate term.
    pub fn initial_state(&self, grid: &StructuredGrid) -> DiscreteState {
        let model = self.model();
        let theta: Vec<f64> = grid.cell_centers.iter().map(|&(x, _)| x).collect();
        let conc = vec![1.0; grid.num_cells()];
        let psi = theta.iter().map(|&th| -model.pcap(th, 1.0)).collect();
        DiscreteState::new(psi, theta, conc, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{residual_flow, residual_transport};
    use crate::grid::build_grid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_pointwise() {
        // plateau point
        assert_eq!(theta_m(0.5, 0.5, 1.0), 0.5);
        // before the plateau
        assert_relative_eq!(theta_m(1.0, 1.0, 0.0), 1.0 - 0.5 * 1f64.cos(), epsilon = 1e-12);
        assert_relative_eq!(theta_m(1.0, 1.0, 0.0), 0.7298488470659301, epsilon = 1e-12);
        // both branches agree at t2 on the left edge
        assert_relative_eq!(theta_m(0.0, 0.7, 2.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn theta_dt_matches_difference_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let (x, y): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let t: f64 = rng.gen_range(0.0..3.0);
            // only at points where the stencil stays within one branch
            let a = t1(x, y);
            let b = t2(x, y);
            if (t - a).abs() < 2.0 * h || (t - b).abs() < 2.0 * h || t < 2.0 * h {
                continue;
            }
            let fd = (theta_m(x, y, t + h) - theta_m(x, y, t - h)) / (2.0 * h);
            assert_relative_eq!(theta_m_dt(x, y, t), fd, max_relative = 1e-6, epsilon = 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn theta_stays_in_band_and_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let (x, y): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let t: f64 = rng.gen_range(0.0..3.0);
            let th = theta_m(x, y, t);
            assert!((0.5..=1.5).contains(&th));
        }
        // continuity across the branch switches
        for &(x, y) in &[(0.3, 0.8), (0.9, 0.9), (0.1, 0.2)] {
            let a = t1(x, y);
            let b = t2(x, y);
            assert_relative_eq!(theta_m(x, y, a - 1e-12), theta_m(x, y, a + 1e-12), epsilon = 1e-9);
            if b < 3.0 {
                assert_relative_eq!(
                    theta_m(x, y, b - 1e-12),
                    theta_m(x, y, b + 1e-12),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn conc_pointwise() {
        assert_eq!(c_m(0.0, 0.7, 2.0), 0.0);
        assert_eq!(c_m(0.3, 1.0, 2.0), 0.0);
        assert_relative_eq!(c_m(0.5, 0.5, 1.0), 0.0625);
        assert_relative_eq!(c_m(0.5, 0.5, 3.0), 0.1875);
    }

    #[test]
    fn psi_on_plateau_is_minus_pcap() {
        let case1 = ManufacturedCase::example(1).unwrap();
        // plateau: time derivative vanishes, gamma = 0
        let (x, y, t) = (0.5, 0.5, 1.0);
        assert_relative_eq!(case1.psi_m(x, y, t), -pcap_poly(0.5, c_m(x, y, t)), epsilon = 1e-14);
        // with hysteresis the regularized sign still vanishes on the plateau
        let case3 = ManufacturedCase::example(3).unwrap();
        assert_relative_eq!(case3.psi_m(x, y, t), -pcap_poly(0.5, c_m(x, y, t)), epsilon = 1e-14);
    }

    #[test]
    fn psi_at_corner_before_plateau() {
        // (1,1,0): c_m = 0, theta = 1 - cos(1)/2, d theta/dt = -sin(1)
        let case = ManufacturedCase::example(1).unwrap();
        let th = theta_m(1.0, 1.0, 0.0);
        let dth_oracle = {
            let h = 1e-7;
            (theta_m(1.0, 1.0, h) - theta_m(1.0, 1.0, 0.0)) / h
        };
        assert_relative_eq!(dth_oracle, -(1f64).sin(), max_relative = 1e-5);
        let expected = -pcap_poly(th, 0.0) + dth_oracle;
        assert_relative_eq!(case.psi_m(1.0, 1.0, 0.0), expected, max_relative = 1e-6);
        assert_relative_eq!(case.psi_m(1.0, 1.0, 0.0), -1.308791645244429, epsilon = 1e-9);
    }

    #[test]
    fn left_boundary_values() {
        // on x = 0: t1 = 0, t2 = 2, so theta = 1/2 for 0 < t < 2
        let case3 = ManufacturedCase::example(3).unwrap();
        let (psi_b, c_b) = case3.boundary_values(Side::Left, 0.4, 1.0);
        assert_relative_eq!(psi_b, -pcap_poly(0.5, 0.0), epsilon = 1e-14);
        assert_eq!(c_b, 0.0);
        // t = 3 on the release branch with tau = 1, gamma = 0
        let case1 = ManufacturedCase::example(1).unwrap();
        let (psi_b, _) = case1.boundary_values(Side::Left, 0.4, 3.0);
        let th = 1.0 - 0.5 * 1f64.cos();
        let expected = -pcap_poly(th, 0.0) + 1f64.sin();
        assert_relative_eq!(psi_b, expected, epsilon = 1e-12);
        assert_relative_eq!(psi_b, 0.374150324371364, epsilon = 1e-9);
    }

    #[test]
    fn sources_richardson_consistency() {
        let case = ManufacturedCase::example(4).unwrap();
        let fine = ManufacturedCase { fd_step: case.fd_step / 2.0, ..case };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let (x, y): (f64, f64) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            let t: f64 = rng.gen_range(0.05..2.95);
            // keep away from branch interfaces so both steps use central stencils
            if case.probes_x(x, y, t) != (true, true) || case.probes_y(x, y, t) != (true, true) {
                continue;
            }
            let (s1a, s2a) = case.sources(x, y, t);
            let (s1b, s2b) = fine.sources(x, y, t);
            assert!((s1a - s1b).abs() <= 1e-6, "S1 mismatch {} at ({x},{y},{t})", s1a - s1b);
            assert!((s2a - s2b).abs() <= 1e-6, "S2 mismatch {} at ({x},{y},{t})", s2a - s2b);
            checked += 1;
        }
    }

    #[test]
    fn manufactured_residuals_shrink_under_refinement() {
        let case = ManufacturedCase::example(1).unwrap();
        let mut norms = Vec::new();
        for nx in [8usize, 16, 32] {
            let grid = build_grid(nx, nx).unwrap();
            let p = case.problem(grid.clone());
            let dt = 1.0 / nx as f64;
            let t_new = 0.5 + dt;
            let old = case.state_at(&grid, 0.5);
            let new = case.state_at(&grid, t_new);
            let fr = residual_flow(&new, &old, dt, &p).unwrap();
            let tr = residual_transport(&new, &old, dt, &p).unwrap();
            let vol = grid.cell_volume();
            // mean per-volume, per-unit-time defect of the discrete equations
            let scale = |v: &[f64]| {
                v.iter().map(|r| (r / (vol * dt)).abs()).sum::<f64>() / v.len() as f64
            };
            norms.push((scale(&fr.mass), scale(&fr.closure), scale(&tr)));
        }
        // first-order consistency: halving h and dt roughly halves the defect
        for k in 0..2 {
            assert!(
                norms[k + 1].0 < 0.75 * norms[k].0,
                "mass defect did not shrink: {:?}",
                norms
            );
            assert!(norms[k + 1].2 < 0.75 * norms[k].2, "transport defect: {:?}", norms);
        }
    }

    #[test]
    fn error_norms_zero_for_exact_trajectory() {
        let case = ManufacturedCase::example(1).unwrap();
        let grid = build_grid(4, 4).unwrap();
        let dt = 0.5;
        let traj: Vec<_> = (0..=6).map(|k| case.state_at(&grid, k as f64 * dt)).collect();
        let e = error_norms(&traj, &case, &grid, dt, 3.0).unwrap();
        assert_eq!(e.e_psi, 0.0);
        assert_eq!(e.e_theta, 0.0);
        assert_eq!(e.e_conc, 0.0);
    }

    #[test]
    fn error_norms_reject_incomplete() {
        let case = ManufacturedCase::example(1).unwrap();
        let grid = build_grid(4, 4).unwrap();
        let traj = vec![case.state_at(&grid, 0.0)];
        assert!(matches!(
            error_norms(&traj, &case, &grid, 0.5, 3.0),
            Err(MmsError::IncompleteTrajectory { .. })
        ));
    }

    #[test]
    fn eoc_values() {
        assert_relative_eq!(eoc(4.61e-2, 2.33e-2).unwrap(), 0.98, epsilon = 5e-3);
        assert_eq!(eoc(1e-3, 1e-3).unwrap(), 0.0);
        assert_relative_eq!(eoc(2e-3, 1e-3).unwrap(), 1.0);
        assert!(eoc(0.0, 1e-3).is_err());
        assert!(eoc(1e-3, -1.0).is_err());
    }

    #[test]
    fn initial_condition_matches_stated_form() {
        let case = ManufacturedCase::example(2).unwrap();
        let grid = build_grid(5, 5).unwrap();
        let ic = case.initial_state(&grid);
        for (i, &(x, y)) in grid.cell_centers.iter().enumerate() {
            let expected = 1.0 - 0.5 * ((x * y) * (x * y)).cos();
            assert_relative_eq!(ic.theta[i], expected, epsilon = 1e-12);
            assert_eq!(ic.conc[i], 0.0);
        }
    }

    #[test]
    fn physical_boundary_ramp() {
        assert_relative_eq!(PhysicalCase::boundary_psi(0.0), 1.0);
        assert_relative_eq!(PhysicalCase::boundary_psi(0.5), 1.25);
        assert_relative_eq!(PhysicalCase::boundary_psi(1.5), 1.5);
        assert_relative_eq!(PhysicalCase::boundary_psi(2.5), 1.25);
        // the printed value, not the ramp limit
        assert_relative_eq!(PhysicalCase::boundary_psi(3.0), 0.6);
        assert_relative_eq!(PhysicalCase::boundary_psi(4.0), 0.6);
    }

    #[test]
    fn invalid_example_rejected() {
        assert!(ManufacturedCase::example(0).is_err());
        assert!(ManufacturedCase::example(6).is_err());
    }
}
