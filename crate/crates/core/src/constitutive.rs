//! Nonlinear model functions (capillary pressure, conductivity, dynamic
//! coefficient, reaction) with their partial derivatives, the regularized
//! sign function, and the polynomial / van Genuchten presets.

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConstitutiveError {
    #[error("reaction rate is singular at c = -1")]
    SingularReaction,
    #[error("surfactant prefactor singular: 1 - b*ln(c/a + 1) = {denominator:.3e} at c = {conc}")]
    SurfactantSingularity { conc: f64, denominator: f64 },
    #[error("invalid van Genuchten parameters: {0}")]
    InvalidParams(String),
    #[error("invalid model constant: {0}")]
    InvalidConstant(String),
}

/// Regularized sign graph: sign(xi) outside [-delta, delta], xi/delta inside.
/// Continuous, odd, monotone, bounded by 1.
pub fn phi_delta(xi: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    if xi >= delta {
        1.0
    } else if xi <= -delta {
        -1.0
    } else {
        xi / delta
    }
}

/// Capillary pressure of the polynomial test model: 1 - theta^2 - 0.1 c^3.
pub fn pcap_poly(theta: f64, c: f64) -> f64 {
    1.0 - theta * theta - 0.1 * c * c * c
}

pub fn dpcap_poly_dtheta(theta: f64, _c: f64) -> f64 {
    -2.0 * theta
}

pub fn dpcap_poly_dc(_theta: f64, c: f64) -> f64 {
    -0.3 * c * c
}

/// Conductivity of the polynomial test model: 1 + theta^2.
pub fn k_poly(theta: f64) -> f64 {
    1.0 + theta * theta
}

pub fn dk_poly_dtheta(theta: f64) -> f64 {
    2.0 * theta
}

/// Reaction rate c/(c+1); singular at c = -1.
pub fn reaction(c: f64) -> Result<f64, ConstitutiveError> {
    if c == -1.0 || !c.is_finite() {
        return Err(ConstitutiveError::SingularReaction);
    }
    Ok(c / (c + 1.0))
}

pub fn dreaction_dc(c: f64) -> Result<f64, ConstitutiveError> {
    if c == -1.0 || !c.is_finite() {
        return Err(ConstitutiveError::SingularReaction);
    }
    let d = c + 1.0;
    Ok(1.0 / (d * d))
}

/// Dynamic-capillarity coefficient variants used by the test cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauKind {
    Zero,
    One,
    OnePlusThetaSq,
}

impl TauKind {
    pub fn value(self, theta: f64) -> f64 {
        match self {
            TauKind::Zero => 0.0,
            TauKind::One => 1.0,
            TauKind::OnePlusThetaSq => 1.0 + theta * theta,
        }
    }

    pub fn derivative(self, theta: f64) -> f64 {
        match self {
            TauKind::Zero | TauKind::One => 0.0,
            TauKind::OnePlusThetaSq => 2.0 * theta,
        }
    }
}

/// Shape parameters of the van Genuchten model with surfactant-dependent
/// surface tension scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanGenuchtenParams {
    pub theta_s: f64,
    pub theta_r: f64,
    pub m: f64,
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl VanGenuchtenParams {
    /// Parameter set of the physical test case.
    pub fn physical_case() -> Self {
        VanGenuchtenParams {
            theta_s: 0.9,
            theta_r: 0.005,
            m: 2.0,
            l: 0.31,
            a: 0.04,
            b: 0.47,
        }
    }

    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        if !(0.0 <= self.theta_r && self.theta_r < self.theta_s && self.theta_s <= 1.0) {
            return Err(ConstitutiveError::InvalidParams(format!(
                "need 0 <= theta_r < theta_s <= 1, got theta_r={}, theta_s={}",
                self.theta_r, self.theta_s
            )));
        }
        if self.m <= 0.0 || self.a <= 0.0 {
            return Err(ConstitutiveError::InvalidParams(format!(
                "need M > 0 and a > 0, got M={}, a={}",
                self.m, self.a
            )));
        }
        Ok(())
    }
}

/// Which algebraic form of the van Genuchten capillary pressure to use.
/// `Standard` is (theta_e^(-1/M) - 1)^(1-M); `AsPrinted` keeps the
/// literal (-theta_e^(-1/M))^(1-M), which is only meaningful when 1-M is
/// an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VgPcapForm {
    #[default]
    Standard,
    AsPrinted,
}

const THETA_E_CLAMP: f64 = 1e-8;

/// Effective saturation (theta - theta_r)/(theta_s - theta_r), clamped to
/// [1e-8, 1 - 1e-8] so downstream fractional powers stay real.
pub fn vg_effective_saturation(theta: f64, p: &VanGenuchtenParams) -> f64 {
    let se = (theta - p.theta_r) / (p.theta_s - p.theta_r);
    se.clamp(THETA_E_CLAMP, 1.0 - THETA_E_CLAMP)
}

/// Relative conductivity theta_e^l (1 - (1 - theta_e^(1/M))^M)^2.
pub fn vg_conductivity(theta: f64, p: &VanGenuchtenParams) -> f64 {
    let se = vg_effective_saturation(theta, p);
    let inner = 1.0 - (1.0 - se.powf(1.0 / p.m)).powf(p.m);
    se.powf(p.l) * inner * inner
}

/// Surfactant-scaled capillary pressure. The prefactor is
/// (1 - b ln(c/a + 1))^(-1); its zero denominator is rejected.
pub fn vg_pcap(
    theta: f64,
    c: f64,
    p: &VanGenuchtenParams,
    form: VgPcapForm,
) -> Result<f64, ConstitutiveError> {
    let denominator = 1.0 - p.b * (c / p.a + 1.0).ln();
    if denominator.abs() < 1e-12 || !denominator.is_finite() {
        return Err(ConstitutiveError::SurfactantSingularity { conc: c, denominator });
    }
    let se = vg_effective_saturation(theta, p);
    let base = match form {
        VgPcapForm::Standard => se.powf(-1.0 / p.m) - 1.0,
        VgPcapForm::AsPrinted => -se.powf(-1.0 / p.m),
    };
    Ok(base.powf(1.0 - p.m) / denominator)
}

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type F2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Bundle of the model functions and partial derivatives entering the
/// coupled system, together with the scalar constants D, gamma, delta.
#[derive(Clone)]
pub struct ConstitutiveSet {
    pcap: F2,
    dpcap_dtheta: F2,
    dpcap_dc: F2,
    k: F1,
    dk_dtheta: F1,
    tau: F1,
    dtau_dtheta: F1,
    reaction: F1,
    dreaction_dc: F1,
    pub diffusion: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl std::fmt::Debug for ConstitutiveSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstitutiveSet")
            .field("diffusion", &self.diffusion)
            .field("gamma", &self.gamma)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

impl ConstitutiveSet {
    /// Polynomial test model: p_cap = 1 - theta^2 - 0.1 c^3, K = 1 + theta^2,
    /// R = c/(c+1), D = 1. Closed-form derivatives. Below theta = 1/4 the
    /// theta-nonlinearities continue linearly (C^1): the plain polynomials
    /// are even in theta, which gives the discrete system a spurious
    /// mirror-image solution branch that iterates polluted by hysteresis
    /// switching can slide into.
    pub fn polynomial(tau: TauKind, gamma: f64, delta: f64) -> Result<Self, ConstitutiveError> {
        Self::check_constants(gamma, delta, 1.0)?;
        const THETA_LO: f64 = 0.25;
        let pcap_ext = |theta: f64, c: f64| {
            if theta >= THETA_LO {
                pcap_poly(theta, c)
            } else {
                pcap_poly(THETA_LO, c) + dpcap_poly_dtheta(THETA_LO, c) * (theta - THETA_LO)
            }
        };
        let dpcap_ext =
            |theta: f64, c: f64| dpcap_poly_dtheta(theta.max(THETA_LO), c);
        let k_ext = |theta: f64| {
            if theta >= THETA_LO {
                k_poly(theta)
            } else {
                (k_poly(THETA_LO) + dk_poly_dtheta(THETA_LO) * (theta - THETA_LO)).max(0.5)
            }
        };
        let dk_ext = |theta: f64| {
            if theta >= THETA_LO {
                dk_poly_dtheta(theta)
            } else if k_poly(THETA_LO) + dk_poly_dtheta(THETA_LO) * (theta - THETA_LO) > 0.5 {
                dk_poly_dtheta(THETA_LO)
            } else {
                0.0
            }
        };
        Ok(ConstitutiveSet {
            pcap: Arc::new(pcap_ext),
            dpcap_dtheta: Arc::new(dpcap_ext),
            dpcap_dc: Arc::new(dpcap_poly_dc),
            k: Arc::new(k_ext),
            dk_dtheta: Arc::new(dk_ext),
            tau: Arc::new(move |t| tau.value(t)),
            dtau_dtheta: Arc::new(move |t| tau.derivative(t)),
            reaction: Arc::new(|c| c / (c + 1.0)),
            dreaction_dc: Arc::new(|c| {
                let d = c + 1.0;
                1.0 / (d * d)
            }),
            diffusion: 1.0,
            gamma,
            delta,
        })
    }

    /// Van Genuchten model of the physical test case. p_cap derivatives are
    /// central differences (step 1e-7 * max(1, |theta|)); the printed pressure
    /// expression is ambiguous, so a numeric derivative stays consistent with
    /// whichever form is selected.
    pub fn van_genuchten(
        params: VanGenuchtenParams,
        form: VgPcapForm,
        tau: TauKind,
        gamma: f64,
        delta: f64,
    ) -> Result<Self, ConstitutiveError> {
        params.validate()?;
        Self::check_constants(gamma, delta, 1.0)?;
        let pcap_raw = move |theta: f64, c: f64| match vg_pcap(theta, c, &params, form) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        };
        let fd = move |f: &dyn Fn(f64) -> f64, x: f64| {
            let h = 1e-7 * x.abs().max(1.0);
            (f(x + h) - f(x - h)) / (2.0 * h)
        };
        Ok(ConstitutiveSet {
            pcap: Arc::new(pcap_raw),
            dpcap_dtheta: Arc::new(move |theta, c| fd(&|t| pcap_raw(t, c), theta)),
            dpcap_dc: Arc::new(move |theta, c| fd(&|cc| pcap_raw(theta, cc), c)),
            k: Arc::new(move |t| vg_conductivity(t, &params)),
            dk_dtheta: Arc::new(move |t| fd(&|tt| vg_conductivity(tt, &params), t)),
            tau: Arc::new(move |t| tau.value(t)),
            dtau_dtheta: Arc::new(move |t| tau.derivative(t)),
            reaction: Arc::new(|c| c / (c + 1.0)),
            dreaction_dc: Arc::new(|c| {
                let d = c + 1.0;
                1.0 / (d * d)
            }),
            diffusion: 1.0,
            gamma,
            delta,
        })
    }

    /// Fully custom bundle, mostly for degenerate models in tests.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        pcap: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dpcap_dtheta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dpcap_dc: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dk_dtheta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tau: TauKind,
        reaction: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dreaction_dc: impl Fn(f64) -> f64 + Send + Sync + 'static,
        diffusion: f64,
        gamma: f64,
        delta: f64,
    ) -> Result<Self, ConstitutiveError> {
        Self::check_constants(gamma, delta, diffusion)?;
        Ok(ConstitutiveSet {
            pcap: Arc::new(pcap),
            dpcap_dtheta: Arc::new(dpcap_dtheta),
            dpcap_dc: Arc::new(dpcap_dc),
            k: Arc::new(k),
            dk_dtheta: Arc::new(dk_dtheta),
            tau: Arc::new(move |t| tau.value(t)),
            dtau_dtheta: Arc::new(move |t| tau.derivative(t)),
            reaction: Arc::new(reaction),
            dreaction_dc: Arc::new(dreaction_dc),
            diffusion,
            gamma,
            delta,
        })
    }

    fn check_constants(gamma: f64, delta: f64, diffusion: f64) -> Result<(), ConstitutiveError> {
        if gamma < 0.0 {
            return Err(ConstitutiveError::InvalidConstant(format!("gamma = {gamma} < 0")));
        }
        if delta <= 0.0 {
            return Err(ConstitutiveError::InvalidConstant(format!("delta = {delta} <= 0")));
        }
        if diffusion <= 0.0 {
            return Err(ConstitutiveError::InvalidConstant(format!("D = {diffusion} <= 0")));
        }
        Ok(())
    }

    pub fn pcap(&self, theta: f64, c: f64) -> f64 {
        (self.pcap)(theta, c)
    }
    pub fn dpcap_dtheta(&self, theta: f64, c: f64) -> f64 {
        (self.dpcap_dtheta)(theta, c)
    }
    pub fn dpcap_dc(&self, theta: f64, c: f64) -> f64 {
        (self.dpcap_dc)(theta, c)
    }
    pub fn k(&self, theta: f64) -> f64 {
        (self.k)(theta)
    }
    pub fn dk_dtheta(&self, theta: f64) -> f64 {
        (self.dk_dtheta)(theta)
    }
    pub fn tau(&self, theta: f64) -> f64 {
        (self.tau)(theta)
    }
    pub fn dtau_dtheta(&self, theta: f64) -> f64 {
        (self.dtau_dtheta)(theta)
    }
    pub fn reaction(&self, c: f64) -> f64 {
        (self.reaction)(c)
    }
    pub fn dreaction_dc(&self, c: f64) -> f64 {
        (self.dreaction_dc)(c)
    }

    /// Regularized sign of a rate, with this model's delta.
    pub fn phi(&self, xi: f64) -> f64 {
        phi_delta(xi, self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn phi_delta_pointwise() {
        assert_eq!(phi_delta(0.0, 5e-3), 0.0);
        assert_eq!(phi_delta(1.0, 5e-3), 1.0);
        assert_eq!(phi_delta(-1.0, 5e-3), -1.0);
        assert_relative_eq!(phi_delta(2.5e-3, 5e-3), 0.5);
    }

    #[test]
    fn pcap_poly_pointwise() {
        assert_eq!(pcap_poly(1.0, 0.0), 0.0);
        assert_relative_eq!(pcap_poly(0.5, 0.0), 0.75);
        assert_relative_eq!(pcap_poly(0.5, 1.0), 0.65);
    }

    #[test]
    fn k_poly_pointwise() {
        assert_eq!(k_poly(0.0), 1.0);
        assert_eq!(k_poly(1.0), 2.0);
        assert_relative_eq!(k_poly(0.5), 1.25);
    }

    #[test]
    fn reaction_pointwise_and_singularity() {
        assert_eq!(reaction(0.0).unwrap(), 0.0);
        assert_relative_eq!(reaction(1.0).unwrap(), 0.5);
        assert_relative_eq!(reaction(3.0).unwrap(), 0.75);
        assert_eq!(reaction(-1.0), Err(ConstitutiveError::SingularReaction));
        assert!(dreaction_dc(-1.0).is_err());
    }

    #[test]
    fn tau_variants() {
        assert_eq!(TauKind::Zero.value(0.7), 0.0);
        assert_eq!(TauKind::One.value(0.7), 1.0);
        assert_relative_eq!(TauKind::OnePlusThetaSq.value(0.5), 1.25);
        assert_eq!(TauKind::Zero.derivative(0.3), 0.0);
        assert_eq!(TauKind::One.derivative(0.3), 0.0);
        assert_relative_eq!(TauKind::OnePlusThetaSq.derivative(0.5), 1.0);
    }

    #[test]
    fn effective_saturation_endpoints_and_midpoint() {
        let p = VanGenuchtenParams::physical_case();
        assert_relative_eq!(vg_effective_saturation(0.9, &p), 1.0 - 1e-8);
        assert_relative_eq!(vg_effective_saturation(0.005, &p), 1e-8);
        assert_relative_eq!(vg_effective_saturation(0.4525, &p), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn vg_conductivity_limits_and_midpoint() {
        let p = VanGenuchtenParams::physical_case();
        assert_relative_eq!(vg_conductivity(p.theta_s, &p), 1.0, epsilon = 1e-6);
        assert!(vg_conductivity(p.theta_r, &p) < 1e-9);
        // direct evaluation of the formula at theta_e = 0.5
        let se: f64 = 0.5;
        let expected = se.powf(0.31) * (1.0 - (1.0 - se.sqrt()).powf(2.0)).powi(2);
        assert_relative_eq!(vg_conductivity(0.4525, &p), expected, max_relative = 1e-10);
    }

    #[test]
    fn vg_conductivity_monotone_increasing() {
        let p = VanGenuchtenParams::physical_case();
        let mut prev = 0.0;
        for i in 1..100 {
            let theta = p.theta_r + (p.theta_s - p.theta_r) * i as f64 / 100.0;
            let k = vg_conductivity(theta, &p);
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn vg_pcap_prefactor() {
        let p = VanGenuchtenParams::physical_case();
        // c = 0: prefactor 1, so pcap equals the bare retention term
        let se: f64 = 0.5;
        let retention = (se.powf(-0.5) - 1.0).powf(-1.0);
        assert_relative_eq!(
            vg_pcap(0.4525, 0.0, &p, VgPcapForm::Standard).unwrap(),
            retention,
            max_relative = 1e-10
        );
        // c = a(e - 1) makes ln(c/a + 1) = 1, prefactor = 1/(1 - b)
        let c = p.a * (std::f64::consts::E - 1.0);
        let got = vg_pcap(0.4525, c, &p, VgPcapForm::Standard).unwrap();
        assert_relative_eq!(got / retention, 1.0 / (1.0 - 0.47), max_relative = 1e-10);
        assert_relative_eq!(got / retention, 1.8868, max_relative = 1e-4);
    }

    #[test]
    fn vg_pcap_singularity_rejected() {
        let p = VanGenuchtenParams::physical_case();
        // denominator zero at ln(c/a+1) = 1/b
        let c_star = p.a * ((1.0 / p.b).exp() - 1.0);
        let err = vg_pcap(0.4, c_star, &p, VgPcapForm::Standard);
        assert!(matches!(err, Err(ConstitutiveError::SurfactantSingularity { .. })));
    }

    #[test]
    fn vg_printed_form_is_finite_for_integer_exponent() {
        let p = VanGenuchtenParams::physical_case(); // M = 2 so 1 - M = -1
        let v = vg_pcap(0.5, 1.0, &p, VgPcapForm::AsPrinted).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences() {
        let model = ConstitutiveSet::polynomial(TauKind::OnePlusThetaSq, 1.0, 5e-3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let h = 1e-6;
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.3..1.6);
            let c: f64 = rng.gen_range(0.0..0.5);
            let fd_t = (model.pcap(theta + h, c) - model.pcap(theta - h, c)) / (2.0 * h);
            let fd_c = (model.pcap(theta, c + h) - model.pcap(theta, c - h)) / (2.0 * h);
            assert_relative_eq!(model.dpcap_dtheta(theta, c), fd_t, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(model.dpcap_dc(theta, c), fd_c, max_relative = 1e-6, epsilon = 1e-9);
            let fd_k = (model.k(theta + h) - model.k(theta - h)) / (2.0 * h);
            assert_relative_eq!(model.dk_dtheta(theta), fd_k, max_relative = 1e-6, epsilon = 1e-9);
            let fd_tau = (model.tau(theta + h) - model.tau(theta - h)) / (2.0 * h);
            assert_relative_eq!(model.dtau_dtheta(theta), fd_tau, max_relative = 1e-6, epsilon = 1e-9);
            let fd_r = (model.reaction(c + h) - model.reaction(c - h)) / (2.0 * h);
            assert_relative_eq!(model.dreaction_dc(c), fd_r, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn vg_derivatives_consistent_with_independent_differences() {
        let p = VanGenuchtenParams::physical_case();
        let model =
            ConstitutiveSet::van_genuchten(p, VgPcapForm::Standard, TauKind::OnePlusThetaSq, 1.0, 5e-3)
                .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.1..0.85);
            let c: f64 = rng.gen_range(0.0..0.2);
            let h = 1e-5;
            let fd_t = (model.pcap(theta + h, c) - model.pcap(theta - h, c)) / (2.0 * h);
            assert_relative_eq!(model.dpcap_dtheta(theta, c), fd_t, max_relative = 1e-5, epsilon = 1e-8);
            let fd_c = (model.pcap(theta, c + h) - model.pcap(theta, c - h)) / (2.0 * h);
            assert_relative_eq!(model.dpcap_dc(theta, c), fd_c, max_relative = 1e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(ConstitutiveSet::polynomial(TauKind::One, -0.1, 5e-3).is_err());
        assert!(ConstitutiveSet::polynomial(TauKind::One, 0.0, 0.0).is_err());
        let mut p = VanGenuchtenParams::physical_case();
        p.theta_r = 0.95;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn phi_is_odd_bounded_monotone(xi in -1.0f64..1.0, delta in 1e-4f64..0.1) {
            let v = phi_delta(xi, delta);
            prop_assert!(v.abs() <= 1.0);
            prop_assert!((phi_delta(-xi, delta) + v).abs() < 1e-15);
            if xi.abs() >= delta {
                prop_assert_eq!(v, xi.signum());
            }
            // 1/delta-Lipschitz
            let xi2 = xi + 1e-3;
            prop_assert!((phi_delta(xi2, delta) - v).abs() <= 1e-3 / delta + 1e-12);
            prop_assert!(phi_delta(xi2, delta) >= v - 1e-15);
        }

        #[test]
        fn conductivities_strictly_positive(theta in 0.05f64..1.6) {
            prop_assert!(k_poly(theta) > 0.0);
            let p = VanGenuchtenParams::physical_case();
            prop_assert!(vg_conductivity(theta.min(0.89), &p) > 0.0);
        }
    }
}
