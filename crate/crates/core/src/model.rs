//! Physical parameters, algebraic closures and the uniform base state.
//!
//! The bulk surfactant is carried by two depth-averaged quantities: `φ`, the
//! bulk concentration at the free surface, and `χ`, the depth-integrated
//! excess of the bulk concentration over `φ`. The prognostic bulk variable is
//! their aggregate `S = χ + φ·h`, from which `φ` is recovered by an exact
//! algebraic inversion since `χ` is linear in `φ`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which surface-transport closure the coupling term of the `Γ` equation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Earlier closure: the `Γ·Γx·hx` coupling carries an overall factor 5/4.
    Legacy,
    /// Conservation-consistent closure: overall factor 1/4, so the whole
    /// Marangoni bracket collapses to `∂x(h·Γ·Γx)`.
    Corrected,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Legacy, Variant::Corrected];

    /// Multiplier `c` of `Γ·Γx·hx` inside the `(1/4)·ε·Re·Mr·[...]` bracket.
    pub fn coupling_multiplier(self) -> f64 {
        match self {
            Variant::Legacy => 5.0,
            Variant::Corrected => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Legacy => "legacy",
            Variant::Corrected => "corrected",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "legacy" => Ok(Variant::Legacy),
            "corrected" => Ok(Variant::Corrected),
            other => Err(Error::Config(format!(
                "unknown variant `{other}` (expected legacy or corrected)"
            ))),
        }
    }
}

/// Form of the bulk-diffusion group of the `S` equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BulkDiffusion {
    /// `(ε/Pe_b)·∂x(χx + h·φx)`: an exact divergence, so bulk diffusion
    /// never changes the total surfactant mass.
    #[default]
    Conservative,
    /// `(ε/Pe_b)·[χxx − 3χ·hx²/h² + h·φxx]` as it is usually written. Its
    /// domain integral is `−(ε/Pe_b)·∫(hx·φx + 3χ·hx²/h²)dx`, which is not zero.
    Expanded,
}

impl BulkDiffusion {
    pub fn as_str(self) -> &'static str {
        match self {
            BulkDiffusion::Conservative => "conservative",
            BulkDiffusion::Expanded => "expanded",
        }
    }
}

impl FromStr for BulkDiffusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conservative" => Ok(BulkDiffusion::Conservative),
            "expanded" => Ok(BulkDiffusion::Expanded),
            other => Err(Error::Config(format!(
                "unknown bulk_diffusion `{other}` (expected conservative or expanded)"
            ))),
        }
    }
}

/// Dimensionless groups of the reduced model.
///
/// The Weber number only enters through `ka = ε²·Re·We`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub re: f64,
    pub fr: f64,
    pub cot_theta: f64,
    pub pe_b: f64,
    pub pe_s: f64,
    pub eps: f64,
    pub mr: f64,
    pub k_s: f64,
    pub kappa: f64,
    pub gamma_e: f64,
    pub ka: f64,
    pub domain_length: f64,
    /// Scales the surface-side adsorption source in the legacy variant only.
    /// 1.0 keeps bulk and surface sources equal and opposite.
    pub legacy_source_mismatch: f64,
    pub bulk_diffusion: BulkDiffusion,
}

impl ModelParams {
    /// Parameter set of the reference nonlinear runs, completed with the
    /// inclination, which must be chosen by the caller.
    pub fn reference(cot_theta: f64) -> Self {
        ModelParams {
            re: 1.5,
            fr: 0.7071,
            cot_theta,
            pe_b: 700.0,
            pe_s: 700.0,
            eps: 0.1,
            mr: 1.0,
            k_s: 1.0,
            kappa: 10.0,
            gamma_e: 0.1,
            ka: 0.75,
            domain_length: 20.0,
            legacy_source_mismatch: 1.0,
            bulk_diffusion: BulkDiffusion::Conservative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        }
        let all = [
            ("re", self.re),
            ("fr", self.fr),
            ("cot_theta", self.cot_theta),
            ("pe_b", self.pe_b),
            ("pe_s", self.pe_s),
            ("eps", self.eps),
            ("mr", self.mr),
            ("k_s", self.k_s),
            ("kappa", self.kappa),
            ("gamma_e", self.gamma_e),
            ("ka", self.ka),
            ("domain_length", self.domain_length),
            ("legacy_source_mismatch", self.legacy_source_mismatch),
        ];
        for (name, v) in all {
            check(v.is_finite(), name, "must be finite")?;
        }
        check(self.re > 0.0, "re", "must be > 0")?;
        check(self.fr > 0.0, "fr", "must be > 0")?;
        check(self.cot_theta >= 0.0, "cot_theta", "must be >= 0")?;
        check(self.pe_b > 0.0, "pe_b", "must be > 0")?;
        check(self.pe_s > 0.0, "pe_s", "must be > 0")?;
        check(self.eps > 0.0 && self.eps < 1.0, "eps", "must lie in (0, 1)")?;
        check(self.k_s >= 0.0, "k_s", "must be >= 0")?;
        check(self.kappa >= 0.0, "kappa", "must be >= 0")?;
        check(
            (0.0..1.0).contains(&self.gamma_e),
            "gamma_e",
            "must lie in [0, 1)",
        )?;
        check(self.ka >= 0.0, "ka", "must be >= 0")?;
        check(self.domain_length > 0.0, "domain_length", "must be > 0")?;
        Ok(())
    }

    /// `Pe_b·k_s/3`, the prefactor of the `χ` closure.
    #[inline]
    pub fn chi_prefactor(&self) -> f64 {
        self.pe_b * self.k_s / 3.0
    }

    /// Hydrostatic flux coefficient `(5/12)·cotθ/Fr²`.
    ///
    /// The grouping `(Re/Fr²)·(cotθ/Re)` cancels the Reynolds number.
    #[inline]
    pub fn hydrostatic_coefficient(&self) -> f64 {
        5.0 / 12.0 * self.cot_theta / (self.fr * self.fr)
    }

    /// Capillary coefficient `(5/6)·Ka/Re`.
    #[inline]
    pub fn capillary_coefficient(&self) -> f64 {
        5.0 / 6.0 * self.ka / self.re
    }

    /// Relaxation rate `5/(2·ε·Re)` of the flow-rate equation.
    #[inline]
    pub fn relaxation_rate(&self) -> f64 {
        2.5 / (self.eps * self.re)
    }

    /// Nusselt flow rate for unit thickness, `Re/(3·Fr²)`.
    #[inline]
    pub fn nusselt_flow_rate(&self) -> f64 {
        self.re / (3.0 * self.fr * self.fr)
    }
}

/// Uniform fixed point of the four evolution equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumState {
    pub h_e: f64,
    pub q_e: f64,
    pub gamma_eq: f64,
    pub phi_e: f64,
    pub chi_e: f64,
}

impl EquilibriumState {
    /// Bulk content `S = χ + φ·h` at equilibrium.
    pub fn s_e(&self) -> f64 {
        self.chi_e + self.phi_e * self.h_e
    }
}

pub fn equilibrium_state(params: &ModelParams) -> Result<EquilibriumState> {
    params.validate()?;
    let gamma = params.gamma_e;
    let phi_e = if gamma == 0.0 {
        0.0
    } else {
        let denom = params.kappa * (1.0 - gamma);
        if denom <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: "kappa = 0 with gamma_e > 0 has no finite Langmuir equilibrium".into(),
            });
        }
        gamma / denom
    };
    let h_e = 1.0;
    Ok(EquilibriumState {
        h_e,
        q_e: params.nusselt_flow_rate() * h_e * h_e * h_e,
        gamma_eq: gamma,
        phi_e,
        chi_e: 0.0,
    })
}

/// Excess bulk surfactant `χ = (Pe_b·k_s/3)·h²·[κ(1−Γ)φ − Γ]`.
#[inline]
pub fn chi_closure(h: f64, gamma: f64, phi: f64, params: &ModelParams) -> f64 {
    params.chi_prefactor() * h * h * (params.kappa * (1.0 - gamma) * phi - gamma)
}

/// Inverts `S = φ·h + χ(h, Γ, φ)` for `φ`.
pub fn recover_phi(s: f64, h: f64, gamma: f64, params: &ModelParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveThickness { index: 0, value: h });
    }
    let a = params.chi_prefactor() * h * h;
    let denom = h + a * params.kappa * (1.0 - gamma);
    if !(denom > f64::EPSILON * h) {
        return Err(Error::OutOfRange(format!(
            "phi recovery denominator {denom:e} vanishes (h = {h}, gamma = {gamma})"
        )));
    }
    Ok((s + a * gamma) / denom)
}

/// Langmuir exchange flux `k_s·[κ(1−Γ)C_s − Γ]`; positive means adsorption
/// onto the interface.
#[inline]
pub fn langmuir_flux(gamma: f64, c_surface: f64, params: &ModelParams) -> f64 {
    params.k_s * (params.kappa * (1.0 - gamma) * c_surface - gamma)
}
