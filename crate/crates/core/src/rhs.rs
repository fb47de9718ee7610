//! Right-hand side of the four-equation reduced model.
//!
//! Conserved quantities are differentiated in flux form: every flux is
//! assembled pointwise, passed through the 2/3 filter and differentiated
//! once, so that its domain integral vanishes to round-off. Non-flux
//! products are filtered too. Terms that are linear with constant
//! coefficients are left unfiltered so that the implicit part of the
//! integrator sees exactly the same operator at every resolved mode.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{chi_closure, recover_phi, BulkDiffusion, EquilibriumState, ModelParams, Variant};
use crate::spatial::Grid;

/// Prognostic fields on the grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    /// Bulk surfactant content `S = χ + φ·h`.
    pub s: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl State {
    pub const FIELD_NAMES: [&'static str; 4] = ["h", "q", "s", "gamma"];

    pub fn uniform(n: usize, eq: &EquilibriumState) -> Self {
        State {
            h: vec![eq.h_e; n],
            q: vec![eq.q_e; n],
            s: vec![eq.s_e(); n],
            gamma: vec![eq.gamma_eq; n],
        }
    }

    pub fn from_fields([h, q, s, gamma]: [Vec<f64>; 4]) -> Self {
        State { h, q, s, gamma }
    }

    pub fn into_fields(self) -> [Vec<f64>; 4] {
        [self.h, self.q, self.s, self.gamma]
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn fields(&self) -> [&[f64]; 4] {
        [&self.h, &self.q, &self.s, &self.gamma]
    }

    pub fn fields_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.h, &mut self.q, &mut self.s, &mut self.gamma]
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.iter().all(|v| v.is_finite()))
    }

    /// Checks field lengths, finiteness and `h > 0`.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        for (name, field) in Self::FIELD_NAMES.iter().zip(self.fields()) {
            grid.check(field)?;
            if let Some(j) = field.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("state field `{name}` at node {j}")));
            }
        }
        if let Some((index, &value)) = self.h.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::NonPositiveThickness { index, value });
        }
        Ok(())
    }

    /// Surface bulk concentration `φ` and excess `χ` recovered from `(S, h, Γ)`.
    pub fn phi_chi(&self, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let mut phi = Vec::with_capacity(n);
        let mut chi = Vec::with_capacity(n);
        for j in 0..n {
            let (h, g) = (self.h[j], self.gamma[j]);
            let p = recover_phi(self.s[j], h, g, params).map_err(|e| match e {
                Error::NonPositiveThickness { value, .. } => {
                    Error::NonPositiveThickness { index: j, value }
                }
                other => other,
            })?;
            phi.push(p);
            chi.push(chi_closure(h, g, p, params));
        }
        Ok((phi, chi))
    }
}

/// Time derivatives of the four prognostic fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub dh_dt: Vec<f64>,
    pub dq_dt: Vec<f64>,
    pub ds_dt: Vec<f64>,
    pub dgamma_dt: Vec<f64>,
}

impl Tendency {
    pub fn fields(&self) -> [&[f64]; 4] {
        [&self.dh_dt, &self.dq_dt, &self.ds_dt, &self.dgamma_dt]
    }

    pub fn max_abs(&self) -> f64 {
        self.fields()
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Term groups of the flow-rate equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGroups {
    /// Inertial and hydrostatic flux divergence plus `(1/7)(q/h)qx`.
    pub advective: Vec<f64>,
    pub capillary: Vec<f64>,
    pub relaxation: Vec<f64>,
    pub viscous: Vec<f64>,
    /// Marangoni stress gradient and the `ε·Re·Mr/16` coupling bracket.
    pub marangoni: Vec<f64>,
}

/// Term groups of a surfactant transport equation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportGroups {
    pub advective: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub marangoni: Vec<f64>,
    /// Adsorption exchange with the other phase.
    pub source: Vec<f64>,
}

impl TransportGroups {
    pub fn labeled(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("advective", &self.advective),
            ("diffusion", &self.diffusion),
            ("marangoni", &self.marangoni),
            ("source", &self.source),
        ]
    }

    fn sum(&self) -> Vec<f64> {
        sum_fields(&[&self.advective, &self.diffusion, &self.marangoni, &self.source])
    }
}

impl MomentumGroups {
    pub fn labeled(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("advective", &self.advective),
            ("capillary", &self.capillary),
            ("relaxation", &self.relaxation),
            ("viscous", &self.viscous),
            ("marangoni", &self.marangoni),
        ]
    }

    fn sum(&self) -> Vec<f64> {
        sum_fields(&[
            &self.advective,
            &self.capillary,
            &self.relaxation,
            &self.viscous,
            &self.marangoni,
        ])
    }
}

/// Every tendency split into named physical contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBreakdown {
    pub h_advective: Vec<f64>,
    pub q: MomentumGroups,
    pub s: TransportGroups,
    pub gamma: TransportGroups,
}

fn sum_fields(parts: &[&Vec<f64>]) -> Vec<f64> {
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        for (o, v) in out.iter_mut().zip(p.iter()) {
            *o += v;
        }
    }
    out
}

fn ensure_finite(name: &str, field: &[f64]) -> Result<()> {
    match field.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(j) => Err(Error::NonFinite(format!("term group `{name}` at node {j}"))),
    }
}

fn filtered(grid: &Grid, mut field: Vec<f64>) -> Vec<f64> {
    grid.dealias(&mut field);
    field
}

/// `[Γxx·Γ·h + Γx²·h + c·Γ·Γx·hx]`, evaluated as `∂x(h·Γ·Γx) + (c−1)·Γ·Γx·hx`.
fn gamma_bracket(grid: &Grid, h: &[f64], hx: &[f64], gamma: &[f64], gx: &[f64], c: f64) -> Vec<f64> {
    let flux: Vec<f64> = (0..grid.n()).map(|j| h[j] * gamma[j] * gx[j]).collect();
    let mut out = grid.filtered_derivative(&flux);
    if c != 1.0 {
        let coupling: Vec<f64> = (0..grid.n()).map(|j| gamma[j] * gx[j] * hx[j]).collect();
        let coupling = filtered(grid, coupling);
        for (o, v) in out.iter_mut().zip(coupling) {
            *o += (c - 1.0) * v;
        }
    }
    out
}

/// Marangoni bracket of the surface equation with coupling multiplier `c`.
///
/// `c = 1` reduces it to the exact divergence `∂x(h·Γ·Γx)`; `c = 5`
/// reproduces the legacy closure.
pub fn marangoni_bracket_gamma(h: &[f64], gamma: &[f64], grid: &Grid, c: f64) -> Result<Vec<f64>> {
    grid.check(h)?;
    grid.check(gamma)?;
    let hx = grid.deriv(h, 1)?;
    let gx = grid.deriv(gamma, 1)?;
    Ok(gamma_bracket(grid, h, &hx, gamma, &gx, c))
}

/// Marangoni group of the bulk equation, `−(3/80)·ε·Re·Mr·∂x(h·χ·Γx)`.
pub fn marangoni_group_bulk(
    h: &[f64],
    chi: &[f64],
    gamma: &[f64],
    grid: &Grid,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    grid.check(h)?;
    grid.check(chi)?;
    let gx = grid.deriv(gamma, 1)?;
    Ok(bulk_marangoni(grid, h, chi, &gx, params))
}

fn bulk_marangoni(grid: &Grid, h: &[f64], chi: &[f64], gx: &[f64], p: &ModelParams) -> Vec<f64> {
    let coef = -3.0 / 80.0 * p.eps * p.re * p.mr;
    let flux: Vec<f64> = (0..grid.n()).map(|j| h[j] * chi[j] * gx[j]).collect();
    grid.filtered_derivative(&flux)
        .into_iter()
        .map(|v| coef * v)
        .collect()
}

/// Evaluates all four tendencies and their term groups.
///
/// `∂t Γ` is assembled first; the mixed derivative `∂²Γ/∂t∂x` of the
/// flow-rate equation is its spatial derivative.
pub fn eval_rhs(
    state: &State,
    params: &ModelParams,
    variant: Variant,
    grid: &Grid,
) -> Result<(Tendency, RhsBreakdown)> {
    state.check(grid)?;
    let p = params;
    let n = grid.n();
    let State { h, q, s: _, gamma } = state;
    let (phi, chi) = state.phi_chi(p)?;

    let [hx, hxx, hxxx] = grid.derivs(h, [1, 2, 3]);
    let [qx, qxx] = grid.derivs(q, [1, 2]);
    let [gx, gxx] = grid.derivs(gamma, [1, 2]);
    let [chixx] = grid.derivs(&chi, [2]);
    let inv_h: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
    let emr = p.eps * p.re * p.mr;

    // Adsorption exchange, shared by both transport equations.
    let exchange: Vec<f64> = (0..n)
        .map(|j| 3.0 * chi[j] / (p.eps * p.pe_b) * inv_h[j] * inv_h[j])
        .collect();

    // Surface concentration.
    let gamma_adv = {
        let flux: Vec<f64> = (0..n).map(|j| q[j] * gamma[j] * inv_h[j]).collect();
        grid.filtered_derivative(&flux)
            .into_iter()
            .map(|v| -1.5 * v)
            .collect::<Vec<_>>()
    };
    let gamma_diff: Vec<f64> = gxx.iter().map(|v| p.eps / p.pe_s * v).collect();
    let surface_scale = match variant {
        Variant::Legacy => p.legacy_source_mismatch,
        Variant::Corrected => 1.0,
    };
    let gamma_src: Vec<f64> = exchange.iter().map(|e| surface_scale * e).collect();
    let gamma_mar: Vec<f64> = gamma_bracket(grid, h, &hx, gamma, &gx, variant.coupling_multiplier())
        .into_iter()
        .map(|v| 0.25 * emr * v)
        .collect();
    let gamma_groups = TransportGroups {
        advective: gamma_adv,
        diffusion: gamma_diff,
        marangoni: gamma_mar,
        source: gamma_src,
    };
    for (name, f) in gamma_groups.labeled() {
        ensure_finite(&format!("gamma.{name}"), f)?;
    }
    let dgamma_dt = gamma_groups.sum();

    // Bulk content.
    let s_adv = {
        let flux: Vec<f64> = (0..n)
            .map(|j| 33.0 / 40.0 * q[j] * chi[j] * inv_h[j] + phi[j] * q[j])
            .collect();
        grid.filtered_derivative(&flux)
            .into_iter()
            .map(|v| -v)
            .collect::<Vec<_>>()
    };
    let s_diff: Vec<f64> = {
        let rest = match p.bulk_diffusion {
            BulkDiffusion::Conservative => {
                let [phix] = grid.derivs(&phi, [1]);
                let flux: Vec<f64> = (0..n).map(|j| h[j] * phix[j]).collect();
                grid.filtered_derivative(&flux)
            }
            BulkDiffusion::Expanded => {
                let [phixx] = grid.derivs(&phi, [2]);
                let prod: Vec<f64> = (0..n)
                    .map(|j| {
                        -3.0 * chi[j] * hx[j] * hx[j] * inv_h[j] * inv_h[j] + h[j] * phixx[j]
                    })
                    .collect();
                filtered(grid, prod)
            }
        };
        let d = p.eps / p.pe_b;
        chixx.iter().zip(rest).map(|(a, b)| d * (a + b)).collect()
    };
    let s_groups = TransportGroups {
        advective: s_adv,
        diffusion: s_diff,
        marangoni: bulk_marangoni(grid, h, &chi, &gx, p),
        source: exchange.iter().map(|e| -e).collect(),
    };
    for (name, f) in s_groups.labeled() {
        ensure_finite(&format!("s.{name}"), f)?;
    }
    let ds_dt = s_groups.sum();

    // Flow rate.
    let hbar = grid.mean(h);
    let q_adv = {
        let hyd = p.hydrostatic_coefficient();
        let flux: Vec<f64> = (0..n)
            .map(|j| 9.0 / 7.0 * q[j] * q[j] * inv_h[j] + hyd * h[j] * h[j])
            .collect();
        let inertia: Vec<f64> = (0..n).map(|j| q[j] * inv_h[j] * qx[j] / 7.0).collect();
        grid.filtered_minus_derivative(&inertia, &flux)
    };
    let q_cap = {
        let c = p.capillary_coefficient();
        let dev = filtered(grid, (0..n).map(|j| (h[j] - hbar) * hxxx[j]).collect());
        (0..n).map(|j| c * (hbar * hxxx[j] + dev[j])).collect::<Vec<_>>()
    };
    let q_relax = {
        let (r, nus) = (p.relaxation_rate(), p.nusselt_flow_rate());
        (0..n)
            .map(|j| r * (nus * h[j] - q[j] * inv_h[j] * inv_h[j]))
            .collect::<Vec<_>>()
    };
    let q_visc = {
        let nonlinear = filtered(
            grid,
            (0..n)
                .map(|j| {
                    let ih = inv_h[j];
                    -4.5 * ih * qx[j] * hx[j] + 4.0 * q[j] * ih * ih * hx[j] * hx[j]
                        - 6.0 * q[j] * ih * hxx[j]
                })
                .collect(),
        );
        let d = p.eps / p.re;
        (0..n).map(|j| d * (4.5 * qxx[j] + nonlinear[j])).collect::<Vec<_>>()
    };
    let q_mar = {
        let [gtx] = grid.derivs(&dgamma_dt, [1]);
        let bracket = filtered(
            grid,
            (0..n)
                .map(|j| {
                    h[j] * h[j] / 3.0 * gtx[j]
                        + 15.0 / 14.0 * h[j] * q[j] * gxx[j]
                        + 19.0 / 21.0 * h[j] * qx[j] * gx[j]
                        + 5.0 / 7.0 * q[j] * gx[j] * hx[j]
                })
                .collect(),
        );
        (0..n)
            .map(|j| -1.25 * p.mr * gx[j] + emr / 16.0 * bracket[j])
            .collect::<Vec<_>>()
    };
    let q_groups = MomentumGroups {
        advective: q_adv,
        capillary: q_cap,
        relaxation: q_relax,
        viscous: q_visc,
        marangoni: q_mar,
    };
    for (name, f) in q_groups.labeled() {
        ensure_finite(&format!("q.{name}"), f)?;
    }
    let dq_dt = q_groups.sum();

    let dh_dt: Vec<f64> = qx.iter().map(|v| -v).collect();
    ensure_finite("h.advective", &dh_dt)?;

    let tendency = Tendency {
        dh_dt: dh_dt.clone(),
        dq_dt,
        ds_dt,
        dgamma_dt,
    };
    let breakdown = RhsBreakdown {
        h_advective: dh_dt,
        q: q_groups,
        s: s_groups,
        gamma: gamma_groups,
    };
    Ok((tendency, breakdown))
}

/// Kind of problem reported by [`validate_state`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueKind {
    NonPositiveThickness,
    NonFinite,
    GammaOutOfRange,
    NegativePhi,
}

impl IssueKind {
    pub fn code(self) -> &'static str {
        match self {
            IssueKind::NonPositiveThickness => "nonpositive-thickness",
            IssueKind::NonFinite => "non-finite",
            IssueKind::GammaOutOfRange => "gamma-out-of-range",
            IssueKind::NegativePhi => "phi-negative",
        }
    }

    pub fn is_error(self) -> bool {
        matches!(self, IssueKind::NonPositiveThickness | IssueKind::NonFinite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub field: &'static str,
    /// First offending node.
    pub node: usize,
    pub value: f64,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = if self.kind.is_error() { "error" } else { "warning" };
        write!(
            f,
            "{level} {}: {} = {} at node {}",
            self.kind.code(),
            self.field,
            self.value,
            self.node
        )
    }
}

/// Physical-range audit: errors for `h ≤ 0` or non-finite samples, warnings
/// for `Γ ∉ [0, 1]` or `φ < 0`. Each kind is reported once, at its first node.
pub fn validate_state(state: &State, params: &ModelParams) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (name, field) in State::FIELD_NAMES.iter().zip(state.fields()) {
        if let Some((node, &value)) = field.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            issues.push(Issue {
                kind: IssueKind::NonFinite,
                field: name,
                node,
                value,
            });
        }
    }
    if let Some((node, &value)) = state.h.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        issues.push(Issue {
            kind: IssueKind::NonPositiveThickness,
            field: "h",
            node,
            value,
        });
    }
    if let Some((node, &value)) = state
        .gamma
        .iter()
        .enumerate()
        .find(|(_, &v)| !(0.0..=1.0).contains(&v) && v.is_finite())
    {
        issues.push(Issue {
            kind: IssueKind::GammaOutOfRange,
            field: "gamma",
            node,
            value,
        });
    }
    if issues.iter().all(|i| !i.kind.is_error()) {
        let negative = (0..state.len()).find_map(|j| {
            recover_phi(state.s[j], state.h[j], state.gamma[j], params)
                .ok()
                .filter(|&phi| phi < 0.0)
                .map(|phi| (j, phi))
        });
        if let Some((node, value)) = negative {
            issues.push(Issue {
                kind: IssueKind::NegativePhi,
                field: "phi",
                node,
                value,
            });
        }
    }
    issues
}
