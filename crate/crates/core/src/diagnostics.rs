//! Global surfactant budgets, extrema and linear growth rates.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{equilibrium_state, ModelParams, Variant};
use crate::par;
use crate::rhs::{eval_rhs, RhsBreakdown, State};
use crate::spatial::Grid;

/// Bulk, surface and total surfactant mass at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub t: f64,
    pub m_bulk: f64,
    pub m_surf: f64,
    pub m_total: f64,
    /// `m_total(t) − m_total(0)`; zero until [`MassReport::relative_to`] is applied.
    pub drift: f64,
    pub relative_drift: f64,
}

impl MassReport {
    /// Fills `drift` and `relative_drift` against the initial total mass.
    pub fn relative_to(mut self, initial_total: f64) -> Self {
        self.drift = self.m_total - initial_total;
        self.relative_drift = if initial_total != 0.0 {
            self.drift / initial_total
        } else {
            self.drift
        };
        self
    }
}

/// Domain-integrated rates of change of the bulk and surface mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub t: f64,
    pub rate_bulk: f64,
    pub rate_surf: f64,
    pub rate_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaReport {
    pub t: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

/// `M = ∫S dx + ∫Γ dx`, with `S = φh + χ` carried directly by the state.
pub fn total_mass(t: f64, state: &State, grid: &Grid) -> MassReport {
    let m_bulk = grid.integrate(&state.s);
    let m_surf = grid.integrate(&state.gamma);
    MassReport {
        t,
        m_bulk,
        m_surf,
        m_total: m_bulk + m_surf,
        drift: 0.0,
        relative_drift: 0.0,
    }
}

/// Integrated rates from an already evaluated breakdown, so diagnostics and
/// stepping share one right-hand side.
pub fn rates_from_breakdown(t: f64, breakdown: &RhsBreakdown, grid: &Grid) -> RateReport {
    let integrate_groups = |parts: [(&str, &[f64]); 4]| parts.iter().map(|(_, f)| grid.integrate(f)).sum::<f64>();
    let rate_bulk = integrate_groups(breakdown.s.labeled());
    let rate_surf = integrate_groups(breakdown.gamma.labeled());
    RateReport {
        t,
        rate_bulk,
        rate_surf,
        rate_total: rate_bulk + rate_surf,
    }
}

pub fn mass_rate(t: f64, state: &State, params: &ModelParams, variant: Variant, grid: &Grid) -> Result<RateReport> {
    let (tendency, _) = eval_rhs(state, params, variant, grid)?;
    let rate_bulk = grid.integrate(&tendency.ds_dt);
    let rate_surf = grid.integrate(&tendency.dgamma_dt);
    Ok(RateReport {
        t,
        rate_bulk,
        rate_surf,
        rate_total: rate_bulk + rate_surf,
    })
}

/// Domain integrals of each transport term group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDecomposition {
    pub bulk_advective: f64,
    pub bulk_diffusive: f64,
    pub bulk_marangoni: f64,
    pub bulk_source: f64,
    pub surface_advective: f64,
    pub surface_diffusive: f64,
    pub surface_marangoni: f64,
    pub surface_source: f64,
}

impl FluxDecomposition {
    pub fn labeled(&self) -> [(&'static str, f64); 8] {
        [
            ("bulk_advective", self.bulk_advective),
            ("bulk_diffusive", self.bulk_diffusive),
            ("bulk_marangoni", self.bulk_marangoni),
            ("bulk_source", self.bulk_source),
            ("surface_advective", self.surface_advective),
            ("surface_diffusive", self.surface_diffusive),
            ("surface_marangoni", self.surface_marangoni),
            ("surface_source", self.surface_source),
        ]
    }

    pub fn bulk_total(&self) -> f64 {
        self.bulk_advective + self.bulk_diffusive + self.bulk_marangoni + self.bulk_source
    }

    pub fn surface_total(&self) -> f64 {
        self.surface_advective + self.surface_diffusive + self.surface_marangoni + self.surface_source
    }
}

pub fn flux_decomposition(
    state: &State,
    params: &ModelParams,
    variant: Variant,
    grid: &Grid,
) -> Result<FluxDecomposition> {
    let (_, b) = eval_rhs(state, params, variant, grid)?;
    Ok(decompose(&b, grid))
}

pub fn decompose(b: &RhsBreakdown, grid: &Grid) -> FluxDecomposition {
    let i = |f: &[f64]| grid.integrate(f);
    FluxDecomposition {
        bulk_advective: i(&b.s.advective),
        bulk_diffusive: i(&b.s.diffusion),
        bulk_marangoni: i(&b.s.marangoni),
        bulk_source: i(&b.s.source),
        surface_advective: i(&b.gamma.advective),
        surface_diffusive: i(&b.gamma.diffusion),
        surface_marangoni: i(&b.gamma.marangoni),
        surface_source: i(&b.gamma.source),
    }
}

/// Node-wise extrema of `Γ` and `h`.
pub fn track_extrema(t: f64, state: &State) -> ExtremaReport {
    let (gamma_min, gamma_max) = min_max(&state.gamma);
    let (h_min, h_max) = min_max(&state.h);
    ExtremaReport {
        t,
        gamma_min,
        gamma_max,
        h_min,
        h_max,
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// One time-series row: masses, rates, extrema and the last step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub mass: MassReport,
    pub rate: RateReport,
    pub extrema: ExtremaReport,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "m_bulk",
        "m_surf",
        "m_total",
        "rel_drift",
        "rate_bulk",
        "rate_surf",
        "rate_total",
        "gamma_min",
        "gamma_max",
        "h_min",
        "h_max",
        "dt",
    ];

    /// Evaluates every diagnostic of `state`; drift is measured against
    /// `initial_total`.
    #[allow(clippy::too_many_arguments)]
    pub fn capture(
        t: f64,
        state: &State,
        params: &ModelParams,
        variant: Variant,
        grid: &Grid,
        initial_total: f64,
        dt: f64,
    ) -> Result<Self> {
        Ok(DiagnosticsRecord {
            mass: total_mass(t, state, grid).relative_to(initial_total),
            rate: mass_rate(t, state, params, variant, grid)?,
            extrema: track_extrema(t, state),
            dt,
        })
    }

    pub fn t(&self) -> f64 {
        self.mass.t
    }

    /// Values in [`DiagnosticsRecord::COLUMNS`] order.
    pub fn values(&self) -> [f64; 13] {
        let (m, r, e) = (&self.mass, &self.rate, &self.extrema);
        [
            m.t,
            m.m_bulk,
            m.m_surf,
            m.m_total,
            m.relative_drift,
            r.rate_bulk,
            r.rate_surf,
            r.rate_total,
            e.gamma_min,
            e.gamma_max,
            e.h_min,
            e.h_max,
            self.dt,
        ]
    }

    /// Inverse of [`DiagnosticsRecord::values`]; `drift` is rebuilt from
    /// the relative drift and the total.
    pub fn from_values(v: [f64; 13]) -> Self {
        let initial = v[3] / (1.0 + v[4]);
        DiagnosticsRecord {
            mass: MassReport {
                t: v[0],
                m_bulk: v[1],
                m_surf: v[2],
                m_total: v[3],
                drift: v[3] - initial,
                relative_drift: v[4],
            },
            rate: RateReport {
                t: v[0],
                rate_bulk: v[5],
                rate_surf: v[6],
                rate_total: v[7],
            },
            extrema: ExtremaReport {
                t: v[0],
                gamma_min: v[8],
                gamma_max: v[9],
                h_min: v[10],
                h_max: v[11],
            },
            dt: v[12],
        }
    }
}

/// Finite-difference step of the linearization.
pub const JACOBIAN_STEP: f64 = 1e-7;

/// Linear growth of one Fourier mode about the uniform base state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRate {
    pub mode: usize,
    pub k: f64,
    /// Eigenvalue with the largest real part; perturbations evolve as
    /// `e^{λt + ikx}`.
    pub eigenvalue: Complex64,
    pub spectrum: [Complex64; 4],
}

impl GrowthRate {
    pub fn growth(&self) -> f64 {
        self.eigenvalue.re
    }
}

/// Complex 4×4 block `A` with `J·(v·e^{ikx}) = (A·v)·e^{ikx}`, where `J` is
/// the central-difference Jacobian of the right-hand side at the uniform
/// base state. Field order is `(h, q, S, Γ)`.
pub fn linear_block(params: &ModelParams, variant: Variant, grid: &Grid, mode: usize) -> Result<Matrix4<Complex64>> {
    let n = grid.n();
    if mode == 0 || mode >= n / 2 {
        return Err(Error::InvalidParameter {
            name: "mode",
            reason: format!("mode {mode} outside [1, {}]", n / 2 - 1),
        });
    }
    let eq = equilibrium_state(params)?;
    let base = State::uniform(n, &eq);
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
    let cos = grid.sample(|x| (k * x).cos());
    let sin = grid.sample(|x| (k * x).sin());
    let delta = JACOBIAN_STEP;

    let response = |field: usize, shape: &[f64]| -> Result<[Vec<f64>; 4]> {
        let perturbed = |sign: f64| -> Result<[Vec<f64>; 4]> {
            let mut u = base.clone();
            for (v, s) in u.fields_mut()[field].iter_mut().zip(shape) {
                *v += sign * delta * s;
            }
            let (t, _) = eval_rhs(&u, params, variant, grid)?;
            Ok([t.dh_dt, t.dq_dt, t.ds_dt, t.dgamma_dt])
        };
        let plus = perturbed(1.0)?;
        let minus = perturbed(-1.0)?;
        Ok(std::array::from_fn(|i| {
            plus[i]
                .iter()
                .zip(&minus[i])
                .map(|(a, b)| (a - b) / (2.0 * delta))
                .collect()
        }))
    };

    let project = |re: &[f64], im: &[f64]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &x) in grid.x().iter().enumerate() {
            acc += Complex64::new(re[j], im[j]) * Complex64::new(0.0, -k * x).exp();
        }
        acc / n as f64
    };

    let mut a = Matrix4::<Complex64>::zeros();
    for col in 0..4 {
        let jc = response(col, &cos)?;
        let js = response(col, &sin)?;
        for row in 0..4 {
            a[(row, col)] = project(&jc[row], &js[row]);
        }
    }
    Ok(a)
}

pub fn growth_rate(params: &ModelParams, variant: Variant, grid: &Grid, mode: usize) -> Result<GrowthRate> {
    let a = linear_block(params, variant, grid, mode)?;
    let eig = a
        .eigenvalues()
        .ok_or_else(|| Error::OutOfRange(format!("eigenvalues of mode {mode} did not converge")))?;
    let spectrum = [eig[0], eig[1], eig[2], eig[3]];
    let eigenvalue = spectrum
        .iter()
        .copied()
        .fold(Complex64::new(f64::NEG_INFINITY, 0.0), |best, z| if z.re > best.re { z } else { best });
    Ok(GrowthRate {
        mode,
        k: 2.0 * std::f64::consts::PI * mode as f64 / grid.length(),
        eigenvalue,
        spectrum,
    })
}

/// Growth rates for modes `1..=max_mode`, evaluated in parallel.
pub fn dispersion(params: &ModelParams, variant: Variant, grid: &Grid, max_mode: usize) -> Result<Vec<GrowthRate>> {
    let modes: Vec<usize> = (1..=max_mode).collect();
    par::map(&modes, |&m| growth_rate(params, variant, grid, m))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> (ModelParams, Grid, State) {
        let p = ModelParams::reference(1.0);
        let g = Grid::new(64, p.domain_length).unwrap();
        let eq = equilibrium_state(&p).unwrap();
        (p, g.clone(), State::uniform(g.n(), &eq))
    }

    #[test]
    fn equilibrium_masses() {
        let (_, g, eq) = setup();
        let m = total_mass(0.0, &eq, &g);
        assert!((m.m_bulk - 20.0 / 90.0).abs() < 1e-14);
        assert!((m.m_surf - 2.0).abs() < 1e-14);
        assert!((m.m_total - (2.0 + 20.0 / 90.0)).abs() < 1e-14);
        assert!((m.m_total - m.m_bulk - m.m_surf).abs() <= 1e-13);
    }

    #[test]
    fn zero_and_wavy_masses() {
        let (_, g, mut st) = setup();
        st.s = vec![0.0; g.n()];
        st.gamma = vec![0.0; g.n()];
        let m = total_mass(0.0, &st, &g);
        assert_eq!((m.m_bulk, m.m_surf, m.m_total), (0.0, 0.0, 0.0));
        st.s = g.sample(|x| 0.1 + 0.05 * (2.0 * PI * x / 20.0).cos());
        st.gamma = vec![0.1; g.n()];
        let m = total_mass(0.0, &st, &g);
        assert!((m.m_bulk - 2.0).abs() < 1e-14);
        let r = m.relative_to(1.0);
        assert!((r.drift - (m.m_total - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_rates_and_fluxes_vanish() {
        let (p, g, eq) = setup();
        for v in Variant::ALL {
            let r = mass_rate(0.0, &eq, &p, v, &g).unwrap();
            assert!(r.rate_bulk.abs() <= 1e-12 && r.rate_surf.abs() <= 1e-12);
            assert_eq!(r.rate_total, r.rate_bulk + r.rate_surf);
            let f = flux_decomposition(&eq, &p, v, &g).unwrap();
            assert!(f.labeled().iter().all(|(_, x)| x.abs() <= 1e-12));
        }
    }

    #[test]
    fn flat_film_legacy_conserves() {
        let (p, g, mut st) = setup();
        st.gamma = g.sample(|x| 0.1 + 0.02 * (2.0 * PI * x / 20.0).sin());
        let r = mass_rate(0.0, &st, &p, Variant::Legacy, &g).unwrap();
        assert!(r.rate_total.abs() <= 1e-10, "{}", r.rate_total);
    }

    #[test]
    fn extrema_on_nodes() {
        let (_, g, mut st) = setup();
        let e = track_extrema(0.0, &st);
        assert_eq!(e.gamma_min, e.gamma_max);
        st.gamma = g.sample(|x| 0.1 + 0.01 * (2.0 * PI * x / 20.0).sin());
        let e = track_extrema(1.0, &st);
        assert!((e.gamma_min - 0.09).abs() < 1e-15 && (e.gamma_max - 0.11).abs() < 1e-15);
        let mean = g.mean(&st.gamma);
        assert!(e.gamma_min <= mean && mean <= e.gamma_max);
    }

    #[test]
    fn growth_rate_rejects_out_of_range_modes() {
        let (p, g, _) = setup();
        assert!(growth_rate(&p, Variant::Corrected, &g, 0).is_err());
        assert!(growth_rate(&p, Variant::Corrected, &g, 32).is_err());
        assert!(growth_rate(&p, Variant::Corrected, &g, 31).is_ok());
    }

    #[test]
    fn variants_share_the_linearization() {
        let (p, g, _) = setup();
        for m in [1, 2, 5, 13] {
            let a = growth_rate(&p, Variant::Legacy, &g, m).unwrap();
            let b = growth_rate(&p, Variant::Corrected, &g, m).unwrap();
            assert!((a.eigenvalue - b.eigenvalue).norm() <= 1e-8);
        }
    }
}
