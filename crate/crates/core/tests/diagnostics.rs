use filmsolve_core::diagnostics::{dispersion, growth_rate, linear_block};
use filmsolve_core::integrator::{integrate_to, RunStatus, StepControl};
use filmsolve_core::{equilibrium_state, Grid, ModelParams, State, Variant};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

fn hq_block(a: &Matrix4<Complex64>) -> [Complex64; 4] {
    [a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]]
}

#[test]
fn inert_surfactant_leaves_the_hydrodynamics_alone() {
    let g = Grid::new(64, 20.0).unwrap();
    let mut p = ModelParams::reference(0.0);
    p.mr = 0.0;
    p.k_s = 0.0;
    for mode in [1, 4, 9] {
        let a = hq_block(&linear_block(&p, Variant::Corrected, &g, mode).unwrap());
        for gamma_e in [0.02, 0.3, 0.6] {
            let mut other = p;
            other.gamma_e = gamma_e;
            let b = hq_block(&linear_block(&other, Variant::Corrected, &g, mode).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-6 * x.norm().max(1.0), "mode {mode}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn strong_capillarity_stabilizes_short_waves() {
    let g = Grid::new(64, 20.0).unwrap();
    let p = ModelParams::reference(0.0);
    let rates = dispersion(&p, Variant::Corrected, &g, 12).unwrap();
    let top = rates.iter().filter(|r| r.growth() > 0.0).map(|r| r.mode).max().expect("an unstable band");
    let mut stiff = p;
    stiff.ka *= 100.0;
    let r = growth_rate(&stiff, Variant::Corrected, &g, top).unwrap();
    assert!(r.growth() < 0.0, "mode {top} still grows at {}", r.growth());
}

fn null_vector(a: &Matrix4<Complex64>, lambda: Complex64) -> Vector4<Complex64> {
    let shifted = a - Matrix4::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .unwrap();
    v_t.row(i).transpose().map(|z| z.conj())
}

fn mode_coefficient(g: &Grid, f: &[f64], mode: usize) -> Complex64 {
    g.spectrum(f)[mode] / g.n() as f64
}

#[test]
fn eigenvalue_matches_small_amplitude_evolution() {
    let (n, mode, amp, t_end) = (64, 3, 1e-5, 10.0);
    let p = ModelParams::reference(0.0);
    let g = Grid::new(n, p.domain_length).unwrap();
    let variant = Variant::Legacy;
    let a = linear_block(&p, variant, &g, mode).unwrap();
    let lambda = growth_rate(&p, variant, &g, mode).unwrap().eigenvalue;
    let v = null_vector(&a, lambda);
    assert!((a * v - v * lambda).norm() <= 1e-8 * lambda.norm());

    let k = 2.0 * std::f64::consts::PI * mode as f64 / g.length();
    let eq = equilibrium_state(&p).unwrap();
    let mut st = State::uniform(n, &eq);
    for (field, c) in st.fields_mut().into_iter().zip(v.iter()) {
        for (u, x) in field.iter_mut().zip(g.x()) {
            *u += amp * (c * Complex64::new(0.0, k * x).exp()).re;
        }
    }
    let c0 = mode_coefficient(&g, &st.h, mode);

    let mut c = StepControl::default();
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-14;
    let r = integrate_to(&st, 0.0, t_end, &p, variant, &g, &c, |_, _, _| {}).unwrap();
    assert_eq!(r.status, RunStatus::Completed);
    let ratio = mode_coefficient(&g, &r.state.h, mode) / c0;
    let expected = (lambda * t_end).exp();

    let observed_growth = ratio.norm().ln() / t_end;
    assert!(
        (observed_growth - lambda.re).abs() <= 1e-3 * lambda.re.abs(),
        "growth {observed_growth} vs {}",
        lambda.re
    );
    assert!((ratio - expected).norm() <= 1e-3 * expected.norm(), "{ratio} vs {expected}");
}
