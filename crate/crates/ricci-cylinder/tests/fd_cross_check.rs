use std::f64::consts::PI;

use ricci_cylinder::cross_section::{Harmonic, Phase};
use ricci_cylinder::deformation_solver::KernelElement;
use ricci_cylinder::expansion::{FieldRank, ModeExpansion};
use ricci_cylinder::fd_oracle::{fd_operator, nonlinear_ricci, quadratic_remainder_scan, sample, FdOp, GridField, GridSpec, StencilConfig};
use ricci_cylinder::profile::RadialProfile;
use ricci_cylinder::three_circles::tube_norm;

fn lengths() -> Vec<f64> {
    vec![2.0 * PI, 2.0 * PI]
}

fn mixed_field() -> ModeExpansion {
    let l = lengths();
    let mut h = ModeExpansion::zero(&l, FieldRank::Sym2);
    let hs = [
        Harmonic { freq: vec![1, 0], phase: Phase::Cos },
        Harmonic { freq: vec![0, 1], phase: Phase::Sin },
        Harmonic { freq: vec![1, -1], phase: Phase::Cos },
        Harmonic { freq: vec![1, 1], phase: Phase::Sin },
        Harmonic::constant(2),
    ];
    for (i, harm) in hs.iter().enumerate() {
        for c in [i % 6, (2 * i + 1) % 6] {
            h.add_to(harm, c, &RadialProfile::term(0.5 + 0.1 * i as f64, (i % 2) as u32, -0.7 - 0.2 * c as f64));
        }
    }
    h
}

fn spec(n_r: usize, n_x: usize) -> GridSpec {
    GridSpec::uniform((0.5, 2.5), n_r, n_x, &lengths()).unwrap()
}

#[test]
fn every_operator_converges_at_stencil_order() {
    let h = mixed_field();
    let x = h.trace().unwrap().gradient().unwrap();
    let cases: Vec<(FdOp, ModeExpansion, ModeExpansion)> = vec![
        (FdOp::Divergence, h.clone(), h.divergence().unwrap()),
        (FdOp::SymGrad, x.clone(), x.sym_grad().unwrap()),
        (FdOp::RoughLaplacian, h.clone(), h.rough_laplacian()),
        (FdOp::TraceHessian, h.clone(), h.trace().unwrap().hessian().unwrap()),
        (FdOp::LinearizedRicci, h.clone(), h.linearized_ricci().unwrap()),
        (FdOp::Hodge, x.clone(), x.hodge_operator().unwrap()),
    ];
    for order in [2u8, 4] {
        let cfg = StencilConfig { order, ..StencilConfig::default() };
        let target = 2f64.powi(i32::from(order));
        for (op, f, want) in &cases {
            let err = |s: &GridSpec| {
                let fd = fd_operator(*op, &sample(f, s).unwrap(), &cfg).unwrap();
                fd.sub(&sample(want, s).unwrap()).unwrap().interior_sup()
            };
            let s = spec(65, 24);
            let (e1, e2) = (err(&s), err(&s.refined()));
            let ratio = e1 / e2;
            assert!((ratio / target - 1.0).abs() < 0.15, "{op:?} order {order}: ratio {ratio} ({e1:e}, {e2:e})");
        }
    }
}

#[test]
fn sampled_l2_matches_tube_norm() {
    let h = mixed_field();
    let s = spec(257, 16);
    let f = sample(&h, &s).unwrap();
    let l2 = f.inner(&f).unwrap();
    let exact = tube_norm(&h, 0.5, 2.5).unwrap();
    // trapezoid in r is second order; the torus rule is exact for these harmonics
    assert!((l2 - exact).abs() < 1e-4 * exact, "{l2} {exact}");
}

#[test]
fn pure_gauge_remainder_is_quadratic() {
    let l = lengths();
    let h = KernelElement::ExactGauge { harmonic: Harmonic { freq: vec![1, 1], phase: Phase::Cos }, sign: -1 }
        .build(&l)
        .unwrap();
    let s = spec(97, 24);
    let f = sample(&h, &s).unwrap();
    let f = f.scale(1.0 / f.interior_sup());
    let scan = quadratic_remainder_scan(&f, &[1e-1, 3e-2, 1e-2], None, &StencilConfig::order4()).unwrap();
    assert!((1.9..=2.1).contains(&scan.slope), "{scan:?}");
}

#[test]
fn conformal_product_stays_flat() {
    let s = spec(16, 8);
    let mut g = GridField::flat_metric(&s).unwrap();
    g.comps[3].iter_mut().for_each(|x| *x = 1.3);
    g.comps[5].iter_mut().for_each(|x| *x = 1.3);
    assert!(nonlinear_ricci(&g, &StencilConfig::order4()).unwrap().sup() < 1e-12);
}
