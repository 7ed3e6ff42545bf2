use canontrace::complex_powers::PowerFamily;
use canontrace::field::{Domain, FourierField, PeriodicGrid};
use canontrace::laurent_engine::{laurent_tr, LaurentOptions, TraceOperand};
use canontrace::spectral_models::{
    build_operator, default_window, geometric_grid, heat_trace, zeta, BuildOptions, Family, MellinOptions, ModelGeometry,
    Realization,
};
use canontrace::symbol_core::{
    ball_integral_asymptotics, cutoff_integral, symbol_product, wodzicki_residue, BracketTerm, ClassicalSymbol,
    CutoffProfile, FullSymbol, HomTerm, MultiIndex,
};
use canontrace::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn conformal_laplacian(phi: &FourierField, n: usize) -> ClassicalSymbol {
    let grid = Arc::new(PeriodicGrid::new(phi.domain.clone(), n));
    let c = phi.scale(-2.0).to_coefficient(&grid).map(|v| v.exp());
    ClassicalSymbol::homogeneous(phi.domain.clone(), HomTerm::new(c, MultiIndex::zero(phi.domain.dim()), 2.0)).unwrap()
}

fn noninteger(x: f64) -> f64 {
    if (x - x.round()).abs() < 0.1 {
        x + 0.25
    } else {
        x
    }
}

/// Constant-coefficient symbol with `(c, m, j)` entries placed in component `j`.
fn constant_symbol(dim: usize, terms: &[(f64, u32, usize)], order: f64) -> ClassicalSymbol {
    let domain = if dim == 1 { Domain::circle(1.0) } else { Domain::torus(1.0, 1.0) };
    let mut comps = vec![Vec::new(), Vec::new()];
    for &(c, m, j) in terms {
        let mono = if dim == 1 { MultiIndex::new(&[m]).unwrap() } else { MultiIndex::new(&[m, 1 - m]).unwrap() };
        let s = order - j as f64 - mono.degree() as f64;
        comps[j].push(HomTerm::constant(c, mono, s));
    }
    ClassicalSymbol::new(order, domain, comps, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn power_symbols_are_homogeneous(seed in 0u64..1000, z in -1.5f64..1.5, t in prop::sample::select(vec![2.0, 3.0, 5.0]),
                                     a in 0.0f64..2.0 * PI, idx in 0usize..256) {
        let phi = FourierField::random(Domain::torus(1.0, 1.0), seed, 2, 0.2, 0.0);
        let q = conformal_laplacian(&phi, 16);
        let sym = PowerFamily::new(&q, 3).unwrap().at(z).unwrap();
        let xi = [a.cos() * 0.7, a.sin() * 0.7];
        let txi = [t * xi[0], t * xi[1]];
        for j in 0..=3 {
            let v = sym.eval_component(j, idx, &xi).unwrap();
            let w = sym.eval_component(j, idx, &txi).unwrap();
            let expect = v * t.powf(sym.order - j as f64);
            prop_assert!((w - expect).norm() <= 1e-12 * (1.0 + expect.norm()), "j = {j}: {w} vs {expect}");
        }
    }

    #[test]
    fn power_order_is_linear_in_z(seed in 0u64..1000, z in -2.0f64..2.0) {
        let phi = FourierField::random(Domain::circle(2.0 * PI), seed, 3, 0.2, 0.0);
        let fam = PowerFamily::new(&conformal_laplacian(&phi, 16), 2).unwrap();
        prop_assert_eq!(fam.at(z).unwrap().order, -2.0 * z);
    }

    #[test]
    fn cutoff_matches_ball_fit(dim in 1usize..=2, base in -2.6f64..0.4, c0 in 0.5f64..2.0, c1 in -1.0f64..1.0,
                               m0 in 0u32..=1, m1 in 0u32..=1) {
        let base = noninteger(base);
        let mono = |m: u32| if dim == 1 { MultiIndex::new(&[m]).unwrap() } else { MultiIndex::new(&[m, 0]).unwrap() };
        let terms = vec![
            BracketTerm { coeff: Complex64::from(c0), monomial: mono(m0), s: base - m0 as f64 },
            BracketTerm { coeff: Complex64::from(c1), monomial: mono(m1), s: base - 1.0 - m1 as f64 },
        ];
        let sigma = FullSymbol::bracket(dim, terms).unwrap();
        let psi = CutoffProfile::default();
        let r = cutoff_integral(&sigma, &psi).unwrap();
        prop_assert_eq!(r.b.norm(), 0.0);
        let doubled = cutoff_integral(&sigma, &psi.scaled(2.0)).unwrap();
        prop_assert!((doubled.c - r.c).norm() <= 1e-8);
        let radii: Vec<f64> = (0..24).map(|i| 4.0 * 25f64.powf(i as f64 / 23.0)).collect();
        let fit = ball_integral_asymptotics(&sigma, &radii, -10.0).unwrap();
        prop_assert!((fit.c - r.c.re).abs() <= 1e-5, "fit {} vs {}", fit.c, r.c.re);
    }

    #[test]
    fn residue_is_cyclic_on_constant_coefficients(dim in 1usize..=2,
                                                  a in prop::collection::vec((0.1f64..2.0, 0u32..=1, 0usize..=1), 1..3),
                                                  b in prop::collection::vec((0.1f64..2.0, 0u32..=1, 0usize..=1), 1..3),
                                                  oa in -3.0f64..1.0) {
        let ob = -(dim as f64) - oa;
        let sa = constant_symbol(dim, &a, oa);
        let sb = constant_symbol(dim, &b, ob);
        let ab = wodzicki_residue(&symbol_product(&sa, &sb, 1).unwrap()).unwrap();
        let ba = wodzicki_residue(&symbol_product(&sb, &sa, 1).unwrap()).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-10);
    }

    #[test]
    fn differential_symbols_have_no_residue(seed in 0u64..1000, order in 0u32..4, mono in 0u32..3) {
        let t2 = Domain::torus(1.0, 1.0);
        let grid = Arc::new(PeriodicGrid::new(t2.clone(), 8));
        let comps = (0..=order)
            .map(|j| {
                let d = order - j;
                let m = MultiIndex::new(&[d.min(mono), d - d.min(mono)]).unwrap();
                let v = FourierField::random(t2.clone(), seed + j as u64, 2, 1.0, 0.3).to_coefficient(&grid);
                vec![HomTerm::new(v, m, 0.0)]
            })
            .collect();
        let sym = ClassicalSymbol::new(order as f64, t2, comps, true).unwrap();
        prop_assert_eq!(wodzicki_residue(&sym).unwrap(), 0.0);
    }

    #[test]
    fn mellin_zeta_matches_direct_sum(length in 1.0f64..10.0, z in 2.5f64..4.0) {
        let g = ModelGeometry::flat(Domain::circle(length), 32).unwrap();
        let op = build_operator(&Family::Laplacian, &g, BuildOptions { force_dense: false, vectors: false }).unwrap();
        let got = zeta(&op, Complex64::from(z), None, &MellinOptions::default()).unwrap();
        // Σ_k 2 (2πk/L)^{−2z} with an Euler–Maclaurin tail past K
        let s = 2.0 * z;
        let k_max = 2000.0f64;
        let head: f64 = (1..=k_max as usize).map(|k| (k as f64).powf(-s)).sum();
        let tail = k_max.powf(1.0 - s) / (s - 1.0) - 0.5 * k_max.powf(-s) + s / 12.0 * k_max.powf(-s - 1.0);
        let direct = 2.0 * (length / (2.0 * PI)).powf(s) * (head + tail);
        prop_assert!((got.re - direct).abs() <= 1e-10 * direct.max(1.0), "{} vs {direct}", got.re);
        prop_assert!(got.im.abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spectrum_scales_with_constant_factor(c in -0.5f64..0.5, seed in 0u64..1000) {
        let opts = BuildOptions { force_dense: false, vectors: false };
        let flat = ModelGeometry::flat(Domain::torus(1.0, 1.0), 16).unwrap();
        let shifted = ModelGeometry::new(FourierField::constant(Domain::torus(1.0, 1.0), c), 16).unwrap();
        let (a, b) = match (
            build_operator(&Family::Laplacian, &flat, opts).unwrap().realization,
            build_operator(&Family::Laplacian, &shifted, opts).unwrap().realization,
        ) {
            (Realization::Exact(a), Realization::Exact(b)) => (a.eigenvalues(50), b.eigenvalues(50)),
            _ => unreachable!("flat geometries have exact spectra"),
        };
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - (-2.0 * c).exp() * x).abs() <= 1e-14 * x);
        }

        let phi = FourierField::random(Domain::circle(2.0 * PI), seed, 2, 0.2, 0.0);
        let dense = |p: FourierField| match build_operator(&Family::Laplacian, &ModelGeometry::new(p, 32).unwrap(), opts).unwrap().realization {
            Realization::Dense(d) => d.eigenvalues,
            _ => unreachable!("curved geometries are dense"),
        };
        let base = dense(phi.clone());
        let moved = dense(phi.add(&FourierField::constant(Domain::circle(2.0 * PI), c)));
        let top = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((y - (-2.0 * c).exp() * x).abs() <= 1e-9 * top);
        }
    }

    #[test]
    fn heat_trace_decreases_on_the_window(seed in 0u64..1000) {
        let phi = FourierField::random(Domain::circle(2.0 * PI), seed, 2, 0.2, 0.0);
        let op = build_operator(&Family::Laplacian, &ModelGeometry::new(phi, 64).unwrap(), BuildOptions { force_dense: false, vectors: false }).unwrap();
        let (lo, hi) = default_window(&op).unwrap();
        let values: Vec<f64> = geometric_grid(lo, hi, 24).into_iter().map(|t| heat_trace(&op, t, None, false).unwrap()).collect();
        prop_assert!(values.iter().all(|v| *v > 0.0));
        prop_assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    // the pole of TR(Δ^s Δ^{-z}) sits at z = s + 1/2, so s stays away from it unless it is the expansion point
    fn laurent_coefficients_ignore_the_contour_radius(s in prop_oneof![Just(-0.5), -0.95f64..-0.8, -0.2f64..-0.05]) {
        let g = ModelGeometry::flat(Domain::circle(2.0 * PI), 32).unwrap();
        let op = build_operator(&Family::Laplacian, &g, BuildOptions { force_dense: false, vectors: false }).unwrap();
        let wide = laurent_tr(&TraceOperand::Power { s }, &op, &LaurentOptions::default()).unwrap();
        let narrow = laurent_tr(&TraceOperand::Power { s }, &op, &LaurentOptions { radius: 0.05, ..Default::default() }).unwrap();
        prop_assert!(wide.pole_order <= 1);
        for k in -1..=2 {
            let (a, b) = (wide.coeff(k).unwrap_or(0.0), narrow.coeff(k).unwrap_or(0.0));
            prop_assert!((a - b).abs() <= 1e-6, "k = {k}: {a} vs {b}");
        }
    }
}
