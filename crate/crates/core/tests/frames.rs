use mtorus::frame::{to_real, DEFAULT_FD_STEP};
use mtorus::{
    bracket_coefficients, build_frame, decompose, enumerate_finite_order, verify_frame,
    verify_frame_with, Concatenated, Derivative, FrameCoefficients, IntMatrix, PerturbedFrame,
    SearchConfig, TorusAutomorphism,
};

fn m(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_i64_rows(rows).unwrap()
}

#[test]
fn every_small_finite_order_element_gets_a_verified_frame() {
    for dim in 1..=2 {
        let cfg = SearchConfig {
            dim,
            entry_bound: 2,
            ..SearchConfig::default()
        };
        for e in enumerate_finite_order(&cfg).unwrap() {
            let frame = build_frame(&e.matrix).unwrap();
            let report = verify_frame(&frame, 1024, 1e-8).unwrap();
            assert!(report.pass, "{}: {report:?}", e.matrix);
            assert!(report.seam.max() <= 1e-10, "{}: {report:?}", e.matrix);
        }
    }
}

#[test]
fn product_monodromies_get_verified_frames() {
    let a = TorusAutomorphism::new(m(&[&[-1, 0], &[0, -1]])).unwrap();
    let b = TorusAutomorphism::new(m(&[&[0, 1], &[-1, -1]])).unwrap();
    let kb = TorusAutomorphism::new(m(&[&[-1]])).unwrap();
    let refl = TorusAutomorphism::new(m(&[&[0, 1], &[1, 0]])).unwrap();
    for (x, y) in [(&a, &b), (&kb, &b), (&refl, &b), (&b, &kb)] {
        let h = decompose(x, y).unwrap().h;
        let report = verify_frame(&build_frame(h.matrix()).unwrap(), 2048, 1e-8).unwrap();
        assert!(report.pass, "{}: {report:?}", h.matrix());
    }
}

#[test]
fn hyperbolic_monodromy_frame() {
    // infinite order still has the glued coordinate frame
    let a = m(&[&[2, 1], &[1, 1]]);
    let report = verify_frame(&build_frame(&a).unwrap(), 4096, 1e-8).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gram_floor_on_the_two_phase_examples() {
    for a in [m(&[&[-1]]), m(&[&[0, 1], &[1, 0]])] {
        let f = build_frame(&a).unwrap();
        assert!(f.is_two_phase());
        let mut min_gram = f64::INFINITY;
        let mut sign_changes = 0;
        let mut prev_sign = 1.0f64;
        for i in 0..=4096 {
            let t = i as f64 / 4096.0;
            let fm = f.field_matrix(t);
            min_gram = min_gram.min((&fm * fm.transpose()).determinant().sqrt());
            let det = f.phi(t).determinant();
            if det != 0.0 && det.signum() != prev_sign {
                sign_changes += 1;
                prev_sign = det.signum();
                // the d/dt component takes over exactly where phi degenerates
                assert!(f.tau(t)[0] > 0.0);
            }
        }
        assert!(min_gram > 1e-6, "{a}: {min_gram}");
        assert_eq!(sign_changes, 1);
        assert!((f.phi(0.5).determinant() + 1.0).abs() < 1e-15);
    }
}

#[test]
fn central_difference_brackets_converge_quadratically() {
    let base = build_frame(&m(&[&[0, 1], &[1, 0]])).unwrap();
    let frame = PerturbedFrame::new(&base, 0.5).unwrap();
    let ts: Vec<f64> = (0..100).map(|i| 0.13 + 0.24 * i as f64 / 99.0).collect();
    let err = |h: f64| -> f64 {
        ts.iter()
            .map(|&t| {
                let exact = bracket_coefficients(&frame, 0, 1, t, Derivative::Analytic);
                let approx = bracket_coefficients(&frame, 0, 1, t, Derivative::Central { h });
                (exact - approx).norm_squared()
            })
            .sum::<f64>()
            .sqrt()
    };
    let ratio = err(1e-4) / err(5e-5);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn finite_difference_verification_agrees_for_built_frames() {
    for a in [
        m(&[&[0, 1], &[-1, -1]]),
        m(&[&[0, 1], &[1, 0]]),
        m(&[&[-1]]),
    ] {
        let f = build_frame(&a).unwrap();
        let r =
            verify_frame_with(&f, 1024, 1e-8, Derivative::Central { h: DEFAULT_FD_STEP }).unwrap();
        assert!(r.pass, "{a}: {r:?}");
    }
}

#[test]
fn concatenated_frames_end_at_powers() {
    for a in [
        m(&[&[0, 1], &[-1, -1]]),
        m(&[&[0, 1], &[1, 0]]),
        m(&[&[2, 1], &[1, 1]]),
    ] {
        let f = build_frame(&a).unwrap();
        for q in 1..=6usize {
            let c = Concatenated::new(&f, q).unwrap();
            let target = to_real(&a.power(q as i64).unwrap());
            let scale = target.norm().max(1.0);
            assert!(
                (c.phi(1.0) - &target).norm() <= q as f64 * 1e-10 * scale,
                "{a} q={q}"
            );
            let r = verify_frame(&c, 1024, 1e-8).unwrap();
            assert!(
                r.checks.commuting && r.checks.independent,
                "{a} q={q}: {r:?}"
            );
        }
    }
}

#[test]
fn perturbation_breaks_only_commutation() {
    let f = build_frame(&m(&[&[0, 1], &[-1, -1]])).unwrap();
    let bad = PerturbedFrame::new(&f, 0.25).unwrap();
    let r = verify_frame(&bad, 4096, 1e-8).unwrap();
    assert!(!r.pass);
    assert!(!r.checks.commuting);
    assert!(r.checks.seam && r.checks.flat);
}
