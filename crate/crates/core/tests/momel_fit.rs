use pasta_core::momel::{fit_momel, MomelAnchor, MomelFitParams, MomelSpline};
use pasta_core::pitch::F0Contour;

fn generator() -> MomelSpline {
    MomelSpline::from_anchors(vec![
        MomelAnchor::new(0.1, 120.0),
        MomelAnchor::new(0.7, 180.0),
        MomelAnchor::new(1.3, 110.0),
    ])
    .unwrap()
}

fn sampled(spline: &MomelSpline, first: usize, last: usize) -> F0Contour {
    let values: Vec<f64> = (first..=last).map(|i| spline.eval(i as f64 * 0.01)).collect();
    F0Contour::from_values(first as f64 * 0.01, 0.01, &values, 50.0, 600.0).unwrap()
}

fn assert_recovers(fitted: &MomelSpline, truth: &MomelSpline) {
    assert_eq!(fitted.anchors().len(), truth.anchors().len(), "{:?}", fitted.anchors());
    for (f, t) in fitted.anchors().iter().zip(truth.anchors()) {
        assert!((f.time - t.time).abs() <= 0.020, "{f:?} vs {t:?}");
        assert!((f.value - t.value).abs() <= 5.0, "{f:?} vs {t:?}");
    }
}

#[test]
fn recovers_generator_over_anchor_span() {
    let g = generator();
    let fitted = fit_momel(&sampled(&g, 10, 130), &MomelFitParams::default()).unwrap();
    assert_recovers(&fitted, &g);
}

#[test]
fn recovers_generator_with_flat_extensions() {
    let g = generator();
    let fitted = fit_momel(&sampled(&g, 0, 140), &MomelFitParams::default()).unwrap();
    assert_recovers(&fitted, &g);
}
