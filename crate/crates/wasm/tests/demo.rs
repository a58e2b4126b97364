use convgeom_wasm::{degree_radius_curve, embedding_scatter, norm_bound_summary};

#[test]
fn scatter_has_one_marker_per_node() {
    let e = embedding_scatter(0.2, 1.0, false, 3).unwrap();
    assert_eq!(e.svg().matches("<circle").count(), 3 * 12 * 7);
    assert!(e.spearman() > 0.0);
    let late = embedding_scatter(1.0, 1.0, false, 3).unwrap();
    assert!(late.spearman() < e.spearman());
}

#[test]
fn invalid_alpha_is_an_error() {
    assert!(embedding_scatter(1.5, 1.0, true, 0).is_err());
}

#[test]
fn curve_is_an_svg() {
    let svg = degree_radius_curve(1.0, 0).unwrap();
    assert!(svg.contains("<svg") && svg.contains("row"));
}

#[test]
fn bound_summary_reports_no_violations() {
    let s = norm_bound_summary(0.5, 1.0, 0).unwrap();
    assert!(s.contains(" 0 violations"), "{s}");
}
