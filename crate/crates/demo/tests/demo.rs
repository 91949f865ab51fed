use hypvmc_demo::{disk_geodesic, energy_per_site, norm_trajectory};

#[test]
fn geodesic_hits_both_ends() {
    let out = disk_geodesic(0.3, -0.2, -0.5, 0.6, 11);
    assert_eq!(out.len(), 2 * 11 + 4);
    assert!((out[0] - 0.3).abs() < 1e-12 && (out[1] + 0.2).abs() < 1e-12);
    assert!((out[20] + 0.5).abs() < 1e-10 && (out[21] - 0.6).abs() < 1e-10);
    // midpoint equals the middle sample of an odd grid
    assert!((out[10] - out[24]).abs() < 1e-12 && (out[11] - out[25]).abs() < 1e-12);
    for p in out.chunks(2) {
        assert!(p[0].hypot(p[1]) < 1.0);
    }
}

#[test]
fn points_outside_the_disk_are_pulled_in() {
    let out = disk_geodesic(3.0, 0.0, 0.0, 0.0, 2);
    assert!(out.iter().all(|x| x.is_finite()));
    assert!(out[0] < 1.0);
}

#[test]
fn energy_curve_passes_majumdar_ghosh() {
    let e = energy_per_site(10, 0.0, 1.0, 0.0, 3).unwrap();
    assert_eq!(e.len(), 3);
    assert!((e[1] + 0.375).abs() < 1e-9, "{}", e[1]);
    assert!(energy_per_site(10, 0.0, 1.0, f64::NAN, 2).is_err());
}

#[test]
fn clamps_bound_the_kept_norm() {
    let t = norm_trajectory("poincare", 0.618, 8, 16, 6.0, 5).unwrap();
    assert_eq!(t.len(), 32);
    assert!(t.chunks(2).any(|p| p[0] > 0.618));
    assert!(t.chunks(2).all(|p| p[1] <= 0.618));

    let t = norm_trajectory("lorentz", 2.0, 8, 16, 6.0, 5).unwrap();
    assert!(t.chunks(2).all(|p| p[1] <= 2.0));
    assert!(norm_trajectory("sphere", 1.0, 4, 4, 1.0, 0).is_err());
}
