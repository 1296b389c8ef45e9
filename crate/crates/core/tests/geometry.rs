use proptest::prelude::*;
use viewspan::geometry::*;

fn intrinsics_strategy() -> impl Strategy<Value = (CameraIntrinsics, usize, usize)> {
    (8usize..40, 8usize..40, 20.0f64..500.0, 20.0f64..500.0, 0.05f64..0.95, 0.05f64..0.95).prop_map(
        |(h, w, fx, fy, ax, ay)| (CameraIntrinsics::new(fx, fy, ax * w as f64, ay * h as f64).unwrap(), h, w),
    )
}

proptest! {
    #[test]
    fn backprojection_round_trips_to_the_pixel_grid(
        (k, h, w) in intrinsics_strategy(),
        depths in prop::collection::vec(0.01f64..1000.0, 1600),
    ) {
        let depth = &depths[..h * w];
        let points = backproject(h, w, &k, depth).unwrap();
        let proj = project_points(&points, &k);
        for (idx, (uv, ok)) in proj.coords.iter().zip(&proj.valid).enumerate() {
            prop_assert!(*ok);
            prop_assert!((uv[0] - (idx % w) as f64).abs() < 1e-9);
            prop_assert!((uv[1] - (idx / w) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_is_scale_invariant(
        (k, h, w) in intrinsics_strategy(),
        depths in prop::collection::vec(0.1f64..10.0, 1600),
        lambda in 1e-3f64..1e3,
    ) {
        let points = backproject(h, w, &k, &depths[..h * w]).unwrap();
        let a = project_points(&points, &k);
        let b = project_points(&points.scaled(lambda), &k);
        prop_assert_eq!(&a.valid, &b.valid);
        for (p, q) in a.coords.iter().zip(&b.coords) {
            prop_assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn focal_estimate_is_exact_on_clean_backprojections(
        f in 50.0f64..500.0,
        depths in prop::collection::vec(1.0f64..5.0, 32 * 48),
    ) {
        let k = CameraIntrinsics::centered(f, 32, 48).unwrap();
        let points = backproject(32, 48, &k, &depths).unwrap();
        let est = estimate_focal(&points).unwrap();
        prop_assert!((est.fx - f).abs() / f < 1e-6);
        prop_assert_eq!(est.fx, est.fy);
        prop_assert_eq!((est.cx, est.cy), (24.0, 16.0));
    }
}

#[test]
fn focal_oracle_cases() {
    let k = CameraIntrinsics::centered(100.0, 32, 32).unwrap();
    let flat = backproject(32, 32, &k, &[1.0; 1024]).unwrap();
    assert!((estimate_focal(&flat).unwrap().fx - 100.0).abs() < 1e-6);

    let k = CameraIntrinsics::centered(250.0, 32, 32).unwrap();
    let depths: Vec<f64> = (0..1024).map(|i| 1.0 + 4.0 * ((i * 37) % 101) as f64 / 100.0).collect();
    let mixed = backproject(32, 32, &k, &depths).unwrap();
    assert!((estimate_focal(&mixed).unwrap().fx - 250.0).abs() < 1e-6);
}

#[test]
fn identity_warp_gives_zero_residual_end_to_end() {
    let k = CameraIntrinsics::centered(80.0, 16, 24).unwrap();
    let data: Vec<f64> = (0..16 * 24 * 3).map(|i| ((i * 13) % 255) as f64 / 255.0).collect();
    let frame = ImageFrame::new(16, 24, data).unwrap();
    let points = backproject(16, 24, &k, &[3.0; 16 * 24]).unwrap();
    let residual = reprojection_residual(&frame, &frame, &points, &k).unwrap();
    assert!(residual.validity.iter().all(|v| *v));
    assert!(residual.values.iter().all(|v| *v == 0.0));
    let stats = residual_statistics(&residual, &ConfidenceMap::uniform(16, 24, 1.0).unwrap()).unwrap();
    assert_eq!((stats.mean, stats.weighted_mean, stats.valid_fraction, stats.high_freq_energy), (0.0, 0.0, 1.0, 0.0));
}
