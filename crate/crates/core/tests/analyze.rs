use bubblelab::analyze::{
    fit_sphere, generalized_curvature, junction_angles, origin_contact, parse_metrics_csv, vertex_separations,
};
use bubblelab::evolve::evolve;
use bubblelab::shapes::{seed_mesh, BubbleSpec, Placement, Topology};
use bubblelab::{ClusterMesh, Density, EvolveConfig, MetricsReport, Vec3};
use proptest::prelude::*;

fn round_sphere(level: u32, center: Vec3, radius: f64) -> ClusterMesh {
    let mut mesh = seed_mesh(&BubbleSpec::new(Topology::Single, vec![1.0], 0.0).with_level(level)).unwrap();
    let c = mesh.centroid();
    mesh.transform(|x| center + (x - c).normalize() * radius);
    mesh
}

#[test]
fn centred_sphere_has_constant_generalized_curvature() {
    // H = 2/R and ∇ψ·N = −p/R with N pointing inward, so H_ψ = (2 + p)/R.
    for p in [0.0, 2.0, 3.0] {
        let mesh = round_sphere(3, Vec3::zeros(), 1.5);
        let c = generalized_curvature(&mesh, &Density::new(p).unwrap()).unwrap();
        assert_eq!(c.len(), 1);
        let expected = (2.0 + p) / 1.5;
        assert!((c[0].mean - expected).abs() < 0.01 * expected, "p = {p}: {:?}", c[0]);
        assert!(c[0].relative_spread() < 0.01);
    }
}

#[test]
fn sphere_through_origin_is_weighted_stationary_but_offset_one_is_not() {
    let density = Density::new(2.0).unwrap();
    let through = round_sphere(4, Vec3::new(1.0, 0.2, -0.1).normalize(), 1.0);
    let c = generalized_curvature(&through, &density).unwrap()[0];
    assert!(c.relative_spread() < 0.05, "{c:?}");
    let offset = round_sphere(4, Vec3::new(1.6, 0.3, 0.0), 1.0);
    let c = generalized_curvature(&offset, &density).unwrap()[0];
    assert!(c.relative_spread() > 0.2, "{c:?}");
}

#[test]
fn exact_double_bubble_reads_120_degrees() {
    let mut last = f64::INFINITY;
    for level in [2, 3, 4] {
        let mesh = seed_mesh(&BubbleSpec::new(Topology::Double, vec![8.0, 4.0], 2.0).with_level(level)).unwrap();
        let stats = junction_angles(&mesh);
        assert_eq!(stats.count, 3 * mesh.singular_edges().len());
        assert!(stats.mean_deviation < last);
        last = stats.mean_deviation;
    }
    assert!(last < 0.5, "{last}");
}

#[test]
fn canonical_placements_touch_the_origin() {
    let double = seed_mesh(&BubbleSpec::new(Topology::Double, vec![8.0, 8.0], 2.0)).unwrap();
    let contact = origin_contact(&double);
    // The origin is on the exact circle; the polygon misses it by about a
    // sagitta plus the volume projection.
    assert!(contact.singular_curve.unwrap() < 0.01 * double.diameter(), "{contact:?}");
    assert!(contact.singular_vertex.is_none());

    let triple = seed_mesh(&BubbleSpec::new(Topology::Triple, vec![3.0, 3.0, 3.0], 2.0)).unwrap();
    let contact = origin_contact(&triple);
    assert!(contact.singular_vertex.unwrap() < 0.01 * triple.diameter(), "{contact:?}");
    assert_eq!(vertex_separations(&triple).len(), 1);

    let shifted = seed_mesh(
        &BubbleSpec::new(Topology::Triple, vec![3.0, 3.0, 3.0], 2.0)
            .with_placement(Placement::translation(Vec3::new(0.0, 0.0, 0.5))),
    )
    .unwrap();
    let contact = origin_contact(&shifted);
    assert!(contact.singular_vertex.unwrap() > 0.4);
    assert!(contact.surface <= contact.singular_curve.unwrap());
}

#[test]
fn sphere_fit_recovers_centre_and_radius() {
    let mesh = round_sphere(2, Vec3::new(0.3, -2.0, 1.0), 2.5);
    let fit = fit_sphere(mesh.positions());
    assert!((fit.center - Vec3::new(0.3, -2.0, 1.0)).norm() < 1e-12);
    assert!((fit.radius - 2.5).abs() < 1e-12);
    assert!(fit.sphericity_error < 1e-12);
}

#[test]
fn metrics_round_trip_through_csv() {
    let spec = BubbleSpec::new(Topology::Triple, vec![3.0, 2.0, 1.0], 2.0).with_placement(Placement::translation(Vec3::new(0.1, 0.0, 0.0)));
    let mesh = seed_mesh(&spec).unwrap();
    let mut report = MetricsReport::compute(&mesh, &spec.density().unwrap()).unwrap();
    report.run.push(("stop_reason".into(), "converged".into()));
    let parsed = parse_metrics_csv(&report.to_csv()).unwrap();
    assert_eq!(parsed.len(), report.rows().len());
    let area: f64 = parsed["weighted_area"].parse().unwrap();
    assert_eq!(area, report.weighted_area);
    assert_eq!(parsed["regions"], "3");
    assert_eq!(parsed["stop_reason"], "converged");
    assert!(parsed.contains_key("curvature_1_2_std"));
    assert!(parse_metrics_csv("nope\n").is_err());
}

#[test]
fn worst_junction_angle_improves_with_refinement() {
    let worst = |level| {
        let mesh = seed_mesh(&BubbleSpec::new(Topology::Double, vec![8.0, 4.0], 2.0).with_level(level)).unwrap();
        junction_angles(&mesh).max_deviation
    };
    let (l3, l4) = (worst(3), worst(4));
    assert!(l4 < l3, "{l3} -> {l4}");
}

#[test]
fn evolved_single_bubble_curvature_evens_out_with_refinement() {
    let density = Density::new(2.0).unwrap();
    let config = EvolveConfig { max_iterations: 1500, refine_schedule: vec![], ..EvolveConfig::default() };
    let spread: Vec<f64> = [2, 3]
        .into_iter()
        .map(|level| {
            let spec = BubbleSpec::new(Topology::Single, vec![21.0], 2.0).with_level(level);
            let out = evolve(&spec, &config).unwrap();
            generalized_curvature(&out.mesh, &density).unwrap()[0].relative_spread()
        })
        .collect();
    assert!(spread[1] < spread[0], "{spread:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn origin_distances_ignore_rotations_about_the_origin(
        ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
        shift in 0.0..0.5f64,
    ) {
        let mut mesh = seed_mesh(&BubbleSpec::new(Topology::Triple, vec![3.0, 2.0, 1.0], 2.0).with_level(1)).unwrap();
        mesh.transform(|x| x + Vec3::new(shift, -0.2, 0.1));
        let rotation = Placement { translation: [0.0; 3], rotation: [ax, ay, az] };
        let mut turned = mesh.clone();
        turned.transform(|x| rotation.apply(x));
        let (a, b) = (origin_contact(&mesh), origin_contact(&turned));
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs() + 1e-15;
        prop_assert!(close(a.surface, b.surface), "{a:?} {b:?}");
        prop_assert!(close(a.singular_curve.unwrap(), b.singular_curve.unwrap()));
        prop_assert!(close(a.singular_vertex.unwrap(), b.singular_vertex.unwrap()));
    }
}
