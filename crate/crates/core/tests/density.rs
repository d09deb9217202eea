use bubblelab::shapes::{seed_mesh, sphere_oracle, BubbleSpec, Placement, Topology};
use bubblelab::{ClusterMesh, Density, Vec3};
use proptest::prelude::*;

/// A jittered seed cluster pushed well away from the origin.
fn random_cluster(topology: Topology, volumes: Vec<f64>, direction: Vec3, jitter_seed: u64) -> ClusterMesh {
    let mut spec = BubbleSpec::new(topology, volumes, 2.0).with_level(1);
    spec.seed_jitter = 0.01;
    spec.jitter_seed = jitter_seed;
    let mesh = seed_mesh(&spec).unwrap();
    let shift = direction.normalize() * 1.5 * mesh.diameter();
    let mut mesh = mesh;
    mesh.transform(|x| x + shift);
    mesh
}

fn topology_strategy() -> impl Strategy<Value = (Topology, Vec<f64>)> {
    prop_oneof![
        (1.0..20.0f64).prop_map(|v| (Topology::Single, vec![v])),
        (1.0..20.0f64, 1.0..20.0f64).prop_map(|(a, b)| (Topology::Double, vec![a, b])),
        (2.0..10.0f64, 2.0..10.0f64, 2.0..10.0f64).prop_map(|(a, b, c)| (Topology::Triple, vec![a, b, c])),
    ]
}

fn direction_strategy() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 0.05)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn unit_sphere_mesh(level: u32, center: Vec3, radius: f64) -> ClusterMesh {
    let spec = BubbleSpec::new(Topology::Single, vec![1.0], 0.0).with_level(level);
    let mut mesh = seed_mesh(&spec).unwrap();
    let c = mesh.centroid();
    mesh.transform(|x| center + (x - c).normalize() * radius);
    mesh
}

#[test]
fn sphere_measures_converge_quadratically_to_the_oracle() {
    // Inscribed polyhedra lose area like h², so one Richardson step on the
    // last two levels should land far closer than either level alone.
    for (p, center) in [(0.0, Vec3::zeros()), (2.0, Vec3::zeros()), (3.5, Vec3::zeros()), (2.0, Vec3::new(0.7, -0.2, 0.4))] {
        let density = Density::new(p).unwrap();
        let (area, volume) = sphere_oracle(1.3, center, p);
        if center == Vec3::zeros() {
            assert!(rel(area, 4.0 * std::f64::consts::PI * 1.3f64.powf(p + 2.0)) < 1e-9);
        }
        let measures: Vec<(f64, f64)> = (2..5)
            .map(|level| {
                let mesh = unit_sphere_mesh(level, center, 1.3);
                (density.weighted_area(&mesh), density.region_volumes(&mesh)[0])
            })
            .collect();
        for (pick, exact) in [(0, area), (1, volume)] {
            let get = |k: usize| if pick == 0 { measures[k].0 } else { measures[k].1 };
            let errors: Vec<f64> = (0..3).map(|k| rel(get(k), exact)).collect();
            for w in errors.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..4.5).contains(&ratio), "p = {p}: {errors:?}");
            }
            let extrapolated = (4.0 * get(2) - get(1)) / 3.0;
            assert!(rel(extrapolated, exact) < 1e-4, "p = {p}: {extrapolated} vs {exact}");
        }
    }
}

#[test]
fn regularization_lifts_the_origin() {
    let d = Density::regularized(2.0, 0.5).unwrap();
    assert!((d.value(&Vec3::zeros()) - 0.25).abs() < 1e-15);
    assert!(d.log_gradient(&Vec3::zeros()).unwrap().norm() < 1e-15);
    assert!(Density::new(2.0).unwrap().log_gradient(&Vec3::zeros()).is_err());
    assert!(Density::new(-1.0).is_err());
}

fn max_gradient_error(mesh: &ClusterMesh, density: &Density) -> f64 {
    let g_area = density.area_gradient(mesh).unwrap();
    let g_vol = density.volume_gradients(mesh).unwrap();
    let scale = mesh.mean_edge_length();
    let h = 1e-5 * scale;
    let n = mesh.vertex_count();
    let mut worst = 0.0f64;
    let area_norm = g_area.iter().map(|g| g.amax()).fold(0.0, f64::max);
    let vol_norm: Vec<f64> = g_vol.iter().map(|g| g.iter().map(|v| v.amax()).fold(0.0, f64::max)).collect();
    for v in (0..n).step_by((n / 12).max(1)) {
        for k in 0..3 {
            let mut plus = mesh.positions().to_vec();
            let mut minus = plus.clone();
            plus[v][k] += h;
            minus[v][k] -= h;
            let fd = (density.weighted_area_at(mesh, &plus) - density.weighted_area_at(mesh, &minus)) / (2.0 * h);
            worst = worst.max((fd - g_area[v][k]).abs() / area_norm);
            let vp = density.region_volumes_at(mesh, &plus);
            let vm = density.region_volumes_at(mesh, &minus);
            for r in 0..vp.len() {
                let fd = (vp[r] - vm[r]) / (2.0 * h);
                worst = worst.max((fd - g_vol[r][v][k]).abs() / vol_norm[r]);
            }
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let mut seed = 0;
    for p in [0.0, 0.5, 2.0, 3.0, 5.0] {
        for topology in [Topology::Single, Topology::Double, Topology::Triple, Topology::Chain3] {
            seed += 1;
            let volumes = match topology {
                Topology::Single => vec![3.0],
                Topology::Double => vec![3.0, 1.5],
                _ => vec![4.0, 3.0, 2.0],
            };
            let mesh = random_cluster(topology, volumes, Vec3::new(1.0, seed as f64 * 0.3, -0.5), seed);
            let density = Density::new(p).unwrap();
            let err = max_gradient_error(&mesh, &density);
            assert!(err < 1e-5, "p = {p}, {topology}: {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weighted_measures_scale_homogeneously(
        (topology, volumes) in topology_strategy(),
        dir in direction_strategy(),
        jitter_seed in 0u64..1000,
        lambda in 0.1..10.0f64,
        p in 0.0..5.0f64,
    ) {
        let mesh = random_cluster(topology, volumes, dir, jitter_seed);
        let density = Density::new(p).unwrap();
        let check = bubblelab::analyze::scaling_check(&mesh, &density, lambda);
        prop_assert!(check.max_relative_error(p) < 1e-12, "{check:?}");
    }

    #[test]
    fn rotations_about_the_origin_preserve_measures(
        (topology, volumes) in topology_strategy(),
        dir in direction_strategy(),
        axis in direction_strategy(),
        angle in -3.0..3.0f64,
        p in 0.0..5.0f64,
    ) {
        let mesh = random_cluster(topology, volumes, dir, 7);
        let density = Density::new(p).unwrap();
        let rotation = Placement { translation: [0.0; 3], rotation: (axis.normalize() * angle).into() };
        let mut turned = mesh.clone();
        turned.transform(|x| rotation.apply(x));
        prop_assert!(rel(density.weighted_area(&turned), density.weighted_area(&mesh)) < 1e-12);
        for (a, b) in density.region_volumes(&turned).iter().zip(density.region_volumes(&mesh)) {
            prop_assert!(rel(*a, b) < 1e-12);
        }
    }

    #[test]
    fn euclidean_measures_are_translation_invariant(
        dir in direction_strategy(),
        shift in direction_strategy(),
    ) {
        let mesh = random_cluster(Topology::Double, vec![2.0, 1.0], dir, 3);
        let mut moved = mesh.clone();
        moved.transform(|x| x + shift);
        let flat = Density::euclidean();
        prop_assert!(rel(flat.weighted_area(&moved), flat.weighted_area(&mesh)) < 1e-12);
        for (a, b) in flat.region_volumes(&moved).iter().zip(flat.region_volumes(&mesh)) {
            prop_assert!(rel(*a, b) < 1e-11);
        }
    }
}
