use bergman_dyadic::dyadic::{build_adjacent_family, BoundaryMetric};
use bergman_dyadic::operators::{read_dump, Storage};
use bergman_dyadic::scalar::C;
use bergman_dyadic::tents::build_tents;
use bergman_dyadic::weights::{characteristic, power_pair, Weight, WeightPair};
use bergman_dyadic::{Cloud, Cloud32, Domain, Domain32, Kernel, Kernel32};

#[test]
fn single_precision_pipeline_reproduces_projection_and_bracket() {
    let dom = Domain32::ball(1);
    let cloud = Cloud32::sample(&dom, 1500, 400, 4).unwrap();
    let km = Kernel32::new(&dom, &cloud, Storage::Dense).unwrap();
    let p1 = km.apply(&vec![C::new(1.0f32, 0.0); cloud.n_interior()]);
    let err: f32 = p1.iter().zip(&cloud.interior_weights).map(|(v, w)| (v - 1.0).norm_sqr() * w).sum::<f32>()
        / cloud.interior_volume();
    assert!(err.sqrt() < 0.02, "{}", err.sqrt());

    let metric = BoundaryMetric::new(&dom, &cloud);
    let fam = build_adjacent_family(&metric, 8.0, 0.8, 3, 2, 4).unwrap();
    let tents: Vec<_> = fam.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
    let pair = WeightPair::new(Weight::constant(cloud.n_interior(), 1.0f32), 2.0).unwrap();
    let r = characteristic(&pair, &cloud, &tents).unwrap();
    assert!((r.bracket - 5.0).abs() < 1e-4, "{}", r.bracket);
}

#[test]
fn single_and_double_precision_agree_on_a_power_weight() {
    let (d64, d32) = (Domain::ball(1), Domain32::ball(1));
    let (c64, c32) = (Cloud::sample(&d64, 1000, 300, 8).unwrap(), Cloud32::sample(&d32, 1000, 300, 8).unwrap());
    let m64 = BoundaryMetric::new(&d64, &c64);
    let m32 = BoundaryMetric::new(&d32, &c32);
    let f64s = build_adjacent_family(&m64, 8.0, 0.8, 2, 2, 1).unwrap();
    let f32s = build_adjacent_family(&m32, 8.0, 0.8, 2, 2, 1).unwrap();
    let t64: Vec<_> = f64s.systems.iter().map(|s| build_tents(&d64, s, &m64)).collect();
    let t32: Vec<_> = f32s.systems.iter().map(|s| build_tents(&d32, s, &m32)).collect();
    let a = characteristic(&power_pair(&d64, &c64, 0.5, 2.0).unwrap(), &c64, &t64).unwrap();
    let b = characteristic(&power_pair(&d32, &c32, 0.5f32, 2.0).unwrap(), &c32, &t32).unwrap();
    assert!((a.bp / b.bp - 1.0).abs() < 1e-3, "{} {}", a.bp, b.bp);
}

#[test]
fn same_seed_gives_identical_structures() {
    let dom = Domain::ball(2);
    let a = Cloud::sample(&dom, 500, 400, 21).unwrap();
    let b = Cloud::sample(&dom, 500, 400, 21).unwrap();
    assert_eq!(a.interior_weights, b.interior_weights);
    let (ma, mb) = (BoundaryMetric::new(&dom, &a), BoundaryMetric::new(&dom, &b));
    let fa = build_adjacent_family(&ma, 8.0, 0.8, 3, 3, 5).unwrap();
    let fb = build_adjacent_family(&mb, 8.0, 0.8, 3, 3, 5).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn kernel_dump_matches_entries() {
    let dom = Domain::ball(1);
    let cloud = Cloud::sample(&dom, 60, 40, 2).unwrap();
    let km = Kernel::new(&dom, &cloud, Storage::OnTheFly).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.bin");
    km.dump(&path).unwrap();
    let (rows, cols, data) = read_dump(&path).unwrap();
    assert_eq!((rows, cols), (60, 60));
    assert_eq!(data[7 * 60 + 13], km.entry(7, 13));
}
