use offsetph_bench::instance;

#[test]
fn instances_are_reproducible() {
    let a = instance(50);
    assert_eq!(a.len(), 50);
    assert_eq!(a, instance(50));
    assert!(a.polygons().iter().all(|p| p.len() <= 5));
}
