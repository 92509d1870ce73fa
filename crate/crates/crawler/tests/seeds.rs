use fedipol_crawler::load_seed_instances;

#[test]
fn seed_file_examples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seeds.txt");
    std::fs::write(&path, "mastodon.social\npawoo.net\n").unwrap();
    let s = load_seed_instances(&path).unwrap();
    assert_eq!(s.instances.iter().map(|d| d.as_str()).collect::<Vec<_>>(), ["mastodon.social", "pawoo.net"]);

    std::fs::write(&path, "").unwrap();
    assert!(load_seed_instances(&path).unwrap().instances.is_empty());

    std::fs::write(&path, "A.example\na.example\n# comment\nbad host\n").unwrap();
    let s = load_seed_instances(&path).unwrap();
    assert_eq!(s.instances.len(), 1);
    assert_eq!(s.instances[0].as_str(), "a.example");
    assert_eq!(s.skipped.len(), 1);

    assert!(load_seed_instances(dir.path().join("missing.txt")).is_err());
}
