use sandpile_core::chain::{run, seeded_rng, split_rng, write_trajectory, RNG_NAME};
use sandpile_core::GridConfig;

#[test]
fn drops_are_uniform() {
    const SIDE: usize = 10;
    const STEPS: u64 = 100_000;
    let out = run(&GridConfig::zeros(SIDE), STEPS, &mut seeded_rng(2024), None).unwrap();
    let mut hits = vec![0u64; SIDE * SIDE];
    for s in &out.steps {
        hits[(s.drop.row - 1) * SIDE + s.drop.col - 1] += 1;
    }
    let p = 1.0 / (SIDE * SIDE) as f64;
    let mean = STEPS as f64 * p;
    let sd = (STEPS as f64 * p * (1.0 - p)).sqrt();
    for (i, &h) in hits.iter().enumerate() {
        assert!((h as f64 - mean).abs() < 5.0 * sd, "cell {i}: {h} hits, mean {mean}");
    }
    let chi2: f64 = hits.iter().map(|&h| (h as f64 - mean).powi(2) / mean).sum();
    // 99.9th percentile of chi-square with 99 degrees of freedom is about 148.
    assert!(chi2 < 148.0, "chi2 = {chi2}");
}

#[test]
fn chain_stays_stable_and_conserves_grains() {
    let out = run(&GridConfig::zeros(12), 5_000, &mut seeded_rng(3), Some(1_000)).unwrap();
    assert!(out.final_config.is_stable());
    assert_eq!(out.checkpoints.len(), 5);
    assert_eq!(out.checkpoints.last().unwrap().1, out.final_config);
    assert!(out.final_config.mass() <= 5_000);
}

#[test]
fn split_streams_differ() {
    let cfg = GridConfig::zeros(6);
    let a = run(&cfg, 50, &mut split_rng(1, 0), None).unwrap();
    let b = run(&cfg, 50, &mut split_rng(1, 1), None).unwrap();
    assert_ne!(a.steps, b.steps);
}

#[test]
fn trajectory_lines() {
    let out = run(&GridConfig::zeros(3), 4, &mut seeded_rng(5), None).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, 5, &serde_json::json!({"command": "test"}), &out.steps).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(header["rng"], RNG_NAME);
    assert_eq!(header["seed"], 5);
    assert_eq!(header["manifest"]["command"], "test");
    let first: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(first["t"], 0);
    assert!(first["drop"].is_array());
}
