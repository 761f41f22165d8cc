use std::fs;
use std::path::PathBuf;

use semcom::axes::S;
use semcom::dataset::{
    build_experiment_joint, encode_idx, load_training_set, ImageSet, DEFAULT_THRESHOLD, HIST,
    TRAIN_IMAGES, TRAIN_LABELS, Z,
};
use semcom::Error;

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("semcom-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Image `i` has `40 + 25 i` white pixels.
fn fixture() -> ImageSet {
    let mut pixels = Vec::new();
    for i in 0..10 {
        let mut img = vec![0u8; 784];
        img[..40 + 25 * i].fill(200);
        pixels.extend(img);
    }
    ImageSet::new(28, 28, pixels, (0..10).collect()).unwrap()
}

#[test]
fn loads_from_directory() {
    let dir = scratch_dir("load");
    let (img, lbl) = encode_idx(&fixture());
    fs::write(dir.join(TRAIN_IMAGES[0]), img).unwrap();
    fs::write(dir.join(TRAIN_LABELS[0]), lbl).unwrap();
    let set = load_training_set(&dir).unwrap();
    assert_eq!(set, fixture());

    let ej = build_experiment_joint(&set, DEFAULT_THRESHOLD).unwrap();
    let j = ej.joint();
    assert_eq!(ej.total(), 10);
    assert!(j.conditional_entropy(&[S], &[Z]).unwrap().abs() < 1e-12);
    // Ratios 40/784 .. 265/784 fall in intervals 1 to 6.
    let h = j.pmf(HIST).unwrap();
    let occupied = h.probs().iter().filter(|&&p| p > 0.0).count();
    assert_eq!(occupied, 6);
    fs::remove_dir_all(dir).ok();
}

#[test]
fn accepts_dotted_file_names() {
    let dir = scratch_dir("dotted");
    let (img, lbl) = encode_idx(&fixture());
    fs::write(dir.join(TRAIN_IMAGES[1]), img).unwrap();
    fs::write(dir.join(TRAIN_LABELS[1]), lbl).unwrap();
    assert_eq!(load_training_set(&dir).unwrap().count(), 10);
    fs::remove_dir_all(dir).ok();
}

#[test]
fn missing_file_is_named() {
    let dir = scratch_dir("missing");
    match load_training_set(&dir) {
        Err(Error::Io { path, .. }) => assert!(path.contains("train-images"), "{path}"),
        other => panic!("{other:?}"),
    }
    fs::remove_dir_all(dir).ok();
}

#[test]
fn threshold_moves_histogram() {
    let set = fixture();
    let bright = build_experiment_joint(&set, 100).unwrap();
    let dark = build_experiment_joint(&set, 250).unwrap();
    let first = |ej: &semcom::dataset::ExperimentJoint| ej.joint().pmf(HIST).unwrap().probs()[0];
    assert!(first(&dark) > first(&bright));
    assert!((first(&dark) - 1.0).abs() < 1e-12);
}
