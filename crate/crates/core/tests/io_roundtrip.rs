use std::fs;

use vfsreg::evaluation::LandmarkSet;
use vfsreg::io::{self, ElementType, Image};
use vfsreg::volume::{GridGeometry, LabelVolume, ScalarVolume, VectorField};

fn geometry() -> GridGeometry {
    GridGeometry::new(&[5, 4, 3], &[0.8, 1.2, 2.5], &[-10.0, 3.5, 0.25]).unwrap()
}

#[test]
fn float32_volume_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    let v = ScalarVolume::new(g.clone(), (0..g.len()).map(|i| ((i as f32) * 0.731).sin() as f64).collect()).unwrap();
    let path = dir.path().join("v.mhd");
    io::write_scalar(&path, &v, ElementType::Float32).unwrap();
    let back = io::read_scalar(&path).unwrap();
    assert_eq!(back, v);
    assert_eq!(back.geometry(), &g);
}

#[test]
fn float64_and_int16_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    let v = ScalarVolume::new(g.clone(), (0..g.len()).map(|i| (i as f64).sqrt() / 3.0).collect()).unwrap();
    let path = dir.path().join("d.mha");
    io::write_scalar(&path, &v, ElementType::Float64).unwrap();
    assert_eq!(io::read_scalar(&path).unwrap(), v);

    let w = ScalarVolume::new(g.clone(), (0..g.len()).map(|i| i as f64 * 37.0 - 1000.0).collect()).unwrap();
    let path = dir.path().join("s.mhd");
    io::write_scalar(&path, &w, ElementType::Int16).unwrap();
    assert_eq!(io::read_header(&path).unwrap().element_type, ElementType::Int16);
    assert_eq!(io::read_scalar(&path).unwrap(), w);
}

#[test]
fn non_integer_values_are_refused_for_integer_types() {
    let dir = tempfile::tempdir().unwrap();
    let v = ScalarVolume::filled(geometry(), 0.5);
    assert!(io::write_scalar(&dir.path().join("x.mhd"), &v, ElementType::UInt8).is_err());
}

#[test]
fn vector_field_round_trips_with_three_channels() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    let comps: Vec<Vec<f64>> = (0..3).map(|c| (0..g.len()).map(|i| (i * (c + 1)) as f64 * 0.5).collect()).collect();
    let f = VectorField::new(g, comps).unwrap();
    let path = dir.path().join("f.mhd");
    io::write_field(&path, &f, ElementType::Float32).unwrap();
    match io::read_metaimage(&path).unwrap() {
        Image::Field(back) => assert_eq!(back, f),
        Image::Scalar(_) => panic!("expected a field"),
    }
}

#[test]
fn label_volume_preserves_integers() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    let l = LabelVolume::new(g.clone(), (0..g.len()).map(|i| (i as u32 * 97) % 300).collect()).unwrap();
    let path = dir.path().join("l.mhd");
    io::write_labels(&path, &l).unwrap();
    assert_eq!(io::read_header(&path).unwrap().element_type, ElementType::UInt16);
    assert_eq!(io::read_labels(&path).unwrap(), l);
}

#[test]
fn writers_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let v = ScalarVolume::filled(geometry(), 1.25);
    let (a, b) = (dir.path().join("a.mha"), dir.path().join("b.mha"));
    io::write_scalar(&a, &v, ElementType::Float32).unwrap();
    io::write_scalar(&b, &v, ElementType::Float32).unwrap();
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn landmarks_respect_the_index_base() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    let path = dir.path().join("lm.txt");
    fs::write(&path, "1 1 1\n# comment\n\n5,4,3\n").unwrap();
    let one = io::read_landmarks_dirlab(&path, &g, 1).unwrap();
    assert_eq!(one.points(), &[[0.0, 0.0, 0.0], [4.0, 3.0, 2.0]]);
    let zero = io::read_landmarks_dirlab(&path, &g, 0).unwrap();
    assert_eq!(zero.points()[1], [5.0, 4.0, 3.0]);

    let out = dir.path().join("out.txt");
    io::write_landmarks(&out, &one, 1).unwrap();
    let back = io::read_landmarks_dirlab(&out, &g, 1).unwrap();
    assert_eq!(back, LandmarkSet::new(one.points().to_vec(), g).unwrap());
}

#[test]
fn config_file_resolves_mask_relative_to_itself() {
    let dir = tempfile::tempdir().unwrap();
    let g = geometry();
    io::write_labels(&dir.path().join("m.mhd"), &LabelVolume::filled(g, 1)).unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "[stage]\ntransform = affine\nmask = m.mhd\n[stage]\ntransform = bspline\npreset = abdomen\n").unwrap();
    let stages = io::read_config(&cfg).unwrap();
    assert_eq!(stages.len(), 2);
    assert!(stages[0].mask.is_some());
    assert_eq!(stages[1].representation, vfsreg::registration::RepresentationKind::Vfc(vfsreg::repr::VfcParams::with_gamma(2.5)));
}
