use proptest::prelude::*;

use vfsreg::evaluation::{dice, tre, LandmarkSet};
use vfsreg::metrics::{mean_dot_product, ncc, ssd};
use vfsreg::transform::{SpatialTransform, Transform, TranslationTransform};
use vfsreg::volume::{GridGeometry, LabelVolume, ScalarVolume, VectorField};

const DIMS: [usize; 3] = [5, 4, 3];

fn volume(values: Vec<f64>) -> ScalarVolume {
    ScalarVolume::new(GridGeometry::unit(&DIMS).unwrap(), values).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 60)
}

proptest! {
    #[test]
    fn masked_ssd_equals_ssd_of_the_cropped_box(a in values(), b in values(), lo in 0usize..2, hi in 3usize..5) {
        let g = GridGeometry::unit(&DIMS).unwrap();
        let inside = |i: usize| {
            let c = g.voxel_coords(i);
            c[0] >= lo && c[0] < hi && c[1] >= 1 && c[1] < 3
        };
        let mask = LabelVolume::new(g.clone(), (0..g.len()).map(|i| inside(i) as u32).collect()).unwrap();
        let masked = ssd(&volume(a.clone()), &volume(b.clone()), Some(&mask)).unwrap().value;
        let crop = |v: &[f64]| (0..g.len()).filter(|&i| inside(i)).map(|i| v[i]).collect::<Vec<_>>();
        let (ca, cb) = (crop(&a), crop(&b));
        let cg = GridGeometry::unit(&[hi - lo, 2, 3]).unwrap();
        let cropped = ssd(
            &ScalarVolume::new(cg.clone(), ca).unwrap(),
            &ScalarVolume::new(cg, cb).unwrap(),
            None,
        ).unwrap().value;
        prop_assert!((masked - cropped).abs() <= 1e-9 * (1.0 + cropped.abs()));
    }

    #[test]
    fn ncc_ignores_positive_affine_intensity_maps(a in values(), b in values(), s in 0.1..10.0f64, o in -50.0..50.0f64) {
        let va = volume(a.clone());
        let base = ncc(&va, &volume(b.clone()), None);
        let mapped = ncc(&va, &volume(b.iter().map(|x| s * x + o).collect()), None);
        if let (Ok(x), Ok(y)) = (base, mapped) {
            prop_assert!((x.value - y.value).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_dot_product_is_symmetric(a in values(), b in values(), c in values(), d in values()) {
        let g = GridGeometry::unit(&[6, 10]).unwrap();
        let f = VectorField::new(g.clone(), vec![a, b]).unwrap();
        let h = VectorField::new(g, vec![c, d]).unwrap();
        let x = mean_dot_product(&f, &h, None).unwrap().value;
        let y = mean_dot_product(&h, &f, None).unwrap().value;
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn dice_is_symmetric_and_bounded(a in prop::collection::vec(0u32..3, 60), b in prop::collection::vec(0u32..3, 60)) {
        let g = GridGeometry::unit(&DIMS).unwrap();
        let la = LabelVolume::new(g.clone(), a).unwrap();
        let lb = LabelVolume::new(g, b).unwrap();
        for label in 1..3 {
            match (dice(&la, &lb, label), dice(&lb, &la, label)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert!((0.0..=1.0).contains(&x));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric error"),
            }
        }
    }

    #[test]
    fn tre_of_the_generating_translation_is_zero(
        pts in prop::collection::vec(prop::array::uniform3(0.0..50.0f64), 1..20),
        off in prop::array::uniform3(-10.0..10.0f64),
        sz in 0.5..3.0f64,
    ) {
        let g = GridGeometry::new(&[1, 1, 1], &[1.0, 1.0, sz], &[0.0; 3]).unwrap();
        let fixed = LandmarkSet::new(pts.clone(), g.clone()).unwrap();
        let t: Transform = TranslationTransform::new(&off).into();
        let moved: Vec<[f64; 3]> = (0..pts.len())
            .map(|i| g.physical_to_index(&t.apply(&fixed.physical(i))))
            .collect();
        let moving = LandmarkSet::new(moved, g).unwrap();
        let r = tre(&fixed, &moving, &t).unwrap();
        prop_assert!(r.mean < 1e-9);
        let id = tre(&fixed, &moving, &Transform::identity(3)).unwrap();
        let norm = off.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((id.mean - norm).abs() < 1e-9);
        prop_assert!(id.std < 1e-9);
    }
}
