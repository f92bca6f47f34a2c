use super::{interp::sample_index, GridGeometry, ScalarVolume, VectorField, DEFAULT_FILL};
use crate::transform::SpatialTransform;

/// Pull-back resampling: output voxel at physical `x` holds `v(t(x))`.
pub fn resample<T>(v: &ScalarVolume, t: &T, out_geom: &GridGeometry) -> ScalarVolume
where
    T: SpatialTransform + ?Sized,
{
    resample_fill(v, t, out_geom, DEFAULT_FILL)
}

pub fn resample_fill<T>(v: &ScalarVolume, t: &T, out_geom: &GridGeometry, fill: f64) -> ScalarVolume
where
    T: SpatialTransform + ?Sized,
{
    let src = v.geometry();
    let values = v.values();
    let mut out = vec![0.0; out_geom.len()];
    crate::par::fill(&mut out, |idx| {
        let y = t.apply(&out_geom.voxel_point(idx));
        sample_index(values, src, &src.physical_to_index(&y), fill)
    });
    ScalarVolume::from_raw(out_geom.clone(), out)
}

/// Component-wise pull-back resampling. Vectors are not reoriented.
pub fn resample_field<T>(f: &VectorField, t: &T, out_geom: &GridGeometry) -> VectorField
where
    T: SpatialTransform + ?Sized,
{
    let src = f.geometry();
    // Mapped index positions are shared by all components.
    let mut positions = vec![[0.0; 3]; out_geom.len()];
    crate::par::fill(&mut positions, |idx| {
        src.physical_to_index(&t.apply(&out_geom.voxel_point(idx)))
    });
    let components = f
        .components()
        .iter()
        .map(|comp| {
            let mut out = vec![0.0; out_geom.len()];
            crate::par::fill(&mut out, |idx| sample_index(comp, src, &positions[idx], DEFAULT_FILL));
            out
        })
        .collect();
    VectorField::from_raw(out_geom.clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{AffineTransform, Transform, TranslationTransform};
    use crate::volume::sample_linear;

    fn ramp() -> ScalarVolume {
        let g = GridGeometry::new(&[8, 7, 6], &[1.0, 2.0, 1.5], &[0.0, 0.0, 0.0]).unwrap();
        ScalarVolume::from_fn(g, |p| 3.0 * p[0] + 0.5 * p[1] * p[1] - p[2]).unwrap()
    }

    #[test]
    fn identity_round_trip() {
        let v = ramp();
        let t = Transform::identity(3);
        let r = resample(&v, &t, v.geometry());
        for (a, b) in v.values().iter().zip(r.values()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn grid_aligned_shift_moves_indices() {
        let v = ramp();
        let t = TranslationTransform::new(&[1.0, 2.0, 0.0]);
        let r = resample(&v, &t, v.geometry());
        let g = v.geometry();
        for k in 0..6 {
            for j in 0..6 {
                for i in 0..7 {
                    assert_eq!(r.get(i, j, k), v.get(i + 1, j + 1, k));
                }
            }
        }
        // One voxel past the last one only the fill value remains.
        assert_eq!(r.get(7, 0, 0), 0.0);
        assert_eq!(g.dims(), &[8, 7, 6]);
    }

    #[test]
    fn half_voxel_shift_gives_midpoints() {
        let v = ramp();
        let t = TranslationTransform::new(&[0.5, 0.0, 0.0]);
        let r = resample(&v, &t, v.geometry());
        for k in 0..6 {
            for j in 0..7 {
                for i in 0..7 {
                    let expected = 0.5 * (v.get(i, j, k) + v.get(i + 1, j, k));
                    assert!((r.get(i, j, k) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn field_resample_matches_per_component_loop() {
        let v = ramp();
        let g = v.geometry().clone();
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| v.values().iter().map(|x| x * (c as f64 + 1.0) - 2.0).collect())
            .collect();
        let f = VectorField::new(g.clone(), comps).unwrap();
        let mut t = AffineTransform::identity(3);
        t.set_matrix([[1.02, 0.05, 0.0], [-0.03, 0.97, 0.01], [0.0, 0.02, 1.01]]);
        t.set_offset([0.4, -0.7, 0.3]);
        t.set_center(g.center());
        let r = resample_field(&f, &t, &g);
        for c in 0..3 {
            let vol = f.component_volume(c);
            for idx in 0..g.len() {
                let oracle = sample_linear(&vol, &t.apply(&g.voxel_point(idx)));
                assert_eq!(r.component(c)[idx], oracle);
            }
        }
    }
}
