//! JSON transform files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{AffineTransform, BSplineTransform, CompositeTransform, Transform, TranslationTransform};
use crate::volume::GridGeometry;

pub const TRANSFORM_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GridDoc {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TransformDoc {
    Translation { offset: Vec<f64> },
    Affine { matrix: Vec<f64>, offset: Vec<f64>, center: Vec<f64> },
    Bspline { grid: GridDoc, coefficients: Vec<f64> },
    Composite { items: Vec<TransformDoc> },
}

#[derive(Serialize, Deserialize)]
struct FileDoc {
    schema_version: u32,
    transform: TransformDoc,
}

fn to_doc(t: &Transform) -> TransformDoc {
    match t {
        Transform::Translation(t) => TransformDoc::Translation { offset: t.offset().to_vec() },
        Transform::Affine(a) => TransformDoc::Affine {
            matrix: a.matrix_flat(),
            offset: a.offset().to_vec(),
            center: a.center().to_vec(),
        },
        Transform::BSpline(b) => {
            let g = b.control_grid();
            TransformDoc::Bspline {
                grid: GridDoc { dims: g.dims().to_vec(), spacing: g.spacing().to_vec(), origin: g.origin().to_vec() },
                coefficients: b.coefficients().to_vec(),
            }
        }
        Transform::Composite(c) => TransformDoc::Composite { items: c.items().iter().map(to_doc).collect() },
    }
}

fn from_doc(d: TransformDoc) -> Result<Transform> {
    Ok(match d {
        TransformDoc::Translation { offset } => {
            if !(2..=3).contains(&offset.len()) {
                return Err(Error::Parameter(format!("translation needs 2 or 3 offsets, got {}", offset.len())));
            }
            TranslationTransform::new(&offset).into()
        }
        TransformDoc::Affine { matrix, offset, center } => {
            let n = offset.len();
            if !(2..=3).contains(&n) {
                return Err(Error::Parameter(format!("affine needs 2 or 3 offsets, got {n}")));
            }
            AffineTransform::from_parts(n, &matrix, &offset, &center)?.into()
        }
        TransformDoc::Bspline { grid, coefficients } => {
            let g = GridGeometry::new(&grid.dims, &grid.spacing, &grid.origin)?;
            BSplineTransform::new(g)?.with_coefficients(coefficients)?.into()
        }
        TransformDoc::Composite { items } => {
            Transform::Composite(CompositeTransform::new(items.into_iter().map(from_doc).collect::<Result<_>>()?)?)
        }
    })
}

/// Serialises `t` to the JSON document written by [`write_transform`].
pub fn transform_to_json(t: &Transform) -> Result<String> {
    let doc = FileDoc { schema_version: TRANSFORM_SCHEMA_VERSION, transform: to_doc(t) };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn transform_from_json(text: &str) -> Result<Transform> {
    let doc: FileDoc = serde_json::from_str(text)?;
    if doc.schema_version != TRANSFORM_SCHEMA_VERSION {
        return Err(Error::Parameter(format!("unsupported transform schema version {}", doc.schema_version)));
    }
    from_doc(doc.transform)
}

pub fn write_transform(path: &Path, t: &Transform) -> Result<()> {
    fs::write(path, transform_to_json(t)?).map_err(|e| Error::io(path, e))
}

pub fn read_transform(path: &Path) -> Result<Transform> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    transform_from_json(&text)
}
