//! Wavefront OBJ subset: `o`, `v` and triangular `f` records.

use super::{PartMesh, Scene};
use crate::annotations::PartId;
use crate::geometry::Point3;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ObjError {
    pub line: usize,
    pub message: String,
}

/// One `o part_<id>` object per part; coordinates carry 17 significant
/// digits so they parse back to the same bits.
pub fn export_obj(scene: &Scene) -> String {
    let mut out = String::from("# orthomodel scene\n");
    let mut base = 1usize;
    for part in scene.parts() {
        writeln!(out, "o part_{}", part.part.0).unwrap();
        for v in &part.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
        }
        for t in &part.triangles {
            writeln!(
                out,
                "f {} {} {}",
                t[0] as usize + base,
                t[1] as usize + base,
                t[2] as usize + base
            )
            .unwrap();
        }
        base += part.vertices.len();
    }
    out
}

pub fn import_obj(document: &str) -> Result<Scene, ObjError> {
    struct Object {
        id: PartId,
        first_vertex: usize,
        vertices: Vec<Point3>,
        triangles: Vec<[u32; 3]>,
    }
    let mut objects: Vec<Object> = Vec::new();
    let mut total_vertices = 0usize;

    for (n, raw) in document.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| ObjError { line, message };
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut fields = text.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        match tag {
            "o" => {
                let name = fields
                    .next()
                    .ok_or_else(|| err("object record without a name".into()))?;
                let id = name
                    .strip_prefix("part_")
                    .and_then(|s| s.parse::<u64>().ok())
                    .unwrap_or(objects.len() as u64 + 1);
                objects.push(Object {
                    id: PartId(id),
                    first_vertex: total_vertices,
                    vertices: Vec::new(),
                    triangles: Vec::new(),
                });
            }
            "v" => {
                if objects.is_empty() {
                    objects.push(Object {
                        id: PartId(0),
                        first_vertex: 0,
                        vertices: Vec::new(),
                        triangles: Vec::new(),
                    });
                }
                let coords: Vec<f64> = fields
                    .by_ref()
                    .take(3)
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|e| err(format!("bad vertex coordinate `{f}`: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(err("vertex needs three finite coordinates".into()));
                }
                objects
                    .last_mut()
                    .unwrap()
                    .vertices
                    .push(Point3::new(coords[0], coords[1], coords[2]));
                total_vertices += 1;
            }
            "f" => {
                let obj = objects
                    .last_mut()
                    .ok_or_else(|| err("face before any vertex".into()))?;
                let refs: Vec<&str> = fields.collect();
                if refs.len() != 3 {
                    return Err(err(format!(
                        "only triangles are supported, face has {} vertices",
                        refs.len()
                    )));
                }
                let mut tri = [0u32; 3];
                for (slot, r) in tri.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or_default();
                    let idx: i64 = head
                        .parse()
                        .map_err(|_| err(format!("bad face index `{r}`")))?;
                    let global = match idx {
                        i if i > 0 => i as usize - 1,
                        i if i < 0 && (-i) as usize <= total_vertices => {
                            total_vertices - (-i) as usize
                        }
                        _ => return Err(err(format!("face index `{r}` out of range"))),
                    };
                    if global < obj.first_vertex || global >= total_vertices {
                        return Err(err(format!(
                            "face index `{r}` does not belong to the current object"
                        )));
                    }
                    *slot = (global - obj.first_vertex) as u32;
                }
                obj.triangles.push(tri);
            }
            "vn" | "vt" | "s" | "g" | "usemtl" | "mtllib" => {}
            other => return Err(err(format!("unsupported record `{other}`"))),
        }
    }

    let parts = objects
        .into_iter()
        .map(|o| PartMesh::new(o.id, o.vertices, o.triangles))
        .collect();
    Scene::new(parts).map_err(|e| ObjError {
        line: 0,
        message: e.to_string(),
    })
}
