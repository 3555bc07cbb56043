//! Body file format:
//! `{"kind": ..., "dim": n, "data": {...}, "pose": {"linear": [[...]], "translation": [...]}}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::affine::{AffineMap, AffineMapJson};
use super::body::{ConvexBody, Shape};
use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, matrix_to_rows, Vector};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyJson {
    pub kind: String,
    pub dim: usize,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<AffineMapJson>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(data: &'a Value, name: &str) -> Result<&'a Value> {
    data.get(name).ok_or_else(|| parse_err(format!("missing data.{name}")))
}

fn vectors(v: &Value, name: &str) -> Result<Vec<Vector>> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(v.clone()).map_err(|e| parse_err(format!("data.{name}: {e}")))?;
    Ok(rows.iter().map(|r| Vector::from_column_slice(r)).collect())
}

impl BodyJson {
    pub fn to_body(&self) -> Result<ConvexBody> {
        let body = match self.kind.as_str() {
            "vpolytope" => ConvexBody::vpolytope(vectors(field(&self.data, "vertices")?, "vertices")?)?,
            "hpolytope" => {
                let normals = vectors(field(&self.data, "normals")?, "normals")?;
                let offsets: Vec<f64> = serde_json::from_value(field(&self.data, "offsets")?.clone())
                    .map_err(|e| parse_err(format!("data.offsets: {e}")))?;
                ConvexBody::hpolytope(normals, offsets)?
            }
            "lpball" => {
                let p = field(&self.data, "p")?.as_f64().ok_or_else(|| parse_err("data.p must be a number"))?;
                ConvexBody::lp_ball(self.dim, p)?
            }
            "ellipsoid" => {
                let rows: Vec<Vec<f64>> = serde_json::from_value(field(&self.data, "shape")?.clone())
                    .map_err(|e| parse_err(format!("data.shape: {e}")))?;
                let m = matrix_from_rows(&rows).ok_or_else(|| parse_err("data.shape must be rectangular"))?;
                ConvexBody::ellipsoid(m)?
            }
            "polar" => {
                let inner: BodyJson = serde_json::from_value(field(&self.data, "body")?.clone())
                    .map_err(|e| parse_err(format!("data.body: {e}")))?;
                inner.to_body()?.polar()?
            }
            other => return Err(parse_err(format!("unknown body kind {other:?}"))),
        };
        if body.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: body.dim() });
        }
        match &self.pose {
            Some(p) => {
                let map = AffineMap::try_from(p)?;
                if map.dim() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: map.dim() });
                }
                Ok(body.transform(&map))
            }
            None => Ok(body),
        }
    }

    pub fn from_body(body: &ConvexBody) -> Self {
        let dim = body.dim();
        let rows = |vs: &[Vector]| -> Vec<Vec<f64>> { vs.iter().map(|v| v.iter().copied().collect()).collect() };
        let (kind, data) = match body.shape() {
            Shape::VPolytope(v) => ("vpolytope", json!({ "vertices": rows(v.vertices()) })),
            Shape::HPolytope(h) => ("hpolytope", json!({ "normals": rows(h.normals()), "offsets": h.offsets() })),
            Shape::LpBall { p } => ("lpball", json!({ "p": p })),
            Shape::Ellipsoid { shape, .. } => ("ellipsoid", json!({ "shape": matrix_to_rows(shape) })),
            Shape::Polar(inner) => ("polar", json!({ "body": BodyJson::from_body(inner) })),
        };
        let pose = if body.pose().is_identity() { None } else { Some(AffineMapJson::from(body.pose())) };
        BodyJson { kind: kind.to_string(), dim, data, pose }
    }
}

impl ConvexBody {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: BodyJson = serde_json::from_str(s).map_err(|e| parse_err(e.to_string()))?;
        j.to_body()
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(BodyJson::from_body(self)).expect("body JSON is always serializable")
    }

    /// FNV-1a over the canonical JSON text; stable across runs and platforms.
    pub fn content_hash(&self) -> String {
        let text = self.to_json_value().to_string();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn parses_each_kind() {
        let v = ConvexBody::from_json_str(
            r#"{"kind":"vpolytope","dim":2,"data":{"vertices":[[1,0],[0,1],[-1,-1]]}}"#,
        )
        .unwrap();
        assert_eq!(v.vertex_list().unwrap().len(), 3);

        let h = ConvexBody::from_json_str(
            r#"{"kind":"hpolytope","dim":2,"data":{"normals":[[1,0],[-1,0],[0,1],[0,-1]],"offsets":[1,1,1,1]},
                "pose":{"linear":[[2,0],[0,1]],"translation":[1,0]}}"#,
        )
        .unwrap();
        assert!((h.support(&vector(&[1.0, 0.0])).unwrap() - 3.0).abs() < 1e-12);

        let b = ConvexBody::from_json_str(r#"{"kind":"lpball","dim":3,"data":{"p":4}}"#).unwrap();
        assert_eq!(b.dim(), 3);

        let e = ConvexBody::from_json_str(r#"{"kind":"ellipsoid","dim":2,"data":{"shape":[[4,0],[0,1]]}}"#).unwrap();
        assert!((e.gauge(&vector(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(ConvexBody::from_json_str("{"), Err(Error::Parse(_))));
        assert!(matches!(
            ConvexBody::from_json_str(r#"{"kind":"torus","dim":2,"data":{}}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            ConvexBody::from_json_str(r#"{"kind":"lpball","dim":2,"data":{"p":1}}"#),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn serialization_preserves_geometry() {
        let b = ConvexBody::lp_ball(2, 3.0).unwrap().shift(&vector(&[0.2, -0.1])).polar().unwrap();
        let back = ConvexBody::from_json_str(&b.to_json_value().to_string()).unwrap();
        for k in 0..16 {
            let a = k as f64 * 0.4;
            let x = vector(&[a.cos(), a.sin()]);
            assert!((b.gauge(&x).unwrap() - back.gauge(&x).unwrap()).abs() < 1e-14);
        }
        assert_eq!(b.content_hash(), back.content_hash());
    }
}
