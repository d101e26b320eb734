//! Asset serialization.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic      4 bytes  "CBM1"
//! header     5 x u32  N, F, J, n_shape, has_pose_blendshapes (0 or 1)
//! template   N*3 f64
//! faces      F*3 u32
//! shapedirs  N*3*n_shape f64
//! regressor  J*N f64
//! weights    N*J f64
//! parents    J u32    (u32::MAX marks the root)
//! posedirs   N*3*9(J-1) f64, present only when the flag is 1
//! head mask  ceil(N/8) bytes, bit k of byte i is vertex 8i+k
//! ```
//!
//! The JSON mirror uses the same field names as [`AssetParts`], with the
//! root parent written as `-1`.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{AssetError, AssetParts, BodyModelAssets, NUM_POSE_FEATURES};

pub const ASSET_MAGIC: &[u8; 4] = b"CBM1";
const ROOT_SENTINEL: u32 = u32::MAX;
/// Upper bound on any declared dimension; guards allocation on corrupt headers.
const MAX_DIM: u32 = 1 << 24;

fn truncated(e: io::Error) -> AssetError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        AssetError::Truncated
    } else {
        AssetError::Io(e)
    }
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>, AssetError> {
    let mut out = vec![0.0; count];
    r.read_f64_into::<LittleEndian>(&mut out).map_err(truncated)?;
    Ok(out)
}

fn read_u32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<u32>, AssetError> {
    let mut out = vec![0u32; count];
    r.read_u32_into::<LittleEndian>(&mut out).map_err(truncated)?;
    Ok(out)
}

/// Reads a binary asset stream and validates it.
pub fn load_assets<R: Read>(mut r: R) -> Result<BodyModelAssets, AssetError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != ASSET_MAGIC {
        return Err(AssetError::BadMagic(magic));
    }
    let header = read_u32s(&mut r, 5)?;
    let [n, f, j, n_shape, flag] = [header[0], header[1], header[2], header[3], header[4]];
    for (name, d) in [("N", n), ("F", f), ("J", j), ("n_shape", n_shape)] {
        if d > MAX_DIM {
            return Err(AssetError::Header(format!("{name} = {d} exceeds limit")));
        }
    }
    if flag > 1 {
        return Err(AssetError::Header(format!("pose blendshape flag must be 0 or 1, got {flag}")));
    }
    if j as usize != super::NUM_JOINTS {
        return Err(AssetError::DimensionMismatch { what: "joint count", expected: super::NUM_JOINTS, actual: j as usize });
    }
    if n_shape as usize != super::NUM_SHAPE_PARAMS {
        return Err(AssetError::DimensionMismatch {
            what: "shape blendshape count",
            expected: super::NUM_SHAPE_PARAMS,
            actual: n_shape as usize,
        });
    }
    let (n, f, j, n_shape) = (n as usize, f as usize, j as usize, n_shape as usize);

    let template = read_f64s(&mut r, n * 3)?;
    let faces = read_u32s(&mut r, f * 3)?;
    let shape_blendshapes = read_f64s(&mut r, n * 3 * n_shape)?;
    let joint_regressor = read_f64s(&mut r, j * n)?;
    let skinning_weights = read_f64s(&mut r, n * j)?;
    let parents = read_u32s(&mut r, j)?;
    let pose_blendshapes = if flag == 1 { Some(read_f64s(&mut r, n * 3 * NUM_POSE_FEATURES)?) } else { None };
    let mut mask_bytes = vec![0u8; n.div_ceil(8)];
    r.read_exact(&mut mask_bytes).map_err(truncated)?;

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(AssetError::Header("trailing bytes after head mask".into()));
    }

    let parts = AssetParts {
        template_vertices: template.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        faces: faces.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        shape_blendshapes,
        joint_regressor,
        skinning_weights,
        kinematic_parents: parents.iter().map(|p| (*p != ROOT_SENTINEL).then_some(*p as usize)).collect(),
        pose_blendshapes,
        head_vertex_mask: (0..n).map(|v| mask_bytes[v / 8] & (1 << (v % 8)) != 0).collect(),
    };
    BodyModelAssets::new(parts)
}

/// Writes assets in the binary format.
pub fn write_assets<W: Write>(assets: &BodyModelAssets, mut w: W) -> io::Result<()> {
    let p = assets.parts();
    let n = p.template_vertices.len();
    w.write_all(ASSET_MAGIC)?;
    for d in [
        n,
        p.faces.len(),
        p.kinematic_parents.len(),
        super::NUM_SHAPE_PARAMS,
        usize::from(p.pose_blendshapes.is_some()),
    ] {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for x in p.template_vertices.as_flattened() {
        w.write_f64::<LittleEndian>(*x)?;
    }
    for ix in p.faces.as_flattened() {
        w.write_u32::<LittleEndian>(*ix)?;
    }
    for arr in [&p.shape_blendshapes, &p.joint_regressor, &p.skinning_weights] {
        for x in arr.iter() {
            w.write_f64::<LittleEndian>(*x)?;
        }
    }
    for parent in &p.kinematic_parents {
        w.write_u32::<LittleEndian>(parent.map_or(ROOT_SENTINEL, |x| x as u32))?;
    }
    if let Some(pb) = &p.pose_blendshapes {
        for x in pb {
            w.write_f64::<LittleEndian>(*x)?;
        }
    }
    let mut mask = vec![0u8; n.div_ceil(8)];
    for (v, h) in p.head_vertex_mask.iter().enumerate() {
        if *h {
            mask[v / 8] |= 1 << (v % 8);
        }
    }
    w.write_all(&mask)?;
    w.flush()
}

pub fn encode_assets(assets: &BodyModelAssets) -> Vec<u8> {
    let mut out = Vec::new();
    write_assets(assets, &mut out).expect("writing to a Vec cannot fail");
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonAssets {
    template_vertices: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
    shape_blendshapes: Vec<f64>,
    joint_regressor: Vec<f64>,
    skinning_weights: Vec<f64>,
    kinematic_parents: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pose_blendshapes: Option<Vec<f64>>,
    head_vertex_mask: Vec<bool>,
}

/// Reads the JSON mirror format.
pub fn load_assets_json<R: Read>(r: R) -> Result<BodyModelAssets, AssetError> {
    let j: JsonAssets = serde_json::from_reader(r).map_err(|e| AssetError::Json(e.to_string()))?;
    let parents = j
        .kinematic_parents
        .iter()
        .enumerate()
        .map(|(i, p)| match *p {
            -1 => Ok(None),
            p if p >= 0 => Ok(Some(p as usize)),
            p => Err(AssetError::BadKinematicTree(format!("joint {i} has parent {p}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    BodyModelAssets::new(AssetParts {
        template_vertices: j.template_vertices,
        faces: j.faces,
        shape_blendshapes: j.shape_blendshapes,
        joint_regressor: j.joint_regressor,
        skinning_weights: j.skinning_weights,
        kinematic_parents: parents,
        pose_blendshapes: j.pose_blendshapes,
        head_vertex_mask: j.head_vertex_mask,
    })
}

pub fn write_assets_json<W: Write>(assets: &BodyModelAssets, w: W) -> io::Result<()> {
    let p = assets.parts().clone();
    let j = JsonAssets {
        template_vertices: p.template_vertices,
        faces: p.faces,
        shape_blendshapes: p.shape_blendshapes,
        joint_regressor: p.joint_regressor,
        skinning_weights: p.skinning_weights,
        kinematic_parents: p.kinematic_parents.iter().map(|x| x.map_or(-1, |v| v as i64)).collect(),
        pose_blendshapes: p.pose_blendshapes,
        head_vertex_mask: p.head_vertex_mask,
    };
    serde_json::to_writer(w, &j).map_err(io::Error::other)
}

/// Loads assets from a path, choosing the format by content: binary files
/// start with the magic, anything else is parsed as JSON.
pub fn load_assets_path(path: &std::path::Path) -> Result<BodyModelAssets, AssetError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(ASSET_MAGIC) {
        load_assets(bytes.as_slice())
    } else {
        load_assets_json(bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{generate_test_assets, generate_test_body, TestBodyParams, NUM_JOINTS};

    #[test]
    fn binary_round_trip_is_byte_identical() {
        let a = generate_test_assets(8, 1);
        let bytes = encode_assets(&a);
        let b = load_assets(bytes.as_slice()).unwrap();
        assert_eq!(b.vertex_count(), 1000);
        assert_eq!(a.parts(), b.parts());
        assert_eq!(encode_assets(&b), bytes);
    }

    #[test]
    fn binary_round_trip_with_pose_blendshapes() {
        let params = TestBodyParams { pose_blendshapes: true, ..TestBodyParams::new(3, 4) };
        let a = generate_test_body(&params);
        let b = load_assets(encode_assets(&a).as_slice()).unwrap();
        assert_eq!(a.parts(), b.parts());
    }

    #[test]
    fn json_round_trip() {
        let a = generate_test_assets(4, 2);
        let mut buf = Vec::new();
        write_assets_json(&a, &mut buf).unwrap();
        let b = load_assets_json(buf.as_slice()).unwrap();
        assert_eq!(a.parts(), b.parts());
    }

    #[test]
    fn truncated_stream_is_a_parse_error() {
        let bytes = encode_assets(&generate_test_assets(4, 2));
        for cut in [0, 3, 10, 24, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(load_assets(&bytes[..cut]), Err(AssetError::Truncated)), "cut at {cut}");
        }
    }

    #[test]
    fn bad_magic_and_header() {
        let mut bytes = encode_assets(&generate_test_assets(4, 2));
        bytes[0] = b'X';
        assert!(matches!(load_assets(bytes.as_slice()), Err(AssetError::BadMagic(_))));

        let mut bytes = encode_assets(&generate_test_assets(4, 2));
        bytes[12..16].copy_from_slice(&23u32.to_le_bytes());
        assert!(matches!(load_assets(bytes.as_slice()), Err(AssetError::DimensionMismatch { .. })));

        let mut bytes = encode_assets(&generate_test_assets(4, 2));
        bytes.push(0);
        assert!(matches!(load_assets(bytes.as_slice()), Err(AssetError::Header(_))));
    }

    #[test]
    fn unnormalized_skinning_row_in_file_is_rejected() {
        let a = generate_test_assets(4, 2);
        let mut parts = a.into_parts();
        for w in &mut parts.skinning_weights[..NUM_JOINTS] {
            *w *= 0.5;
        }
        // Bypass validation by writing the raw layout by hand.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(ASSET_MAGIC);
        let n = parts.template_vertices.len();
        for d in [n, parts.faces.len(), NUM_JOINTS, 10, 0] {
            bytes.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for x in parts.template_vertices.as_flattened() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        for ix in parts.faces.as_flattened() {
            bytes.extend_from_slice(&ix.to_le_bytes());
        }
        for arr in [&parts.shape_blendshapes, &parts.joint_regressor, &parts.skinning_weights] {
            for x in arr.iter() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        for p in &parts.kinematic_parents {
            bytes.extend_from_slice(&p.map_or(u32::MAX, |x| x as u32).to_le_bytes());
        }
        let mut mask = vec![0u8; n.div_ceil(8)];
        for (v, h) in parts.head_vertex_mask.iter().enumerate() {
            if *h {
                mask[v / 8] |= 1 << (v % 8);
            }
        }
        bytes.extend_from_slice(&mask);
        assert!(matches!(
            load_assets(bytes.as_slice()),
            Err(AssetError::WeightsNotNormalized { row: 0, .. })
        ));
    }
}
