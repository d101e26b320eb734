//! Messages exchanged with viewer clients.
//!
//! Every guidance frame goes out as a JSON text message followed by a
//! binary message with the current vertex positions. The binary layout is a
//! 16-byte header (`CBV1`, frame id as u64 LE, vertex count as u32 LE)
//! followed by one little-endian f32 triplet per vertex.

use corebody::evaluation::SessionReport;
use corebody::guidance::{MarkerState, Segment};
use corebody::BodyMesh;
use serde::{Deserialize, Serialize};

pub const MESH_MAGIC: [u8; 4] = *b"CBV1";
pub const MESH_HEADER_LEN: usize = 16;

/// Frame id used for the target mesh.
pub const TARGET_FRAME_ID: u64 = 0;

pub fn encode_mesh(frame_id: u64, mesh: &BodyMesh) -> Vec<u8> {
    let n = mesh.vertices.len();
    let mut out = Vec::with_capacity(MESH_HEADER_LEN + 12 * n);
    out.extend_from_slice(&MESH_MAGIC);
    out.extend_from_slice(&frame_id.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in &mesh.vertices {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshPayload {
    pub frame_id: u64,
    pub vertices: Vec<[f32; 3]>,
}

pub fn decode_mesh(bytes: &[u8]) -> Result<MeshPayload, String> {
    if bytes.len() < MESH_HEADER_LEN || bytes[..4] != MESH_MAGIC {
        return Err("not a mesh payload".into());
    }
    let frame_id = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let n = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[MESH_HEADER_LEN..];
    if body.len() != 12 * n {
        return Err(format!("expected {} vertex bytes, got {}", 12 * n, body.len()));
    }
    let f = |i: usize| f32::from_le_bytes(body[4 * i..4 * i + 4].try_into().unwrap());
    Ok(MeshPayload { frame_id, vertices: (0..n).map(|k| [f(3 * k), f(3 * k + 1), f(3 * k + 2)]).collect() })
}

/// JSON messages on the guidance socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum ServerMessage {
    /// A session began; frame ids restart at 1.
    Session { session: String },
    /// A new target was set; fetch it from the target mesh endpoint.
    Target { vertex_count: usize },
    Guidance {
        frame_id: u64,
        t: f64,
        rmse: f64,
        markers: Vec<MarkerState>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        skeleton: Option<Vec<Segment>>,
    },
    /// This subscriber fell behind and `count` broadcasts were skipped.
    Dropped { count: u64 },
    Metrics { session: String, report: SessionReport },
    SessionError { session: String, message: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}
