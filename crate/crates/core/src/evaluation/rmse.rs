use super::EvalError;
use crate::body_model::BodyMesh;

/// Root-mean-square vertex distance between two meshes over non-head vertices:
/// `sqrt(1/N_rmse * sum_k |E_k - M_k|^2)`.
pub fn compute_rmse(current: &BodyMesh, target: &BodyMesh, head_mask: &[bool]) -> Result<f64, EvalError> {
    let n = target.vertices.len();
    if current.vertices.len() != n || head_mask.len() != n {
        return Err(EvalError::TopologyMismatch { current: current.vertices.len(), target: n, mask: head_mask.len() });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((e, m), head) in current.vertices.iter().zip(&target.vertices).zip(head_mask) {
        if !head {
            sum += (e - m).norm_squared();
            count += 1;
        }
    }
    if count == 0 {
        return Err(EvalError::EmptyBody);
    }
    Ok((sum / count as f64).sqrt())
}
