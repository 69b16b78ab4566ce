use gckf::exchange::{Architecture, ExchangeMessage, MessagePart};
use nalgebra::{DMatrix, DVector};

/// Single-part ELSD-FN message from subsystem 1 to subsystem 0.
pub fn manual_message(
    ids: &[usize],
    alpha: DMatrix<f64>,
    q: DMatrix<f64>,
    xb_t: DVector<f64>,
    xb_ta: DVector<f64>,
) -> ExchangeMessage {
    ExchangeMessage {
        arch: Architecture::FrozenNeighbours,
        target: 0,
        parts: vec![MessagePart {
            source: 1,
            requested: ids.to_vec(),
            marginal_cov: q.clone(),
            alpha,
            q,
            xb_hat_t: xb_t,
            xb_hat_ta: xb_ta,
            anchor_ids: ids.to_vec(),
            anchor_trace: 0.0,
        }],
    }
}
