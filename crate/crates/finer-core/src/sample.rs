//! Training currency shared by all tasks: a batch of coordinates with the
//! attributes the network should reproduce at them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};
use crate::linalg::Matrix;

/// Deterministic data-sampling stream, separate from the parameter-init
/// streams (which use the layer index as the stream id).
pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5A4D_504C); // "SMPL"
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub coords: Matrix,
    pub targets: Matrix,
}

impl SampleBatch {
    pub fn new(coords: Matrix, targets: Matrix) -> Result<Self> {
        ensure!(
            coords.rows() == targets.rows(),
            "coords have {} rows, targets {}",
            coords.rows(),
            targets.rows()
        );
        Ok(SampleBatch { coords, targets })
    }

    pub fn len(&self) -> usize {
        self.coords.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.rows() == 0
    }
}
