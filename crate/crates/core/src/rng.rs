//! Per-source random streams.
//!
//! Every source node draws from its own ChaCha8 stream: the key comes from
//! the master seed and the stream number is the node index. A source's walks
//! therefore do not depend on which other sources run, on worker count, or
//! on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::NodeId;

pub type WalkRng = ChaCha8Rng;

pub fn source_stream(master_seed: u64, source: NodeId) -> WalkRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::from(source.0));
    rng
}
