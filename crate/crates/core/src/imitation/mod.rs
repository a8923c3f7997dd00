//! Visual imitation network: a CNN that places a hand marker or the robot's
//! end effector in one of 25 image regions.

mod augment;
mod dataset;
mod grid;
mod net;
mod train;

pub use augment::{
    augment, AugmentConfig, DEFAULT_BRIGHTNESS, DEFAULT_CONTRAST, DEFAULT_SALT_PEPPER,
};
pub use dataset::{
    build_dataset, random_pose_reaching, read_manifest, split_dataset, write_manifest,
    LabeledFrame, ManifestEntry, Subject,
};
pub use grid::{
    cell_of_pixel, cell_of_point, cell_size_px, decode_onehot, encode_onehot, GridCell, GRID,
    NUM_CELLS,
};
pub use net::{estimate, ImitationArch, ImitationCache, ImitationNet};
pub use train::{evaluate, train_imitation, EpochStats, TrainConfig, TrainLog};

use crate::armsim::Frame;
use crate::error::{Error, Result};
use crate::heuristic::Trajectory;

/// Estimated cell of every demonstration frame, in order.
pub fn build_demo_map(net: &ImitationNet, frames: &[Frame]) -> Result<Trajectory> {
    if frames.is_empty() {
        return Err(Error::Config("no demonstration frames".into()));
    }
    let cells = frames
        .iter()
        .map(|f| estimate(net, f))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(cells)
}
