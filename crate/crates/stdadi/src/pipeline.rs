//! Sequence-level featurization: skeleton in, channel-augmented tensor
//! out.

use crate::error::Result;
use crate::invariant::{augment_channels, stdadi8_at, InvariantConfig};
use crate::skeleton::SkeletonSequence;
use crate::spline::{fit_and_differentiate, JointTrajectory};
use crate::tensor::FeatureTensor;
use ndarray::Array4;
use rayon::prelude::*;

/// Featurizes every (body, joint) trajectory of the sequence and
/// concatenates the squashed invariants to the coordinate channels.
///
/// Bodies that never appear stay zero in every channel. Trajectories are
/// taken over all frames in frame units (dt = 1), absent frames
/// contributing their zero fill — downstream consumers expect dense
/// tensors, so gaps are not interpolated.
///
/// Work is distributed over (body, joint) pairs; results are written
/// back in a fixed order, so the output is identical no matter how many
/// threads run.
pub fn featurize_sequence(
    seq: &SkeletonSequence,
    config: &InvariantConfig<f64>,
) -> Result<FeatureTensor> {
    let frames = seq.frame_count();
    let joints = seq.joint_count();
    let bodies = seq.body_slots();

    let mut tasks = Vec::new();
    for b in 0..bodies {
        if !seq.body_used(b) {
            continue;
        }
        for j in 0..joints {
            tasks.push((b, j));
        }
    }

    type TrackValues = ((usize, usize), Vec<[f64; 8]>);
    let per_track: Vec<TrackValues> = tasks
        .into_par_iter()
        .map(|(b, j)| {
            let traj = JointTrajectory::with_unit_dt(seq.joint_positions(b, j))?;
            let stack = fit_and_differentiate(&traj)?;
            let values = stack
                .frames()
                .iter()
                .map(|cols| stdadi8_at(cols, config).0)
                .collect();
            Ok(((b, j), values))
        })
        .collect::<Result<_>>()?;

    let mut grid = Array4::<f64>::zeros((frames, joints, bodies, 8));
    for ((b, j), values) in per_track {
        for (f, v) in values.into_iter().enumerate() {
            for (n, value) in v.into_iter().enumerate() {
                grid[[f, j, b, n]] = value;
            }
        }
    }
    augment_channels(seq, grid.view(), config)
}
