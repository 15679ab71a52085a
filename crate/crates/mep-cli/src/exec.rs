//! Rayon-backed generation executor.

use mep::{GenerationExecutor, Subpopulation};
use rayon::prelude::*;

/// Evolves subpopulations on the current rayon pool. Results are identical
/// to sequential execution because every subpopulation owns its generator
/// and the engine synchronizes at generation boundaries.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl GenerationExecutor for RayonExecutor {
    fn run_generation(
        &self,
        subpops: &mut [Subpopulation],
        step: &(dyn Fn(&mut Subpopulation) + Sync),
    ) {
        subpops.par_iter_mut().for_each(step);
    }
}
