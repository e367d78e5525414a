//! Parallel batch simulation.

use navfield_core::simulate::{simulate, BatchSummary, SimConfig, Trajectory};
use navfield_core::{NavSpec, SimError, Vec3, Workspace};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
#[error("cannot start worker threads: {0}")]
pub struct PoolError(#[from] rayon::ThreadPoolBuildError);

/// Runs every start on its own task. Results come back in start order and
/// do not depend on the thread count.
///
/// `threads` of `None` or `Some(0)` uses rayon's default pool size.
pub fn run_batch(
    spec: &NavSpec,
    ws: &Workspace,
    cfg: &SimConfig,
    starts: &[Vec3],
    threads: Option<usize>,
) -> Result<(Vec<Result<Trajectory, SimError>>, BatchSummary), PoolError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    let results: Vec<_> = pool.install(|| {
        starts
            .par_iter()
            .map(|&x| simulate(spec, ws, cfg, x))
            .collect()
    });
    let summary = BatchSummary::from_results(&results);
    Ok((results, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use navfield_core::simulate::simulate_batch;
    use navfield_core::{Obstacle, Potential};

    #[test]
    fn parallel_batch_matches_serial() {
        let ws = Workspace::new(5.0, vec![Obstacle::sphere(Vec3::new(2.0, 0.0, 0.0), 0.6).unwrap().into()]).unwrap();
        let spec = NavSpec::new(Potential::Psi, 4, Vec3::ZERO).unwrap();
        let cfg = SimConfig {
            t_max: 60.0,
            ..SimConfig::default()
        };
        let starts = [
            Vec3::new(4.0, 0.5, 0.0),
            Vec3::new(-3.0, 1.0, 1.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 3.0, -2.0),
        ];
        let (serial, s1) = simulate_batch(&spec, &ws, &cfg, &starts);
        for threads in [Some(1), Some(3), None] {
            let (par, s2) = run_batch(&spec, &ws, &cfg, &starts, threads).unwrap();
            assert_eq!(par, serial);
            assert_eq!(s2, s1);
        }
        assert_eq!(s1.invalid_start, 1);
    }
}
