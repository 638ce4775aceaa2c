//! Experiment drivers: closed-form checks, the guarantee grid, capacity
//! locked under attack, success rates, game sweeps and scalability.

pub mod capacity;
pub mod claims;
pub mod grid;
pub mod scalability;
pub mod success;
pub mod sweep;
pub mod workload;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use capacity::{run_capacity_experiment, CapacityConfig, CapacityReport, CapacityRow};
pub use claims::{
    check_gpzeta, check_htlcgp, loss_oracle, loss_percent_gpzeta, loss_percent_gpzeta_rebased,
    loss_percent_htlcgp, ClaimRow, GpZetaVariant,
};
pub use grid::{guarantee_grid, GuaranteeRow, GUARANTEE_GRID};
pub use scalability::{run_scalability, ScalabilityConfig, ScalabilityRow};
pub use success::{run_success_rate, SuccessConfig, SuccessRow};
pub use sweep::{decision_flips, run_game_sweep, Flip, SweepConfig, SweepRow};
pub use workload::{random_requests, random_walks, Request, Walk};

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Maps `f` over `items` on up to `jobs` threads, keeping input order.
pub fn par_map<T, U, F>(items: &[T], jobs: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect()
}

/// Serialises rows as CSV with a header line.
pub fn to_csv<T: serde::Serialize>(rows: &[T]) -> crate::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<u64> = (0..100).collect();
        let serial = par_map(&v, 1, |x| x * x);
        assert_eq!(par_map(&v, 4, |x| x * x), serial);
    }
}
