//! Ghost-cell exchange over the rank neighbor graph.
//!
//! [`build_topology`] finds a block's face, edge and corner neighbors,
//! [`build_schedule`] turns it into per-neighbor strip regions for one field
//! shape, and the exchange functions move those strips through a
//! [`Communicator`]. Non-blocking exchanges snapshot the send strips at
//! [`exchange_start`], so a start/finish pair always equals a blocking call
//! issued at the start.

mod exchange;
mod schedule;
mod socket;
mod topology;
mod transport;

pub use exchange::{
    class_bytes, exchange_blocking, exchange_finish, exchange_start, Communicator, ExchangeHandle,
    ExchangeStats,
};
pub use schedule::{build_schedule, CommSchedule, FieldShape, NeighborMessage, Region};
pub use socket::SocketTransport;
pub use topology::{build_topology, ClassWeights, Neighbor, NeighborClass, NeighborTopology};
pub use transport::{in_process_endpoints, InProcessTransport, Transport, TransportKind};

/// Run `work` on `size` in-process rank-workers, one thread each, and
/// collect the results in rank order.
pub fn run_in_process<T, F>(size: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Communicator) -> T + Sync,
{
    run_on_endpoints(in_process_endpoints(size), work)
}

/// Like [`run_in_process`] with caller-prepared endpoints (for example with
/// injected delivery delays).
pub fn run_on_endpoints<T, F>(endpoints: Vec<InProcessTransport>, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Communicator) -> T + Sync,
{
    let work = &work;
    std::thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .enumerate()
            .map(|(rank, ep)| {
                std::thread::Builder::new()
                    .name(format!("rank-{rank}"))
                    .spawn_scoped(s, move || work(rank, Communicator::new(Box::new(ep))))
                    .expect("spawn rank worker")
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rank worker panicked")).collect()
    })
}
