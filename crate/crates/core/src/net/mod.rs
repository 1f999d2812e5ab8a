//! Networked deployment: wire frames, the worker service and the dispatcher.
//!
//! The dispatcher shares [`crate::sim::locate_and_decode`] with the
//! simulator, so both produce identical numbers from identical inputs.

pub mod dispatch;
pub mod frame;
pub mod local;
pub mod worker;

pub use dispatch::{dispatch, DispatchOutcome, DispatchPolicy};
pub use frame::{ErrorCode, Frame, MsgType};
pub use local::LocalCluster;
pub use worker::{serve_worker, spawn_worker, FaultInjection, WorkerHandle};
