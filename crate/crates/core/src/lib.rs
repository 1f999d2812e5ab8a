//! Coded prediction serving with Berrut rational codes.
//!
//! A batch of `K` queries is encoded into `N + 1` coded queries by evaluating
//! the Berrut rational interpolant through the queries (placed at Chebyshev
//! points of the first kind) at Chebyshev points of the second kind. Every
//! worker runs the same model on one coded query. The decoder interpolates the
//! returned coded predictions and evaluates the interpolant back at the
//! first-kind points, which yields approximate predictions for the original
//! queries from any sufficiently large subset of workers.
//!
//! Byzantine workers are located with a Berlekamp–Welch style rational fit
//! per class coordinate followed by a majority vote, and excluded before
//! decoding.
//!
//! Module map:
//!
//! - [`chebyshev`]: node families and barycentric basis evaluation.
//! - [`codec`]: [`CodingConfig`], encoding and decoding.
//! - [`locator`]: error location and exact rational recovery.
//! - [`predictor`]: the deployed-model abstraction and the weights file format.
//! - [`sim`]: deterministic cluster simulation and the replication baseline.
//! - [`net`]: wire protocol, worker service and dispatcher.

pub mod chebyshev;
pub mod codec;
mod error;
pub mod fixtures;
pub mod locator;
pub mod net;
pub mod predictor;
pub mod sim;

pub use codec::{BerrutCodec, CodedQuerySet, CodingConfig, PredictionVector, QueryBatch};
pub use error::{Error, Result};
pub use locator::{LocatorReport, Normalization};
pub use predictor::{Predictor, WeightsFile};
pub use sim::{AdversaryPlan, RoundResult, WorkerSpec};
