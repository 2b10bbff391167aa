//! Session statistics, observer recording, offline spool and upload.

pub mod flush;
pub mod observer;
pub mod spool;
pub mod stats;

pub use flush::{flush, resolve_endpoint, COLLECT_URL_ENV, SESSIONS_PATH, Clock, FlushOutcome, FlushResult, HttpTransport, RetryPolicy, SystemClock, Transport};
pub use observer::{build_observer_program, ObservedEvent, RecordBuffer};
pub use spool::{SpoolEntry, SpoolError, SpoolStore};
pub use stats::{aggregate, derive_session_id, Aggregates, FingerAggregate, GameAggregate, PauseAggregate, SessionStats};
