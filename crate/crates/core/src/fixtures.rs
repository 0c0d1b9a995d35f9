//! Bundled reference channels.
//!
//! Three fixed scalar interference channels with known reference operating
//! points, shipped as versioned JSON documents inside the crate. They drive
//! the reproduction experiments of the CLI and the acceptance tests:
//!
//! - [`four_user_weak`]: four users with weak cross gains (direct gains
//!   around 0.4-0.5, cross gains one to two orders of magnitude below).
//! - [`four_user_strong`]: the same channel with every cross gain scaled
//!   by 10, which slows the global solver down markedly.
//! - [`three_user`]: three users with cross gains strong enough that the
//!   optimal operating point silences one user entirely.
//!
//! All three ship with noise variance 0.1 per receiver, power budgets of 3,
//! and unit rate weights; use [`Channel::with_noise`] to override the noise
//! floor. Reference values for the expected outcomes live with the tests
//! and the experiment reports that consume these fixtures.

use crate::channel::Channel;

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

fn parse(name: &str, json: &str) -> Channel {
    Channel::from_json_str(json)
        .unwrap_or_else(|e| panic!("bundled fixture {name} must parse: {e}"))
}

/// Four-user channel with weak cross gains.
pub fn four_user_weak() -> Channel {
    parse("four_user_weak", FOUR_USER_WEAK_JSON)
}

/// Four-user channel with all cross gains scaled by 10.
pub fn four_user_strong() -> Channel {
    parse("four_user_strong", FOUR_USER_STRONG_JSON)
}

/// Three-user channel with strong cross gains and no rate floors.
pub fn three_user() -> Channel {
    parse("three_user", THREE_USER_JSON)
}

/// Raw JSON for the weak four-user fixture (stable CLI input format).
pub const FOUR_USER_WEAK_JSON: &str = include_str!("../fixtures/four_user_weak.json");

/// Raw JSON for the strong four-user fixture.
pub const FOUR_USER_STRONG_JSON: &str = include_str!("../fixtures/four_user_strong.json");

/// Raw JSON for the three-user fixture.
pub const THREE_USER_JSON: &str = include_str!("../fixtures/three_user.json");

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
