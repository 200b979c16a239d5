//! Environment interface over TCP: newline-delimited JSON messages.
//!
//! The server exposes an environment per connection; the client wraps the
//! wire back into the [`crate::task::Environment`] trait, so a training loop
//! cannot tell a remote simulator from the built-in one. The format is
//! line-oriented and human-readable on purpose — any runtime that can speak
//! sockets and JSON can implement either side.

use crate::env::{LandingZone, Termination};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

mod client;
mod server;

pub use client::RemoteEnv;
pub use server::{serve, BridgeServer, EnvFactory};

pub const PROTOCOL_VERSION: &str = "1";
pub const DEFAULT_PORT: u16 = 7460;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("connection closed")]
    Closed,
}

/// One protocol message; exactly one JSON object per line.
///
/// After the server's `hello` + `spec` greeting, requests (`reset`, `step`,
/// `close`) and replies (`obs`, `transition`, `error`) strictly alternate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        version: String,
    },
    Spec {
        state_dim: usize,
        action_dim: usize,
        action_bound: f64,
    },
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Obs {
        state: [f64; 6],
    },
    Step {
        action: [f64; 2],
    },
    Transition {
        state: [f64; 6],
        reward: f64,
        done: bool,
        termination: Termination,
        zone: Option<LandingZone>,
    },
    Close,
    Error {
        message: String,
    },
}

pub(crate) fn write_message<W: Write>(w: &mut W, msg: &WireMessage) -> Result<(), BridgeError> {
    let mut line = serde_json::to_string(msg).map_err(|e| BridgeError::Malformed(e.to_string()))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub(crate) fn read_message<R: BufRead>(r: &mut R) -> Result<WireMessage, BridgeError> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(BridgeError::Closed);
    }
    parse_message(&line)
}

pub(crate) fn parse_message(line: &str) -> Result<WireMessage, BridgeError> {
    serde_json::from_str(line.trim_end()).map_err(|e| BridgeError::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn messages_round_trip_through_json_lines() {
        let messages = vec![
            WireMessage::Hello {
                version: PROTOCOL_VERSION.into(),
            },
            WireMessage::Spec {
                state_dim: 6,
                action_dim: 2,
                action_bound: 1.0,
            },
            WireMessage::Reset { seed: Some(7) },
            WireMessage::Reset { seed: None },
            WireMessage::Step {
                action: [0.25, -1.0],
            },
            WireMessage::Transition {
                state: [0.1, 0.2, 0.3, -0.4, 0.5, -0.6],
                reward: -12.75,
                done: true,
                termination: Termination::Landed,
                zone: Some(LandingZone::Red),
            },
            WireMessage::Close,
            WireMessage::Error {
                message: "nope".into(),
            },
        ];
        for msg in messages {
            let mut buf = Vec::new();
            write_message(&mut buf, &msg).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.ends_with('\n') && text.matches('\n').count() == 1);
            let parsed = read_message(&mut &buf[..]).unwrap();
            assert_eq!(parsed, msg);
        }
    }

    #[test]
    fn garbage_lines_are_malformed() {
        assert!(matches!(
            parse_message("xyz"),
            Err(BridgeError::Malformed(_))
        ));
        assert!(matches!(
            parse_message("{\"type\":\"warp\"}"),
            Err(BridgeError::Malformed(_))
        ));
    }

    proptest! {
        /// Decimal serialization must round-trip every finite f64 exactly.
        #[test]
        fn observation_payloads_survive_the_wire_bit_exactly(
            state in prop::array::uniform6(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO),
            reward in prop::num::f64::NORMAL,
        ) {
            let msg = WireMessage::Transition {
                state,
                reward,
                done: false,
                termination: Termination::Running,
                zone: None,
            };
            let mut buf = Vec::new();
            write_message(&mut buf, &msg).unwrap();
            let parsed = read_message(&mut &buf[..]).unwrap();
            if let WireMessage::Transition { state: s2, reward: r2, .. } = parsed {
                for (a, b) in state.iter().zip(&s2) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
                prop_assert_eq!(reward.to_bits(), r2.to_bits());
            } else {
                prop_assert!(false, "wrong variant");
            }
        }
    }
}
