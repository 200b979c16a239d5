//! Client-side environment adapter: the remote simulator behind the same
//! trait as the built-in one.

use super::{read_message, write_message, BridgeError, WireMessage, PROTOCOL_VERSION};
use crate::env::{ActionCmd, EnvError, StepOutcome, VehicleState};
use crate::task::Environment;
use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};

/// Environment handle speaking the bridge protocol over one TCP connection.
pub struct RemoteEnv {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    action_bound: f64,
}

impl RemoteEnv {
    /// Connects and validates the `hello` + `spec` greeting.
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, BridgeError> {
        let stream = TcpStream::connect(addr)?;
        let writer = stream.try_clone()?;
        let mut reader = BufReader::new(stream);

        match read_message(&mut reader)? {
            WireMessage::Hello { version } => {
                if version != PROTOCOL_VERSION {
                    return Err(BridgeError::Handshake(format!(
                        "server speaks protocol version '{version}', supported '{PROTOCOL_VERSION}'"
                    )));
                }
            }
            other => {
                return Err(BridgeError::Handshake(format!(
                    "expected hello, got {other:?}"
                )))
            }
        }
        let action_bound = match read_message(&mut reader)? {
            WireMessage::Spec {
                state_dim,
                action_dim,
                action_bound,
            } => {
                if state_dim != 6 || action_dim != 2 {
                    return Err(BridgeError::Handshake(format!(
                        "unsupported dimensions: state {state_dim}, action {action_dim}"
                    )));
                }
                action_bound
            }
            other => {
                return Err(BridgeError::Handshake(format!(
                    "expected spec, got {other:?}"
                )))
            }
        };

        Ok(Self {
            reader,
            writer,
            action_bound,
        })
    }

    fn request(&mut self, msg: &WireMessage) -> Result<WireMessage, BridgeError> {
        write_message(&mut self.writer, msg)?;
        read_message(&mut self.reader)
    }
}

impl Environment for RemoteEnv {
    fn reset(&mut self, seed: Option<u64>) -> Result<VehicleState, EnvError> {
        match self
            .request(&WireMessage::Reset { seed })
            .map_err(|e| EnvError::Remote(e.to_string()))?
        {
            WireMessage::Obs { state } => Ok(VehicleState::from_observation(state)),
            WireMessage::Error { message } => Err(EnvError::Remote(message)),
            other => Err(EnvError::Remote(format!("expected obs, got {other:?}"))),
        }
    }

    fn step(&mut self, cmd: ActionCmd) -> Result<StepOutcome, EnvError> {
        match self
            .request(&WireMessage::Step {
                action: [cmd.ax, cmd.ay],
            })
            .map_err(|e| EnvError::Remote(e.to_string()))?
        {
            WireMessage::Transition {
                state,
                reward,
                done,
                termination,
                zone,
            } => Ok(StepOutcome {
                next_state: VehicleState::from_observation(state),
                reward,
                done,
                termination,
                zone,
            }),
            WireMessage::Error { message } => Err(EnvError::Remote(message)),
            other => Err(EnvError::Remote(format!(
                "expected transition, got {other:?}"
            ))),
        }
    }

    fn action_bound(&self) -> f64 {
        self.action_bound
    }
}

impl Drop for RemoteEnv {
    fn drop(&mut self) {
        let _ = write_message(&mut self.writer, &WireMessage::Close);
    }
}
