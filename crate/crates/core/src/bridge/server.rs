//! Bridge server: one environment instance per connection.

use super::{parse_message, write_message, BridgeError, WireMessage, PROTOCOL_VERSION};
use crate::env::ActionCmd;
use crate::task::Environment;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

/// Builds a fresh environment for each incoming connection.
pub type EnvFactory = Arc<dyn Fn() -> Box<dyn Environment + Send> + Send + Sync>;

/// Serves environments forever on `addr`; returns only on listener errors.
pub fn serve(factory: EnvFactory, addr: impl ToSocketAddrs) -> Result<(), BridgeError> {
    let listener = TcpListener::bind(addr)?;
    for stream in listener.incoming() {
        let stream = stream?;
        let factory = factory.clone();
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(err) = handle_connection(stream, factory) {
                if !matches!(err, BridgeError::Closed) {
                    eprintln!("bridge: connection {peer:?} ended: {err}");
                }
            }
        });
    }
    Ok(())
}

/// A server running on a background thread; used by tests and embedding code.
pub struct BridgeServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl BridgeServer {
    /// Binds (port 0 picks a free port) and starts accepting in the
    /// background.
    pub fn spawn(factory: EnvFactory, addr: impl ToSocketAddrs) -> Result<Self, BridgeError> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = stop.clone();
        let accept_thread = std::thread::spawn(move || {
            while !stop_flag.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let factory = factory.clone();
                        std::thread::spawn(move || {
                            let _ = handle_connection(stream, factory);
                        });
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Self {
            addr,
            stop,
            accept_thread: Some(accept_thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for BridgeServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

fn handle_connection(stream: TcpStream, factory: EnvFactory) -> Result<(), BridgeError> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut env = factory();

    write_message(
        &mut writer,
        &WireMessage::Hello {
            version: PROTOCOL_VERSION.to_string(),
        },
    )?;
    write_message(
        &mut writer,
        &WireMessage::Spec {
            state_dim: 6,
            action_dim: 2,
            action_bound: env.action_bound(),
        },
    )?;

    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(()); // client hung up
        }
        let msg = match parse_message(&line) {
            Ok(msg) => msg,
            Err(err) => {
                // protocol violation: report and drop the connection
                let _ = write_message(
                    &mut writer,
                    &WireMessage::Error {
                        message: format!("malformed message: {err}"),
                    },
                );
                return Err(err);
            }
        };
        match msg {
            WireMessage::Reset { seed } => match env.reset(seed) {
                Ok(state) => write_message(
                    &mut writer,
                    &WireMessage::Obs {
                        state: state.observation(),
                    },
                )?,
                Err(err) => reply_error(&mut writer, &err.to_string())?,
            },
            WireMessage::Step { action } => {
                match env.step(ActionCmd::new(action[0], action[1])) {
                    Ok(out) => write_message(
                        &mut writer,
                        &WireMessage::Transition {
                            state: out.next_state.observation(),
                            reward: out.reward,
                            done: out.done,
                            termination: out.termination,
                            zone: out.zone,
                        },
                    )?,
                    // lifecycle errors keep the connection usable: the client
                    // may still reset
                    Err(err) => reply_error(&mut writer, &err.to_string())?,
                }
            }
            WireMessage::Close => {
                return Ok(());
            }
            other => {
                reply_error(
                    &mut writer,
                    &format!("unexpected message type {:?} from client", kind_of(&other)),
                )?;
            }
        }
    }
}

fn reply_error<W: Write>(w: &mut W, message: &str) -> Result<(), BridgeError> {
    write_message(
        w,
        &WireMessage::Error {
            message: message.to_string(),
        },
    )
}

fn kind_of(msg: &WireMessage) -> &'static str {
    match msg {
        WireMessage::Hello { .. } => "hello",
        WireMessage::Spec { .. } => "spec",
        WireMessage::Reset { .. } => "reset",
        WireMessage::Obs { .. } => "obs",
        WireMessage::Step { .. } => "step",
        WireMessage::Transition { .. } => "transition",
        WireMessage::Close => "close",
        WireMessage::Error { .. } => "error",
    }
}
