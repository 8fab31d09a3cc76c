use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::Server;

/// Session name used for the stdio transport.
pub const STDIO_SESSION: &str = "stdio";

const ACCEPT_POLL: Duration = Duration::from_millis(50);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Stdio,
    Tcp { port: u16 },
}

/// Answers each non-blank request line with exactly one response line until
/// EOF or `shutdown` is observed between lines.
pub fn serve_lines<R: BufRead, W: Write>(
    server: &Server,
    reader: R,
    mut writer: W,
    session: &str,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    for line in reader.lines() {
        if shutdown.load(Ordering::SeqCst) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(writer, "{}", server.handle_line(&line, session))?;
        writer.flush()?;
    }
    Ok(())
}

fn handle_connection(server: &Server, stream: TcpStream, session: String, shutdown: &AtomicBool) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(server, reader, stream, &session, shutdown)
}

/// Accepts connections until `shutdown` is set; each connection is its own
/// session served on its own thread.
pub fn serve_listener(server: Arc<Server>, listener: TcpListener, shutdown: Arc<AtomicBool>) -> io::Result<()> {
    listener.set_nonblocking(true)?;
    let mut workers = Vec::new();
    let mut next = 0u64;
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                next += 1;
                let session = format!("tcp-{next}-{peer}");
                let server = Arc::clone(&server);
                let shutdown = Arc::clone(&shutdown);
                workers.push(thread::spawn(move || {
                    let _ = handle_connection(&server, stream, session, &shutdown);
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(e) => return Err(e),
        }
        workers.retain(|w| !w.is_finished());
    }
    server.audit().flush();
    Ok(())
}

pub fn serve(server: Arc<Server>, transport: Transport, shutdown: Arc<AtomicBool>) -> io::Result<()> {
    let result = match transport {
        Transport::Stdio => {
            let stdin = io::stdin();
            serve_lines(&server, stdin.lock(), io::stdout().lock(), STDIO_SESSION, &shutdown)
        }
        Transport::Tcp { port } => serve_listener(Arc::clone(&server), TcpListener::bind(("127.0.0.1", port))?, shutdown),
    };
    server.audit().flush();
    result
}
