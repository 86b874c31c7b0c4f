use std::io::{self, Read};
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Exited(Option<i32>),
    TimedOut,
    Cancelled,
}

#[derive(Debug)]
pub struct RawRun {
    pub termination: Termination,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

/// Runs `cmd` in its own process group until it exits, `deadline` passes or
/// `cancel` is raised. The whole group is killed and the child reaped before
/// returning.
pub fn run_bounded(mut cmd: Command, deadline: Instant, cancel: &AtomicBool) -> io::Result<RawRun> {
    let start = Instant::now();
    cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).process_group(0);
    let mut child = cmd.spawn()?;
    let out_reader = spawn_reader(child.stdout.take());
    let err_reader = spawn_reader(child.stderr.take());

    let termination = loop {
        if let Some(status) = child.try_wait()? {
            break Termination::Exited(exit_code(status));
        }
        if cancel.load(Ordering::SeqCst) {
            kill_and_reap(&mut child)?;
            break Termination::Cancelled;
        }
        if Instant::now() >= deadline {
            kill_and_reap(&mut child)?;
            break Termination::TimedOut;
        }
        thread::sleep(POLL);
    };
    // Stragglers in the group would keep the pipes open.
    kill_group(&child);

    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(RawRun { termination, stdout, stderr, elapsed: start.elapsed() })
}

fn spawn_reader<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn exit_code(status: ExitStatus) -> Option<i32> {
    status.code()
}

fn kill_group(child: &Child) {
    // The child leads its own group, so its pid is the group id.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
}

fn kill_and_reap(child: &mut Child) -> io::Result<()> {
    kill_group(child);
    let _ = child.kill();
    child.wait().map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> Command {
        let mut c = Command::new("sh");
        c.arg("-c").arg(script);
        c
    }

    #[test]
    fn captures_output_and_code() {
        let never = AtomicBool::new(false);
        let run =
            run_bounded(sh("echo hi; echo err >&2; exit 3"), Instant::now() + Duration::from_secs(10), &never).unwrap();
        assert_eq!(run.termination, Termination::Exited(Some(3)));
        assert_eq!(run.stdout, "hi\n");
        assert_eq!(run.stderr, "err\n");
    }

    #[test]
    fn deadline_kills_process_tree() {
        let never = AtomicBool::new(false);
        let t = Instant::now();
        let run =
            run_bounded(sh("sleep 30 & sleep 30; echo done"), Instant::now() + Duration::from_millis(200), &never)
                .unwrap();
        assert_eq!(run.termination, Termination::TimedOut);
        assert!(t.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn cancel_flag_stops_run() {
        let cancel = AtomicBool::new(true);
        let run = run_bounded(sh("sleep 30"), Instant::now() + Duration::from_secs(30), &cancel).unwrap();
        assert_eq!(run.termination, Termination::Cancelled);
    }
}
