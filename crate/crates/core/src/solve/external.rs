//! Driver for an external ASP solver speaking the clingo text interface.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{Interpretation, SolveError};
use crate::lang::parse_ground_atoms;

use super::GroundAtom;

/// Environment variable that overrides the solver command.
pub const SOLVER_ENV: &str = "SKASP_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program and arguments; the meta-program is written to standard input.
    pub command: Vec<String>,
    pub timeout: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { command: vec!["clingo".into(), "--models=0".into()], timeout: None }
    }
}

impl SolverConfig {
    /// The default command, or the whitespace-separated value of `SKASP_SOLVER`.
    pub fn from_env() -> Self {
        match std::env::var(SOLVER_ENV) {
            Ok(v) if !v.trim().is_empty() => {
                SolverConfig { command: v.split_whitespace().map(String::from).collect(), timeout: None }
            }
            _ => SolverConfig::default(),
        }
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.timeout = timeout;
        self
    }

    /// True if the command can be started at all.
    pub fn is_available(&self) -> bool {
        let Some(program) = self.command.first() else { return false };
        Command::new(program)
            .arg("--version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    }
}

/// Run the solver on `program` and return every model in emission order.
pub fn external_solve(program: &str, config: &SolverConfig) -> Result<Vec<Interpretation>, SolveError> {
    let shown = config.command.join(" ");
    let Some((bin, args)) = config.command.split_first() else {
        return Err(SolveError::SolverNotFound(shown, "empty command".into()));
    };
    let mut child = Command::new(bin)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SolveError::SolverNotFound(shown.clone(), e.to_string()))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = program.to_string();
    let writer = std::thread::spawn(move || {
        // A solver that exits early closes the pipe; its status tells the story.
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        stderr.read_to_string(&mut s).map(|_| s)
    });

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| SolveError::Io(e.to_string()))? {
            break status;
        }
        if let Some(t) = config.timeout {
            if start.elapsed() >= t {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SolveError::Timeout(t.as_secs()));
            }
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let _ = writer.join();
    let stdout = out_reader.join().expect("reader thread").map_err(|e| SolveError::Io(e.to_string()))?;
    let stderr = err_reader.join().expect("reader thread").map_err(|e| SolveError::Io(e.to_string()))?;

    // clingo reports SAT/UNSAT/exhausted through the bits of codes 10, 20 and 30.
    let code = status.code();
    let ok_code = matches!(code, Some(0 | 10 | 20 | 30));
    if !ok_code || stderr.contains("*** ERROR") {
        let message = stderr.lines().filter(|l| !l.trim().is_empty()).collect::<Vec<_>>().join("\n");
        return Err(SolveError::SolverFailed {
            status: code.map_or_else(|| "killed".to_string(), |c| format!("exit {c}")),
            message,
        });
    }
    parse_models(&stdout)
}

/// Parse the lines following each `Answer: N` header.
pub fn parse_models(output: &str) -> Result<Vec<Interpretation>, SolveError> {
    let mut models = Vec::new();
    let mut lines = output.lines();
    while let Some(line) = lines.next() {
        if !line.starts_with("Answer:") {
            continue;
        }
        let body = lines.next().unwrap_or("");
        let mut model = Interpretation::new();
        if !body.trim().is_empty() {
            let atoms = parse_ground_atoms(body).map_err(|_| SolveError::UnparseableModel(body.to_string()))?;
            for a in &atoms {
                model.insert(GroundAtom::from_atom(a).ok_or_else(|| SolveError::UnparseableModel(body.to_string()))?);
            }
        }
        models.push(model);
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_answers() {
        let out = "clingo version 5\nReading from stdin\nSolving...\nAnswer: 1\np(1) q(a,-2) r\nAnswer: 2\n\nSATISFIABLE\n";
        let ms = parse_models(out).unwrap();
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].len(), 3);
        assert!(ms[1].is_empty());
        assert!(matches!(parse_models("Answer: 1\np(X)\n"), Err(SolveError::UnparseableModel(_))));
    }

    #[test]
    fn missing_solver() {
        let cfg = SolverConfig { command: vec!["/nonexistent/solver-binary".into()], timeout: None };
        assert!(!cfg.is_available());
        assert!(matches!(external_solve("a.", &cfg), Err(SolveError::SolverNotFound(..))));
    }
}
