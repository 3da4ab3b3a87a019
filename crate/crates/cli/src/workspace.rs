//! Stage directories, stamps and the failure type shared by all commands.
//!
//! Each stage writes into its own subdirectory of the workspace root. A
//! finished stage holds a `stamp.json` with a digest over its settings, the
//! contents of its input files and the digests of the stages it read. A
//! stage is rebuilt in a scratch directory and swapped in only once it has
//! completed, so an interrupted run never leaves a half-written stage
//! behind a valid stamp.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bumped when artifact formats change, so old stamps stop matching.
const FORMAT: u32 = 1;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration. Exit code 1.
    Config(anyhow::Error),
    /// An upstream stage is absent or out of date. Exit code 2.
    Missing { stage: Stage, reason: String },
    /// Unreadable or invalid input data. Exit code 3.
    Data(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Missing { .. } => 2,
            Failure::Data(_) => 3,
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Failure::Config(anyhow::anyhow!("{message}"))
    }

    pub fn data<E: Into<anyhow::Error>>(e: E) -> Self {
        Failure::Data(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Missing { stage, reason } => write!(f, "stage `{stage}` {reason}"),
            Failure::Data(e) => write!(f, "data error: {e:#}"),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Attach a path to I/O-ish errors and class them as data errors.
pub trait DataContext<T> {
    fn data_at(self, path: &Path) -> Outcome<T>;
}

impl<T, E: fmt::Display> DataContext<T> for Result<T, E> {
    fn data_at(self, path: &Path) -> Outcome<T> {
        self.map_err(|e| Failure::Data(anyhow::anyhow!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Stats,
    Preprocess,
    Model,
    Assign,
    Embed,
    Diversity,
    Report,
}

impl Stage {
    pub fn dir_name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Stats => "stats",
            Stage::Preprocess => "preprocess",
            Stage::Model => "model",
            Stage::Assign => "assign",
            Stage::Embed => "embed",
            Stage::Diversity => "diversity",
            Stage::Report => "report",
        }
    }

    /// The command that produces this stage.
    pub fn command(self) -> &'static str {
        match self {
            Stage::Model => "fit` or `sweep",
            other => other.dir_name(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub command: String,
    pub format: u32,
    pub digest: String,
    /// Digests of the upstream stages this one was built from.
    pub upstream: BTreeMap<String, String>,
}

/// Everything a stage digest covers.
pub struct StageSpec<'a> {
    pub stage: Stage,
    pub command: &'a str,
    pub settings: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub upstream: Vec<(Stage, Stamp)>,
}

pub enum Ran {
    Built(String),
    UpToDate,
}

pub struct Workspace {
    root: PathBuf,
    force: bool,
}

impl Workspace {
    pub fn new(root: PathBuf, force: bool) -> Self {
        Workspace { root, force }
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.dir_name())
    }

    /// Paths from the configuration are taken relative to the workspace.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn stamp(&self, stage: Stage) -> Option<Stamp> {
        let text = fs::read_to_string(self.dir(stage).join("stamp.json")).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// The stamp of `stage`, provided it exists and still matches the
    /// stages it was built from.
    pub fn require(&self, stage: Stage) -> Outcome<Stamp> {
        let Some(stamp) = self.stamp(stage) else {
            return Err(Failure::Missing {
                stage,
                reason: format!("has not been run; run `{}` first", stage.command()),
            });
        };
        if stamp.format != FORMAT {
            return Err(Failure::Missing {
                stage,
                reason: format!("was written by another version; re-run `{}`", stage.command()),
            });
        }
        for (name, digest) in &stamp.upstream {
            let current = self.stamp_by_name(name).map(|s| s.digest);
            if current.as_deref() != Some(digest.as_str()) {
                return Err(Failure::Missing {
                    stage,
                    reason: format!("is out of date because `{name}` changed; re-run `{}`", stage.command()),
                });
            }
        }
        Ok(stamp)
    }

    /// Like [`Workspace::require`], but a stage that was never run is fine.
    pub fn optional(&self, stage: Stage) -> Outcome<Option<Stamp>> {
        if self.stamp(stage).is_none() {
            return Ok(None);
        }
        self.require(stage).map(Some)
    }

    fn stamp_by_name(&self, name: &str) -> Option<Stamp> {
        let text = fs::read_to_string(self.root.join(name).join("stamp.json")).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Runs `build` into a scratch directory unless the existing stage has
    /// the same digest. The scratch directory replaces the stage directory
    /// only after `build` succeeds.
    pub fn run<F>(&self, spec: StageSpec<'_>, build: F) -> Outcome<Ran>
    where
        F: FnOnce(&Path) -> Outcome<String>,
    {
        let digest = digest(&spec)?;
        let stamp = Stamp {
            stage: spec.stage.dir_name().into(),
            command: spec.command.into(),
            format: FORMAT,
            digest,
            upstream: spec
                .upstream
                .iter()
                .map(|(s, st)| (s.dir_name().to_string(), st.digest.clone()))
                .collect(),
        };
        if !self.force && self.stamp(spec.stage).as_ref() == Some(&stamp) && self.require(spec.stage).is_ok() {
            return Ok(Ran::UpToDate);
        }

        let target = self.dir(spec.stage);
        let scratch = self.root.join(format!(".{}.partial", spec.stage.dir_name()));
        if scratch.exists() {
            fs::remove_dir_all(&scratch).data_at(&scratch)?;
        }
        fs::create_dir_all(&scratch).data_at(&scratch)?;
        let summary = match build(&scratch) {
            Ok(s) => s,
            Err(e) => {
                let _ = fs::remove_dir_all(&scratch);
                return Err(e);
            }
        };
        write_json(&scratch.join("stamp.json"), &stamp)?;
        if target.exists() {
            fs::remove_dir_all(&target).data_at(&target)?;
        }
        fs::rename(&scratch, &target).data_at(&target)?;
        Ok(Ran::Built(summary))
    }
}

fn digest(spec: &StageSpec<'_>) -> Outcome<String> {
    let mut h = Sha256::new();
    h.update(format!("{}\0{}\0{FORMAT}\0", spec.stage.dir_name(), spec.command));
    h.update(serde_json::to_vec(&spec.settings).map_err(Failure::data)?);
    for path in &spec.inputs {
        h.update(b"\0input\0");
        h.update(file_digest(path)?);
    }
    let mut upstream: Vec<_> = spec.upstream.iter().map(|(s, st)| (s.dir_name(), &st.digest)).collect();
    upstream.sort();
    for (name, d) in upstream {
        h.update(format!("\0{name}={d}"));
    }
    Ok(hex::encode(h.finalize()))
}

fn file_digest(path: &Path) -> Outcome<[u8; 32]> {
    let mut file = fs::File::open(path).data_at(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).data_at(path)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().into())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    text.push('\n');
    fs::write(path, text).data_at(path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).data_at(path)?;
    serde_json::from_str(&text).data_at(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(settings: serde_json::Value) -> StageSpec<'static> {
        StageSpec {
            stage: Stage::Stats,
            command: "stats",
            settings,
            inputs: vec![],
            upstream: vec![],
        }
    }

    #[test]
    fn same_digest_is_a_no_op() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::new(dir.path().to_path_buf(), false);
        let mut runs = 0;
        for _ in 0..2 {
            ws.run(spec(serde_json::json!({"a": 1})), |_| {
                runs += 1;
                Ok(String::new())
            })
            .unwrap();
        }
        assert_eq!(runs, 1);
        ws.run(spec(serde_json::json!({"a": 2})), |_| {
            runs += 1;
            Ok(String::new())
        })
        .unwrap();
        assert_eq!(runs, 2);

        let forced = Workspace::new(dir.path().to_path_buf(), true);
        forced
            .run(spec(serde_json::json!({"a": 2})), |_| {
                runs += 1;
                Ok(String::new())
            })
            .unwrap();
        assert_eq!(runs, 3);
    }

    #[test]
    fn failed_build_keeps_previous_stage() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::new(dir.path().to_path_buf(), false);
        ws.run(spec(serde_json::json!(1)), |d| {
            fs::write(d.join("out.txt"), "first").unwrap();
            Ok(String::new())
        })
        .unwrap();
        let err = ws
            .run(spec(serde_json::json!(2)), |d| {
                fs::write(d.join("out.txt"), "second").unwrap();
                Err(Failure::config("boom"))
            })
            .err()
            .unwrap();
        assert_eq!(err.exit_code(), 1);
        assert_eq!(fs::read_to_string(ws.dir(Stage::Stats).join("out.txt")).unwrap(), "first");
        assert!(!dir.path().join(".stats.partial").exists());
    }

    #[test]
    fn stale_upstream_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::new(dir.path().to_path_buf(), false);
        assert!(matches!(ws.require(Stage::Ingest), Err(Failure::Missing { stage: Stage::Ingest, .. })));
        let ingest = |v| StageSpec {
            stage: Stage::Ingest,
            command: "ingest",
            settings: serde_json::json!(v),
            inputs: vec![],
            upstream: vec![],
        };
        ws.run(ingest(1), |_| Ok(String::new())).unwrap();
        let up = ws.require(Stage::Ingest).unwrap();
        ws.run(
            StageSpec { upstream: vec![(Stage::Ingest, up)], ..spec(serde_json::json!(0)) },
            |_| Ok(String::new()),
        )
        .unwrap();
        assert!(ws.require(Stage::Stats).is_ok());
        ws.run(ingest(2), |_| Ok(String::new())).unwrap();
        let err = ws.require(Stage::Stats).unwrap_err();
        assert!(err.to_string().contains("out of date"), "{err}");
    }
}
