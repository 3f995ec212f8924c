//! Append-only persistence: one document per model, one JSON line per session
//! event. Replaying the logs rebuilds every session.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use idvoi::ModelDocument;
use serde::{Deserialize, Serialize};

use super::session::Step;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogLine {
    Created { model_id: String, created: u64 },
    Step(Step),
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

pub struct StoredSession {
    pub id: String,
    pub model_id: String,
    pub created: u64,
    pub steps: Vec<Step>,
}

impl Store {
    pub fn open(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root.join("models"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Store {
            root: root.to_path_buf(),
        })
    }

    pub fn save_model(&self, id: &str, doc: &ModelDocument) -> anyhow::Result<()> {
        let path = self.root.join("models").join(format!("{id}.json"));
        fs::write(path, serde_json::to_string(doc)?)?;
        Ok(())
    }

    pub fn append(&self, session: &str, line: &LogLine) -> anyhow::Result<()> {
        let path = self.root.join("sessions").join(format!("{session}.jsonl"));
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(file, "{}", serde_json::to_string(line)?)?;
        Ok(())
    }

    pub fn models(&self) -> anyhow::Result<Vec<(String, ModelDocument)>> {
        let mut out = Vec::new();
        for (id, path) in entries(&self.root.join("models"), "json")? {
            let text = fs::read_to_string(&path)?;
            let doc = serde_json::from_str(&text)
                .with_context(|| format!("corrupt model file {}", path.display()))?;
            out.push((id, doc));
        }
        Ok(out)
    }

    pub fn sessions(&self) -> anyhow::Result<Vec<StoredSession>> {
        let mut out = Vec::new();
        for (id, path) in entries(&self.root.join("sessions"), "jsonl")? {
            let reader = BufReader::new(fs::File::open(&path)?);
            let mut lines = Vec::new();
            for line in reader.lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    lines.push(serde_json::from_str::<LogLine>(&line).with_context(|| {
                        format!("corrupt session log {}", path.display())
                    })?);
                }
            }
            let mut lines = lines.into_iter();
            let Some(LogLine::Created { model_id, created }) = lines.next() else {
                bail!("session log {} lacks its header", path.display());
            };
            let steps = lines
                .map(|l| match l {
                    LogLine::Step(s) => Ok(s),
                    LogLine::Created { .. } => bail!("duplicate header in {}", path.display()),
                })
                .collect::<anyhow::Result<_>>()?;
            out.push(StoredSession {
                id,
                model_id,
                created,
                steps,
            });
        }
        Ok(out)
    }
}

/// `(stem, path)` of every file with `extension`, sorted by name.
fn entries(dir: &Path, extension: &str) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(extension) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
