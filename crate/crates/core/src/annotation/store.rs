use super::{AnnotationProject, Event, Outcome, ProjectSpec};
use crate::{Error, Result};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

const SPEC_FILE: &str = "project.json";
const LOG_FILE: &str = "log.jsonl";

/// Directory of projects, one subdirectory each with `project.json` and an append-only `log.jsonl`.
#[derive(Clone, Debug)]
pub struct ProjectStore {
    root: PathBuf,
}

impl ProjectStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(ProjectStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Persist a fresh project. Fails if the id is taken.
    pub fn create(&self, project: &AnnotationProject) -> Result<()> {
        let dir = self.dir(project.id());
        if dir.join(SPEC_FILE).exists() {
            return Err(Error::duplicate("project", project.id()));
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let tmp = dir.join(format!("{SPEC_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(project.spec())?).map_err(|e| Error::io(&tmp, e))?;
        let log = dir.join(LOG_FILE);
        let mut file = File::create(&log).map_err(|e| Error::io(&log, e))?;
        for event in project.log() {
            append_line(&mut file, event, &log)?;
        }
        fs::rename(&tmp, dir.join(SPEC_FILE)).map_err(|e| Error::io(&dir, e))?;
        Ok(())
    }

    /// Validate an event, append it durably, then apply it.
    pub fn execute(&self, project: &mut AnnotationProject, event: Event) -> Result<Outcome> {
        project.validate(&event)?;
        let path = self.dir(project.id()).join(LOG_FILE);
        let mut file = OpenOptions::new().append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        append_line(&mut file, &event, &path)?;
        project.execute(event)
    }

    pub fn load(&self, id: &str) -> Result<AnnotationProject> {
        let dir = self.dir(id);
        let spec_path = dir.join(SPEC_FILE);
        let spec: ProjectSpec =
            serde_json::from_slice(&fs::read(&spec_path).map_err(|e| Error::io(&spec_path, e))?)?;
        let log_path = dir.join(LOG_FILE);
        let text = fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let mut events = Vec::new();
        let mut lines = text.split_inclusive('\n').enumerate().peekable();
        while let Some((i, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Event>(line) {
                Ok(e) => events.push(e),
                // an unterminated last line is a write interrupted before acknowledgment
                Err(_) if lines.peek().is_none() && !line.ends_with('\n') => {
                    let keep = text.len() - line.len();
                    let file = OpenOptions::new().write(true).open(&log_path).map_err(|e| Error::io(&log_path, e))?;
                    file.set_len(keep as u64).map_err(|e| Error::io(&log_path, e))?;
                }
                Err(e) => {
                    return Err(Error::Parse { path: log_path, line: i + 1, message: e.to_string() });
                }
            }
        }
        AnnotationProject::replay(spec, events)
    }

    /// Load every project under the root, sorted by id.
    pub fn load_all(&self) -> Result<Vec<AnnotationProject>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))? {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            if entry.path().join(SPEC_FILE).is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        ids.iter().map(|id| self.load(id)).collect()
    }
}

fn append_line(file: &mut File, event: &Event, path: &Path) -> Result<()> {
    let mut line = serde_json::to_vec(event)?;
    line.push(b'\n');
    file.write_all(&line).map_err(|e| Error::io(path, e))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}
