//! Directory-backed JSON store:
//!
//! ```text
//! <root>/skills.json
//! <root>/catalog.jsonl
//! <root>/models/fit_model.json   (optional)
//! <root>/users/<id>.json
//! ```
//!
//! Every write goes to a temporary file in the target directory and is then
//! renamed over the destination, so readers never see a partial file.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use skillrec_core::catalog::{Catalog, CatalogError};
use skillrec_core::fit_model::{FitModelError, RandomForestModel};
use skillrec_core::learner::LearnerProfile;
use skillrec_core::skill_mining::SkillRecord;
use thiserror::Error;

pub const SKILLS_FILE: &str = "skills.json";
pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const USERS_DIR: &str = "users";
pub const MODELS_DIR: &str = "models";
pub const FIT_MODEL_FILE: &str = "fit_model.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("{path}: {source}")]
    FitModel { path: PathBuf, source: FitModelError },
    #[error("store is inconsistent: {0}")]
    Integrity(String),
    #[error("invalid user id {0:?}")]
    InvalidUserId(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Everything needed to serve: loaded once at start-up.
#[derive(Debug, Clone)]
pub struct StoreSnapshot {
    pub skills: Vec<SkillRecord>,
    pub catalog: Catalog,
    pub fit_model: Option<RandomForestModel>,
    pub users: Vec<LearnerProfile>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens (and if needed creates) the directory layout under `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in [root.clone(), root.join(USERS_DIR), root.join(MODELS_DIR)] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Self { root })
    }

    /// Writes a fresh store with the given skills, catalog and optional model.
    pub fn create(
        root: impl Into<PathBuf>,
        skills: &[SkillRecord],
        catalog: &Catalog,
        fit_model: Option<&RandomForestModel>,
    ) -> Result<Self, StoreError> {
        let store = Self::open(root)?;
        store.save_skills(skills)?;
        store.save_catalog(catalog)?;
        if let Some(model) = fit_model {
            store.save_fit_model(model)?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn user_path(&self, id: &str) -> Result<PathBuf, StoreError> {
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid {
            return Err(StoreError::InvalidUserId(id.to_string()));
        }
        Ok(self.root.join(USERS_DIR).join(format!("{id}.json")))
    }

    pub fn save_skills(&self, skills: &[SkillRecord]) -> Result<(), StoreError> {
        let path = self.root.join(SKILLS_FILE);
        let json = serde_json::to_vec_pretty(skills).map_err(|source| StoreError::Json { path: path.clone(), source })?;
        write_atomic(&path, &json).map_err(io_err(&path))
    }

    pub fn save_catalog(&self, catalog: &Catalog) -> Result<(), StoreError> {
        let path = self.root.join(CATALOG_FILE);
        let mut buf = Vec::new();
        catalog.write_jsonl(&mut buf).map_err(io_err(&path))?;
        write_atomic(&path, &buf).map_err(io_err(&path))
    }

    pub fn save_fit_model(&self, model: &RandomForestModel) -> Result<(), StoreError> {
        let path = self.root.join(MODELS_DIR).join(FIT_MODEL_FILE);
        let json = model
            .to_json()
            .map_err(|source| StoreError::FitModel { path: path.clone(), source })?;
        write_atomic(&path, json.as_bytes()).map_err(io_err(&path))
    }

    pub fn save_user(&self, profile: &LearnerProfile) -> Result<(), StoreError> {
        let path = self.user_path(&profile.id)?;
        let json = serde_json::to_vec_pretty(profile).map_err(|source| StoreError::Json { path: path.clone(), source })?;
        write_atomic(&path, &json).map_err(io_err(&path))
    }

    /// Skills in file order; a missing file is an empty list.
    pub fn skills(&self) -> Result<Vec<SkillRecord>, StoreError> {
        let path = self.root.join(SKILLS_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|source| StoreError::Json { path, source }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn catalog(&self) -> Result<Catalog, StoreError> {
        let path = self.root.join(CATALOG_FILE);
        if !path.exists() {
            return Ok(Catalog::default());
        }
        skillrec_core::catalog::load_catalog(&path).map_err(|source| StoreError::Catalog { path, source })
    }

    pub fn fit_model(&self) -> Result<Option<RandomForestModel>, StoreError> {
        let path = self.root.join(MODELS_DIR).join(FIT_MODEL_FILE);
        if !path.exists() {
            return Ok(None);
        }
        RandomForestModel::load(&path)
            .map(Some)
            .map_err(|source| StoreError::FitModel { path, source })
    }

    /// All user profiles, sorted by id.
    pub fn users(&self) -> Result<Vec<LearnerProfile>, StoreError> {
        let dir = self.root.join(USERS_DIR);
        let mut users = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let profile: LearnerProfile =
                serde_json::from_str(&text).map_err(|source| StoreError::Json { path: path.clone(), source })?;
            users.push(profile);
        }
        users.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(users)
    }

    /// Loads everything and checks that videos reference known skills and
    /// that users reference known videos and skills.
    pub fn snapshot(&self) -> Result<StoreSnapshot, StoreError> {
        let snapshot = StoreSnapshot {
            skills: self.skills()?,
            catalog: self.catalog()?,
            fit_model: self.fit_model()?,
            users: self.users()?,
        };
        check_integrity(&snapshot)?;
        Ok(snapshot)
    }
}

fn check_integrity(s: &StoreSnapshot) -> Result<(), StoreError> {
    let skills: HashSet<&str> = s.skills.iter().map(|k| k.name.as_str()).collect();
    if let Some(v) = s.catalog.videos().iter().find(|v| !skills.contains(v.target_skill.as_str())) {
        return Err(StoreError::Integrity(format!("video {} targets unknown skill {:?}", v.id, v.target_skill)));
    }
    for u in &s.users {
        let known_video = |id: &String| s.catalog.get(id).is_some();
        if let Some(e) = u.history.iter().find(|e| !known_video(&e.video_id)) {
            return Err(StoreError::Integrity(format!("user {} rated unknown video {}", u.id, e.video_id)));
        }
        if let Some(id) = u.skipped.iter().chain(u.active.values()).find(|id| !known_video(id)) {
            return Err(StoreError::Integrity(format!("user {} references unknown video {id}", u.id)));
        }
        if let Some(skill) = u.targets.keys().find(|k| !skills.contains(k.as_str())) {
            return Err(StoreError::Integrity(format!("user {} targets unknown skill {skill:?}", u.id)));
        }
    }
    Ok(())
}

/// Replaces `path` with `bytes` via a synced temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("store");
    let tmp = dir.join(format!(".{name}.{}.tmp", uuid::Uuid::new_v4().simple()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
