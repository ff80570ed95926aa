#![allow(dead_code)]

use std::path::Path;

use serde_json::{json, Value};
use skillrec::store::Store;
use skillrec_core::catalog::{Catalog, Level, VideoRecord, VideoSource};
use skillrec_core::skill_mining::SkillRecord;

pub struct Client {
    agent: ureq::Agent,
    base: String,
}

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or(Value::Null)
    }
}

impl Client {
    pub fn new(base: String) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self { agent, base }
    }

    pub fn get(&self, path: &str) -> Reply {
        let mut resp = self.agent.get(format!("{}{path}", self.base)).call().expect("request");
        Reply { status: resp.status().as_u16(), body: resp.body_mut().read_to_string().expect("body") }
    }

    pub fn post_raw(&self, path: &str, body: &str) -> Reply {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body)
            .expect("request");
        Reply { status: resp.status().as_u16(), body: resp.body_mut().read_to_string().expect("body") }
    }

    pub fn post(&self, path: &str, body: Value) -> Reply {
        self.post_raw(path, &body.to_string())
    }

    pub fn create_user(&self, occupation: &str, location: &str, education: &str) -> String {
        let r = self.post("/users", json!({"occupation": occupation, "location": location, "education": education}));
        assert_eq!(r.status, 201, "{}", r.body);
        r.json()["user_id"].as_str().unwrap().to_string()
    }
}

pub fn skill(name: &str) -> SkillRecord {
    SkillRecord {
        name: name.into(),
        keywords: vec![name.into()],
        description: format!("{name} description"),
        score: 1.0,
    }
}

pub fn video(id: &str, skill: &str, level: Level, likes: u64, length: f64, sim: f64) -> VideoRecord {
    VideoRecord {
        id: id.into(),
        source: VideoSource::Youtube,
        title: format!("{skill} video {id}"),
        target_skill: skill.into(),
        url: format!("https://videos.example.org/{id}"),
        length_s: length,
        description: String::new(),
        transcript: String::new(),
        view_count: Some(likes * 10),
        rating: Some(4.0),
        likes: Some(likes),
        dislikes: Some(0),
        relevancy_score: 1.0,
        level,
        text_similarity: sim,
        fit_label: None,
    }
}

/// Two skills with three videos per level, no fit model.
pub fn small_catalog() -> Catalog {
    let mut videos = Vec::new();
    for skill in ["sql", "python"] {
        for level in Level::ALL {
            for k in 0..3u64 {
                let n = level.ordinal() as u64 * 3 + k;
                let id = format!("{skill}-{}-{k}", level.ordinal());
                videos.push(video(&id, skill, level, 100 + 37 * n, 120.0 + 90.0 * ((n * 5) % 7) as f64, 0.1 + 0.1 * ((n * 3) % 8) as f64));
            }
        }
    }
    Catalog::new(videos).unwrap()
}

pub fn small_store(dir: &Path) -> Store {
    Store::create(dir, &[skill("sql"), skill("python")], &small_catalog(), None).unwrap()
}
