mod common;

use std::collections::HashSet;
use std::net::SocketAddr;

use common::{small_catalog, small_store, Client};
use serde_json::json;
use skillrec::api::{BackgroundServer, DEFAULT_FIT_PROBABILITY};
use skillrec::store::Store;
use skillrec_core::catalog::Level;

fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

fn start(dir: &std::path::Path) -> (BackgroundServer, Client) {
    let server = BackgroundServer::start(Store::open(dir).unwrap(), local()).unwrap();
    let client = Client::new(server.base_url());
    (server, client)
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) }
}

#[test]
fn skills_listing() {
    let empty = tempfile::tempdir().unwrap();
    let (_s, c) = start(empty.path());
    let r = c.get("/skills");
    assert_eq!((r.status, r.json()), (200, json!([])));

    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let first = c.get("/skills");
    assert_eq!(first.json().as_array().unwrap().len(), 2);
    assert_eq!(first.body, c.get("/skills").body);
}

#[test]
fn user_creation_and_peer_cold_start() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());

    let r = c.post("/users", json!({"occupation": "analyst", "location": "Berlin", "education": "MSc"}));
    assert_eq!(r.status, 201);
    assert_eq!(r.json()["p"], json!([0.25, 0.25, 0.25, 0.25]));
    let first = r.json()["user_id"].as_str().unwrap().to_string();

    // Move the first user's P away from uniform.
    c.post(&format!("/users/{first}/skills"), json!({"skill": "sql", "level": 0}));
    let rec = c.get(&format!("/users/{first}/recommendation?skill=sql")).json();
    let rated = c.post(&format!("/users/{first}/ratings"), json!({"video_id": rec["video_id"], "stars": 2})).json();
    assert_ne!(rated["p"], json!([0.25, 0.25, 0.25, 0.25]));

    let r = c.post("/users", json!({"occupation": "Analyst ", "location": "Paris", "education": "BSc"}));
    assert_eq!(r.json()["p"], rated["p"]);

    let stranger = c.post("/users", json!({"occupation": "nurse", "location": "Oslo", "education": "PhD"}));
    assert_eq!(stranger.json()["p"], json!([0.25, 0.25, 0.25, 0.25]));
}

#[test]
fn malformed_bodies_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    for body in ["{", "[]", r#"{"occupation": "x", "location": "y"}"#, r#"{"occupation": 1, "location": "y", "education": "z"}"#] {
        let r = c.post_raw("/users", body);
        assert_eq!(r.status, 400, "{body}");
        assert_eq!(r.json()["code"], "bad_request");
        assert!(r.json()["message"].is_string());
    }
    let id = c.create_user("a", "b", "c");
    let r = c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 3}));
    assert_eq!(r.status, 400);
    let r = c.get(&format!("/users/{id}/recommendation"));
    assert_eq!(r.status, 400);
}

#[test]
fn target_registration() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    let r = c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": "intermediate"}));
    assert_eq!(r.status, 200);
    assert_eq!(r.json(), json!({"skill": "sql", "level": "intermediate", "mastered": false}));
    assert_eq!(c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 0})).status, 409);
    let r = c.post(&format!("/users/{id}/skills"), json!({"skill": "cobol", "level": 0}));
    assert_eq!((r.status, r.json()["code"].as_str()), (404, Some("skill_not_found")));
    let r = c.post("/users/nobody/skills", json!({"skill": "sql", "level": 0}));
    assert_eq!((r.status, r.json()["code"].as_str()), (404, Some("user_not_found")));
    assert_eq!(c.get("/users/nobody").status, 404);
}

#[test]
fn fresh_user_gets_cosine_argmax() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "python", "level": 1}));
    let r = c.get(&format!("/users/{id}/recommendation?skill=python"));
    assert_eq!(r.status, 200);
    let rec = r.json();

    let catalog = small_catalog();
    let xs = catalog.feature_vectors(|_| DEFAULT_FIT_PROBABILITY);
    let mut best: Option<(f64, String)> = None;
    for v in catalog.videos().iter().filter(|v| v.target_skill == "python" && v.level == Level::Intermediate) {
        let s = cos(&[0.25; 4], &xs[&v.id].0);
        if best.as_ref().is_none_or(|(b, id)| s > *b || (s == *b && v.id < *id)) {
            best = Some((s, v.id.clone()));
        }
    }
    let (score, vid) = best.unwrap();
    assert_eq!(rec["video_id"], vid.as_str());
    assert!((rec["score"].as_f64().unwrap() - score).abs() < 1e-12);
    assert_eq!(rec["level"], "intermediate");
    assert_eq!(rec["url"], format!("https://videos.example.org/{vid}"));

    // Asking again without acting returns the same video.
    assert_eq!(c.get(&format!("/users/{id}/recommendation?skill=python")).json(), rec);
    let r = c.get(&format!("/users/{id}/recommendation?skill=sql"));
    assert_eq!((r.status, r.json()["code"].as_str()), (404, Some("target_not_found")));
}

#[test]
fn rating_flow_levels_and_mastery() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 0}));

    let rec = c.get(&format!("/users/{id}/recommendation?skill=sql")).json();
    let r = c.post(&format!("/users/{id}/ratings"), json!({"video_id": rec["video_id"], "stars": 0}));
    assert_eq!((r.status, r.json()["code"].as_str()), (422, Some("rating_out_of_range")));
    let r = c.post(&format!("/users/{id}/ratings"), json!({"video_id": "sql-2-0", "stars": 5}));
    assert_eq!((r.status, r.json()["code"].as_str()), (404, Some("unknown_video")));

    let mut seen = HashSet::new();
    for expected in ["intermediate", "advanced", "advanced"] {
        let rec = c.get(&format!("/users/{id}/recommendation?skill=sql")).json();
        assert!(seen.insert(rec["video_id"].as_str().unwrap().to_string()));
        let r = c.post(&format!("/users/{id}/ratings"), json!({"video_id": rec["video_id"], "stars": 5}));
        assert_eq!(r.status, 200);
        let out = r.json();
        assert_eq!(out["level"], expected);
        assert_eq!(out["p"], c.get(&format!("/users/{id}")).json()["p"]);
    }
    let profile = c.get(&format!("/users/{id}")).json();
    assert_eq!(profile["targets"]["sql"], json!({"level": "advanced", "mastered": true}));
    let r = c.get(&format!("/users/{id}/recommendation?skill=sql"));
    assert_eq!((r.status, r.json()["code"].as_str()), (409, Some("skill_mastered")));
}

#[test]
fn low_ratings_exhaust_the_level() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "python", "level": 2}));
    for _ in 0..3 {
        let rec = c.get(&format!("/users/{id}/recommendation?skill=python")).json();
        let out = c.post(&format!("/users/{id}/ratings"), json!({"video_id": rec["video_id"], "stars": 1})).json();
        assert_eq!((out["level"].as_str(), out["mastered"].as_bool()), (Some("advanced"), Some(false)));
    }
    let r = c.get(&format!("/users/{id}/recommendation?skill=python"));
    assert_eq!((r.status, r.json()["code"].as_str()), (410, Some("no_candidates")));
}

#[test]
fn skips() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 0}));
    let first = c.get(&format!("/users/{id}/recommendation?skill=sql")).json()["video_id"].clone();
    let r = c.post(&format!("/users/{id}/skips"), json!({"video_id": first}));
    assert_eq!((r.status, r.body.as_str()), (204, ""));
    let before = c.get(&format!("/users/{id}")).body;
    assert_eq!(c.post(&format!("/users/{id}/skips"), json!({"video_id": first})).status, 204);
    assert_eq!(c.get(&format!("/users/{id}")).body, before);

    let second = c.get(&format!("/users/{id}/recommendation?skill=sql")).json()["video_id"].clone();
    assert_ne!(first, second);
    let r = c.post(&format!("/users/{id}/skips"), json!({"video_id": "nope"}));
    assert_eq!(r.status, 404);
    // Rating a skipped video is refused.
    assert_eq!(c.post(&format!("/users/{id}/ratings"), json!({"video_id": first, "stars": 5})).status, 404);
}

#[test]
fn failed_writes_leave_the_store_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (_s, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 0}));
    let rec = c.get(&format!("/users/{id}/recommendation?skill=sql")).json();
    let file = dir.path().join("users").join(format!("{id}.json"));
    let bytes = std::fs::read(&file).unwrap();
    let profile = c.get(&format!("/users/{id}")).body;

    c.post(&format!("/users/{id}/ratings"), json!({"video_id": rec["video_id"], "stars": 9}));
    c.post(&format!("/users/{id}/ratings"), json!({"video_id": "sql-0-0x", "stars": 3}));
    c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 1}));
    c.post_raw(&format!("/users/{id}/skips"), "not json");

    assert_eq!(std::fs::read(&file).unwrap(), bytes);
    assert_eq!(c.get(&format!("/users/{id}")).body, profile);
}

#[test]
fn restart_preserves_every_response() {
    let dir = tempfile::tempdir().unwrap();
    small_store(dir.path());
    let (server, c) = start(dir.path());
    let id = c.create_user("a", "b", "c");
    c.post(&format!("/users/{id}/skills"), json!({"skill": "sql", "level": 0}));
    c.post(&format!("/users/{id}/skills"), json!({"skill": "python", "level": 1}));
    let rec = c.get(&format!("/users/{id}/recommendation?skill=sql")).json();
    c.post(&format!("/users/{id}/ratings"), json!({"video_id": rec["video_id"], "stars": 4}));
    let pending = c.get(&format!("/users/{id}/recommendation?skill=python")).json();

    let paths = [
        "/skills".to_string(),
        format!("/users/{id}"),
        format!("/users/{id}/recommendation?skill=sql"),
        format!("/users/{id}/recommendation?skill=python"),
    ];
    // The first recommendation call activates a video; compare the steady state.
    paths.iter().for_each(|p| drop(c.get(p)));
    let before: Vec<String> = paths.iter().map(|p| c.get(p).body).collect();
    server.stop().unwrap();

    let (_server, c) = start(dir.path());
    let after: Vec<String> = paths.iter().map(|p| c.get(p).body).collect();
    assert_eq!(before, after);
    // The active recommendation survived too, so it can be rated now.
    let r = c.post(&format!("/users/{id}/ratings"), json!({"video_id": pending["video_id"], "stars": 3}));
    assert_eq!(r.status, 200);
}

#[test]
fn preflight_and_unknown_routes() {
    let dir = tempfile::tempdir().unwrap();
    let (_s, c) = start(dir.path());
    let r = c.get("/nothing/here");
    assert_eq!((r.status, r.json()["code"].as_str()), (404, Some("not_found")));
}
