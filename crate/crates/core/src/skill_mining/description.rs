//! Skill description lookup: a fixture-file provider for offline use and an
//! HTTP client for encyclopedia-style page-summary endpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use log::warn;
use serde::Deserialize;
use url::Url;

use super::{MiningError, SkillRecord};

pub trait DescriptionProvider {
    /// Summary text for a skill name, `None` when the provider has no entry.
    fn lookup(&self, name: &str) -> Result<Option<String>, MiningError>;
}

/// Descriptions read from a JSON object mapping skill name to text.
#[derive(Debug, Clone, Default)]
pub struct FixtureDescriptions {
    entries: BTreeMap<String, String>,
}

impl FixtureDescriptions {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MiningError> {
        Ok(Self::new(serde_json::from_str(&fs::read_to_string(path)?)?))
    }
}

impl DescriptionProvider for FixtureDescriptions {
    fn lookup(&self, name: &str) -> Result<Option<String>, MiningError> {
        let hit = self.entries.get(name).or_else(|| {
            self.entries
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| v)
        });
        Ok(hit.cloned())
    }
}

/// Client for a REST endpoint of the form `{base}/page/summary/{title}`
/// returning `{"extract": "..."}`, e.g. `https://en.wikipedia.org/api/rest_v1`.
#[derive(Debug)]
pub struct HttpEncyclopedia {
    base: Url,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Summary {
    #[serde(default)]
    extract: String,
}

impl HttpEncyclopedia {
    pub fn new(base_url: &str) -> Result<Self, MiningError> {
        let base = Url::parse(base_url).map_err(|e| MiningError::ProviderUnavailable(e.to_string()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { base, agent })
    }

    fn summary_url(&self, name: &str) -> Result<Url, MiningError> {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .map_err(|_| MiningError::ProviderUnavailable(format!("cannot-be-a-base url {}", self.base)))?
            .pop_if_empty()
            .extend(["page", "summary", &name.replace(' ', "_")]);
        Ok(url)
    }
}

impl DescriptionProvider for HttpEncyclopedia {
    fn lookup(&self, name: &str) -> Result<Option<String>, MiningError> {
        let url = self.summary_url(name)?;
        let unavailable = |e: ureq::Error| MiningError::ProviderUnavailable(e.to_string());
        let mut resp = self.agent.get(url.as_str()).call().map_err(unavailable)?;
        match resp.status().as_u16() {
            404 => Ok(None),
            200..=299 => {
                let summary: Summary = resp.body_mut().read_json().map_err(unavailable)?;
                Ok(Some(summary.extract).filter(|s| !s.trim().is_empty()))
            }
            code => Err(MiningError::ProviderUnavailable(format!("{url} returned HTTP {code}"))),
        }
    }
}

/// Text up to the first blank line (or line break), trimmed.
pub fn first_paragraph(text: &str) -> &str {
    let text = text.trim();
    let end = text.find("\n\n").or_else(|| text.find('\n')).unwrap_or(text.len());
    text[..end].trim()
}

/// Fills `skill.description` from the provider. A miss leaves the skill
/// untouched and logs a warning; provider failures are returned to the caller.
pub fn enrich_description(
    mut skill: SkillRecord,
    provider: &dyn DescriptionProvider,
) -> Result<SkillRecord, MiningError> {
    match provider.lookup(&skill.name)? {
        Some(text) => skill.description = first_paragraph(&text).to_string(),
        None => warn!("no description found for skill {:?}", skill.name),
    }
    Ok(skill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::thread;

    const PYTHON: &str = "Python is an interpreted, high-level, general-purpose programming language.";

    fn skill(name: &str) -> SkillRecord {
        SkillRecord {
            name: name.into(),
            keywords: vec![name.to_lowercase()],
            description: String::new(),
            score: 1.0,
        }
    }

    fn fixture() -> FixtureDescriptions {
        FixtureDescriptions::new(BTreeMap::from([("Python programming".to_string(), PYTHON.to_string())]))
    }

    #[test]
    fn fixture_passthrough() {
        let s = enrich_description(skill("Python programming"), &fixture()).unwrap();
        assert_eq!(s.description, PYTHON);
        let s = enrich_description(skill("python programming"), &fixture()).unwrap();
        assert_eq!(s.description, PYTHON);
    }

    #[test]
    fn miss_leaves_skill_unchanged() {
        let before = skill("Knitting");
        let after = enrich_description(before.clone(), &fixture()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn first_paragraph_only() {
        assert_eq!(first_paragraph("  One.\n\nTwo."), "One.");
        assert_eq!(first_paragraph("One.\nTwo."), "One.");
        assert_eq!(first_paragraph("Only"), "Only");
    }

    /// Serves canned responses to `n` sequential connections.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let mut paths = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 4096];
                let n = stream.read(&mut buf).unwrap();
                let req = String::from_utf8_lossy(&buf[..n]).to_string();
                paths.push(req.split_whitespace().nth(1).unwrap_or("").to_string());
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
            paths
        });
        (format!("http://{addr}/api/rest_v1"), handle)
    }

    #[test]
    fn http_provider_hit_miss_and_failure() {
        let (base, handle) = serve(vec![
            (200, r#"{"title":"Python","extract":"Python is an interpreted, high-level, general-purpose programming language.\n\nMore."}"#),
            (404, "{}"),
            (500, "{}"),
        ]);
        let provider = HttpEncyclopedia::new(&base).unwrap();
        let s = enrich_description(skill("Python programming"), &provider).unwrap();
        assert_eq!(s.description, PYTHON);
        assert_eq!(provider.lookup("Nope").unwrap(), None);
        assert!(matches!(provider.lookup("Boom"), Err(MiningError::ProviderUnavailable(_))));
        let paths = handle.join().unwrap();
        assert_eq!(paths[0], "/api/rest_v1/page/summary/Python_programming");
    }
}
