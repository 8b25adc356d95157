use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use kundt::format::{parse_candidate, parse_metric};
use kundt::killing::KillingCandidate;
use kundt::KundtMetric;

/// What `case build --out` writes: both definition files verbatim plus the
/// bindings that produced them.
#[derive(Serialize, Deserialize)]
pub struct InstanceFile {
    pub case: String,
    pub dimension: usize,
    pub metric: String,
    pub candidate: String,
    pub bindings: std::collections::BTreeMap<String, String>,
    pub provenance: Vec<String>,
}

#[derive(Serialize, Clone)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
}

pub struct Loaded {
    pub metric: KundtMetric,
    /// Candidate text carried by an instance file.
    pub embedded_candidate: Option<String>,
    pub digest: InputDigest,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn digest(role: &str, text: &str) -> InputDigest {
    let hash = Sha256::digest(text.as_bytes());
    InputDigest {
        role: role.to_string(),
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    }
}

/// A metric file, or an instance file written by `case build`.
pub fn load_metric(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let digest = digest("metric", &text);
    if text.trim_start().starts_with('{') {
        let inst: InstanceFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not an instance file", path.display()))?;
        let metric = parse_metric(&inst.metric).with_context(|| format!("metric embedded in {}", path.display()))?;
        return Ok(Loaded {
            metric,
            embedded_candidate: Some(inst.candidate),
            digest,
        });
    }
    let metric = parse_metric(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Loaded {
        metric,
        embedded_candidate: None,
        digest,
    })
}

pub fn load_candidate(path: Option<&Path>, loaded: &Loaded) -> Result<(KillingCandidate, Option<InputDigest>)> {
    let n = loaded.metric.dimension();
    match (path, &loaded.embedded_candidate) {
        (Some(p), _) => {
            let text = read(p)?;
            let c = parse_candidate(&text, n).with_context(|| format!("parsing {}", p.display()))?;
            Ok((c, Some(digest("candidate", &text))))
        }
        (None, Some(text)) => Ok((
            parse_candidate(text, n).context("candidate embedded in the instance")?,
            None,
        )),
        (None, None) => Err(anyhow!("--candidate is required unless the input is a case instance")),
    }
}
