//! Versioned text container used for every persisted artifact (datasets,
//! models, adversarial batches).
//!
//! Layout: a magic line `#idslab <kind> v<version>`, one JSON header line,
//! then kind-specific payload lines. Loaders reject unknown kinds and
//! version mismatches instead of guessing.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &str = "#idslab";

pub struct Container {
    pub kind: String,
    pub version: u32,
    pub header: String,
    pub payload: Vec<String>,
}

/// Serialize `header` and `payload` into the container format.
pub fn render<H: Serialize>(kind: &str, version: u32, header: &H, payload: &[String]) -> Result<String> {
    let header_json = serde_json::to_string(header)
        .map_err(|e| Error::Container(format!("header serialization failed: {e}")))?;
    let mut out = String::with_capacity(header_json.len() + payload.iter().map(|l| l.len() + 1).sum::<usize>() + 64);
    out.push_str(&format!("{MAGIC} {kind} v{version}\n"));
    out.push_str(&header_json);
    out.push('\n');
    for line in payload {
        out.push_str(line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_file<H: Serialize>(path: &Path, kind: &str, version: u32, header: &H, payload: &[String]) -> Result<()> {
    let text = render(kind, version, header, payload)?;
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse container text, checking kind and version before anything else.
pub fn parse(text: &str, expect_kind: &str, expect_version: u32) -> Result<Container> {
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Container("empty container".into()))?;
    let mut parts = magic.split_whitespace();
    let (m, kind, ver) = (parts.next(), parts.next(), parts.next());
    if m != Some(MAGIC) {
        return Err(Error::Container(format!("bad magic line {magic:?}")));
    }
    let kind = kind.ok_or_else(|| Error::Container("missing container kind".into()))?;
    let ver = ver.ok_or_else(|| Error::Container("missing container version".into()))?;
    let found = format!("{kind} {ver}");
    let expected = format!("{expect_kind} v{expect_version}");
    if kind != expect_kind || ver != format!("v{expect_version}") {
        return Err(Error::ContainerVersion { found, expected });
    }
    let header = lines
        .next()
        .ok_or_else(|| Error::Container("missing header line".into()))?
        .to_string();
    let payload = lines.map(str::to_string).collect();
    Ok(Container {
        kind: kind.to_string(),
        version: expect_version,
        header,
        payload,
    })
}

pub fn read_file(path: &Path, expect_kind: &str, expect_version: u32) -> Result<Container> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse(&text, expect_kind, expect_version)
}

impl Container {
    pub fn header_as<H: DeserializeOwned>(&self) -> Result<H> {
        serde_json::from_str(&self.header)
            .map_err(|e| Error::Container(format!("header parse failed: {e}")))
    }
}
