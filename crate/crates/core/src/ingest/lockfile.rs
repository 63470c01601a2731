use std::path::Path;

use super::load::read_file;
use super::IngestError;
use crate::semver::Version;

/// Parse a Cargo lockfile into its installed `(name, version)` pairs, in
/// file order. The same name may appear more than once: incompatible major
/// versions are installed side by side.
pub fn parse_lockfile(path: impl AsRef<Path>) -> Result<Vec<(String, Version)>, IngestError> {
    let text = read_file(path.as_ref())?;
    parse_lockfile_text(&text)
}

pub fn parse_lockfile_text(text: &str) -> Result<Vec<(String, Version)>, IngestError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        IngestError::LockfileSyntax(e.to_string())
    })?;
    let Some(packages) = table.get("package") else {
        return Ok(Vec::new());
    };
    let packages = packages.as_array().ok_or_else(|| IngestError::Lockfile {
        stanza: 0,
        reason: "`package` is not an array of stanzas".to_string(),
    })?;

    packages
        .iter()
        .enumerate()
        .map(|(stanza, pkg)| {
            let name = pkg
                .get("name")
                .and_then(|v| v.as_str())
                .ok_or_else(|| IngestError::Lockfile {
                    stanza,
                    reason: "missing `name`".to_string(),
                })?;
            let version_text = pkg
                .get("version")
                .and_then(|v| v.as_str())
                .ok_or_else(|| IngestError::Lockfile {
                    stanza,
                    reason: format!("missing `version` for `{name}`"),
                })?;
            let version = Version::parse(version_text).map_err(|e| IngestError::Lockfile {
                stanza,
                reason: e.to_string(),
            })?;
            Ok((name.to_string(), version))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_package_stanzas() {
        let text = r#"
version = 3

[[package]]
name = "rand"
version = "0.8.5"
dependencies = ["rand_chacha"]

[[package]]
name = "rand_chacha"
version = "0.3.1"
"#;
        let packages = parse_lockfile_text(text).unwrap();
        assert_eq!(packages.len(), 2);
        assert_eq!(packages[0].0, "rand");
        assert_eq!(packages[0].1, Version::parse("0.8.5").unwrap());
    }

    #[test]
    fn duplicate_names_are_retained_in_order() {
        let text = r#"
[[package]]
name = "rand"
version = "0.7.3"

[[package]]
name = "rand"
version = "0.8.5"
"#;
        let packages = parse_lockfile_text(text).unwrap();
        assert_eq!(packages.len(), 2);
        assert_eq!(packages[0].1, Version::parse("0.7.3").unwrap());
        assert_eq!(packages[1].1, Version::parse("0.8.5").unwrap());
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_lockfile_text("").unwrap().is_empty());
    }

    #[test]
    fn missing_fields_name_the_stanza() {
        let text = r#"
[[package]]
name = "ok"
version = "1.0.0"

[[package]]
name = "broken"
"#;
        let err = parse_lockfile_text(text).unwrap_err();
        assert!(
            err.to_string().contains("stanza 1") && err.to_string().contains("version"),
            "got: {err}"
        );

        let text = r#"
[[package]]
version = "1.0.0"
"#;
        let err = parse_lockfile_text(text).unwrap_err();
        assert!(err.to_string().contains("stanza 0"), "got: {err}");
    }

    #[test]
    fn reads_from_disk() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(b"[[package]]\nname = \"abc\"\nversion = \"1.2.3\"\n")
            .unwrap();
        let packages = parse_lockfile(file.path()).unwrap();
        assert_eq!(packages, vec![("abc".to_string(), Version::parse("1.2.3").unwrap())]);
    }
}
