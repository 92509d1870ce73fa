use std::collections::HashSet;
use std::path::Path;

use fedipol_core::Domain;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedList {
    pub instances: Vec<Domain>,
    /// Lines that were not valid host names.
    pub skipped: Vec<(usize, String)>,
}

/// One host per line. Blank lines and `#` comments are ignored, duplicates
/// keep their first position.
pub fn parse_seed_list(text: &str) -> SeedList {
    let mut out = SeedList::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match Domain::parse(line) {
            Ok(d) => {
                if seen.insert(d.clone()) {
                    out.instances.push(d);
                }
            }
            Err(e) => {
                log::warn!("seed line {}: {e}", i + 1);
                out.skipped.push((i + 1, line.to_string()));
            }
        }
    }
    out
}

pub fn load_seed_instances(path: impl AsRef<Path>) -> std::io::Result<SeedList> {
    Ok(parse_seed_list(&std::fs::read_to_string(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_duplicates() {
        let s = parse_seed_list("# seeds\nA.example\n\nb.example # second\na.example\nhttps://c.example\n");
        let names: Vec<_> = s.instances.iter().map(Domain::as_str).collect();
        assert_eq!(names, ["a.example", "b.example"]);
        assert_eq!(s.skipped, vec![(6, "https://c.example".to_string())]);
    }
}
