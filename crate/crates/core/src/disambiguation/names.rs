use thiserror::Error;

use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("name {0:?} is empty after normalization")]
pub struct EmptyNameKey(pub String);

/// Normalized person-name key: `"<given initial> <family>"`, or just the
/// family token when no given name is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NameKey(String);

impl NameKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn family(&self) -> &str {
        self.0.rsplit(' ').next().unwrap_or(&self.0)
    }

    pub fn initial(&self) -> Option<char> {
        self.0.split_once(' ').and_then(|(g, _)| g.chars().next())
    }

    /// Blocking rule: same family token and no conflicting given initial.
    pub fn compatible(&self, other: &NameKey) -> bool {
        if self.family() != other.family() {
            return false;
        }
        match (self.initial(), other.initial()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }
}

impl std::fmt::Display for NameKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn clean_token(tok: &str) -> String {
    tok.trim_matches(|c: char| !c.is_alphanumeric()).to_owned()
}

/// `"Priem, Jason"`, `"Jason Priem"` and `"J. Priem"` all become `"j priem"`.
pub fn normalize_name(raw: &str) -> Result<NameKey, EmptyNameKey> {
    let folded = text::collapse_ws(&text::fold(raw));
    let (given, family) = match folded.split_once(',') {
        Some((family, given)) => (given.trim().to_owned(), family.trim().to_owned()),
        None => match folded.rsplit_once(' ') {
            Some((given, family)) => (given.to_owned(), family.to_owned()),
            None => (String::new(), folded.clone()),
        },
    };
    let family_tokens: Vec<String> = family.split_whitespace().map(clean_token).filter(|t| !t.is_empty()).collect();
    let family = match family_tokens.last() {
        Some(f) => f.clone(),
        None => return Err(EmptyNameKey(raw.to_owned())),
    };
    let initial = given
        .split(|c: char| c.is_whitespace() || c == '.')
        .map(clean_token)
        .find(|t| !t.is_empty())
        .and_then(|t| t.chars().next());
    Ok(NameKey(match initial {
        Some(i) => format!("{i} {family}"),
        None => family,
    }))
}

/// The normalized family token of a raw name, if any.
pub fn family_of(raw: &str) -> Option<String> {
    normalize_name(raw).ok().map(|k| k.family().to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_name("Priem, Jason").unwrap().as_str(), "j priem");
        assert_eq!(normalize_name("J. Priem").unwrap().as_str(), "j priem");
        assert_eq!(normalize_name("Martín-Martín, Alberto").unwrap().as_str(), "a martin-martin");
        assert_eq!(normalize_name("Jason  Alan Priem").unwrap().as_str(), "j priem");
        assert_eq!(normalize_name("Piwowar").unwrap().as_str(), "piwowar");
        assert_eq!(normalize_name("J.A. Smith").unwrap().as_str(), "j smith");
    }

    #[test]
    fn empty_names_are_rejected() {
        assert!(normalize_name("").is_err());
        assert!(normalize_name(" , ").is_err());
        assert!(normalize_name("...").is_err());
    }

    #[test]
    fn blocking_compatibility() {
        let a = normalize_name("J. Priem").unwrap();
        let b = normalize_name("Priem").unwrap();
        let c = normalize_name("H. Priem").unwrap();
        let d = normalize_name("J. Smith").unwrap();
        assert!(a.compatible(&b));
        assert!(!a.compatible(&c));
        assert!(!a.compatible(&d));
    }
}
