//! Experiment configuration files (TOML). See `docs/formats.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dapac_core::field::FieldPrime;
use dapac_core::model::{AttributeVector, Registry, SystemConfig};
use dapac_core::scheme::{parse_lambda, SchemeKind};
use serde::Deserialize;

use crate::NetError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "K")]
    k: usize,
    q: u32,
    #[serde(rename = "L")]
    l: usize,
    scheme: String,
    #[serde(default)]
    lambda: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    alphabets: Option<Vec<Vec<String>>>,
    #[serde(default)]
    registry: Option<PathBuf>,
    #[serde(default)]
    user: Option<String>,
    /// Inline registry, merged with the registry file if both are given.
    #[serde(default)]
    users: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    users: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub scheme: SchemeKind,
    pub registry: Registry,
    pub user: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, NetError> {
        let text = fs::read_to_string(path)
            .map_err(|e| NetError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// `base` resolves a relative registry path.
    pub fn parse(text: &str, base: &Path) -> Result<Self, NetError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| NetError::Config(e.to_string()))?;
        let field = FieldPrime::new(raw.q).map_err(|e| NetError::Config(e.to_string()))?;
        let system = match raw.alphabets {
            Some(a) => SystemConfig::new(raw.n, raw.d, raw.k, field, raw.l, a, raw.seed)?,
            None => SystemConfig::with_default_alphabets(raw.n, raw.d, raw.k, field, raw.l, raw.seed)?,
        };
        let lambda = raw.lambda.as_deref().map(parse_lambda).transpose()?;
        if lambda.is_some() && raw.scheme != "timeshare" {
            return Err(NetError::Config(format!("lambda given for scheme {:?}", raw.scheme)));
        }
        let scheme = SchemeKind::parse(&raw.scheme, lambda)?;

        let mut users = raw.users;
        if let Some(p) = raw.registry {
            let p = if p.is_relative() { base.join(p) } else { p };
            let text = fs::read_to_string(&p)
                .map_err(|e| NetError::Config(format!("registry {}: {e}", p.display())))?;
            let reg: RawRegistry = toml::from_str(&text)
                .map_err(|e| NetError::Config(format!("registry {}: {e}", p.display())))?;
            users.extend(reg.users);
        }
        let mut registry = Registry::new();
        for (name, labels) in &users {
            registry.insert(name.clone(), system.parse_labels(labels)?);
        }
        let user = match raw.user {
            Some(u) => u,
            None if users.len() == 1 => users.keys().next().cloned().unwrap_or_default(),
            None => return Err(NetError::Config("no user given and the registry does not name exactly one".into())),
        };
        if registry.get(&user).is_none() {
            return Err(NetError::Config(format!("user {user:?} is not in the registry")));
        }
        Ok(ExperimentConfig {
            system,
            scheme,
            registry,
            user,
        })
    }

    /// The user's registered attribute vector.
    pub fn true_vstar(&self) -> &AttributeVector {
        self.registry.get(&self.user).expect("checked on load")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = r#"
N = 3
D = 2
K = 2
q = 257
L = 2
scheme = "hetdapac"
seed = 7
alphabets = [["a", "b"], ["1", "2"], ["x", "y"]]
user = "alice"

[users]
alice = ["a", "2", "y"]
"#;

    #[test]
    fn parses_inline_registry() {
        let c = ExperimentConfig::parse(EX, Path::new(".")).unwrap();
        assert_eq!(c.system.n, 3);
        assert_eq!(c.scheme, SchemeKind::HetDapac);
        assert_eq!(c.system.label(c.true_vstar()), "a2y");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse(&EX.replace("q = 257", "q = 256"), Path::new(".")).is_err());
        assert!(ExperimentConfig::parse(&EX.replace("\"y\"]\n", "\"z\"]\n"), Path::new(".")).is_err());
        assert!(ExperimentConfig::parse(&format!("{EX}\nextra = 1"), Path::new(".")).is_err());
        let with_lambda = EX.replace("seed = 7", "seed = 7\nlambda = \"1/2\"");
        assert!(ExperimentConfig::parse(&with_lambda, Path::new(".")).is_err());
        let ts = with_lambda.replace("hetdapac", "timeshare");
        let c = ExperimentConfig::parse(&ts, Path::new(".")).unwrap();
        assert_eq!(c.scheme.lambda().unwrap().to_string(), "1/2");
    }
}
