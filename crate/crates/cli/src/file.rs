//! JSON distribution files.

use std::collections::HashSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use unikey::prob::{JointDist, Variable};
use unikey::ui::Roles;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub index: Vec<usize>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probs {
    Dense(Vec<f64>),
    Sparse(Vec<SparseEntry>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileRoles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zprime: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<String>>,
}

/// A joint distribution on disk. `probs` is row-major with the last variable
/// fastest, or a list of `{index, prob}` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub variables: Vec<Variable>,
    pub probs: Probs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roles: Option<FileRoles>,
}

impl DistributionFile {
    pub fn from_dist(d: &JointDist) -> Self {
        DistributionFile {
            variables: d.variables().to_vec(),
            probs: Probs::Dense(d.probs().to_vec()),
            roles: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Canonical text: pretty JSON with a trailing newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn to_dist(&self) -> Result<JointDist> {
        let dims: Vec<usize> = self.variables.iter().map(|v| v.size).collect();
        let probs = match &self.probs {
            Probs::Dense(p) => p.clone(),
            Probs::Sparse(entries) => {
                let total = dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
                let Some(total) = total else { bail!("state space too large") };
                let mut probs = vec![0.0; total];
                let mut seen = HashSet::new();
                for e in entries {
                    if e.index.len() != dims.len() || e.index.iter().zip(&dims).any(|(i, d)| i >= d) {
                        bail!("sparse index {:?} out of range", e.index);
                    }
                    if !seen.insert(e.index.clone()) {
                        bail!("sparse index {:?} repeated", e.index);
                    }
                    let flat = e.index.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i);
                    probs[flat] = e.prob;
                }
                probs
            }
        };
        Ok(JointDist::new(self.variables.clone(), probs)?)
    }

    /// Alice, Bob and Eve: explicit overrides first, then the file, then
    /// the first three variables.
    pub fn roles(&self, s: Option<&[String]>, y: Option<&[String]>, z: Option<&[String]>) -> Result<Roles> {
        let file = self.roles.clone().unwrap_or_default();
        let pick = |flag: Option<&[String]>, from_file: Option<Vec<String>>, k: usize| -> Result<Vec<String>> {
            if let Some(f) = flag {
                return Ok(f.to_vec());
            }
            if let Some(f) = from_file {
                return Ok(f);
            }
            match self.variables.get(k) {
                Some(v) => Ok(vec![v.name.clone()]),
                None => bail!("no variable to use for role {}", ["S", "Y", "Z"][k]),
            }
        };
        Ok(Roles {
            s: pick(s, file.s, 0)?,
            y: pick(y, file.y, 1)?,
            z: pick(z, file.z, 2)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_and_dense_agree() {
        let dense = r#"{"variables":[{"name":"A","size":2},{"name":"B","size":2}],"probs":[0.5,0,0,0.5]}"#;
        let sparse = r#"{"variables":[{"name":"A","size":2},{"name":"B","size":2}],
            "probs":[{"index":[0,0],"prob":0.5},{"index":[1,1],"prob":0.5}]}"#;
        let a = DistributionFile::parse(dense).unwrap().to_dist().unwrap();
        let b = DistributionFile::parse(sparse).unwrap().to_dist().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_rejects_repeats_and_out_of_range() {
        for probs in [
            r#"[{"index":[0,0],"prob":0.5},{"index":[0,0],"prob":0.5}]"#,
            r#"[{"index":[0,2],"prob":1.0}]"#,
        ] {
            let text = format!(r#"{{"variables":[{{"name":"A","size":2}},{{"name":"B","size":2}}],"probs":{probs}}}"#);
            assert!(DistributionFile::parse(&text).unwrap().to_dist().is_err());
        }
    }

    #[test]
    fn roles_fall_back_to_leading_variables() {
        let text = r#"{"variables":[{"name":"A","size":2},{"name":"B","size":1},{"name":"C","size":1}],
            "probs":[0.5,0.5],"roles":{"y":["C"]}}"#;
        let f = DistributionFile::parse(text).unwrap();
        let r = f.roles(None, None, Some(&["B".to_string()])).unwrap();
        assert_eq!((r.s, r.y, r.z), (vec!["A".into()], vec!["C".into()], vec!["B".into()]));
    }
}
