//! Group spec files: JSON `{name, N, m, r, weights[], brackets[{i,j,k,c}]}`
//! with 1-based bracket indices, validated on load.

use super::CarnotGroupSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub name: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub weights: Vec<u32>,
    #[serde(default)]
    pub brackets: Vec<BracketEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: f64,
}

impl GroupSpecFile {
    pub fn load(path: &Path) -> Result<CarnotGroupSpec> {
        let text = std::fs::read_to_string(path)?;
        let file: GroupSpecFile = serde_json::from_str(&text)?;
        file.build()
    }

    pub fn build(&self) -> Result<CarnotGroupSpec> {
        if self.weights.len() != self.n {
            return Err(Error::InvalidGroupSpec(format!(
                "weights has {} entries but N = {}",
                self.weights.len(),
                self.n
            )));
        }
        let mut brackets = Vec::with_capacity(self.brackets.len());
        for b in &self.brackets {
            if b.i == 0 || b.j == 0 || b.k == 0 {
                return Err(Error::InvalidGroupSpec(
                    "bracket indices are 1-based; got a 0".into(),
                ));
            }
            brackets.push((b.i - 1, b.j - 1, b.k - 1, b.c));
        }
        let spec = CarnotGroupSpec::new(self.name.clone(), self.weights.clone(), &brackets)?;
        if spec.horizontal_dim() != self.m {
            return Err(Error::InvalidGroupSpec(format!(
                "declared m = {} but weights give m = {}",
                self.m,
                spec.horizontal_dim()
            )));
        }
        if spec.step() != self.r {
            return Err(Error::InvalidGroupSpec(format!(
                "declared r = {} but weights give r = {}",
                self.r,
                spec.step()
            )));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_heisenberg_json() {
        let json = r#"{
            "name": "h1-custom", "N": 3, "m": 2, "r": 2,
            "weights": [1, 1, 2],
            "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]
        }"#;
        let file: GroupSpecFile = serde_json::from_str(json).unwrap();
        let g = file.build().unwrap();
        assert_eq!(g.homogeneous_dim(), 4);
        assert_eq!(g.horizontal_dim(), 2);
    }

    #[test]
    fn declared_metadata_must_match() {
        let json = r#"{
            "name": "bad", "N": 3, "m": 1, "r": 2,
            "weights": [1, 1, 2],
            "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]
        }"#;
        let file: GroupSpecFile = serde_json::from_str(json).unwrap();
        assert!(file.build().is_err());
    }
}
