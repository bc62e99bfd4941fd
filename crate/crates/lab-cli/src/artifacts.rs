//! Plot-ready CSV emission. Headers are fixed constants, mirrored in
//! `schemas/csv-columns.md` and pinned by a golden test.

use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_DOC: &str = include_str!("../schemas/csv-columns.md");

pub const HEAT_CHECKS_HEADER: &str = "check,t,point,value,reference,std_error,tolerance,pass";
pub const KERNEL_NORMS_HEADER: &str = "t,norm";
pub const ENVELOPE_SAMPLES_HEADER: &str = "t,point,estimate,envelope,ratio";
pub const COLLAPSE_POINTS_HEADER: &str = "t,point,lhs,rhs,tolerance,pass";
pub const KOLMOGOROV_HEADER: &str = "lambda,iterations,grad_sup,residual,max_deriv_sup";
pub const UNIQUENESS_LEVELS_HEADER: &str = "dt,defect";
pub const CONSISTENCY_LEVELS_HEADER: &str = "dt,defect";
pub const ROUNDTRIP_HEADER: &str = "t,max_error";
pub const KRYLOV_RATIOS_HEADER: &str = "s,t,ratio_base,ratio_doubled";
pub const EMBEDDING_RATIOS_HEADER: &str = "horizon,ratio";

/// Collects the files a run writes so the manifest can list them all.
pub struct ArtifactSink {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactSink {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactSink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{row}")?;
        }
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, serde_json::to_vec_pretty(value)?)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Space-separated point rendering for the `point` columns.
pub fn point_str(x: &[f64]) -> String {
    x.iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_header_is_documented_verbatim() {
        for header in [
            HEAT_CHECKS_HEADER,
            KERNEL_NORMS_HEADER,
            ENVELOPE_SAMPLES_HEADER,
            COLLAPSE_POINTS_HEADER,
            KOLMOGOROV_HEADER,
            UNIQUENESS_LEVELS_HEADER,
            CONSISTENCY_LEVELS_HEADER,
            ROUNDTRIP_HEADER,
            KRYLOV_RATIOS_HEADER,
            EMBEDDING_RATIOS_HEADER,
        ] {
            assert!(
                SCHEMA_DOC.contains(&format!("`{header}`")),
                "header `{header}` missing from schemas/csv-columns.md"
            );
        }
    }
}
