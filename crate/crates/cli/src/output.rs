use std::path::Path;

use serde::Serialize;

use crate::CliResult;

/// One output file, fully rendered before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// CSV with a single `# key=value …` metadata line in front of the header.
pub fn csv_artifact(name: &str, meta: &[(&str, String)], headers: &[String], rows: &[Vec<String>]) -> CliResult<Artifact> {
    let mut bytes = Vec::new();
    let line: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
    bytes.extend_from_slice(format!("# wtoda {}\n", line.join(" ")).as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        w.write_record(headers).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(Artifact { name: name.into(), bytes })
}

fn csv_err(e: csv::Error) -> crate::CliError {
    crate::CliError::Other(e.to_string())
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> CliResult<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| crate::CliError::Other(e.to_string()))?;
    bytes.push(b'\n');
    Ok(Artifact { name: name.into(), bytes })
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
