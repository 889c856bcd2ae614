//! On-disk formats: matrices, processes (matrix plus slot sidecar) and combs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use combres::comb::SlotStructure;
use combres::{Channel, ControlComb, LegSpec, MultiLegMatrix, ProcessTensor};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub schema_version: u32,
    pub legs: Vec<(String, usize)>,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl MatrixFile {
    pub fn from_matrix(m: &MultiLegMatrix<f64>) -> Self {
        let n = m.dim();
        let e = m.entries();
        Self {
            schema_version: SCHEMA_VERSION,
            legs: m.legs().iter().map(|l| (l.label.clone(), l.dim)).collect(),
            entries: (0..n * n).map(|k| e[(k / n, k % n)]).map(|z| [z.re, z.im]).collect(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_matrix(&self) -> Result<MultiLegMatrix<f64>, CliError> {
        check_schema(self.schema_version)?;
        let legs: Vec<LegSpec> = self.legs.iter().map(|(l, d)| LegSpec::new(l.as_str(), *d)).collect();
        let n: usize = legs.iter().map(|l| l.dim).product();
        if self.entries.len() != n * n {
            return Err(CliError::Input(format!(
                "expected {} entries for legs {:?}, found {}",
                n * n,
                self.legs,
                self.entries.len()
            )));
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.entries[i * n + j];
            Complex64::new(re, im)
        });
        MultiLegMatrix::new(m, legs).map_err(CliError::input)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotsFile {
    pub schema_version: u32,
    pub slots: SlotStructure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombFile {
    pub schema_version: u32,
    pub mask: Vec<usize>,
    pub pre: Vec<MatrixFile>,
    pub post: Vec<MatrixFile>,
}

impl CombFile {
    pub fn from_comb(z: &ControlComb<f64>) -> Self {
        let channel = |c: &Channel<f64>| MatrixFile::from_matrix(&c.choi_labelled("out", "in"));
        Self {
            schema_version: SCHEMA_VERSION,
            mask: z.mask().iter().copied().collect(),
            pre: z.pre().iter().map(channel).collect(),
            post: z.post().iter().map(channel).collect(),
        }
    }

    pub fn to_comb(&self) -> Result<ControlComb<f64>, CliError> {
        check_schema(self.schema_version)?;
        let channels = |files: &[MatrixFile]| -> Result<Vec<Channel<f64>>, CliError> {
            files
                .iter()
                .map(|f| Channel::from_choi(f.to_matrix()?).map_err(CliError::input))
                .collect()
        };
        ControlComb::new(channels(&self.pre)?, channels(&self.post)?, self.mask.iter().copied()).map_err(CliError::input)
    }
}

fn check_schema(version: u32) -> Result<(), CliError> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `dir/stem.json` → `dir/stem.<suffix>.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.json"))
}

pub fn write_process(path: &Path, t: &ProcessTensor<f64>) -> Result<(), CliError> {
    let sidecar = sibling(path, "slots");
    let mut m = MatrixFile::from_matrix(t.choi());
    m.metadata.insert("kind".into(), "process".into());
    m.metadata.insert(
        "slots".into(),
        sidecar.file_name().unwrap().to_string_lossy().into_owned(),
    );
    write_json(
        &sidecar,
        &SlotsFile {
            schema_version: SCHEMA_VERSION,
            slots: t.slots().clone(),
        },
    )?;
    write_json(path, &m)
}

pub fn read_process(path: &Path) -> Result<ProcessTensor<f64>, CliError> {
    let m: MatrixFile = read_json(path)?;
    let sidecar = match m.metadata.get("slots") {
        Some(name) => path.with_file_name(name),
        None => sibling(path, "slots"),
    };
    let s: SlotsFile = read_json(&sidecar)?;
    check_schema(s.schema_version)?;
    ProcessTensor::new(m.to_matrix()?, s.slots).map_err(CliError::input)
}

pub fn write_comb(path: &Path, z: &ControlComb<f64>) -> Result<(), CliError> {
    write_json(path, &CombFile::from_comb(z))
}

pub fn read_comb(path: &Path) -> Result<ControlComb<f64>, CliError> {
    read_json::<CombFile>(path)?.to_comb()
}
