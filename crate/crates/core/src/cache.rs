//! Versioned on-disk cache of cluster spectra.
//!
//! One JSON document per `(geometry, parameters, sector set)`. Floats are
//! written in shortest round-trip form and parsed exactly, so a reload is
//! bit-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ed::{solve_cluster, ClusterSpectra, HubbardParams, SectorSet};
use crate::error::{Error, Result};
use crate::lattice::ClusterGeometry;

pub const CACHE_FORMAT: &str = "hubbard-witness/spectra";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    spectra: ClusterSpectra,
}

pub fn to_string(spectra: &ClusterSpectra) -> Result<String> {
    let env = Envelope {
        format: CACHE_FORMAT.into(),
        version: CACHE_VERSION,
        spectra: spectra.clone(),
    };
    serde_json::to_string(&env).map_err(|e| Error::Cache(e.to_string()))
}

pub fn from_str(text: &str) -> Result<ClusterSpectra> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Cache(e.to_string()))?;
    if env.format != CACHE_FORMAT {
        return Err(Error::Cache(format!("unexpected format `{}`", env.format)));
    }
    if env.version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "cache version {} is not supported (expected {CACHE_VERSION})",
            env.version
        )));
    }
    Ok(env.spectra)
}

pub fn save(path: &Path, spectra: &ClusterSpectra) -> Result<()> {
    fs::write(path, to_string(spectra)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ClusterSpectra> {
    from_str(&fs::read_to_string(path)?)
}

/// File name that encodes the cache key.
pub fn key_file_name(geom: &ClusterGeometry, params: &HubbardParams, set: SectorSet) -> String {
    let set = match set {
        SectorSet::HalfFilled => "half",
        SectorSet::All => "all",
    };
    format!(
        "{}_t{:016x}_u{:016x}_mu{:016x}_{set}.json",
        geom.tag(),
        params.t.to_bits(),
        params.u.to_bits(),
        params.mu.to_bits()
    )
}

/// Directory-backed cache in front of [`solve_cluster`].
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SpectrumCache { dir })
    }

    pub fn path_for(&self, geom: &ClusterGeometry, params: &HubbardParams, set: SectorSet) -> PathBuf {
        self.dir.join(key_file_name(geom, params, set))
    }

    /// Load the spectra if cached and matching, otherwise solve and store.
    pub fn get_or_solve(
        &self,
        geom: &ClusterGeometry,
        params: &HubbardParams,
        set: SectorSet,
    ) -> Result<ClusterSpectra> {
        let path = self.path_for(geom, params, set);
        if path.exists() {
            let cached = load(&path)?;
            if &cached.geometry == geom && &cached.params == params && cached.set == set {
                return Ok(cached);
            }
        }
        let spectra = solve_cluster(geom, params, set)?;
        save(&path, &spectra)?;
        Ok(spectra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let geom = ClusterGeometry::ring(4).unwrap();
        let params = HubbardParams::half_filled(1.0, 3.7).unwrap();
        let spectra = solve_cluster(&geom, &params, SectorSet::All).unwrap();
        let back = from_str(&to_string(&spectra).unwrap()).unwrap();
        assert_eq!(back, spectra);
    }

    #[test]
    fn rejects_other_versions() {
        let geom = ClusterGeometry::chain(2).unwrap();
        let params = HubbardParams::half_filled(1.0, 1.0).unwrap();
        let spectra = solve_cluster(&geom, &params, SectorSet::HalfFilled).unwrap();
        let text = to_string(&spectra).unwrap().replace("\"version\":1", "\"version\":99");
        assert!(matches!(from_str(&text), Err(Error::Cache(_))));
    }

    #[test]
    fn directory_cache_reuses_files() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectrumCache::new(dir.path()).unwrap();
        let geom = ClusterGeometry::chain(3).unwrap();
        let params = HubbardParams::half_filled(1.0, 2.0).unwrap();
        let first = cache.get_or_solve(&geom, &params, SectorSet::All).unwrap();
        assert!(cache.path_for(&geom, &params, SectorSet::All).exists());
        let second = cache.get_or_solve(&geom, &params, SectorSet::All).unwrap();
        assert_eq!(first, second);
    }
}
