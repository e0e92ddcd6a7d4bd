//! Loading fans (by path or catalog name) and collection files.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tilting_core::blocks::ExtendedCollection;
use tilting_core::io::{CollectionFile, FileError};
use tilting_core::toric::{fan_from_json, SmoothToricSurface};

use crate::exit::Failure;

pub fn default_catalog() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../catalog")
}

pub fn digest(value: &impl serde::Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

/// A path to a fan file, or the name of a catalog entry.
pub fn load_fan(arg: &str, catalog: &Path) -> Result<SmoothToricSurface, Failure> {
    let direct = Path::new(arg);
    let path = if direct.is_file() {
        direct.to_path_buf()
    } else {
        let p = catalog.join(format!("{arg}.json"));
        if !p.is_file() {
            return Err(Failure::input(format!(
                "{arg} is neither a fan file nor a catalog entry in {}",
                catalog.display()
            )));
        }
        p
    };
    Ok(fan_from_json(&read(&path)?)?)
}

/// A collection file, or a construct report embedding one under "collection".
pub fn load_collection(path: &Path, catalog: &Path) -> Result<ExtendedCollection, Failure> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::from(FileError::Json(e)))?;
    let inner = match value.get("collection") {
        Some(c) => c.clone(),
        None => value,
    };
    let file: CollectionFile =
        serde_json::from_value(inner).map_err(|e| Failure::from(FileError::Json(e)))?;
    Ok(file.into_collection(|name| {
        load_fan(name, catalog).map_err(|_| FileError::UnknownSurface(name.to_string()))
    })?)
}
