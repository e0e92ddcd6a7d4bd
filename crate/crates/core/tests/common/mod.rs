#![allow(dead_code)]

use std::path::PathBuf;

use tilting_core::toric::{fan_from_json, DivisorClass, SmoothToricSurface};

pub fn catalog_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../catalog")
}

pub fn catalog(name: &str) -> SmoothToricSurface {
    let text = std::fs::read_to_string(catalog_dir().join(format!("{name}.json"))).unwrap();
    fan_from_json(&text).unwrap()
}

pub fn catalog_all() -> Vec<SmoothToricSurface> {
    let mut names: Vec<String> = std::fs::read_dir(catalog_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json")
                .then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names.iter().map(|n| catalog(n)).collect()
}

pub fn weak_del_pezzo_catalog() -> Vec<SmoothToricSurface> {
    catalog_all()
        .into_iter()
        .filter(|s| s.classify().is_weak_del_pezzo())
        .collect()
}

/// Brute-force count of characters `m` with `<m, v_i> >= -a_i` for all rays.
pub fn lattice_h0(s: &SmoothToricSurface, d: &DivisorClass) -> u64 {
    let a = d.0.iter().map(|x| x.abs()).max().unwrap_or(0);
    let r = 2 * a * 3 + 4;
    let mut count = 0;
    for x in -r..=r {
        for y in -r..=r {
            if s.rays()
                .iter()
                .zip(&d.0)
                .all(|(v, &ai)| x * v[0] + y * v[1] >= -ai)
            {
                count += 1;
            }
        }
    }
    count
}

pub fn binom2(n: i64) -> u64 {
    if n < 0 {
        0
    } else {
        ((n + 1) * (n + 2) / 2) as u64
    }
}
