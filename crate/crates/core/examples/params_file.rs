//! Writing public parameters to JSON and reading them back.

use kap::gen_public_params;
use kap::wire::{params_from_file, params_from_json, params_to_file, WireError};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("params.json");

    let pp = gen_public_params(4, &[0x2a])?;
    params_to_file(&pp, &path)?;
    println!("{}", std::fs::read_to_string(&path)?);

    let loaded = params_from_file(&path)?;
    assert_eq!(loaded, pp);

    // an entry equal to p is rejected with its location
    let text = std::fs::read_to_string(&path)?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)?;
    doc["C"][1][2] = doc["p"].clone();
    match params_from_json(&doc.to_string()) {
        Err(WireError::Validation { path, reason }) => println!("rejected {path}: {reason}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
