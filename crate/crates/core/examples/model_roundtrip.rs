//! Save a model as manifest + blob, reload it, then show what corruption looks like.

use sleepnet::graph::format::blob_path;
use sleepnet::graph::{load_model, save_model};
use sleepnet::zoo::{build_paper_cnn, HeadConfig, WeightInit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("sleepnet-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("cnn.json");

    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 42 })?;
    save_model(&g, &path)?;
    let blob = std::fs::read(blob_path(&path))?;
    println!(
        "manifest {} ({} bytes), blob {} bytes",
        path.display(),
        std::fs::metadata(&path)?.len(),
        blob.len()
    );
    println!("reloaded identical: {}", load_model(&path)? == g);

    let mut bad = blob.clone();
    bad[1000] ^= 1;
    std::fs::write(blob_path(&path), &bad)?;
    println!("flipped bit:  {}", load_model(&path).unwrap_err());
    std::fs::write(blob_path(&path), &blob[..blob.len() - 8])?;
    println!("truncated:    {}", load_model(&path).unwrap_err());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
