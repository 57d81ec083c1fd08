use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR"));
    let out_path = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR")).join("vidmix.h");

    let config =
        cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation succeeds")
        .write_to_file(&out_path);

    // Keep the committed copy in sync; skip silently on read-only sources.
    let committed = crate_dir.join("include").join("vidmix.h");
    let generated = fs::read(&out_path).expect("generated header readable");
    if fs::read(&committed).ok().as_deref() != Some(generated.as_slice()) {
        let _ = fs::create_dir_all(committed.parent().unwrap());
        let _ = fs::write(&committed, &generated);
    }

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
