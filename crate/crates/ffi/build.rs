use std::env;
use std::path::PathBuf;

use cbindgen::{Config, EnumConfig, Language, RenameRule};

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");

    let config = Config {
        language: Language::C,
        include_guard: Some("ACCEL_CONSENSUS_H".into()),
        cpp_compat: true,
        usize_is_size_t: true,
        enumeration: EnumConfig {
            rename_variants: RenameRule::QualifiedScreamingSnakeCase,
            ..EnumConfig::default()
        },
        ..Config::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("unable to generate C bindings")
        .write_to_file(crate_dir.join("include/accel_consensus.h"));
}
