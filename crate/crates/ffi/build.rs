use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("IPREDICT_H".into()),
        cpp_compat: true,
        documentation: true,
        autogen_warning: Some("/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */".into()),
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            rename_variants: cbindgen::RenameRule::ScreamingSnakeCase,
            ..Default::default()
        },
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("generating C bindings")
        .write_to_file(crate_dir.join("include").join("ipredict.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
}
