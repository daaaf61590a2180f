// LAPACK symbols come from the system OpenBLAS (set RIS_ANM_LAPACK_LIB to
// link a different implementation, e.g. `lapack`).
fn main() {
    println!("cargo:rerun-if-env-changed=RIS_ANM_LAPACK_LIB");
    let lib = std::env::var("RIS_ANM_LAPACK_LIB").unwrap_or_else(|_| "openblas".to_string());
    println!("cargo:rustc-link-lib={lib}");
}
