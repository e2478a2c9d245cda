use std::process::Command;

fn main() {
    let id = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string());
    println!(
        "cargo:rustc-env=PIPGD_BUILD_ID={}+{}",
        env!("CARGO_PKG_VERSION"),
        id
    );
    println!("cargo:rerun-if-env-changed=PIPGD_BUILD_ID");
}
