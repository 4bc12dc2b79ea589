use std::path::{Path, PathBuf};
use std::process::Command;

fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("reverting.h").exists(), "header not generated");

    let lib = profile_dir().join("libreverting_ffi.a");
    if !lib.exists() {
        eprintln!("static library not found at {}; skipping link", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("reverting_smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler ({cc}); skipping link");
        return;
    };
    assert!(status.success(), "C compile failed");

    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "exit {:?}: {stdout}", run.status.code());
    assert!(stdout.starts_with("ok "), "{stdout}");
}
