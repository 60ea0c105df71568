//! Compiles and runs a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "cavcond.h"

static const char *CONFIG =
    "{\"structure\": {\"cavity_length_nm\": 20.0, \"barrier_meV\": 100.0,"
    " \"wells\": [{\"center_nm\": 0.0, \"width_nm\": 5.0, \"V0_meV\": 100.0}]},"
    " \"occupancy\": {\"mode\": \"pinned_level\", \"level\": 2},"
    " \"n_points\": 256, \"n_subbands\": 16,"
    " \"sweep\": {\"variable\": \"omega_c\", \"values\": [1.0]}}";

int main(void) {
    CavcondModel *m = NULL;
    if (cavcond_model_new(CONFIG, &m) != CAVCOND_STATUS_OK) {
        fprintf(stderr, "%s\n", cavcond_last_error());
        return 1;
    }
    double hw, g, g0;
    cavcond_model_reference_energy(m, &hw);
    if (cavcond_model_conductance(m, hw, 1.0, 1e6, &g) != CAVCOND_STATUS_OK) return 2;
    if (cavcond_model_g0(m, 1.0, 1e6, &g0) != CAVCOND_STATUS_OK) return 3;
    printf("%.6f\n", g / g0);
    cavcond_model_free(m);
    if (cavcond_model_new("{", &m) != CAVCOND_STATUS_CONFIG) return 4;
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test> -> target/<profile>
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libcavcond_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = std::env::temp_dir().join(format!("cavcond_c_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ratio: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(ratio > 0.0 && ratio < 1.0, "{ratio}");
    std::fs::remove_dir_all(&dir).ok();
}
