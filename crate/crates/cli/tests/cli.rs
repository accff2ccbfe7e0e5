//! End-to-end tests of the `sawtooth` binary: pipeline wiring, byte-level
//! reproducibility, config error reporting and the golden fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sawtooth")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn invalid_config_fails_with_single_line_listing_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        "[run]\nmaster_seed = oops\n[output]\n[data]\nkind = cyclic\nclasses = 1\nper_class = 0\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["gen-data", "-c", "bad.cfg"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one line, got: {stderr}");
    assert!(lines[0].starts_with("error: "), "{stderr}");
    for needle in [
        "[run].master_seed",
        "[output].dir",
        "[data].classes",
        "[data].per_class",
    ] {
        assert!(lines[0].contains(needle), "missing {needle} in: {stderr}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.cfg"),
        "[run]\nmaster_seed = 1\ntypo_key = 2\n[output]\ndir = o\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["gen-data", "-c", "bad.cfg"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown key 'typo_key'"), "{stderr}");
}

fn write_pipeline_configs(dir: &Path) {
    fs::write(
        dir.join("gen.cfg"),
        "[run]\nmaster_seed = 100\n[output]\ndir = work\ndataset = cyclic.csv\n\
         [data]\nkind = cyclic\nclasses = 2\nchannels = 1\nlength = 16\nper_class = 6\nnoise_level = 0.1\n",
    )
    .unwrap();
    fs::write(
        dir.join("train.cfg"),
        "[run]\nmaster_seed = 11\n[output]\ndir = work\n\
         [schedule]\nT = 60\nbeta_start = 0.0001\nbeta_end = 0.02\n\
         [predictor]\nhidden1 = 12\nhidden2 = 12\n\
         [train]\ndataset = work/cyclic.csv\nclass = cyclic0\nsteps = 300\nlearning_rate = 0.02\n",
    )
    .unwrap();
    fs::write(
        dir.join("sample.cfg"),
        "[run]\nmaster_seed = 21\n[output]\ndir = work/s1\n\
         [schedule]\nT = 60\nbeta_start = 0.0001\nbeta_end = 0.02\ntotal_steps = 20\nsawtooth_n = 2\n\
         [predictor]\nkind = denoiser\nmodel = work/model.txt\n\
         [sample]\nmethod = sawtooth\ncount = 3\nlabel = cyclic0\nchecksums = true\n",
    )
    .unwrap();
}

#[test]
fn pipeline_runs_and_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_pipeline_configs(dir.path());
    run_ok(dir.path(), &["gen-data", "-c", "gen.cfg"]);
    run_ok(dir.path(), &["train", "-c", "train.cfg"]);
    run_ok(dir.path(), &["sample", "-c", "sample.cfg"]);

    let samples = fs::read(dir.path().join("work/s1/samples.csv")).unwrap();
    let trajectory = fs::read(dir.path().join("work/s1/trajectory.csv")).unwrap();
    let model = fs::read(dir.path().join("work/model.txt")).unwrap();

    // rerunning every stage reproduces the files byte for byte
    run_ok(dir.path(), &["gen-data", "-c", "gen.cfg"]);
    run_ok(dir.path(), &["train", "-c", "train.cfg"]);
    run_ok(dir.path(), &["sample", "-c", "sample.cfg"]);
    assert_eq!(model, fs::read(dir.path().join("work/model.txt")).unwrap());
    assert_eq!(
        samples,
        fs::read(dir.path().join("work/s1/samples.csv")).unwrap()
    );
    assert_eq!(
        trajectory,
        fs::read(dir.path().join("work/s1/trajectory.csv")).unwrap()
    );
    // no stray temp files from the atomic writes
    for entry in fs::read_dir(dir.path().join("work")).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        assert!(!name.contains(".tmp."), "leftover temp file {name}");
    }

    // a different master seed changes the data
    let out = run_in(dir.path(), &["sample", "-c", "sample.cfg", "--seed", "22"]);
    assert!(out.status.success());
    assert_ne!(
        samples,
        fs::read(dir.path().join("work/s1/samples.csv")).unwrap()
    );
}

#[test]
fn ddim_and_single_iteration_sawtooth_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    write_pipeline_configs(dir.path());
    run_ok(dir.path(), &["gen-data", "-c", "gen.cfg"]);
    run_ok(dir.path(), &["train", "-c", "train.cfg"]);

    let base = fs::read_to_string(dir.path().join("sample.cfg")).unwrap();
    let saw = base
        .replace("sawtooth_n = 2", "sawtooth_n = 1")
        .replace("dir = work/s1", "dir = work/saw");
    let ddim = saw
        .replace("method = sawtooth", "method = ddim")
        .replace("dir = work/saw", "dir = work/ddim");
    fs::write(dir.path().join("saw.cfg"), saw).unwrap();
    fs::write(dir.path().join("ddim.cfg"), ddim).unwrap();
    run_ok(dir.path(), &["sample", "-c", "saw.cfg"]);
    run_ok(dir.path(), &["sample", "-c", "ddim.cfg"]);
    assert_eq!(
        fs::read(dir.path().join("work/saw/samples.csv")).unwrap(),
        fs::read(dir.path().join("work/ddim/samples.csv")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("work/saw/trajectory.csv")).unwrap(),
        fs::read(dir.path().join("work/ddim/trajectory.csv")).unwrap()
    );
}

#[test]
fn ddpm_and_stochastic_ddim_methods_run_and_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    write_pipeline_configs(dir.path());
    run_ok(dir.path(), &["gen-data", "-c", "gen.cfg"]);
    run_ok(dir.path(), &["train", "-c", "train.cfg"]);

    // full-length ancestral sampling: one transition per schedule step
    fs::write(
        dir.path().join("ddpm.cfg"),
        "[run]\nmaster_seed = 21\n[output]\ndir = work/ddpm\n\
         [schedule]\nT = 60\nbeta_start = 0.0001\nbeta_end = 0.02\n\
         [predictor]\nkind = denoiser\nmodel = work/model.txt\n\
         [sample]\nmethod = ddpm\ncount = 2\nlabel = x\n",
    )
    .unwrap();
    run_ok(dir.path(), &["sample", "-c", "ddpm.cfg"]);
    let trajectory = fs::read_to_string(dir.path().join("work/ddpm/trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 2 + 2 * 60);
    let first = fs::read(dir.path().join("work/ddpm/samples.csv")).unwrap();
    run_ok(dir.path(), &["sample", "-c", "ddpm.cfg"]);
    assert_eq!(first, fs::read(dir.path().join("work/ddpm/samples.csv")).unwrap());

    // ddim with eta > 0 draws noise but stays seed-reproducible
    fs::write(
        dir.path().join("noisy_ddim.cfg"),
        "[run]\nmaster_seed = 21\n[output]\ndir = work/noisy\n\
         [schedule]\nT = 60\nbeta_start = 0.0001\nbeta_end = 0.02\ntotal_steps = 20\nsawtooth_n = 1\n\
         [predictor]\nkind = denoiser\nmodel = work/model.txt\n\
         [sample]\nmethod = ddim\neta = 0.5\ncount = 2\nlabel = x\n",
    )
    .unwrap();
    run_ok(dir.path(), &["sample", "-c", "noisy_ddim.cfg"]);
    let first = fs::read(dir.path().join("work/noisy/samples.csv")).unwrap();
    run_ok(dir.path(), &["sample", "-c", "noisy_ddim.cfg"]);
    assert_eq!(first, fs::read(dir.path().join("work/noisy/samples.csv")).unwrap());
}

#[test]
fn tstr_command_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    write_pipeline_configs(dir.path());
    run_ok(dir.path(), &["gen-data", "-c", "gen.cfg"]);
    fs::write(
        dir.path().join("tstr.cfg"),
        "[run]\nmaster_seed = 1\n[output]\ndir = work\n\
         [tstr]\nsynthetic = work/cyclic.csv\nreal = work/cyclic.csv\n",
    )
    .unwrap();
    run_ok(dir.path(), &["tstr", "-c", "tstr.cfg"]);
    let report = fs::read_to_string(dir.path().join("work/tstr.txt")).unwrap();
    // identical separable train/test sets score perfectly
    assert!(report.contains("macro_f1 = 1.0"), "{report}");
    assert!(report.contains("gmean = 1.0"), "{report}");
    assert!(report.contains("chance_level = 0.5"), "{report}");
}

#[test]
fn sample_rejects_inconsistent_method_settings() {
    let dir = tempfile::tempdir().unwrap();
    write_pipeline_configs(dir.path());
    let base = fs::read_to_string(dir.path().join("sample.cfg")).unwrap();
    // ddim with N > 1 is ambiguous and refused
    let bad = base.replace("method = sawtooth", "method = ddim");
    fs::write(dir.path().join("bad.cfg"), bad).unwrap();
    let out = run_in(dir.path(), &["sample", "-c", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("sawtooth_n"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // sawtooth with eta != 0 is refused
    let bad = fs::read_to_string(dir.path().join("sample.cfg"))
        .unwrap()
        .replace("count = 3", "count = 3\neta = 0.5");
    fs::write(dir.path().join("bad2.cfg"), bad).unwrap();
    let out = run_in(dir.path(), &["sample", "-c", "bad2.cfg"]);
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("eta"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn golden_dataset_fixtures_regenerate_byte_identically() {
    let root = repo_root();
    for (config, fixture) in [
        ("configs/fixture_cyclic.cfg", "fixtures/dataset_cyclic.csv"),
        (
            "configs/fixture_imbalanced.cfg",
            "fixtures/dataset_imbalanced.csv",
        ),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let text = fs::read_to_string(root.join(config)).unwrap();
        let patched = text.replace("dir = fixtures", &format!("dir = {}", dir.path().display()));
        fs::write(dir.path().join("fix.cfg"), patched).unwrap();
        run_ok(dir.path(), &["gen-data", "-c", "fix.cfg"]);
        let name = Path::new(fixture).file_name().unwrap();
        let generated = fs::read(dir.path().join(name)).unwrap();
        let golden = fs::read(root.join(fixture)).unwrap();
        assert_eq!(generated, golden, "{fixture} drifted from its config");
    }
}

#[test]
fn golden_fixtures_parse_with_expected_shape() {
    let root = repo_root();
    let cyclic = sawtooth_cli::io::load_dataset(&root.join("fixtures/dataset_cyclic.csv")).unwrap();
    assert_eq!(cyclic.class_count(), 4);
    assert_eq!(cyclic.len(), 12);
    assert_eq!(cyclic.shape(), Some((1, 32)));

    let imbalanced =
        sawtooth_cli::io::load_dataset(&root.join("fixtures/dataset_imbalanced.csv")).unwrap();
    assert_eq!(imbalanced.class_counts(), vec![2, 18]);
    assert_eq!(imbalanced.shape(), Some((1, 16)));
}
