mod common;

use std::path::PathBuf;
use std::process::Command;

use clap::CommandFactory;
use common::corpus_dir;
use npefix::cli::{run_cli, Cli};

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["npefix"];
    argv.extend_from_slice(args);
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn case(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("npefix-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_documents_every_flag() {
    let root = Cli::command();
    for sub in root.get_subcommands() {
        let name = sub.get_name().to_string();
        let (code, out, _) = cli(&[&name, "--help"]);
        assert_eq!(code, 0, "{name}");
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(out.contains(&format!("--{long}")), "{name} --help misses --{long}");
                assert!(arg.get_help().is_some(), "{name} --{long} has no help text");
            }
        }
    }
}

#[test]
fn exit_codes() {
    let crash = case("crash/03_client_config.mj");
    let (code, _, err) = cli(&["run", &crash]);
    assert_eq!(code, 1);
    assert!(err.contains("NullPointerException"), "{err}");

    let (code, out, err) = cli(&["run", &crash, "--strategy", "S2a"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "4\n");

    let (code, _, err) = cli(&["run", &crash, "--strategy", "S3", "--trace"]);
    assert_eq!(code, 1);
    assert!(err.contains("outcome: US"), "{err}");
    assert!(err.contains("\"event\":\"try\""), "{err}");

    assert_eq!(cli(&["run", &crash, "--strategy", "S3", "--explore"]).0, 2);
    assert_eq!(cli(&["run", &crash, "--no-such-flag"]).0, 2);
    assert_eq!(cli(&["run", &crash, "--strategy", "S9"]).0, 2);
    assert_eq!(cli(&["run", &crash, "--entry", "Nope"]).0, 2);
    assert_eq!(cli(&["run", "/no/such/file.mj"]).0, 3);
    assert_eq!(cli(&["matrix", "/no/such/manifest.json"]).0, 3);
    assert_eq!(cli(&["run", &case("normal/01_hello.mj")]).0, 0);
}

#[test]
fn transform_writes_and_refuses_twice() {
    let dir = scratch("transform");
    let out = dir.join("out.mj");
    let src = case("crash/01_report_header.mj");
    assert_eq!(cli(&["transform", &src, "-o", out.to_str().unwrap()]).0, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("__npefix_checkForNull"));
    let again = dir.join("again.mj");
    let (code, _, err) = cli(&["transform", out.to_str().unwrap(), "-o", again.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    // the instrumented file still runs and crashes like the original with repair off
    let (code, _, err) = cli(&["run", out.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn explore_is_reproducible_and_deploys() {
    let dir = scratch("explore");
    let src = case("crash/02_catalog_registry.mj");
    let mut reports = Vec::new();
    for i in 0..2 {
        let report = dir.join(format!("r{i}.jsonl"));
        let deps = dir.join(format!("d{i}.json"));
        let (code, out, err) = cli(&[
            "explore",
            &src,
            "--seed",
            "42",
            "--report",
            report.to_str().unwrap(),
            "--deployments",
            deps.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("End: Deployed"), "{out}");
        reports.push((std::fs::read(&report).unwrap(), std::fs::read(&deps).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);

    // a deployed table replays without exploring
    let deps = dir.join("d0.json");
    let (code, out, err) = cli(&["run", &src, "--deployments", deps.to_str().unwrap(), "--trace"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("about"), "{out}");
    assert!(!err.contains("rng_draw\":0") && !err.contains("untried"), "{err}");
}

#[test]
fn matrix_and_seed_reports() {
    let manifest = case("manifest.json");
    let (code, out, _) = cli(&["matrix", &manifest, "--strategy", "S3,S4d", "--jobs", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("Union:"), "{out}");
    assert!(out.lines().next().unwrap().contains("S4d"));

    let (code, out, _) = cli(&["seed", "--campaign", &case("seeding/shop"), "--format", "text"]);
    assert_eq!(code, 0);
    assert!(out.contains("Removed null checks: 11"), "{out}");
    assert!(out.contains("Union repair rate"), "{out}");
}

#[test]
fn binary_runs() {
    let bin = env!("CARGO_BIN_EXE_npefix");
    let o = Command::new(bin).args(["run", &case("crash/12_car_engine.mj"), "--strategy", "S4d"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "mini 0\n");
    let o = Command::new(bin).args(["run", &case("crash/12_car_engine.mj")]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
