mod common;

use std::fs;
use std::path::Path;

use patientflow::scenario::{Scenario, DISCHARGES_FILE, PARAMETERS_FILE, STACH_FILE};
use patientflow::Error;

fn written(seed: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::minimal(seed).write(dir.path()).unwrap();
    dir
}

fn edit(path: &Path, f: impl FnOnce(String) -> String) {
    let text = fs::read_to_string(path).unwrap();
    fs::write(path, f(text)).unwrap();
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn written_scenario_loads_back() {
    let dir = written(11);
    let s = Scenario::load(dir.path()).unwrap();
    let original = common::minimal(11);
    assert_eq!(s.stach, original.stach);
    assert_eq!(s.nh, original.nh);
    assert!(s.defaulted.is_empty(), "{:?}", s.defaulted);
}

#[test]
fn generator_is_byte_identical_for_a_seed() {
    let (a, b, c) = (written(5), written(5), written(6));
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    assert_ne!(dir_bytes(a.path()), dir_bytes(c.path()));
}

#[test]
fn dangling_facility_id_is_reported() {
    let dir = written(1);
    edit(&dir.path().join(DISCHARGES_FILE), |t| t + "999,0,community,5\n");
    let err = Scenario::load(dir.path()).unwrap_err();
    assert!(err.to_string().contains("999"), "{err}");
}

#[test]
fn bad_header_names_the_file_and_line() {
    let dir = written(1);
    edit(&dir.path().join(STACH_FILE), |t| t.replacen("beds_icu", "icu_beds", 1));
    match Scenario::load(dir.path()).unwrap_err() {
        Error::Parse { file, line, .. } => {
            assert!(file.ends_with(STACH_FILE));
            assert_eq!(line, 1);
        }
        Error::Validation(v) => assert!(v.iter().any(|m| m.contains(STACH_FILE) && m.contains(":1:")), "{v:?}"),
        other => panic!("{other}"),
    }
}

#[test]
fn bad_value_names_its_line() {
    let dir = written(1);
    edit(&dir.path().join(DISCHARGES_FILE), |t| {
        let mut lines: Vec<String> = t.lines().map(String::from).collect();
        lines[2] = "1,0,community,lots".into();
        lines.join("\n") + "\n"
    });
    let msg = Scenario::load(dir.path()).unwrap_err().to_string();
    assert!(msg.contains(&format!("{DISCHARGES_FILE}:3")), "{msg}");
}

#[test]
fn missing_parameter_falls_back_to_its_default() {
    let dir = written(1);
    edit(&dir.path().join(PARAMETERS_FILE), |t| {
        t.lines()
            .filter(|l| !l.starts_with("icu_fill="))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    });
    let s = Scenario::load(dir.path()).unwrap();
    assert!(s.defaulted.contains(&"icu_fill"));
    assert_eq!(s.parameters.icu_fill, 0.5);
}

#[test]
fn unknown_parameter_is_rejected() {
    let dir = written(1);
    edit(&dir.path().join(PARAMETERS_FILE), |t| t + "icu_fil=0.4\n");
    assert!(Scenario::load(dir.path()).is_err());
}
