// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlyap::{run_closed_loop, Stage};
use qlyap_cli::config::ExperimentConfig;
use qlyap_cli::output::{read_numeric_csv, TRAJECTORY_COLUMNS};
use qlyap_cli::{cmd_compare, cmd_free_evolution, cmd_run, CliError};

fn qlyap(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlyap"));
    cmd.args(args).env_remove("QLYAP_OUT_DIR");
    if let Some(d) = env_out {
        cmd.env("QLYAP_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

const SHORT_PD: &str = r#"
[model]
kind = "pd"

[law]
family = "law-x"
k_y = 400
k_z = 400
kick = [99, 20, 30]
kick_hold = "half-turn"

[sim]
dt = 1e-5
t_end = 0.01
"#;

#[test]
fn trajectory_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SHORT_PD).unwrap();
    cmd_run(&cfg, dir.path()).unwrap();
    let traj = run_closed_loop(
        &cfg.model.build().unwrap(),
        &cfg.single_law().unwrap().build().unwrap(),
        &cfg.target.build().unwrap(),
        &cfg.sim.build().unwrap(),
        None,
    )
    .unwrap();
    let (header, rows) = read_numeric_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(header, TRAJECTORY_COLUMNS);
    assert_eq!(rows.len(), traj.samples.len());
    for (row, s) in rows.iter().zip(&traj.samples) {
        assert_eq!(row[0], s.t);
        let u: Vec<f64> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|ij| s.u.0[ij])
            .collect();
        assert_eq!(&row[1..10], &u[..]);
        assert_eq!(&row[10..13], s.f_designed.as_slice());
        assert_eq!(&row[13..16], s.f_applied.as_slice());
        assert_eq!(&row[16..21], &[s.v, s.v_dis, s.d, s.fidelity, s.purity]);
        assert_eq!(row[24], f64::from(u8::from(s.kick)));
        assert_eq!(row[25], f64::from(u8::from(s.stage == Stage::Preservation)));
    }
}

#[test]
fn summary_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SHORT_PD).unwrap();
    cmd_run(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    let doc: toml::Table = text.parse().unwrap();
    let echo = toml::to_string(&doc["config"]).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), cfg);
    // Defaults are filled in.
    assert_eq!(doc["config"]["law"]["f_max"].as_float(), Some(5000.0));
    assert!(doc["summary"]["d_min"].as_float().is_some());
}

#[test]
fn identity_target_with_no_kick_starts_on_target() {
    let cfg = ExperimentConfig::from_toml(
        "[model]\nkind = \"closed\"\n[law]\nfamily = \"law-x\"\nk_y = 1\nk_z = 1\n[target]\ngate = \"identity\"\n[sim]\ndt = 1e-3\nt_end = 0.01\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_run(&cfg, dir.path()).unwrap();
    let doc: toml::Table = fs::read_to_string(dir.path().join("summary.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(doc["summary"]["d_min"].as_float(), Some(0.0));
    assert_eq!(doc["summary"]["t_at_d_min"].as_float(), Some(0.0));
}

#[test]
fn non_markovian_run_records_rate_from_zero() {
    let text = SHORT_PD.replace("kind = \"pd\"", "kind = \"non-markovian\"");
    let dir = tempfile::tempdir().unwrap();
    cmd_run(&ExperimentConfig::from_toml(&text).unwrap(), dir.path()).unwrap();
    let (header, rows) = read_numeric_csv(&dir.path().join("trajectory.csv")).unwrap();
    let col = header.iter().position(|h| h == "decay_rate").unwrap();
    assert_eq!(rows[0][col], 0.0);
    assert!(rows.iter().any(|r| r[col] != 0.0));
}

#[test]
fn compare_needs_two_laws() {
    let text = SHORT_PD.replace("[law]", "[[laws]]");
    let err = cmd_compare(
        &ExperimentConfig::from_toml(&text).unwrap(),
        Path::new("unused"),
    )
    .unwrap_err();
    assert!(
        matches!(err, CliError::Validation(_)) && err.to_string().contains("laws"),
        "{err}"
    );
}

#[test]
fn compare_writes_joint_table_and_ranking() {
    let text = format!(
        "{}\n{}",
        SHORT_PD.replace("[law]", "[[laws]]\nname = \"x\""),
        "[[laws]]\nname = \"dis\"\nfamily = \"baseline-dis\"\nk_y = 400\nk_z = 400\nkick = [99, 20, 30]\nkick_hold = \"half-turn\"\n"
    );
    let dir = tempfile::tempdir().unwrap();
    cmd_compare(&ExperimentConfig::from_toml(&text).unwrap(), dir.path()).unwrap();
    let (header, rows) = read_numeric_csv(&dir.path().join("comparison.csv")).unwrap();
    assert_eq!(header, ["t", "d_x", "f_x", "d_dis", "f_dis"]);
    assert_eq!(rows.len(), 1001);
    assert!(
        dir.path().join("trajectory_x.csv").exists()
            && dir.path().join("trajectory_dis.csv").exists()
    );
    let ranking = fs::read_to_string(dir.path().join("ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 3);
}

#[test]
fn free_evolution_purity_columns() {
    let text =
        "[free_evolution]\nkinds = [\"closed\", \"pd\", \"ad\"]\n[sim]\ndt = 1e-2\nt_end = 5\n";
    let dir = tempfile::tempdir().unwrap();
    cmd_free_evolution(&ExperimentConfig::from_toml(text).unwrap(), dir.path()).unwrap();
    let (header, rows) = read_numeric_csv(&dir.path().join("purity.csv")).unwrap();
    assert_eq!(header, ["t", "p_closed", "p_pd", "p_ad"]);
    for r in &rows {
        assert!((r[1] - 3.0).abs() <= 1e-12);
        if r[0] > 0.0 {
            assert!(r[3] <= r[2]);
        }
    }
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let bad = write_config(
        dir.path(),
        &SHORT_PD.replace("k_z = 400", "k_z = 400\nk_q = 1"),
    );
    let o = qlyap(
        &["run", "--config", bad.to_str().unwrap(), "--out", out_s],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k_q"));

    let o = qlyap(
        &[
            "run",
            "--config",
            dir.path().join("missing.toml").to_str().unwrap(),
            "--out",
            out_s,
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3));

    let diverging = SHORT_PD.replace(
        "kind = \"pd\"",
        "kind = \"custom\"\n[model.gks]\nre = [[-10000, 0, 0], [0, -10000, 0], [0, 0, -10000]]",
    );
    let cfg = write_config(dir.path(), &diverging);
    let o = qlyap(
        &["run", "--config", cfg.to_str().unwrap(), "--out", out_s],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged at t ="));

    let cfg = write_config(dir.path(), SHORT_PD);
    let o = qlyap(
        &["run", "--config", cfg.to_str().unwrap(), "--out", out_s],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let from_cfg = dir.path().join("cfg-dir");
    let text = format!(
        "{SHORT_PD}\n[output]\ndir = {:?}\n",
        from_cfg.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), &text);
    let cfg = cfg.to_str().unwrap();

    let env_dir = dir.path().join("env-dir");
    let flag_dir = dir.path().join("flag-dir");
    assert!(qlyap(
        &["run", "--config", cfg, "--out", flag_dir.to_str().unwrap()],
        Some(&env_dir)
    )
    .status
    .success());
    assert!(flag_dir.join("summary.toml").exists() && !env_dir.exists());
    assert!(qlyap(&["run", "--config", cfg], Some(&env_dir))
        .status
        .success());
    assert!(env_dir.join("summary.toml").exists() && !from_cfg.exists());
    assert!(qlyap(&["run", "--config", cfg], None).status.success());
    assert!(from_cfg.join("summary.toml").exists());
}

#[test]
fn shipped_configs_parse_and_build() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.model.build().unwrap();
        cfg.sim.build().unwrap();
        cfg.target.build().unwrap();
        for l in cfg.law.iter().chain(&cfg.laws) {
            l.build().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
        n += 1;
    }
    assert!(n >= 10);
}
