use std::path::Path;
use std::process::{Command, Output};

use vectorix::channel::{load_channel, save_channel, ChannelSet, TonePlan};
use vectorix::commands::{RateTable, SweepTable};
use vectorix::linalg::CMatrix;

fn vectorix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vectorix"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .env_remove("VECTORIX_SEED")
        .output()
        .expect("binary runs")
}

const SMALL: [&str; 4] = ["--lines", "4", "--band-end", "12.45e6"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&SMALL);
    v
}

fn parse_rates_csv(text: &str) -> Vec<(String, Vec<f64>)> {
    text.lines()
        .skip(2)
        .map(|l| {
            let mut f = l.split(',');
            let scheme = f.next().unwrap().to_string();
            let _strategy = f.next();
            (scheme, f.map(|x| x.parse().unwrap()).collect())
        })
        .collect()
}

#[test]
fn rates_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = vectorix(dir.path(), &with_small(&["rates"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(csv.starts_with("# vectorix-rates v1\nscheme,strategy,mean_mbps,min_mbps,failed_tones,line0_mbps"));
    let table: RateTable = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.json")).unwrap()).unwrap();
    let rows = parse_rates_csv(&csv);
    assert_eq!(rows.len(), 9);
    for ((scheme, values), row) in rows.iter().zip(&table.rows) {
        assert_eq!(scheme, &row.scheme);
        assert_eq!(values[0], row.mean_mbps);
        assert_eq!(values[1], row.min_mbps);
        assert_eq!(values[2], row.failed_tones as f64);
        assert_eq!(&values[3..], &row.line_mbps[..]);
    }
    let per_line = std::fs::read_to_string(dir.path().join("rates_per_line.csv")).unwrap();
    assert_eq!(per_line.lines().count(), 2 + 4);
}

#[test]
fn identical_config_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(vectorix(dir.path(), &with_small(&["rates"])).status.success());
        assert!(vectorix(dir.path(), &with_small(&["sweep-bdo", "--bdo-grid", "0,5e6"])).status.success());
    }
    for name in ["rates.csv", "rates.json", "rates_per_line.csv", "sweep_bdo.csv", "sweep_bdo.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn identity_channel_gives_equal_rates_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let set = ChannelSet::uniform(TonePlan::new(2.1e6, 51.75e3, 20).unwrap(), CMatrix::identity(3)).unwrap();
    let path = dir.path().join("id.txt");
    save_channel(&set, &path).unwrap();
    let out = vectorix(dir.path(), &["rates", "--channel", path.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("rates.csv").exists());
    let table: RateTable = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.json")).unwrap()).unwrap();
    let first = &table.rows[0].line_mbps;
    for row in &table.rows {
        assert_eq!(&row.line_mbps, first, "{}", row.scheme);
        assert_eq!(row.mean_mbps, row.min_mbps);
    }
}

#[test]
fn sweep_endpoints_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = vectorix(dir.path(), &with_small(&["sweep-bdo", "--bdo-grid", "0,5e6,10401750", "--csv"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep_bdo.csv")).unwrap();
    assert!(csv.starts_with("# vectorix-sweep-bdo v1\nvariant,b_do_hz,mean_mbps,min_mbps\n"));
    assert_eq!(csv.lines().count(), 2 + 6);
    let rates = vectorix(dir.path(), &with_small(&["rates", "--schemes", "THP-DO,THP-IVB", "--json"]));
    assert!(rates.status.success());
    let table: RateTable = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.json")).unwrap()).unwrap();
    let sweep: SweepTable = {
        let out = vectorix(dir.path(), &with_small(&["sweep-bdo", "--bdo-grid", "0,10401750", "--json"]));
        assert!(out.status.success());
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_bdo.json")).unwrap()).unwrap()
    };
    let (do_row, ivb_row) = (table.row("THP-DO").unwrap(), table.row("THP-IVB").unwrap());
    let pick = |variant: &str, b: f64| sweep.rows.iter().find(|r| r.variant == variant && r.b_do_hz == b).unwrap();
    assert_eq!((pick("DO-IVB", 0.0).mean_mbps, pick("DO-IVB", 0.0).min_mbps), (ivb_row.mean_mbps, ivb_row.min_mbps));
    assert_eq!((pick("DO-IVB", 10401750.0).mean_mbps, pick("DO-IVB", 10401750.0).min_mbps), (do_row.mean_mbps, do_row.min_mbps));
    assert_eq!((pick("IVB-DO", 0.0).mean_mbps, pick("IVB-DO", 0.0).min_mbps), (do_row.mean_mbps, do_row.min_mbps));
}

#[test]
fn verify_passes_clean_and_names_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let clean = vectorix(dir.path(), &with_small(&["verify", "--symbols", "200", "--tone-stride", "8"]));
    let stdout = String::from_utf8_lossy(&clean.stdout);
    assert_eq!(clean.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS maxmin-oracle L=3"));
    assert!(stdout.contains("sorted optimal in"));

    let faulty = vectorix(
        dir.path(),
        &with_small(&["verify", "--schemes", "THP-VB", "--symbols", "50", "--tone-stride", "50", "--inject-f-perturbation", "1e-3"]),
    );
    assert_eq!(faulty.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&faulty.stderr).contains("zf-residual THP-VB"));
}

#[test]
fn exit_codes_for_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vectorix(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(vectorix(dir.path(), &["rates", "--schemes", "ER-THP-DO"]).status.code(), Some(1));
    assert_eq!(vectorix(dir.path(), &["rates", "--lines", "1"]).status.code(), Some(1));
    let missing = dir.path().join("missing.txt");
    assert_eq!(vectorix(dir.path(), &["rates", "--channel", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "not a channel\n").unwrap();
    assert_eq!(vectorix(dir.path(), &["rates", "--channel", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn gen_channel_round_trips_and_seed_env_applies() {
    let dir = tempfile::tempdir().unwrap();
    let out = vectorix(dir.path(), &with_small(&["gen-channel", "--seed", "5"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = load_channel(dir.path().join("channel.txt")).unwrap();
    assert_eq!((written.lines(), written.tone_count()), (4, 201));

    let env_dir = tempfile::tempdir().unwrap();
    let env_run = Command::new(env!("CARGO_BIN_EXE_vectorix"))
        .args(with_small(&["gen-channel"]))
        .args(["--out", env_dir.path().to_str().unwrap()])
        .env("VECTORIX_SEED", "5")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("channel.txt")).unwrap(),
        std::fs::read(env_dir.path().join("channel.txt")).unwrap()
    );
    let other = tempfile::tempdir().unwrap();
    assert!(vectorix(other.path(), &with_small(&["gen-channel", "--seed", "6"])).status.success());
    assert_ne!(
        std::fs::read(dir.path().join("channel.txt")).unwrap(),
        std::fs::read(other.path().join("channel.txt")).unwrap()
    );
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"lines": 3, "band_end_hz": 12.45e6, "schemes": ["THP"]}"#).unwrap();
    let out = vectorix(dir.path(), &["rates", "--config", cfg.to_str().unwrap(), "--lines", "2", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table: RateTable = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.json")).unwrap()).unwrap();
    assert_eq!(table.lines, 2);
    assert_eq!(table.rows.len(), 1);
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(vectorix(dir.path(), &["rates", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn weakest_histogram_counts_every_tone() {
    let dir = tempfile::tempdir().unwrap();
    let out = vectorix(dir.path(), &with_small(&["hist-weakest", "--csv"]));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("weakest_line.csv")).unwrap();
    assert!(csv.starts_with("# vectorix-weakest-line v1\nline,count\n"));
    let total: usize = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 201);
}
