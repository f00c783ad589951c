//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chiral_index::angle::Angle;
use chiral_index::homotopy::{asymptotic_check, homotopy_sweep, lifetime_index0, BumpProfile, HomotopyPath, PathFamily, Verdict, ASYMPTOTIC_GRID, MIN_GRID};
use chiral_index::index::PolicySettings;
use chiral_index::scenario::{run_scenario, Overrides, ScenarioConfig, ScenarioOutput};
use chiral_index::spectral::BasisLabel;
use chiral_index::spiral::{assemble_spiral_sl, required_order, spiral_basis, MuCoefficients};
use chiral_index::torus::torus_index0;
use chiral_index::torus::ConformalFactor;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenario(name: &str, cfg: Value) -> Result<(ScenarioOutput, Duration), String> {
    let start = Instant::now();
    let cfg = ScenarioConfig::parse(name, cfg, &Overrides::default()).map_err(|e| e.to_string())?;
    let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
    Ok((out, start.elapsed()))
}

/// Runs the binary with a config file; returns (exit code, report).
fn cli(dir: &Path, args: &[&str], cfg: &Value) -> (i32, Option<Value>) {
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out_dir = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_chiral-index"))
        .args(args)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .expect("binary runs");
    let report = std::fs::read_to_string(out_dir.join("report.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    let _ = std::fs::remove_dir_all(&out_dir);
    (status.status.code().unwrap_or(-1), report)
}

fn adjoint_defect(out: &ScenarioOutput) -> f64 {
    out.report["invariants"]["adjoint_defect"].as_f64().unwrap_or(f64::INFINITY)
}

fn ac1(defects: &mut Vec<f64>) -> Outcome {
    let mut slowest = Duration::ZERO;
    for p in 1..=3usize {
        for (negate, want) in [(false, p as i64), (true, -(p as i64))] {
            let (out, took) = scenario("shift", json!({"p": p, "N": 40 * p, "negate_gamma": negate}))?;
            slowest = slowest.max(took);
            let got = out.report["result"]["index"].as_i64();
            ensure(got == Some(want), format!("p = {p}, negated = {negate}: index {got:?}"))?;
            ensure(took < Duration::from_secs(1), format!("p = {p}: {took:?}"))?;
            ensure(out.report["invariants"]["pseudoscalar_valid"] == json!(true), "pseudoscalar check failed")?;
            ensure(out.report["invariants"]["sum_defect"].as_f64() == Some(0.0), "S != S_L + S_R")?;
            defects.push(adjoint_defect(&out));
        }
    }
    Ok(format!("indices ±1, ±2, ±3; slowest run {slowest:.2?}"))
}

fn ac2(defects: &mut Vec<f64>) -> Outcome {
    let mut worst_sine: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for p in 1..=3u32 {
        for k in [40usize, 80] {
            let (out, took) = scenario("torus", json!({"p": p, "K": k, "conformal": {"poisson": {"r": 0.5}}}))?;
            slowest = slowest.max(took);
            let r = &out.report["result"]["index"];
            ensure(r["index"].as_i64() == Some(i64::from(p)), format!("p = {p}, K = {k}: {}", r["index"]))?;
            ensure(r["stabilization"]["agreed"] == json!(true), "stabilization disagreed")?;
            let sine = out.report["result"]["kernel_subspace_sine"].as_f64().unwrap_or(1.0);
            worst_sine = worst_sine.max(sine);
            ensure(sine < 1e-6, format!("p = {p}, K = {k}: subspace sine {sine:e}"))?;
            ensure(took < Duration::from_secs(30), format!("p = {p}, K = {k}: {took:?}"))?;
            defects.push(adjoint_defect(&out));
        }
    }
    Ok(format!("ind0 = p for p = 1..3, K = 40, 80; max subspace sine {worst_sine:.1e}; slowest {slowest:.2?}"))
}

fn ac3() -> Outcome {
    let flat = ConformalFactor::Fourier {
        coeffs: vec![(0, std::f64::consts::TAU, 0.0)],
    };
    let r = torus_index0(&flat, 1, 20, &PolicySettings::default()).map_err(|e| e.to_string())?;
    let st = r.stabilization.as_ref().ok_or("no stabilization record")?;
    ensure(!r.finite, "flat factor reported finite")?;
    ensure(st.cutoffs == [20, 40], format!("cutoffs {:?}", st.cutoffs))?;
    ensure(
        st.zero_block_census[1] > st.zero_block_census[0],
        format!("census {:?} did not grow", st.zero_block_census),
    )?;
    Ok(format!("finite = false, census {:?} at K = 20, 40", st.zero_block_census))
}

fn ac4() -> Outcome {
    let (p, cutoff, nu) = (1u32, 12usize, 0.3);
    let co = MuCoefficients::seeded(0, 0.05, 0.7, required_order(p, cutoff), nu).map_err(|e| e.to_string())?;
    let s_l = assemble_spiral_sl(&co, p, cutoff).map_err(|e| e.to_string())?;
    let oracle = oracle::SpiralOracle::new(&co.a, &co.b, nu, i64::from(p), 2 * cutoff as i64, 600, 600);
    let labels = spiral_basis(p, cutoff).labels().to_vec();
    let key = |l: &BasisLabel| (l.position_like(), l.chirality().unwrap());
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for r in &labels {
        for c in &labels {
            worst = worst.max((s_l.get(r, c) - oracle.entry(key(r), key(c))).norm());
            pairs += 1;
        }
    }
    ensure(pairs >= 50, format!("only {pairs} pairs"))?;
    ensure(worst <= 1e-6, format!("max deviation {worst:e}"))?;
    Ok(format!("{pairs} mode pairs at 600x600, max deviation {worst:.1e}"))
}

fn ac5(defects: &mut Vec<f64>) -> Outcome {
    let mut slowest = Duration::ZERO;
    for p in 1..=2u32 {
        let (out, took) = scenario("spiral", json!({"p": p, "K": 16, "seed": 2024}))?;
        slowest = slowest.max(took);
        let r = &out.report["result"]["index"];
        let want = json!(p);
        ensure(r["index"] == want, format!("p = {p}: index {}", r["index"]))?;
        ensure(r["stabilization"]["indices"] == json!([p, p]), format!("p = {p}: {}", r["stabilization"]["indices"]))?;
        let discarded = r["boundary_discarded_l"].as_u64().unwrap_or(0) + r["boundary_discarded_r"].as_u64().unwrap_or(0);
        ensure(discarded > 0, "no boundary vectors discarded")?;
        ensure(r["kernel_l"].as_array().map_or(0, Vec::len) == p as usize, "kernel basis missing")?;
        ensure(took < Duration::from_secs(120), format!("p = {p}: {took:?}"))?;
        defects.push(adjoint_defect(&out));
    }
    Ok(format!("ind = p at K = 16 and 32 for p = 1, 2; slowest {slowest:.2?}"))
}

fn ac6(dir: &Path, defects: &mut Vec<f64>) -> Outcome {
    let out = lifetime_index0(&Angle::Real(1.0), 50, &PolicySettings::default()).map_err(|e| e.to_string())?;
    ensure(out.report.index == Some(0), format!("T = 1: index {:?}", out.report.index))?;
    ensure(out.census == [0, 0], format!("T = 1: census {:?}", out.census))?;
    let (o, _) = scenario("lifetime", json!({"T": 1, "K": 50}))?;
    defects.push(adjoint_defect(&o));
    let mut lines = vec!["T = 1: ind0 = 0, census 0".to_string()];
    for t in ["pi", "pi/2"] {
        let (code, report) = cli(dir, &["lifetime"], &json!({"T": t, "K": 50}));
        ensure(code == 2, format!("T = {t}: exit {code}"))?;
        let report = report.ok_or("no report written")?;
        let census = &report["result"]["census"];
        let (a, b) = (census[0].as_u64().unwrap_or(0), census[1].as_u64().unwrap_or(0));
        ensure(b > a, format!("T = {t}: census {census}"))?;
        ensure(report["config"]["T"] == json!(t), "T not kept symbolic")?;
        lines.push(format!("T = {t}: exit 2, census {a} -> {b}"));
    }
    Ok(lines.join("; "))
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let samples = BumpProfile::COS4.samples(std::f64::consts::PI, ASYMPTOTIC_GRID);
    let r = asymptotic_check(&samples, std::f64::consts::PI, 128).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.k_range == [64, 128], format!("range {:?}", r.k_range))?;
    let bounded: Vec<i8> = r.residuals.iter().filter(|s| s.bounded).map(|s| s.sign).collect();
    ensure(bounded.len() == 1, format!("bounded signs {bounded:?}"))?;
    ensure(took < Duration::from_secs(5), format!("{took:?}"))?;
    let s = r.residuals.iter().find(|s| s.bounded).unwrap();
    Ok(format!(
        "only sign {:+} bounded (max {:.3e} vs {:.3e} at k = 64); {took:.2?}",
        s.sign, s.max, s.at_lower
    ))
}

fn ac8(dir: &Path) -> Outcome {
    let bumps = HomotopyPath {
        steps: 9,
        family: PathFamily::Conformal {
            t_end: Angle::pi(),
            from: BumpProfile::COS4,
            to: BumpProfile {
                amplitude: 0.75,
                power: 6,
            },
            grid: MIN_GRID,
        },
    };
    let r = homotopy_sweep(&bumps, 20, &PolicySettings::default()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Constant, format!("bump path: {:?}", r.verdict))?;
    ensure(r.lipschitz_ok, "bump path continuity exceeds the Lipschitz estimate")?;
    let (code, report) = cli(
        dir,
        &["conformal-homotopy"],
        &json!({"K": 20, "path": {"scenario": "lifetime", "from": 1, "to": "pi", "steps": 9}}),
    );
    ensure(code == 2, format!("lifetime path exit {code}"))?;
    let verdict = report.ok_or("no report written")?["result"]["sweep"]["verdict"].clone();
    ensure(verdict == json!({"kind": "undefined", "step": 8}), format!("lifetime path verdict {verdict}"))?;
    Ok("bump path constant; T: 1 -> pi undefined at step 8".into())
}

fn ac9(defects: &[f64]) -> Outcome {
    let worst = defects.iter().copied().fold(0.0, f64::max);
    ensure(!defects.is_empty(), "no scenarios assembled")?;
    ensure(worst <= 1e-10, format!("max |S_L* - S_R| = {worst:e}"))?;
    Ok(format!(
        "{} assembled scenarios, max |S_L* - S_R| = {worst:.1e}; property tests run in the unit suites",
        defects.len()
    ))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut defects = Vec::new();
    let results: Vec<(u8, Outcome)> = vec![
        (1, ac1(&mut defects)),
        (2, ac2(&mut defects)),
        (3, ac3()),
        (4, ac4()),
        (5, ac5(&mut defects)),
        (6, ac6(dir.path(), &mut defects)),
        (7, ac7()),
        (8, ac8(dir.path())),
        (9, ac9(&defects)),
    ];
    let mut failed = Vec::new();
    for (n, r) in &results {
        match r {
            Ok(detail) => println!("AC{n} PASS  {detail}"),
            Err(why) => {
                println!("AC{n} FAIL  {why}");
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
