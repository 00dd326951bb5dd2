//! Command-line front end: plan, run, compare, and verify scenarios.
//!
//! Exit codes: 0 success, 2 scenario validation failure, 3 planning
//! failure, 4 step budget exhausted before delivery, 5 trace verification
//! mismatch. Other I/O failures exit 1.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uavnet_core::harness::{self, Trace};
use uavnet_core::planner::{evaluate, plan_mission, plan_network_unaware, PlannerConfig};
use uavnet_core::scenario::{self, Mode, Scenario};
use uavnet_core::transition::Action;
use uavnet_core::Metrics;

const EXIT_VALIDATION: u8 = 2;
const EXIT_PLANNING: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser)]
#[command(name = "uavnet", about = "UAV mission simulator with network-aware planning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the mission plan and print it with its projected metrics.
    Plan {
        scenario: PathBuf,
        /// Write the plan as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Execute the scenario and report metrics.
    Run {
        scenario: PathBuf,
        /// Write the full trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write a per-step CSV (positions, contact bitmap, deliveries,
        /// cumulative staleness).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run both the network-aware and unaware modes and compare metrics.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-run the scenario and check it reproduces a saved trace.
    Verify {
        scenario: PathBuf,
        trace: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, ExitCode> {
    scenario::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn action_str(map: &uavnet_core::WorldMap, a: &Action) -> String {
    match a {
        Action::Move(u, l) => format!("{} -> {}", map.uav_name(*u), l),
        Action::Wait(u) => format!("{} wait", map.uav_name(*u)),
    }
}

fn print_metrics(label: &str, m: &Metrics) {
    println!(
        "{label}: mission_length={} total_staleness={} delivered={}",
        m.mission_length, m.total_staleness, m.delivered_count
    );
}

fn cmd_plan(path: PathBuf, output: Option<PathBuf>) -> Result<(), ExitCode> {
    let sc = load(&path)?;
    let cfg = PlannerConfig {
        seed: sc.seed,
        ..PlannerConfig::default()
    };
    let plan = match sc.mode {
        Mode::Aware => plan_mission(&sc.map, &sc.init, &sc.goal, &cfg),
        Mode::Unaware => plan_network_unaware(&sc.map, &sc.init, &sc.goal, &cfg),
    }
    .map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_PLANNING)
    })?;
    for k in 0..plan.horizon {
        let row: Vec<String> = sc
            .map
            .uav_ids()
            .map(|u| action_str(&sc.map, &plan.action_at(u, k)))
            .collect();
        println!("step {k:>3}: {}", row.join(" | "));
    }
    let m = evaluate(&sc.map, &sc.init, &plan, &sc.exo);
    print_metrics("projected", &m);
    if let Some(out) = output {
        write_json(&out, &plan)?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<(), ExitCode> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::FAILURE
    })
}

fn write_csv(path: &PathBuf, sc: &Scenario, trace: &Trace) -> Result<(), ExitCode> {
    let mut out = String::new();
    let mut header = vec!["step".to_string()];
    for u in sc.map.uav_ids() {
        header.push(format!("{}_x", sc.map.uav_name(u)));
        header.push(format!("{}_y", sc.map.uav_name(u)));
    }
    header.push("contact_bitmap".into());
    header.push("pictures_delivered".into());
    header.push("cumulative_staleness".into());
    out.push_str(&header.join(","));
    out.push('\n');
    let states = std::iter::once(&trace.initial).chain(trace.steps.iter().map(|s| &s.state));
    for s in states {
        let mut row = vec![s.step.to_string()];
        for u in sc.map.uav_ids() {
            let p = s.pos(u);
            row.push(p.x.to_string());
            row.push(p.y.to_string());
        }
        let view = s.link_view(&sc.map);
        let contact = view.component_of(sc.map.home_base());
        row.push(format!("{contact:#x}"));
        row.push(
            s.targets
                .iter()
                .filter(|t| t.delivered.is_some())
                .count()
                .to_string(),
        );
        row.push(
            uavnet_core::planner::metrics_of(s, s.step)
                .total_staleness
                .to_string(),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::FAILURE
    })
}

fn run_scenario(sc: &Scenario) -> Result<Trace, ExitCode> {
    harness::run(sc).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_PLANNING)
    })
}

fn cmd_run(
    path: PathBuf,
    trace_out: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), ExitCode> {
    let sc = load(&path)?;
    let trace = run_scenario(&sc)?;
    for step in &trace.steps {
        for (u, d) in &step.diagnoses {
            println!(
                "step {:>3}: {} diagnoses {:?}",
                step.step,
                sc.map.uav_name(*u),
                d.new_events
            );
        }
        for u in &step.replans {
            println!("step {:>3}: {} replans", step.step, sc.map.uav_name(*u));
        }
    }
    for (u, msg) in &trace.faults {
        eprintln!("fault: {}: {msg}", sc.map.uav_name(*u));
    }
    print_metrics("final", &trace.metrics);
    if let Some(out) = &trace_out {
        write_json(out, &trace)?;
    }
    if let Some(out) = &csv {
        write_csv(out, &sc, &trace)?;
    }
    if !trace.completed {
        eprintln!(
            "error: step budget exhausted after {} steps with {} of {} pictures delivered",
            trace.steps.len(),
            trace.metrics.delivered_count,
            sc.map.target_count()
        );
        return Err(ExitCode::from(EXIT_BUDGET));
    }
    Ok(())
}

fn cmd_compare(path: PathBuf, csv: Option<PathBuf>) -> Result<(), ExitCode> {
    let sc = load(&path)?;
    let report = harness::compare(&sc).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_PLANNING)
    })?;
    println!("mode,mission_length,total_staleness,delivered");
    println!(
        "aware,{},{},{}",
        report.aware.mission_length, report.aware.total_staleness, report.aware.delivered_count
    );
    println!(
        "unaware,{},{},{}",
        report.unaware.mission_length,
        report.unaware.total_staleness,
        report.unaware.delivered_count
    );
    println!(
        "reduction: mission_length {:.1}% total_staleness {:.1}%",
        report.length_reduction_pct, report.staleness_reduction_pct
    );
    if let Some(out) = csv {
        let mut text = String::from("mode,mission_length,total_staleness,delivered\n");
        for (mode, m) in [("aware", &report.aware), ("unaware", &report.unaware)] {
            text.push_str(&format!(
                "{mode},{},{},{}\n",
                m.mission_length, m.total_staleness, m.delivered_count
            ));
        }
        std::fs::write(&out, text).map_err(|e| {
            eprintln!("error: {}: {e}", out.display());
            ExitCode::FAILURE
        })?;
    }
    Ok(())
}

fn cmd_verify(path: PathBuf, trace_path: PathBuf) -> Result<(), ExitCode> {
    let sc = load(&path)?;
    let text = std::fs::read_to_string(&trace_path).map_err(|e| {
        eprintln!("error: {}: {e}", trace_path.display());
        ExitCode::FAILURE
    })?;
    let saved: Trace = serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: {}: {e}", trace_path.display());
        ExitCode::from(EXIT_VALIDATION)
    })?;
    let fresh = run_scenario(&sc)?;
    if fresh != saved {
        eprintln!("error: re-run does not reproduce the saved trace");
        return Err(ExitCode::from(EXIT_VERIFY));
    }
    print_metrics("verified", &fresh.metrics);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Plan { scenario, output } => cmd_plan(scenario, output),
        Cmd::Run {
            scenario,
            trace,
            csv,
        } => cmd_run(scenario, trace, csv),
        Cmd::Compare { scenario, csv } => cmd_compare(scenario, csv),
        Cmd::Verify { scenario, trace } => cmd_verify(scenario, trace),
    };
    // Flush stdout so piped output is complete even on early exits.
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
