use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;
use tripwise::analyze::{analyze, AnalyzeConfig, Dataset};
use tripwise::app::{scheduler_loop, AppState};
use tripwise::config::Config;
use tripwise::simulate::{simulate, SimConfig};
use tripwise_core::avoidance::{alternative_routes, closure_avoiding_route, SpiralConfig, TravelMedium};
use tripwise_core::exposure::{route_avg_pm25, safest_route, PollutionField};
use tripwise_core::fixtures::{demo_field, grid_network, provider_fixtures, GridSpec};
use tripwise_core::geo::GeoPoint;
use tripwise_core::roadnet::{fastest_route, load_closures, load_network, TrafficScenario};

#[derive(Parser)]
#[command(
    name = "tripwise",
    version,
    about = "Trip reminders, closure-aware routing and study analytics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prefer {
    Fastest,
    Safest,
    Avoid,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the HTTP service and the scheduler.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan one route and print it as JSON.
    Route {
        #[arg(long)]
        from: GeoPoint,
        #[arg(long)]
        to: GeoPoint,
        #[arg(long, value_enum, default_value = "fastest")]
        prefer: Prefer,
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        closures: Option<PathBuf>,
        #[arg(long, default_value = "driving")]
        medium: TravelMedium,
        #[arg(long, default_value = "best")]
        scenario: TrafficScenario,
    },
    /// Generate a synthetic study cohort.
    Simulate {
        #[arg(long, default_value_t = 41)]
        users: usize,
        #[arg(long, default_value_t = 6)]
        weeks: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the evaluation report from exported data.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        /// Report path; a text summary is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the demo network, pollution field, provider files and config.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().cmd {
        Cmd::Serve { config } => serve(config),
        Cmd::Route {
            from,
            to,
            prefer,
            network,
            field,
            closures,
            medium,
            scenario,
        } => route(
            from,
            to,
            prefer,
            &network,
            field.as_deref(),
            closures.as_deref(),
            medium,
            scenario,
        ),
        Cmd::Simulate {
            users,
            weeks,
            seed,
            out,
        } => {
            let cohort = simulate(&SimConfig {
                users,
                weeks,
                seed,
                ..SimConfig::default()
            });
            cohort.write(&out)?;
            eprintln!(
                "wrote {} users, {} schedules, {} trips, {} responses to {}",
                cohort.users.len(),
                cohort.schedules.len(),
                cohort.trips.len(),
                cohort.feedback.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Analyze { data, out } => {
            let ds = Dataset::load(&data)?;
            let report = analyze(&ds, &AnalyzeConfig::default());
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            report
                .write(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.summary());
            Ok(())
        }
        Cmd::Fixtures { out } => fixtures(&out),
    }
}

fn serve(path: Option<PathBuf>) -> Result<()> {
    let cfg = match path {
        Some(p) => Config::load(&p)?,
        None => {
            let c = Config::default();
            c.validate()?;
            c
        }
    };
    let addr = format!("{}:{}", cfg.bind, cfg.port);
    let state = AppState::open(cfg)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let ticker = tokio::spawn(scheduler_loop(state.clone()));
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, tripwise::api::router(state.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        ticker.abort();
        state.store.write().await.snapshot()?;
        tracing::info!("stopped");
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn route(
    from: GeoPoint,
    to: GeoPoint,
    prefer: Prefer,
    network: &Path,
    field: Option<&Path>,
    closures: Option<&Path>,
    medium: TravelMedium,
    scenario: TrafficScenario,
) -> Result<()> {
    let net = load_network(network)?;
    let field = field.map(PollutionField::load).transpose()?;
    let spiral = SpiralConfig::default();
    let (route, exposure) = match prefer {
        Prefer::Fastest => (fastest_route(&net, &from, &to, scenario)?, None),
        Prefer::Avoid => {
            let closures = closures.map(load_closures).transpose()?.unwrap_or_default();
            let r = closure_avoiding_route(&net, &from, &to, &closures, medium, &spiral, scenario)?;
            (r, None)
        }
        Prefer::Safest => {
            let Some(field) = &field else {
                bail!("--prefer safest needs --field");
            };
            let cands = alternative_routes(&net, &from, &to, &spiral, tripwise::api::SAFEST_MAX_DETOUR, scenario)?;
            let (r, s) = safest_route(&cands, field)?;
            (r, Some(s))
        }
    };
    let exposure = match (exposure, &field) {
        (Some(s), _) => Some(s),
        (None, Some(f)) => route_avg_pm25(&route, f).ok(),
        (None, None) => None,
    };
    let out = serde_json::json!({ "route": route, "exposure": exposure });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn fixtures(out: &Path) -> Result<()> {
    let providers = out.join("providers");
    std::fs::create_dir_all(&providers)?;
    let write = |p: PathBuf, v: &serde_json::Value| -> Result<()> {
        std::fs::write(&p, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", p.display()))
    };
    let net = grid_network(&GridSpec::default());
    write(out.join("network.json"), &serde_json::to_value(net.to_file())?)?;
    write(out.join("field.json"), &demo_field().to_json())?;
    for (name, body) in provider_fixtures(chrono::Utc::now()) {
        write(providers.join(name), &body)?;
    }
    let cfg = Config {
        data_dir: "data".into(),
        network: "network.json".into(),
        field: Some("field.json".into()),
        providers_dir: Some("providers".into()),
        ..Config::default()
    };
    write(out.join("config.json"), &serde_json::to_value(cfg)?)?;
    eprintln!("wrote demo fixtures to {}", out.display());
    Ok(())
}
