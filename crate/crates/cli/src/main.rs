//! Command-line surface for the bound evaluators.
//!
//! Inputs are JSON files (channels, compositions, conditional compositions,
//! graphs, codes), outputs are JSON scalars with witness payloads or CSV
//! curves. Runs are deterministic given the seed; `--manifest` emits a
//! reproducibility record with input digests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use cqbound::channel::{ChannelJson, CodeJson, CompositionJson, ConditionalJson, GraphJson};
use cqbound::{
    e0_optimal_composition, e0cc, espcc, espcc_cond, espu_cc, r_infinity, r_infinity_cond,
    r_infinity_global, weakened_bound, BoundCurve, BoundPoint, CQChannel, CodeBlock, Composition,
    CondChannelFamily, ConditionalComposition, ConfusabilityGraph, CqError, CurveMetadata,
    PureStateChannel, SolverConfig, SpuSearchSpace, ThetaConfig, RHO_MAX_DEFAULT,
};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(
    name = "cqbound",
    version,
    about = "Sphere-packing and theta bounds for classical-quantum channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Unit {
    Nats,
    Bits,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThetaVariant {
    Marton,
    Sp,
    Lovasz,
    Maxp,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Output unit for emitted values.
    #[arg(long, value_enum, default_value = "nats")]
    unit: Unit,
    /// Master seed for every stochastic component.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gradient tolerance of the inner convex solver.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the result here (.csv or .json decides the format for curves).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a RunManifest JSON (to stdout, or <out>.manifest.json).
    #[arg(long)]
    manifest: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate input files against their schemas and invariants.
    Validate {
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        comp: Option<PathBuf>,
        #[arg(long)]
        cond: Option<PathBuf>,
        #[arg(long)]
        code: Option<PathBuf>,
    },
    /// E_0^cc(ρ, P) with the minimizing auxiliary state.
    E0cc {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        rho: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// E_sp^cc(R, P) at one rate or over a rate grid (CSV curve).
    Espcc {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        rate: Option<f64>,
        /// Rate grid A:B:N (N points from A to B inclusive).
        #[arg(long, value_name = "A:B:N")]
        rate_grid: Option<String>,
        #[arg(long, default_value_t = RHO_MAX_DEFAULT)]
        rho_max: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// R_inf(P): smallest rate with a finite sphere-packing exponent.
    Rinf {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Composition-free threshold R_inf = min_F max_x log 1/Tr(S_x^0 F).
    RinfGlobal {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Composition-optimized coefficient E0(ρ), both minimax routes.
    E0Opt {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        rho: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Theta functions of a confusability graph.
    Theta {
        #[arg(long, value_enum)]
        variant: ThetaVariant,
        #[arg(long)]
        graph: PathBuf,
        /// Composition (required for marton/sp).
        #[arg(long)]
        comp: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Conditional sphere-packing exponent for a channel family.
    EspccCond {
        /// Channel file per state symbol, in order (repeat the flag).
        #[arg(long, required = true)]
        channel: Vec<PathBuf>,
        /// Composition over the state alphabet.
        #[arg(long)]
        comp: PathBuf,
        /// Conditional composition V(x|a).
        #[arg(long)]
        cond: PathBuf,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, value_name = "A:B:N")]
        rate_grid: Option<String>,
        #[arg(long, default_value_t = RHO_MAX_DEFAULT)]
        rho_max: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Conditional threshold R_inf({C_a}, P, V).
    RinfCond {
        #[arg(long, required = true)]
        channel: Vec<PathBuf>,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        cond: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Elias-type bound over the certified auxiliary search space.
    Espu {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        rate: f64,
        /// Rate slack ε.
        #[arg(long, default_value_t = cqbound::EPSILON_DEFAULT)]
        eps: f64,
        /// Try per-symbol auxiliary assignments (triples the space).
        #[arg(long)]
        per_a: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Weakened bound: shared auxiliary, product conditional composition.
    Weakened {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = cqbound::EPSILON_DEFAULT)]
        eps: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Pairwise overlap exponent of a code over a pure-state channel.
    Overlap {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        code: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Blahut-style subcode extraction.
    Subcode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        comp: PathBuf,
        #[arg(long)]
        cond: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

struct RunContext {
    common: CommonOpts,
    subcommand: String,
    inputs: Vec<(String, PathBuf)>,
}

impl RunContext {
    fn scale(&self) -> f64 {
        match self.common.unit {
            Unit::Nats => 1.0,
            Unit::Bits => 1.0 / LN2,
        }
    }

    fn unit_name(&self) -> &'static str {
        match self.common.unit {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.common.seed,
            grad_tol: self.common.tol,
            ..Default::default()
        }
    }

    fn scaled(&self, nats: f64) -> serde_json::Value {
        if nats.is_finite() {
            serde_json::json!(nats * self.scale())
        } else {
            serde_json::Value::Null
        }
    }

    fn finish_json(
        &self,
        mut body: serde_json::Map<String, serde_json::Value>,
    ) -> Result<(), CqError> {
        body.insert("unit".into(), serde_json::json!(self.unit_name()));
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(body))
            .expect("serializable result");
        self.write_output(&text)?;
        self.emit_manifest()
    }

    fn finish_curve(&self, curve: &BoundCurve) -> Result<(), CqError> {
        let out_json = self
            .common
            .out
            .as_ref()
            .map(|p| {
                p.extension()
                    .map(|e| e.eq_ignore_ascii_case("json"))
                    .unwrap_or(false)
            })
            .unwrap_or(false);
        let text = if out_json {
            let points: Vec<serde_json::Value> = curve
                .points
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "rate": self.scaled(p.rate),
                        "exponent": self.scaled(p.exponent),
                        "finite": p.finite,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({
                "points": points,
                "unit": self.unit_name(),
                "metadata": curve.metadata,
            }))
            .expect("serializable curve")
        } else {
            curve.to_csv(self.scale())
        };
        self.write_output(&text)?;
        self.emit_manifest()
    }

    fn write_output(&self, text: &str) -> Result<(), CqError> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.common.out {
            Some(path) => std::fs::write(path, text).map_err(|e| {
                CqError::InvalidInput(format!("cannot write {}: {e}", path.display()))
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_manifest(&self) -> Result<(), CqError> {
        if !self.common.manifest {
            return Ok(());
        }
        let mut inputs = Vec::new();
        for (flag, path) in &self.inputs {
            let bytes = std::fs::read(path).map_err(|e| {
                CqError::InvalidInput(format!("cannot read {}: {e}", path.display()))
            })?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let mut digest = String::new();
            for b in hasher.finalize() {
                let _ = write!(digest, "{b:02x}");
            }
            inputs.push(serde_json::json!({
                "flag": flag,
                "path": path.display().to_string(),
                "sha256": digest,
            }));
        }
        let manifest = serde_json::json!({
            "subcommand": self.subcommand,
            "inputs": inputs,
            "solver": self.solver_config(),
            "seed": self.common.seed,
            "unit": self.unit_name(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        match &self.common.out {
            Some(path) => {
                let mut manifest_path = path.as_os_str().to_owned();
                manifest_path.push(".manifest.json");
                std::fs::write(&manifest_path, text + "\n")
                    .map_err(|e| CqError::InvalidInput(format!("cannot write manifest: {e}")))
            }
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CqError> {
    match cli.command {
        Command::Validate {
            channel,
            graph,
            comp,
            cond,
            code,
        } => run_validate(channel, graph, comp, cond, code),
        Command::E0cc {
            channel,
            comp,
            rho,
            common,
        } => {
            let ctx = context("e0cc", &common, &[("channel", &channel), ("comp", &comp)]);
            let ch = load_cq_channel(&channel)?;
            let p = load_composition(&comp, ch.alphabet_size())?;
            let r = e0cc(&ch, rho, &p, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("rho".into(), serde_json::json!(rho));
            body.insert("converged".into(), serde_json::json!(r.converged));
            body.insert(
                "argmin".into(),
                serde_json::to_value(cqbound::channel::MatrixJson::from_herm(r.argmin.as_herm()))
                    .expect("matrix json"),
            );
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged))
        }
        Command::Espcc {
            channel,
            comp,
            rate,
            rate_grid,
            rho_max,
            common,
        } => {
            let ctx = context("espcc", &common, &[("channel", &channel), ("comp", &comp)]);
            let ch = load_cq_channel(&channel)?;
            let p = load_composition(&comp, ch.alphabet_size())?;
            let cfg = ctx.solver_config();
            let rates = rate_list(rate, rate_grid.as_deref())?;
            let mut converged = true;
            let mut points = Vec::with_capacity(rates.len());
            for &r in &rates {
                let e = espcc(&ch, r, &p, &cfg, rho_max)?;
                converged &= e.converged;
                points.push(BoundPoint {
                    rate: r,
                    exponent: e.value,
                    finite: e.finite,
                });
            }
            let metadata = CurveMetadata {
                channel_hash: cqbound::channel_fingerprint(&ch),
                composition: p.probs().to_vec(),
                solver: cfg,
            };
            let curve = BoundCurve::new(points, metadata)?;
            ctx.finish_curve(&curve)?;
            Ok(exit_for(converged))
        }
        Command::Rinf {
            channel,
            comp,
            common,
        } => {
            let ctx = context("rinf", &common, &[("channel", &channel), ("comp", &comp)]);
            let ch = load_cq_channel(&channel)?;
            let p = load_composition(&comp, ch.alphabet_size())?;
            let r = r_infinity(&ch, &p, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("converged".into(), serde_json::json!(r.converged));
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged))
        }
        Command::RinfGlobal { channel, common } => {
            let ctx = context("rinf-global", &common, &[("channel", &channel)]);
            let ch = load_cq_channel(&channel)?;
            let r = r_infinity_global(&ch, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert(
                "inner_residual".into(),
                serde_json::json!(r.inner_residual),
            );
            body.insert("outer_gap".into(), serde_json::json!(r.outer_gap));
            body.insert("converged".into(), serde_json::json!(r.converged));
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged))
        }
        Command::E0Opt {
            channel,
            rho,
            common,
        } => {
            let ctx = context("e0-opt", &common, &[("channel", &channel)]);
            let ch = load_cq_channel(&channel)?;
            let r = e0_optimal_composition(&ch, rho, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("route_a".into(), ctx.scaled(r.route_a));
            body.insert("route_b".into(), ctx.scaled(r.route_b));
            body.insert("gap".into(), serde_json::json!(r.gap));
            body.insert("gap_warning".into(), serde_json::json!(r.gap_warning));
            body.insert("argmax_p".into(), serde_json::json!(r.argmax_p.probs()));
            body.insert("converged".into(), serde_json::json!(r.converged));
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged && !r.gap_warning))
        }
        Command::Theta {
            variant,
            graph,
            comp,
            common,
        } => run_theta(variant, graph, comp, common),
        Command::EspccCond {
            channel,
            comp,
            cond,
            rate,
            rate_grid,
            rho_max,
            common,
        } => {
            let mut inputs: Vec<(&str, &PathBuf)> =
                channel.iter().map(|c| ("channel", c)).collect();
            inputs.push(("comp", &comp));
            inputs.push(("cond", &cond));
            let ctx = context("espcc-cond", &common, &inputs);
            let channels = channel
                .iter()
                .map(|path| load_cq_channel(path))
                .collect::<Result<Vec<_>, _>>()?;
            let p_states = load_composition(&comp, channels.len())?;
            let v = load_conditional(&cond)?;
            let fam = CondChannelFamily::new(channels, p_states, v)?;
            let cfg = ctx.solver_config();
            let rates = rate_list(rate, rate_grid.as_deref())?;
            let mut converged = true;
            let mut points = Vec::with_capacity(rates.len());
            for &r in &rates {
                let e = espcc_cond(&fam, r, &cfg, rho_max)?;
                converged &= e.converged;
                points.push(BoundPoint {
                    rate: r,
                    exponent: e.value,
                    finite: e.finite,
                });
            }
            let metadata = CurveMetadata {
                channel_hash: fam
                    .channels()
                    .iter()
                    .map(cqbound::channel_fingerprint)
                    .collect::<Vec<_>>()
                    .join("+"),
                composition: fam.p_states().probs().to_vec(),
                solver: cfg,
            };
            let curve = BoundCurve::new(points, metadata)?;
            ctx.finish_curve(&curve)?;
            Ok(exit_for(converged))
        }
        Command::RinfCond {
            channel,
            comp,
            cond,
            common,
        } => {
            let mut inputs: Vec<(&str, &PathBuf)> =
                channel.iter().map(|c| ("channel", c)).collect();
            inputs.push(("comp", &comp));
            inputs.push(("cond", &cond));
            let ctx = context("rinf-cond", &common, &inputs);
            let channels = channel
                .iter()
                .map(|path| load_cq_channel(path))
                .collect::<Result<Vec<_>, _>>()?;
            let p_states = load_composition(&comp, channels.len())?;
            let v = load_conditional(&cond)?;
            let fam = CondChannelFamily::new(channels, p_states, v)?;
            let value = r_infinity_cond(&fam, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(value));
            ctx.finish_json(body)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Espu {
            channel,
            comp,
            rate,
            eps,
            per_a,
            common,
        } => {
            let ctx = context("espu", &common, &[("channel", &channel), ("comp", &comp)]);
            let ch = load_pure_channel(&channel)?;
            let p = load_composition(&comp, ch.alphabet_size())?;
            let space = SpuSearchSpace::build(&ch, &p, eps, per_a, common.seed)?;
            let r = espu_cc(&ch, rate, &p, &space, &ctx.solver_config())?;
            let mut body = match r.to_json(&space.v_candidates[r.v_index]) {
                serde_json::Value::Object(m) => m,
                _ => unreachable!("to_json returns an object"),
            };
            body.remove("value_nats");
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("rate".into(), ctx.scaled(rate));
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged))
        }
        Command::Weakened {
            channel,
            comp,
            rate,
            eps,
            common,
        } => {
            let ctx = context(
                "weakened",
                &common,
                &[("channel", &channel), ("comp", &comp)],
            );
            let ch = load_pure_channel(&channel)?;
            let p = load_composition(&comp, ch.alphabet_size())?;
            // Same ρ grid as the default search space.
            let grid: Vec<f64> = (0..17).map(|k| 16.0f64.powf(k as f64 / 16.0)).collect();
            let r = weakened_bound(&ch, rate, &p, &grid, eps, &ctx.solver_config())?;
            let mut body = serde_json::Map::new();
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("rho".into(), serde_json::json!(r.rho));
            body.insert("epsilon".into(), serde_json::json!(r.epsilon));
            body.insert("skipped".into(), serde_json::json!(r.skipped));
            body.insert("converged".into(), serde_json::json!(r.converged));
            ctx.finish_json(body)?;
            Ok(exit_for(r.converged))
        }
        Command::Overlap {
            channel,
            code,
            common,
        } => {
            let ctx = context(
                "overlap",
                &common,
                &[("channel", &channel), ("code", &code)],
            );
            let ch = load_pure_channel(&channel)?;
            let code = load_code(&code)?;
            let e = cqbound::code_overlap_exponent(&code, &ch)?;
            let mut body = serde_json::Map::new();
            body.insert("exponent".into(), ctx.scaled(e));
            body.insert("finite".into(), serde_json::json!(e.is_finite()));
            body.insert("rate".into(), ctx.scaled(code.rate()));
            ctx.finish_json(body)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Subcode {
            code,
            comp,
            cond,
            common,
        } => {
            let ctx = context(
                "subcode",
                &common,
                &[("code", &code), ("comp", &comp), ("cond", &cond)],
            );
            let code = load_code(&code)?;
            let p = load_composition(&comp, code.alphabet_size())?;
            let v = load_conditional(&cond)?;
            let found = cqbound::extract_subcode(&code, &p, &v)?;
            let mut body = serde_json::Map::new();
            body.insert(
                "witness".into(),
                found
                    .witness
                    .as_ref()
                    .map(|w| w.to_json())
                    .unwrap_or(serde_json::Value::Null),
            );
            body.insert("best_size".into(), serde_json::json!(found.best_size));
            body.insert(
                "blahut_bound".into(),
                serde_json::json!(found.blahut_bound),
            );
            ctx.finish_json(body)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_theta(
    variant: ThetaVariant,
    graph: PathBuf,
    comp: Option<PathBuf>,
    common: CommonOpts,
) -> Result<ExitCode, CqError> {
    let mut inputs: Vec<(&str, &PathBuf)> = vec![("graph", &graph)];
    if let Some(c) = &comp {
        inputs.push(("comp", c));
    }
    let ctx = context("theta", &common, &inputs);
    let g = load_graph(&graph)?;
    let theta_cfg = ThetaConfig {
        solver: ctx.solver_config(),
        ..Default::default()
    };
    let need_comp = |comp: &Option<PathBuf>| -> Result<Composition, CqError> {
        let path = comp
            .as_ref()
            .ok_or_else(|| CqError::InvalidInput("this theta variant needs --comp".into()))?;
        load_composition(path, g.num_vertices())
    };
    let mut body = serde_json::Map::new();
    let converged = match variant {
        ThetaVariant::Marton => {
            let p = need_comp(&comp)?;
            let (v, witness) = cqbound::theta_marton(&g, &p, &theta_cfg)?;
            body.insert("value".into(), ctx.scaled(v.value));
            body.insert("variant".into(), serde_json::json!("marton"));
            body.insert("witness".into(), witness.to_json(v.value));
            v.converged
        }
        ThetaVariant::Sp => {
            let p = need_comp(&comp)?;
            let (v, witness) = cqbound::theta_sp(&g, &p, &theta_cfg)?;
            body.insert("value".into(), ctx.scaled(v.value));
            body.insert("variant".into(), serde_json::json!("sp"));
            body.insert("realized".into(), serde_json::json!(witness.realized()));
            body.insert(
                "ranks".into(),
                serde_json::json!(witness
                    .projectors
                    .iter()
                    .map(|u| u.rank())
                    .collect::<Vec<_>>()),
            );
            v.converged
        }
        ThetaVariant::Lovasz => {
            let v = cqbound::theta_lovasz(&g, &theta_cfg)?;
            body.insert("value".into(), ctx.scaled(v.value));
            body.insert("variant".into(), serde_json::json!("lovasz"));
            v.converged
        }
        ThetaVariant::Maxp => {
            let r = cqbound::max_p_theta(&g, &theta_cfg)?;
            body.insert("value".into(), ctx.scaled(r.value));
            body.insert("variant".into(), serde_json::json!("maxp"));
            body.insert("argmax_p".into(), serde_json::json!(r.argmax.probs()));
            body.insert("gap_to_lovasz".into(), serde_json::json!(r.gap_to_lovasz));
            r.converged
        }
    };
    body.insert("converged".into(), serde_json::json!(converged));
    ctx.finish_json(body)?;
    Ok(exit_for(converged))
}

fn run_validate(
    channel: Option<PathBuf>,
    graph: Option<PathBuf>,
    comp: Option<PathBuf>,
    cond: Option<PathBuf>,
    code: Option<PathBuf>,
) -> Result<ExitCode, CqError> {
    let mut checked = Vec::new();
    if let Some(path) = channel {
        let ch = load_cq_channel(&path)?;
        checked.push(serde_json::json!({
            "file": path.display().to_string(),
            "kind": "channel",
            "alphabet": ch.alphabet_size(),
            "dim": ch.dim(),
        }));
    }
    if let Some(path) = graph {
        let g = load_graph(&path)?;
        checked.push(serde_json::json!({
            "file": path.display().to_string(),
            "kind": "graph",
            "vertices": g.num_vertices(),
            "edges": g.edges().len(),
        }));
    }
    if let Some(path) = comp {
        let p = load_composition_raw(&path)?;
        checked.push(serde_json::json!({
            "file": path.display().to_string(),
            "kind": "composition",
            "alphabet": p.len(),
        }));
    }
    if let Some(path) = cond {
        let v = load_conditional(&path)?;
        checked.push(serde_json::json!({
            "file": path.display().to_string(),
            "kind": "conditional",
            "rows": v.num_rows(),
        }));
    }
    if let Some(path) = code {
        let c = load_code(&path)?;
        checked.push(serde_json::json!({
            "file": path.display().to_string(),
            "kind": "code",
            "n": c.block_length(),
            "M": c.num_codewords(),
        }));
    }
    if checked.is_empty() {
        return Err(CqError::InvalidInput(
            "validate needs at least one input flag".into(),
        ));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({ "valid": checked }))
            .expect("serializable")
    );
    Ok(ExitCode::SUCCESS)
}

fn context(subcommand: &str, common: &CommonOpts, inputs: &[(&str, &PathBuf)]) -> RunContext {
    RunContext {
        common: common.clone(),
        subcommand: subcommand.to_string(),
        inputs: inputs
            .iter()
            .map(|(f, p)| (f.to_string(), (*p).clone()))
            .collect(),
    }
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn rate_list(rate: Option<f64>, grid: Option<&str>) -> Result<Vec<f64>, CqError> {
    match (rate, grid) {
        (Some(r), None) => Ok(vec![r]),
        (None, Some(spec)) => {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(CqError::InvalidInput(format!(
                    "rate grid '{spec}' must be A:B:N"
                )));
            }
            let a: f64 = parts[0]
                .parse()
                .map_err(|_| CqError::InvalidInput(format!("bad grid start '{}'", parts[0])))?;
            let b: f64 = parts[1]
                .parse()
                .map_err(|_| CqError::InvalidInput(format!("bad grid end '{}'", parts[1])))?;
            let n: usize = parts[2]
                .parse()
                .map_err(|_| CqError::InvalidInput(format!("bad grid count '{}'", parts[2])))?;
            if n == 0 || b <= a {
                return Err(CqError::InvalidInput(
                    "rate grid needs N ≥ 1 and B > A".into(),
                ));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect())
        }
        (Some(_), Some(_)) => Err(CqError::InvalidInput(
            "--rate and --rate-grid are mutually exclusive".into(),
        )),
        (None, None) => Err(CqError::InvalidInput(
            "one of --rate or --rate-grid is required".into(),
        )),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CqError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CqError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CqError::InvalidInput(format!("{}: {e}", path.display())))
}

fn load_cq_channel(path: &Path) -> Result<CQChannel, CqError> {
    read_json::<ChannelJson>(path)?.to_cq()
}

fn load_pure_channel(path: &Path) -> Result<PureStateChannel, CqError> {
    read_json::<ChannelJson>(path)?.to_pure()
}

fn load_composition_raw(path: &Path) -> Result<Composition, CqError> {
    Composition::new(read_json::<CompositionJson>(path)?.p)
}

fn load_composition(path: &Path, expected: usize) -> Result<Composition, CqError> {
    let p = load_composition_raw(path)?;
    if p.len() != expected {
        return Err(CqError::DimensionMismatch(format!(
            "{}: composition over {} symbols, expected {expected}",
            path.display(),
            p.len()
        )));
    }
    Ok(p)
}

fn load_conditional(path: &Path) -> Result<ConditionalComposition, CqError> {
    ConditionalComposition::new(read_json::<ConditionalJson>(path)?.v)
}

fn load_graph(path: &Path) -> Result<ConfusabilityGraph, CqError> {
    read_json::<GraphJson>(path)?.to_graph()
}

fn load_code(path: &Path) -> Result<CodeBlock, CqError> {
    let json = read_json::<CodeJson>(path)?;
    CodeBlock::new(json.n, json.alphabet, json.codewords)
}
