use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use repmix::harness::{
    simulate_latent_class, simulate_scenario1, simulate_scenario2, LatentClassParams, Scenario1Params, Scenario2Params,
};
use repmix::io::{
    load_chain, load_csv, summarize, write_csv, ChainWriter, ElicitSpec, KernelChoice, PriorChoice, PriorName,
    RunConfig,
};
use repmix::samplers::{run_chain_with, SamplerConfig};
use repmix::{DataKind, Error};

#[derive(Parser)]
#[command(name = "repmix", version, about = "Mixture models with repulsive priors on the cluster centres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Strauss,
    Dpp,
}

impl From<PriorArg> for PriorName {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Strauss => PriorName::Strauss,
            PriorArg::Dpp => PriorName::Dpp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Latent,
}

#[derive(Subcommand)]
enum Command {
    /// Elicit prior hyperparameters from the data and print the report.
    Elicit {
        data: PathBuf,
        #[arg(long, value_enum, default_value = "strauss")]
        prior: PriorArg,
        #[arg(long)]
        m_max: Option<f64>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the sampler; writes chain.jsonl and summary.json.
    Fit {
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Elicit this prior, replacing the config's prior.
        #[arg(long, value_enum)]
        prior: Option<PriorArg>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a synthetic data set as CSV.
    Simulate {
        #[arg(long, value_enum)]
        scenario: Scenario,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an existing chain.jsonl.
    Diagnose {
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn kind_of(k: Option<KindArg>) -> Option<DataKind> {
    k.map(|k| match k {
        KindArg::Continuous => DataKind::Continuous,
        KindArg::Binary => DataKind::Binary,
    })
}

#[allow(clippy::too_many_arguments)]
fn fit(
    data: &Path,
    config: Option<&Path>,
    prior: Option<PriorArg>,
    kind: Option<KindArg>,
    seed: Option<u64>,
    iters: Option<usize>,
    burnin: Option<usize>,
    thin: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig {
            kernel: KernelChoice::default(),
            prior: PriorChoice::Elicit(ElicitSpec::new(PriorName::Strauss)),
            sampler: SamplerConfig::default(),
            input: None,
            output_dir: None,
        },
    };
    if let Some(p) = prior {
        cfg.prior = PriorChoice::Elicit(ElicitSpec::new(p.into()));
    }
    let s = &mut cfg.sampler;
    if let Some(v) = seed {
        s.seed = v;
    }
    if let Some(v) = iters {
        s.n_iter = v;
    }
    if let Some(v) = burnin {
        s.burn_in = v;
    }
    if let Some(v) = thin {
        s.thin = v;
    }
    let dataset = load_csv(data, kind_of(kind))?;
    let model = cfg.resolve(&dataset)?;
    let dir = out.or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut writer = ChainWriter::create(&dir.join("chain.jsonl"))?;
    let mut records = Vec::with_capacity(cfg.sampler.retained());
    let stats = run_chain_with(&dataset, &model.kernel, &model.prior, &cfg.sampler, |r| {
        writer.write(&r)?;
        records.push(r);
        Ok(())
    })?;
    writer.finish()?;
    let summary = summarize(&records, &dataset, &model, &cfg.sampler, &stats);
    let path = dir.join("summary.json");
    write_json(&summary, Some(&path))?;
    if let Some(kh) = summary.diagnostics.k_mode {
        eprintln!("modal k = {kh}; summary in {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Elicit {
            data,
            prior,
            m_max,
            kind,
            out,
        } => {
            let dataset = load_csv(&data, kind_of(kind))?;
            let mut spec = ElicitSpec::new(prior.into());
            spec.m_max = m_max;
            write_json(&spec.run(&dataset)?, out.as_deref())
        }
        Command::Fit {
            data,
            config,
            prior,
            kind,
            seed,
            iters,
            burnin,
            thin,
            out,
        } => fit(&data, config.as_deref(), prior, kind, seed, iters, burnin, thin, out),
        Command::Simulate {
            scenario,
            n,
            q,
            seed,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = match scenario {
                Scenario::One => simulate_scenario1(n, &Scenario1Params::default(), &mut rng)?,
                Scenario::Two => simulate_scenario2(n, &Scenario2Params::with_q(q), &mut rng)?,
                Scenario::Latent => simulate_latent_class(n, &LatentClassParams::well_separated(), &mut rng)?.0,
            };
            let mut w = output(out.as_deref())?;
            write_csv(&data, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Diagnose { chain, out } => {
            let records = load_chain(&chain)?;
            write_json(&repmix::diagnostics::diagnose(&records), out.as_deref())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::ResourceExceeded(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
