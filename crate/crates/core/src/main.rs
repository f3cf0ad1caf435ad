use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use bqco::imitation::{train, TrainConfig};
use bqco::io::report::{attach_references, format_table};
use bqco::io::{self, FileKind, Header, ResultRecord};
use bqco::pipeline::{self, EvalOptions};
use bqco::policy::PolicyModel;
use bqco::problems::generate::{generate_many, GeneratorConfig};
use bqco::search::BeamSelection;
use bqco::{oracles, verify, CopError, Problem, ProblemInstance, ProblemKind, Result};

#[derive(Parser)]
#[command(name = "bqco", version, about = "Construct, solve and learn combinatorial optimization problems")]
struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances as JSON lines.
    Generate {
        #[command(flatten)]
        args: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance of a file exactly.
    SolveExact {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate instances and store them with exact solutions.
    MakeDataset {
        #[command(flatten)]
        args: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy by imitation of a dataset.
    Train(TrainArgs),
    /// Decode instances with a trained policy.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Instance or dataset file; datasets also provide reference values.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
    },
    /// Run the bisimulation and soundness suites.
    Verify {
        /// Restrict to one problem.
        #[arg(long)]
        problem: Option<ProblemKind>,
        #[arg(long, default_value_t = 1000)]
        triples: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        max_decisions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare greedy and beam decoding against dataset references.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Beam widths to run besides greedy.
        #[arg(long, value_delimiter = ',', default_value = "16")]
        beams: Vec<usize>,
        #[arg(long)]
        knn: Option<usize>,
        /// Also write the summaries as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one instance, optionally with a solution, as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Results file whose solution is drawn; datasets draw their own.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    problem: ProblemKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file with generator settings; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cvrp_capacity: Option<u32>,
    #[arg(long)]
    op_budget: Option<f64>,
    #[arg(long)]
    kp_capacity: Option<f64>,
    #[arg(long)]
    atsp_noise: Option<f64>,
    #[arg(long)]
    atsp_id_dim: Option<usize>,
}

impl InstanceArgs {
    fn generator(&self) -> Result<GeneratorConfig> {
        let mut g: GeneratorConfig = read_toml(self.config.as_deref())?;
        if self.cvrp_capacity.is_some() {
            g.cvrp_capacity = self.cvrp_capacity;
        }
        if self.op_budget.is_some() {
            g.op_budget = self.op_budget;
        }
        g.kp_capacity = self.kp_capacity.unwrap_or(g.kp_capacity);
        g.atsp_noise = self.atsp_noise.unwrap_or(g.atsp_noise);
        g.atsp_id_dim = self.atsp_id_dim.unwrap_or(g.atsp_id_dim);
        Ok(g)
    }

    fn header(&self, format: FileKind, gen: &GeneratorConfig) -> Result<Header> {
        let mut h = Header::new(format, self.problem, self.count);
        h.n = Some(self.n);
        h.seed = Some(self.seed);
        h.meta = serde_json::to_value(gen)?;
        Ok(h)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Held-out dataset scored with greedy decoding after each epoch.
    #[arg(long)]
    held_out: Option<PathBuf>,
    /// JSON-lines metrics log.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// TOML file with training settings; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    decay_every: Option<usize>,
    #[arg(long)]
    min_subpath: Option<usize>,
    #[arg(long)]
    max_subpath: Option<usize>,
    #[arg(long)]
    all_steps: bool,
    #[arg(long)]
    sample_orientation: bool,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    d_ff: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        let mut c: TrainConfig = read_toml(self.config.as_deref())?;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(epochs, batch_size, seed, lr, decay, decay_every, min_subpath, d_model, heads, d_ff, layers);
        if self.max_subpath.is_some() {
            c.max_subpath = self.max_subpath;
        }
        c.all_steps |= self.all_steps;
        c.sample_orientation |= self.sample_orientation;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct DecodeArgs {
    /// Beam width; greedy decoding when absent.
    #[arg(long)]
    beam: Option<usize>,
    /// Restrict candidates to the k nodes nearest the origin.
    #[arg(long)]
    knn: Option<usize>,
    /// Pick the beam answer by log-probability instead of objective.
    #[arg(long)]
    select_by_log_prob: bool,
}

impl DecodeArgs {
    fn options(&self) -> EvalOptions {
        let selection = if self.select_by_log_prob { BeamSelection::BestLogProb } else { BeamSelection::BestObjective };
        EvalOptions { beam: self.beam, knn: self.knn, selection }
    }
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?).map_err(|e| CopError::Config(e.to_string())),
    }
}

/// Reference values of a dataset file, or none for a plain instance file.
fn references(header: &Header, path: &Path) -> Result<Option<Vec<Option<f64>>>> {
    if header.format != FileKind::Dataset {
        return Ok(None);
    }
    let (_, pairs) = io::read_dataset(path)?;
    Ok(Some(pairs.into_iter().map(|(_, r)| Some(r.value)).collect()))
}

fn decode(model: &PolicyModel, input: &Path, opts: &EvalOptions) -> Result<(Header, Vec<ResultRecord>, f64)> {
    let (header, insts) = io::read_instances(input)?;
    let start = Instant::now();
    let mut results = pipeline::evaluate(model, &insts, opts)?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(refs) = references(&header, input)? {
        attach_references(header.problem.sense(), &mut results, &refs)?;
    }
    Ok((header, results, wall))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| CopError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Generate { args, out } => {
            let gen = args.generator()?;
            let insts = generate_many(args.problem, args.n, args.count, args.seed, &gen)?;
            io::write_instances(&out, &args.header(FileKind::Instances, &gen)?, &insts)?;
            eprintln!("wrote {} {} instances to {}", insts.len(), args.problem, out.display());
        }
        Command::SolveExact { input, out } => {
            let (header, insts) = io::read_instances(&input)?;
            let start = Instant::now();
            let results = pipeline::solve_all(&insts)?;
            let summary = io::summarize(&results, start.elapsed().as_secs_f64());
            io::write_jsonl(&out, &Header::new(FileKind::Results, header.problem, results.len()), &results)?;
            print!("{}", format_table(&[("exact".into(), summary)]));
        }
        Command::MakeDataset { args, out } => {
            let gen = args.generator()?;
            let records = pipeline::make_dataset(args.problem, args.n, args.count, args.seed, &gen)?;
            let unproven = records.iter().filter(|r| !r.proven).count();
            io::write_jsonl(&out, &args.header(FileKind::Dataset, &gen)?, &records)?;
            eprintln!("wrote {} solved instances to {} ({unproven} unproven)", records.len(), out.display());
        }
        Command::Train(args) => {
            let cfg = args.config()?;
            let (_, pairs) = io::read_dataset(&args.dataset)?;
            let demos = pipeline::demonstrations(&pairs)?;
            let held_out: Vec<(ProblemInstance, f64)> = match &args.held_out {
                None => Vec::new(),
                Some(p) => io::read_dataset(p)?
                    .1
                    .into_iter()
                    .map(|(i, r)| {
                        let objective = io::objective_from_value(i.kind(), r.value);
                        (i, objective)
                    })
                    .collect(),
            };
            let mut log = match &args.metrics {
                Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
                None => None,
            };
            let mut log_error = None;
            let (model, _) = train(&demos, &held_out, &cfg, |m| {
                let gap = m.gap.map_or(String::new(), |g| format!("  gap {:.2}%", 100.0 * g));
                eprintln!(
                    "epoch {:>4}  loss {:.4}  accuracy {:.3}{gap}  {:.1}s",
                    m.epoch, m.loss, m.accuracy, m.wall_time
                );
                if let Some(w) = log.as_mut() {
                    use std::io::Write;
                    let res =
                        serde_json::to_writer(&mut *w, m).map_err(CopError::from).and_then(|_| Ok(w.write_all(b"\n")?));
                    if let Err(e) = res {
                        log_error.get_or_insert(e);
                    }
                }
            })?;
            if let Some(e) = log_error {
                return Err(e);
            }
            if let Some(mut w) = log {
                use std::io::Write;
                w.flush()?;
            }
            model.save(&args.out)?;
            eprintln!("saved model with {} parameters to {}", model.param_count(), args.out.display());
        }
        Command::Eval { model, input, out, decode: d } => {
            let model = PolicyModel::load(&model)?;
            let (header, results, wall) = decode(&model, &input, &d.options())?;
            io::write_jsonl(&out, &Header::new(FileKind::Results, header.problem, results.len()), &results)?;
            let label = d.beam.map_or("greedy".to_string(), |b| format!("beam {b}"));
            print!("{}", format_table(&[(label, io::summarize(&results, wall))]));
        }
        Command::Verify { problem, triples, instances, max_decisions, seed } => {
            let gen = GeneratorConfig::default();
            let kinds = problem.map_or(ProblemKind::ALL.to_vec(), |k| vec![k]);
            let mut failed = Vec::new();
            for kind in kinds {
                for report in [
                    verify::bisimulation_suite(kind, triples, seed, &gen)?,
                    verify::soundness_suite(kind, instances, max_decisions, seed, &gen)?,
                ] {
                    let status = if report.passed() { "PASS" } else { "FAIL" };
                    println!(
                        "{status}  {:<12} {:<5} {} cases, {} failed",
                        report.suite, kind, report.cases, report.failed
                    );
                    for note in &report.notes {
                        println!("      {note}");
                    }
                    if !report.passed() {
                        failed.push(format!("{} {kind}", report.suite));
                    }
                }
            }
            if !failed.is_empty() {
                return Err(CopError::VerificationFailed(failed.join(", ")));
            }
        }
        Command::Bench { model, input, beams, knn, out } => {
            let model = PolicyModel::load(&model)?;
            let mut rows = Vec::new();
            for beam in std::iter::once(None).chain(beams.into_iter().map(Some)) {
                let opts = EvalOptions { beam, knn, ..Default::default() };
                let (header, results, wall) = decode(&model, &input, &opts)?;
                if header.format != FileKind::Dataset {
                    return Err(CopError::Config("bench needs a dataset file with reference values".into()));
                }
                let label = beam.map_or("greedy".to_string(), |b| format!("beam {b}"));
                rows.push((label, io::summarize(&results, wall)));
            }
            print!("{}", format_table(&rows));
            if let Some(out) = out {
                std::fs::write(out, serde_json::to_string_pretty(&rows)?)?;
            }
        }
        Command::Render { input, index, results, out } => {
            let (header, insts) = io::read_instances(&input)?;
            let inst = insts
                .get(index)
                .ok_or_else(|| CopError::Config(format!("no instance {index} in {}", input.display())))?;
            let solution = match (&results, header.format) {
                (Some(r), _) => {
                    let (_, recs): (Header, Vec<ResultRecord>) = io::read_jsonl(r, Some(FileKind::Results))?;
                    let rec = recs.into_iter().find(|r| r.index == index).ok_or(CopError::MissingReference(index))?;
                    Some(rec.solution)
                }
                (None, FileKind::Dataset) => {
                    io::read_dataset(&input)?.1.into_iter().nth(index).map(|(_, r)| r.solution)
                }
                _ => None,
            };
            let partial = match solution {
                Some(s) => oracles::from_solution(inst, &s)?,
                None => bqco::PartialSolution::empty(inst.solution_kind()),
            };
            io::write_svg(inst, &partial, &out)?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
