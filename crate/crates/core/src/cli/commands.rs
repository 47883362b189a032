use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{CampaignMode, InstanceKind, RunConfig};
use super::manifest::{sha256_hex, Manifest};
use crate::data_model::{ingest_csv, write_csv, ArrivalModel, BookingRecord, SchemaOptions};
use crate::dmv::{build_directory, DmvDirectory};
use crate::policy_sim::{
    bkd_vs_pred, d1s_vs_fcfs, pools_by_type, BookingSource, CampaignReport, ModelPredictor,
    SimulationConfig,
};
use crate::predictor::{cross_validate, train_on_records, BoostedModel, CvReport};
use crate::rng::derive_seed;
use crate::synth::{benchmark_instance, generate_bookings};
use crate::value_function::{
    build_scalar_table, build_vector_table, RevenueSpec, ScalarTableParams, ScalarValueTable,
};
use crate::{Error, Result};

pub const RECORDS: &str = "records.csv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const DMV_DIRECTORY: &str = "dmv_directory.json";
pub const MODEL: &str = "model.json";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const VF_MODEL: &str = "vf_model.json";
pub const CAMPAIGN: &str = "campaign.csv";
pub const HISTORY: &str = "history.csv";
pub const HOLDOUT: &str = "holdout.csv";

/// File stem of the scalar table for capacity `k_v`.
pub fn scalar_stem(k_v: f64) -> String {
    format!("vf_scalar_kv{k_v}")
}

pub fn vector_stem(k_v: f64) -> String {
    format!("vf_vector_kv{k_v}")
}

/// Resolved config plus the run directory it writes into.
pub struct Context {
    pub config: RunConfig,
    pub run_dir: PathBuf,
    pub config_hash: String,
    fingerprint: serde_json::Value,
}

fn not_found(path: &Path) -> Error {
    Error::io(
        path,
        io::Error::new(io::ErrorKind::NotFound, "file not found"),
    )
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        let fingerprint = config.fingerprint()?;
        let config_hash = sha256_hex(serde_json::to_string(&fingerprint)?.as_bytes());
        let run_dir = match &config.run_dir {
            Some(dir) => dir.clone(),
            None => {
                let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
                config
                    .output_dir
                    .join(format!("{stamp}-{}", &config_hash[..8]))
            }
        };
        std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
        Ok(Self {
            config,
            run_dir,
            config_hash,
            fingerprint,
        })
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(
            command,
            &self.config_hash,
            self.config.seed,
            self.fingerprint.clone(),
        )
    }

    fn out(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    fn seed(&self, tag: &str) -> u64 {
        derive_seed(self.config.seed, tag, 0)
    }

    /// `explicit` if set, else `name` in the run directory; must exist.
    fn input(&self, explicit: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        let path = explicit.clone().unwrap_or_else(|| self.out(name));
        if path.is_file() {
            Ok(path)
        } else {
            Err(not_found(&path))
        }
    }

    /// Like [`input`](Self::input), but a missing default is not an error.
    fn optional_input(&self, explicit: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
        match explicit {
            Some(_) => self.input(explicit, name).map(Some),
            None => {
                let path = self.out(name);
                Ok(path.is_file().then_some(path))
            }
        }
    }

    fn load_records(&self, path: &Path) -> Result<Vec<BookingRecord>> {
        let (records, _) = ingest_csv(path, &SchemaOptions::default())?;
        Ok(records)
    }
}

pub fn cmd_generate(ctx: &Context) -> Result<()> {
    let g = &ctx.config.generate;
    let mut manifest = ctx.manifest("generate");
    let history = generate_bookings(&g.history_params(g.flights, 0, ctx.seed("history")));
    let path = ctx.out(HISTORY);
    write_csv(&path, &history)?;
    manifest.output(&path)?;
    println!(
        "wrote {} bookings on {} flights to {}",
        history.len(),
        g.flights,
        path.display()
    );
    if g.holdout_flights > 0 {
        let holdout =
            generate_bookings(&g.history_params(g.holdout_flights, g.flights, ctx.seed("holdout")));
        let path = ctx.out(HOLDOUT);
        write_csv(&path, &holdout)?;
        manifest.output(&path)?;
        println!(
            "wrote {} held-out bookings to {}",
            holdout.len(),
            path.display()
        );
    }
    manifest.write(&ctx.run_dir)?;
    Ok(())
}

pub fn cmd_ingest(ctx: &Context, input: Option<PathBuf>) -> Result<()> {
    let input = input
        .or_else(|| ctx.config.paths.input_csv.clone())
        .ok_or_else(|| Error::Config("no input CSV: set paths.input_csv or pass --input".into()))?;
    if !input.is_file() {
        return Err(not_found(&input));
    }
    let mut manifest = ctx.manifest("ingest");
    manifest.input(&input)?;
    let (records, report) = ingest_csv(&input, &ctx.config.schema)?;
    let records_path = ctx.out(RECORDS);
    write_csv(&records_path, &records)?;
    let report_path = ctx.out(INGEST_REPORT);
    write_json(&report_path, &report)?;
    manifest.output(&records_path)?;
    manifest.output(&report_path)?;
    manifest.write(&ctx.run_dir)?;
    println!(
        "kept {} of {} rows ({} dropped)",
        report.records_kept,
        report.rows_read,
        report.total_dropped()
    );
    for (reason, n) in report.dropped.iter().filter(|(_, n)| **n > 0) {
        println!(
            "  {}: {n}",
            serde_json::to_value(reason)?.as_str().unwrap_or("?")
        );
    }
    Ok(())
}

pub fn cmd_dmv(ctx: &Context) -> Result<()> {
    let input = ctx.input(&ctx.config.paths.records, RECORDS)?;
    let mut manifest = ctx.manifest("dmv");
    manifest.input(&input)?;
    let records = ctx.load_records(&input)?;
    let dir = build_directory(&records, &ctx.config.dmv)?;
    let path = ctx.out(DMV_DIRECTORY);
    dir.save(&path)?;
    manifest.output(&path)?;
    manifest.write(&ctx.run_dir)?;
    let flagged: Vec<String> = dir.flagged().map(|s| s.value.to_string()).collect();
    println!(
        "scored {} frequent values, flagged {} as DMV",
        dir.len(),
        flagged.len()
    );
    if !flagged.is_empty() {
        println!("  {}", flagged.join(", "));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainReport {
    samples: usize,
    trees: usize,
    max_tree_depth: usize,
    training_mse_initial: f64,
    training_mse_final: f64,
    cross_validation: Option<CvReport>,
}

pub fn cmd_train(ctx: &Context) -> Result<()> {
    let input = ctx.input(&ctx.config.paths.records, RECORDS)?;
    let dir_path = ctx.optional_input(&ctx.config.paths.dmv_directory, DMV_DIRECTORY)?;
    let mut manifest = ctx.manifest("train");
    manifest.input(&input)?;
    let records = ctx.load_records(&input)?;
    let directory = match &dir_path {
        Some(p) => {
            manifest.input(p)?;
            Some(DmvDirectory::load(p)?)
        }
        None => None,
    };
    let params = ctx.config.train.params();
    let model = train_on_records(&records, directory.as_ref(), &params, ctx.seed("train"))?;
    let cv = match ctx.config.train.folds {
        0 => None,
        k => Some(cross_validate(
            &records,
            directory.as_ref(),
            &params,
            k,
            ctx.seed("cv"),
        )?),
    };
    let report = TrainReport {
        samples: records.iter().filter(|r| r.rcsvol.is_some()).count(),
        trees: model.trees.len(),
        max_tree_depth: model.max_tree_depth(),
        training_mse_initial: model.training_mse[0],
        training_mse_final: *model.training_mse.last().unwrap_or(&f64::NAN),
        cross_validation: cv,
    };
    let model_path = ctx.out(MODEL);
    model.save(&model_path)?;
    let report_path = ctx.out(TRAIN_REPORT);
    write_json(&report_path, &report)?;
    manifest.output(&model_path)?;
    manifest.output(&report_path)?;
    manifest.write(&ctx.run_dir)?;
    println!(
        "trained {} trees on {} samples; training MSE {:.6e} -> {:.6e}",
        report.trees, report.samples, report.training_mse_initial, report.training_mse_final
    );
    if let Some(cv) = &report.cross_validation {
        let fe = &cv.flight_error;
        println!(
            "{}-fold flight error {:.4}; {:.1}% of flights under 5%, {:.1}% under 10%",
            cv.folds,
            fe.mean_error,
            100.0 * fe.frac_under_5pct,
            100.0 * fe.frac_under_10pct
        );
    }
    Ok(())
}

/// Everything the simulator needs to replay the tabulated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VfModel {
    pub arrival: ArrivalModel,
    pub revenue: RevenueSpec,
    pub offload_rate: f64,
    pub horizon: usize,
    pub capacities: Vec<f64>,
    pub grid: ScalarTableParams,
}

fn vf_model(ctx: &Context, manifest: &mut Manifest) -> Result<VfModel> {
    let vf = &ctx.config.value_function;
    let (arrival, revenue, offload_rate, capacities) = if let Some(a) = &vf.arrival {
        let arrival = a.build()?;
        let revenue = vf
            .revenue
            .as_ref()
            .ok_or_else(|| Error::Config("value_function.revenue is required".into()))?
            .resolve(&arrival.type_names)?;
        (
            arrival,
            revenue,
            vf.offload_rate.unwrap_or(1.0),
            vf.capacities.clone(),
        )
    } else if let Some(InstanceKind::Benchmark) = vf.instance {
        let inst = benchmark_instance()?;
        let revenue = match &vf.revenue {
            Some(r) => r.resolve(&inst.arrival.type_names)?,
            None => inst.revenue,
        };
        let capacities = if vf.capacities.is_empty() {
            inst.capacities
        } else {
            vf.capacities.clone()
        };
        (
            inst.arrival,
            revenue,
            vf.offload_rate.unwrap_or(inst.offload_rate),
            capacities,
        )
    } else {
        let input = ctx.input(&ctx.config.paths.records, RECORDS)?;
        manifest.input(&input)?;
        let records = ctx.load_records(&input)?;
        let steps = vf.horizon.unwrap_or(60);
        let arrival =
            ArrivalModel::from_records(&records, steps, vf.intervals, vf.step_normalization)?;
        let revenue = vf
            .revenue
            .as_ref()
            .ok_or_else(|| Error::Config("value_function.revenue is required".into()))?
            .resolve(&arrival.type_names)?;
        (
            arrival,
            revenue,
            vf.offload_rate.unwrap_or(1.0),
            vf.capacities.clone(),
        )
    };
    if capacities.is_empty() {
        return Err(Error::Config(
            "value_function.capacities must not be empty".into(),
        ));
    }
    Ok(VfModel {
        horizon: vf.horizon.unwrap_or(arrival.num_steps),
        arrival,
        revenue,
        offload_rate,
        capacities,
        grid: ScalarTableParams {
            delta: vf.delta,
            max_volume: vf.max_volume,
        },
    })
}

pub fn cmd_build_vf(ctx: &Context) -> Result<()> {
    let mut manifest = ctx.manifest("build-vf");
    let model = vf_model(ctx, &mut manifest)?;
    let vf = &ctx.config.value_function;
    let model_path = ctx.out(VF_MODEL);
    write_json(&model_path, &model)?;
    manifest.output(&model_path)?;
    for &k_v in &model.capacities {
        let table = build_scalar_table(
            &model.arrival,
            &model.revenue,
            k_v,
            model.offload_rate,
            model.horizon,
            model.grid,
        )?;
        let stem = ctx.out(&scalar_stem(k_v));
        table.save(&stem)?;
        manifest.output(&stem.with_extension("json"))?;
        manifest.output(&stem.with_extension("csv"))?;
        println!(
            "k_v={k_v}: scalar table, {} grid points x {} epochs, VF(0,{}) = {:.6}",
            table.grid_points(),
            table.horizon + 1,
            table.horizon,
            table.grid_value(0, table.horizon)?
        );
        if vf.vector {
            let table = build_vector_table(
                &model.arrival,
                &model.revenue,
                k_v,
                model.offload_rate,
                model.horizon,
                u128::from(vf.state_cap),
            )?;
            let stem = ctx.out(&vector_stem(k_v));
            table.save(&stem)?;
            manifest.output(&stem.with_extension("json"))?;
            manifest.output(&stem.with_extension("csv"))?;
            let zero = vec![0; table.num_types];
            println!(
                "k_v={k_v}: vector table, {} states, VF(0,{}) = {:.6}",
                table.num_states(),
                table.horizon,
                table.value(&zero, table.horizon)?
            );
        }
    }
    manifest.write(&ctx.run_dir)?;
    Ok(())
}

pub fn cmd_simulate(ctx: &Context) -> Result<()> {
    let sim = &ctx.config.simulation;
    let mut manifest = ctx.manifest("simulate");
    let tables_dir = ctx
        .config
        .paths
        .tables
        .clone()
        .unwrap_or_else(|| ctx.run_dir.clone());
    let model_path = tables_dir.join(VF_MODEL);
    if !model_path.is_file() {
        return Err(not_found(&model_path));
    }
    manifest.input(&model_path)?;
    let vf: VfModel = serde_json::from_str(
        &std::fs::read_to_string(&model_path).map_err(|e| Error::io(&model_path, e))?,
    )?;
    let capacities = sim
        .capacities
        .clone()
        .unwrap_or_else(|| vf.capacities.clone());
    let mut table_files = Vec::new();
    for &k_v in &capacities {
        let stem = tables_dir.join(scalar_stem(k_v));
        for ext in ["json", "csv"] {
            let p = stem.with_extension(ext);
            if !p.is_file() {
                return Err(not_found(&p));
            }
            manifest.input(&p)?;
        }
        table_files.push((k_v, stem));
    }
    let load_table = |k_v: f64| -> Result<Arc<ScalarValueTable>> {
        let stem = table_files
            .iter()
            .find(|(k, _)| *k == k_v)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Config(format!("no table for k_v = {k_v}")))?;
        let table = ScalarValueTable::load(stem)?;
        if table.capacity != k_v {
            return Err(Error::InvalidInput(format!(
                "{} holds capacity {}, expected {k_v}",
                stem.display(),
                table.capacity
            )));
        }
        Ok(Arc::new(table))
    };

    let mut base = SimulationConfig {
        arrival: vf.arrival.clone(),
        revenue: vf.revenue.clone(),
        capacity: 0.0,
        offload_rate: vf.offload_rate,
        horizon: vf.horizon,
        theta: sim.thetas.first().copied().unwrap_or(0.0),
        num_flights: sim.num_flights,
        seed: ctx.seed("simulate"),
        source: BookingSource::MeanVolume,
    };

    let report: CampaignReport = match sim.mode {
        CampaignMode::D1sVsFcfs => d1s_vs_fcfs(&base, &capacities, &sim.thetas, load_table)?,
        CampaignMode::BkdVsPred => {
            let model_file = ctx.input(&ctx.config.paths.model, MODEL)?;
            manifest.input(&model_file)?;
            let model = BoostedModel::load(&model_file)?;
            let directory =
                match ctx.optional_input(&ctx.config.paths.dmv_directory, DMV_DIRECTORY)? {
                    Some(p) => {
                        manifest.input(&p)?;
                        Some(DmvDirectory::load(&p)?)
                    }
                    None => None,
                };
            let pool_file = ctx.input(&ctx.config.paths.pool_csv, HOLDOUT)?;
            manifest.input(&pool_file)?;
            let (pool, _) = ingest_csv(&pool_file, &ctx.config.schema)?;
            base.source = BookingSource::Pool {
                bookings: pools_by_type(&pool, &base.arrival),
                realization: sim.realization,
            };
            let predictor = Arc::new(ModelPredictor { model, directory });
            bkd_vs_pred(&base, &capacities, &sim.thetas, predictor, load_table)?
        }
    };

    let path = ctx.out(CAMPAIGN);
    report.write_csv(&path)?;
    manifest.output(&path)?;
    manifest.write(&ctx.run_dir)?;
    println!(
        "{} flights per cell, {} rows -> {}",
        report.num_flights,
        report.rows.len(),
        path.display()
    );
    for r in &report.rows {
        println!(
            "  {:<10} k_v={:<8} theta={:<5} offload {:>10.3} ± {:<10.3} final revenue {:>10.3} ± {:.3}",
            r.policy, r.k_v, r.theta, r.mean_offload, r.std_offload, r.mean_final_revenue, r.std_final_revenue
        );
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
