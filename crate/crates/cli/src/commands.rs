use std::fs;
use std::path::{Path, PathBuf};

use sbm_core::criticality::{
    classify, collapse_discord, derivative_tail_fit, evaluate_point, extrapolate_critical, locate_transition, records_from_csv,
    records_to_csv, run_refined_sweep, run_sweep, Classification, CollapseProfile, Refinement, Signature, SweepRecord,
    TailFitOptions,
};
use sbm_core::io::StateDocument;
use sbm_core::observables::{displacement_profile, pair_sweep, pair_sweep_csv};
use serde::Serialize;
use serde_json::json;

use crate::config::{header, Resolved};
use crate::error::CliError;

fn write_text(dir: &Path, name: &str, header: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, format!("{header}{body}"))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.into()))?;
    write_text(dir, name, "", &(text + "\n"))
}

pub fn bath(cfg: &Resolved) -> Result<(), CliError> {
    let alpha = cfg.single_alpha()?;
    let params = cfg.sweep_config().params(alpha)?;
    let head = header("bath", cfg)?;
    write_text(&cfg.out, "bath.csv", &head, &params.bath.to_csv())?;
    Ok(())
}

pub fn ground_state(cfg: &Resolved) -> Result<(), CliError> {
    let alpha = cfg.single_alpha()?;
    let sweep_cfg = cfg.sweep_config();
    let params = sweep_cfg.params(alpha)?;
    let (record, result) = evaluate_point(&sweep_cfg, alpha, None)?;
    let head = header("ground-state", cfg)?;

    let doc = StateDocument::new(&result, &params);
    write_json(&cfg.out, "state.json", &json!({ "config": cfg, "state": doc }))?;
    write_text(&cfg.out, "observables.csv", &head, &records_to_csv(std::slice::from_ref(&record)))?;
    let profile = displacement_profile(&result.state, &params.bath)?;
    write_text(&cfg.out, "profile.csv", &head, &profile.to_csv())?;
    if params.n_modes() >= 2 {
        let pairs = pair_sweep(&result.state, &params.bath, cfg.reference_mode)?;
        write_text(&cfg.out, "pairs.csv", &head, &pair_sweep_csv(&pairs))?;
    }
    println!(
        "alpha = {alpha}  E_g = {:.12}  sigma_z = {:?}  sigma_x = {:?}  converged = {}",
        record.energy, record.sigma_z, record.sigma_x, record.converged
    );
    if !record.converged {
        return Err(CliError::NonConvergence(1));
    }
    Ok(())
}

pub fn sweep(cfg: &Resolved) -> Result<(), CliError> {
    if cfg.alphas.is_empty() {
        return Err(CliError::Config("sweep needs an alpha grid ('alphas' or alpha_start/alpha_stop/alpha_step)".into()));
    }
    let sweep_cfg = cfg.sweep_config();
    let states = cfg.out.join("states");
    let result = if cfg.refine {
        let refine = Refinement { column: cfg.refine_column.clone(), factor: cfg.refine_factor, ..Default::default() };
        run_refined_sweep(&sweep_cfg, &cfg.alphas, &refine, Some(&states))?
    } else {
        run_sweep(&sweep_cfg, &cfg.alphas, Some(&states))?
    };
    let head = header("sweep", cfg)?;
    write_text(&cfg.out, "sweep.csv", &head, &records_to_csv(&result.records))?;
    if !cfg.indicators.is_empty() {
        write_text(&cfg.out, "indicators.csv", &head, &normalized_table(&result.records, &cfg.indicators)?)?;
    }
    let failed = result.records.iter().filter(|r| !r.converged).count();
    println!("{} points, {failed} not converged", result.records.len());
    if failed > 0 {
        return Err(CliError::NonConvergence(failed));
    }
    Ok(())
}

/// Selected columns scaled so that each peaks at one in magnitude.
fn normalized_table(records: &[SweepRecord], columns: &[String]) -> Result<String, CliError> {
    let alphas: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let mut cols = Vec::with_capacity(columns.len());
    for name in columns {
        let v = sbm_core::criticality::sweep::column(records, name).map_err(|e| CliError::Config(e.to_string()))?;
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        cols.push(v.iter().map(|x| if peak > 0.0 { x / peak } else { 0.0 }).collect::<Vec<_>>());
    }
    let mut out = String::from("alpha");
    for name in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, a) in alphas.iter().enumerate() {
        out.push_str(&format!("{a:.15e}"));
        for c in &cols {
            out.push_str(&format!(",{:.15e}", c[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSettings {
    pub inputs: Vec<PathBuf>,
    pub column: String,
    pub signature: Option<String>,
    pub x: Vec<f64>,
    pub p_range: (f64, f64),
    pub tail_fit: bool,
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct CurveReport {
    input: PathBuf,
    classification: Classification,
    signature: Option<Signature>,
    alpha_c: Option<f64>,
    uncertainty: Option<f64>,
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<sbm_core::criticality::TailFit>,
}

fn read_records(path: &Path) -> Result<Vec<SweepRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    records_from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn analyze(settings: &AnalyzeSettings) -> Result<(), CliError> {
    if settings.inputs.is_empty() {
        return Err(CliError::Config("analyze needs at least one --input".into()));
    }
    if !settings.x.is_empty() && settings.x.len() != settings.inputs.len() {
        return Err(CliError::Config("give one --x value per --input".into()));
    }
    let requested: Option<Signature> =
        settings.signature.as_deref().filter(|s| *s != "auto").map(str::parse).transpose().map_err(CliError::from_core)?;
    let head = header("analyze", settings)?;
    let mut reports = Vec::new();
    let mut table = String::from("input,alpha,value,normalized\n");
    for (idx, path) in settings.inputs.iter().enumerate() {
        let records = read_records(path)?;
        let alphas: Vec<f64> = records.iter().map(|r| r.alpha).collect();
        let values = sbm_core::criticality::sweep::column(&records, &settings.column).map_err(|e| CliError::Config(e.to_string()))?;
        let classification = classify(&alphas, &values)?;
        let signature = requested.or(match classification {
            Classification::Cusp => Some(Signature::Peak),
            Classification::Jump => Some(Signature::Jump),
            Classification::Kink => Some(Signature::Kink),
            Classification::Delta => Some(Signature::Delta),
            Classification::Smooth => None,
        });
        let (transition, note) = match signature.map(|s| locate_transition(&alphas, &values, s)) {
            Some(Ok(t)) => (Some(t), None),
            Some(Err(e)) => (None, Some(e.to_string())),
            None => (None, Some("no singular signature".into())),
        };
        let tail = if settings.tail_fit {
            let d = sbm_core::criticality::sweep::column(&records, "dEg_dalpha").map_err(|e| CliError::Config(e.to_string()))?;
            derivative_tail_fit(&alphas, &d, &TailFitOptions::default()).ok()
        } else {
            None
        };
        let peak = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, v) in alphas.iter().zip(&values) {
            let norm = if peak > 0.0 { v / peak } else { 0.0 };
            table.push_str(&format!("{idx},{a:.15e},{v:.15e},{norm:.15e}\n"));
        }
        println!(
            "{}: {:?}, alpha_c = {}",
            path.display(),
            classification,
            transition.map_or("n/a".to_string(), |t| format!("{:.6} +- {:.6}", t.alpha_c, t.uncertainty))
        );
        reports.push(CurveReport {
            input: path.clone(),
            classification,
            signature,
            alpha_c: transition.map(|t| t.alpha_c),
            uncertainty: transition.map(|t| t.uncertainty),
            note,
            tail,
        });
    }

    let extrapolation = if settings.x.is_empty() {
        None
    } else {
        let pts: Vec<(f64, f64)> = settings.x.iter().zip(&reports).filter_map(|(x, r)| r.alpha_c.map(|a| (*x, a))).collect();
        let (x, a): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let e = extrapolate_critical(&x, &a, settings.p_range)?;
        println!("extrapolated alpha_c = {:.6}, exponent = {:.4}", e.alpha_limit, e.exponent);
        Some(e)
    };
    write_json(&settings.out, "analysis.json", &json!({ "config": settings, "curves": reports, "extrapolation": extrapolation }))?;
    write_text(&settings.out, "curves.csv", &head, &table)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseSettings {
    pub states: PathBuf,
    pub lambda_exp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_mode: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn collapse(settings: &CollapseSettings) -> Result<(), CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(&settings.states)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", settings.states.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut profiles = Vec::new();
    for path in &files {
        let doc = StateDocument::load(path)?;
        let state = doc.state()?;
        let pairs = pair_sweep(&state, &doc.params.bath, settings.reference_mode)?;
        profiles.push(CollapseProfile {
            alpha: doc.params.bath.spec.alpha,
            omega: pairs.iter().map(|p| p.omega_k).collect(),
            discord: pairs.iter().map(|p| p.measures.discord).collect(),
        });
    }
    profiles.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let res = collapse_discord(&profiles, settings.lambda_exp)?;
    let head = header("collapse", settings)?;
    let mut master = String::from("r,D_scaled\n");
    for (r, d) in &res.master {
        master.push_str(&format!("{r:.15e},{d:.15e}\n"));
    }
    let mut scales = String::from("alpha,omega_s\n");
    for (a, w) in &res.omega_s {
        scales.push_str(&format!("{a:.15e},{w:.15e}\n"));
    }
    write_text(&settings.out, "collapse.csv", &head, &master)?;
    write_text(&settings.out, "omega_s.csv", &head, &scales)?;
    write_json(&settings.out, "collapse.json", &json!({ "config": settings, "result": res }))?;
    println!("collapse residual {:.3e}, rate {:.4}", res.residual, res.rate_fit.exponent);
    Ok(())
}
