//! Result files: long-format CSV, error-curve SVG, control/value maps and
//! the reference tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Environment, ExperimentConfig};
use super::runner::{ExperimentOutput, ResultFrame, ResultRow, SeedTag};
use super::svg::{HeatMap, LinePlot, Series};
use crate::env::{ExecModel, PlacementModel};
use crate::error::{Error, Result};
use crate::reference::{learned_placement_control, ReferenceTable};

pub const CSV_HEADER: &str = "step,metric,value,algo,policy,seed";

fn io_err(path: &Path, err: std::io::Error) -> Error {
    Error::Output(format!("{}: {err}", path.display()))
}

/// Create `dir` and prove it is writable before any computation starts.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| io_err(dir, e))?;
    fs::remove_file(&probe).map_err(|e| io_err(&probe, e))
}

pub fn format_csv(frame: &ResultFrame) -> String {
    let mut out = String::with_capacity(48 * frame.len() + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &frame.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step, r.metric, r.value, r.algo, r.policy, r.seed
        );
    }
    out
}

/// Inverse of [`format_csv`].
pub fn parse_csv(text: &str) -> Result<ResultFrame> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Output(format!("expected header `{CSV_HEADER}`")));
    }
    let mut frame = ResultFrame::default();
    for (i, line) in lines.enumerate() {
        let bad = || Error::Output(format!("line {}: malformed row `{line}`", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let seed = match f[5] {
            "all" => SeedTag::All,
            s => SeedTag::Path(s.parse().map_err(|_| bad())?),
        };
        frame.push(ResultRow {
            step: f[0].parse().map_err(|_| bad())?,
            metric: f[1].to_string(),
            value: f[2].parse().map_err(|_| bad())?,
            algo: f[3].to_string(),
            policy: f[4].to_string(),
            seed,
        });
    }
    Ok(frame)
}

/// Mean error curves of every run on log-log axes.
pub fn curves_plot(frame: &ResultFrame, metric: &str, title: &str) -> LinePlot {
    let series = frame
        .groups()
        .into_iter()
        .map(|(algo, policy)| Series {
            points: frame
                .series(&algo, &policy, &format!("{metric}_mean"), SeedTag::All)
                .into_iter()
                .map(|(s, v)| (s as f64, v))
                .collect(),
            label: format!("{algo}+{policy}"),
        })
        .collect();
    LinePlot {
        title: title.to_string(),
        x_label: "step".to_string(),
        y_label: metric.to_string(),
        log_x: true,
        log_y: true,
        series,
    }
}

/// Control map on the `t = 0`, `q_opp = opp_init` slice:
/// x = `q_before + q_after`, y = `q_before`; 0 = cross, 1 = stay.
pub fn placement_control_map(model: &PlacementModel, control: impl Fn(usize) -> usize, title: &str) -> Result<HeatMap> {
    let side = model.q_max + 1;
    let mut cells = vec![None; side * side];
    for c in 0..model.cells() {
        let (q_before, q_after) = model.cell(c);
        let s = crate::env::LobState {
            q_before,
            q_after,
            q_opp: model.opp_init,
        };
        let id = model.encode(0, &s)?.0;
        cells[q_before * side + q_before + q_after] = Some(control(id) as f64);
    }
    Ok(HeatMap {
        title: title.to_string(),
        x_label: "queue size at own level".to_string(),
        y_label: "orders ahead".to_string(),
        cols: side,
        rows: side,
        cells,
        categorical: true,
    })
}

/// Value map: x = time index, y = inventory index.
pub fn execution_value_map(model: &ExecModel, values: &[f64], title: &str) -> HeatMap {
    let (cols, rows) = (model.k_t + 1, model.n_inventory());
    let mut cells = vec![None; cols * rows];
    for n_t in 0..cols {
        for i in 0..rows {
            cells[i * cols + n_t] = Some(values[model.index(n_t, i).0]);
        }
    }
    HeatMap {
        title: title.to_string(),
        x_label: "time step".to_string(),
        y_label: "inventory index".to_string(),
        cols,
        rows,
        cells,
        categorical: false,
    }
}

pub fn format_reference_csv(reference: &ReferenceTable) -> String {
    let mut out = String::from("index,value,weight\n");
    for (i, (v, w)) in reference.values.iter().zip(&reference.weights).enumerate() {
        let _ = writeln!(out, "{i},{v},{w}");
    }
    out
}

fn write(path: PathBuf, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(())
}

/// Write every artefact of a run into `dir`; returns the files written.
pub fn emit_outputs(output: &ExperimentOutput, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    if output.frame.is_empty() {
        return Err(Error::Output("refusing to write an empty result frame".into()));
    }
    prepare_output_dir(dir)?;
    let mut written = Vec::new();
    write(dir.join("results.csv"), &format_csv(&output.frame), &mut written)?;
    let env = cfg.experiment.environment;
    let plot = curves_plot(&output.frame, "l2_error", &format!("{} error", env.name()));
    write(dir.join("curves.svg"), &plot.render(), &mut written)?;
    write(
        dir.join("reference.csv"),
        &format_reference_csv(&output.reference),
        &mut written,
    )?;
    match env {
        Environment::Placement => {
            let model = &cfg.placement.as_ref().expect("validated placement block").model;
            let reference = &output.reference;
            let map = placement_control_map(model, |id| reference.control[id].unwrap_or(0), "reference control")?;
            write(dir.join("control_reference.svg"), &map.render(), &mut written)?;
            for t in &output.final_tables {
                let map = placement_control_map(
                    model,
                    |id| learned_placement_control(&t.values, id),
                    &format!("{}+{} control", t.algo, t.policy),
                )?;
                write(
                    dir.join(format!("control_{}_{}.svg", t.algo, t.policy)),
                    &map.render(),
                    &mut written,
                )?;
            }
        }
        Environment::Execution => {
            let model = &cfg.execution.as_ref().expect("validated execution block").model;
            let map = execution_value_map(model, &output.reference.values, "reference value");
            write(dir.join("value_reference.svg"), &map.render(), &mut written)?;
            for t in &output.final_tables {
                let map = execution_value_map(model, &t.values, &format!("{}+{} value", t.algo, t.policy));
                write(
                    dir.join(format!("value_{}_{}.svg", t.algo, t.policy)),
                    &map.render(),
                    &mut written,
                )?;
            }
        }
        Environment::Drift => {}
    }
    Ok(written)
}
