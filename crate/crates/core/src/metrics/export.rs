use std::io::Write;

use super::confusion::{ConfusionMatrix, MetricsReport};
use super::curves::Curve;
use super::cv::CvReport;
use super::grid::GridPoint;
use crate::error::{Error, Result};

fn io(e: std::io::Error) -> Error {
    Error::Csv(e.to_string())
}

fn comments<W: Write>(w: &mut W, lines: &[String]) -> Result<()> {
    for l in lines {
        writeln!(w, "# {l}").map_err(io)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"))
}

pub fn write_curve_csv<W: Write>(mut writer: W, curve: &Curve, header: &[String]) -> Result<()> {
    comments(&mut writer, header)?;
    writeln!(writer, "# auc={:?}", curve.auc).map_err(io)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "x", "y"])?;
    for p in &curve.points {
        w.write_record([format!("{:?}", p.threshold), format!("{:?}", p.x), format!("{:?}", p.y)])?;
    }
    w.flush().map_err(io)
}

pub fn write_metrics_csv<W: Write>(
    mut writer: W,
    cm: &ConfusionMatrix,
    report: &MetricsReport,
    extra: &[(&str, f64)],
    header: &[String],
) -> Result<()> {
    comments(&mut writer, header)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "value"])?;
    for (name, v) in [("tp", cm.tp), ("fp", cm.fp), ("tn", cm.tn), ("fn", cm.fn_)] {
        w.write_record([name.to_string(), v.to_string()])?;
    }
    for (name, v) in report.fields() {
        w.write_record([name.to_string(), opt(v)])?;
    }
    for (name, v) in extra {
        w.write_record([name.to_string(), format!("{v:?}")])?;
    }
    w.flush().map_err(io)
}

pub fn write_cv_csv<W: Write>(mut writer: W, report: &CvReport, header: &[String]) -> Result<()> {
    comments(&mut writer, header)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["repeat", "fold", "accuracy", "auc_roc", "f_score"])?;
    for s in &report.scores {
        w.write_record([
            s.repeat.to_string(),
            s.fold.to_string(),
            format!("{:?}", s.accuracy),
            format!("{:?}", s.auc_roc),
            opt(s.f_score),
        ])?;
    }
    w.flush().map_err(io)
}

pub fn cv_summary(report: &CvReport) -> String {
    let c = &report.config;
    let line = |name: &str, iv: &super::cv::Interval| {
        format!("{name:<9} mean {:.4}  95% CI ({:.4}, {:.4})  sd {:.4}\n", iv.mean, iv.lower, iv.upper, iv.sd)
    };
    format!(
        "{} repeats x {} folds, seed {}, threshold {}\n{}{}{}",
        c.repeats,
        c.folds,
        c.seed,
        c.threshold,
        line("accuracy", &report.accuracy),
        line("auc_roc", &report.auc_roc),
        line("f_score", &report.f_score),
    )
}

pub fn write_grid_csv<W: Write>(mut writer: W, table: &[GridPoint], header: &[String]) -> Result<()> {
    comments(&mut writer, header)?;
    let mut w = csv::Writer::from_writer(writer);
    let Some(first) = table.first() else {
        return w.flush().map_err(io);
    };
    let mut cols: Vec<String> = first.params.iter().map(|(n, _)| n.clone()).collect();
    cols.extend(["mean_accuracy", "mean_f_score", "mean_auc_roc", "error"].map(String::from));
    w.write_record(&cols)?;
    for p in table {
        let mut rec: Vec<String> = p.params.iter().map(|(_, v)| format!("{v:?}")).collect();
        rec.extend([opt(p.mean_accuracy), opt(p.mean_f_score), opt(p.mean_auc_roc)]);
        rec.push(p.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io)
}
