use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use log::{info, warn};

use crate::error::{Error, Result};
use crate::eval::{prequential_run_with_models, Classifier, EvalReport, Summary};

use super::config::{ModelKind, RunConfig};
use super::settings::{render, List, Resolver, Settings};

/// `dir/stem.ext` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn execute(config: &RunConfig) -> Result<(EvalReport, Vec<Box<dyn Classifier>>)> {
    prequential_run_with_models(
        config.model.name(),
        |seed, p, k| config.build_model(seed, p, k),
        |seed| config.build_stream(seed),
        &config.prequential,
    )
}

fn warn_partial(report: &EvalReport) {
    if report.partial {
        warn!("{}: stream ran out before the requested number of instances", report.model);
    }
}

/// Writes `<stem>.dat` and a gnuplot script at `script` that renders loss,
/// node count and gradient norm over time.
pub fn write_plot(report: &EvalReport, script: &Path) -> Result<()> {
    let data = sibling(script, ".dat");
    let image = sibling(script, ".png");
    write_with(&data, |w| {
        writeln!(w, "# instances ce_loss node_count grad_norm")?;
        for row in report.windows() {
            let grad = row.grad_norm.map_or("NaN".to_owned(), |g| format!("{g:.6}"));
            writeln!(w, "{} {:.6} {:.2} {grad}", row.instances, row.ce_loss, row.node_count)?;
        }
        Ok(())
    })?;
    let data_name = data.file_name().and_then(|n| n.to_str()).unwrap_or("plot.dat");
    let image_name = image.file_name().and_then(|n| n.to_str()).unwrap_or("plot.png");
    write_with(script, |w| {
        write!(
            w,
            "\
set terminal pngcairo size 900,900
set output '{image_name}'
set multiplot layout 3,1 title '{model}'
set xlabel 'instances'
set grid
set ylabel 'cross-entropy'
plot '{data_name}' using 1:2 with lines notitle
set ylabel 'nodes'
plot '{data_name}' using 1:3 with steps notitle
set ylabel 'gradient norm'
plot '{data_name}' using 1:4 with lines notitle
unset multiplot
",
            model = report.model
        )?;
        Ok(())
    })
}

/// Runs one model and writes the report, per-repetition values, the config
/// echo and any requested tree dump or plot.
pub fn cmd_run(config: &RunConfig) -> Result<EvalReport> {
    let (report, models) = execute(config)?;
    warn_partial(&report);
    write_with(&config.out, |w| report.write_csv(w))?;
    write_with(&sibling(&config.out, ".reps.csv"), |w| report.write_repetitions_csv(w))?;
    write_with(&sibling(&config.out, ".config"), |w| {
        w.write_all(render(&config.echo).as_bytes())?;
        Ok(())
    })?;
    if let Some(path) = &config.dump_tree {
        write_with(path, |w| {
            for (i, (model, rep)) in models.iter().zip(&report.repetitions).enumerate() {
                writeln!(w, "# repetition {i} seed {}", rep.seed)?;
                w.write_all(model.dump().as_bytes())?;
            }
            Ok(())
        })?;
    }
    if let Some(path) = &config.plot {
        write_plot(&report, path)?;
    }
    Ok(report)
}

fn fmt_summary(s: Option<Summary>) -> (String, String) {
    s.map_or((String::new(), String::new()), |s| {
        (format!("{:.6}", s.mean), format!("{:.6}", s.std_error))
    })
}

/// Flags `better(a, b)`-maximal entries; exact ties are all flagged.
fn winners(values: &[Option<f64>], lower_is_better: bool) -> Vec<bool> {
    let present = values.iter().flatten().copied();
    let best = if lower_is_better {
        present.fold(f64::INFINITY, f64::min)
    } else {
        present.fold(f64::NEG_INFINITY, f64::max)
    };
    values.iter().map(|v| *v == Some(best)).collect()
}

pub const COMPARE_HEADER: &str =
    "model,ce_loss_mean,ce_loss_stderr,auroc_mean,auroc_stderr,accuracy_mean,accuracy_stderr,winner_ce_loss,winner_auroc";

/// Runs each model on identically seeded copies of the stream and writes a
/// comparison table plus each model's per-repetition values.
pub fn cmd_compare(models: &[ModelKind], settings: &Settings) -> Result<Vec<EvalReport>> {
    if models.len() < 2 {
        return Err(Error::config("models", "compare needs at least two models"));
    }
    let configs = models
        .iter()
        .map(|m| {
            let mut s = settings.clone();
            s.set("model", m.name());
            RunConfig::resolve(&s)
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<EvalReport>> = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || execute(c).map(|(r, _)| r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::contract("compare thread panicked"))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    reports.iter().for_each(warn_partial);

    let out = &configs[0].out;
    let ce_win = winners(&reports.iter().map(|r| Some(r.ce.mean)).collect::<Vec<_>>(), true);
    let auroc_win = winners(&reports.iter().map(|r| r.auroc.map(|a| a.mean)).collect::<Vec<_>>(), false);
    write_with(out, |w| {
        writeln!(w, "{COMPARE_HEADER}")?;
        for (i, r) in reports.iter().enumerate() {
            let (ce_m, ce_s) = fmt_summary(Some(r.ce));
            let (au_m, au_s) = fmt_summary(r.auroc);
            let (ac_m, ac_s) = fmt_summary(Some(r.accuracy));
            writeln!(
                w,
                "{},{ce_m},{ce_s},{au_m},{au_s},{ac_m},{ac_s},{},{}",
                r.model, ce_win[i], auroc_win[i]
            )?;
        }
        Ok(())
    })?;
    for r in &reports {
        write_with(&sibling(out, &format!(".{}.reps.csv", r.model)), |w| r.write_repetitions_csv(w))?;
    }
    let mut echo = configs[0].echo.clone();
    echo.remove("model");
    echo.insert("models".into(), List(models.to_vec()).to_string());
    write_with(&sibling(out, ".config"), |w| {
        w.write_all(render(&echo).as_bytes())?;
        Ok(())
    })?;
    Ok(reports)
}

pub const TRANSPARENCY_HEADER: &str = "alpha,transparency_ratio,auroc";

/// One row per alpha for SoHoT; a soft tree gives a single row at alpha 1.
pub fn cmd_transparency(settings: &Settings) -> Result<Vec<(f64, Option<f64>, Option<f64>)>> {
    let mut r = Resolver::new(settings);
    let alphas: List<f64> = r.get("alphas", List(vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]))?;
    if alphas.0.is_empty() {
        return Err(Error::config("alphas", "need at least one value"));
    }
    let base = RunConfig::resolve(settings)?;
    let alphas = match base.model {
        ModelKind::SoHoT => alphas.0,
        ModelKind::St => vec![1.0],
        other => {
            return Err(Error::config(
                "model",
                format!("transparency needs sohot or st, got `{other}`"),
            ))
        }
    };
    let mut configs = Vec::new();
    for &alpha in &alphas {
        let mut c = base.clone();
        c.prequential.track_transparency = true;
        c.sohot.alpha = alpha;
        c.sohot.validate()?;
        configs.push(c);
    }
    let results: Vec<Result<EvalReport>> = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || execute(c).map(|(r, _)| r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::contract("transparency thread panicked"))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    reports.iter().for_each(warn_partial);
    let rows: Vec<_> = alphas
        .iter()
        .zip(&reports)
        .map(|(&a, rep)| (a, rep.transparency_ratio.map(|s| s.mean), rep.auroc.map(|s| s.mean)))
        .collect();
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    write_with(&base.out, |w| {
        writeln!(w, "{TRANSPARENCY_HEADER}")?;
        for (a, ratio, auroc) in &rows {
            writeln!(w, "{a},{},{}", opt(*ratio), opt(*auroc))?;
        }
        Ok(())
    })?;
    let mut echo = base.echo.clone();
    echo.extend(r.into_echo());
    echo.remove("alpha");
    write_with(&sibling(&base.out, ".config"), |w| {
        w.write_all(render(&echo).as_bytes())?;
        Ok(())
    })?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/report.csv"), ".config"), PathBuf::from("out/report.config"));
        assert_eq!(sibling(Path::new("r.csv"), ".reps.csv"), PathBuf::from("r.reps.csv"));
    }

    #[test]
    fn ties_flag_every_winner() {
        assert_eq!(winners(&[Some(0.3), Some(0.2), Some(0.2)], true), vec![false, true, true]);
        assert_eq!(winners(&[Some(0.9), None, Some(0.8)], false), vec![true, false, false]);
    }
}
