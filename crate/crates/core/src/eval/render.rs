use std::fmt::Write;

use super::experiment::ExperimentReport;
use super::reference::{reference_for, REFERENCE_WINDOWS};

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn rule(widths: &[usize]) -> String {
    widths
        .iter()
        .map(|w| "-".repeat(w + 2))
        .collect::<Vec<_>>()
        .join("+")
}

fn line(cells: &[String], widths: &[usize]) -> String {
    cells
        .iter()
        .zip(widths)
        .enumerate()
        .map(|(i, (c, w))| {
            if i == 0 {
                format!(" {c:<w$} ")
            } else {
                format!(" {c:>w$} ")
            }
        })
        .collect::<Vec<_>>()
        .join("|")
}

fn table(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", line(&header, &widths));
    let _ = writeln!(out, "{}", rule(&widths));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r, &widths));
    }
    out
}

/// Plain-text rendering: the accuracy grid with each model's CV-selected
/// window, supplementary metrics, and the published reference grid with
/// deltas when one exists for this target and modality set.
pub fn render_text(report: &ExperimentReport) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} detection, modality {} | seed {} | config {}",
        m.target,
        m.modality,
        m.seed,
        &m.config_digest[..12.min(m.config_digest.len())]
    );
    let _ = writeln!(
        out,
        "subjects: {} train, {} validation, {} test | {} labeled blocks\n",
        m.split.train.len(),
        m.split.validation.len(),
        m.split.test.len(),
        m.labeled_blocks
    );

    let windows: Vec<String> = report.config.plans.iter().map(|p| p.label()).collect();
    let mut header = vec!["Model".to_string()];
    header.extend(windows.iter().cloned());
    header.push("Avg. Recall".into());
    let mut rows = Vec::new();
    for model in report.config.models.iter().map(|c| c.kind) {
        let best = report.best.iter().find(|b| b.model == model);
        let mut row = vec![model.title().to_string()];
        for plan in &report.config.plans {
            row.push(match report.cell(model, plan) {
                Some(c) if best.is_some_and(|b| b.window == c.window) => {
                    format!("{}*", pct(c.test.accuracy))
                }
                Some(c) => pct(c.test.accuracy),
                None => "-".into(),
            });
        }
        row.push(best.map_or("-".into(), |b| format!("{:.2}", b.mean_cv_recall)));
        rows.push(row);
    }
    let _ = writeln!(
        out,
        "Block accuracy on test subjects (* = window chosen by mean CV accuracy)"
    );
    out.push_str(&table(header, rows));

    let header = [
        "Model",
        "Window",
        "Recall",
        "Precision",
        "F1",
        "CV acc.",
        "CV recall",
        "Slice acc.",
        "TP/FP/TN/FN",
    ]
    .map(String::from)
    .to_vec();
    let rows = report
        .cells
        .iter()
        .map(|c| {
            let k = c.test.confusion;
            vec![
                c.model.title().to_string(),
                c.window.clone(),
                format!(
                    "{:.2}{}",
                    c.test.recall,
                    if c.test.recall_defined {
                        ""
                    } else {
                        " (undef.)"
                    }
                ),
                format!(
                    "{:.2}{}",
                    c.test.precision,
                    if c.test.precision_defined {
                        ""
                    } else {
                        " (undef.)"
                    }
                ),
                format!("{:.2}", c.test.f1),
                pct(c.mean_cv_accuracy),
                format!("{:.2}", c.mean_cv_recall),
                pct(c.test_slices.accuracy),
                format!("{}/{}/{}/{}", k.tp, k.fp, k.tn, k.fn_),
            ]
        })
        .collect();
    let _ = writeln!(out, "\nPer-cell test metrics (blocks unless marked slice)");
    out.push_str(&table(header, rows));

    if let Some(reference) = reference_for(m.target, m.modality) {
        let mut header = vec!["Model".to_string()];
        header.extend(REFERENCE_WINDOWS.iter().map(|w| w.to_string()));
        header.push("Avg. Recall".into());
        let rows = reference
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.model.title().to_string()];
                for (w, &acc) in REFERENCE_WINDOWS.iter().zip(&r.accuracy) {
                    let ours = report
                        .cells
                        .iter()
                        .find(|c| c.model == r.model && c.window == *w);
                    row.push(match ours {
                        Some(c) => {
                            format!("{} ({:+.1})", pct(acc), 100.0 * (c.test.accuracy - acc))
                        }
                        None => pct(acc),
                    });
                }
                let ours = report.best.iter().find(|b| b.model == r.model);
                row.push(match ours {
                    Some(b) => format!(
                        "{:.2} ({:+.2})",
                        r.avg_recall,
                        b.mean_cv_recall - r.avg_recall
                    ),
                    None => format!("{:.2}", r.avg_recall),
                });
                row
            })
            .collect();
        let _ = writeln!(
            out,
            "\nPublished reference: {} (delta = this run minus published)",
            reference.title
        );
        out.push_str(&table(header, rows));
    }
    out
}

/// Per-block test predictions of every cell, for external plotting.
pub fn predictions_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("model,window,block_key,subject_id,label,predicted,slices,positive_slices\n");
    for c in &report.cells {
        for b in &c.test_blocks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.model,
                c.window,
                b.block_key,
                b.subject_id,
                b.label as u8,
                b.predicted as u8,
                b.slices,
                b.positive_slices
            );
        }
    }
    out
}
