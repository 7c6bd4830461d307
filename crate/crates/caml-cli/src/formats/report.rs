//! Evaluation report serialization (canonical JSON) and the human-readable
//! table printed to standard output.

use caml_core::metrics::EvalReport;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct PrfDto {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct LabelDto {
    pub code: String,
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct ReportDto {
    pub documents: usize,
    pub labels: usize,
    pub threshold: f64,
    pub micro: PrfDto,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// harmonic mean of the label-averaged precision and recall
    pub macro_f1: f64,
    /// mean of per-label F1, reported alongside for transparency
    pub macro_mean_label_f1: f64,
    pub auc_micro: Option<f64>,
    pub auc_macro: Option<f64>,
    pub precision_at: Vec<PrecisionAtDto>,
    pub diagnosis_micro: Option<PrfDto>,
    pub procedure_micro: Option<PrfDto>,
    pub per_label: Vec<LabelDto>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct PrecisionAtDto {
    pub n: usize,
    pub value: f64,
}

impl From<&EvalReport> for ReportDto {
    fn from(r: &EvalReport) -> Self {
        let prf = |p: &caml_core::metrics::Prf| PrfDto {
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
        };
        ReportDto {
            documents: r.n_documents,
            labels: r.n_labels,
            threshold: r.threshold,
            micro: prf(&r.micro),
            macro_precision: r.macro_.precision,
            macro_recall: r.macro_.recall,
            macro_f1: r.macro_.f1,
            macro_mean_label_f1: r.macro_.mean_label_f1,
            auc_micro: r.auc_micro,
            auc_macro: r.auc_macro,
            precision_at: r
                .precision_at
                .iter()
                .map(|&(n, value)| PrecisionAtDto { n, value })
                .collect(),
            diagnosis_micro: r.diagnosis_micro.as_ref().map(prf),
            procedure_micro: r.procedure_micro.as_ref().map(prf),
            per_label: r
                .per_label
                .iter()
                .map(|l| LabelDto {
                    code: l.code.clone(),
                    support: l.support,
                    tp: l.counts.tp,
                    fp: l.counts.fp,
                    fn_: l.counts.fn_,
                    precision: l.prf.precision,
                    recall: l.prf.recall,
                    f1: l.prf.f1,
                    auc: l.auc,
                })
                .collect(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "   --".to_string(), |x| format!("{x:.4}"))
}

/// Renders the summary table.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "documents: {}   labels: {}   threshold: {}\n\n",
        report.n_documents, report.n_labels, report.threshold
    ));
    out.push_str("            AUC                F1\n");
    out.push_str("          macro   micro      macro   micro");
    if report.diagnosis_micro.is_some() || report.procedure_micro.is_some() {
        out.push_str("    diag    proc");
    }
    for (n, _) in &report.precision_at {
        out.push_str(&format!("    P@{n}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "          {}  {}     {:.4}  {:.4}",
        opt(report.auc_macro),
        opt(report.auc_micro),
        report.macro_.f1,
        report.micro.f1
    ));
    if report.diagnosis_micro.is_some() || report.procedure_micro.is_some() {
        out.push_str(&format!(
            "  {}  {}",
            opt(report.diagnosis_micro.as_ref().map(|p| p.f1)),
            opt(report.procedure_micro.as_ref().map(|p| p.f1)),
        ));
    }
    for (_, value) in &report.precision_at {
        out.push_str(&format!("  {value:.4}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "\nmicro precision {:.4}  micro recall {:.4}  macro precision {:.4}  macro recall {:.4}\n",
        report.micro.precision, report.micro.recall, report.macro_.precision, report.macro_.recall
    ));
    out.push_str(&format!(
        "macro F1 as mean of per-label F1: {:.4}\n",
        report.macro_.mean_label_f1
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use caml_core::metrics::{evaluate, PredictionMatrix};
    use caml_core::numerics::Matrix;

    fn sample_report() -> EvalReport {
        let scores = Matrix::from_rows(&[&[0.9, 0.2], &[0.4, 0.8]]);
        let truth = vec![true, false, false, true];
        let pm = PredictionMatrix::new(scores, truth).unwrap();
        let codes = ["401.9".to_string(), "38.93".to_string()];
        let kinds: Vec<_> = codes
            .iter()
            .map(|c| caml_core::corpus::LabelKind::infer(c))
            .collect();
        evaluate(&pm, &codes, &kinds, &[1, 2])
    }

    #[test]
    fn report_json_round_trips() {
        let dto = ReportDto::from(&sample_report());
        let json = serde_json::to_string_pretty(&dto).unwrap();
        let back: ReportDto = serde_json::from_str(&json).unwrap();
        assert_eq!(dto, back);
    }

    #[test]
    fn table_renders_headline_metrics_and_kind_columns() {
        let report = sample_report();
        assert!(report.diagnosis_micro.is_some());
        assert!(report.procedure_micro.is_some());
        let table = render_table(&report);
        assert!(table.contains("P@1"));
        assert!(table.contains("1.0000"));
        assert!(table.contains("diag") && table.contains("proc"));
    }
}
