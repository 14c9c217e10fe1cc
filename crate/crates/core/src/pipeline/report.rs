use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Finding, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Text,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            _ => Err(Error::InvalidArgument(format!("unknown report format `{s}`"))),
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ReportFormat::Csv => "text/csv; charset=utf-8",
            ReportFormat::Json => "application/json",
            ReportFormat::Text => "text/plain; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Text => "txt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub finding_id: String,
    pub paragraph_id: String,
    pub category: String,
    pub probability: f64,
    pub status: Status,
    pub comment: Option<String>,
    pub model_version: u32,
    pub text: String,
}

impl From<&Finding> for ReportRow {
    fn from(f: &Finding) -> Self {
        ReportRow {
            finding_id: f.finding_id.clone(),
            paragraph_id: f.paragraph_id.clone(),
            category: f.category.clone(),
            probability: f.probability,
            status: f.status,
            comment: f.comment.clone(),
            model_version: f.model_version,
            text: f.text.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub doc_id: String,
    pub title: String,
    pub rows: Vec<ReportRow>,
}

const DOC_HEADER: [&str; 3] = ["doc_id", "title", "findings"];
const ROW_HEADER: [&str; 8] = [
    "finding_id",
    "paragraph_id",
    "category",
    "probability",
    "status",
    "comment",
    "model_version",
    "text",
];

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pending => "pending",
        Status::Accepted => "accepted",
        Status::Rejected => "rejected",
    }
}

fn parse_status(s: &str) -> Result<Status> {
    match s {
        "pending" => Ok(Status::Pending),
        "accepted" => Ok(Status::Accepted),
        "rejected" => Ok(Status::Rejected),
        _ => Err(Error::format("report", format!("unknown status `{s}`"))),
    }
}

impl Report {
    pub fn render(&self, format: ReportFormat) -> Result<Vec<u8>> {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => {
                let mut out = serde_json::to_vec_pretty(self)?;
                out.push(b'\n');
                Ok(out)
            }
            ReportFormat::Text => Ok(self.to_text().into_bytes()),
        }
    }

    /// Parses a machine-readable rendering back into a report.
    pub fn parse(bytes: &[u8], format: ReportFormat) -> Result<Self> {
        match format {
            ReportFormat::Csv => Self::from_csv(bytes),
            ReportFormat::Json => Ok(serde_json::from_slice(bytes)?),
            ReportFormat::Text => Err(Error::InvalidArgument(
                "the text rendering is for reading only".into(),
            )),
        }
    }

    /// Two blocks: a document header line with its values, then one row
    /// per finding under its own header.
    fn to_csv(&self) -> Result<Vec<u8>> {
        let csv_err = |e: csv::Error| Error::format("report", e.to_string());
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(DOC_HEADER).map_err(csv_err)?;
        w.write_record([self.doc_id.as_str(), self.title.as_str(), &self.rows.len().to_string()])
            .map_err(csv_err)?;
        w.write_record(ROW_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.finding_id.as_str(),
                r.paragraph_id.as_str(),
                r.category.as_str(),
                &r.probability.to_string(),
                status_name(r.status),
                r.comment.as_deref().unwrap_or(""),
                &r.model_version.to_string(),
                r.text.as_str(),
            ])
            .map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::format("report", e.to_string()))
    }

    fn from_csv(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: String| Error::format("report", reason);
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(bytes);
        let records = r
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        if records.len() < 3
            || records[0].iter().ne(DOC_HEADER)
            || records[2].iter().ne(ROW_HEADER)
            || records[1].len() != 3
        {
            return Err(bad("missing report headers".into()));
        }
        let count: usize = records[1][2].parse().map_err(|_| bad("bad finding count".into()))?;
        let rows = records[3..]
            .iter()
            .map(|rec| {
                if rec.len() != ROW_HEADER.len() {
                    return Err(bad(format!("row has {} fields", rec.len())));
                }
                Ok(ReportRow {
                    finding_id: rec[0].to_string(),
                    paragraph_id: rec[1].to_string(),
                    category: rec[2].to_string(),
                    probability: rec[3].parse().map_err(|_| bad(format!("bad probability `{}`", &rec[3])))?,
                    status: parse_status(&rec[4])?,
                    comment: (!rec[5].is_empty()).then(|| rec[5].to_string()),
                    model_version: rec[6].parse().map_err(|_| bad(format!("bad version `{}`", &rec[6])))?,
                    text: rec[7].to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != count {
            return Err(bad(format!("header announces {count} findings, found {}", rows.len())));
        }
        Ok(Report {
            doc_id: records[1][0].to_string(),
            title: records[1][1].to_string(),
            rows,
        })
    }

    fn to_text(&self) -> String {
        let mut out = format!("Risk report for {} ({})\n", self.title, self.doc_id);
        if self.rows.is_empty() {
            out.push_str("No risk paragraphs found.\n");
            return out;
        }
        let _ = writeln!(out, "{} finding(s)", self.rows.len());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\n[{}] {} p={:.4} {} (model v{})",
                r.category,
                r.paragraph_id,
                r.probability,
                status_name(r.status),
                r.model_version
            );
            if let Some(c) = &r.comment {
                let _ = writeln!(out, "  comment: {c}");
            }
            let _ = writeln!(out, "  {}", r.text);
        }
        out
    }
}
