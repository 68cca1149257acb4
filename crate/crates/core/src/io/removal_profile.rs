use std::path::Path;

use crate::error::{Error, Result};
use crate::removal::ProbabilityTable;

/// Parses `azimuth_deg,probability` rows. Azimuths are offsets in degrees from
/// the start of the attacked sector. An optional header row and `#` comments
/// are skipped.
pub fn parse_removal_profile(text: &str) -> Result<ProbabilityTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(format!("removal profile: {e}")))?;
        if rec.len() != 2 {
            return Err(Error::format(format!(
                "removal profile row {}: expected 2 columns",
                i + 1
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(az), Ok(p)) => rows.push((az, p)),
            _ if i == 0 && rows.is_empty() => continue,
            _ => {
                return Err(Error::format(format!(
                    "removal profile row {}: non-numeric value",
                    i + 1
                )))
            }
        }
    }
    ProbabilityTable::new(rows)
}

pub fn render_removal_profile(table: &ProbabilityTable) -> String {
    let mut s = String::from("azimuth_deg,probability\n");
    for (az, p) in table.rows() {
        s.push_str(&format!("{az},{p}\n"));
    }
    s
}

pub fn read_removal_profile(path: &Path) -> Result<ProbabilityTable> {
    parse_removal_profile(&std::fs::read_to_string(path)?)
}
