use super::{FormatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub timestep: i64,
    pub values: Vec<f64>,
}

/// Data line that could not be turned into a row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

/// Energy columns of a NAMD log, named by its last `ETITLE:` line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTable {
    pub column_names: Vec<String>,
    pub rows: Vec<EnergyRow>,
    pub row_errors: Vec<RowError>,
    pub warnings: Vec<String>,
}

impl EnergyTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }
}

/// Extracts `ETITLE:`/`ENERGY:` lines. Malformed data lines are collected in
/// `row_errors` and skipped.
pub fn parse_namd_log(text: &str) -> Result<EnergyTable> {
    let title = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix("ETITLE:"))
        .last()
        .ok_or_else(|| FormatError::Parse {
            line: 0,
            message: "no ETITLE: line found; not a NAMD log".into(),
        })?;
    let column_names: Vec<String> = title.split_whitespace().map(str::to_string).collect();
    let ts_col = column_names
        .iter()
        .position(|c| c == "TS")
        .unwrap_or(0);

    let mut table = EnergyTable {
        column_names,
        ..Default::default()
    };
    let mut last_ts: Option<i64> = None;
    for (idx, line) in text.lines().enumerate() {
        let Some(data) = line.trim_start().strip_prefix("ENERGY:") else {
            continue;
        };
        let lineno = idx + 1;
        let fields: Vec<&str> = data.split_whitespace().collect();
        if fields.len() != table.column_names.len() {
            table.row_errors.push(RowError {
                line: lineno,
                message: format!(
                    "{} fields, expected {}",
                    fields.len(),
                    table.column_names.len()
                ),
            });
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(values) = values else {
            let bad = fields.iter().find(|f| f.parse::<f64>().is_err()).unwrap();
            table.row_errors.push(RowError {
                line: lineno,
                message: format!("non-numeric field '{bad}'"),
            });
            continue;
        };
        let Ok(timestep) = fields[ts_col].parse::<i64>() else {
            table.row_errors.push(RowError {
                line: lineno,
                message: format!("timestep '{}' is not an integer", fields[ts_col]),
            });
            continue;
        };
        if last_ts.is_some_and(|prev| timestep < prev) {
            table.row_errors.push(RowError {
                line: lineno,
                message: format!("timestep {timestep} decreases"),
            });
            continue;
        }
        last_ts = Some(timestep);
        table.rows.push(EnergyRow { timestep, values });
    }
    if table.rows.is_empty() {
        table.warnings.push("log contains no ENERGY: rows".into());
    }
    Ok(table)
}
