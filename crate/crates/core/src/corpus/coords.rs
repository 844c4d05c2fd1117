use crate::distances::GeoTable;
use crate::error::{Error, Result};

/// Reads `lang,lat,lon` rows in decimal degrees. A header row whose
/// second field is not numeric is skipped; `#` lines are comments.
pub fn parse_coordinates(text: &str) -> Result<GeoTable> {
    let mut table = GeoTable::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let lat = fields[1].parse::<f64>();
        if lat.is_err() && table.is_empty() && lineno == first_data_line(text) {
            continue;
        }
        let lat = lat.map_err(|_| Error::parse(lineno, format!("invalid latitude '{}'", fields[1])))?;
        let lon = fields[2]
            .parse::<f64>()
            .map_err(|_| Error::parse(lineno, format!("invalid longitude '{}'", fields[2])))?;
        if fields[0].is_empty() {
            return Err(Error::parse(lineno, "empty language ID"));
        }
        if table.get(fields[0]).is_some() {
            return Err(Error::Validation(format!(
                "line {lineno}: duplicate coordinates for '{}'",
                fields[0]
            )));
        }
        table
            .insert(fields[0], lat, lon)
            .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
    }
    Ok(table)
}

fn first_data_line(text: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map_or(0, |p| p + 1)
}

pub fn write_coordinates(table: &GeoTable) -> String {
    let mut out = String::from("lang,lat,lon\n");
    for (lang, (lat, lon)) in table.iter() {
        out.push_str(&format!("{lang},{lat},{lon}\n"));
    }
    out
}
