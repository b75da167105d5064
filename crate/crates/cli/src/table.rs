//! Minimal aligned-table rendering for terminal reports.

pub fn print(headers: &[&str], rows: &[Vec<String>]) {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(&format!("{cell:<width$}", width = widths[i]));
        }
        println!("{}", s.trim_end());
    };
    line(headers);
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&dashes.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for row in rows {
        line(&row.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    }
}
