//! Table serialization. Every number goes through [`fmt_sig`] so repeated
//! runs produce identical bytes.

use std::fmt::Write as _;

use kerrcav::{Engine, SweepTable};

use crate::CliError;

/// Significant digits written for every value.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros dropped, `-0` written as `0`.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Rounds to what [`fmt_sig`] prints.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        fmt_sig(v).parse().expect("formatted float parses")
    } else {
        v
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Header: the swept variable, then each observable. Engine `both` appends
/// `oracle:` and `delta:` columns per observable and the amplitude delta; an
/// `error` column appears only when some row failed.
pub fn to_csv(table: &SweepTable) -> Result<String, CliError> {
    let both = table.engine == Engine::Both;
    let with_errors = table.failures() > 0;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());

    let mut header = vec![table.variable.column().to_string()];
    header.extend(table.observables.iter().map(|o| o.to_string()));
    if both {
        header.extend(table.observables.iter().map(|o| format!("oracle:{o}")));
        header.extend(table.observables.iter().map(|o| format!("delta:{o}")));
        header.push("amplitude_delta".into());
    }
    if with_errors {
        header.push("error".into());
    }
    w.write_record(&header).map_err(csv_err)?;

    let blank = vec![None; table.observables.len()];
    for row in &table.rows {
        let mut rec = vec![fmt_sig(row.x)];
        rec.extend(row.values.iter().map(|v| cell(*v)));
        if both {
            rec.extend(row.oracle.as_ref().unwrap_or(&blank).iter().map(|v| cell(*v)));
            rec.extend(row.deltas.as_ref().unwrap_or(&blank).iter().map(|v| cell(*v)));
            rec.push(cell(row.amplitude_delta));
        }
        if with_errors {
            rec.push(row.error.clone().unwrap_or_default());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

/// The full table, values rounded to [`SIG_DIGITS`].
pub fn to_json(table: &SweepTable) -> Result<String, CliError> {
    let mut t = table.clone();
    let round_all = |v: &mut Vec<Option<f64>>| v.iter_mut().flatten().for_each(|x| *x = round_sig(*x));
    for row in &mut t.rows {
        row.x = round_sig(row.x);
        round_all(&mut row.values);
        row.oracle.iter_mut().for_each(round_all);
        row.deltas.iter_mut().for_each(round_all);
        row.amplitude_delta = row.amplitude_delta.map(round_sig);
    }
    let mut s = serde_json::to_string_pretty(&t).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 6] = ["#1f4e9a", "#b8322a", "#2a8a4a", "#8a5a1f", "#6a3d9a", "#1f8a8a"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line plot with one polyline per observable. Missing values split a line.
pub fn to_svg(table: &SweepTable, title: &str) -> String {
    const W: f64 = 760.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 190.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);

    let xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
    let (mut x0, mut x1) = bounds(xs.iter().copied());
    let (mut y0, mut y1) = bounds(table.rows.iter().flat_map(|r| r.values.iter().flatten().copied()));
    widen(&mut x0, &mut x1);
    widen(&mut y0, &mut y1);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333" stroke-width="1"/>"##
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let xlabel = match table.variable {
        kerrcav::SweepVariable::Time => "t",
        kerrcav::SweepVariable::Lambda => "λ",
    };
    let ylabel = match table.observables.as_slice() {
        [one] => one.to_string(),
        _ => "value".to_string(),
    };
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, LEFT + pw / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&ylabel)
    );

    for (k, obs) in table.observables.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for row in &table.rows {
            match row.values[k] {
                Some(v) => segment.push(format!("{:.2},{:.2}", sx(row.x), sy(v))),
                None => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&obs.to_string())
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn widen(lo: &mut f64, hi: &mut f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (*lo, *hi) = (0.0, 1.0);
    } else if *hi - *lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        (*lo, *hi) = (*lo - pad, *hi + pad);
    }
}

fn tick(v: f64) -> String {
    let s = format!("{:.3e}", v);
    let parsed: f64 = s.parse().expect("tick parses");
    if parsed == 0.0 || (1e-3..1e4).contains(&parsed.abs()) {
        trim_zeros(format!("{parsed:.3}"))
    } else {
        s
    }
}

/// One line for the terminal.
pub fn summary(label: &str, table: &SweepTable, destination: &str) -> String {
    let mut s = format!(
        "{label}: {} points, {} observable{}, engine {}, n_max {}",
        table.rows.len(),
        table.observables.len(),
        if table.observables.len() == 1 { "" } else { "s" },
        engine_name(table.engine),
        table.n_max
    );
    if let Some(d) = table.max_amplitude_delta() {
        let _ = write!(s, ", max oracle amplitude delta {d:.3e}");
    }
    if let Some(d) = table.max_observable_delta() {
        let _ = write!(s, ", max observable delta {d:.3e}");
    }
    let failed = table.failures();
    if failed > 0 {
        let _ = write!(s, ", {failed} failed point{}", if failed == 1 { "" } else { "s" });
    }
    let _ = write!(s, " -> {destination}");
    s
}

pub fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::ClosedForm => "closed_form",
        Engine::OracleRwa => "oracle_rwa",
        Engine::OracleFull => "oracle_full",
        Engine::Both => "both",
    }
}
