//! CSV emission and candidate ingestion.

use std::fmt::Write as _;

use nonholo::multitime::Sheet;
use nonholo::Trajectory;

/// C `printf("%.17g")`: shortest of fixed and scientific notation at 17
/// significant digits, trailing zeros removed.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..17).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let prec = (16 - exp) as usize;
        strip_zeros(&format!("{v:.prec$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|v| format_g17(*v)).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `t, states, controls, p_<state>, H, Q_<control>`; costate, Hamiltonian
/// and switching columns only when present.
pub fn trajectory_csv(tr: &Trajectory, state: &[String], controls: &[String], costate: &[String]) -> String {
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(state.iter().cloned());
    header.extend(controls.iter().cloned());
    let with_p = !tr.p.is_empty();
    if with_p {
        header.extend(costate.iter().map(|s| format!("p_{s}")));
    }
    let with_h = tr.h.len() == tr.t.len() && !tr.h.is_empty();
    if with_h {
        header.push("H".into());
    }
    if let Some(q) = &tr.q {
        let width = q.first().map_or(0, Vec::len);
        header.extend(controls.iter().take(width).map(|c| format!("Q_{c}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..tr.t.len() {
        let mut row = vec![tr.t[k]];
        row.extend(&tr.x[k]);
        row.extend(tr.u.get(k).map(Vec::as_slice).unwrap_or(&[]));
        if with_p {
            row.extend(&tr.p[k]);
        }
        if with_h {
            row.push(tr.h[k]);
        }
        if let Some(q) = &tr.q {
            row.extend(&q[k]);
        }
        push_row(&mut out, &row);
    }
    out
}

/// `t1, t2, states, controls, costate, Q_<control>` per node.
pub fn sheet_csv(sheet: &Sheet<f64>, state: &[String], controls: &[String], costate: &[String]) -> String {
    let mut header: Vec<String> = vec!["t1".into(), "t2".into()];
    header.extend(state.iter().cloned());
    let with_u = sheet.u.len() == sheet.x.len() && !sheet.u.is_empty();
    if with_u {
        header.extend(controls.iter().take(sheet.u[0].len()).cloned());
    }
    if sheet.p.is_some() {
        header.extend(costate.iter().cloned());
    }
    if sheet.q.is_some() {
        header.extend(controls.iter().map(|c| format!("Q_{c}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    let n2 = sheet.t2.len();
    for (node, x) in sheet.x.iter().enumerate() {
        let mut row = vec![sheet.t1[node / n2], sheet.t2[node % n2]];
        row.extend(x);
        if with_u {
            row.extend(&sheet.u[node]);
        }
        if let Some(p) = &sheet.p {
            row.extend(&p[node]);
        }
        if let Some(q) = &sheet.q {
            row.extend(&q[node]);
        }
        push_row(&mut out, &row);
    }
    out
}

/// Header and numeric rows of a comma separated table.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table, String> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or("empty candidate file")?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            if row.len() != header.len() {
                return Err(format!("line {}: {} cells for {} columns", i + 1, row.len(), header.len()));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, String> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("candidate has no column `{name}`"))
    }

    pub fn select(&self, names: &[String]) -> Result<Vec<Vec<f64>>, String> {
        let idx = names.iter().map(|n| self.column(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect())
    }
}

pub fn write_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    let _ = writeln!(s);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1e16), "10000000000000000");
        assert_eq!(format_g17(1e17), "1e+17");
    }

    #[test]
    fn g17_round_trips() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, -7.25e-300, 6.02e23, std::f64::consts::FRAC_1_SQRT_2] {
            assert_eq!(format_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_rejects_ragged_rows() {
        assert!(Table::parse("a,b\n1,2\n3\n").is_err());
        let t = Table::parse("a,b\n1,2\n").unwrap();
        assert_eq!(t.select(&["b".into()]).unwrap(), vec![vec![2.0]]);
    }
}
