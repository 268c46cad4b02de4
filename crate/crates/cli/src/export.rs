//! CSV export of the scalar columns of a report, one row per result
//! (per curve sample for integrability, per radius for regularity).

use crate::report::{Num, PointResult, Report, ResultBody};
use crate::spec::Command;

/// Shortest round-tripping form, in exponent notation for very small or large values.
fn float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn num(n: Num) -> String {
    float(n.0)
}

fn coords(xi: &[f64]) -> String {
    xi.iter().map(|v| float(*v)).collect::<Vec<_>>().join(";")
}

fn header(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Fisher => &["index", "xi", "rank", "eigenvalues", "cutoff", "mass_residual", "error"],
        Command::Scan => &["index", "xi", "rank", "lambda_max", "lambda_min", "mass_residual", "error"],
        Command::Crbound | Command::Verify => &[
            "index",
            "xi",
            "estimator",
            "min_gap_eig",
            "tol",
            "psd_certified",
            "fisher_rank",
            "msevb_residual",
            "mc_min_gap_eig",
            "mc_tol",
            "mc_psd_certified",
            "error",
        ],
        Command::Simplex => &["index", "masses", "pairing", "gradient", "error"],
        Command::Integrability => &["k", "t", "xi", "norm", "norm_pow", "error"],
        Command::Regularity => &["index", "center", "radius", "sup_norm", "cumulative_sup", "evaluated", "error"],
    }
}

fn rows(r: &PointResult) -> Vec<Vec<String>> {
    let err = r.error.as_ref().map(|e| e.message.clone()).unwrap_or_default();
    let (i, xi) = (r.index.to_string(), coords(&r.xi));
    let Some(body) = &r.result else {
        return vec![vec![i, xi, err]];
    };
    match body {
        ResultBody::Fisher(f) => {
            let eig = f.eigenvalues.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";");
            vec![vec![i, xi, f.rank.to_string(), eig, num(f.cutoff), num(f.mass_residual), err]]
        }
        ResultBody::Scan(s) => {
            let max = s.eigenvalues.first().map(|v| num(*v)).unwrap_or_default();
            let min = s.eigenvalues.last().map(|v| num(*v)).unwrap_or_default();
            vec![vec![i, xi, s.rank.to_string(), max, min, num(s.mass_residual), err]]
        }
        ResultBody::Gap(g) => {
            let mc = g.monte_carlo.as_ref();
            vec![vec![
                i,
                xi,
                r.estimator.clone().unwrap_or_default(),
                num(g.min_gap_eig),
                num(g.tol),
                g.psd_certified.to_string(),
                g.fisher_rank.to_string(),
                num(g.msevb_residual),
                mc.map(|m| num(m.min_gap_eig)).unwrap_or_default(),
                mc.map(|m| num(m.tol)).unwrap_or_default(),
                mc.map(|m| m.psd_certified.to_string()).unwrap_or_default(),
                err,
            ]]
        }
        ResultBody::Simplex(s) => {
            let grad = s.gradient.as_ref().map(|g| g.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")).unwrap_or_default();
            vec![vec![i, xi, s.pairing.map(num).unwrap_or_default(), grad, err]]
        }
        ResultBody::Integrability(it) => it
            .samples
            .iter()
            .map(|s| vec![float(it.k), float(s.t), coords(&s.xi), num(s.norm), num(s.norm_pow), err.clone()])
            .collect(),
        ResultBody::Regularity(reg) => reg
            .entries
            .iter()
            .map(|e| {
                vec![i.clone(), xi.clone(), float(e.radius), num(e.sup_norm), num(e.cumulative_sup), e.evaluated.to_string(), err.clone()]
            })
            .collect(),
    }
}

/// Writes the report's scalar sweep as CSV. Rows of failed results carry
/// only their identifying columns and the error message.
pub fn write_csv<W: std::io::Write>(report: &Report, out: W) -> csv::Result<()> {
    let head = header(report.spec.command);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(head)?;
    for r in &report.results {
        for mut row in rows(r) {
            if row.len() < head.len() {
                let err = row.pop().unwrap_or_default();
                row.resize(head.len() - 1, String::new());
                row.push(err);
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_compact_and_exact() {
        for v in [4e-8, 0.25, 1e300, -3.5e-12, 0.0, 123456.789] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(4e-8), "4e-8");
        assert_eq!(float(0.25), "0.25");
        assert_eq!(num(Num(f64::INFINITY)), "inf");
    }
}
