use std::fmt::Write as _;

use crate::harness::ska::MitmCell;
use crate::harness::sweep::{CrbRow, CurvePoint};

pub const CURVE_HEADER: &str = "scenario,snr_db,alpha_deg,k,n,L,trials,empirical,analytic,std_error";
pub const MAP_HEADER: &str = "x,y,success_rate,in_region";

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p.scenario.name(),
            fmt_g(p.snr_db),
            fmt_g(p.alpha),
            fmt_g(p.k),
            p.n,
            p.pilots,
            p.trials,
            fmt_g(p.empirical_rate),
            fmt_g(p.analytic_rate),
            fmt_g(p.std_error)
        );
    }
    s
}

/// CRB rows in the curve layout: `empirical` is the estimator variance,
/// `analytic` the bound and `std_error` the variance's standard error. The
/// angle is carried in the scenario name and `alpha_deg` is left empty.
pub fn crb_csv(rows: &[CrbRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "crb-theta{},{},,{},{},{},{},{},{},{}",
            fmt_g(r.theta_deg),
            fmt_g(r.snr_db),
            fmt_g(r.k),
            r.n,
            r.pilots,
            r.trials,
            fmt_g(r.variance),
            fmt_g(r.crb),
            fmt_g(r.variance_se)
        );
    }
    s
}

pub fn map_csv(cells: &[MitmCell]) -> String {
    let mut s = String::from(MAP_HEADER);
    s.push('\n');
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_g(c.x),
            fmt_g(c.y),
            fmt_g(c.success_rate),
            u8::from(c.in_region)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (25.0, "25"),
            (-35.0, "-35"),
            (37.5, "37.5"),
            (0.123456789, "0.123457"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234567, "1.23457e-05"),
            (999999.5, "1e+06"),
            (0.99999951, "1"),
            (1e-12, "1e-12"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }
}
