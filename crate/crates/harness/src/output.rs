//! CSV emission. Rates are printed with 6 significant digits.

use std::io::Write;

use crate::ber::BerRow;
use crate::swarm::RendezvousRow;

pub const BER_HEADER: [&str; 6] = ["method", "snr_db", "seed", "symbols", "errors", "ber"];

pub const RENDEZVOUS_HEADER: [&str; 6] = [
    "method",
    "sensing_range_m",
    "seed",
    "episodes_to_convergence",
    "converged",
    "final_throughput",
];

/// `x` in scientific notation with 6 significant digits, e.g. `2.32687e-2`.
pub fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_ber_csv<W: Write>(rows: &[BerRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BER_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.snr_db.to_string(),
            r.seed.to_string(),
            opt(r.symbols),
            opt(r.errors),
            sig6(r.ber),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rendezvous_csv<W: Write>(rows: &[RendezvousRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RENDEZVOUS_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.sensing_range_m.to_string(),
            r.seed.to_string(),
            r.episodes_to_convergence.to_string(),
            r.converged.to_string(),
            sig6(r.final_throughput),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn ber_csv_string(rows: &[BerRow]) -> String {
    let mut buf = Vec::new();
    write_ber_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

pub fn rendezvous_csv_string(rows: &[RendezvousRow]) -> String {
    let mut buf = Vec::new();
    write_rendezvous_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}
