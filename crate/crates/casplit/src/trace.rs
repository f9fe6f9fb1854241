//! Per-slot trace files.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `t` | slot index |
//! | `distance_m` | UE distance to the primary gNB |
//! | `b` | buffer difference B(t) seen by the splitter |
//! | `a_p`, `a_s` | routing bits (0/1) |
//! | `cap_pcc`, `cap_scc1`, … | MAC capacity per carrier |
//! | `occ_pcc`, `occ_scc1`, … | RLC occupancy per carrier after service |
//! | `delivered` | packets the UE received in the slot |
//! | `k_p`, `k_i`, `k_d`, `g`, `k` | controller internals (empty for other policies) |
//! | `dynamic` | 1 when the controller re-planned this slot |

use std::io::Write;

use casplit_core::SlotRecord;

pub fn carrier_label(c: usize) -> String {
    if c == 0 {
        "pcc".to_string()
    } else {
        format!("scc{c}")
    }
}

pub fn trace_header(n_carriers: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "distance_m", "b", "a_p", "a_s"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..n_carriers).map(|c| format!("cap_{}", carrier_label(c))));
    h.extend((0..n_carriers).map(|c| format!("occ_{}", carrier_label(c))));
    h.extend(
        ["delivered", "k_p", "k_i", "k_d", "g", "k", "dynamic"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn bit(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn write_trace<W: Write>(out: W, n_carriers: usize, records: &[SlotRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(n_carriers))?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            r.distance_m.to_string(),
            r.b.to_string(),
            bit(r.a_p),
            bit(r.a_s),
        ];
        row.extend(r.capacity.iter().map(u32::to_string));
        row.extend(r.occupancy.iter().map(usize::to_string));
        row.push(r.delivered.to_string());
        row.extend([opt(r.k_p), opt(r.k_i), opt(r.k_d), opt(r.g), opt(r.k)]);
        row.push(bit(r.dynamic));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
