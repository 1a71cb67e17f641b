//! Score the six canonical hiring examples with every candidate measure.

use exempt_audit::canonical::{canonical_table, render_table};
use exempt_audit::Tolerances;

fn main() -> exempt_audit::Result<()> {
    let rows = canonical_table(&Tolerances::default())?;
    print!("{}", render_table(&rows));
    let ok = rows.iter().filter(|r| r.matches()).count();
    println!("\n{ok} of {} rows match the expected verdicts", rows.len());
    Ok(())
}
