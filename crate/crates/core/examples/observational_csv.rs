//! Observational audit of a table: sample a model to CSV, read it back,
//! discretize and compute the measures that need no latents.

use exempt_audit::ingest::{discretize, read_csv};
use exempt_audit::measures::observational;
use exempt_audit::scm::{sample, scenario};
use exempt_audit::Tolerances;

fn main() -> exempt_audit::Result<()> {
    let dir = std::env::temp_dir().join("exempt-audit-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("canonical-4.csv");
    sample(&scenario("canonical-4")?, 20_000, 1)?.save_csv(&path)?;

    let data = read_csv(&path)?;
    let (joint, binning) = discretize(&data, &["Z", "Xc", "Yhat"], 8)?;
    for b in &binning {
        let kind = if b.categorical { "categorical" } else { "binned" };
        println!("{:5} {kind:11} masses {:.3?}", b.name, b.masses);
    }

    let (m, pid) = observational(&joint, "Z", &["Xc"], &[], "Yhat", &Tolerances::default())?;
    println!("I(Z;Yhat|Xc)   = {:.4}", m.cmi);
    println!("Uni(Z:Yhat|Xc) = {:.4}", m.uni);
    println!("redundancy {:.4}, synergy {:.4}", pid.redundancy, pid.synergy);
    Ok(())
}
