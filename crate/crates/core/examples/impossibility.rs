//! Two models with the same observable joint but different non-exempt
//! disparity, so no observational measure can tell them apart.

use exempt_audit::measures::audit_scm;
use exempt_audit::scm::{enumerate_joint_over, scenario};
use exempt_audit::Tolerances;

fn main() -> exempt_audit::Result<()> {
    let a = scenario("impossibility-A")?;
    let b = scenario("impossibility-B")?;
    let observed = ["Z", "Xc", "Xg", "Yhat"];
    let ja = enumerate_joint_over(&a, &observed)?;
    let jb = enumerate_joint_over(&b, &observed)?;
    println!("total variation between observable joints: {:.2e}", ja.total_variation(&jb)?);

    let tol = Tolerances::default();
    for (name, scm) in [("A", &a), ("B", &b)] {
        let r = audit_scm(scm, &[], &tol)?;
        println!(
            "model {name}: total {:.4}  non-exempt {:.4}  observational uni {:.4} cmi {:.4}",
            r.total, r.m_ne_star, r.observational.uni, r.observational.cmi
        );
    }
    Ok(())
}
