//! Audit a model given in the line format: the four-way split of total
//! disparity and the bipartition search behind the non-exempt part.

use exempt_audit::measures::audit_scm;
use exempt_audit::{Scm, Tolerances};

const MODEL: &str = "
# Biased general feature; the output adds everything up
protected Z bernoulli 0.5
latent U1 bernoulli 0.5
latent U2 bernoulli 0.5
feature Xc critical = U1
feature Xg general = Z + U2
output Yhat = Xc + Xg
";

fn main() -> exempt_audit::Result<()> {
    let scm = Scm::parse(MODEL)?;
    let r = audit_scm(&scm, &[], &Tolerances::default())?;

    println!("total    {:.6}", r.total);
    println!("  visible {:.6}   masked {:.6}", r.visible, r.masked);
    println!("  exempt  {:.6}   non-exempt {:.6}", r.m_e, r.m_ne_star);
    println!("            exempt    non-exempt");
    println!("  visible   {:.6}  {:.6}", r.m_v_e, r.m_v_ne);
    println!("  masked    {:.6}  {:.6}", r.m_m_e, r.m_m_ne);

    println!("\nbipartitions (U_a | U_b):");
    for b in &r.bipartitions {
        println!("  {:?} | {:?}  {:.6}", b.bipartition.u_a, b.bipartition.u_b, b.value);
    }

    // Moving the general feature into the critical set exempts everything.
    let all = scm.retagged(&["Xc", "Xg"])?;
    let r = audit_scm(&all, &[], &Tolerances::default())?;
    println!("\nwith Xg critical: non-exempt {:.6}", r.m_ne_star);
    Ok(())
}
