//! The model line format: parse, inspect, evaluate and print back.

use exempt_audit::scm::{cci, enumerate_joint, sample, Expr};
use exempt_audit::Scm;

const MODEL: &str = "
protected Z bernoulli 0.5
latent U1 bernoulli 0.25
latent U2 gaussian 0 1 bins=4
feature X1 critical = Z xor U1
feature X2 general = ind(U2 + Z >= 0.5)
output Yhat = X1 * X2
label Y = X1
";

fn main() -> exempt_audit::Result<()> {
    let scm = Scm::parse(MODEL)?;
    println!("critical {:?}, general {:?}, latents {:?}", scm.critical(), scm.general(), scm.latent_names());
    print!("{}", scm.to_text());

    let e = Expr::parse("ind(a + b >= 1) - a * b")?;
    let v = e.eval(&|n| match n {
        "a" => Some(1.0),
        "b" => Some(1.0),
        _ => None,
    });
    println!("\n{e} at a=b=1: {v:?}");

    let j = enumerate_joint(&scm)?;
    println!("I(Z;Yhat) = {:.4}, counterfactual influence = {:.4}", j.mutual_information(&["Z"], &["Yhat"])?, cci(&scm)?);

    let rows = sample(&scm, 5, 7)?;
    let mut out = Vec::new();
    rows.write_csv(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    match Scm::parse("protected Z bernoulli 0.5\nfeature X critical = Z +\n") {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
