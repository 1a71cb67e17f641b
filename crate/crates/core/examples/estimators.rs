//! Correlation-based surrogates used as training penalties, on samples.

use exempt_audit::estimators::{cmi_binned, mi_gauss, uni_gauss, BinAssignment, BinningSpec};
use exempt_audit::scm::{sample, scenario};

fn main() -> exempt_audit::Result<()> {
    for name in ["canonical-1", "canonical-2", "canonical-3"] {
        let d = sample(&scenario(name)?, 10_000, 3)?;
        let (z, y, xc) = (d.column("Z")?, d.column("Yhat")?, d.column("Xc")?);
        let mi = mi_gauss(&z, &y)?.value;
        let uni = uni_gauss(&z, &y, &[&xc])?.value;
        let cells = BinAssignment::fit(&[&xc], &BinningSpec::quantile(&["Xc"], 8))?;
        let cmi = cmi_binned(&z, &y, &cells)?;
        println!("{name:12} mi {mi:.4}  uni {uni:.4}  cmi {:.4}", cmi.value);
        if let Some(w) = &cmi.warning {
            println!("             {w}");
        }
    }
    Ok(())
}
