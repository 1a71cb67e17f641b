//! Partial information decomposition of a three-bit message.
//!
//! Z = (Z1, Z2, Z3) are fair bits, N is an independent fair bit,
//! A = (Z1, Z2, Z3 xor N) and B = (Z2, N).

use exempt_audit::{pid_decompose, JointTable, Variable};

fn main() -> exempt_audit::Result<()> {
    let names = ["Z1", "Z2", "Z3", "A1", "A2", "A3", "B1", "B2"];
    let vars = names.iter().map(|n| Variable::new(*n, 2)).collect();
    let atoms = (0..16usize).map(|m| {
        let (z1, z2, z3, n) = (m & 1, (m >> 1) & 1, (m >> 2) & 1, (m >> 3) & 1);
        (vec![z1, z2, z3, z1, z2, z3 ^ n, z2, n], 1.0 / 16.0)
    });
    let joint = JointTable::from_atoms(vars, atoms)?;

    let p = pid_decompose(&joint, &["Z1", "Z2", "Z3"], &["A1", "A2", "A3"], &["B1", "B2"])?;
    println!("I(Z;(A,B))  = {:.4} bits", p.total);
    println!("Uni(Z:A|B)  = {:.4}", p.uni_a_given_b);
    println!("Uni(Z:B|A)  = {:.4}", p.uni_b_given_a);
    println!("Red(Z:A,B)  = {:.4}", p.redundancy);
    println!("Syn(Z:A,B)  = {:.4}", p.synergy);
    println!("solver: {} iterations, gap {:.1e}", p.solver_iterations, p.objective_gap);
    Ok(())
}
