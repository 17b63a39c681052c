// Expanded `a² − 2ab + b²` versus direct `(a − b)²` for nearly equal
// numbers: the expanded form stalls near 1e-8 once the gap drops below it.

use rbm_core::estimators::float_demo;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n_values: Vec<u32> = (1..=22).collect();
    let rows = float_demo(&n_values, 1000, 0)?;
    println!("{:>3} {:>12} {:>12} {:>12}", "N", "exact", "direct", "expanded");
    for r in &rows {
        println!("{:>3} {:>12.3e} {:>12.3e} {:>12.3e}", r.n, r.max_exact, r.max_stable, r.max_expanded);
    }
    let last = rows.last().ok_or("no rows")?;
    assert!(last.max_expanded > 1e3 * last.max_stable);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
